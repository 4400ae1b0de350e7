#!/usr/bin/env python3
"""Independent reference values for the closed-form channel and scheduling formulas.

Written directly from the model equations with mpmath at 50 digits; the Rust
test suites freeze the printed numbers. Re-run with `python3 tools/formula_oracle.py`.
"""
from itertools import permutations

import mpmath as mp

mp.mp.dps = 50
C = mp.mpf("2.998e8")


def sigma_y(beta):
    beta = mp.mpf(beta)
    num = mp.gamma(1 + beta) * mp.sin(mp.pi * beta / 2)
    den = mp.gamma((1 + beta) / 2) * beta * mp.power(2, (beta - 1) / 2)
    return mp.power(num / den, 1 / beta)


def flight_duration(length):
    length = mp.mpf(length)
    k, rho = (mp.mpf("30.55"), mp.mpf("0.89")) if length < 500 else (mp.mpf("0.76"), mp.mpf("0.28"))
    return k * mp.power(length, 1 - rho)


def path_loss(d, f, n):
    return mp.power(4 * mp.pi * mp.mpf(d) * mp.mpf(f) / C, mp.mpf(n))


def los_probability(d, lam, el):
    return mp.exp(-2 * mp.mpf(lam) * mp.mpf(el) * mp.mpf(d) / mp.pi)


def beam_alignment_us(sector_b, beam_b, sector_u, beam_u, pilot_us):
    return mp.ceil(mp.mpf(sector_b) / beam_b) * mp.ceil(mp.mpf(sector_u) / beam_u) * pilot_us


def user_ideal_switch(r_ul, r_dl, dem_ul, dem_dl, n_s):
    r_ul, r_dl, dem_ul, dem_dl = map(mp.mpf, (r_ul, r_dl, dem_ul, dem_dl))
    return dem_ul * r_dl / (dem_ul * r_dl + dem_dl * r_ul) * n_s


def connection_quality(r_ul, r_dl, dem_ul, dem_dl):
    return min(mp.sqrt(mp.mpf(r_ul) / mp.mpf(dem_ul)), mp.sqrt(mp.mpf(r_dl) / mp.mpf(dem_dl)))


def dbm_to_w(dbm):
    return mp.power(10, (mp.mpf(dbm) - 30) / 10)


def pseudo_rate(p_tx_w, gain, w_hz, n0_dbm_hz, f_hz, n_los, n_nlos, d_now, d_next, p_los, overhead):
    w_hz = mp.mpf(w_hz)
    noise = w_hz * dbm_to_w(n0_dbm_hz)
    def r(loss):
        return mp.log(1 + p_tx_w * gain / loss / noise, 2)
    los = r(path_loss(d_now, f_hz, n_los)) + r(path_loss(d_next, f_hz, n_los))
    nlos = r(path_loss(d_now, f_hz, n_nlos)) + r(path_loss(d_next, f_hz, n_nlos))
    return (p_los * w_hz / 2 * los + (1 - p_los) * w_hz / 2 * nlos) * overhead


def show(name, value):
    print(f"{name} = {mp.nstr(value, 17)}")


if __name__ == "__main__":
    show("sigma_y(1.0)", sigma_y(1))
    show("sigma_y(0.5)", sigma_y("0.5"))
    show("sigma_y(1.5)", sigma_y("1.5"))
    show("sigma_y(1.999)", sigma_y("1.999"))
    show("flight_duration(100)", flight_duration(100))
    show("flight_duration(500)", flight_duration(500))
    show("flight_duration(1)", flight_duration(1))
    show("flight_duration(499.9)", flight_duration("499.9"))
    show("path_loss(100, 1.9e9, 2)", path_loss(100, "1.9e9", 2))
    show("path_loss(100, 1.9e9, 3.37)", path_loss(100, "1.9e9", "3.37"))
    show("path_loss(100, 28e9, 2.55)", path_loss(100, "28e9", "2.55"))
    show("los_probability(100, 4.4e-4, 55)", los_probability(100, "4.4e-4", 55))
    show("los_probability(250, 4.4e-4, 55)", los_probability(250, "4.4e-4", 55))
    show("beam_alignment(90,30,90,30,20)", beam_alignment_us(90, 30, 90, 30, 20))
    show("beam_alignment(90,10,90,10,20)", beam_alignment_us(90, 10, 90, 10, 20))
    show("overhead_factor(180us, 65535us)", 1 - mp.mpf(180) / 65535)
    show("user_ideal_switch(1,1,1,1,8)", user_ideal_switch(1, 1, 1, 1, 8))
    show("user_ideal_switch(1,1,15,1,8)", user_ideal_switch(1, 1, 15, 1, 8))
    show("user_ideal_switch(3e7,2e7,0.1e6,15e6,8)", user_ideal_switch("3e7", "2e7", "1e5", "15e6", 8))
    show("connection_quality(4,9,1,1)", connection_quality(4, 9, 1, 1))
    show("connection_quality(2e7,5e6,15e6,1e6)", connection_quality("2e7", "5e6", "15e6", "1e6"))
    noise = mp.mpf("1.8e6") * dbm_to_w(-174)
    show("noise_w(1.8MHz)", noise)
    gamma = 1 / mp.mpf("1e6") / noise
    show("sinr(P=1W,L=1e6)", gamma)
    show("rate(P=1W,L=1e6)", mp.mpf("1.8e6") * mp.log(1 + gamma, 2))
    # macro downlink, 43 dBm, d=200 m now / 210 m next, LTE exponents
    p_los = los_probability(200, "4.4e-4", 55)
    show("pseudo_dl_macro(200,210)", pseudo_rate(dbm_to_w(43), 1, "1.8e6", -174, "1.9e9", 2, "3.37", 200, 210, p_los, 1))
    show("pseudo_ul_macro(200,210)", pseudo_rate(dbm_to_w(30), 1, "1.8e6", -174, "1.9e9", 2, "3.37", 200, 210, p_los, 1))
    # single omni interferer term with |C_b| = 18, user at 300 m from the victim BS
    pl = los_probability(300, "4.4e-4", 55)
    term = dbm_to_w(30) * 1 * 1 * 360 / (360 * 18) * (pl / path_loss(300, "1.9e9", 2) + (1 - pl) / path_loss(300, "1.9e9", "3.37"))
    show("omni_interferer_term(300m)", term)
    # one-term downlink interference: uplink user 150 m from the victim user
    show("macro_cross_term(150m,los)", dbm_to_w(30) / path_loss(150, "1.9e9", 2))
    # assignment brute force for [[1,5],[2,1]]
    m = [[1, 5], [2, 1]]
    best = max(permutations(range(2)), key=lambda p: sum(m[i][p[i]] for i in range(2)))
    print("assignment([[1,5],[2,1]]) =", best, sum(m[i][best[i]] for i in range(2)))
