//! Truncated Lévy walk.
//!
//! Flight lengths and pause times are both drawn as `|y| / |z|^(1/β)` with
//! `y ~ N(0, σ_y²)`, `z ~ N(0, 1)`. Flights are clipped to the area diagonal,
//! pauses to one hour, and walkers bounce specularly off the area boundary.

use crate::geometry::{Rect, Vec2};
use crate::model::{ModelError, UserState};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Longest pause a walker may take, in seconds.
pub const MAX_PAUSE_S: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyParams {
    pub beta_f: f64,
    pub beta_r: f64,
    pub k_short: f64,
    pub rho_short: f64,
    pub k_long: f64,
    pub rho_long: f64,
    /// Flights at least this long use the long-range `(k, ρ)` pair.
    pub flight_cutoff_m: f64,
}

impl Default for LevyParams {
    fn default() -> Self {
        Self {
            beta_f: 0.5,
            beta_r: 0.5,
            k_short: 30.55,
            rho_short: 0.89,
            k_long: 0.76,
            rho_long: 0.28,
            flight_cutoff_m: 500.0,
        }
    }
}

impl LevyParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_beta("beta_f", self.beta_f)?;
        check_beta("beta_r", self.beta_r)?;
        if !(self.k_short > 0.0 && self.k_long > 0.0 && self.flight_cutoff_m > 0.0) {
            return Err(ModelError::InvalidConfig(
                "flight duration constants must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_beta(name: &'static str, beta: f64) -> Result<(), ModelError> {
    if beta > 0.0 && beta < 2.0 {
        Ok(())
    } else {
        Err(ModelError::Domain {
            name,
            value: beta,
            domain: "(0, 2)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MobilityPhase {
    /// `heading` is a unit vector.
    Flying {
        remaining_s: f64,
        heading: Vec2,
    },
    Pausing {
        remaining_s: f64,
    },
}

/// Scale of the numerator normal in the length draw (Mantegna's σ_y).
pub fn sigma_y(beta: f64) -> Result<f64, ModelError> {
    check_beta("beta", beta)?;
    let num = gamma(1.0 + beta) * (PI * beta / 2.0).sin();
    let den = gamma((1.0 + beta) / 2.0) * beta * 2f64.powf((beta - 1.0) / 2.0);
    Ok((num / den).powf(1.0 / beta))
}

/// `|y / |z|^(1/β)|` for already drawn normals.
pub fn length_from_normals(y: f64, z: f64, beta: f64) -> f64 {
    (y / z.abs().powf(1.0 / beta)).abs()
}

/// Draws one flight length (or pause time) clipped to `(0, cap]`.
///
/// Draws that come out as zero or non-finite (`z = 0` or `y = 0`) are
/// redrawn, so the result is always strictly positive.
pub fn sample_length<R: Rng + ?Sized>(rng: &mut R, beta: f64, cap: f64) -> Result<f64, ModelError> {
    let sigma = sigma_y(beta)?;
    loop {
        let y: f64 = StandardNormal.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        let l = length_from_normals(sigma * y, z, beta);
        if l > 0.0 && l.is_finite() {
            return Ok(l.min(cap));
        }
    }
}

/// Time to complete a flight of `length_m`, `k · l^(1-ρ)`.
pub fn flight_duration(length_m: f64, params: &LevyParams) -> Result<f64, ModelError> {
    if !(length_m > 0.0) || !length_m.is_finite() {
        return Err(ModelError::Domain {
            name: "flight length",
            value: length_m,
            domain: "(0, inf)",
        });
    }
    let (k, rho) = if length_m < params.flight_cutoff_m {
        (params.k_short, params.rho_short)
    } else {
        (params.k_long, params.rho_long)
    };
    Ok(k * length_m.powf(1.0 - rho))
}

/// Starts a new flight: uniform heading, truncated Lévy length, matching
/// duration. Returns the phase and the flight velocity.
pub fn new_flight<R: Rng + ?Sized>(
    rng: &mut R,
    params: &LevyParams,
    area: &Rect,
) -> Result<(MobilityPhase, Vec2), ModelError> {
    let length = sample_length(rng, params.beta_f, area.diagonal())?;
    let duration = flight_duration(length, params)?;
    let heading = Vec2::from_heading(rng.random_range(0.0..std::f64::consts::TAU));
    Ok((
        MobilityPhase::Flying {
            remaining_s: duration,
            heading,
        },
        heading * (length / duration),
    ))
}

/// Moves `p` along `dir` by `dist`, reflecting off the walls of `area`.
/// Returns the new position and the (possibly mirrored) direction.
pub fn reflect_move(p: Vec2, dir: Vec2, dist: f64, area: &Rect) -> (Vec2, Vec2) {
    let (x, fx) = fold(p.x + dir.x * dist, area.min.x, area.max.x);
    let (y, fy) = fold(p.y + dir.y * dist, area.min.y, area.max.y);
    (
        Vec2::new(x, y),
        Vec2::new(if fx { -dir.x } else { dir.x }, if fy { -dir.y } else { dir.y }),
    )
}

/// Unfolds a coordinate onto `[lo, hi]`; the flag is set when an odd number
/// of walls was hit.
fn fold(v: f64, lo: f64, hi: f64) -> (f64, bool) {
    if v >= lo && v <= hi {
        return (v, false);
    }
    let w = hi - lo;
    let t = (v - lo).rem_euclid(2.0 * w);
    let flipped = ((v - lo).div_euclid(2.0 * w) as i64 * 2 + i64::from(t > w)) % 2 != 0;
    if t <= w {
        (lo + t, flipped)
    } else {
        (hi - (t - w), flipped)
    }
}

/// Advances a user by `dt_s`, rolling over any number of flight/pause
/// transitions that fall inside the interval.
pub fn advance<R: Rng + ?Sized>(
    user: &mut UserState,
    dt_s: f64,
    rng: &mut R,
    area: &Rect,
    params: &LevyParams,
) -> Result<(), ModelError> {
    if !(dt_s > 0.0) {
        return Err(ModelError::Domain {
            name: "dt",
            value: dt_s,
            domain: "(0, inf)",
        });
    }
    let mut left = dt_s;
    while left > 0.0 {
        match user.phase {
            MobilityPhase::Pausing { remaining_s } => {
                if remaining_s > left {
                    user.phase = MobilityPhase::Pausing {
                        remaining_s: remaining_s - left,
                    };
                    return Ok(());
                }
                left -= remaining_s;
                let (phase, velocity) = new_flight(rng, params, area)?;
                user.phase = phase;
                user.velocity = velocity;
            }
            MobilityPhase::Flying { remaining_s, heading } => {
                let speed = user.velocity.norm();
                let t = remaining_s.min(left);
                let (pos, heading) = reflect_move(user.position, heading, speed * t, area);
                user.position = area.clamp(pos);
                if remaining_s > left {
                    user.phase = MobilityPhase::Flying {
                        remaining_s: remaining_s - left,
                        heading,
                    };
                    user.velocity = heading * speed;
                    return Ok(());
                }
                left -= remaining_s;
                user.phase = MobilityPhase::Pausing {
                    remaining_s: sample_length(rng, params.beta_r, MAX_PAUSE_S)?,
                };
                user.velocity = Vec2::ZERO;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Association, Demand, UserId};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn area() -> Rect {
        Rect::new(Vec2::new(-1000.0, -500.0), Vec2::new(1000.0, 500.0))
    }

    fn user(position: Vec2, velocity: Vec2, phase: MobilityPhase) -> UserState {
        UserState {
            id: UserId(0),
            position,
            velocity,
            phase,
            demand: Demand::mbps(1.0, 1.0),
            assoc: Association::None,
            satisfied_last_slot: true,
        }
    }

    #[test]
    fn sigma_y_reference_values() {
        assert!(rel(sigma_y(1.0).unwrap(), 1.0) < 1e-12);
        assert!(rel(sigma_y(0.5).unwrap(), 1.479_337_559_594_319_4) < 1e-9);
        assert!(rel(sigma_y(1.5).unwrap(), 0.696_574_502_557_696_8) < 1e-9);
        assert!(rel(sigma_y(1.999).unwrap(), 0.035_342_029_354_027_59) < 1e-9);
        assert!(sigma_y(0.0).is_err());
        assert!(sigma_y(2.0).is_err());
    }

    #[test]
    fn flight_duration_branches() {
        let p = LevyParams::default();
        assert!(rel(flight_duration(100.0, &p).unwrap(), 50.700_380_022_217_477) < 1e-9);
        assert!(rel(flight_duration(500.0, &p).unwrap(), 66.691_731_862_952_471) < 1e-9);
        assert!(rel(flight_duration(499.9, &p).unwrap(), 60.518_528_493_673_755) < 1e-9);
        assert_eq!(flight_duration(1.0, &p).unwrap(), 30.55);
        assert!(flight_duration(0.0, &p).is_err());
    }

    #[test]
    fn length_from_unit_normals() {
        assert_eq!(length_from_normals(1.0, 1.0, 0.5), 1.0);
        assert_eq!(length_from_normals(-2.0, -0.5, 1.0), 4.0);
    }

    #[test]
    fn ccdf_tail_slope_is_minus_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut xs: Vec<f64> = (0..1_000_000)
            .map(|_| sample_length(&mut rng, 0.5, f64::INFINITY).unwrap())
            .collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ccdf = |x: f64| (xs.len() - xs.partition_point(|&v| v <= x)) as f64 / n;
        // least squares over log-spaced points in the tail
        let pts: Vec<(f64, f64)> = (0..=20)
            .map(|i| 10f64.powf(2.0 + 2.0 * i as f64 / 20.0))
            .map(|x| (x.ln(), ccdf(x).ln()))
            .collect();
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn pausing_user_counts_down() {
        let mut u = user(
            Vec2::new(3.0, 4.0),
            Vec2::ZERO,
            MobilityPhase::Pausing { remaining_s: 10.0 },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        advance(&mut u, 1.0, &mut rng, &area(), &LevyParams::default()).unwrap();
        assert_eq!(u.position, Vec2::new(3.0, 4.0));
        assert_eq!(u.phase, MobilityPhase::Pausing { remaining_s: 9.0 });
    }

    #[test]
    fn flying_user_moves_with_velocity() {
        let heading = Vec2::new(1.0, 0.0);
        let mut u = user(
            Vec2::new(0.0, 0.0),
            heading * 2.0,
            MobilityPhase::Flying {
                remaining_s: 50.0,
                heading,
            },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        advance(&mut u, 1.0, &mut rng, &area(), &LevyParams::default()).unwrap();
        assert_eq!(u.position, Vec2::new(2.0, 0.0));
        assert_eq!(u.velocity, Vec2::new(2.0, 0.0));
    }

    #[test]
    fn reflection_at_the_wall() {
        let heading = Vec2::new(1.0, 0.0);
        let mut u = user(
            Vec2::new(999.0, 0.0),
            heading * 2.0,
            MobilityPhase::Flying {
                remaining_s: 50.0,
                heading,
            },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        advance(&mut u, 1.0, &mut rng, &area(), &LevyParams::default()).unwrap();
        assert!((u.position.x - 999.0).abs() < 1e-12);
        assert_eq!(u.velocity, Vec2::new(-2.0, 0.0));
        assert_eq!(
            u.phase,
            MobilityPhase::Flying {
                remaining_s: 49.0,
                heading: Vec2::new(-1.0, 0.0)
            }
        );
    }

    #[test]
    fn fold_unfolds_multiple_bounces() {
        assert_eq!(fold(12.0, 0.0, 10.0), (8.0, true));
        assert_eq!(fold(25.0, 0.0, 10.0), (5.0, false));
        assert_eq!(fold(-3.0, 0.0, 10.0), (3.0, true));
        assert_eq!(fold(-13.0, 0.0, 10.0), (7.0, false));
    }

    proptest! {
        #[test]
        fn walkers_stay_inside(seed in any::<u64>(), steps in 1usize..200) {
            let a = area();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = LevyParams::default();
            let (phase, velocity) = new_flight(&mut rng, &p, &a).unwrap();
            let mut u = user(Vec2::new(0.0, 0.0), velocity, phase);
            for _ in 0..steps {
                advance(&mut u, 0.065535 * 50.0, &mut rng, &a, &p).unwrap();
                prop_assert!(a.contains(u.position));
            }
        }

        #[test]
        fn samples_are_truncated(seed in any::<u64>(), beta in 0.1f64..1.9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let l = sample_length(&mut rng, beta, 2236.0).unwrap();
                prop_assert!(l > 0.0 && l <= 2236.0);
            }
        }

        #[test]
        fn flight_speed_is_length_over_duration(seed in any::<u64>()) {
            let a = area();
            let p = LevyParams::default();
            let mut r1 = ChaCha8Rng::seed_from_u64(seed);
            let mut r2 = r1.clone();
            let (phase, v) = new_flight(&mut r1, &p, &a).unwrap();
            let length = sample_length(&mut r2, p.beta_f, a.diagonal()).unwrap();
            let MobilityPhase::Flying { remaining_s, .. } = phase else { unreachable!() };
            prop_assert!(rel(v.norm(), length / remaining_s) < 1e-12);
        }

        #[test]
        fn trajectories_are_reproducible(seed in any::<u64>()) {
            let a = area();
            let p = LevyParams::default();
            let run = || {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (phase, velocity) = new_flight(&mut rng, &p, &a).unwrap();
                let mut u = user(Vec2::ZERO, velocity, phase);
                for _ in 0..50 {
                    advance(&mut u, 10.0, &mut rng, &a, &p).unwrap();
                }
                u
            };
            prop_assert_eq!(run(), run());
        }
    }
}
