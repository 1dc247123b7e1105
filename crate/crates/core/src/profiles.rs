//! Smooth scalar profiles used to build compactly supported test functions.

use std::f64::consts::PI;

/// `e^{-1/x}` for `x > 0`, zero otherwise. The classical flat function.
fn flat(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// C^∞ step: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = flat(x);
    let b = flat(1.0 - x);
    a / (a + b)
}

/// Radial cutoff equal to 1 for `r ≤ inner` and 0 for `r ≥ outer`.
pub fn cutoff(r: f64, inner: f64, outer: f64) -> f64 {
    1.0 - smooth_step((r - inner) / (outer - inner))
}

/// Standard bump `exp(1 - 1/(1 - (r/R)^2))`, equal to 1 at the centre and
/// supported in the open ball of radius `R`.
pub fn bump(r: f64, radius: f64) -> f64 {
    let s = r / radius;
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Profile defining the counterexample family `u_κ(x) = f(|x|/κ)`:
/// zero on `[0, 1]`, equal to `t` on `[2, 3]`, zero from 3.8 on.
pub fn kappa_profile(t: f64) -> f64 {
    t * smooth_step(t - 1.0) * (1.0 - smooth_step((t - 3.0) / 0.8))
}

/// Largest `t` where [`kappa_profile`] can be nonzero.
pub const KAPPA_PROFILE_SUPPORT: f64 = 3.8;

/// Volume of the unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(d as f64 / 2.0) / gamma_half_integer(d + 2),
    }
}

/// Surface area of the unit sphere `σ_{d-1} = 2π^{d/2}/Γ(d/2)`.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

/// Γ(k/2) for positive integer k.
fn gamma_half_integer(k: usize) -> f64 {
    match k {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half_integer(k - 2),
    }
}
