//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use morreylab::heat::representation_r;
use morreylab::{GridSpec, SpaceTimeFunction, SpaceTimeGridSpec};

const K: i32 = 4;
const R: f64 = 1.2;
const TC: f64 = 0.45;
const W: f64 = 0.4;

/// `(1 − s²)^K` on `|s| < 1` and its derivative.
fn poly(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let b = 1.0 - s * s;
    (b.powi(K), -2.0 * K as f64 * s * b.powi(K - 1))
}

/// `w = a(t) g(x)` with polynomial bumps in time and space, and
/// `f = −(∂_t + Δ) w` in closed form.
pub fn representation_pair(n: usize, m: usize) -> (SpaceTimeFunction, SpaceTimeFunction) {
    let d = 2usize;
    let st = SpaceTimeGridSpec::new(GridSpec::new(d, 2.0, n).unwrap(), 0.0, 1.0, m).unwrap();
    let g = |p: &[f64; 3]| {
        let rho = (p[0] * p[0] + p[1] * p[1]) / (R * R);
        if rho >= 1.0 {
            return (0.0, 0.0);
        }
        let k = K as f64;
        let lap = k * (k - 1.0) * (1.0 - rho).powi(K - 2) * 4.0 * rho / (R * R)
            - 2.0 * d as f64 * k * (1.0 - rho).powi(K - 1) / (R * R);
        ((1.0 - rho).powi(K), lap)
    };
    let w = SpaceTimeFunction::sample(st, |t, p| poly((t - TC) / W).0 * g(p).0).unwrap();
    let f = SpaceTimeFunction::sample(st, |t, p| {
        let (a, da) = poly((t - TC) / W);
        let (gv, lap) = g(p);
        -(da / W * gv + a * lap)
    })
    .unwrap();
    (w, f)
}

/// `‖Rf − w‖_∞ / ‖w‖_∞` for [`representation_pair`].
pub fn representation_error(n: usize, m: usize) -> f64 {
    let (w, f) = representation_pair(n, m);
    let rf = representation_r(&f).unwrap();
    let err = rf.values.iter().zip(&w.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    err / w.max_abs()
}
