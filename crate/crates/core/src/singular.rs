//! Riesz potentials, fractional maximal functions and sharp functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{BallStencil, GridFunction, GridSpec, RadiusSet, SingularNode, MAX_DIM};
use crate::profiles::{unit_ball_volume, unit_sphere_area};

/// Seed of the pair subsampler used by [`sharp_function`].
pub const SHARP_SEED: u64 = 0x5EED;

/// Default pair budget: balls with up to 4096 nodes are averaged exactly.
pub const DEFAULT_PAIR_BUDGET: usize = 4096 * 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszParams {
    pub alpha: f64,
}

impl RieszParams {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < d as f64) {
            return Err(Error::InvalidParams(format!("alpha = {alpha} outside (0, {d})")));
        }
        Ok(Self { alpha })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalParams {
    pub beta: f64,
    pub radii: RadiusSet,
}

/// Cell value for the kernel `|x|^{-s}` (`s < d`) at its singular node: the
/// exact average of the kernel over the ball whose volume equals `h^d`.
pub fn regularized_cell_value(d: usize, h: f64, s: f64) -> f64 {
    let df = d as f64;
    let he = h / unit_ball_volume(d).powf(1.0 / df);
    unit_sphere_area(d) * he.powf(df - s) / ((df - s) * h.powf(df))
}

/// The node at the origin carrying the regularized value of `|x|^{-s}`.
pub fn origin_singularity(spec: &GridSpec, s: f64, scale: f64) -> SingularNode {
    SingularNode { index: spec.origin(), value: scale * regularized_cell_value(spec.d, spec.h(), s) }
}

/// Samples `c·|x|^{-s}` with the origin regularized.
pub fn sample_power(spec: GridSpec, s: f64, c: f64) -> Result<GridFunction> {
    let d = spec.d;
    GridFunction::sample_singular(
        spec,
        |p| {
            let r = p[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
            if r == 0.0 {
                0.0
            } else {
                c * r.powf(-s)
            }
        },
        &[origin_singularity(&spec, s, c)],
    )
}

fn riesz_kernel(spec: &GridSpec, alpha: f64) -> impl Fn(&[i64; MAX_DIM]) -> f64 {
    let d = spec.d;
    let h = spec.h();
    let s = d as f64 - alpha;
    let centre = regularized_cell_value(d, h, s);
    move |k: &[i64; MAX_DIM]| {
        let q: i64 = k[..d].iter().map(|i| i * i).sum();
        if q == 0 {
            centre
        } else {
            ((q as f64).sqrt() * h).powf(-s)
        }
    }
}

fn check_riesz(f: &GridFunction, params: &RieszParams) -> Result<()> {
    RieszParams::new(f.spec.d, params.alpha)?;
    if f.support_margin < 1 {
        return Err(Error::InsufficientMargin { have: f.support_margin, need: 1 });
    }
    Ok(())
}

/// `P_α f = ∫ f(y)|x − y|^{α−d} dy` by FFT convolution on the zero-padded box.
pub fn riesz_potential(f: &GridFunction, params: &RieszParams) -> Result<GridFunction> {
    check_riesz(f, params)?;
    let spec = f.spec;
    let k = riesz_kernel(&spec, params.alpha);
    let vol = spec.cell_volume();
    let out = fft::convolve(&spec, &f.values, spec.n - 1, k);
    GridFunction::new(spec, out.into_iter().map(|v| v * vol).collect())
}

/// Same quantity as [`riesz_potential`] by direct `O(n^{2d})` summation.
pub fn riesz_potential_direct(f: &GridFunction, params: &RieszParams) -> Result<GridFunction> {
    check_riesz(f, params)?;
    let spec = f.spec;
    let k = riesz_kernel(&spec, params.alpha);
    let vol = spec.cell_volume();
    let support: Vec<(usize, [usize; MAX_DIM])> = f
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, _)| (j, spec.multi(j)))
        .collect();
    let out = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let mi = spec.multi(i);
            let mut s = 0.0;
            for (j, mj) in &support {
                let o = [
                    mi[0] as i64 - mj[0] as i64,
                    mi[1] as i64 - mj[1] as i64,
                    mi[2] as i64 - mj[2] as i64,
                ];
                s += f.values[*j] * k(&o);
            }
            s * vol
        })
        .collect();
    GridFunction::new(spec, out)
}

/// Ball averages of `values` for each radius, with lattice points outside
/// the grid counted as zeros.
pub fn ball_averages(spec: &GridSpec, values: &[f64], radii: &[f64]) -> Vec<Vec<f64>> {
    let sums = fft::ball_sums(spec, values, radii);
    radii
        .iter()
        .zip(sums)
        .map(|(&r, s)| {
            let count = BallStencil::new(spec.d, spec.h(), r).count() as f64;
            // nonnegative inputs: clamp FFT roundoff below zero
            s.into_iter().map(|v| (v / count).max(0.0)).collect()
        })
        .collect()
}

/// `M_β g(x) = max_ρ ρ^β ⨍_{B_ρ(x)} |g|`.
pub fn fractional_maximal(g: &GridFunction, params: &MaximalParams) -> Result<GridFunction> {
    if params.radii.radii.is_empty() {
        return Err(Error::EmptyRadiusSet);
    }
    if params.beta < 0.0 {
        return Err(Error::InvalidParams(format!("beta = {} must be >= 0", params.beta)));
    }
    let abs: Vec<f64> = g.values.iter().map(|v| v.abs()).collect();
    let avgs = ball_averages(&g.spec, &abs, &params.radii.radii);
    let mut out = vec![0.0f64; g.spec.len()];
    for (r, a) in params.radii.radii.iter().zip(&avgs) {
        let w = r.powf(params.beta);
        for (o, v) in out.iter_mut().zip(a) {
            *o = o.max(w * v);
        }
    }
    GridFunction::new(g.spec, out)
}

/// How lattice points of a ball that fall outside the grid are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// They carry the value zero (compactly supported data).
    Zero,
    /// They are dropped; the ball is intersected with the grid.
    Interior,
}

/// Values of `u` on the discrete ball `B_ρ(x_node)`.
pub fn ball_values(u: &GridFunction, node: usize, stencil: &BallStencil, ext: Extension) -> Vec<f64> {
    let m = u.spec.multi(node);
    let mut out = Vec::with_capacity(stencil.count());
    for o in &stencil.offsets {
        let k = [m[0] as i64 + o[0], m[1] as i64 + o[1], m[2] as i64 + o[2]];
        match u.spec.flat_checked(&k) {
            Some(f) => out.push(u.values[f]),
            None if ext == Extension::Zero => out.push(0.0),
            None => {}
        }
    }
    out
}

/// Exact `k^{-2} Σ_{i,j} |u_i − u_j|`, via sorting.
pub fn double_average(values: &[f64]) -> f64 {
    let k = values.len();
    if k == 0 {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let s: f64 = v
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * i as f64 - k as f64 + 1.0) * x)
        .sum();
    2.0 * s / (k as f64 * k as f64)
}

/// Mean absolute deviation from the mean.
pub fn mean_abs_deviation(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    values.iter().map(|v| (v - mean).abs()).sum::<f64>() / k
}

fn sampled_double_average(values: &[f64], pairs: usize, rng: &mut ChaCha8Rng) -> f64 {
    let k = values.len();
    let mut s = 0.0;
    for _ in 0..pairs {
        let i = rng.random_range(0..k);
        let j = rng.random_range(0..k);
        s += (values[i] - values[j]).abs();
    }
    s / pairs as f64
}

/// `u^#(x) = max_ρ ⨍⨍_{B_ρ(x)} |u(y) − u(z)|`. Balls with `k² ≤ pair_budget`
/// are averaged exactly; larger ones use `pair_budget` random pairs drawn
/// from a stream seeded by [`SHARP_SEED`] and the (node, radius) index.
pub fn sharp_function(
    u: &GridFunction,
    radii: &RadiusSet,
    pair_budget: usize,
    ext: Extension,
) -> Result<GridFunction> {
    if pair_budget == 0 {
        return Err(Error::InvalidParams("pair_budget must be >= 1".into()));
    }
    let stencils: Vec<BallStencil> = radii
        .radii
        .iter()
        .map(|&r| BallStencil::new(u.spec.d, u.spec.h(), r))
        .collect();
    let nr = stencils.len();
    let out = (0..u.spec.len())
        .into_par_iter()
        .map(|node| {
            let mut best = 0.0f64;
            for (ri, st) in stencils.iter().enumerate() {
                let vals = ball_values(u, node, st, ext);
                let k = vals.len();
                let v = if k.saturating_mul(k) <= pair_budget {
                    double_average(&vals)
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(SHARP_SEED);
                    rng.set_stream((node * nr + ri) as u64);
                    sampled_double_average(&vals, pair_budget, &mut rng)
                };
                best = best.max(v);
            }
            best
        })
        .collect();
    GridFunction::new(u.spec, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CapMode;
    use std::f64::consts::PI;

    fn ball_indicator(spec: GridSpec, r: f64) -> GridFunction {
        let d = spec.d;
        GridFunction::sample(spec, |p| {
            if p[..d].iter().map(|x| x * x).sum::<f64>() < r * r {
                1.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn cell_value_matches_ball_average() {
        // 2-d, s = 1: average of 1/|x| over the disc of area h² is 2/h_e
        let h = 0.1;
        let he = h / PI.sqrt();
        assert!((regularized_cell_value(2, h, 1.0) - 2.0 / he).abs() < 1e-9);
        // 3-d, s = 2: average of |x|^{-2} over the ball of volume h³ is 3/h_e²
        let he = h * (3.0 / (4.0 * PI)).powf(1.0 / 3.0);
        assert!((regularized_cell_value(3, h, 2.0) - 3.0 / (he * he)).abs() < 1e-7);
    }

    #[test]
    fn riesz_rejects_bad_alpha() {
        let spec = GridSpec::new(2, 1.0, 9).unwrap();
        let f = GridFunction::zeros(spec);
        assert!(riesz_potential(&f, &RieszParams { alpha: 2.0 }).is_err());
        assert!(riesz_potential(&f, &RieszParams { alpha: 0.0 }).is_err());
        let p = riesz_potential(&f, &RieszParams { alpha: 1.0 }).unwrap();
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn riesz_of_unit_disc_at_origin() {
        let spec = GridSpec::new(2, 2.0, 129).unwrap();
        let f = ball_indicator(spec, 1.0);
        let p = riesz_potential(&f, &RieszParams { alpha: 1.0 }).unwrap();
        assert!((p.values[spec.origin()] - 2.0 * PI).abs() < 0.1, "{}", p.values[spec.origin()]);
    }

    #[test]
    fn fast_and_direct_agree() {
        for d in [2, 3] {
            let spec = GridSpec::new(d, 1.0, 17).unwrap();
            let f = GridFunction::sample(spec, |p| (-(p[0] * p[0] + 2.0 * p[1] * p[1] + p[2] * p[2]) * 4.0).exp() * (1.0 + p[0]))
                .unwrap()
                .truncate_margin(1);
            let par = RieszParams { alpha: 1.3 };
            let a = riesz_potential(&f, &par).unwrap();
            let b = riesz_potential_direct(&f, &par).unwrap();
            let scale = b.max_abs();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn maximal_of_constant_and_indicator() {
        let spec = GridSpec::new(2, 2.0, 65).unwrap();
        let radii = RadiusSet::dyadic(spec.h(), 1.0, CapMode::Inhomogeneous).unwrap();
        let one = GridFunction::constant(spec, 1.0);
        let m = fractional_maximal(&one, &MaximalParams { beta: 0.0, radii: radii.clone() }).unwrap();
        assert!((m.values[spec.origin()] - 1.0).abs() < 1e-12);
        let m1 = fractional_maximal(&one, &MaximalParams { beta: 1.0, radii }).unwrap();
        assert!((m1.values[spec.origin()] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sharp_of_half_space() {
        let spec = GridSpec::new(2, 2.0, 65).unwrap();
        let u = GridFunction::sample(spec, |p| if p[0] > 0.0 { 1.0 } else { 0.0 }).unwrap();
        let radii = RadiusSet::new(vec![0.5], CapMode::Inhomogeneous).unwrap();
        let s = sharp_function(&u, &radii, DEFAULT_PAIR_BUDGET, Extension::Zero).unwrap();
        assert!((s.values[spec.origin()] - 0.5).abs() < 0.05);
        let c = sharp_function(&GridFunction::constant(spec, 3.0), &radii, DEFAULT_PAIR_BUDGET, Extension::Interior).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn double_average_matches_pairs() {
        let v = [0.3, -1.0, 2.5, 2.5, 0.0, 7.0];
        let mut s = 0.0;
        for a in v {
            for b in v {
                s += f64::abs(a - b);
            }
        }
        assert!((double_average(&v) - s / 36.0).abs() < 1e-14);
    }

    #[test]
    fn subsampling_is_deterministic_and_close() {
        let spec = GridSpec::new(2, 1.0, 33).unwrap();
        let u = GridFunction::sample(spec, |p| (3.0 * p[0]).sin() + p[1] * p[1]).unwrap();
        let radii = RadiusSet::new(vec![0.4], CapMode::Inhomogeneous).unwrap();
        let exact = sharp_function(&u, &radii, DEFAULT_PAIR_BUDGET, Extension::Interior).unwrap();
        let a = sharp_function(&u, &radii, 20_000, Extension::Interior).unwrap();
        let b = sharp_function(&u, &radii, 20_000, Extension::Interior).unwrap();
        assert_eq!(a, b);
        let i = spec.origin();
        assert!((a.values[i] - exact.values[i]).abs() < 0.05 * exact.values[i]);
    }
}
