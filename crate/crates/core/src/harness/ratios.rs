//! Left and right sides of each inequality for a single input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    gradient, CapMode, hessian, hessian_magnitude, lp_norm, magnitude, time_derivative, GridFunction, GridSpec, RadiusSet,
    Region, SpaceTimeFunction, MAX_DIM,
};
use crate::harness::{make_case, Outcome};
use crate::heat::{parabolic_tail_potential, trace};
use crate::morrey::{
    e12_norm, elliptic_morrey_norm, normalized_mixed_norm, parabolic_fractional_maximal, parabolic_morrey_norm,
    require_trace_params, slab_mixed_norm, truncated_morrey, Cylinder, EllipticMorreyParams, ParabolicMorreyParams,
    SpaceTimeNode, TraceParams, TruncatedMorreyParams,
};
use crate::profiles::smooth_step;
use crate::singular::{
    fractional_maximal, riesz_potential, sample_power, sharp_function, Extension, MaximalParams, RieszParams,
    DEFAULT_PAIR_BUDGET,
};

/// Both sides of one instance of an inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub lhs: f64,
    pub rhs: f64,
    /// The Morrey norm on the right was attained at the largest radius.
    pub cap_limited: bool,
}

impl Ratio {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, cap_limited: false }
    }

    pub fn value(&self) -> f64 {
        self.lhs / self.rhs
    }

    pub fn case(&self, case_id: impl Into<String>, scale_index: usize) -> Outcome {
        make_case(case_id, scale_index, self.lhs, self.rhs)
    }
}

fn window(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("exponent window violated: {what}")))
    }
}

fn product(a: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
    a.mul(b)
}

/// `‖b·P_α f‖_{L_p}` against `‖b‖_{Ė_{q,α}}‖f‖_{L_p}`.
pub fn ratio_adams(b: &GridFunction, f: &GridFunction, p: f64, q: f64, alpha: f64) -> Result<Ratio> {
    window(1.0 < p && p < q, "1 < p < q")?;
    let norm_b = elliptic_morrey_norm(b, &EllipticMorreyParams::homogeneous(&b.spec, q, alpha, None)?)?;
    adams_with_norm(b, norm_b.value, norm_b.cap_limited, f, p, alpha)
}

/// [`ratio_adams`] with the weight's Morrey norm supplied.
pub fn adams_with_norm(b: &GridFunction, norm_b: f64, cap_limited: bool, f: &GridFunction, p: f64, alpha: f64) -> Result<Ratio> {
    let pf = riesz_potential(f, &RieszParams::new(f.spec.d, alpha)?)?;
    let lhs = lp_norm(&product(b, &pf)?, p, None)?;
    let rhs = norm_b * lp_norm(f, p, None)?;
    Ok(Ratio { lhs, rhs, cap_limited })
}

/// Nodes whose ball of radius `radius` lies inside the grid.
pub fn interior_nodes(spec: &GridSpec, radius: f64) -> Vec<usize> {
    let reach = (radius / spec.h()).ceil() as usize;
    (0..spec.len()).filter(|&i| spec.layer(i) >= reach).collect()
}

/// Pointwise `max_x (P_α g)^#(x) / M_α g(x)` over interior nodes with
/// `M_α g > 0`; `lhs`, `rhs` are the two values at the maximizing node.
pub fn ratio_sharp_maximal(g: &GridFunction, alpha: f64, radii: &RadiusSet) -> Result<Ratio> {
    if let Some((index, &value)) = g.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::Negative { index, value });
    }
    if g.max_abs() == 0.0 {
        return Err(Error::Degenerate("g vanishes identically".into()));
    }
    let pg = riesz_potential(g, &RieszParams::new(g.spec.d, alpha)?)?;
    let sharp = sharp_function(&pg, radii, DEFAULT_PAIR_BUDGET, Extension::Interior)?;
    // M_α g takes radii up to the box diameter so that it sees the support
    // of g from every node; truncating it like the sharp function leaves it
    // zero far from the support while I_α g still oscillates there.
    let diameter = 2.0 * g.spec.half_extent * (g.spec.d as f64).sqrt();
    let reach = RadiusSet::dyadic(g.spec.h(), diameter, CapMode::Homogeneous { rho_max: diameter })?;
    let maxf = fractional_maximal(g, &MaximalParams { beta: alpha, radii: radii.union(&reach)? })?;
    let mut best = Ratio::new(0.0, 1.0);
    let mut found = false;
    for i in interior_nodes(&g.spec, radii.max()) {
        let m = maxf.values[i];
        if m > 0.0 && (!found || sharp.values[i] * best.rhs > best.lhs * m) {
            best = Ratio::new(sharp.values[i], m);
            found = true;
        }
    }
    if !found {
        return Err(Error::Degenerate("maximal function vanishes on interior nodes".into()));
    }
    Ok(best)
}

/// The two homogeneous forms of the weighted estimate:
/// `‖b u‖_{L_p} ≤ N‖b‖_{Ė_{q,1}}‖Du‖_{L_p}` and, with `second`,
/// `‖b |Du|‖_{L_p} ≤ N‖b‖_{Ė_{q,1}}‖D²u‖_{L_p}`.
pub fn ratio_weighted(b: &GridFunction, u: &GridFunction, p: f64, q: f64, second: bool) -> Result<Ratio> {
    window(1.0 < p && p < q, "1 < p < q")?;
    let norm_b = elliptic_morrey_norm(b, &EllipticMorreyParams::homogeneous(&b.spec, q, 1.0, None)?)?;
    weighted_with_norm(b, norm_b.value, norm_b.cap_limited, u, p, second)
}

pub fn weighted_with_norm(b: &GridFunction, norm_b: f64, cap_limited: bool, u: &GridFunction, p: f64, second: bool) -> Result<Ratio> {
    let du = magnitude(&gradient(u)?)?;
    let (low, high) = if second { (du, hessian_magnitude(&hessian(u)?)?) } else { (u.abs(), du) };
    let lhs = lp_norm(&product(b, &low)?, p, None)?;
    let rhs = norm_b * lp_norm(&high, p, None)?;
    Ok(Ratio { lhs, rhs, cap_limited })
}

/// `∫|b|^p|u|^p` against `b̂^p (∫|Du|^p + ρ_b^{-p} ∫|u|^p)`.
pub fn ratio_weighted_truncated(b: &GridFunction, u: &GridFunction, p: f64, p_b: f64, rho_b: f64) -> Result<Ratio> {
    window(1.0 < p && p < p_b, "1 < p < p_b")?;
    let bhat = truncated_morrey(b, &TruncatedMorreyParams { p_b, rho_b })?.value;
    let lhs = lp_norm(&product(b, u)?, p, None)?.powf(p);
    let du = lp_norm(&magnitude(&gradient(u)?)?, p, None)?.powf(p);
    let uu = lp_norm(u, p, None)?.powf(p);
    Ok(Ratio::new(lhs, bhat.powf(p) * (du + rho_b.powf(-p) * uu)))
}

/// `∫|u|^p |x|^{-p}` against `‖Du‖_p^p` (`1 < p < d`).
pub fn ratio_hardy(u: &GridFunction, p: f64) -> Result<Ratio> {
    let d = u.spec.d as f64;
    window(1.0 < p && p < d, "1 < p < d")?;
    let w = sample_power(u.spec, p, 1.0)?;
    let lhs: f64 = u.values.iter().zip(&w.values).map(|(a, b)| a.abs().powf(p) * b).sum::<f64>() * u.spec.cell_volume();
    let rhs = lp_norm(&magnitude(&gradient(u)?)?, p, None)?.powf(p);
    Ok(Ratio::new(lhs, rhs))
}

/// `∫|u|^r |x|^{-2r}` against `‖D²u‖_r^r` (`1 < r < d/2`).
pub fn ratio_hardy_second(u: &GridFunction, r: f64) -> Result<Ratio> {
    let d = u.spec.d as f64;
    window(1.0 < r && r < d / 2.0, "1 < r < d/2")?;
    let w = sample_power(u.spec, 2.0 * r, 1.0)?;
    let lhs: f64 = u.values.iter().zip(&w.values).map(|(a, b)| a.abs().powf(r) * b).sum::<f64>() * u.spec.cell_volume();
    let rhs = lp_norm(&hessian_magnitude(&hessian(u)?)?, r, None)?.powf(r);
    Ok(Ratio::new(lhs, rhs))
}

/// Hardy quotient of the radial family `u_δ(x) = |x|^{-(d-p)/p + δ} ψ(log|x|)`
/// by exact reduction to one variable; `ψ` is 1 for `|x| ≤ 1` and tapers
/// smoothly to 0 over `taper` e-folds of `|x|`.
pub fn hardy_radial_ratio(d: usize, p: f64, delta: f64, taper: f64) -> Result<f64> {
    let df = d as f64;
    window(1.0 < p && p < df, "1 < p < d")?;
    let a = (df - p) / p - delta;
    // integrands carry e^{pδs}; start where it is negligible
    let s_min = -60.0 / (p * delta);
    let steps = 400_000usize;
    let ds = (taper - s_min) / steps as f64;
    let psi = |s: f64| 1.0 - smooth_step(s / taper);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=steps {
        let s = s_min + i as f64 * ds;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 } * (p * delta * s).exp();
        let dpsi = (psi(s + 1e-6) - psi(s - 1e-6)) / 2e-6;
        num += w * psi(s).powf(p);
        den += w * (dpsi - a * psi(s)).abs().powf(p);
    }
    Ok(num / den)
}

/// Largest `|g(x + k e_a) − g(x)| / (k h)^exponent` over axis offsets
/// `1 ≤ k ≤ max_offset`.
pub fn holder_quotient(g: &GridFunction, exponent: f64, max_offset: usize) -> f64 {
    let spec = g.spec;
    let h = spec.h();
    let mut best = 0.0f64;
    for i in 0..spec.len() {
        let m = spec.multi(i);
        for a in 0..spec.d {
            for k in 1..=max_offset {
                let mut o = [m[0] as i64, m[1] as i64, m[2] as i64];
                o[a] += k as i64;
                if let Some(j) = spec.flat_checked(&o) {
                    let q = (g.values[j] - g.values[i]).abs() / (k as f64 * h).powf(exponent);
                    best = best.max(q);
                }
            }
        }
    }
    best
}

/// Which trace estimate [`ratio_trace`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Unnormalized `L_r` against unnormalized `L_{p,q}` over the slab.
    LrGlobal,
    /// Normalized norms on `B_ρ` and `C_{2ρ}`.
    LrLocal { rho: f64 },
    /// `E_{r,β+γ−μ}` against `E_{p,q,β}` with `ε^{−μ/(2−μ)}`.
    MorreyMu,
    /// `E_{r,β+γ−2}` against the full `E^{1,2}_{p,q,β}` norm; one ratio.
    MorreyFull,
    /// Homogeneous `Ė_{r,β+γ−2}` against `Ė_{p,q,β}` of `∂_t u` and `D²u`; one ratio.
    MorreyHomogeneous,
    /// `E_{p,β}` on the left (the `r = p`, `μ = κ`, `γ = 1` case).
    MorreyRemark,
}

/// Pieces of `u` shared by every mode.
struct TraceInputs {
    trace: GridFunction,
    dt: SpaceTimeFunction,
    d2: SpaceTimeFunction,
}

fn trace_inputs(u: &SpaceTimeFunction, gamma: u8, mollifier_eps: &[f64], r: f64) -> Result<TraceInputs> {
    let tr = trace(u, gamma, mollifier_eps, r)?;
    let trace = match gamma {
        0 => tr.limit[0].clone(),
        _ => magnitude(&tr.limit)?,
    };
    let dt = time_derivative(u)?.derivative;
    let d2 = u.map_slices(|s| hessian_magnitude(&hessian(s)?))?;
    Ok(TraceInputs { trace, dt, d2 })
}

/// Ratios of a trace estimate, one per ε in `eps_list` (a single ratio for
/// the ε-free modes). `mollifier_eps` is the decreasing sequence used to
/// extract the trace at `t = 0`.
pub fn ratio_trace(
    u: &SpaceTimeFunction,
    tp: &TraceParams,
    eps_list: &[f64],
    mode: TraceMode,
    mollifier_eps: &[f64],
) -> Result<Vec<Ratio>> {
    let st = u.spec;
    let d = st.spatial.d;
    let validity = require_trace_params(d, tp)?;
    let kappa = validity.kappa;
    let gamma = tp.gamma as u8;
    let inp = trace_inputs(u, gamma, mollifier_eps, tp.r)?;
    let origin = [0.0; MAX_DIM];
    let scan = |lhs: f64, a: f64, b: &dyn Fn(f64) -> f64| -> Vec<Ratio> {
        eps_list.iter().map(|&e| Ratio::new(lhs, e * a + b(e))).collect()
    };
    Ok(match mode {
        TraceMode::LrGlobal => {
            let lhs = lp_norm(&inp.trace, tp.r, None)?;
            let a = slab_mixed_norm(&inp.dt, tp.p, tp.q)? + slab_mixed_norm(&inp.d2, tp.p, tp.q)?;
            let b = slab_mixed_norm(u, tp.p, tp.q)?;
            let theta = kappa / (2.0 - kappa);
            scan(lhs, a, &|e: f64| e.powf(-theta) * b)
        }
        TraceMode::LrLocal { rho } => {
            let lhs = lp_norm(&inp.trace, tp.r, Some(&Region::Ball { center: origin, radius: rho }))?;
            let cyl = Cylinder { t: 0.0, center: origin, radius: 2.0 * rho };
            let a = normalized_mixed_norm(&inp.dt, tp.p, tp.q, &cyl)? + normalized_mixed_norm(&inp.d2, tp.p, tp.q, &cyl)?;
            let b = normalized_mixed_norm(u, tp.p, tp.q, &cyl)?;
            let theta = kappa / (2.0 - kappa);
            let pw = (2.0 * kappa - 2.0 * tp.gamma) / (2.0 - kappa);
            scan(lhs, a, &|e: f64| (e / (rho * rho) + e.powf(-theta) * rho.powf(pw)) * b)
        }
        TraceMode::MorreyMu | TraceMode::MorreyRemark => {
            let index = if mode == TraceMode::MorreyMu { tp.beta + tp.gamma - tp.mu } else { tp.beta };
            let lhs = elliptic_morrey_norm(&inp.trace, &EllipticMorreyParams::inhomogeneous(&st.spatial, tp.r, index)?)?.value;
            let pm = ParabolicMorreyParams::inhomogeneous(&st, tp.p, tp.q, tp.beta)?;
            let a = parabolic_morrey_norm(&inp.dt, &pm)?.value + parabolic_morrey_norm(&inp.d2, &pm)?.value;
            let b = parabolic_morrey_norm(u, &pm)?.value;
            let theta = tp.mu / (2.0 - tp.mu);
            scan(lhs, a, &|e: f64| e.powf(-theta) * b)
        }
        TraceMode::MorreyFull => {
            let index = tp.beta + tp.gamma - 2.0;
            let lhs = elliptic_morrey_norm(&inp.trace, &EllipticMorreyParams::inhomogeneous(&st.spatial, tp.r, index)?)?.value;
            let pm = ParabolicMorreyParams::inhomogeneous(&st, tp.p, tp.q, tp.beta)?;
            vec![Ratio::new(lhs, e12_norm(u, &pm)?.total)]
        }
        TraceMode::MorreyHomogeneous => {
            let index = tp.beta + tp.gamma - 2.0;
            let norm = elliptic_morrey_norm(&inp.trace, &EllipticMorreyParams::homogeneous(&st.spatial, tp.r, index, None)?)?;
            let pm = ParabolicMorreyParams::homogeneous(&st, tp.p, tp.q, tp.beta, None)?;
            let a = parabolic_morrey_norm(&inp.dt, &pm)?;
            let b = parabolic_morrey_norm(&inp.d2, &pm)?;
            vec![Ratio { lhs: norm.value, rhs: a.value + b.value, cap_limited: a.cap_limited || b.cap_limited }]
        }
    })
}

/// `P_γ(1_{C_ρ^c} f)(0)` against `ρ^{γ−β} M_β f(0)`, one ratio per ρ.
pub fn ratio_tail(f: &SpaceTimeFunction, gamma: f64, beta: f64, rho_list: &[f64], radii: &RadiusSet) -> Result<Vec<Ratio>> {
    let d = f.spec.spatial.d as f64;
    if !(0.0 <= gamma && gamma < beta && beta <= d + 2.0) {
        return Err(Error::InvalidParams(format!("need 0 <= gamma < beta <= d + 2, got gamma = {gamma}, beta = {beta}")));
    }
    let j0 = f
        .spec
        .time_index(0.0)
        .ok_or_else(|| Error::InvalidParams("t = 0 must be a time node".into()))?;
    let at = SpaceTimeNode { time: j0, node: f.spec.spatial.origin() };
    let maximal = parabolic_fractional_maximal(f, beta, radii, at)?;
    rho_list
        .iter()
        .map(|&rho| Ok(Ratio::new(parabolic_tail_potential(f, gamma, rho)?, rho.powf(gamma - beta) * maximal)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(spec: GridSpec, s: f64) -> GridFunction {
        let d = spec.d;
        GridFunction::sample(spec, |p| {
            let r2: f64 = p[..d].iter().map(|x| x * x).sum();
            (-r2 / (2.0 * s * s)).exp() * crate::profiles::cutoff(r2.sqrt(), 2.5 * s, 3.0 * s)
        })
        .unwrap()
    }

    #[test]
    fn zero_input_gives_zero_ratio() {
        let spec = GridSpec::new(3, 2.0, 17).unwrap();
        let z = GridFunction::zeros(spec);
        let b = sample_power(spec, 1.0, 1.0).unwrap();
        let f = gaussian(spec, 0.3);
        let r = ratio_adams(&b, &z, 2.0, 2.5, 1.0).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.rhs == 0.0);
        let r = ratio_weighted(&b, &z, 2.0, 2.5, false).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(ratio_adams(&b, &f, 2.5, 2.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_hardy_quotient_is_four_thirds() {
        // ∫u²/|x|² / ∫|Du|² = 4/3 for a 3-d Gaussian
        let spec = GridSpec::new(3, 2.0, 65).unwrap();
        let r = ratio_hardy(&gaussian(spec, 0.3), 2.0).unwrap();
        assert!((r.value() - 4.0 / 3.0).abs() < 0.05, "{}", r.value());
    }

    #[test]
    fn radial_family_approaches_four() {
        let a = hardy_radial_ratio(3, 2.0, 0.1, 4.0).unwrap();
        let b = hardy_radial_ratio(3, 2.0, 0.05, 8.0).unwrap();
        assert!(a > 3.0 && a < 4.0, "{a}");
        assert!(b > a && b < 4.0);
    }

    #[test]
    fn sharp_maximal_rejects_sign_change() {
        let spec = GridSpec::new(2, 2.0, 17).unwrap();
        let g = gaussian(spec, 0.3).scaled(-1.0);
        let radii = RadiusSet::homogeneous(&spec, 1.0).unwrap();
        assert!(matches!(ratio_sharp_maximal(&g, 1.0, &radii), Err(Error::Negative { .. })));
        assert!(matches!(ratio_sharp_maximal(&GridFunction::zeros(spec), 1.0, &radii), Err(Error::Degenerate(_))));
    }

    #[test]
    fn holder_of_linear_function() {
        let spec = GridSpec::new(2, 1.0, 9).unwrap();
        let g = GridFunction::sample(spec, |p| 3.0 * p[0]).unwrap();
        assert!((holder_quotient(&g, 1.0, 3) - 3.0).abs() < 1e-12);
    }
}
