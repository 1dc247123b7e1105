//! Elliptic and parabolic Morrey norms, mixed norms on cylinders and the
//! trace-parameter validator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    gradient, hessian, region_nodes, time_derivative, CapMode, GridFunction, GridSpec, RadiusSet, Region,
    SpaceTimeFunction, SpaceTimeGridSpec, MAX_DIM,
};
use crate::singular::ball_averages;

/// Outcome of a supremum-type norm together with where it was attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub norm_id: String,
    pub params: serde_json::Value,
    pub value: f64,
    /// Spatial coordinates, preceded by the time for parabolic norms.
    pub argmax_center: Vec<f64>,
    pub argmax_radius: f64,
    pub cap_limited: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticMorreyParams {
    pub q: f64,
    pub beta: f64,
    pub homogeneous: bool,
    pub radii: RadiusSet,
}

impl EllipticMorreyParams {
    /// Radii capped at 1 (or `L/2`).
    pub fn inhomogeneous(spec: &GridSpec, q: f64, beta: f64) -> Result<Self> {
        Ok(Self { q, beta, homogeneous: false, radii: RadiusSet::inhomogeneous(spec)? })
    }

    /// Radii capped at `ρ_max`, by default `L/2`.
    pub fn homogeneous(spec: &GridSpec, q: f64, beta: f64, rho_max: Option<f64>) -> Result<Self> {
        let cap = rho_max.unwrap_or(0.5 * spec.half_extent);
        Ok(Self { q, beta, homogeneous: true, radii: RadiusSet::homogeneous(spec, cap)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedMorreyParams {
    pub p_b: f64,
    pub rho_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicMorreyParams {
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    pub homogeneous: bool,
    pub radii: RadiusSet,
}

impl ParabolicMorreyParams {
    /// Radii capped at `min(1, L/2, √(t1 − t0))`.
    pub fn inhomogeneous(spec: &SpaceTimeGridSpec, p: f64, q: f64, beta: f64) -> Result<Self> {
        let cap = 1.0f64.min(0.5 * spec.spatial.half_extent).min((spec.t1 - spec.t0).sqrt());
        let radii = RadiusSet::dyadic(spec.spatial.h(), cap, CapMode::Inhomogeneous)?;
        Ok(Self { p, q, beta, homogeneous: false, radii })
    }

    /// Radii capped at `ρ_max`, by default `min(L/2, √(t1 − t0))`.
    pub fn homogeneous(spec: &SpaceTimeGridSpec, p: f64, q: f64, beta: f64, rho_max: Option<f64>) -> Result<Self> {
        let cap = rho_max.unwrap_or_else(|| (0.5 * spec.spatial.half_extent).min((spec.t1 - spec.t0).sqrt()));
        let radii = RadiusSet::dyadic(spec.spatial.h(), cap, CapMode::Homogeneous { rho_max: cap })?;
        Ok(Self { p, q, beta, homogeneous: true, radii })
    }
}

fn check_exponent(name: &str, v: f64, strict: bool) -> Result<()> {
    let ok = if strict { v > 1.0 } else { v >= 1.0 };
    if !ok || !v.is_finite() {
        return Err(Error::InvalidParams(format!("{name} = {v} out of range")));
    }
    Ok(())
}

/// Candidate for a supremum; ties keep the earlier (smaller radius, then
/// lexicographically smaller centre) candidate.
#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    radius_index: usize,
    center: usize,
}

fn better(a: Best, b: Best) -> Best {
    if b.value > a.value || (b.value == a.value && (b.radius_index, b.center) < (a.radius_index, a.center)) {
        b
    } else {
        a
    }
}

/// `sup_ρ ρ^β sup_x ⨍_{B_ρ(x)} |f|^q` over the radius set and node centres.
pub fn elliptic_morrey_norm(f: &GridFunction, params: &EllipticMorreyParams) -> Result<NormResult> {
    check_exponent("q", params.q, false)?;
    if params.beta < 0.0 {
        return Err(Error::InvalidParams("beta must be >= 0".into()));
    }
    let spec = f.spec;
    let powq: Vec<f64> = f.values.iter().map(|v| v.abs().powf(params.q)).collect();
    let avgs = ball_averages(&spec, &powq, &params.radii.radii);
    let mut best = Best { value: f64::NEG_INFINITY, radius_index: 0, center: 0 };
    for (ri, (r, a)) in params.radii.radii.iter().zip(&avgs).enumerate() {
        let w = r.powf(params.beta);
        for (c, v) in a.iter().enumerate() {
            best = better(best, Best { value: w * v.powf(1.0 / params.q), radius_index: ri, center: c });
        }
    }
    let radius = params.radii.radii[best.radius_index];
    Ok(NormResult {
        norm_id: if params.homogeneous { "elliptic_morrey_homogeneous" } else { "elliptic_morrey" }.into(),
        params: serde_json::json!({ "q": params.q, "beta": params.beta, "homogeneous": params.homogeneous }),
        value: best.value,
        argmax_center: spec.point(best.center)[..spec.d].to_vec(),
        argmax_radius: radius,
        cap_limited: params.homogeneous && best.radius_index + 1 == params.radii.radii.len(),
    })
}

/// `b̂ = sup_{ρ ≤ ρ_b} ρ sup_B ‖b‖^#_{L_{p_b}(B)}`, over dyadic radii with `ρ_b`
/// itself included.
pub fn truncated_morrey(b: &GridFunction, params: &TruncatedMorreyParams) -> Result<NormResult> {
    check_exponent("p_b", params.p_b, true)?;
    let h = b.spec.h();
    if params.rho_b < h {
        return Err(Error::Unresolved(format!("rho_b = {} below the grid spacing {h}", params.rho_b)));
    }
    let radii = RadiusSet::dyadic(h, params.rho_b, CapMode::Inhomogeneous)?;
    let mut out = elliptic_morrey_norm(b, &EllipticMorreyParams { q: params.p_b, beta: 1.0, homogeneous: false, radii })?;
    out.norm_id = "truncated_morrey".into();
    out.params = serde_json::json!({ "p_b": params.p_b, "rho_b": params.rho_b });
    Ok(out)
}

/// Forward parabolic cylinder `[t, t + ρ²) × B_ρ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub t: f64,
    pub center: [f64; MAX_DIM],
    pub radius: f64,
}

/// Number of time nodes `t_j + kτ` with `kτ < ρ²`.
pub fn window_len(radius: f64, tau: f64) -> usize {
    ((radius * radius / tau) - 1e-9).ceil().max(1.0) as usize
}

fn cylinder_times(spec: &SpaceTimeGridSpec, cyl: &Cylinder) -> Vec<usize> {
    let tau = spec.tau();
    let end = cyl.t + cyl.radius * cyl.radius;
    (0..spec.m)
        .filter(|&j| {
            let t = spec.time(j);
            t >= cyl.t - 1e-9 * tau && t < end - 1e-9 * tau
        })
        .collect()
}

/// Unnormalized `(∫ (∫ |g|^p dx)^{q/p} dt)^{1/q}` over the discrete cylinder
/// intersected with the slab.
pub fn mixed_lpq_norm(g: &SpaceTimeFunction, p: f64, q: f64, cyl: &Cylinder) -> Result<f64> {
    check_exponent("p", p, false)?;
    check_exponent("q", q, false)?;
    let times = cylinder_times(&g.spec, cyl);
    let (total, nodes) = region_nodes(&g.spec.spatial, &Region::Ball { center: cyl.center, radius: cyl.radius });
    if times.is_empty() || total == 0 {
        return Err(Error::EmptyRegion);
    }
    let vol = g.spec.spatial.cell_volume();
    let s: f64 = times
        .iter()
        .map(|&j| {
            let sl = g.slice_values(j);
            let inner: f64 = nodes.iter().map(|&i| sl[i].abs().powf(p)).sum::<f64>() * vol;
            inner.powf(q / p)
        })
        .sum();
    Ok((s * g.spec.tau()).powf(1.0 / q))
}

/// `‖g‖_{L_{p,q}(C)} / ‖1_C‖_{L_{p,q}(C)}` on the same discrete cylinder.
pub fn normalized_mixed_norm(g: &SpaceTimeFunction, p: f64, q: f64, cyl: &Cylinder) -> Result<f64> {
    check_exponent("p", p, false)?;
    check_exponent("q", q, false)?;
    let times = cylinder_times(&g.spec, cyl);
    let (total, nodes) = region_nodes(&g.spec.spatial, &Region::Ball { center: cyl.center, radius: cyl.radius });
    if times.is_empty() || total == 0 {
        return Err(Error::EmptyRegion);
    }
    let s: f64 = times
        .iter()
        .map(|&j| {
            let sl = g.slice_values(j);
            (nodes.iter().map(|&i| sl[i].abs().powf(p)).sum::<f64>() / total as f64).powf(q / p)
        })
        .sum();
    Ok((s / times.len() as f64).powf(1.0 / q))
}

/// Unnormalized `L_{p,q}` norm over the whole slab and grid.
pub fn slab_mixed_norm(g: &SpaceTimeFunction, p: f64, q: f64) -> Result<f64> {
    check_exponent("p", p, false)?;
    check_exponent("q", q, false)?;
    let vol = g.spec.spatial.cell_volume();
    let s: f64 = (0..g.spec.m)
        .map(|j| {
            let inner: f64 = g.slice_values(j).iter().map(|v| v.abs().powf(p)).sum::<f64>() * vol;
            inner.powf(q / p)
        })
        .sum();
    Ok((s * g.spec.tau()).powf(1.0 / q))
}

/// `sup_{ρ, C ∈ ℂ_ρ} ρ^β ‖g‖^#_{L_{p,q}(C)}` over node-anchored cylinders
/// whose time window lies inside the slab.
pub fn parabolic_morrey_norm(g: &SpaceTimeFunction, params: &ParabolicMorreyParams) -> Result<NormResult> {
    check_exponent("p", params.p, true)?;
    check_exponent("q", params.q, true)?;
    if params.beta < 0.0 {
        return Err(Error::InvalidParams("beta must be >= 0".into()));
    }
    let spec = g.spec;
    let n = spec.spatial.len();
    let m = spec.m;
    let (p, q) = (params.p, params.q);
    let radii = &params.radii.radii;
    // per slice, per radius: ball averages of |g|^p
    let slice_avgs: Vec<Vec<Vec<f64>>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let powp: Vec<f64> = g.slice_values(j).iter().map(|v| v.abs().powf(p)).collect();
            ball_averages(&spec.spatial, &powp, radii)
        })
        .collect();
    let mut best = Best { value: f64::NEG_INFINITY, radius_index: 0, center: 0 };
    for (ri, &r) in radii.iter().enumerate() {
        let k = window_len(r, spec.tau());
        if k > m {
            continue;
        }
        let w = r.powf(params.beta);
        // prefix sums in time of (ball mean)^{q/p}
        let mut prefix = vec![0.0; (m + 1) * n];
        for j in 0..m {
            for x in 0..n {
                prefix[(j + 1) * n + x] = prefix[j * n + x] + slice_avgs[j][ri][x].powf(q / p);
            }
        }
        for j in 0..=(m - k) {
            for x in 0..n {
                let s = (prefix[(j + k) * n + x] - prefix[j * n + x]).max(0.0);
                let v = w * (s / k as f64).powf(1.0 / q);
                best = better(best, Best { value: v, radius_index: ri, center: j * n + x });
            }
        }
    }
    if best.value == f64::NEG_INFINITY {
        return Err(Error::EmptyRegion);
    }
    let j = best.center / n;
    let x = best.center % n;
    let mut argmax_center = vec![spec.time(j)];
    argmax_center.extend_from_slice(&spec.spatial.point(x)[..spec.spatial.d]);
    Ok(NormResult {
        norm_id: if params.homogeneous { "parabolic_morrey_homogeneous" } else { "parabolic_morrey" }.into(),
        params: serde_json::json!({ "p": p, "q": q, "beta": params.beta, "homogeneous": params.homogeneous }),
        value: best.value,
        argmax_center,
        argmax_radius: radii[best.radius_index],
        cap_limited: params.homogeneous && best.radius_index + 1 == radii.len(),
    })
}

/// Component norms of `u` in `E^{1,2}_{p,q,β}`; the norm is their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E12Norm {
    pub u: f64,
    pub du: Vec<f64>,
    /// Row-major `d × d`.
    pub d2u: Vec<f64>,
    pub dt_u: f64,
    pub total: f64,
}

pub fn e12_norm(u: &SpaceTimeFunction, params: &ParabolicMorreyParams) -> Result<E12Norm> {
    let norm = |g: &SpaceTimeFunction| parabolic_morrey_norm(g, params).map(|r| r.value);
    let d = u.spec.spatial.d;
    let slices = u.slices();
    let grads = slices.iter().map(gradient).collect::<Result<Vec<_>>>()?;
    let hess = slices.iter().map(hessian).collect::<Result<Vec<_>>>()?;
    let nu = norm(u)?;
    let du = (0..d)
        .map(|a| {
            let comp: Vec<GridFunction> = grads.iter().map(|g| g[a].clone()).collect();
            norm(&SpaceTimeFunction::from_slices(u.spec, &comp)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut d2u = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            if b < a {
                let v = d2u[b * d + a];
                d2u.push(v);
                continue;
            }
            let comp: Vec<GridFunction> = hess.iter().map(|h| h[a][b].clone()).collect();
            d2u.push(norm(&SpaceTimeFunction::from_slices(u.spec, &comp)?)?);
        }
    }
    let dt_u = norm(&time_derivative(u)?.derivative)?;
    let total = nu + du.iter().sum::<f64>() + d2u.iter().sum::<f64>() + dt_u;
    Ok(E12Norm { u: nu, du, d2u, dt_u, total })
}

/// Anchor of a parabolic maximal function: time index and spatial node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceTimeNode {
    pub time: usize,
    pub node: usize,
}

/// `max_ρ ρ^β ⨍_{C_ρ(at)} |f|` with cylinders intersected with the slab.
pub fn parabolic_fractional_maximal(
    f: &SpaceTimeFunction,
    beta: f64,
    radii: &RadiusSet,
    at: SpaceTimeNode,
) -> Result<f64> {
    let d = f.spec.spatial.d as f64;
    if !(beta > 0.0 && beta <= d + 2.0) {
        return Err(Error::InvalidParams(format!("beta = {beta} outside (0, d + 2]")));
    }
    let centre = f.spec.spatial.point(at.node);
    let t = f.spec.time(at.time);
    let mut best = 0.0f64;
    for &r in &radii.radii {
        let cyl = Cylinder { t, center: centre, radius: r };
        let times = cylinder_times(&f.spec, &cyl);
        let (total, nodes) = region_nodes(&f.spec.spatial, &Region::Ball { center: centre, radius: r });
        if times.is_empty() || total == 0 {
            continue;
        }
        let s: f64 = times
            .iter()
            .map(|&j| {
                let sl = f.slice_values(j);
                nodes.iter().map(|&i| sl[i].abs()).sum::<f64>()
            })
            .sum();
        let mean = s / (total * times.len()) as f64;
        best = best.max(r.powf(beta) * mean);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu: f64,
}

impl TraceParams {
    pub fn kappa(&self, d: usize) -> f64 {
        let d = d as f64;
        self.gamma + d / self.p + 2.0 / self.q - d / self.r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceValidity {
    pub valid: bool,
    pub kappa: f64,
    /// Power of ε multiplying the lower-order term, `−μ/(2 − μ)`.
    pub exponent: f64,
    pub violated: Option<String>,
}

/// Checks `2 − γ < β ≤ d/p + 2/q < 2 − γ + d/r`, `κ ≤ μ < 2` and `r ≥ p`.
pub fn validate_trace_params(d: usize, tp: &TraceParams) -> TraceValidity {
    let df = d as f64;
    let kappa = tp.kappa(d);
    let mid = df / tp.p + 2.0 / tp.q;
    let clauses: [(&str, bool); 8] = [
        ("gamma in {0, 1}", tp.gamma == 0.0 || tp.gamma == 1.0),
        ("p > 1 and q > 1", tp.p > 1.0 && tp.q > 1.0),
        ("r >= p", tp.r >= tp.p),
        ("lower window", 2.0 - tp.gamma < tp.beta),
        ("middle window", tp.beta <= mid),
        ("upper window", mid < 2.0 - tp.gamma + df / tp.r),
        ("kappa <= mu", kappa <= tp.mu),
        ("mu < 2", tp.mu < 2.0),
    ];
    let violated = clauses.iter().find(|(_, ok)| !ok).map(|(name, _)| name.to_string());
    TraceValidity {
        valid: violated.is_none(),
        kappa,
        exponent: -tp.mu / (2.0 - tp.mu),
        violated,
    }
}

/// As [`validate_trace_params`], turning a violation into an error.
pub fn require_trace_params(d: usize, tp: &TraceParams) -> Result<TraceValidity> {
    let v = validate_trace_params(d, tp);
    match &v.violated {
        Some(clause) => Err(Error::TraceWindow { clause: clause.clone() }),
        None => Ok(v),
    }
}
