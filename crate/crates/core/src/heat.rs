//! Heat-kernel machinery: the kernels `P_γ`, their `L_s` power law, the
//! representation operator `R`, parabolic mollification, traces at `t = 0`,
//! heat extensions and the tail potential outside a cylinder.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{smooth_size, PaddedBox};
use crate::grid::{
    gradient, lp_norm, GridFunction, GridSpec, SpaceTimeFunction, SpaceTimeGridSpec, MAX_DIM,
};
use crate::profiles::unit_sphere_area;

/// `P_γ(t, x) = t^{-(d+γ)/2} e^{-|x|²/(8t)}`.
pub fn heat_kernel(d: usize, gamma: f64, t: f64, x: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParams(format!("heat kernel needs t > 0, got {t}")));
    }
    let r2: f64 = x[..d].iter().map(|v| v * v).sum();
    Ok(t.powf(-(d as f64 + gamma) / 2.0) * (-r2 / (8.0 * t)).exp())
}

/// Closed-form exponent of `t ↦ ‖P_γ(t, ·)‖_{L_s}`: `−γ/2 − (d/2)(1 − 1/s)`.
pub fn kernel_norm_closed_exponent(d: usize, gamma: f64, s: f64) -> f64 {
    -gamma / 2.0 - 0.5 * d as f64 * (1.0 - 1.0 / s)
}

/// `‖P_γ(t, ·)‖_{L_s}` by composite Simpson quadrature in the radius.
pub fn kernel_norm(d: usize, gamma: f64, s: f64, t: f64) -> Result<f64> {
    if s < 1.0 || gamma < 0.0 {
        return Err(Error::InvalidParams(format!("need s >= 1 and gamma >= 0, got s = {s}, gamma = {gamma}")));
    }
    let sigma = unit_sphere_area(d);
    let integrand = |r: f64| r.powi(d as i32 - 1) * heat_kernel(d, gamma, t, &[r, 0.0, 0.0]).unwrap().powf(s);
    let simpson = |a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        let mut acc = integrand(a) + integrand(b);
        for i in 1..n {
            acc += integrand(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    // e^{-s r²/(8t)} falls below 1e-30 once r²·s/(8t) > 69
    let r_max = (8.0 * 70.0 * t / s).sqrt();
    let body = simpson(0.0, r_max, 4000);
    let tail = simpson(r_max, 2.0 * r_max, 400);
    if !(body > 0.0) || tail > 1e-12 * body {
        return Err(Error::QuadratureTail(tail / body));
    }
    Ok((sigma * body).powf(1.0 / s))
}

/// Least-squares slope of `log ‖P_γ(t, ·)‖_{L_s}` against `log t`.
pub fn kernel_norm_exponent(d: usize, gamma: f64, s: f64, t_grid: &[f64]) -> Result<f64> {
    let (lo, hi) = t_grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if t_grid.len() < 2 || !(lo > 0.0) || hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidParams("time grid must span at least two decades".into()));
    }
    let pts = t_grid
        .iter()
        .map(|&t| Ok((t.ln(), kernel_norm(d, gamma, s, t)?.ln())))
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_slope(&pts))
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// `sup_{z ≥ 0} z e^{-z²/8}` sampled on `[0, z_max]`; the exact value is `√(4/e)`.
pub fn kernel_domination_constant(z_max: f64, samples: usize) -> f64 {
    (0..=samples)
        .map(|i| {
            let z = z_max * i as f64 / samples as f64;
            z * (-z * z / 8.0).exp()
        })
        .fold(0.0, f64::max)
}

/// Squared angular frequencies of a cyclic box with spacing `h`.
fn xi_squared(pb: &PaddedBox, h: f64) -> Vec<f64> {
    let size = pb.size;
    let k1: Vec<f64> = (0..size)
        .map(|k| {
            let kk = if k <= size / 2 { k as f64 } else { k as f64 - size as f64 };
            let w = 2.0 * std::f64::consts::PI * kk / (size as f64 * h);
            w * w
        })
        .collect();
    (0..pb.len())
        .map(|i| {
            let mut rest = i;
            let mut s = 0.0;
            for _ in 0..pb.d {
                s += k1[rest % size];
                rest /= size;
            }
            s
        })
        .collect()
}

/// Box wide enough that a Gaussian of variance `2·t_max` per axis leaves
/// it with at most `e^{-8}` of its mass.
fn heat_box(spec: &GridSpec, t_max: f64) -> PaddedBox {
    let pad = (4.0 * (2.0 * t_max).sqrt() / spec.h()).ceil() as usize;
    let pad = pad.clamp(1, 2 * spec.n);
    PaddedBox::with_size(spec.d, smooth_size(spec.n + pad))
}

/// `u(t) = e^{(t − from)Δ} g` on every node of `slab`, spectrally on a
/// zero-padded box.
pub fn heat_extension(g: &GridFunction, from: f64, slab: &SpaceTimeGridSpec) -> Result<SpaceTimeFunction> {
    if slab.spatial != g.spec {
        return Err(Error::InvalidGrid("slab grid differs from the data grid".into()));
    }
    if slab.t0 < from - 1e-12 {
        return Err(Error::InvalidParams(format!("slab starts at {} before the initial time {from}", slab.t0)));
    }
    let spec = g.spec;
    let pb = heat_box(&spec, slab.t1 - from);
    let xi2 = xi_squared(&pb, spec.h());
    let mut ghat = pb.embed(&spec, &g.values);
    pb.forward(&mut ghat);
    let slices: Vec<Vec<f64>> = (0..slab.m)
        .into_par_iter()
        .map(|j| {
            let s = slab.time(j) - from;
            let mut buf: Vec<Complex<f64>> = ghat.iter().zip(&xi2).map(|(z, k)| z * (-s * k).exp()).collect();
            pb.inverse(&mut buf);
            pb.extract(&spec, &buf)
        })
        .collect();
    SpaceTimeFunction::new(*slab, slices.concat())
}

/// Log-spaced quadrature in `s` for [`representation_r`]: nodes and
/// trapezoid weights in `log s`, starting at `s_min`.
fn log_nodes(s_min: f64, s_max: f64, per_decade: usize) -> Vec<(f64, f64)> {
    let decades = (s_max / s_min).log10();
    let count = (per_decade as f64 * decades).ceil().max(1.0) as usize;
    let dl = (s_max / s_min).ln() / count as f64;
    (0..=count)
        .map(|i| {
            let s = s_min * (i as f64 * dl).exp();
            let w = if i == 0 || i == count { 0.5 } else { 1.0 };
            (s, w * dl * s)
        })
        .collect()
}

/// Nodes per decade of the `s` quadrature in [`representation_r`].
pub const R_NODES_PER_DECADE: usize = 64;

/// `Rf(t, x) = N(d) ∫_0^∞ s^{-d/2} ∫ e^{-|x-y|²/(4s)} f(t + s, y) dy ds`
/// with `N(d) = (4π)^{-d/2}`, so that `−(∂_t + Δ)Rf = f`.
///
/// The `s` integral uses log-spaced nodes from `τ/4` to the slab length,
/// linear interpolation of `f` in time, and the trapezoid rule on
/// `[0, τ/4]`. Each Gaussian convolution is applied as its Fourier
/// multiplier `e^{-s|ξ|²}`.
pub fn representation_r(f: &SpaceTimeFunction) -> Result<SpaceTimeFunction> {
    let st = f.spec;
    let m = st.m;
    let n = st.spatial.len();
    if f.slice_values(m - 1).iter().any(|v| *v != 0.0) {
        return Err(Error::SupportOutsideSlab("source is nonzero at the final time".into()));
    }
    if f.support_margin < 1 {
        return Err(Error::InsufficientMargin { have: f.support_margin, need: 1 });
    }
    let tau = st.tau();
    let length = st.t1 - st.t0;
    let pb = heat_box(&st.spatial, length);
    let xi2 = xi_squared(&pb, st.spatial.h());
    let len = pb.len();
    let fhat: Vec<Vec<Complex<f64>>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut b = pb.embed(&st.spatial, f.slice_values(j));
            pb.forward(&mut b);
            b
        })
        .collect();
    let s_min = tau / 4.0;
    let nodes = log_nodes(s_min, length, R_NODES_PER_DECADE);
    let mut acc: Vec<Vec<Complex<f64>>> = vec![vec![Complex::new(0.0, 0.0); len]; m];
    // interpolated source at fractional time index
    let at = |x: f64| -> Option<(usize, f64)> {
        if x >= (m - 1) as f64 {
            return None;
        }
        let k = x.floor() as usize;
        Some((k, x - k as f64))
    };
    let mut mult = vec![0.0; len];
    let mut steps: Vec<(f64, f64)> = vec![(0.0, 0.5 * s_min)];
    steps.push((s_min, 0.5 * s_min));
    steps.extend(nodes);
    for (s, w) in steps {
        mult.par_iter_mut().zip(&xi2).for_each(|(mu, k)| *mu = w * (-s * k).exp());
        let shift = s / tau;
        acc.par_iter_mut().enumerate().for_each(|(j, a)| {
            if let Some((k, th)) = at(j as f64 + shift) {
                let (f0, f1) = (&fhat[k], &fhat[k + 1]);
                for i in 0..len {
                    a[i] += mult[i] * (f0[i] * (1.0 - th) + f1[i] * th);
                }
            }
        });
    }
    let out: Vec<Vec<f64>> = acc
        .into_par_iter()
        .map(|mut a| {
            pb.inverse(&mut a);
            pb.extract(&st.spatial, &a)
        })
        .collect();
    debug_assert_eq!(out.len() * n, st.len());
    SpaceTimeFunction::new(st, out.concat())
}

/// Unnormalized parabolic bump `exp(−1/(1 − (t² + |x|⁴)))`.
pub fn mollifier_profile(t: f64, r: f64) -> f64 {
    let q = t * t + r.powi(4);
    if q >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - q)).exp()
    }
}

/// Sampled `ζ_ε` on a space-time grid, weights summing to one.
#[derive(Debug, Clone)]
pub struct MollifierStencil {
    pub epsilon: f64,
    /// `(time offset, spatial offset, weight)`.
    pub taps: Vec<(i64, [i64; MAX_DIM], f64)>,
    pub time_reach: usize,
    pub space_reach: usize,
    /// `Σ w |x_1|²` of the normalized weights.
    pub second_moment: f64,
}

impl MollifierStencil {
    pub fn new(spec: &SpaceTimeGridSpec, epsilon: f64) -> Result<Self> {
        let h = spec.spatial.h();
        let tau = spec.tau();
        let need = (2.0 * h).max(2.0 * tau.sqrt());
        if epsilon < need * (1.0 - 1e-12) {
            return Err(Error::Unresolved(format!("epsilon = {epsilon} below max(2h, 2√τ) = {need}")));
        }
        let d = spec.spatial.d;
        let kt = (epsilon * epsilon / tau).floor() as i64;
        let kx = (epsilon / h).floor() as i64;
        let kz = if d == 3 { kx } else { 0 };
        let mut taps = Vec::new();
        for a in -kt..=kt {
            let t = a as f64 * tau / (epsilon * epsilon);
            for i in -kx..=kx {
                for j in -kx..=kx {
                    for l in -kz..=kz {
                        let r = ((i * i + j * j + l * l) as f64).sqrt() * h / epsilon;
                        let w = mollifier_profile(t, r);
                        if w > 0.0 {
                            taps.push((a, [i, j, l], w));
                        }
                    }
                }
            }
        }
        let total: f64 = taps.iter().map(|t| t.2).sum();
        for t in taps.iter_mut() {
            t.2 /= total;
        }
        let second_moment = taps.iter().map(|t| t.2 * (t.1[0] as f64 * h).powi(2)).sum();
        Ok(Self {
            epsilon,
            time_reach: kt as usize,
            space_reach: kx as usize,
            taps,
            second_moment,
        })
    }
}

/// A mollified time slice with edge metadata.
#[derive(Debug, Clone)]
pub struct MollifiedSlice {
    pub slice: GridFunction,
    /// True when part of the stencil fell outside the slab and the remaining
    /// weights were renormalized.
    pub edge_renormalized: bool,
}

/// `u^{(ε)}(t_j, ·)`.
pub fn mollify_slice(u: &SpaceTimeFunction, stencil: &MollifierStencil, j: usize) -> Result<MollifiedSlice> {
    let spec = u.spec.spatial;
    let m = u.spec.m as i64;
    let mut kept = 0.0;
    let mut by_time: Vec<(usize, Vec<([i64; MAX_DIM], f64)>)> = Vec::new();
    for &(a, off, w) in &stencil.taps {
        let jj = j as i64 - a;
        if jj < 0 || jj >= m {
            continue;
        }
        kept += w;
        match by_time.iter_mut().find(|(t, _)| *t == jj as usize) {
            Some((_, v)) => v.push((off, w)),
            None => by_time.push((jj as usize, vec![(off, w)])),
        }
    }
    let edge_renormalized = (kept - 1.0).abs() > 1e-12;
    let out: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let mi = spec.multi(i);
            let mut s = 0.0;
            for (jj, taps) in &by_time {
                let sl = u.slice_values(*jj);
                for (o, w) in taps {
                    let k = [mi[0] as i64 - o[0], mi[1] as i64 - o[1], mi[2] as i64 - o[2]];
                    if let Some(f) = spec.flat_checked(&k) {
                        s += w * sl[f];
                    }
                }
            }
            s / kept
        })
        .collect();
    Ok(MollifiedSlice { slice: GridFunction::new(spec, out)?, edge_renormalized })
}

/// `u * ζ_ε` on every time node.
pub fn mollify(u: &SpaceTimeFunction, epsilon: f64) -> Result<(SpaceTimeFunction, Vec<usize>)> {
    let stencil = MollifierStencil::new(&u.spec, epsilon)?;
    let mut flagged = Vec::new();
    let mut slices = Vec::with_capacity(u.spec.m);
    for j in 0..u.spec.m {
        let ms = mollify_slice(u, &stencil, j)?;
        if ms.edge_renormalized {
            flagged.push(j);
        }
        slices.push(ms.slice);
    }
    Ok((SpaceTimeFunction::from_slices(u.spec, &slices)?, flagged))
}

/// Result of extracting `D^γ u(0, ·)`.
#[derive(Debug, Clone)]
pub struct TraceResult {
    pub epsilons: Vec<f64>,
    /// Trace at the smallest ε: one function for γ = 0, `d` for γ = 1.
    pub last: Vec<GridFunction>,
    /// Extrapolation of the last two iterates to ε = 0 using the stencils'
    /// spatial second moments.
    pub limit: Vec<GridFunction>,
    /// `‖T(ε_k) − T(ε_{k+1})‖_{L_r}` (Euclidean magnitude for γ = 1).
    pub increments: Vec<f64>,
    pub cauchy: bool,
}

/// Default dyadic ε sequence `{2^{-k}}` inside the resolution window, at
/// most `max_len` long and not wider than `eps_max`.
pub fn default_epsilons(spec: &SpaceTimeGridSpec, eps_max: f64, max_len: usize) -> Vec<f64> {
    let h = spec.spatial.h();
    let floor = (2.0 * h).max(2.0 * spec.tau().sqrt());
    let mut out: Vec<f64> = (2..40)
        .map(|k| 0.5f64.powi(k))
        .filter(|&e| e <= eps_max && e >= floor * (1.0 - 1e-12))
        .collect();
    if out.len() > max_len {
        out.drain(..out.len() - max_len);
    }
    out
}

fn trace_once(u: &SpaceTimeFunction, gamma: u8, eps: f64, j0: usize) -> Result<(Vec<GridFunction>, f64)> {
    let stencil = MollifierStencil::new(&u.spec, eps)?;
    let ms = mollify_slice(u, &stencil, j0)?;
    let out = match gamma {
        0 => vec![ms.slice],
        _ => gradient(&ms.slice)?,
    };
    Ok((out, stencil.second_moment))
}

/// `D^γ u^{(ε)}(0, ·)` along a decreasing ε sequence.
pub fn trace(u: &SpaceTimeFunction, gamma: u8, epsilons: &[f64], r: f64) -> Result<TraceResult> {
    if gamma > 1 {
        return Err(Error::InvalidParams("gamma must be 0 or 1".into()));
    }
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParams("epsilon sequence must be nonempty and decreasing".into()));
    }
    let j0 = u
        .spec
        .time_index(0.0)
        .filter(|&j| j > 0 && j + 1 < u.spec.m)
        .ok_or_else(|| Error::InvalidParams("t = 0 must be an interior time node".into()))?;
    let iterates = epsilons
        .iter()
        .map(|&e| trace_once(u, gamma, e, j0))
        .collect::<Result<Vec<_>>>()?;
    let magnitude_norm = |a: &[GridFunction], b: &[GridFunction]| -> Result<f64> {
        let spec = a[0].spec;
        let diff: Vec<f64> = (0..spec.len())
            .map(|i| a.iter().zip(b).map(|(x, y)| (x.values[i] - y.values[i]).powi(2)).sum::<f64>().sqrt())
            .collect();
        lp_norm(&GridFunction::new(spec, diff)?, r, None)
    };
    let increments = iterates
        .windows(2)
        .map(|w| magnitude_norm(&w[0].0, &w[1].0))
        .collect::<Result<Vec<_>>>()?;
    let cauchy = increments.windows(2).all(|w| w[1] <= w[0]);
    let (last, m_last) = iterates.last().cloned().unwrap();
    let limit = if iterates.len() >= 2 {
        let (prev, m_prev) = &iterates[iterates.len() - 2];
        let c = m_prev / (m_prev - m_last);
        last.iter()
            .zip(prev)
            .map(|(a, b)| {
                let v = a.values.iter().zip(&b.values).map(|(x, y)| c * x + (1.0 - c) * y).collect();
                GridFunction::new(a.spec, v)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        last.clone()
    };
    Ok(TraceResult { epsilons: epsilons.to_vec(), last, limit, increments, cauchy })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// Sub-nodes per time cell in [`parabolic_tail_potential`].
pub const TAIL_SUBNODES: usize = 8;

/// `∫∫_{s > 0} P_γ(s, y) f(s, y) 1_{(s, y) ∉ C_ρ} dy ds`, with `C_ρ = [0, ρ²) × B_ρ`.
///
/// Midpoint rule in space; in time, `f` is interpolated linearly across
/// each cell and the kernel is integrated with Gauss–Legendre sub-nodes.
pub fn parabolic_tail_potential(f: &SpaceTimeFunction, gamma: f64, rho: f64) -> Result<f64> {
    let spec = f.spec;
    let d = spec.spatial.d;
    if !(gamma >= 0.0 && gamma < d as f64 + 2.0) {
        return Err(Error::InvalidParams(format!("gamma = {gamma} outside [0, d + 2)")));
    }
    if let Some((index, &value)) = f.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::Negative { index, value });
    }
    let j0 = spec
        .time_index(0.0)
        .ok_or_else(|| Error::InvalidParams("t = 0 must be a time node".into()))?;
    let tau = spec.tau();
    let vol = spec.spatial.cell_volume();
    let n = spec.spatial.len();
    let pts: Vec<f64> = (0..n)
        .map(|i| spec.spatial.point(i)[..d].iter().map(|x| x * x).sum::<f64>())
        .collect();
    let gl = gauss_legendre(TAIL_SUBNODES);
    let rho2 = rho * rho;
    let cells: Vec<f64> = (j0..spec.m - 1)
        .into_par_iter()
        .map(|j| {
            let (f0, f1) = (f.slice_values(j), f.slice_values(j + 1));
            let ta = spec.time(j);
            let mut acc = 0.0;
            for &(x, w) in &gl {
                let th = 0.5 * (x + 1.0);
                let s = ta + th * tau;
                let amp = s.powf(-(d as f64 + gamma) / 2.0);
                let mut inner = 0.0;
                for i in 0..n {
                    if s < rho2 && pts[i] < rho2 {
                        continue;
                    }
                    let v = (1.0 - th) * f0[i] + th * f1[i];
                    if v != 0.0 {
                        inner += v * (-pts[i] / (8.0 * s)).exp();
                    }
                }
                acc += 0.5 * w * tau * amp * inner;
            }
            acc * vol
        })
        .collect();
    Ok(cells.iter().sum())
}

/// Parameters of a Gaussian closed form for tests and corpora:
/// `e^{tΔ} e^{-|x|²/(2σ²)} = (σ²/(σ² + 2t))^{d/2} e^{-|x|²/(2(σ² + 2t))}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFlow {
    pub variance: f64,
}

impl GaussianFlow {
    pub fn at(&self, d: usize, t: f64, r2: f64) -> f64 {
        let v = self.variance + 2.0 * t;
        (self.variance / v).powf(d as f64 / 2.0) * (-r2 / (2.0 * v)).exp()
    }
}
