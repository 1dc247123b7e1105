mod common;

#[test]
fn representation_identity() {
    let coarse = common::representation_error(33, 64);
    let fine = common::representation_error(65, 128);
    println!("coarse {coarse:e} fine {fine:e}");
    assert!(coarse <= 5e-2);
    assert!(fine < coarse);
}

use morreylab::grid::{BallStencil, MAX_DIM};
use morreylab::heat::{kernel_norm, kernel_norm_exponent};
use morreylab::morrey::{elliptic_morrey_norm, validate_trace_params, EllipticMorreyParams, TraceParams};
use morreylab::singular::{
    ball_averages, double_average, riesz_potential, sharp_function, Extension, RieszParams,
};
use morreylab::{CapMode, GridFunction, GridSpec, RadiusSet};

fn gaussian(spec: GridSpec, sigma: f64) -> GridFunction {
    let d = spec.d;
    GridFunction::sample(spec, |p| {
        let r2: f64 = p[..d].iter().map(|x| x * x).sum();
        if r2 < 1.0 {
            (-r2 / (2.0 * sigma * sigma)).exp()
        } else {
            0.0
        }
    })
    .unwrap()
}

fn offsets(spec: &GridSpec, a: usize, b: usize) -> (f64, [i64; MAX_DIM]) {
    let (ma, mb) = (spec.multi(a), spec.multi(b));
    let o = [0, 1, 2].map(|k| ma[k] as i64 - mb[k] as i64);
    let dist = (o.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt() * spec.h();
    (dist, o)
}

// Brute-force lattice sum of |x − y|^{α−d} away from the diagonal.
#[test]
fn riesz_off_diagonal_sum() {
    let spec = GridSpec::new(2, 1.0, 9).unwrap();
    let f = gaussian(spec, 0.4);
    let alpha = 1.0;
    let fast = riesz_potential(&f, &RieszParams::new(2, alpha).unwrap()).unwrap();
    let vol = spec.cell_volume();
    for i in [0, 17, 40, 80] {
        let mut s = 0.0;
        let mut diag = 0.0;
        for j in 0..spec.len() {
            if i == j {
                diag = f.values[j];
                continue;
            }
            let (r, _) = offsets(&spec, i, j);
            s += f.values[j] * r.powf(alpha - 2.0) * vol;
        }
        // the remaining diagonal term is f(x) times a positive cell weight
        let cell = (fast.values[i] - s) / (diag * vol);
        assert!(diag == 0.0 || cell > 0.0, "node {i}: cell weight {cell}");
        if diag == 0.0 {
            assert!((fast.values[i] - s).abs() <= 1e-12 * s.abs().max(1.0));
        }
    }
}

#[test]
fn ball_averages_brute_force() {
    let spec = GridSpec::new(3, 1.0, 11).unwrap();
    let f = gaussian(spec, 0.5);
    let radii = [0.2, 0.45];
    let avgs = ball_averages(&spec, &f.values, &radii);
    for (ri, &r) in radii.iter().enumerate() {
        let count = BallStencil::new(3, spec.h(), r).count() as f64;
        for i in (0..spec.len()).step_by(37) {
            let s: f64 = (0..spec.len())
                .filter(|&j| offsets(&spec, i, j).0 < r * (1.0 - 1e-12))
                .map(|j| f.values[j])
                .sum();
            assert!((avgs[ri][i] - s / count).abs() < 1e-12, "node {i}, r {r}");
        }
    }
}

#[test]
fn double_average_pairs() {
    let v: [f64; 5] = [3.0, -1.0, 0.5, 0.5, 7.25];
    let k = v.len() as f64;
    let pairs: f64 = v.iter().flat_map(|a| v.iter().map(move |b| (a - b).abs())).sum();
    assert!((double_average(&v) - pairs / (k * k)).abs() < 1e-14);
}

#[test]
fn sharp_function_exhaustive_pairs() {
    let spec = GridSpec::new(2, 1.0, 13).unwrap();
    let f = gaussian(spec, 0.3);
    let radii = RadiusSet::new(vec![0.2, 0.35], CapMode::Homogeneous { rho_max: 0.35 }).unwrap();
    let sharp = sharp_function(&f, &radii, usize::MAX, Extension::Zero).unwrap();
    for i in (0..spec.len()).step_by(11) {
        let mut best = 0.0f64;
        for &r in &radii.radii {
            // virtual zeros outside the box
            let st = BallStencil::new(2, spec.h(), r);
            let m = spec.multi(i);
            let vals: Vec<f64> = st
                .offsets
                .iter()
                .map(|o| {
                    let k = [m[0] as i64 + o[0], m[1] as i64 + o[1], 0];
                    spec.flat_checked(&k).map_or(0.0, |j| f.values[j])
                })
                .collect();
            let n = vals.len() as f64;
            let s: f64 = vals.iter().flat_map(|a| vals.iter().map(move |b| (a - b).abs())).sum();
            best = best.max(s / (n * n));
        }
        assert!((sharp.values[i] - best).abs() < 1e-12, "node {i}");
    }
}

#[test]
fn morrey_norm_brute_force() {
    let spec = GridSpec::new(2, 1.0, 15).unwrap();
    let f = gaussian(spec, 0.35);
    let (q, beta) = (2.5, 1.0);
    let params = EllipticMorreyParams::homogeneous(&spec, q, beta, Some(0.5)).unwrap();
    let norm = elliptic_morrey_norm(&f, &params).unwrap();
    let mut best = 0.0f64;
    for &r in &params.radii.radii {
        let count = BallStencil::new(2, spec.h(), r).count() as f64;
        for i in 0..spec.len() {
            let s: f64 = (0..spec.len())
                .filter(|&j| offsets(&spec, i, j).0 < r * (1.0 - 1e-12))
                .map(|j| f.values[j].abs().powf(q))
                .sum();
            best = best.max(r.powf(beta) * (s / count).powf(1.0 / q));
        }
    }
    assert!((norm.value - best).abs() < 1e-10 * best);
}

// ‖P_γ(t)‖_{L_s}^s = t^{-s(d+γ)/2} (8πt/s)^{d/2}: Gaussian integral.
#[test]
fn kernel_norm_gaussian_integral() {
    for (d, gamma, s, t) in [(2usize, 0.0f64, 1.0f64, 0.3f64), (3, 1.0, 2.0, 0.05), (2, 1.0, 1.5, 2.0)] {
        let exact = (t.powf(-s * (d as f64 + gamma) / 2.0) * (8.0 * std::f64::consts::PI * t / s).powf(d as f64 / 2.0))
            .powf(1.0 / s);
        let got = kernel_norm(d, gamma, s, t).unwrap();
        assert!((got / exact - 1.0).abs() < 1e-9, "{d} {gamma} {s} {t}: {got} vs {exact}");
    }
}

#[test]
fn kernel_exponent_young_relation() {
    let ts: Vec<f64> = (0..9).map(|k| 10f64.powf(-3.0 + 0.5 * k as f64)).collect();
    for (d, gamma, p, r) in [(2usize, 0.0, 2.0, 4.0), (3, 1.0, 1.5, 3.0), (2, 1.0, 2.0, 2.0)] {
        let s = 1.0 / (1.0 + 1.0 / r - 1.0 / p);
        let alpha = -gamma / 2.0 + 0.5 * d as f64 * (1.0 / r - 1.0 / p);
        let got = kernel_norm_exponent(d, gamma, s, &ts).unwrap();
        assert!((got - alpha).abs() < 1e-3, "{got} vs {alpha}");
    }
}

#[test]
fn remark_exponent_arithmetic() {
    for q in [3.0, 4.0, 6.0] {
        // r = p, γ = 1 and μ = κ = 1 + 2/q
        let mut tp = TraceParams { p: 2.0, q, r: 2.0, beta: 1.0 + 1.0 / q, gamma: 1.0, mu: 0.0 };
        tp.mu = tp.kappa(2);
        let v = validate_trace_params(2, &tp);
        assert!(v.valid, "{:?}", v.violated);
        assert!((v.exponent + (q + 2.0) / (q - 2.0)).abs() < 1e-12);
    }
}
