use morreylab::harness::corpus::{build_corpus, CaseGrid, CorpusKind};
use morreylab::harness::make_case;
use morreylab::harness::ratios::{ratio_adams, ratio_hardy, ratio_sharp_maximal, ratio_weighted, ratio_weighted_truncated};
use morreylab::morrey::{elliptic_morrey_norm, validate_trace_params, EllipticMorreyParams, TraceParams};
use morreylab::singular::{double_average, mean_abs_deviation, riesz_potential, sample_power, RieszParams};
use morreylab::suite::{parse_config, SuiteConfig};
use morreylab::{lp_norm, GridFunction, GridSpec, RadiusSet};
use proptest::prelude::*;

fn blob(spec: GridSpec, sigma: f64, shift: f64) -> GridFunction {
    let d = spec.d;
    GridFunction::sample(spec, |p| {
        let r2: f64 = p[..d].iter().enumerate().map(|(i, x)| (x - if i == 0 { shift } else { 0.0 }).powi(2)).sum();
        if r2 < 0.64 {
            (-r2 / (2.0 * sigma * sigma)).exp() * (1.0 - r2 / 0.64).powi(3)
        } else {
            0.0
        }
    })
    .unwrap()
}

const SCALARS: [f64; 3] = [1.0 / 3.0, 1.0, 7.0];

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ratios_ignore_positive_scalars(sigma in 0.15f64..0.4, shift in -0.2f64..0.2, ci in 0usize..3, cj in 0usize..3) {
        let spec = GridSpec::new(3, 2.0, 17).unwrap();
        let f = blob(spec, sigma, shift);
        let b = sample_power(spec, 1.0, 1.0).unwrap();
        let (c, c2) = (SCALARS[ci], SCALARS[cj]);
        let (bs, fs) = (b.scaled(c), f.scaled(c2));
        let pairs = [
            (ratio_adams(&b, &f, 2.0, 2.5, 1.0).unwrap().value(), ratio_adams(&bs, &fs, 2.0, 2.5, 1.0).unwrap().value()),
            (ratio_weighted(&b, &f, 2.0, 2.5, false).unwrap().value(), ratio_weighted(&bs, &fs, 2.0, 2.5, false).unwrap().value()),
            (ratio_weighted(&b, &f, 2.0, 2.5, true).unwrap().value(), ratio_weighted(&bs, &fs, 2.0, 2.5, true).unwrap().value()),
            (ratio_weighted_truncated(&b, &f, 2.0, 2.5, 0.5).unwrap().value(), ratio_weighted_truncated(&bs, &fs, 2.0, 2.5, 0.5).unwrap().value()),
            (ratio_hardy(&f, 2.0).unwrap().value(), ratio_hardy(&fs, 2.0).unwrap().value()),
        ];
        for (a, s) in pairs {
            prop_assert!(close(a, s, 1e-12), "{a} vs {s}");
        }
    }

    #[test]
    fn sharp_ratio_ignores_positive_scalars(sigma in 0.15f64..0.4, ci in 0usize..3) {
        let spec = GridSpec::new(2, 2.0, 33).unwrap();
        let g = blob(spec, sigma, 0.0);
        let radii = RadiusSet::homogeneous(&spec, 0.5).unwrap();
        let a = ratio_sharp_maximal(&g, 1.0, &radii).unwrap().value();
        let s = ratio_sharp_maximal(&g.scaled(SCALARS[ci]), 1.0, &radii).unwrap().value();
        prop_assert!(close(a, s, 1e-12), "{a} vs {s}");
    }

    // P_α[f(λ·)](x) = λ^{-α} P_α f(λx) on matched grids
    #[test]
    fn riesz_dilation_on_matched_grids(sigma in 0.15f64..0.35, k in 1i32..3, alpha in 0.5f64..1.5) {
        let lambda = f64::powi(2.0, k);
        let spec = GridSpec::new(3, 2.0, 17).unwrap();
        let f = blob(spec, sigma, 0.0);
        let fl = GridFunction::new(spec.dilated(lambda).unwrap(), f.values.clone()).unwrap();
        let p = riesz_potential(&f, &RieszParams::new(3, alpha).unwrap()).unwrap();
        let pl = riesz_potential(&fl, &RieszParams::new(3, alpha).unwrap()).unwrap();
        let scale = lambda.powf(-alpha);
        let err = p.values.iter().zip(&pl.values).map(|(a, b)| (a * scale - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 0.02 * p.max_abs() * scale);
    }

    // ‖f(λ·)‖_{Ė_{q,β}} = λ^{-β}‖f‖_{Ė_{q,β}}
    #[test]
    fn morrey_dilation_on_matched_grids(sigma in 0.15f64..0.35, k in 1i32..3, q in 1.5f64..4.0) {
        let lambda = f64::powi(2.0, k);
        let beta = 1.0;
        let spec = GridSpec::new(2, 2.0, 33).unwrap();
        let f = blob(spec, sigma, 0.1);
        let sl = spec.dilated(lambda).unwrap();
        let fl = GridFunction::new(sl, f.values.clone()).unwrap();
        let n = elliptic_morrey_norm(&f, &EllipticMorreyParams::homogeneous(&spec, q, beta, None).unwrap()).unwrap().value;
        let nl = elliptic_morrey_norm(&fl, &EllipticMorreyParams::homogeneous(&sl, q, beta, None).unwrap()).unwrap().value;
        prop_assert!(close(nl, n / lambda, 0.02), "{nl} vs {}", n / lambda);
    }

    #[test]
    fn lp_norm_is_homogeneous(sigma in 0.15f64..0.4, c in 0.01f64..100.0, p in 1.0f64..6.0) {
        let spec = GridSpec::new(2, 1.0, 17).unwrap();
        let f = blob(spec, sigma, 0.0);
        let a = lp_norm(&f.scaled(c), p, None).unwrap();
        let b = c * lp_norm(&f, p, None).unwrap();
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn double_average_brackets_mad(v in prop::collection::vec(-10.0f64..10.0, 1..60)) {
        let mad = mean_abs_deviation(&v);
        let da = double_average(&v);
        prop_assert!(mad <= da * (1.0 + 1e-12) + 1e-12);
        prop_assert!(da <= 2.0 * mad * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn corpus_is_a_function_of_the_seed(seed in any::<u64>()) {
        let spec = GridSpec::new(2, 2.0, 17).unwrap();
        let kinds = [CorpusKind::Gaussian, CorpusKind::Bump, CorpusKind::IndicatorBall];
        let a = build_corpus(seed, &kinds, CaseGrid::Space(spec), 6).unwrap();
        let b = build_corpus(seed, &kinds, CaseGrid::Space(spec), 6).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn trace_exponent_formula(mu in 0.05f64..1.95) {
        let tp = TraceParams { p: 2.0, q: 4.0, r: 2.0, beta: 1.25, gamma: 1.0, mu };
        let v = validate_trace_params(2, &tp);
        prop_assert!(close(v.exponent, -mu / (2.0 - mu), 1e-14));
        prop_assert_eq!(v.valid, mu >= v.kappa);
    }

    #[test]
    fn exclusion_only_for_bad_rhs(lhs in 0.0f64..1e6, rhs in -1.0f64..1.0) {
        let o = make_case("c", 0, lhs, rhs);
        prop_assert_eq!(o.is_err(), rhs <= 0.0);
    }

    #[test]
    fn config_echo_round_trips(seed in any::<u64>(), scales in 2usize..5, cases in 1usize..40) {
        let cfg = SuiteConfig { seed, scale_count: scales, elliptic_cases: cases, ..SuiteConfig::default() };
        let back = parse_config(&cfg.echo()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }
}
