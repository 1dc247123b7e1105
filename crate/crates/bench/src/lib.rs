//! Fixtures shared by the operator benchmarks.

use morreylab::{GridFunction, GridSpec};

/// Compactly supported Gaussian bump on `[-2, 2]^d` with `n` nodes per axis.
pub fn gaussian_fixture(d: usize, n: usize) -> GridFunction {
    let spec = GridSpec::new(d, 2.0, n).expect("valid fixture grid");
    GridFunction::sample(spec, |p| {
        let r2: f64 = p[..d].iter().map(|x| x * x).sum();
        if r2 < 1.0 {
            (-4.0 * r2).exp()
        } else {
            0.0
        }
    })
    .expect("finite fixture")
}
