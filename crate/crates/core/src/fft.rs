//! Zero-padded linear convolution on grids via n-d FFTs.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::{BallStencil, GridSpec, MAX_DIM};

/// Smallest integer `≥ n` whose only prime factors are 2, 3 and 5.
pub fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// A cyclic box large enough to hold the linear convolution of grid data
/// with a kernel of the given reach.
#[derive(Clone)]
pub struct PaddedBox {
    pub d: usize,
    pub size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl PaddedBox {
    pub fn new(d: usize, n: usize, reach: usize) -> Self {
        Self::with_size(d, smooth_size(n + reach))
    }

    pub fn with_size(d: usize, size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            d,
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of a (possibly negative) offset, wrapped cyclically.
    pub fn wrap(&self, k: &[i64; MAX_DIM]) -> usize {
        let s = self.size as i64;
        k[..self.d].iter().fold(0usize, |acc, &i| acc * self.size + i.rem_euclid(s) as usize)
    }

    /// Embeds grid values at the low corner of the box.
    pub fn embed(&self, spec: &GridSpec, values: &[f64]) -> Vec<Complex<f64>> {
        let mut buf = vec![Complex::new(0.0, 0.0); self.len()];
        for (i, &v) in values.iter().enumerate() {
            if v != 0.0 {
                let m = spec.multi(i);
                let k = [m[0] as i64, m[1] as i64, m[2] as i64];
                buf[self.wrap(&k)] = Complex::new(v, 0.0);
            }
        }
        buf
    }

    /// Reads the grid window back out of a box buffer (real parts).
    pub fn extract(&self, spec: &GridSpec, buf: &[Complex<f64>]) -> Vec<f64> {
        (0..spec.len())
            .map(|i| {
                let m = spec.multi(i);
                buf[self.wrap(&[m[0] as i64, m[1] as i64, m[2] as i64])].re
            })
            .collect()
    }

    /// Kernel values `K(k)` for every offset with `|k_a| ≤ reach`.
    pub fn kernel<F>(&self, reach: usize, k: F) -> Vec<Complex<f64>>
    where
        F: Fn(&[i64; MAX_DIM]) -> f64,
    {
        let mut buf = vec![Complex::new(0.0, 0.0); self.len()];
        let r = reach as i64;
        let kz = if self.d == 3 { r } else { 0 };
        for i in -r..=r {
            for j in -r..=r {
                for l in -kz..=kz {
                    let o = [i, j, l];
                    let v = k(&o);
                    if v != 0.0 {
                        buf[self.wrap(&o)] = Complex::new(v, 0.0);
                    }
                }
            }
        }
        buf
    }

    pub fn forward(&self, buf: &mut [Complex<f64>]) {
        self.transform(buf, &self.forward);
    }

    /// Inverse transform including the `1/N^d` normalization.
    pub fn inverse(&self, buf: &mut [Complex<f64>]) {
        self.transform(buf, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        buf.par_iter_mut().for_each(|z| *z *= scale);
    }

    fn transform(&self, buf: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let s = self.size;
        // last axis is contiguous
        buf.par_chunks_mut(s).for_each(|line| plan.process(line));
        for axis in (0..self.d - 1).rev() {
            let stride = s.pow((self.d - 1 - axis) as u32);
            let block = stride * s;
            buf.par_chunks_mut(block).for_each(|blk| {
                let mut line = vec![Complex::new(0.0, 0.0); s];
                for off in 0..stride {
                    for (k, z) in line.iter_mut().enumerate() {
                        *z = blk[off + k * stride];
                    }
                    plan.process(&mut line);
                    for (k, z) in line.iter().enumerate() {
                        blk[off + k * stride] = *z;
                    }
                }
            });
        }
    }

    /// Pointwise product `a ← a·b`.
    pub fn multiply(a: &mut [Complex<f64>], b: &[Complex<f64>]) {
        a.par_iter_mut().zip(b.par_iter()).for_each(|(x, y)| *x *= *y);
    }
}

/// Linear convolution `out(x_i) = Σ_j f_j K(i − j)` at grid nodes, where the
/// kernel is nonzero only for offsets with `|k_a| ≤ reach`.
pub fn convolve<F>(spec: &GridSpec, values: &[f64], reach: usize, kernel: F) -> Vec<f64>
where
    F: Fn(&[i64; MAX_DIM]) -> f64,
{
    let reach = reach.min(spec.n - 1);
    let pb = PaddedBox::new(spec.d, spec.n, reach);
    let mut a = pb.embed(spec, values);
    let mut k = pb.kernel(reach, kernel);
    pb.forward(&mut a);
    pb.forward(&mut k);
    PaddedBox::multiply(&mut a, &k);
    pb.inverse(&mut a);
    pb.extract(spec, &a)
}

/// Sums of `values` over the discrete ball of each radius around every node.
/// Lattice points outside the grid contribute zero.
pub fn ball_sums(spec: &GridSpec, values: &[f64], radii: &[f64]) -> Vec<Vec<f64>> {
    let stencils: Vec<BallStencil> = radii.iter().map(|&r| BallStencil::new(spec.d, spec.h(), r)).collect();
    let reach = stencils.iter().map(|s| s.reach).max().unwrap_or(0).min(spec.n - 1);
    let pb = PaddedBox::new(spec.d, spec.n, reach);
    let mut fa = pb.embed(spec, values);
    pb.forward(&mut fa);
    stencils
        .iter()
        .map(|st| {
            let mut k = vec![Complex::new(0.0, 0.0); pb.len()];
            for o in &st.offsets {
                k[pb.wrap(o)] = Complex::new(1.0, 0.0);
            }
            pb.forward(&mut k);
            PaddedBox::multiply(&mut k, &fa);
            pb.inverse(&mut k);
            pb.extract(spec, &k)
        })
        .collect()
}
