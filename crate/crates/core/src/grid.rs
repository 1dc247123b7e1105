//! Uniform box grids, sampled functions, quadrature, finite differences and
//! ball/cylinder geometry.
//!
//! The box is `[-L, L]^d` with `n` nodes per axis (odd, so the origin is a
//! node). Values are stored row-major with axis order `x¹ … x^d` (and `t`
//! first for space-time functions). Lattice points outside the box are
//! treated as zeros: every function on the grid is understood as the
//! zero extension of its samples, which matches the compact-support
//! contract carried by `support_margin`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    #[serde(rename = "L")]
    pub half_extent: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(d: usize, half_extent: f64, n: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::InvalidGrid(format!("dimension {d} not in {{2, 3}}")));
        }
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be odd and at least 3")));
        }
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::InvalidGrid(format!("half extent {half_extent} must be positive")));
        }
        Ok(Self { d, half_extent, n })
    }

    /// Node spacing `2L/(n-1)`.
    pub fn h(&self) -> f64 {
        2.0 * self.half_extent / (self.n - 1) as f64
    }

    /// Volume of one cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node index `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.h()
    }

    /// Index of the node at the origin along each axis.
    pub fn center_index(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn origin(&self) -> usize {
        let c = self.center_index();
        self.flat(&[c; MAX_DIM])
    }

    /// Multi-index of a flat index; unused trailing axes are zero.
    pub fn multi(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        let mut rest = flat;
        for a in (0..self.d).rev() {
            out[a] = rest % self.n;
            rest /= self.n;
        }
        out
    }

    pub fn flat(&self, multi: &[usize; MAX_DIM]) -> usize {
        multi[..self.d].iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Flat index of a signed multi-index, `None` outside the grid.
    pub fn flat_checked(&self, multi: &[i64; MAX_DIM]) -> Option<usize> {
        let mut acc = 0usize;
        for &i in &multi[..self.d] {
            if i < 0 || i >= self.n as i64 {
                return None;
            }
            acc = acc * self.n + i as usize;
        }
        Some(acc)
    }

    pub fn point(&self, flat: usize) -> [f64; MAX_DIM] {
        let m = self.multi(flat);
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.d {
            p[a] = self.coord(m[a]);
        }
        p
    }

    /// Distance of a node from the nearest box face, in layers.
    pub fn layer(&self, flat: usize) -> usize {
        let m = self.multi(flat);
        m[..self.d].iter().map(|&i| i.min(self.n - 1 - i)).min().unwrap_or(0)
    }

    /// Same grid shape over `[-L/λ, L/λ]^d`.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        Self::new(self.d, self.half_extent / lambda, self.n)
    }
}

/// Integer offsets `k` with `|k|·h < ρ`: the discrete ball around a node.
#[derive(Debug, Clone)]
pub struct BallStencil {
    pub radius: f64,
    pub offsets: Vec<[i64; MAX_DIM]>,
    /// Largest |k_a| over the stencil.
    pub reach: usize,
}

impl BallStencil {
    pub fn new(d: usize, h: f64, radius: f64) -> Self {
        let reach = (radius / h).ceil() as i64;
        let r2 = (radius / h) * (radius / h);
        let mut offsets = Vec::new();
        let span = -reach..=reach;
        let zero = 0..=0;
        let ranges: [std::ops::RangeInclusive<i64>; MAX_DIM] = [
            span.clone(),
            span.clone(),
            if d == 3 { span.clone() } else { zero },
        ];
        for i in ranges[0].clone() {
            for j in ranges[1].clone() {
                for k in ranges[2].clone() {
                    let q = (i * i + j * j + k * k) as f64;
                    if q < r2 * (1.0 - 1e-12) {
                        offsets.push([i, j, k]);
                    }
                }
            }
        }
        let reach = offsets.iter().map(|o| o[0].unsigned_abs() as usize).max().unwrap_or(0);
        Self { radius, offsets, reach }
    }

    pub fn count(&self) -> usize {
        self.offsets.len()
    }
}

/// A region over which a normalized norm is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Ball { center: [f64; MAX_DIM], radius: f64 },
    Box { lo: [f64; MAX_DIM], hi: [f64; MAX_DIM] },
}

impl Region {
    pub fn ball_at_node(spec: &GridSpec, node: usize, radius: f64) -> Self {
        Region::Ball { center: spec.point(node), radius }
    }
}

/// Lattice points of a region: total count (including points outside the
/// box, which carry zero) and the in-box flat indices.
pub fn region_nodes(spec: &GridSpec, region: &Region) -> (usize, Vec<usize>) {
    let h = spec.h();
    let l = spec.half_extent;
    let (lo, hi) = match region {
        Region::Ball { center, radius } => {
            let mut lo = [0.0; MAX_DIM];
            let mut hi = [0.0; MAX_DIM];
            for a in 0..spec.d {
                lo[a] = center[a] - radius;
                hi[a] = center[a] + radius;
            }
            (lo, hi)
        }
        Region::Box { lo, hi } => (*lo, *hi),
    };
    let mut irange = [(0i64, 0i64); MAX_DIM];
    for a in 0..spec.d {
        let i0 = ((lo[a] + l) / h - 1e-9).ceil() as i64;
        let i1 = ((hi[a] + l) / h + 1e-9).floor() as i64;
        irange[a] = (i0, i1);
    }
    let inside = |m: &[i64; MAX_DIM]| -> bool {
        match region {
            Region::Ball { center, radius } => {
                let mut r2 = 0.0;
                for a in 0..spec.d {
                    let x = -l + m[a] as f64 * h - center[a];
                    r2 += x * x;
                }
                r2 < radius * radius * (1.0 - 1e-12)
            }
            Region::Box { lo, hi } => (0..spec.d).all(|a| {
                let x = -l + m[a] as f64 * h;
                x >= lo[a] - 1e-9 * h && x <= hi[a] + 1e-9 * h
            }),
        }
    };
    let mut total = 0;
    let mut nodes = Vec::new();
    let (k0, k1) = if spec.d == 3 { irange[2] } else { (0, 0) };
    for i in irange[0].0..=irange[0].1 {
        for j in irange[1].0..=irange[1].1 {
            for k in k0..=k1 {
                let m = [i, j, k];
                if inside(&m) {
                    total += 1;
                    if let Some(f) = spec.flat_checked(&m) {
                        nodes.push(f);
                    }
                }
            }
        }
    }
    (total, nodes)
}

/// Real samples on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    /// Number of outer layers that are exactly zero.
    pub support_margin: usize,
}

/// A node whose value is supplied by the caller rather than by the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularNode {
    pub index: usize,
    pub value: f64,
}

impl GridFunction {
    /// Wraps values, checking finiteness and detecting the zero margin.
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        let support_margin = detect_margin(&spec, &values);
        Ok(Self { spec, values, support_margin })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        let support_margin = spec.n.div_ceil(2);
        Self { values: vec![0.0; spec.len()], spec, support_margin }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self::new(spec, vec![c; spec.len()]).expect("finite constant")
    }

    /// Node-wise samples of `f`.
    pub fn sample<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64; MAX_DIM]) -> f64,
    {
        Self::sample_singular(spec, f, &[])
    }

    /// Samples of `f` with caller-declared singular nodes replaced by the
    /// supplied values.
    pub fn sample_singular<F>(spec: GridSpec, f: F, singular: &[SingularNode]) -> Result<Self>
    where
        F: Fn(&[f64; MAX_DIM]) -> f64,
    {
        let mut values: Vec<f64> = (0..spec.len()).map(|i| f(&spec.point(i))).collect();
        for s in singular {
            values[s.index] = s.value;
        }
        Self::new(spec, values)
    }

    /// Zeroes the outer `m` layers.
    pub fn truncate_margin(mut self, m: usize) -> Self {
        for i in 0..self.values.len() {
            if self.spec.layer(i) < m {
                self.values[i] = 0.0;
            }
        }
        self.support_margin = detect_margin(&self.spec, &self.values);
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v).expect("finite scaling")
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs).expect("finite")
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::InvalidGrid("grid mismatch in product".into()));
        }
        Self::new(
            self.spec,
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        )
    }

    /// Value at a signed multi-index, zero outside the box.
    #[inline]
    pub fn at(&self, m: &[i64; MAX_DIM]) -> f64 {
        self.spec.flat_checked(m).map_or(0.0, |f| self.values[f])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn save(&self, stem: &Path) -> Result<()> {
        write_f64_le(&stem.with_extension("bin"), &self.values)?;
        let sidecar = serde_json::json!({
            "d": self.spec.d,
            "L": self.spec.half_extent,
            "n": self.spec.n,
            "support_margin": self.support_margin,
        });
        fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&sidecar).unwrap())?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)
            .map_err(|e| Error::Io(e.to_string()))?;
        let spec = spec_from_sidecar(&side)?;
        let values = read_f64_le(&stem.with_extension("bin"))?;
        Self::new(spec, values)
    }
}

fn spec_from_sidecar(side: &serde_json::Value) -> Result<GridSpec> {
    let get = |k: &str| side.get(k).ok_or_else(|| Error::Io(format!("sidecar missing {k:?}")));
    GridSpec::new(
        get("d")?.as_u64().unwrap_or(0) as usize,
        get("L")?.as_f64().unwrap_or(0.0),
        get("n")?.as_u64().unwrap_or(0) as usize,
    )
}

fn write_f64_le(path: &Path, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn read_f64_le(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Io("binary payload length is not a multiple of 8".into()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Number of outer layers on which `values` vanish identically.
pub fn detect_margin(spec: &GridSpec, values: &[f64]) -> usize {
    let mut margin = spec.n.div_ceil(2);
    for (i, &v) in values.iter().enumerate() {
        if v != 0.0 {
            margin = margin.min(spec.layer(i));
            if margin == 0 {
                break;
            }
        }
    }
    margin
}

/// Quadrature `L_p` norm. Over the whole grid the midpoint sum is not
/// normalized; over a region it is divided by the region's discrete volume.
pub fn lp_norm(u: &GridFunction, p: f64, region: Option<&Region>) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParams(format!("p = {p} must be >= 1")));
    }
    match region {
        None => {
            let s: f64 = u.values.iter().map(|v| v.abs().powf(p)).sum();
            Ok((s * u.spec.cell_volume()).powf(1.0 / p))
        }
        Some(r) => {
            let (total, nodes) = region_nodes(&u.spec, r);
            if total == 0 {
                return Err(Error::EmptyRegion);
            }
            let s: f64 = nodes.iter().map(|&i| u.values[i].abs().powf(p)).sum();
            Ok((s / total as f64).powf(1.0 / p))
        }
    }
}

/// `(mean over nodes of B_ρ(center) of |u|^q)^{1/q}`.
pub fn ball_average_norm(u: &GridFunction, center: usize, radius: f64, q: f64) -> Result<f64> {
    lp_norm(u, q, Some(&Region::ball_at_node(&u.spec, center, radius)))
}

fn unit(a: usize) -> [i64; MAX_DIM] {
    let mut e = [0; MAX_DIM];
    e[a] = 1;
    e
}

fn shift(m: &[usize; MAX_DIM], by: &[i64; MAX_DIM], sign: i64) -> [i64; MAX_DIM] {
    let mut out = [0i64; MAX_DIM];
    for a in 0..MAX_DIM {
        out[a] = m[a] as i64 + sign * by[a];
    }
    out
}

/// Central differences along every axis.
pub fn gradient(u: &GridFunction) -> Result<Vec<GridFunction>> {
    if u.support_margin < 1 {
        return Err(Error::InsufficientMargin { have: u.support_margin, need: 1 });
    }
    let spec = u.spec;
    let inv = 1.0 / (2.0 * spec.h());
    (0..spec.d)
        .map(|a| {
            let e = unit(a);
            let values = (0..spec.len())
                .map(|i| {
                    let m = spec.multi(i);
                    (u.at(&shift(&m, &e, 1)) - u.at(&shift(&m, &e, -1))) * inv
                })
                .collect();
            GridFunction::new(spec, values)
        })
        .collect()
}

/// Second differences: standard three-point stencil on the diagonal,
/// composed central differences off it. `D_ij` and `D_ji` are identical.
pub fn hessian(u: &GridFunction) -> Result<Vec<Vec<GridFunction>>> {
    if u.support_margin < 2 {
        return Err(Error::InsufficientMargin { have: u.support_margin, need: 2 });
    }
    let spec = u.spec;
    let h = spec.h();
    let d = spec.d;
    let mut out: Vec<Vec<Option<GridFunction>>> = vec![vec![None; d]; d];
    for a in 0..d {
        for b in a..d {
            let ea = unit(a);
            let values = (0..spec.len())
                .map(|i| {
                    let m = spec.multi(i);
                    if a == b {
                        (u.at(&shift(&m, &ea, 1)) - 2.0 * u.values[i] + u.at(&shift(&m, &ea, -1))) / (h * h)
                    } else {
                        let mut pp = shift(&m, &ea, 1);
                        let mut pm = pp;
                        pp[b] += 1;
                        pm[b] -= 1;
                        let mut mp = shift(&m, &ea, -1);
                        let mut mm = mp;
                        mp[b] += 1;
                        mm[b] -= 1;
                        (u.at(&pp) - u.at(&pm) - u.at(&mp) + u.at(&mm)) / (4.0 * h * h)
                    }
                })
                .collect();
            let g = GridFunction::new(spec, values)?;
            out[b][a] = Some(g.clone());
            out[a][b] = Some(g);
        }
    }
    Ok(out
        .into_iter()
        .map(|row| row.into_iter().map(|g| g.expect("filled")).collect())
        .collect())
}

/// Pointwise Euclidean magnitude of a family of components.
pub fn magnitude(components: &[GridFunction]) -> Result<GridFunction> {
    let spec = components[0].spec;
    let values = (0..spec.len())
        .map(|i| components.iter().map(|c| c.values[i] * c.values[i]).sum::<f64>().sqrt())
        .collect();
    GridFunction::new(spec, values)
}

/// Pointwise Frobenius magnitude of a Hessian.
pub fn hessian_magnitude(hess: &[Vec<GridFunction>]) -> Result<GridFunction> {
    let flat: Vec<GridFunction> = hess.iter().flatten().cloned().collect();
    magnitude(&flat)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGridSpec {
    #[serde(flatten)]
    pub spatial: GridSpec,
    pub t0: f64,
    pub t1: f64,
    pub m: usize,
}

impl SpaceTimeGridSpec {
    pub fn new(spatial: GridSpec, t0: f64, t1: f64, m: usize) -> Result<Self> {
        if !(t0 < t1) {
            return Err(Error::InvalidGrid(format!("t0 = {t0} must be below t1 = {t1}")));
        }
        if m < 2 {
            return Err(Error::TooFewTimeNodes { have: m, need: 2 });
        }
        Ok(Self { spatial, t0, t1, m })
    }

    /// Time spacing `(t1 - t0)/(m - 1)`.
    pub fn tau(&self) -> f64 {
        (self.t1 - self.t0) / (self.m - 1) as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.tau()
    }

    pub fn len(&self) -> usize {
        self.m * self.spatial.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the time node at `t`, if `t` is a node.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.tau();
        let j = x.round();
        if (x - j).abs() < 1e-9 && j >= 0.0 && (j as usize) < self.m {
            Some(j as usize)
        } else {
            None
        }
    }

    /// Parabolic dilation `(t, x) -> (t/λ², x/λ)` of the slab.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        Self::new(self.spatial.dilated(lambda)?, self.t0 / (lambda * lambda), self.t1 / (lambda * lambda), self.m)
    }
}

/// Real samples on a time slab × spatial grid, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeFunction {
    pub spec: SpaceTimeGridSpec,
    pub values: Vec<f64>,
    /// Spatial zero layers shared by every time slice.
    pub support_margin: usize,
}

impl SpaceTimeFunction {
    pub fn new(spec: SpaceTimeGridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!("expected {} values, got {}", spec.len(), values.len())));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        let n = spec.spatial.len();
        let support_margin = values
            .chunks(n)
            .map(|c| detect_margin(&spec.spatial, c))
            .min()
            .unwrap_or(0);
        Ok(Self { spec, values, support_margin })
    }

    pub fn sample<F>(spec: SpaceTimeGridSpec, f: F) -> Result<Self>
    where
        F: Fn(f64, &[f64; MAX_DIM]) -> f64,
    {
        let n = spec.spatial.len();
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.m {
            let t = spec.time(j);
            values.extend((0..n).map(|i| f(t, &spec.spatial.point(i))));
        }
        Self::new(spec, values)
    }

    pub fn from_slices(spec: SpaceTimeGridSpec, slices: &[GridFunction]) -> Result<Self> {
        if slices.len() != spec.m {
            return Err(Error::InvalidGrid("slice count differs from m".into()));
        }
        Self::new(spec, slices.iter().flat_map(|s| s.values.iter().copied()).collect())
    }

    pub fn slice_values(&self, j: usize) -> &[f64] {
        let n = self.spec.spatial.len();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn slice(&self, j: usize) -> GridFunction {
        GridFunction::new(self.spec.spatial, self.slice_values(j).to_vec()).expect("finite slice")
    }

    pub fn slices(&self) -> Vec<GridFunction> {
        (0..self.spec.m).map(|j| self.slice(j)).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.spec, self.values.iter().map(|v| c * v).collect()).expect("finite")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn truncate_margin(self, m: usize) -> Self {
        let spec = self.spec;
        let slices: Vec<GridFunction> = self.slices().into_iter().map(|s| s.truncate_margin(m)).collect();
        Self::from_slices(spec, &slices).expect("finite")
    }

    /// Applies a spatial operator slice by slice.
    pub fn map_slices<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&GridFunction) -> Result<GridFunction>,
    {
        let slices = self.slices().iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::from_slices(self.spec, &slices)
    }

    pub fn save(&self, stem: &Path) -> Result<()> {
        write_f64_le(&stem.with_extension("bin"), &self.values)?;
        let sidecar = serde_json::json!({
            "d": self.spec.spatial.d,
            "L": self.spec.spatial.half_extent,
            "n": self.spec.spatial.n,
            "t0": self.spec.t0,
            "t1": self.spec.t1,
            "m": self.spec.m,
            "support_margin": self.support_margin,
        });
        fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&sidecar).unwrap())?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)
            .map_err(|e| Error::Io(e.to_string()))?;
        let spatial = spec_from_sidecar(&side)?;
        let t = |k: &str| side.get(k).and_then(|v| v.as_f64()).ok_or_else(|| Error::Io(format!("sidecar missing {k:?}")));
        let m = side.get("m").and_then(|v| v.as_u64()).ok_or_else(|| Error::Io("sidecar missing \"m\"".into()))?;
        let spec = SpaceTimeGridSpec::new(spatial, t("t0")?, t("t1")?, m as usize)?;
        Self::new(spec, read_f64_le(&stem.with_extension("bin"))?)
    }
}

/// `∂_t u` with its one-sided end nodes recorded.
#[derive(Debug, Clone)]
pub struct TimeDerivative {
    pub derivative: SpaceTimeFunction,
    /// Time indices computed with one-sided (second-order) differences.
    pub one_sided: Vec<usize>,
}

/// Central differences in `t`, second-order one-sided at the slab ends.
pub fn time_derivative(u: &SpaceTimeFunction) -> Result<TimeDerivative> {
    let m = u.spec.m;
    if m < 3 {
        return Err(Error::TooFewTimeNodes { have: m, need: 3 });
    }
    let n = u.spec.spatial.len();
    let tau = u.spec.tau();
    let s = |j: usize| u.slice_values(j);
    let mut values = Vec::with_capacity(u.values.len());
    for j in 0..m {
        let row: Vec<f64> = match j {
            0 => (0..n).map(|i| (-3.0 * s(0)[i] + 4.0 * s(1)[i] - s(2)[i]) / (2.0 * tau)).collect(),
            _ if j == m - 1 => (0..n)
                .map(|i| (3.0 * s(m - 1)[i] - 4.0 * s(m - 2)[i] + s(m - 3)[i]) / (2.0 * tau))
                .collect(),
            _ => (0..n).map(|i| (s(j + 1)[i] - s(j - 1)[i]) / (2.0 * tau)).collect(),
        };
        values.extend(row);
    }
    Ok(TimeDerivative {
        derivative: SpaceTimeFunction::new(u.spec, values)?,
        one_sided: vec![0, m - 1],
    })
}

/// How the supremum over radii is capped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CapMode {
    /// ρ ≤ 1.
    Inhomogeneous,
    /// ρ ≤ ρ_max, standing in for ρ < ∞.
    Homogeneous { rho_max: f64 },
}

/// Radii over which the suprema in maximal functions and Morrey norms run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSet {
    pub radii: Vec<f64>,
    pub cap_mode: CapMode,
}

impl RadiusSet {
    pub fn new(radii: Vec<f64>, cap_mode: CapMode) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::EmptyRadiusSet);
        }
        if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("radii must be positive and strictly ascending".into()));
        }
        Ok(Self { radii, cap_mode })
    }

    /// `{2h, 4h, …}` up to `cap`, with `cap` itself appended when it is not
    /// already a dyadic multiple.
    pub fn dyadic(h: f64, cap: f64, cap_mode: CapMode) -> Result<Self> {
        let mut radii = Vec::new();
        let mut r = 2.0 * h;
        while r <= cap * (1.0 + 1e-12) {
            radii.push(r);
            r *= 2.0;
        }
        match radii.last() {
            Some(&last) if (cap - last).abs() <= 1e-9 * cap => {}
            _ if cap >= h => radii.push(cap),
            _ => {}
        }
        Self::new(radii, cap_mode)
    }

    /// Dyadic radii capped at `min(1, L/2)`.
    pub fn inhomogeneous(spec: &GridSpec) -> Result<Self> {
        Self::dyadic(spec.h(), (0.5 * spec.half_extent).min(1.0), CapMode::Inhomogeneous)
    }

    /// Dyadic radii capped at `ρ_max`.
    pub fn homogeneous(spec: &GridSpec, rho_max: f64) -> Result<Self> {
        Self::dyadic(spec.h(), rho_max, CapMode::Homogeneous { rho_max })
    }

    /// Union with another set (used for monotonicity checks).
    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut radii: Vec<f64> = self.radii.iter().chain(&other.radii).copied().collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        Self::new(radii, self.cap_mode)
    }

    pub fn max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let cap_mode = match self.cap_mode {
            CapMode::Homogeneous { rho_max } => CapMode::Homogeneous { rho_max: rho_max * c },
            m => m,
        };
        Self { radii: self.radii.iter().map(|r| r * c).collect(), cap_mode }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec2(n: usize, l: f64) -> GridSpec {
        GridSpec::new(2, l, n).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(4, 1.0, 9).is_err());
        assert!(GridSpec::new(2, 1.0, 8).is_err());
        assert!(GridSpec::new(2, 0.0, 9).is_err());
        let s = spec2(5, 1.0);
        assert_eq!(s.h(), 0.5);
        assert_eq!(s.point(s.origin()), [0.0, 0.0, 0.0]);
        for i in 0..s.len() {
            assert_eq!(s.flat(&s.multi(i)), i);
        }
    }

    #[test]
    fn sample_constant_and_linear() {
        let s = spec2(3, 1.0);
        let c = GridFunction::sample(s, |_| 1.0).unwrap();
        assert!(c.values.iter().all(|&v| v == 1.0));
        let x = GridFunction::sample(s, |p| p[0]).unwrap();
        assert_eq!(x.values, vec![-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn sample_rejects_undeclared_singularity() {
        let s = GridSpec::new(3, 1.0, 5).unwrap();
        let f = |p: &[f64; 3]| 1.0 / (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        match GridFunction::sample(s, f) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, s.origin()),
            other => panic!("expected rejection, got {other:?}"),
        }
        let g = GridFunction::sample_singular(s, f, &[SingularNode { index: s.origin(), value: 7.0 }]).unwrap();
        assert_eq!(g.values[s.origin()], 7.0);
    }

    #[test]
    fn margin_detection() {
        let s = spec2(9, 1.0);
        let f = GridFunction::sample(s, |p| if p[0].abs() < 0.3 && p[1].abs() < 0.3 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(f.support_margin, 3);
        assert_eq!(GridFunction::constant(s, 2.0).support_margin, 0);
    }

    #[test]
    fn normalized_norms_of_constants() {
        let s = spec2(21, 2.0);
        let u = GridFunction::constant(s, 3.5);
        for q in [1.0, 2.0, 3.7] {
            let v = ball_average_norm(&u, s.origin(), 0.7, q).unwrap();
            assert!((v - 3.5).abs() < 1e-13);
        }
        let b = Region::Box { lo: [-0.5, -0.5, 0.0], hi: [0.5, 0.5, 0.0] };
        assert!((lp_norm(&u, 2.0, Some(&b)).unwrap() - 3.5).abs() < 1e-13);
        assert_eq!(lp_norm(&GridFunction::zeros(s), 3.0, None).unwrap(), 0.0);
    }

    #[test]
    fn empty_region_rejected() {
        let s = spec2(5, 1.0);
        let u = GridFunction::constant(s, 1.0);
        let r = Region::Ball { center: [0.25, 0.25, 0.0], radius: 0.1 };
        assert_eq!(lp_norm(&u, 1.0, Some(&r)), Err(Error::EmptyRegion));
    }

    #[test]
    fn half_space_ball_average() {
        let s = spec2(81, 2.0);
        let u = GridFunction::sample(s, |p| if p[0] > 0.0 { 1.0 } else { 0.0 }).unwrap();
        for q in [1.0, 2.0] {
            let v = ball_average_norm(&u, s.origin(), 1.0, q).unwrap();
            // nodes on x = 0 carry 0: the fraction is (1 - O(h))/2
            assert!((v - 0.5f64.powf(1.0 / q)).abs() < 0.04, "q={q} v={v}");
        }
    }

    #[test]
    fn unit_disc_area_converges() {
        let mut errs = Vec::new();
        for n in [41, 81, 161] {
            let s = spec2(n, 2.0);
            let u = GridFunction::sample(s, |p| if p[0] * p[0] + p[1] * p[1] < 1.0 { 1.0 } else { 0.0 }).unwrap();
            errs.push((lp_norm(&u, 1.0, None).unwrap() - std::f64::consts::PI).abs());
        }
        assert!(errs[2] < 0.02, "{errs:?}");
        assert!(errs[2] < errs[0]);
    }

    #[test]
    fn differences_exact_on_polynomials() {
        let s = spec2(11, 1.0);
        let cut = |p: &[f64; 3]| if p[0].abs() < 0.6 && p[1].abs() < 0.6 { 1.0 } else { 0.0 };
        let lin = GridFunction::sample(s, |p| (2.0 * p[0] - 3.0 * p[1] + 1.0) * cut(p)).unwrap();
        let g = gradient(&lin).unwrap();
        let quad = GridFunction::sample(s, |p| (p[0] * p[1] + p[0] * p[0]) * cut(p)).unwrap();
        let hs = hessian(&quad).unwrap();
        for i in 0..s.len() {
            let p = s.point(i);
            if p[0].abs() < 0.35 && p[1].abs() < 0.35 {
                assert!((g[0].values[i] - 2.0).abs() < 1e-12);
                assert!((g[1].values[i] + 3.0).abs() < 1e-12);
                assert!((hs[0][1].values[i] - 1.0).abs() < 1e-11);
                assert!((hs[0][0].values[i] - 2.0).abs() < 1e-11);
                assert!(hs[1][1].values[i].abs() < 1e-11);
            }
            assert_eq!(hs[0][1].values[i], hs[1][0].values[i]);
        }
    }

    #[test]
    fn margin_preconditions() {
        let s = spec2(9, 1.0);
        let c = GridFunction::constant(s, 1.0);
        assert!(matches!(gradient(&c), Err(Error::InsufficientMargin { need: 1, .. })));
        let one = c.clone().truncate_margin(1);
        assert!(gradient(&one).is_ok());
        assert!(matches!(hessian(&one), Err(Error::InsufficientMargin { need: 2, .. })));
    }

    #[test]
    fn gradient_second_order() {
        let err = |n: usize| {
            let s = spec2(n, 2.0);
            let u = GridFunction::sample(s, |p| (-(p[0] * p[0] + p[1] * p[1])).exp()).unwrap().truncate_margin(1);
            let g = gradient(&u).unwrap();
            (0..s.len())
                .filter(|&i| s.layer(i) >= 2)
                .map(|i| {
                    let p = s.point(i);
                    let exact = -2.0 * p[0] * (-(p[0] * p[0] + p[1] * p[1])).exp();
                    (g[0].values[i] - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 3.5 && ratio < 4.5, "refinement ratio {ratio}");
    }

    #[test]
    fn hessian_of_gaussian() {
        let s = spec2(161, 2.0);
        let g = |p: &[f64; 3]| (-(p[0] * p[0] + p[1] * p[1])).exp();
        let u = GridFunction::sample(s, g).unwrap().truncate_margin(2);
        let hs = hessian(&u).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..s.len() {
            let p = s.point(i);
            if p[0].abs() < 1.0 && p[1].abs() < 1.0 {
                let exact = (4.0 * p[0] * p[0] - 2.0) * g(&p);
                worst = worst.max((hs[0][0].values[i] - exact).abs());
            }
        }
        assert!(worst < 2e-3 * 2.0, "{worst}");
    }

    #[test]
    fn time_derivative_exact_on_linear_in_t() {
        let sp = spec2(5, 1.0);
        let st = SpaceTimeGridSpec::new(sp, -1.0, 1.0, 9).unwrap();
        let u = SpaceTimeFunction::sample(st, |t, p| t * (1.0 + p[0])).unwrap();
        let dt = time_derivative(&u).unwrap();
        for j in 0..st.m {
            for (i, v) in dt.derivative.slice_values(j).iter().enumerate() {
                assert!((v - (1.0 + sp.point(i)[0])).abs() < 1e-12);
            }
        }
        assert_eq!(dt.one_sided, vec![0, 8]);
        let still = SpaceTimeFunction::sample(st, |_, p| p[1]).unwrap();
        assert!(time_derivative(&still).unwrap().derivative.max_abs() < 1e-12);
        let short = SpaceTimeFunction::sample(SpaceTimeGridSpec::new(sp, 0.0, 1.0, 2).unwrap(), |_, _| 0.0).unwrap();
        assert!(matches!(time_derivative(&short), Err(Error::TooFewTimeNodes { .. })));
    }

    #[test]
    fn radius_sets() {
        let r = RadiusSet::dyadic(0.1, 1.0, CapMode::Inhomogeneous).unwrap();
        assert_eq!(r.radii.len(), 4);
        assert!((r.radii[2] - 0.8).abs() < 1e-12 && r.max() == 1.0);
        let r = RadiusSet::dyadic(0.125, 1.0, CapMode::Inhomogeneous).unwrap();
        assert_eq!(r.radii, vec![0.25, 0.5, 1.0]);
        assert!(RadiusSet::new(vec![], CapMode::Inhomogeneous).is_err());
        assert!(RadiusSet::new(vec![0.5, 0.25], CapMode::Inhomogeneous).is_err());
    }

    #[test]
    fn roundtrip_files() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec2(7, 1.5);
        let u = GridFunction::sample(s, |p| p[0] - 0.3 * p[1]).unwrap();
        u.save(&dir.path().join("u")).unwrap();
        assert_eq!(GridFunction::load(&dir.path().join("u")).unwrap(), u);
        let side: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("u.json")).unwrap()).unwrap();
        let mut keys: Vec<_> = side.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["L", "d", "n", "support_margin"]);
        let st = SpaceTimeGridSpec::new(s, -0.5, 0.5, 3).unwrap();
        let w = SpaceTimeFunction::sample(st, |t, p| t * p[1]).unwrap();
        w.save(&dir.path().join("w")).unwrap();
        assert_eq!(SpaceTimeFunction::load(&dir.path().join("w")).unwrap(), w);
        let bytes = fs::read(dir.path().join("w.bin")).unwrap();
        assert_eq!(bytes.len(), 8 * st.len());
        assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), w.values[1]);
    }
}
