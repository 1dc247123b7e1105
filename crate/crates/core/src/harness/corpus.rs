//! Seeded test-function corpora.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, SingularNode, SpaceTimeFunction, SpaceTimeGridSpec};
use crate::heat::GaussianFlow;
use crate::profiles::{bump, cutoff, kappa_profile};
use crate::singular::regularized_cell_value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    Gaussian,
    Bump,
    RadialPowerCutoff,
    IndicatorBall,
    SingularWeight,
    UKappa,
    HeatExtension,
    SeparableSpacetime,
}

impl CorpusKind {
    pub fn is_spacetime(self) -> bool {
        matches!(self, CorpusKind::HeatExtension | CorpusKind::SeparableSpacetime)
    }

    pub fn name(self) -> &'static str {
        match self {
            CorpusKind::Gaussian => "gaussian",
            CorpusKind::Bump => "bump",
            CorpusKind::RadialPowerCutoff => "radial_power_cutoff",
            CorpusKind::IndicatorBall => "indicator_ball",
            CorpusKind::SingularWeight => "singular_weight",
            CorpusKind::UKappa => "u_kappa",
            CorpusKind::HeatExtension => "heat_extension",
            CorpusKind::SeparableSpacetime => "separable_spacetime",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseGrid {
    Space(GridSpec),
    SpaceTime(SpaceTimeGridSpec),
}

impl CaseGrid {
    pub fn spatial(&self) -> GridSpec {
        match self {
            CaseGrid::Space(s) => *s,
            CaseGrid::SpaceTime(st) => st.spatial,
        }
    }
}

/// One test object. Parameters are kind-specific; centres are stored as
/// `c0, c1, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusCase {
    pub case_id: String,
    pub kind: CorpusKind,
    pub parameters: BTreeMap<String, f64>,
    pub grid: CaseGrid,
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl CorpusCase {
    fn par(&self, key: &str) -> f64 {
        self.parameters[key]
    }

    fn centre(&self, d: usize) -> Vec<f64> {
        (0..d).map(|a| self.parameters.get(&format!("c{a}")).copied().unwrap_or(0.0)).collect()
    }

    /// Spatial profile at `x` (for space-time kinds, the factor in `x`
    /// at the reference time). Singular kinds return 0 at their pole.
    pub fn profile(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let c = self.centre(d);
        let r = dist2(x, &c).sqrt();
        let amp = self.parameters.get("amplitude").copied().unwrap_or(1.0);
        match self.kind {
            CorpusKind::Gaussian => {
                let s = self.par("sigma");
                amp * (-r * r / (2.0 * s * s)).exp() * cutoff(r, 2.5 * s, 3.0 * s)
            }
            CorpusKind::Bump => amp * bump(r, self.par("radius")),
            CorpusKind::IndicatorBall => {
                if r < self.par("radius") {
                    amp
                } else {
                    0.0
                }
            }
            CorpusKind::RadialPowerCutoff => {
                if r == 0.0 {
                    0.0
                } else {
                    amp * r.powf(-self.par("exponent")) * cutoff(r, self.par("inner"), self.par("outer"))
                }
            }
            CorpusKind::SingularWeight => {
                if r == 0.0 {
                    0.0
                } else {
                    amp * r.powf(-self.par("s"))
                }
            }
            CorpusKind::UKappa => kappa_profile(r / self.par("kappa")),
            CorpusKind::SeparableSpacetime | CorpusKind::HeatExtension => {
                let s = self.par("sigma");
                if self.parameters.get("bump").copied().unwrap_or(0.0) > 0.5 {
                    amp * bump(r, 3.0 * s)
                } else {
                    amp * (-r * r / (2.0 * s * s)).exp() * cutoff(r, 2.5 * s, 3.0 * s)
                }
            }
        }
    }

    /// Power `s` of the pole at the origin, if the case has one.
    pub fn pole(&self) -> Option<f64> {
        match self.kind {
            CorpusKind::SingularWeight => Some(self.par("s")),
            CorpusKind::RadialPowerCutoff => Some(self.par("exponent")),
            _ => None,
        }
    }

    /// Samples `x ↦ f(λx)` on `spec`; poles get the regularized cell value.
    pub fn sample_on(&self, spec: GridSpec, lambda: f64) -> Result<GridFunction> {
        if self.kind.is_spacetime() {
            return Err(Error::InvalidParams(format!("{} is a space-time kind", self.kind.name())));
        }
        let d = spec.d;
        let f = |p: &[f64; 3]| {
            let x: Vec<f64> = p[..d].iter().map(|v| v * lambda).collect();
            self.profile(&x)
        };
        match self.pole() {
            Some(s) => {
                let amp = self.parameters.get("amplitude").copied().unwrap_or(1.0);
                let value = amp * lambda.powf(-s) * regularized_cell_value(d, spec.h(), s);
                GridFunction::sample_singular(spec, f, &[SingularNode { index: spec.origin(), value }])
            }
            None => GridFunction::sample(spec, f),
        }
    }

    pub fn sample(&self) -> Result<GridFunction> {
        match self.grid {
            CaseGrid::Space(spec) => self.sample_on(spec, 1.0),
            CaseGrid::SpaceTime(_) => Err(Error::InvalidParams("space-time case has no spatial sample".into())),
        }
    }

    /// Value of a space-time case at `(t, x)`.
    pub fn spacetime_value(&self, t: f64, x: &[f64]) -> f64 {
        let d = x.len();
        let c = self.centre(d);
        let tc = self.par("tc");
        let st = self.par("sigma_t");
        let window = cutoff((t - tc).abs(), 2.5 * st, 3.0 * st);
        match self.kind {
            CorpusKind::SeparableSpacetime => {
                let a = (-(t - tc) * (t - tc) / (2.0 * st * st)).exp();
                a * window * self.profile(x)
            }
            CorpusKind::HeatExtension => {
                let s = self.par("sigma");
                let flow = GaussianFlow { variance: s * s };
                let r2 = dist2(x, &c);
                let amp = self.par("amplitude");
                let spatial = cutoff(r2.sqrt(), self.par("inner"), self.par("outer"));
                amp * window * spatial * flow.at(d, t - self.par("start"), r2)
            }
            _ => 0.0,
        }
    }

    /// Samples `(t, x) ↦ u(λ²t, λx)` on `spec`.
    pub fn sample_spacetime_on(&self, spec: SpaceTimeGridSpec, lambda: f64) -> Result<SpaceTimeFunction> {
        if !self.kind.is_spacetime() {
            return Err(Error::InvalidParams(format!("{} is not a space-time kind", self.kind.name())));
        }
        let d = spec.spatial.d;
        SpaceTimeFunction::sample(spec, |t, p| {
            let x: Vec<f64> = p[..d].iter().map(|v| v * lambda).collect();
            self.spacetime_value(lambda * lambda * t, &x)
        })
    }

    pub fn sample_spacetime(&self) -> Result<SpaceTimeFunction> {
        match self.grid {
            CaseGrid::SpaceTime(st) => self.sample_spacetime_on(st, 1.0),
            CaseGrid::Space(_) => Err(Error::InvalidParams("space case has no space-time sample".into())),
        }
    }
}

fn case(id: String, kind: CorpusKind, grid: CaseGrid, params: &[(&str, f64)]) -> CorpusCase {
    CorpusCase {
        case_id: id,
        kind,
        parameters: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        grid,
    }
}

fn draw_centre(rng: &mut ChaCha8Rng, d: usize, spread: f64, params: &mut Vec<(&'static str, f64)>) {
    const KEYS: [&str; 3] = ["c0", "c1", "c2"];
    for key in KEYS.iter().take(d) {
        params.push((key, rng.random_range(-spread..=spread)));
    }
}

fn draw(rng: &mut ChaCha8Rng, kind: CorpusKind, grid: &CaseGrid) -> Vec<(&'static str, f64)> {
    let spatial = grid.spatial();
    let d = spatial.d;
    // support budget: features stay inside |x| ≤ L/2
    let r0 = 0.5 * spatial.half_extent;
    let mut p = Vec::new();
    match kind {
        CorpusKind::Gaussian => {
            draw_centre(rng, d, 0.1 * r0, &mut p);
            p.push(("sigma", rng.random_range(0.16..0.26) * r0));
            p.push(("amplitude", rng.random_range(0.5..2.0)));
        }
        CorpusKind::Bump => {
            draw_centre(rng, d, 0.1 * r0, &mut p);
            p.push(("radius", rng.random_range(0.45..0.75) * r0));
            p.push(("amplitude", rng.random_range(0.5..2.0)));
        }
        CorpusKind::IndicatorBall => {
            draw_centre(rng, d, 0.1 * r0, &mut p);
            p.push(("radius", rng.random_range(0.35..0.7) * r0));
            p.push(("amplitude", rng.random_range(0.5..2.0)));
        }
        CorpusKind::RadialPowerCutoff => {
            let inner = rng.random_range(0.3..0.45) * r0;
            p.push(("exponent", rng.random_range(0.2..0.8)));
            p.push(("inner", inner));
            p.push(("outer", inner + rng.random_range(0.3..0.45) * r0));
            p.push(("amplitude", rng.random_range(0.5..2.0)));
        }
        CorpusKind::SingularWeight => {
            p.push(("s", if rng.random_bool(0.5) { 1.0 } else { 2.0 }));
            p.push(("amplitude", 1.0));
        }
        CorpusKind::UKappa => {
            p.push(("kappa", r0 / 4.0));
        }
        CorpusKind::SeparableSpacetime | CorpusKind::HeatExtension => {
            let (t0, t1) = match grid {
                CaseGrid::SpaceTime(st) => (st.t0, st.t1),
                CaseGrid::Space(_) => (0.0, 0.0),
            };
            let half = 0.5 * (t1 - t0);
            draw_centre(rng, d, 0.1 * r0, &mut p);
            p.push(("sigma", rng.random_range(0.2..0.3) * r0));
            p.push(("amplitude", rng.random_range(0.5..2.0)));
            p.push(("tc", rng.random_range(-0.15..0.15) * half));
            p.push(("sigma_t", rng.random_range(0.2..0.28) * half));
            if kind == CorpusKind::HeatExtension {
                p.push(("start", t0 - rng.random_range(0.1..0.5) * half));
                p.push(("inner", 0.7 * r0));
                p.push(("outer", 1.0 * r0));
            } else {
                p.push(("bump", if rng.random_bool(0.5) { 1.0 } else { 0.0 }));
            }
        }
    }
    p
}

/// Deterministic corpus of `count` drawn cases cycling through `kinds`.
///
/// Spatial corpora are always prefixed with the fixed weights `|x|^{-1}`
/// and `|x|^{-2}`, and with a Gaussian and a bump when `kinds` has neither.
pub fn build_corpus(seed: u64, kinds: &[CorpusKind], grid: CaseGrid, count: usize) -> Result<Vec<CorpusCase>> {
    if kinds.is_empty() {
        return Err(Error::InvalidParams("corpus kinds must be nonempty".into()));
    }
    let spacetime = matches!(grid, CaseGrid::SpaceTime(_));
    if let Some(k) = kinds.iter().find(|k| k.is_spacetime() != spacetime) {
        return Err(Error::InvalidParams(format!("kind {} does not fit the grid type", k.name())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    if !spacetime {
        let r0 = 0.5 * grid.spatial().half_extent;
        out.push(case("weight-inv1".into(), CorpusKind::SingularWeight, grid, &[("s", 1.0), ("amplitude", 1.0)]));
        out.push(case("weight-inv2".into(), CorpusKind::SingularWeight, grid, &[("s", 2.0), ("amplitude", 1.0)]));
        if !kinds.contains(&CorpusKind::Gaussian) {
            out.push(case("gaussian-fixed".into(), CorpusKind::Gaussian, grid, &[("sigma", 0.2 * r0), ("amplitude", 1.0)]));
        }
        if !kinds.contains(&CorpusKind::Bump) {
            out.push(case("bump-fixed".into(), CorpusKind::Bump, grid, &[("radius", 0.6 * r0), ("amplitude", 1.0)]));
        }
    }
    for i in 0..count {
        let kind = kinds[i % kinds.len()];
        let params = draw(&mut rng, kind, &grid);
        out.push(case(format!("{}-{:02}", kind.name(), i), kind, grid, &params));
    }
    Ok(out)
}
