//! Scenario files: a nerve with sample points, declarative transition and
//! section generators, and the pipelines to run.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cech::{
    Chart, Cocycle, Component, GroupKind, Nerve, Overlap, PointFn, SamplePoint, SignCochain, Triple,
};
use crate::compatibility::{PairSections, PolarizationPairData};
use crate::error::{HfeError, Result};
use crate::frames::{phi_inv, LagFrame, LagFramePair, SymplecticModel};
use crate::groups::{
    sp_embed_reduced, sp_from_gl, sp_rotation, sp_shear, spk_compose, GlPair, SpElement,
};
use crate::linalg::{self, CMat, RMat, C};
use crate::metaplectic_induction::Anchor;
use crate::tol::Tolerances;

/// A number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    pub fn value(&self) -> C {
        match *self {
            Entry::Real(x) => C::new(x, 0.0),
            Entry::Complex([re, im]) => C::new(re, im),
        }
    }
}

impl Default for Entry {
    fn default() -> Self {
        Entry::Real(1.0)
    }
}

/// Rows of entries.
pub type Matrix = Vec<Vec<Entry>>;

pub fn matrix(m: &Matrix) -> Result<CMat> {
    let rows: Vec<Vec<C>> = m.iter().map(|r| r.iter().map(Entry::value).collect()).collect();
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(HfeError::Parse(format!(
            "matrix must be square, got {} rows of lengths {:?}",
            rows.len(),
            rows.iter().map(|r| r.len()).collect::<Vec<_>>()
        )));
    }
    linalg::cmat_from_rows(&rows)
}

fn rect_matrix(m: &Matrix, nr: usize, nc: usize) -> Result<CMat> {
    if m.is_empty() && (nr == 0 || nc == 0) {
        return Ok(CMat::zeros(nr, nc));
    }
    let rows: Vec<Vec<C>> = m.iter().map(|r| r.iter().map(Entry::value).collect()).collect();
    let out = linalg::cmat_from_rows(&rows)?;
    if out.shape() != (nr, nc) {
        return Err(HfeError::Parse(format!("expected a {nr}x{nc} matrix, got {:?}", out.shape())));
    }
    Ok(out)
}

fn real(m: &CMat) -> Result<RMat> {
    let im = m.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if im > 0.0 {
        return Err(HfeError::Parse(format!("expected a real matrix (imaginary part {im:e})")));
    }
    Ok(linalg::real_part(m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub coef: Entry,
    /// Dotted with the sample parameter.
    pub freq: Vec<f64>,
}

/// `branch + ((x − branch) mod period)` when a branch is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Angle {
    pub coeff: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub axis: usize,
    #[serde(default)]
    pub branch: Option<f64>,
    #[serde(default)]
    pub period: Option<f64>,
}

impl Angle {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = *x
            .get(self.axis)
            .ok_or_else(|| HfeError::Parse(format!("parameter axis {} out of range", self.axis)))?;
        let v = match self.branch {
            Some(b) => b + (v - b).rem_euclid(self.period.unwrap_or(TAU)),
            None => v,
        };
        Ok(self.coeff * v + self.offset)
    }
}

/// Matrix-valued functions of the sample parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// Identity of the size the role expects.
    Identity,
    Constant { matrix: Matrix },
    /// Scalar `Σ coef·e^{i freq·x}`.
    Fourier { terms: Vec<FourierTerm> },
    /// Scalar `base·e^{i angle(x)}`.
    Phase {
        #[serde(default)]
        base: Entry,
        #[serde(flatten)]
        angle: Angle,
    },
    /// `Sp(2n,R)` rotation of every canonical plane by `angle(x)`.
    Rotation {
        #[serde(flatten)]
        angle: Angle,
    },
    /// Transition of the tautological line over the sphere between the
    /// caps centred at `from` and `to`, raised to `power`.
    Hopf { from: [f64; 3], to: [f64; 3], power: i32 },
    /// `diag(M, M⁻ᵗ)` for a real matrix.
    FromGl { m: Matrix },
    /// `(1 S; 0 1)` for a real symmetric matrix.
    Shear { s: Matrix },
    /// `g_r` acting on the last canonical planes.
    Embed { k: usize, gr: Box<Generator> },
    /// `diag(M, M⁻ᵗ)·(1 S; 0 1)·embed(g_r)` with `M = (A_gᵗ Q; 0 1)`.
    Spk {
        a: Matrix,
        #[serde(default)]
        q: Matrix,
        #[serde(default)]
        s: Matrix,
        gr: Box<Generator>,
    },
    Diag { blocks: Vec<Generator> },
    Product { factors: Vec<Generator> },
    Inverse { of: Box<Generator> },
    Scale { factor: Entry, of: Box<Generator> },
}

fn spinor(v: [f64; 3]) -> Result<[C; 2]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n == 0.0 {
        return Err(HfeError::Parse("zero direction".into()));
    }
    let (x, y, z) = (v[0] / n, v[1] / n, v[2] / n);
    // +1 eigenvector of x σ₁ + y σ₂ + z σ₃.
    Ok(if z > -0.5 {
        let a = ((1.0 + z) / 2.0).sqrt();
        [C::new(a, 0.0), C::new(x, y) / (2.0 * a)]
    } else {
        let b = ((1.0 - z) / 2.0).sqrt();
        [C::new(x, -y) / (2.0 * b), C::new(b, 0.0)]
    })
}

fn project(p: &[f64], psi: [C; 2]) -> Result<[C; 2]> {
    if p.len() != 3 {
        return Err(HfeError::Parse("hopf generator needs 3-dimensional parameters".into()));
    }
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let (x, y, z) = (p[0] / n, p[1] / n, p[2] / n);
    // ½(1 + p·σ)ψ
    let a = C::new(1.0 + z, 0.0) * psi[0] + C::new(x, -y) * psi[1];
    let b = C::new(x, y) * psi[0] + C::new(1.0 - z, 0.0) * psi[1];
    Ok([a * 0.5, b * 0.5])
}

impl Generator {
    /// Evaluate at `x`, where `dim` is the size the role expects.
    pub fn eval(&self, dim: usize, x: &[f64], tol: &Tolerances) -> Result<CMat> {
        let scalar = |z: C| CMat::from_element(1, 1, z);
        Ok(match self {
            Generator::Identity => linalg::identity(dim),
            Generator::Constant { matrix: m } => matrix(m)?,
            Generator::Fourier { terms } => {
                let mut acc = C::new(0.0, 0.0);
                for t in terms {
                    if t.freq.len() != x.len() {
                        return Err(HfeError::Parse(format!(
                            "fourier frequency has length {}, parameters have {}",
                            t.freq.len(),
                            x.len()
                        )));
                    }
                    let ph: f64 = t.freq.iter().zip(x).map(|(f, v)| f * v).sum();
                    acc += t.coef.value() * C::from_polar(1.0, ph);
                }
                scalar(acc)
            }
            Generator::Phase { base, angle } => scalar(base.value() * C::from_polar(1.0, angle.eval(x)?)),
            Generator::Rotation { angle } => linalg::complexify(&sp_rotation(dim / 2, angle.eval(x)?).g),
            Generator::Hopf { from, to, power } => {
                let pa = project(x, spinor(*from)?)?;
                let pb = project(x, spinor(*to)?)?;
                let inner = pa[0].conj() * pb[0] + pa[1].conj() * pb[1];
                let na = (pa[0].norm_sqr() + pa[1].norm_sqr()).sqrt();
                let nb = (pb[0].norm_sqr() + pb[1].norm_sqr()).sqrt();
                if na * nb <= tol.singular {
                    return Err(HfeError::Singular(na * nb));
                }
                scalar((inner / (na * nb)).powi(*power))
            }
            Generator::FromGl { m } => linalg::complexify(&sp_from_gl(&real(&matrix(m)?)?, tol)?.g),
            Generator::Shear { s } => linalg::complexify(&sp_shear(&real(&matrix(s)?)?).g),
            Generator::Embed { k, gr } => {
                let g = SpElement {
                    g: real(&gr.eval(dim.saturating_sub(2 * k), x, tol)?)?,
                };
                linalg::complexify(&sp_embed_reduced(&g, *k).g)
            }
            Generator::Spk { a, q, s, gr } => {
                let a = real(&matrix(a)?)?;
                let k = a.nrows();
                let n = dim / 2;
                if k > n {
                    return Err(HfeError::Parse(format!("spk block of size {k} in Sp({dim})")));
                }
                let q = real(&rect_matrix(q, k, n - k)?)?;
                let s = if s.is_empty() {
                    RMat::zeros(n, n)
                } else {
                    real(&rect_matrix(s, n, n)?)?
                };
                let g_r = SpElement {
                    g: real(&gr.eval(2 * (n - k), x, tol)?)?,
                };
                linalg::complexify(&spk_compose(&a, &q, &s, &g_r, tol)?.g)
            }
            Generator::Diag { blocks } => {
                let mut acc = CMat::zeros(0, 0);
                for b in blocks {
                    let m = b.eval(1, x, tol)?;
                    acc = linalg::block_diag(&acc, &m);
                }
                acc
            }
            Generator::Product { factors } => {
                let mut acc: Option<CMat> = None;
                for f in factors {
                    let m = f.eval(dim, x, tol)?;
                    acc = Some(match acc {
                        None => m,
                        Some(a) => {
                            if a.ncols() != m.nrows() {
                                return Err(HfeError::Dimension("product factors of mixed size".into()));
                            }
                            a * m
                        }
                    });
                }
                acc.unwrap_or_else(|| linalg::identity(dim))
            }
            Generator::Inverse { of } => linalg::inverse(&of.eval(dim, x, tol)?, tol)?,
            Generator::Scale { factor, of } => of.eval(dim, x, tol)? * factor.value(),
        })
    }

    /// A point function producing a `dim × dim` matrix.
    pub fn matrix_fn(&self, dim: usize, tol: &Tolerances) -> PointFn<CMat> {
        let g = self.clone();
        let tol = *tol;
        Arc::new(move |x: &[f64]| {
            let m = g.eval(dim, x, &tol)?;
            if m.shape() != (dim, dim) {
                return Err(HfeError::Dimension(format!(
                    "generator produced {:?}, expected {dim}x{dim}",
                    m.shape()
                )));
            }
            Ok(m)
        })
    }

    pub fn scalar_fn(&self, tol: &Tolerances) -> PointFn<C> {
        let f = self.matrix_fn(1, tol);
        Arc::new(move |x: &[f64]| Ok(f(x)?[(0, 0)]))
    }

    pub fn sp_fn(&self, n: usize, tol: &Tolerances) -> PointFn<SpElement> {
        let f = self.matrix_fn(2 * n, tol);
        Arc::new(move |x: &[f64]| Ok(SpElement { g: real(&f(x)?)? }))
    }
}

/// Frame-valued functions of the sample parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrameGenerator {
    Explicit { u: Generator, v: Generator },
    /// `Φ⁻¹(W, C)`.
    Ball { w: Generator, c: Generator },
    /// `g·X` for an `Sp(2n,R)` generator.
    Moved { by: Generator, frame: Box<FrameGenerator> },
    /// `X·M` for a `Gl(n,C)` generator.
    Right { frame: Box<FrameGenerator>, by: Generator },
}

impl FrameGenerator {
    pub fn eval(&self, n: usize, x: &[f64], tol: &Tolerances) -> Result<LagFrame> {
        Ok(match self {
            FrameGenerator::Explicit { u, v } => LagFrame {
                u: u.matrix_fn(n, tol)(x)?,
                v: v.matrix_fn(n, tol)(x)?,
            },
            FrameGenerator::Ball { w, c } => phi_inv(&w.matrix_fn(n, tol)(x)?, &c.matrix_fn(n, tol)(x)?),
            FrameGenerator::Moved { by, frame } => frame.eval(n, x, tol)?.left(&by.sp_fn(n, tol)(x)?),
            FrameGenerator::Right { frame, by } => frame.eval(n, x, tol)?.right(&by.matrix_fn(n, tol)(x)?),
        })
    }

    pub fn frame_fn(&self, n: usize, tol: &Tolerances) -> PointFn<LagFrame> {
        let g = self.clone();
        let tol = *tol;
        Arc::new(move |x: &[f64]| g.eval(n, x, &tol))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub id: String,
    pub param: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub id: String,
    pub points: Vec<String>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub points: Vec<String>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default = "yes")]
    pub contractible: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSpec {
    pub pair: [String; 2],
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleSpec {
    pub charts: [String; 3],
    pub points: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NerveSpec {
    pub points: Vec<PointSpec>,
    pub charts: Vec<ChartSpec>,
    #[serde(default)]
    pub overlaps: Vec<OverlapSpec>,
    #[serde(default)]
    pub triples: Vec<TripleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub pair: [String; 2],
    #[serde(default)]
    pub component: usize,
    pub generator: Generator,
    /// Mp only: `±1` relative to the principal root at the component root.
    #[serde(default)]
    pub sheet: Option<i8>,
    /// Mp only: explicit `ζ` at the component root.
    #[serde(default)]
    pub anchor: Option<Entry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleSpec {
    #[serde(default = "gl")]
    pub group: String,
    pub transitions: Vec<TransitionSpec>,
}

fn gl() -> String {
    "Gl".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairTransitionSpec {
    pub pair: [String; 2],
    #[serde(default)]
    pub component: usize,
    pub first: Generator,
    /// Defaults to `first`.
    #[serde(default)]
    pub second: Option<Generator>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub chart: String,
    pub generator: Generator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpCocycleSpec {
    pub transitions: Vec<TransitionSpec>,
    /// `t_ab = h_a c_ab h_b⁻¹` for per-chart `Sp` gauges.
    #[serde(default)]
    pub gauge: Vec<GaugeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartScalarSpec {
    pub chart: String,
    pub generator: Generator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionSpec {
    pub chart: String,
    pub frame: FrameGenerator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSectionSpec {
    pub chart: String,
    pub first: FrameGenerator,
    pub second: FrameGenerator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignSpec {
    pub charts: [String; 3],
    pub point: String,
    pub value: i8,
}

/// A pair of constant frames checked pointwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointwiseSpec {
    pub id: String,
    pub k: usize,
    pub first: FrameGenerator,
    pub second: FrameGenerator,
    #[serde(default)]
    pub expect_delta: Option<Entry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default)]
    pub liftable: Option<bool>,
    #[serde(default)]
    pub lift_classes: Option<usize>,
    #[serde(default)]
    pub sign_cochain_feasible: Option<bool>,
    #[serde(default)]
    pub self_compat_epsilon: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub n: usize,
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub nerve: NerveSpec,
    /// A `Gl(n,C)` cocycle to lift.
    #[serde(default, rename = "ml_lift")]
    pub cocycle: Option<CocycleSpec>,
    #[serde(default)]
    pub pair_cocycle: Option<Vec<PairTransitionSpec>>,
    #[serde(default)]
    pub delta_samples: Option<Vec<ChartScalarSpec>>,
    #[serde(default)]
    pub pair_sections: Option<Vec<PairSectionSpec>>,
    #[serde(default)]
    pub mp_cocycle: Option<MpCocycleSpec>,
    #[serde(default)]
    pub sections: Option<Vec<SectionSpec>>,
    #[serde(default)]
    pub d_adapted: bool,
    #[serde(default)]
    pub sign_cochain: Option<Vec<SignSpec>>,
    #[serde(default)]
    pub pointwise: Vec<PointwiseSpec>,
    #[serde(default)]
    pub expect: Expectations,
    #[serde(default)]
    pub pipelines: Vec<String>,
}

pub fn parse(text: &str) -> Result<Scenario> {
    serde_json::from_str(text).map_err(|e| {
        HfeError::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
    })
}

/// Scenario data turned into domain objects.
#[derive(Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub tol: Tolerances,
    pub nerve: Nerve,
    pub cocycle: Option<Cocycle<CMat>>,
    pub pair: Option<PolarizationPairData>,
    pub mp: Option<(Cocycle<SpElement>, Vec<Vec<Anchor>>)>,
    pub sections: Option<Vec<PointFn<LagFrame>>>,
    pub pair_sections: Option<Vec<PointFn<LagFramePair>>>,
    pub sign_cochain: Option<SignCochain>,
}

fn index_of(map: &HashMap<String, usize>, id: &str, what: &str) -> Result<usize> {
    map.get(id)
        .copied()
        .ok_or_else(|| HfeError::Parse(format!("unknown {what} `{id}`")))
}

fn edges(e: &[[usize; 2]]) -> Vec<(usize, usize)> {
    e.iter().map(|&[a, b]| (a, b)).collect()
}

pub fn build_nerve(spec: &NerveSpec) -> Result<Nerve> {
    let pid: HashMap<String, usize> = spec.points.iter().enumerate().map(|(i, p)| (p.id.clone(), i)).collect();
    let cid: HashMap<String, usize> = spec.charts.iter().enumerate().map(|(i, c)| (c.id.clone(), i)).collect();
    let pts = |ids: &[String]| -> Result<Vec<usize>> { ids.iter().map(|i| index_of(&pid, i, "point")).collect() };
    let points = spec
        .points
        .iter()
        .map(|p| SamplePoint {
            id: p.id.clone(),
            param: p.param.clone(),
        })
        .collect();
    let charts = spec
        .charts
        .iter()
        .map(|c| {
            Ok(Chart {
                id: c.id.clone(),
                points: pts(&c.points)?,
                edges: edges(&c.edges),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let overlaps = spec
        .overlaps
        .iter()
        .map(|o| {
            Ok(Overlap {
                a: index_of(&cid, &o.pair[0], "chart")?,
                b: index_of(&cid, &o.pair[1], "chart")?,
                components: o
                    .components
                    .iter()
                    .map(|c| {
                        Ok(Component {
                            points: pts(&c.points)?,
                            edges: edges(&c.edges),
                            contractible: c.contractible,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let triples = spec
        .triples
        .iter()
        .map(|t| {
            Ok(Triple {
                charts: [
                    index_of(&cid, &t.charts[0], "chart")?,
                    index_of(&cid, &t.charts[1], "chart")?,
                    index_of(&cid, &t.charts[2], "chart")?,
                ],
                points: pts(&t.points)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Nerve::new(points, charts, overlaps, triples)
}

/// Place per-component items into `[overlap][component]`, inverting
/// transitions given in the reverse orientation.
fn place<T: Clone>(
    nerve: &Nerve,
    items: Vec<(&[String; 2], usize, T)>,
    invert: impl Fn(T) -> T,
) -> Result<Vec<Vec<T>>> {
    let mut slots: Vec<Vec<Option<T>>> = nerve.overlaps.iter().map(|o| vec![None; o.components.len()]).collect();
    for (pair, comp, item) in items {
        let a = nerve
            .chart_index(&pair[0])
            .ok_or_else(|| HfeError::Parse(format!("unknown chart `{}`", pair[0])))?;
        let b = nerve
            .chart_index(&pair[1])
            .ok_or_else(|| HfeError::Parse(format!("unknown chart `{}`", pair[1])))?;
        let (oi, rev) = nerve
            .overlap_of(a, b)
            .ok_or_else(|| HfeError::Parse(format!("no overlap ({}, {})", pair[0], pair[1])))?;
        let slot = slots[oi]
            .get_mut(comp)
            .ok_or_else(|| HfeError::Parse(format!("overlap ({}, {}) has no component {comp}", pair[0], pair[1])))?;
        if slot.is_some() {
            return Err(HfeError::Parse(format!("duplicate transition for ({}, {}) component {comp}", pair[0], pair[1])));
        }
        *slot = Some(if rev { invert(item) } else { item });
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(oi, row)| {
            row.into_iter()
                .enumerate()
                .map(|(cj, s)| {
                    s.ok_or_else(|| {
                        let o = &nerve.overlaps[oi];
                        HfeError::Nerve(format!(
                            "missing transition for ({}, {}) component {cj}",
                            nerve.charts[o.a].id, nerve.charts[o.b].id
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

fn per_chart<T>(nerve: &Nerve, items: Vec<(&str, T)>, what: &str) -> Result<Vec<T>> {
    let mut slots: Vec<Option<T>> = (0..nerve.charts.len()).map(|_| None).collect();
    for (chart, item) in items {
        let c = nerve
            .chart_index(chart)
            .ok_or_else(|| HfeError::Parse(format!("unknown chart `{chart}`")))?;
        if slots[c].replace(item).is_some() {
            return Err(HfeError::Parse(format!("duplicate {what} for chart `{chart}`")));
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(c, s)| s.ok_or_else(|| HfeError::Parse(format!("missing {what} for chart `{}`", nerve.charts[c].id))))
        .collect()
}

fn inverse_gen(g: Generator) -> Generator {
    Generator::Inverse { of: Box::new(g) }
}

/// `base`, then the scenario's own overrides, then `overrides` in order.
pub fn effective_tolerances(scenario: &Scenario, base: Tolerances, overrides: &[String]) -> Result<Tolerances> {
    let mut tol = base;
    for (key, v) in &scenario.tolerances {
        tol.apply_override(&format!("{key}={v}"))?;
    }
    for o in overrides {
        tol.apply_override(o)?;
    }
    Ok(tol)
}

/// Build domain objects; `tol` is captured by every generated function.
pub fn load(scenario: Scenario, tol: Tolerances) -> Result<Loaded> {
    let nerve = build_nerve(&scenario.nerve)?;
    let (n, k) = (scenario.n, scenario.k);
    if k > n {
        return Err(HfeError::Parse(format!("k = {k} exceeds n = {n}")));
    }

    let cocycle = match &scenario.cocycle {
        None => None,
        Some(spec) => {
            let group = GroupKind::parse(&spec.group)?;
            if group != GroupKind::Gl {
                return Err(HfeError::Parse(format!("`cocycle` must be Gl-valued, got {}", spec.group)));
            }
            let items = spec
                .transitions
                .iter()
                .map(|t| (&t.pair, t.component, t.generator.clone()))
                .collect();
            let gens = place(&nerve, items, inverse_gen)?;
            Some(Cocycle {
                group,
                n,
                k,
                transitions: gens
                    .iter()
                    .map(|row| row.iter().map(|g| g.matrix_fn(n, &tol)).collect())
                    .collect(),
            })
        }
    };

    let pair_cocycle = match &scenario.pair_cocycle {
        None => None,
        Some(list) => {
            let items = list
                .iter()
                .map(|t| {
                    let second = t.second.clone().unwrap_or_else(|| t.first.clone());
                    (&t.pair, t.component, (t.first.clone(), second))
                })
                .collect();
            let gens = place(&nerve, items, |(a, b)| (inverse_gen(a), inverse_gen(b)))?;
            Some(Cocycle {
                group: GroupKind::Glkd,
                n,
                k,
                transitions: gens
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|(a, b)| {
                                let (fa, fb) = (a.matrix_fn(n, &tol), b.matrix_fn(n, &tol));
                                Arc::new(move |x: &[f64]| Ok(GlPair { g1: fa(x)?, g2: fb(x)? })) as PointFn<GlPair>
                            })
                            .collect()
                    })
                    .collect(),
            })
        }
    };

    let pair_sections = match &scenario.pair_sections {
        None => None,
        Some(list) => {
            let items = list
                .iter()
                .map(|s| {
                    let (f1, f2) = (s.first.frame_fn(n, &tol), s.second.frame_fn(n, &tol));
                    let tol2 = tol;
                    let f = Arc::new(move |x: &[f64]| LagFramePair::new(f1(x)?, f2(x)?, k, &tol2)) as PointFn<LagFramePair>;
                    (s.chart.as_str(), f)
                })
                .collect();
            Some(per_chart(&nerve, items, "pair section")?)
        }
    };

    let pair = match (pair_cocycle, &scenario.delta_samples, &pair_sections) {
        (None, None, _) => None,
        (Some(pc), Some(ds), _) => {
            let items = ds.iter().map(|d| (d.chart.as_str(), d.generator.scalar_fn(&tol))).collect();
            let delta = per_chart(&nerve, items, "delta sample")?;
            Some(PolarizationPairData {
                n,
                k,
                pair_cocycle: pc,
                delta,
                // Explicit pair data is independent of any pair sections,
                // which feed the metaplectic pipelines instead.
                sections: None,
            })
        }
        (Some(pc), None, Some(ps)) => Some(PolarizationPairData::from_sections(
            n,
            k,
            pc,
            PairSections {
                model: SymplecticModel::standard(n),
                frames: ps.clone(),
            },
            tol,
        )),
        (Some(_), None, None) => {
            return Err(HfeError::Parse("`pair_cocycle` needs `delta_samples` or `pair_sections`".into()))
        }
        (None, Some(_), _) => return Err(HfeError::Parse("`delta_samples` needs `pair_cocycle`".into())),
    };

    let mp = match &scenario.mp_cocycle {
        None => None,
        Some(spec) => {
            let gauge: Option<Vec<Generator>> = if spec.gauge.is_empty() {
                None
            } else {
                let items = spec.gauge.iter().map(|g| (g.chart.as_str(), g.generator.clone())).collect();
                Some(per_chart(&nerve, items, "gauge")?)
            };
            let items = spec
                .transitions
                .iter()
                .map(|t| {
                    let anchor = match (t.sheet, t.anchor) {
                        (_, Some(z)) => Ok(Anchor::Zeta(z.value())),
                        (Some(s), None) if s == 1 || s == -1 => Ok(Anchor::Sheet(s)),
                        (Some(s), None) => Err(HfeError::Parse(format!("sheet must be ±1, got {s}"))),
                        (None, None) => Ok(Anchor::Sheet(1)),
                    };
                    anchor.map(|a| (&t.pair, t.component, (t.generator.clone(), Some(a))))
                })
                .collect::<Result<Vec<_>>>()?;
            // Reverse-oriented entries are inverted; their anchors then
            // refer to the inverse and are re-derived from the sheet.
            let placed = place(&nerve, items, |(g, _)| (inverse_gen(g), None))?;
            let mut transitions = Vec::new();
            let mut anchors = Vec::new();
            for (oi, row) in placed.into_iter().enumerate() {
                let ov = &nerve.overlaps[oi];
                let mut trow = Vec::new();
                let mut arow = Vec::new();
                for (g, anchor) in row {
                    let g = match &gauge {
                        Some(h) => Generator::Product {
                            factors: vec![h[ov.a].clone(), g, inverse_gen(h[ov.b].clone())],
                        },
                        None => g,
                    };
                    trow.push(g.sp_fn(n, &tol));
                    arow.push(anchor.unwrap_or(Anchor::Sheet(1)));
                }
                transitions.push(trow);
                anchors.push(arow);
            }
            Some((
                Cocycle {
                    group: GroupKind::Sp,
                    n,
                    k,
                    transitions,
                },
                anchors,
            ))
        }
    };

    let sections = match &scenario.sections {
        None => None,
        Some(list) => {
            let items = list.iter().map(|s| (s.chart.as_str(), s.frame.frame_fn(n, &tol))).collect();
            Some(per_chart(&nerve, items, "section")?)
        }
    };

    let sign_cochain = match &scenario.sign_cochain {
        None => None,
        Some(list) => {
            let mut c = SignCochain::trivial(&nerve, 2);
            for s in list {
                if s.value != 1 && s.value != -1 {
                    return Err(HfeError::Parse(format!("sign value must be ±1, got {}", s.value)));
                }
                let ids: Vec<usize> = s
                    .charts
                    .iter()
                    .map(|c| nerve.chart_index(c).ok_or_else(|| HfeError::Parse(format!("unknown chart `{c}`"))))
                    .collect::<Result<_>>()?;
                let ti = nerve
                    .triples
                    .iter()
                    .position(|t| t.charts.to_vec() == ids)
                    .ok_or_else(|| HfeError::Parse(format!("no triple {:?}", s.charts)))?;
                let p = nerve
                    .point_index(&s.point)
                    .ok_or_else(|| HfeError::Parse(format!("unknown point `{}`", s.point)))?;
                let li = nerve.triples[ti]
                    .points
                    .iter()
                    .position(|&q| q == p)
                    .ok_or_else(|| HfeError::Parse(format!("point `{}` is not in triple {:?}", s.point, s.charts)))?;
                c.values[nerve.triple_point_slot(ti, li)] = s.value;
            }
            Some(c)
        }
    };

    Ok(Loaded {
        scenario,
        tol,
        nerve,
        cocycle,
        pair,
        mp,
        sections,
        pair_sections,
        sign_cochain,
    })
}
