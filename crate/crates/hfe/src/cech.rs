//! Finite nerves with sampled overlaps, group-valued Čech cocycles, double
//! cover lifting with its `Z/2` obstruction, and lift equivalence.
//!
//! Overlap components and charts are connected sample graphs. Cocycle
//! identities are checked at triple sample points only.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use crate::error::{HfeError, Result};
use crate::frames;
use crate::gf2::Gf2System;
use crate::groups::{mp_mul, ml_mul, GlPair, MlElement, MlPair, MpElement, SpElement};
use crate::linalg::{self, det, principal_sqrt, rel_diff, track_sqrt, CMat, C};
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub id: String,
    pub param: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub id: String,
    /// Global point indices; the first is the root.
    pub points: Vec<usize>,
    /// Edges between positions in `points`.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Global point indices; the first is the root.
    pub points: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    /// Asserted by the scenario author; never checked.
    pub contractible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Overlap {
    pub a: usize,
    pub b: usize,
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub charts: [usize; 3],
    pub points: Vec<usize>,
}

/// Where a triple point sits in one of its three pairwise overlaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub overlap: usize,
    /// The overlap is stored as `(b, a)` relative to the requested `(a, b)`.
    pub reversed: bool,
    pub component: usize,
    pub local: usize,
}

#[derive(Debug, Clone)]
pub struct Nerve {
    pub points: Vec<SamplePoint>,
    pub charts: Vec<Chart>,
    pub overlaps: Vec<Overlap>,
    pub triples: Vec<Triple>,
    pair_index: HashMap<(usize, usize), (usize, bool)>,
    /// `[overlap][point] -> (component, local)`.
    membership: Vec<HashMap<usize, (usize, usize)>>,
    chart_local: Vec<HashMap<usize, usize>>,
    /// `[triple][point] -> slots for (ab, bc, ac)`.
    triple_slots: Vec<Vec<[Slot; 3]>>,
    component_offsets: Vec<usize>,
    triple_offsets: Vec<usize>,
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return true;
    }
    let adj = adjacency(n, edges);
    let mut seen = vec![false; n];
    let mut q = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = q.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                q.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    adj
}

impl Nerve {
    pub fn new(
        points: Vec<SamplePoint>,
        charts: Vec<Chart>,
        overlaps: Vec<Overlap>,
        triples: Vec<Triple>,
    ) -> Result<Self> {
        let err = |s: String| Err(HfeError::Nerve(s));
        let mut ids = HashMap::new();
        let dim = points.first().map(|p| p.param.len()).unwrap_or(0);
        for (i, p) in points.iter().enumerate() {
            if ids.insert(p.id.clone(), i).is_some() {
                return err(format!("duplicate point id `{}`", p.id));
            }
            if p.param.len() != dim {
                return err(format!("point `{}` has parameter length {}, expected {dim}", p.id, p.param.len()));
            }
            if p.param.iter().any(|x| !x.is_finite()) {
                return err(format!("point `{}` has a non-finite parameter", p.id));
            }
        }
        let mut chart_ids = HashMap::new();
        let mut chart_local = Vec::new();
        for (ci, ch) in charts.iter().enumerate() {
            if chart_ids.insert(ch.id.clone(), ci).is_some() {
                return err(format!("duplicate chart id `{}`", ch.id));
            }
            let mut local = HashMap::new();
            for (li, &p) in ch.points.iter().enumerate() {
                if p >= points.len() {
                    return err(format!("chart `{}` references a missing point", ch.id));
                }
                if local.insert(p, li).is_some() {
                    return err(format!("chart `{}` lists point `{}` twice", ch.id, points[p].id));
                }
            }
            if ch.edges.iter().any(|&(i, j)| i >= ch.points.len() || j >= ch.points.len()) {
                return err(format!("chart `{}` has an edge out of range", ch.id));
            }
            if !connected(ch.points.len(), &ch.edges) {
                return err(format!("chart `{}` sample graph is not connected", ch.id));
            }
            chart_local.push(local);
        }
        let mut pair_index = HashMap::new();
        let mut membership = Vec::new();
        for (oi, ov) in overlaps.iter().enumerate() {
            if ov.a >= charts.len() || ov.b >= charts.len() {
                return err(format!("overlap {oi} references a missing chart"));
            }
            if ov.a == ov.b {
                return err(format!("overlap of chart `{}` with itself", charts[ov.a].id));
            }
            if pair_index.contains_key(&(ov.a, ov.b)) {
                return err(format!(
                    "overlap ({}, {}) listed twice",
                    charts[ov.a].id, charts[ov.b].id
                ));
            }
            pair_index.insert((ov.a, ov.b), (oi, false));
            pair_index.insert((ov.b, ov.a), (oi, true));
            let mut mem = HashMap::new();
            for (cj, comp) in ov.components.iter().enumerate() {
                if comp.points.is_empty() {
                    return err(format!("overlap {oi} component {cj} has no points"));
                }
                for (li, &p) in comp.points.iter().enumerate() {
                    if p >= points.len() {
                        return err(format!("overlap {oi} references a missing point"));
                    }
                    for &ch in &[ov.a, ov.b] {
                        if !chart_local[ch].contains_key(&p) {
                            return err(format!(
                                "point `{}` of overlap ({}, {}) is not a sample point of chart `{}`",
                                points[p].id, charts[ov.a].id, charts[ov.b].id, charts[ch].id
                            ));
                        }
                    }
                    if mem.insert(p, (cj, li)).is_some() {
                        return err(format!(
                            "point `{}` appears twice in overlap ({}, {})",
                            points[p].id, charts[ov.a].id, charts[ov.b].id
                        ));
                    }
                }
                if comp
                    .edges
                    .iter()
                    .any(|&(i, j)| i >= comp.points.len() || j >= comp.points.len())
                {
                    return err(format!("overlap {oi} component {cj} has an edge out of range"));
                }
                if !connected(comp.points.len(), &comp.edges) {
                    return err(format!("overlap {oi} component {cj} is not connected"));
                }
            }
            membership.push(mem);
        }
        let mut triple_slots = Vec::new();
        for (ti, tr) in triples.iter().enumerate() {
            let [a, b, c] = tr.charts;
            if a == b || b == c || a == c {
                return err(format!("triple {ti} repeats a chart"));
            }
            let mut slots = Vec::new();
            for &p in &tr.points {
                if p >= points.len() {
                    return err(format!("triple {ti} references a missing point"));
                }
                let mut s = Vec::with_capacity(3);
                for &(x, y) in &[(a, b), (b, c), (a, c)] {
                    let Some(&(oi, rev)) = pair_index.get(&(x, y)) else {
                        return err(format!(
                            "triple {ti} needs overlap ({}, {})",
                            charts.get(x).map(|c| c.id.as_str()).unwrap_or("?"),
                            charts.get(y).map(|c| c.id.as_str()).unwrap_or("?")
                        ));
                    };
                    let Some(&(comp, local)) = membership[oi].get(&p) else {
                        return err(format!(
                            "triple point `{}` is not in overlap ({}, {})",
                            points[p].id, charts[x].id, charts[y].id
                        ));
                    };
                    s.push(Slot {
                        overlap: oi,
                        reversed: rev,
                        component: comp,
                        local,
                    });
                }
                slots.push([s[0], s[1], s[2]]);
            }
            triple_slots.push(slots);
        }
        let mut component_offsets = Vec::new();
        let mut acc = 0;
        for ov in &overlaps {
            component_offsets.push(acc);
            acc += ov.components.len();
        }
        component_offsets.push(acc);
        let mut triple_offsets = Vec::new();
        let mut acc = 0;
        for tr in &triples {
            triple_offsets.push(acc);
            acc += tr.points.len();
        }
        triple_offsets.push(acc);
        Ok(Nerve {
            points,
            charts,
            overlaps,
            triples,
            pair_index,
            membership,
            chart_local,
            triple_slots,
            component_offsets,
            triple_offsets,
        })
    }

    pub fn chart_index(&self, id: &str) -> Option<usize> {
        self.charts.iter().position(|c| c.id == id)
    }

    pub fn point_index(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p.id == id)
    }

    /// Overlap index and orientation for the ordered chart pair.
    pub fn overlap_of(&self, a: usize, b: usize) -> Option<(usize, bool)> {
        self.pair_index.get(&(a, b)).copied()
    }

    /// Component and local index of a global point within an overlap.
    pub fn locate(&self, overlap: usize, point: usize) -> Option<(usize, usize)> {
        self.membership[overlap].get(&point).copied()
    }

    /// Position of a global point in a chart's sample list.
    pub fn chart_position(&self, chart: usize, point: usize) -> Option<usize> {
        self.chart_local[chart].get(&point).copied()
    }

    pub fn triple_slots(&self, triple: usize) -> &[[Slot; 3]] {
        &self.triple_slots[triple]
    }

    /// Number of overlap components (the unknowns of a degree-1 sign cochain).
    pub fn n_components(&self) -> usize {
        *self.component_offsets.last().unwrap_or(&0)
    }

    /// Number of triple sample points (the entries of a degree-2 cochain).
    pub fn n_triple_points(&self) -> usize {
        *self.triple_offsets.last().unwrap_or(&0)
    }

    pub fn component_slot(&self, overlap: usize, component: usize) -> usize {
        self.component_offsets[overlap] + component
    }

    pub fn component_of_slot(&self, slot: usize) -> (usize, usize) {
        let ov = self.component_offsets.partition_point(|&o| o <= slot) - 1;
        (ov, slot - self.component_offsets[ov])
    }

    pub fn triple_point_slot(&self, triple: usize, local: usize) -> usize {
        self.triple_offsets[triple] + local
    }

    pub fn param(&self, point: usize) -> &[f64] {
        &self.points[point].param
    }

    /// Readable label for an overlap component sample point.
    pub fn overlap_label(&self, overlap: usize, component: usize, local: usize) -> String {
        let ov = &self.overlaps[overlap];
        format!(
            "{}|{}#{}:{}",
            self.charts[ov.a].id,
            self.charts[ov.b].id,
            component,
            self.points[ov.components[component].points[local]].id
        )
    }

    pub fn triple_label(&self, triple: usize, local: usize) -> String {
        let [a, b, c] = self.triples[triple].charts;
        format!(
            "{}|{}|{}:{}",
            self.charts[a].id,
            self.charts[b].id,
            self.charts[c].id,
            self.points[self.triples[triple].points[local]].id
        )
    }
}

/// A function of the sample-point parameter.
pub type PointFn<T> = Arc<dyn Fn(&[f64]) -> Result<T> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GroupKind {
    Gl,
    Ml,
    Sp,
    Mp,
    Glkd,
    Mlkd,
    Spk,
}

impl GroupKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "Gl" => GroupKind::Gl,
            "Ml" => GroupKind::Ml,
            "Sp" => GroupKind::Sp,
            "Mp" => GroupKind::Mp,
            "Glkd" => GroupKind::Glkd,
            "Mlkd" => GroupKind::Mlkd,
            "Spk" => GroupKind::Spk,
            other => return Err(HfeError::Parse(format!("unknown group `{other}`"))),
        })
    }
}

/// Group operations needed by the cocycle layer.
pub trait GroupElement: Clone + Send + Sync + std::fmt::Debug {
    fn compose(&self, other: &Self, tol: &Tolerances) -> Result<Self>;
    fn invert(&self, tol: &Tolerances) -> Result<Self>;
    /// Relative distance between two elements.
    fn distance(&self, other: &Self) -> f64;
    /// Residual of the membership relation (0 for `Gl`).
    fn membership(&self, tol: &Tolerances) -> Result<f64>;
}

impl GroupElement for CMat {
    fn compose(&self, other: &Self, _tol: &Tolerances) -> Result<Self> {
        Ok(self * other)
    }
    fn invert(&self, tol: &Tolerances) -> Result<Self> {
        linalg::inverse(self, tol)
    }
    fn distance(&self, other: &Self) -> f64 {
        rel_diff(self, other)
    }
    fn membership(&self, tol: &Tolerances) -> Result<f64> {
        let d = det(self).norm();
        if d <= tol.singular {
            return Err(HfeError::Singular(d));
        }
        Ok(0.0)
    }
}

impl GroupElement for MlElement {
    fn compose(&self, other: &Self, tol: &Tolerances) -> Result<Self> {
        ml_mul(self, other, tol)
    }
    fn invert(&self, tol: &Tolerances) -> Result<Self> {
        self.inverse(tol)
    }
    fn distance(&self, other: &Self) -> f64 {
        MlElement::distance(self, other)
    }
    fn membership(&self, _tol: &Tolerances) -> Result<f64> {
        Ok(self.residual())
    }
}

impl GroupElement for SpElement {
    fn compose(&self, other: &Self, _tol: &Tolerances) -> Result<Self> {
        Ok(self.mul(other))
    }
    fn invert(&self, _tol: &Tolerances) -> Result<Self> {
        Ok(self.inverse())
    }
    fn distance(&self, other: &Self) -> f64 {
        SpElement::distance(self, other)
    }
    fn membership(&self, _tol: &Tolerances) -> Result<f64> {
        Ok(self.residual() / self.g.amax().max(1.0).powi(2))
    }
}

impl GroupElement for MpElement {
    fn compose(&self, other: &Self, tol: &Tolerances) -> Result<Self> {
        mp_mul(self, other, tol)
    }
    fn invert(&self, tol: &Tolerances) -> Result<Self> {
        self.inverse(tol)
    }
    fn distance(&self, other: &Self) -> f64 {
        MpElement::distance(self, other)
    }
    fn membership(&self, tol: &Tolerances) -> Result<f64> {
        let sp = self.g.residual() / self.g.g.amax().max(1.0).powi(2);
        Ok(sp.max(self.residual(tol)?))
    }
}

impl GroupElement for GlPair {
    fn compose(&self, other: &Self, _tol: &Tolerances) -> Result<Self> {
        Ok(self.mul(other))
    }
    fn invert(&self, tol: &Tolerances) -> Result<Self> {
        self.inverse(tol)
    }
    fn distance(&self, other: &Self) -> f64 {
        GlPair::distance(self, other)
    }
    fn membership(&self, tol: &Tolerances) -> Result<f64> {
        self.g1.membership(tol)?;
        self.g2.membership(tol)
    }
}

impl GroupElement for MlPair {
    fn compose(&self, other: &Self, tol: &Tolerances) -> Result<Self> {
        Ok(MlPair {
            g1: ml_mul(&self.g1, &other.g1, tol)?,
            g2: ml_mul(&self.g2, &other.g2, tol)?,
        })
    }
    fn invert(&self, tol: &Tolerances) -> Result<Self> {
        Ok(MlPair {
            g1: self.g1.inverse(tol)?,
            g2: self.g2.inverse(tol)?,
        })
    }
    fn distance(&self, other: &Self) -> f64 {
        self.g1.distance(&other.g1).max(self.g2.distance(&other.g2))
    }
    fn membership(&self, _tol: &Tolerances) -> Result<f64> {
        Ok(self.g1.residual().max(self.g2.residual()))
    }
}

/// Transition functions, one per overlap component, in the stored orientation.
#[derive(Clone)]
pub struct Cocycle<G> {
    pub group: GroupKind,
    pub n: usize,
    pub k: usize,
    pub transitions: Vec<Vec<PointFn<G>>>,
}

impl<G: GroupElement + 'static> Cocycle<G> {
    /// Tabulate every transition at the sample points of its component.
    pub fn sample(&self, nerve: &Nerve) -> Result<SampledCocycle<G>> {
        check_shape(nerve, self.transitions.iter().map(|t| t.len()))?;
        let mut values = Vec::with_capacity(nerve.overlaps.len());
        for (oi, ov) in nerve.overlaps.iter().enumerate() {
            let mut comps = Vec::with_capacity(ov.components.len());
            for (cj, comp) in ov.components.iter().enumerate() {
                let f = &self.transitions[oi][cj];
                let vals = comp
                    .points
                    .iter()
                    .map(|&p| f(nerve.param(p)))
                    .collect::<Result<Vec<_>>>()?;
                comps.push(vals);
            }
            values.push(comps);
        }
        Ok(SampledCocycle {
            group: self.group,
            n: self.n,
            k: self.k,
            values,
        })
    }
}

fn check_shape(nerve: &Nerve, counts: impl Iterator<Item = usize>) -> Result<()> {
    let counts: Vec<usize> = counts.collect();
    if counts.len() != nerve.overlaps.len() {
        return Err(HfeError::Nerve(format!(
            "cocycle has {} overlaps, nerve has {}",
            counts.len(),
            nerve.overlaps.len()
        )));
    }
    for (oi, (&c, ov)) in counts.iter().zip(&nerve.overlaps).enumerate() {
        if c != ov.components.len() {
            return Err(HfeError::Nerve(format!(
                "missing transition: overlap {oi} has {} components but {c} transitions",
                ov.components.len()
            )));
        }
    }
    Ok(())
}

/// Transition values at every overlap sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCocycle<G> {
    pub group: GroupKind,
    pub n: usize,
    pub k: usize,
    /// `[overlap][component][local point]`.
    pub values: Vec<Vec<Vec<G>>>,
}

impl<G: GroupElement> SampledCocycle<G> {
    pub fn check_shape(&self, nerve: &Nerve) -> Result<()> {
        check_shape(nerve, self.values.iter().map(|v| v.len()))?;
        for (oi, ov) in nerve.overlaps.iter().enumerate() {
            for (cj, comp) in ov.components.iter().enumerate() {
                if self.values[oi][cj].len() != comp.points.len() {
                    return Err(HfeError::Nerve(format!(
                        "overlap {oi} component {cj}: {} values for {} points",
                        self.values[oi][cj].len(),
                        comp.points.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// `t_ab` at a slot, inverting when the overlap is stored as `(b, a)`.
    pub fn at(&self, slot: &Slot, tol: &Tolerances) -> Result<G> {
        let v = &self.values[slot.overlap][slot.component][slot.local];
        if slot.reversed {
            v.invert(tol)
        } else {
            Ok(v.clone())
        }
    }

    pub fn map<H>(&self, group: GroupKind, f: impl Fn(&G) -> Result<H>) -> Result<SampledCocycle<H>> {
        let values = self
            .values
            .iter()
            .map(|ov| {
                ov.iter()
                    .map(|comp| comp.iter().map(&f).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SampledCocycle {
            group,
            n: self.n,
            k: self.k,
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocycleReport {
    /// Largest `‖t_ab t_bc − t_ac‖` (relative) over triple points.
    pub max_residual: f64,
    /// Largest group-membership residual over all sample values.
    pub max_membership: f64,
    /// Labels of triple points whose residual exceeds `tol.rel`.
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Cocycle residual at every triple point plus a membership check per value.
pub fn validate_cocycle<G: GroupElement>(
    nerve: &Nerve,
    c: &SampledCocycle<G>,
    tol: &Tolerances,
) -> Result<CocycleReport> {
    c.check_shape(nerve)?;
    let mut max_membership = 0.0f64;
    let mut failures = Vec::new();
    for (oi, ov) in c.values.iter().enumerate() {
        for (cj, comp) in ov.iter().enumerate() {
            for (li, g) in comp.iter().enumerate() {
                let m = g.membership(tol)?;
                if m > tol.rel {
                    failures.push(format!("membership {}", nerve.overlap_label(oi, cj, li)));
                }
                max_membership = max_membership.max(m);
            }
        }
    }
    let mut max_residual = 0.0f64;
    for ti in 0..nerve.triples.len() {
        for (li, slots) in nerve.triple_slots(ti).iter().enumerate() {
            let ab = c.at(&slots[0], tol)?;
            let bc = c.at(&slots[1], tol)?;
            let ac = c.at(&slots[2], tol)?;
            let r = ab.compose(&bc, tol)?.distance(&ac);
            if !(r <= tol.rel) {
                failures.push(nerve.triple_label(ti, li));
            }
            max_residual = max_residual.max(r);
        }
    }
    Ok(CocycleReport {
        max_residual,
        max_membership,
        passed: failures.is_empty(),
        failures,
    })
}

/// Homomorphisms (and one non-homomorphic composite) for pushing cocycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hom {
    MlToGl,
    MpToSp,
    GlDet,
    /// `|det|^{e}` with `e = ±1/2`.
    GlAbsDetPow(f64),
    /// `g ↦ α(g, 0)`; not a homomorphism, so the pushed data must be validated.
    SpAlphaAtZero,
}

impl Hom {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ml_to_gl" => Hom::MlToGl,
            "mp_to_sp" => Hom::MpToSp,
            "det" => Hom::GlDet,
            "abs_det_half" => Hom::GlAbsDetPow(0.5),
            "abs_det_minus_half" => Hom::GlAbsDetPow(-0.5),
            "alpha_at_zero" => Hom::SpAlphaAtZero,
            other => return Err(HfeError::Parse(format!("unknown homomorphism `{other}`"))),
        })
    }
}

pub fn push_ml_to_gl(c: &SampledCocycle<MlElement>) -> SampledCocycle<CMat> {
    c.map(GroupKind::Gl, |x| Ok(x.a.clone())).expect("projection is infallible")
}

pub fn push_mp_to_sp(c: &SampledCocycle<MpElement>) -> SampledCocycle<SpElement> {
    c.map(GroupKind::Sp, |x| Ok(x.g.clone())).expect("projection is infallible")
}

/// `Gl(n) → Gl(1)` by `det` or `|det|^{e}`.
pub fn push_gl_scalar(c: &SampledCocycle<CMat>, hom: Hom) -> Result<SampledCocycle<CMat>> {
    let f = move |g: &CMat| -> Result<CMat> {
        let d = det(g);
        let v = match hom {
            Hom::GlDet => d,
            Hom::GlAbsDetPow(e) => C::new(d.norm().powf(e), 0.0),
            other => return Err(HfeError::Parse(format!("{other:?} does not act on Gl"))),
        };
        Ok(CMat::from_element(1, 1, v))
    };
    let mut out = c.map(GroupKind::Gl, f)?;
    out.n = 1;
    out.k = 0;
    Ok(out)
}

pub fn push_sp_alpha(c: &SampledCocycle<SpElement>, tol: &Tolerances) -> Result<SampledCocycle<CMat>> {
    let n = c.n;
    c.map(GroupKind::Gl, |g| Ok(frames::alpha(g, &CMat::zeros(n, n), tol)?.1))
}

/// Continue square roots of `f` over a connected sample graph from its first
/// vertex, where the root value is `root`. Each edge is refined by tracking
/// along the straight segment between its endpoint parameters; edges outside
/// the BFS tree are checked for consistency.
pub fn track_graph(
    nerve: &Nerve,
    points: &[usize],
    edges: &[(usize, usize)],
    f: &(dyn Fn(&[f64]) -> Result<C> + Sync),
    root: C,
    tol: &Tolerances,
) -> Result<Vec<C>> {
    let n = points.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let adj = adjacency(n, edges);
    let mut val: Vec<Option<C>> = vec![None; n];
    val[0] = Some(root);
    let mut q = VecDeque::from([0usize]);
    let mut tree = Vec::new();
    while let Some(i) = q.pop_front() {
        for &j in &adj[i] {
            if val[j].is_none() {
                val[j] = Some(track_edge(nerve, points[i], points[j], f, val[i].unwrap(), tol)?);
                tree.push((i.min(j), i.max(j)));
                q.push_back(j);
            }
        }
    }
    let vals: Vec<C> = val
        .into_iter()
        .map(|v| v.ok_or_else(|| HfeError::Nerve("sample graph is not connected".into())))
        .collect::<Result<_>>()?;
    for &(i, j) in edges {
        if tree.contains(&(i.min(j), i.max(j))) || i == j {
            continue;
        }
        let cont = track_edge(nerve, points[i], points[j], f, vals[i], tol)?;
        if (cont - vals[j]).norm() > 1e-6 * vals[j].norm().max(1e-300) {
            return Err(HfeError::Tracking(format!(
                "square root is not single-valued around edge `{}`-`{}`",
                nerve.points[points[i]].id, nerve.points[points[j]].id
            )));
        }
    }
    Ok(vals)
}

fn track_edge(
    nerve: &Nerve,
    p: usize,
    q: usize,
    f: &(dyn Fn(&[f64]) -> Result<C> + Sync),
    start: C,
    tol: &Tolerances,
) -> Result<C> {
    let a = nerve.param(p);
    let b = nerve.param(q);
    let g = |t: f64| -> Result<C> {
        let x: Vec<f64> = a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect();
        f(&x)
    };
    track_sqrt(g, start, tol).map_err(|e| match e {
        HfeError::Tracking(m) => HfeError::Tracking(format!(
            "edge `{}`-`{}`: {m}",
            nerve.points[p].id, nerve.points[q].id
        )),
        other => other,
    })
}

/// `±1` values on overlap components (degree 1) or triple points (degree 2),
/// indexed by [`Nerve::component_slot`] / [`Nerve::triple_point_slot`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignCochain {
    pub degree: u8,
    pub values: Vec<i8>,
}

impl SignCochain {
    pub fn trivial(nerve: &Nerve, degree: u8) -> Self {
        let len = if degree == 1 {
            nerve.n_components()
        } else {
            nerve.n_triple_points()
        };
        SignCochain {
            degree,
            values: vec![1; len],
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|&v| v == 1)
    }
}

/// Result of lifting a `Gl` cocycle through `Ml → Gl`.
#[derive(Debug, Clone, PartialEq)]
pub enum LiftOutcome {
    Lifted(SampledCocycle<MlElement>),
    /// Defect cochain of the tracked square roots; its class is nonzero.
    Obstructed(SignCochain),
}

/// Square roots of `det t_ab` tracked along each component from the
/// principal root at the component root.
pub fn track_component_roots(
    nerve: &Nerve,
    c: &Cocycle<CMat>,
    tol: &Tolerances,
) -> Result<SampledCocycle<MlElement>> {
    let sampled = c.sample(nerve)?;
    let mut values = Vec::new();
    for (oi, ov) in nerve.overlaps.iter().enumerate() {
        let mut comps = Vec::new();
        for (cj, comp) in ov.components.iter().enumerate() {
            let t = c.transitions[oi][cj].clone();
            let f = move |x: &[f64]| -> Result<C> { Ok(det(&t(x)?)) };
            let root = principal_sqrt(det(&sampled.values[oi][cj][0]));
            let zs = track_graph(nerve, &comp.points, &comp.edges, &f, root, tol)?;
            let vals = sampled.values[oi][cj]
                .iter()
                .zip(zs)
                .map(|(a, z)| MlElement { a: a.clone(), z })
                .collect();
            comps.push(vals);
        }
        values.push(comps);
    }
    Ok(SampledCocycle {
        group: GroupKind::Ml,
        n: c.n,
        k: c.k,
        values,
    })
}

/// Signs of `z_ab z_bc / z_ac` at triple points.
pub fn defect_cochain(
    nerve: &Nerve,
    l: &SampledCocycle<MlElement>,
    tol: &Tolerances,
) -> Result<SignCochain> {
    let mut values = vec![1i8; nerve.n_triple_points()];
    for ti in 0..nerve.triples.len() {
        for (li, slots) in nerve.triple_slots(ti).iter().enumerate() {
            let ab = l.at(&slots[0], tol)?;
            let bc = l.at(&slots[1], tol)?;
            let ac = l.at(&slots[2], tol)?;
            let ratio = ab.z * bc.z / ac.z;
            let sign = if ratio.re >= 0.0 { 1 } else { -1 };
            if (ratio - C::new(sign as f64, 0.0)).norm() > 1e-6 {
                return Err(HfeError::Check(format!(
                    "square-root defect {ratio} at {} is not ±1; the input is not a cocycle",
                    nerve.triple_label(ti, li)
                )));
            }
            values[nerve.triple_point_slot(ti, li)] = sign;
        }
    }
    Ok(SignCochain { degree: 2, values })
}

/// The coboundary system `(δd)(abc) = d_ab + d_bc + d_ac` over GF(2).
fn coboundary_system(nerve: &Nerve, rhs: &SignCochain) -> Gf2System {
    let mut sys = Gf2System::new(nerve.n_components());
    for ti in 0..nerve.triples.len() {
        for (li, slots) in nerve.triple_slots(ti).iter().enumerate() {
            let vars: Vec<usize> = slots
                .iter()
                .map(|s| nerve.component_slot(s.overlap, s.component))
                .collect();
            sys.push(&vars, rhs.values[nerve.triple_point_slot(ti, li)] == -1);
        }
    }
    sys
}

/// Find `d` with `δd = c2`, or `None` when the class of `c2` is nonzero.
pub fn z2_coboundary_solve(nerve: &Nerve, c2: &SignCochain) -> Result<Option<SignCochain>> {
    if c2.degree != 2 || c2.values.len() != nerve.n_triple_points() {
        return Err(HfeError::Dimension("degree-2 cochain does not match the nerve".into()));
    }
    let sys = coboundary_system(nerve, c2);
    Ok(sys.solve().map(|x| SignCochain {
        degree: 1,
        values: x.into_iter().map(|b| if b { -1 } else { 1 }).collect(),
    }))
}

/// Flip `z` on the components where `signs` is `−1`.
pub fn apply_signs(l: &SampledCocycle<MlElement>, nerve: &Nerve, signs: &SignCochain) -> SampledCocycle<MlElement> {
    let mut out = l.clone();
    for (oi, ov) in out.values.iter_mut().enumerate() {
        for (cj, comp) in ov.iter_mut().enumerate() {
            if signs.values[nerve.component_slot(oi, cj)] == -1 {
                for x in comp.iter_mut() {
                    x.z = -x.z;
                }
            }
        }
    }
    out
}

/// Lift a `Gl` cocycle to `Ml`, or return the obstruction cochain.
pub fn lift_double_cover(nerve: &Nerve, c: &Cocycle<CMat>, tol: &Tolerances) -> Result<LiftOutcome> {
    let tracked = track_component_roots(nerve, c, tol)?;
    let defect = defect_cochain(nerve, &tracked, tol)?;
    match z2_coboundary_solve(nerve, &defect)? {
        Some(d) => Ok(LiftOutcome::Lifted(apply_signs(&tracked, nerve, &d))),
        None => Ok(LiftOutcome::Obstructed(defect)),
    }
}

/// Per-component ratio signs `z'/z`, checking that both lifts cover the same
/// cocycle and that the ratio is a constant `±1` on each component.
pub fn ratio_signs(
    nerve: &Nerve,
    l1: &SampledCocycle<MlElement>,
    l2: &SampledCocycle<MlElement>,
    tol: &Tolerances,
) -> Result<SignCochain> {
    l1.check_shape(nerve)?;
    l2.check_shape(nerve)?;
    let proj_tol = tol.abs.max(tol.rel);
    let ratio_tol = 10.0 * tol.abs.max(tol.rel);
    let mut values = vec![1i8; nerve.n_components()];
    for (oi, ov) in nerve.overlaps.iter().enumerate() {
        for (cj, comp) in ov.components.iter().enumerate() {
            let mut sign = 0i8;
            for li in 0..comp.points.len() {
                let x = &l1.values[oi][cj][li];
                let y = &l2.values[oi][cj][li];
                if rel_diff(&x.a, &y.a) > proj_tol {
                    return Err(HfeError::Check(format!(
                        "lifts project to different elements at {}",
                        nerve.overlap_label(oi, cj, li)
                    )));
                }
                let r = y.z / x.z;
                let s = if r.re >= 0.0 { 1 } else { -1 };
                if (r - C::new(s as f64, 0.0)).norm() > ratio_tol {
                    return Err(HfeError::Check(format!(
                        "lift ratio {r} is not ±1 at {}",
                        nerve.overlap_label(oi, cj, li)
                    )));
                }
                if sign != 0 && s != sign {
                    return Err(HfeError::Check(format!(
                        "lift ratio changes sign along component {cj} of overlap {oi}"
                    )));
                }
                sign = s;
            }
            values[nerve.component_slot(oi, cj)] = sign;
        }
    }
    Ok(SignCochain { degree: 1, values })
}

/// Chart signs `ε` with `z'_ab = ε_a z_ab ε_b`, or `None` if the lifts are
/// inequivalent.
pub fn lifts_equivalent(
    nerve: &Nerve,
    l1: &SampledCocycle<MlElement>,
    l2: &SampledCocycle<MlElement>,
    tol: &Tolerances,
) -> Result<Option<Vec<i8>>> {
    let ratios = ratio_signs(nerve, l1, l2, tol)?;
    Ok(solve_chart_signs(nerve, &ratios))
}

/// Solve `ε_a ε_b = s_ab` on every overlap component.
pub fn solve_chart_signs(nerve: &Nerve, s: &SignCochain) -> Option<Vec<i8>> {
    let mut sys = Gf2System::new(nerve.charts.len());
    for (oi, ov) in nerve.overlaps.iter().enumerate() {
        for cj in 0..ov.components.len() {
            sys.push(&[ov.a, ov.b], s.values[nerve.component_slot(oi, cj)] == -1);
        }
    }
    sys.solve()
        .map(|x| x.into_iter().map(|b| if b { -1 } else { 1 }).collect())
}

/// `dim H¹` of the component nerve with `Z/2` coefficients:
/// `(#components − rank δ₁) − rank δ₀`.
pub fn h1_rank(nerve: &Nerve) -> usize {
    let d1 = coboundary_system(nerve, &SignCochain::trivial(nerve, 2));
    let mut d0 = Gf2System::new(nerve.charts.len());
    for ov in &nerve.overlaps {
        for _ in &ov.components {
            d0.push(&[ov.a, ov.b], false);
        }
    }
    nerve.n_components() - d1.rank() - d0.rank()
}

/// Sign patterns on components whose defect vanishes, grouped into
/// equivalence classes by chart-sign changes. Exhaustive; intended for nerves
/// with at most 20 components.
pub fn enumerate_lift_classes(nerve: &Nerve) -> Result<Vec<Vec<SignCochain>>> {
    let m = nerve.n_components();
    if m > 20 {
        return Err(HfeError::Check(format!("{m} components is too many to enumerate")));
    }
    let cocycle = coboundary_system(nerve, &SignCochain::trivial(nerve, 2));
    let mut classes: Vec<Vec<SignCochain>> = Vec::new();
    for mask in 0u32..(1u32 << m) {
        let bits: Vec<bool> = (0..m).map(|j| (mask >> j) & 1 == 1).collect();
        if !cocycle.satisfied_by(&bits) {
            continue;
        }
        let s = SignCochain {
            degree: 1,
            values: bits.iter().map(|&b| if b { -1 } else { 1 }).collect(),
        };
        let mut placed = false;
        for class in classes.iter_mut() {
            let rel = SignCochain {
                degree: 1,
                values: s
                    .values
                    .iter()
                    .zip(&class[0].values)
                    .map(|(a, b)| a * b)
                    .collect(),
            };
            if solve_chart_signs(nerve, &rel).is_some() {
                class.push(s.clone());
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push(vec![s]);
        }
    }
    Ok(classes)
}

/// Values of a chart-level function at every chart sample point.
pub type ChartSamples<T> = Vec<Vec<T>>;

/// Tabulate per-chart functions at their chart sample points.
pub fn sample_charts<T>(nerve: &Nerve, fns: &[PointFn<T>]) -> Result<ChartSamples<T>> {
    if fns.len() != nerve.charts.len() {
        return Err(HfeError::Nerve(format!(
            "{} chart functions for {} charts",
            fns.len(),
            nerve.charts.len()
        )));
    }
    nerve
        .charts
        .iter()
        .zip(fns)
        .map(|(ch, f)| ch.points.iter().map(|&p| f(nerve.param(p))).collect())
        .collect()
}

/// Group overlap failures by chart pair for reporting.
pub fn summarize_labels(labels: &[String]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for l in labels {
        let key = l.split(':').next().unwrap_or(l).to_string();
        *m.entry(key).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity};

    fn pt(id: &str, param: Vec<f64>) -> SamplePoint {
        SamplePoint {
            id: id.into(),
            param,
        }
    }

    fn path(n: usize) -> Vec<(usize, usize)> {
        (1..n).map(|i| (i - 1, i)).collect()
    }

    /// Two arcs covering the circle, overlapping near 0 and near π.
    fn circle() -> Nerve {
        let mut points = Vec::new();
        for (i, t) in [-0.2, 0.0, 0.2].iter().enumerate() {
            points.push(pt(&format!("z{i}"), vec![*t]));
        }
        for (i, t) in [2.9, 3.1, 3.3].iter().enumerate() {
            points.push(pt(&format!("p{i}"), vec![*t]));
        }
        let chart = |id: &str| Chart {
            id: id.into(),
            points: (0..6).collect(),
            edges: vec![(0, 1), (1, 2), (3, 4), (4, 5), (2, 3)],
        };
        let comp = |pts: Vec<usize>| Component {
            edges: path(pts.len()),
            points: pts,
            contractible: true,
        };
        Nerve::new(
            points,
            vec![chart("A"), chart("B")],
            vec![Overlap {
                a: 0,
                b: 1,
                components: vec![comp(vec![0, 1, 2]), comp(vec![3, 4, 5])],
            }],
            vec![],
        )
        .unwrap()
    }

    /// Vertex caps of the octahedron; each edge overlap is a single lens
    /// through the two adjacent face centres.
    fn octahedron() -> Nerve {
        let verts: [[f64; 3]; 6] = [
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ];
        let faces: Vec<[usize; 3]> = (0..8)
            .map(|m| [m & 1, 2 + ((m >> 1) & 1), 4 + ((m >> 2) & 1)])
            .collect();
        let mut points = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            let p: Vec<f64> = (0..3).map(|d| f.iter().map(|&v| verts[v][d]).sum::<f64>() / 3.0).collect();
            points.push(pt(&format!("f{fi}"), p));
        }
        let mut edges = Vec::new();
        for a in 0..6 {
            for b in a + 1..6 {
                if a / 2 != b / 2 {
                    edges.push((a, b));
                }
            }
        }
        let mut overlaps = Vec::new();
        let mut chart_pts: Vec<Vec<usize>> = vec![Vec::new(); 6];
        for &(a, b) in &edges {
            let adj: Vec<usize> = (0..8).filter(|&fi| faces[fi].contains(&a) && faces[fi].contains(&b)).collect();
            let mid: Vec<f64> = (0..3).map(|d| 0.5 * (verts[a][d] + verts[b][d])).collect();
            let mi = points.len();
            points.push(pt(&format!("m{a}{b}"), mid));
            let pts = vec![adj[0], mi, adj[1]];
            for &v in &[a, b] {
                chart_pts[v].extend(pts.iter().copied());
            }
            overlaps.push((a, b, pts));
        }
        let charts = chart_pts
            .into_iter()
            .enumerate()
            .map(|(v, mut ps)| {
                ps.sort();
                ps.dedup();
                let n = ps.len();
                Chart {
                    id: format!("v{v}"),
                    points: ps,
                    edges: path(n),
                }
            })
            .collect();
        let overlaps = overlaps
            .into_iter()
            .map(|(a, b, pts)| Overlap {
                a,
                b,
                components: vec![Component {
                    points: pts,
                    edges: vec![(0, 1), (1, 2)],
                    contractible: true,
                }],
            })
            .collect();
        let triples = faces
            .iter()
            .enumerate()
            .map(|(fi, f)| Triple {
                charts: *f,
                points: vec![fi],
            })
            .collect();
        Nerve::new(points, charts, overlaps, triples).unwrap()
    }

    fn constant(m: CMat) -> PointFn<CMat> {
        Arc::new(move |_| Ok(m.clone()))
    }

    fn scalar(z: C) -> CMat {
        CMat::from_element(1, 1, z)
    }

    /// Three charts sharing one overlap point.
    fn three_charts() -> Nerve {
        let points = vec![pt("x", vec![0.0])];
        let chart = |id: &str| Chart {
            id: id.into(),
            points: vec![0],
            edges: vec![],
        };
        let ov = |a, b| Overlap {
            a,
            b,
            components: vec![Component {
                points: vec![0],
                edges: vec![],
                contractible: true,
            }],
        };
        Nerve::new(
            points,
            vec![chart("1"), chart("2"), chart("3")],
            vec![ov(0, 1), ov(1, 2), ov(0, 2)],
            vec![Triple {
                charts: [0, 1, 2],
                points: vec![0],
            }],
        )
        .unwrap()
    }

    #[test]
    fn identity_cocycle_validates() {
        let tol = Tolerances::default();
        let nerve = octahedron();
        let c = Cocycle {
            group: GroupKind::Gl,
            n: 2,
            k: 0,
            transitions: vec![vec![constant(identity(2))]; 12],
        };
        let r = validate_cocycle(&nerve, &c.sample(&nerve).unwrap(), &tol).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn circle_signs_validate_without_triples() {
        let tol = Tolerances::default();
        let nerve = circle();
        let c = Cocycle {
            group: GroupKind::Gl,
            n: 1,
            k: 0,
            transitions: vec![vec![constant(scalar(c(1.0, 0.0))), constant(scalar(c(-1.0, 0.0)))]],
        };
        assert!(validate_cocycle(&nerve, &c.sample(&nerve).unwrap(), &tol).unwrap().passed);
    }

    #[test]
    fn broken_triple_fails_with_location() {
        let tol = Tolerances::default();
        let nerve = three_charts();
        let id = constant(identity(2));
        let c = Cocycle {
            group: GroupKind::Gl,
            n: 2,
            k: 0,
            transitions: vec![vec![id.clone()], vec![id], vec![constant(identity(2) * c(2.0, 0.0))]],
        };
        let r = validate_cocycle(&nerve, &c.sample(&nerve).unwrap(), &tol).unwrap();
        assert!(!r.passed);
        assert_eq!(r.failures, vec!["1|2|3:x".to_string()]);
    }

    #[test]
    fn missing_transition_is_an_error() {
        let nerve = circle();
        let c = Cocycle {
            group: GroupKind::Gl,
            n: 1,
            k: 0,
            transitions: vec![vec![constant(scalar(c(1.0, 0.0)))]],
        };
        assert!(matches!(c.sample(&nerve), Err(HfeError::Nerve(_))));
    }

    #[test]
    fn nerve_rejects_disconnected_component() {
        let points = vec![pt("a", vec![0.0]), pt("b", vec![1.0])];
        let chart = Chart {
            id: "A".into(),
            points: vec![0, 1],
            edges: vec![(0, 1)],
        };
        let chart_b = Chart {
            id: "B".into(),
            ..chart.clone()
        };
        let r = Nerve::new(
            points,
            vec![chart, chart_b],
            vec![Overlap {
                a: 0,
                b: 1,
                components: vec![Component {
                    points: vec![0, 1],
                    edges: vec![],
                    contractible: true,
                }],
            }],
            vec![],
        );
        assert!(matches!(r, Err(HfeError::Nerve(_))));
    }

    #[test]
    fn ml_push_and_det_relation() {
        let tol = Tolerances::default();
        let nerve = circle();
        let a = CMat::from_row_slice(2, 2, &[c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, -1.0)]);
        let g = Cocycle {
            group: GroupKind::Gl,
            n: 2,
            k: 0,
            transitions: vec![vec![constant(a.clone()), constant(identity(2))]],
        };
        let LiftOutcome::Lifted(l) = lift_double_cover(&nerve, &g, &tol).unwrap() else {
            panic!("no lift");
        };
        let gl = push_ml_to_gl(&l);
        let d = push_gl_scalar(&gl, Hom::GlDet).unwrap();
        for (oc, dc) in l.values[0].iter().zip(&d.values[0]) {
            for (x, y) in oc.iter().zip(dc) {
                assert!((x.z * x.z - y[(0, 0)]).norm() < 1e-12);
            }
        }
        assert_eq!(gl.values[0][0][0], a);
    }

    #[test]
    fn sp_push_on_single_chart_is_empty() {
        let tol = Tolerances::default();
        let points = vec![pt("x", vec![0.0])];
        let nerve = Nerve::new(
            points,
            vec![Chart {
                id: "U".into(),
                points: vec![0],
                edges: vec![],
            }],
            vec![],
            vec![],
        )
        .unwrap();
        let c: SampledCocycle<SpElement> = SampledCocycle {
            group: GroupKind::Sp,
            n: 1,
            k: 0,
            values: vec![],
        };
        let p = push_sp_alpha(&c, &tol).unwrap();
        assert!(validate_cocycle(&nerve, &p, &tol).unwrap().passed);
    }

    #[test]
    fn circle_lift_has_two_classes() {
        let tol = Tolerances::default();
        let nerve = circle();
        let g = Cocycle {
            group: GroupKind::Gl,
            n: 1,
            k: 0,
            transitions: vec![vec![constant(scalar(c(-1.0, 0.0))), constant(scalar(c(1.0, 0.0)))]],
        };
        let LiftOutcome::Lifted(l) = lift_double_cover(&nerve, &g, &tol).unwrap() else {
            panic!("circle cocycle must lift");
        };
        assert!((l.values[0][0][1].z.norm() - 1.0).abs() < 1e-12);
        assert!(l.values[0][0][1].z.re.abs() < 1e-12);
        assert!(validate_cocycle(&nerve, &l, &tol).unwrap().passed);
        assert_eq!(h1_rank(&nerve), 1);
        assert_eq!(enumerate_lift_classes(&nerve).unwrap().len(), 2);

        assert_eq!(lifts_equivalent(&nerve, &l, &l, &tol).unwrap(), Some(vec![1, 1]));
        let mut flipped = l.clone();
        for x in flipped.values[0][0].iter_mut() {
            x.z = -x.z;
        }
        assert_eq!(lifts_equivalent(&nerve, &l, &flipped, &tol).unwrap(), None);
        let both = apply_signs(&l, &nerve, &SignCochain { degree: 1, values: vec![-1, -1] });
        let eps = lifts_equivalent(&nerve, &l, &both, &tol).unwrap().unwrap();
        assert_eq!(eps[0] * eps[1], -1);
    }

    #[test]
    fn single_chart_global_flip() {
        let tol = Tolerances::default();
        let nerve = Nerve::new(
            vec![pt("x", vec![0.0])],
            vec![Chart {
                id: "U".into(),
                points: vec![0],
                edges: vec![],
            }],
            vec![],
            vec![],
        )
        .unwrap();
        let l: SampledCocycle<MlElement> = SampledCocycle {
            group: GroupKind::Ml,
            n: 1,
            k: 0,
            values: vec![],
        };
        assert_eq!(lifts_equivalent(&nerve, &l, &l, &tol).unwrap(), Some(vec![1]));
    }

    #[test]
    fn ratio_not_a_sign_is_an_error() {
        let tol = Tolerances::default();
        let nerve = circle();
        let g = Cocycle {
            group: GroupKind::Gl,
            n: 1,
            k: 0,
            transitions: vec![vec![constant(scalar(c(4.0, 0.0))), constant(scalar(c(1.0, 0.0)))]],
        };
        let LiftOutcome::Lifted(l) = lift_double_cover(&nerve, &g, &tol).unwrap() else {
            panic!();
        };
        let mut bad = l.clone();
        bad.values[0][0][0].z *= c(0.0, 1.0);
        assert!(lifts_equivalent(&nerve, &l, &bad, &tol).is_err());
    }

    #[test]
    fn coboundary_examples() {
        let nerve = three_charts();
        let triv = SignCochain::trivial(&nerve, 2);
        assert!(z2_coboundary_solve(&nerve, &triv).unwrap().unwrap().is_trivial());
        let one = SignCochain { degree: 2, values: vec![-1] };
        let d = z2_coboundary_solve(&nerve, &one).unwrap().unwrap();
        assert_eq!(d.values.iter().filter(|&&v| v == -1).count() % 2, 1);

        let oct = octahedron();
        assert_eq!(oct.n_components(), 12);
        assert_eq!(oct.n_triple_points(), 8);
        let mut fundamental = SignCochain::trivial(&oct, 2);
        fundamental.values[0] = -1;
        assert!(z2_coboundary_solve(&oct, &fundamental).unwrap().is_none());
        assert_eq!(h1_rank(&oct), 0);
    }

    #[test]
    fn gauge_cocycle_lifts_on_octahedron() {
        let tol = Tolerances::default();
        let oct = octahedron();
        let mut fns = Vec::new();
        // Cocycle t_ab = h_a / h_b with h_v = e^{iφ_v}; the roots close
        // on every face, so the lift must exist.
        let phases = [0.3, 2.0, -1.1, 2.9, 0.7, -2.5];
        for ov in &oct.overlaps {
            let z = C::from_polar(1.0, phases[ov.a] - phases[ov.b]);
            fns.push(vec![constant(scalar(z))]);
        }
        let g = Cocycle {
            group: GroupKind::Gl,
            n: 1,
            k: 0,
            transitions: fns,
        };
        let out = lift_double_cover(&oct, &g, &tol).unwrap();
        let LiftOutcome::Lifted(l) = out else { panic!() };
        assert!(validate_cocycle(&oct, &l, &tol).unwrap().passed);
    }

    #[test]
    fn tracking_detects_inconsistent_loop() {
        // A chart-independent component graph with a cycle around the
        // origin: det winds once, so the root is not single-valued.
        let tol = Tolerances::default();
        let n = 8;
        let points: Vec<SamplePoint> = (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                pt(&format!("q{i}"), vec![t.cos(), t.sin()])
            })
            .collect();
        let all: Vec<usize> = (0..n).collect();
        let mut edges = path(n);
        edges.push((n - 1, 0));
        let chart = |id: &str| Chart {
            id: id.into(),
            points: all.clone(),
            edges: edges.clone(),
        };
        let nerve = Nerve::new(
            points,
            vec![chart("A"), chart("B")],
            vec![Overlap {
                a: 0,
                b: 1,
                components: vec![Component {
                    points: all.clone(),
                    edges: edges.clone(),
                    contractible: false,
                }],
            }],
            vec![],
        )
        .unwrap();
        let g = Cocycle {
            group: GroupKind::Gl,
            n: 1,
            k: 0,
            transitions: vec![vec![Arc::new(|p: &[f64]| Ok(scalar(c(p[0], p[1]))))]],
        };
        assert!(matches!(lift_double_cover(&nerve, &g, &tol), Err(HfeError::Tracking(_))));
    }
}
