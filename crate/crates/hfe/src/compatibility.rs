//! Compatible metalinear lifts for a pair of polarizations: normalization of
//! the pair sections, the induced lift of the second cocycle, the global
//! square root `δ̃_k` and its uniqueness.
//!
//! Sections satisfy `s_β = s_α·(g¹_αβ, g²_αβ)` and
//! `δ_β = δ_α·conj(det g¹)·det g²·det(A)⁻²`.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::cech::{
    lifts_equivalent, track_graph, ChartSamples, Cocycle, GroupKind, Nerve, PointFn,
    SampledCocycle,
};
use crate::error::{HfeError, Result};
use crate::frames::{self, LagFramePair, SymplecticModel};
use crate::groups::{subgroup_classify, GlPair, GroupInput, MlElement};
use crate::linalg::{self, det, det_real, principal_sqrt, rel_diff, rel_diff_c, CMat, C, ONE};
use crate::sampling;
use crate::tol::Tolerances;

/// Explicit frame pairs per chart, from which `δ_k` is computed.
#[derive(Clone)]
pub struct PairSections {
    pub model: SymplecticModel,
    pub frames: Vec<PointFn<LagFramePair>>,
}

#[derive(Clone)]
pub struct PolarizationPairData {
    pub n: usize,
    pub k: usize,
    pub pair_cocycle: Cocycle<GlPair>,
    /// `m ↦ δ_k(s_α(m))` per chart.
    pub delta: Vec<PointFn<C>>,
    pub sections: Option<PairSections>,
}

impl PolarizationPairData {
    /// Data whose `δ` samples are computed from explicit frame pairs.
    pub fn from_sections(
        n: usize,
        k: usize,
        pair_cocycle: Cocycle<GlPair>,
        sections: PairSections,
        tol: Tolerances,
    ) -> Self {
        let delta = sections
            .frames
            .iter()
            .map(|f| {
                let f = f.clone();
                let model = sections.model.clone();
                Arc::new(move |p: &[f64]| frames::delta(&f(p)?, &model, &tol)) as PointFn<C>
            })
            .collect();
        PolarizationPairData {
            n,
            k,
            pair_cocycle,
            delta,
            sections: Some(sections),
        }
    }

    pub fn first_cocycle(&self) -> Cocycle<CMat> {
        self.project(|p| p.g1)
    }

    pub fn second_cocycle(&self) -> Cocycle<CMat> {
        self.project(|p| p.g2)
    }

    fn project(&self, pick: fn(GlPair) -> CMat) -> Cocycle<CMat> {
        let transitions = self
            .pair_cocycle
            .transitions
            .iter()
            .map(|ov| {
                ov.iter()
                    .map(|f| {
                        let f = f.clone();
                        Arc::new(move |p: &[f64]| Ok(pick(f(p)?))) as PointFn<CMat>
                    })
                    .collect()
            })
            .collect();
        Cocycle {
            group: GroupKind::Gl,
            n: self.n,
            k: self.k,
            transitions,
        }
    }
}

/// `conj(det g¹)·det g²·det(A)⁻²`, the factor by which `δ_k` transforms.
pub fn delta_factor(g: &GlPair, k: usize) -> C {
    let a = linalg::real_part(&linalg::block(&g.g1, 0, 0, k, k));
    let da = det_real(&a);
    det(&g.g1).conj() * det(&g.g2) / (da * da)
}

fn abs_det_a(g1: &CMat, k: usize) -> f64 {
    det_real(&linalg::real_part(&linalg::block(g1, 0, 0, k, k))).abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDataReport {
    /// Largest `δ` transformation residual over overlap sample points.
    pub delta_transform_residual: f64,
    /// Largest frame transition residual, when sections are explicit.
    pub section_residual: Option<f64>,
    pub min_abs_delta: f64,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Shared-`A` membership, nonvanishing `δ`, and the `δ` transformation law at
/// every overlap sample point.
pub fn validate_pair_data(
    nerve: &Nerve,
    data: &PolarizationPairData,
    tol: &Tolerances,
) -> Result<PairDataReport> {
    if data.delta.len() != nerve.charts.len() {
        return Err(HfeError::Nerve(format!(
            "{} delta functions for {} charts",
            data.delta.len(),
            nerve.charts.len()
        )));
    }
    let pair = data.pair_cocycle.sample(nerve)?;
    let mut failures = Vec::new();
    let mut min_abs_delta = f64::INFINITY;
    for (ci, ch) in nerve.charts.iter().enumerate() {
        for &p in &ch.points {
            let d = (data.delta[ci])(nerve.param(p))?;
            if !(d.norm() > tol.singular) {
                return Err(HfeError::DeltaVanishes(d.norm()));
            }
            min_abs_delta = min_abs_delta.min(d.norm());
        }
    }
    let mut transform = 0.0f64;
    let mut section = data.sections.as_ref().map(|_| 0.0f64);
    for (oi, ov) in nerve.overlaps.iter().enumerate() {
        for (cj, comp) in ov.components.iter().enumerate() {
            for (li, &p) in comp.points.iter().enumerate() {
                let g = &pair.values[oi][cj][li];
                let label = nerve.overlap_label(oi, cj, li);
                if let Err(e) = subgroup_classify(GroupInput::GlPair(g), data.k, tol) {
                    failures.push(format!("{label}: not in Gl_k^2 ({e})"));
                    continue;
                }
                let x = nerve.param(p);
                let da = (data.delta[ov.a])(x)?;
                let db = (data.delta[ov.b])(x)?;
                let r = rel_diff_c(db, da * delta_factor(g, data.k));
                if r > tol.rel {
                    failures.push(format!("{label}: delta transformation residual {r:e}"));
                }
                transform = transform.max(r);
                if let (Some(sec), Some(acc)) = (&data.sections, section.as_mut()) {
                    let fa = (sec.frames[ov.a])(x)?.right(&g.g1, &g.g2);
                    let fb = (sec.frames[ov.b])(x)?;
                    let r = rel_diff(&fa.first.stacked(), &fb.first.stacked())
                        .max(rel_diff(&fa.second.stacked(), &fb.second.stacked()));
                    if r > tol.rel {
                        failures.push(format!("{label}: section transition residual {r:e}"));
                    }
                    *acc = acc.max(r);
                }
            }
        }
    }
    Ok(PairDataReport {
        delta_transform_residual: transform,
        section_residual: section,
        min_abs_delta,
        passed: failures.is_empty(),
        failures,
    })
}

/// `diag(1, …, 1, δ)`.
fn d_block(n: usize, d: C) -> CMat {
    let mut m = linalg::identity(n);
    m[(n - 1, n - 1)] = d;
    m
}

/// Change sections by `s'_α = s_α·(1, D_α)⁻¹` with `D_α = diag(1, …, 1, δ_α)`
/// so that `δ' ≡ 1`; then `g²'_αβ = D_α g²_αβ D_β⁻¹` and `g¹` is unchanged.
/// With `k = n` there is no room for `D_α` and `δ ≡ 1` already.
pub fn normalize_sections(
    nerve: &Nerve,
    data: &PolarizationPairData,
    tol: &Tolerances,
) -> Result<PolarizationPairData> {
    let (n, k) = (data.n, data.k);
    if k == n {
        return Ok(data.clone());
    }
    let tol = *tol;
    let checked = move |f: &PointFn<C>, x: &[f64]| -> Result<C> {
        let d = f(x)?;
        if !(d.norm() > tol.singular) {
            return Err(HfeError::DeltaVanishes(d.norm()));
        }
        Ok(d)
    };
    let mut transitions = Vec::with_capacity(nerve.overlaps.len());
    for (oi, ov) in nerve.overlaps.iter().enumerate() {
        let row = data.pair_cocycle.transitions[oi]
            .iter()
            .map(|f| {
                let f = f.clone();
                let da = data.delta[ov.a].clone();
                let db = data.delta[ov.b].clone();
                Arc::new(move |x: &[f64]| -> Result<GlPair> {
                    let g = f(x)?;
                    let a = checked(&da, x)?;
                    let b = checked(&db, x)?;
                    Ok(GlPair {
                        g2: d_block(n, a) * g.g2 * d_block(n, ONE / b),
                        g1: g.g1,
                    })
                }) as PointFn<GlPair>
            })
            .collect();
        transitions.push(row);
    }
    let pair_cocycle = Cocycle {
        transitions,
        ..data.pair_cocycle.clone()
    };
    let sections = data.sections.as_ref().map(|s| PairSections {
        model: s.model.clone(),
        frames: s
            .frames
            .iter()
            .zip(&data.delta)
            .map(|(f, d)| {
                let f = f.clone();
                let d = d.clone();
                Arc::new(move |x: &[f64]| -> Result<LagFramePair> {
                    let fr = f(x)?;
                    let dinv = d_block(n, ONE / checked(&d, x)?);
                    Ok(LagFramePair {
                        second: fr.second.right(&dinv),
                        ..fr
                    })
                }) as PointFn<LagFramePair>
            })
            .collect(),
    });
    let delta = match &sections {
        Some(s) => PolarizationPairData::from_sections(n, k, pair_cocycle.clone(), s.clone(), tol).delta,
        None => vec![Arc::new(|_: &[f64]| Ok(ONE)) as PointFn<C>; nerve.charts.len()],
    };
    Ok(PolarizationPairData {
        n,
        k,
        pair_cocycle,
        delta,
        sections,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedLift {
    pub lift: SampledCocycle<MlElement>,
    /// Largest `|conj(det g¹)·det g²·det(A)⁻² − 1|`.
    pub premise_residual: f64,
}

/// `z²_αβ = |det A_αβ|·conj(z¹_αβ)⁻¹` on normalized data.
pub fn induce_compatible(
    nerve: &Nerve,
    data: &PolarizationPairData,
    z1: &SampledCocycle<MlElement>,
    tol: &Tolerances,
) -> Result<InducedLift> {
    z1.check_shape(nerve)?;
    let pair = data.pair_cocycle.sample(nerve)?;
    let mut premise = 0.0f64;
    let mut values = Vec::with_capacity(nerve.overlaps.len());
    for (oi, ov) in nerve.overlaps.iter().enumerate() {
        let mut comps = Vec::new();
        for (cj, comp) in ov.components.iter().enumerate() {
            let mut vals = Vec::new();
            for (li, &p) in comp.points.iter().enumerate() {
                let g = &pair.values[oi][cj][li];
                let l1 = &z1.values[oi][cj][li];
                let label = nerve.overlap_label(oi, cj, li);
                if rel_diff(&l1.a, &g.g1) > tol.rel {
                    return Err(HfeError::Check(format!("{label}: z1 does not cover g1")));
                }
                for ch in [ov.a, ov.b] {
                    let d = (data.delta[ch])(nerve.param(p))?;
                    if (d - ONE).norm() > tol.rel {
                        return Err(HfeError::Check(format!(
                            "{label}: data is not normalized (delta = {d})"
                        )));
                    }
                }
                let r = (delta_factor(g, data.k) - ONE).norm();
                if r > tol.rel {
                    return Err(HfeError::Invariant {
                        what: format!("compatibility premise at {label}"),
                        residual: r,
                    });
                }
                premise = premise.max(r);
                vals.push(MlElement {
                    a: g.g2.clone(),
                    z: abs_det_a(&g.g1, data.k) / l1.z.conj(),
                });
            }
            comps.push(vals);
        }
        values.push(comps);
    }
    Ok(InducedLift {
        lift: SampledCocycle {
            group: GroupKind::Ml,
            n: data.n,
            k: data.k,
            values,
        },
        premise_residual: premise,
    })
}

#[derive(Debug, Clone, PartialEq)]
struct GlueEntry {
    overlap: usize,
    component: usize,
    local: usize,
    slot: usize,
    a: usize,
    b: usize,
    a_val: C,
    b_val: C,
    factor: C,
}

/// Per-chart base values and the overlap factors `conj(z¹)z²/|det A|`;
/// gluing is re-evaluated for sign changes of `z²` without recomputation.
#[derive(Debug, Clone, PartialEq)]
pub struct GlueTable {
    pub base: ChartSamples<C>,
    entries: Vec<GlueEntry>,
    /// Per chart, `(neighbour, entry)` for the first point of each overlap.
    adjacent: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gluing {
    pub chart_signs: Vec<i8>,
    /// Largest relative `|δ̃_β − δ̃_α·conj(z¹)z²/|det A||` over overlap points.
    pub residual: f64,
    pub failures: Vec<String>,
}

impl GlueTable {
    /// Build from chart base values and both lifts.
    pub fn new(
        nerve: &Nerve,
        base: ChartSamples<C>,
        z1: &SampledCocycle<MlElement>,
        z2: &SampledCocycle<MlElement>,
        k: usize,
    ) -> Result<Self> {
        z1.check_shape(nerve)?;
        z2.check_shape(nerve)?;
        let mut entries = Vec::new();
        for (oi, ov) in nerve.overlaps.iter().enumerate() {
            for (cj, comp) in ov.components.iter().enumerate() {
                for (li, &p) in comp.points.iter().enumerate() {
                    let l1 = &z1.values[oi][cj][li];
                    let l2 = &z2.values[oi][cj][li];
                    let pa = nerve.chart_position(ov.a, p).expect("validated nerve");
                    let pb = nerve.chart_position(ov.b, p).expect("validated nerve");
                    entries.push(GlueEntry {
                        overlap: oi,
                        component: cj,
                        local: li,
                        slot: nerve.component_slot(oi, cj),
                        a: ov.a,
                        b: ov.b,
                        a_val: base[ov.a][pa],
                        b_val: base[ov.b][pb],
                        factor: l1.z.conj() * l2.z / abs_det_a(&l1.a, k),
                    });
                }
            }
        }
        let mut adjacent: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nerve.charts.len()];
        for (ei, e) in entries.iter().enumerate() {
            if e.component == 0 && e.local == 0 {
                adjacent[e.a].push((e.b, ei));
                adjacent[e.b].push((e.a, ei));
            }
        }
        Ok(GlueTable { base, entries, adjacent })
    }

    /// Chart signs propagated over a spanning forest of the chart graph with
    /// `z²` flipped on the components where `flips` is `−1`.
    fn chart_signs(&self, flips: &[i8]) -> Vec<i8> {
        let mut signs = vec![0i8; self.adjacent.len()];
        for root in 0..signs.len() {
            if signs[root] != 0 {
                continue;
            }
            signs[root] = 1;
            let mut q = VecDeque::from([root]);
            while let Some(c) = q.pop_front() {
                for &(d, ei) in &self.adjacent[c] {
                    if signs[d] != 0 {
                        continue;
                    }
                    let e = &self.entries[ei];
                    let ratio = e.b_val / (e.a_val * e.factor * flips[e.slot] as f64);
                    let s = if ratio.re >= 0.0 { 1 } else { -1 };
                    // ε_b/ε_a = s regardless of which end is `c`.
                    signs[d] = signs[c] * s;
                    q.push_back(d);
                }
            }
        }
        signs
    }

    fn entry_residual(&self, e: &GlueEntry, signs: &[i8], flips: &[i8]) -> f64 {
        let lhs = e.b_val * signs[e.b] as f64;
        let rhs = e.a_val * signs[e.a] as f64 * e.factor * flips[e.slot] as f64;
        rel_diff_c(lhs, rhs)
    }

    /// Largest gluing residual, cut short once it is both above `bound` and
    /// at least `floor`.
    pub fn residual_capped(&self, flips: &[i8], bound: f64, floor: f64) -> f64 {
        let signs = self.chart_signs(flips);
        let mut worst = 0.0f64;
        for e in &self.entries {
            worst = worst.max(self.entry_residual(e, &signs, flips));
            if worst > bound && worst >= floor {
                break;
            }
        }
        worst
    }

    /// Chart signs and the gluing residual at every overlap point.
    pub fn glue(&self, nerve: &Nerve, flips: &[i8]) -> Gluing {
        let signs = self.chart_signs(flips);
        let mut residual = 0.0f64;
        let mut failures = Vec::new();
        for e in &self.entries {
            let r = self.entry_residual(e, &signs, flips);
            if r > 1e-6 {
                failures.push(nerve.overlap_label(e.overlap, e.component, e.local));
            }
            residual = residual.max(r);
        }
        Gluing {
            chart_signs: signs,
            residual,
            failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTildeData {
    /// `δ̃_α` at every chart sample point, chart signs included.
    pub values: ChartSamples<C>,
    pub chart_signs: Vec<i8>,
    pub overlap_residual: f64,
    pub overlap_failures: Vec<String>,
    /// Largest relative `|δ̃² − δ|` over chart sample points.
    pub square_residual: f64,
    /// Largest relative residual of the `Ml_k²` transformation law.
    pub transform_residual: f64,
    /// Sign exponent found by the self-compatibility construction.
    pub epsilon: Option<u8>,
    /// Values multiplied by `e^{−επi/2}`.
    pub normalized: Option<ChartSamples<C>>,
    /// Smallest real part and largest `|imag|` of the normalized value on
    /// equal meta-frame pairs.
    pub positivity: Option<(f64, f64)>,
}

impl DeltaTildeData {
    pub fn glues(&self, tol: &Tolerances) -> bool {
        self.overlap_residual <= tol.rel
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaTildeOptions {
    pub seed: u64,
    /// Random `Ml_k²` elements drawn per chart for the transformation law.
    pub samples_per_chart: usize,
    /// Start each chart from the negative principal root instead.
    pub negate_roots: bool,
}

impl Default for DeltaTildeOptions {
    fn default() -> Self {
        DeltaTildeOptions {
            seed: 0,
            samples_per_chart: 100,
            negate_roots: false,
        }
    }
}

/// Continuous square roots of `δ_α` over each chart's sample graph.
pub fn chart_roots(
    nerve: &Nerve,
    data: &PolarizationPairData,
    negate: bool,
    tol: &Tolerances,
) -> Result<ChartSamples<C>> {
    nerve
        .charts
        .iter()
        .enumerate()
        .map(|(ci, ch)| {
            let f = data.delta[ci].clone();
            let root = principal_sqrt(f(nerve.param(ch.points[0]))?);
            let root = if negate { -root } else { root };
            track_graph(nerve, &ch.points, &ch.edges, &*f, root, tol)
        })
        .collect()
}

/// Square-root and transformation-law checks at chart sample points.
fn chart_checks(
    nerve: &Nerve,
    data: &PolarizationPairData,
    values: &ChartSamples<C>,
    opts: &DeltaTildeOptions,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    let mut square = 0.0f64;
    let mut transform = 0.0f64;
    let mut rng = sampling::rng(opts.seed);
    for (ci, ch) in nerve.charts.iter().enumerate() {
        for (li, &p) in ch.points.iter().enumerate() {
            let d = (data.delta[ci])(nerve.param(p))?;
            square = square.max(rel_diff_c(values[ci][li] * values[ci][li], d));
        }
        for j in 0..opts.samples_per_chart {
            let li = j % ch.points.len();
            let x = nerve.param(ch.points[li]);
            let h = sampling::mlkd_pair(data.n, data.k, &mut rng, tol)?;
            let hp = h.project();
            let moved = h.g1.z.conj() * h.g2.z / abs_det_a(&h.g1.a, data.k) * values[ci][li];
            let target = match &data.sections {
                Some(sec) => {
                    let f = (sec.frames[ci])(x)?.right(&hp.g1, &hp.g2);
                    frames::delta(&f, &sec.model, tol)?
                }
                None => (data.delta[ci])(x)? * delta_factor(&hp, data.k),
            };
            transform = transform.max(rel_diff_c(moved * moved, target));
        }
    }
    Ok((square, transform))
}

/// Per-chart `δ̃_α` from continuous roots of `δ_α`, chart signs fixed along
/// a spanning forest, and the gluing `δ̃_β = δ̃_α·conj(z¹)z²/|det A|` checked
/// at every overlap point.
pub fn build_delta_tilde(
    nerve: &Nerve,
    data: &PolarizationPairData,
    z1: &SampledCocycle<MlElement>,
    z2: &SampledCocycle<MlElement>,
    opts: &DeltaTildeOptions,
    tol: &Tolerances,
) -> Result<DeltaTildeData> {
    let base = chart_roots(nerve, data, opts.negate_roots, tol)?;
    let table = GlueTable::new(nerve, base, z1, z2, data.k)?;
    let g = table.glue(nerve, &vec![1; nerve.n_components()]);
    let values = apply_chart_signs(&table.base, &g.chart_signs);
    let (square, transform) = chart_checks(nerve, data, &values, opts, tol)?;
    Ok(DeltaTildeData {
        values,
        chart_signs: g.chart_signs,
        overlap_residual: g.residual,
        overlap_failures: g.failures,
        square_residual: square,
        transform_residual: transform,
        epsilon: None,
        normalized: None,
        positivity: None,
    })
}

fn apply_chart_signs(base: &ChartSamples<C>, signs: &[i8]) -> ChartSamples<C> {
    base.iter()
        .zip(signs)
        .map(|(v, &s)| v.iter().map(|z| z * s as f64).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Uniqueness {
    Equivalent(Vec<i8>),
    /// Two gluing lifts that are not equivalent.
    Falsified(String),
}

/// Two candidate second lifts that both glue must be equivalent.
pub fn verify_uniqueness(
    nerve: &Nerve,
    data: &PolarizationPairData,
    z1: &SampledCocycle<MlElement>,
    z2a: &SampledCocycle<MlElement>,
    z2b: &SampledCocycle<MlElement>,
    tol: &Tolerances,
) -> Result<Uniqueness> {
    let opts = DeltaTildeOptions {
        samples_per_chart: 0,
        ..Default::default()
    };
    for (name, z2) in [("first", z2a), ("second", z2b)] {
        let d = build_delta_tilde(nerve, data, z1, z2, &opts, tol)?;
        if !d.glues(tol) {
            return Err(HfeError::Check(format!(
                "{name} candidate does not admit a global square root (residual {:e})",
                d.overlap_residual
            )));
        }
    }
    Ok(match lifts_equivalent(nerve, z2a, z2b, tol)? {
        Some(eps) => Uniqueness::Equivalent(eps),
        None => Uniqueness::Falsified(
            "two lifts admit a global square root but are not equivalent".into(),
        ),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub patterns: usize,
    pub glued: usize,
    pub equivalent: usize,
    /// Patterns where gluing and equivalence disagree.
    pub violations: Vec<String>,
    /// Smallest gluing residual among patterns that fail to glue.
    pub min_failing_residual: f64,
    /// Largest gluing residual among patterns that glue.
    pub max_glued_residual: f64,
}

/// Whether `flips` is `ε_a ε_b` for some chart signs: propagate over the
/// component graph, then check every component.
fn is_coboundary(nerve: &Nerve, flips: &[i8]) -> bool {
    let mut adjacent: Vec<Vec<(usize, i8)>> = vec![Vec::new(); nerve.charts.len()];
    for (oi, ov) in nerve.overlaps.iter().enumerate() {
        for cj in 0..ov.components.len() {
            let f = flips[nerve.component_slot(oi, cj)];
            adjacent[ov.a].push((ov.b, f));
            adjacent[ov.b].push((ov.a, f));
        }
    }
    let mut eps = vec![0i8; adjacent.len()];
    for root in 0..eps.len() {
        if eps[root] != 0 {
            continue;
        }
        eps[root] = 1;
        let mut q = VecDeque::from([root]);
        while let Some(c) = q.pop_front() {
            for &(d, f) in &adjacent[c] {
                if eps[d] == 0 {
                    eps[d] = eps[c] * f;
                    q.push_back(d);
                } else if eps[d] != eps[c] * f {
                    return false;
                }
            }
        }
    }
    true
}

/// Every sign pattern on the components applied to `z²`: gluing must hold
/// exactly for the patterns equivalent to `z²`.
pub fn uniqueness_sweep(
    nerve: &Nerve,
    data: &PolarizationPairData,
    z1: &SampledCocycle<MlElement>,
    z2: &SampledCocycle<MlElement>,
    tol: &Tolerances,
) -> Result<SweepReport> {
    let m = nerve.n_components();
    if m > 20 {
        return Err(HfeError::Check(format!("{m} components is too many to sweep")));
    }
    let base = chart_roots(nerve, data, false, tol)?;
    let table = GlueTable::new(nerve, base, z1, z2, data.k)?;
    let mut rep = SweepReport {
        patterns: 0,
        glued: 0,
        equivalent: 0,
        violations: Vec::new(),
        min_failing_residual: f64::INFINITY,
        max_glued_residual: 0.0,
    };
    for mask in 0u32..(1u32 << m) {
        let flips: Vec<i8> = (0..m).map(|j| if (mask >> j) & 1 == 1 { -1 } else { 1 }).collect();
        // Past this cap a pattern fails and cannot lower `min_failing_residual`.
        let residual = table.residual_capped(&flips, tol.rel, rep.min_failing_residual);
        let glued = residual <= tol.rel;
        // The ratio of z² to its flipped copy is the flip pattern itself.
        let equivalent = is_coboundary(nerve, &flips);
        rep.patterns += 1;
        if glued {
            rep.glued += 1;
            rep.max_glued_residual = rep.max_glued_residual.max(residual);
        } else {
            rep.min_failing_residual = rep.min_failing_residual.min(residual);
        }
        if equivalent {
            rep.equivalent += 1;
        }
        if glued != equivalent {
            rep.violations.push(format!("{mask:0m$b}"));
        }
    }
    Ok(rep)
}

/// `δ̃` for `P₁ = P₂` with the lift used on both sides: `δ` is real of
/// constant sign `(−1)^ε` and `δ̃_α = e^{επi/2}|δ_α|^{1/2}`.
pub fn self_compat(
    nerve: &Nerve,
    data: &PolarizationPairData,
    z1: &SampledCocycle<MlElement>,
    opts: &DeltaTildeOptions,
    tol: &Tolerances,
) -> Result<DeltaTildeData> {
    let pair = data.pair_cocycle.sample(nerve)?;
    for (oi, ov) in pair.values.iter().enumerate() {
        for (cj, comp) in ov.iter().enumerate() {
            for (li, g) in comp.iter().enumerate() {
                if rel_diff(&g.g1, &g.g2) > tol.rel {
                    return Err(HfeError::Check(format!(
                        "{}: pair cocycle is not diagonal",
                        nerve.overlap_label(oi, cj, li)
                    )));
                }
            }
        }
    }
    let mut sign = 0i8;
    let mut abs_roots: ChartSamples<C> = Vec::new();
    for (ci, ch) in nerve.charts.iter().enumerate() {
        let mut vals = Vec::new();
        for &p in &ch.points {
            let d = (data.delta[ci])(nerve.param(p))?;
            if d.im.abs() > tol.abs.max(tol.rel * d.norm()) {
                return Err(HfeError::Check(format!(
                    "delta is not real at `{}` ({d})",
                    nerve.points[p].id
                )));
            }
            let s = if d.re > 0.0 { 1 } else { -1 };
            if sign != 0 && s != sign {
                return Err(HfeError::Check(format!(
                    "delta changes sign at `{}`",
                    nerve.points[p].id
                )));
            }
            sign = s;
            vals.push(C::new(d.re.abs().sqrt(), 0.0));
        }
        abs_roots.push(vals);
    }
    let epsilon: u8 = if sign < 0 { 1 } else { 0 };
    let phase = C::from_polar(1.0, epsilon as f64 * FRAC_PI_2);
    let base: ChartSamples<C> = abs_roots
        .iter()
        .map(|v| v.iter().map(|z| z * phase).collect())
        .collect();
    let table = GlueTable::new(nerve, base, z1, z1, data.k)?;
    let g = table.glue(nerve, &vec![1; nerve.n_components()]);
    let values = apply_chart_signs(&table.base, &g.chart_signs);
    let (square, transform) = chart_checks(nerve, data, &values, opts, tol)?;
    let normalized = apply_chart_signs(&abs_roots, &g.chart_signs);

    let mut rng = sampling::rng(opts.seed ^ 0x5eed);
    let mut min_re = f64::INFINITY;
    let mut max_im = 0.0f64;
    for vals in &normalized {
        for (j, v) in vals.iter().enumerate() {
            let mut check = |w: C| {
                min_re = min_re.min(w.re);
                max_im = max_im.max(w.im.abs());
            };
            check(*v);
            if j < opts.samples_per_chart {
                let c = sampling::glk(data.n, data.k, &mut rng);
                let h = crate::groups::ml_lift(&c, tol)?.0;
                check(h.z.conj() * h.z / abs_det_a(&h.a, data.k) * v);
            }
        }
    }
    Ok(DeltaTildeData {
        values,
        chart_signs: g.chart_signs,
        overlap_residual: g.residual,
        overlap_failures: g.failures,
        square_residual: square,
        transform_residual: transform,
        epsilon: Some(epsilon),
        normalized: Some(normalized),
        positivity: Some((min_re, max_im)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cech::{self, lift_double_cover, Chart, Component, LiftOutcome, Overlap, SamplePoint, SignCochain};
    use crate::frames::LagFrame;
    use crate::linalg::c;

    fn scalar(z: C) -> CMat {
        CMat::from_element(1, 1, z)
    }

    fn single_chart() -> Nerve {
        Nerve::new(
            vec![SamplePoint {
                id: "x".into(),
                param: vec![0.0],
            }],
            vec![Chart {
                id: "U".into(),
                points: vec![0],
                edges: vec![],
            }],
            vec![],
            vec![],
        )
        .unwrap()
    }

    /// Two arcs of the circle meeting near 0 and near π.
    fn circle() -> Nerve {
        let ts = [-0.2, 0.0, 0.2, 2.9, 3.1, 3.3];
        let points = ts
            .iter()
            .enumerate()
            .map(|(i, t)| SamplePoint {
                id: format!("p{i}"),
                param: vec![*t],
            })
            .collect();
        let chart = |id: &str| Chart {
            id: id.into(),
            points: (0..6).collect(),
            edges: vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)],
        };
        let comp = |pts: Vec<usize>| Component {
            points: pts,
            edges: vec![(0, 1), (1, 2)],
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

    fn pair_const(g1: CMat, g2: CMat) -> PointFn<GlPair> {
        Arc::new(move |_| {
            Ok(GlPair {
                g1: g1.clone(),
                g2: g2.clone(),
            })
        })
    }

    fn const_delta(d: C) -> PointFn<C> {
        Arc::new(move |_| Ok(d))
    }

    /// Circle data with `g¹ = g² = −1` near 0, `+1` near π, `δ_A = 2`,
    /// `δ_B = 2` (the factor is `conj(−1)(−1) = 1`).
    fn circle_data() -> PolarizationPairData {
        let m = scalar(c(-1.0, 0.0));
        let p = scalar(ONE);
        PolarizationPairData {
            n: 1,
            k: 0,
            pair_cocycle: Cocycle {
                group: GroupKind::Glkd,
                n: 1,
                k: 0,
                transitions: vec![vec![pair_const(m.clone(), m), pair_const(p.clone(), p)]],
            },
            delta: vec![const_delta(c(2.0, 0.0)), const_delta(c(2.0, 0.0))],
            sections: None,
        }
    }

    fn lift_first(nerve: &Nerve, data: &PolarizationPairData) -> SampledCocycle<MlElement> {
        match lift_double_cover(nerve, &data.first_cocycle(), &Tolerances::default()).unwrap() {
            LiftOutcome::Lifted(l) => l,
            LiftOutcome::Obstructed(_) => panic!("no lift"),
        }
    }

    #[test]
    fn normalization_examples() {
        let tol = Tolerances::default();
        let nerve = circle();
        let data = circle_data();
        let norm = normalize_sections(&nerve, &data, &tol).unwrap();
        for f in &norm.delta {
            assert_eq!(f(&[0.0]).unwrap(), ONE);
        }
        assert!(validate_pair_data(&nerve, &norm, &tol).unwrap().passed);

        // Single chart with explicit frames: δ = 2 becomes 1.
        let one = single_chart();
        let sections = PairSections {
            model: SymplecticModel::standard(1),
            frames: vec![Arc::new(|_: &[f64]| {
                let f = LagFrame {
                    u: scalar(ONE),
                    v: scalar(c(0.0, 1.0)),
                };
                Ok(LagFramePair {
                    first: f.clone(),
                    second: f,
                    k: 0,
                })
            })],
        };
        let data = PolarizationPairData::from_sections(
            1,
            0,
            Cocycle {
                group: GroupKind::Glkd,
                n: 1,
                k: 0,
                transitions: vec![],
            },
            sections,
            tol,
        );
        assert!(((data.delta[0])(&[0.0]).unwrap() - c(2.0, 0.0)).norm() < 1e-14);
        let norm = normalize_sections(&one, &data, &tol).unwrap();
        assert!(((norm.delta[0])(&[0.0]).unwrap() - ONE).norm() < 1e-14);
    }

    #[test]
    fn induced_lift_on_circle() {
        let tol = Tolerances::default();
        let nerve = circle();
        let data = normalize_sections(&nerve, &circle_data(), &tol).unwrap();
        let z1 = lift_first(&nerve, &data);
        assert!((z1.values[0][0][1].z - c(0.0, 1.0)).norm() < 1e-12);
        let z2 = induce_compatible(&nerve, &data, &z1, &tol).unwrap();
        assert!((z2.lift.values[0][0][1].z - c(0.0, 1.0)).norm() < 1e-12);
        let d = build_delta_tilde(&nerve, &data, &z1, &z2.lift, &Default::default(), &tol).unwrap();
        assert!(d.glues(&tol), "{d:?}");
        assert!(d.square_residual < 1e-12 && d.transform_residual < 1e-9);

        let flipped = cech::apply_signs(&z2.lift, &nerve, &SignCochain { degree: 1, values: vec![-1, 1] });
        let bad = build_delta_tilde(&nerve, &data, &z1, &flipped, &Default::default(), &tol).unwrap();
        assert!((bad.overlap_residual - 2.0).abs() < 1e-9);

        let neg = cech::apply_signs(&z2.lift, &nerve, &SignCochain { degree: 1, values: vec![-1, -1] });
        match verify_uniqueness(&nerve, &data, &z1, &z2.lift, &neg, &tol).unwrap() {
            Uniqueness::Equivalent(eps) => assert_eq!(eps[0] * eps[1], -1),
            other => panic!("{other:?}"),
        }
        let sweep = uniqueness_sweep(&nerve, &data, &z1, &z2.lift, &tol).unwrap();
        assert_eq!(sweep.patterns, 4);
        assert_eq!(sweep.glued, 2);
        assert!(sweep.violations.is_empty());
        assert!(sweep.min_failing_residual >= 1.0 - 1e-6);
    }

    #[test]
    fn premise_failure_is_reported() {
        let tol = Tolerances::default();
        let nerve = circle();
        let mut data = circle_data();
        data.pair_cocycle.transitions[0][1] = pair_const(scalar(ONE), scalar(c(2.0, 0.0)));
        data.delta = vec![const_delta(ONE), const_delta(ONE)];
        let z1 = lift_first(&nerve, &data);
        assert!(matches!(
            induce_compatible(&nerve, &data, &z1, &tol),
            Err(HfeError::Invariant { .. })
        ));
    }

    #[test]
    fn self_compat_signs() {
        let tol = Tolerances::default();
        let one = single_chart();
        for (v, eps, expect) in [(1.0, 0u8, c(2f64.sqrt(), 0.0)), (-1.0, 1, c(0.0, 2f64.sqrt()))] {
            let sections = PairSections {
                model: SymplecticModel::standard(1),
                frames: vec![Arc::new(move |_: &[f64]| {
                    let f = LagFrame {
                        u: scalar(ONE),
                        v: scalar(c(0.0, v)),
                    };
                    Ok(LagFramePair {
                        first: f.clone(),
                        second: f,
                        k: 0,
                    })
                })],
            };
            let data = PolarizationPairData::from_sections(
                1,
                0,
                Cocycle {
                    group: GroupKind::Glkd,
                    n: 1,
                    k: 0,
                    transitions: vec![],
                },
                sections,
                tol,
            );
            let z1 = SampledCocycle {
                group: GroupKind::Ml,
                n: 1,
                k: 0,
                values: vec![],
            };
            let d = self_compat(&one, &data, &z1, &Default::default(), &tol).unwrap();
            assert_eq!(d.epsilon, Some(eps));
            assert!((d.values[0][0] - expect).norm() < 1e-12);
            let (re, im) = d.positivity.unwrap();
            assert!(re > 0.0 && im < 1e-9);
            assert!(d.transform_residual < 1e-9);
        }
    }

    #[test]
    fn self_compat_rejects_sign_change() {
        let tol = Tolerances::default();
        let nerve = circle();
        let mut data = circle_data();
        data.delta = vec![
            Arc::new(|p: &[f64]| Ok(c(p[0].cos(), 0.0))),
            Arc::new(|p: &[f64]| Ok(c(p[0].cos(), 0.0))),
        ];
        let z1 = lift_first(&nerve, &data);
        assert!(self_compat(&nerve, &data, &z1, &Default::default(), &tol).is_err());
    }
}
