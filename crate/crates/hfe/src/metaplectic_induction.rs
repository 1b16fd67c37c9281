//! Metalinear cocycles induced from a metaplectic cocycle and positive frame
//! sections, the reduced block form for `Sp_k`-valued data, and the global
//! `δ̃_D` built from `δ̃_L`.
//!
//! Symplectic frames change by `e_β = e_α·g_αβ`, so frame coordinates satisfy
//! `g_αβ·σ_β = σ_α·N_αβ`.

use std::sync::Arc;

use crate::cech::{
    track_graph, validate_cocycle, ChartSamples, Cocycle, CocycleReport, GroupKind, Nerve,
    PointFn, SampledCocycle,
};
use crate::compatibility::{
    build_delta_tilde, DeltaTildeData, DeltaTildeOptions, PairSections, PolarizationPairData,
};
use crate::error::{HfeError, Result};
use crate::frames::{
    self, alpha, delta_l, delta_l_tilde, phi, reduce_blocks, validate_lagrangian, LagFrame,
    LagFramePair, MetaLagFrame, ReducedBlocks, SymplecticModel,
};
use crate::groups::{spk_blocks, GlPair, MlElement, MpElement, SpElement};
use crate::linalg::{self, block, det, principal_sqrt, rel_diff, rel_diff_c, CMat, C};
use crate::sampling;
use crate::tol::Tolerances;

/// How the `ζ` sheet of an Mp transition is fixed at a component root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    /// `±` the principal root of `det α(g, 0)`.
    Sheet(i8),
    Zeta(C),
}

/// Lift an Sp cocycle to Mp by continuing `ζ` over each component graph.
pub fn sample_mp_cocycle(
    nerve: &Nerve,
    sp: &Cocycle<SpElement>,
    anchors: &[Vec<Anchor>],
    tol: &Tolerances,
) -> Result<SampledCocycle<MpElement>> {
    let sampled = sp.sample(nerve)?;
    if anchors.len() != nerve.overlaps.len()
        || anchors.iter().zip(&nerve.overlaps).any(|(a, o)| a.len() != o.components.len())
    {
        return Err(HfeError::Nerve("one anchor per overlap component is required".into()));
    }
    let n = sp.n;
    let zero = CMat::zeros(n, n);
    let mut values = Vec::new();
    for (oi, ov) in nerve.overlaps.iter().enumerate() {
        let mut comps = Vec::new();
        for (cj, comp) in ov.components.iter().enumerate() {
            let t = sp.transitions[oi][cj].clone();
            let tol2 = *tol;
            let zero2 = zero.clone();
            let f = move |x: &[f64]| -> Result<C> { Ok(det(&alpha(&t(x)?, &zero2, &tol2)?.1)) };
            let d0 = f(nerve.param(comp.points[0]))?;
            let root = match anchors[oi][cj] {
                Anchor::Sheet(s) => principal_sqrt(d0) * s as f64,
                Anchor::Zeta(z) => {
                    if rel_diff_c(z * z, d0) > tol.rel.max(1e-9) {
                        return Err(HfeError::Invariant {
                            what: format!("anchor squares to det alpha(g,0) at {}", nerve.overlap_label(oi, cj, 0)),
                            residual: rel_diff_c(z * z, d0),
                        });
                    }
                    z
                }
            };
            let zs = track_graph(nerve, &comp.points, &comp.edges, &f, root, tol)?;
            comps.push(
                sampled.values[oi][cj]
                    .iter()
                    .zip(zs)
                    .map(|(g, zeta)| MpElement { g: g.clone(), zeta })
                    .collect(),
            );
        }
        values.push(comps);
    }
    Ok(SampledCocycle {
        group: GroupKind::Mp,
        n,
        k: sp.k,
        values,
    })
}

#[derive(Clone)]
pub struct MetaplecticBundleData {
    pub n: usize,
    pub k: usize,
    pub d_adapted: bool,
    pub sp: Cocycle<SpElement>,
    pub mp: SampledCocycle<MpElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleReport {
    pub sp: CocycleReport,
    pub mp: CocycleReport,
    /// Overlap points whose transition is outside `Sp_k`.
    pub pattern_failures: Vec<String>,
    pub passed: bool,
}

pub fn validate_bundle(nerve: &Nerve, data: &MetaplecticBundleData, tol: &Tolerances) -> Result<BundleReport> {
    let sp = validate_cocycle(nerve, &data.sp.sample(nerve)?, tol)?;
    let mp = validate_cocycle(nerve, &data.mp, tol)?;
    let mut pattern_failures = Vec::new();
    if data.d_adapted {
        for (oi, ov) in data.mp.values.iter().enumerate() {
            for (cj, comp) in ov.iter().enumerate() {
                for (li, g) in comp.iter().enumerate() {
                    if let Err(e) = spk_blocks(&g.g, data.k, tol) {
                        pattern_failures.push(format!("{}: {e}", nerve.overlap_label(oi, cj, li)));
                    }
                }
            }
        }
    }
    Ok(BundleReport {
        passed: sp.passed && mp.passed && pattern_failures.is_empty(),
        sp,
        mp,
        pattern_failures,
    })
}

/// Least-squares `N` with `g·X_β = X_α·N`, and the relative residual.
pub fn transition_n(g: &SpElement, x_alpha: &LagFrame, x_beta: &LagFrame, tol: &Tolerances) -> Result<(CMat, f64)> {
    let xa = x_alpha.stacked();
    let rhs = g.act(&x_beta.stacked());
    let gram = xa.adjoint() * &xa;
    let n = linalg::inverse(&gram, tol)? * xa.adjoint() * &rhs;
    let r = rel_diff(&(&xa * &n), &rhs);
    Ok((n, r))
}

/// Positive frames per chart, validated at every chart sample point, with
/// metalinear lifts `σ̃_α = (W_α, (C_α, z_α))`; `z_α` is continued over the
/// chart graph from the principal root, negated on charts with `flip`.
pub fn lift_sections(
    nerve: &Nerve,
    sections: &[PointFn<LagFrame>],
    flips: &[bool],
    tol: &Tolerances,
) -> Result<ChartSamples<MetaLagFrame>> {
    if sections.len() != nerve.charts.len() || flips.len() != nerve.charts.len() {
        return Err(HfeError::Nerve("one section per chart is required".into()));
    }
    let mut out = Vec::new();
    for (ci, ch) in nerve.charts.iter().enumerate() {
        let s = sections[ci].clone();
        let tol2 = *tol;
        let f = move |x: &[f64]| -> Result<C> { Ok(det(&phi(&s(x)?, &tol2)?.1)) };
        let mut wc = Vec::new();
        for &p in &ch.points {
            let fr = (sections[ci])(nerve.param(p))?;
            let model = SymplecticModel::standard(fr.n());
            let (_, rep) = validate_lagrangian(&fr.u, &fr.v, &model, tol)?;
            if !rep.positive {
                return Err(HfeError::NotPositive(rep.min_eigenvalue));
            }
            wc.push(phi(&fr, tol)?);
        }
        let root = principal_sqrt(det(&wc[0].1));
        let root = if flips[ci] { -root } else { root };
        let zs = track_graph(nerve, &ch.points, &ch.edges, &f, root, tol)?;
        out.push(
            wc.into_iter()
                .zip(zs)
                .map(|((w, c), z)| MetaLagFrame {
                    w,
                    c: MlElement { a: c, z },
                })
                .collect(),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecipeOutput {
    /// `Ñ_αβ = C̃₂⁻¹C̃₁` at every overlap point.
    pub lift: SampledCocycle<MlElement>,
    /// Largest entry of `|W₁ − W₂|`.
    pub w_residual: f64,
    /// Largest relative `|ρ(Ñ) − N|` with `N` from least squares.
    pub rho_residual: f64,
    /// Largest least-squares residual of `g·σ_β = σ_α·N`.
    pub section_residual: f64,
    pub cocycle: CocycleReport,
}

/// Induce the metalinear transition functions of a positive polarization
/// from the metaplectic cocycle and per-chart frame sections.
pub fn recipe(
    nerve: &Nerve,
    data: &MetaplecticBundleData,
    sections: &[PointFn<LagFrame>],
    flips: &[bool],
    tol: &Tolerances,
) -> Result<RecipeOutput> {
    data.mp.check_shape(nerve)?;
    let lifted = lift_sections(nerve, sections, flips, tol)?;
    let mut w_res = 0.0f64;
    let mut rho_res = 0.0f64;
    let mut sec_res = 0.0f64;
    let mut values = Vec::new();
    for (oi, ov) in nerve.overlaps.iter().enumerate() {
        let mut comps = Vec::new();
        for (cj, comp) in ov.components.iter().enumerate() {
            let mut vals = Vec::new();
            for (li, &p) in comp.points.iter().enumerate() {
                let label = nerve.overlap_label(oi, cj, li);
                let gt = &data.mp.values[oi][cj][li];
                let sa = &lifted[ov.a][nerve.chart_position(ov.a, p).expect("validated nerve")];
                let sb = &lifted[ov.b][nerve.chart_position(ov.b, p).expect("validated nerve")];
                let moved = sb.left(gt, tol)?;
                let wr = linalg::max_abs(&(&moved.w - &sa.w));
                if wr > tol.rel.max(1e-9) {
                    return Err(HfeError::Check(format!(
                        "{label}: g·W_beta differs from W_alpha by {wr:e}; sections are not related by the cocycle"
                    )));
                }
                w_res = w_res.max(wr);
                let ca_inv = linalg::inverse(&sa.c.a, tol)?;
                let nt = MlElement {
                    a: &ca_inv * &moved.c.a,
                    z: moved.c.z / sa.c.z,
                };
                let x_a = sa.project();
                let x_b = sb.project();
                let (n_ls, r) = transition_n(&gt.g, &x_a, &x_b, tol)?;
                sec_res = sec_res.max(r);
                rho_res = rho_res.max(rel_diff(&nt.a, &n_ls));
                vals.push(nt);
            }
            comps.push(vals);
        }
        values.push(comps);
    }
    let lift = SampledCocycle {
        group: GroupKind::Ml,
        n: data.n,
        k: data.k,
        values,
    };
    let cocycle = validate_cocycle(nerve, &lift, tol)?;
    Ok(RecipeOutput {
        lift,
        w_residual: w_res,
        rho_residual: rho_res,
        section_residual: sec_res,
        cocycle,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub blocks: ReducedBlocks,
    pub positive: bool,
    pub reduced_positive: bool,
}

/// Reduced block form of a frame adapted to the first `k` canonical
/// positions, with positivity of the full and reduced frames compared.
pub fn reduce_d_adapted(frame: &LagFrame, k: usize, tol: &Tolerances) -> Result<Reduction> {
    let n = frame.n();
    let blocks = reduce_blocks(frame, k, tol)?;
    let (_, big) = validate_lagrangian(&frame.u, &frame.v, &SymplecticModel::standard(n), tol)?;
    let reduced_positive = if k == n {
        true
    } else {
        let (_, r) = validate_lagrangian(&blocks.u_r, &blocks.v_r, &SymplecticModel::standard(n - k), tol)?;
        r.positive
    };
    if big.positive != reduced_positive {
        return Err(HfeError::Check(format!(
            "positivity of the frame ({}) and its reduced block ({reduced_positive}) disagree",
            big.positive
        )));
    }
    Ok(Reduction {
        blocks,
        positive: big.positive,
        reduced_positive,
    })
}

/// For `g ∈ Sp_k` and `W = diag(1, W_r)`: the largest deviation of `g·W`
/// from `diag(1, g_r·W_r)` and of `α(g, W)` from `(A_gᵗ *; 0 α(g_r, W_r))`.
pub fn spk_reduction_residual(g: &SpElement, w_r: &CMat, k: usize, tol: &Tolerances) -> Result<f64> {
    let n = g.n();
    let r = n - k;
    let blocks = spk_blocks(g, k, tol)?;
    let w = linalg::block_diag(&linalg::identity(k), w_r);
    let (gw, a) = alpha(g, &w, tol)?;
    let (gw_r, a_r) = if r == 0 {
        (CMat::zeros(0, 0), CMat::zeros(0, 0))
    } else {
        alpha(&blocks.g_r, w_r, tol)?
    };
    let expect_w = linalg::block_diag(&linalg::identity(k), &gw_r);
    let mut res = linalg::max_abs(&(&gw - &expect_w));
    let top = block(&a, 0, 0, k, k);
    res = res.max(linalg::max_abs(&(top - linalg::complexify(&blocks.a_g.transpose()))));
    res = res.max(linalg::max_abs(&block(&a, k, 0, r, k)));
    res = res.max(linalg::max_abs(&(block(&a, k, k, r, r) - a_r)));
    Ok(res)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaDData {
    /// `δ̃_{D,α}` at every chart sample point.
    pub values: ChartSamples<C>,
    /// Largest relative change of `δ̃_L` under the diagonal Mp transition.
    pub overlap_residual: f64,
    pub overlap_failures: Vec<String>,
    /// Largest relative `|δ̃_D² − δ_L|`.
    pub square_residual: f64,
    /// Largest relative residual of the `Ml_k²` transformation law.
    pub transform_residual: f64,
    /// Largest relative `|δ_k − δ_L|` on the pair sections.
    pub restriction_residual: f64,
}

fn split_pairs(pairs: &[PointFn<LagFramePair>]) -> (Vec<PointFn<LagFrame>>, Vec<PointFn<LagFrame>>) {
    let first = pairs
        .iter()
        .map(|f| {
            let f = f.clone();
            Arc::new(move |x: &[f64]| Ok(f(x)?.first)) as PointFn<LagFrame>
        })
        .collect();
    let second = pairs
        .iter()
        .map(|f| {
            let f = f.clone();
            Arc::new(move |x: &[f64]| Ok(f(x)?.second)) as PointFn<LagFrame>
        })
        .collect();
    (first, second)
}

/// `δ̃_{D,α} = δ̃_L(σ̃¹_α, σ̃²_α)` per chart, its invariance under the
/// diagonal action of each `Mp_k` transition, and its defining properties.
pub fn build_delta_d_tilde(
    nerve: &Nerve,
    data: &MetaplecticBundleData,
    pairs: &[PointFn<LagFramePair>],
    flips: [&[bool]; 2],
    opts: &DeltaTildeOptions,
    tol: &Tolerances,
) -> Result<DeltaDData> {
    if !data.d_adapted {
        return Err(HfeError::Check("bundle is not D-adapted".into()));
    }
    let k = data.k;
    let (s1, s2) = split_pairs(pairs);
    let l1 = lift_sections(nerve, &s1, flips[0], tol)?;
    let l2 = lift_sections(nerve, &s2, flips[1], tol)?;
    let model = SymplecticModel::standard(data.n);
    let mut values = Vec::new();
    let mut square = 0.0f64;
    let mut restriction = 0.0f64;
    let mut transform = 0.0f64;
    let mut rng = sampling::rng(opts.seed);
    for (ci, ch) in nerve.charts.iter().enumerate() {
        let mut vals = Vec::new();
        for (li, &p) in ch.points.iter().enumerate() {
            let (x1, x2) = (&l1[ci][li], &l2[ci][li]);
            let v = delta_l_tilde(x1, x2, k, tol)?;
            let dl = delta_l(&x1.project(), &x2.project(), k, tol)?;
            square = square.max(rel_diff_c(v * v, dl));
            let pair = (pairs[ci])(nerve.param(p))?;
            let dk = frames::delta(&pair, &model, tol)?;
            restriction = restriction.max(rel_diff_c(dk, dl));
            vals.push(v);
        }
        for j in 0..opts.samples_per_chart {
            let li = j % ch.points.len();
            let (x1, x2) = (&l1[ci][li], &l2[ci][li]);
            let h = sampling::mlkd_pair(data.n, k, &mut rng, tol)?;
            let y1 = x1.right(&h.g1, tol)?;
            let y2 = x2.right(&h.g2, tol)?;
            let lhs = delta_l_tilde(&y1, &y2, k, tol)?;
            let da = linalg::det_real(&linalg::real_part(&block(&h.g1.a, 0, 0, k, k))).abs();
            let rhs = h.g1.z.conj() * h.g2.z / da * vals[li];
            transform = transform.max(rel_diff_c(lhs, rhs));
        }
        values.push(vals);
    }
    let mut overlap = 0.0f64;
    let mut failures = Vec::new();
    for (oi, ov) in nerve.overlaps.iter().enumerate() {
        for (cj, comp) in ov.components.iter().enumerate() {
            for (li, &p) in comp.points.iter().enumerate() {
                let gt = &data.mp.values[oi][cj][li];
                let pb = nerve.chart_position(ov.b, p).expect("validated nerve");
                let y1 = l1[ov.b][pb].left(gt, tol)?;
                let y2 = l2[ov.b][pb].left(gt, tol)?;
                let moved = delta_l_tilde(&y1, &y2, k, tol)?;
                let r = rel_diff_c(moved, values[ov.b][pb]);
                if r > tol.rel.max(1e-9) {
                    failures.push(nerve.overlap_label(oi, cj, li));
                }
                overlap = overlap.max(r);
            }
        }
    }
    Ok(DeltaDData {
        values,
        overlap_residual: overlap,
        overlap_failures: failures,
        square_residual: square,
        transform_residual: transform,
        restriction_residual: restriction,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckReport {
    pub first: RecipeOutput,
    pub second: RecipeOutput,
    pub delta_tilde: DeltaTildeData,
    pub delta_d: DeltaDData,
    /// The constant `±1` relating `δ̃_D` to the construction from the lifts.
    pub global_sign: i8,
    /// Largest deviation of `δ̃_D / δ̃` from `global_sign`.
    pub sign_residual: f64,
}

/// The pair cocycle `(N¹, N²)` recomputed by least squares at any point.
pub fn pair_cocycle_from_sections(
    nerve: &Nerve,
    data: &MetaplecticBundleData,
    pairs: &[PointFn<LagFramePair>],
    tol: &Tolerances,
) -> Cocycle<GlPair> {
    let transitions = nerve
        .overlaps
        .iter()
        .enumerate()
        .map(|(oi, ov)| {
            data.sp.transitions[oi]
                .iter()
                .map(|g| {
                    let g = g.clone();
                    let pa = pairs[ov.a].clone();
                    let pb = pairs[ov.b].clone();
                    let tol = *tol;
                    Arc::new(move |x: &[f64]| -> Result<GlPair> {
                        let g = g(x)?;
                        let (a, b) = (pa(x)?, pb(x)?);
                        let (g1, _) = transition_n(&g, &a.first, &b.first, &tol)?;
                        let (g2, _) = transition_n(&g, &a.second, &b.second, &tol)?;
                        Ok(GlPair { g1, g2 })
                    }) as PointFn<GlPair>
                })
                .collect()
        })
        .collect();
    Cocycle {
        group: GroupKind::Glkd,
        n: data.n,
        k: data.k,
        transitions,
    }
}

/// Run the recipe on both polarizations, build `δ̃` from the two induced
/// lifts, and compare it with `δ̃_D` on the pair sections.
pub fn cross_check(
    nerve: &Nerve,
    data: &MetaplecticBundleData,
    pairs: &[PointFn<LagFramePair>],
    flips: [&[bool]; 2],
    opts: &DeltaTildeOptions,
    tol: &Tolerances,
) -> Result<CrossCheckReport> {
    let (s1, s2) = split_pairs(pairs);
    let first = recipe(nerve, data, &s1, flips[0], tol)?;
    let second = recipe(nerve, data, &s2, flips[1], tol)?;
    let pair_data = PolarizationPairData::from_sections(
        data.n,
        data.k,
        pair_cocycle_from_sections(nerve, data, pairs, tol),
        PairSections {
            model: SymplecticModel::standard(data.n),
            frames: pairs.to_vec(),
        },
        *tol,
    );
    let delta_tilde = build_delta_tilde(nerve, &pair_data, &first.lift, &second.lift, opts, tol)?;
    let delta_d = build_delta_d_tilde(nerve, data, pairs, flips, opts, tol)?;
    let ratio0 = delta_d.values[0][0] / delta_tilde.values[0][0];
    let global_sign: i8 = if ratio0.re >= 0.0 { 1 } else { -1 };
    let mut sign_residual = 0.0f64;
    for (a, b) in delta_d.values.iter().zip(&delta_tilde.values) {
        for (x, y) in a.iter().zip(b) {
            sign_residual = sign_residual.max((x / y - C::new(global_sign as f64, 0.0)).norm());
        }
    }
    Ok(CrossCheckReport {
        first,
        second,
        delta_tilde,
        delta_d,
        global_sign,
        sign_residual,
    })
}
