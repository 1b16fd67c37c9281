//! Matrix groups `Gl(n,C)`, `Sp(2n,R)`, their double covers `Ml(n,C)` and
//! `Mp(2n,R)`, and the block subgroups preserving a real isotropic subspace.
//!
//! A metaplectic element is stored as `(g, ζ)` with `ζ² = det α(g, 0)`; the
//! value of `α̃` elsewhere in the Siegel ball is obtained by continuing `ζ`
//! along a straight segment from the ball centre (see [`crate::frames::alpha_tilde`]).

use crate::error::{HfeError, Result};
use crate::frames;
use crate::linalg::{
    self, block_real, complexify, det, principal_sqrt, rel_diff, rel_diff_c, CMat, RMat, C, ONE,
};
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct MlElement {
    pub a: CMat,
    pub z: C,
}

impl MlElement {
    pub fn new(a: CMat, z: C, tol: &Tolerances) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(HfeError::Dimension("Ml matrix must be square".into()));
        }
        let x = MlElement { a, z };
        let d = det(&x.a);
        if d.norm() <= tol.singular {
            return Err(HfeError::Singular(d.norm()));
        }
        let r = x.residual();
        if r > tol.rel {
            return Err(HfeError::Invariant {
                what: "z^2 = det A".into(),
                residual: r,
            });
        }
        Ok(x)
    }

    pub fn identity(n: usize) -> Self {
        MlElement {
            a: linalg::identity(n),
            z: ONE,
        }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// `|z² − det A| / |det A|`.
    pub fn residual(&self) -> f64 {
        let d = det(&self.a);
        (self.z * self.z - d).norm() / d.norm().max(f64::MIN_POSITIVE)
    }

    pub fn project(&self) -> &CMat {
        &self.a
    }

    pub fn inverse(&self, tol: &Tolerances) -> Result<Self> {
        Ok(MlElement {
            a: linalg::inverse(&self.a, tol)?,
            z: ONE / self.z,
        })
    }

    /// The other point of the fibre over `A`.
    pub fn deck(&self) -> Self {
        MlElement {
            a: self.a.clone(),
            z: -self.z,
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        rel_diff(&self.a, &other.a).max(rel_diff_c(self.z, other.z))
    }
}

/// Componentwise product; the relation `z² = det A` is re-checked at `2·tol.rel`.
pub fn ml_mul(a: &MlElement, b: &MlElement, tol: &Tolerances) -> Result<MlElement> {
    if a.n() != b.n() {
        return Err(HfeError::Dimension(format!(
            "Ml product of sizes {} and {}",
            a.n(),
            b.n()
        )));
    }
    let out = MlElement {
        a: &a.a * &b.a,
        z: a.z * b.z,
    };
    let r = out.residual();
    if r > 2.0 * tol.rel {
        return Err(HfeError::Invariant {
            what: "z^2 = det A after product".into(),
            residual: r,
        });
    }
    Ok(out)
}

/// Both lifts of `A`, principal root first.
pub fn ml_lift(a: &CMat, tol: &Tolerances) -> Result<(MlElement, MlElement)> {
    if a.nrows() != a.ncols() {
        return Err(HfeError::Dimension("Gl matrix must be square".into()));
    }
    let d = det(a);
    if d.norm() <= tol.singular {
        return Err(HfeError::Singular(d.norm()));
    }
    let z = principal_sqrt(d);
    let up = MlElement { a: a.clone(), z };
    let down = up.deck();
    Ok((up, down))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpElement {
    pub g: RMat,
}

impl SpElement {
    pub fn identity(n: usize) -> Self {
        SpElement {
            g: RMat::identity(2 * n, 2 * n),
        }
    }

    pub fn n(&self) -> usize {
        self.g.nrows() / 2
    }

    /// Blocks `(T₁, T₂, T₃, T₄)`.
    pub fn blocks(&self) -> (RMat, RMat, RMat, RMat) {
        let n = self.n();
        (
            block_real(&self.g, 0, 0, n, n),
            block_real(&self.g, 0, n, n, n),
            block_real(&self.g, n, 0, n, n),
            block_real(&self.g, n, n, n, n),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        SpElement {
            g: &self.g * &other.g,
        }
    }

    /// Exact inverse `(T₄ᵗ, −T₂ᵗ; −T₃ᵗ, T₁ᵗ)`.
    pub fn inverse(&self) -> Self {
        let n = self.n();
        let (t1, t2, t3, t4) = self.blocks();
        let mut g = RMat::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(&t4.transpose());
        g.view_mut((0, n), (n, n)).copy_from(&(-t2.transpose()));
        g.view_mut((n, 0), (n, n)).copy_from(&(-t3.transpose()));
        g.view_mut((n, n), (n, n)).copy_from(&t1.transpose());
        SpElement { g }
    }

    /// Left action on a stacked frame `(U; V)`.
    pub fn act(&self, x: &CMat) -> CMat {
        complexify(&self.g) * x
    }

    pub fn residual(&self) -> f64 {
        let r = sp_residuals(&self.g);
        r[0].max(r[1]).max(r[2])
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let num = (&self.g - &other.g).norm();
        let den = self.g.norm().max(other.g.norm());
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// Max-entry residuals of `T₄ᵗT₁ − T₂ᵗT₃ − 1`, `T₁ᵗT₃ − T₃ᵗT₁`, `T₂ᵗT₄ − T₄ᵗT₂`.
pub fn sp_residuals(g: &RMat) -> [f64; 3] {
    let n = g.nrows() / 2;
    let t1 = block_real(g, 0, 0, n, n);
    let t2 = block_real(g, 0, n, n, n);
    let t3 = block_real(g, n, 0, n, n);
    let t4 = block_real(g, n, n, n, n);
    let amax = |m: RMat| m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    [
        amax(t4.transpose() * &t1 - t2.transpose() * &t3 - RMat::identity(n, n)),
        amax(t1.transpose() * &t3 - t3.transpose() * &t1),
        amax(t2.transpose() * &t4 - t4.transpose() * &t2),
    ]
}

/// Accept `g` when its symplectic residuals are below `tol.rel` scaled by
/// `max(1, max|g_ij|²)`.
pub fn sp_validate(g: &RMat, tol: &Tolerances) -> Result<SpElement> {
    if g.nrows() != g.ncols() || !g.nrows().is_multiple_of(2) {
        return Err(HfeError::Dimension(format!(
            "Sp matrix must be square of even size, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(HfeError::Parse("non-finite matrix entry".into()));
    }
    let r = sp_residuals(g);
    let worst = r[0].max(r[1]).max(r[2]);
    let scale = g.amax().max(1.0).powi(2);
    if worst > tol.rel * scale {
        return Err(HfeError::NotSymplectic(worst));
    }
    Ok(SpElement { g: g.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpElement {
    pub g: SpElement,
    pub zeta: C,
}

impl MpElement {
    pub fn new(g: SpElement, zeta: C, tol: &Tolerances) -> Result<Self> {
        let x = MpElement { g, zeta };
        let r = x.residual(tol)?;
        if r > tol.rel {
            return Err(HfeError::Invariant {
                what: "zeta^2 = det alpha(g, 0)".into(),
                residual: r,
            });
        }
        Ok(x)
    }

    pub fn identity(n: usize) -> Self {
        MpElement {
            g: SpElement::identity(n),
            zeta: ONE,
        }
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn residual(&self, tol: &Tolerances) -> Result<f64> {
        let zero = CMat::zeros(self.n(), self.n());
        let (_, a) = frames::alpha(&self.g, &zero, tol)?;
        let d = det(&a);
        Ok((self.zeta * self.zeta - d).norm() / d.norm())
    }

    pub fn deck(&self) -> Self {
        MpElement {
            g: self.g.clone(),
            zeta: -self.zeta,
        }
    }

    pub fn inverse(&self, tol: &Tolerances) -> Result<Self> {
        let inv = self.g.inverse();
        let w = frames::ball_image(&inv, tol)?;
        let at = frames::alpha_tilde(self, &w, tol)?;
        Ok(MpElement {
            g: inv,
            zeta: ONE / at.z,
        })
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.g.distance(&other.g).max(rel_diff_c(self.zeta, other.zeta))
    }
}

/// Both elements over `g`, principal anchor first.
pub fn mp_lift(g: &SpElement, tol: &Tolerances) -> Result<(MpElement, MpElement)> {
    let zero = CMat::zeros(g.n(), g.n());
    let (_, a) = frames::alpha(g, &zero, tol)?;
    let zeta = principal_sqrt(det(&a));
    let up = MpElement { g: g.clone(), zeta };
    let down = up.deck();
    Ok((up, down))
}

/// Product fixed by `α̃(ab, 0) = α̃(a, b·0)·α̃(b, 0)`.
pub fn mp_mul(a: &MpElement, b: &MpElement, tol: &Tolerances) -> Result<MpElement> {
    if a.n() != b.n() {
        return Err(HfeError::Dimension("Mp product of different sizes".into()));
    }
    let wb = frames::ball_image(&b.g, tol)?;
    let at = frames::alpha_tilde(a, &wb, tol)?;
    Ok(MpElement {
        g: a.g.mul(&b.g),
        zeta: at.z * b.zeta,
    })
}

/// Two elements of `Gl(n,C)` acting on the two frames of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GlPair {
    pub g1: CMat,
    pub g2: CMat,
}

impl GlPair {
    pub fn mul(&self, o: &Self) -> Self {
        GlPair {
            g1: &self.g1 * &o.g1,
            g2: &self.g2 * &o.g2,
        }
    }

    pub fn inverse(&self, tol: &Tolerances) -> Result<Self> {
        Ok(GlPair {
            g1: linalg::inverse(&self.g1, tol)?,
            g2: linalg::inverse(&self.g2, tol)?,
        })
    }

    pub fn distance(&self, o: &Self) -> f64 {
        rel_diff(&self.g1, &o.g1).max(rel_diff(&self.g2, &o.g2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlPair {
    pub g1: MlElement,
    pub g2: MlElement,
}

impl MlPair {
    pub fn project(&self) -> GlPair {
        GlPair {
            g1: self.g1.a.clone(),
            g2: self.g2.a.clone(),
        }
    }
}

/// Blocks of `(A B; 0 D)` with `A` real `k × k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlkBlocks {
    pub a: RMat,
    pub b: CMat,
    pub d: CMat,
}

/// Blocks of an element of the stabiliser of a real isotropic `k`-plane in
/// `Sp(2n,R)`. Rows are `(A_gᵗ B C D; 0 T₁ᵣ E T₂ᵣ; 0 0 A_g⁻¹ 0; 0 T₃ᵣ F T₄ᵣ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpkBlocks {
    pub a_g: RMat,
    pub b: RMat,
    pub c: RMat,
    pub d: RMat,
    pub e: RMat,
    pub f: RMat,
    pub g_r: SpElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgroupKind {
    Glk,
    Glkd,
    Mlk,
    Mlkd,
    Spk,
    Mpk,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubgroupTag {
    Glk { k: usize, blocks: GlkBlocks },
    Glkd { k: usize, first: GlkBlocks, second: GlkBlocks },
    Mlk { k: usize, blocks: GlkBlocks, z: C },
    Mlkd { k: usize, first: GlkBlocks, second: GlkBlocks, z: [C; 2] },
    Spk { k: usize, blocks: SpkBlocks },
    Mpk { k: usize, blocks: SpkBlocks, zeta: C },
}

impl SubgroupTag {
    pub fn kind(&self) -> SubgroupKind {
        match self {
            SubgroupTag::Glk { .. } => SubgroupKind::Glk,
            SubgroupTag::Glkd { .. } => SubgroupKind::Glkd,
            SubgroupTag::Mlk { .. } => SubgroupKind::Mlk,
            SubgroupTag::Mlkd { .. } => SubgroupKind::Mlkd,
            SubgroupTag::Spk { .. } => SubgroupKind::Spk,
            SubgroupTag::Mpk { .. } => SubgroupKind::Mpk,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum GroupInput<'a> {
    Gl(&'a CMat),
    GlPair(&'a GlPair),
    Ml(&'a MlElement),
    MlPair(&'a MlPair),
    Sp(&'a SpElement),
    Mp(&'a MpElement),
}

/// Extract the block data of `x` for the subgroup indexed by `k`, or report
/// the (1-based) entries violating the pattern.
pub fn subgroup_classify(x: GroupInput<'_>, k: usize, tol: &Tolerances) -> Result<SubgroupTag> {
    match x {
        GroupInput::Gl(m) => Ok(SubgroupTag::Glk {
            k,
            blocks: glk_blocks(m, k, tol)?,
        }),
        GroupInput::Ml(m) => Ok(SubgroupTag::Mlk {
            k,
            blocks: glk_blocks(&m.a, k, tol)?,
            z: m.z,
        }),
        GroupInput::GlPair(p) => {
            let (first, second) = glkd_blocks(&p.g1, &p.g2, k, tol)?;
            Ok(SubgroupTag::Glkd { k, first, second })
        }
        GroupInput::MlPair(p) => {
            let (first, second) = glkd_blocks(&p.g1.a, &p.g2.a, k, tol)?;
            Ok(SubgroupTag::Mlkd {
                k,
                first,
                second,
                z: [p.g1.z, p.g2.z],
            })
        }
        GroupInput::Sp(g) => Ok(SubgroupTag::Spk {
            k,
            blocks: spk_blocks(g, k, tol)?,
        }),
        GroupInput::Mp(g) => Ok(SubgroupTag::Mpk {
            k,
            blocks: spk_blocks(&g.g, k, tol)?,
            zeta: g.zeta,
        }),
    }
}

/// Pattern check for `(A B; 0 D)` with `A` real.
pub fn glk_blocks(m: &CMat, k: usize, tol: &Tolerances) -> Result<GlkBlocks> {
    let n = m.nrows();
    if m.ncols() != n || k > n {
        return Err(HfeError::Dimension(format!("k = {k} for a {n}x{} matrix", m.ncols())));
    }
    let mut bad = Vec::new();
    for j in 0..k {
        for i in 0..n {
            let z = m[(i, j)];
            let off = if i >= k { z.norm() } else { z.im.abs() };
            if off > tol.abs {
                bad.push((i + 1, j + 1));
            }
        }
    }
    if !bad.is_empty() {
        return Err(HfeError::Pattern(bad));
    }
    Ok(GlkBlocks {
        a: linalg::real_part(&linalg::block(m, 0, 0, k, k)),
        b: linalg::block(m, 0, k, k, n - k),
        d: linalg::block(m, k, k, n - k, n - k),
    })
}

fn glkd_blocks(g1: &CMat, g2: &CMat, k: usize, tol: &Tolerances) -> Result<(GlkBlocks, GlkBlocks)> {
    let b1 = glk_blocks(g1, k, tol)?;
    let b2 = glk_blocks(g2, k, tol)?;
    let mut bad = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if (b1.a[(i, j)] - b2.a[(i, j)]).abs() > tol.abs {
                bad.push((i + 1, j + 1));
            }
        }
    }
    if !bad.is_empty() {
        return Err(HfeError::Pattern(bad));
    }
    Ok((b1, b2))
}

/// Pattern check for the stabiliser of the first `k` position coordinates.
pub fn spk_blocks(g: &SpElement, k: usize, tol: &Tolerances) -> Result<SpkBlocks> {
    let n = g.n();
    if k > n {
        return Err(HfeError::Dimension(format!("k = {k} > n = {n}")));
    }
    let r = n - k;
    // Block row/column offsets for sizes (k, r, k, r).
    let off = [0, k, n, n + k];
    let size = [k, r, k, r];
    let zero_blocks = [(1, 0), (2, 0), (2, 1), (2, 3), (3, 0)];
    let mut bad = Vec::new();
    for &(bi, bj) in &zero_blocks {
        for i in 0..size[bi] {
            for j in 0..size[bj] {
                if g.g[(off[bi] + i, off[bj] + j)].abs() > tol.abs {
                    bad.push((off[bi] + i + 1, off[bj] + j + 1));
                }
            }
        }
    }
    let a_g = block_real(&g.g, 0, 0, k, k).transpose();
    let lower = block_real(&g.g, n, n, k, k);
    let prod = &lower * &a_g;
    // A_g⁻¹ · A_g = 1 in the (3,3) block.
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            if (prod[(i, j)] - target).abs() > tol.abs.max(tol.rel * a_g.amax().max(1.0)) {
                bad.push((n + i + 1, n + j + 1));
            }
        }
    }
    if !bad.is_empty() {
        return Err(HfeError::Pattern(bad));
    }
    let mut gr = RMat::zeros(2 * r, 2 * r);
    gr.view_mut((0, 0), (r, r)).copy_from(&block_real(&g.g, k, k, r, r));
    gr.view_mut((0, r), (r, r)).copy_from(&block_real(&g.g, k, n + k, r, r));
    gr.view_mut((r, 0), (r, r)).copy_from(&block_real(&g.g, n + k, k, r, r));
    gr.view_mut((r, r), (r, r)).copy_from(&block_real(&g.g, n + k, n + k, r, r));
    Ok(SpkBlocks {
        a_g,
        b: block_real(&g.g, 0, k, k, r),
        c: block_real(&g.g, 0, n, k, k),
        d: block_real(&g.g, 0, n + k, k, r),
        e: block_real(&g.g, k, n, r, k),
        f: block_real(&g.g, n + k, n, r, k),
        g_r: SpElement { g: gr },
    })
}

/// `(A B; 0 D)` from its blocks.
pub fn glk_from_blocks(a: &RMat, b: &CMat, d: &CMat) -> CMat {
    let k = a.nrows();
    let r = d.nrows();
    let mut m = CMat::zeros(k + r, k + r);
    m.view_mut((0, 0), (k, k)).copy_from(&complexify(a));
    m.view_mut((0, k), (k, r)).copy_from(b);
    m.view_mut((k, k), (r, r)).copy_from(d);
    m
}

/// `diag(M, M⁻ᵗ)` for real invertible `M`.
pub fn sp_from_gl(m: &RMat, tol: &Tolerances) -> Result<SpElement> {
    let n = m.nrows();
    let minv_t = linalg::inverse_real(m, tol)?.transpose();
    let mut g = RMat::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n)).copy_from(m);
    g.view_mut((n, n), (n, n)).copy_from(&minv_t);
    Ok(SpElement { g })
}

/// `(1 S; 0 1)` for symmetric `S`.
pub fn sp_shear(s: &RMat) -> SpElement {
    let n = s.nrows();
    let mut g = RMat::identity(2 * n, 2 * n);
    g.view_mut((0, n), (n, n)).copy_from(s);
    SpElement { g }
}

/// Rotation of every canonical plane `(a_j, b_j)` by `θ`: `(cos, sin; −sin, cos)`.
pub fn sp_rotation(n: usize, theta: f64) -> SpElement {
    let (s, c) = theta.sin_cos();
    let mut g = RMat::zeros(2 * n, 2 * n);
    for j in 0..n {
        g[(j, j)] = c;
        g[(j, n + j)] = s;
        g[(n + j, j)] = -s;
        g[(n + j, n + j)] = c;
    }
    SpElement { g }
}

/// Embed `g_r ∈ Sp(2(n−k))` acting on the last `n − k` canonical planes.
pub fn sp_embed_reduced(g_r: &SpElement, k: usize) -> SpElement {
    let r = g_r.n();
    let n = r + k;
    let mut g = RMat::identity(2 * n, 2 * n);
    g.view_mut((k, k), (r, r)).copy_from(&block_real(&g_r.g, 0, 0, r, r));
    g.view_mut((k, n + k), (r, r)).copy_from(&block_real(&g_r.g, 0, r, r, r));
    g.view_mut((n + k, k), (r, r)).copy_from(&block_real(&g_r.g, r, 0, r, r));
    g.view_mut((n + k, n + k), (r, r)).copy_from(&block_real(&g_r.g, r, r, r, r));
    SpElement { g }
}

/// The stabiliser element `diag(M, M⁻ᵗ) · (1 S; 0 1) · embed(g_r)` with
/// `M = (A_gᵗ Q; 0 1)`.
pub fn spk_compose(
    a_g: &RMat,
    q: &RMat,
    s: &RMat,
    g_r: &SpElement,
    tol: &Tolerances,
) -> Result<SpElement> {
    let k = a_g.nrows();
    let r = g_r.n();
    let n = k + r;
    if q.shape() != (k, r) || s.shape() != (n, n) {
        return Err(HfeError::Dimension("stabiliser block sizes".into()));
    }
    let mut m = RMat::identity(n, n);
    m.view_mut((0, 0), (k, k)).copy_from(&a_g.transpose());
    m.view_mut((0, k), (k, r)).copy_from(q);
    let sym = (s + s.transpose()) * 0.5;
    let g = sp_from_gl(&m, tol)?
        .mul(&sp_shear(&sym))
        .mul(&sp_embed_reduced(g_r, k));
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, I};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn cm(rows: &[&[C]]) -> CMat {
        CMat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn ml_mul_examples() {
        let t = tol();
        let id = MlElement::identity(2);
        assert_eq!(ml_mul(&id, &id, &t).unwrap(), id);
        let m = id.deck();
        assert_eq!(ml_mul(&m, &m, &t).unwrap(), id);
        let a = MlElement::new(cm(&[&[c(4.0, 0.0)]]), c(2.0, 0.0), &t).unwrap();
        let b = MlElement::new(cm(&[&[c(9.0, 0.0)]]), c(3.0, 0.0), &t).unwrap();
        let p = ml_mul(&a, &b, &t).unwrap();
        assert_eq!(p.a[(0, 0)], c(36.0, 0.0));
        assert_eq!(p.z, c(6.0, 0.0));
    }

    #[test]
    fn ml_mul_rejects_mismatch_and_corruption() {
        let t = tol();
        assert!(ml_mul(&MlElement::identity(1), &MlElement::identity(2), &t).is_err());
        let bad = MlElement {
            a: linalg::identity(1),
            z: c(2.0, 0.0),
        };
        assert!(ml_mul(&bad, &MlElement::identity(1), &t).is_err());
    }

    #[test]
    fn ml_lift_examples() {
        let t = tol();
        let (a, b) = ml_lift(&linalg::identity(2), &t).unwrap();
        assert_eq!(a.z, ONE);
        assert_eq!(b.z, -ONE);
        let (a, b) = ml_lift(&cm(&[&[c(-1.0, 0.0)]]), &t).unwrap();
        assert_eq!(a.z, I);
        assert_eq!(b.z, -I);
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(2.0, 0.0)]));
        let (a, _) = ml_lift(&d, &t).unwrap();
        assert!((a.z - c(2.0, 0.0)).norm() < 1e-15);
        assert!(ml_lift(&CMat::zeros(1, 1), &t).is_err());
    }

    #[test]
    fn sp_validate_examples() {
        let t = tol();
        let id = RMat::identity(4, 4);
        assert_eq!(sp_residuals(&id), [0.0; 3]);
        assert!(sp_validate(&id, &t).is_ok());
        let j = RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(sp_validate(&j, &t).is_ok());
        let d = RMat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert_eq!(sp_residuals(&d)[0], 1.0);
        assert!(matches!(sp_validate(&d, &t), Err(HfeError::NotSymplectic(r)) if r == 1.0));
    }

    #[test]
    fn sp_inverse_is_exact() {
        let g = sp_rotation(2, 0.3).mul(&sp_shear(&RMat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -2.0])));
        let p = g.mul(&g.inverse());
        assert!((p.g - RMat::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn mp_lift_examples() {
        let t = tol();
        let (a, b) = mp_lift(&SpElement::identity(2), &t).unwrap();
        assert!((a.zeta - ONE).norm() < 1e-14);
        assert!((b.zeta + ONE).norm() < 1e-14);
        let j = SpElement {
            g: RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        };
        let (a, _) = mp_lift(&j, &t).unwrap();
        let e = C::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!((a.zeta - e).norm() < 1e-14);
    }

    #[test]
    fn mp_mul_examples() {
        let t = tol();
        let e = MpElement::identity(1);
        let p = mp_mul(&e, &e, &t).unwrap();
        assert!(p.distance(&e) < 1e-14);
        let m = e.deck();
        assert!(mp_mul(&m, &m, &t).unwrap().distance(&e) < 1e-14);
        let r = mp_lift(&sp_rotation(1, std::f64::consts::FRAC_PI_2), &t).unwrap().0;
        let rr = mp_mul(&r, &r, &t).unwrap();
        assert!(rr.residual(&t).unwrap() < 1e-12);
        // r² = −1 and the rotation path through the quarter turn lands on ζ = i.
        assert!((rr.zeta - I).norm() < 1e-12);
    }

    #[test]
    fn mp_inverse_round_trip() {
        let t = tol();
        let g = sp_rotation(2, 0.9).mul(&sp_shear(&RMat::from_row_slice(2, 2, &[0.3, 0.1, 0.1, -0.7])));
        let x = mp_lift(&g, &t).unwrap().1;
        let p = mp_mul(&x, &x.inverse(&t).unwrap(), &t).unwrap();
        assert!(p.distance(&MpElement::identity(2)) < 1e-10);
    }

    #[test]
    fn classify_examples() {
        let t = tol();
        let id = linalg::identity(3);
        match subgroup_classify(GroupInput::Gl(&id), 1, &t).unwrap() {
            SubgroupTag::Glk { blocks, .. } => {
                assert_eq!(blocks.a, RMat::identity(1, 1));
                assert_eq!(blocks.d, linalg::identity(2));
            }
            other => panic!("{other:?}"),
        }
        let a = cm(&[&[c(2.0, 0.0), c(1.0, 1.0)], &[c(0.0, 0.0), c(0.0, 3.0)]]);
        match subgroup_classify(GroupInput::Gl(&a), 1, &t).unwrap() {
            SubgroupTag::Glk { blocks, .. } => {
                assert_eq!(blocks.a[(0, 0)], 2.0);
                assert_eq!(blocks.d[(0, 0)], c(0.0, 3.0));
            }
            other => panic!("{other:?}"),
        }
        let bad = cm(&[&[c(2.0, 0.0), c(1.0, 1.0)], &[c(0.5, 0.0), c(0.0, 3.0)]]);
        assert_eq!(
            subgroup_classify(GroupInput::Gl(&bad), 1, &t),
            Err(HfeError::Pattern(vec![(2, 1)]))
        );
    }

    #[test]
    fn spk_round_trip() {
        let t = tol();
        let a_g = RMat::from_row_slice(2, 2, &[-1.0, 0.3, 0.0, 2.0]);
        let q = RMat::from_row_slice(2, 1, &[0.4, -0.2]);
        let s = RMat::from_fn(3, 3, |i, j| 0.1 * (i + j) as f64);
        let g_r = sp_rotation(1, 0.7);
        let g = spk_compose(&a_g, &q, &s, &g_r, &t).unwrap();
        assert!(sp_validate(&g.g, &t).is_ok());
        let b = spk_blocks(&g, 2, &t).unwrap();
        assert!((b.a_g - a_g).amax() < 1e-14);
        // The reduced corner picks up the corner of the shear.
        let s_rr = block_real(&((&s + s.transpose()) * 0.5), 2, 2, 1, 1);
        let expect = sp_shear(&s_rr).mul(&g_r);
        assert!((b.g_r.g - expect.g).amax() < 1e-14);
        let rot = sp_rotation(3, 0.2);
        assert!(matches!(spk_blocks(&rot, 1, &t), Err(HfeError::Pattern(_))));
    }
}
