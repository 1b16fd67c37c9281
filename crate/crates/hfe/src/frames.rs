//! Lagrangian frames in coordinates relative to a symplectic frame, the
//! pairing determinants, the Siegel-ball description of positive frames and
//! pointwise pairing densities.
//!
//! A frame of `n` vectors is a pair `(U, V)` of `n × n` complex matrices: the
//! `j`-th vector is `Σ_i U_ij a_i + V_ij b_i` for a symplectic frame `(a; b)`.

use nalgebra::DVector;

use crate::error::{HfeError, Result};
use crate::groups::{ml_mul, MlElement, MpElement, SpElement};
use crate::linalg::{
    self, block, det, hermitian_min_eigenvalue, inverse, max_abs, operator_norm, stack, track_sqrt,
    unstack, CMat, RMat, C, I, ONE,
};
use crate::tol::Tolerances;

/// A complex antisymmetric form on `C^{2n}`; `form(x, y) = xᵗ Ω y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticModel {
    pub n: usize,
    pub omega: CMat,
}

impl SymplecticModel {
    /// `ω₀(a_i, b_j) = δ_ij`.
    pub fn standard(n: usize) -> Self {
        let mut omega = CMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            omega[(i, n + i)] = ONE;
            omega[(n + i, i)] = -ONE;
        }
        SymplecticModel { n, omega }
    }

    pub fn new(omega: CMat, tol: &Tolerances) -> Result<Self> {
        let m = omega.nrows();
        if m != omega.ncols() || !m.is_multiple_of(2) {
            return Err(HfeError::Dimension("form must be square of even size".into()));
        }
        let asym = max_abs(&(&omega + omega.transpose()));
        if asym > tol.abs {
            return Err(HfeError::Invariant {
                what: "form antisymmetry".into(),
                residual: asym,
            });
        }
        let d = det(&omega).norm();
        if d <= tol.singular {
            return Err(HfeError::Singular(d));
        }
        Ok(SymplecticModel { n: m / 2, omega })
    }

    /// Gram matrix `ω(x_i, y_j)` for the columns of `x` and `y`.
    pub fn gram(&self, x: &CMat, y: &CMat) -> CMat {
        x.transpose() * &self.omega * y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagFrame {
    pub u: CMat,
    pub v: CMat,
}

impl LagFrame {
    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn stacked(&self) -> CMat {
        stack(&self.u, &self.v)
    }

    pub fn from_stacked(x: &CMat) -> Self {
        let (u, v) = unstack(x);
        LagFrame { u, v }
    }

    /// Right `Gl(n,C)` action `(UA, VA)`.
    pub fn right(&self, a: &CMat) -> Self {
        LagFrame {
            u: &self.u * a,
            v: &self.v * a,
        }
    }

    /// Left `Sp(2n,R)` action on the stacked coordinates.
    pub fn left(&self, g: &SpElement) -> Self {
        LagFrame::from_stacked(&g.act(&self.stacked()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    /// `max |ω(u_i, u_j)|` relative to `‖X‖²`.
    pub isotropy_residual: f64,
    /// `det(X†X)`, which is `det(U†U + V†V)` in the standard model.
    pub independence: C,
    /// `H_ij = −i ω(ū_i, u_j)`.
    pub hermitian: CMat,
    pub min_eigenvalue: f64,
    pub positive: bool,
}

/// Check independence and isotropy and compute the positivity data.
pub fn validate_lagrangian(
    u: &CMat,
    v: &CMat,
    model: &SymplecticModel,
    tol: &Tolerances,
) -> Result<(LagFrame, FrameReport)> {
    let n = model.n;
    if u.shape() != (n, n) || v.shape() != (n, n) {
        return Err(HfeError::Dimension(format!(
            "frame blocks must be {n}x{n}, got {:?} and {:?}",
            u.shape(),
            v.shape()
        )));
    }
    if u.iter().chain(v.iter()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(HfeError::Parse("non-finite frame entry".into()));
    }
    let x = stack(u, v);
    let scale = x.norm().powi(2).max(f64::MIN_POSITIVE);
    let independence = det(&(x.adjoint() * &x));
    if independence.norm() <= tol.singular * scale.powi(n as i32) {
        return Err(HfeError::NotLagrangian(format!(
            "vectors are dependent (det = {:e})",
            independence.norm()
        )));
    }
    let iso = max_abs(&model.gram(&x, &x)) / scale;
    if iso > tol.rel {
        return Err(HfeError::NotLagrangian(format!("isotropy residual {iso:e}")));
    }
    let hermitian = model.gram(&x.map(|z| z.conj()), &x) * (-I);
    let min_eigenvalue = hermitian_min_eigenvalue(&hermitian);
    Ok((
        LagFrame {
            u: u.clone(),
            v: v.clone(),
        },
        FrameReport {
            isotropy_residual: iso,
            independence,
            hermitian,
            min_eigenvalue,
            positive: min_eigenvalue >= -tol.abs,
        },
    ))
}

/// Express `frame_coords · (U; V)` in ambient coordinates, where row `i` of
/// `frame_coords` holds the ambient coordinates of the `i`-th vector of the
/// symplectic frame `(e; f)`.
pub fn frame_compose(
    frame_coords: &CMat,
    x: &LagFrame,
    model: &SymplecticModel,
    tol: &Tolerances,
) -> Result<LagFrame> {
    let n = model.n;
    if frame_coords.shape() != (2 * n, 2 * n) {
        return Err(HfeError::Dimension("symplectic frame must be 2n x 2n".into()));
    }
    let cols = frame_coords.transpose();
    let gram = model.gram(&cols, &cols);
    let target = SymplecticModel::standard(n).omega;
    let r = linalg::rel_diff(&gram, &target);
    if r > tol.rel {
        return Err(HfeError::NotSymplectic(r));
    }
    Ok(LagFrame::from_stacked(&(cols * x.stacked())))
}

/// Two frames whose first `k` vectors are real and shared.
#[derive(Debug, Clone, PartialEq)]
pub struct LagFramePair {
    pub first: LagFrame,
    pub second: LagFrame,
    pub k: usize,
}

impl LagFramePair {
    pub fn new(first: LagFrame, second: LagFrame, k: usize, tol: &Tolerances) -> Result<Self> {
        let n = first.n();
        if second.n() != n || k > n {
            return Err(HfeError::Dimension(format!("pair with n = {n}, k = {k}")));
        }
        let x1 = first.stacked();
        let x2 = second.stacked();
        let mut bad = Vec::new();
        for j in 0..k {
            for i in 0..2 * n {
                let a = x1[(i, j)];
                let b = x2[(i, j)];
                if a.im.abs() > tol.abs || b.im.abs() > tol.abs || (a - b).norm() > tol.abs {
                    bad.push((i + 1, j + 1));
                }
            }
        }
        if !bad.is_empty() {
            return Err(HfeError::Pattern(bad));
        }
        Ok(LagFramePair { first, second, k })
    }

    /// Right action of `(g₁, g₂)`, which must preserve the shared real block.
    pub fn right(&self, g1: &CMat, g2: &CMat) -> Self {
        LagFramePair {
            first: self.first.right(g1),
            second: self.second.right(g2),
            k: self.k,
        }
    }
}

/// `δ_k(u, v) = det(−i ω(ū_i, v_j))_{i,j>k}`; the empty determinant is 1.
pub fn delta(pair: &LagFramePair, model: &SymplecticModel, tol: &Tolerances) -> Result<C> {
    let n = pair.first.n();
    let k = pair.k;
    let x1 = pair.first.stacked().map(|z| z.conj());
    let x2 = pair.second.stacked();
    let m = model.gram(&x1, &x2) * (-I);
    let sub = block(&m, k, k, n - k, n - k);
    let d = det(&sub);
    let scale = (x1.norm() * x2.norm()).powi((n - k) as i32).max(1.0);
    if d.norm() < tol.singular * scale {
        return Err(HfeError::DeltaVanishes(d.norm()));
    }
    Ok(d)
}

/// `Φ(U, V) = ((U + iV)(U − iV)⁻¹, U − iV)`.
pub fn phi(x: &LagFrame, tol: &Tolerances) -> Result<(CMat, CMat)> {
    let c = &x.u - &x.v * I;
    let cinv = inverse(&c, tol).map_err(|e| match e {
        HfeError::Singular(d) => HfeError::NotPositive(-d),
        other => other,
    })?;
    let w = (&x.u + &x.v * I) * cinv;
    Ok((w, c))
}

/// `Φ⁻¹(W, C) = (½(1 + W)C, (i/2)(1 − W)C)`.
pub fn phi_inv(w: &CMat, c: &CMat) -> LagFrame {
    let n = w.nrows();
    let id = linalg::identity(n);
    LagFrame {
        u: (&id + w) * c * C::new(0.5, 0.0),
        v: (&id - w) * c * C::new(0.0, 0.5),
    }
}

/// Symmetry and operator-norm check for a point of the closed Siegel ball.
pub fn validate_ball(w: &CMat, tol: &Tolerances) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(HfeError::Dimension("ball point must be square".into()));
    }
    let asym = linalg::asymmetry(w);
    if asym > tol.abs.max(tol.rel * max_abs(w)) {
        return Err(HfeError::Invariant {
            what: "ball point symmetry".into(),
            residual: asym,
        });
    }
    let nrm = operator_norm(w);
    if nrm > 1.0 + tol.abs.max(tol.rel) {
        return Err(HfeError::Invariant {
            what: "ball point operator norm <= 1".into(),
            residual: nrm - 1.0,
        });
    }
    Ok(())
}

/// `(g·W, α(g, W))` computed as `Φ(g · Φ⁻¹(W, 1))`.
pub fn alpha(g: &SpElement, w: &CMat, tol: &Tolerances) -> Result<(CMat, CMat)> {
    let n = g.n();
    if w.shape() != (n, n) {
        return Err(HfeError::Dimension("ball point size".into()));
    }
    let x = phi_inv(w, &linalg::identity(n)).left(g);
    phi(&x, tol)
}

/// `g · 0`.
pub fn ball_image(g: &SpElement, tol: &Tolerances) -> Result<CMat> {
    let n = g.n();
    Ok(alpha(g, &CMat::zeros(n, n), tol)?.0)
}

/// `α̃(g̃, W) = (α(g, W), z)` with `z` continued from the anchor `ζ` along
/// `t ↦ tW`.
pub fn alpha_tilde(gt: &MpElement, w: &CMat, tol: &Tolerances) -> Result<MlElement> {
    let (_, a) = alpha(&gt.g, w, tol)?;
    let f = |t: f64| -> Result<C> {
        let wt = w * C::new(t, 0.0);
        Ok(det(&alpha(&gt.g, &wt, tol)?.1))
    };
    let z = track_sqrt(f, gt.zeta, tol)?;
    Ok(MlElement { a, z })
}

/// A point `(W, C̃)` of the metalinear lift of positive frames.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaLagFrame {
    pub w: CMat,
    pub c: MlElement,
}

impl MetaLagFrame {
    pub fn project(&self) -> LagFrame {
        phi_inv(&self.w, &self.c.a)
    }

    /// Right action by `Ml(n,C)`.
    pub fn right(&self, g: &MlElement, tol: &Tolerances) -> Result<Self> {
        Ok(MetaLagFrame {
            w: self.w.clone(),
            c: ml_mul(&self.c, g, tol)?,
        })
    }

    /// Left action `g̃ · (W, C̃) = (g·W, α̃(g̃, W)·C̃)`.
    pub fn left(&self, gt: &MpElement, tol: &Tolerances) -> Result<Self> {
        let (gw, _) = alpha(&gt.g, &self.w, tol)?;
        let at = alpha_tilde(gt, &self.w, tol)?;
        Ok(MetaLagFrame {
            w: gw,
            c: ml_mul(&at, &self.c, tol)?,
        })
    }
}

/// Continuous root of `det(½(1 − W₂†W₁))` tracked along the polygon
/// `(0,0) → p₁ → … → (W₁, W₂)` starting from `2^{−n/2}`.
pub fn gamma_along(path: &[(CMat, CMat)], tol: &Tolerances) -> Result<C> {
    let n = match path.first() {
        Some((w, _)) => w.nrows(),
        None => return Err(HfeError::Dimension("empty path".into())),
    };
    let id = linalg::identity(n);
    let f_at = |w1: &CMat, w2: &CMat| det(&((&id - w2.adjoint() * w1) * C::new(0.5, 0.0)));
    let mut s = C::new(0.5f64.powf(n as f64 / 2.0), 0.0);
    let mut prev = (CMat::zeros(n, n), CMat::zeros(n, n));
    for (w1, w2) in path {
        if w1.shape() != (n, n) || w2.shape() != (n, n) {
            return Err(HfeError::Dimension("ball points of mixed size".into()));
        }
        let (a1, a2) = (&prev.0, &prev.1);
        let f = |t: f64| -> Result<C> {
            let x1 = a1 * C::new(1.0 - t, 0.0) + w1 * C::new(t, 0.0);
            let x2 = a2 * C::new(1.0 - t, 0.0) + w2 * C::new(t, 0.0);
            Ok(f_at(&x1, &x2))
        };
        s = track_sqrt(f, s, tol)?;
        prev = (w1.clone(), w2.clone());
    }
    Ok(s)
}

/// `Γ(W₁, W₂)` along the straight route `t ↦ (tW₁, tW₂)`.
pub fn gamma(w1: &CMat, w2: &CMat, tol: &Tolerances) -> Result<C> {
    gamma_along(&[(w1.clone(), w2.clone())], tol)
}

/// `det(½(1 − W₂†W₁))`.
pub fn gamma_square(w1: &CMat, w2: &CMat) -> C {
    let id = linalg::identity(w1.nrows());
    det(&((&id - w2.adjoint() * w1) * C::new(0.5, 0.0)))
}

/// Blocks of a frame `U = (A B; 0 U_r)`, `V = (0 0; 0 V_r)` with `A` real.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBlocks {
    pub a: RMat,
    pub b: CMat,
    pub u_r: CMat,
    pub v_r: CMat,
}

/// Pattern check for the reduced form of a frame whose first `k` vectors lie
/// in the span of the first `k` symplectic frame vectors.
pub fn reduce_blocks(x: &LagFrame, k: usize, tol: &Tolerances) -> Result<ReducedBlocks> {
    let n = x.n();
    if k > n {
        return Err(HfeError::Dimension(format!("k = {k} > n = {n}")));
    }
    let mut bad = Vec::new();
    for j in 0..k {
        for i in 0..n {
            let zu = x.u[(i, j)];
            let u_off = if i < k { zu.im.abs() } else { zu.norm() };
            if u_off > tol.abs {
                bad.push((i + 1, j + 1));
            }
        }
    }
    for i in 0..k {
        for j in 0..n {
            if x.v[(i, j)].norm() > tol.abs {
                bad.push((n + i + 1, j + 1));
            }
        }
    }
    for i in k..n {
        for j in 0..k {
            if x.v[(i, j)].norm() > tol.abs {
                bad.push((n + i + 1, j + 1));
            }
        }
    }
    if !bad.is_empty() {
        return Err(HfeError::Pattern(bad));
    }
    let a = linalg::real_part(&block(&x.u, 0, 0, k, k));
    if linalg::det_real(&a).abs() <= tol.singular {
        return Err(HfeError::Singular(linalg::det_real(&a).abs()));
    }
    Ok(ReducedBlocks {
        a,
        b: block(&x.u, 0, k, k, n - k),
        u_r: block(&x.u, k, k, n - k, n - k),
        v_r: block(&x.v, k, k, n - k, n - k),
    })
}

fn shared_a(a1: &RMat, a2: &RMat, tol: &Tolerances) -> Result<()> {
    let mut bad = Vec::new();
    for i in 0..a1.nrows() {
        for j in 0..a1.ncols() {
            if (a1[(i, j)] - a2[(i, j)]).abs() > tol.abs {
                bad.push((i + 1, j + 1));
            }
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(HfeError::Pattern(bad))
    }
}

/// `δ_L = det(i (V₁ᵣ†U₂ᵣ − U₁ᵣ†V₂ᵣ))` for a pair in reduced block form.
pub fn delta_l(f1: &LagFrame, f2: &LagFrame, k: usize, tol: &Tolerances) -> Result<C> {
    let b1 = reduce_blocks(f1, k, tol)?;
    let b2 = reduce_blocks(f2, k, tol)?;
    shared_a(&b1.a, &b2.a, tol)?;
    let m = (b1.v_r.adjoint() * &b2.u_r - b1.u_r.adjoint() * &b2.v_r) * I;
    Ok(det(&m))
}

/// Blocks of a meta-frame `W = diag(1, W_r)`, `C = (A B; 0 C_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMetaBlocks {
    pub a: RMat,
    pub w_r: CMat,
    pub c_r: CMat,
}

pub fn reduce_meta_blocks(w: &CMat, c: &CMat, k: usize, tol: &Tolerances) -> Result<ReducedMetaBlocks> {
    let n = w.nrows();
    if k > n || c.shape() != (n, n) {
        return Err(HfeError::Dimension(format!("meta-frame with n = {n}, k = {k}")));
    }
    let mut bad = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i < k || j < k {
                let target = if i == j { ONE } else { C::new(0.0, 0.0) };
                if (w[(i, j)] - target).norm() > tol.abs.max(tol.rel) {
                    bad.push((i + 1, j + 1));
                }
            }
        }
    }
    let gl = crate::groups::glk_blocks(c, k, tol);
    if !bad.is_empty() {
        return Err(HfeError::Pattern(bad));
    }
    let gl = gl?;
    Ok(ReducedMetaBlocks {
        a: gl.a,
        w_r: block(w, k, k, n - k, n - k),
        c_r: gl.d,
    })
}

/// `δ_L` through the ball description:
/// `conj(det C₁)·det C₂·det(A)⁻²·det(½(1 − W₁ᵣ†W₂ᵣ))`.
pub fn delta_l_wc(
    (w1, c1): (&CMat, &CMat),
    (w2, c2): (&CMat, &CMat),
    k: usize,
    tol: &Tolerances,
) -> Result<C> {
    let b1 = reduce_meta_blocks(w1, c1, k, tol)?;
    let b2 = reduce_meta_blocks(w2, c2, k, tol)?;
    shared_a(&b1.a, &b2.a, tol)?;
    let da = linalg::det_real(&b1.a);
    Ok(det(c1).conj() * det(c2) / (da * da) * gamma_square(&b2.w_r, &b1.w_r))
}

/// `δ̃_L = z̄₁ z₂ |det A|⁻¹ Γ(W₂ᵣ, W₁ᵣ)`. Expanding `δ_L` with `Φ⁻¹` gives
/// `det(½(1 − W₁ᵣ†W₂ᵣ))`, so the arguments of `Γ` are swapped.
pub fn delta_l_tilde(x1: &MetaLagFrame, x2: &MetaLagFrame, k: usize, tol: &Tolerances) -> Result<C> {
    let b1 = reduce_meta_blocks(&x1.w, &x1.c.a, k, tol)?;
    let b2 = reduce_meta_blocks(&x2.w, &x2.c.a, k, tol)?;
    shared_a(&b1.a, &b2.a, tol)?;
    let da = linalg::det_real(&b1.a).abs();
    let g = if k == x1.w.nrows() {
        ONE
    } else {
        gamma(&b2.w_r, &b1.w_r, tol)?
    };
    Ok(x1.c.z.conj() * x2.c.z / da * g)
}

/// Pfaffian by recursive expansion along the first row.
pub fn pfaffian(m: &CMat) -> C {
    let n = m.nrows();
    if n == 0 {
        return ONE;
    }
    if n % 2 == 1 {
        return C::new(0.0, 0.0);
    }
    let idx: Vec<usize> = (0..n).collect();
    pfaffian_rec(m, &idx)
}

fn pfaffian_rec(m: &CMat, idx: &[usize]) -> C {
    if idx.is_empty() {
        return ONE;
    }
    let first = idx[0];
    let mut acc = C::new(0.0, 0.0);
    for j in 1..idx.len() {
        let entry = m[(first, idx[j])];
        if entry == C::new(0.0, 0.0) {
            continue;
        }
        let rest: Vec<usize> = idx[1..]
            .iter()
            .enumerate()
            .filter(|&(p, _)| p + 1 != j)
            .map(|(_, &x)| x)
            .collect();
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        acc += entry * sign * pfaffian_rec(m, &rest);
    }
    acc
}

/// Liouville form `((−1)^{n(n−1)/2}/n!) ωⁿ` evaluated on `2n` vectors given as
/// the columns of `x`, computed as `(−1)^{n(n−1)/2} Pf(ω(X_i, X_j))`.
pub fn liouville(x: &CMat, model: &SymplecticModel) -> Result<C> {
    let n = model.n;
    if x.nrows() != 2 * n || x.ncols() != 2 * n {
        return Err(HfeError::Dimension(format!(
            "Liouville form needs {} vectors of length {}",
            2 * n,
            2 * n
        )));
    }
    let omega = model.gram(x, x);
    let sign = if (n * n.saturating_sub(1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(pfaffian(&omega) * sign)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityMode {
    HalfDensity,
    /// Uses the supplied value of the square root `δ̃_k` at the pair.
    HalfForm { delta_tilde: C },
}

/// Inputs to the pointwise 1-density.
#[derive(Debug, Clone)]
pub struct DensityInput<'a> {
    pub prequantum: C,
    pub nu1: C,
    pub nu2: C,
    pub pair: &'a LagFramePair,
    /// `2n − k` complementary vectors as columns (stacked coordinates).
    pub lifts: &'a CMat,
    pub mode: DensityMode,
}

/// `⟨s₁,s₂⟩·conj(ν₁)·ν₂·factor·|Λ(u₁…u_k, W₁…W_{2n−k})|` with factor `√|δ_k|`
/// or `δ̃_k`.
pub fn pairing_density(
    input: &DensityInput<'_>,
    model: &SymplecticModel,
    tol: &Tolerances,
) -> Result<C> {
    let pair = input.pair;
    let n = pair.first.n();
    let k = pair.k;
    if input.lifts.shape() != (2 * n, 2 * n - k) {
        return Err(HfeError::Dimension(format!(
            "expected {} lift vectors of length {}",
            2 * n - k,
            2 * n
        )));
    }
    let d = delta(pair, model, tol)?;
    let factor = match input.mode {
        DensityMode::HalfDensity => C::new(d.norm().sqrt(), 0.0),
        DensityMode::HalfForm { delta_tilde } => {
            let r = linalg::rel_diff_c(delta_tilde * delta_tilde, d);
            if r > tol.rel {
                return Err(HfeError::Invariant {
                    what: "delta_tilde^2 = delta_k".into(),
                    residual: r,
                });
            }
            delta_tilde
        }
    };
    let mut vecs = CMat::zeros(2 * n, 2 * n);
    let x1 = pair.first.stacked();
    for j in 0..k {
        vecs.set_column(j, &x1.column(j));
    }
    for j in 0..2 * n - k {
        vecs.set_column(k + j, &input.lifts.column(j));
    }
    let vol = liouville(&vecs, model)?.norm();
    Ok(input.prequantum * input.nu1.conj() * input.nu2 * factor * vol)
}

/// Column vector helper used by callers building tangent vectors.
pub fn cvec(entries: &[C]) -> DVector<C> {
    DVector::from_column_slice(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{mp_lift, sp_rotation};
    use crate::linalg::c;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn s(z: C) -> CMat {
        CMat::from_element(1, 1, z)
    }

    #[test]
    fn validate_examples() {
        let t = tol();
        let m = SymplecticModel::standard(1);
        let (_, r) = validate_lagrangian(&s(ONE), &s(c(0.0, 0.0)), &m, &t).unwrap();
        assert!(r.positive);
        assert!(r.min_eigenvalue.abs() < 1e-15);
        let (_, r) = validate_lagrangian(&s(ONE), &s(I), &m, &t).unwrap();
        assert!(r.positive);
        assert!((r.min_eigenvalue - 2.0).abs() < 1e-14);
        let (_, r) = validate_lagrangian(&s(ONE), &s(-I), &m, &t).unwrap();
        assert!(!r.positive);
        assert!((r.min_eigenvalue + 2.0).abs() < 1e-14);
        assert!(validate_lagrangian(&s(c(0.0, 0.0)), &s(c(0.0, 0.0)), &m, &t).is_err());
    }

    #[test]
    fn isotropy_is_enforced() {
        let t = tol();
        let m = SymplecticModel::standard(2);
        let u = linalg::identity(2);
        let v = CMat::from_row_slice(2, 2, &[ONE, ONE, c(0.0, 0.0), ONE]);
        assert!(matches!(
            validate_lagrangian(&u, &v, &m, &t),
            Err(HfeError::NotLagrangian(_))
        ));
    }

    #[test]
    fn compose_examples() {
        let t = tol();
        let m = SymplecticModel::standard(1);
        let std = linalg::identity(2);
        let x = LagFrame { u: s(ONE), v: s(c(0.0, 0.0)) };
        let out = frame_compose(&std, &x, &m, &t).unwrap();
        assert_eq!(out.stacked(), CMat::from_column_slice(2, 1, &[ONE, c(0.0, 0.0)]));
        let x = LagFrame { u: s(c(0.0, 0.0)), v: s(ONE) };
        let out = frame_compose(&std, &x, &m, &t).unwrap();
        assert_eq!(out.stacked(), CMat::from_column_slice(2, 1, &[c(0.0, 0.0), ONE]));
        let rot = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), ONE, -ONE, c(0.0, 0.0)]);
        let x = LagFrame { u: s(ONE), v: s(I) };
        let out = frame_compose(&rot, &x, &m, &t).unwrap();
        // b − i·a
        assert_eq!(out.stacked(), CMat::from_column_slice(2, 1, &[-I, ONE]));
        let bad = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), ONE]);
        assert!(frame_compose(&bad, &x, &m, &t).is_err());
    }

    #[test]
    fn delta_examples() {
        let t = tol();
        let m = SymplecticModel::standard(1);
        let a = LagFrame { u: s(ONE), v: s(c(0.0, 0.0)) };
        let b = LagFrame { u: s(c(0.0, 0.0)), v: s(ONE) };
        let p = LagFramePair::new(a.clone(), b, 0, &t).unwrap();
        assert_eq!(delta(&p, &m, &t).unwrap(), -I);
        let h = LagFrame { u: s(ONE), v: s(I) };
        let p = LagFramePair::new(h.clone(), h, 0, &t).unwrap();
        assert!((delta(&p, &m, &t).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        let p = LagFramePair::new(a.clone(), a.clone(), 1, &t).unwrap();
        assert_eq!(delta(&p, &m, &t).unwrap(), ONE);
        let p = LagFramePair::new(a.clone(), a, 0, &t).unwrap();
        assert!(matches!(delta(&p, &m, &t), Err(HfeError::DeltaVanishes(_))));
    }

    #[test]
    fn phi_examples() {
        let t = tol();
        let (w, cc) = phi(&LagFrame { u: s(ONE), v: s(I) }, &t).unwrap();
        assert!(w[(0, 0)].norm() < 1e-15);
        assert!((cc[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
        let back = phi_inv(&s(c(0.0, 0.0)), &s(c(2.0, 0.0)));
        assert!((back.u[(0, 0)] - ONE).norm() < 1e-15);
        assert!((back.v[(0, 0)] - I).norm() < 1e-15);
        assert!(matches!(phi(&LagFrame { u: s(ONE), v: s(-I) }, &t), Err(HfeError::NotPositive(_))));
    }

    #[test]
    fn alpha_examples() {
        let t = tol();
        let w = s(c(0.3, 0.1));
        let (gw, a) = alpha(&SpElement::identity(1), &w, &t).unwrap();
        assert!((gw - &w).norm() < 1e-15);
        assert!((a - linalg::identity(1)).norm() < 1e-15);
        let j = sp_rotation(1, std::f64::consts::FRAC_PI_2);
        let (gw, a) = alpha(&j, &s(c(0.0, 0.0)), &t).unwrap();
        assert!(gw.norm() < 1e-15);
        assert!((a[(0, 0)] - I).norm() < 1e-15);
    }

    #[test]
    fn alpha_tilde_examples() {
        let t = tol();
        let w = s(c(0.2, -0.5));
        let e = MpElement::identity(1);
        let at = alpha_tilde(&e, &w, &t).unwrap();
        assert!((at.z - ONE).norm() < 1e-14);
        let at = alpha_tilde(&e.deck(), &w, &t).unwrap();
        assert!((at.z + ONE).norm() < 1e-14);
        let j = mp_lift(&sp_rotation(1, std::f64::consts::FRAC_PI_2), &t).unwrap().0;
        let at = alpha_tilde(&j, &s(c(0.0, 0.0)), &t).unwrap();
        assert!((at.a[(0, 0)] - I).norm() < 1e-15);
        assert!((at.z - C::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
    }

    #[test]
    fn gamma_examples() {
        let t = tol();
        for n in 1..4 {
            let z = CMat::zeros(n, n);
            let g = gamma(&z, &z, &t).unwrap();
            assert!((g - c(0.5f64.powf(n as f64 / 2.0), 0.0)).norm() < 1e-15);
        }
        let g = gamma(&s(c(0.6, 0.3)), &s(c(0.0, 0.0)), &t).unwrap();
        assert!((g - c(0.5f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn delta_l_examples() {
        let t = tol();
        let h = LagFrame { u: s(ONE), v: s(I) };
        assert!((delta_l(&h, &h, 0, &t).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        let w = s(c(0.0, 0.0));
        let cc = s(c(2.0, 0.0));
        assert!((delta_l_wc((&w, &cc), (&w, &cc), 0, &t).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        let z = c(2.0f64.sqrt(), 0.0);
        let x = MetaLagFrame {
            w: w.clone(),
            c: MlElement { a: cc.clone(), z },
        };
        let dt = delta_l_tilde(&x, &x, 0, &t).unwrap();
        assert!((dt - z).norm() < 1e-15);
        assert!((dt * dt - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn delta_l_with_complex_ball_points() {
        let t = tol();
        let w1 = s(c(0.3, 0.4));
        let w2 = s(c(-0.2, 0.5));
        let (c1, c2) = (s(c(1.0, 0.5)), s(c(0.7, -0.2)));
        let f1 = phi_inv(&w1, &c1);
        let f2 = phi_inv(&w2, &c2);
        let direct = delta_l(&f1, &f2, 0, &t).unwrap();
        let wc = delta_l_wc((&w1, &c1), (&w2, &c2), 0, &t).unwrap();
        assert!((direct - wc).norm() < 1e-14, "{direct} vs {wc}");
        let (z1, z2) = (ml_lift_first(&c1), ml_lift_first(&c2));
        let x1 = MetaLagFrame { w: w1, c: MlElement { a: c1, z: z1 } };
        let x2 = MetaLagFrame { w: w2, c: MlElement { a: c2, z: z2 } };
        let dt = delta_l_tilde(&x1, &x2, 0, &t).unwrap();
        assert!((dt * dt - direct).norm() < 1e-14);
    }

    fn ml_lift_first(m: &CMat) -> C {
        crate::groups::ml_lift(m, &tol()).unwrap().0.z
    }

    #[test]
    fn liouville_examples() {
        let m1 = SymplecticModel::standard(1);
        assert_eq!(liouville(&linalg::identity(2), &m1).unwrap(), ONE);
        let mut rep = linalg::identity(2);
        rep.set_column(1, &rep.column(0).into_owned());
        assert_eq!(liouville(&rep, &m1).unwrap(), c(0.0, 0.0));
        let m2 = SymplecticModel::standard(2);
        assert_eq!(liouville(&linalg::identity(4), &m2).unwrap(), ONE);
    }

    #[test]
    fn density_examples() {
        let t = tol();
        let m = SymplecticModel::standard(1);
        let h = LagFrame { u: s(ONE), v: s(I) };
        let pair = LagFramePair::new(h.clone(), h, 0, &t).unwrap();
        let lifts = linalg::identity(2);
        let mut input = DensityInput {
            prequantum: ONE,
            nu1: ONE,
            nu2: ONE,
            pair: &pair,
            lifts: &lifts,
            mode: DensityMode::HalfDensity,
        };
        let v = pairing_density(&input, &m, &t).unwrap();
        assert!((v - c(2.0f64.sqrt(), 0.0)).norm() < 1e-15);
        input.nu1 = c(0.0, 0.0);
        assert_eq!(pairing_density(&input, &m, &t).unwrap(), c(0.0, 0.0));
        input.nu1 = ONE;
        input.mode = DensityMode::HalfForm { delta_tilde: ONE };
        assert!(pairing_density(&input, &m, &t).is_err());
    }
}
