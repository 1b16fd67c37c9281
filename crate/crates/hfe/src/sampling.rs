//! Seeded random group elements, ball points and frames for property checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::frames::{phi_inv, LagFrame, MetaLagFrame};
use crate::groups::{
    glk_from_blocks, mp_lift, ml_lift, sp_from_gl, sp_shear, spk_compose, GlPair, MlElement,
    MlPair, MpElement, SpElement,
};
use crate::linalg::{self, block_diag, det, det_real, operator_norm, CMat, RMat, C};
use crate::tol::Tolerances;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C {
    C::new(normal(rng), normal(rng))
}

fn coin<R: Rng + ?Sized>(rng: &mut R) -> bool {
    rng.random::<bool>()
}

/// `1 + 0.4 G` with Gaussian `G`, redrawn until comfortably invertible.
pub fn gl<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    loop {
        let g = linalg::identity(n) + CMat::from_fn(n, n, |_, _| complex_normal(rng) * 0.4);
        if det(&g).norm() > 0.1 {
            return g;
        }
    }
}

pub fn real_gl<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RMat {
    loop {
        let sign = if coin(rng) { 1.0 } else { -1.0 };
        let mut g = RMat::identity(n, n) + RMat::from_fn(n, n, |_, _| normal(rng) * 0.4);
        if n > 0 {
            g.row_mut(0).scale_mut(sign);
        }
        if det_real(&g).abs() > 0.1 {
            return g;
        }
    }
}

pub fn symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RMat {
    let m = RMat::from_fn(n, n, |_, _| normal(rng) * 0.5);
    (&m + m.transpose()) * 0.5
}

/// An element of `Ml(n,C)` on a random sheet.
pub fn ml<R: Rng + ?Sized>(n: usize, rng: &mut R, tol: &Tolerances) -> Result<MlElement> {
    let (a, b) = ml_lift(&gl(n, rng), tol)?;
    Ok(if coin(rng) { a } else { b })
}

/// `(A B; 0 D)` with `A` real.
pub fn glk<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> CMat {
    let a = real_gl(k, rng);
    glk_with_a(&a, n, rng)
}

fn glk_with_a<R: Rng + ?Sized>(a: &RMat, n: usize, rng: &mut R) -> CMat {
    let k = a.nrows();
    let b = CMat::from_fn(k, n - k, |_, _| complex_normal(rng) * 0.5);
    let d = gl(n - k, rng);
    glk_from_blocks(a, &b, &d)
}

/// A pair in `Gl_k(n,C)²` sharing the real `A` block.
pub fn glkd_pair<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> GlPair {
    let a = real_gl(k, rng);
    GlPair {
        g1: glk_with_a(&a, n, rng),
        g2: glk_with_a(&a, n, rng),
    }
}

pub fn mlkd_pair<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R, tol: &Tolerances) -> Result<MlPair> {
    let p = glkd_pair(n, k, rng);
    let (a1, b1) = ml_lift(&p.g1, tol)?;
    let (a2, b2) = ml_lift(&p.g2, tol)?;
    Ok(MlPair {
        g1: if coin(rng) { a1 } else { b1 },
        g2: if coin(rng) { a2 } else { b2 },
    })
}

/// `(1 0; S 1)`.
fn lower_shear(s: &RMat) -> SpElement {
    let n = s.nrows();
    let mut g = RMat::identity(2 * n, 2 * n);
    g.view_mut((n, 0), (n, n)).copy_from(s);
    SpElement { g }
}

/// `diag(M, M⁻ᵗ)·(1 S; 0 1)·(1 0; T 1)`.
pub fn sp<R: Rng + ?Sized>(n: usize, rng: &mut R, tol: &Tolerances) -> Result<SpElement> {
    let m = real_gl(n, rng);
    Ok(sp_from_gl(&m, tol)?
        .mul(&sp_shear(&symmetric(n, rng)))
        .mul(&lower_shear(&symmetric(n, rng))))
}

pub fn spk<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R, tol: &Tolerances) -> Result<SpElement> {
    let r = n - k;
    let a_g = real_gl(k, rng);
    let q = RMat::from_fn(k, r, |_, _| normal(rng) * 0.5);
    let s = symmetric(n, rng);
    let g_r = sp(r, rng, tol)?;
    spk_compose(&a_g, &q, &s, &g_r, tol)
}

pub fn mp<R: Rng + ?Sized>(n: usize, rng: &mut R, tol: &Tolerances) -> Result<MpElement> {
    let (a, b) = mp_lift(&sp(n, rng, tol)?, tol)?;
    Ok(if coin(rng) { a } else { b })
}

pub fn mpk<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R, tol: &Tolerances) -> Result<MpElement> {
    let (a, b) = mp_lift(&spk(n, k, rng, tol)?, tol)?;
    Ok(if coin(rng) { a } else { b })
}

/// Complex symmetric `W` with operator norm below `radius`.
pub fn ball<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| complex_normal(rng));
    let s = (&g + g.transpose()) * C::new(0.5, 0.0);
    let nrm = operator_norm(&s);
    if nrm == 0.0 {
        return s;
    }
    let target = radius * rng.random_range(0.05..1.0);
    s * C::new(target / nrm, 0.0)
}

/// A positive Lagrangian frame `Φ⁻¹(W, C)`.
pub fn positive_frame<R: Rng + ?Sized>(n: usize, rng: &mut R) -> LagFrame {
    phi_inv(&ball(n, 0.9, rng), &gl(n, rng))
}

/// A meta-frame in reduced form `W = diag(1, W_r)`, `C ∈ Gl_k` with the
/// given `A` block.
pub fn reduced_meta_frame<R: Rng + ?Sized>(
    n: usize,
    a: &RMat,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<MetaLagFrame> {
    let k = a.nrows();
    let w = block_diag(&linalg::identity(k), &ball(n - k, 0.9, rng));
    let c = glk_with_a(a, n, rng);
    let (x, y) = ml_lift(&c, tol)?;
    Ok(MetaLagFrame {
        w,
        c: if coin(rng) { x } else { y },
    })
}
