//! Dense complex linear algebra helpers and continuous square-root tracking.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

use crate::error::{HfeError, Result};
use crate::tol::Tolerances;

pub type C = Complex64;
pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub const I: C = C { re: 0.0, im: 1.0 };
pub const ONE: C = C { re: 1.0, im: 0.0 };
pub const ZERO: C = C { re: 0.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn complexify(m: &RMat) -> CMat {
    m.map(|x| C::new(x, 0.0))
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn det(m: &CMat) -> C {
    if m.nrows() == 0 {
        return ONE;
    }
    m.determinant()
}

pub fn det_real(m: &RMat) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.determinant()
}

/// Inverse, failing when the determinant is below `tol.singular` relative to
/// the matrix scale.
pub fn inverse(m: &CMat, tol: &Tolerances) -> Result<CMat> {
    let n = m.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let d = det(m).norm();
    let scale = max_abs(m).max(1.0).powi(n as i32);
    if !(d > tol.singular * scale) {
        return Err(HfeError::Singular(d));
    }
    m.clone().try_inverse().ok_or(HfeError::Singular(d))
}

pub fn inverse_real(m: &RMat, tol: &Tolerances) -> Result<RMat> {
    let n = m.nrows();
    if n == 0 {
        return Ok(RMat::zeros(0, 0));
    }
    let d = det_real(m).abs();
    let scale = m.amax().max(1.0).powi(n as i32);
    if !(d > tol.singular * scale) {
        return Err(HfeError::Singular(d));
    }
    m.clone().try_inverse().ok_or(HfeError::Singular(d))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// `‖a − b‖_F / max(‖a‖_F, ‖b‖_F)`, zero when both vanish.
pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    let num = (a - b).norm();
    let den = a.norm().max(b.norm());
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn rel_diff_c(a: C, b: C) -> f64 {
    let den = a.norm().max(b.norm());
    if den == 0.0 {
        0.0
    } else {
        (a - b).norm() / den
    }
}

/// Smallest eigenvalue of the hermitian part of `m`.
pub fn hermitian_min_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let h = (m + m.adjoint()) * C::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(h);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn operator_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    sv.iter().cloned().fold(0.0, f64::max)
}

/// Stack `U` over `V` into a `2n × m` matrix.
pub fn stack(u: &CMat, v: &CMat) -> CMat {
    let (n, m) = u.shape();
    let mut x = CMat::zeros(2 * n, m);
    x.view_mut((0, 0), (n, m)).copy_from(u);
    x.view_mut((n, 0), (n, m)).copy_from(v);
    x
}

pub fn unstack(x: &CMat) -> (CMat, CMat) {
    let n = x.nrows() / 2;
    let m = x.ncols();
    (
        x.view((0, 0), (n, m)).into_owned(),
        x.view((n, 0), (n, m)).into_owned(),
    )
}

pub fn block(m: &CMat, r0: usize, c0: usize, nr: usize, nc: usize) -> CMat {
    m.view((r0, c0), (nr, nc)).into_owned()
}

pub fn block_real(m: &RMat, r0: usize, c0: usize, nr: usize, nc: usize) -> RMat {
    m.view((r0, c0), (nr, nc)).into_owned()
}

/// Square root with argument in `(−π/2, π/2]`.
pub fn principal_sqrt(w: C) -> C {
    let s = w.sqrt();
    if s.re < 0.0 || (s.re == 0.0 && s.im < 0.0) {
        -s
    } else {
        s
    }
}

/// The root of `w` closest to `reference`.
pub fn nearest_sqrt(w: C, reference: C) -> C {
    let s = principal_sqrt(w);
    if (s - reference).norm() <= (s + reference).norm() {
        s
    } else {
        -s
    }
}

/// Argument of `w1 / w0` in `(−π, π]`.
fn arg_jump(w0: C, w1: C) -> f64 {
    (w1 * w0.conj()).arg()
}

/// Continue a square root of `f(t)` from `t = 0`, where it equals `start`,
/// to `t = 1`.
///
/// Steps are bisected until consecutive values of `f` differ in argument by
/// less than π/2, also checked at the step midpoint. Fails if `f` comes within
/// `tol.track` (relative to its starting size) of zero before `t = 1 − tol.track`.
pub fn track_sqrt<F>(f: F, start: C, tol: &Tolerances) -> Result<C>
where
    F: Fn(f64) -> Result<C>,
{
    let w0 = f(0.0)?;
    let scale = w0.norm().max(f64::MIN_POSITIVE);
    if rel_diff_c(start * start, w0) > 1e-6 {
        return Err(HfeError::Tracking(format!(
            "start value does not square to f(0): {start} vs {w0}"
        )));
    }
    let mut t = 0.0f64;
    let mut w_cur = w0;
    let mut s = start;
    let mut h = 0.125f64;
    let mut steps = 0usize;
    while t < 1.0 {
        steps += 1;
        if steps > 1_000_000 {
            return Err(HfeError::Tracking("step budget exhausted".into()));
        }
        let t_new = (t + h).min(1.0);
        let w_new = f(t_new)?;
        if w_new.norm() <= tol.track * scale && t_new < 1.0 - tol.track {
            return Err(HfeError::Tracking(format!(
                "tracked value vanishes at t = {t_new:.6}"
            )));
        }
        let w_mid = f(0.5 * (t + t_new))?;
        let ok = w_new.norm() > 0.0
            && arg_jump(w_cur, w_new).abs() < FRAC_PI_2
            && arg_jump(w_cur, w_mid).abs() < FRAC_PI_2
            && arg_jump(w_mid, w_new).abs() < FRAC_PI_2;
        if ok {
            s = nearest_sqrt(w_new, s * (w_new / w_cur).sqrt());
            w_cur = w_new;
            t = t_new;
            h = (h * 2.0).min(0.25);
        } else {
            h *= 0.5;
            if h < 1e-13 {
                return Err(HfeError::Tracking(format!("branch jump near t = {t:.6}")));
            }
        }
    }
    Ok(s)
}

/// Real symmetric check helper: `max |m − mᵗ|`.
pub fn asymmetry(m: &CMat) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// Parse-friendly complex matrix builder from rows of `(re, im)` pairs.
pub fn cmat_from_rows(rows: &[Vec<C>]) -> Result<CMat> {
    let nr = rows.len();
    let nc = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(HfeError::Dimension("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Block-diagonal matrix `diag(a, b)`.
pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (n1, n2) = (a.nrows(), b.nrows());
    let mut m = CMat::zeros(n1 + n2, n1 + n2);
    m.view_mut((0, 0), (n1, n1)).copy_from(a);
    m.view_mut((n1, n1), (n2, n2)).copy_from(b);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_sqrt_convention() {
        assert_eq!(principal_sqrt(c(-1.0, 0.0)), I);
        assert_eq!(principal_sqrt(c(-1.0, -0.0)), I);
        assert!((principal_sqrt(c(4.0, 0.0)) - c(2.0, 0.0)).norm() < 1e-15);
        let s = principal_sqrt(c(0.0, -2.0));
        assert!(s.re > 0.0);
    }

    #[test]
    fn tracking_follows_winding() {
        // f(t) = exp(2πi t) winds once; the continued root ends at −1.
        let tol = Tolerances::default();
        let f = |t: f64| Ok(C::from_polar(1.0, 2.0 * std::f64::consts::PI * t));
        let s = track_sqrt(f, ONE, &tol).unwrap();
        assert!((s + ONE).norm() < 1e-12);
        let g = |t: f64| Ok(C::from_polar(1.0, 6.0 * std::f64::consts::PI * t));
        let s = track_sqrt(g, ONE, &tol).unwrap();
        assert!((s + ONE).norm() < 1e-12);
    }

    #[test]
    fn tracking_detects_zero() {
        let tol = Tolerances::default();
        let f = |t: f64| Ok(c(1.0 - 2.0 * t, 0.0));
        assert!(track_sqrt(f, ONE, &tol).is_err());
    }

    #[test]
    fn empty_determinant_is_one() {
        assert_eq!(det(&CMat::zeros(0, 0)), ONE);
    }
}
