//! Small dense numeric helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix};

pub type Mat = DMatrix<f64>;

/// Absolute tolerance for sign gates (nonnegativity, Metzler).
pub const SIGN_TOL: f64 = 1e-12;
/// Relative tolerance for comparing eigenvalue-derived quantities.
pub const EIG_RTOL: f64 = 1e-9;

pub fn eigenvalues(m: &Mat) -> Vec<Complex<f64>> {
    assert!(m.is_square());
    let n = m.nrows();
    match n {
        0 => Vec::new(),
        1 => vec![Complex::new(m[(0, 0)], 0.0)],
        _ => match nalgebra::Schur::try_new(m.clone(), 1e-14, 10_000) {
            Some(s) => s.complex_eigenvalues().iter().copied().collect(),
            None => m.clone().complex_eigenvalues().iter().copied().collect(),
        },
    }
}

/// Largest modulus among the eigenvalues; 0 for an empty matrix.
pub fn spectral_radius(m: &Mat) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest real part among the eigenvalues; -inf for an empty matrix.
pub fn spectral_abscissa(m: &Mat) -> f64 {
    eigenvalues(m).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Number of eigenvalues whose modulus is within `EIG_RTOL` of the radius.
pub fn peripheral_count(m: &Mat) -> usize {
    let ev = eigenvalues(m);
    let r = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if r == 0.0 {
        return ev.len();
    }
    ev.iter().filter(|z| (z.norm() - r).abs() <= EIG_RTOL * r.max(1.0)).count()
}

pub fn is_metzler(m: &Mat) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] >= -SIGN_TOL))
}

pub fn is_nonnegative(m: &Mat) -> bool {
    m.iter().all(|&v| v >= -SIGN_TOL)
}

/// Inverse with a reciprocal condition check; `None` when numerically singular.
pub fn inverse(m: &Mat) -> Option<Mat> {
    let n = m.nrows();
    if n == 0 {
        return Some(Mat::zeros(0, 0));
    }
    let inv = m.clone().lu().try_inverse()?;
    let cond = m.norm() * inv.norm();
    if !cond.is_finite() || cond > 1e14 {
        return None;
    }
    Some(inv)
}

pub fn submatrix(m: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn rel_close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()).max(1e-300) || (a - b).abs() <= f64::MIN_POSITIVE
}
