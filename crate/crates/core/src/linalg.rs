//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Smallest `|det|` accepted before a matrix is treated as singular.
pub const DET_FLOOR: f64 = 1e-300;

/// `log|det M|` and the sign of `det M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    pub sign: f64,
}

/// Log-determinant by LU with partial pivoting.
///
/// Fails with [`Error::Degenerate`] when `|det M| < 1e-300`.
pub fn log_det(m: &DMatrix<f64>) -> Result<LogDet> {
    if !m.is_square() {
        return Err(Error::Domain(format!("log-det of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    let lu = m.clone().lu();
    let u = lu.u();
    let mut log_abs = 0.0;
    let mut sign: f64 = lu.p().determinant();
    for i in 0..u.nrows() {
        let x = u[(i, i)];
        if x == 0.0 {
            return Err(Error::Degenerate("matrix is singular".into()));
        }
        log_abs += x.abs().ln();
        sign *= x.signum();
    }
    if log_abs < DET_FLOOR.ln() {
        return Err(Error::Degenerate(format!("|det| = exp({log_abs:.3}) below 1e-300")));
    }
    Ok(LogDet { log_abs, sign })
}

/// Spectral condition number `σ_max / σ_min`.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = m.clone().singular_values();
    let max = s.max();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Largest principal angle between the column spans of two matrices with orthonormal columns.
pub fn max_principal_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let s = (u.transpose() * v).singular_values();
    s.min().clamp(-1.0, 1.0).acos()
}

/// Orthonormal basis of the column span (thin QR with a nonnegative diagonal).
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols().min(r.nrows()) {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `‖QᵀQ - I‖_F` for a matrix meant to have orthonormal columns.
pub fn orthonormality_defect(q: &DMatrix<f64>) -> f64 {
    let k = q.ncols();
    (q.transpose() * q - DMatrix::identity(k, k)).norm()
}
