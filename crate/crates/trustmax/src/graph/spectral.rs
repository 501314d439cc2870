//! Eigenvalue diagnostics for the signed Laplacian.
//!
//! Stability of the opinion dynamics needs every eigenvalue of `L + I` to
//! have real part >= 1, i.e. `min Re(sp(L)) >= 0`. That holds for any
//! admissible graph because each Gershgorin disc of `L` is centered at
//! d_ii with radius d_ii. The check below verifies it numerically and also
//! reports the Bendixson bracket from the symmetric part
//! `L_u = (L + L^T)/2`:
//!
//!   min sp(L_u) <= Re(lambda) <= max sp(L_u)   for all lambda in sp(L).
//!
//! Note `min sp(L_u)` itself can be negative on directed graphs (a single
//! directed edge already gives (1 - sqrt(2))/2), so the bracket's lower
//! edge is reported as-is and only `min Re(sp(L))` is required to be
//! nonnegative.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::LaplacianSystem;

/// Dense eigendecompositions get expensive fast; refuse above this size
/// unless the caller raises the cap explicitly.
pub const DEFAULT_SPECTRAL_CAP: usize = 2000;

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub n: usize,
    /// Smallest and largest real part over sp(L).
    pub min_re: f64,
    pub max_re: f64,
    /// Bendixson bracket: extreme eigenvalues of the symmetric part.
    pub bound_lo: f64,
    pub bound_hi: f64,
    pub ok: bool,
}

pub fn spectral_check(ls: &LaplacianSystem, tol: f64) -> Result<SpectralReport> {
    spectral_check_capped(ls, tol, DEFAULT_SPECTRAL_CAP)
}

pub fn spectral_check_capped(ls: &LaplacianSystem, tol: f64, cap: usize) -> Result<SpectralReport> {
    let n = ls.n();
    if n > cap {
        return Err(Error::Size(format!(
            "spectral check on n = {n} exceeds cap {cap}; raise the cap to force it"
        )));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Usage(format!("tolerance must be >= 0, got {tol}")));
    }

    let l = ls.lbar_dense();
    let (min_re, max_re) = real_part_range(&l)?;

    let sym = SymmetricEigen::new((&l + l.transpose()) * 0.5);
    let mut bound_lo = f64::INFINITY;
    let mut bound_hi = f64::NEG_INFINITY;
    for &mu in sym.eigenvalues.iter() {
        bound_lo = bound_lo.min(mu);
        bound_hi = bound_hi.max(mu);
    }

    let ok = min_re >= -tol && min_re >= bound_lo - tol && max_re <= bound_hi + tol;
    Ok(SpectralReport {
        n,
        min_re,
        max_re,
        bound_lo,
        bound_hi,
        ok,
    })
}

/// Extreme real parts of sp(M). Diagonal matrices (edgeless graphs) are
/// read off directly; everything else goes through a Schur decomposition
/// with bounded iterations, retried once under a spectral shift, since the
/// unbounded iteration in nalgebra can spin on degenerate inputs.
fn real_part_range(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let n = m.nrows();
    let mut diagonal = true;
    'scan: for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] != 0.0 {
                diagonal = false;
                break 'scan;
            }
        }
    }
    if diagonal {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            lo = lo.min(m[(i, i)]);
            hi = hi.max(m[(i, i)]);
        }
        return Ok((lo, hi));
    }

    const MAX_ITER: usize = 50_000;
    for shift in [0.0, 1.0] {
        let shifted = if shift == 0.0 {
            m.clone()
        } else {
            let mut s = m.clone();
            for i in 0..n {
                s[(i, i)] += shift;
            }
            s
        };
        if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, MAX_ITER) {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for lambda in schur.complex_eigenvalues().iter() {
                lo = lo.min(lambda.re - shift);
                hi = hi.max(lambda.re - shift);
            }
            return Ok((lo, hi));
        }
    }
    Err(Error::Numerical(
        "eigenvalue iteration did not converge".into(),
    ))
}
