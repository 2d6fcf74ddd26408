//! Symmetric tridiagonal eigenvalues by Sturm-sequence bisection, and the
//! Thomas algorithm for general tridiagonal systems.

use crate::error::{Error, Result};

/// Absolute tolerance of the bisection.
pub const BISECTION_TOL: f64 = 1e-12;

/// Number of eigenvalues strictly below `lambda`.
///
/// `diag` has length `n`, `off` length `n - 1`. The count equals the number
/// of negative pivots in the LDL^T factorization of `T - lambda I`.
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let pivmin = f64::MIN_POSITIVE * off.iter().fold(1.0f64, |m, e| m.max(e * e));
    let mut count = 0;
    let mut q = diag[0] - lambda;
    for i in 0..n {
        if i > 0 {
            q = (diag[i] - lambda) - off[i - 1] * off[i - 1] / q;
        }
        if q.abs() <= pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    (lo, hi)
}

/// The `index`-th smallest eigenvalue (0-based).
pub fn eigenvalue(diag: &[f64], off: &[f64], index: usize) -> Result<f64> {
    let n = diag.len();
    if index >= n || off.len() + 1 != n {
        return Err(Error::ToleranceNotReached(format!(
            "eigenvalue {index} requested from a {n}x{n} matrix with {} off-diagonals",
            off.len()
        )));
    }
    if diag.iter().chain(off).any(|v| !v.is_finite()) {
        return Err(Error::ToleranceNotReached("non-finite matrix entry".into()));
    }
    let (mut lo, mut hi) = gershgorin(diag, off);
    lo -= BISECTION_TOL;
    hi += BISECTION_TOL;
    if sturm_count(diag, off, lo) > index || sturm_count(diag, off, hi) <= index {
        return Err(Error::ToleranceNotReached(format!(
            "Gershgorin interval [{lo}, {hi}] does not bracket eigenvalue {index}"
        )));
    }
    let mut iterations = 0;
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
        if iterations > 500 {
            return Err(Error::ToleranceNotReached(format!(
                "no convergence after {iterations} bisection steps"
            )));
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest eigenvalue.
pub fn largest_eigenvalue(diag: &[f64], off: &[f64]) -> Result<f64> {
    eigenvalue(diag, off, diag.len().saturating_sub(1))
}

/// Solves `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
///
/// `sub[0]` and `sup[n-1]` are ignored.
pub fn thomas_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    let mut pivot = diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = diag[i] - sub[i] * c_prime[i - 1];
        }
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem(format!("pivot {pivot} at row {i}")));
        }
        c_prime[i] = if i + 1 < n { sup[i] / pivot } else { 0.0 };
        let prev = if i > 0 { d_prime[i - 1] } else { 0.0 };
        d_prime[i] = (rhs[i] - sub[i] * prev) / pivot;
    }
    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    Ok(x)
}
