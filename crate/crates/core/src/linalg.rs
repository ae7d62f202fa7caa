//! Small dense solves for the k×k weighted normal equations.

use nalgebra::{DMatrix, DVector};

use crate::glm::Dataset;

/// Pivots below this fraction of the matching diagonal entry are treated as
/// exact collinearity.
const PIVOT_RTOL: f64 = 1e-10;

/// Accumulates `XᵀWX` and `XᵀWz` over `rows` (in order) and solves by
/// Cholesky. `ridge` is added to the diagonal. Returns `None` when the
/// system is singular or not positive definite.
pub(crate) fn wls_solve(
    data: &Dataset,
    rows: &[usize],
    w: &[f64],
    z: &[f64],
    ridge: Option<&[f64]>,
) -> Option<Vec<f64>> {
    let k = data.m();
    // Packed lower triangle, row by row.
    let mut tri = vec![0.0; k * (k + 1) / 2];
    let mut bv = vec![0.0; k];
    for (idx, &i) in rows.iter().enumerate() {
        let x = data.row(i);
        let wi = w[idx];
        let wz = wi * z[idx];
        let mut off = 0;
        for r in 0..k {
            let wx = wi * x[r];
            bv[r] += x[r] * wz;
            for (t, xc) in tri[off..off + r + 1].iter_mut().zip(&x[..=r]) {
                *t += wx * xc;
            }
            off += r + 1;
        }
    }
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut off = 0;
    for r in 0..k {
        for c in 0..=r {
            a[(r, c)] = tri[off + c];
            a[(c, r)] = tri[off + c];
        }
        off += r + 1;
    }
    if let Some(ridge) = ridge {
        for j in 0..k {
            a[(j, j)] += ridge[j];
        }
    }
    let b = DVector::from_vec(bv);
    solve_spd(a, b)
}

/// Solves `A x = b` for symmetric positive-definite `A`.
pub(crate) fn solve_spd(a: DMatrix<f64>, b: DVector<f64>) -> Option<Vec<f64>> {
    let diag: Vec<f64> = a.diagonal().iter().copied().collect();
    let chol = a.cholesky()?;
    let l = chol.l_dirty();
    for (j, &d) in diag.iter().enumerate() {
        let piv = l[(j, j)] * l[(j, j)];
        if !(piv > PIVOT_RTOL * d.abs().max(f64::MIN_POSITIVE)) {
            return None;
        }
    }
    let x = chol.solve(&b);
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

/// `ln det A` for symmetric positive-definite `A`, `None` otherwise.
pub(crate) fn log_det_spd(a: DMatrix<f64>) -> Option<f64> {
    let chol = a.cholesky()?;
    let l = chol.l_dirty();
    let mut s = 0.0;
    for j in 0..l.nrows() {
        let d = l[(j, j)];
        if !(d > 0.0) {
            return None;
        }
        s += d.ln();
    }
    Some(2.0 * s)
}

/// `XᵀWX` over all rows.
pub(crate) fn weighted_gram(data: &Dataset, w: &[f64]) -> DMatrix<f64> {
    let k = data.m();
    let mut a = DMatrix::<f64>::zeros(k, k);
    for i in 0..data.n() {
        let x = data.row(i);
        for r in 0..k {
            let wx = w[i] * x[r];
            for c in 0..=r {
                a[(r, c)] += wx * x[c];
            }
        }
    }
    for r in 0..k {
        for c in 0..r {
            a[(c, r)] = a[(r, c)];
        }
    }
    a
}
