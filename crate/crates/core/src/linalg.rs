//! Small dense helpers shared across modules.

use nalgebra::{DMatrix, DMatrixView, DVector};

/// `‖a - b‖_F / max(‖b‖_F, tiny)`; `b` is the reference.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let den = b.norm();
    let num = (a - b).norm();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Dense `X Xᵀ`, the reference scatter for a channel-major sample matrix.
pub fn dense_scatter(x: DMatrixView<'_, f64>) -> DMatrix<f64> {
    let mut s = x * x.transpose();
    symmetrize(&mut s);
    s
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn check_finite(m: DMatrixView<'_, f64>) -> crate::Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Err(crate::Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Thin SVD of `m` (`r x c`): left singular vectors `r x min(r, c)` and
/// singular values in descending order.
pub(crate) fn thin_left_svd(m: DMatrixView<'_, f64>) -> (DMatrix<f64>, DVector<f64>) {
    let (r, c) = m.shape();
    let k = r.min(c);
    let f = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    let svd = f.thin_svd().expect("SVD of a finite matrix converges");
    let u = svd.U();
    let s = svd.S().column_vector();
    (
        DMatrix::from_fn(r, k, |i, j| u[(i, j)]),
        DVector::from_fn(k, |j, _| s[j]),
    )
}
