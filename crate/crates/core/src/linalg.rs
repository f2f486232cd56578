//! Small dense row-major kernels used in the inner integration loops.
//!
//! The propagators work on `(n-1) x (n-1)` blocks with `n` rarely above 4, so
//! these helpers operate on plain slices and never allocate.

use nalgebra::DMatrix;

/// `out = a * b` for `a: r x k`, `b: k x c`.
#[inline]
pub(crate) fn matmul(a: &[f64], b: &[f64], r: usize, k: usize, c: usize, out: &mut [f64]) {
    for i in 0..r {
        for j in 0..c {
            let mut acc = 0.0;
            for l in 0..k {
                acc += a[i * k + l] * b[l * c + j];
            }
            out[i * c + j] = acc;
        }
    }
}

#[inline]
pub(crate) fn trace(a: &[f64], m: usize) -> f64 {
    (0..m).map(|i| a[i * m + i]).sum()
}

#[inline]
pub(crate) fn symmetrize(a: &mut [f64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            let s = 0.5 * (a[i * m + j] + a[j * m + i]);
            a[i * m + j] = s;
            a[j * m + i] = s;
        }
    }
}

#[inline]
pub(crate) fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn identity(m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        out[i * m + i] = 1.0;
    }
    out
}

pub(crate) fn to_dmatrix(a: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, a)
}

pub(crate) fn from_dmatrix(a: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.nrows() * a.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// Inverse of a square matrix; `None` when numerically singular.
pub(crate) fn inverse(a: &[f64], m: usize) -> Option<Vec<f64>> {
    match m {
        1 => {
            if a[0] == 0.0 || !a[0].is_finite() {
                None
            } else {
                Some(vec![1.0 / a[0]])
            }
        }
        2 => {
            let det = a[0] * a[3] - a[1] * a[2];
            let scale = frobenius(a).powi(2);
            if det.abs() <= 1e-300_f64.max(scale * 1e-28) || !det.is_finite() {
                return None;
            }
            Some(vec![a[3] / det, -a[1] / det, -a[2] / det, a[0] / det])
        }
        _ => to_dmatrix(a, m, m)
            .try_inverse()
            .map(|inv| from_dmatrix(&inv)),
    }
}

/// Symmetric eigenvalues in ascending order.
pub(crate) fn sym_eigenvalues(a: &[f64], m: usize) -> Vec<f64> {
    match m {
        1 => vec![a[0]],
        2 => {
            let mean = 0.5 * (a[0] + a[3]);
            let half_diff = 0.5 * (a[0] - a[3]);
            let off = 0.5 * (a[1] + a[2]);
            let rad = half_diff.hypot(off);
            vec![mean - rad, mean + rad]
        }
        _ => {
            let mut s = to_dmatrix(a, m, m);
            s = (&s + s.transpose()) * 0.5;
            let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(|x, y| x.total_cmp(y));
            ev
        }
    }
}

/// Number of strictly negative eigenvalues of the symmetric part of `a`.
pub(crate) fn negative_count(a: &[f64], m: usize) -> usize {
    sym_eigenvalues(a, m).iter().filter(|&&x| x < 0.0).count()
}

pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
