//! Small dense linear-algebra kernels for symmetric problems.
//!
//! Channel counts in this crate are tiny (a B-scan stack has tens of frames),
//! so a cyclic Jacobi eigensolver is both fast enough and bit-for-bit
//! deterministic, which the reproducibility guarantees rely on.

use ndarray::{Array1, Array2};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted descending
/// and eigenvectors as the corresponding columns.
pub(crate) fn sym_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen requires a square matrix");
    let mut work = a.to_owned();
    let mut vecs = Array2::<f64>::eye(n);

    let scale = work.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        const MAX_SWEEPS: usize = 100;
        let tol = 1e-15 * scale;
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(work[(p, q)].abs());
                }
            }
            if off <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = work[(p, q)];
                    if apq.abs() <= tol * 1e-2 {
                        continue;
                    }
                    let theta = 0.5 * (2.0 * apq).atan2(work[(p, p)] - work[(q, q)]);
                    let (s, c) = theta.sin_cos();
                    rotate_sym(&mut work, p, q, c, s);
                    rotate_cols(&mut vecs, p, q, c, s);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work[(j, j)].partial_cmp(&work[(i, i)]).unwrap());
    let values = Array1::from_iter(order.iter().map(|&i| work[(i, i)]));
    let mut sorted = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        sorted.column_mut(dst).assign(&vecs.column(src));
    }
    (values, sorted)
}

/// A <- G^T A G for the Givens rotation G acting in the (p, q) plane.
pub(crate) fn rotate_sym(a: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    let n = a.nrows();
    // Column update (A G), then row update (G^T · ).
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp + s * akq;
        a[(k, q)] = -s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk + s * aqk;
        a[(q, k)] = -s * apk + c * aqk;
    }
}

/// V <- V G for the Givens rotation G acting in the (p, q) plane.
pub(crate) fn rotate_cols(v: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    let n = v.nrows();
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp + s * vkq;
        v[(k, q)] = -s * vkp + c * vkq;
    }
}

/// Inverse by Gauss-Jordan elimination with partial pivoting, together with a
/// Frobenius-norm condition estimate. `None` when a pivot underflows.
pub(crate) fn inverse_with_cond(a: &Array2<f64>) -> Option<(Array2<f64>, f64)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.to_owned();
    let mut inv = Array2::<f64>::eye(n);

    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if m[(r, col)].abs() > m[(pivot, col)].abs() {
                pivot = r;
            }
        }
        if m[(pivot, col)].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            swap_rows(&mut m, pivot, col);
            swap_rows(&mut inv, pivot, col);
        }
        let d = m[(col, col)];
        for k in 0..n {
            m[(col, k)] /= d;
            inv[(col, k)] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[(r, col)];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                m[(r, k)] -= f * m[(col, k)];
                inv[(r, k)] -= f * inv[(col, k)];
            }
        }
    }

    let cond = frobenius(a) * frobenius(&inv);
    Some((inv, cond))
}

fn swap_rows(a: &mut Array2<f64>, i: usize, j: usize) {
    if i == j {
        return;
    }
    let n = a.ncols();
    for k in 0..n {
        let t = a[(i, k)];
        a[(i, k)] = a[(j, k)];
        a[(j, k)] = t;
    }
}

pub(crate) fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// max |(U^T U - I)_ij|, a cheap orthogonality check.
pub(crate) fn orthogonality_defect(u: &Array2<f64>) -> f64 {
    let g = u.t().dot(u);
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}
