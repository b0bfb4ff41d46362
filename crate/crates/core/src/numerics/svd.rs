//! Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.

use crate::error::{Error, Result};
use crate::numerics::matrix::{canonical_sign, DenseMatrix};
use crate::scalar::{dot, Scalar};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `M = left · diag(singular_values) · rightᵀ`.
///
/// For an `m × n` input with `k = min(m, n)`, `left` is `m × k` and `right`
/// is `n × k`, both with orthonormal columns. Singular values are sorted
/// descending. Each left singular vector has its first non-negligible
/// component positive; the matching right vector is flipped along with it.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub left: DenseMatrix<T>,
    pub singular_values: Vec<T>,
    pub right: DenseMatrix<T>,
}

impl<T: Scalar> Svd<T> {
    /// `left · diag(s) · rightᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let k = self.singular_values.len();
        let mut scaled = self.left.clone();
        for i in 0..scaled.rows() {
            for j in 0..k {
                scaled[(i, j)] = scaled[(i, j)] * self.singular_values[j];
            }
        }
        scaled
            .matmul(&self.right.transpose())
            .expect("svd factors have matching inner dimension")
    }
}

pub fn svd<T: Scalar>(m: &DenseMatrix<T>) -> Result<Svd<T>> {
    if !m.is_finite() {
        return Err(Error::NonFinite("svd input".into()));
    }
    if m.rows() >= m.cols() {
        tall_svd(m)
    } else {
        let t = tall_svd(&m.transpose())?;
        let mut out = Svd {
            left: t.right,
            singular_values: t.singular_values,
            right: t.left,
        };
        apply_sign_convention(&mut out);
        Ok(out)
    }
}

fn tall_svd<T: Scalar>(m: &DenseMatrix<T>) -> Result<Svd<T>> {
    let (rows, cols) = m.shape();
    // Work on columns: store the transpose so each column is a contiguous row.
    let mut work = m.transpose();
    let mut right_t = DenseMatrix::<T>::identity(cols);
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = dot(work.row(p), work.row(p));
                let beta = dot(work.row(q), work.row(q));
                let gamma = dot(work.row(p), work.row(q));
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut work, p, q, c, s);
                rotate_rows(&mut right_t, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(T, usize)> = (0..cols)
        .map(|j| (dot(work.row(j), work.row(j)).sqrt(), j))
        .collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite singular values"));

    let sigma_max = order.first().map_or(T::zero(), |o| o.0);
    let tol = sigma_max * eps * T::of((rows.max(cols) * 10) as f64);

    let mut left_cols: Vec<Vec<T>> = Vec::with_capacity(cols);
    let mut right_cols: Vec<Vec<T>> = Vec::with_capacity(cols);
    let mut values = Vec::with_capacity(cols);
    let mut deficient = Vec::new();
    for (slot, &(sigma, j)) in order.iter().enumerate() {
        right_cols.push(right_t.row(j).to_vec());
        values.push(sigma);
        if sigma > tol && sigma > T::zero() {
            left_cols.push(work.row(j).iter().map(|&x| x / sigma).collect());
        } else {
            left_cols.push(vec![T::zero(); rows]);
            deficient.push(slot);
        }
    }
    complete_orthonormal(&mut left_cols, &deficient);

    let mut out = Svd {
        left: DenseMatrix::from_columns(&left_cols)?,
        singular_values: values,
        right: DenseMatrix::from_columns(&right_cols)?,
    };
    apply_sign_convention(&mut out);
    Ok(out)
}

fn rotate_rows<T: Scalar>(m: &mut DenseMatrix<T>, p: usize, q: usize, c: T, s: T) {
    for k in 0..m.cols() {
        let a = m[(p, k)];
        let b = m[(q, k)];
        m[(p, k)] = c * a - s * b;
        m[(q, k)] = s * a + c * b;
    }
}

/// Fills the listed slots with unit vectors orthogonal to every other column,
/// drawing candidates from the standard basis.
fn complete_orthonormal<T: Scalar>(columns: &mut [Vec<T>], slots: &[usize]) {
    if slots.is_empty() {
        return;
    }
    let dim = columns[0].len();
    let mut candidate = 0;
    for &slot in slots {
        while candidate < dim {
            let mut v = vec![T::zero(); dim];
            v[candidate] = T::one();
            candidate += 1;
            // Two Gram-Schmidt passes against every column already set.
            for _ in 0..2 {
                for (idx, c) in columns.iter().enumerate() {
                    if idx == slot || c.iter().all(|x| *x == T::zero()) {
                        continue;
                    }
                    let proj = dot(&v, c);
                    v.iter_mut().zip(c).for_each(|(a, &b)| *a = *a - proj * b);
                }
            }
            let n = dot(&v, &v).sqrt();
            if n > T::of(0.5) {
                v.iter_mut().for_each(|x| *x = *x / n);
                columns[slot] = v;
                break;
            }
        }
    }
}

fn apply_sign_convention<T: Scalar>(svd: &mut Svd<T>) {
    for j in 0..svd.singular_values.len() {
        let mut col = svd.left.column(j);
        if canonical_sign(&mut col) {
            for (i, &v) in col.iter().enumerate() {
                svd.left[(i, j)] = v;
            }
            for i in 0..svd.right.rows() {
                svd.right[(i, j)] = -svd.right[(i, j)];
            }
        }
    }
}
