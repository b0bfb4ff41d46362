use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{generalized_symmetric_eig, DenseMatrix};
use crate::scalar::Scalar;

/// Per-source canonical directions from the joint-covariance eigenproblem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GccaBasis<T> {
    /// One `d_i × k` block per source.
    pub blocks: Vec<DenseMatrix<T>>,
    pub means: Vec<Vec<T>>,
    pub ridge: T,
    /// The `k` leading generalized eigenvalues.
    pub eigenvalues: Vec<T>,
}

impl<T: Scalar> GccaBasis<T> {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.len() != self.means.len() || self.blocks.is_empty() {
            return Err(Error::Shape(
                "gcca basis needs one block and one mean per source".into(),
            ));
        }
        for (b, m) in self.blocks.iter().zip(&self.means) {
            if b.rows() != m.len() || b.cols() != self.k() {
                return Err(Error::Shape(format!(
                    "gcca block is {}x{}, expected {}x{}",
                    b.rows(),
                    b.cols(),
                    m.len(),
                    self.k()
                )));
            }
        }
        if self.ridge <= T::zero() || !self.ridge.is_finite() {
            return Err(Error::Config("gcca ridge must be positive".into()));
        }
        Ok(())
    }
}

/// Fits generalized CCA on per-source sentence vectors (`views[source][sentence]`).
///
/// With every view centered, the joint covariance `C` has blocks
/// `C_pq = X_pᵀX_q / (N − 1)`; the metric `D` is block-diagonal with
/// `C_pp + ridge·I`. The top-`k` solutions of `C·v = ρ·D·v` are split into
/// per-source blocks. Without an explicit ridge, `1e-3` times the mean
/// diagonal of `C` is used.
pub fn fit_gcca<T: Scalar>(
    views: &[Vec<Vec<T>>],
    k: usize,
    ridge: Option<T>,
) -> Result<GccaBasis<T>> {
    let first = views
        .first()
        .ok_or_else(|| Error::Empty("gcca needs at least one view".into()))?;
    let n = first.len();
    if n < 2 {
        return Err(Error::Empty("gcca needs at least two sentences".into()));
    }
    if views.iter().any(|v| v.len() != n) {
        return Err(Error::Shape(
            "all views must cover the same sentences".into(),
        ));
    }

    let mut dims = Vec::with_capacity(views.len());
    let mut means = Vec::with_capacity(views.len());
    let mut centered: Vec<Vec<T>> = vec![Vec::new(); n];
    let count = T::of(n as f64);
    for view in views {
        let d = view[0].len();
        if d == 0 || view.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("ragged or empty view".into()));
        }
        let mean: Vec<T> = (0..d)
            .map(|j| view.iter().map(|r| r[j]).sum::<T>() / count)
            .collect();
        for (row, r) in centered.iter_mut().zip(view) {
            row.extend(r.iter().zip(&mean).map(|(&x, &m)| x - m));
        }
        dims.push(d);
        means.push(mean);
    }
    let total: usize = dims.iter().sum();
    if k == 0 || k > total {
        return Err(Error::Config(format!(
            "gcca rank {k} must lie in 1..={total}"
        )));
    }

    let x = DenseMatrix::from_rows(&centered)?;
    let c = x.gram().scaled(T::one() / (count - T::one()));
    let ridge = match ridge {
        Some(r) if r > T::zero() => r,
        Some(r) => return Err(Error::Config(format!("gcca ridge {r} must be positive"))),
        None => {
            let mean_diag = (0..total).map(|i| c[(i, i)]).sum::<T>() / T::of(total as f64);
            let r = T::of(1e-3) * mean_diag;
            if r > T::zero() {
                r
            } else {
                T::of(1e-3)
            }
        }
    };

    let mut d = DenseMatrix::zeros(total, total);
    let mut offset = 0;
    for &dim in &dims {
        for i in offset..offset + dim {
            for j in offset..offset + dim {
                d[(i, j)] = c[(i, j)];
            }
            d[(i, i)] = d[(i, i)] + ridge;
        }
        offset += dim;
    }

    let eig = generalized_symmetric_eig(&c, &d)?;
    let top = eig.vectors.leading_columns(k);
    let mut blocks = Vec::with_capacity(dims.len());
    let mut offset = 0;
    for &dim in &dims {
        blocks.push(top.row_block(offset, offset + dim));
        offset += dim;
    }
    Ok(GccaBasis {
        blocks,
        means,
        ridge,
        eigenvalues: eig.values[..k].to_vec(),
    })
}

/// `Σ_i block_iᵀ · (x_i − mean_i)`.
pub fn gcca_embed<T: Scalar>(basis: &GccaBasis<T>, per_source: &[&[T]]) -> Result<Vec<T>> {
    if per_source.len() != basis.blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.blocks.len(),
            found: per_source.len(),
        });
    }
    let mut out = vec![T::zero(); basis.k()];
    for ((block, mean), x) in basis.blocks.iter().zip(&basis.means).zip(per_source) {
        if x.len() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: x.len(),
            });
        }
        let centered: Vec<T> = x.iter().zip(mean).map(|(&a, &m)| a - m).collect();
        let y = block.tr_mul_vec(&centered)?;
        out.iter_mut().zip(y).for_each(|(o, v)| *o = *o + v);
    }
    Ok(out)
}

/// Contribution of a single source to [`gcca_embed`].
pub fn gcca_source_contribution<T: Scalar>(
    basis: &GccaBasis<T>,
    source: usize,
    x: &[T],
) -> Result<Vec<T>> {
    let mean = &basis.means[source];
    if x.len() != mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            found: x.len(),
        });
    }
    let centered: Vec<T> = x.iter().zip(mean).map(|(&a, &m)| a - m).collect();
    basis.blocks[source].tr_mul_vec(&centered)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(rows: &[[f64; 2]]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn means_map_to_zero() {
        let a = view(&[[1.0, 2.0], [3.0, -1.0], [0.0, 0.5], [2.0, 2.0]]);
        let b = view(&[[0.0, 1.0], [1.0, 1.0], [4.0, -2.0], [1.0, 0.0]]);
        let basis = fit_gcca(&[a, b], 2, None).unwrap();
        let m0 = basis.means[0].clone();
        let m1 = basis.means[1].clone();
        let y = gcca_embed(&basis, &[&m0, &m1]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-12));
        assert!(gcca_embed(&basis, &[&m0]).is_err());
    }

    #[test]
    fn single_view_is_linear_projection() {
        let a = view(&[[1.0, 2.0], [3.0, -1.0], [0.0, 0.5], [2.0, 2.0]]);
        let basis = fit_gcca(&[a], 2, None).unwrap();
        let x = [0.7, -0.2];
        let y = gcca_embed(&basis, &[&x]).unwrap();
        let centered = [x[0] - basis.means[0][0], x[1] - basis.means[0][1]];
        let direct = basis.blocks[0].tr_mul_vec(&centered).unwrap();
        assert_eq!(y, direct);
        // A single view's pencil is C against C + ridge·I.
        assert!(basis.eigenvalues.iter().all(|&e| e < 1.0 && e > 0.99));
    }

    #[test]
    fn rejects_bad_input() {
        let a = view(&[[1.0, 2.0], [3.0, -1.0]]);
        let b = view(&[[1.0, 2.0]]);
        assert!(fit_gcca(&[a.clone(), b], 1, None).is_err());
        assert!(fit_gcca(std::slice::from_ref(&a), 3, None).is_err());
        assert!(fit_gcca(&[a], 1, Some(0.0)).is_err());
    }
}
