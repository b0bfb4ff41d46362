use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{svd, DenseMatrix};
use crate::scalar::Scalar;

/// Leading left singular vectors of the row-centered fit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SvdBasis<T> {
    /// `k × Σd_i`; rows are orthonormal.
    pub projection: DenseMatrix<T>,
    pub row_means: Vec<T>,
    /// The `k` leading singular values of the centered fit matrix.
    pub singular_values: Vec<T>,
    /// Divide each output component by its singular value, which maps fit
    /// columns onto the rows of `Uᵀ` instead of `S·Uᵀ`.
    #[serde(default)]
    pub whiten: bool,
}

impl<T: Scalar> SvdBasis<T> {
    pub fn k(&self) -> usize {
        self.projection.rows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.projection.cols() != self.row_means.len() || self.singular_values.len() != self.k()
        {
            return Err(Error::Shape(format!(
                "svd basis is {}x{} with {} means and {} singular values",
                self.projection.rows(),
                self.projection.cols(),
                self.row_means.len(),
                self.singular_values.len()
            )));
        }
        Ok(())
    }
}

/// Fits the SVD baseline on concatenated sentence vectors (one per fit sentence).
///
/// The fit matrix has one column per sentence; each row is centered on its
/// mean before decomposition `M = V·S·Uᵀ`. The basis keeps the first `k`
/// columns of `V`, transposed.
pub fn fit_svd<T: Scalar>(columns: &[Vec<T>], k: usize, whiten: bool) -> Result<SvdBasis<T>> {
    if columns.len() < 2 {
        return Err(Error::Empty("svd fit needs at least two sentences".into()));
    }
    let dim = columns[0].len();
    let limit = dim.min(columns.len());
    if k == 0 || k > limit {
        return Err(Error::Config(format!(
            "svd rank {k} must lie in 1..={limit} (dimension {dim}, {} sentences)",
            columns.len()
        )));
    }
    let mut m = DenseMatrix::from_columns(columns)?;
    let n = T::of(columns.len() as f64);
    let row_means: Vec<T> = (0..dim)
        .map(|r| m.row(r).iter().copied().sum::<T>() / n)
        .collect();
    for (r, &mean) in row_means.iter().enumerate() {
        m.row_mut(r).iter_mut().for_each(|x| *x = *x - mean);
    }
    let f = svd(&m)?;
    Ok(SvdBasis {
        projection: f.left.leading_columns(k).transpose(),
        row_means,
        singular_values: f.singular_values[..k].to_vec(),
        whiten,
    })
}

/// `projection · (x − row_means)`, optionally whitened.
pub fn svd_embed<T: Scalar>(basis: &SvdBasis<T>, x: &[T]) -> Result<Vec<T>> {
    if x.len() != basis.row_means.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.row_means.len(),
            found: x.len(),
        });
    }
    let centered: Vec<T> = x
        .iter()
        .zip(&basis.row_means)
        .map(|(&a, &m)| a - m)
        .collect();
    let mut y = basis.projection.mul_vec(&centered)?;
    if basis.whiten {
        for (v, &s) in y.iter_mut().zip(&basis.singular_values) {
            *v = if s > T::zero() { *v / s } else { T::zero() };
        }
    }
    Ok(y)
}
