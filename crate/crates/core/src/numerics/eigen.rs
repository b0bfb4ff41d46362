//! Symmetric and symmetric-definite generalized eigensolvers (cyclic Jacobi).

use crate::error::{Error, Result};
use crate::numerics::matrix::{canonical_sign, DenseMatrix};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition with eigenvalues sorted descending; eigenvectors are
/// the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
}

fn symmetry_tolerance<T: Scalar>(m: &DenseMatrix<T>) -> T {
    T::of(1e-10) * (T::one() + m.frobenius_norm())
}

/// Eigen-decomposition of a real symmetric matrix.
pub fn symmetric_eigen<T: Scalar>(a: &DenseMatrix<T>) -> Result<Eigen<T>> {
    if a.rows() != a.cols() {
        return Err(Error::Shape(format!(
            "{}x{} matrix is not square",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("eigensolver input".into()));
    }
    if a.asymmetry() > symmetry_tolerance(a) {
        return Err(Error::Shape("matrix is not symmetric".into()));
    }
    let n = a.rows();
    let mut m = a.clone();
    // Exact symmetrization so the rotations keep the working copy symmetric.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)]) * T::of(0.5);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let mut v = DenseMatrix::identity(n);
    let scale = m.frobenius_norm();
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<T>()
            .sqrt();
        if off <= eps * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (apq + apq);
                let t = if theta.is_infinite() {
                    T::zero()
                } else {
                    let sign = if theta < T::zero() {
                        -T::one()
                    } else {
                        T::one()
                    };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                jacobi_rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<(T, usize)> = (0..n).map(|i| (m[(i, i)], i)).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));
    let values = order.iter().map(|o| o.0).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (slot, &(_, j)) in order.iter().enumerate() {
        let mut col = v.column(j);
        canonical_sign(&mut col);
        for i in 0..n {
            vectors[(i, slot)] = col[i];
        }
    }
    Ok(Eigen { values, vectors })
}

fn jacobi_rotate<T: Scalar>(
    m: &mut DenseMatrix<T>,
    v: &mut DenseMatrix<T>,
    p: usize,
    q: usize,
    c: T,
    s: T,
) {
    let n = m.rows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Lower-triangular Cholesky factor `L` with `D = L·Lᵀ`.
pub fn cholesky<T: Scalar>(d: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = d.rows();
    if d.cols() != n {
        return Err(Error::Shape("Cholesky input is not square".into()));
    }
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = d[(j, j)];
        for k in 0..j {
            diag = diag - l[(j, k)] * l[(j, k)];
        }
        if diag <= T::zero() || diag.is_nan() {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut x = d[(i, j)];
            for k in 0..j {
                x = x - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = x / ljj;
        }
    }
    Ok(l)
}

/// Solves `L·X = B` for lower-triangular `L`.
fn forward_solve<T: Scalar>(l: &DenseMatrix<T>, b: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = l.rows();
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in 0..n {
            let mut acc = x[(i, col)];
            for k in 0..i {
                acc = acc - l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = acc / l[(i, i)];
        }
    }
    x
}

/// Solves `Lᵀ·X = B` for lower-triangular `L`.
fn backward_solve_transposed<T: Scalar>(l: &DenseMatrix<T>, b: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = l.rows();
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in (0..n).rev() {
            let mut acc = x[(i, col)];
            for k in (i + 1)..n {
                acc = acc - l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = acc / l[(i, i)];
        }
    }
    x
}

/// Solves `C·v = ρ·D·v` for symmetric `C` and symmetric positive-definite `D`.
///
/// Reduces to a standard problem through the Cholesky factor of `D`. The
/// returned eigenvectors are `D`-orthonormal (`vᵀDv = 1`).
pub fn generalized_symmetric_eig<T: Scalar>(
    c: &DenseMatrix<T>,
    d: &DenseMatrix<T>,
) -> Result<Eigen<T>> {
    let n = c.rows();
    if c.cols() != n || d.shape() != (n, n) {
        return Err(Error::Shape(
            "pencil matrices must be square and equally sized".into(),
        ));
    }
    if !c.is_finite() || !d.is_finite() {
        return Err(Error::NonFinite("generalized eigensolver input".into()));
    }
    if c.asymmetry() > symmetry_tolerance(c) || d.asymmetry() > symmetry_tolerance(d) {
        return Err(Error::Shape("pencil matrices must be symmetric".into()));
    }
    let l = cholesky(d)?;
    let half = forward_solve(&l, c);
    let mut reduced = forward_solve(&l, &half.transpose());
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (reduced[(i, j)] + reduced[(j, i)]) * T::of(0.5);
            reduced[(i, j)] = avg;
            reduced[(j, i)] = avg;
        }
    }
    let standard = symmetric_eigen(&reduced)?;
    let mut vectors = backward_solve_transposed(&l, &standard.vectors);
    for j in 0..n {
        let mut col = vectors.column(j);
        if canonical_sign(&mut col) {
            for i in 0..n {
                vectors[(i, j)] = col[i];
            }
        }
    }
    Ok(Eigen {
        values: standard.values,
        vectors,
    })
}
