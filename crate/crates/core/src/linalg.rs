//! Hermitian matrix utilities shared by the estimators and the bound.
//!
//! Conventions: `vec` stacks columns (column-major), `vecd` is `vec` with the
//! top-left entry dropped, matching the scatter parameterization in which the
//! (1,1) entry is pinned to one. The selection matrix and the centering
//! projector have dense builders for test oracles; hot paths apply them
//! through index arithmetic instead.

use crate::{CMat, CVec, Cx, Error, RMat, RVec, Result};
use nalgebra::SymmetricEigen;

/// Relative eigenvalue floor below which a Hermitian matrix is treated as
/// not positive definite: an eigenvalue counts as zero when it is smaller
/// than `PD_TOLERANCE` times the largest eigenvalue.
pub const PD_TOLERANCE: f64 = 1e-12;

/// Largest allowed deviation `max |a_ij - conj(a_ji)|` relative to the
/// largest entry magnitude when validating Hermitian inputs.
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

fn check_hermitian(a: &CMat, what: &str) -> Result<()> {
    if !is_hermitian(a, HERMITIAN_TOLERANCE) {
        return Err(Error::Domain(format!("{what}: input is not Hermitian")));
    }
    Ok(())
}

/// Column-major stacking of a matrix into a length-`n*m` vector.
pub fn vec_of(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

/// `vec` with the first (top-left) entry dropped; defined for square inputs.
pub fn vecd_of(a: &CMat) -> Result<CVec> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "vecd needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let s = a.as_slice();
    Ok(CVec::from_column_slice(&s[1..]))
}

/// Inverse of [`vecd_of`]: rebuilds an `n`-square matrix from the pinned
/// top-left entry and the remaining `n*n - 1` column-major entries.
pub fn unvecd(head: Cx, tail: &CVec, n: usize) -> Result<CMat> {
    if tail.len() != n * n - 1 {
        return Err(Error::Dimension(format!(
            "unvecd: expected {} entries, got {}",
            n * n - 1,
            tail.len()
        )));
    }
    let mut m = CMat::zeros(n, n);
    m.as_mut_slice()[0] = head;
    m.as_mut_slice()[1..].copy_from_slice(tail.as_slice());
    Ok(m)
}

/// Dense form of the selection matrix that deletes the first coordinate of a
/// `vec`ed square matrix: rows are the standard basis vectors e_2 .. e_{n^2}.
/// Test oracle; production code slices instead.
pub fn selection_matrix(n: usize) -> RMat {
    let n2 = n * n;
    let mut p = RMat::zeros(n2 - 1, n2);
    for r in 0..n2 - 1 {
        p[(r, r + 1)] = 1.0;
    }
    p
}

/// Dense form of the projector onto the orthogonal complement of vec(I_n):
/// I - vec(I) vec(I)^T / n. Test oracle; production code uses
/// [`apply_centering`].
pub fn centering_projector(n: usize) -> RMat {
    let n2 = n * n;
    let mut v = RVec::zeros(n2);
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    RMat::identity(n2, n2) - &v * v.transpose() / n as f64
}

/// Matrix form of the centering projector: X - (tr X / n) I.
pub fn apply_centering(x: &CMat) -> CMat {
    let n = x.nrows();
    let mean = x.diagonal().sum() / Cx::new(n as f64, 0.0);
    let mut out = x.clone();
    for i in 0..n {
        out[(i, i)] -= mean;
    }
    out
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// ascending and the eigenvector columns permuted to match.
pub fn hermitian_eig(a: &CMat) -> Result<(RVec, CMat)> {
    check_hermitian(a, "hermitian_eig")?;
    let eig = SymmetricEigen::new(a.clone());
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = RVec::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Hermitian square root and inverse square root, computed from the
/// eigendecomposition. Fails when the matrix is not positive definite
/// relative to [`PD_TOLERANCE`].
pub fn hermitian_sqrt_pair(a: &CMat) -> Result<(CMat, CMat)> {
    let (values, vectors) = hermitian_eig(a)?;
    let n = a.nrows();
    let max = values[n - 1];
    if max <= 0.0 || values[0] <= PD_TOLERANCE * max {
        return Err(Error::NotPositiveDefinite(format!(
            "eigenvalue range [{:.3e}, {:.3e}]",
            values[0], max
        )));
    }
    let mut sqrt = CMat::zeros(n, n);
    let mut inv_sqrt = CMat::zeros(n, n);
    for j in 0..n {
        let col = vectors.column(j);
        let r = values[j].sqrt();
        sqrt.gerc(Cx::new(r, 0.0), &col, &col, Cx::new(1.0, 0.0));
        inv_sqrt.gerc(Cx::new(1.0 / r, 0.0), &col, &col, Cx::new(1.0, 0.0));
    }
    // Symmetrize away rounding noise so downstream Hermitian checks hold.
    sqrt = (&sqrt + sqrt.adjoint()) * Cx::new(0.5, 0.0);
    inv_sqrt = (&inv_sqrt + inv_sqrt.adjoint()) * Cx::new(0.5, 0.0);
    Ok((sqrt, inv_sqrt))
}

/// Kronecker product, block layout `a_ij * B`.
pub fn kronecker(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Frobenius norm of a complex matrix.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
