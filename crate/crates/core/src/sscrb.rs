//! Semiparametric stochastic Cramér-Rao bound on the spatial frequencies.
//!
//! The bound treats the density generator as an unknown nuisance: its only
//! trace is the scalar score moment E{Q^2 psi^2}, which rescales the
//! classical stochastic-CRB geometry captured by the C matrix. At the
//! Gaussian generator the moment equals N(N+1) and the classical bound
//! falls out exactly.

use crate::array::{steering_derivative, steering_matrix, SourceScene};
use crate::ces::DensityGenerator;
use crate::{CMat, Error, RMat, Result};
use nalgebra::Cholesky;

/// Condition number of C above which the bound is numerically fragile
/// (near-coherent or near-coincident sources); reported, not fatal.
pub const CONDITION_WARN: f64 = 1e10;

#[derive(Debug, Clone)]
pub struct BoundResult {
    /// K x K bound matrix: scalar_factor * C^{-1}.
    pub matrix: RMat,
    /// Frobenius norm of the bound matrix.
    pub index: f64,
    /// N(N+1) sigma0^2 / (2 L E{Q^2 psi^2}).
    pub scalar_factor: f64,
    /// Spectral condition number of C.
    pub condition: f64,
}

/// Geometry matrix of the bound: the real part of the Hadamard product of
/// D^H P_perp D with the conjugate of Gamma A^H Sigma^{-1} A Gamma. Both
/// factors are Hermitian, so the result is real symmetric by construction;
/// it is PD whenever the sources are distinct and not fully coherent.
pub fn c_matrix(scene: &SourceScene) -> Result<RMat> {
    scene.validate()?;
    let n = scene.n;
    let k = scene.k();
    let a = steering_matrix(n, &scene.nu);
    let d = {
        let mut d = CMat::zeros(n, k);
        for (j, &nu) in scene.nu.iter().enumerate() {
            d.set_column(j, &steering_derivative(n, nu));
        }
        d
    };
    let gram = a.adjoint() * &a;
    let gram_chol = Cholesky::new(gram).ok_or_else(|| {
        Error::Singular("steering matrix is rank deficient (coincident sources)".into())
    })?;
    // P_perp = I - A (A^H A)^{-1} A^H applied directly to D
    let proj_d = &d - &a * gram_chol.solve(&(a.adjoint() * &d));
    let h = d.adjoint() * proj_d;

    let sigma = scene.covariance();
    let sigma_chol = Cholesky::new(sigma)
        .ok_or_else(|| Error::Singular("scene covariance is not positive definite".into()))?;
    let m = &scene.gamma * (a.adjoint() * sigma_chol.solve(&a)) * &scene.gamma;

    Ok(RMat::from_fn(k, k, |i, j| {
        let v = h[(i, j)] * m[(i, j)].conj();
        0.5 * (v.re + (h[(j, i)] * m[(j, i)].conj()).re)
    }))
}

/// Full bound: scalar_factor x C^{-1}, with the Frobenius index and the
/// condition number of C attached.
pub fn sscrb(scene: &SourceScene, generator: DensityGenerator, l: usize) -> Result<BoundResult> {
    generator.validate()?;
    if l == 0 {
        return Err(Error::Domain("bound needs at least one snapshot".into()));
    }
    let c = c_matrix(scene)?;
    let k = c.nrows();
    let eig = c.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(f64::total_cmp);
    if !(vals[0] > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "C matrix has min eigenvalue {}, sources too close or coherent",
            vals[0]
        )));
    }
    let condition = vals[k - 1] / vals[0];

    let n = scene.n as f64;
    let moment = generator.score_moment(scene.n)?;
    let scalar_factor =
        n * (n + 1.0) * scene.sigma0sq / (2.0 * l as f64 * moment);

    let inv = Cholesky::new(c)
        .ok_or_else(|| Error::NotPositiveDefinite("C matrix refused factorization".into()))?
        .inverse();
    let matrix = {
        let m = inv * scalar_factor;
        (&m + m.transpose()) * 0.5
    };
    let index = matrix.norm();
    Ok(BoundResult {
        matrix,
        index,
        scalar_factor,
        condition,
    })
}
