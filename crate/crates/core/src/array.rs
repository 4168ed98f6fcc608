//! Uniform linear array geometry and source scenes.
//!
//! Frequencies are normalized spatial frequencies nu in [-0.5, 0.5); the
//! steering vector element for sensor m is exp(j 2 pi m nu), m = 0..n-1.

use crate::{CMat, CVec, Cx, Error, RVec, Result};
use std::f64::consts::TAU;

/// Steering vector a(nu) for an n-sensor ULA; norm is sqrt(n) and
/// a(nu + 1) = a(nu).
pub fn steering(n: usize, nu: f64) -> CVec {
    CVec::from_fn(n, |m, _| Cx::from_polar(1.0, TAU * m as f64 * nu))
}

/// Element-wise derivative d a(nu) / d nu: j 2 pi m exp(j 2 pi m nu).
pub fn steering_derivative(n: usize, nu: f64) -> CVec {
    CVec::from_fn(n, |m, _| {
        Cx::new(0.0, TAU * m as f64) * Cx::from_polar(1.0, TAU * m as f64 * nu)
    })
}

/// Steering matrix with one column per source frequency.
pub fn steering_matrix(n: usize, nus: &[f64]) -> CMat {
    CMat::from_fn(n, nus.len(), |m, k| Cx::from_polar(1.0, TAU * m as f64 * nus[k]))
}

/// K sources with frequencies `nu`, source covariance `gamma` (K x K
/// Hermitian PD) and white noise power `sigma0sq` on an n-sensor ULA.
#[derive(Debug, Clone)]
pub struct SourceScene {
    pub n: usize,
    pub nu: Vec<f64>,
    pub gamma: CMat,
    pub sigma0sq: f64,
}

impl SourceScene {
    pub fn new(n: usize, nu: Vec<f64>, gamma: CMat, sigma0sq: f64) -> Result<Self> {
        let scene = Self {
            n,
            nu,
            gamma,
            sigma0sq,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Two equal-structure sources with powers `s1sq`, `s2sq` and real
    /// correlation `rho`.
    pub fn two_source(
        n: usize,
        nu: [f64; 2],
        s1sq: f64,
        s2sq: f64,
        rho: f64,
        sigma0sq: f64,
    ) -> Result<Self> {
        let c = rho * (s1sq * s2sq).sqrt();
        let gamma = CMat::from_row_slice(
            2,
            2,
            &[
                Cx::new(s1sq, 0.0),
                Cx::new(c, 0.0),
                Cx::new(c, 0.0),
                Cx::new(s2sq, 0.0),
            ],
        );
        Self::new(n, nu.to_vec(), gamma, sigma0sq)
    }

    pub fn k(&self) -> usize {
        self.nu.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.nu.len();
        if k == 0 || k >= self.n {
            return Err(Error::Dimension(format!(
                "need 1 <= K < N, got K={k}, N={}",
                self.n
            )));
        }
        if self.gamma.nrows() != k || self.gamma.ncols() != k {
            return Err(Error::Dimension(format!(
                "gamma must be {k}x{k}, got {}x{}",
                self.gamma.nrows(),
                self.gamma.ncols()
            )));
        }
        if !crate::linalg::is_hermitian(&self.gamma, crate::linalg::HERMITIAN_TOLERANCE) {
            return Err(Error::Domain("gamma must be Hermitian".into()));
        }
        let (gamma_eig, _) = crate::linalg::hermitian_eig(&self.gamma)?;
        if gamma_eig[0] <= crate::linalg::PD_TOLERANCE * gamma_eig[k - 1].max(0.0)
            || gamma_eig[k - 1] <= 0.0
        {
            return Err(Error::NotPositiveDefinite("gamma".into()));
        }
        if !(self.sigma0sq.is_finite() && self.sigma0sq > 0.0) {
            return Err(Error::Domain(format!(
                "noise power must be positive, got {}",
                self.sigma0sq
            )));
        }
        for (i, &nu) in self.nu.iter().enumerate() {
            if !(-0.5..0.5).contains(&nu) {
                return Err(Error::Domain(format!(
                    "nu[{i}] = {nu} outside [-0.5, 0.5)"
                )));
            }
            for &other in &self.nu[i + 1..] {
                let diff = (nu - other).rem_euclid(1.0);
                if diff.min(1.0 - diff) < 1e-9 {
                    return Err(Error::Degenerate(format!(
                        "source frequencies {nu} and {other} coincide"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Array covariance A Gamma A^H + sigma0^2 I.
    pub fn covariance(&self) -> CMat {
        let a = steering_matrix(self.n, &self.nu);
        let mut sigma = &a * &self.gamma * a.adjoint();
        for i in 0..self.n {
            sigma[(i, i)] += Cx::new(self.sigma0sq, 0.0);
        }
        // The construction is Hermitian in exact arithmetic; make it so.
        (&sigma + sigma.adjoint()) * Cx::new(0.5, 0.0)
    }

    /// Nuisance vector for the statistical parameterization: the K real
    /// diagonal entries of Gamma, then Re of the strict upper triangle in
    /// column-major order, then Im likewise; length K^2.
    pub fn zeta(&self) -> RVec {
        let k = self.k();
        let mut out = Vec::with_capacity(k * k);
        for i in 0..k {
            out.push(self.gamma[(i, i)].re);
        }
        for j in 0..k {
            for i in 0..j {
                out.push(self.gamma[(i, j)].re);
            }
        }
        for j in 0..k {
            for i in 0..j {
                out.push(self.gamma[(i, j)].im);
            }
        }
        RVec::from_vec(out)
    }
}
