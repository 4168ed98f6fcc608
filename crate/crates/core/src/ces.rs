//! Complex elliptically symmetric data model.
//!
//! A zero-mean CES vector factors as z = sqrt(Q) * Sigma^{1/2} * u with u
//! uniform on the complex unit n-sphere and Q a positive modular variate
//! whose law is tied to the density generator h through
//! p_Q(q) proportional to q^{n-1} h(q). All families here are calibrated to
//! the constraint E{Q} = n, which makes Sigma the actual covariance and
//! pins the scale ambiguity of the elliptical model.

use crate::{CVec, Cx, Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// Density generator family for the radial part of a CES distribution.
///
/// `StudentT` requires lambda > 1 (finite mean of Q); `GeneralizedGaussian`
/// requires s > 0, with s = 1 reducing to the Gaussian and s < 1 giving
/// heavier-than-Gaussian tails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityGenerator {
    Gaussian,
    StudentT { lambda: f64 },
    GeneralizedGaussian { s: f64 },
}

impl DensityGenerator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DensityGenerator::Gaussian => Ok(()),
            DensityGenerator::StudentT { lambda } => {
                if lambda.is_finite() && lambda > 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "StudentT lambda must be finite and > 1, got {lambda}"
                    )))
                }
            }
            DensityGenerator::GeneralizedGaussian { s } => {
                if s.is_finite() && s > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "GeneralizedGaussian s must be finite and > 0, got {s}"
                    )))
                }
            }
        }
    }

    /// Short family label used in file metadata and result tables.
    pub fn label(&self) -> &'static str {
        match self {
            DensityGenerator::Gaussian => "gaussian",
            DensityGenerator::StudentT { .. } => "t",
            DensityGenerator::GeneralizedGaussian { .. } => "gg",
        }
    }

    /// The family's tail parameter, if it has one.
    pub fn parameter(&self) -> Option<(&'static str, f64)> {
        match *self {
            DensityGenerator::Gaussian => None,
            DensityGenerator::StudentT { lambda } => Some(("lambda", lambda)),
            DensityGenerator::GeneralizedGaussian { s } => Some(("s", s)),
        }
    }

    /// log of the density generator h(t) for ambient dimension n.
    ///
    /// The t and generalized-Gaussian families carry their full normalizing
    /// constants (including pi^{-n}); the Gaussian generator is the bare
    /// exp(-t). Downstream quantities are insensitive to the constant: the
    /// score is a log-derivative and the modular law normalizes q^{n-1} h(q).
    pub fn ln_h(&self, n: usize, t: f64) -> Result<f64> {
        check_dim_and_t(n, t)?;
        self.validate()?;
        let nf = n as f64;
        Ok(match *self {
            DensityGenerator::Gaussian => -t,
            DensityGenerator::StudentT { lambda } => {
                // eta = lambda/(lambda-1) makes E{Q} = n; lambda/eta = lambda-1.
                let a = lambda - 1.0;
                ln_gamma(lambda + nf) - nf * std::f64::consts::PI.ln() - ln_gamma(lambda)
                    + lambda * a.ln()
                    - (lambda + nf) * (a + t).ln()
            }
            DensityGenerator::GeneralizedGaussian { s } => {
                let ln_b = gg_ln_b(n, s);
                s.ln() + ln_gamma(nf) - (nf / s) * ln_b
                    - nf * std::f64::consts::PI.ln()
                    - ln_gamma(nf / s)
                    - t.powf(s) * (-ln_b).exp()
            }
        })
    }

    pub fn h(&self, n: usize, t: f64) -> Result<f64> {
        Ok(self.ln_h(n, t)?.exp())
    }

    /// Score psi(t) = d ln h / dt.
    ///
    /// For the generalized Gaussian with s < 1 the score diverges at t = 0;
    /// that point is rejected as a domain error.
    pub fn psi(&self, n: usize, t: f64) -> Result<f64> {
        check_dim_and_t(n, t)?;
        self.validate()?;
        let nf = n as f64;
        match *self {
            DensityGenerator::Gaussian => Ok(-1.0),
            DensityGenerator::StudentT { lambda } => Ok(-(lambda + nf) / (lambda - 1.0 + t)),
            DensityGenerator::GeneralizedGaussian { s } => {
                if s < 1.0 && t == 0.0 {
                    return Err(Error::Domain(
                        "generalized Gaussian score is singular at t = 0 for s < 1".into(),
                    ));
                }
                let inv_b = (-gg_ln_b(n, s)).exp();
                Ok(-s * inv_b * t.powf(s - 1.0))
            }
        }
    }

    /// E{Q^2 psi(Q)^2} under the constraint E{Q} = n; closed forms:
    /// Gaussian n(n+1), StudentT n(n+1)(lambda+n)/(lambda+n+1),
    /// generalized Gaussian n(n+s).
    pub fn score_moment(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::Dimension("score_moment needs n >= 1".into()));
        }
        self.validate()?;
        let nf = n as f64;
        Ok(match *self {
            DensityGenerator::Gaussian => nf * (nf + 1.0),
            DensityGenerator::StudentT { lambda } => {
                nf * (nf + 1.0) * (lambda + nf) / (lambda + nf + 1.0)
            }
            DensityGenerator::GeneralizedGaussian { s } => nf * (nf + s),
        })
    }

    /// Draw one modular variate Q with E{Q} = n.
    ///
    /// Gaussian: Q ~ Gamma(n, 1). StudentT: Q = (lambda-1) G1/G2 with
    /// G1 ~ Gamma(n, 1), G2 ~ Gamma(lambda, 1) independent (a scaled
    /// beta-prime, mean n for lambda > 1). Generalized Gaussian:
    /// Q = (b W)^{1/s} with W ~ Gamma(n/s, 1), which is the law with density
    /// proportional to q^{n-1} exp(-q^s/b).
    pub fn sample_modular<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> f64 {
        let nf = n as f64;
        match *self {
            DensityGenerator::Gaussian => {
                Gamma::new(nf, 1.0).expect("valid gamma shape").sample(rng)
            }
            DensityGenerator::StudentT { lambda } => {
                let g1 = Gamma::new(nf, 1.0).expect("valid gamma shape").sample(rng);
                let g2 = Gamma::new(lambda, 1.0)
                    .expect("valid gamma shape")
                    .sample(rng);
                (lambda - 1.0) * g1 / g2
            }
            DensityGenerator::GeneralizedGaussian { s } => {
                let w = Gamma::new(nf / s, 1.0)
                    .expect("valid gamma shape")
                    .sample(rng);
                (gg_ln_b(n, s).exp() * w).powf(1.0 / s)
            }
        }
    }

    /// Reference cdf of the modular variate (the law induced by
    /// q^{n-1} h(q) after normalization); used by distributional tests.
    pub fn modular_cdf(&self, n: usize, q: f64) -> Result<f64> {
        check_dim_and_t(n, q)?;
        self.validate()?;
        let nf = n as f64;
        Ok(match *self {
            DensityGenerator::Gaussian => gamma_lr(nf, q),
            DensityGenerator::StudentT { lambda } => {
                // Q/(lambda-1+Q) ~ Beta(n, lambda)
                beta_reg(nf, lambda, q / (lambda - 1.0 + q))
            }
            DensityGenerator::GeneralizedGaussian { s } => {
                gamma_lr(nf / s, q.powf(s) * (-gg_ln_b(n, s)).exp())
            }
        })
    }
}

/// log of the generalized-Gaussian scale b = [n G(n/s) / G((n+1)/s)]^s,
/// the unique scale for which E{Q} = n.
fn gg_ln_b(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    s * (nf.ln() + ln_gamma(nf / s) - ln_gamma((nf + 1.0) / s))
}

fn check_dim_and_t(n: usize, t: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Dimension("ambient dimension must be >= 1".into()));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!(
            "density generator argument must be finite and >= 0, got {t}"
        )));
    }
    Ok(())
}

/// Uniform draw from the complex unit n-sphere: an isotropic complex normal
/// vector normalized to unit length. E{u u^H} = I/n.
pub fn sample_unit_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    loop {
        let g = CVec::from_fn(n, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Cx::new(re, im)
        });
        let norm = g.norm();
        if norm > 1e-150 {
            return g / Cx::new(norm, 0.0);
        }
    }
}
