//! Shape matrix estimators.
//!
//! All three estimators target the scatter matrix normalized by its (1,1)
//! entry. The sample covariance is the Gaussian baseline, Tyler's fixed
//! point is the distribution-free workhorse, and the rank-based one-step
//! update starts from Tyler and moves along a score-weighted direction to
//! recover efficiency at nominal (Gaussian-like) data without giving up
//! robustness.

use crate::linalg::{
    apply_centering, centering_projector, fro_norm, hermitian_eig, hermitian_sqrt_pair,
    kronecker, unvecd, vec_of, vecd_of,
};
use crate::snapshots::SnapshotSet;
use crate::{CMat, CVec, Cx, Error, Result};
use nalgebra::Cholesky;
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// Default relative Frobenius tolerance for Tyler's fixed-point iteration.
pub const TYLER_TOL: f64 = 1e-9;

/// Default iteration cap for Tyler's fixed-point iteration.
pub const TYLER_MAX_ITER: usize = 500;

/// Eigenvalue floor, relative to the largest eigenvalue, used when the
/// one-step update leaves positive definiteness and must be repaired.
pub const PD_REPAIR_FLOOR: f64 = 1e-8;

/// Hermitian positive definite matrix with its top-left entry pinned to
/// exactly one; the common currency of every estimator here.
#[derive(Debug, Clone)]
pub struct ShapeMatrix {
    m: CMat,
}

impl ShapeMatrix {
    /// Normalizes an unconstrained Hermitian PD candidate: symmetrizes,
    /// divides by the (1,1) entry and pins that entry to one.
    pub fn from_unnormalized(m: CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("shape matrix must be square".into()));
        }
        if !crate::linalg::is_hermitian(&m, crate::linalg::HERMITIAN_TOLERANCE) {
            return Err(Error::Domain("shape matrix must be Hermitian".into()));
        }
        let mut m = (&m + m.adjoint()) * Cx::new(0.5, 0.0);
        let head = m[(0, 0)].re;
        if !(head.is_finite() && head > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "top-left entry {head} is not positive"
            )));
        }
        m /= Cx::new(head, 0.0);
        m[(0, 0)] = Cx::new(1.0, 0.0);
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }
}

fn check_snapshots(snaps: &SnapshotSet, what: &str) -> Result<()> {
    if snaps.len() < snaps.n() {
        return Err(Error::Degenerate(format!(
            "{what} needs at least as many snapshots as sensors, got L={} < N={}",
            snaps.len(),
            snaps.n()
        )));
    }
    for (l, z) in snaps.snapshots().iter().enumerate() {
        if z.norm_squared() <= 0.0 {
            return Err(Error::Degenerate(format!("snapshot {} is zero", l + 1)));
        }
    }
    Ok(())
}

/// Sample covariance shape: (1/L) sum z z^H, normalized.
pub fn scm_shape(snaps: &SnapshotSet) -> Result<ShapeMatrix> {
    check_snapshots(snaps, "sample covariance")?;
    let n = snaps.n();
    let mut acc = CMat::zeros(n, n);
    let w = Cx::new(1.0 / snaps.len() as f64, 0.0);
    for z in snaps.snapshots() {
        acc.gerc(w, z, z, Cx::new(1.0, 0.0));
    }
    if Cholesky::new(acc.clone()).is_none() {
        return Err(Error::Singular("sample covariance is rank deficient".into()));
    }
    ShapeMatrix::from_unnormalized(acc)
}

#[derive(Debug, Clone)]
pub struct TylerOutcome {
    pub shape: ShapeMatrix,
    pub iterations: usize,
    pub residual: f64,
}

/// One application of the Tyler map (N/L) sum z z^H / (z^H S^{-1} z).
fn tyler_map(snaps: &SnapshotSet, s: &CMat) -> Result<CMat> {
    let n = snaps.n();
    let chol = Cholesky::new(s.clone())
        .ok_or_else(|| Error::Singular("Tyler iterate lost positive definiteness".into()))?;
    let mut acc = CMat::zeros(n, n);
    let scale = n as f64 / snaps.len() as f64;
    for (l, z) in snaps.snapshots().iter().enumerate() {
        let q = z.dotc(&chol.solve(z)).re;
        if !(q.is_finite() && q > 1e-300) {
            return Err(Error::Degenerate(format!(
                "snapshot {} has vanishing Mahalanobis norm",
                l + 1
            )));
        }
        acc.gerc(Cx::new(scale / q, 0.0), z, z, Cx::new(1.0, 0.0));
    }
    Ok(acc)
}

/// Tyler's fixed-point shape estimate.
///
/// Iterates the Tyler map from the identity with trace normalization to
/// keep the scale from drifting, stops when successive normalized iterates
/// agree within `tol` in relative Frobenius norm, then de-normalizes with
/// one raw map application (the map is scale-free, so the raw output of a
/// converged iterate is the self-consistent fixed point). The reported
/// residual measures that fixed-point equation and is re-checked before
/// returning.
pub fn tyler_shape(snaps: &SnapshotSet, tol: f64, max_iter: usize) -> Result<TylerOutcome> {
    check_snapshots(snaps, "Tyler estimator")?;
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Domain(
            "Tyler needs tol > 0 and max_iter >= 1".into(),
        ));
    }
    let n = snaps.n();
    let nf = n as f64;
    let mut s = CMat::identity(n, n);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mapped = tyler_map(snaps, &s)?;
        let next = &mapped * Cx::new(nf / mapped.trace().re, 0.0);
        let delta = fro_norm(&(&next - &s)) / fro_norm(&s);
        s = next;
        iterations += 1;
        if delta < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "Tyler iteration did not reach tol {tol} in {max_iter} iterations"
        )));
    }
    let sigma_hat = tyler_map(snaps, &s)?;
    let replay = tyler_map(snaps, &sigma_hat)?;
    let residual = fro_norm(&(&replay - &sigma_hat)) / fro_norm(&sigma_hat);
    if residual >= tol {
        return Err(Error::NonConvergence(format!(
            "fixed-point residual {residual:.3e} not below {tol:.3e}"
        )));
    }
    Ok(TylerOutcome {
        shape: ShapeMatrix::from_unnormalized(sigma_hat)?,
        iterations,
        residual,
    })
}

/// Quantile of the Gamma(shape, 1) distribution, solved by Newton steps on
/// the regularized lower incomplete gamma with a bisection safety bracket.
pub fn gamma_quantile(shape: f64, p: f64) -> Result<f64> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(Error::Domain(format!("gamma shape must be > 0, got {shape}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "quantile level must lie in (0, 1), got {p}"
        )));
    }
    let mut lo = 0.0f64;
    let mut hi = shape.max(1.0);
    while gamma_lr(shape, hi) < p {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Numerical("gamma quantile bracket overflow".into()));
        }
    }
    let ln_norm = ln_gamma(shape);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = gamma_lr(shape, x) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let pdf = ((shape - 1.0) * x.ln() - x - ln_norm).exp();
        let newton = x - f / pdf;
        x = if pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    Ok(x)
}

/// van der Waerden score for the scatter problem: minus the Gamma(n, 1)
/// quantile at level u.
pub fn vdw_score(u: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Dimension("vdw_score needs n >= 1".into()));
    }
    Ok(-gamma_quantile(n as f64, u)?)
}

/// Scores for every achievable rank: entry r-1 holds the score at level
/// r/(L+1).
fn vdw_table(l: usize, n: usize) -> Result<Vec<f64>> {
    (1..=l)
        .map(|r| vdw_score(r as f64 / (l as f64 + 1.0), n))
        .collect()
}

/// Rank statistics of a snapshot set with respect to a candidate shape V:
/// Mahalanobis-type quadratic forms q_l = z_l^H V^{-1} z_l, their ascending
/// ranks (ties broken by snapshot index), and the standardized directions
/// u_l = V^{-1/2} z_l / sqrt(q_l).
#[derive(Debug, Clone)]
pub struct RankStats {
    pub q: Vec<f64>,
    pub ranks: Vec<usize>,
    pub u: Vec<CVec>,
}

pub fn rank_statistics(snaps: &SnapshotSet, v: &CMat) -> Result<RankStats> {
    let op = ShapeOperator::new(v)?;
    rank_statistics_with(snaps, &op)
}

fn rank_statistics_with(snaps: &SnapshotSet, op: &ShapeOperator) -> Result<RankStats> {
    let l = snaps.len();
    let mut q = Vec::with_capacity(l);
    let mut u = Vec::with_capacity(l);
    for (idx, z) in snaps.snapshots().iter().enumerate() {
        let w = &op.inv_sqrt * z;
        let norm = w.norm();
        if !(norm.is_finite() && norm > 1e-300) {
            return Err(Error::Degenerate(format!(
                "snapshot {} has vanishing standardized norm",
                idx + 1
            )));
        }
        q.push(norm * norm);
        u.push(w / Cx::new(norm, 0.0));
    }
    // Stable sort on the quadratic forms: equal values keep snapshot order,
    // which is the documented tie rule.
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| q[a].total_cmp(&q[b]));
    let mut ranks = vec![0usize; l];
    for (pos, &snapshot) in order.iter().enumerate() {
        ranks[snapshot] = pos + 1;
    }
    Ok(RankStats { q, ranks, u })
}

/// The shape-space whitening operator attached to a candidate V. Acting on
/// vec(X) it computes vecd(M (X - tr(X)/n I) M) with M = V^{-1/2}, i.e. the
/// composition "center, whiten on both sides, drop the pinned coordinate".
pub struct ShapeOperator {
    n: usize,
    inv_sqrt: CMat,
}

impl ShapeOperator {
    pub fn new(v: &CMat) -> Result<Self> {
        let (_, inv_sqrt) = hermitian_sqrt_pair(v)?;
        Ok(Self {
            n: v.nrows(),
            inv_sqrt,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn inv_sqrt(&self) -> &CMat {
        &self.inv_sqrt
    }

    /// Applies the operator to vec(X) given X in matrix form.
    pub fn apply_matrix(&self, x: &CMat) -> Result<CVec> {
        if x.nrows() != self.n || x.ncols() != self.n {
            return Err(Error::Dimension(format!(
                "operator expects {0}x{0} input",
                self.n
            )));
        }
        let centered = apply_centering(x);
        vecd_of(&(&self.inv_sqrt * centered * &self.inv_sqrt))
    }

    /// Dense matrix form, rows 2..n^2 of (conj(M) kron M)(I - vec(I)vec(I)^T/n).
    /// Reference implementation for tests; quadratic storage in n^2.
    pub fn dense(&self) -> CMat {
        let n2 = self.n * self.n;
        let w = kronecker(&self.inv_sqrt.conjugate(), &self.inv_sqrt);
        let pi = centering_projector(self.n).map(|x| Cx::new(x, 0.0));
        (w * pi).rows(1, n2 - 1).into_owned()
    }

    /// Gram matrix of the operator: with W = conj(M) kron M and the
    /// centering projector expanded, this is V^{-T} kron V^{-1} minus the
    /// rank-one term vec(V^{-1}) vec(V^{-1})^H / n, with the first row and
    /// column deleted. Hermitian positive definite.
    pub fn gram(&self) -> CMat {
        let n2 = self.n * self.n;
        let inv = {
            let m = &self.inv_sqrt * &self.inv_sqrt;
            (&m + m.adjoint()) * Cx::new(0.5, 0.0)
        };
        let mut full = kronecker(&inv.conjugate(), &inv);
        let w = vec_of(&inv);
        full.gerc(
            Cx::new(-1.0 / self.n as f64, 0.0),
            &w,
            &w,
            Cx::new(1.0, 0.0),
        );
        full.view((1, 1), (n2 - 1, n2 - 1)).into_owned()
    }
}

/// Rank-score central statistic at V: (1/sqrt(L)) L_V sum_l score(rank_l)
/// vec(u_l u_l^H), evaluated through the matrix form of L_V.
fn central_statistic(
    snaps: &SnapshotSet,
    v: &CMat,
    scores: &[f64],
) -> Result<(CVec, ShapeOperator)> {
    let op = ShapeOperator::new(v)?;
    let stats = rank_statistics_with(snaps, &op)?;
    let n = snaps.n();
    let mut weighted = CMat::zeros(n, n);
    for l in 0..snaps.len() {
        let k = scores[stats.ranks[l] - 1];
        weighted.gerc(Cx::new(k, 0.0), &stats.u[l], &stats.u[l], Cx::new(1.0, 0.0));
    }
    let t = op.apply_matrix(&weighted)? / Cx::new((snaps.len() as f64).sqrt(), 0.0);
    Ok((t, op))
}

fn alpha_and_direction(snaps: &SnapshotSet, tyler: &ShapeMatrix) -> Result<(f64, CMat)> {
    let n = snaps.n();
    let lf = snaps.len() as f64;
    let scores = vdw_table(snaps.len(), n)?;
    let (t0, op) = central_statistic(snaps, tyler.matrix(), &scores)?;
    let gram = op.gram();
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::Singular("shape operator gram matrix".into()))?;
    let y = chol.solve(&t0);
    let h = {
        let raw = unvecd(Cx::new(0.0, 0.0), &y, n)?;
        (&raw + raw.adjoint()) * Cx::new(0.5, 0.0)
    };
    let h_norm = vecd_of(&h)?.norm();
    if !(h_norm.is_finite() && h_norm > 0.0) {
        return Err(Error::Degenerate(
            "rank statistic produced a zero perturbation direction".into(),
        ));
    }
    let perturbed = tyler.matrix() + &h / Cx::new(lf.sqrt(), 0.0);
    let (t1, _) = central_statistic(snaps, &perturbed, &scores)?;
    let increment = &t1 - &t0;
    // Least-squares secant: the scalar whose step best zeroes the statistic
    // in the linear model along h. Projecting the increment onto t0 instead
    // of taking its raw norm keeps the direction's anisotropy out of the
    // scale. When the projection has the wrong sign the step is not
    // informative; fall back to the conservative norm ratio (a too-large
    // alpha only shrinks the update toward the Tyler seed).
    let along = increment.dotc(&t0).re;
    let alpha = if along > 0.0 {
        increment.norm_squared() / along
    } else {
        increment.norm() / h_norm
    };
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Degenerate(format!(
            "step-size calibration failed, alpha = {alpha}"
        )));
    }
    Ok((alpha, h))
}

/// Data-driven step size for the one-step update: the norm ratio of the
/// central-statistic increment along the estimated perturbation direction.
pub fn estimate_alpha(snaps: &SnapshotSet, tyler: &ShapeMatrix) -> Result<f64> {
    check_snapshots(snaps, "step-size estimation")?;
    Ok(alpha_and_direction(snaps, tyler)?.0)
}

#[derive(Debug, Clone)]
pub struct REstimate {
    pub shape: ShapeMatrix,
    pub alpha: f64,
    /// True when the raw one-step update left the PD cone and its
    /// eigenvalues had to be clipped.
    pub pd_repaired: bool,
}

/// Rank-based one-step shape estimator seeded by a Tyler estimate.
///
/// The update moves from Tyler's shape along the gram-preconditioned
/// rank-score direction, scaled by 1/(sqrt(L) alpha). The pinned (1,1)
/// entry is untouched because the direction has a zero there by
/// construction.
pub fn r_shape(snaps: &SnapshotSet, tyler: &ShapeMatrix) -> Result<REstimate> {
    check_snapshots(snaps, "rank-based estimator")?;
    if snaps.n() != tyler.n() {
        return Err(Error::Dimension(
            "snapshots and Tyler estimate disagree on dimension".into(),
        ));
    }
    let lf = snaps.len() as f64;
    let (alpha, h) = alpha_and_direction(snaps, tyler)?;
    let raw = tyler.matrix() - &h / Cx::new(lf.sqrt() * alpha, 0.0);
    let (shape, pd_repaired) = finalize_shape(raw)?;
    Ok(REstimate {
        shape,
        alpha,
        pd_repaired,
    })
}

/// Symmetrizes and, when necessary, clips eigenvalues to restore positive
/// definiteness before the final (1,1) normalization.
fn finalize_shape(m: CMat) -> Result<(ShapeMatrix, bool)> {
    let m = (&m + m.adjoint()) * Cx::new(0.5, 0.0);
    let (vals, vecs) = hermitian_eig(&m)?;
    let n = m.nrows();
    let max = vals[n - 1];
    if !(max.is_finite() && max > 0.0) {
        return Err(Error::NotPositiveDefinite(
            "one-step update produced a non-positive spectrum".into(),
        ));
    }
    if vals[0] > PD_REPAIR_FLOOR * max {
        return Ok((ShapeMatrix::from_unnormalized(m)?, false));
    }
    let floor = PD_REPAIR_FLOOR * max;
    let mut rebuilt = CMat::zeros(n, n);
    for j in 0..n {
        let col = vecs.column(j);
        rebuilt.gerc(
            Cx::new(vals[j].max(floor), 0.0),
            &col,
            &col,
            Cx::new(1.0, 0.0),
        );
    }
    let rebuilt = (&rebuilt + rebuilt.adjoint()) * Cx::new(0.5, 0.0);
    Ok((ShapeMatrix::from_unnormalized(rebuilt)?, true))
}
