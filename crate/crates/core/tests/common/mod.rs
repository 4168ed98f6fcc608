//! Shared fixtures for the integration suite: an independently written
//! adaptive quadrature oracle for radial moments, the reference scene, and
//! a Kolmogorov-Smirnov helper. Nothing here reuses the library's moment
//! or bound code paths; that independence is the point.

#![allow(dead_code)] // each integration target pulls a different subset

use rdoa_core::array::SourceScene;
use rdoa_core::ces::DensityGenerator;

/// Positive Gauss-Kronrod 15-point abscissae on [-1, 1], descending; the
/// odd indices (plus the implicit center) are the embedded 7-point Gauss
/// rule. The node-and-weight table is validated by polynomial-exactness
/// tests up to the theoretical degrees in `oracle_checks`.
const XGK: [f64; 7] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
];

const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss-Kronrod panel: returns the 15-point estimate and an error
/// estimate. The raw |K15 - G7| difference is rescaled against the
/// panel's total variation (the classic QUADPACK heuristic with exponent
/// 1.5); without this, both rules agree while being jointly wrong near an
/// endpoint singularity and adaptive refinement stops too early.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut values = [0.0f64; 15];
    values[14] = f(center);
    let mut kronrod = WGK[7] * values[14];
    let mut gauss = WG[3] * values[14];
    for i in 0..7 {
        let dx = XGK[i] * half;
        let lo = f(center - dx);
        let hi = f(center + dx);
        values[2 * i] = lo;
        values[2 * i + 1] = hi;
        kronrod += WGK[i] * (lo + hi);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (lo + hi);
        }
    }
    let mean = kronrod * 0.5;
    let mut variation = WGK[7] * (values[14] - mean).abs();
    for i in 0..7 {
        variation +=
            WGK[i] * ((values[2 * i] - mean).abs() + (values[2 * i + 1] - mean).abs());
    }
    variation *= half.abs();
    let mut err = (kronrod - gauss).abs() * half.abs();
    if variation != 0.0 && err != 0.0 {
        err = variation * (200.0 * err / variation).powf(1.5).min(1.0);
    }
    (kronrod * half, err)
}

/// Embedded 7-point Gauss estimate alone, for exactness checks.
pub fn g7<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut gauss = WG[3] * f(center);
    for i in [1usize, 3, 5] {
        let dx = XGK[i] * half;
        gauss += WG[i / 2] * (f(center - dx) + f(center + dx));
    }
    gauss * half
}

/// Globally adaptive quadrature: repeatedly bisect the panel with the
/// largest error estimate until the summed estimates meet the relative
/// tolerance. Worst-first refinement concentrates panels at endpoint
/// singularities (the transformed heavy tails have them) instead of
/// splitting uniformly, with hard caps on panel count and depth as a
/// safety net.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    struct Panel {
        err: f64,
        a: f64,
        b: f64,
        est: f64,
        depth: u32,
    }
    impl PartialEq for Panel {
        fn eq(&self, other: &Self) -> bool {
            self.err == other.err
        }
    }
    impl Eq for Panel {}
    impl PartialOrd for Panel {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Panel {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.err.total_cmp(&other.err)
        }
    }

    let mut heap = std::collections::BinaryHeap::new();
    let (est, err) = gk15(&f, a, b);
    let mut total_est = est;
    let mut total_err = err;
    heap.push(Panel {
        err,
        a,
        b,
        est,
        depth: 0,
    });
    let mut panels = 1usize;
    while total_err > rel_tol * total_est.abs().max(1e-300) && panels < 20_000 {
        let worst = heap.pop().expect("heap tracks every live panel");
        if worst.depth >= 80 {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (e1, r1) = gk15(&f, worst.a, mid);
        let (e2, r2) = gk15(&f, mid, worst.b);
        total_est += e1 + e2 - worst.est;
        total_err += r1 + r2 - worst.err;
        heap.push(Panel {
            err: r1,
            a: worst.a,
            b: mid,
            est: e1,
            depth: worst.depth + 1,
        });
        heap.push(Panel {
            err: r2,
            a: mid,
            b: worst.b,
            est: e2,
            depth: worst.depth + 1,
        });
        panels += 1;
    }
    // Deterministic summation order regardless of heap internals.
    heap.into_sorted_vec().iter().map(|p| p.est).sum()
}

/// Integral over (0, inf) through the substitution q = x/(1-x).
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> f64 {
    integrate_adaptive(
        |x| {
            if x >= 1.0 || x <= 0.0 {
                return 0.0;
            }
            let rest = 1.0 - x;
            f(x / rest) / (rest * rest)
        },
        0.0,
        1.0,
        rel_tol,
    )
}

/// Radial weight q^(n-1) h(q) evaluated in log space so tails neither
/// overflow nor lose the exponent.
pub fn radial_weight(gen: DensityGenerator, n: usize, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let ln_h = gen.ln_h(n, q).expect("density generator evaluation");
    ((n as f64 - 1.0) * q.ln() + ln_h).exp()
}

/// Quadrature route to E{Q^2 psi^2}: the ratio of two half-line integrals
/// against the radial weight, which cancels every normalization constant.
pub fn score_moment_quadrature(gen: DensityGenerator, n: usize) -> f64 {
    let tol = 1e-11;
    let numerator = integrate_half_line(
        |q| {
            let psi = gen.psi(n, q).expect("score evaluation");
            let ln_h = gen.ln_h(n, q).expect("density generator evaluation");
            ((n as f64 + 1.0) * q.ln() + ln_h + 2.0 * psi.abs().ln()).exp()
        },
        tol,
    );
    let denominator = integrate_half_line(|q| radial_weight(gen, n, q), tol);
    numerator / denominator
}

/// Quadrature route to E{Q}: same self-normalizing construction.
pub fn modular_mean_quadrature(gen: DensityGenerator, n: usize) -> f64 {
    let tol = 1e-11;
    let numerator = integrate_half_line(|q| q * radial_weight(gen, n, q), tol);
    let denominator = integrate_half_line(|q| radial_weight(gen, n, q), tol);
    numerator / denominator
}

/// The reference scene used throughout: 8-sensor ULA, two equal-power
/// sources at spatial frequencies 0.1 and 0.2 with correlation 0.5, unit
/// noise power, source power 10^0.5 (5 dB SNR).
pub fn reference_scene() -> SourceScene {
    let power = 10f64.powf(0.5);
    SourceScene::two_source(8, [0.1, 0.2], power, power, 0.5, 1.0).unwrap()
}

/// Snapshots per trial in the reference experiments: L = 5N.
pub const REFERENCE_SNAPSHOTS: usize = 40;

/// Kolmogorov-Smirnov statistic of a sample against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let fx = cdf(x);
        let hi = (i as f64 + 1.0) / n - fx;
        let lo = fx - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// KS acceptance threshold at significance 0.001 for sample size n; a
/// deterministic seeded sample either clears this comfortably or the
/// sampler-vs-CDF pair genuinely disagrees.
pub fn ks_threshold(n: usize) -> f64 {
    // sqrt(ln(2/alpha)/2) with alpha = 0.001
    let c = (2000.0f64.ln() / 2.0).sqrt();
    c / (n as f64).sqrt()
}

/// All generator settings exercised by the score-moment and sampler
/// criteria: the Gaussian, five t shapes, five GG shapes.
pub fn criterion_generators() -> Vec<DensityGenerator> {
    let mut gens = vec![DensityGenerator::Gaussian];
    for lambda in [1.5, 2.0, 3.0, 5.0, 10.0] {
        gens.push(DensityGenerator::StudentT { lambda });
    }
    for s in [0.1, 0.5, 1.0, 2.0, 4.0] {
        gens.push(DensityGenerator::GeneralizedGaussian { s });
    }
    gens
}
