mod common;

use common::{ks_statistic, ks_threshold};
use rdoa_core::array::SourceScene;
use rdoa_core::ces::{sample_unit_sphere, DensityGenerator};
use rdoa_core::rng::StreamKey;
use rdoa_core::snapshots::synthesize;
use rdoa_core::Cx;

// The samplers are closed-form Gamma transformations; the CDFs go through
// statrs regularized incomplete functions. Disagreement means one of the two
// derivations is wrong.
#[test]
fn modular_samples_match_the_cdf() {
    let draws = 20_000;
    for (i, gen) in common::criterion_generators().into_iter().enumerate() {
        for n in [2usize, 8] {
            let mut rng = StreamKey::new(0x5A17 + i as u64, n as u64, 0).rng();
            let mut q: Vec<f64> = (0..draws).map(|_| gen.sample_modular(n, &mut rng)).collect();
            let d = ks_statistic(&mut q, |x| gen.modular_cdf(n, x).unwrap());
            assert!(
                d < ks_threshold(draws),
                "{gen:?} N={n}: KS distance {d:.3e} over threshold {:.3e}",
                ks_threshold(draws)
            );
        }
    }
}

#[test]
fn gaussian_scalar_case_is_exponential() {
    let draws = 100_000;
    let mut rng = StreamKey::new(7, 0, 0).rng();
    let gen = DensityGenerator::Gaussian;
    let mut q: Vec<f64> = (0..draws).map(|_| gen.sample_modular(1, &mut rng)).collect();
    // Hand-written exponential CDF, independent of the library's gamma path.
    let d = ks_statistic(&mut q, |x| 1.0 - (-x).exp());
    assert!(d < 0.01, "KS distance {d:.3e} against 1 - exp(-q)");
}

#[test]
fn sample_mean_sits_on_the_dimension() {
    let n = 4usize;
    let draws = 100_000;
    for (i, gen) in common::criterion_generators().into_iter().enumerate() {
        let mut rng = StreamKey::new(0xEA4 + i as u64, 0, 0).rng();
        let q: Vec<f64> = (0..draws).map(|_| gen.sample_modular(n, &mut rng)).collect();
        let mean = q.iter().sum::<f64>() / draws as f64;
        let var = q.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        assert!(
            (mean - n as f64).abs() < 4.0 * se,
            "{gen:?}: mean {mean:.4} is {:.1} SEs from {n}",
            (mean - n as f64).abs() / se
        );
    }
}

#[test]
fn heavy_tail_law_is_still_right_at_lambda_1_1() {
    // With tail index 1.1 the sample mean fluctuates like draws^(1/1.1 - 1),
    // roughly 30% at this size, so the mean itself is not a usable statistic.
    // Pin the whole law with a KS test instead (which fixes the mean too) and
    // keep only an order-of-magnitude band on the raw average.
    let gen = DensityGenerator::StudentT { lambda: 1.1 };
    let n = 4usize;
    let draws = 200_000;
    let mut rng = StreamKey::new(0x11, 0, 0).rng();
    let mut q: Vec<f64> = (0..draws).map(|_| gen.sample_modular(n, &mut rng)).collect();
    let mean = q.iter().sum::<f64>() / draws as f64;
    let d = ks_statistic(&mut q, |x| gen.modular_cdf(n, x).unwrap());
    assert!(d < ks_threshold(draws), "KS distance {d:.3e}");
    assert!(
        mean > 0.3 * n as f64 && mean < 3.0 * n as f64,
        "mean {mean:.3} implausible for E = {n}"
    );
}

#[test]
fn unit_sphere_is_isotropic() {
    let n = 4usize;
    let draws = 100_000;
    let mut rng = StreamKey::new(0x5D, 0, 0).rng();
    let mut second = rdoa_core::CMat::zeros(n, n);
    let mut phases = Vec::with_capacity(draws);
    for _ in 0..draws {
        let u = sample_unit_sphere(n, &mut rng);
        assert!((u.norm() - 1.0).abs() < 1e-14);
        second.gerc(Cx::new(1.0, 0.0), &u, &u, Cx::new(1.0, 0.0));
        phases.push(u[0].im.atan2(u[0].re));
    }
    second /= Cx::new(draws as f64, 0.0);
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 / n as f64 } else { 0.0 };
            let got = second[(i, j)];
            assert!(
                (got - Cx::new(want, 0.0)).norm() < 0.01,
                "E[u u^H] entry ({i},{j}) = {got}"
            );
        }
    }
    let d = ks_statistic(&mut phases, |p| (p + std::f64::consts::PI) / std::f64::consts::TAU);
    assert!(d < 0.01, "first-coordinate phase KS distance {d:.3e}");
}

#[test]
fn sphere_coordinate_power_is_beta() {
    // |u_0|^2 for u uniform on the complex N-sphere is Beta(1, N-1).
    let n = 8usize;
    let draws = 20_000;
    let mut rng = StreamKey::new(0xB7A, 0, 0).rng();
    let mut p: Vec<f64> = (0..draws)
        .map(|_| sample_unit_sphere(n, &mut rng)[0].norm_sqr())
        .collect();
    let d = ks_statistic(&mut p, |x| 1.0 - (1.0 - x).powi(n as i32 - 1));
    assert!(d < ks_threshold(draws), "KS distance {d:.3e}");
}

#[test]
fn snapshots_reproduce_the_scatter() {
    let scene = SourceScene::two_source(4, [0.1, 0.2], 10f64.sqrt(), 10f64.sqrt(), 0.5, 1.0)
        .expect("valid scene");
    let sigma = scene.covariance();
    let l = 100_000;
    let cases = [
        (DensityGenerator::Gaussian, 0.02),
        (DensityGenerator::StudentT { lambda: 3.0 }, 0.06),
        (DensityGenerator::GeneralizedGaussian { s: 0.5 }, 0.03),
    ];
    let scale = sigma.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for (k, (gen, tol)) in cases.into_iter().enumerate() {
        let set = synthesize(&sigma, l, gen, StreamKey::new(0xC0F, k as u64, 0)).unwrap();
        let mut emp = rdoa_core::CMat::zeros(4, 4);
        for z in set.snapshots() {
            emp.gerc(Cx::new(1.0 / l as f64, 0.0), z, z, Cx::new(1.0, 0.0));
        }
        let worst = (&emp - &sigma).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(
            worst < tol * scale,
            "{gen:?}: worst entry error {worst:.3e} vs allowance {:.3e}",
            tol * scale
        );
    }
}

#[test]
fn gaussian_snapshots_pass_a_kurtosis_check() {
    let n = 4usize;
    let l = 100_000;
    let sigma = rdoa_core::CMat::identity(n, n);
    let set = synthesize(&sigma, l, DensityGenerator::Gaussian, StreamKey::new(0x6A, 0, 0)).unwrap();
    let w: Vec<f64> = {
        let raw = [1.0, 2.0, 3.0, 4.0];
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        raw.iter().map(|x| x / norm).collect()
    };
    let xs: Vec<f64> = set
        .snapshots()
        .iter()
        .map(|z| z.iter().zip(&w).map(|(zi, wi)| wi * zi.re).sum())
        .collect();
    let mean = xs.iter().sum::<f64>() / l as f64;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / l as f64;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / l as f64;
    let excess = m4 / (m2 * m2) - 3.0;
    let band = 3.0 * (24.0 / l as f64).sqrt();
    assert!(excess.abs() < band, "excess kurtosis {excess:.4} outside {band:.4}");
}
