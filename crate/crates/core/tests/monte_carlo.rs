use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use ngca::data::{self, sample_signal, ArtificialSpec, Distribution};
use ngca::harness::median;
use ngca::lsldg::{fit_lsldg, lsldg_holdout_loss};
use ngca::lsngca::compute_u;
use ngca::mipp::{compute_beta, fastica_update, NgifFamily, NgifSpec};
use ngca::numerics::{build_whitener, sample_covariance, standardize, whiten};
use ngca::{CvGrid, DataMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

/// Asymptotic Kolmogorov–Smirnov critical coefficient at α = 0.01.
const KS_001: f64 = 1.628;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted(sample.to_vec());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn ks_passes(sample: &[f64], cdf: impl Fn(f64) -> f64) -> bool {
    ks_statistic(sample, cdf) < KS_001 / (sample.len() as f64).sqrt()
}

fn two_sample_ks_passes(a: &[f64], b: &[f64]) -> bool {
    let (a, b) = (sorted(a.to_vec()), sorted(b.to_vec()));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d < KS_001 * ((n + m) / (n * m)).sqrt()
}

fn column(x: &DMatrix<f64>, j: usize) -> Vec<f64> {
    x.column(j).iter().copied().collect()
}

fn radii(x: &DMatrix<f64>) -> Vec<f64> {
    x.row_iter().map(|r| r.norm()).collect()
}

fn angles(x: &DMatrix<f64>) -> Vec<f64> {
    x.row_iter().map(|r| r[1].atan2(r[0])).collect()
}

fn laplace_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * x.exp()
    } else {
        1.0 - 0.5 * (-x).exp()
    }
}

const N_KS: usize = 10_000;

#[test]
fn mixture_marginals_pass_ks() {
    let s = sample_signal(Distribution::GaussMixture, N_KS, 1);
    let (lo, hi) = (Normal::new(-3.0, 1.0).unwrap(), Normal::new(3.0, 1.0).unwrap());
    let cdf = |x: f64| 0.5 * lo.cdf(x) + 0.5 * hi.cdf(x);
    assert!(ks_passes(&column(&s, 0), cdf));
    assert!(ks_passes(&column(&s, 1), cdf));
}

#[test]
fn super_gaussian_radius_and_angle_pass_ks() {
    let s = sample_signal(Distribution::DepSuper, N_KS, 2);
    assert!(ks_passes(&radii(&s), |r| 1.0 - (-r).exp() * (1.0 + r)));
    assert!(ks_passes(&angles(&s), |a| (a + PI) / (2.0 * PI)));
}

#[test]
fn sub_gaussian_radius_and_angle_pass_ks() {
    let s = sample_signal(Distribution::DepSub, N_KS, 3);
    assert!(radii(&s).iter().all(|&r| r <= 1.0));
    assert!(ks_passes(&radii(&s), |r| (r * r).min(1.0)));
    assert!(ks_passes(&angles(&s), |a| (a + PI) / (2.0 * PI)));
}

#[test]
fn mixed_signal_first_coordinate_is_laplace() {
    let s = sample_signal(Distribution::DepSuperSub, N_KS, 4);
    assert!(ks_passes(&column(&s, 0), laplace_cdf));
    // second coordinate is uniform on [c, c+1]
    let offsets: Vec<f64> = s
        .row_iter()
        .map(|r| r[1] - if r[0].abs() <= 2f64.ln() { 0.0 } else { -1.0 })
        .collect();
    assert!(offsets.iter().all(|o| (0.0..1.0).contains(o)));
    assert!(ks_passes(&offsets, |u| u.clamp(0.0, 1.0)));
}

/// Brute-force rejection sampler: uniform proposals on `[-half, half]²`
/// accepted with probability `density(s) / bound`.
fn rejection(n: usize, half: f64, seed: u64, accept: impl Fn(f64, f64) -> f64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    while rows.len() < n {
        let (a, b) = (rng.random_range(-half..half), rng.random_range(-half..half));
        if rng.random::<f64>() < accept(a, b) {
            rows.push((a, b));
        }
    }
    DMatrix::from_fn(n, 2, |i, j| if j == 0 { rows[i].0 } else { rows[i].1 })
}

#[test]
fn radial_samplers_agree_with_rejection_samplers() {
    let n = 5000;
    let sup = sample_signal(Distribution::DepSuper, n, 10);
    let sup_ref = rejection(n, 25.0, 11, |a, b| (-(a * a + b * b).sqrt()).exp());
    for j in 0..2 {
        assert!(two_sample_ks_passes(&column(&sup, j), &column(&sup_ref, j)));
    }
    assert!(two_sample_ks_passes(&radii(&sup), &radii(&sup_ref)));

    let sub = sample_signal(Distribution::DepSub, n, 12);
    let sub_ref = rejection(n, 1.0, 13, |a, b| if a * a + b * b <= 1.0 { 1.0 } else { 0.0 });
    for j in 0..2 {
        assert!(two_sample_ks_passes(&column(&sub, j), &column(&sub_ref, j)));
    }
    assert!(two_sample_ks_passes(&radii(&sub), &radii(&sub_ref)));
}

#[test]
fn mixture_moments() {
    let n = N_KS;
    let s = sample_signal(Distribution::GaussMixture, n, 5);
    let root_n = (n as f64).sqrt();
    for j in 0..2 {
        let col = column(&s, j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / root_n, "mean {mean}");
        // Var(X²) = E[X⁴] − 100 = 38 for this mixture
        assert!((var - 10.0).abs() < 5.0 * (38.0f64).sqrt() / root_n, "variance {var}");
    }
}

#[test]
fn laplace_median_property() {
    let n = N_KS;
    let s = sample_signal(Distribution::DepSuperSub, n, 6);
    let inside = s.column(0).iter().filter(|v| v.abs() <= 2f64.ln()).count() as f64 / n as f64;
    assert!((inside - 0.5).abs() < 3.0 / (n as f64).sqrt(), "{inside}");
}

fn noise_kappa(r: f64, seed: u64) -> f64 {
    let noise = data::sample_noise(r, 2000, seed).unwrap();
    data::condition_number(&DataMatrix::new(noise).unwrap()).unwrap()
}

#[test]
fn noise_condition_number_grows_with_r() {
    let medians: Vec<f64> = [0.0, 1.0, 2.0, 3.0, 4.0]
        .iter()
        .map(|&r| median(&(0..10).map(|s| noise_kappa(r, s)).collect::<Vec<_>>()))
        .collect();
    for w in medians.windows(2) {
        assert!(w[1] >= w[0], "{medians:?}");
    }
    assert!(medians[2] > medians[0]);
}

#[test]
fn artificial_condition_number_grows_from_r0_to_r2() {
    let kappa = |r: f64, seed: u64| {
        let (x, _) = data::make_artificial(&ArtificialSpec {
            dist: Distribution::DepSub,
            r,
            n: 2000,
            seed,
        })
        .unwrap();
        data::condition_number(&standardize(&x).unwrap().0).unwrap()
    };
    let at = |r: f64| median(&(0..10).map(|s| kappa(r, s)).collect::<Vec<_>>());
    assert!(at(2.0) > at(0.0));
}

#[test]
fn signal_and_noise_blocks_decorrelate() {
    let max_cross = |n: usize| {
        let (x, _) = data::make_artificial(&ArtificialSpec {
            dist: Distribution::DepSuper,
            r: 1.0,
            n,
            seed: 21,
        })
        .unwrap();
        let (z, _, _) = standardize(&x).unwrap();
        sample_covariance(&z).view((0, 2), (2, 8)).amax()
    };
    let (small, large) = (max_cross(500), max_cross(50_000));
    assert!(large < 5.0 / (50_000f64).sqrt(), "{large}");
    assert!(large < small);
}

fn normal_data(n: usize, d: usize, sd: &[f64], rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, j| rng.sample::<f64, _>(StandardNormal) * sd[j])
}

#[test]
fn lsldg_score_at_origin_1d() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let x = DataMatrix::new(normal_data(1000, 1, &[1.0], &mut rng)).unwrap();
    let model = fit_lsldg(&x, &CvGrid::default(), 100).unwrap();
    assert!(model.predict_gradient(&[0.0])[0].abs() < 0.15);
}

#[test]
fn lsldg_score_at_origin_2d() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let x = DataMatrix::new(normal_data(2000, 2, &[1.0, 1.0], &mut rng)).unwrap();
    let model = fit_lsldg(&x, &CvGrid::default(), 100).unwrap();
    assert!(model.predict_gradient(&[0.0, 0.0]).norm() < 0.2);
}

#[test]
fn lsldg_score_anisotropic() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let x = DataMatrix::new(normal_data(2000, 2, &[1.0, 2.0], &mut rng)).unwrap();
    let model = fit_lsldg(&x, &CvGrid::default(), 100).unwrap();
    let g = model.predict_gradient(&[0.0, 2.0]);
    assert!(g[0].abs() < 0.2, "{g}");
    assert!((g[1] + 0.5).abs() < 0.2, "{g}");
}

#[test]
fn lsldg_holdout_loss_approaches_negative_fisher_information() {
    // a single replicate can select a spuriously low small-bandwidth cell,
    // so the check is on the median over replicates
    let losses: Vec<f64> = (0..6)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(33 + seed);
            let x = DataMatrix::new(normal_data(4000, 1, &[1.0], &mut rng)).unwrap();
            let val = normal_data(20_000, 1, &[1.0], &mut rng);
            let model = fit_lsldg(&x, &CvGrid::default(), 100).unwrap();
            lsldg_holdout_loss(&model.bases()[0], &model.thetas()[0], &val).unwrap()
        })
        .collect();
    let med = median(&losses);
    assert!((med + 1.0).abs() < 0.05, "{losses:?}");
}

#[test]
fn lsldg_error_shrinks_with_n() {
    for d in 1..=3 {
        let medians: Vec<f64> = [500usize, 1000, 2000]
            .iter()
            .map(|&n| {
                let errors: Vec<f64> = (0..10)
                    .map(|seed| {
                        let mut rng = ChaCha8Rng::seed_from_u64(1000 * d as u64 + seed);
                        let x = DataMatrix::new(normal_data(n, d, &[1.0; 3], &mut rng)).unwrap();
                        let test = normal_data(500, d, &[1.0; 3], &mut rng);
                        let model = fit_lsldg(&x, &CvGrid::default().with_seed(seed), 100).unwrap();
                        let pred = model.predict_batch(&test).unwrap();
                        (pred + &test).norm_squared() / (500 * d) as f64
                    })
                    .collect();
                median(&errors)
            })
            .collect();
        assert!(medians[0] > medians[1] && medians[1] > medians[2], "d={d}: {medians:?}");
    }
}

#[test]
fn lsngca_u_is_small_on_gaussian_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let x = DataMatrix::new(normal_data(2000, 4, &[1.0, 2.0, 0.5, 1.0], &mut rng)).unwrap();
    let y = whiten(&build_whitener(&x, 1e-12).unwrap(), &x).unwrap();
    let model = fit_lsldg(&y, &CvGrid::default(), 100).unwrap();
    let u = compute_u(&y, &model).unwrap();
    let norms: Vec<f64> = u.row_iter().map(|r| r.norm()).collect();
    let mean_norm = norms.iter().sum::<f64>() / norms.len() as f64;
    let mean_sq = norms.iter().map(|v| v * v).sum::<f64>() / norms.len() as f64;
    assert!(mean_norm < 0.3, "{mean_norm}");
    assert!(mean_sq < 0.3, "{mean_sq}");
}

fn unit(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    v / n
}

#[test]
fn fastica_aligns_with_super_gaussian_coordinate() {
    let n = 2000;
    let mut aligned = 0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(50 + seed);
        let s = sample_signal(Distribution::DepSuperSub, n, seed);
        let raw = DMatrix::from_fn(n, 2, |i, j| if j == 0 { s[(i, 0)] } else { rng.sample(StandardNormal) });
        let x = DataMatrix::new(raw).unwrap();
        let y = whiten(&build_whitener(&x, 1e-12).unwrap(), &x).unwrap();
        let w0 = unit(DVector::from_fn(2, |_, _| rng.sample(StandardNormal)));
        let mut spec = NgifSpec::new(NgifFamily::Tanh, 1.0, w0).unwrap();
        for _ in 0..10 {
            spec = fastica_update(&y, &spec).unwrap();
            assert!((spec.w.norm() - 1.0).abs() < 1e-12);
        }
        if spec.w[0].abs() > 0.9 {
            aligned += 1;
        }
    }
    assert!(aligned >= 8, "{aligned}/10");
}

#[test]
fn beta_vanishes_on_gaussian_data() {
    let d = 10;
    for family in NgifFamily::ALL {
        let (lo, hi) = family.range();
        let mut e1 = DVector::zeros(d);
        e1[0] = 1.0;
        let spec = NgifSpec::new(family, 0.5 * (lo + hi), e1).unwrap();
        let beta_norm = |n: usize, seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = DataMatrix::new(normal_data(n, d, &[1.0; 10], &mut rng)).unwrap();
            compute_beta(&y, &spec).unwrap().norm()
        };
        let wins = (0..10)
            .filter(|&s| beta_norm(4000, 2 * s) < beta_norm(1000, 2 * s + 1))
            .count();
        assert!(wins >= 8, "{family:?}: {wins}/10");
    }
}
