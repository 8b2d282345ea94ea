mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use starcf_core::rng::rng_from_seed;
use starcf_core::{sample_channel, simulate_pilot_estimation};

const TRIALS: usize = 10_000;

fn vec_of(g: &DMatrix<Complex64>) -> Vec<Complex64> {
    g.iter().copied().collect()
}

/// Per-entry mean, its standard error, and the sample covariance of
/// `vec(G_mk)` for each listed pair.
struct Moments {
    mean: Vec<Vec<Complex64>>,
    stderr: Vec<Vec<f64>>,
    cov: Vec<DMatrix<Complex64>>,
}

fn moments(samples: &[Vec<Vec<Complex64>>]) -> Moments {
    let t = samples.len() as f64;
    let pairs = samples[0].len();
    let dim = samples[0][0].len();
    let mut mean = vec![vec![Complex64::new(0.0, 0.0); dim]; pairs];
    let mut second = vec![vec![0.0; dim]; pairs];
    let mut cov = vec![DMatrix::<Complex64>::zeros(dim, dim); pairs];
    for s in samples {
        for p in 0..pairs {
            for i in 0..dim {
                mean[p][i] += s[p][i] / t;
                second[p][i] += s[p][i].norm_sqr() / t;
                for j in 0..dim {
                    cov[p][(i, j)] += s[p][i] * s[p][j].conj() / t;
                }
            }
        }
    }
    let stderr = second
        .iter()
        .map(|row| row.iter().map(|v| (v / t).sqrt()).collect())
        .collect();
    Moments { mean, stderr, cov }
}

#[test]
fn channel_is_zero_mean_with_scaled_identity_covariance() {
    let s = common::model(3, 4, 2, 77);
    let mut rng = rng_from_seed(5);
    let pairs = [(0, 0), (1, 2), (2, 3), (0, 1)];
    let samples: Vec<_> = (0..TRIALS)
        .map(|_| {
            let ch = sample_channel(&s.scenario, &s.ris, 4, 2, &mut rng);
            pairs.iter().map(|&(m, k)| vec_of(ch.get(m, k))).collect()
        })
        .collect();
    let mom = moments(&samples);
    for (p, &(m, k)) in pairs.iter().enumerate() {
        let delta = s.chan.delta_bar[(m, k)];
        for (mu, se) in mom.mean[p].iter().zip(&mom.stderr[p]) {
            // real and imaginary parts each carry half the variance
            let half = se / std::f64::consts::SQRT_2;
            assert!(mu.re.abs() <= 4.0 * half && mu.im.abs() <= 4.0 * half, "({m},{k}) mean {mu}");
        }
        let dim = mom.cov[p].nrows();
        let target = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(delta, 0.0);
        let err = (&mom.cov[p] - &target).norm() / target.norm();
        assert!(err <= 0.05, "({m},{k}) covariance rel err {err}");
    }
}

#[test]
fn distinct_users_and_aps_are_uncorrelated() {
    let s = common::model(2, 2, 2, 3);
    let mut rng = rng_from_seed(6);
    let dim = 8;
    let mut user_cross = DMatrix::<Complex64>::zeros(dim, dim);
    let mut ap_cross = DMatrix::<Complex64>::zeros(dim, dim);
    let t = TRIALS as f64;
    for _ in 0..TRIALS {
        let ch = sample_channel(&s.scenario, &s.ris, 4, 2, &mut rng);
        let a = vec_of(ch.get(0, 0));
        let b = vec_of(ch.get(0, 1));
        let c = vec_of(ch.get(1, 0));
        for i in 0..dim {
            for j in 0..dim {
                user_cross[(i, j)] += a[i] * b[j].conj() / t;
                ap_cross[(i, j)] += a[i] * c[j].conj() / t;
            }
        }
    }
    let d = &s.chan.delta_bar;
    let user_scale = (d[(0, 0)] * d[(0, 1)]).sqrt();
    let ap_scale = (d[(0, 0)] * d[(1, 0)]).sqrt();
    // each entry has standard error about scale / sqrt(T)
    let bound = 5.0 / t.sqrt();
    let worst_user = user_cross.iter().map(|v| v.norm()).fold(0.0, f64::max) / user_scale;
    let worst_ap = ap_cross.iter().map(|v| v.norm()).fold(0.0, f64::max) / ap_scale;
    assert!(worst_user <= bound, "user cross-covariance {worst_user}");
    assert!(worst_ap <= bound, "AP cross-covariance {worst_ap}");
}

#[test]
fn estimate_variance_and_error_orthogonality() {
    let s = common::model(3, 4, 2, 41);
    let mut rng = rng_from_seed(8);
    let pairs = [(0, 0), (1, 1), (2, 3)];
    let mut est_power = [0.0; 3];
    let mut err_power = [0.0; 3];
    let mut inner = [Complex64::new(0.0, 0.0); 3];
    let mut inner_sq = [0.0; 3];
    let t = TRIALS as f64;
    let entries = 8.0;
    for _ in 0..TRIALS {
        let ch = sample_channel(&s.scenario, &s.ris, 4, 2, &mut rng);
        let hat = simulate_pilot_estimation(&ch, &s.est, &mut rng);
        for (p, &(m, k)) in pairs.iter().enumerate() {
            let g = ch.get(m, k);
            let gh = hat.get(m, k);
            let e = g - gh;
            est_power[p] += gh.norm_squared() / (entries * t);
            err_power[p] += e.norm_squared() / (entries * t);
            let ip: Complex64 = gh.iter().zip(e.iter()).map(|(a, b)| a.conj() * b).sum();
            inner[p] += ip / t;
            inner_sq[p] += ip.norm_sqr() / t;
        }
    }
    for (p, &(m, k)) in pairs.iter().enumerate() {
        let z = s.est.z[(m, k)];
        let delta = s.chan.delta_bar[(m, k)];
        assert!((est_power[p] - z).abs() <= 0.05 * z, "({m},{k}) {} vs {z}", est_power[p]);
        assert!(
            (err_power[p] - (delta - z)).abs() <= 0.05 * (delta - z),
            "({m},{k}) error power {} vs {}",
            err_power[p],
            delta - z
        );
        let se = (inner_sq[p] / t).sqrt();
        assert!(inner[p].norm() <= 4.0 * se, "({m},{k}) <ghat, g - ghat> = {}", inner[p]);
    }
}
