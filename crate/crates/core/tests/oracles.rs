//! Library values checked against independent numerical routes.

mod common;

use common::{
    central_difference, dense_solve, grid_rng, nifbm_cov_quadrature, uniform, GaussLegendre,
};
use nifbm::asymptotics::{
    finite_xi_cov, gamma_square_series, jacobian_one, jacobian_one_det, sigma_tilde_one,
};
use nifbm::covariance::{
    autocov_sequence, fbm_increment_cov, gamma, increment_autocov, nifbm_cov, nifbm_var,
    Aggregation, HurstIndex, MixedParams, NifbmParams, NoiseModel,
};
use nifbm::estimation::{
    drift_mle, expected_xi, two_point_noise_variance, two_point_noise_variance_assembled,
};
use nifbm::linalg::{dense_cholesky, toeplitz_cholesky};
use nifbm::simulation::{IncrementSeries, SampleGrid};

fn hi(h: f64) -> HurstIndex {
    HurstIndex::new(h).unwrap()
}

#[test]
fn quadrature_rule_is_exact_for_polynomials() {
    let gl = GaussLegendre::new(15);
    let mut f = |x: f64| x.powi(20) - 3.0 * x.powi(7) + 1.0;
    let got = gl.panel(&mut f, 0.0, 1.0);
    assert!((got - (1.0 / 21.0 - 3.0 / 8.0 + 1.0)).abs() < 1e-14);
    let mut g = |x: f64| x.sqrt();
    let got = gl.adaptive(&mut g, 0.0, 4.0, 1e-13);
    assert!((got - 16.0 / 3.0).abs() < 1e-10);
}

#[test]
fn nifbm_cov_matches_quadrature() {
    let mut rng = grid_rng(7);
    for _ in 0..20 {
        let hv = uniform(&mut rng, 0.05, 0.95);
        let h = uniform(&mut rng, 0.5, 8.0);
        let a = uniform(&mut rng, 0.0, 20.0);
        let b = uniform(&mut rng, 0.0, 20.0);
        let (t, s) = if a <= b { (a, b) } else { (b, a) };
        let got = nifbm_cov(hi(hv), h, t, s).unwrap();
        let want = nifbm_cov_quadrature(hv, h, t, s);
        assert!(
            (got - want).abs() < 1e-7,
            "H={hv} h={h} t={t} s={s}: {got} vs {want}"
        );
    }
}

#[test]
fn nifbm_cov_quadrature_at_overlap_and_origin() {
    for &(hv, h, t, s) in &[
        (0.3, 2.0, 0.0, 0.0),
        (0.7, 2.0, 0.0, 1.0),
        (0.1, 1.0, 3.0, 3.5),
        (0.9, 4.0, 1.0, 5.0),
        (0.5, 1.0, 0.0, 0.0),
    ] {
        let got = nifbm_cov(hi(hv), h, t, s).unwrap();
        let want = nifbm_cov_quadrature(hv, h, t, s);
        assert!((got - want).abs() < 1e-8, "H={hv} h={h} t={t} s={s}");
    }
}

#[test]
fn diagonal_consistency() {
    for &hv in &[0.1, 0.26, 0.5, 0.8] {
        for &h in &[0.5, 2.0, 16.0] {
            for &t in &[0.0, 0.3, 7.0, 1e3] {
                let c = nifbm_cov(hi(hv), h, t, t).unwrap();
                let v = nifbm_var(hi(hv), h, t);
                assert!((c / v - 1.0).abs() < 1e-12, "H={hv} h={h} t={t}");
            }
        }
    }
}

/// `Cov(X_{t+h} − X_t, X_{t+(n+1)h} − X_{t+nh})` from four nifBm covariances.
fn assembled_increment_cov(hv: f64, h: f64, t: f64, n: u64) -> f64 {
    let c = |a: f64, b: f64| {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        nifbm_cov(hi(hv), h, x, y).unwrap()
    };
    let s = t + n as f64 * h;
    c(t + h, s + h) - c(t + h, s) - c(t, s + h) + c(t, s)
}

#[test]
fn increment_autocov_matches_assembly() {
    for &hv in &[0.1, 0.3, 0.5, 0.7, 0.9] {
        for &h in &[0.5, 2.0] {
            let p = NifbmParams::new(hv, h, 1.0).unwrap();
            for n in 0..6u64 {
                let want = increment_autocov(&p, n);
                for &t in &[0.0, 1.7, 1e3] {
                    let got = assembled_increment_cov(hv, h, t, n);
                    let scale = want.abs().max(h.powf(2.0 * hv) * 1e-3);
                    assert!(
                        (got - want).abs() < 1e-8 * scale.max(1.0),
                        "H={hv} h={h} n={n} t={t}: {got} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn increment_cov_from_fbm_increments() {
    // ΔX_k = (1/h) ∫_0^h (W_{kh+u+h} − W_{kh+u}) du, so the covariance is a
    // double integral of fBm increment covariances.
    let gl = GaussLegendre::new(15);
    for &(hv, h, n) in &[
        (0.3, 1.0, 0u64),
        (0.3, 1.0, 1),
        (0.7, 2.0, 3),
        (0.5, 1.0, 1),
    ] {
        let shift = n as f64 * h;
        let mut outer = |u: f64| {
            let mut inner =
                |v: f64| fbm_increment_cov(hi(hv), u, u + h, shift + v, shift + v + h).unwrap();
            let kinks = [u - shift - h, u - shift, u - shift + h];
            gl.with_breaks(&mut inner, 0.0, h, &kinks, 1e-13)
        };
        let kinks = [shift - h, shift, shift + h, shift + 2.0 * h];
        let got = gl.with_breaks(&mut outer, 0.0, h, &kinks, 1e-12) / (h * h);
        let want = increment_autocov(&NifbmParams::new(hv, h, 1.0).unwrap(), n);
        assert!((got - want).abs() < 1e-8, "H={hv} n={n}: {got} vs {want}");
    }
}

#[test]
fn gamma_at_half_is_one_dependent() {
    assert!((gamma(hi(0.5), 0) - 2.0 / 3.0).abs() < 1e-15);
    assert!((gamma(hi(0.5), 1) - 1.0 / 6.0).abs() < 1e-15);
    for n in 2..200 {
        assert!(gamma(hi(0.5), n).abs() < 1e-12, "n={n}");
    }
}

#[test]
fn toeplitz_factor_matches_dense_for_mixed_model() {
    let p = MixedParams::new(0.8, 0.2, 1.5, 0.7).unwrap();
    let cov = autocov_sequence(&NoiseModel::Two(p), 2.0, Aggregation::FOUR, 64);
    let fast = toeplitz_cholesky(&cov).unwrap();
    let slow = dense_cholesky(&cov.to_dense(), 64).unwrap();
    for k in 0..64 {
        for i in k..64 {
            assert!((fast.get(i, k) - slow.get(i, k)).abs() < 1e-11, "({i},{k})");
        }
    }
}

#[test]
fn drift_mle_matches_dense_gls() {
    let model = NoiseModel::One {
        hurst: hi(0.7),
        a2: 2.0,
    };
    let n = 40;
    let h = 2.0;
    let cov = autocov_sequence(&model, h, Aggregation::ONE, n);
    let dense = cov.to_dense();
    let mut rng = grid_rng(3);
    let dg: Vec<f64> = (0..n)
        .map(|k| 1.0 + 0.1 * k as f64 + uniform(&mut rng, -0.5, 0.5))
        .collect();
    let dy: Vec<f64> = dg
        .iter()
        .map(|g| 3.0 * g + uniform(&mut rng, -1.0, 1.0))
        .collect();
    let series =
        IncrementSeries::new(SampleGrid::new(h, n, Aggregation::ONE).unwrap(), dy.clone()).unwrap();
    let est = drift_mle(&series, &dg, &cov).unwrap();

    let si_g = dense_solve(&dense, &dg);
    let num: f64 = si_g.iter().zip(&dy).map(|(a, b)| a * b).sum();
    let den: f64 = si_g.iter().zip(&dg).map(|(a, b)| a * b).sum();
    assert!((est.mu_hat - num / den).abs() < 1e-10);
    assert!((est.variance.unwrap() - 1.0 / den).abs() < 1e-10 / den);
}

#[test]
fn two_point_variance_two_routes() {
    let models = [
        NoiseModel::One {
            hurst: hi(0.3),
            a2: 1.0,
        },
        NoiseModel::One {
            hurst: hi(0.9),
            a2: 2.5,
        },
        NoiseModel::Two(MixedParams::new(0.7, 0.1, 1.0, 3.0).unwrap()),
    ];
    for m in &models {
        for &h in &[1.0, 2.0, 4.0] {
            for &n in &[1, 8, 15, 16, 128] {
                let a = two_point_noise_variance(m, h, n);
                let b = two_point_noise_variance_assembled(m, h, n).unwrap();
                assert!((a / b - 1.0).abs() < 1e-10, "{m:?} h={h} n={n}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn two_point_variance_equals_summed_autocov() {
    // Var(Σ ΔX_k) from the Toeplitz covariance.
    for &hv in &[0.1, 0.4, 0.8] {
        let m = NoiseModel::One {
            hurst: hi(hv),
            a2: 1.0,
        };
        for &n in &[15, 16, 50, 4096] {
            let cov = autocov_sequence(&m, 2.0, Aggregation::ONE, n);
            let r = cov.values();
            let mut total = n as f64 * r[0];
            for (k, rk) in r.iter().enumerate().skip(1) {
                total += 2.0 * (n - k) as f64 * rk;
            }
            let got = two_point_noise_variance(&m, 2.0, n);
            assert!((got / total - 1.0).abs() < 1e-10, "H={hv} n={n}");
        }
    }
}

#[test]
fn gamma_square_series_matches_brute_force() {
    // For small H the tail decays like n^{4H−4}; a long direct sum suffices.
    for &hv in &[0.1, 0.3] {
        for &(alpha, beta) in &[(0i64, 0i64), (0, 1), (0, 2)] {
            let mut direct = 0.0;
            for i in -400_000i64..=400_000 {
                let g = |k: i64| gamma(hi(hv), k.unsigned_abs());
                direct += g(i + alpha) * g(i + beta);
            }
            let got = gamma_square_series(hi(hv), alpha, beta).unwrap();
            assert!((got / direct - 1.0).abs() < 1e-9, "H={hv} ({alpha},{beta})");
        }
    }
}

#[test]
fn finite_xi_cov_approaches_limit() {
    for &hv in &[0.3, 0.5] {
        let lim = sigma_tilde_one(hi(hv), 2.0).unwrap();
        let fin = finite_xi_cov(hi(hv), 2.0, 2048);
        assert!((fin.s11 / lim.s11 - 1.0).abs() < 2e-3, "H={hv}");
        assert!((fin.s12 / lim.s12 - 1.0).abs() < 2e-3, "H={hv}");
        assert!((fin.s22 / lim.s22 - 1.0).abs() < 2e-3, "H={hv}");
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    for &hv in &[0.1, 0.4, 0.7, 0.9] {
        for &h in &[0.5, 2.0, 16.0] {
            for &a2 in &[0.5, 3.0] {
                let theta = NifbmParams::new(hv, h, a2).unwrap();
                let jac = jacobian_one(&theta);
                let eta = |hh: f64, aa: f64, j: Aggregation| {
                    let c = nifbm::covariance::Component {
                        hurst: hi(hh),
                        scale2: aa,
                    };
                    expected_xi(&[c], h, j)
                };
                let step = 1e-6;
                let d11 = central_difference(&|x| eta(x, a2, Aggregation::ONE), hv, step);
                let d21 = central_difference(&|x| eta(x, a2, Aggregation::TWO), hv, step);
                let d12 = central_difference(&|x| eta(hv, x, Aggregation::ONE), a2, step);
                let d22 = central_difference(&|x| eta(hv, x, Aggregation::TWO), a2, step);
                for (got, want) in [
                    (jac.d11, d11),
                    (jac.d12, d12),
                    (jac.d21, d21),
                    (jac.d22, d22),
                ] {
                    assert!(
                        (got / want - 1.0).abs() < 1e-6,
                        "H={hv} h={h}: {got} vs {want}"
                    );
                }
                assert!((jac.det() / jacobian_one_det(&theta) - 1.0).abs() < 1e-10);
                assert!(jacobian_one_det(&theta) < 0.0);
            }
        }
    }
}
