use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use umpbt::calibration::{
    alpha_from_gamma, gamma_from_alpha, p_value_to_posterior, umpbt_xbar_boundary, umpt_boundary_alternative,
};
use umpbt::evidence::{log_bf_point, min_null_likelihood_ratio, posterior_null};
use umpbt::families::normal_mean_alternative;
use umpbt::linmodel::{
    beta_star_known_var, beta_star_unknown_var, projection_parts, tested_quadratic_form, RegressionProblem, VarianceModel,
};
use umpbt::{make_family, solve_umpbt, Direction, FamilyParams, TestSpec};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 128, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn bf_equals_gamma_at_critical_value(
        which in 0usize..3,
        theta0 in 0.2f64..3.0,
        n in 1u64..200,
        gamma in 1.2f64..1e4,
        less in any::<bool>(),
    ) {
        let params = [FamilyParams::normal_mean(1.3), FamilyParams::exponential(), FamilyParams::normal_variance(0.0)][which];
        let fam = make_family(&params).unwrap();
        let dir = if less { Direction::Less } else { Direction::Greater };
        let spec = TestSpec::new(theta0, dir, n, gamma).unwrap();
        let sol = solve_umpbt(&fam, &spec).unwrap();
        prop_assume!(sol.attainable);
        let (lo, hi) = fam.statistic_range(n);
        prop_assume!(sol.critical_value > lo && sol.critical_value < hi);
        let lbf = log_bf_point(&fam, sol.theta_star, theta0, sol.critical_value, n).unwrap();
        prop_assert!((lbf - gamma.ln()).abs() <= 1e-8, "lbf {} log γ {}", lbf, gamma.ln());
    }

    #[test]
    fn posterior_decreases_in_bf(odds in 1e-3f64..1e3, a in 1e-6f64..1e6, bump in 1e-6f64..10.0) {
        let b = a * (1.0 + bump);
        prop_assert!(posterior_null(b, odds) < posterior_null(a, odds));
    }

    #[test]
    fn restricted_mle_bounds_every_alternative(
        which in 0usize..3,
        frac in 0.0f64..1.0,
        n in 1u64..60,
        t1 in 0.001f64..0.999,
        less in any::<bool>(),
    ) {
        let (params, theta0) = [(FamilyParams::binomial(), 0.4), (FamilyParams::poisson(), 2.0), (FamilyParams::normal_mean(1.0), 0.5)][which];
        let fam = make_family(&params).unwrap();
        let nf = n as f64;
        let stat = match which {
            0 => (frac * nf).round(),
            1 => (frac * 6.0 * nf).round(),
            _ => nf * (frac * 4.0 - 1.5),
        };
        let dir = if less { Direction::Less } else { Direction::Greater };
        let (_, lmin) = min_null_likelihood_ratio(&fam, stat, n, theta0, dir).unwrap();
        // admissible θ₁ on the alternative side
        let theta1 = match (which, dir) {
            (0, Direction::Greater) => theta0 + (1.0 - theta0) * t1,
            (0, Direction::Less) => theta0 * t1,
            (1, Direction::Greater) => theta0 + 10.0 * t1,
            (1, Direction::Less) => theta0 * t1,
            (_, Direction::Greater) => theta0 + 5.0 * t1,
            (_, Direction::Less) => theta0 - 5.0 * t1,
        };
        prop_assume!(theta1 != theta0);
        let lbf = log_bf_point(&fam, theta1, theta0, stat, n).unwrap();
        prop_assert!(lbf <= -lmin.ln() + 1e-9 * (1.0 + lbf.abs()), "lbf {} bound {}", lbf, -lmin.ln());
    }

    #[test]
    fn alpha_gamma_round_trip(log_alpha in (1e-7f64).ln()..(0.49f64).ln()) {
        let alpha = log_alpha.exp();
        let back = alpha_from_gamma(gamma_from_alpha(alpha).unwrap()).unwrap();
        prop_assert!(((back - alpha) / alpha).abs() <= 1e-10);
    }

    #[test]
    fn umpt_and_umpbt_regions_coincide(
        log_alpha in (1e-6f64).ln()..(0.45f64).ln(),
        n in 1u64..100_000,
        sigma in 0.01f64..50.0,
        mu0 in -10.0f64..10.0,
    ) {
        let alpha = log_alpha.exp();
        let gamma = gamma_from_alpha(alpha).unwrap();
        let classical = umpt_boundary_alternative(mu0, sigma, n, alpha).unwrap();
        let bayes = umpbt_xbar_boundary(mu0, sigma, n, gamma).unwrap();
        let scale = sigma / (n as f64).sqrt();
        prop_assert!((classical - bayes).abs() <= 1e-10 * scale.max(mu0.abs()).max(1.0));
        // BF₁₀ = γ on the boundary
        let fam = make_family(&FamilyParams::normal_mean(sigma)).unwrap();
        let mu1 = normal_mean_alternative(mu0, sigma, n, gamma, Direction::Greater).unwrap();
        let lbf = log_bf_point(&fam, mu1, mu0, classical * n as f64, n).unwrap();
        prop_assert!((lbf - gamma.ln()).abs() <= 1e-8 * gamma.ln().max(1.0), "lbf {} log γ {}", lbf, gamma.ln());
    }

    #[test]
    fn posterior_falls_as_p_shrinks(
        log_p in (1e-8f64).ln()..(0.9f64).ln(),
        shrink in 1.0001f64..100.0,
        design in 0.001f64..0.2,
        odds in 0.1f64..10.0,
    ) {
        let p = log_p.exp();
        let smaller = p / shrink;
        prop_assert!(p_value_to_posterior(smaller, design, odds).unwrap() < p_value_to_posterior(p, design, odds).unwrap());
    }

    #[test]
    fn regression_ladder_intercept_only(ys in prop::collection::vec(-5.0f64..5.0, 3..40), gamma in 1.0f64..1e3, sigma2 in 0.1f64..10.0) {
        let n = ys.len();
        let x = DMatrix::from_element(n, 1, 1.0);
        let prob = RegressionProblem::new(x, DVector::from_vec(ys), DMatrix::zeros(0, 0), VarianceModel::Known { sigma2 }).unwrap();
        let beta = beta_star_known_var(&prob, gamma, Direction::Greater).unwrap();
        let mu1 = normal_mean_alternative(0.0, sigma2.sqrt(), n as u64, gamma, Direction::Greater).unwrap();
        prop_assert!((beta - mu1).abs() <= 1e-12);
    }

    #[test]
    fn regression_scale_equivariance(
        ys in prop::collection::vec(-5.0f64..5.0, 6),
        k in 0.01f64..100.0,
        gamma in 1.5f64..100.0,
    ) {
        let x = DMatrix::from_row_slice(6, 3, &[
            1.0, 0.2, 0.0, 1.0, -1.0, 1.0, 1.0, 0.5, 2.0,
            1.0, 1.5, 3.0, 1.0, 0.1, -1.0, 1.0, -0.7, 0.5,
        ]);
        let s = DMatrix::identity(2, 2) * 2.0;
        let y = DVector::from_vec(ys);
        let base = RegressionProblem::new(x.clone(), y.clone(), s.clone(), VarianceModel::Known { sigma2: 1.7 }).unwrap();
        let scaled = RegressionProblem::new(x, y * k, s, VarianceModel::Known { sigma2: 1.7 * k * k }).unwrap();
        let b0 = beta_star_known_var(&base, gamma, Direction::Greater).unwrap();
        let b1 = beta_star_known_var(&scaled, gamma, Direction::Greater).unwrap();
        prop_assert!((b1 / k - b0).abs() <= 1e-14 * b0.abs());
    }

    #[test]
    fn regression_boundary_is_stationary(
        ys in prop::collection::vec(-5.0f64..5.0, 5),
        gamma in 1.5f64..100.0,
        sigma2 in 0.2f64..5.0,
    ) {
        let x = DMatrix::from_row_slice(5, 2, &[1.0, 0.3, 1.0, 1.2, 1.0, -0.4, 1.0, 2.2, 1.0, 0.9]);
        let prob = RegressionProblem::new(x, DVector::from_vec(ys), DMatrix::identity(1, 1) * 3.0, VarianceModel::Known { sigma2 }).unwrap();
        let beta = beta_star_known_var(&prob, gamma, Direction::Greater).unwrap();
        let q = tested_quadratic_form(&prob, &projection_parts(&prob).unwrap());
        let rhs = |b: f64| sigma2 * gamma.ln() / b + 0.5 * b * q;
        let h = 1e-5 * beta;
        let deriv = (rhs(beta + h) - rhs(beta - h)) / (2.0 * h);
        prop_assert!(deriv.abs() <= 1e-6, "derivative {}", deriv);
    }
}

#[test]
fn unknown_variance_matches_known_at_unit_mean_square() {
    // y'(I−H)y = n with α = λ = 0 gives s² = 1
    let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
    let raw = DVector::from_vec(vec![0.3, -0.8, 1.1, 0.4]);
    let s = DMatrix::identity(1, 1) * 2.5;
    let probe = RegressionProblem::new(x.clone(), raw.clone(), s.clone(), VarianceModel::Known { sigma2: 1.0 }).unwrap();
    let r = projection_parts(&probe).unwrap().r;
    let y = raw * (4.0 / r).sqrt();
    let known = RegressionProblem::new(x.clone(), y.clone(), s.clone(), VarianceModel::Known { sigma2: 1.0 }).unwrap();
    let unknown = RegressionProblem::new(x, y, s, VarianceModel::InverseGamma { alpha: 0.0, lambda: 0.0 }).unwrap();
    for gamma in [2.0, 10.0, 300.0] {
        let a = beta_star_known_var(&known, gamma, Direction::Greater).unwrap();
        let b = beta_star_unknown_var(&unknown, gamma, Direction::Greater).unwrap();
        assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }
}
