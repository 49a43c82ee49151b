use umpbt::families::{normal_mean_alternative, table2_objective};
use umpbt::{g_gamma, make_family, solve_umpbt, Direction, FamilyKind, FamilyParams, TestSpec};

mod common;
use common::{design, grid_argmin, sample_sizes};

#[test]
fn solver_matches_dense_grid_for_every_family() {
    let mut checked = 0;
    for kind in FamilyKind::ALL {
        let fam_cases = design(kind);
        for &(params, theta0, dir) in &fam_cases {
            let fam = make_family(&params).unwrap();
            for &n in sample_sizes(kind) {
                for gamma in [3.0, 10.0, 100.0] {
                    let spec = TestSpec::new(theta0, dir, n, gamma).unwrap();
                    let sol = solve_umpbt(&fam, &spec).unwrap();
                    if !sol.attainable {
                        continue;
                    }
                    let oracle = grid_argmin(&fam, &spec);
                    assert!(
                        (sol.theta_star - oracle).abs() <= 1e-5,
                        "{kind} θ₀={theta0} n={n} γ={gamma}: solver {} grid {oracle}",
                        sol.theta_star
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked >= 6 * 20, "only {checked} attainable cases");
}

#[test]
fn less_direction_matches_dense_grid() {
    let cases = [
        (FamilyParams::binomial(), 0.6),
        (FamilyParams::poisson(), 3.0),
        (FamilyParams::exponential(), 2.0),
        (FamilyParams::normal_variance(1.0), 2.0),
    ];
    for (params, theta0) in cases {
        let fam = make_family(&params).unwrap();
        for n in [5, 50] {
            let spec = TestSpec::new(theta0, Direction::Less, n, 10.0).unwrap();
            let sol = solve_umpbt(&fam, &spec).unwrap();
            if !sol.attainable {
                continue;
            }
            let oracle = grid_argmin(&fam, &spec);
            assert!((sol.theta_star - oracle).abs() <= 1e-5, "{} n={n}: {} vs {oracle}", fam.name, sol.theta_star);
        }
    }
}

#[test]
fn closed_forms_match_generic_objective() {
    for params in FamilyParams::catalog_defaults() {
        let fam = make_family(&params).unwrap();
        let theta0 = match params.kind {
            FamilyKind::Binomial | FamilyKind::NegativeBinomial => 0.3,
            FamilyKind::NormalMean => 0.0,
            _ => 1.0,
        };
        let n = if params.kind == FamilyKind::NegativeBinomial { 1 } else { 25 };
        for dir in [Direction::Greater, Direction::Less] {
            let spec = TestSpec::new(theta0, dir, n, 7.5).unwrap();
            let room = match dir {
                Direction::Greater if fam.support_hi.is_finite() => fam.support_hi - theta0,
                Direction::Greater => 5.0,
                Direction::Less if fam.support_lo.is_finite() => theta0 - fam.support_lo,
                Direction::Less => 5.0,
            };
            for i in 1..=1000 {
                let theta1 = theta0 + dir.sign() * room * (i as f64 - 0.5) / 1000.0;
                let generic = g_gamma(&fam, theta1, &spec).unwrap();
                let closed = table2_objective(&params, theta1, &spec).unwrap();
                let tol = 1e-10 * generic.abs().max(1.0);
                assert!((generic - closed).abs() <= tol, "{} θ₁={theta1}: {generic} vs {closed}", fam.name);
            }
        }
    }
}

#[test]
fn normal_closed_form_matches_solver() {
    for mu0 in [-2.0, 0.0, 3.5] {
        for sigma in [0.5, 1.0, 4.0] {
            let fam = make_family(&FamilyParams::normal_mean(sigma)).unwrap();
            for n in [1, 30, 10_000] {
                for gamma in [1.5, 10.0, 1e4] {
                    for dir in [Direction::Greater, Direction::Less] {
                        let spec = TestSpec::new(mu0, dir, n, gamma).unwrap();
                        let solved = solve_umpbt(&fam, &spec).unwrap().theta_star;
                        let closed = normal_mean_alternative(mu0, sigma, n, gamma, dir).unwrap();
                        assert!((solved - closed).abs() <= 1e-8, "μ₀={mu0} σ={sigma} n={n} γ={gamma} {dir}: {solved} vs {closed}");
                    }
                }
            }
        }
    }
}

#[test]
fn normal_pitman_product_is_constant() {
    let fam = make_family(&FamilyParams::normal_mean(1.0)).unwrap();
    let product = |n: u64| {
        let spec = TestSpec::new(0.0, Direction::Greater, n, 4.0).unwrap();
        solve_umpbt(&fam, &spec).unwrap().theta_star * (n as f64).sqrt()
    };
    let base = product(1);
    for n in [10, 1_000, 100_000, 10_000_000] {
        assert!((product(n) - base).abs() <= 1e-10, "n={n}: {} vs {base}", product(n));
    }
}

#[test]
fn discrete_pitman_product_settles() {
    for (params, theta0) in [(FamilyParams::binomial(), 0.3), (FamilyParams::poisson(), 2.0)] {
        let fam = make_family(&params).unwrap();
        let product = |n: u64| {
            let spec = TestSpec::new(theta0, Direction::Greater, n, 10.0).unwrap();
            (solve_umpbt(&fam, &spec).unwrap().theta_star - theta0) * (n as f64).sqrt()
        };
        let (a, b) = (product(1_000), product(100_000));
        assert!(((a - b) / b).abs() < 0.05, "{}: {a} vs {b}", fam.name);
    }
}

#[test]
fn normal_direction_symmetry() {
    for sigma in [0.3, 1.0, 2.0] {
        let fam = make_family(&FamilyParams::normal_mean(sigma)).unwrap();
        for mu0 in [-1.0, 0.0, 2.5] {
            for n in [1, 7, 400] {
                let spec = TestSpec::new(mu0, Direction::Greater, n, 20.0).unwrap();
                let up = solve_umpbt(&fam, &spec).unwrap().theta_star;
                let down = solve_umpbt(&fam, &spec.with_direction(Direction::Less)).unwrap().theta_star;
                assert!((down - (mu0 - (up - mu0))).abs() <= 1e-12 * mu0.abs().max(1.0));
            }
        }
    }
}

#[test]
fn objective_diverges_next_to_null() {
    for params in FamilyParams::catalog_defaults() {
        let fam = make_family(&params).unwrap();
        let theta0 = match params.kind {
            FamilyKind::Binomial | FamilyKind::NegativeBinomial => 0.3,
            FamilyKind::NormalMean => 0.0,
            _ => 1.0,
        };
        let n = if params.kind == FamilyKind::NegativeBinomial { 1 } else { 10 };
        let spec = TestSpec::new(theta0, Direction::Greater, n, 3.0).unwrap();
        let vals: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8]
            .iter()
            .map(|d| g_gamma(&fam, theta0 + d, &spec).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{}: {vals:?}", fam.name);
        assert!(vals[3] > 1e6, "{}: {vals:?}", fam.name);
    }
}
