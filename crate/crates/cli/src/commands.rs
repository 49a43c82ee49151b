use std::fs::File;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use umpbt::calibration::{
    alpha_from_gamma, calibration_warnings, gamma_from_alpha, gamma_schedule, log_gamma_from_z, p_value_log_bf, std_normal_sf,
};
use umpbt::evidence::{log_bf_point, two_sided_alternatives, two_sided_log_bf, two_sided_log_bf_shortcut};
use umpbt::expfam::gamma_equivalence_interval;
use umpbt::linmodel::solve_regression;
use umpbt::verify::{
    asymptotic_check, calibration_report, data_dependent_curve, dominance_report, gibbs_report, linear_grid, true_parameter_curve,
    umpbt_curve, AsymptoticTolerance,
};
use umpbt::{
    make_family, solve_umpbt, CalibrationPoint, CurveKind, CurveTable, Direction, EvidenceReport, FamilyDescriptor, FamilyKind,
    FamilyParams, McConfig, Method, RegressionProblem, TestSpec, UmpbtError, VarianceModel,
};

use crate::args::{BfArgs, CalibrateArgs, CheckArgs, CurveArgs, CurveKindArg, Format, Grid, RegressArgs, SolveArgs, Suite};
use crate::output::{curve_rows, fmt_sig, write_csv, Envelope, CURVE_HEADER};
use crate::{CliError, EXIT_CHECK_FAILED, EXIT_OK, EXIT_UNATTAINABLE};

pub struct Outcome {
    pub envelope: Envelope,
    pub code: u8,
    /// Printed instead of the envelope in CSV mode.
    pub csv: Option<(Vec<String>, Vec<Vec<String>>)>,
}

impl Outcome {
    fn ok(envelope: Envelope) -> Self {
        Self { envelope, code: EXIT_OK, csv: None }
    }
}

fn gamma_notes(env: &mut Envelope, gamma: f64) {
    for w in calibration_warnings(gamma) {
        env.warn(w);
    }
}

fn method(mc: Option<(u64, u64)>) -> Result<Method, CliError> {
    Ok(match mc {
        Some((reps, seed)) => Method::MonteCarlo(McConfig::new(reps, seed)?),
        None => Method::Exact,
    })
}

fn grid_points(g: &Grid) -> Result<Vec<f64>, CliError> {
    Ok(linear_grid(g.lo, g.hi, g.step)?)
}

pub fn solve(a: &SolveArgs) -> Result<Outcome, CliError> {
    let params = a.model.params()?;
    let fam = make_family(&params)?;
    let spec = a.test.spec(&params)?;
    let mut env = Envelope::new("solve", a)?;
    gamma_notes(&mut env, spec.gamma);
    match solve_umpbt(&fam, &spec) {
        Ok(sol) => {
            let mut code = EXIT_OK;
            if !sol.attainable {
                if sol.equivalence_note.is_none() {
                    env.warn("no alternative yields a non-empty rejection region at this γ");
                }
                code = EXIT_UNATTAINABLE;
            }
            if let Some(note) = &sol.equivalence_note {
                env.warn(note.clone());
            }
            env.put("theta_star", &sol.theta_star)?;
            env.put("solution", &sol)?;
            if sol.attainable && fam.discrete_sample_space {
                if let Some((lo, hi)) = gamma_equivalence_interval(&fam, &spec)? {
                    env.note_non_finite("gamma_equivalence_interval upper end", hi);
                    env.put("gamma_equivalence_interval", &[lo, hi])?;
                }
            }
            let header = ["theta_star", "objective", "critical_value", "region_side", "region_boundary", "attainable"];
            let side = serde_json::to_value(sol.region.side).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            let row = vec![
                fmt_sig(sol.theta_star, 10),
                fmt_sig(sol.objective, 10),
                fmt_sig(sol.critical_value, 10),
                side,
                sol.region_boundary.map(|b| b.to_string()).unwrap_or_default(),
                sol.attainable.to_string(),
            ];
            Ok(Outcome {
                envelope: env,
                code,
                csv: Some((header.iter().map(|s| s.to_string()).collect(), vec![row])),
            })
        }
        Err(UmpbtError::NoInteriorMinimum { boundary, limit }) => {
            env.warn(format!(
                "objective decreases all the way to the support boundary {boundary}; no alternative attains the threshold"
            ));
            env.put("attainable", &false)?;
            env.put("support_boundary", &boundary)?;
            env.put("boundary_objective", &limit)?;
            Ok(Outcome { envelope: env, code: EXIT_UNATTAINABLE, csv: None })
        }
        Err(e) => Err(e.into()),
    }
}

pub fn bf(a: &BfArgs) -> Result<Outcome, CliError> {
    let params = a.model.params()?;
    let fam = make_family(&params)?;
    let mut env = Envelope::new("bf", a)?;
    let lbf = match (a.two_sided, a.theta1, a.gamma) {
        (true, _, Some(gamma)) => {
            let spec = TestSpec::new(a.theta0, Direction::Greater, a.n, gamma)?;
            params.check_spec(&spec)?;
            let (lo, hi) = two_sided_alternatives(&fam, &spec)?;
            env.put("alternatives", &[lo, hi])?;
            env.put("log_bf10_shortcut", &two_sided_log_bf_shortcut(&fam, &spec, a.stat)?)?;
            two_sided_log_bf(&fam, &spec, a.stat)?
        }
        (false, Some(theta1), _) => log_bf_point(&fam, theta1, a.theta0, a.stat, a.n)?,
        _ => return Err(CliError::validation("give --theta1, or --two-sided with --gamma")),
    };
    let report = EvidenceReport::from_log_bf(lbf, a.prior_odds)?;
    env.note_non_finite("bf10", report.bf10);
    env.put("log_bf10", &report.log_bf10)?;
    env.put("bf10", &report.bf10)?;
    env.put("posterior_null", &report.posterior_null)?;
    env.put("prior_odds_null", &report.prior_odds_null)?;
    Ok(Outcome::ok(env))
}

pub fn calibrate(a: &CalibrateArgs) -> Result<Outcome, CliError> {
    let mut env = Envelope::new("calibrate", a)?;
    if let Some(alpha) = a.alpha {
        let point = CalibrationPoint::from_alpha(alpha)?;
        gamma_notes(&mut env, point.gamma);
        env.put("calibration", &point)?;
    } else if let Some(gamma) = a.gamma {
        let point = CalibrationPoint::from_gamma(gamma)?;
        gamma_notes(&mut env, gamma);
        env.put("calibration", &point)?;
    } else if let Some((c, n)) = a.schedule {
        let gamma = gamma_schedule(c, n)?;
        env.note_non_finite("gamma", gamma);
        env.put("gamma", &gamma)?;
        env.put("log_gamma", &(c * n as f64))?;
        if gamma.is_finite() {
            env.put("alpha", &alpha_from_gamma(gamma)?)?;
        }
        gamma_notes(&mut env, gamma);
    } else if let Some((p, design)) = a.p_to_posterior {
        let report = EvidenceReport::from_log_bf(p_value_log_bf(p, design)?, a.prior_odds)?;
        env.put("design_gamma", &gamma_from_alpha(design)?)?;
        env.put("log_bf10", &report.log_bf10)?;
        env.put("bf10", &report.bf10)?;
        env.put("posterior_null", &report.posterior_null)?;
    } else if let Some(z) = a.z {
        let lg = log_gamma_from_z(z)?;
        let gamma = lg.exp();
        env.note_non_finite("gamma", gamma);
        env.put("log_gamma", &lg)?;
        env.put("gamma", &gamma)?;
        env.put("alpha", &std_normal_sf(z.abs()))?;
        gamma_notes(&mut env, gamma);
    }
    Ok(Outcome::ok(env))
}

fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn save_curve(path: &Path, table: &CurveTable) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display())))?;
    write_csv(file, &CURVE_HEADER, &curve_rows(table))
}

fn curve_warnings(env: &mut Envelope, label: &str, table: &CurveTable) {
    if table.meta.truncation_mass > 0.0 {
        env.warn(format!("{label}: enumeration dropped up to {:e} probability mass", table.meta.truncation_mass));
    }
    if !table.meta.skipped.is_empty() {
        env.warn(format!("{label}: {} grid points off the alternative side were skipped", table.meta.skipped.len()));
    }
}

pub fn curve(a: &CurveArgs, format: Format) -> Result<Outcome, CliError> {
    let params = a.model.params()?;
    let fam = make_family(&params)?;
    let spec = a.test.spec(&params)?;
    let grid = grid_points(&a.grid)?;
    let method = method(a.mc)?;
    let kind = match a.kind {
        CurveKindArg::Exceedance => CurveKind::Exceedance,
        CurveKindArg::Weight => CurveKind::ExpectedWeight,
    };
    let mut env = Envelope::new("curve", a)?;
    gamma_notes(&mut env, spec.gamma);

    let main = umpbt_curve(&fam, &spec, kind, &grid, &method)?;
    curve_warnings(&mut env, "umpbt", &main);
    if let Some(path) = &a.out {
        save_curve(path, &main)?;
    }
    env.put("umpbt", &main.rows())?;
    env.put("meta", &main.meta)?;
    if a.compare_true {
        let dashed = true_parameter_curve(&fam, &spec, kind, &grid, &method)?;
        curve_warnings(&mut env, "true_parameter", &dashed);
        if let Some(path) = &a.out {
            save_curve(&sibling(path, "true"), &dashed)?;
        }
        env.put("true_parameter", &dashed.rows())?;
    }
    if let Some((alpha, lambda)) = a.data_dependent {
        let sigma = match params.kind {
            FamilyKind::NormalMean => params.sigma.unwrap_or(1.0),
            other => return Err(CliError::validation(format!("--data-dependent applies to normal-mean, not {other}"))),
        };
        if kind != CurveKind::Exceedance {
            return Err(CliError::validation("--data-dependent supports --kind exceedance only"));
        }
        let Method::MonteCarlo(mc) = method else {
            return Err(CliError::validation("--data-dependent needs --mc"));
        };
        let table = data_dependent_curve(&spec, sigma, alpha, lambda, &grid, &mc)?;
        if let Some(path) = &a.out {
            save_curve(&sibling(path, "data_dependent"), &table)?;
        }
        env.put("data_dependent", &table.rows())?;
    }
    if format == Format::Csv && a.out.is_none() {
        let header = CURVE_HEADER.iter().map(|s| s.to_string()).collect();
        let rows = curve_rows(&main)
            .into_iter()
            .map(|r| r.into_iter().map(|x| x.map(|v| fmt_sig(v, 10)).unwrap_or_default()).collect())
            .collect();
        return Ok(Outcome { envelope: env, code: EXIT_OK, csv: Some((header, rows)) });
    }
    Ok(Outcome::ok(env))
}

/// JSON sidecar for `regress`.
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PriorFile {
    /// (p−1)×(p−1) prior covariance scale of the nuisance coefficients, row-major.
    #[serde(default)]
    pub s: Option<Vec<Vec<f64>>>,
    /// S = c (X₋ₚ'X₋ₚ)⁻¹ instead of an explicit S.
    #[serde(default)]
    pub g_prior: Option<f64>,
    #[serde(default)]
    pub variance: Option<VarianceModel>,
}

fn read_design(path: &Path) -> Result<(DMatrix<f64>, DVector<f64>), CliError> {
    let bad = |msg: String| CliError::validation(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let width = reader.headers().map_err(|e| bad(e.to_string()))?.len();
    if width < 2 {
        return Err(bad("need at least one x column and a y column".into()));
    }
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != width {
            return Err(bad(format!("row {} has {} fields, header has {width}", i + 1, record.len())));
        }
        for field in record.iter() {
            values.push(field.parse::<f64>().map_err(|_| bad(format!("row {}: `{field}` is not a number", i + 1)))?);
        }
    }
    let rows = values.len() / width;
    if rows == 0 {
        return Err(bad("no data rows".into()));
    }
    let all = DMatrix::from_row_slice(rows, width, &values);
    let x = all.columns(0, width - 1).into_owned();
    let y = all.column(width - 1).into_owned();
    Ok((x, y))
}

pub fn regress(a: &RegressArgs) -> Result<Outcome, CliError> {
    let (x, y) = read_design(&a.data)?;
    let prior: PriorFile = match &a.prior {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
        }
        None => PriorFile::default(),
    };
    let from_flags = match (a.known_sigma2, a.ig) {
        (Some(sigma2), _) => Some(VarianceModel::Known { sigma2 }),
        (_, Some((alpha, lambda))) => Some(VarianceModel::InverseGamma { alpha, lambda }),
        _ => None,
    };
    let variance = match (from_flags, prior.variance) {
        (Some(_), Some(_)) => return Err(CliError::validation("variance given both on the command line and in the prior file")),
        (Some(v), None) | (None, Some(v)) => v,
        (None, None) => return Err(CliError::validation("give --known-sigma2, --ig or a `variance` entry in the prior file")),
    };
    let p = x.ncols();
    let problem = match (prior.s, prior.g_prior) {
        (Some(_), Some(_)) => return Err(CliError::validation("prior file sets both `s` and `g_prior`")),
        (None, Some(c)) => RegressionProblem::with_g_prior(x, y, c, variance)?,
        (Some(rows), None) => {
            let q = rows.len();
            if rows.iter().any(|r| r.len() != q) {
                return Err(CliError::validation("`s` must be a square matrix"));
            }
            let s = DMatrix::from_row_iterator(q, q, rows.into_iter().flatten());
            RegressionProblem::new(x, y, s, variance)?
        }
        (None, None) if p == 1 => RegressionProblem::new(x, y, DMatrix::zeros(0, 0), variance)?,
        (None, None) => return Err(CliError::validation(format!("{} nuisance columns need `s` or `g_prior` in --prior", p - 1))),
    };
    let mut env = Envelope::new("regress", a)?;
    gamma_notes(&mut env, a.gamma);
    let sol = solve_regression(&problem, a.gamma, a.direction)?;
    env.put("n", &problem.n())?;
    env.put("p", &problem.p())?;
    env.put("beta_star", &sol.beta_star)?;
    env.put("quadratic_form", &sol.quadratic_form)?;
    env.put("cross_product", &sol.cross_product)?;
    env.put("residual_form", &sol.residual_form)?;
    env.put("variance_used", &sol.variance_used)?;
    env.put("log_bf10", &sol.log_bf10)?;
    Ok(Outcome::ok(env))
}

fn check_family(a: &CheckArgs) -> Result<(FamilyParams, FamilyDescriptor), CliError> {
    let kind = a.model.ok_or_else(|| CliError::validation("this suite needs --model"))?;
    let params = FamilyParams::new(kind, a.sigma, a.mu_known, a.r)?;
    let fam = make_family(&params)?;
    Ok((params, fam))
}

fn check_spec(a: &CheckArgs, params: &FamilyParams) -> Result<TestSpec, CliError> {
    let theta0 = a.theta0.ok_or_else(|| CliError::validation("this suite needs --theta0"))?;
    let gamma = a.gamma.ok_or_else(|| CliError::validation("this suite needs --gamma"))?;
    let n = match a.n.as_slice() {
        [] => 1,
        [n] => *n,
        _ => return Err(CliError::validation("this suite takes a single --n")),
    };
    let spec = TestSpec::new(theta0, a.direction, n, gamma)?;
    params.check_spec(&spec)?;
    Ok(spec)
}

/// Default grid over a bounded support, or an error asking for one.
fn default_grid(given: Option<Grid>, fam: &FamilyDescriptor, inner: f64, step: f64, flag: &str) -> Result<Vec<f64>, CliError> {
    if let Some(g) = given {
        return grid_points(&g);
    }
    if !(fam.support_lo.is_finite() && fam.support_hi.is_finite()) {
        return Err(CliError::validation(format!("{} has unbounded support; give {flag}", fam.name)));
    }
    let g = linear_grid(fam.support_lo + inner, fam.support_hi - inner, step)?;
    Ok(g.into_iter().filter(|&t| t <= fam.support_hi - inner + 1e-12).collect())
}

pub fn check(a: &CheckArgs) -> Result<Outcome, CliError> {
    let mut env = Envelope::new("check", a)?;
    let passed = match a.suite {
        Suite::Dominance => {
            let (params, fam) = check_family(a)?;
            let spec = check_spec(a, &params)?;
            let t_grid = default_grid(a.grid, &fam, 0.0, 0.01, "--grid")?;
            let alt_grid = default_grid(a.alt_grid, &fam, 0.01, 0.01, "--alt-grid")?;
            let report = dominance_report(&fam, &spec, &t_grid, &alt_grid, &method(a.mc)?)?;
            if !report.attainable {
                env.warn("threshold unattainable; every region is empty and the check is vacuous");
            }
            if report.max_truncation_mass > 0.0 {
                env.warn(format!("enumeration dropped up to {:e} probability mass", report.max_truncation_mass));
            }
            env.put("report", &report)?;
            report.passed
        }
        Suite::Gibbs => {
            let (params, fam) = check_family(a)?;
            let spec = check_spec(a, &params)?;
            let grid = match a.grid {
                Some(g) => grid_points(&g)?,
                None => {
                    if !fam.support_hi.is_finite() || spec.direction != Direction::Greater {
                        return Err(CliError::validation("give --grid for this family and direction"));
                    }
                    linear_grid(spec.theta0 + 0.005, fam.support_hi - 0.005, 0.005)?
                }
            };
            let report = gibbs_report(&fam, &spec, &grid, &method(a.mc)?, a.equality_tol)?;
            env.put("report", &report)?;
            report.passed
        }
        Suite::Asymptotics => {
            let params = match a.model {
                Some(kind) => FamilyParams::new(kind, a.sigma, a.mu_known, a.r)?,
                None => FamilyParams::normal_mean(a.sigma.unwrap_or(1.0)),
            };
            let fam = make_family(&params)?;
            let theta0 = a.theta0.unwrap_or(if params.kind == FamilyKind::NormalMean { 0.0 } else { 1.0 });
            let gamma = a.gamma.ok_or_else(|| CliError::validation("asymptotics needs --gamma"))?;
            let ns = if a.n.is_empty() { vec![10_000] } else { a.n.clone() };
            let (reps, seed) = a.mc.unwrap_or((100_000, 42));
            let report = asymptotic_check(&fam, theta0, gamma, &ns, &McConfig::new(reps, seed)?, AsymptoticTolerance::default())?;
            env.put("report", &report)?;
            report.passed
        }
        Suite::Calibration => {
            let report = calibration_report()?;
            env.put("report", &report)?;
            report.passed
        }
    };
    env.put("passed", &passed)?;
    let code = if passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok(Outcome { envelope: env, code, csv: None })
}
