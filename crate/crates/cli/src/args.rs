use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use umpbt::{Direction, FamilyKind, FamilyParams, TestSpec};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "umpbt",
    version,
    about = "Uniformly most powerful Bayesian tests for exponential families and regression",
    after_help = "All tests are one-sided. Halve a two-sided p-value before passing it to `calibrate`.\n\
                  Exit codes: 0 ok, 1 validation error, 2 unattainable threshold, 3 check failure."
)]
pub struct Cli {
    /// Output format on standard output
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    /// key: value lines, 6 significant digits
    Text,
    /// header plus one row (solve) or the curve table (curve)
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Find the UMPBT(γ) alternative for a one-parameter family
    Solve(SolveArgs),
    /// Bayes factor and posterior null probability for an observed statistic
    Bf(BfArgs),
    /// Convert between significance levels, evidence thresholds and p-values
    Calibrate(CalibrateArgs),
    /// Exceedance or expected-weight curve against the data-generating parameter
    Curve(CurveArgs),
    /// UMPBT for a linear regression coefficient
    Regress(RegressArgs),
    /// Run a verification suite
    Check(CheckArgs),
}

/// Family selection and its nuisance value.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ModelArgs {
    /// binomial, exponential, negbinom, normal-var, normal-mean or poisson
    #[arg(long, value_parser = parse_kind)]
    #[serde(with = "cli_kind")]
    pub model: FamilyKind,
    /// Known standard deviation (normal-mean)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Known mean (normal-var)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_known: Option<f64>,
    /// Failure count (negbinom)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<u64>,
}

impl ModelArgs {
    pub fn params(&self) -> Result<FamilyParams, CliError> {
        Ok(FamilyParams::new(self.model, self.sigma, self.mu_known, self.r)?)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct TestArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: f64,
    /// Sample size (1 for negbinom)
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    /// Evidence threshold γ > 1
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, value_parser = parse_direction, default_value = "greater")]
    pub direction: Direction,
}

impl TestArgs {
    pub fn spec(&self, params: &FamilyParams) -> Result<TestSpec, CliError> {
        let spec = TestSpec::new(self.theta0, self.direction, self.n, self.gamma)?;
        params.check_spec(&spec)?;
        Ok(spec)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub test: TestArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[command(group(ArgGroup::new("alt").required(true).args(["theta1", "two_sided"])))]
pub struct BfArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: f64,
    /// Point alternative
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
    /// Observed total of the sufficient statistic over the n observations
    #[arg(long, allow_hyphen_values = true)]
    pub stat: f64,
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    /// Prior odds p(H0)/p(H1)
    #[arg(long, default_value_t = 1.0)]
    pub prior_odds: f64,
    /// Equal-mass mixture of the two one-sided UMPBT(2γ) alternatives; needs --gamma
    #[arg(long, requires = "gamma")]
    pub two_sided: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[command(group(ArgGroup::new("mode").required(true).args(["alpha", "gamma", "schedule", "p_to_posterior", "z"])))]
pub struct CalibrateArgs {
    /// One-sided significance level
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Evidence threshold
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// γ = exp(c n), given as c,n
    #[arg(long, value_parser = parse_schedule)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<(f64, u64)>,
    /// Posterior null probability for a one-sided p-value, given as p,design_alpha
    #[arg(long, value_parser = parse_pair)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_to_posterior: Option<(f64, f64)>,
    /// γ = exp(z²/2) for a z-statistic threshold
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Prior odds p(H0)/p(H1) for --p-to-posterior
    #[arg(long, default_value_t = 1.0)]
    pub prior_odds: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKindArg {
    Exceedance,
    Weight,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CurveArgs {
    #[arg(long, value_enum, default_value_t = CurveKindArg::Exceedance)]
    pub kind: CurveKindArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub test: TestArgs,
    /// Grid of data-generating parameters, lo:hi:step
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Grid,
    /// Monte Carlo instead of exact evaluation, given as replicates,seed
    #[arg(long, value_parser = parse_mc)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<(u64, u64)>,
    /// CSV destination (header theta_t,value,stderr)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<std::path::PathBuf>,
    /// Also emit the curve of the alternative equal to the data-generating parameter
    #[arg(long)]
    pub compare_true: bool,
    /// Also emit the data-dependent alternative with inverse-gamma(α, λ) variance prior, given as alpha,lambda (normal-mean, needs --mc)
    #[arg(long, value_parser = parse_pair, requires = "mc")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dependent: Option<(f64, f64)>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[command(group(ArgGroup::new("var").args(["known_sigma2", "ig"])))]
pub struct RegressArgs {
    /// CSV with header; columns x1..xp then y, the last x column is tested
    #[arg(long)]
    pub data: std::path::PathBuf,
    /// JSON sidecar with the nuisance prior covariance S and optionally the variance model
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<std::path::PathBuf>,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, value_parser = parse_direction, default_value = "greater")]
    pub direction: Direction,
    /// Known error variance
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub known_sigma2: Option<f64>,
    /// Inverse-gamma prior on the error variance, given as alpha,lambda
    #[arg(long, value_parser = parse_pair)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ig: Option<(f64, f64)>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Dominance,
    Asymptotics,
    Gibbs,
    Calibration,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, value_parser = parse_kind)]
    #[serde(default, skip_serializing_if = "Option::is_none", with = "cli_kind_opt")]
    pub model: Option<FamilyKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_known: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    /// Sample size; asymptotics accepts a comma-separated list
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub n: Vec<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long, value_parser = parse_direction, default_value = "greater")]
    pub direction: Direction,
    /// Data-generating grid lo:hi:step (dominance, gibbs)
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    /// Competing alternatives lo:hi:step (dominance)
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alt_grid: Option<Grid>,
    /// Monte Carlo replicates,seed
    #[arg(long, value_parser = parse_mc)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<(u64, u64)>,
    /// Largest gap in nats counted as equality (gibbs)
    #[arg(long, default_value_t = 1e-5)]
    pub equality_tol: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

/// Models are echoed under their command-line names.
mod cli_kind {
    use serde::{Deserialize, Deserializer, Serializer};
    use umpbt::FamilyKind;

    pub fn serialize<S: Serializer>(k: &FamilyKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(k.cli_name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<FamilyKind, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

mod cli_kind_opt {
    use serde::{Deserialize, Deserializer, Serializer};
    use umpbt::FamilyKind;

    pub fn serialize<S: Serializer>(k: &Option<FamilyKind>, s: S) -> Result<S::Ok, S::Error> {
        match k {
            Some(k) => s.serialize_str(k.cli_name()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<FamilyKind>, D::Error> {
        Option::<String>::deserialize(d)?.map(|s| s.parse().map_err(serde::de::Error::custom)).transpose()
    }
}

fn parse_kind(s: &str) -> Result<FamilyKind, String> {
    s.parse().map_err(|e: umpbt::UmpbtError| e.to_string())
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    s.parse().map_err(|e: umpbt::UmpbtError| e.to_string())
}

fn split2<'a>(s: &'a str, sep: char, what: &str) -> Result<(&'a str, &'a str), String> {
    s.split_once(sep).ok_or_else(|| format!("expected {what}, got `{s}`"))
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("not a number: `{s}`"))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = split2(s, ',', "two comma-separated numbers")?;
    Ok((num(a)?, num(b)?))
}

fn parse_schedule(s: &str) -> Result<(f64, u64), String> {
    let (c, n) = split2(s, ',', "c,n")?;
    Ok((num(c)?, num(n)?))
}

fn parse_mc(s: &str) -> Result<(u64, u64), String> {
    let (r, seed) = split2(s, ',', "replicates,seed")?;
    Ok((num(r)?, num(seed)?))
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:step, got `{s}`"));
    }
    Ok(Grid { lo: num(parts[0])?, hi: num(parts[1])?, step: num(parts[2])? })
}
