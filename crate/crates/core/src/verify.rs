//! Exact-enumeration and Monte Carlo engines for exceedance probabilities,
//! expected weights of evidence, and the definitional checks built on them.
//!
//! Monte Carlo replicate `i` draws from its own ChaCha8 stream keyed by
//! `(seed, i)`, and per-replicate results are reduced in index order, so
//! estimates do not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial as BinomialSampler, Distribution, Gamma as GammaSampler, Normal as NormalSampler, Poisson as PoissonSampler};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Discrete, DiscreteCDF, Gamma, NegativeBinomial, Poisson};
use statrs::function::factorial::ln_binomial;

use crate::calibration;
use crate::error::{domain, Result, UmpbtError};
use crate::expfam::{rejection_region, solve_umpbt, Direction, FamilyDescriptor, RegionSide, RejectionRegion, TestSpec};
use crate::families::FamilyKind;
use crate::linmodel;

/// Upper-tail mass left out when enumerating an unbounded count statistic.
pub const TRUNCATION_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub replicates: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(replicates: u64, seed: u64) -> Result<Self> {
        if replicates < 2 {
            return Err(UmpbtError::Param(format!("need at least 2 replicates, got {replicates}")));
        }
        Ok(Self { replicates, seed })
    }

    /// Generator for replicate `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Evaluates `f` once per replicate and returns the results in index order.
    pub fn run<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
    {
        (0..self.replicates)
            .into_par_iter()
            .map(|i| f(&mut self.stream(i)))
            .collect()
    }
}

/// Exact enumeration or Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo(McConfig),
}

/// A value with its Monte Carlo standard error (absent when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: Option<f64>,
    /// Probability mass dropped by truncated enumeration.
    pub truncation_mass: f64,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Self { value, stderr: None, truncation_mass: 0.0 }
    }
}

/// Law of ΣT over n observations at a data-generating parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StatisticLaw {
    Binomial { n: u64, p: f64 },
    Poisson { mean: f64 },
    /// Count of successes before `r` failures, success probability `p`.
    NegativeBinomial { r: u64, p: f64 },
    Gamma { shape: f64, scale: f64 },
    Normal { mean: f64, sd: f64 },
}

impl StatisticLaw {
    pub fn for_family(family: &FamilyDescriptor, theta_t: f64, n: u64) -> Result<Self> {
        let Some(params) = family.params else {
            return Err(UmpbtError::UnsupportedSampler(format!("{} has no registered sampling law", family.name)));
        };
        let nf = n as f64;
        let closed = |lo: f64, hi: f64| theta_t >= lo && theta_t <= hi;
        let law = match params.kind {
            FamilyKind::Binomial if closed(0.0, 1.0) => StatisticLaw::Binomial { n, p: theta_t },
            FamilyKind::Poisson if theta_t > 0.0 && theta_t.is_finite() => StatisticLaw::Poisson { mean: nf * theta_t },
            FamilyKind::NegativeBinomial if theta_t > 0.0 && theta_t < 1.0 => StatisticLaw::NegativeBinomial {
                r: params.r.unwrap_or(1) * n,
                p: theta_t,
            },
            FamilyKind::ExponentialMean if theta_t > 0.0 && theta_t.is_finite() => StatisticLaw::Gamma { shape: nf, scale: theta_t },
            FamilyKind::NormalMean if theta_t.is_finite() => {
                let sigma = params.sigma.unwrap_or(1.0);
                StatisticLaw::Normal { mean: nf * theta_t, sd: sigma * nf.sqrt() }
            }
            FamilyKind::NormalVariance if theta_t > 0.0 && theta_t.is_finite() => StatisticLaw::Gamma {
                shape: 0.5 * nf,
                scale: 2.0 * theta_t,
            },
            _ => return domain(format!("θ_t = {theta_t} outside the parameter space of {}", family.name)),
        };
        Ok(law)
    }

    /// P(ΣT ∈ region), enumerated for count laws.
    pub fn region_probability(&self, region: &RejectionRegion) -> Result<Estimate> {
        let c = region.critical_value;
        match *self {
            StatisticLaw::Binomial { n, p } => {
                let k = region.boundary_integer();
                let pmf = |y: u64| binomial_pmf(y, n, p);
                Ok(Estimate::exact(match region.side {
                    RegionSide::Above if k > n as i64 => 0.0,
                    RegionSide::Above => (k.max(0) as u64..=n).rev().map(pmf).sum(),
                    RegionSide::Below if k < 0 => 0.0,
                    RegionSide::Below => (0..=(k as u64).min(n)).map(pmf).sum(),
                }))
            }
            StatisticLaw::Poisson { mean } => {
                let d = Poisson::new(mean).map_err(|e| UmpbtError::Param(e.to_string()))?;
                count_region(|y| d.pmf(y), |y| d.sf(y), region)
            }
            StatisticLaw::NegativeBinomial { r, p } => {
                // statrs counts failures before r successes with success probability 1 − p
                let d = NegativeBinomial::new(r as f64, 1.0 - p).map_err(|e| UmpbtError::Param(e.to_string()))?;
                count_region(|y| d.pmf(y), |y| d.sf(y), region)
            }
            StatisticLaw::Gamma { shape, scale } => {
                let d = Gamma::new(shape, 1.0 / scale).map_err(|e| UmpbtError::Param(e.to_string()))?;
                Ok(Estimate::exact(match region.side {
                    RegionSide::Above => d.sf(c.max(0.0)),
                    RegionSide::Below if c <= 0.0 => 0.0,
                    RegionSide::Below => d.cdf(c),
                }))
            }
            StatisticLaw::Normal { mean, sd } => {
                let z = (c - mean) / sd;
                Ok(Estimate::exact(match region.side {
                    RegionSide::Above => calibration::std_normal_sf(z),
                    RegionSide::Below => calibration::std_normal_cdf(z),
                }))
            }
        }
    }

    /// Sampler for ΣT.
    pub fn sampler(&self) -> Result<StatisticSampler> {
        let bad = |e: String| UmpbtError::Param(e);
        Ok(match *self {
            StatisticLaw::Binomial { n, p } => StatisticSampler::Binomial(BinomialSampler::new(n, p).map_err(|e| bad(e.to_string()))?),
            StatisticLaw::Poisson { mean } => StatisticSampler::Poisson(PoissonSampler::new(mean).map_err(|e| bad(e.to_string()))?),
            StatisticLaw::NegativeBinomial { .. } => {
                return Err(UmpbtError::UnsupportedSampler("negative binomial".into()));
            }
            StatisticLaw::Gamma { shape, scale } => StatisticSampler::Gamma(GammaSampler::new(shape, scale).map_err(|e| bad(e.to_string()))?),
            StatisticLaw::Normal { mean, sd } => StatisticSampler::Normal(NormalSampler::new(mean, sd).map_err(|e| bad(e.to_string()))?),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub enum StatisticSampler {
    Binomial(BinomialSampler),
    Poisson(PoissonSampler<f64>),
    Gamma(GammaSampler<f64>),
    Normal(NormalSampler<f64>),
}

impl StatisticSampler {
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            StatisticSampler::Binomial(d) => d.sample(rng) as f64,
            StatisticSampler::Poisson(d) => d.sample(rng),
            StatisticSampler::Gamma(d) => d.sample(rng),
            StatisticSampler::Normal(d) => d.sample(rng),
        }
    }
}

/// Enumerates a count region; the upper tail beyond the 1 − 10⁻¹² quantile
/// is dropped and reported.
fn count_region(pmf: impl Fn(u64) -> f64, sf: impl Fn(u64) -> f64, region: &RejectionRegion) -> Result<Estimate> {
    let k = region.boundary_integer();
    match region.side {
        RegionSide::Below => {
            let value = if k < 0 { 0.0 } else { (0..=k as u64).map(&pmf).sum() };
            Ok(Estimate::exact(value))
        }
        RegionSide::Above => {
            let mut top = 0u64;
            while sf(top) > TRUNCATION_TAIL {
                top += 1;
                if top == u64::MAX {
                    return domain("enumeration limit reached");
                }
            }
            let lo = k.max(0) as u64;
            let value = if lo > top { 0.0 } else { (lo..=top).rev().map(&pmf).sum() };
            Ok(Estimate {
                value,
                stderr: None,
                truncation_mass: sf(top),
            })
        }
    }
}

/// Binomial pmf with the 0·log 0 = 0 convention at p ∈ {0, 1}.
fn binomial_pmf(y: u64, n: u64, p: f64) -> f64 {
    let yf = y as f64;
    let rest = (n - y) as f64;
    let term = |count: f64, prob: f64| if count == 0.0 { 0.0 } else { count * prob.ln() };
    (ln_binomial(n, y) + term(yf, p) + term(rest, 1.0 - p)).exp()
}

fn binomial_log_bf(y: u64, n: u64, p1: f64, p0: f64) -> f64 {
    let yf = y as f64;
    yf * (p1 / p0).ln() + (n as f64 - yf) * ((1.0 - p1) / (1.0 - p0)).ln()
}

/// Σ over y of Binom(y; n, p_t)·1{BF₁₀(y) > γ} for the point alternative p1.
pub fn exceedance_exact_binomial(p_t: f64, p1: f64, p0: f64, n: u64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_t) {
        return domain(format!("p_t must lie in [0, 1], got {p_t}"));
    }
    for (name, p) in [("p1", p1), ("p0", p0)] {
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("{name} must lie in (0, 1), got {p}"));
        }
    }
    if !(gamma > 0.0) || n == 0 || n > 1_000_000 {
        return domain("require γ > 0 and 1 ≤ n ≤ 10⁶");
    }
    let lg = gamma.ln();
    let term = |y: u64| if binomial_log_bf(y, n, p1, p0) > lg { binomial_pmf(y, n, p_t) } else { 0.0 };
    // summing from the rejecting end keeps nested regions monotone in floating point
    Ok(if p1 > p0 { (0..=n).rev().map(term).sum() } else { (0..=n).map(term).sum() })
}

fn is_binomial(family: &FamilyDescriptor) -> bool {
    matches!(family.params, Some(p) if p.kind == FamilyKind::Binomial)
}

/// P_{θ_t}[BF₁₀ > γ] for the point alternative θ₁, exactly.
pub fn exceedance_exact(family: &FamilyDescriptor, theta_t: f64, theta1: f64, spec: &TestSpec) -> Result<Estimate> {
    if is_binomial(family) {
        return exceedance_exact_binomial(theta_t, theta1, spec.theta0, spec.n, spec.gamma).map(Estimate::exact);
    }
    let region = rejection_region(family, theta1, spec)?;
    StatisticLaw::for_family(family, theta_t, spec.n)?.region_probability(&region)
}

/// Monte Carlo estimate of P_{θ_t}[BF₁₀ > γ] and its binomial standard error.
pub fn exceedance_mc(family: &FamilyDescriptor, theta_t: f64, theta1: f64, spec: &TestSpec, mc: &McConfig) -> Result<(f64, f64)> {
    let region = rejection_region(family, theta1, spec)?;
    let law = StatisticLaw::for_family(family, theta_t, spec.n)?.sampler()?;
    let hits = mc.run(|rng| Ok(region.contains(law.draw(rng)) as u64))?;
    let reps = mc.replicates as f64;
    let p = hits.iter().sum::<u64>() as f64 / reps;
    Ok((p, (p * (1.0 - p) / reps).sqrt()))
}

pub fn exceedance(family: &FamilyDescriptor, theta_t: f64, theta1: f64, spec: &TestSpec, method: &Method) -> Result<Estimate> {
    match method {
        Method::Exact => exceedance_exact(family, theta_t, theta1, spec),
        Method::MonteCarlo(mc) => {
            let (value, se) = exceedance_mc(family, theta_t, theta1, spec, mc)?;
            Ok(Estimate { value, stderr: Some(se), truncation_mass: 0.0 })
        }
    }
}

fn log_bf_linear(family: &FamilyDescriptor, theta1: f64, theta0: f64, n: u64) -> (f64, f64) {
    let slope = family.eta(theta1) - family.eta(theta0);
    let offset = n as f64 * (family.log_partition(theta1) - family.log_partition(theta0));
    (slope, offset)
}

/// E_{θ_t}[log BF₁₀] for the point alternative θ₁.
///
/// Binomial is enumerated; other families use linearity of log BF₁₀ in ΣT,
/// which is exact.
pub fn expected_weight(family: &FamilyDescriptor, theta_t: f64, theta1: f64, spec: &TestSpec, method: &Method) -> Result<Estimate> {
    family.check_theta(theta1)?;
    if theta1 == spec.theta0 {
        return domain("θ₁ must differ from θ₀");
    }
    let (slope, offset) = log_bf_linear(family, theta1, spec.theta0, spec.n);
    match method {
        Method::Exact if is_binomial(family) => {
            if !(0.0..=1.0).contains(&theta_t) {
                return domain(format!("p_t must lie in [0, 1], got {theta_t}"));
            }
            let n = spec.n;
            let value = (0..=n)
                .map(|y| binomial_pmf(y, n, theta_t) * binomial_log_bf(y, n, theta1, spec.theta0))
                .sum();
            Ok(Estimate::exact(value))
        }
        Method::Exact => {
            let mean = family
                .mean_statistic(theta_t)
                .filter(|m| m.is_finite())
                .ok_or_else(|| UmpbtError::UnsupportedSampler(format!("{} has no mean map at θ_t = {theta_t}", family.name)))?;
            Ok(Estimate::exact(slope * spec.n as f64 * mean - offset))
        }
        Method::MonteCarlo(mc) => {
            let law = StatisticLaw::for_family(family, theta_t, spec.n)?.sampler()?;
            let draws = mc.run(|rng| Ok(slope * law.draw(rng) - offset))?;
            let (mean, var) = mean_and_variance(&draws);
            Ok(Estimate {
                value: mean,
                stderr: Some((var / draws.len() as f64).sqrt()),
                truncation_mass: 0.0,
            })
        }
    }
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Type-7 sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Exceedance,
    ExpectedWeight,
}

/// Which alternative the curve evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum CurveAlternative {
    Umpbt { theta1: f64 },
    /// θ₁ = θ_t at every grid point.
    TrueParameter,
    /// μ₁ = μ₀ ± s√(2 log γ/n), with σ² integrated against an inverse-gamma prior.
    DataDependent { alpha: f64, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub family: String,
    pub spec: TestSpec,
    pub alternative: CurveAlternative,
    pub method: Method,
    /// Largest truncation mass over the grid.
    pub truncation_mass: f64,
    /// Grid points with no valid alternative (θ₁ = θ_t not on the alternative side).
    pub skipped: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub kind: CurveKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<Option<f64>>,
    pub meta: CurveMeta,
}

/// One CSV row, `theta_t,value,stderr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub theta_t: f64,
    pub value: f64,
    pub stderr: Option<f64>,
}

impl CurveTable {
    pub fn rows(&self) -> Vec<CurveRow> {
        self.grid
            .iter()
            .zip(&self.values)
            .zip(&self.stderr)
            .map(|((&theta_t, &value), &stderr)| CurveRow { theta_t, value, stderr })
            .collect()
    }

    /// Value at the grid point nearest `theta_t`.
    pub fn value_near(&self, theta_t: f64) -> Option<f64> {
        self.grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - theta_t).abs().total_cmp(&(b.1 - theta_t).abs()))
            .map(|(i, _)| self.values[i])
    }
}

/// `lo, lo+step, ...` up to `hi` inclusive (within 10⁻⁹ of a step).
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step > 0.0 && step.is_finite()) || lo >= hi {
        return domain(format!("empty or invalid grid {lo}:{hi}:{step}"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    if count > 10_000_000 {
        return domain("grid has too many points");
    }
    Ok((0..=count).map(|i| lo + i as f64 * step).collect())
}

fn on_alternative_side(theta: f64, spec: &TestSpec) -> bool {
    match spec.direction {
        Direction::Greater => theta > spec.theta0,
        Direction::Less => theta < spec.theta0,
    }
}

fn evaluate(family: &FamilyDescriptor, kind: CurveKind, theta_t: f64, theta1: f64, spec: &TestSpec, method: &Method) -> Result<Estimate> {
    match kind {
        CurveKind::Exceedance => exceedance(family, theta_t, theta1, spec, method),
        CurveKind::ExpectedWeight => expected_weight(family, theta_t, theta1, spec, method),
    }
}

fn build_curve(
    family: &FamilyDescriptor,
    spec: &TestSpec,
    kind: CurveKind,
    grid: &[f64],
    method: &Method,
    alternative: CurveAlternative,
) -> Result<CurveTable> {
    let cells: Vec<Option<Estimate>> = grid
        .iter()
        .map(|&theta_t| {
            let theta1 = match alternative {
                CurveAlternative::Umpbt { theta1 } => theta1,
                _ if on_alternative_side(theta_t, spec) && family.in_support(theta_t) => theta_t,
                _ => return Ok(None),
            };
            evaluate(family, kind, theta_t, theta1, spec, method).map(Some)
        })
        .collect::<Result<_>>()?;
    let mut table = CurveTable {
        kind,
        grid: Vec::new(),
        values: Vec::new(),
        stderr: Vec::new(),
        meta: CurveMeta {
            family: family.name.clone(),
            spec: *spec,
            alternative,
            method: *method,
            truncation_mass: 0.0,
            skipped: Vec::new(),
        },
    };
    for (&theta_t, cell) in grid.iter().zip(cells) {
        match cell {
            Some(est) => {
                table.grid.push(theta_t);
                table.values.push(est.value);
                table.stderr.push(est.stderr);
                table.meta.truncation_mass = table.meta.truncation_mass.max(est.truncation_mass);
            }
            None => table.meta.skipped.push(theta_t),
        }
    }
    Ok(table)
}

/// Curve of the UMPBT(γ) alternative against the data-generating parameter.
pub fn umpbt_curve(family: &FamilyDescriptor, spec: &TestSpec, kind: CurveKind, grid: &[f64], method: &Method) -> Result<CurveTable> {
    let theta1 = solve_umpbt(family, spec)?.theta_star;
    build_curve(family, spec, kind, grid, method, CurveAlternative::Umpbt { theta1 })
}

/// Curve of the test whose alternative equals the data-generating parameter.
pub fn true_parameter_curve(family: &FamilyDescriptor, spec: &TestSpec, kind: CurveKind, grid: &[f64], method: &Method) -> Result<CurveTable> {
    build_curve(family, spec, kind, grid, method, CurveAlternative::TrueParameter)
}

/// P_{μ_t}[BF₁₀ > γ] for the data-dependent normal-mean alternative with
/// the exact inverse-gamma marginal Bayes factor, by simulation of n
/// observations with standard deviation `sigma`.
#[allow(clippy::too_many_arguments)]
pub fn data_dependent_exceedance_mc(
    mu_t: f64,
    mu0: f64,
    sigma: f64,
    n: u64,
    gamma: f64,
    alpha: f64,
    lambda: f64,
    direction: Direction,
    mc: &McConfig,
) -> Result<(f64, f64)> {
    if n < 2 {
        return domain("data-dependent alternative needs n ≥ 2");
    }
    let law = NormalSampler::new(mu_t, sigma).map_err(|e| UmpbtError::Param(e.to_string()))?;
    let lg = gamma.ln();
    let hits = mc.run(|rng| {
        let xs: Vec<f64> = (0..n).map(|_| law.sample(rng)).collect();
        let mu1 = linmodel::data_dependent_normal_alternative(&xs, mu0, gamma, alpha, lambda, direction)?;
        let lbf = linmodel::unknown_variance_normal_log_bf(&xs, mu0, mu1, alpha, lambda)?;
        Ok((lbf > lg) as u64)
    })?;
    let reps = mc.replicates as f64;
    let p = hits.iter().sum::<u64>() as f64 / reps;
    Ok((p, (p * (1.0 - p) / reps).sqrt()))
}

/// Exceedance curve of the data-dependent alternative over a grid of μ_t.
pub fn data_dependent_curve(spec: &TestSpec, sigma: f64, alpha: f64, lambda: f64, grid: &[f64], mc: &McConfig) -> Result<CurveTable> {
    let mut values = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for &mu_t in grid {
        let (p, se) = data_dependent_exceedance_mc(mu_t, spec.theta0, sigma, spec.n, spec.gamma, alpha, lambda, spec.direction, mc)?;
        values.push(p);
        stderr.push(Some(se));
    }
    Ok(CurveTable {
        kind: CurveKind::Exceedance,
        grid: grid.to_vec(),
        values,
        stderr,
        meta: CurveMeta {
            family: "normal mean, σ² unknown".into(),
            spec: *spec,
            alternative: CurveAlternative::DataDependent { alpha, lambda },
            method: Method::MonteCarlo(*mc),
            truncation_mass: 0.0,
            skipped: Vec::new(),
        },
    })
}

/// Outcome of one (θ_t, θ₂) comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellVerdict {
    Pass,
    Fail,
    /// Monte Carlo shortfall within 3 standard errors.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceCell {
    pub theta_t: f64,
    pub theta2: f64,
    pub umpbt: f64,
    pub other: f64,
    pub margin: f64,
    pub verdict: CellVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub theta_star: f64,
    pub attainable: bool,
    pub cells: usize,
    pub failures: Vec<DominanceCell>,
    pub inconclusive: usize,
    /// Smallest P(BF₁₀ > γ) − P(BF₂₀ > γ) over the grid.
    pub worst_margin: f64,
    pub worst_cell: Option<(f64, f64)>,
    /// θ₂ values off the alternative side or outside the support.
    pub skipped_alternatives: Vec<f64>,
    pub max_truncation_mass: f64,
    pub passed: bool,
}

/// Checks P_{θ_t}[BF₁₀ > γ] ≥ P_{θ_t}[BF₂₀ > γ] for the UMPBT alternative
/// against every θ₂ on the alternative side. Exact cells use zero
/// tolerance. Monte Carlo cells use common random numbers.
pub fn dominance_report(
    family: &FamilyDescriptor,
    spec: &TestSpec,
    theta_t_grid: &[f64],
    theta2_grid: &[f64],
    method: &Method,
) -> Result<DominanceReport> {
    let sol = solve_umpbt(family, spec)?;
    let (alts, skipped): (Vec<f64>, Vec<f64>) = theta2_grid
        .iter()
        .partition(|&&t| on_alternative_side(t, spec) && family.in_support(t) && t != spec.theta0);
    let rows: Vec<Vec<(DominanceCell, f64)>> = theta_t_grid
        .par_iter()
        .map(|&theta_t| dominance_row(family, spec, sol.theta_star, theta_t, &alts, method))
        .collect::<Result<_>>()?;

    let mut report = DominanceReport {
        theta_star: sol.theta_star,
        attainable: sol.attainable,
        cells: 0,
        failures: Vec::new(),
        inconclusive: 0,
        worst_margin: f64::INFINITY,
        worst_cell: None,
        skipped_alternatives: skipped,
        max_truncation_mass: 0.0,
        passed: true,
    };
    for (cell, trunc) in rows.into_iter().flatten() {
        report.cells += 1;
        report.max_truncation_mass = report.max_truncation_mass.max(trunc);
        if cell.margin < report.worst_margin {
            report.worst_margin = cell.margin;
            report.worst_cell = Some((cell.theta_t, cell.theta2));
        }
        match cell.verdict {
            CellVerdict::Pass => {}
            CellVerdict::Inconclusive => report.inconclusive += 1,
            CellVerdict::Fail => {
                report.passed = false;
                report.failures.push(cell);
            }
        }
    }
    Ok(report)
}

fn dominance_row(
    family: &FamilyDescriptor,
    spec: &TestSpec,
    theta_star: f64,
    theta_t: f64,
    alts: &[f64],
    method: &Method,
) -> Result<Vec<(DominanceCell, f64)>> {
    let cell = |umpbt: f64, other: f64, verdict: CellVerdict, theta2: f64| DominanceCell {
        theta_t,
        theta2,
        umpbt,
        other,
        margin: umpbt - other,
        verdict,
    };
    match method {
        Method::Exact => {
            let best = exceedance_exact(family, theta_t, theta_star, spec)?;
            alts.iter()
                .map(|&t2| {
                    let other = exceedance_exact(family, theta_t, t2, spec)?;
                    let verdict = if best.value >= other.value { CellVerdict::Pass } else { CellVerdict::Fail };
                    Ok((cell(best.value, other.value, verdict, t2), best.truncation_mass.max(other.truncation_mass)))
                })
                .collect()
        }
        Method::MonteCarlo(mc) => {
            let law = StatisticLaw::for_family(family, theta_t, spec.n)?.sampler()?;
            let draws = mc.run(|rng| Ok(law.draw(rng)))?;
            let reps = draws.len() as f64;
            let rate = |theta1: f64| -> Result<(f64, f64)> {
                let region = rejection_region(family, theta1, spec)?;
                let p = draws.iter().filter(|&&s| region.contains(s)).count() as f64 / reps;
                Ok((p, (p * (1.0 - p) / reps).sqrt()))
            };
            let (best, best_se) = rate(theta_star)?;
            alts.iter()
                .map(|&t2| {
                    let (other, se) = rate(t2)?;
                    let margin = best - other;
                    let band = 3.0 * (best_se * best_se + se * se).sqrt();
                    let verdict = if margin >= 0.0 {
                        CellVerdict::Pass
                    } else if -margin <= band {
                        CellVerdict::Inconclusive
                    } else {
                        CellVerdict::Fail
                    };
                    Ok((cell(best, other, verdict, t2), 0.0))
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsRow {
    pub theta_t: f64,
    pub umpbt: f64,
    pub true_parameter: f64,
    /// true_parameter − umpbt.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsReport {
    pub theta_star: f64,
    pub rows: Vec<GibbsRow>,
    pub violations: Vec<GibbsRow>,
    /// Grid points where the two curves agree within `equality_tolerance`.
    pub equality_points: Vec<f64>,
    pub equality_tolerance: f64,
    /// Largest grid spacing.
    pub grid_step: f64,
    pub worst_gap: f64,
    pub passed: bool,
}

/// Expected weight of the UMPBT alternative against the true-parameter
/// alternative over a grid on the alternative side. Passes when the UMPBT
/// curve never exceeds the other and the curves meet only within one grid
/// step of θ*.
pub fn gibbs_report(family: &FamilyDescriptor, spec: &TestSpec, grid: &[f64], method: &Method, equality_tolerance: f64) -> Result<GibbsReport> {
    let theta_star = solve_umpbt(family, spec)?.theta_star;
    let points: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&t| on_alternative_side(t, spec) && family.in_support(t))
        .collect();
    if points.is_empty() {
        return domain("no grid points on the alternative side");
    }
    let rows: Vec<GibbsRow> = points
        .par_iter()
        .map(|&theta_t| {
            let umpbt = expected_weight(family, theta_t, theta_star, spec, method)?.value;
            let true_parameter = expected_weight(family, theta_t, theta_t, spec, method)?.value;
            Ok(GibbsRow { theta_t, umpbt, true_parameter, gap: true_parameter - umpbt })
        })
        .collect::<Result<_>>()?;
    let grid_step = points.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let violations: Vec<GibbsRow> = rows.iter().copied().filter(|r| r.gap < 0.0).collect();
    let equality_points: Vec<f64> = rows.iter().filter(|r| r.gap.abs() <= equality_tolerance).map(|r| r.theta_t).collect();
    let worst_gap = rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    let near = |t: f64| (t - theta_star).abs() <= grid_step * (1.0 + 1e-9);
    let passed = violations.is_empty() && equality_points.iter().all(|&t| near(t));
    Ok(GibbsReport {
        theta_star,
        rows,
        violations,
        equality_points,
        equality_tolerance,
        grid_step,
        worst_gap,
        passed,
    })
}

/// Tolerances for comparing simulated weights of evidence with their limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticTolerance {
    pub mean: f64,
    pub variance: f64,
    pub tail: f64,
    pub interval: f64,
}

impl Default for AsymptoticTolerance {
    fn default() -> Self {
        Self { mean: 0.03, variance: 0.06, tail: 0.01, interval: 0.05 }
    }
}

/// Limiting law N(−log γ, 2 log γ) of log BF₁₀ under the null.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLimit {
    pub mean: f64,
    pub variance: f64,
    /// P(log BF₁₀ > 0) = Φ(−√(log γ/2)).
    pub tail: f64,
    pub interval: (f64, f64),
    /// lim (θ*−θ₀)√n = √(2 log γ / I(θ₀)), I the per-observation Fisher information.
    pub pitman_limit: Option<f64>,
}

impl AsymptoticLimit {
    pub fn new(gamma: f64, fisher_information: Option<f64>) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return domain(format!("γ must exceed 1, got {gamma}"));
        }
        let lg = gamma.ln();
        let sd = (2.0 * lg).sqrt();
        let z = calibration::upper_quantile(0.025)?;
        Ok(Self {
            mean: -lg,
            variance: 2.0 * lg,
            tail: calibration::std_normal_cdf(-(0.5 * lg).sqrt()),
            interval: (-lg - z * sd, -lg + z * sd),
            pitman_limit: fisher_information.filter(|i| *i > 0.0).map(|i| (2.0 * lg / i).sqrt()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub n: u64,
    pub theta_star: f64,
    pub pitman_product: f64,
    pub mean: f64,
    pub variance: f64,
    pub tail: f64,
    pub interval: (f64, f64),
    /// Largest |estimate − limit| scaled by its tolerance; ≤ 1 passes.
    pub worst_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub family: String,
    pub theta0: f64,
    pub gamma: f64,
    pub limit: AsymptoticLimit,
    pub tolerance: AsymptoticTolerance,
    pub rows: Vec<AsymptoticRow>,
    pub passed: bool,
}

/// Simulates log BF₁₀ of the upper UMPBT(γ) alternative under θ₀ for each n.
pub fn asymptotic_check(
    family: &FamilyDescriptor,
    theta0: f64,
    gamma: f64,
    n_grid: &[u64],
    mc: &McConfig,
    tolerance: AsymptoticTolerance,
) -> Result<AsymptoticReport> {
    family.check_theta(theta0)?;
    let fisher = match (family.eta_prime(theta0), family.statistic_variance(theta0)) {
        (Some(d), Some(v)) => Some(d * d * v),
        _ => None,
    };
    let limit = AsymptoticLimit::new(gamma, fisher)?;
    StatisticLaw::for_family(family, theta0, 1)?.sampler()?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let spec = TestSpec::new(theta0, Direction::Greater, n, gamma)?;
        let theta_star = solve_umpbt(family, &spec)?.theta_star;
        let (slope, offset) = log_bf_linear(family, theta_star, theta0, n);
        let law = StatisticLaw::for_family(family, theta0, n)?.sampler()?;
        let mut draws = mc.run(|rng| Ok(slope * law.draw(rng) - offset))?;
        let (mean, variance) = mean_and_variance(&draws);
        let tail = draws.iter().filter(|&&x| x > 0.0).count() as f64 / draws.len() as f64;
        draws.sort_by(f64::total_cmp);
        let interval = (quantile_sorted(&draws, 0.025), quantile_sorted(&draws, 0.975));
        let worst_ratio = [
            (mean - limit.mean).abs() / tolerance.mean,
            (variance - limit.variance).abs() / tolerance.variance,
            (tail - limit.tail).abs() / tolerance.tail,
            (interval.0 - limit.interval.0).abs() / tolerance.interval,
            (interval.1 - limit.interval.1).abs() / tolerance.interval,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        rows.push(AsymptoticRow {
            n,
            theta_star,
            pitman_product: (theta_star - theta0) * (n as f64).sqrt(),
            mean,
            variance,
            tail,
            interval,
            worst_ratio,
            passed: worst_ratio <= 1.0,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    Ok(AsymptoticReport {
        family: family.name.clone(),
        theta0,
        gamma,
        limit,
        tolerance,
        rows,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub checks: Vec<CheckLine>,
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Round trips α → γ → α and p → z → p, and agreement of the UMPT and
/// UMPBT(γ(α)) rejection boundaries.
pub fn calibration_report() -> Result<CalibrationReport> {
    let alphas = [1e-7, 1e-5, 1e-3, 0.005, 0.01, 0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.49];
    let mut checks = Vec::new();
    let mut push = |name: String, error: f64, tolerance: f64| {
        checks.push(CheckLine { name, error, tolerance, passed: error <= tolerance });
    };
    for &a in &alphas {
        let back = calibration::alpha_from_gamma(calibration::gamma_from_alpha(a)?)?;
        push(format!("alpha round trip at {a}"), ((back - a) / a).abs(), 1e-10);
        let z = calibration::upper_quantile(a)?;
        push(format!("quantile round trip at {a}"), ((calibration::std_normal_sf(z) - a) / a).abs(), 1e-12);
        for &(mu0, sigma, n) in &[(0.0, 1.0, 1u64), (1.5, 2.0, 25), (-3.0, 0.5, 10_000)] {
            let gamma = calibration::gamma_from_alpha(a)?;
            let umpt = calibration::umpt_boundary_alternative(mu0, sigma, n, a)?;
            let umpbt = calibration::umpbt_xbar_boundary(mu0, sigma, n, gamma)?;
            let scale = sigma / (n as f64).sqrt();
            push(format!("boundary match at α = {a}, n = {n}"), (umpt - umpbt).abs() / scale, 1e-10);
        }
    }
    let lg = calibration::log_gamma_from_z(5.0)?;
    push("log γ at z = 5".into(), (lg - 12.5).abs(), 1e-12);
    let worst_ratio = checks.iter().map(|c| c.error / c.tolerance).fold(0.0, f64::max);
    let passed = checks.iter().all(|c| c.passed);
    Ok(CalibrationReport { checks, worst_ratio, passed })
}
