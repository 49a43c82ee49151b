//! Catalog of common one-parameter exponential families.
//!
//! Parameterizations follow the usual convention: `p` is a proportion, `μ`
//! a mean, `σ²` a variance. The negative binomial counts successes before
//! the `r`-th failure, and the normal-variance family assumes a known mean
//! so that its statistic is `Σ(xᵢ − μ)²`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, UmpbtError};
use crate::expfam::{Direction, FamilyDescriptor, SuffStatKind, TestSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Binomial,
    ExponentialMean,
    NegativeBinomial,
    NormalVariance,
    NormalMean,
    Poisson,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        FamilyKind::Binomial,
        FamilyKind::ExponentialMean,
        FamilyKind::NegativeBinomial,
        FamilyKind::NormalVariance,
        FamilyKind::NormalMean,
        FamilyKind::Poisson,
    ];

    /// Command-line name.
    pub fn cli_name(self) -> &'static str {
        match self {
            FamilyKind::Binomial => "binomial",
            FamilyKind::ExponentialMean => "exponential",
            FamilyKind::NegativeBinomial => "negbinom",
            FamilyKind::NormalVariance => "normal-var",
            FamilyKind::NormalMean => "normal-mean",
            FamilyKind::Poisson => "poisson",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for FamilyKind {
    type Err = UmpbtError;

    fn from_str(s: &str) -> Result<Self> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.cli_name() == s)
            .ok_or_else(|| {
                UmpbtError::Param(format!(
                    "unknown model `{s}` (expected one of binomial, exponential, negbinom, normal-var, normal-mean, poisson)"
                ))
            })
    }
}

/// Family selector plus the fixed nuisance quantity each family needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub kind: FamilyKind,
    /// Known standard deviation (normal mean).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Known mean (normal variance).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_known: Option<f64>,
    /// Fixed failure count (negative binomial).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<u64>,
}

impl FamilyParams {
    pub fn new(kind: FamilyKind, sigma: Option<f64>, mu_known: Option<f64>, r: Option<u64>) -> Result<Self> {
        let p = Self {
            kind,
            sigma,
            mu_known,
            r,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn binomial() -> Self {
        Self::bare(FamilyKind::Binomial)
    }

    pub fn exponential() -> Self {
        Self::bare(FamilyKind::ExponentialMean)
    }

    pub fn poisson() -> Self {
        Self::bare(FamilyKind::Poisson)
    }

    pub fn normal_mean(sigma: f64) -> Self {
        Self {
            sigma: Some(sigma),
            ..Self::bare(FamilyKind::NormalMean)
        }
    }

    pub fn normal_variance(mu_known: f64) -> Self {
        Self {
            mu_known: Some(mu_known),
            ..Self::bare(FamilyKind::NormalVariance)
        }
    }

    pub fn negative_binomial(r: u64) -> Self {
        Self {
            r: Some(r),
            ..Self::bare(FamilyKind::NegativeBinomial)
        }
    }

    fn bare(kind: FamilyKind) -> Self {
        Self {
            kind,
            sigma: None,
            mu_known: None,
            r: None,
        }
    }

    /// One instance of every family with unit nuisance values.
    pub fn catalog_defaults() -> [FamilyParams; 6] {
        [
            Self::binomial(),
            Self::exponential(),
            Self::negative_binomial(5),
            Self::normal_variance(0.0),
            Self::normal_mean(1.0),
            Self::poisson(),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let want_sigma = self.kind == FamilyKind::NormalMean;
        let want_mu = self.kind == FamilyKind::NormalVariance;
        let want_r = self.kind == FamilyKind::NegativeBinomial;
        let field = |present: bool, wanted: bool, name: &str| -> Result<()> {
            match (present, wanted) {
                (true, false) => Err(UmpbtError::Param(format!("`{name}` does not apply to {}", self.kind))),
                (false, true) => Err(UmpbtError::Param(format!("{} requires `{name}`", self.kind))),
                _ => Ok(()),
            }
        };
        field(self.sigma.is_some(), want_sigma, "sigma")?;
        field(self.mu_known.is_some(), want_mu, "mu_known")?;
        field(self.r.is_some(), want_r, "r")?;
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(UmpbtError::Param(format!("sigma must be positive, got {s}")));
            }
        }
        if let Some(m) = self.mu_known {
            if !m.is_finite() {
                return Err(UmpbtError::Param(format!("mu_known must be finite, got {m}")));
            }
        }
        if self.r == Some(0) {
            return Err(UmpbtError::Param("r must be a positive integer".into()));
        }
        Ok(())
    }

    /// Family-specific constraints on a test specification.
    pub fn check_spec(&self, spec: &TestSpec) -> Result<()> {
        if self.kind == FamilyKind::NegativeBinomial && spec.n != 1 {
            return Err(UmpbtError::Param(format!(
                "negbinom carries its count in r; n must be 1, got {}",
                spec.n
            )));
        }
        Ok(())
    }
}

/// Builds the descriptor (η, A, derivatives, support, statistic) of a catalog family.
pub fn make_family(params: &FamilyParams) -> Result<FamilyDescriptor> {
    params.validate()?;
    let inf = f64::INFINITY;
    let fam = match params.kind {
        FamilyKind::Binomial => FamilyDescriptor::new(
            "binomial",
            |p: f64| (p / (1.0 - p)).ln(),
            |p: f64| -(-p).ln_1p(),
            (0.0, 1.0),
            true,
        )
        .with_derivatives(|p: f64| 1.0 / (p * (1.0 - p)), |p: f64| 1.0 / (1.0 - p))
        .with_statistic_variance(|p: f64| p * (1.0 - p))
        .with_statistic(SuffStatKind::Count, (0.0, 1.0), true),
        FamilyKind::ExponentialMean => FamilyDescriptor::new(
            "exponential",
            |mu: f64| -1.0 / mu,
            |mu: f64| mu.ln(),
            (0.0, inf),
            true,
        )
        .with_derivatives(|mu: f64| 1.0 / (mu * mu), |mu: f64| 1.0 / mu)
        .with_statistic_variance(|mu: f64| mu * mu)
        .with_statistic(SuffStatKind::SumOfValues, (0.0, inf), false),
        FamilyKind::NegativeBinomial => {
            let r = params.r.expect("validated") as f64;
            FamilyDescriptor::new("negbinom", |p: f64| p.ln(), move |p: f64| -r * (-p).ln_1p(), (0.0, 1.0), true)
                .with_derivatives(|p: f64| 1.0 / p, move |p: f64| r / (1.0 - p))
                .with_statistic_variance(move |p: f64| r * p / ((1.0 - p) * (1.0 - p)))
                .with_statistic(SuffStatKind::Count, (0.0, inf), true)
        }
        FamilyKind::NormalVariance => FamilyDescriptor::new(
            "normal-var",
            |v: f64| -0.5 / v,
            |v: f64| 0.5 * v.ln(),
            (0.0, inf),
            true,
        )
        .with_derivatives(|v: f64| 0.5 / (v * v), |v: f64| 0.5 / v)
        .with_statistic_variance(|v: f64| 2.0 * v * v)
        .with_statistic(SuffStatKind::SumOfSquaresAboutMean, (0.0, inf), false),
        FamilyKind::NormalMean => {
            let s2 = params.sigma.expect("validated").powi(2);
            FamilyDescriptor::new(
                "normal-mean",
                move |mu: f64| mu / s2,
                move |mu: f64| mu * mu / (2.0 * s2),
                (-inf, inf),
                true,
            )
            .with_derivatives(move |_mu: f64| 1.0 / s2, move |mu: f64| mu / s2)
            .with_statistic_variance(move |_mu: f64| s2)
            .with_statistic(SuffStatKind::SumOfValues, (-inf, inf), false)
        }
        FamilyKind::Poisson => FamilyDescriptor::new("poisson", |mu: f64| mu.ln(), |mu: f64| mu, (0.0, inf), true)
            .with_derivatives(|mu: f64| 1.0 / mu, |_mu: f64| 1.0)
            .with_statistic_variance(|mu: f64| mu)
            .with_statistic(SuffStatKind::Count, (0.0, inf), true),
    };
    Ok(fam.with_params(*params))
}

/// Closed-form objective of each catalog family, written out per family
/// rather than through η and A. Works on the ΣT scale; accepts γ ≥ 1.
pub fn table2_value(params: &FamilyParams, theta1: f64, theta0: f64, n: u64, gamma: f64) -> Result<f64> {
    params.validate()?;
    let fam = make_family(params)?;
    fam.check_theta(theta1)?;
    fam.check_theta(theta0)?;
    if theta1 == theta0 {
        return domain("θ₁ must differ from θ₀");
    }
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return domain(format!("γ must be finite and at least 1, got {gamma}"));
    }
    let lg = gamma.ln();
    let n = n as f64;
    let value = match params.kind {
        FamilyKind::Binomial => {
            let (p, p0) = (theta1, theta0);
            (lg - n * ((1.0 - p) / (1.0 - p0)).ln()) / ((p * (1.0 - p0)) / ((1.0 - p) * p0)).ln()
        }
        FamilyKind::ExponentialMean => {
            let (m1, m0) = (theta1, theta0);
            (lg + n * (m1.ln() - m0.ln())) / (1.0 / m0 - 1.0 / m1)
        }
        FamilyKind::NegativeBinomial => {
            let r = params.r.expect("validated") as f64;
            let (p1, p0) = (theta1, theta0);
            (lg - r * ((1.0 - p1) / (1.0 - p0)).ln()) / (p1.ln() - p0.ln())
        }
        FamilyKind::NormalVariance => {
            let (v1, v0) = (theta1, theta0);
            2.0 * v1 * v0 * (lg + 0.5 * n * (v1.ln() - v0.ln())) / (v1 - v0)
        }
        FamilyKind::NormalMean => {
            let s2 = params.sigma.expect("validated").powi(2);
            let (m1, m0) = (theta1, theta0);
            s2 * lg / (m1 - m0) + 0.5 * n * (m0 + m1)
        }
        FamilyKind::Poisson => {
            let (m1, m0) = (theta1, theta0);
            (lg + n * (m1 - m0)) / (m1.ln() - m0.ln())
        }
    };
    Ok(value)
}

/// Closed-form objective for a validated test; `theta1` must lie on the
/// alternative side of θ₀.
pub fn table2_objective(params: &FamilyParams, theta1: f64, spec: &TestSpec) -> Result<f64> {
    let side = (theta1 - spec.theta0) * spec.direction.sign();
    if !(side > 0.0) {
        return domain(format!(
            "θ₁ = {theta1} is not on the {} side of θ₀ = {}",
            spec.direction, spec.theta0
        ));
    }
    table2_value(params, theta1, spec.theta0, spec.n, spec.gamma)
}

/// Closed-form UMPBT alternative for a normal mean with known σ:
/// `μ₀ ± σ √(2 log γ / n)`.
pub fn normal_mean_alternative(mu0: f64, sigma: f64, n: u64, gamma: f64, direction: Direction) -> Result<f64> {
    if !mu0.is_finite() {
        return domain(format!("μ₀ must be finite, got {mu0}"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return domain(format!("σ must be positive, got {sigma}"));
    }
    if n == 0 {
        return domain("n must be at least 1");
    }
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return domain(format!("γ must be finite and at least 1, got {gamma}"));
    }
    Ok(mu0 + direction.sign() * sigma * (2.0 * gamma.ln() / n as f64).sqrt())
}
