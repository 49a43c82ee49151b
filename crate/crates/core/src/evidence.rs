//! Bayes factors, posterior probabilities and likelihood-ratio bounds for
//! point hypotheses in a one-parameter exponential family.
//!
//! All logarithms are natural; the weight of evidence is `log BF₁₀`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::expfam::{solve_umpbt, Direction, FamilyDescriptor, TestSpec};
use crate::optimize;

/// Weight of evidence, Bayes factor and posterior null probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub log_bf10: f64,
    pub bf10: f64,
    pub posterior_null: f64,
    /// p(H₀)/p(H₁).
    pub prior_odds_null: f64,
}

impl EvidenceReport {
    pub fn from_log_bf(log_bf10: f64, prior_odds_null: f64) -> Result<Self> {
        if !(prior_odds_null > 0.0 && prior_odds_null.is_finite()) {
            return domain(format!("prior odds must be positive and finite, got {prior_odds_null}"));
        }
        if log_bf10.is_nan() {
            return domain("log Bayes factor is NaN");
        }
        // logistic form stays finite for extreme weights of evidence
        let posterior_null = 1.0 / (1.0 + (log_bf10 - prior_odds_null.ln()).exp());
        Ok(Self {
            log_bf10,
            bf10: log_bf10.exp(),
            posterior_null,
            prior_odds_null,
        })
    }
}

/// Exact log BF₁₀ of the point alternative θ₁ against θ₀ given the total
/// sufficient statistic: `[η(θ₁)−η(θ₀)] ΣT − n[A(θ₁)−A(θ₀)]`.
pub fn log_bf_point(family: &FamilyDescriptor, theta1: f64, theta0: f64, suffstat_total: f64, n: u64) -> Result<f64> {
    family.check_theta(theta1)?;
    family.check_theta(theta0)?;
    if theta1 == theta0 {
        return domain("θ₁ must differ from θ₀");
    }
    let (lo, hi) = family.statistic_range(n);
    if !(suffstat_total >= lo && suffstat_total <= hi) {
        return domain(format!(
            "sufficient statistic {suffstat_total} outside its range [{lo}, {hi}] for n = {n}"
        ));
    }
    let n = n as f64;
    Ok((family.eta(theta1) - family.eta(theta0)) * suffstat_total
        - n * (family.log_partition(theta1) - family.log_partition(theta0)))
}

/// `p(H₀)/[p(H₀) + BF₁₀]`, the posterior null probability for prior odds
/// `p(H₀)/p(H₁)`.
pub fn posterior_null(bf10: f64, prior_odds_null: f64) -> f64 {
    debug_assert!(bf10 >= 0.0 && prior_odds_null > 0.0);
    if bf10.is_infinite() {
        return 0.0;
    }
    prior_odds_null / (prior_odds_null + bf10)
}

/// Alternative-side restricted MLE and the minimum likelihood ratio
/// `f(x|θ₀)/f(x|θ̂)` in favor of the null.
///
/// When the unrestricted MLE falls on the null side, θ̂ = θ₀ and the ratio
/// is 1. When the sample sits at the edge of the sample space the supremum
/// is approached at the support boundary; θ̂ is then reported as that
/// boundary and the ratio as its limit.
pub fn min_null_likelihood_ratio(
    family: &FamilyDescriptor,
    suffstat_total: f64,
    n: u64,
    theta0: f64,
    direction: Direction,
) -> Result<(f64, f64)> {
    family.check_theta(theta0)?;
    let (lo, hi) = family.statistic_range(n);
    if !(suffstat_total >= lo && suffstat_total <= hi) {
        return domain(format!(
            "sufficient statistic {suffstat_total} outside its range [{lo}, {hi}] for n = {n}"
        ));
    }
    let v = direction.sign();
    let uv = family.u() * v;
    let scale = theta0.abs().max(1.0);
    let limit = match direction {
        Direction::Greater => family.support_hi - theta0,
        Direction::Less => theta0 - family.support_lo,
    };
    let theta = |d: f64| theta0 + v * d;
    let log_bf = |d: f64| {
        let th = theta(d);
        let nn = n as f64;
        (family.eta(th) - family.eta(theta0)) * suffstat_total - nn * (family.log_partition(th) - family.log_partition(theta0))
    };
    let start = 1e-6 * scale;
    let gap = 1e-13 * scale;
    let boundary = match direction {
        Direction::Greater => family.support_hi,
        Direction::Less => family.support_lo,
    };

    if let (Some(mean0), true) = (family.mean_statistic(theta0), family.has_derivatives()) {
        // d log BF / dd has the sign of u·v·(ΣT − n E_θ[T]).
        let nn = n as f64;
        let score = |d: f64| uv * (suffstat_total - nn * family.mean_statistic(theta(d)).unwrap_or(f64::NAN));
        if uv * (suffstat_total - nn * mean0) <= 0.0 {
            return Ok((theta0, 1.0));
        }
        return match optimize::expand_sign_change(score, start, limit, gap) {
            Some((a, b)) => {
                let d = optimize::bisect_root(score, a, b).unwrap_or(0.5 * (a + b));
                Ok((theta(d), (-log_bf(d)).exp().min(1.0)))
            }
            None if score(start) > 0.0 => {
                // increasing all the way to the edge
                let d = last_probe_toward(limit, start, gap);
                Ok((boundary, (-log_bf(d)).exp().min(1.0)))
            }
            None => {
                // root below `start`
                let d = optimize::bisect_root(score, 0.0, start).unwrap_or(start);
                Ok((theta(d), (-log_bf(d)).exp().min(1.0)))
            }
        };
    }

    // derivative-free fallback: maximize log BF directly
    if log_bf(start) <= 0.0 && log_bf(start * 1e-3) <= 0.0 {
        return Ok((theta0, 1.0));
    }
    match optimize::expand_bracket(|d| -log_bf(d), start, limit, gap) {
        optimize::Bracket::Found { lo, hi, .. } => {
            let (d, neg) = optimize::golden_section(|d| -log_bf(d), lo, hi, 1e-12 * scale);
            Ok((theta(d), neg.exp().min(1.0)))
        }
        optimize::Bracket::Monotone { value, .. } => Ok((boundary, value.exp().min(1.0))),
    }
}

fn last_probe_toward(limit: f64, start: f64, gap: f64) -> f64 {
    if limit.is_infinite() {
        return 1e15;
    }
    let mut d = start.min(0.5 * limit);
    while limit - d > gap {
        let next = if d * 2.0 >= limit { d + 0.5 * (limit - d) } else { d * 2.0 };
        if next <= d {
            break;
        }
        d = next;
    }
    d
}

/// Log Bayes factor of the two-sided test whose alternative puts equal mass
/// on the two one-sided UMPBT(2γ) alternatives:
/// `log[(½ m_l + ½ m_h) / m₀]`.
pub fn two_sided_log_bf(family: &FamilyDescriptor, spec: &TestSpec, suffstat_total: f64) -> Result<f64> {
    let (theta_l, theta_h) = two_sided_alternatives(family, spec)?;
    let lbf_l = log_bf_point(family, theta_l, spec.theta0, suffstat_total, spec.n)?;
    let lbf_h = log_bf_point(family, theta_h, spec.theta0, suffstat_total, spec.n)?;
    let m = lbf_l.max(lbf_h);
    Ok(m + (0.5 * ((lbf_l - m).exp() + (lbf_h - m).exp())).ln())
}

/// The two one-sided UMPBT(2γ) alternatives `(θ_l, θ_h)`.
pub fn two_sided_alternatives(family: &FamilyDescriptor, spec: &TestSpec) -> Result<(f64, f64)> {
    let doubled = spec.with_gamma(2.0 * spec.gamma)?;
    let high = solve_umpbt(family, &doubled.with_direction(Direction::Greater))?;
    let low = solve_umpbt(family, &doubled.with_direction(Direction::Less))?;
    Ok((low.theta_star, high.theta_star))
}

/// The max-marginal shortcut: log BF of the favored one-sided UMPBT(2γ)
/// alternative minus log 2. Approximates [`two_sided_log_bf`] when one
/// branch dominates.
pub fn two_sided_log_bf_shortcut(family: &FamilyDescriptor, spec: &TestSpec, suffstat_total: f64) -> Result<f64> {
    let (theta_l, theta_h) = two_sided_alternatives(family, spec)?;
    let lbf_l = log_bf_point(family, theta_l, spec.theta0, suffstat_total, spec.n)?;
    let lbf_h = log_bf_point(family, theta_h, spec.theta0, suffstat_total, spec.n)?;
    Ok(lbf_l.max(lbf_h) - std::f64::consts::LN_2)
}
