//! Regular one-parameter exponential families and the UMPBT(γ) solver.
//!
//! A family is described per observation by
//! `f(x | θ) = h(x) exp[η(θ) T(x) − A(θ)]`. The base measure `h` cancels in
//! every Bayes factor and is never evaluated. For a sample of size `n` the
//! test rejects when the Bayes factor of a point alternative `θ₁` against
//! `θ₀` exceeds `γ`, which is equivalent to `ΣT` crossing
//!
//! ```text
//! g_γ(θ₁, θ₀) = [log γ + n (A(θ₁) − A(θ₀))] / (η(θ₁) − η(θ₀))
//! ```
//!
//! from above when `η(θ₁) > η(θ₀)` and from below otherwise. Minimizing
//! `u·v·g_γ` over the admissible side of the null (u: sign of η's slope, v:
//! sign of the alternative) gives the point alternative whose rejection
//! region contains that of every other alternative.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, UmpbtError};
use crate::evidence;
use crate::families::FamilyParams;
use crate::optimize::{self, Bracket};

/// Minimum |η(θ) − η(θ₀)| accepted by the objective.
pub const MIN_SEPARATION: f64 = 1e-12;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuffStatKind {
    SumOfValues,
    SumOfSquaresAboutMean,
    Count,
}

/// Side of the null on which the alternative lies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Greater,
    Less,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Greater => 1.0,
            Direction::Less => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Direction::Greater => Direction::Less,
            Direction::Less => Direction::Greater,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Greater => "greater",
            Direction::Less => "less",
        })
    }
}

impl FromStr for Direction {
    type Err = UmpbtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "greater" | "gt" | ">" => Ok(Direction::Greater),
            "less" | "lt" | "<" => Ok(Direction::Less),
            other => Err(UmpbtError::Param(format!(
                "unknown direction `{other}` (expected greater|less)"
            ))),
        }
    }
}

/// A one-parameter exponential family, per observation.
#[derive(Clone)]
pub struct FamilyDescriptor {
    pub name: String,
    eta: ScalarFn,
    log_partition: ScalarFn,
    eta_prime: Option<ScalarFn>,
    log_partition_prime: Option<ScalarFn>,
    /// d²A/dη², the variance of T per observation, as a function of θ.
    log_partition_second: Option<ScalarFn>,
    pub suffstat_kind: SuffStatKind,
    pub support_lo: f64,
    pub support_hi: f64,
    pub eta_increasing: bool,
    pub discrete_sample_space: bool,
    /// Range of T for a single observation.
    pub statistic_lo: f64,
    pub statistic_hi: f64,
    /// Catalog parameters when the descriptor came from `families::make_family`.
    pub params: Option<FamilyParams>,
}

impl fmt::Debug for FamilyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilyDescriptor")
            .field("name", &self.name)
            .field("suffstat_kind", &self.suffstat_kind)
            .field("support", &(self.support_lo, self.support_hi))
            .field("eta_increasing", &self.eta_increasing)
            .field("discrete_sample_space", &self.discrete_sample_space)
            .field("has_derivatives", &self.has_derivatives())
            .field("params", &self.params)
            .finish()
    }
}

impl FamilyDescriptor {
    /// A continuous family with statistic range `(-inf, inf)`; refine with the
    /// `with_*` methods.
    pub fn new(
        name: impl Into<String>,
        eta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        log_partition: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: (f64, f64),
        eta_increasing: bool,
    ) -> Self {
        Self {
            name: name.into(),
            eta: Arc::new(eta),
            log_partition: Arc::new(log_partition),
            eta_prime: None,
            log_partition_prime: None,
            log_partition_second: None,
            suffstat_kind: SuffStatKind::SumOfValues,
            support_lo: support.0,
            support_hi: support.1,
            eta_increasing,
            discrete_sample_space: false,
            statistic_lo: f64::NEG_INFINITY,
            statistic_hi: f64::INFINITY,
            params: None,
        }
    }

    /// Analytic dη/dθ and dA/dθ; enables the stationarity polish in the solver.
    pub fn with_derivatives(
        mut self,
        eta_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        log_partition_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.eta_prime = Some(Arc::new(eta_prime));
        self.log_partition_prime = Some(Arc::new(log_partition_prime));
        self
    }

    pub fn with_statistic_variance(mut self, var: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.log_partition_second = Some(Arc::new(var));
        self
    }

    pub fn with_statistic(mut self, kind: SuffStatKind, range: (f64, f64), discrete: bool) -> Self {
        self.suffstat_kind = kind;
        self.statistic_lo = range.0;
        self.statistic_hi = range.1;
        self.discrete_sample_space = discrete;
        self
    }

    pub(crate) fn with_params(mut self, params: FamilyParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn eta(&self, theta: f64) -> f64 {
        (self.eta)(theta)
    }

    pub fn log_partition(&self, theta: f64) -> f64 {
        (self.log_partition)(theta)
    }

    pub fn has_derivatives(&self) -> bool {
        self.eta_prime.is_some() && self.log_partition_prime.is_some()
    }

    pub fn eta_prime(&self, theta: f64) -> Option<f64> {
        self.eta_prime.as_ref().map(|f| f(theta))
    }

    pub fn log_partition_prime(&self, theta: f64) -> Option<f64> {
        self.log_partition_prime.as_ref().map(|f| f(theta))
    }

    /// Variance of T per observation at θ (A'' in the natural parameterization).
    pub fn statistic_variance(&self, theta: f64) -> Option<f64> {
        self.log_partition_second.as_ref().map(|f| f(theta))
    }

    /// E_θ[T] per observation, i.e. dA/dη.
    pub fn mean_statistic(&self, theta: f64) -> Option<f64> {
        Some(self.log_partition_prime(theta)? / self.eta_prime(theta)?)
    }

    /// u in the sign convention of the solver.
    pub fn u(&self) -> f64 {
        if self.eta_increasing {
            1.0
        } else {
            -1.0
        }
    }

    pub fn in_support(&self, theta: f64) -> bool {
        theta.is_finite() && theta > self.support_lo && theta < self.support_hi
    }

    pub fn check_theta(&self, theta: f64) -> Result<()> {
        if self.in_support(theta) {
            Ok(())
        } else {
            domain(format!(
                "θ = {theta} outside the open support ({}, {}) of {}",
                self.support_lo, self.support_hi, self.name
            ))
        }
    }

    /// Range of ΣT over a sample of size n.
    pub fn statistic_range(&self, n: u64) -> (f64, f64) {
        let n = n as f64;
        let scale = |v: f64| if v.is_infinite() { v } else { v * n };
        (scale(self.statistic_lo), scale(self.statistic_hi))
    }

    /// Distance from θ₀ to the support bound on the requested side.
    pub(crate) fn room(&self, theta0: f64, direction: Direction) -> f64 {
        match direction {
            Direction::Greater => self.support_hi - theta0,
            Direction::Less => theta0 - self.support_lo,
        }
    }

    /// Checks the strict-monotonicity invariant of η on `samples` points of
    /// the open support (infinite bounds are probed on a log scale).
    pub fn eta_is_monotone(&self, samples: usize) -> bool {
        let pts = support_probe_points(self.support_lo, self.support_hi, samples);
        let want = self.u();
        pts.windows(2).all(|w| {
            let d = self.eta(w[1]) - self.eta(w[0]);
            d.is_finite() && d.signum() == want && d != 0.0
        })
    }
}

fn support_probe_points(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let samples = samples.max(2);
    let map = |t: f64| -> f64 {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => lo + (hi - lo) * t,
            (true, false) => lo + (t / (1.0 - t)),
            (false, true) => hi - ((1.0 - t) / t),
            (false, false) => (t / (1.0 - t)).ln(),
        }
    };
    (1..=samples)
        .map(|i| map(i as f64 / (samples + 1) as f64))
        .collect()
}

/// Null value, direction, sample size and evidence threshold of a test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub theta0: f64,
    pub direction: Direction,
    pub n: u64,
    pub gamma: f64,
}

impl TestSpec {
    pub fn new(theta0: f64, direction: Direction, n: u64, gamma: f64) -> Result<Self> {
        if !theta0.is_finite() {
            return domain(format!("θ₀ must be finite, got {theta0}"));
        }
        if n == 0 {
            return Err(UmpbtError::Param("sample size n must be at least 1".into()));
        }
        if !(gamma.is_finite() && gamma > 1.0) {
            return domain(format!("evidence threshold γ must exceed 1, got {gamma}"));
        }
        Ok(Self {
            theta0,
            direction,
            n,
            gamma,
        })
    }

    pub fn log_gamma(&self) -> f64 {
        self.gamma.ln()
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.theta0, self.direction, self.n, gamma)
    }

    pub fn with_direction(&self, direction: Direction) -> Self {
        Self { direction, ..*self }
    }

    pub fn with_n(&self, n: u64) -> Result<Self> {
        Self::new(self.theta0, self.direction, n, self.gamma)
    }
}

/// Which side of the critical value of ΣT rejects the null.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionSide {
    /// Reject when ΣT > critical value.
    Above,
    /// Reject when ΣT < critical value.
    Below,
}

/// Rejection region `{ΣT > c}` or `{ΣT < c}` implied by a point alternative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionRegion {
    pub side: RegionSide,
    pub critical_value: f64,
}

impl RejectionRegion {
    pub fn contains(&self, stat: f64) -> bool {
        match self.side {
            RegionSide::Above => stat > self.critical_value,
            RegionSide::Below => stat < self.critical_value,
        }
    }

    /// Innermost integer statistic inside the region (discrete families).
    pub fn boundary_integer(&self) -> i64 {
        match self.side {
            RegionSide::Above => self.critical_value.floor() as i64 + 1,
            RegionSide::Below => self.critical_value.ceil() as i64 - 1,
        }
    }
}

/// The optimal point alternative of a UMPBT(γ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmpbtSolution {
    pub theta_star: f64,
    /// g_γ(θ*, θ₀).
    pub objective: f64,
    /// Threshold on ΣT; the region side is recorded in `region`.
    pub critical_value: f64,
    pub region: RejectionRegion,
    pub attainable: bool,
    /// First (innermost) statistic value in the rejection region, discrete families only.
    pub region_boundary: Option<i64>,
    /// Maximal θ-interval inducing the same rejection region, discrete families only.
    pub equivalence_interval: Option<(f64, f64)>,
    pub equivalence_note: Option<String>,
}

/// g_γ(θ, θ₀) from raw arguments. Accepts γ ≥ 1 (γ = 1 gives the boundary
/// of the likelihood-ratio test).
pub fn objective_value(family: &FamilyDescriptor, theta: f64, theta0: f64, n: u64, gamma: f64) -> Result<f64> {
    family.check_theta(theta)?;
    family.check_theta(theta0)?;
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return domain(format!("γ must be finite and at least 1, got {gamma}"));
    }
    let sep = family.eta(theta) - family.eta(theta0);
    if !(sep.abs() >= MIN_SEPARATION) {
        return Err(UmpbtError::DegenerateSeparation {
            separation: sep.abs(),
            minimum: MIN_SEPARATION,
        });
    }
    let n = n as f64;
    Ok((gamma.ln() + n * (family.log_partition(theta) - family.log_partition(theta0))) / sep)
}

/// g_γ(θ, θ₀) for a validated test specification.
pub fn g_gamma(family: &FamilyDescriptor, theta: f64, spec: &TestSpec) -> Result<f64> {
    objective_value(family, theta, spec.theta0, spec.n, spec.gamma)
}

/// Rejection region of the point alternative `theta1` at threshold γ.
pub fn rejection_region(family: &FamilyDescriptor, theta1: f64, spec: &TestSpec) -> Result<RejectionRegion> {
    let c = g_gamma(family, theta1, spec)?;
    let side = if family.eta(theta1) > family.eta(spec.theta0) {
        RegionSide::Above
    } else {
        RegionSide::Below
    };
    Ok(RejectionRegion {
        side,
        critical_value: c,
    })
}

fn check_spec(family: &FamilyDescriptor, spec: &TestSpec) -> Result<()> {
    family.check_theta(spec.theta0)?;
    if let Some(p) = &family.params {
        p.check_spec(spec)?;
    }
    Ok(())
}

/// Search context on the admissible side, parameterized by the distance
/// `d > 0` from the null.
struct SideSearch<'a> {
    family: &'a FamilyDescriptor,
    spec: &'a TestSpec,
    uv: f64,
    v: f64,
    limit: f64,
    scale: f64,
}

impl<'a> SideSearch<'a> {
    fn new(family: &'a FamilyDescriptor, spec: &'a TestSpec) -> Self {
        let v = spec.direction.sign();
        Self {
            family,
            spec,
            uv: family.u() * v,
            v,
            limit: family.room(spec.theta0, spec.direction),
            scale: spec.theta0.abs().max(1.0),
        }
    }

    fn theta(&self, d: f64) -> f64 {
        self.spec.theta0 + self.v * d
    }

    /// u·v·g_γ at distance d, +inf where undefined.
    fn f(&self, d: f64) -> f64 {
        match g_gamma(self.family, self.theta(d), self.spec) {
            Ok(g) => self.uv * g,
            Err(_) => f64::INFINITY,
        }
    }

    /// Sign-carrying derivative of f along d: u · [N'D − N D'].
    fn slope(&self, d: f64) -> Option<f64> {
        let fam = self.family;
        let th = self.theta(d);
        let th0 = self.spec.theta0;
        let n = self.spec.n as f64;
        let numer = self.spec.log_gamma() + n * (fam.log_partition(th) - fam.log_partition(th0));
        let denom = fam.eta(th) - fam.eta(th0);
        let h = n * fam.log_partition_prime(th)? * denom - fam.eta_prime(th)? * numer;
        Some(fam.u() * h)
    }

    fn start(&self) -> f64 {
        1e-4 * self.scale
    }

    fn gap_tol(&self) -> f64 {
        1e-13 * self.scale
    }

    fn x_tol(&self) -> f64 {
        1e-10 * self.scale
    }
}

/// Finds the UMPBT(γ) point alternative.
pub fn solve_umpbt(family: &FamilyDescriptor, spec: &TestSpec) -> Result<UmpbtSolution> {
    check_spec(family, spec)?;
    let search = SideSearch::new(family, spec);
    if !(search.limit > 0.0) {
        return domain("no admissible values on the requested side of θ₀");
    }

    let d_star = match optimize::expand_bracket(|d| search.f(d), search.start(), search.limit, search.gap_tol()) {
        Bracket::Found { lo, mid: _, hi } => {
            let polished = if family.has_derivatives() {
                optimize::bisect_root(|d| search.slope(d).unwrap_or(f64::NAN), lo, hi)
            } else {
                None
            };
            polished.unwrap_or_else(|| optimize::golden_section(|d| search.f(d), lo, hi, search.x_tol()).0)
        }
        Bracket::Monotone { last, value } => {
            return monotone_outcome(family, spec, &search, last, value);
        }
    };

    let theta_star = search.theta(d_star);
    finish_solution(family, spec, &search, theta_star)
}

fn finish_solution(
    family: &FamilyDescriptor,
    spec: &TestSpec,
    search: &SideSearch<'_>,
    theta_star: f64,
) -> Result<UmpbtSolution> {
    let region = rejection_region(family, theta_star, spec)?;
    let attainable = attainability_check(family, spec, theta_star);
    let (region_boundary, equivalence_interval, equivalence_note) = if family.discrete_sample_space && attainable {
        let k = region.boundary_integer();
        let interval = theta_equivalence_interval(family, search, theta_star, region);
        let note = format!(
            "every alternative θ₁ in ({:.6}, {:.6}) induces the same rejection region ΣT {} {}",
            interval.0,
            interval.1,
            if region.side == RegionSide::Above { ">=" } else { "<=" },
            k
        );
        (Some(k), Some(interval), Some(note))
    } else if family.discrete_sample_space {
        (
            None,
            None,
            Some("no statistic value yields a Bayes factor above γ; every alternative is equally (un)powerful".into()),
        )
    } else {
        (None, None, None)
    };
    Ok(UmpbtSolution {
        theta_star,
        objective: region.critical_value,
        critical_value: region.critical_value,
        region,
        attainable,
        region_boundary,
        equivalence_interval,
        equivalence_note,
    })
}

fn monotone_outcome(
    family: &FamilyDescriptor,
    spec: &TestSpec,
    search: &SideSearch<'_>,
    last: f64,
    value: f64,
) -> Result<UmpbtSolution> {
    let boundary = search.theta(search.limit);
    let theta_last = search.theta(last);
    if family.discrete_sample_space && family.in_support(theta_last) && !attainability_check(family, spec, theta_last) {
        // The infimum still leaves the region empty: no alternative can
        // reach γ, so the best point found is as good as any other.
        return finish_solution(family, spec, search, theta_last);
    }
    Err(UmpbtError::NoInteriorMinimum {
        boundary,
        limit: search.uv * value,
    })
}

/// Maximal θ-interval around θ* whose rejection region equals that of θ*.
fn theta_equivalence_interval(
    family: &FamilyDescriptor,
    search: &SideSearch<'_>,
    theta_star: f64,
    region: RejectionRegion,
) -> (f64, f64) {
    let _ = family;
    let d_star = (theta_star - search.spec.theta0).abs();
    let f_star = search.uv * region.critical_value;
    let level = f_star.floor() + 1.0;
    let excess = |d: f64| search.f(d) - level;

    // toward the null, f blows up
    let mut near = d_star;
    for _ in 0..2000 {
        near *= 0.5;
        if excess(near) > 0.0 {
            break;
        }
    }
    let d_lo = optimize::bisect_root(excess, near, d_star).unwrap_or(near);

    // away from the null, f may or may not climb past the level
    let d_hi = match optimize::expand_sign_change(
        |d| excess(d_star + d),
        (d_star * 1e-3).max(1e-12),
        search.limit - d_star,
        search.gap_tol(),
    ) {
        Some((a, b)) => optimize::bisect_root(|d| excess(d_star + d), a, b).map_or(d_star + b, |r| d_star + r),
        None => search.limit,
    };
    let (a, b) = (search.theta(d_lo), search.theta(d_hi));
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Whether any point of the sample space yields BF₁₀ > γ under the point
/// alternative `theta_star`.
///
/// Discrete families are decided by exact evaluation at the extreme
/// statistic value on the rejecting side; continuous families by comparing
/// the critical value with the open statistic range.
pub fn attainability_check(family: &FamilyDescriptor, spec: &TestSpec, theta_star: f64) -> bool {
    let Ok(region) = rejection_region(family, theta_star, spec) else {
        return false;
    };
    let (lo, hi) = family.statistic_range(spec.n);
    if family.discrete_sample_space {
        let extreme = match region.side {
            RegionSide::Above => hi,
            RegionSide::Below => lo,
        };
        if extreme.is_infinite() {
            return true;
        }
        evidence::log_bf_point(family, theta_star, spec.theta0, extreme, spec.n)
            .map(|lbf| lbf > spec.log_gamma())
            .unwrap_or(false)
    } else {
        match region.side {
            RegionSide::Above => region.critical_value < hi,
            RegionSide::Below => region.critical_value > lo,
        }
    }
}

/// Range `[γ_lo, γ_hi)` of evidence thresholds whose UMPBT(γ) induces the
/// same rejection region as UMPBT(spec.gamma). Discrete families only.
///
/// Writing the region as `{ΣT ≥ k}` (or `{ΣT ≤ k}`), the boundary value `k`
/// stays inside iff γ is below the largest Bayes factor any alternative on
/// the admissible side can give at `k`, and the next value outward stays
/// outside iff γ is at least the largest Bayes factor attainable there. Both
/// suprema are restricted-MLE likelihood ratios.
pub fn gamma_equivalence_interval(family: &FamilyDescriptor, spec: &TestSpec) -> Result<Option<(f64, f64)>> {
    if !family.discrete_sample_space {
        return Ok(None);
    }
    let sol = solve_umpbt(family, spec)?;
    let (lo, hi) = family.statistic_range(spec.n);
    let sup_bf = |t: f64| -> Result<f64> {
        if t < lo || t > hi {
            return Ok(1.0);
        }
        let (_, lmin) = evidence::min_null_likelihood_ratio(family, t, spec.n, spec.theta0, spec.direction)?;
        Ok((1.0 / lmin).max(1.0))
    };
    let outward = match sol.region.side {
        RegionSide::Above => 1.0,
        RegionSide::Below => -1.0,
    };
    if !sol.attainable {
        let extreme = if outward > 0.0 { hi } else { lo };
        return Ok(Some((sup_bf(extreme)?, f64::INFINITY)));
    }
    let k = sol.region.boundary_integer() as f64;
    let gamma_hi = sup_bf(k)?;
    let gamma_lo = sup_bf(k - outward)?;
    Ok(Some((gamma_lo, gamma_hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_family, FamilyParams};

    fn binomial() -> FamilyDescriptor {
        make_family(&FamilyParams::binomial()).unwrap()
    }

    #[test]
    fn spec_rejects_small_gamma() {
        assert!(TestSpec::new(0.3, Direction::Greater, 10, 1.0).is_err());
        assert!(TestSpec::new(0.3, Direction::Greater, 10, 0.5).is_err());
        assert!(TestSpec::new(0.3, Direction::Greater, 0, 3.0).is_err());
        assert!(TestSpec::new(0.3, Direction::Greater, 10, 1.0001).is_ok());
    }

    #[test]
    fn poisson_objective_at_e() {
        let fam = make_family(&FamilyParams::poisson()).unwrap();
        let g = objective_value(&fam, std::f64::consts::E, 1.0, 1, 1.0).unwrap();
        assert!((g - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn objective_guards_near_null() {
        let fam = binomial();
        let spec = TestSpec::new(0.3, Direction::Greater, 10, 3.0).unwrap();
        assert!(matches!(
            g_gamma(&fam, 0.3, &spec),
            Err(UmpbtError::DegenerateSeparation { .. })
        ));
        assert!(matches!(g_gamma(&fam, 1.2, &spec), Err(UmpbtError::Domain(_))));
    }

    #[test]
    fn binomial_phase_two_example() {
        let fam = binomial();
        let spec = TestSpec::new(0.3, Direction::Greater, 10, 3.0).unwrap();
        let sol = solve_umpbt(&fam, &spec).unwrap();
        // mpmath root of dg/dp = 0
        assert!((sol.theta_star - 0.525_265_390_719_476_8).abs() < 1e-12);
        assert!((sol.critical_value - 5.252_653_907_194_768).abs() < 1e-10);
        assert_eq!(sol.region.side, RegionSide::Above);
        assert_eq!(sol.region_boundary, Some(6));
        assert!(sol.attainable);
        let (a, b) = sol.equivalence_interval.unwrap();
        assert!(a < sol.theta_star && sol.theta_star < b);
        // boundary alternatives put g exactly at the next integer
        assert!((g_gamma(&fam, a, &spec).unwrap() - 6.0).abs() < 1e-9);
        assert!((g_gamma(&fam, b, &spec).unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn unattainable_binomial_returns_flagged_solution() {
        let fam = binomial();
        let spec = TestSpec::new(0.5, Direction::Greater, 1, 10.0).unwrap();
        let sol = solve_umpbt(&fam, &spec).unwrap();
        assert!(!sol.attainable);
        assert!(sol.theta_star > 0.5);
        assert!(sol.equivalence_note.is_some());
    }

    #[test]
    fn less_direction_binomial() {
        let fam = binomial();
        let spec = TestSpec::new(0.7, Direction::Less, 10, 3.0).unwrap();
        let sol = solve_umpbt(&fam, &spec).unwrap();
        // mirror image of the p0 = 0.3 greater test
        assert!((sol.theta_star - (1.0 - 0.525_265_390_719_476_8)).abs() < 1e-12);
        assert_eq!(sol.region.side, RegionSide::Below);
        assert_eq!(sol.region_boundary, Some(4));
    }

    #[test]
    fn golden_only_path_without_derivatives() {
        let fam = FamilyDescriptor::new(
            "bernoulli-no-derivs",
            |p: f64| (p / (1.0 - p)).ln(),
            |p: f64| -(1.0 - p).ln(),
            (0.0, 1.0),
            true,
        )
        .with_statistic(SuffStatKind::Count, (0.0, 1.0), true);
        assert!(!fam.has_derivatives());
        let spec = TestSpec::new(0.3, Direction::Greater, 10, 3.0).unwrap();
        let sol = solve_umpbt(&fam, &spec).unwrap();
        assert!((sol.theta_star - 0.525_265_390_719_476_8).abs() < 1e-6);
    }

    #[test]
    fn no_interior_minimum_is_reported() {
        // g = log γ / η(θ) − ... with A ≡ 0 decreases forever on (0, ∞)
        let fam = FamilyDescriptor::new("flat", |t: f64| t, |_t: f64| 0.0, (f64::NEG_INFINITY, f64::INFINITY), true);
        let spec = TestSpec::new(0.0, Direction::Greater, 1, 3.0).unwrap();
        assert!(matches!(
            solve_umpbt(&fam, &spec),
            Err(UmpbtError::NoInteriorMinimum { .. })
        ));
    }

    #[test]
    fn gamma_equivalence_for_phase_two_design() {
        let fam = binomial();
        let spec = TestSpec::new(0.3, Direction::Greater, 10, 3.0).unwrap();
        let (lo, hi) = gamma_equivalence_interval(&fam, &spec).unwrap().unwrap();
        // (0.5/0.3)^5 (0.5/0.7)^5 and (0.6/0.3)^6 (0.4/0.7)^4
        let expect_lo = (0.5f64 / 0.3).powi(5) * (0.5f64 / 0.7).powi(5);
        let expect_hi = 2f64.powi(6) * (0.4f64 / 0.7).powi(4);
        assert!((lo - expect_lo).abs() < 1e-9, "{lo}");
        assert!((hi - expect_hi).abs() < 1e-9, "{hi}");
    }

    #[test]
    fn eta_monotonicity_of_catalog() {
        for p in FamilyParams::catalog_defaults() {
            let fam = make_family(&p).unwrap();
            assert!(fam.eta_is_monotone(200), "{}", fam.name);
        }
    }
}
