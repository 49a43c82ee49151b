//! UMPBT alternatives for the last coefficient of a normal linear model.
//!
//! The first p−1 coefficients are nuisance parameters with a N(0, σ²S)
//! prior under both hypotheses. Integrating them out leaves everything in
//! terms of
//!
//! ```text
//! F = X₋ₚ'X₋ₚ + S⁻¹,   H = X₋ₚ F⁻¹ X₋ₚ',   R = y'(I−H)y
//! ```
//!
//! and the tested column enters only through xₚ'(I−H)xₚ and xₚ'(I−H)y.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, UmpbtError};
use crate::expfam::Direction;

/// Largest accepted eigenvalue ratio of F.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative tolerance for rank and degenerate-column checks.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceModel {
    Known { sigma2: f64 },
    /// Inverse-gamma(α, λ) prior on σ².
    InverseGamma { alpha: f64, lambda: f64 },
}

impl VarianceModel {
    fn validate(&self) -> Result<()> {
        match *self {
            VarianceModel::Known { sigma2 } if !(sigma2 > 0.0 && sigma2.is_finite()) => {
                domain(format!("σ² must be positive, got {sigma2}"))
            }
            VarianceModel::InverseGamma { alpha, lambda }
                if !(alpha >= 0.0 && lambda >= 0.0 && alpha.is_finite() && lambda.is_finite()) =>
            {
                domain(format!("inverse-gamma parameters must be non-negative, got ({alpha}, {lambda})"))
            }
            _ => Ok(()),
        }
    }
}

/// Design, response, nuisance prior and variance model.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    /// S⁻¹, (p−1)×(p−1).
    s_inv: DMatrix<f64>,
    variance: VarianceModel,
}

impl RegressionProblem {
    /// `s` is the (p−1)×(p−1) symmetric positive-definite prior scale.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, s: DMatrix<f64>, variance: VarianceModel) -> Result<Self> {
        let q = x.ncols().saturating_sub(1);
        if s.nrows() != q || s.ncols() != q {
            return Err(UmpbtError::Param(format!(
                "prior scale S must be {q}×{q}, got {}×{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let s_inv = if q == 0 {
            DMatrix::zeros(0, 0)
        } else {
            if !is_symmetric(&s) {
                return Err(UmpbtError::Param("prior scale S must be symmetric".into()));
            }
            let chol = Cholesky::new(s)
                .ok_or_else(|| UmpbtError::Param("prior scale S must be positive definite".into()))?;
            chol.inverse()
        };
        Self::with_prior_precision(x, y, s_inv, variance)
    }

    /// Same as [`RegressionProblem::new`] but takes S⁻¹ directly; a zero
    /// matrix gives the flat-prior limit in which H is the orthogonal
    /// projector onto the nuisance columns.
    pub fn with_prior_precision(
        x: DMatrix<f64>,
        y: DVector<f64>,
        s_inv: DMatrix<f64>,
        variance: VarianceModel,
    ) -> Result<Self> {
        variance.validate()?;
        let (n, p) = x.shape();
        if p == 0 {
            return Err(UmpbtError::Param("design matrix has no columns".into()));
        }
        if y.len() != n {
            return Err(UmpbtError::Param(format!("y has {} rows, X has {n}", y.len())));
        }
        let needs_residual_df = matches!(variance, VarianceModel::InverseGamma { .. });
        if n < p || (n == p && needs_residual_df) {
            let bound = if needs_residual_df { "n > p" } else { "n ≥ p" };
            return Err(UmpbtError::RankDeficient(format!("need {bound}, got n = {n}, p = {p}")));
        }
        if s_inv.nrows() != p - 1 || s_inv.ncols() != p - 1 {
            return Err(UmpbtError::Param(format!("prior precision must be {0}×{0}", p - 1)));
        }
        if x.iter().chain(y.iter()).chain(s_inv.iter()).any(|v| !v.is_finite()) {
            return domain("non-finite entry in the regression inputs");
        }
        let nuisance = x.columns(0, p - 1).into_owned();
        if p > 1 && column_rank(&nuisance) < p - 1 {
            return Err(UmpbtError::RankDeficient("nuisance columns are linearly dependent".into()));
        }
        // tested column in the span of the nuisance columns
        let xp = x.column(p - 1).into_owned();
        let resid = residual_from_span(&nuisance, &xp);
        let xx = xp.dot(&xp);
        if !(resid > RANK_TOL * xx.max(f64::MIN_POSITIVE)) {
            return Err(UmpbtError::DegenerateColumn { quadratic_form: resid });
        }
        Ok(Self { x, y, s_inv, variance })
    }

    /// Nuisance prior of g-prior shape, S = c (X₋ₚ'X₋ₚ)⁻¹.
    pub fn with_g_prior(x: DMatrix<f64>, y: DVector<f64>, c: f64, variance: VarianceModel) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("g-prior scale must be positive, got {c}"));
        }
        let p = x.ncols();
        let s_inv = if p > 1 {
            let xm = x.columns(0, p - 1);
            (xm.transpose() * xm) / c
        } else {
            DMatrix::zeros(0, 0)
        };
        Self::with_prior_precision(x, y, s_inv, variance)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn variance(&self) -> VarianceModel {
        self.variance
    }

    pub fn tested_column(&self) -> DVector<f64> {
        self.x.column(self.p() - 1).into_owned()
    }

    pub fn nuisance_columns(&self) -> DMatrix<f64> {
        self.x.columns(0, self.p() - 1).into_owned()
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.y
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= 1e-12 * scale))
}

fn column_rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Squared norm of the residual of `v` after least-squares projection on
/// the columns of `m`.
fn residual_from_span(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    if m.ncols() == 0 {
        return v.dot(v);
    }
    let svd = m.clone().svd(true, true);
    let fit = svd.solve(v, RANK_TOL).expect("svd computed with both factors");
    let r = v - m * fit;
    r.dot(&r)
}

/// F, H and R of the null model.
#[derive(Debug, Clone)]
pub struct ProjectionParts {
    pub f: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub r: f64,
}

pub fn projection_parts(problem: &RegressionProblem) -> Result<ProjectionParts> {
    let n = problem.n();
    let xm = problem.nuisance_columns();
    if xm.ncols() == 0 {
        return Ok(ProjectionParts {
            f: DMatrix::zeros(0, 0),
            h: DMatrix::zeros(n, n),
            r: problem.y.dot(&problem.y),
        });
    }
    let f = xm.transpose() * &xm + &problem.s_inv;
    let eig = SymmetricEigen::new(f.clone()).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(UmpbtError::SingularMatrix { condition });
    }
    let chol: Cholesky<f64, Dyn> = Cholesky::new(f.clone()).ok_or(UmpbtError::SingularMatrix { condition })?;
    // H = X₋ₚ F⁻¹ X₋ₚ' via a triangular solve
    let finv_xt = chol.solve(&xm.transpose());
    let mut h = &xm * finv_xt;
    h = (&h + h.transpose()) * 0.5;
    let resid = &problem.y - &h * &problem.y;
    let r = problem.y.dot(&resid);
    Ok(ProjectionParts { f, h, r })
}

/// xₚ'(I−H)xₚ.
pub fn tested_quadratic_form(problem: &RegressionProblem, parts: &ProjectionParts) -> f64 {
    let xp = problem.tested_column();
    xp.dot(&(&xp - &parts.h * &xp))
}

/// xₚ'(I−H)y.
pub fn tested_cross_product(problem: &RegressionProblem, parts: &ProjectionParts) -> f64 {
    let xp = problem.tested_column();
    xp.dot(&(&problem.y - &parts.h * &problem.y))
}

/// s²ₚ = (y'(I−H)y + 2λ)/(n + 2α).
pub fn residual_mean_square(problem: &RegressionProblem, parts: &ProjectionParts) -> Result<f64> {
    match problem.variance {
        VarianceModel::InverseGamma { alpha, lambda } => Ok((parts.r + 2.0 * lambda) / (problem.n() as f64 + 2.0 * alpha)),
        VarianceModel::Known { .. } => Err(UmpbtError::Param(
            "residual mean square needs the inverse-gamma variance model".into(),
        )),
    }
}

fn checked_log_gamma(gamma: f64) -> Result<f64> {
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return domain(format!("γ must be finite and at least 1, got {gamma}"));
    }
    Ok(gamma.ln())
}

fn beta_from_variance(variance: f64, gamma: f64, q: f64, direction: Direction) -> Result<f64> {
    let lg = checked_log_gamma(gamma)?;
    if !(q > 0.0) {
        return Err(UmpbtError::DegenerateColumn { quadratic_form: q });
    }
    Ok(direction.sign() * (2.0 * variance * lg / q).sqrt())
}

/// β*ₚ = ±√(2σ² log γ / xₚ'(I−H)xₚ) with σ² known.
pub fn beta_star_known_var(problem: &RegressionProblem, gamma: f64, direction: Direction) -> Result<f64> {
    let VarianceModel::Known { sigma2 } = problem.variance else {
        return Err(UmpbtError::Param("known-variance UMPBT needs sigma2".into()));
    };
    let parts = projection_parts(problem)?;
    let q = checked_quadratic_form(problem, &parts)?;
    beta_from_variance(sigma2, gamma, q, direction)
}

/// β*ₚ with s²ₚ substituted for σ² (inverse-gamma prior on σ²).
pub fn beta_star_unknown_var(problem: &RegressionProblem, gamma: f64, direction: Direction) -> Result<f64> {
    let parts = projection_parts(problem)?;
    let s2 = residual_mean_square(problem, &parts)?;
    if !(s2 > 0.0) {
        return domain("residual mean square is zero");
    }
    let q = checked_quadratic_form(problem, &parts)?;
    beta_from_variance(s2, gamma, q, direction)
}

fn checked_quadratic_form(problem: &RegressionProblem, parts: &ProjectionParts) -> Result<f64> {
    let q = tested_quadratic_form(problem, parts);
    let xp = problem.tested_column();
    if !(q > RANK_TOL * xp.dot(&xp)) {
        return Err(UmpbtError::DegenerateColumn { quadratic_form: q });
    }
    Ok(q)
}

/// Regression UMPBT with the pieces reported alongside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionSolution {
    pub beta_star: f64,
    pub quadratic_form: f64,
    pub cross_product: f64,
    pub residual_form: f64,
    /// σ² when known, s²ₚ otherwise.
    pub variance_used: f64,
    pub log_bf10: f64,
}

pub fn solve_regression(problem: &RegressionProblem, gamma: f64, direction: Direction) -> Result<RegressionSolution> {
    let parts = projection_parts(problem)?;
    let q = checked_quadratic_form(problem, &parts)?;
    let cross = tested_cross_product(problem, &parts);
    let (variance, beta) = match problem.variance {
        VarianceModel::Known { sigma2 } => (sigma2, beta_from_variance(sigma2, gamma, q, direction)?),
        VarianceModel::InverseGamma { .. } => {
            let s2 = residual_mean_square(problem, &parts)?;
            if !(s2 > 0.0) {
                return domain("residual mean square is zero");
            }
            (s2, beta_from_variance(s2, gamma, q, direction)?)
        }
    };
    let log_bf10 = regression_log_bf(problem, &parts, beta)?;
    Ok(RegressionSolution {
        beta_star: beta,
        quadratic_form: q,
        cross_product: cross,
        residual_form: parts.r,
        variance_used: variance,
        log_bf10,
    })
}

/// Exact log BF₁₀ of H₁: βₚ = `beta` against H₀: βₚ = 0.
///
/// Known σ²: −[β² q − 2β xₚ'(I−H)y]/(2σ²). Inverse-gamma σ²:
/// −(n/2+α) log(1 + [β² q − 2β xₚ'(I−H)y]/R₀) with R₀ = R + 2λ.
pub fn regression_log_bf(problem: &RegressionProblem, parts: &ProjectionParts, beta: f64) -> Result<f64> {
    let q = tested_quadratic_form(problem, parts);
    let cross = tested_cross_product(problem, parts);
    let quad = beta * beta * q - 2.0 * beta * cross;
    match problem.variance {
        VarianceModel::Known { sigma2 } => Ok(-quad / (2.0 * sigma2)),
        VarianceModel::InverseGamma { alpha, lambda } => {
            let r0 = parts.r + 2.0 * lambda;
            if !(r0 > 0.0) {
                return domain("R₀ must be positive");
            }
            let ratio = 1.0 + quad / r0;
            if !(ratio > 0.0) {
                return domain("Bayes factor base is not positive");
            }
            Ok(-(problem.n() as f64 / 2.0 + alpha) * ratio.ln())
        }
    }
}

/// s² = (Σ(xᵢ−x̄)² + 2λ)/(n+2α).
pub fn pooled_variance(data: &[f64], alpha: f64, lambda: f64) -> Result<f64> {
    if data.len() < 2 {
        return domain("need at least two observations");
    }
    if !(alpha >= 0.0 && lambda >= 0.0) {
        return domain(format!("inverse-gamma parameters must be non-negative, got ({alpha}, {lambda})"));
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let ss: f64 = data.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok((ss + 2.0 * lambda) / (n + 2.0 * alpha))
}

/// Data-dependent normal-mean alternative μ₀ ± s√(2 log γ / n) for unknown σ².
pub fn data_dependent_normal_alternative(
    data: &[f64],
    mu0: f64,
    gamma: f64,
    alpha: f64,
    lambda: f64,
    direction: Direction,
) -> Result<f64> {
    let lg = checked_log_gamma(gamma)?;
    let s2 = pooled_variance(data, alpha, lambda)?;
    if !(s2 > 0.0) {
        return domain("s² is zero (constant data with λ = 0)");
    }
    Ok(mu0 + direction.sign() * (s2 * 2.0 * lg / data.len() as f64).sqrt())
}

/// Exact log BF₁₀ for H₁: μ = μ₁ against H₀: μ = μ₀ with an inverse-gamma
/// prior on σ²: (n/2+α) log[(Σ(xᵢ−μ₀)² + 2λ)/(Σ(xᵢ−μ₁)² + 2λ)].
pub fn unknown_variance_normal_log_bf(data: &[f64], mu0: f64, mu1: f64, alpha: f64, lambda: f64) -> Result<f64> {
    if data.is_empty() {
        return domain("no observations");
    }
    let ss = |m: f64| data.iter().map(|x| (x - m) * (x - m)).sum::<f64>() + 2.0 * lambda;
    let (s0, s1) = (ss(mu0), ss(mu1));
    if !(s0 > 0.0 && s1 > 0.0) {
        return domain("degenerate sums of squares");
    }
    Ok((data.len() as f64 / 2.0 + alpha) * (s0 / s1).ln())
}
