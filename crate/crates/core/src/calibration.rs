//! Calibration between classical one-sided z-tests and UMPBTs.
//!
//! For a normal mean with known variance the UMPBT(γ) rejection region
//! coincides with that of the level-α UMPT exactly when γ = exp(z_α²/2), and
//! the UMPBT alternative then sits on the UMPT rejection boundary
//! μ₀ + z_α σ/√n. Everything here is one-sided; two-sided p-values must be
//! halved by the caller.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{domain, Result};
use crate::evidence::EvidenceReport;

/// Evidence thresholds above this get a note in [`calibration_warnings`].
pub const LARGE_GAMMA_NOTE_THRESHOLD: f64 = 1e5;

/// Φ(z).
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// 1 − Φ(z), accurate in the far upper tail.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Φ⁻¹(p).
///
/// Acklam's rational approximation (relative error about 1.15e-9) followed by
/// one Halley step against the erfc-based cdf.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("quantile requires p in (0, 1), got {p}"));
    }
    if p > 0.5 {
        // work in the lower tail where 1 − p carries full precision
        return Ok(-lower_tail_quantile(1.0 - p));
    }
    Ok(lower_tail_quantile(p))
}

/// z_α: the upper-α point of the standard normal.
pub fn upper_quantile(alpha: f64) -> Result<f64> {
    Ok(-std_normal_quantile(alpha)?)
}

fn lower_tail_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    // Halley refinement
    let e = std_normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// A matched (α, z_α, γ) triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub alpha: f64,
    pub z_alpha: f64,
    pub gamma: f64,
    /// UMPBT alternative offset from μ₀ in σ/√n units (equals z_α).
    pub mu1_offset: f64,
}

impl CalibrationPoint {
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        let gamma = gamma_from_alpha(alpha)?;
        let z_alpha = upper_quantile(alpha)?;
        Ok(Self {
            alpha,
            z_alpha,
            gamma,
            mu1_offset: z_alpha,
        })
    }

    pub fn from_gamma(gamma: f64) -> Result<Self> {
        let alpha = alpha_from_gamma(gamma)?;
        let z_alpha = (2.0 * gamma.ln()).sqrt();
        Ok(Self {
            alpha,
            z_alpha,
            gamma,
            mu1_offset: z_alpha,
        })
    }
}

/// γ = exp(z_α²/2) for a one-sided level α < 0.5.
pub fn gamma_from_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return domain(format!("one-sided α must lie in (0, 0.5), got {alpha}"));
    }
    let z = upper_quantile(alpha)?;
    Ok((0.5 * z * z).exp())
}

/// α = 1 − Φ(√(2 log γ)).
pub fn alpha_from_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return domain(format!("γ must exceed 1, got {gamma}"));
    }
    Ok(std_normal_sf((2.0 * gamma.ln()).sqrt()))
}

/// log γ = z²/2 for a z-statistic threshold.
pub fn log_gamma_from_z(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return domain(format!("z must be finite, got {z}"));
    }
    Ok(0.5 * z * z)
}

/// γ = exp(z²/2) for a z-statistic threshold.
pub fn gamma_from_z(z: f64) -> Result<f64> {
    Ok(log_gamma_from_z(z)?.exp())
}

/// μ₀ + z_α σ/√n: the boundary of the UMPT rejection region, which is also
/// the UMPBT alternative at the matched γ.
pub fn umpt_boundary_alternative(mu0: f64, sigma: f64, n: u64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("α must lie in (0, 1), got {alpha}"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) || n == 0 || !mu0.is_finite() {
        return domain("require finite μ₀, σ > 0 and n ≥ 1");
    }
    Ok(mu0 + upper_quantile(alpha)? * sigma / (n as f64).sqrt())
}

/// Rejection boundary for x̄ of the UMPBT(γ) normal-mean test,
/// σ² log γ / (n(μ₁−μ₀)) + (μ₁+μ₀)/2 with μ₁ = μ₀ + σ√(2 log γ/n).
pub fn umpbt_xbar_boundary(mu0: f64, sigma: f64, n: u64, gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return domain(format!("γ must exceed 1, got {gamma}"));
    }
    let nf = n as f64;
    let mu1 = crate::families::normal_mean_alternative(mu0, sigma, n, gamma, crate::expfam::Direction::Greater)?;
    Ok(sigma * sigma * gamma.ln() / (nf * (mu1 - mu0)) + 0.5 * (mu1 + mu0))
}

/// log BF₁₀ of the z-test UMPBT designed at level `design_alpha`, for an
/// observed one-sided p-value: z·z_d − z_d²/2.
pub fn p_value_log_bf(p: f64, design_alpha: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p-value must lie in (0, 1), got {p}"));
    }
    if !(design_alpha > 0.0 && design_alpha < 0.5) {
        return domain(format!("design α must lie in (0, 0.5), got {design_alpha}"));
    }
    let z = upper_quantile(p)?;
    let zd = upper_quantile(design_alpha)?;
    Ok(z * zd - 0.5 * zd * zd)
}

/// Posterior null probability implied by a one-sided p-value under the
/// UMPBT matched to a level-`design_alpha` test.
pub fn p_value_to_posterior(p: f64, design_alpha: f64, prior_odds_null: f64) -> Result<f64> {
    let lbf = p_value_log_bf(p, design_alpha)?;
    Ok(EvidenceReport::from_log_bf(lbf, prior_odds_null)?.posterior_null)
}

/// γ = exp(c·n).
pub fn gamma_schedule(c: f64, n: u64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return domain(format!("schedule coefficient c must be positive, got {c}"));
    }
    Ok((c * n as f64).exp())
}

/// c = log(γ₀)/n₀: the coefficient that reproduces γ₀ at sample size n₀.
pub fn schedule_coefficient(gamma0: f64, n0: u64) -> Result<f64> {
    if !(gamma0 > 1.0 && gamma0.is_finite()) {
        return domain(format!("γ₀ must exceed 1, got {gamma0}"));
    }
    if n0 == 0 {
        return domain("n₀ must be at least 1");
    }
    Ok(gamma0.ln() / n0 as f64)
}

/// Notes attached to calibration outputs.
pub fn calibration_warnings(gamma: f64) -> Vec<String> {
    let mut out = Vec::new();
    if gamma > LARGE_GAMMA_NOTE_THRESHOLD {
        out.push(format!(
            "γ = {gamma:.6e} (log γ = {:.6}); for the 5-sigma rule exp(12.5) = 268337.29, an order of magnitude above the ≈27,000 figure sometimes quoted for it",
            gamma.ln()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_and_quantile_examples() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_quantile(0.95).unwrap() - 1.644_853_626_951_472_2).abs() < 1e-12);
        // mpmath: 3.0902323061678135415
        assert!((std_normal_quantile(0.999).unwrap() - 3.090_232_306_167_813_5).abs() < 1e-12);
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
    }

    #[test]
    fn quantile_inverts_cdf_on_wide_range() {
        for i in 1..400 {
            let z = -8.0 + 16.0 * i as f64 / 400.0;
            // invert through the tail that holds the precision
            let back = if z <= 0.0 {
                std_normal_quantile(std_normal_cdf(z)).unwrap()
            } else {
                upper_quantile(std_normal_sf(z)).unwrap()
            };
            assert!((back - z).abs() < 1e-9, "z = {z}: {back}");
        }
    }

    #[test]
    fn gamma_alpha_examples() {
        assert!((gamma_from_alpha(0.05).unwrap() - 3.87).abs() < 5e-3);
        assert!((gamma_from_alpha(0.01).unwrap() - 14.968_488_362_247_71).abs() < 1e-9);
        let g = gamma_from_alpha(std_normal_sf(5.0)).unwrap();
        assert!((g.ln() - 12.5).abs() < 1e-9);
        assert!((alpha_from_gamma(16.0).unwrap() - 0.0093).abs() < 5e-5);
        assert!((alpha_from_gamma(64.0).unwrap() - 0.0020).abs() < 5e-5);
        assert!((alpha_from_gamma(4.0).unwrap() - 0.048).abs() < 5e-4);
        assert!(gamma_from_alpha(0.5).is_err());
        assert!(alpha_from_gamma(1.0).is_err());
    }

    #[test]
    fn boundary_alternative_examples() {
        let m = umpt_boundary_alternative(0.0, 1.0, 10_000, 0.01).unwrap();
        assert!((m - 0.0233).abs() < 5e-5);
        let m = umpt_boundary_alternative(0.0, 1.0, 1, 0.05).unwrap();
        assert!((m - 1.645).abs() < 5e-4);
        assert!(umpt_boundary_alternative(3.0, 1.0, 4, 0.5).unwrap().abs() - 3.0 < 1e-15);
    }

    #[test]
    fn p_value_posterior_examples() {
        let post = p_value_to_posterior(0.01, 0.05, 1.0).unwrap();
        assert!((post - 0.0777).abs() < 5e-4, "{post}");
        let at_boundary = p_value_to_posterior(0.05, 0.05, 1.0).unwrap();
        let g = gamma_from_alpha(0.05).unwrap();
        assert!((at_boundary - 1.0 / (1.0 + g)).abs() < 1e-12);
        let lbf = p_value_log_bf(0.001, 0.01).unwrap();
        assert!((lbf.exp() - 88.5).abs() < 0.05);
        assert!((p_value_to_posterior(0.001, 0.01, 1.0).unwrap() - 0.0112).abs() < 5e-5);
    }

    #[test]
    fn schedule_examples() {
        let c = 4f64.ln() / 100.0;
        assert!((gamma_schedule(c, 200).unwrap() - 16.0).abs() < 1e-12);
        assert!((gamma_schedule(c, 300).unwrap() - 64.0).abs() < 1e-12);
        assert_eq!(gamma_schedule(c, 0).unwrap(), 1.0);
        assert!((schedule_coefficient(4.0, 100).unwrap() - 0.0139).abs() < 5e-5);
        assert!(gamma_schedule(0.0, 10).is_err());
    }

    #[test]
    fn warnings_only_for_large_gamma() {
        assert!(calibration_warnings(3.87).is_empty());
        let w = calibration_warnings(12.5f64.exp());
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("268337"));
    }
}
