//! Tranche pricing with certified error brackets.
//!
//! The expected tranche loss is `((1-R)/n) E[(W_n - z)^+]` with
//! `z = n z* / (1-R)`. Replacing the exact default-count law by its fitted
//! binomial moves any such call expectation by at most the stop-loss
//! distance, so the best bound from a report becomes a half-width around the
//! binomial price.

use serde::{Deserialize, Serialize};

use crate::bounds::BoundReport;
use crate::dependence::PortfolioModel;
use crate::error::{Error, Result};
use crate::pmf;

/// An attachment or detachment point with its recovery rate. The horizon is
/// carried only through the label; no default-time model is in scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrancheSpec {
    pub recovery: f64,
    pub z_star: f64,
    pub label: String,
}

impl TrancheSpec {
    pub fn new(recovery: f64, z_star: f64, label: impl Into<String>) -> Result<Self> {
        if !recovery.is_finite() || !(0.0..1.0).contains(&recovery) {
            return Err(Error::InvalidParameter(format!(
                "recovery rate {recovery} not in [0, 1)"
            )));
        }
        if !z_star.is_finite() || z_star < 0.0 {
            return Err(Error::InvalidParameter(format!("z* = {z_star} must be >= 0")));
        }
        Ok(Self { recovery, z_star, label: label.into() })
    }

    /// Scale from the percentage-loss threshold to the count threshold:
    /// `z = n z* / (1 - R)`.
    pub fn count_threshold(&self, n: usize) -> f64 {
        n as f64 * self.z_star / (1.0 - self.recovery)
    }
}

/// Exact expected tranche loss `((1-R)/n) E[(W_n - z)^+]` for enumerable
/// models.
pub fn expected_loss_exact(model: &PortfolioModel, spec: &TrancheSpec) -> Result<f64> {
    let w = model.exact_loss_pmf(None)?;
    let z = spec.count_threshold(model.n());
    Ok((1.0 - spec.recovery) / model.n() as f64 * w.call_expectation(z))
}

/// A binomial-approximated price with its certified half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBracket {
    pub approx: f64,
    pub half_width: f64,
    /// False when the underlying bound used Monte Carlo ingredients; the
    /// half-width is then statistical (inflated by four standard errors),
    /// not a certificate.
    pub certified: bool,
}

impl PriceBracket {
    pub fn lower(&self) -> f64 {
        (self.approx - self.half_width).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.approx + self.half_width
    }
}

/// Prices the tranche from the report's best binomial fit; the half-width is
/// the best bound rescaled by `(1-R)/n`.
pub fn expected_loss_bracketed(
    model: &PortfolioModel,
    spec: &TrancheSpec,
    report: &BoundReport,
) -> Result<PriceBracket> {
    let best = report
        .best
        .as_ref()
        .ok_or_else(|| Error::NotApplicable("report has no applicable binomial bound".into()))?;
    let z = spec.count_threshold(model.n());
    let scale = (1.0 - spec.recovery) / model.n() as f64;
    let approx = scale * pmf::binomial(&best.params).call_expectation(z);
    let half_width = if best.certified {
        scale * best.value
    } else {
        scale * (best.value + 4.0 * best.std_err)
    };
    Ok(PriceBracket { approx, half_width, certified: best.certified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{compile_report, ReportOptions};
    use approx::assert_relative_eq;

    #[test]
    fn count_threshold_examples() {
        let t = TrancheSpec::new(0.4, 0.03, "mezz").unwrap();
        assert_relative_eq!(t.count_threshold(100), 5.0, epsilon = 1e-12);
        let t0 = TrancheSpec::new(0.25, 0.0, "equity").unwrap();
        assert_eq!(t0.count_threshold(50), 0.0);
        let tk = TrancheSpec::new(0.0, 3.0 / 10.0, "k").unwrap();
        assert_relative_eq!(tk.count_threshold(10), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_loss_cases() {
        let model = PortfolioModel::independent(vec![0.06; 10]).unwrap();
        // z* = 0 is the mean.
        let t = TrancheSpec::new(0.4, 0.0, "all").unwrap();
        let got = expected_loss_exact(&model, &t).unwrap();
        assert_relative_eq!(got, 0.06 * 0.6, epsilon = 1e-12);
        // z >= n prices to zero.
        let t = TrancheSpec::new(0.0, 1.0, "senior").unwrap();
        assert_eq!(expected_loss_exact(&model, &t).unwrap(), 0.0);
        // R = 0.4, z* = 0.06 maps to z = 1.
        let t = TrancheSpec::new(0.4, 0.06, "mezz").unwrap();
        let w = model.exact_loss_pmf(None).unwrap();
        let mut oracle = 0.0;
        for (k, &p) in w.probs().iter().enumerate() {
            oracle += (k as f64 - 1.0).max(0.0) * p;
        }
        assert_relative_eq!(
            expected_loss_exact(&model, &t).unwrap(),
            0.06 * oracle,
            epsilon = 1e-12
        );
    }

    #[test]
    fn exact_loss_is_monotone_and_convex_in_z_star() {
        let model = PortfolioModel::independent(vec![0.09; 12]).unwrap();
        let values: Vec<f64> = (0..30)
            .map(|i| {
                let t = TrancheSpec::new(0.4, i as f64 * 0.01, "grid").unwrap();
                expected_loss_exact(&model, &t).unwrap()
            })
            .collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-14);
        }
        for w in values.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-12);
        }
    }

    #[test]
    fn joint_rescaling_moves_only_the_prefactor() {
        // Scaling (1-R) and z* together keeps the count threshold fixed, so
        // the call expectation is untouched and the price scales linearly.
        let model = PortfolioModel::independent(vec![0.07, 0.1, 0.12, 0.08, 0.09]).unwrap();
        let a = TrancheSpec::new(0.4, 0.06, "a").unwrap();
        let b = TrancheSpec::new(0.7, 0.03, "b").unwrap();
        assert_relative_eq!(
            a.count_threshold(model.n()),
            b.count_threshold(model.n()),
            epsilon = 1e-12
        );
        let va = expected_loss_exact(&model, &a).unwrap();
        let vb = expected_loss_exact(&model, &b).unwrap();
        assert_relative_eq!(va / 0.6, vb / 0.3, epsilon = 1e-12);
    }

    #[test]
    fn equal_p_bracket_is_tight() {
        let model = PortfolioModel::independent(vec![0.06; 10]).unwrap();
        let report = compile_report(&model, &ReportOptions::default()).unwrap();
        let t = TrancheSpec::new(0.4, 0.03, "mezz").unwrap();
        let bracket = expected_loss_bracketed(&model, &t, &report).unwrap();
        assert_eq!(bracket.half_width, 0.0);
        assert!(bracket.certified);
        let exact = expected_loss_exact(&model, &t).unwrap();
        assert!((bracket.approx - exact).abs() < 1e-12);
    }

    #[test]
    fn dependent_bracket_contains_exact() {
        let ps = vec![0.08, 0.12, 0.1, 0.09, 0.11, 0.07, 0.1, 0.08];
        let model = PortfolioModel::latent_one_dependent(ps, 0.9).unwrap();
        let report = compile_report(&model, &ReportOptions::default()).unwrap();
        for &z_star in &[0.0, 0.01, 0.05, 0.1] {
            for &r in &[0.0, 0.4] {
                let t = TrancheSpec::new(r, z_star, "t").unwrap();
                let exact = expected_loss_exact(&model, &t).unwrap();
                let bracket = expected_loss_bracketed(&model, &t, &report).unwrap();
                assert!(bracket.certified);
                assert!(
                    exact >= bracket.approx - bracket.half_width - 1e-12
                        && exact <= bracket.approx + bracket.half_width + 1e-12,
                    "exact {exact} outside [{}, {}]",
                    bracket.approx - bracket.half_width,
                    bracket.approx + bracket.half_width
                );
            }
        }
    }
}
