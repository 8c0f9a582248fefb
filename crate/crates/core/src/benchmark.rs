//! The built-in graded block portfolio and the bound comparison table over
//! its prefixes.
//!
//! The portfolio assigns default probability `0.06 + 0.01 * (i / 20)` to
//! name `i` (blocks of twenty from 0.06 up to 0.10, one hundred names in
//! total). The comparison table evaluates, for each prefix length, the
//! Poisson-target reference bound against the two binomial-target closed
//! forms.

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundValue};
use crate::dependence::PortfolioModel;
use crate::error::{Error, Result};

/// Marginal probabilities of the first `n` names of the block portfolio.
pub fn block_portfolio(n: usize) -> Result<Vec<f64>> {
    if n == 0 || n > 100 {
        return Err(Error::InvalidParameter(format!("block portfolio size {n} not in [1, 100]")));
    }
    // (6 + block)/100 reproduces the decimal literals 0.06..0.10 exactly.
    Ok((0..n).map(|i| (6 + i / 20) as f64 / 100.0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n: usize,
    /// `(2 e^λ − 1) Σ p_i²`, the pre-existing Poisson-target bound.
    pub poisson_bound: f64,
    /// Closed-form first-difference bound at the `alpha = n` fit.
    pub alpha_n_bound: f64,
    /// Closed-form second-difference bound at the moment-matched fit.
    pub moment_bound: f64,
}

/// One row per prefix `n = 10, 20, ..., 100`.
pub fn comparison_rows() -> Result<Vec<ComparisonRow>> {
    (1..=10)
        .map(|k| {
            let n = 10 * k;
            let model = PortfolioModel::independent(block_portfolio(n)?)?;
            let fit_a = bounds::fit_alpha_n(&model)?;
            let eq_row: BoundValue = bounds::independent_first_difference(&model, &fit_a)?;
            let fit_m = bounds::fit_moment_matching(&model)?;
            let mm_row = bounds::independent_second_difference(&model, &fit_m)?;
            Ok(ComparisonRow {
                n,
                poisson_bound: bounds::poisson_reference(&model).value,
                alpha_n_bound: eq_row.value,
                moment_bound: mm_row.value,
            })
        })
        .collect()
}
