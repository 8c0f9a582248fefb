//! Exact finite distributions on consecutive non-negative integers.
//!
//! Every law in this crate (the default count W, its binomial targets, the
//! truncated Poisson reference) is carried as an [`IntegerPmf`]. Construction
//! validates non-negativity and normalization; the scalar functionals
//! (call expectation, shifted total-variation distance, moments) are written
//! for numerical robustness first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on total mass for a valid pmf.
pub const MASS_TOL: f64 = 1e-12;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A finite probability mass function on `{0, 1, ..., m}`.
///
/// `probs[k]` is the mass at integer `k`. Trailing zeros are permitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerPmf {
    probs: Vec<f64>,
    #[serde(default)]
    renormalized: bool,
}

impl IntegerPmf {
    /// Validates and wraps raw masses. Entries must be non-negative and sum
    /// to one within [`MASS_TOL`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        let mut total = KahanSum::default();
        for (k, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidPmf(format!("mass {p} at {k}")));
            }
            total.add(p);
        }
        let total = total.value();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidPmf(format!(
                "total mass {total} deviates from 1 by more than {MASS_TOL}"
            )));
        }
        Ok(Self { probs, renormalized: false })
    }

    /// Wraps masses that are known non-negative, renormalizing only when the
    /// raw sum deviates from one by more than [`MASS_TOL`]. The flag is kept
    /// so report layers can surface that a renormalization happened.
    pub fn from_unnormalized(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        let mut total = KahanSum::default();
        for (k, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidPmf(format!("mass {p} at {k}")));
            }
            total.add(p);
        }
        let total = total.value();
        if total <= 0.0 {
            return Err(Error::InvalidPmf("zero total mass".into()));
        }
        let renormalized = (total - 1.0).abs() > MASS_TOL;
        if renormalized {
            for p in &mut probs {
                *p /= total;
            }
        }
        Ok(Self { probs, renormalized })
    }

    /// Point mass at `k`.
    pub fn degenerate(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        Self { probs, renormalized: false }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest index of the stored support (trailing zeros included).
    pub fn max_support(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mass(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn mean(&self) -> f64 {
        let mut s = KahanSum::default();
        for (k, &p) in self.probs.iter().enumerate() {
            s.add(k as f64 * p);
        }
        s.value()
    }

    /// Exact first moment and variance by direct summation.
    pub fn mean_variance(&self) -> (f64, f64) {
        let m = self.mean();
        let mut v = KahanSum::default();
        for (k, &p) in self.probs.iter().enumerate() {
            let d = k as f64 - m;
            v.add(d * d * p);
        }
        (m, v.value())
    }

    /// `E (X - z)^+`, summed from the top of the support downward so the
    /// smallest terms are added last.
    pub fn call_expectation(&self, z: f64) -> f64 {
        let mut s = KahanSum::default();
        for (k, &p) in self.probs.iter().enumerate().rev() {
            let payoff = k as f64 - z;
            if payoff <= 0.0 {
                break;
            }
            s.add(payoff * p);
        }
        s.value().max(0.0)
    }

    /// `d_TV(Z, Z+1) = (1/2) Σ_k |P(Z=k) − P(Z=k−1)|` with `P(Z=−1) = 0`.
    pub fn dtv_shift(&self) -> f64 {
        let mut s = KahanSum::default();
        let mut prev = 0.0;
        for &p in &self.probs {
            s.add((p - prev).abs());
            prev = p;
        }
        s.add(prev); // |0 − P(m)|
        (0.5 * s.value()).clamp(0.0, 1.0)
    }
}

/// Binomial parameters, including the fractional remainder `delta` left over
/// when an exact moment match is floored to an integer trial count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialParams {
    pub alpha: u32,
    pub p: f64,
    pub q: f64,
    pub delta: f64,
}

impl BinomialParams {
    pub fn new(alpha: u32, p: f64) -> Result<Self> {
        Self::with_delta(alpha, p, 0.0)
    }

    pub fn with_delta(alpha: u32, p: f64, delta: f64) -> Result<Self> {
        if alpha < 1 {
            return Err(Error::InvalidParameter("alpha must be >= 1".into()));
        }
        if !p.is_finite() || p <= 0.0 || p >= 1.0 {
            return Err(Error::InvalidParameter(format!("p = {p} not in (0, 1)")));
        }
        if !delta.is_finite() || !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!("delta = {delta} not in [0, 1)")));
        }
        Ok(Self { alpha, p, q: 1.0 - p, delta })
    }

    /// `q^e` for a possibly negative integer exponent, falling back to log
    /// space when the direct power would underflow.
    pub fn q_pow(&self, e: i64) -> f64 {
        pow_i64(self.q, e)
    }
}

pub(crate) fn pow_i64(base: f64, e: i64) -> f64 {
    if e.abs() <= i32::MAX as i64 {
        let direct = base.powi(e as i32);
        if direct.is_finite() && direct > f64::MIN_POSITIVE {
            return direct;
        }
    }
    (e as f64 * base.ln()).exp()
}

/// Cumulative `ln k!` table, built with compensated summation.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = KahanSum::default();
    out.push(0.0);
    for k in 1..=n {
        acc.add((k as f64).ln());
        out.push(acc.value());
    }
    out
}

/// Binomial pmf on `{0, ..., alpha}`, each entry exponentiated from log
/// space. `delta` is ignored here; it only matters to the bound layer.
pub fn binomial(params: &BinomialParams) -> IntegerPmf {
    let alpha = params.alpha as usize;
    let (lp, lq) = (params.p.ln(), params.q.ln());
    let lnfac = ln_factorials(alpha);
    let mut probs = Vec::with_capacity(alpha + 1);
    for k in 0..=alpha {
        let ln_pk = lnfac[alpha] - lnfac[k] - lnfac[alpha - k]
            + k as f64 * lp
            + (alpha - k) as f64 * lq;
        probs.push(ln_pk.exp());
    }
    IntegerPmf::from_unnormalized(probs).expect("binomial masses are positive")
}

/// Law of `Σ X_i` for independent Bernoulli(p_i), by iterated convolution.
/// The running error of each two-term update is tracked in a carry vector so
/// the final mass stays within [`MASS_TOL`] of one even for a few thousand
/// indicators. An empty list yields the point mass at zero.
pub fn poisson_binomial(p_list: &[f64]) -> Result<IntegerPmf> {
    for &p in p_list {
        if !p.is_finite() || p <= 0.0 || p >= 1.0 {
            return Err(Error::InvalidParameter(format!("p = {p} not in (0, 1)")));
        }
    }
    let n = p_list.len();
    let mut w = vec![0.0f64; n + 1];
    let mut carry = vec![0.0f64; n + 1];
    w[0] = 1.0;
    for (i, &p) in p_list.iter().enumerate() {
        let q = 1.0 - p;
        for k in (0..=i + 1).rev() {
            let stay = w[k] * q;
            let up = if k > 0 { w[k - 1] * p } else { 0.0 };
            let sum = stay + up;
            let err = if stay.abs() >= up.abs() {
                (stay - sum) + up
            } else {
                (up - sum) + stay
            };
            let c_stay = carry[k] * q;
            let c_up = if k > 0 { carry[k - 1] * p } else { 0.0 };
            w[k] = sum;
            carry[k] = err + c_stay + c_up;
        }
    }
    for k in 0..=n {
        w[k] = (w[k] + carry[k]).max(0.0);
    }
    IntegerPmf::from_unnormalized(w)
}

/// What was cut off when truncating a Poisson law to finite support.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PoissonTruncation {
    pub lambda: f64,
    /// Mass beyond the stored support, before renormalization.
    pub dropped_mass: f64,
    /// First moment beyond the stored support: `Σ_{k>m} k p_k`.
    pub dropped_first_moment: f64,
    /// `1 / (1 − dropped_mass)`.
    pub renorm_factor: f64,
}

impl PoissonTruncation {
    /// Certified widening for any stop-loss comparison made against the
    /// truncated law in place of the true Poisson: for every threshold z,
    /// `|E(P−z)^+ − E(P̃−z)^+| ≤ dropped_mass · λ̃ + dropped_first_moment`.
    pub fn stop_loss_slack(&self, truncated_mean: f64) -> f64 {
        self.dropped_mass * truncated_mean + self.dropped_first_moment
    }
}

/// Truncated, renormalized Poisson(λ). The truncation point is chosen so the
/// omitted mass is below `tail_eps`; the dropped mass and first moment are
/// recorded so downstream comparisons stay certified.
pub fn poisson_truncated(lambda: f64, tail_eps: f64) -> Result<(IntegerPmf, PoissonTruncation)> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be > 0")));
    }
    if !(0.0..1.0).contains(&tail_eps) || tail_eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("tail_eps = {tail_eps} not in (0, 1)")));
    }
    if lambda > 500.0 {
        return Err(Error::TooLarge(format!("lambda = {lambda} > 500")));
    }
    let mut probs = Vec::new();
    let mut pk = (-lambda).exp();
    let mut cum = KahanSum::default();
    let mut cum_prev; // Σ_{j <= k-1}
    let hard_cap = (lambda + 60.0 * lambda.sqrt() + 60.0).ceil() as usize;
    let mut dropped_mass = 0.0;
    let mut dropped_moment = 0.0;
    let mut done = false;
    for k in 0..=hard_cap {
        cum_prev = cum.value();
        cum.add(pk);
        probs.push(pk);
        let tail = (1.0 - cum.value()).max(0.0);
        if tail < tail_eps {
            dropped_mass = tail;
            // Σ_{j>k} j p_j = λ P(P >= k)  with P(P >= k) = 1 − Σ_{j<=k-1}.
            dropped_moment = lambda * (1.0 - cum_prev - pk).max(0.0);
            done = true;
            break;
        }
        pk *= lambda / (k as f64 + 1.0);
    }
    if !done {
        return Err(Error::InvalidParameter(
            "poisson truncation did not converge below tail_eps".into(),
        ));
    }
    let pmf = IntegerPmf::from_unnormalized(probs)?;
    let info = PoissonTruncation {
        lambda,
        dropped_mass,
        dropped_first_moment: dropped_moment,
        renorm_factor: 1.0 / (1.0 - dropped_mass),
    };
    Ok((pmf, info))
}
