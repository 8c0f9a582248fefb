//! Binomial parameter fits and the full family of stop-loss error bounds,
//! assembled into comparable reports.
//!
//! Two parameterizations are fitted: `alpha = n` with the mean success
//! probability, and the two-moment match with its fractional remainder
//! `delta`. Every bound here is an upper bound for the stop-loss distance
//! between the default count and its fitted binomial; the report layer pairs
//! each bound with the exact distance whenever the model is enumerable so the
//! domination can be checked, never assumed.
//!
//! The locally dependent bounds are computed in the per-index grouped form
//! that the underlying Stein argument actually yields. In that form every
//! ingredient is non-negative, the independent specialization collapses
//! exactly to the closed-form corollaries, and portfolios with identical
//! marginals come out at exactly zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dependence::{
    enumerate_terms_with_limit, sample_terms, DependenceSummary, PortfolioModel,
};
use crate::error::{Error, Result};
use crate::pmf::{self, BinomialParams, KahanSum};
use crate::stoploss;

/// A bound value with the standard error of its Monte Carlo ingredients
/// (zero when everything was computed exactly).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub std_err: f64,
}

impl BoundValue {
    fn exact(value: f64) -> Self {
        Self { value, std_err: 0.0 }
    }
}

/// `x / q^k` without underflowing through the denominator.
fn scale_by_inv_q_pow(x: f64, q: f64, k: u32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let d = q.powi(k as i32);
    if d.is_normal() {
        x / d
    } else {
        (x.ln() - k as f64 * q.ln()).exp()
    }
}

/// Floor with snapping: values within 1e-9 of an integer are taken as that
/// integer with zero remainder, so short-decimal inputs whose moment ratio
/// is exactly integral do not pick up a spurious `delta` close to one.
fn floor_snap(x: f64) -> (u32, f64) {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        (r as u32, 0.0)
    } else {
        let f = x.floor();
        (f as u32, x - f)
    }
}

fn all_equal(ps: &[f64]) -> bool {
    ps.windows(2).all(|w| w[0] == w[1])
}

/// Fit with `alpha = n` and `p` the mean marginal probability.
pub fn fit_alpha_n(model: &PortfolioModel) -> Result<BinomialParams> {
    let ps = model.p_list();
    let p = if all_equal(ps) {
        ps[0]
    } else {
        let mut s = KahanSum::default();
        for &pi in ps {
            s.add(pi);
        }
        s.value() / ps.len() as f64
    };
    if !(0.0..1.0).contains(&p) || p == 0.0 {
        return Err(Error::InvalidParameter(format!("mean probability {p} degenerate")));
    }
    BinomialParams::new(model.n() as u32, p)
}

/// Two-moment fit: `p = (EW − VarW)/EW`, `alpha = floor(EW² / (EW − VarW))`
/// with snapping, and `delta` the fractional remainder. Requires
/// underdispersion (`EW > VarW`).
pub fn fit_moment_matching(model: &PortfolioModel) -> Result<BinomialParams> {
    if model.is_independent() && all_equal(model.p_list()) {
        // Exact match: alpha = n, p = p_1, delta = 0, with no float dust.
        return BinomialParams::new(model.n() as u32, model.p_list()[0]);
    }
    let (ew, varw) = model.mean_variance();
    if ew <= 0.0 {
        return Err(Error::InvalidParameter("E(W) = 0".into()));
    }
    let excess = ew - varw;
    if excess <= 0.0 {
        return Err(Error::Overdispersed(format!("E(W) = {ew} <= Var(W) = {varw}")));
    }
    let p = excess / ew;
    if p >= 1.0 {
        return Err(Error::InvalidParameter(format!("moment fit gives p = {p} >= 1")));
    }
    let (alpha, delta) = floor_snap(ew * ew / excess);
    BinomialParams::with_delta(alpha.max(1), p, delta)
}

fn require_alpha_n_fit(model: &PortfolioModel, params: &BinomialParams) -> Result<()> {
    if params.alpha as usize != model.n() || params.delta != 0.0 {
        return Err(Error::NotApplicable(
            "this bound requires the alpha = n parameterization".into(),
        ));
    }
    Ok(())
}

fn require_independent(model: &PortfolioModel) -> Result<()> {
    if !model.is_independent() {
        return Err(Error::NotApplicable("independent portfolios only".into()));
    }
    Ok(())
}

/// Per-index grouped ingredients of the first-difference bound, evaluated at
/// an arbitrary exponent base `alpha` (shared by the `alpha = n` bound and
/// its chosen-`p` variant).
fn first_difference_core(
    model: &PortfolioModel,
    summary: &DependenceSummary,
    p: f64,
    q: f64,
    alpha: u32,
) -> BoundValue {
    let n = model.n();
    let qp = crate::dependence::pow_table(q, n);
    let mut s_own = KahanSum::default(); // p_i-weighted, scale 2/(p q^alpha)
    let mut s_mid = KahanSum::default(); // q_i-weighted, scale 2/(p q^{alpha+1})
    let mut s_jump = KahanSum::default(); // |p_i - p|-weighted, scale 2/q^{alpha+1}
    let (mut se_own, mut se_mid, mut se_jump) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let pi = model.p_list()[i];
        let qi = 1.0 - pi;
        let (comp, comp_se) = summary.cell_expectation(i, |x, a, b, w| {
            if x == 0 {
                qp[w + (b - a) as usize] * (1.0 - qp[a as usize])
            } else {
                0.0
            }
        });
        let (mid, mid_se) = summary.cell_expectation(i, |x, a, b, w| {
            if x == 1 {
                qp[w + (b - a) as usize] * (q - qp[a as usize])
            } else {
                0.0
            }
        });
        let (jump, jump_se) = summary.cell_expectation(i, |x, _, b, w| {
            if x == 1 {
                qp[w + b as usize]
            } else {
                0.0
            }
        });
        s_own.add(pi * comp);
        s_mid.add(qi * mid);
        s_jump.add((pi - p).abs() * jump);
        se_own += pi * comp_se;
        se_mid += qi * mid_se;
        se_jump += (pi - p).abs() * jump_se;
    }
    let value = scale_by_inv_q_pow(2.0 * s_own.value() / p, q, alpha)
        + scale_by_inv_q_pow(2.0 * s_mid.value() / p, q, alpha + 1)
        + scale_by_inv_q_pow(2.0 * s_jump.value(), q, alpha + 1);
    let std_err = scale_by_inv_q_pow(2.0 * se_own / p, q, alpha)
        + scale_by_inv_q_pow(2.0 * se_mid / p, q, alpha + 1)
        + scale_by_inv_q_pow(2.0 * se_jump, q, alpha + 1);
    BoundValue { value, std_err }
}

/// First-difference bound for the `alpha = n` fit on a locally dependent
/// portfolio. On independent portfolios it equals [`independent_first_difference`] exactly,
/// and it is exactly zero when all marginals coincide.
pub fn first_difference_bound(
    model: &PortfolioModel,
    params: &BinomialParams,
    summary: &DependenceSummary,
) -> Result<BoundValue> {
    require_alpha_n_fit(model, params)?;
    Ok(first_difference_core(model, summary, params.p, params.q, params.alpha))
}

/// Closed form of [`first_difference_bound`] for independent portfolios:
/// `(2/q^n) Σ_i |p − p_i| p_i Π_{j≠i}(1 − p p_j)`.
pub fn independent_first_difference(model: &PortfolioModel, params: &BinomialParams) -> Result<BoundValue> {
    require_independent(model)?;
    require_alpha_n_fit(model, params)?;
    let (p, q) = (params.p, params.q);
    let ps = model.p_list();
    let mut ln_prod = KahanSum::default();
    for &pj in ps {
        ln_prod.add((1.0 - p * pj).ln());
    }
    let mut sum = KahanSum::default();
    for &pi in ps {
        let gap = (p - pi).abs();
        if gap == 0.0 {
            continue;
        }
        sum.add(gap * pi * (ln_prod.value() - (1.0 - p * pi).ln()).exp());
    }
    Ok(BoundValue::exact(scale_by_inv_q_pow(2.0 * sum.value(), q, params.alpha)))
}

/// First-difference bound for a chosen success probability: `alpha` becomes
/// `floor(λ / p)` with remainder `delta`, adding one `delta`-weighted term.
/// At `p` equal to the mean marginal it reduces to [`first_difference_bound`].
pub fn first_difference_chosen_p(
    model: &PortfolioModel,
    summary: &DependenceSummary,
    p_chosen: f64,
) -> Result<(BinomialParams, BoundValue)> {
    if !p_chosen.is_finite() || p_chosen <= 0.0 || p_chosen >= 1.0 {
        return Err(Error::InvalidParameter(format!("p = {p_chosen} not in (0, 1)")));
    }
    let lambda = model.lambda();
    let (alpha, delta) = floor_snap(lambda / p_chosen);
    if alpha == 0 {
        return Err(Error::Domain(format!(
            "alpha = floor({lambda}/{p_chosen}) = 0; choose a smaller p"
        )));
    }
    let params = BinomialParams::with_delta(alpha, p_chosen, delta)?;
    let core = first_difference_core(model, summary, params.p, params.q, alpha);
    let (e_q_wn, e_q_wn_se) = summary.e_q_wn(params.q);
    let extra = scale_by_inv_q_pow(2.0 * delta * p_chosen * e_q_wn, params.q, alpha);
    let extra_se = scale_by_inv_q_pow(2.0 * delta * p_chosen * e_q_wn_se, params.q, alpha);
    Ok((params, BoundValue { value: core.value + extra, std_err: core.std_err + extra_se }))
}

/// `p X_{A_i} − q^{X_{B_i}−X_{A_i}} (1 − q^{X_{A_i}})`, the non-negative
/// weight produced by the double telescoping sum in the second-difference
/// bounds.
fn phi_weight(p: f64, qp: &[f64], a: u8, b: u8) -> f64 {
    if a == 0 {
        return 0.0;
    }
    (p * a as f64 - qp[(b - a) as usize] * (1.0 - qp[a as usize])).max(0.0)
}

/// `Σ_{ℓ=1}^{b−1} q^ℓ` scaled by `p`, with the reflected single `ℓ = 0` term
/// at `b = 0` (the telescoping sum runs backward there).
fn psi_weight(p: f64, q: f64, qp: &[f64], b: u8) -> f64 {
    if b == 0 {
        p
    } else {
        q - qp[b as usize]
    }
}

fn c_coefficient(summary: &DependenceSummary, i: usize, pi: f64, q: f64) -> (f64, f64) {
    let (e_xa, se_xa) = summary.cell_expectation(i, |_, a, _, _| a as f64);
    let (e_x_xa, se_x_xa) =
        summary.cell_expectation(i, |x, a, _, _| if x == 1 { a as f64 } else { 0.0 });
    (pi * e_xa - e_x_xa + q * pi, pi * se_xa + se_x_xa)
}

/// Second-difference bound for the moment-matched fit, with the conditional
/// smoothing values `D(W_i* | ·)` integrated against their conditioning laws.
pub fn second_difference_bound(
    model: &PortfolioModel,
    params: &BinomialParams,
    summary: &DependenceSummary,
) -> Result<BoundValue> {
    let n = model.n();
    let (p, q, alpha, delta) = (params.p, params.q, params.alpha, params.delta);
    let qp = crate::dependence::pow_table(q, n);
    let mut total = KahanSum::default();
    let mut se = 0.0;
    for i in 0..n {
        let pi = model.p_list()[i];
        // S1: p_i-weighted, conditioned on (X_{A_i}, X_{B_i}).
        for (&(a, b), slot) in &summary.d_by_ab(i) {
            let w = phi_weight(p, &qp, a, b);
            total.add(pi * slot.weight * w * slot.d);
            se += pi * slot.weight * w * slot.std_err;
        }
        // S2: X_i-weighted, conditioned on (X_i, X_{A_i}, X_{B_i}).
        for (&(x, a, b), slot) in &summary.d_by_xab(i) {
            if x == 1 {
                let w = phi_weight(p, &qp, a, b);
                total.add(slot.weight * w * slot.d);
                se += slot.weight * w * slot.std_err;
            }
        }
        // S3: the single-telescope term, conditioned on (X_i, X_{B_i}).
        for (&(x, b), slot) in &summary.d_by_xb(i) {
            if x == 1 {
                let w = psi_weight(p, q, &qp, b);
                total.add(p * slot.weight * w * slot.d);
                se += p * slot.weight * w * slot.std_err;
            }
        }
        // S5: the covariance compensation, conditioned on X_{B_i}.
        let (c_i, c_se) = c_coefficient(summary, i, pi, q);
        let mut s5 = 0.0;
        let mut s5_se = 0.0;
        for (&b, slot) in &summary.d_by_b(i) {
            let w = psi_weight(p, q, &qp, b);
            s5 += slot.weight * w * slot.d;
            s5_se += slot.weight * w * slot.std_err;
        }
        total.add(p / q * c_i.abs() * s5);
        se += p / q * (c_i.abs() * s5_se + c_se * s5);
    }
    // S4: the delta remainder.
    let (e_q_wn, e_q_wn_se) = summary.e_q_wn(q);
    total.add(delta * p.powi(3) / q * e_q_wn);
    se += delta * p.powi(3) / q * e_q_wn_se;
    let scale = |x: f64| scale_by_inv_q_pow(2.0 * x / (p * p), q, alpha);
    Ok(BoundValue { value: scale(total.value()), std_err: scale(se) })
}

/// Closed form of the second-difference bound for independent portfolios,
/// using the smoothing factor
/// `sqrt(2/π) (1/4 + Σ γ_j − γ*)^{-1/2}`, `γ_j = min(1/2, 1 − (q_j + |q_j − p_j|)/2)`.
pub fn independent_second_difference(model: &PortfolioModel, params: &BinomialParams) -> Result<BoundValue> {
    require_independent(model)?;
    let (p, q, alpha, delta) = (params.p, params.q, params.alpha, params.delta);
    let ps = model.p_list();
    let mut gamma_sum = KahanSum::default();
    let mut gamma_max = 0.0f64;
    for &pj in ps {
        let qj = 1.0 - pj;
        let gamma = (1.0 - 0.5 * (qj + (qj - pj).abs())).min(0.5);
        gamma_sum.add(gamma);
        gamma_max = gamma_max.max(gamma);
    }
    let smoothing = (2.0 / std::f64::consts::PI).sqrt()
        / (0.25 + gamma_sum.value() - gamma_max).sqrt();
    let mut sum = KahanSum::default();
    for &pi in ps {
        let gap = (p - pi).abs();
        if gap > 0.0 {
            sum.add(gap * pi * pi);
        }
    }
    let bracket = if delta == 0.0 {
        smoothing * sum.value()
    } else {
        let mut ln_prod = KahanSum::default();
        for &pi in ps {
            ln_prod.add((1.0 - p * pi).ln());
        }
        smoothing * sum.value() + delta * p * ln_prod.value().exp()
    };
    Ok(BoundValue::exact(scale_by_inv_q_pow(2.0 * bracket, q, alpha)))
}

/// Second-difference bound with the pointwise envelope
/// `|Δ²g(x+ℓ)| ≤ 4 q^{x+ℓ−alpha}` in place of the conditional smoothing
/// values. Cheaper ingredients, larger constant; the report keeps the
/// minimum of this and [`second_difference_bound`].
pub fn second_difference_pointwise(
    model: &PortfolioModel,
    params: &BinomialParams,
    summary: &DependenceSummary,
) -> Result<BoundValue> {
    let n = model.n();
    let (p, q, alpha, delta) = (params.p, params.q, params.alpha, params.delta);
    let qp = crate::dependence::pow_table(q, n);
    let mut total = KahanSum::default();
    let mut se = 0.0;
    for i in 0..n {
        let pi = model.p_list()[i];
        let (l1, l1_se) = summary.cell_expectation(i, |x, a, b, w| {
            (x as f64 + pi) * phi_weight(p, &qp, a, b) * qp[w]
        });
        let (l2, l2_se) = summary.cell_expectation(i, |x, _, b, w| {
            if x == 1 {
                psi_weight(p, q, &qp, b) * qp[w]
            } else {
                0.0
            }
        });
        let (l4, l4_se) =
            summary.cell_expectation(i, |_, _, b, w| psi_weight(p, q, &qp, b) * qp[w]);
        let (c_i, c_se) = c_coefficient(summary, i, pi, q);
        total.add(l1);
        total.add(p * l2);
        total.add(p / q * c_i.abs() * l4);
        se += l1_se + p * l2_se + p / q * (c_i.abs() * l4_se + c_se * l4);
    }
    let (e_q_wn, e_q_wn_se) = summary.e_q_wn(q);
    total.add(delta * p.powi(3) / 2.0 * e_q_wn);
    se += delta * p.powi(3) / 2.0 * e_q_wn_se;
    let scale = |x: f64| scale_by_inv_q_pow(4.0 * x / (p * p), q, alpha);
    Ok(BoundValue { value: scale(total.value()), std_err: scale(se) })
}

/// The pre-existing Poisson-target bound `(2 e^λ − 1) Σ p_i²`, reported for
/// comparison. It brackets the distance to a Poisson approximand, not to the
/// fitted binomial.
pub fn poisson_reference(model: &PortfolioModel) -> BoundValue {
    let lambda = model.lambda();
    let mut sum_sq = KahanSum::default();
    for &p in model.p_list() {
        sum_sq.add(p * p);
    }
    BoundValue::exact((2.0 * lambda.exp() - 1.0) * sum_sq.value())
}

/// What a bound is a distance to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ApproxTarget {
    Binomial(BinomialParams),
    Poisson { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IngredientsMode {
    ClosedForm,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub name: String,
    pub applicable: bool,
    pub value: Option<f64>,
    pub std_err: f64,
    /// Exact or closed-form ingredients; Monte Carlo entries are estimates,
    /// never certificates.
    pub certified: bool,
    pub mode: IngredientsMode,
    pub target: Option<ApproxTarget>,
    /// Exact stop-loss distance to this entry's own target, when computable.
    pub exact_dsl: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSelection {
    pub name: String,
    pub value: f64,
    pub std_err: f64,
    pub certified: bool,
    pub params: BinomialParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonComparison {
    pub lambda: f64,
    /// Distance to the truncated, renormalized Poisson law.
    pub exact_dsl: f64,
    /// Certified widening covering the truncation.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub lambda: f64,
    pub fit_alpha_n: BinomialParams,
    pub fit_moment: Option<BinomialParams>,
    pub fit_moment_note: Option<String>,
    pub ingredients: IngredientsMode,
    pub entries: Vec<BoundEntry>,
    /// Minimum applicable binomial-target bound; the Poisson reference is
    /// reported but never selected (it brackets a different approximand).
    pub best: Option<BestSelection>,
    pub poisson_comparison: Option<PoissonComparison>,
}

impl BoundReport {
    pub fn entry(&self, name: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    /// Monte Carlo sample count, used only when exact enumeration is too
    /// large.
    pub samples: Option<u64>,
    pub seed: u64,
    /// Evaluate the chosen-probability variant at this `p` as well.
    pub chosen_p: Option<f64>,
    /// Also compute the exact distance to a truncated Poisson reference.
    pub poisson_comparison: bool,
    /// Override of the exact-enumeration size cap.
    pub enumeration_limit: Option<usize>,
}

/// Fits both parameterizations, computes every applicable bound, attaches
/// the exact stop-loss distance per target when the model is enumerable, and
/// selects the best certified-comparable entry.
pub fn compile_report(model: &PortfolioModel, opts: &ReportOptions) -> Result<BoundReport> {
    let lambda = model.lambda();
    let fit_a = fit_alpha_n(model)?;
    let (summary, ingredients) = match enumerate_terms_with_limit(model, opts.enumeration_limit) {
        Ok(s) => {
            let mode = if model.is_independent() {
                IngredientsMode::ClosedForm
            } else {
                IngredientsMode::Exact
            };
            (Some(s), mode)
        }
        Err(Error::TooLarge(msg)) => match opts.samples {
            Some(n_samples) => (
                Some(sample_terms(model, n_samples, opts.seed)?),
                IngredientsMode::MonteCarlo,
            ),
            None => return Err(Error::TooLarge(format!("{msg}; pass a sample count"))),
        },
        Err(e) => return Err(e),
    };
    let certified = ingredients != IngredientsMode::MonteCarlo;
    let (fit_m, fit_m_note) = match fit_moment_matching(model) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let w_pmf = if model.enumerable(opts.enumeration_limit) {
        Some(model.exact_loss_pmf(opts.enumeration_limit)?)
    } else {
        None
    };
    let mut dsl_cache: BTreeMap<(u32, u64), f64> = BTreeMap::new();
    let mut dsl_for = |params: &BinomialParams| -> Option<f64> {
        let w = w_pmf.as_ref()?;
        let key = (params.alpha, params.p.to_bits());
        Some(*dsl_cache.entry(key).or_insert_with(|| {
            stoploss::distance(w, &pmf::binomial(params))
        }))
    };

    let mut entries = Vec::new();
    let ny = poisson_reference(model);
    entries.push(BoundEntry {
        name: "poisson_reference".into(),
        applicable: true,
        value: Some(ny.value),
        std_err: 0.0,
        certified: true,
        mode: IngredientsMode::ClosedForm,
        target: Some(ApproxTarget::Poisson { lambda }),
        exact_dsl: None,
        note: Some("bounds the distance to a Poisson approximand".into()),
    });

    let mut push_binomial = |entries: &mut Vec<BoundEntry>,
                             name: &str,
                             result: Result<(BinomialParams, BoundValue, IngredientsMode)>| {
        match result {
            Ok((params, bv, mode)) => entries.push(BoundEntry {
                name: name.into(),
                applicable: true,
                value: Some(bv.value),
                std_err: bv.std_err,
                certified: certified || mode == IngredientsMode::ClosedForm,
                mode,
                exact_dsl: dsl_for(&params),
                target: Some(ApproxTarget::Binomial(params)),
                note: None,
            }),
            Err(e) => entries.push(BoundEntry {
                name: name.into(),
                applicable: false,
                value: None,
                std_err: 0.0,
                certified: false,
                mode: IngredientsMode::ClosedForm,
                target: None,
                exact_dsl: None,
                note: Some(e.to_string()),
            }),
        }
    };

    push_binomial(
        &mut entries,
        "independent_first_difference",
        independent_first_difference(model, &fit_a).map(|bv| (fit_a, bv, IngredientsMode::ClosedForm)),
    );
    push_binomial(
        &mut entries,
        "first_difference_bound",
        summary
            .as_ref()
            .ok_or_else(|| Error::TooLarge("no term summary".into()))
            .and_then(|s| first_difference_bound(model, &fit_a, s))
            .map(|bv| (fit_a, bv, ingredients)),
    );
    let fit_m_err =
        || Error::NotApplicable(fit_m_note.clone().unwrap_or_else(|| "no moment fit".into()));
    push_binomial(
        &mut entries,
        "independent_second_difference",
        match &fit_m {
            Some(fm) => independent_second_difference(model, fm).map(|bv| (*fm, bv, IngredientsMode::ClosedForm)),
            None => Err(fit_m_err()),
        },
    );
    push_binomial(
        &mut entries,
        "second_difference_bound",
        match (&fit_m, &summary) {
            (Some(fm), Some(s)) => second_difference_bound(model, fm, s).map(|bv| (*fm, bv, ingredients)),
            _ => Err(fit_m_err()),
        },
    );
    push_binomial(
        &mut entries,
        "second_difference_pointwise",
        match (&fit_m, &summary) {
            (Some(fm), Some(s)) => {
                second_difference_pointwise(model, fm, s).map(|bv| (*fm, bv, ingredients))
            }
            _ => Err(fit_m_err()),
        },
    );
    if let Some(p_chosen) = opts.chosen_p {
        push_binomial(
            &mut entries,
            "first_difference_chosen_p",
            summary
                .as_ref()
                .ok_or_else(|| Error::TooLarge("no term summary".into()))
                .and_then(|s| first_difference_chosen_p(model, s, p_chosen))
                .map(|(params, bv)| (params, bv, ingredients)),
        );
    }

    // Ties go to the earliest entry, so the selection is stable across runs.
    let mut best: Option<BestSelection> = None;
    for e in &entries {
        if !e.applicable {
            continue;
        }
        if let (Some(ApproxTarget::Binomial(params)), Some(v)) = (&e.target, e.value) {
            if best.as_ref().is_none_or(|b| v < b.value) {
                best = Some(BestSelection {
                    name: e.name.clone(),
                    value: v,
                    std_err: e.std_err,
                    certified: e.certified,
                    params: *params,
                });
            }
        }
    }

    let poisson_comparison = if opts.poisson_comparison {
        match &w_pmf {
            Some(w) => {
                let (pois, trunc) = pmf::poisson_truncated(lambda, 1e-12)?;
                Some(PoissonComparison {
                    lambda,
                    exact_dsl: stoploss::distance(w, &pois),
                    slack: trunc.stop_loss_slack(pois.mean()),
                })
            }
            None => None,
        }
    } else {
        None
    };

    Ok(BoundReport {
        n: model.n(),
        lambda,
        fit_alpha_n: fit_a,
        fit_moment: fit_m,
        fit_moment_note: fit_m_note,
        ingredients,
        entries,
        best,
        poisson_comparison,
    })
}
