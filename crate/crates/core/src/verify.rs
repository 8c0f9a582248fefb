//! Self-verification suites: Stein-equation residuals, envelope domination,
//! stop-loss oracle agreement, certified-bound domination over a model
//! corpus, pricing bracket validity, and Monte Carlo consistency.
//!
//! The same checks back the command-line `verify` command and the acceptance
//! test suite; `Level::Full` enlarges every grid and corpus.

use crate::bounds::{self, ReportOptions};
use crate::cdo::{self, TrancheSpec};
use crate::dependence::{enumerate_terms, sample_terms, PortfolioModel};
use crate::error::Result;
use crate::pmf::{self, BinomialParams, IntegerPmf};
use crate::rng::CounterRng;
use crate::stein;
use crate::stoploss;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

pub fn grid_alphas(level: Level) -> &'static [u32] {
    match level {
        Level::Quick => &[1, 2, 5, 10],
        Level::Full => &[1, 2, 5, 10, 25, 50],
    }
}

pub fn grid_ps(level: Level) -> &'static [f64] {
    match level {
        Level::Quick => &[0.05, 0.3, 0.7],
        Level::Full => &[0.05, 0.1, 0.3, 0.5, 0.7],
    }
}

pub fn grid_zs(alpha: u32) -> Vec<f64> {
    let a = alpha as f64;
    vec![0.0, 0.5, 1.0, 1.5, 2.0, 3.7, a / 2.0, a - 0.5, a, a + 3.0]
        .into_iter()
        .filter(|z| *z >= 0.0)
        .collect()
}

fn probe_count(level: Level) -> usize {
    match level {
        Level::Quick => 200,
        Level::Full => 1000,
    }
}

/// Stein-equation residuals over the verification grid. Residuals are
/// measured relative to the magnitude of the operator's two addends: for
/// large `alpha` and `p` the solution reaches 1e25 while the equation's
/// right side stays O(alpha), so an absolute residual would sit below the
/// representable resolution of the subtraction.
pub fn stein_identity_check(level: Level) -> CheckOutcome {
    let mut worst_pointwise = 0.0f64;
    let mut worst_expectation = 0.0f64;
    for &alpha in grid_alphas(level) {
        for &p in grid_ps(level) {
            let params = BinomialParams::new(alpha, p).expect("grid params");
            let b = pmf::binomial(&params);
            for z in grid_zs(alpha) {
                let ctx = stein::SteinContext::new(&params, z).expect("grid z");
                let g = stein::solution_table(&ctx);
                let mut expect_num = 0.0;
                let mut expect_den = 1.0;
                for k in 0..=alpha {
                    let (t1, t2) = stein::operator_terms(&params, &g, k).expect("k in range");
                    expect_num += b.probs()[k as usize] * (t1 - t2);
                    expect_den += b.probs()[k as usize] * (t1.abs() + t2.abs());
                    if k < alpha {
                        let rhs = (k as f64 - z).max(0.0) - ctx.call_ref();
                        let resid = ((t1 - t2) - rhs).abs() / (1.0 + t1.abs() + t2.abs());
                        worst_pointwise = worst_pointwise.max(resid);
                    }
                }
                worst_expectation = worst_expectation.max(expect_num.abs() / expect_den);
            }
        }
    }
    let passed = worst_pointwise <= 1e-9 && worst_expectation <= 1e-10;
    CheckOutcome::new(
        "stein_identity",
        passed,
        format!(
            "max pointwise residual {worst_pointwise:.3e} (tol 1e-9), \
             max operator-expectation residual {worst_expectation:.3e} (tol 1e-10)"
        ),
    )
}

/// Envelope domination with injectable envelopes, so tests can prove the
/// check fails when an envelope is weakened.
pub fn envelope_domination_check_with(
    level: Level,
    envelope_all_z: &dyn Fn(&BinomialParams, u32) -> f64,
    envelope_large_z: &dyn Fn(&BinomialParams, u32, f64) -> f64,
) -> CheckOutcome {
    let mut violations = 0usize;
    let mut checked = 0usize;
    let mut worst_margin = f64::NEG_INFINITY;
    let mut note = String::new();
    let mut check = |params: &BinomialParams, ctx: &stein::SteinContext, k: u32, z: f64| {
        let dg = (stein::solution(ctx, k + 1).unwrap() - stein::solution(ctx, k).unwrap()).abs();
        let l1 = envelope_all_z(params, k);
        checked += 1;
        let margin1 = dg - l1 * (1.0 + 1e-10) - 1e-12;
        worst_margin = worst_margin.max(margin1 / (1.0 + l1));
        if margin1 > 0.0 {
            violations += 1;
            if note.is_empty() {
                note = format!("first at alpha={}, p={}, k={k}, z={z}", params.alpha, params.p);
            }
        }
        if z > 1.0 && k >= 1 {
            let l2 = envelope_large_z(params, k, z);
            checked += 1;
            let margin2 = dg - l2 * (1.0 + 1e-10) - 1e-12;
            worst_margin = worst_margin.max(margin2 / (1.0 + l2));
            if margin2 > 0.0 {
                violations += 1;
                if note.is_empty() {
                    note = format!(
                        "first (z>1 case) at alpha={}, p={}, k={k}, z={z}",
                        params.alpha, params.p
                    );
                }
            }
        }
    };
    for &alpha in grid_alphas(level) {
        for &p in grid_ps(level) {
            let params = BinomialParams::new(alpha, p).expect("grid params");
            for z in grid_zs(alpha) {
                let ctx = stein::SteinContext::new(&params, z).expect("grid z");
                for k in 0..alpha {
                    check(&params, &ctx, k, z);
                }
            }
            let mut rng = CounterRng::from_seed_stream(0xD0611A7E, (alpha as u64) << 8 | 1);
            for _ in 0..probe_count(level) {
                let z = rng.next_f64() * (alpha as f64 + 4.0);
                let k = rng.next_below(alpha as u64) as u32;
                let ctx = stein::SteinContext::new(&params, z).expect("probe z");
                check(&params, &ctx, k, z);
            }
        }
    }
    CheckOutcome::new(
        "envelope_domination",
        violations == 0,
        format!(
            "{checked} comparisons, {violations} violations, \
             worst relative margin {worst_margin:.3e}{}{note}",
            if note.is_empty() { "" } else { "; " }
        ),
    )
}

pub fn envelope_domination_check(level: Level) -> CheckOutcome {
    envelope_domination_check_with(
        level,
        &|params, k| stein::delta_envelope(params, k).unwrap(),
        &|params, k, z| stein::delta_envelope_large_z(params, k, z).unwrap(),
    )
}

fn random_pmf(rng: &mut CounterRng, max_support: usize) -> IntegerPmf {
    let len = 1 + rng.next_below(max_support as u64) as usize;
    let mut masses = Vec::with_capacity(len);
    for _ in 0..len {
        let u = rng.next_f64();
        masses.push(u * u);
    }
    if masses.iter().all(|&m| m == 0.0) {
        masses[0] = 1.0;
    }
    IntegerPmf::from_unnormalized(masses).expect("non-negative masses")
}

/// Exact kink-based distance against the dense-grid scan on random pairs.
pub fn stoploss_agreement_check(level: Level) -> CheckOutcome {
    let pairs = match level {
        Level::Quick => 40,
        Level::Full => 200,
    };
    let resolution = 1000usize;
    let slack = 1.0 / resolution as f64 + 1e-12;
    let mut rng = CounterRng::from_seed_stream(0x5701_0553, 0);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..pairs {
        let px = random_pmf(&mut rng, 60);
        let py = random_pmf(&mut rng, 60);
        let exact = stoploss::distance(&px, &py);
        let grid = stoploss::distance_grid_check(&px, &py, resolution).expect("resolution >= 2");
        if grid > exact + 1e-12 || exact - grid > slack {
            failures += 1;
        }
        worst = worst.max((exact - grid).abs());
    }
    CheckOutcome::new(
        "stoploss_oracle_agreement",
        failures == 0,
        format!("{pairs} random pairs, worst gap {worst:.3e} (slack {slack:.3e}), {failures} failures"),
    )
}

/// The model corpus every certified bound must dominate.
pub fn domination_corpus(level: Level) -> Vec<(String, PortfolioModel)> {
    let mut corpus = Vec::new();
    let prefixes: &[usize] = match level {
        Level::Quick => &[10, 30, 50],
        Level::Full => &[10, 20, 30, 40, 50, 60, 70, 80, 90, 100],
    };
    for &n in prefixes {
        let ps = crate::benchmark::block_portfolio(n).expect("prefix size");
        corpus.push((
            format!("block_prefix_{n}"),
            PortfolioModel::independent(ps).expect("valid portfolio"),
        ));
    }
    corpus.push((
        "equal_p_10".into(),
        PortfolioModel::independent(vec![0.06; 10]).expect("valid"),
    ));
    corpus.push((
        "equal_p_25".into(),
        PortfolioModel::independent(vec![0.04; 25]).expect("valid"),
    ));
    let random_sizes: &[usize] = match level {
        Level::Quick => &[3, 15, 64],
        Level::Full => &[3, 7, 12, 15, 40, 55, 64, 100],
    };
    for (j, &n) in random_sizes.iter().enumerate() {
        let mut rng = CounterRng::from_seed_stream(0xC0B905, j as u64);
        let ps: Vec<f64> = (0..n).map(|_| 0.01 + 0.30 * rng.next_f64()).collect();
        corpus.push((
            format!("random_independent_{n}"),
            PortfolioModel::independent(ps).expect("valid"),
        ));
    }
    let latent: &[(usize, f64)] = match level {
        Level::Quick => &[(4, 1.0), (6, 0.7), (8, 1.0), (8, 0.35)],
        Level::Full => &[
            (4, 1.0),
            (5, 0.9),
            (6, 0.7),
            (7, 0.25),
            (8, 1.0),
            (8, 0.35),
            (9, 0.45),
            (10, 1.0),
            (10, 0.6),
            (12, 1.0),
            (12, 0.8),
            (12, 0.5),
        ],
    };
    for &(n, theta) in latent {
        let mut rng = CounterRng::from_seed_stream(0x1A7E27, (n as u64) << 8 | (theta * 100.0) as u64);
        let ps: Vec<f64> = (0..n).map(|_| 0.03 + 0.20 * rng.next_f64()).collect();
        corpus.push((
            format!("latent_{n}_theta{theta}"),
            PortfolioModel::latent_one_dependent(ps, theta).expect("valid"),
        ));
    }
    if level == Level::Full {
        // A correlated explicit joint with full neighborhoods.
        let ind = PortfolioModel::independent(vec![0.2, 0.3, 0.25]).expect("valid");
        let mut table = ind.outcome_table(None).expect("small");
        // Tilt mass toward the all-defaults corner, then fix marginals by
        // construction: renormalize and recompute the marginals directly.
        table[7] += 0.05;
        table[0] += 0.05;
        let total: f64 = table.iter().sum();
        for t in &mut table {
            *t /= total;
        }
        let marginals: Vec<f64> = (0..3)
            .map(|i| {
                table
                    .iter()
                    .enumerate()
                    .filter(|(m, _)| m >> i & 1 == 1)
                    .map(|(_, pr)| pr)
                    .sum()
            })
            .collect();
        corpus.push((
            "explicit_joint_tilted".into(),
            PortfolioModel::explicit_joint(marginals, table, None).expect("valid"),
        ));
    }
    corpus
}

fn report_options_for(model: &PortfolioModel) -> ReportOptions {
    // Exercise the chosen-p variant away from the mean marginal.
    let p_bar = model.lambda() / model.n() as f64;
    ReportOptions {
        chosen_p: Some((1.25 * p_bar).min(0.9)),
        ..ReportOptions::default()
    }
}

/// Every certified bound must dominate the exact stop-loss distance to its
/// own target, on every corpus model.
pub fn bound_domination_check(level: Level) -> CheckOutcome {
    let corpus = domination_corpus(level);
    let mut checked = 0usize;
    let mut violations = Vec::new();
    let mut worst_ratio = 0.0f64;
    for (name, model) in &corpus {
        let report = match bounds::compile_report(model, &report_options_for(model)) {
            Ok(r) => r,
            Err(e) => {
                violations.push(format!("{name}: report failed: {e}"));
                continue;
            }
        };
        for entry in &report.entries {
            if let (true, true, Some(value), Some(dsl)) =
                (entry.applicable, entry.certified, entry.value, entry.exact_dsl)
            {
                checked += 1;
                if dsl > value + 1e-12 {
                    violations.push(format!(
                        "{name}/{}: exact {dsl} > bound {value}",
                        entry.name
                    ));
                } else if value > 0.0 {
                    worst_ratio = worst_ratio.max(dsl / value);
                }
            }
        }
    }
    CheckOutcome::new(
        "certified_domination",
        violations.is_empty(),
        if violations.is_empty() {
            format!(
                "{} models, {checked} certified bound/oracle comparisons, tightest ratio {worst_ratio:.4}",
                corpus.len()
            )
        } else {
            violations.join("; ")
        },
    )
}

/// The first-difference bound must coincide with its closed form on
/// independent portfolios, and vanish exactly for equal marginals.
pub fn specialization_check(level: Level) -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (name, model) in domination_corpus(level) {
        if !model.is_independent() {
            continue;
        }
        let fit = match bounds::fit_alpha_n(&model) {
            Ok(f) => f,
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                continue;
            }
        };
        let summary = enumerate_terms(&model).expect("independent summaries always exist");
        let t1 = bounds::first_difference_bound(&model, &fit, &summary).expect("alpha-n fit").value;
        let c1 = bounds::independent_first_difference(&model, &fit).expect("independent").value;
        let gap = (t1 - c1).abs() / c1.abs().max(1.0);
        worst = worst.max(gap);
        if gap > 1e-9 {
            failures.push(format!("{name}: first_difference_bound {t1} vs independent_first_difference {c1}"));
        }
        if model.p_list().windows(2).all(|w| w[0] == w[1]) && (t1 != 0.0 || c1 != 0.0) {
            failures.push(format!("{name}: equal-p model gave nonzero bound {t1} / {c1}"));
        }
    }
    CheckOutcome::new(
        "specialization_identity",
        failures.is_empty(),
        if failures.is_empty() {
            format!("worst relative gap {worst:.3e} (tol 1e-9)")
        } else {
            failures.join("; ")
        },
    )
}

/// Exact tranche expected losses must lie inside the certified bracket.
pub fn pricing_bracket_check(level: Level) -> CheckOutcome {
    let z_stars = [0.0, 0.01, 0.03, 0.05, 0.1];
    let recoveries = [0.0, 0.4];
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for (name, model) in domination_corpus(level) {
        let report = match bounds::compile_report(&model, &ReportOptions::default()) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                continue;
            }
        };
        for &z_star in &z_stars {
            for &recovery in &recoveries {
                let spec = TrancheSpec::new(recovery, z_star, "check").expect("valid spec");
                let exact = cdo::expected_loss_exact(&model, &spec).expect("enumerable corpus");
                let bracket =
                    cdo::expected_loss_bracketed(&model, &spec, &report).expect("best exists");
                checked += 1;
                if exact < bracket.approx - bracket.half_width - 1e-12
                    || exact > bracket.approx + bracket.half_width + 1e-12
                {
                    failures.push(format!(
                        "{name} z*={z_star} R={recovery}: exact {exact} outside ±{}",
                        bracket.half_width
                    ));
                }
            }
        }
    }
    CheckOutcome::new(
        "pricing_bracket",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{checked} tranche brackets all contain the exact value")
        } else {
            failures.join("; ")
        },
    )
}

/// Monte Carlo term estimates must sit within four reported standard errors
/// of exact enumeration.
pub fn mc_consistency_check(level: Level) -> CheckOutcome {
    let models: Vec<(String, PortfolioModel)> = domination_corpus(level)
        .into_iter()
        .filter(|(_, m)| !m.is_independent() && m.n() <= 8)
        .collect();
    let seeds: &[u64] = match level {
        Level::Quick => &[1],
        Level::Full => &[1, 2, 3],
    };
    let samples = match level {
        Level::Quick => 20_000,
        Level::Full => 40_000,
    };
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for (name, model) in &models {
        let exact = enumerate_terms(model).expect("enumerable corpus model");
        let q = 1.0 - model.lambda() / model.n() as f64;
        let qp_len = model.n();
        let qp: Vec<f64> = (0..=qp_len + 4).map(|k| q.powi(k as i32)).collect();
        for &seed in seeds {
            let mc = sample_terms(model, samples, seed).expect("sampleable");
            let mut push = |label: &str, ex: f64, got: f64, se: f64| {
                checked += 1;
                if (got - ex).abs() > 4.0 * se + 1e-9 {
                    failures.push(format!(
                        "{name} seed {seed} {label}: mc {got} vs exact {ex} (se {se:.2e})"
                    ));
                }
            };
            let (e_ex, _) = exact.e_q_wn(q);
            let (e_mc, se) = mc.e_q_wn(q);
            push("E[q^W]", e_ex, e_mc, se);
            for i in 0..model.n() {
                let f_jump =
                    |x: u8, _a: u8, b: u8, w: usize| if x == 1 { qp[w + b as usize] } else { 0.0 };
                let (ex_v, _) = exact.cell_expectation(i, f_jump);
                let (mc_v, se) = mc.cell_expectation(i, f_jump);
                push(&format!("jump[{i}]"), ex_v, mc_v, se);
                let f_xa = |x: u8, a: u8, _b: u8, _w: usize| x as f64 * a as f64;
                let (ex_v, _) = exact.cell_expectation(i, f_xa);
                let (mc_v, se) = mc.cell_expectation(i, f_xa);
                push(&format!("x_xa[{i}]"), ex_v, mc_v, se);
                let ex_d = exact.d_by_b(i);
                for (b, slot) in mc.d_by_b(i) {
                    if slot.fallback {
                        continue;
                    }
                    if let Some(ex_slot) = ex_d.get(&b) {
                        push(
                            &format!("D[{i}|b={b}]"),
                            ex_slot.d,
                            slot.d,
                            slot.std_err,
                        );
                    }
                }
            }
        }
    }
    CheckOutcome::new(
        "mc_consistency",
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{} models x {} seeds, {checked} estimates within 4 standard errors",
                models.len(),
                seeds.len()
            )
        } else {
            failures.join("; ")
        },
    )
}

/// The whole battery, in a fixed order.
pub fn run_all(level: Level) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        stein_identity_check(level),
        envelope_domination_check(level),
        stoploss_agreement_check(level),
        bound_domination_check(level),
        specialization_check(level),
        pricing_bracket_check(level),
        mc_consistency_check(level),
    ])
}
