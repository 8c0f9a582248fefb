//! Exact or Monte Carlo evaluation of every expectation the bounds consume.
//!
//! For each index `i` the summary stores the joint law of
//! `(X_i, X_{A_i}, X_{B_i}, W_i*)` as cells keyed by the first three
//! (`X_{A_i}` and `X_{B_i}` are the neighborhood sums, `W_i* = W_n − X_{B_i}`),
//! each with the conditional law of `W_i*` inside. Every `q`-weighted
//! expectation and every conditional smoothing value `D(W_i* | ·)` is then a
//! finite sum over cells, so the same code path serves exact enumeration,
//! closed-form independent portfolios, and Monte Carlo estimates.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::pmf::{self, KahanSum};

use super::PortfolioModel;

/// Monte Carlo strata thinner than this fall back to the universal `D <= 2`.
pub const MIN_STRATUM_SAMPLES: u64 = 50;

/// Independent portfolios build per-index convolutions; this caps the
/// O(n^3) total cost.
const INDEPENDENT_TERMS_MAX: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub enum SummaryMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

/// One conditioning outcome `(x, a, b)` with the conditional law of `W_i*`.
#[derive(Debug, Clone)]
pub struct Cell {
    /// Probability of the conditioning outcome (exact) or its empirical
    /// frequency (Monte Carlo).
    pub weight: f64,
    /// Samples landing in the cell; zero in exact mode.
    pub count: u64,
    /// Conditional pmf of `W_i*` given the cell; sums to one.
    pub w_dist: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct IndexCells {
    pub cells: BTreeMap<(u8, u8, u8), Cell>,
}

/// A conditional smoothing value `D(W_i* | cell) = 2 d_TV(W_i*, W_i*+1 | cell)`
/// together with the cell probability. Under-populated Monte Carlo strata are
/// replaced by the universal bound 2 and flagged.
#[derive(Debug, Clone, Copy)]
pub struct DSlot {
    pub weight: f64,
    pub d: f64,
    pub std_err: f64,
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct DependenceSummary {
    mode: SummaryMode,
    n: usize,
    per_index: Vec<IndexCells>,
}

impl DependenceSummary {
    pub fn mode(&self) -> &SummaryMode {
        &self.mode
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.mode, SummaryMode::Exact)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index_cells(&self, i: usize) -> &IndexCells {
        &self.per_index[i]
    }

    /// `E[f(X_i, X_{A_i}, X_{B_i}, W_i*)]` with its standard error (zero in
    /// exact mode).
    pub fn cell_expectation<F>(&self, i: usize, f: F) -> (f64, f64)
    where
        F: Fn(u8, u8, u8, usize) -> f64,
    {
        let mut e = KahanSum::default();
        let mut e2 = KahanSum::default();
        for (&(x, a, b), cell) in &self.per_index[i].cells {
            for (w, &pw) in cell.w_dist.iter().enumerate() {
                if pw == 0.0 {
                    continue;
                }
                let v = f(x, a, b, w);
                e.add(cell.weight * pw * v);
                e2.add(cell.weight * pw * v * v);
            }
        }
        let mean = e.value();
        let se = match self.mode {
            SummaryMode::Exact => 0.0,
            SummaryMode::MonteCarlo { samples, .. } => {
                ((e2.value() - mean * mean).max(0.0) / samples as f64).sqrt()
            }
        };
        (mean, se)
    }

    /// `E[q^{W_n}]`, read off index 0 (`W_n = W_0* + X_{B_0}`).
    pub fn e_q_wn(&self, q: f64) -> (f64, f64) {
        let qp = pow_table(q, self.n);
        self.cell_expectation(0, |_, _, b, w| qp[w + b as usize])
    }

    fn merged_d<K: Ord + Copy, F: Fn(u8, u8, u8) -> K>(&self, i: usize, key: F) -> BTreeMap<K, DSlot> {
        #[derive(Default)]
        struct Acc {
            weight: f64,
            count: u64,
            raw: Vec<f64>,
        }
        let mut merged: BTreeMap<K, Acc> = BTreeMap::new();
        for (&(x, a, b), cell) in &self.per_index[i].cells {
            let entry = merged.entry(key(x, a, b)).or_default();
            entry.weight += cell.weight;
            entry.count += cell.count;
            if entry.raw.len() < cell.w_dist.len() {
                entry.raw.resize(cell.w_dist.len(), 0.0);
            }
            for (w, &pw) in cell.w_dist.iter().enumerate() {
                entry.raw[w] += cell.weight * pw;
            }
        }
        let mc = !self.is_exact();
        merged
            .into_iter()
            .map(|(k, acc)| {
                let slot = if mc && acc.count < MIN_STRATUM_SAMPLES {
                    DSlot { weight: acc.weight, d: 2.0, std_err: 0.0, fallback: true }
                } else {
                    let cond: Vec<f64> = acc.raw.iter().map(|m| m / acc.weight).collect();
                    let d = 2.0 * dtv_shift_slice(&cond);
                    let std_err = if mc { d_std_err(&cond, acc.count) } else { 0.0 };
                    DSlot { weight: acc.weight, d, std_err, fallback: false }
                };
                (k, slot)
            })
            .collect()
    }

    /// `D(W_i* | X_{A_i}, X_{B_i})` per conditioning outcome.
    pub fn d_by_ab(&self, i: usize) -> BTreeMap<(u8, u8), DSlot> {
        self.merged_d(i, |_, a, b| (a, b))
    }

    /// `D(W_i* | X_i, X_{A_i}, X_{B_i})` per conditioning outcome.
    pub fn d_by_xab(&self, i: usize) -> BTreeMap<(u8, u8, u8), DSlot> {
        self.merged_d(i, |x, a, b| (x, a, b))
    }

    /// `D(W_i* | X_i, X_{B_i})` per conditioning outcome.
    pub fn d_by_xb(&self, i: usize) -> BTreeMap<(u8, u8), DSlot> {
        self.merged_d(i, |x, _, b| (x, b))
    }

    /// `D(W_i* | X_{B_i})` per conditioning outcome.
    pub fn d_by_b(&self, i: usize) -> BTreeMap<u8, DSlot> {
        self.merged_d(i, |_, _, b| b)
    }
}

/// `d_TV(Z, Z+1)` for a pmf given as a slice.
fn dtv_shift_slice(probs: &[f64]) -> f64 {
    let mut s = KahanSum::default();
    let mut prev = 0.0;
    for &p in probs {
        s.add((p - prev).abs());
        prev = p;
    }
    s.add(prev);
    (0.5 * s.value()).clamp(0.0, 1.0)
}

/// Conservative standard error of an empirical `D = 2 d_TV(Z, Z+1)`:
/// multinomial propagation of each adjacent difference, summed.
fn d_std_err(cond: &[f64], count: u64) -> f64 {
    if count == 0 {
        return 0.0;
    }
    let n = count as f64;
    let mut se = 0.0;
    let mut prev = 0.0;
    for k in 0..=cond.len() {
        let cur = cond.get(k).copied().unwrap_or(0.0);
        let diff = cur - prev;
        let var = ((cur + prev - diff * diff) / n).max(0.0);
        se += var.sqrt();
        prev = cur;
    }
    se
}

pub(crate) fn pow_table(q: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 8);
    let mut acc = 1.0;
    for _ in 0..(n + 8) {
        out.push(acc);
        acc *= q;
    }
    out
}

/// Exact summary: closed-form convolutions for independent portfolios, the
/// full outcome table otherwise.
pub fn enumerate_terms(model: &PortfolioModel) -> Result<DependenceSummary> {
    enumerate_terms_with_limit(model, None)
}

pub fn enumerate_terms_with_limit(
    model: &PortfolioModel,
    limit: Option<usize>,
) -> Result<DependenceSummary> {
    let n = model.n();
    if model.is_independent() {
        if n > INDEPENDENT_TERMS_MAX {
            return Err(Error::TooLarge(format!(
                "independent term evaluation capped at {INDEPENDENT_TERMS_MAX} names"
            )));
        }
        let ps = model.p_list();
        let mut per_index = Vec::with_capacity(n);
        for i in 0..n {
            let rest: Vec<f64> =
                ps.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &p)| p).collect();
            let w_dist = pmf::poisson_binomial(&rest)?.probs().to_vec();
            let mut cells = BTreeMap::new();
            cells.insert(
                (0u8, 0u8, 0u8),
                Cell { weight: 1.0 - ps[i], count: 0, w_dist: w_dist.clone() },
            );
            cells.insert((1u8, 1u8, 1u8), Cell { weight: ps[i], count: 0, w_dist });
            per_index.push(IndexCells { cells });
        }
        return Ok(DependenceSummary { mode: SummaryMode::Exact, n, per_index });
    }

    let table = model.outcome_table(limit)?;
    let mut per_index = Vec::with_capacity(n);
    for i in 0..n {
        let nb = &model.neighborhoods()[i];
        let mask_a = nb.a.iter().fold(0u64, |m, &j| m | (1 << j));
        let mask_b = nb.b.iter().fold(0u64, |m, &j| m | (1 << j));
        let mut raw: BTreeMap<(u8, u8, u8), Vec<f64>> = BTreeMap::new();
        for (mask, &pr) in table.iter().enumerate() {
            if pr == 0.0 {
                continue;
            }
            let mask = mask as u64;
            let x = (mask >> i & 1) as u8;
            let a = (mask & mask_a).count_ones() as u8;
            let b = (mask & mask_b).count_ones() as u8;
            let w = (mask.count_ones() - b as u32) as usize;
            let hist = raw.entry((x, a, b)).or_insert_with(|| vec![0.0; n + 1]);
            hist[w] += pr;
        }
        let mut cells = BTreeMap::new();
        for (key, hist) in raw {
            let weight: f64 = hist.iter().sum();
            if weight <= 0.0 {
                continue;
            }
            let w_dist = hist.iter().map(|m| m / weight).collect();
            cells.insert(key, Cell { weight, count: 0, w_dist });
        }
        per_index.push(IndexCells { cells });
    }
    Ok(DependenceSummary { mode: SummaryMode::Exact, n, per_index })
}

/// Monte Carlo summary with the same cell structure; deterministic in
/// `(seed, sample index)` via counter-based substreams.
pub fn sample_terms(
    model: &PortfolioModel,
    n_samples: u64,
    seed: u64,
) -> Result<DependenceSummary> {
    if n_samples < 1000 {
        return Err(Error::InvalidParameter(format!(
            "n_samples = {n_samples} must be >= 1000"
        )));
    }
    let n = model.n();
    let masks: Vec<(u64, u64)> = model
        .neighborhoods()
        .iter()
        .map(|nb| {
            (
                nb.a.iter().fold(0u64, |m, &j| m | (1 << j)),
                nb.b.iter().fold(0u64, |m, &j| m | (1 << j)),
            )
        })
        .collect();
    let mut counts: Vec<BTreeMap<(u8, u8, u8), Vec<u64>>> = vec![BTreeMap::new(); n];
    for s in 0..n_samples {
        let mask = model.sample_mask(seed, s);
        let pop = mask.count_ones();
        for i in 0..n {
            let (mask_a, mask_b) = masks[i];
            let x = (mask >> i & 1) as u8;
            let a = (mask & mask_a).count_ones() as u8;
            let b = (mask & mask_b).count_ones() as u8;
            let w = (pop - b as u32) as usize;
            let hist = counts[i].entry((x, a, b)).or_insert_with(|| vec![0u64; n + 1]);
            hist[w] += 1;
        }
    }
    let per_index = counts
        .into_iter()
        .map(|raw| {
            let mut cells = BTreeMap::new();
            for (key, hist) in raw {
                let count: u64 = hist.iter().sum();
                if count == 0 {
                    continue;
                }
                let w_dist = hist.iter().map(|&c| c as f64 / count as f64).collect();
                cells.insert(
                    key,
                    Cell { weight: count as f64 / n_samples as f64, count, w_dist },
                );
            }
            IndexCells { cells }
        })
        .collect();
    Ok(DependenceSummary {
        mode: SummaryMode::MonteCarlo { samples: n_samples, seed },
        n,
        per_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn block_30() -> Vec<f64> {
        let mut ps = vec![0.06; 20];
        ps.extend(vec![0.07; 10]);
        ps
    }

    #[test]
    fn independent_closed_forms() {
        // E[q^{W_n}] = prod (1 - p p_j) and E[q^{W_i}] = prod over j != i.
        let ps = vec![0.06; 10];
        let model = PortfolioModel::independent(ps.clone()).unwrap();
        let summary = enumerate_terms(&model).unwrap();
        let p = 0.06;
        let q = 1.0 - p;
        let (e_q_wn, se) = summary.e_q_wn(q);
        let expect: f64 = ps.iter().map(|pj| 1.0 - p * pj).product();
        assert_relative_eq!(e_q_wn, expect, epsilon = 1e-13);
        assert_relative_eq!(e_q_wn, 0.9645776, max_relative = 1e-6);
        assert_eq!(se, 0.0);

        let qp = pow_table(q, 10);
        let (e_q_wi, _) =
            summary.cell_expectation(3, |_, a, b, w| qp[w + (b - a) as usize]);
        let expect_i: f64 =
            ps.iter().enumerate().filter(|&(j, _)| j != 3).map(|(_, pj)| 1.0 - p * pj).product();
        assert_relative_eq!(e_q_wi, expect_i, epsilon = 1e-13);
    }

    #[test]
    fn independent_equals_product_joint() {
        // A product table with singleton neighborhoods must reproduce the
        // closed-form independent path exactly.
        let ps = vec![0.1, 0.3, 0.2, 0.45];
        let ind = PortfolioModel::independent(ps.clone()).unwrap();
        let table = ind.outcome_table(None).unwrap();
        let singletons = (0..4)
            .map(|i| crate::dependence::Neighborhood { a: vec![i], b: vec![i] })
            .collect();
        let joint = PortfolioModel::explicit_joint(ps, table, None)
            .unwrap()
            .with_neighborhoods(singletons)
            .unwrap();
        let si = enumerate_terms(&ind).unwrap();
        let sj = enumerate_terms(&joint).unwrap();
        let q = 0.8;
        let qp = pow_table(q, 4);
        for i in 0..4 {
            let (a1, _) = si.cell_expectation(i, |_, a, b, w| qp[w + (b - a) as usize]);
            let (a2, _) = sj.cell_expectation(i, |_, a, b, w| qp[w + (b - a) as usize]);
            assert_relative_eq!(a1, a2, epsilon = 1e-12);
            let (t1, _) = si.cell_expectation(i, |x, _, b, w| x as f64 * qp[w + b as usize]);
            let (t2, _) = sj.cell_expectation(i, |x, _, b, w| x as f64 * qp[w + b as usize]);
            assert_relative_eq!(t1, t2, epsilon = 1e-12);
        }
    }

    #[test]
    fn block_portfolio_terms_mean() {
        let model = PortfolioModel::independent(block_30()).unwrap();
        let summary = enumerate_terms(&model).unwrap();
        // E[X_i] recovered from cells.
        for i in [0usize, 25] {
            let (e_x, _) = summary.cell_expectation(i, |x, _, _, _| x as f64);
            assert_relative_eq!(e_x, model.p_list()[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn latent_cells_are_probabilities() {
        let ps = vec![0.2, 0.4, 0.1, 0.3, 0.25, 0.15];
        let model = PortfolioModel::latent_one_dependent(ps, 0.7).unwrap();
        let summary = enumerate_terms(&model).unwrap();
        for i in 0..6 {
            let total: f64 =
                summary.index_cells(i).cells.values().map(|c| c.weight).sum();
            assert!((total - 1.0).abs() < 1e-11);
            for slot in summary.d_by_b(i).values() {
                assert!(slot.d >= 0.0 && slot.d <= 2.0);
            }
        }
        // E[q^{W_n}] must agree whichever index it is read from.
        let (a, _) = summary.e_q_wn(0.9);
        let qp = pow_table(0.9, 6);
        let (b, _) = summary.cell_expectation(4, |_, _, bb, w| qp[w + bb as usize]);
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_and_consistent() {
        let ps = vec![0.2, 0.4, 0.3, 0.1];
        let model = PortfolioModel::latent_one_dependent(ps, 0.8).unwrap();
        let exact = enumerate_terms(&model).unwrap();
        let mc1 = sample_terms(&model, 30_000, 5).unwrap();
        let mc2 = sample_terms(&model, 30_000, 5).unwrap();
        let q = 0.75;
        let qp = pow_table(q, 4);
        for i in 0..4 {
            let f = |x: u8, _a: u8, b: u8, w: usize| x as f64 * qp[w + b as usize];
            let (v1, se1) = mc1.cell_expectation(i, f);
            let (v2, _) = mc2.cell_expectation(i, f);
            assert_eq!(v1, v2, "same seed must be bit-identical");
            let (ve, _) = exact.cell_expectation(i, f);
            assert!(
                (v1 - ve).abs() <= 4.0 * se1 + 1e-12,
                "index {i}: mc {v1} vs exact {ve} (se {se1})"
            );
        }
    }

    #[test]
    fn thin_strata_fall_back_to_two() {
        // A rare cell: p very small makes (x=1, ...) strata thin.
        let ps = vec![0.001, 0.5, 0.5];
        let model = PortfolioModel::latent_one_dependent(ps, 1.0).unwrap();
        let mc = sample_terms(&model, 1000, 3).unwrap();
        let any_fallback = (0..3).any(|i| mc.d_by_xab(i).values().any(|s| s.fallback && s.d == 2.0));
        assert!(any_fallback, "expected at least one under-populated stratum");
    }
}
