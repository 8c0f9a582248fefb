//! Locally dependent Bernoulli indicator portfolios.
//!
//! A portfolio carries marginal default probabilities `p_i` and, per index,
//! a pair of neighborhoods `A_i ⊆ B_i` such that `X_i` is independent of the
//! indicators outside `A_i` and the block `X_{A_i}` is independent of the
//! indicators outside `B_i`. Three laws are shipped:
//!
//! * `Independent` — the classical case, `A_i = B_i = {i}`.
//! * `ExplicitJoint` — a full table over `{0,1}^n`.
//! * `LatentOneDependent` — a one-dependent moving-window threshold model
//!   over shared latent uniforms, with a mixing weight `theta` giving the
//!   probability that an indicator follows the shared field rather than
//!   private randomness. Its finite-dimensional laws are integrated exactly
//!   (piecewise polynomials, no quadrature grid), so marginals match the
//!   requested `p_i` to closed-form accuracy.

mod summary;

pub use summary::{
    enumerate_terms, enumerate_terms_with_limit, sample_terms, Cell, DSlot, DependenceSummary,
    IndexCells, SummaryMode, MIN_STRATUM_SAMPLES,
};
pub(crate) use summary::pow_table;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::{self, IntegerPmf, KahanSum};
use crate::poly::Message;
use crate::rng::CounterRng;

/// Largest explicit-joint table: `2^22` outcomes.
pub const MAX_JOINT_BITS: usize = 22;
/// Largest latent chain that is enumerated exactly.
pub const MAX_LATENT_BITS: usize = 14;

/// Index neighborhoods, stored as sorted 0-based index lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DependenceLaw {
    Independent,
    ExplicitJoint {
        /// `table[mask]` is the probability of the outcome whose bit `i`
        /// equals `X_i`.
        table: Vec<f64>,
    },
    LatentOneDependent {
        /// Probability that an indicator is driven by the shared latent
        /// field; `1 - theta` of the time it uses private randomness.
        theta: f64,
        /// Per-index thresholds on `U_i + U_{i+1}`, calibrated so the
        /// marginal default probability is exactly `p_i`.
        thresholds: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioModel {
    n: usize,
    p_list: Vec<f64>,
    neighborhoods: Vec<Neighborhood>,
    law: DependenceLaw,
}

fn validate_p_list(p_list: &[f64]) -> Result<()> {
    if p_list.is_empty() {
        return Err(Error::InvalidParameter("empty portfolio".into()));
    }
    for (i, &p) in p_list.iter().enumerate() {
        if !p.is_finite() || p <= 0.0 || p >= 1.0 {
            return Err(Error::InvalidParameter(format!("p[{i}] = {p} not in (0, 1)")));
        }
    }
    Ok(())
}

fn window(i: usize, radius: usize, n: usize) -> Vec<usize> {
    (i.saturating_sub(radius)..=(i + radius).min(n - 1)).collect()
}

/// Threshold with `P(U + U' > t) = p` for two independent uniforms.
pub fn latent_threshold(p: f64) -> f64 {
    if p <= 0.5 {
        2.0 - (2.0 * p).sqrt()
    } else {
        (2.0 * (1.0 - p)).sqrt()
    }
}

/// `E[1{U1+U2 > t1} 1{U2+U3 > t2}]` for independent uniforms, exactly.
fn latent_pair_expectation(t1: f64, t2: f64) -> f64 {
    Message::unit().constrain(t1, true, 1.0, 0.0).constrain(t2, true, 1.0, 0.0).total()
}

impl PortfolioModel {
    pub fn independent(p_list: Vec<f64>) -> Result<Self> {
        validate_p_list(&p_list)?;
        let n = p_list.len();
        let neighborhoods =
            (0..n).map(|i| Neighborhood { a: vec![i], b: vec![i] }).collect();
        Ok(Self { n, p_list, neighborhoods, law: DependenceLaw::Independent })
    }

    pub fn latent_one_dependent(p_list: Vec<f64>, theta: f64) -> Result<Self> {
        validate_p_list(&p_list)?;
        if !theta.is_finite() || theta <= 0.0 || theta > 1.0 {
            return Err(Error::InvalidParameter(format!("theta = {theta} not in (0, 1]")));
        }
        let n = p_list.len();
        let thresholds = p_list.iter().map(|&p| latent_threshold(p)).collect();
        let neighborhoods = (0..n)
            .map(|i| Neighborhood { a: window(i, 1, n), b: window(i, 2, n) })
            .collect();
        Ok(Self {
            n,
            p_list,
            neighborhoods,
            law: DependenceLaw::LatentOneDependent { theta, thresholds },
        })
    }

    /// A model given by its full joint table. Marginals must match `p_list`
    /// within `1e-9`; `neighborhoods = None` falls back to the always-valid
    /// full sets.
    pub fn explicit_joint(
        p_list: Vec<f64>,
        table: Vec<f64>,
        neighborhoods: Option<Vec<Neighborhood>>,
    ) -> Result<Self> {
        validate_p_list(&p_list)?;
        let n = p_list.len();
        if n > MAX_JOINT_BITS {
            return Err(Error::TooLarge(format!(
                "explicit joint table for n = {n} exceeds {MAX_JOINT_BITS} indices"
            )));
        }
        if table.len() != 1usize << n {
            return Err(Error::InvalidParameter(format!(
                "joint table has {} entries, expected 2^{n}",
                table.len()
            )));
        }
        let mut total = KahanSum::default();
        for (m, &pr) in table.iter().enumerate() {
            if !pr.is_finite() || pr < 0.0 {
                return Err(Error::InvalidParameter(format!("table[{m}] = {pr}")));
            }
            total.add(pr);
        }
        if (total.value() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "joint table mass {} deviates from 1",
                total.value()
            )));
        }
        for (i, &pi) in p_list.iter().enumerate() {
            let mut marg = KahanSum::default();
            for (m, &pr) in table.iter().enumerate() {
                if m >> i & 1 == 1 {
                    marg.add(pr);
                }
            }
            if (marg.value() - pi).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "marginal {i} is {} but p[{i}] = {pi}",
                    marg.value()
                )));
            }
        }
        let neighborhoods = match neighborhoods {
            Some(nb) => nb,
            None => {
                let full: Vec<usize> = (0..n).collect();
                (0..n).map(|_| Neighborhood { a: full.clone(), b: full.clone() }).collect()
            }
        };
        let model = Self { n, p_list, neighborhoods, law: DependenceLaw::ExplicitJoint { table } };
        model.validate_neighborhood_shape()?;
        Ok(model)
    }

    /// Replaces the automatic neighborhoods. The structural containment
    /// rules are enforced here; for the latent law the sets must also cover
    /// the latent sharing windows, which is what makes them valid.
    pub fn with_neighborhoods(mut self, neighborhoods: Vec<Neighborhood>) -> Result<Self> {
        self.neighborhoods = neighborhoods;
        self.validate_neighborhood_shape()?;
        if let DependenceLaw::LatentOneDependent { .. } = self.law {
            for (i, nb) in self.neighborhoods.iter().enumerate() {
                for j in window(i, 1, self.n) {
                    if !nb.a.contains(&j) {
                        return Err(Error::InvalidParameter(format!(
                            "latent law requires {j} in A_{i}"
                        )));
                    }
                }
                for &ja in &nb.a {
                    for j in window(ja, 1, self.n) {
                        if !nb.b.contains(&j) {
                            return Err(Error::InvalidParameter(format!(
                                "latent law requires {j} in B_{i}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(self)
    }

    fn validate_neighborhood_shape(&self) -> Result<()> {
        if self.neighborhoods.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "{} neighborhoods for {} indices",
                self.neighborhoods.len(),
                self.n
            )));
        }
        for (i, nb) in self.neighborhoods.iter().enumerate() {
            let sorted = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
            if !sorted(&nb.a) || !sorted(&nb.b) {
                return Err(Error::InvalidParameter(format!(
                    "neighborhood {i} must be strictly sorted"
                )));
            }
            if nb.a.iter().any(|&j| j >= self.n) || nb.b.iter().any(|&j| j >= self.n) {
                return Err(Error::InvalidParameter(format!("neighborhood {i} out of range")));
            }
            if !nb.a.contains(&i) {
                return Err(Error::InvalidParameter(format!("i = {i} missing from A_{i}")));
            }
            if !nb.a.iter().all(|j| nb.b.contains(j)) {
                return Err(Error::InvalidParameter(format!("A_{i} not contained in B_{i}")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p_list(&self) -> &[f64] {
        &self.p_list
    }

    pub fn neighborhoods(&self) -> &[Neighborhood] {
        &self.neighborhoods
    }

    pub fn law(&self) -> &DependenceLaw {
        &self.law
    }

    pub fn is_independent(&self) -> bool {
        matches!(self.law, DependenceLaw::Independent)
    }

    /// Sum of the marginal default probabilities.
    pub fn lambda(&self) -> f64 {
        let mut s = KahanSum::default();
        for &p in &self.p_list {
            s.add(p);
        }
        s.value()
    }

    /// Whether the default-count law can be computed exactly.
    pub fn enumerable(&self, limit: Option<usize>) -> bool {
        match &self.law {
            DependenceLaw::Independent => true,
            DependenceLaw::ExplicitJoint { .. } => self.n <= limit.unwrap_or(MAX_JOINT_BITS),
            DependenceLaw::LatentOneDependent { .. } => {
                self.n <= limit.unwrap_or(MAX_LATENT_BITS)
            }
        }
    }

    /// Exact mean and variance of the default count, available for every
    /// shipped law at any size (the latent chain has closed-form pair
    /// expectations).
    pub fn mean_variance(&self) -> (f64, f64) {
        match &self.law {
            DependenceLaw::Independent => {
                let mut m = KahanSum::default();
                let mut v = KahanSum::default();
                for &p in &self.p_list {
                    m.add(p);
                    v.add(p * (1.0 - p));
                }
                (m.value(), v.value())
            }
            DependenceLaw::ExplicitJoint { .. } => self
                .exact_loss_pmf(None)
                .expect("explicit joint is enumerable by construction")
                .mean_variance(),
            DependenceLaw::LatentOneDependent { theta, thresholds } => {
                let mut m = KahanSum::default();
                let mut v = KahanSum::default();
                for &p in &self.p_list {
                    m.add(p);
                    v.add(p * (1.0 - p));
                }
                for i in 0..self.n - 1 {
                    let joint = latent_pair_expectation(thresholds[i], thresholds[i + 1]);
                    let cov = theta * theta * (joint - self.p_list[i] * self.p_list[i + 1]);
                    v.add(2.0 * cov);
                }
                (m.value(), v.value())
            }
        }
    }

    /// The full joint table over `{0,1}^n`, built exactly.
    pub fn outcome_table(&self, limit: Option<usize>) -> Result<Vec<f64>> {
        match &self.law {
            DependenceLaw::Independent => {
                let cap = limit.unwrap_or(MAX_JOINT_BITS);
                if self.n > cap {
                    return Err(Error::TooLarge(format!(
                        "product table for n = {} exceeds {cap} bits; use sample_terms",
                        self.n
                    )));
                }
                let mut table = vec![1.0];
                for &p in &self.p_list {
                    let q = 1.0 - p;
                    let mut next = vec![0.0; table.len() * 2];
                    for (m, &pr) in table.iter().enumerate() {
                        next[m] = pr * q;
                        next[m | table.len()] = pr * p;
                    }
                    table = next;
                }
                Ok(table)
            }
            DependenceLaw::ExplicitJoint { table } => Ok(table.clone()),
            DependenceLaw::LatentOneDependent { theta, thresholds } => {
                let cap = limit.unwrap_or(MAX_LATENT_BITS);
                if self.n > cap {
                    return Err(Error::TooLarge(format!(
                        "latent chain for n = {} exceeds {cap} exactly enumerated indices; \
                         use sample_terms",
                        self.n
                    )));
                }
                struct Chain<'a> {
                    thresholds: &'a [f64],
                    ps: &'a [f64],
                    theta: f64,
                }
                impl Chain<'_> {
                    // Integrates out one shared latent per step, branching on
                    // the indicator outcome; prefixes share their messages.
                    fn fill(&self, i: usize, msg: &Message, mask: usize, out: &mut [f64]) {
                        if i == self.ps.len() {
                            out[mask] = msg.total();
                            return;
                        }
                        let total = msg.total();
                        let up = msg.constrain(
                            self.thresholds[i],
                            true,
                            self.theta,
                            (1.0 - self.theta) * self.ps[i] * total,
                        );
                        self.fill(i + 1, &up, mask | (1 << i), out);
                        let down = msg.constrain(
                            self.thresholds[i],
                            false,
                            self.theta,
                            (1.0 - self.theta) * (1.0 - self.ps[i]) * total,
                        );
                        self.fill(i + 1, &down, mask, out);
                    }
                }
                let mut table = vec![0.0; 1usize << self.n];
                let chain = Chain { thresholds, ps: &self.p_list, theta: *theta };
                chain.fill(0, &Message::unit(), 0, &mut table);
                Ok(table)
            }
        }
    }

    /// Exact law of the default count `W_n`.
    pub fn exact_loss_pmf(&self, limit: Option<usize>) -> Result<IntegerPmf> {
        match &self.law {
            DependenceLaw::Independent => pmf::poisson_binomial(&self.p_list),
            _ => {
                let table = self.outcome_table(limit)?;
                let mut probs = vec![0.0f64; self.n + 1];
                let mut carry = vec![0.0f64; self.n + 1];
                for (mask, &pr) in table.iter().enumerate() {
                    let k = mask.count_ones() as usize;
                    let s = probs[k] + pr;
                    let err = if probs[k].abs() >= pr.abs() {
                        (probs[k] - s) + pr
                    } else {
                        (pr - s) + probs[k]
                    };
                    probs[k] = s;
                    carry[k] += err;
                }
                for k in 0..=self.n {
                    probs[k] = (probs[k] + carry[k]).max(0.0);
                }
                IntegerPmf::from_unnormalized(probs)
            }
        }
    }

    /// One joint outcome as a bitmask, deterministic in `(seed, index)`.
    pub fn sample_mask(&self, seed: u64, index: u64) -> u64 {
        let mut rng = CounterRng::from_seed_stream(seed, index);
        match &self.law {
            DependenceLaw::Independent => {
                let mut mask = 0u64;
                for (i, &p) in self.p_list.iter().enumerate() {
                    if rng.next_f64() < p {
                        mask |= 1 << i;
                    }
                }
                mask
            }
            DependenceLaw::ExplicitJoint { table } => {
                let u = rng.next_f64();
                let mut acc = 0.0;
                for (mask, &pr) in table.iter().enumerate() {
                    acc += pr;
                    if u < acc {
                        return mask as u64;
                    }
                }
                table.len() as u64 - 1
            }
            DependenceLaw::LatentOneDependent { theta, thresholds } => {
                let latents: Vec<f64> = (0..=self.n).map(|_| rng.next_f64()).collect();
                let mut mask = 0u64;
                for i in 0..self.n {
                    // Both coins are always drawn to keep the stream layout
                    // independent of which branch is taken.
                    let shared = rng.next_f64() < *theta;
                    let private = rng.next_f64() < self.p_list[i];
                    let z = latents[i] + latents[i + 1] > thresholds[i];
                    if if shared { z } else { private } {
                        mask |= 1 << i;
                    }
                }
                mask
            }
        }
    }

    /// Largest factorization violation over the declared neighborhoods:
    /// `X_{A_i}` against `X_{A_i^c}` restricted to `X_i`, and the block
    /// `X_{A_i}` against `X_{B_i^c}`. Zero (to roundoff) certifies that the
    /// declared local dependence structure actually holds.
    pub fn max_independence_violation(&self, limit: Option<usize>) -> Result<f64> {
        let table = self.outcome_table(limit)?;
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let nb = &self.neighborhoods[i];
            let mask_a = index_mask(&nb.a);
            let mask_b = index_mask(&nb.b);
            let self_bit = 1u64 << i;
            let rest_a = !mask_a;
            worst = worst.max(factorization_gap(&table, self.n, self_bit, rest_a));
            worst = worst.max(factorization_gap(&table, self.n, mask_a, !mask_b));
        }
        Ok(worst)
    }
}

fn index_mask(indices: &[usize]) -> u64 {
    indices.iter().fold(0u64, |m, &i| m | (1 << i))
}

/// Max |P(left = v, right = w) − P(left = v) P(right = w)| over all joint
/// assignments of the two (disjoint) index blocks.
fn factorization_gap(table: &[f64], n: usize, left_mask: u64, right_mask: u64) -> f64 {
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let left_mask = left_mask & all;
    let right_mask = right_mask & all;
    use std::collections::HashMap;
    let mut joint: HashMap<(u64, u64), f64> = HashMap::new();
    let mut left: HashMap<u64, f64> = HashMap::new();
    let mut right: HashMap<u64, f64> = HashMap::new();
    for (m, &pr) in table.iter().enumerate() {
        let lv = m as u64 & left_mask;
        let rv = m as u64 & right_mask;
        *joint.entry((lv, rv)).or_default() += pr;
        *left.entry(lv).or_default() += pr;
        *right.entry(rv).or_default() += pr;
    }
    let mut worst = 0.0f64;
    for (&(lv, rv), &pr) in &joint {
        worst = worst.max((pr - left[&lv] * right[&rv]).abs());
    }
    // Joint cells with zero mass but nonzero product.
    for (&lv, &lp) in &left {
        for (&rv, &rp) in &right {
            if !joint.contains_key(&(lv, rv)) {
                worst = worst.max(lp * rp);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn independent_loss_pmf_matches_convolution() {
        let m = PortfolioModel::independent(vec![0.5, 0.5]).unwrap();
        let pmf = m.exact_loss_pmf(None).unwrap();
        assert_relative_eq!(pmf.probs()[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(pmf.probs()[1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(pmf.probs()[2], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn product_table_agrees_with_popcount_collapse() {
        let ps = vec![0.2, 0.5, 0.7, 0.11];
        let m = PortfolioModel::independent(ps.clone()).unwrap();
        let table = m.outcome_table(None).unwrap();
        let mut by_count = [0.0; 5];
        for (mask, &pr) in table.iter().enumerate() {
            by_count[mask.count_ones() as usize] += pr;
        }
        let pb = pmf::poisson_binomial(&ps).unwrap();
        for (k, &expected) in pb.probs().iter().enumerate() {
            assert_relative_eq!(by_count[k], expected, epsilon = 1e-13);
        }
    }

    #[test]
    fn latent_table_is_a_distribution_with_right_marginals() {
        let ps = vec![0.06, 0.3, 0.5, 0.77, 0.12, 0.4];
        let m = PortfolioModel::latent_one_dependent(ps.clone(), 1.0).unwrap();
        let table = m.outcome_table(None).unwrap();
        let total: f64 = table.iter().sum();
        assert!((total - 1.0).abs() < 1e-11);
        for (i, &p) in ps.iter().enumerate() {
            let marg: f64 = table
                .iter()
                .enumerate()
                .filter(|(mask, _)| mask >> i & 1 == 1)
                .map(|(_, pr)| pr)
                .sum();
            assert!((marg - p).abs() < 1e-9, "marginal {i}: {marg} vs {p}");
        }
    }

    #[test]
    fn latent_theta_mixes_toward_independence() {
        let ps = vec![0.3; 5];
        let strong = PortfolioModel::latent_one_dependent(ps.clone(), 1.0).unwrap();
        let weak = PortfolioModel::latent_one_dependent(ps.clone(), 0.2).unwrap();
        let (_, v_strong) = strong.mean_variance();
        let (_, v_weak) = weak.mean_variance();
        let v_indep: f64 = ps.iter().map(|p| p * (1.0 - p)).sum();
        assert!(v_strong > v_weak);
        assert!((v_weak - v_indep).abs() < (v_strong - v_indep).abs());
    }

    #[test]
    fn latent_closed_form_moments_match_enumeration() {
        let ps = vec![0.1, 0.25, 0.4, 0.07, 0.33];
        for &theta in &[1.0, 0.6] {
            let m = PortfolioModel::latent_one_dependent(ps.clone(), theta).unwrap();
            let (mean_cf, var_cf) = m.mean_variance();
            let (mean_en, var_en) = m.exact_loss_pmf(None).unwrap().mean_variance();
            assert_relative_eq!(mean_cf, mean_en, epsilon = 1e-10);
            assert_relative_eq!(var_cf, var_en, epsilon = 1e-10);
        }
    }

    #[test]
    fn latent_neighborhoods_are_certified_independent() {
        let ps = vec![0.15, 0.4, 0.22, 0.6, 0.09, 0.31];
        for &theta in &[1.0, 0.5] {
            let m = PortfolioModel::latent_one_dependent(ps.clone(), theta).unwrap();
            let gap = m.max_independence_violation(None).unwrap();
            assert!(gap < 1e-10, "factorization gap {gap}");
        }
    }

    #[test]
    fn explicit_joint_product_table_matches_independent() {
        let ps = vec![0.2, 0.35, 0.5];
        let ind = PortfolioModel::independent(ps.clone()).unwrap();
        let table = ind.outcome_table(None).unwrap();
        let joint = PortfolioModel::explicit_joint(ps, table, None).unwrap();
        let a = ind.exact_loss_pmf(None).unwrap();
        let b = joint.exact_loss_pmf(None).unwrap();
        for k in 0..a.probs().len() {
            assert!((a.probs()[k] - b.probs()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn explicit_joint_rejects_marginal_mismatch() {
        // Comonotone pair has marginals 0.5, not 0.4.
        let table = vec![0.5, 0.0, 0.0, 0.5];
        assert!(PortfolioModel::explicit_joint(vec![0.4, 0.4], table, None).is_err());
    }

    #[test]
    fn neighborhood_shape_is_enforced() {
        let m = PortfolioModel::independent(vec![0.1, 0.2, 0.3]).unwrap();
        // A_i must contain i.
        let bad = m.clone().with_neighborhoods(vec![
            Neighborhood { a: vec![1], b: vec![0, 1] },
            Neighborhood { a: vec![1], b: vec![1] },
            Neighborhood { a: vec![2], b: vec![2] },
        ]);
        assert!(bad.is_err());
        // A_i must sit inside B_i.
        let bad = m.with_neighborhoods(vec![
            Neighborhood { a: vec![0, 1], b: vec![0] },
            Neighborhood { a: vec![1], b: vec![1] },
            Neighborhood { a: vec![2], b: vec![2] },
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_roughly_calibrated() {
        let ps = vec![0.2, 0.5, 0.35];
        let m = PortfolioModel::latent_one_dependent(ps.clone(), 0.8).unwrap();
        let a: Vec<u64> = (0..50).map(|i| m.sample_mask(9, i)).collect();
        let b: Vec<u64> = (0..50).map(|i| m.sample_mask(9, i)).collect();
        assert_eq!(a, b);
        let n_samples = 40_000u64;
        let mut counts = [0u64; 3];
        for s in 0..n_samples {
            let mask = m.sample_mask(123, s);
            for (i, c) in counts.iter_mut().enumerate() {
                *c += mask >> i & 1;
            }
        }
        for (i, &p) in ps.iter().enumerate() {
            let freq = counts[i] as f64 / n_samples as f64;
            let se = (p * (1.0 - p) / n_samples as f64).sqrt();
            assert!((freq - p).abs() < 5.0 * se, "marginal {i}: {freq} vs {p}");
        }
    }

    #[test]
    fn size_limits_error_out() {
        let ps = vec![0.1; MAX_LATENT_BITS + 1];
        let m = PortfolioModel::latent_one_dependent(ps, 1.0).unwrap();
        assert!(matches!(m.outcome_table(None), Err(Error::TooLarge(_))));
    }
}
