//! JSON run configuration: a portfolio, its dependence law, optional
//! neighborhoods, and tranche specs.
//!
//! ```json
//! {
//!   "n": 30,
//!   "p": {"blocks": [{"count": 20, "p": 0.06}, {"count": 10, "p": 0.07}]},
//!   "law": "independent",
//!   "neighborhoods": "auto",
//!   "tranches": [{"R": 0.4, "z_star": 0.03, "label": "mezzanine"}]
//! }
//! ```
//!
//! `p` is either a plain array or the block syntax above; `law` is
//! `"independent"`, `{"latent_one_dependent": {"theta": 0.8}}`, or
//! `{"explicit_joint": {"table": [...]}}`. Neighborhood index lists are
//! 0-based.

use serde::Deserialize;

use crate::cdo::TrancheSpec;
use crate::dependence::{Neighborhood, PortfolioModel};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub p: ProbabilitySpec,
    #[serde(default)]
    pub law: LawSpec,
    #[serde(default)]
    pub neighborhoods: NeighborhoodSpec,
    #[serde(default)]
    pub tranches: Vec<TrancheConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ProbabilitySpec {
    List(Vec<f64>),
    Blocks { blocks: Vec<Block> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub count: usize,
    pub p: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum LawSpec {
    Named(String),
    Latent { latent_one_dependent: LatentConfig },
    Joint { explicit_joint: JointConfig },
}

impl Default for LawSpec {
    fn default() -> Self {
        LawSpec::Named("independent".into())
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LatentConfig {
    /// Probability that an indicator follows the shared latent field.
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_theta() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    pub table: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum NeighborhoodSpec {
    Named(String),
    Explicit(Vec<NeighborhoodConfig>),
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        NeighborhoodSpec::Named("auto".into())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborhoodConfig {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrancheConfig {
    #[serde(rename = "R")]
    pub recovery: f64,
    pub z_star: f64,
    #[serde(default)]
    pub label: String,
}

/// Parses a JSON document into a model plus tranche specs.
pub fn parse(json: &str) -> Result<(PortfolioModel, Vec<TrancheSpec>)> {
    let cfg: RunConfig =
        serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
    build(cfg)
}

pub fn build(cfg: RunConfig) -> Result<(PortfolioModel, Vec<TrancheSpec>)> {
    let p_list = match cfg.p {
        ProbabilitySpec::List(v) => v,
        ProbabilitySpec::Blocks { blocks } => {
            let mut v = Vec::new();
            for b in blocks {
                v.extend(std::iter::repeat_n(b.p, b.count));
            }
            v
        }
    };
    if p_list.len() != cfg.n {
        return Err(Error::Config(format!(
            "n = {} but {} probabilities were given",
            cfg.n,
            p_list.len()
        )));
    }

    let model = match cfg.law {
        LawSpec::Named(name) if name == "independent" => PortfolioModel::independent(p_list)?,
        LawSpec::Named(name) => {
            return Err(Error::Config(format!("unknown law \"{name}\"")));
        }
        LawSpec::Latent { latent_one_dependent } => {
            PortfolioModel::latent_one_dependent(p_list, latent_one_dependent.theta)?
        }
        LawSpec::Joint { explicit_joint } => {
            PortfolioModel::explicit_joint(p_list, explicit_joint.table, None)?
        }
    };
    let model = match cfg.neighborhoods {
        NeighborhoodSpec::Named(name) if name == "auto" => model,
        NeighborhoodSpec::Named(name) => {
            return Err(Error::Config(format!("unknown neighborhood spec \"{name}\"")));
        }
        NeighborhoodSpec::Explicit(list) => model.with_neighborhoods(
            list.into_iter().map(|nb| Neighborhood { a: nb.a, b: nb.b }).collect(),
        )?,
    };

    let tranches = cfg
        .tranches
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let label = if t.label.is_empty() { format!("tranche_{i}") } else { t.label };
            TrancheSpec::new(t.recovery, t.z_star, label)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok((model, tranches))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::DependenceLaw;

    #[test]
    fn block_syntax_builds_graded_portfolio() {
        let json = r#"{
            "n": 30,
            "p": {"blocks": [{"count": 20, "p": 0.06}, {"count": 10, "p": 0.07}]},
            "law": "independent",
            "tranches": [{"R": 0.4, "z_star": 0.03, "label": "mezz"}]
        }"#;
        let (model, tranches) = parse(json).unwrap();
        assert_eq!(model.n(), 30);
        assert_eq!(model.p_list()[0], 0.06);
        assert_eq!(model.p_list()[29], 0.07);
        assert!(model.is_independent());
        assert_eq!(tranches.len(), 1);
        assert_eq!(tranches[0].label, "mezz");
    }

    #[test]
    fn latent_law_with_theta() {
        let json = r#"{
            "n": 4,
            "p": [0.1, 0.2, 0.1, 0.3],
            "law": {"latent_one_dependent": {"theta": 0.7}}
        }"#;
        let (model, tranches) = parse(json).unwrap();
        assert!(matches!(model.law(), DependenceLaw::LatentOneDependent { theta, .. } if *theta == 0.7));
        assert!(tranches.is_empty());
        assert_eq!(model.neighborhoods()[0].b, vec![0, 1, 2]);
    }

    #[test]
    fn explicit_joint_from_table() {
        let json = r#"{
            "n": 2,
            "p": [0.5, 0.5],
            "law": {"explicit_joint": {"table": [0.5, 0.0, 0.0, 0.5]}}
        }"#;
        let (model, _) = parse(json).unwrap();
        assert!(matches!(model.law(), DependenceLaw::ExplicitJoint { .. }));
    }

    #[test]
    fn errors_are_config_errors() {
        assert!(matches!(parse("{"), Err(Error::Config(_))));
        assert!(matches!(
            parse(r#"{"n": 2, "p": [0.5], "law": "independent"}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            parse(r#"{"n": 1, "p": [0.5], "law": "weird"}"#),
            Err(Error::Config(_))
        ));
    }
}
