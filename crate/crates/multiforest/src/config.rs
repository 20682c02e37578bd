//! Training configuration and variant selection.

use crate::error::{Error, Result};

/// Whether class proportions enter split criteria squared or raw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantProportions {
    Squared,
    NonSquared,
}

/// How binary splits are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantBinary {
    Gini,
    AssignClasses,
}

/// A criterion pairing, named like `wsquared_wgini`: with/without squared
/// proportions, with/without the Gini binary criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Variant {
    pub proportions: VariantProportions,
    pub binary: VariantBinary,
}

impl Default for Variant {
    /// The recommended pairing: squared proportions, Gini binary splits.
    fn default() -> Self {
        Variant {
            proportions: VariantProportions::Squared,
            binary: VariantBinary::Gini,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = match self.proportions {
            VariantProportions::Squared => "wsquared",
            VariantProportions::NonSquared => "wosquared",
        };
        let b = match self.binary {
            VariantBinary::Gini => "wgini",
            VariantBinary::AssignClasses => "wogini",
        };
        write!(f, "{p}_{b}")
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, b) = s
            .split_once('_')
            .ok_or_else(|| Error::config(format!("unknown variant {s:?}")))?;
        let proportions = match p {
            "wsquared" => VariantProportions::Squared,
            "wosquared" => VariantProportions::NonSquared,
            _ => return Err(Error::config(format!("unknown variant {s:?}"))),
        };
        let binary = match b {
            "wgini" => VariantBinary::Gini,
            "wogini" => VariantBinary::AssignClasses,
            _ => return Err(Error::config(format!("unknown variant {s:?}"))),
        };
        Ok(Variant {
            proportions,
            binary,
        })
    }
}

/// How a point prediction is derived from the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionRule {
    /// Class with the highest averaged probability; ties go to the lowest
    /// class index.
    MaxProbability,
    /// Most frequent per-tree winner; ties go to the lowest class index at
    /// both stages.
    MajorityVote,
}

impl std::str::FromStr for PredictionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_probability" => Ok(PredictionRule::MaxProbability),
            "majority_vote" => Ok(PredictionRule::MajorityVote),
            other => Err(Error::config(format!("unknown prediction rule {other:?}"))),
        }
    }
}

/// Forest training parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MufConfig {
    /// Number of trees.
    pub ntree: usize,
    /// Candidate covariates per split; `None` resolves to `floor(sqrt(p))`
    /// at training time.
    pub mtry: Option<usize>,
    /// Multi-way candidate split-point sets per drawn covariate.
    pub npervar: usize,
    /// Nodes of at most this size become leaves.
    pub nmin: usize,
    /// In-bag fraction; each tree trains on `floor(prop * n)` observations
    /// drawn without replacement.
    pub prop: f64,
    /// Probability that a node attempts a multi-way split instead of a
    /// binary one. Zero gives a pure binary-split forest.
    pub multiway_probability: f64,
    pub variant: Variant,
    pub prediction_rule: PredictionRule,
    /// Master seed; all randomness is derived from it.
    pub seed: u64,
}

impl Default for MufConfig {
    fn default() -> Self {
        MufConfig {
            ntree: 5000,
            mtry: None,
            npervar: 5,
            nmin: 5,
            prop: 0.7,
            multiway_probability: 0.5,
            variant: Variant::default(),
            prediction_rule: PredictionRule::MaxProbability,
            seed: 0,
        }
    }
}

impl MufConfig {
    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        if self.ntree == 0 {
            return Err(Error::config("ntree must be at least 1"));
        }
        if self.npervar == 0 {
            return Err(Error::config("npervar must be at least 1"));
        }
        if self.nmin == 0 {
            return Err(Error::config("nmin must be at least 1"));
        }
        if !(self.prop > 0.0 && self.prop <= 1.0) {
            return Err(Error::config("prop must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.multiway_probability) {
            return Err(Error::config("multiway_probability must lie in [0, 1]"));
        }
        if p == 0 {
            return Err(Error::config("dataset has no covariates"));
        }
        if let Some(mtry) = self.mtry {
            if mtry == 0 || mtry > p {
                return Err(Error::config(format!(
                    "mtry must lie in 1..={p}, got {mtry}"
                )));
            }
        }
        if self.in_bag_size(n) == 0 {
            return Err(Error::config(format!(
                "floor(prop * n) = 0 for n = {n}; nothing to train on"
            )));
        }
        Ok(())
    }

    pub fn in_bag_size(&self, n: usize) -> usize {
        (self.prop * n as f64).floor() as usize
    }

    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1))
    }
}
