//! Model serialization: a single versioned JSON document.
//!
//! The byte output is canonical for a given model (fixed field order, compact
//! separators, shortest-round-trip floats), so identical models produce
//! identical files; the determinism checks rely on this.

use std::fs;
use std::path::Path;

use crate::config::MufConfig;
use crate::error::{Error, Result};

use super::{CovariateMeta, MultiForestModel, Tree, TreeNode};

const FORMAT: &str = "multiforest-model";
const VERSION: u32 = 1;

#[derive(serde::Serialize, serde::Deserialize)]
struct TreeFile {
    #[serde(rename = "ib")]
    in_bag: Vec<u32>,
    #[serde(rename = "no")]
    nodes: Vec<TreeNode>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: MufConfig,
    n_train: usize,
    n_classes: usize,
    class_names: Vec<String>,
    covariates: Vec<CovariateMeta>,
    trees: Vec<TreeFile>,
}

impl MultiForestModel {
    /// Canonical JSON encoding, newline-terminated.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: FORMAT.to_string(),
            version: VERSION,
            config: self.config.clone(),
            n_train: self.n_train,
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
            covariates: self.covariates.clone(),
            trees: self
                .trees
                .iter()
                .map(|t| TreeFile {
                    in_bag: t.in_bag.clone(),
                    nodes: t.nodes.clone(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string(&file).expect("model serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(json).map_err(|e| Error::data(format!("bad model file: {e}")))?;
        if file.format != FORMAT {
            return Err(Error::data(format!(
                "not a forest model file (format {:?})",
                file.format
            )));
        }
        if file.version != VERSION {
            return Err(Error::data(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        if file.trees.is_empty() {
            return Err(Error::data("model holds no trees"));
        }
        let n = file.n_train;
        let trees = file
            .trees
            .into_iter()
            .map(|t| {
                let sorted = t.in_bag.windows(2).all(|w| w[0] < w[1]);
                let in_range = t.in_bag.iter().all(|&i| (i as usize) < n);
                if t.in_bag.is_empty() || !sorted || !in_range || t.nodes.is_empty() {
                    return Err(Error::data("model holds a malformed tree"));
                }
                let mut bagged = vec![false; n];
                for &i in &t.in_bag {
                    bagged[i as usize] = true;
                }
                let oob = (0..n as u32).filter(|&i| !bagged[i as usize]).collect();
                Ok(Tree {
                    nodes: t.nodes,
                    in_bag: t.in_bag,
                    oob,
                })
            })
            .collect::<Result<Vec<Tree>>>()?;
        Ok(MultiForestModel {
            config: file.config,
            n_train: file.n_train,
            n_classes: file.n_classes,
            class_names: file.class_names,
            covariates: file.covariates,
            trees,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }
}
