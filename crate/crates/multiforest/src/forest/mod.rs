//! Forest training, prediction, and the serialized model.

use rayon::prelude::*;

use crate::config::{MufConfig, PredictionRule};
use crate::data::{middle_rank, CovariateKind, DataTable, Dataset};
use crate::error::{Error, Result};

mod grow;
mod io;

/// One node of a grown tree. Child references are indices into the tree's
/// flat node array; the root is node 0.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "t")]
pub enum TreeNode {
    /// Multi-way split: a value routes to the first child whose point is
    /// `>=` it, past the last point to the final child. `assignment` holds
    /// the `(class, child slot)` pairs the split criterion settled on, with
    /// 0-based class ids.
    #[serde(rename = "m")]
    Multiway {
        #[serde(rename = "c")]
        covariate: u32,
        #[serde(rename = "p")]
        points: Vec<f64>,
        #[serde(rename = "ch")]
        children: Vec<u32>,
        #[serde(rename = "a")]
        assignment: Vec<(u16, u16)>,
    },
    /// Binary split: `<=` routes to the first child. The assignment is
    /// present only when the binary criterion was assign-classes.
    #[serde(rename = "b")]
    Binary {
        #[serde(rename = "c")]
        covariate: u32,
        #[serde(rename = "p")]
        point: f64,
        #[serde(rename = "ch")]
        children: [u32; 2],
        #[serde(rename = "a", default, skip_serializing_if = "Option::is_none")]
        assignment: Option<Vec<(u16, u16)>>,
    },
    /// Leaf: in-bag class counts, indexed by 0-based class id.
    #[serde(rename = "l")]
    Leaf {
        #[serde(rename = "n")]
        counts: Vec<u32>,
    },
}

/// One grown tree: flat preorder node array plus its in-bag subsample.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    /// Ascending row indices of the training subsample.
    pub in_bag: Vec<u32>,
    /// Ascending row indices left out of the subsample.
    pub oob: Vec<u32>,
}

impl Tree {
    /// Leaf node index reached by an observation; `value(j)` supplies the
    /// encoded value of covariate `j`.
    pub fn route_leaf(&self, value: impl Fn(usize) -> f64) -> usize {
        let mut id = 0usize;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { .. } => return id,
                TreeNode::Multiway {
                    covariate,
                    points,
                    children,
                    ..
                } => {
                    let x = value(*covariate as usize);
                    let slot = points.partition_point(|&p| p < x);
                    id = children[slot] as usize;
                }
                TreeNode::Binary {
                    covariate,
                    point,
                    children,
                    ..
                } => {
                    let x = value(*covariate as usize);
                    id = children[usize::from(x > *point)] as usize;
                }
            }
        }
    }

    /// Leaf class counts reached by an observation.
    pub fn leaf_counts(&self, value: impl Fn(usize) -> f64) -> &[u32] {
        match &self.nodes[self.route_leaf(value)] {
            TreeNode::Leaf { counts } => counts,
            _ => unreachable!("route_leaf returns leaves"),
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut max = 0usize;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, d)) = stack.pop() {
            match &self.nodes[id] {
                TreeNode::Leaf { .. } => max = max.max(d),
                TreeNode::Multiway { children, .. } => {
                    stack.extend(children.iter().map(|&c| (c as usize, d + 1)));
                }
                TreeNode::Binary { children, .. } => {
                    stack.extend(children.iter().map(|&c| (c as usize, d + 1)));
                }
            }
        }
        max
    }

    /// Marks the covariates appearing in any split of this tree.
    pub fn used_covariates(&self, p: usize) -> Vec<bool> {
        let mut used = vec![false; p];
        for node in &self.nodes {
            match node {
                TreeNode::Multiway { covariate, .. } | TreeNode::Binary { covariate, .. } => {
                    used[*covariate as usize] = true;
                }
                TreeNode::Leaf { .. } => {}
            }
        }
        used
    }
}

/// Schema and encoding of one training covariate, kept with the model so
/// prediction inputs can be interpreted identically.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CovariateMeta {
    pub name: String,
    /// Kind before rank-encoding; nominal covariates stay nominal here.
    pub kind: CovariateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    /// `rank_of_code` applied at training time, for nominal covariates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<Vec<usize>>,
    /// Distinct encoded values in the training column.
    pub distinct_in_train: usize,
}

/// A trained forest plus everything needed to reproduce and apply it.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiForestModel {
    /// Training configuration with `mtry` resolved.
    pub config: MufConfig,
    pub n_train: usize,
    pub n_classes: usize,
    pub class_names: Vec<String>,
    pub covariates: Vec<CovariateMeta>,
    pub trees: Vec<Tree>,
}

/// Trains a forest. The dataset must be fully numeric: rank-encode nominal
/// covariates first (see `encode_dataset`). Trees are grown in parallel on
/// the current rayon pool; results are identical for any worker count
/// because every tree owns an RNG stream derived from `(seed, tree index)`.
pub fn train(data: &Dataset, config: &MufConfig) -> Result<MultiForestModel> {
    if data.has_nominal() {
        return Err(Error::data(
            "dataset still holds raw nominal codes; apply encode_dataset before training",
        ));
    }
    config.validate(data.n(), data.p())?;
    if data.n_classes() > u16::MAX as usize {
        return Err(Error::config("too many classes"));
    }
    let mut resolved = config.clone();
    resolved.mtry = Some(config.resolved_mtry(data.p()));

    let grower = grow::Grower {
        columns: data.columns(),
        labels: data.labels(),
        n_classes: data.n_classes(),
        config: &resolved,
        mtry: resolved.mtry.unwrap(),
        n: data.n(),
    };
    let trees: Vec<Tree> = (0..resolved.ntree)
        .into_par_iter()
        .map(|t| grower.grow_tree(t as u64))
        .collect();

    let covariates = (0..data.p())
        .map(|j| {
            let encoding = data.encoding(j).map(|e| e.to_vec());
            let kind = if encoding.is_some() {
                CovariateKind::Nominal
            } else {
                data.kinds()[j]
            };
            CovariateMeta {
                name: data.names()[j].clone(),
                kind,
                categories: data.categories(j).map(|c| c.to_vec()),
                encoding,
                distinct_in_train: data.distinct_count(j),
            }
        })
        .collect();

    Ok(MultiForestModel {
        config: resolved,
        n_train: data.n(),
        n_classes: data.n_classes(),
        class_names: data.class_names().to_vec(),
        covariates,
        trees,
    })
}

impl MultiForestModel {
    /// Per-observation class probabilities: the average of the leaf
    /// class-frequency distributions across trees, rows summing to 1.
    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        let columns = self.align_dataset(data)?;
        Ok(self.predict_proba_columns(&columns))
    }

    /// As [`predict_proba`](Self::predict_proba) on already-aligned encoded
    /// columns in model covariate order.
    pub fn predict_proba_columns(&self, columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = columns.first().map_or(0, Vec::len);
        (0..n)
            .into_par_iter()
            .map(|i| self.proba_row(columns, i))
            .collect()
    }

    fn proba_row(&self, columns: &[Vec<f64>], i: usize) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.n_classes];
        for tree in &self.trees {
            let counts = tree.leaf_counts(|j| columns[j][i]);
            let total: u32 = counts.iter().sum();
            let total = total as f64;
            for (a, &c) in acc.iter_mut().zip(counts) {
                *a += c as f64 / total;
            }
        }
        let b = self.trees.len() as f64;
        for a in &mut acc {
            *a /= b;
        }
        acc
    }

    /// Point predictions (labels `1..=n_classes`) under the model's
    /// prediction rule.
    pub fn predict_class(&self, data: &Dataset) -> Result<Vec<u32>> {
        let columns = self.align_dataset(data)?;
        Ok(self.predict_class_columns(&columns, self.config.prediction_rule))
    }

    pub fn predict_class_columns(&self, columns: &[Vec<f64>], rule: PredictionRule) -> Vec<u32> {
        let n = columns.first().map_or(0, Vec::len);
        match rule {
            PredictionRule::MaxProbability => (0..n)
                .into_par_iter()
                .map(|i| argmax_lowest(&self.proba_row(columns, i)) as u32 + 1)
                .collect(),
            PredictionRule::MajorityVote => (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut votes = vec![0u32; self.n_classes];
                    for tree in &self.trees {
                        let counts = tree.leaf_counts(|j| columns[j][i]);
                        let win = counts
                            .iter()
                            .enumerate()
                            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                            .map(|(c, _)| c)
                            .unwrap();
                        votes[win] += 1;
                    }
                    votes
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                        .map(|(c, _)| c)
                        .unwrap() as u32
                        + 1
                })
                .collect(),
        }
    }

    /// Interprets a dataset against the model schema: columns are matched by
    /// name, raw nominal codes are translated through the stored category
    /// order, and categories never seen in training route to the middle
    /// rank. Returns encoded columns in model covariate order.
    pub fn align_dataset(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        self.covariates
            .iter()
            .map(|meta| {
                let j = data
                    .names()
                    .iter()
                    .position(|n| *n == meta.name)
                    .ok_or_else(|| {
                        Error::mismatch(format!("input lacks covariate {:?}", meta.name))
                    })?;
                match &meta.encoding {
                    None => {
                        if data.kinds()[j] == CovariateKind::Nominal {
                            return Err(Error::mismatch(format!(
                                "covariate {:?} is nominal in the input but numeric in the model",
                                meta.name
                            )));
                        }
                        Ok(data.column(j).to_vec())
                    }
                    Some(encoding) => {
                        let cats = meta.categories.as_deref().unwrap_or_default();
                        match data.kinds()[j] {
                            CovariateKind::Nominal => {
                                let input_cats = data.categories(j).ok_or_else(|| {
                                    Error::internal("nominal column without categories")
                                })?;
                                let rank_of_input: Vec<f64> = input_cats
                                    .iter()
                                    .map(|name| match cats.iter().position(|c| c == name) {
                                        Some(code) => encoding[code] as f64,
                                        None => middle_rank(cats.len()) as f64,
                                    })
                                    .collect();
                                Ok(data
                                    .column(j)
                                    .iter()
                                    .map(|&v| rank_of_input[v as usize - 1])
                                    .collect())
                            }
                            _ => {
                                let same_categories = data.categories(j) == Some(cats);
                                let same_encoding = data.encoding(j) == Some(encoding.as_slice());
                                if same_categories && same_encoding {
                                    Ok(data.column(j).to_vec())
                                } else {
                                    Err(Error::mismatch(format!(
                                        "covariate {:?} was rank-encoded differently than \
                                         the model expects",
                                        meta.name
                                    )))
                                }
                            }
                        }
                    }
                }
            })
            .collect()
    }

    /// Interprets an untyped table against the model schema. With `outcome`
    /// given, that column is mapped through the model's class names and
    /// returned as labels.
    #[allow(clippy::type_complexity)]
    pub fn align_table(
        &self,
        table: &DataTable,
        outcome: Option<&str>,
    ) -> Result<(Vec<Vec<f64>>, Option<Vec<u32>>)> {
        let labels = match outcome {
            None => None,
            Some(name) => {
                let idx = table.column_index(name).ok_or_else(|| {
                    Error::mismatch(format!("input lacks outcome column {name:?}"))
                })?;
                let labels = table
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        self.class_names
                            .iter()
                            .position(|c| *c == row[idx])
                            .map(|c| c as u32 + 1)
                            .ok_or_else(|| {
                                Error::mismatch(format!(
                                    "unknown class {:?} at data row {}",
                                    row[idx],
                                    i + 1
                                ))
                            })
                    })
                    .collect::<Result<Vec<u32>>>()?;
                Some(labels)
            }
        };
        let columns = self
            .covariates
            .iter()
            .map(|meta| {
                let idx = table.column_index(&meta.name).ok_or_else(|| {
                    Error::mismatch(format!("input lacks covariate {:?}", meta.name))
                })?;
                match &meta.encoding {
                    None => table
                        .rows
                        .iter()
                        .enumerate()
                        .map(|(i, row)| {
                            let v: f64 = row[idx].parse().map_err(|_| {
                                Error::mismatch(format!(
                                    "covariate {:?}, data row {}: {:?} is not numeric",
                                    meta.name,
                                    i + 1,
                                    row[idx]
                                ))
                            })?;
                            if !v.is_finite() {
                                return Err(Error::mismatch(format!(
                                    "covariate {:?}, data row {}: non-finite value",
                                    meta.name,
                                    i + 1
                                )));
                            }
                            Ok(v)
                        })
                        .collect::<Result<Vec<f64>>>(),
                    Some(encoding) => {
                        let cats = meta.categories.as_deref().unwrap_or_default();
                        Ok(table
                            .rows
                            .iter()
                            .map(|row| match cats.iter().position(|c| *c == row[idx]) {
                                Some(code) => encoding[code] as f64,
                                None => middle_rank(cats.len()) as f64,
                            })
                            .collect())
                    }
                }
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok((columns, labels))
    }

    /// Verifies that `data` is the training dataset (schema fingerprint and
    /// size) and returns its aligned columns.
    pub(crate) fn require_training_data(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        if data.n() != self.n_train {
            return Err(Error::mismatch(format!(
                "model was trained on {} observations, dataset has {}",
                self.n_train,
                data.n()
            )));
        }
        if data.p() != self.covariates.len() {
            return Err(Error::mismatch(format!(
                "model was trained on {} covariates, dataset has {}",
                self.covariates.len(),
                data.p()
            )));
        }
        if data.n_classes() != self.n_classes || data.class_names() != self.class_names {
            return Err(Error::mismatch("class set differs from training"));
        }
        self.align_dataset(data)
    }

    /// `(min, mean, max)` of tree depths.
    pub fn depth_stats(&self) -> (usize, f64, usize) {
        let depths: Vec<usize> = self.trees.iter().map(Tree::depth).collect();
        let min = depths.iter().copied().min().unwrap_or(0);
        let max = depths.iter().copied().max().unwrap_or(0);
        let mean = depths.iter().sum::<usize>() as f64 / depths.len().max(1) as f64;
        (min, mean, max)
    }
}

/// Index of the maximum, lowest index on ties.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
