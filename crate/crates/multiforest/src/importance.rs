//! Variable-importance measures computed from stored trees and their
//! out-of-bag observations.
//!
//! Two node-level measures share one tree walk: the multi-class VIM sums
//! over eligible multi-way nodes, the discriminatory VIM over eligible
//! binary nodes. A node is eligible for covariate `s` when it splits on
//! `s`, no ancestor split used `s`, and at least one OOB observation
//! traverses it. Each eligible node contributes its in-bag size times the
//! drop in its OOB criterion under a within-node permutation of the split
//! covariate's OOB values; per-covariate sums are averaged over trees.
//! The permutation VIM baseline is the classic mean increase in OOB
//! misclassification rate when a covariate is shuffled across a tree's
//! whole OOB set.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::VariantProportions;
use crate::data::{CovariateKind, Dataset};
use crate::error::{Error, Result};
use crate::forest::{CovariateMeta, MultiForestModel, Tree, TreeNode};
use crate::rng::{stream, Purpose};

/// Per-covariate importance values; `multi_class` is `None` where the
/// measure is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct VimReport {
    pub names: Vec<String>,
    pub multi_class: Vec<Option<f64>>,
    pub discriminatory: Vec<f64>,
    pub permutation: Option<Vec<f64>>,
}

impl VimReport {
    /// Tidy delimited table: `covariate, multi_class, discriminatory[,
    /// permutation]`, with empty cells where multi_class is undefined.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("covariate,multi_class,discriminatory");
        if self.permutation.is_some() {
            out.push_str(",permutation");
        }
        out.push('\n');
        for j in 0..self.names.len() {
            out.push_str(&self.names[j]);
            out.push(',');
            if let Some(v) = self.multi_class[j] {
                out.push_str(&format!("{v}"));
            }
            out.push_str(&format!(",{}", self.discriminatory[j]));
            if let Some(perm) = &self.permutation {
                out.push_str(&format!(",{}", perm[j]));
            }
            out.push('\n');
        }
        out
    }
}

/// Whether the multi-class VIM is defined for a covariate: categorical
/// covariates need at least `n_classes` categories (nominal) or distinct
/// training values (ordered); continuous covariates always qualify.
pub fn multiclass_defined(meta: &CovariateMeta, n_classes: usize) -> bool {
    match meta.kind {
        CovariateKind::Continuous => true,
        CovariateKind::Nominal => meta
            .categories
            .as_ref()
            .is_some_and(|c| c.len() >= n_classes),
        CovariateKind::OrderedCategorical => meta.distinct_in_train >= n_classes,
    }
}

/// Both node-level VIMs from a single walk over every tree.
pub fn compute_node_vims(
    model: &MultiForestModel,
    data: &Dataset,
) -> Result<(Vec<Option<f64>>, Vec<f64>)> {
    let columns = model.require_training_data(data)?;
    let labels0: Vec<usize> = data.labels().iter().map(|&y| y as usize - 1).collect();
    let p = model.covariates.len();

    let per_tree: Vec<(Vec<f64>, Vec<f64>)> = model
        .trees
        .par_iter()
        .enumerate()
        .map(|(t, tree)| {
            let mut mc = vec![0.0; p];
            let mut disc = vec![0.0; p];
            let mut used = vec![false; p];
            let ctx = WalkContext {
                columns: &columns,
                labels0: &labels0,
                n_classes: model.n_classes,
                squared: model.config.variant.proportions == VariantProportions::Squared,
                seed: model.config.seed,
                tree_index: t as u64,
            };
            walk(
                &tree.nodes,
                0,
                tree.in_bag.clone(),
                tree.oob.clone(),
                &mut used,
                &ctx,
                &mut mc,
                &mut disc,
            );
            (mc, disc)
        })
        .collect();

    let b = model.trees.len() as f64;
    let mut mc_sum = vec![0.0; p];
    let mut disc_sum = vec![0.0; p];
    for (mc, disc) in &per_tree {
        for j in 0..p {
            mc_sum[j] += mc[j];
            disc_sum[j] += disc[j];
        }
    }
    let multi_class = (0..p)
        .map(|j| multiclass_defined(&model.covariates[j], model.n_classes).then(|| mc_sum[j] / b))
        .collect();
    let discriminatory = disc_sum.iter().map(|s| s / b).collect();
    Ok((multi_class, discriminatory))
}

/// Multi-class VIM per covariate; `None` where undefined.
pub fn compute_multiclass_vim(
    model: &MultiForestModel,
    data: &Dataset,
) -> Result<Vec<Option<f64>>> {
    Ok(compute_node_vims(model, data)?.0)
}

/// Discriminatory VIM per covariate.
pub fn compute_discriminatory_vim(model: &MultiForestModel, data: &Dataset) -> Result<Vec<f64>> {
    Ok(compute_node_vims(model, data)?.1)
}

struct WalkContext<'a> {
    columns: &'a [Vec<f64>],
    labels0: &'a [usize],
    n_classes: usize,
    squared: bool,
    seed: u64,
    tree_index: u64,
}

/// Routed child slot per observation under a split node.
fn route_slots(node: &TreeNode, values: &[f64]) -> Vec<usize> {
    match node {
        TreeNode::Multiway { points, .. } => values
            .iter()
            .map(|&v| points.partition_point(|&p| p < v))
            .collect(),
        TreeNode::Binary { point, .. } => values.iter().map(|&v| usize::from(v > *point)).collect(),
        TreeNode::Leaf { .. } => unreachable!("leaves are not routed through"),
    }
}

/// Per-child sizes and class counts from routed slots.
fn slot_counts(
    slots: &[usize],
    rows: &[u32],
    labels0: &[usize],
    k: usize,
    n_classes: usize,
) -> (Vec<u32>, Vec<u32>) {
    let mut counts = vec![0u32; k * n_classes];
    let mut totals = vec![0u32; k];
    for (&slot, &i) in slots.iter().zip(rows) {
        counts[slot * n_classes + labels0[i as usize]] += 1;
        totals[slot] += 1;
    }
    (counts, totals)
}

/// Criterion under a stored class-to-child assignment: the sum over
/// assigned pairs of the class's proportion in its child, squared or not.
/// Children with no observations contribute 0.
fn assigned_criterion(
    counts: &[u32],
    totals: &[u32],
    n_classes: usize,
    assignment: &[(u16, u16)],
    squared: bool,
) -> f64 {
    let mut crit = 0.0;
    for &(class, child) in assignment {
        let total = totals[child as usize];
        if total == 0 {
            continue;
        }
        let p = counts[child as usize * n_classes + class as usize] as f64 / total as f64;
        crit += if squared { p * p } else { p };
    }
    crit
}

/// Weighted child purity: the size-weighted sum over children of the sum of
/// squared class proportions, equal to 1 minus the weighted Gini impurity.
fn purity_criterion(counts: &[u32], totals: &[u32], n_classes: usize, n: usize) -> f64 {
    let mut crit = 0.0;
    for (child, &total) in totals.iter().enumerate() {
        if total == 0 {
            continue;
        }
        for &c in &counts[child * n_classes..(child + 1) * n_classes] {
            crit += (c as f64 * c as f64) / (total as f64 * n as f64);
        }
    }
    crit
}

/// The multi-way node criterion of the multi-class VIM, evaluated on the
/// OOB observations traversing a stored multi-way node. `values` and
/// `labels` describe those observations; with `permuted`, covariate values
/// are shuffled among them first. Squared or plain proportions follow the
/// training variant.
pub fn oob_multiway_criterion(
    node: &TreeNode,
    values: &[f64],
    labels: &[u32],
    n_classes: usize,
    squared: bool,
    permuted: Option<&mut ChaCha8Rng>,
) -> Result<f64> {
    let TreeNode::Multiway {
        assignment, points, ..
    } = node
    else {
        return Err(Error::internal("criterion needs a multi-way node"));
    };
    if values.is_empty() || values.len() != labels.len() {
        return Err(Error::internal(
            "criterion needs matched, nonempty observations",
        ));
    }
    let mut vals = values.to_vec();
    if let Some(rng) = permuted {
        vals.shuffle(rng);
    }
    let k = points.len() + 1;
    let mut counts = vec![0u32; k * n_classes];
    let mut totals = vec![0u32; k];
    for (&v, &y) in vals.iter().zip(labels) {
        let slot = points.partition_point(|&p| p < v);
        counts[slot * n_classes + y as usize - 1] += 1;
        totals[slot] += 1;
    }
    Ok(assigned_criterion(
        &counts, &totals, n_classes, assignment, squared,
    ))
}

/// One split node's contribution: in-bag size times the OOB criterion drop
/// under within-node permutation. Returns 0 without touching the RNG stream
/// when no OOB observation traverses the node.
fn node_contribution(
    node: &TreeNode,
    node_id: usize,
    covariate: usize,
    ib_len: usize,
    oob: &[u32],
    ctx: &WalkContext,
) -> f64 {
    if oob.is_empty() {
        return 0.0;
    }
    let values: Vec<f64> = oob
        .iter()
        .map(|&i| ctx.columns[covariate][i as usize])
        .collect();
    let mut permuted = values.clone();
    permuted.shuffle(&mut stream(
        ctx.seed,
        Purpose::NodePermutation,
        ctx.tree_index,
        node_id as u64,
    ));

    let (k, assignment) = match node {
        TreeNode::Multiway {
            points, assignment, ..
        } => (points.len() + 1, Some(assignment)),
        TreeNode::Binary { assignment, .. } => (2, assignment.as_ref()),
        TreeNode::Leaf { .. } => unreachable!(),
    };
    let crit_of = |vals: &[f64]| {
        let slots = route_slots(node, vals);
        let (counts, totals) = slot_counts(&slots, oob, ctx.labels0, k, ctx.n_classes);
        match assignment {
            Some(pairs) => assigned_criterion(&counts, &totals, ctx.n_classes, pairs, ctx.squared),
            None => purity_criterion(&counts, &totals, ctx.n_classes, oob.len()),
        }
    };
    ib_len as f64 * (crit_of(&values) - crit_of(&permuted))
}

#[allow(clippy::too_many_arguments)]
fn walk(
    nodes: &[TreeNode],
    node_id: usize,
    ib: Vec<u32>,
    oob: Vec<u32>,
    used: &mut [bool],
    ctx: &WalkContext,
    mc: &mut [f64],
    disc: &mut [f64],
) {
    let node = &nodes[node_id];
    let (covariate, children): (usize, Vec<usize>) = match node {
        TreeNode::Leaf { .. } => return,
        TreeNode::Multiway {
            covariate,
            children,
            ..
        } => (
            *covariate as usize,
            children.iter().map(|&c| c as usize).collect(),
        ),
        TreeNode::Binary {
            covariate,
            children,
            ..
        } => (
            *covariate as usize,
            children.iter().map(|&c| c as usize).collect(),
        ),
    };

    if !used[covariate] {
        let contribution = node_contribution(node, node_id, covariate, ib.len(), &oob, ctx);
        match node {
            TreeNode::Multiway { .. } => mc[covariate] += contribution,
            TreeNode::Binary { .. } => disc[covariate] += contribution,
            TreeNode::Leaf { .. } => unreachable!(),
        }
    }

    let k = children.len();
    let split = |rows: Vec<u32>| {
        let values: Vec<f64> = rows
            .iter()
            .map(|&i| ctx.columns[covariate][i as usize])
            .collect();
        let slots = route_slots(node, &values);
        let mut parts: Vec<Vec<u32>> = vec![Vec::new(); k];
        for (slot, i) in slots.into_iter().zip(rows) {
            parts[slot].push(i);
        }
        parts
    };
    let ib_parts = split(ib);
    let oob_parts = split(oob);

    let was_used = std::mem::replace(&mut used[covariate], true);
    for ((child, ib_part), oob_part) in children.into_iter().zip(ib_parts).zip(oob_parts) {
        walk(nodes, child, ib_part, oob_part, used, ctx, mc, disc);
    }
    used[covariate] = was_used;
}

/// Permutation VIM: mean over trees of the OOB misclassification-rate
/// increase when covariate `s` is shuffled across the tree's OOB set.
/// Covariates a tree never splits on contribute exactly 0 for that tree.
pub fn compute_permutation_vim(model: &MultiForestModel, data: &Dataset) -> Result<Vec<f64>> {
    let columns = model.require_training_data(data)?;
    let labels0: Vec<usize> = data.labels().iter().map(|&y| y as usize - 1).collect();
    let p = model.covariates.len();

    let per_tree: Vec<Vec<f64>> = model
        .trees
        .par_iter()
        .enumerate()
        .map(|(t, tree)| {
            let mut vim = vec![0.0; p];
            if tree.oob.is_empty() {
                return vim;
            }
            let n_oob = tree.oob.len() as f64;
            let base_errors = tree
                .oob
                .iter()
                .filter(|&&i| tree_misclassifies(tree, &columns, &labels0, i, None))
                .count();
            let used = tree.used_covariates(p);
            for (s, vim_s) in vim.iter_mut().enumerate() {
                if !used[s] {
                    continue;
                }
                let mut shuffled: Vec<f64> =
                    tree.oob.iter().map(|&i| columns[s][i as usize]).collect();
                shuffled.shuffle(&mut stream(
                    model.config.seed,
                    Purpose::TreePermutation,
                    t as u64,
                    s as u64,
                ));
                let errors = tree
                    .oob
                    .iter()
                    .zip(&shuffled)
                    .filter(|(&i, &v)| {
                        tree_misclassifies(tree, &columns, &labels0, i, Some((s, v)))
                    })
                    .count();
                *vim_s = (errors as f64 - base_errors as f64) / n_oob;
            }
            vim
        })
        .collect();

    let b = model.trees.len() as f64;
    let mut sums = vec![0.0; p];
    for tree_vim in &per_tree {
        for (sum, v) in sums.iter_mut().zip(tree_vim) {
            *sum += v;
        }
    }
    Ok(sums.into_iter().map(|s| s / b).collect())
}

fn tree_misclassifies(
    tree: &Tree,
    columns: &[Vec<f64>],
    labels0: &[usize],
    row: u32,
    replace: Option<(usize, f64)>,
) -> bool {
    let counts = tree.leaf_counts(|j| match replace {
        Some((s, v)) if s == j => v,
        _ => columns[j][row as usize],
    });
    let pred = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c)
        .unwrap();
    pred != labels0[row as usize]
}

/// All requested measures as one report.
pub fn compute_vim_report(
    model: &MultiForestModel,
    data: &Dataset,
    include_permutation: bool,
) -> Result<VimReport> {
    let (multi_class, discriminatory) = compute_node_vims(model, data)?;
    let permutation = if include_permutation {
        Some(compute_permutation_vim(model, data)?)
    } else {
        None
    };
    Ok(VimReport {
        names: model.covariates.iter().map(|m| m.name.clone()).collect(),
        multi_class,
        discriminatory,
        permutation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MufConfig;
    use crate::rng::{stream, Purpose};

    fn multiway_node() -> TreeNode {
        // Two children split at 0.5; class 0 assigned to child 0, class 1 to
        // child 1.
        TreeNode::Multiway {
            covariate: 0,
            points: vec![0.5],
            children: vec![1, 2],
            assignment: vec![(0, 0), (1, 1)],
        }
    }

    #[test]
    fn criterion_matches_hand_computed_example() {
        // OOB children {A,B} | {B}: (1/2)^2 + 1^2 = 1.25.
        let node = multiway_node();
        let values = [0.0, 0.0, 1.0];
        let labels = [1, 2, 2];
        let crit = oob_multiway_criterion(&node, &values, &labels, 2, true, None).unwrap();
        assert_eq!(crit, 1.25);
        let plain = oob_multiway_criterion(&node, &values, &labels, 2, false, None).unwrap();
        assert_eq!(plain, 1.5);
    }

    #[test]
    fn perfect_oob_agreement_scores_class_count() {
        let node = multiway_node();
        let values = [0.0, 0.0, 1.0, 1.0];
        let labels = [1, 1, 2, 2];
        let crit = oob_multiway_criterion(&node, &values, &labels, 2, true, None).unwrap();
        assert_eq!(crit, 2.0);
    }

    #[test]
    fn empty_assigned_children_score_zero() {
        // Every OOB observation routes to child 0, whose assigned class is
        // absent there; child 1 is empty.
        let node = multiway_node();
        let values = [0.0, 0.0];
        let labels = [2, 2];
        let crit = oob_multiway_criterion(&node, &values, &labels, 2, true, None).unwrap();
        assert_eq!(crit, 0.0);
    }

    #[test]
    fn permutation_shuffles_within_node() {
        let node = multiway_node();
        // Separation is perfect, so any non-identity permutation lowers the
        // criterion; across seeds the permuted value never exceeds it.
        let values: Vec<f64> = (0..12).map(|i| if i < 6 { 0.0 } else { 1.0 }).collect();
        let labels: Vec<u32> = (0..12).map(|i| if i < 6 { 1 } else { 2 }).collect();
        let base = oob_multiway_criterion(&node, &values, &labels, 2, true, None).unwrap();
        assert_eq!(base, 2.0);
        for seed in 0..30 {
            let mut rng = stream(seed, Purpose::NodePermutation, 0, 0);
            let perm =
                oob_multiway_criterion(&node, &values, &labels, 2, true, Some(&mut rng)).unwrap();
            assert!(perm <= base + 1e-12);
        }
    }

    fn toy_forest() -> (MultiForestModel, Dataset) {
        let n = 120;
        let columns: Vec<Vec<f64>> = vec![
            // Strong signal: value tracks the class with mild overlap.
            (0..n)
                .map(|i| (i % 3) as f64 + ((i * 7919 % 97) as f64 / 97.0 - 0.5) * 0.8)
                .collect(),
            // Pure noise.
            (0..n)
                .map(|i| ((i * 2654435761u64 as usize) % 1009) as f64)
                .collect(),
        ];
        let labels = (0..n).map(|i| (i % 3) as u32 + 1).collect();
        let data = Dataset::continuous(columns, labels, 3).unwrap();
        let cfg = MufConfig {
            ntree: 60,
            nmin: 5,
            seed: 9,
            ..MufConfig::default()
        };
        let model = crate::forest::train(&data, &cfg).unwrap();
        (model, data)
    }

    #[test]
    fn signal_covariate_outranks_noise() {
        let (model, data) = toy_forest();
        let report = compute_vim_report(&model, &data, true).unwrap();
        let mc = &report.multi_class;
        assert!(mc[0].unwrap() > mc[1].unwrap());
        assert!(report.discriminatory[0] > report.discriminatory[1]);
        let perm = report.permutation.as_ref().unwrap();
        assert!(perm[0] > perm[1]);
    }

    #[test]
    fn report_rows_align_with_covariates() {
        let (model, data) = toy_forest();
        let report = compute_vim_report(&model, &data, false).unwrap();
        assert_eq!(report.names.len(), 2);
        assert!(report.permutation.is_none());
        let csv = report.to_csv_string();
        assert!(csv.starts_with("covariate,multi_class,discriminatory\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn vims_reject_foreign_data() {
        let (model, data) = toy_forest();
        let wrong = data.subset(&(0..50).collect::<Vec<usize>>());
        assert!(compute_node_vims(&model, &wrong).is_err());
    }
}
