//! Split-problem sampling and scoring for one tree node.
//!
//! A node first decides at random whether to attempt a multi-way or a binary
//! split, then draws `mtry` covariates. For each drawn covariate a small
//! number of candidate split-point sets is sampled instead of optimizing
//! exhaustively; multi-way candidates are scored as a whole, while the binary
//! branch scores every individual split point occurring inside the sampled
//! sets. Randomness is consumed in a fixed documented order (branch coin,
//! covariate draws, candidate draws, tie draws during scoring) so that a
//! node's outcome depends only on its RNG stream.

use rand::Rng;

use crate::config::{MufConfig, VariantBinary, VariantProportions};
use crate::data::Dataset;

pub mod assignment;
pub mod candidates;
pub mod scoring;

pub use assignment::{assign_classes, ClassAssignment};
pub use candidates::MultiwayCandidate;

/// A node's slice of the training data: member rows plus class bookkeeping.
#[derive(Debug)]
pub struct NodeView<'a> {
    columns: &'a [Vec<f64>],
    labels: &'a [u32],
    rows: &'a [u32],
    n_classes: usize,
    class_counts: Vec<u32>,
    /// 0-based ids of the classes present, ascending.
    present: Vec<u16>,
}

impl<'a> NodeView<'a> {
    /// `columns` are encoded covariates, `labels` 1-based classes for the
    /// full dataset; `rows` are this node's member indices.
    pub fn new(
        columns: &'a [Vec<f64>],
        labels: &'a [u32],
        n_classes: usize,
        rows: &'a [u32],
    ) -> Self {
        let mut class_counts = vec![0u32; n_classes];
        for &i in rows {
            class_counts[labels[i as usize] as usize - 1] += 1;
        }
        let present = class_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, _)| k as u16)
            .collect();
        NodeView {
            columns,
            labels,
            rows,
            n_classes,
            class_counts,
            present,
        }
    }

    pub fn from_dataset(data: &'a Dataset, rows: &'a [u32]) -> Self {
        NodeView::new(data.columns(), data.labels(), data.n_classes(), rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[u32] {
        self.rows
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Number of classes present at the node (`c_l`).
    pub fn class_count(&self) -> usize {
        self.present.len()
    }

    pub fn present_classes(&self) -> &[u16] {
        &self.present
    }

    pub fn class_counts(&self) -> &[u32] {
        &self.class_counts
    }

    pub fn is_pure(&self) -> bool {
        self.present.len() <= 1
    }

    pub(crate) fn value(&self, covariate: usize, row: u32) -> f64 {
        self.columns[covariate][row as usize]
    }

    pub(crate) fn label0(&self, row: u32) -> usize {
        self.labels[row as usize] as usize - 1
    }

    pub fn n_covariates(&self) -> usize {
        self.columns.len()
    }

    /// Covariates with at least one potential split point (two distinct
    /// values) in this node, ascending.
    pub fn splittable_covariates(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| {
                let col = &self.columns[j];
                let first = col[self.rows[0] as usize];
                self.rows[1..].iter().any(|&i| col[i as usize] != first)
            })
            .collect()
    }
}

/// Distinct sorted values of one covariate within a node, with cumulative
/// class counts; all candidate scoring reads from this.
#[derive(Debug)]
pub struct CovariateProfile {
    pub covariate: usize,
    values: Vec<f64>,
    /// `(n_unique + 1) * n_classes` row-major cumulative counts; row `t`
    /// covers the first `t` distinct values.
    cum: Vec<u32>,
    n_classes: usize,
}

impl CovariateProfile {
    pub fn build(view: &NodeView, covariate: usize) -> Self {
        let n_classes = view.n_classes;
        let mut pairs: Vec<(f64, u16)> = view
            .rows
            .iter()
            .map(|&i| (view.value(covariate, i), view.label0(i) as u16))
            .collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut values = Vec::new();
        let mut cum = vec![0u32; n_classes];
        let mut row = vec![0u32; n_classes];
        for &(v, y) in &pairs {
            if values.last() != Some(&v) {
                cum.extend_from_slice(&row);
                values.push(v);
            }
            row[y as usize] += 1;
            let last = cum.len() - n_classes;
            cum[last..].copy_from_slice(&row);
        }
        debug_assert_eq!(cum.len(), (values.len() + 1) * n_classes);
        CovariateProfile {
            covariate,
            values,
            cum,
            n_classes,
        }
    }

    pub fn n_unique(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Split-point value for cut index `t` (`1..=n_unique-1`): the midpoint
    /// between the `t`-th and `t+1`-th distinct values.
    pub fn midpoint(&self, cut: u32) -> f64 {
        let t = cut as usize;
        (self.values[t - 1] + self.values[t]) / 2.0
    }

    fn cum_row(&self, t: usize) -> &[u32] {
        &self.cum[t * self.n_classes..(t + 1) * self.n_classes]
    }

    /// Per-child sizes and class counts (rows = `present`) induced by a
    /// strictly increasing cut sequence; `cuts` may be empty for one child.
    pub(crate) fn child_counts(&self, cuts: &[u32], present: &[u16]) -> scoring::ChildCounts {
        let k = cuts.len() + 1;
        let mut counts = vec![0u32; present.len() * k];
        let mut sizes = vec![0u32; k];
        let mut n = 0u32;
        let mut lo = 0usize;
        for child in 0..k {
            let hi = if child < cuts.len() {
                cuts[child] as usize
            } else {
                self.n_unique()
            };
            let (lo_row, hi_row) = (self.cum_row(lo), self.cum_row(hi));
            let mut size = 0u32;
            for (r, &class) in present.iter().enumerate() {
                let c = hi_row[class as usize] - lo_row[class as usize];
                counts[r * k + child] = c;
                size += c;
            }
            sizes[child] = size;
            n += size;
            lo = hi;
        }
        scoring::ChildCounts { counts, sizes, n }
    }
}

/// The winning split for a node.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDecision {
    pub covariate: usize,
    pub score: f64,
    pub multiway: bool,
    /// Ascending split points; one for binary splits. A value `x` routes to
    /// the first child whose point is `>= x`, and past the last point to the
    /// final child.
    pub points: Vec<f64>,
    /// `(present class id, child slot)` pairs: the class-to-child assignment
    /// the criterion settled on. Absent only for Gini-scored binary splits.
    pub assignment: Option<Vec<(u16, u16)>>,
}

impl SplitDecision {
    /// Child slot an encoded value routes to.
    pub fn route(&self, value: f64) -> usize {
        self.points.partition_point(|&p| p < value)
    }
}

/// Draws the node's candidate covariates: without replacement when at least
/// `mtry` splittable covariates exist, with replacement otherwise.
pub fn draw_covariates<R: Rng>(view: &NodeView, mtry: usize, rng: &mut R) -> Vec<usize> {
    let splittable = view.splittable_covariates();
    if splittable.is_empty() {
        return Vec::new();
    }
    if splittable.len() >= mtry {
        rand::seq::index::sample(rng, splittable.len(), mtry)
            .into_iter()
            .map(|i| splittable[i])
            .collect()
    } else {
        (0..mtry)
            .map(|_| splittable[rng.gen_range(0..splittable.len())])
            .collect()
    }
}

/// Samples the node's multi-way candidates: `mtry` covariate draws, then per
/// covariate either every-neighbor split points (few distinct values) or
/// `npervar` constrained random cut sets.
pub fn sample_split_candidates<R: Rng>(
    view: &NodeView,
    config: &MufConfig,
    mtry: usize,
    rng: &mut R,
) -> Vec<MultiwayCandidate> {
    let mut out = Vec::new();
    for covariate in draw_covariates(view, mtry, rng) {
        let profile = CovariateProfile::build(view, covariate);
        candidates::for_covariate(&profile, view.class_count(), config.npervar, rng, &mut out);
    }
    out
}

/// Scores one multi-way candidate; returns the score and the class-to-child
/// assignment as `(present class id, child slot)` pairs.
pub fn score_multiway<R: Rng>(
    view: &NodeView,
    candidate: &MultiwayCandidate,
    form: VariantProportions,
    rng: &mut R,
) -> (f64, Vec<(u16, u16)>) {
    let profile = CovariateProfile::build(view, candidate.covariate);
    let cc = profile.child_counts(&candidate.cuts, &view.present);
    let (score, child_of) = scoring::score_multiway_counts(&cc, form, rng);
    (score, pair_assignment(&view.present, &child_of))
}

/// Scores one binary split point under the configured binary criterion.
/// The assignment is present only under the assign-classes criterion.
pub fn score_binary<R: Rng>(
    view: &NodeView,
    covariate: usize,
    split_value: f64,
    binary: VariantBinary,
    form: VariantProportions,
    rng: &mut R,
) -> (f64, Option<Vec<(u16, u16)>>) {
    let profile = CovariateProfile::build(view, covariate);
    let cut = profile.values.partition_point(|&v| v <= split_value) as u32;
    assert!(
        cut >= 1 && (cut as usize) < profile.n_unique(),
        "split value must separate the node's values"
    );
    let cc = profile.child_counts(&[cut], &view.present);
    match binary {
        VariantBinary::Gini => (scoring::gini_gain(&cc), None),
        VariantBinary::AssignClasses => {
            let (score, child_of) = scoring::score_assign_binary(&cc, form, rng);
            (score, Some(pair_assignment(&view.present, &child_of)))
        }
    }
}

fn pair_assignment(present: &[u16], child_of: &[usize]) -> Vec<(u16, u16)> {
    present
        .iter()
        .zip(child_of)
        .map(|(&class, &child)| (class, child as u16))
        .collect()
}

/// Runs the whole per-node procedure and returns the best split, or `None`
/// when no covariate is splittable. Ties keep the earliest-scored candidate.
pub fn select_best_split<R: Rng>(
    view: &NodeView,
    config: &MufConfig,
    mtry: usize,
    rng: &mut R,
) -> Option<SplitDecision> {
    let multiway = rng.gen_bool(config.multiway_probability);
    let drawn = draw_covariates(view, mtry, rng);
    if drawn.is_empty() {
        return None;
    }
    let form = config.variant.proportions;
    let mut best: Option<SplitDecision> = None;
    let mut candidate_buf = Vec::new();
    for covariate in drawn {
        let profile = CovariateProfile::build(view, covariate);
        candidate_buf.clear();
        candidates::for_covariate(
            &profile,
            view.class_count(),
            config.npervar,
            rng,
            &mut candidate_buf,
        );
        if multiway {
            for cand in &candidate_buf {
                let cc = profile.child_counts(&cand.cuts, &view.present);
                let (score, child_of) = scoring::score_multiway_counts(&cc, form, rng);
                if best.as_ref().map_or(true, |b| score > b.score) {
                    best = Some(SplitDecision {
                        covariate,
                        score,
                        multiway: true,
                        points: cand.points.clone(),
                        assignment: Some(pair_assignment(&view.present, &child_of)),
                    });
                }
            }
        } else {
            // Every individual split point inside the sampled sets, first
            // occurrence only.
            let mut seen = vec![false; profile.n_unique()];
            for cand in &candidate_buf {
                for &cut in &cand.cuts {
                    if std::mem::replace(&mut seen[cut as usize], true) {
                        continue;
                    }
                    let cc = profile.child_counts(&[cut], &view.present);
                    let (score, assignment) = match config.variant.binary {
                        VariantBinary::Gini => (scoring::gini_gain(&cc), None),
                        VariantBinary::AssignClasses => {
                            let (s, child_of) = scoring::score_assign_binary(&cc, form, rng);
                            (s, Some(pair_assignment(&view.present, &child_of)))
                        }
                    };
                    if best.as_ref().map_or(true, |b| score > b.score) {
                        best = Some(SplitDecision {
                            covariate,
                            score,
                            multiway: false,
                            points: vec![profile.midpoint(cut)],
                            assignment,
                        });
                    }
                }
            }
        }
    }
    best
}
