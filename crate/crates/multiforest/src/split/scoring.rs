//! Split criteria on child class-count tables.
//!
//! All scores are computed from integer counts so that algebraically exact
//! values (a perfectly separating split scoring 1) come out exact in `f64`.
//! Proportion comparisons use cross-multiplied integers for the same reason;
//! only genuinely tied children consume tie-break randomness.

use rand::Rng;

use super::assignment::assign_classes;
use crate::config::VariantProportions;

/// Class counts per child for the classes present at a node: `counts` is
/// rows-by-children row-major, `sizes` the child totals, `n` the node size.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildCounts {
    pub counts: Vec<u32>,
    pub sizes: Vec<u32>,
    pub n: u32,
}

impl ChildCounts {
    pub fn n_children(&self) -> usize {
        self.sizes.len()
    }

    pub fn n_rows(&self) -> usize {
        self.counts.len() / self.sizes.len()
    }

    fn at(&self, row: usize, child: usize) -> u32 {
        self.counts[row * self.n_children() + child]
    }
}

/// Size-weighted criterion for a settled assignment:
/// `sum_r w(p_r) * size_r / n` with `w(p) = p^2` or `p`, evaluated as exact
/// count ratios.
pub(crate) fn partition_score(
    cc: &ChildCounts,
    child_of: &[usize],
    form: VariantProportions,
) -> f64 {
    match form {
        VariantProportions::Squared => {
            let mut acc = 0.0f64;
            for (r, &child) in child_of.iter().enumerate() {
                let cnt = cc.at(r, child) as f64;
                acc += cnt * cnt / cc.sizes[child] as f64;
            }
            acc / cc.n as f64
        }
        VariantProportions::NonSquared => {
            let total: u64 = child_of
                .iter()
                .enumerate()
                .map(|(r, &child)| cc.at(r, child) as u64)
                .sum();
            total as f64 / cc.n as f64
        }
    }
}

fn ratio_gt(a_num: u32, a_den: u32, b_num: u32, b_den: u32) -> std::cmp::Ordering {
    (a_num as u64 * b_den as u64).cmp(&(b_num as u64 * a_den as u64))
}

/// Independent best child per row (used when there are fewer children than
/// classes): exact proportion comparison, random tie among maxima.
fn argmax_children<R: Rng>(cc: &ChildCounts, rng: &mut R) -> Vec<usize> {
    let k = cc.n_children();
    let mut child_of = Vec::with_capacity(cc.n_rows());
    let mut tied = Vec::new();
    for r in 0..cc.n_rows() {
        tied.clear();
        tied.push(0usize);
        for j in 1..k {
            match ratio_gt(
                cc.at(r, j),
                cc.sizes[j],
                cc.at(r, tied[0]),
                cc.sizes[tied[0]],
            ) {
                std::cmp::Ordering::Greater => {
                    tied.clear();
                    tied.push(j);
                }
                std::cmp::Ordering::Equal => tied.push(j),
                std::cmp::Ordering::Less => {}
            }
        }
        let pick = if tied.len() == 1 {
            tied[0]
        } else {
            tied[rng.gen_range(0..tied.len())]
        };
        child_of.push(pick);
    }
    child_of
}

/// Multi-way criterion. With at least as many children as classes the
/// class-to-child assignment is the optimal injective one; with fewer
/// children every class independently takes its best child. Returns the
/// score and the chosen assignment by row.
pub(crate) fn score_multiway_counts<R: Rng>(
    cc: &ChildCounts,
    form: VariantProportions,
    rng: &mut R,
) -> (f64, Vec<usize>) {
    let k = cc.n_children();
    let rows = cc.n_rows();
    let child_of = if k >= rows {
        let mut props = Vec::with_capacity(rows * k);
        for r in 0..rows {
            for j in 0..k {
                props.push(cc.at(r, j) as f64 / cc.sizes[j] as f64);
            }
        }
        assign_classes(&props, rows, k, form == VariantProportions::Squared).child_of
    } else {
        argmax_children(cc, rng)
    };
    (partition_score(cc, &child_of, form), child_of)
}

/// Binary assign-classes criterion: each class takes its better child
/// (random tie), then the size-weighted criterion scores the pair.
pub(crate) fn score_assign_binary<R: Rng>(
    cc: &ChildCounts,
    form: VariantProportions,
    rng: &mut R,
) -> (f64, Vec<usize>) {
    debug_assert_eq!(cc.n_children(), 2);
    let child_of = argmax_children(cc, rng);
    (partition_score(cc, &child_of, form), child_of)
}

/// Gini impurity decrease from parent to children.
pub(crate) fn gini_gain(cc: &ChildCounts) -> f64 {
    let n = cc.n as f64;
    let k = cc.n_children();
    let rows = cc.n_rows();
    let mut parent_sq = 0.0f64;
    for r in 0..rows {
        let total: u32 = (0..k).map(|j| cc.at(r, j)).sum();
        let p = total as f64 / n;
        parent_sq += p * p;
    }
    let mut weighted_child = 0.0f64;
    for j in 0..k {
        if cc.sizes[j] == 0 {
            continue;
        }
        let size = cc.sizes[j] as f64;
        let mut sq = 0.0f64;
        for r in 0..rows {
            let p = cc.at(r, j) as f64 / size;
            sq += p * p;
        }
        weighted_child += (size / n) * (1.0 - sq);
    }
    (1.0 - parent_sq) - weighted_child
}
