//! Random multi-way candidate generation.
//!
//! A candidate for a covariate with `N` distinct node values is a set of cut
//! indices; cut `t` places a split point halfway between the `t`-th and
//! `t+1`-th distinct values. With `N` at most the node's class count every
//! neighboring pair is cut; otherwise `class_count - 1` cuts are drawn
//! uniformly from the sets whose resulting intervals (boundary ones
//! included) each cover at least `max(1, floor(N / (2 * class_count)))`
//! distinct values.

use rand::Rng;

use super::CovariateProfile;

/// One sampled multi-way split: cut indices plus their midpoint values,
/// both ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiwayCandidate {
    pub covariate: usize,
    pub cuts: Vec<u32>,
    pub points: Vec<f64>,
}

/// Minimum distinct values per interval when sampling cut sets.
pub fn min_gap(n_unique: usize, n_children: usize) -> usize {
    (n_unique / (2 * n_children)).max(1)
}

/// Uniform draw from the feasible cut sets via composition sampling: the
/// interval lengths beyond the minimum follow a uniform random composition,
/// realized by a sorted uniform subset in the stars-and-bars encoding.
pub(crate) fn sample_cut_set<R: Rng>(n_unique: usize, n_children: usize, rng: &mut R) -> Vec<u32> {
    let k = n_children;
    debug_assert!(k >= 2 && k <= n_unique);
    let q = min_gap(n_unique, k);
    let free = n_unique - k * q;
    let mut bars = rand::seq::index::sample(rng, free + k - 1, k - 1).into_vec();
    bars.sort_unstable();
    let mut cuts = Vec::with_capacity(k - 1);
    let mut prev = -1isize;
    let mut acc = 0usize;
    for &b in &bars {
        let extra = b as isize - prev - 1;
        acc += q + extra as usize;
        cuts.push(acc as u32);
        prev = b as isize;
    }
    cuts
}

/// Appends this covariate's candidates: one exhaustive candidate when the
/// distinct-value count is at most `class_count`, `npervar` sampled cut sets
/// otherwise.
pub(crate) fn for_covariate<R: Rng>(
    profile: &CovariateProfile,
    class_count: usize,
    npervar: usize,
    rng: &mut R,
    out: &mut Vec<MultiwayCandidate>,
) {
    let n_unique = profile.n_unique();
    if n_unique < 2 {
        return;
    }
    if n_unique <= class_count {
        let cuts: Vec<u32> = (1..n_unique as u32).collect();
        out.push(candidate(profile, cuts));
    } else {
        for _ in 0..npervar {
            let cuts = sample_cut_set(n_unique, class_count, rng);
            out.push(candidate(profile, cuts));
        }
    }
}

fn candidate(profile: &CovariateProfile, cuts: Vec<u32>) -> MultiwayCandidate {
    let points = cuts.iter().map(|&t| profile.midpoint(t)).collect();
    MultiwayCandidate {
        covariate: profile.covariate,
        cuts,
        points,
    }
}
