//! Optimal injective assignment of node classes to child nodes.
//!
//! Given the per-child proportions of each class present at a node, the
//! assignment picks one distinct child per class so that the summed (squared)
//! proportions are maximal. Matrices here are tiny (rows = classes at the
//! node, columns = children), so an O(n^2 m) shortest-path Hungarian solver
//! is more than fast enough.

/// Result of [`assign_classes`]: `child_of[r]` is the child column assigned
/// to row `r`, and `objective` is the achieved sum of (squared) proportions,
/// accumulated in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAssignment {
    pub child_of: Vec<usize>,
    pub objective: f64,
}

/// Maximizes `sum_r w[r][child_of[r]]` over injective assignments, where
/// `w` is `proportions` squared elementwise when `squared` is set and the
/// raw proportions otherwise.
///
/// `proportions` is row-major with `n_classes * n_children` entries, all in
/// `[0, 1]`; requires `n_classes <= n_children`. Exact ties between
/// equal-value assignments are resolved toward lower child columns for lower
/// rows, so a fully tied matrix yields the identity assignment.
pub fn assign_classes(
    proportions: &[f64],
    n_classes: usize,
    n_children: usize,
    squared: bool,
) -> ClassAssignment {
    assert!(n_classes <= n_children, "assignment must be injective");
    assert_eq!(proportions.len(), n_classes * n_children);
    let mut w = Vec::with_capacity(proportions.len());
    if squared {
        w.extend(proportions.iter().map(|p| p * p));
    } else {
        w.extend_from_slice(proportions);
    }
    let mut child_of = max_weight_assignment(&w, n_classes, n_children);
    canonicalize_ties(&w, n_classes, n_children, &mut child_of);
    let objective = child_of
        .iter()
        .enumerate()
        .map(|(r, &c)| w[r * n_children + c])
        .sum();
    ClassAssignment {
        child_of,
        objective,
    }
}

/// Shortest-augmenting-path Hungarian method on the negated weights,
/// rectangular form with `n <= m`. Returns the column matched to each row.
fn max_weight_assignment(w: &[f64], n: usize, m: usize) -> Vec<usize> {
    // 1-based arrays; p[j] = row matched to column j, 0 = unmatched.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv[1..].fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = -w[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut child_of = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            child_of[p[j] - 1] = j - 1;
        }
    }
    child_of
}

/// Rewrites the assignment toward the lexicographically smallest equal-value
/// one reachable by single-row moves and pairwise swaps. Only exact weight
/// equality triggers a rewrite, so the objective is untouched.
fn canonicalize_ties(w: &[f64], n: usize, m: usize, child_of: &mut [usize]) {
    let mut taken = vec![false; m];
    loop {
        taken.fill(false);
        for &c in child_of.iter() {
            taken[c] = true;
        }
        let mut changed = false;
        for r in 0..n {
            let cur = child_of[r];
            for c in 0..cur {
                if !taken[c] && w[r * m + c] == w[r * m + cur] {
                    child_of[r] = c;
                    taken[c] = true;
                    taken[cur] = false;
                    changed = true;
                    break;
                }
            }
        }
        for r1 in 0..n {
            for r2 in (r1 + 1)..n {
                let (c1, c2) = (child_of[r1], child_of[r2]);
                if c2 < c1 && w[r1 * m + c1] + w[r2 * m + c2] == w[r1 * m + c2] + w[r2 * m + c1] {
                    child_of[r1] = c2;
                    child_of[r2] = c1;
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}
