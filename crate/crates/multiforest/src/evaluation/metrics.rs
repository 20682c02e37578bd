//! Two-group AUCs and multi-class performance metrics.

/// Mann–Whitney AUC: the probability that a random value from `a` exceeds a
/// random value from `b`, ties counting one half. `None` when either group
/// is empty. Computed via midranks, so ties cost no extra passes.
pub fn auc_two_groups(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let mut merged: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    merged.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));

    let mut rank_sum_a = 0.0f64;
    let mut i = 0usize;
    while i < merged.len() {
        let mut j = i;
        while j + 1 < merged.len() && merged[j + 1].0 == merged[i].0 {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share the midrank.
        let midrank = (i + j + 2) as f64 / 2.0;
        let ties_in_a = merged[i..=j].iter().filter(|(_, in_a)| *in_a).count();
        rank_sum_a += midrank * ties_in_a as f64;
        i = j + 1;
    }
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let u = rank_sum_a - na * (na + 1.0) / 2.0;
    Some(u / (na * nb))
}

/// A mean with its normal-approximation 95% interval. The interval is absent
/// for fewer than two values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanAuc {
    pub mean: f64,
    pub ci: Option<(f64, f64)>,
    pub n: usize,
}

/// Mean of per-dataset AUC values with `mean ± 1.96·sd/√m`, `sd` taken with
/// denominator `m`. `None` for an empty list.
pub fn mean_auc_ci(values: &[f64]) -> Option<MeanAuc> {
    if values.is_empty() {
        return None;
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let ci = (values.len() >= 2).then(|| {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
        let half = 1.96 * var.sqrt() / m.sqrt();
        (mean - half, mean + half)
    });
    Some(MeanAuc {
        mean,
        ci,
        n: values.len(),
    })
}

/// One-vs-rest AUC per class: column `c` of the probability matrix scored
/// against the indicator `label == c+1`. `None` where a class has no
/// positives or no negatives.
pub fn one_vs_rest_aucs(
    probabilities: &[Vec<f64>],
    labels: &[u32],
    n_classes: usize,
) -> Vec<Option<f64>> {
    assert_eq!(probabilities.len(), labels.len());
    (0..n_classes)
        .map(|c| {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for (row, &y) in probabilities.iter().zip(labels) {
                if y as usize == c + 1 {
                    pos.push(row[c]);
                } else {
                    neg.push(row[c]);
                }
            }
            auc_two_groups(&pos, &neg)
        })
        .collect()
}

/// Mean of the defined one-vs-rest AUCs (equal weights). `None` when no
/// class has a defined AUC.
pub fn aunu(probabilities: &[Vec<f64>], labels: &[u32], n_classes: usize) -> Option<f64> {
    let aucs = one_vs_rest_aucs(probabilities, labels, n_classes);
    let defined: Vec<f64> = aucs.into_iter().flatten().collect();
    if defined.is_empty() {
        return None;
    }
    Some(defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Class-frequency-weighted mean of the defined one-vs-rest AUCs, weights
/// renormalized over the defined classes.
pub fn aunp(probabilities: &[Vec<f64>], labels: &[u32], n_classes: usize) -> Option<f64> {
    let aucs = one_vs_rest_aucs(probabilities, labels, n_classes);
    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        counts[y as usize - 1] += 1;
    }
    let mut weight_sum = 0.0;
    let mut total = 0.0;
    for (c, auc) in aucs.iter().enumerate() {
        if let Some(v) = auc {
            let w = counts[c] as f64 / labels.len() as f64;
            weight_sum += w;
            total += w * v;
        }
    }
    (weight_sum > 0.0).then(|| total / weight_sum)
}

/// Multi-class Brier score: mean over observations of the per-observation
/// sum over classes of squared probability error; ranges over `[0, 2]`.
pub fn brier(probabilities: &[Vec<f64>], labels: &[u32]) -> f64 {
    assert_eq!(probabilities.len(), labels.len());
    assert!(!probabilities.is_empty());
    let mut total = 0.0;
    for (row, &y) in probabilities.iter().zip(labels) {
        for (c, &p) in row.iter().enumerate() {
            let truth = f64::from(c == y as usize - 1);
            total += (p - truth) * (p - truth);
        }
    }
    total / probabilities.len() as f64
}

/// Fraction of matching labels.
pub fn accuracy(predicted: &[u32], labels: &[u32]) -> f64 {
    assert_eq!(predicted.len(), labels.len());
    assert!(!predicted.is_empty());
    let hits = predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
    hits as f64 / labels.len() as f64
}
