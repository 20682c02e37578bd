//! Repeated stratified cross-validation of probability learners.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::config::MufConfig;
use crate::data::{encode_dataset, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::metrics::{accuracy, aunp, aunu, brier};
use crate::forest::argmax_lowest;
use crate::rng::{stream, Purpose};

/// Anything that can fit on training rows and emit class probabilities for
/// test rows of the same dataset.
pub trait FoldLearner {
    fn fit_predict(
        &self,
        data: &Dataset,
        train_rows: &[usize],
        test_rows: &[usize],
        seed: u64,
    ) -> Result<Vec<Vec<f64>>>;
}

/// The forest as a fold learner. Nominal covariates are rank-encoded inside
/// each training fold, so no test information leaks into the encoding.
pub struct MufLearner {
    /// Template configuration; the seed field is replaced per fold.
    pub config: MufConfig,
}

impl FoldLearner for MufLearner {
    fn fit_predict(
        &self,
        data: &Dataset,
        train_rows: &[usize],
        test_rows: &[usize],
        seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        let train = data.subset(train_rows);
        let test = data.subset(test_rows);
        let encoded = if train.has_nominal() {
            encode_dataset(&train)?.0
        } else {
            train
        };
        let config = MufConfig {
            seed,
            ..self.config.clone()
        };
        let model = crate::forest::train(&encoded, &config)?;
        model.predict_proba(&test)
    }
}

/// Seed-deterministic stratified fold assignment: within each class, fold
/// counts differ by at most one. Returns the fold id per observation.
pub fn stratified_folds(
    labels: &[u32],
    n_classes: usize,
    folds: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::config("cross-validation needs at least 2 folds"));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y as usize - 1].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < folds {
            return Err(Error::data(format!(
                "class {} has {} observations, fewer than {} folds",
                c + 1,
                members.len(),
                folds
            )));
        }
    }
    let mut fold_of = vec![0usize; labels.len()];
    // Rotating the dealing start spreads remainder observations across
    // folds instead of always topping up fold 0.
    let mut start = 0usize;
    for members in &mut by_class {
        use rand::seq::SliceRandom;
        members.shuffle(rng);
        for (i, &row) in members.iter().enumerate() {
            fold_of[row] = (start + i) % folds;
        }
        start = (start + members.len()) % folds;
    }
    Ok(fold_of)
}

/// One evaluation fold's metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvRow {
    /// 1-based repetition index.
    pub repetition: usize,
    /// 1-based fold index.
    pub fold: usize,
    pub aunu: Option<f64>,
    pub aunp: Option<f64>,
    pub brier: f64,
    pub accuracy: f64,
}

/// Median and quartiles of one metric across all folds.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: &'static str,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// All fold rows plus per-metric aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<CvRow>,
    pub summary: Vec<MetricSummary>,
}

impl MetricReport {
    /// Fold rows as `repetition,fold,aunu,aunp,brier,accuracy`; undefined
    /// AUC cells stay empty.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("repetition,fold,aunu,aunp,brier,accuracy\n");
        for row in &self.rows {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.repetition,
                row.fold,
                opt(row.aunu),
                opt(row.aunp),
                row.brier,
                row.accuracy
            ));
        }
        out
    }

    /// Aggregates as `metric,median,q1,q3`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("metric,median,q1,q3\n");
        for s in &self.summary {
            out.push_str(&format!("{},{},{},{}\n", s.metric, s.median, s.q1, s.q3));
        }
        out
    }
}

/// Linear-interpolation quantile of pre-sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(rows: &[CvRow]) -> Vec<MetricSummary> {
    type Metric = (&'static str, fn(&CvRow) -> Option<f64>);
    let metrics: [Metric; 4] = [
        ("aunu", |r| r.aunu),
        ("aunp", |r| r.aunp),
        ("brier", |r| Some(r.brier)),
        ("accuracy", |r| Some(r.accuracy)),
    ];
    metrics
        .iter()
        .map(|(name, get)| {
            let mut values: Vec<f64> = rows.iter().filter_map(get).collect();
            values.sort_unstable_by(f64::total_cmp);
            MetricSummary {
                metric: name,
                median: quantile(&values, 0.5),
                q1: quantile(&values, 0.25),
                q3: quantile(&values, 0.75),
            }
        })
        .collect()
}

/// Runs `repetitions` rounds of `folds`-fold stratified cross-validation.
/// Fold partitions and learner seeds derive from `seed`, so a rerun
/// reproduces the report exactly. Point predictions for the accuracy metric
/// take the highest-probability class, lowest index on ties.
pub fn repeated_stratified_cv(
    data: &Dataset,
    learner: &dyn FoldLearner,
    folds: usize,
    repetitions: usize,
    seed: u64,
) -> Result<MetricReport> {
    if repetitions == 0 {
        return Err(Error::config("repetitions must be at least 1"));
    }
    let mut rows = Vec::with_capacity(repetitions * folds);
    for rep in 0..repetitions {
        let mut fold_rng = stream(seed, Purpose::CvFolds, rep as u64, 0);
        let fold_of = stratified_folds(data.labels(), data.n_classes(), folds, &mut fold_rng)?;
        for fold in 0..folds {
            let (mut train_rows, mut test_rows) = (Vec::new(), Vec::new());
            for (i, &f) in fold_of.iter().enumerate() {
                if f == fold {
                    test_rows.push(i);
                } else {
                    train_rows.push(i);
                }
            }
            let learner_seed =
                stream(seed, Purpose::CvFolds, rep as u64, fold as u64 + 1).next_u64();
            let proba = learner.fit_predict(data, &train_rows, &test_rows, learner_seed)?;
            if proba.len() != test_rows.len() {
                return Err(Error::internal("learner returned a misshapen matrix"));
            }
            let labels: Vec<u32> = test_rows.iter().map(|&i| data.labels()[i]).collect();
            let predicted: Vec<u32> = proba
                .iter()
                .map(|row| argmax_lowest(row) as u32 + 1)
                .collect();
            rows.push(CvRow {
                repetition: rep + 1,
                fold: fold + 1,
                aunu: aunu(&proba, &labels, data.n_classes()),
                aunp: aunp(&proba, &labels, data.n_classes()),
                brier: brier(&proba, &labels),
                accuracy: accuracy(&predicted, &labels),
            });
        }
    }
    let summary = summarize(&rows);
    Ok(MetricReport { rows, summary })
}
