//! Ranking and predictive-performance evaluation: two-group AUCs with
//! confidence intervals, multi-class metrics, repeated stratified
//! cross-validation, paired significance tests, and the simulation study
//! driver that ties them to the importance measures.

pub mod cv;
pub mod metrics;
pub mod study;
pub mod wilcoxon;

pub use cv::{
    repeated_stratified_cv, stratified_folds, CvRow, FoldLearner, MetricReport, MufLearner,
};
pub use metrics::{
    accuracy, auc_two_groups, aunp, aunu, brier, mean_auc_ci, one_vs_rest_aucs, MeanAuc,
};
pub use study::{
    run_simulation_study, GroupAucResult, RepAucRow, StudyPlan, StudyResult, VimMethod,
};
pub use wilcoxon::{
    holm_adjust, paired_wilcoxon, paired_wilcoxon_holm, PairedTestResult, WilcoxonResult,
};
