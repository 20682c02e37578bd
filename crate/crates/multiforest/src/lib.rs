//! Multi forests: random forests mixing multi-way and binary splits for
//! multi-class outcomes, with class-focused variable importance.
//!
//! Multi-way splits divide a node into several children at once and assign
//! each outcome class its own child; how well that works is the signal behind
//! the multi-class importance measure, which ranks covariates by their
//! ability to separate *individual* classes rather than merely to predict.
//! The discriminatory measure is its binary-split counterpart, and a
//! conventional permutation measure is included for comparison.
//!
//! ```
//! use multiforest::{train, Dataset, MufConfig};
//!
//! let columns = vec![
//!     vec![0.1, 0.2, 0.3, 1.1, 1.2, 1.3, 2.1, 2.2, 2.3],
//!     vec![5.0, 4.0, 6.0, 5.5, 4.5, 6.5, 5.2, 4.8, 6.1],
//! ];
//! let labels = vec![1, 1, 1, 2, 2, 2, 3, 3, 3];
//! let data = Dataset::continuous(columns, labels, 3).unwrap();
//! let config = MufConfig {
//!     ntree: 25,
//!     nmin: 2,
//!     seed: 7,
//!     ..MufConfig::default()
//! };
//! let model = train(&data, &config).unwrap();
//! let proba = model.predict_proba(&data).unwrap();
//! assert_eq!(proba.len(), 9);
//! ```

pub mod config;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod forest;
pub mod importance;
pub mod rng;
pub mod simulation;
pub mod split;

pub use config::{MufConfig, PredictionRule, Variant, VariantBinary, VariantProportions};
pub use data::{
    encode_dataset, load_dataset, order_nominal_categories, CategoryEncoding, CovariateKind,
    DataTable, Dataset, Schema,
};
pub use error::{Error, Result};
pub use evaluation::{
    repeated_stratified_cv, run_simulation_study, MetricReport, MufLearner, StudyPlan, StudyResult,
    VimMethod,
};
pub use forest::{train, CovariateMeta, MultiForestModel, Tree, TreeNode};
pub use importance::{
    compute_discriminatory_vim, compute_multiclass_vim, compute_node_vims, compute_permutation_vim,
    compute_vim_report, VimReport,
};
pub use simulation::{simulate_dataset, CovariateRole, SimDataset, SimSetting};
