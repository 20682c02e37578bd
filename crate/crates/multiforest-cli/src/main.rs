//! `muf`: multi forests from the shell.
//!
//! Six subcommands cover the full workflow: `simulate` generates benchmark
//! data with known covariate roles, `train` fits and saves a forest,
//! `predict` scores new observations, `importance` computes the
//! variable-importance measures, `simstudy` runs the simulation study grid,
//! and `crossval` compares the forest against a binary-split-only baseline
//! under repeated stratified cross-validation.
//!
//! Tables go to `--out` (or stdout where noted), logs to stderr. Exit codes:
//! 0 on success, 2 on usage or input errors, 3 on an internal invariant
//! violation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use multiforest::{
    compute_vim_report, encode_dataset, load_dataset, repeated_stratified_cv, run_simulation_study,
    simulate_dataset, train, DataTable, Dataset, Error, MufConfig, MufLearner, MultiForestModel,
    Result, Schema, SimSetting, StudyPlan, Variant, VariantBinary, VariantProportions, VimMethod,
};

const WORKERS_ENV: &str = "MUF_WORKERS";

#[derive(Parser)]
#[command(
    name = "muf",
    version,
    about = "Random forests with multi-way splits for multi-class outcomes"
)]
struct Cli {
    /// Worker threads for parallel stages; falls back to MUF_WORKERS, then
    /// all cores. Results never depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Simulate(SimulateCmd),
    Train(TrainCmd),
    Predict(PredictCmd),
    Importance(ImportanceCmd),
    Simstudy(SimstudyCmd),
    Crossval(CrossvalCmd),
}

/// Dataset input shared by the commands that read labeled tables.
#[derive(Args)]
struct InputOpts {
    /// Input table, comma or tab delimited.
    #[arg(long)]
    input: PathBuf,

    /// Name of the class-label column.
    #[arg(long = "outcome-column")]
    outcome_column: String,

    /// Covariate kind declarations (`name: continuous|ordered|nominal`, one
    /// per line); undeclared columns are inferred.
    #[arg(long)]
    schema: Option<PathBuf>,
}

impl InputOpts {
    fn load(&self) -> Result<Dataset> {
        let schema = self.schema.as_deref().map(Schema::from_file).transpose()?;
        let data = load_dataset(&self.input, &self.outcome_column, schema.as_ref())?;
        log::info!(
            "loaded {}: {} observations, {} covariates, {} classes",
            self.input.display(),
            data.n(),
            data.p(),
            data.n_classes()
        );
        Ok(data)
    }
}

/// Training parameters shared by the commands that grow forests.
#[derive(Args)]
struct ForestOpts {
    /// Number of trees.
    #[arg(long, default_value_t = 5000)]
    ntree: usize,

    /// Candidate covariates per split; defaults to floor(sqrt(p)).
    #[arg(long)]
    mtry: Option<usize>,

    /// Multi-way candidate split-point sets per drawn covariate.
    #[arg(long, default_value_t = 5)]
    npervar: usize,

    /// Nodes of at most this size become leaves.
    #[arg(long, default_value_t = 5)]
    nmin: usize,

    /// In-bag fraction drawn without replacement per tree.
    #[arg(long, default_value_t = 0.7)]
    prop: f64,

    /// Probability that a node attempts a multi-way split.
    #[arg(long = "multiway-prob", default_value_t = 0.5)]
    multiway_prob: f64,

    /// Criterion pairing: wsquared_wgini, wosquared_wgini, wsquared_wogini,
    /// or wosquared_wogini.
    #[arg(long, default_value_t = Variant::default().to_string())]
    variant: String,

    /// Point-prediction rule: max_probability or majority_vote.
    #[arg(long = "prediction-rule", default_value = "max_probability")]
    prediction_rule: String,

    /// Master seed; every random draw derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ForestOpts {
    fn config(&self) -> Result<MufConfig> {
        Ok(MufConfig {
            ntree: self.ntree,
            mtry: self.mtry,
            npervar: self.npervar,
            nmin: self.nmin,
            prop: self.prop,
            multiway_probability: self.multiway_prob,
            variant: self.variant.parse()?,
            prediction_rule: self.prediction_rule.parse()?,
            seed: self.seed,
        })
    }
}

/// Generate a benchmark dataset with known covariate roles.
///
/// Writes a table whose outcome column is named `class`, plus an optional
/// sidecar mapping each covariate to its role (noise or one of the
/// informative mean patterns).
#[derive(Args)]
struct SimulateCmd {
    /// Number of classes: 4, 6, or 10.
    #[arg(long)]
    classes: usize,

    /// Number of observations.
    #[arg(long)]
    n: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Dataset destination.
    #[arg(long)]
    out: PathBuf,

    /// Covariate-role sidecar destination (`covariate,role`).
    #[arg(long = "roles-out")]
    roles_out: Option<PathBuf>,
}

impl SimulateCmd {
    fn run(&self) -> Result<()> {
        let sim = simulate_dataset(&SimSetting {
            n_classes: self.classes,
            n: self.n,
            seed: self.seed,
        })?;
        write_text(&self.out, &dataset_csv(&sim.dataset, "class"))?;
        log::info!(
            "wrote {} rows x {} covariates to {}",
            sim.dataset.n(),
            sim.dataset.p(),
            self.out.display()
        );
        if let Some(path) = &self.roles_out {
            write_text(path, &sim.roles_csv())?;
            log::info!("wrote covariate roles to {}", path.display());
        }
        Ok(())
    }
}

/// Train a forest and save the model.
#[derive(Args)]
struct TrainCmd {
    #[command(flatten)]
    input: InputOpts,

    #[command(flatten)]
    forest: ForestOpts,

    /// Model destination.
    #[arg(long)]
    model: PathBuf,
}

impl TrainCmd {
    fn run(&self) -> Result<()> {
        let config = self.forest.config()?;
        let mut data = self.input.load()?;
        if data.has_nominal() {
            let (encoded, encodings) = encode_dataset(&data)?;
            log::info!("rank-encoded {} nominal covariates", encodings.len());
            data = encoded;
        }
        let start = Instant::now();
        let model = train(&data, &config)?;
        let (min, mean, max) = model.depth_stats();
        log::info!(
            "trained {} trees in {:.2}s; depth min/mean/max = {min}/{mean:.1}/{max}",
            model.trees.len(),
            start.elapsed().as_secs_f64()
        );
        model.save(&self.model)?;
        log::info!("wrote model to {}", self.model.display());
        Ok(())
    }
}

/// Score new observations with a saved model.
///
/// Covariates are matched to the model by column name; extra columns are
/// ignored. The output table has a `predicted` column followed by one
/// averaged-probability column per class (`p_<class>`).
#[derive(Args)]
struct PredictCmd {
    /// Saved model file.
    #[arg(long)]
    model: PathBuf,

    /// Input table.
    #[arg(long)]
    input: PathBuf,

    /// Prediction table destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override the prediction rule stored in the model.
    #[arg(long = "prediction-rule")]
    prediction_rule: Option<String>,
}

impl PredictCmd {
    fn run(&self) -> Result<()> {
        let model = MultiForestModel::load(&self.model)?;
        let rule = match &self.prediction_rule {
            Some(s) => s.parse()?,
            None => model.config.prediction_rule,
        };
        let table = DataTable::from_file(&self.input)?;
        let (columns, _) = model.align_table(&table, None)?;
        let proba = model.predict_proba_columns(&columns);
        let classes = model.predict_class_columns(&columns, rule);

        let mut out = String::from("predicted");
        for name in &model.class_names {
            out.push_str(",p_");
            out.push_str(name);
        }
        out.push('\n');
        for (pred, row) in classes.iter().zip(&proba) {
            out.push_str(&model.class_names[(pred - 1) as usize]);
            for p in row {
                out.push(',');
                out.push_str(&p.to_string());
            }
            out.push('\n');
        }
        emit(self.out.as_deref(), &out)?;
        log::info!("scored {} observations", classes.len());
        Ok(())
    }
}

/// Compute variable-importance measures on the training data.
///
/// The input must be the exact dataset the model was trained on; anything
/// else is rejected. Columns: `covariate,multi_class,discriminatory` and,
/// unless suppressed, `permutation`. The multi-class cell is empty for
/// covariates on which the measure is undefined.
#[derive(Args)]
struct ImportanceCmd {
    /// Saved model file.
    #[arg(long)]
    model: PathBuf,

    #[command(flatten)]
    input: InputOpts,

    /// Skip the permutation measure.
    #[arg(long = "no-permutation")]
    no_permutation: bool,

    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ImportanceCmd {
    fn run(&self) -> Result<()> {
        let model = MultiForestModel::load(&self.model)?;
        let data = self.input.load()?;
        let report = compute_vim_report(&model, &data, !self.no_permutation)?;
        emit(self.out.as_deref(), &report.to_csv_string())?;
        let undefined = report.multi_class.iter().filter(|v| v.is_none()).count();
        if undefined > 0 {
            log::info!("multi-class measure undefined for {undefined} covariates");
        }
        Ok(())
    }
}

/// Run the simulation study and summarize how well each measure separates
/// covariate groups, as mean AUCs with 95% confidence intervals.
#[derive(Args)]
struct SimstudyCmd {
    /// Class counts to include.
    #[arg(long = "classes", value_delimiter = ',', default_values_t = vec![4, 6, 10])]
    classes: Vec<usize>,

    /// Sample sizes to include.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1000])]
    n: Vec<usize>,

    /// Repetitions per grid cell.
    #[arg(long, default_value_t = 10)]
    reps: usize,

    /// Measures to evaluate: multi_class, discriminatory, difference,
    /// permutation.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "multi_class,discriminatory,difference,permutation"
    )]
    methods: Vec<String>,

    #[command(flatten)]
    forest: ForestOpts,

    /// Summary table destination.
    #[arg(long)]
    out: PathBuf,

    /// Optional per-repetition AUC table destination.
    #[arg(long = "per-rep-out")]
    per_rep_out: Option<PathBuf>,
}

impl SimstudyCmd {
    fn run(&self) -> Result<()> {
        let methods: Vec<VimMethod> = self
            .methods
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_>>()?;
        let plan = StudyPlan {
            class_counts: self.classes.clone(),
            sample_sizes: self.n.clone(),
            repetitions: self.reps,
            methods,
            config: self.forest.config()?,
            seed: self.forest.seed,
        };
        let cells = plan.class_counts.len() * plan.sample_sizes.len();
        log::info!(
            "running {} grid cells x {} repetitions, {} trees per forest",
            cells,
            plan.repetitions,
            plan.config.ntree
        );
        let start = Instant::now();
        let result = run_simulation_study(&plan)?;
        log::info!("study finished in {:.2}s", start.elapsed().as_secs_f64());
        write_text(&self.out, &result.summary_csv())?;
        log::info!("wrote summary to {}", self.out.display());
        if let Some(path) = &self.per_rep_out {
            write_text(path, &result.per_repetition_csv())?;
            log::info!("wrote per-repetition AUCs to {}", path.display());
        }
        Ok(())
    }
}

/// Repeated stratified cross-validation of the configured forest against a
/// binary-split-only baseline on the same fold partitions.
///
/// The fold table has one row per (method, repetition, fold) with AUNU,
/// AUNP, Brier score, and accuracy; the aggregate block (median and
/// quartiles per method and metric) is printed to stdout and optionally
/// saved.
#[derive(Args)]
struct CrossvalCmd {
    #[command(flatten)]
    input: InputOpts,

    #[command(flatten)]
    forest: ForestOpts,

    /// Folds per repetition.
    #[arg(long, default_value_t = 5)]
    folds: usize,

    /// Repetitions.
    #[arg(long, default_value_t = 5)]
    repetitions: usize,

    /// Per-fold metric table destination.
    #[arg(long)]
    out: PathBuf,

    /// Aggregate table destination; printed to stdout either way.
    #[arg(long = "summary-out")]
    summary_out: Option<PathBuf>,
}

impl CrossvalCmd {
    fn run(&self) -> Result<()> {
        let config = self.forest.config()?;
        let baseline = MufConfig {
            multiway_probability: 0.0,
            variant: Variant {
                proportions: VariantProportions::Squared,
                binary: VariantBinary::Gini,
            },
            ..config.clone()
        };
        let data = self.input.load()?;

        let mut rows = String::from("method,repetition,fold,aunu,aunp,brier,accuracy\n");
        let mut summary = String::from("method,metric,median,q1,q3\n");
        for (method, config) in [("muf", config), ("binary_baseline", baseline)] {
            log::info!("cross-validating {method}");
            let learner = MufLearner { config };
            let report = repeated_stratified_cv(
                &data,
                &learner,
                self.folds,
                self.repetitions,
                self.forest.seed,
            )?;
            append_with_method(&mut rows, method, &report.rows_csv());
            append_with_method(&mut summary, method, &report.summary_csv());
        }
        write_text(&self.out, &rows)?;
        log::info!("wrote fold metrics to {}", self.out.display());
        print!("{summary}");
        if let Some(path) = &self.summary_out {
            write_text(path, &summary)?;
        }
        Ok(())
    }
}

/// Appends every data line of `csv`, prefixed with a method column.
fn append_with_method(out: &mut String, method: &str, csv: &str) {
    for line in csv.lines().skip(1) {
        out.push_str(method);
        out.push(',');
        out.push_str(line);
        out.push('\n');
    }
}

/// Renders a dataset as a delimited table, labels under `outcome` first.
/// Values print in shortest round-trip form, so reading the file back
/// reproduces them exactly.
fn dataset_csv(data: &Dataset, outcome: &str) -> String {
    let mut out = String::from(outcome);
    for name in data.names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..data.n() {
        out.push_str(&data.class_names()[(data.labels()[i] - 1) as usize]);
        for j in 0..data.p() {
            out.push(',');
            out.push_str(&data.column(j)[i].to_string());
        }
        out.push('\n');
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(dest: Option<&Path>, text: &str) -> Result<()> {
    match dest {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Caps rayon's global pool when a worker count is requested, by flag or by
/// the MUF_WORKERS variable. All parallel stages fold results in a fixed
/// order, so the count affects wall time only.
fn init_workers(flag: Option<usize>) -> Result<()> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(raw) => Some(raw.parse().map_err(|_| {
                Error::config(format!(
                    "{WORKERS_ENV} must be a positive integer, got {raw:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    let Some(n) = requested else {
        return Ok(());
    };
    if n == 0 {
        return Err(Error::config("worker count must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::internal(format!("failed to build thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<()> {
    init_workers(cli.workers)?;
    match &cli.command {
        Command::Simulate(cmd) => cmd.run(),
        Command::Train(cmd) => cmd.run(),
        Command::Predict(cmd) => cmd.run(),
        Command::Importance(cmd) => cmd.run(),
        Command::Simstudy(cmd) => cmd.run(),
        Command::Crossval(cmd) => cmd.run(),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        log::error!("{err}");
        let code = if matches!(err, Error::Internal(_)) {
            3
        } else {
            2
        };
        std::process::exit(code);
    }
}
