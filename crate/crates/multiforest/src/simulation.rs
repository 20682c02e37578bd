//! Simulated multi-class datasets with labeled covariate roles.
//!
//! Each dataset holds 50 standard-normal noise covariates and three
//! covariates per informative role. Informative covariates are unit-variance
//! normals whose class-specific means either separate groups of classes
//! (`two_gr`, `thr_gr`) or single out one or a few classes (`cl_as_1` through
//! `cl_as_4`); which roles exist depends on the class count. Class labels are
//! balanced, with any remainder going to the lowest class indices, and rows
//! are shuffled so label order carries no information.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{CovariateKind, Dataset};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// What a simulated covariate is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovariateRole {
    /// No class signal.
    Noise,
    /// Mean differs between two groups of classes.
    TwoGr,
    /// Mean differs between three groups of classes.
    ThrGr,
    /// One class singled out by a strong mean shift.
    ClAs1,
    /// Two classes singled out.
    ClAs2,
    /// Several classes with graded mean shifts.
    ClAs3,
    /// Graded shifts over class pairs; ten-class settings only.
    ClAs4,
}

impl CovariateRole {
    pub const ALL: [CovariateRole; 7] = [
        CovariateRole::Noise,
        CovariateRole::TwoGr,
        CovariateRole::ThrGr,
        CovariateRole::ClAs1,
        CovariateRole::ClAs2,
        CovariateRole::ClAs3,
        CovariateRole::ClAs4,
    ];

    pub fn id(self) -> &'static str {
        match self {
            CovariateRole::Noise => "noise",
            CovariateRole::TwoGr => "two_gr",
            CovariateRole::ThrGr => "thr_gr",
            CovariateRole::ClAs1 => "cl_as_1",
            CovariateRole::ClAs2 => "cl_as_2",
            CovariateRole::ClAs3 => "cl_as_3",
            CovariateRole::ClAs4 => "cl_as_4",
        }
    }

    /// Per-class means for this role, or `None` when the role is absent for
    /// the class count.
    pub fn class_means(self, n_classes: usize) -> Option<Vec<f64>> {
        use CovariateRole::*;
        let means: &[f64] = match (self, n_classes) {
            (Noise, _) => return Some(vec![0.0; n_classes]),
            (TwoGr, 4) => &[0.0, 0.0, 1.5, 1.5],
            (ClAs1, 4) => &[0.0, 0.0, 0.0, 1.0],
            (ClAs2, 4) => &[0.0, 0.0, 1.0, 2.0],
            (ClAs3, 4) => &[0.0, 0.75, 1.5, 2.25],
            (TwoGr, 6) => &[0.0, 0.0, 0.0, 1.5, 1.5, 1.5],
            (ThrGr, 6) => &[0.0, 0.0, 1.0, 1.0, 2.0, 2.0],
            (ClAs1, 6) => &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            (ClAs2, 6) => &[0.0, 0.0, 0.0, 0.0, 1.0, 2.0],
            (ClAs3, 6) => &[0.0, 0.0, 0.0, 0.75, 1.5, 2.25],
            (TwoGr, 10) => &[0.0, 0.0, 0.0, 0.0, 0.0, 1.5, 1.5, 1.5, 1.5, 1.5],
            (ThrGr, 10) => &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0],
            (ClAs1, 10) => &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            (ClAs2, 10) => &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0],
            (ClAs3, 10) => &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.75, 0.75, 1.5, 2.25],
            (ClAs4, 10) => &[0.0, 0.0, 0.0, 0.0, 0.75, 0.75, 1.5, 1.5, 2.25, 3.0],
            _ => return None,
        };
        Some(means.to_vec())
    }
}

impl std::fmt::Display for CovariateRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for CovariateRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CovariateRole::ALL
            .into_iter()
            .find(|r| r.id() == s)
            .ok_or_else(|| Error::config(format!("unknown covariate role {s:?}")))
    }
}

/// The informative roles present for a class count, in column order.
pub fn informative_roles(n_classes: usize) -> Result<Vec<CovariateRole>> {
    if !matches!(n_classes, 4 | 6 | 10) {
        return Err(Error::config(format!(
            "simulated settings support 4, 6, or 10 classes, got {n_classes}"
        )));
    }
    Ok(CovariateRole::ALL
        .into_iter()
        .filter(|r| *r != CovariateRole::Noise && r.class_means(n_classes).is_some())
        .collect())
}

/// One simulation scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimSetting {
    /// Class count; 4, 6, or 10.
    pub n_classes: usize,
    pub n: usize,
    pub seed: u64,
}

/// A generated dataset with the role of every covariate.
#[derive(Debug, Clone)]
pub struct SimDataset {
    pub dataset: Dataset,
    /// Role per covariate, aligned with the dataset's columns.
    pub roles: Vec<CovariateRole>,
}

impl SimDataset {
    /// Roles sidecar table: `covariate, role`.
    pub fn roles_csv(&self) -> String {
        let mut out = String::from("covariate,role\n");
        for (name, role) in self.dataset.names().iter().zip(&self.roles) {
            out.push_str(&format!("{name},{role}\n"));
        }
        out
    }
}

pub const NOISE_COVARIATES: usize = 50;
pub const COVARIATES_PER_ROLE: usize = 3;

/// Generates one dataset. The same setting always produces the same data:
/// the RNG stream is keyed by `(seed, n_classes, n)` and consumed in a fixed
/// order (labels, then columns left to right).
pub fn simulate_dataset(setting: &SimSetting) -> Result<SimDataset> {
    let c = setting.n_classes;
    let n = setting.n;
    let informative = informative_roles(c)?;
    if n < c {
        return Err(Error::config(format!(
            "need at least one observation per class: n = {n} < {c} classes"
        )));
    }

    let mut rng = stream(setting.seed, Purpose::Simulation, c as u64, n as u64);

    // Balanced labels: floor(n / C) per class, remainder to the lowest
    // class indices, then shuffled.
    let mut labels: Vec<u32> = Vec::with_capacity(n);
    for class in 1..=c {
        let count = n / c + usize::from(class <= n % c);
        labels.extend(std::iter::repeat(class as u32).take(count));
    }
    labels.shuffle(&mut rng);

    let mut names = Vec::new();
    let mut roles = Vec::new();
    let mut columns = Vec::new();
    let mut push_column = |role: CovariateRole, name: String, rng: &mut rand_chacha::ChaCha8Rng| {
        let means = role
            .class_means(c)
            .expect("role present for this class count");
        let column = labels
            .iter()
            .map(|&y| means[y as usize - 1] + rng.sample::<f64, _>(StandardNormal))
            .collect::<Vec<f64>>();
        names.push(name);
        roles.push(role);
        columns.push(column);
    };

    for i in 1..=NOISE_COVARIATES {
        push_column(CovariateRole::Noise, format!("x_noise_{i:02}"), &mut rng);
    }
    for role in informative {
        for i in 1..=COVARIATES_PER_ROLE {
            push_column(role, format!("x_{}_{i}", role.id()), &mut rng);
        }
    }

    let p = columns.len();
    let dataset = Dataset::new(
        names,
        vec![CovariateKind::Continuous; p],
        columns,
        vec![None; p],
        vec![None; p],
        labels,
        c,
        (1..=c).map(|k| k.to_string()).collect(),
    )?;
    Ok(SimDataset { dataset, roles })
}
