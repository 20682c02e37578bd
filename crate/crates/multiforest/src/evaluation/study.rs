//! The VIM-ranking simulation study: generate datasets, compute importance
//! values, and score how strongly each measure separates covariate roles.

use rand::RngCore;

use crate::config::{MufConfig, Variant, VariantBinary, VariantProportions};
use crate::error::{Error, Result};
use crate::evaluation::metrics::{auc_two_groups, mean_auc_ci};
use crate::importance::{compute_node_vims, compute_permutation_vim};
use crate::rng::{stream, Purpose};
use crate::simulation::{informative_roles, simulate_dataset, CovariateRole, SimSetting};

/// An importance measure entering the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VimMethod {
    MultiClass,
    Discriminatory,
    /// Per-covariate multi-class minus discriminatory value.
    Difference,
    /// Permutation VIM from a companion binary-split forest, mirroring how
    /// conventional forests serve as the reference method.
    Permutation,
}

impl VimMethod {
    pub const ALL: [VimMethod; 4] = [
        VimMethod::MultiClass,
        VimMethod::Discriminatory,
        VimMethod::Difference,
        VimMethod::Permutation,
    ];

    pub fn id(self) -> &'static str {
        match self {
            VimMethod::MultiClass => "multi_class",
            VimMethod::Discriminatory => "discriminatory",
            VimMethod::Difference => "difference",
            VimMethod::Permutation => "permutation",
        }
    }
}

impl std::fmt::Display for VimMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for VimMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VimMethod::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::config(format!("unknown VIM method {s:?}")))
    }
}

/// What to run: the grid of settings, the repetition count, the measures to
/// compare, and the forest configuration template.
#[derive(Debug, Clone)]
pub struct StudyPlan {
    pub class_counts: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub repetitions: usize,
    pub methods: Vec<VimMethod>,
    /// Template for the forests; its seed field is ignored in favor of
    /// per-repetition derived seeds.
    pub config: MufConfig,
    pub seed: u64,
}

/// One repetition's AUC for one role comparison under one measure.
#[derive(Debug, Clone, PartialEq)]
pub struct RepAucRow {
    pub n_classes: usize,
    pub n: usize,
    /// 1-based repetition index.
    pub repetition: usize,
    pub method: VimMethod,
    pub comparison: String,
    pub auc: f64,
}

/// Aggregate over repetitions for one (setting, comparison, method) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAucResult {
    pub n_classes: usize,
    pub n: usize,
    pub method: VimMethod,
    pub comparison: String,
    pub mean_auc: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub summary: Vec<GroupAucResult>,
    pub per_repetition: Vec<RepAucRow>,
}

impl StudyResult {
    /// `n_classes,n,comparison,method,mean_auc,ci_lower,ci_upper,repetitions`.
    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("n_classes,n,comparison,method,mean_auc,ci_lower,ci_upper,repetitions\n");
        for r in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.n_classes,
                r.n,
                r.comparison,
                r.method,
                r.mean_auc,
                r.ci_lower,
                r.ci_upper,
                r.repetitions
            ));
        }
        out
    }

    /// `n_classes,n,repetition,comparison,method,auc`.
    pub fn per_repetition_csv(&self) -> String {
        let mut out = String::from("n_classes,n,repetition,comparison,method,auc\n");
        for r in &self.per_repetition {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n_classes, r.n, r.repetition, r.comparison, r.method, r.auc
            ));
        }
        out
    }
}

/// The role comparisons evaluated for a class count: every informative role
/// against noise, then every class-associated role against each
/// group-separating role present.
pub fn role_comparisons(n_classes: usize) -> Result<Vec<(CovariateRole, CovariateRole)>> {
    let informative = informative_roles(n_classes)?;
    let mut out: Vec<(CovariateRole, CovariateRole)> = informative
        .iter()
        .map(|&r| (r, CovariateRole::Noise))
        .collect();
    let group_separating = [CovariateRole::TwoGr, CovariateRole::ThrGr];
    for &class_assoc in informative.iter().filter(|r| {
        matches!(
            r,
            CovariateRole::ClAs1
                | CovariateRole::ClAs2
                | CovariateRole::ClAs3
                | CovariateRole::ClAs4
        )
    }) {
        for &group in group_separating.iter().filter(|g| informative.contains(g)) {
            out.push((class_assoc, group));
        }
    }
    Ok(out)
}

pub fn comparison_label(a: CovariateRole, b: CovariateRole) -> String {
    format!("{}_vs_{}", a.id(), b.id())
}

/// Runs the study. Each repetition generates a fresh dataset and, as
/// needed, a multi forest for the node-based measures and a companion
/// binary-split Gini forest for the permutation VIM; per-covariate values
/// are then reduced to role-pair AUCs. Everything derives from the plan
/// seed, so the result tables are reproducible.
pub fn run_simulation_study(plan: &StudyPlan) -> Result<StudyResult> {
    if plan.repetitions < 2 {
        return Err(Error::config("a study needs at least 2 repetitions"));
    }
    if plan.methods.is_empty() {
        return Err(Error::config("no VIM methods requested"));
    }
    if plan.class_counts.is_empty() || plan.sample_sizes.is_empty() {
        return Err(Error::config("empty study grid"));
    }
    let needs_multiforest = plan.methods.iter().any(|m| {
        matches!(
            m,
            VimMethod::MultiClass | VimMethod::Discriminatory | VimMethod::Difference
        )
    });
    let needs_baseline = plan.methods.contains(&VimMethod::Permutation);

    let mut per_repetition = Vec::new();
    let mut summary = Vec::new();
    let mut setting_index = 0u64;
    for &n_classes in &plan.class_counts {
        let comparisons = role_comparisons(n_classes)?;
        for &n in &plan.sample_sizes {
            // auc_cells[(comparison, method)] collects one AUC per repetition,
            // in the same order the summary is later emitted.
            let mut auc_cells: Vec<Vec<f64>> =
                vec![Vec::new(); comparisons.len() * plan.methods.len()];
            for rep in 0..plan.repetitions {
                let mut seeder = stream(plan.seed, Purpose::Study, setting_index, rep as u64);
                let dataset_seed = seeder.next_u64();
                let forest_seed = seeder.next_u64();
                let baseline_seed = seeder.next_u64();

                let sim = simulate_dataset(&SimSetting {
                    n_classes,
                    n,
                    seed: dataset_seed,
                })?;

                let node_vims = if needs_multiforest {
                    let config = MufConfig {
                        seed: forest_seed,
                        ..plan.config.clone()
                    };
                    let model = crate::forest::train(&sim.dataset, &config)?;
                    Some(compute_node_vims(&model, &sim.dataset)?)
                } else {
                    None
                };
                let permutation = if needs_baseline {
                    let config = MufConfig {
                        seed: baseline_seed,
                        multiway_probability: 0.0,
                        variant: Variant {
                            proportions: VariantProportions::Squared,
                            binary: VariantBinary::Gini,
                        },
                        ..plan.config.clone()
                    };
                    let model = crate::forest::train(&sim.dataset, &config)?;
                    Some(compute_permutation_vim(&model, &sim.dataset)?)
                } else {
                    None
                };

                let values_for = |method: VimMethod| -> Vec<f64> {
                    match method {
                        VimMethod::MultiClass => node_vims
                            .as_ref()
                            .expect("multiforest trained")
                            .0
                            .iter()
                            .map(|v| v.expect("simulated covariates are continuous"))
                            .collect(),
                        VimMethod::Discriminatory => {
                            node_vims.as_ref().expect("multiforest trained").1.clone()
                        }
                        VimMethod::Difference => {
                            let (mc, disc) = node_vims.as_ref().expect("multiforest trained");
                            mc.iter()
                                .zip(disc)
                                .map(|(m, d)| m.expect("simulated covariates are continuous") - d)
                                .collect()
                        }
                        VimMethod::Permutation => {
                            permutation.as_ref().expect("baseline trained").clone()
                        }
                    }
                };

                for (mi, &method) in plan.methods.iter().enumerate() {
                    let values = values_for(method);
                    for (ci, &(role_a, role_b)) in comparisons.iter().enumerate() {
                        let pick = |role: CovariateRole| -> Vec<f64> {
                            sim.roles
                                .iter()
                                .zip(&values)
                                .filter(|(r, _)| **r == role)
                                .map(|(_, &v)| v)
                                .collect()
                        };
                        let auc = auc_two_groups(&pick(role_a), &pick(role_b))
                            .expect("both roles populated by construction");
                        auc_cells[ci * plan.methods.len() + mi].push(auc);
                        per_repetition.push(RepAucRow {
                            n_classes,
                            n,
                            repetition: rep + 1,
                            method,
                            comparison: comparison_label(role_a, role_b),
                            auc,
                        });
                    }
                }
            }
            for (ci, &(role_a, role_b)) in comparisons.iter().enumerate() {
                for (mi, &method) in plan.methods.iter().enumerate() {
                    let aucs = &auc_cells[ci * plan.methods.len() + mi];
                    let stats = mean_auc_ci(aucs).expect("at least 2 repetitions");
                    let (lo, hi) = stats.ci.expect("at least 2 repetitions");
                    summary.push(GroupAucResult {
                        n_classes,
                        n,
                        method,
                        comparison: comparison_label(role_a, role_b),
                        mean_auc: stats.mean,
                        ci_lower: lo,
                        ci_upper: hi,
                        repetitions: stats.n,
                    });
                }
            }
            setting_index += 1;
        }
    }
    Ok(StudyResult {
        summary,
        per_repetition,
    })
}
