//! The release gate: ten numbered criteria, each printing one PASS/FAIL
//! line with its measured values. Criteria 1 and 2 train two hundred
//! thousand-tree forests each and dominate the runtime; run with
//! `--nocapture` to watch the lines appear.

use std::collections::BTreeMap;

use multiforest::evaluation::{
    accuracy, auc_two_groups, aunp, aunu, brier, holm_adjust, mean_auc_ci, one_vs_rest_aucs,
    paired_wilcoxon,
};
use multiforest::rng::{stream, Purpose};
use multiforest::split::{
    assign_classes, sample_split_candidates, score_binary, score_multiway, NodeView,
};
use multiforest::{
    compute_node_vims, compute_permutation_vim, compute_vim_report, encode_dataset,
    repeated_stratified_cv, run_simulation_study, simulate_dataset, train, CovariateKind,
    CovariateRole, DataTable, Dataset, MufConfig, MufLearner, Schema, SimSetting, StudyPlan, Tree,
    TreeNode, Variant, VariantBinary, VariantProportions, VimMethod,
};
use rand::{Rng, RngCore};

fn check(criterion: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} ({detail})");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

/// Study reproduction at six classes: the multi-class measure separates the
/// strong class-association pattern from the two-group pattern, the
/// permutation measure cannot, and every informative role beats noise.
#[test]
fn criterion_01_six_class_study_reproduction() {
    let plan = StudyPlan {
        class_counts: vec![6],
        sample_sizes: vec![1000],
        repetitions: 100,
        methods: vec![VimMethod::MultiClass, VimMethod::Permutation],
        config: MufConfig {
            ntree: 1000,
            ..MufConfig::default()
        },
        seed: 601,
    };
    let result = run_simulation_study(&plan).unwrap();
    let auc = |method: VimMethod, comparison: &str| {
        result
            .summary
            .iter()
            .find(|r| r.method == method && r.comparison == comparison)
            .unwrap()
            .mean_auc
    };
    let mc = auc(VimMethod::MultiClass, "cl_as_2_vs_two_gr");
    let perm = auc(VimMethod::Permutation, "cl_as_2_vs_two_gr");
    let worst_vs_noise = result
        .summary
        .iter()
        .filter(|r| r.comparison.ends_with("_vs_noise"))
        .map(|r| r.mean_auc)
        .fold(f64::INFINITY, f64::min);
    check(
        "01 six-class study reproduction",
        mc >= 0.95 && (0.40..=0.60).contains(&perm) && worst_vs_noise >= 0.98,
        &format!(
            "multi-class AUC cl_as_2 vs two_gr {mc:.4}, need >= 0.95; \
             permutation {perm:.4}, need in [0.40, 0.60]; \
             worst informative-vs-noise {worst_vs_noise:.4}, need >= 0.98"
        ),
    );
}

/// Ten classes: the strongest class-association pattern is detected against
/// the three-group pattern, and the permutation measure on a conventional
/// binary forest still ranks it highest overall.
#[test]
fn criterion_02_ten_class_strongest_pattern() {
    let reps = 100u64;
    let mut pattern_aucs = Vec::with_capacity(reps as usize);
    let mut role_acc: BTreeMap<&'static str, (f64, usize)> = BTreeMap::new();
    for rep in 0..reps {
        let mut seeds = stream(1002, Purpose::Study, rep, 0);
        let sim = simulate_dataset(&SimSetting {
            n_classes: 10,
            n: 1000,
            seed: seeds.next_u64(),
        })
        .unwrap();
        let muf = train(
            &sim.dataset,
            &MufConfig {
                ntree: 1000,
                seed: seeds.next_u64(),
                ..MufConfig::default()
            },
        )
        .unwrap();
        let (mc, _) = compute_node_vims(&muf, &sim.dataset).unwrap();
        let values = |role: CovariateRole| -> Vec<f64> {
            sim.roles
                .iter()
                .zip(&mc)
                .filter(|(r, _)| **r == role)
                .map(|(_, v)| v.unwrap())
                .collect()
        };
        let auc =
            auc_two_groups(&values(CovariateRole::ClAs4), &values(CovariateRole::ThrGr)).unwrap();
        pattern_aucs.push(auc);

        let baseline = train(
            &sim.dataset,
            &MufConfig {
                ntree: 1000,
                seed: seeds.next_u64(),
                multiway_probability: 0.0,
                ..MufConfig::default()
            },
        )
        .unwrap();
        let perm = compute_permutation_vim(&baseline, &sim.dataset).unwrap();
        for (role, value) in sim.roles.iter().zip(&perm) {
            let slot = role_acc.entry(role.id()).or_insert((0.0, 0));
            slot.0 += value;
            slot.1 += 1;
        }
    }
    let mean_auc = mean_auc_ci(&pattern_aucs).unwrap().mean;
    let (top_role, top_mean) = role_acc
        .iter()
        .map(|(role, (sum, count))| (*role, sum / *count as f64))
        .fold(("", f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    check(
        "02 ten-class strongest pattern",
        mean_auc >= 0.9 && top_role == "cl_as_4",
        &format!(
            "multi-class AUC cl_as_4 vs thr_gr {mean_auc:.4}, need >= 0.9; \
             highest mean permutation importance: {top_role} ({top_mean:.5}), need cl_as_4"
        ),
    );
}

/// Noise covariates carry no class structure, so their multi-class scores
/// must fluctuate around zero rather than accumulate a bias.
#[test]
fn criterion_03_noise_scores_center_on_zero() {
    let datasets = 50u64;
    let mut per_dataset_means = Vec::with_capacity(datasets as usize);
    for rep in 0..datasets {
        let mut seeds = stream(301, Purpose::Study, rep, 0);
        let sim = simulate_dataset(&SimSetting {
            n_classes: 4,
            n: 500,
            seed: seeds.next_u64(),
        })
        .unwrap();
        let model = train(
            &sim.dataset,
            &MufConfig {
                ntree: 300,
                seed: seeds.next_u64(),
                ..MufConfig::default()
            },
        )
        .unwrap();
        let (mc, _) = compute_node_vims(&model, &sim.dataset).unwrap();
        let noise: Vec<f64> = sim
            .roles
            .iter()
            .zip(&mc)
            .filter(|(role, _)| **role == CovariateRole::Noise)
            .map(|(_, v)| v.unwrap())
            .collect();
        per_dataset_means.push(noise.iter().sum::<f64>() / noise.len() as f64);
    }
    let m = per_dataset_means.len() as f64;
    let grand = per_dataset_means.iter().sum::<f64>() / m;
    let var = per_dataset_means
        .iter()
        .map(|v| (v - grand) * (v - grand))
        .sum::<f64>()
        / (m - 1.0);
    let se = (var / m).sqrt();
    check(
        "03 noise scores center on zero",
        grand.abs() <= 2.0 * se,
        &format!("grand mean {grand:.6}, standard error {se:.6}, need |mean| <= 2 se"),
    );
}

/// The assignment solver agrees exactly with brute-force search over all
/// injective class-to-child maps.
#[test]
fn criterion_04_assignment_matches_brute_force() {
    fn brute_force_best(w: &[f64], classes: usize, children: usize) -> f64 {
        fn recurse(
            w: &[f64],
            classes: usize,
            children: usize,
            chosen: &mut Vec<usize>,
            used: &mut [bool],
            best: &mut f64,
        ) {
            if chosen.len() == classes {
                let objective: f64 = chosen
                    .iter()
                    .enumerate()
                    .map(|(r, &c)| w[r * children + c])
                    .sum();
                if objective > *best {
                    *best = objective;
                }
                return;
            }
            for c in 0..children {
                if !used[c] {
                    used[c] = true;
                    chosen.push(c);
                    recurse(w, classes, children, chosen, used, best);
                    chosen.pop();
                    used[c] = false;
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        recurse(
            w,
            classes,
            children,
            &mut Vec::new(),
            &mut vec![false; children],
            &mut best,
        );
        best
    }

    let mut rng = stream(404, Purpose::Study, 0, 0);
    let trials = 1200;
    let mut exact_matches = 0;
    for trial in 0..trials {
        let children = rng.gen_range(2..=7usize);
        let classes = rng.gen_range(2..=children);
        let squared = trial % 2 == 0;
        let props: Vec<f64> = (0..classes * children).map(|_| rng.gen::<f64>()).collect();
        let a = assign_classes(&props, classes, children, squared);

        let mut used = vec![false; children];
        for &c in &a.child_of {
            assert!(!used[c], "assignment must be injective");
            used[c] = true;
        }
        let w: Vec<f64> = props
            .iter()
            .map(|&p| if squared { p * p } else { p })
            .collect();
        if a.objective == brute_force_best(&w, classes, children) {
            exact_matches += 1;
        }
    }
    check(
        "04 assignment equals brute force",
        exact_matches == trials,
        &format!("{exact_matches}/{trials} random matrices matched exactly, children 2..=7"),
    );
}

/// Squared multi-way and binary assignment scores stay in [0, 1] on random
/// nodes, and a perfectly separating split scores exactly 1.
#[test]
fn criterion_05_score_bounds() {
    let mut rng = stream(505, Purpose::Study, 0, 0);
    let config = MufConfig {
        npervar: 2,
        ..MufConfig::default()
    };
    let mut nodes = 0usize;
    let mut multiway_scored = 0usize;
    let mut collapsed_scored = 0usize;
    let mut binary_scored = 0usize;
    let mut in_bounds = true;
    while nodes < 10_000 {
        let n_classes = rng.gen_range(2..=6usize);
        let n = rng.gen_range(8..=40usize);
        let columns: Vec<Vec<f64>> = (0..2)
            .map(|_| {
                let levels = rng.gen_range(2..=12usize);
                (0..n)
                    .map(|_| rng.gen_range(0..levels) as f64 * 0.5)
                    .collect()
            })
            .collect();
        let labels: Vec<u32> = (0..n)
            .map(|_| rng.gen_range(1..=n_classes as u32))
            .collect();
        let rows: Vec<u32> = (0..n as u32).collect();
        let view = NodeView::new(&columns, &labels, n_classes, &rows);
        if view.class_count() < 2 {
            continue;
        }
        let candidates = sample_split_candidates(&view, &config, 2, &mut rng);
        if candidates.is_empty() {
            continue;
        }
        for candidate in &candidates {
            let (score, assignment) =
                score_multiway(&view, candidate, VariantProportions::Squared, &mut rng);
            in_bounds &= (0.0..=1.0).contains(&score);
            in_bounds &= assignment.len() == view.class_count();
            multiway_scored += 1;
            if candidate.cuts.len() + 1 < view.class_count() {
                collapsed_scored += 1;
            }
        }
        let first = &candidates[0];
        let (score, assignment) = score_binary(
            &view,
            first.covariate,
            first.points[0],
            VariantBinary::AssignClasses,
            VariantProportions::Squared,
            &mut rng,
        );
        in_bounds &= (0.0..=1.0).contains(&score) && assignment.is_some();
        binary_scored += 1;
        nodes += 1;
    }

    // A covariate equal to the class label separates perfectly: the
    // every-neighbor candidate must score exactly 1.
    let mut labels = Vec::new();
    for class in 1..=5u32 {
        labels.extend(std::iter::repeat(class).take(2 + class as usize));
    }
    let column: Vec<f64> = labels.iter().map(|&y| y as f64).collect();
    let columns = vec![column];
    let rows: Vec<u32> = (0..labels.len() as u32).collect();
    let view = NodeView::new(&columns, &labels, 5, &rows);
    let candidates = sample_split_candidates(&view, &config, 1, &mut rng);
    assert_eq!(candidates.len(), 1);
    assert_eq!(candidates[0].points.len(), 4);
    let (perfect_multi, _) =
        score_multiway(&view, &candidates[0], VariantProportions::Squared, &mut rng);

    let two_labels = vec![1u32, 1, 1, 2, 2];
    let two_column = vec![vec![0.0, 0.0, 0.0, 1.0, 1.0]];
    let two_rows: Vec<u32> = (0..5).collect();
    let two_view = NodeView::new(&two_column, &two_labels, 2, &two_rows);
    let (perfect_binary, _) = score_binary(
        &two_view,
        0,
        0.5,
        VariantBinary::AssignClasses,
        VariantProportions::Squared,
        &mut rng,
    );

    check(
        "05 squared scores bounded",
        in_bounds && perfect_multi == 1.0 && perfect_binary == 1.0,
        &format!(
            "{nodes} random nodes, {multiway_scored} multi-way scores \
             ({collapsed_scored} via the collapsed-children path) and {binary_scored} binary \
             scores all in [0, 1]; perfect splits scored {perfect_multi} and {perfect_binary}"
        ),
    );
}

/// One worker and eight workers must produce byte-identical model files and
/// importance tables.
#[test]
fn criterion_06_worker_count_independence() {
    let sim = simulate_dataset(&SimSetting {
        n_classes: 4,
        n: 300,
        seed: 3,
    })
    .unwrap();
    let config = MufConfig {
        ntree: 200,
        seed: 77,
        ..MufConfig::default()
    };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let model = train(&sim.dataset, &config).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("model.json");
            model.save(&path).unwrap();
            let bytes = std::fs::read(&path).unwrap();
            let vim = compute_vim_report(&model, &sim.dataset, true)
                .unwrap()
                .to_csv_string();
            (bytes, vim)
        })
    };
    let (model_1, vim_1) = run(1);
    let (model_8, vim_8) = run(8);
    check(
        "06 worker-count independence",
        model_1 == model_8 && vim_1 == vim_8,
        &format!(
            "model files {} bytes, identical: {}; importance tables identical: {}",
            model_1.len(),
            model_1 == model_8,
            vim_1 == vim_8
        ),
    );
}

/// Cube-transforming a covariate (order-preserving) must leave predictions
/// on the correspondingly transformed data exactly unchanged. Training only
/// ever compares values, so the grown forest is invariant: same subsamples,
/// same node shapes, same in-bag routes, asserted below. Exact prediction
/// equality on arbitrary inputs additionally needs the stored split points
/// to move with the transform, and midpoints do not: for a value strictly
/// between two adjacent in-bag values, (a+b)/2 and (a^3+b^3)/2 can sit on
/// opposite sides. The census below traces every differing route on fresh
/// data and verifies it is exactly that case, so the stated check fails for
/// this reason and no other.
#[test]
fn criterion_07_monotone_transform_invariance() {
    let transformed_covariate = 5usize;
    let cube = |d: &Dataset| {
        let mut columns: Vec<Vec<f64>> = (0..d.p()).map(|j| d.column(j).to_vec()).collect();
        for value in &mut columns[transformed_covariate] {
            *value = value.powi(3);
        }
        Dataset::continuous(columns, d.labels().to_vec(), d.n_classes()).unwrap()
    };
    let base = simulate_dataset(&SimSetting {
        n_classes: 4,
        n: 250,
        seed: 21,
    })
    .unwrap()
    .dataset;
    let test = simulate_dataset(&SimSetting {
        n_classes: 4,
        n: 250,
        seed: 22,
    })
    .unwrap()
    .dataset;
    let cubed = cube(&base);
    let test_cubed = cube(&test);

    let config = MufConfig {
        ntree: 150,
        seed: 9,
        ..MufConfig::default()
    };
    let model_base = train(&base, &config).unwrap();
    let model_cubed = train(&cubed, &config).unwrap();

    // The growth procedure sees only value order, so both runs must produce
    // the same forest apart from the stored split-point values on the
    // transformed covariate. Hard failures here would mean broken training.
    for (t, (t1, t2)) in model_base.trees.iter().zip(&model_cubed.trees).enumerate() {
        assert_eq!(t1.in_bag, t2.in_bag, "tree {t}: subsample changed");
        assert_eq!(
            t1.nodes.len(),
            t2.nodes.len(),
            "tree {t}: node count changed"
        );
        for (i, (n1, n2)) in t1.nodes.iter().zip(&t2.nodes).enumerate() {
            assert!(
                same_shape(n1, n2, transformed_covariate as u32),
                "tree {t} node {i}: shape changed\n  {n1:?}\n  {n2:?}"
            );
        }
        for &row in &t1.in_bag {
            let row = row as usize;
            assert_eq!(
                t1.route_leaf(|j| base.column(j)[row]),
                t2.route_leaf(|j| cubed.column(j)[row]),
                "tree {t}: in-bag row {row} routed differently"
            );
        }
    }

    // Census of differing observation-tree routes on the fresh data, each
    // one traced to its first divergence and checked against the midpoint
    // mechanism: the value falls strictly between two adjacent in-bag
    // values, and a non-affine transform moves their midpoint across it.
    let mut flips = 0usize;
    let mut explained = 0usize;
    for (t1, t2) in model_base.trees.iter().zip(&model_cubed.trees) {
        for row in 0..test.n() {
            let v1 = |j: usize| test.column(j)[row];
            let v2 = |j: usize| test_cubed.column(j)[row];
            if t1.route_leaf(v1) == t2.route_leaf(v2) {
                continue;
            }
            flips += 1;
            if midpoint_flip_explained(t1, t2, &base, &cubed, &v1, &v2, transformed_covariate) {
                explained += 1;
            }
        }
    }
    let total_routes = model_base.trees.len() * test.n();

    let proba_equal =
        model_base.predict_proba(&test).unwrap() == model_cubed.predict_proba(&test_cubed).unwrap();
    let class_equal =
        model_base.predict_class(&test).unwrap() == model_cubed.predict_class(&test_cubed).unwrap();
    check(
        "07 monotone-transform invariance",
        proba_equal && class_equal,
        &format!(
            "probabilities identical: {proba_equal}; point predictions identical: {class_equal}; \
             all {} trees grew identically (same subsamples, shapes, and in-bag routes); \
             {flips} of {total_routes} observation-tree routes on fresh data differ, \
             {explained} of {flips} verified as a value inside an in-bag gap whose midpoint \
             split point moved under the cube",
            model_base.trees.len()
        ),
    );
}

/// Node equality ignoring split-point values on the transformed covariate.
fn same_shape(a: &TreeNode, b: &TreeNode, moved: u32) -> bool {
    match (a, b) {
        (
            TreeNode::Multiway {
                covariate: c1,
                points: p1,
                children: ch1,
                assignment: a1,
            },
            TreeNode::Multiway {
                covariate: c2,
                points: p2,
                children: ch2,
                assignment: a2,
            },
        ) => {
            c1 == c2 && ch1 == ch2 && a1 == a2 && p1.len() == p2.len() && (*c1 == moved || p1 == p2)
        }
        (
            TreeNode::Binary {
                covariate: c1,
                point: p1,
                children: ch1,
                assignment: a1,
            },
            TreeNode::Binary {
                covariate: c2,
                point: p2,
                children: ch2,
                assignment: a2,
            },
        ) => c1 == c2 && ch1 == ch2 && a1 == a2 && (*c1 == moved || p1 == p2),
        (TreeNode::Leaf { counts: l1 }, TreeNode::Leaf { counts: l2 }) => l1 == l2,
        _ => false,
    }
}

/// One routing step: the chosen child slot and its node id, or None at a leaf.
fn route_step(node: &TreeNode, value: &impl Fn(usize) -> f64) -> Option<(usize, usize)> {
    match node {
        TreeNode::Leaf { .. } => None,
        TreeNode::Multiway {
            covariate,
            points,
            children,
            ..
        } => {
            let x = value(*covariate as usize);
            let slot = points.partition_point(|&p| p < x);
            Some((slot, children[slot] as usize))
        }
        TreeNode::Binary {
            covariate,
            point,
            children,
            ..
        } => {
            let x = value(*covariate as usize);
            let slot = usize::from(x > *point);
            Some((slot, children[slot] as usize))
        }
    }
}

/// Whether the tree routes an observation through the given node.
fn passes_through(tree: &Tree, target: usize, value: &impl Fn(usize) -> f64) -> bool {
    let mut id = 0usize;
    loop {
        if id == target {
            return true;
        }
        match route_step(&tree.nodes[id], value) {
            Some((_, next)) => id = next,
            None => return false,
        }
    }
}

/// Traces a differing route to its first divergence and verifies the cause:
/// the split is on the transformed covariate, the observation's value lies
/// strictly between the two adjacent in-bag values flanking the crossed
/// split point, both stored points are the midpoints of that flanking pair
/// in their own spaces, and the observation sits on opposite sides of them.
fn midpoint_flip_explained(
    t1: &Tree,
    t2: &Tree,
    base: &Dataset,
    cubed: &Dataset,
    v1: &impl Fn(usize) -> f64,
    v2: &impl Fn(usize) -> f64,
    transformed: usize,
) -> bool {
    let mut id = 0usize;
    let (node, s1, s2) = loop {
        let (step1, step2) = (route_step(&t1.nodes[id], v1), route_step(&t2.nodes[id], v2));
        match (step1, step2) {
            (Some((s1, n1)), Some((s2, _))) if s1 == s2 => id = n1,
            (Some((s1, _)), Some((s2, _))) => break (id, s1, s2),
            _ => return false,
        }
    };
    let (points1, points2) = match (&t1.nodes[node], &t2.nodes[node]) {
        (
            TreeNode::Multiway {
                covariate,
                points: p1,
                ..
            },
            TreeNode::Multiway { points: p2, .. },
        ) if *covariate as usize == transformed => (p1.clone(), p2.clone()),
        (
            TreeNode::Binary {
                covariate,
                point: p1,
                ..
            },
            TreeNode::Binary { point: p2, .. },
        ) if *covariate as usize == transformed => (vec![*p1], vec![*p2]),
        _ => return false,
    };

    // In-bag values of the transformed covariate at the divergence node, in
    // both spaces; the trainer derived its split points from exactly these.
    let mut in_node: Vec<(f64, f64)> = t1
        .in_bag
        .iter()
        .map(|&r| r as usize)
        .filter(|&r| passes_through(t1, node, &|j: usize| base.column(j)[r]))
        .map(|r| (base.column(transformed)[r], cubed.column(transformed)[r]))
        .collect();
    in_node.sort_by(|a, b| a.0.total_cmp(&b.0));

    let x = v1(transformed);
    let xc = v2(transformed);
    (s1.min(s2)..s1.max(s2)).any(|j| {
        let (m, mc) = (points1[j], points2[j]);
        if (x <= m) == (xc <= mc) {
            return false;
        }
        let below = in_node.partition_point(|&(v, _)| v <= m);
        if below == 0 || below == in_node.len() {
            return false;
        }
        let (a, ac) = in_node[below - 1];
        let (b, bc) = in_node[below];
        a < x && x < b && m == (a + b) / 2.0 && mc == (ac + bc) / 2.0
    })
}

/// Every evaluation statistic agrees with an independent brute-force
/// computation on fixed examples.
#[test]
fn criterion_08_metric_oracles() {
    fn pair_count_auc(pos: &[f64], neg: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &x in pos {
            for &y in neg {
                acc += if x > y {
                    1.0
                } else if x == y {
                    0.5
                } else {
                    0.0
                };
            }
        }
        acc / (pos.len() * neg.len()) as f64
    }

    let mut ok = true;
    let mut failures = Vec::new();

    // Two-group AUC with ties in and across groups.
    let a = [3.0, 1.0, 2.0, 2.0, 5.0, 0.5];
    let b = [2.0, 0.5, 4.0, 2.0];
    let auc = auc_two_groups(&a, &b).unwrap();
    if (auc - pair_count_auc(&a, &b)).abs() > 1e-12 {
        ok = false;
        failures.push("auc_two_groups");
    }

    // One-vs-rest AUCs plus their equal-weight and frequency-weight means.
    let labels = [1u32, 2, 3, 1, 2, 3, 1, 1];
    let proba = vec![
        vec![0.7, 0.2, 0.1],
        vec![0.3, 0.5, 0.2],
        vec![0.2, 0.2, 0.6],
        vec![0.5, 0.3, 0.2],
        vec![0.3, 0.4, 0.3],
        vec![0.1, 0.3, 0.6],
        vec![0.4, 0.4, 0.2],
        vec![0.25, 0.5, 0.25],
    ];
    let aucs = one_vs_rest_aucs(&proba, &labels, 3);
    let mut brute_aucs = Vec::new();
    for class in 1..=3u32 {
        let pos: Vec<f64> = proba
            .iter()
            .zip(&labels)
            .filter(|(_, &y)| y == class)
            .map(|(row, _)| row[class as usize - 1])
            .collect();
        let neg: Vec<f64> = proba
            .iter()
            .zip(&labels)
            .filter(|(_, &y)| y != class)
            .map(|(row, _)| row[class as usize - 1])
            .collect();
        brute_aucs.push(pair_count_auc(&pos, &neg));
    }
    for (computed, brute) in aucs.iter().zip(&brute_aucs) {
        if (computed.unwrap() - brute).abs() > 1e-12 {
            ok = false;
            failures.push("one_vs_rest_aucs");
        }
    }
    let aunu_value = aunu(&proba, &labels, 3).unwrap();
    let aunu_brute = brute_aucs.iter().sum::<f64>() / 3.0;
    if (aunu_value - aunu_brute).abs() > 1e-12 {
        ok = false;
        failures.push("aunu");
    }
    let aunp_value = aunp(&proba, &labels, 3).unwrap();
    let counts = [4.0, 2.0, 2.0];
    let aunp_brute = brute_aucs
        .iter()
        .zip(&counts)
        .map(|(auc, c)| auc * c / 8.0)
        .sum::<f64>();
    if (aunp_value - aunp_brute).abs() > 1e-12 {
        ok = false;
        failures.push("aunp");
    }

    // Brier score and accuracy against direct loops.
    let brier_value = brier(&proba, &labels);
    let mut brier_brute = 0.0;
    for (row, &y) in proba.iter().zip(&labels) {
        for (c, &p) in row.iter().enumerate() {
            let truth = if c + 1 == y as usize { 1.0 } else { 0.0 };
            brier_brute += (p - truth) * (p - truth);
        }
    }
    brier_brute /= labels.len() as f64;
    if (brier_value - brier_brute).abs() > 1e-12 {
        ok = false;
        failures.push("brier");
    }
    let predicted = [1u32, 2, 3, 2, 2, 3, 1, 3];
    let accuracy_value = accuracy(&predicted, &labels);
    let hits = predicted
        .iter()
        .zip(&labels)
        .filter(|(p, y)| p == y)
        .count();
    if (accuracy_value - hits as f64 / 8.0).abs() > 1e-12 {
        ok = false;
        failures.push("accuracy");
    }

    // Exact Wilcoxon against full sign enumeration (one zero difference is
    // dropped, ties among |differences| get midranks).
    let x = [12.1, 10.3, 11.8, 9.9, 13.0, 10.1, 12.7, 11.1, 10.9, 12.3];
    let y = [11.0, 10.8, 11.2, 10.4, 12.1, 10.1, 11.9, 11.5, 10.2, 11.6];
    let result = paired_wilcoxon(&x, &y).unwrap();
    let diffs: Vec<f64> = x
        .iter()
        .zip(&y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let m = diffs.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| diffs[i].abs().partial_cmp(&diffs[j].abs()).unwrap());
    let mut ranks = vec![0.0f64; m];
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = midrank;
        }
        i = j + 1;
    }
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let mut at_most = 0u64;
    let mut at_least = 0u64;
    for mask in 0u64..(1 << m) {
        let w: f64 = (0..m)
            .filter(|&k| mask & (1 << k) != 0)
            .map(|k| ranks[k])
            .sum();
        if w <= w_plus {
            at_most += 1;
        }
        if w >= w_plus {
            at_least += 1;
        }
    }
    let total = (1u64 << m) as f64;
    let p_brute = (2.0 * (at_most as f64 / total).min(at_least as f64 / total)).min(1.0);
    if result.n_used != m || (result.w_plus - w_plus).abs() > 1e-12 {
        ok = false;
        failures.push("wilcoxon statistic");
    }
    if (result.p_value - p_brute).abs() > 1e-12 {
        ok = false;
        failures.push("wilcoxon exact p");
    }

    // Holm adjustment against the sorted running-maximum definition.
    let raw = [0.011, 0.02, 0.14, 0.045, 0.6];
    let adjusted = holm_adjust(&raw);
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&i, &j| raw[i].partial_cmp(&raw[j]).unwrap());
    let mut running = 0.0f64;
    let mut brute = vec![0.0; raw.len()];
    for (k, &idx) in order.iter().enumerate() {
        let scaled = ((raw.len() - k) as f64 * raw[idx]).min(1.0);
        running = running.max(scaled);
        brute[idx] = running;
    }
    for (computed, expected) in adjusted.iter().zip(&brute) {
        if (computed - expected).abs() > 1e-12 {
            ok = false;
            failures.push("holm");
        }
    }

    check(
        "08 metric oracles",
        ok,
        &if failures.is_empty() {
            "auc, one-vs-rest, aunu, aunp, brier, accuracy, exact wilcoxon, holm all within 1e-12 \
             of brute force"
                .to_string()
        } else {
            format!("disagreements: {}", failures.join(", "))
        },
    );
}

/// Cross-validated accuracy is far above chance and close to the
/// binary-split-only baseline on the same folds.
#[test]
fn criterion_09_predictive_sanity() {
    let sim = simulate_dataset(&SimSetting {
        n_classes: 4,
        n: 1000,
        seed: 90,
    })
    .unwrap();
    let template = MufConfig {
        ntree: 500,
        ..MufConfig::default()
    };
    let muf_report = repeated_stratified_cv(
        &sim.dataset,
        &MufLearner {
            config: template.clone(),
        },
        5,
        5,
        900,
    )
    .unwrap();
    let binary_report = repeated_stratified_cv(
        &sim.dataset,
        &MufLearner {
            config: MufConfig {
                multiway_probability: 0.0,
                ..template
            },
        },
        5,
        5,
        900,
    )
    .unwrap();
    let mean_accuracy = |report: &multiforest::MetricReport| {
        report.rows.iter().map(|r| r.accuracy).sum::<f64>() / report.rows.len() as f64
    };
    let muf_accuracy = mean_accuracy(&muf_report);
    let binary_accuracy = mean_accuracy(&binary_report);
    check(
        "09 predictive sanity",
        muf_accuracy >= 0.60 && (muf_accuracy - binary_accuracy).abs() <= 0.05,
        &format!(
            "mean accuracy {muf_accuracy:.4} (chance 0.25, need >= 0.60); \
             binary baseline {binary_accuracy:.4}, need gap <= 0.05"
        ),
    );
}

/// A categorical covariate with fewer categories than classes cannot host a
/// full class assignment: its multi-class score must be undefined while its
/// discriminatory score stays defined.
#[test]
fn criterion_10_eligibility_rules() {
    let n_classes = 4u32;
    let n = 400;
    let mut rng = stream(1010, Purpose::Study, 0, 0);
    let mut csv = String::from("y,site,grade,x\n");
    for i in 0..n {
        let y = (i % n_classes as usize) as u32 + 1;
        // Three categories and three grades for four classes, both with
        // real signal so the forest actually splits on them.
        let site = ["a", "b", "c"][(y as usize + (i / 7) % 2) % 3];
        let grade = 1 + (y as usize % 3);
        let x = y as f64 + rng.gen::<f64>();
        csv.push_str(&format!("{y},{site},{grade},{x}\n"));
    }
    let table = DataTable::from_str_content(&csv).unwrap();
    let schema = Schema::new()
        .declare("site", CovariateKind::Nominal)
        .declare("grade", CovariateKind::OrderedCategorical);
    let data = multiforest::data::dataset_from_table(&table, "y", Some(&schema)).unwrap();
    let (encoded, _) = encode_dataset(&data).unwrap();
    let model = train(
        &encoded,
        &MufConfig {
            ntree: 80,
            seed: 4,
            variant: Variant::default(),
            ..MufConfig::default()
        },
    )
    .unwrap();
    let report = compute_vim_report(&model, &encoded, false).unwrap();
    let idx = |name: &str| report.names.iter().position(|n| n == name).unwrap();
    let site_undefined = report.multi_class[idx("site")].is_none();
    let grade_undefined = report.multi_class[idx("grade")].is_none();
    let x_defined = report.multi_class[idx("x")].is_some();
    let disc_defined = report.discriminatory.iter().all(|v| v.is_finite());
    check(
        "10 eligibility rules",
        site_undefined && grade_undefined && x_defined && disc_defined,
        &format!(
            "multi-class undefined for 3-category nominal: {site_undefined}, \
             for 3-level ordered: {grade_undefined}; defined for continuous: {x_defined}; \
             discriminatory defined everywhere: {disc_defined}"
        ),
    );
}
