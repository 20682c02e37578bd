//! Recursive tree construction.

use rand_chacha::ChaCha8Rng;

use crate::config::MufConfig;
use crate::rng::{stream, Purpose};
use crate::split::{select_best_split, NodeView, SplitDecision};

use super::{Tree, TreeNode};

/// Borrowed training state shared by all trees of one forest.
pub(super) struct Grower<'a> {
    pub columns: &'a [Vec<f64>],
    pub labels: &'a [u32],
    pub n_classes: usize,
    pub config: &'a MufConfig,
    pub mtry: usize,
    pub n: usize,
}

impl Grower<'_> {
    /// Grows tree `tree_index` from its own RNG stream: the in-bag draw
    /// first, then node decisions in depth-first preorder.
    pub fn grow_tree(&self, tree_index: u64) -> Tree {
        let mut rng = stream(self.config.seed, Purpose::TreeGrowth, tree_index, 0);
        let n_bag = self.config.in_bag_size(self.n);
        let mut in_bag: Vec<u32> = rand::seq::index::sample(&mut rng, self.n, n_bag)
            .into_iter()
            .map(|i| i as u32)
            .collect();
        in_bag.sort_unstable();

        let mut nodes = Vec::new();
        self.grow_node(in_bag.clone(), &mut nodes, &mut rng);

        let mut bagged = vec![false; self.n];
        for &i in &in_bag {
            bagged[i as usize] = true;
        }
        let oob = (0..self.n as u32)
            .filter(|&i| !bagged[i as usize])
            .collect();
        Tree { nodes, in_bag, oob }
    }

    fn grow_node(&self, rows: Vec<u32>, nodes: &mut Vec<TreeNode>, rng: &mut ChaCha8Rng) -> u32 {
        let id = nodes.len() as u32;
        // Placeholder so children claim consecutive ids in preorder.
        nodes.push(TreeNode::Leaf { counts: Vec::new() });

        let view = NodeView::new(self.columns, self.labels, self.n_classes, &rows);
        let decision = if view.is_pure() || view.n() <= self.config.nmin {
            None
        } else {
            select_best_split(&view, self.config, self.mtry, rng)
        };

        let node = match decision {
            None => TreeNode::Leaf {
                counts: view.class_counts().to_vec(),
            },
            Some(SplitDecision {
                covariate,
                multiway,
                points,
                assignment,
                ..
            }) => {
                let k = points.len() + 1;
                let mut parts: Vec<Vec<u32>> = vec![Vec::new(); k];
                for &i in &rows {
                    let v = self.columns[covariate][i as usize];
                    let slot = points.partition_point(|&p| p < v);
                    parts[slot].push(i);
                }
                debug_assert!(
                    parts.iter().all(|p| !p.is_empty()),
                    "split points must lie between observed values"
                );
                drop(rows);
                let children: Vec<u32> = parts
                    .into_iter()
                    .map(|part| self.grow_node(part, nodes, rng))
                    .collect();
                if multiway {
                    TreeNode::Multiway {
                        covariate: covariate as u32,
                        points,
                        children,
                        assignment: assignment.expect("multi-way splits carry an assignment"),
                    }
                } else {
                    TreeNode::Binary {
                        covariate: covariate as u32,
                        point: points[0],
                        children: [children[0], children[1]],
                        assignment,
                    }
                }
            }
        };
        nodes[id as usize] = node;
        id
    }
}
