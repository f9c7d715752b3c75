//! Bayesian networks with decision-tree local structures.
//!
//! Each variable gets a binary decision tree whose internal nodes test
//! other variables and whose leaves hold the probability of the variable
//! being 1. The trees are grown greedily: starting from single leaves,
//! candidate splits are scored by the gain in Bayesian-Dirichlet marginal
//! likelihood (uniform prior, one pseudo-count per leaf outcome) minus a
//! complexity charge of `0.5 * log2(cluster size)` per leaf added, and the
//! best positive-gain split is applied until none remains. The variable
//! dependency graph (j -> i when X_j appears in X_i's tree) is kept
//! acyclic throughout, so sampling can proceed in a topological order.
//!
//! Leaf statistics are counted over column bitsets of the cluster, which
//! makes a candidate evaluation a handful of word operations, and each
//! (leaf, test) pair is scored exactly once when the leaf is created.

use std::collections::BinaryHeap;

use rand::Rng;
use smallvec::SmallVec;

use crate::error::{invalid_argument, invalid_state, Result};
use crate::genotype::{Genotype, Individual, Population};
use crate::rng::RandomSource;

use super::probability_floor;

/// Node of a decision tree over binary variables.
#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    /// Terminal: probability that the tree's variable is 1.
    Leaf { p: f64 },
    /// Test another variable; continue in `zero` or `one`.
    Split { test: usize, zero: usize, one: usize },
}

/// Binary decision tree stored as an arena; `root` indexes `nodes`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    root: usize,
}

impl DecisionTree {
    pub fn leaf(p: f64) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf { p }],
            root: 0,
        }
    }

    /// Compose a split: descend into `when_zero` or `when_one` depending on
    /// the tested variable.
    pub fn split(test: usize, when_zero: DecisionTree, when_one: DecisionTree) -> Self {
        let mut nodes = Vec::with_capacity(1 + when_zero.nodes.len() + when_one.nodes.len());
        let zero_offset = 1;
        let one_offset = 1 + when_zero.nodes.len();
        nodes.push(TreeNode::Split {
            test,
            zero: zero_offset + when_zero.root,
            one: one_offset + when_one.root,
        });
        nodes.extend(when_zero.nodes.into_iter().map(|n| offset_node(n, zero_offset)));
        nodes.extend(when_one.nodes.into_iter().map(|n| offset_node(n, one_offset)));
        Self { nodes, root: 0 }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Variables tested anywhere in this tree, ascending and deduplicated.
    pub fn tested_variables(&self) -> Vec<usize> {
        let mut vars: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { test, .. } => Some(*test),
                TreeNode::Leaf { .. } => None,
            })
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    /// Walk to a leaf using already-generated variable values.
    pub fn lookup(&self, values: &Genotype) -> f64 {
        let mut at = self.root;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { p } => return *p,
                TreeNode::Split { test, zero, one } => {
                    at = if values.get(*test) { *one } else { *zero };
                }
            }
        }
    }

    /// Number of leaves.
    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

fn offset_node(node: TreeNode, offset: usize) -> TreeNode {
    match node {
        TreeNode::Leaf { p } => TreeNode::Leaf { p },
        TreeNode::Split { test, zero, one } => TreeNode::Split {
            test,
            zero: zero + offset,
            one: one + offset,
        },
    }
}

/// Bayesian network with one decision tree per variable and an acyclic
/// dependency graph.
#[derive(Clone, Debug)]
pub struct BayesNetLocal {
    trees: Vec<DecisionTree>,
    order: Vec<usize>,
}

impl BayesNetLocal {
    /// Assemble a model from explicit trees, verifying that the induced
    /// dependency graph is acyclic.
    pub fn from_trees(trees: Vec<DecisionTree>) -> Result<Self> {
        let n = trees.len();
        for tree in &trees {
            for &v in &tree.tested_variables() {
                if v >= n {
                    return Err(invalid_argument(format!(
                        "tree tests variable {v} outside 0..{n}"
                    )));
                }
            }
        }
        let parents: Vec<Vec<usize>> = trees.iter().map(|t| t.tested_variables()).collect();
        let order = topological_order(&parents)
            .ok_or_else(|| invalid_state("dependency graph of the trees contains a cycle"))?;
        Ok(Self { trees, order })
    }

    pub fn variable_count(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Generation order: every tested variable precedes its dependents.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// Directed dependency edges `(parent, child)`: the parent's value is
    /// tested inside the child's tree. Sorted, deduplicated.
    pub fn parent_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for (child, tree) in self.trees.iter().enumerate() {
            for parent in tree.tested_variables() {
                edges.push((parent, child));
            }
        }
        edges.sort_unstable();
        edges
    }
}

/// Kahn's algorithm with lowest-index-first tie-breaking; `None` on cycle.
fn topological_order(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut in_degree: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (child, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(child);
        }
    }
    let mut ready: BinaryHeap<std::cmp::Reverse<usize>> = (0..n)
        .filter(|&i| in_degree[i] == 0)
        .map(std::cmp::Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(std::cmp::Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            in_degree[c] -= 1;
            if in_degree[c] == 0 {
                ready.push(std::cmp::Reverse(c));
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Learn a model from a cluster of at least two evaluated individuals.
pub fn hboa_build(cluster: &[Individual]) -> Result<BayesNetLocal> {
    build_with_gains(cluster).map(|(model, _)| model)
}

/// Sample `count` offspring: variables are generated in topological order,
/// each by walking its tree with the already-generated values and drawing
/// a Bernoulli at the reached leaf.
pub fn hboa_sample(model: &BayesNetLocal, count: usize, rng: &mut RandomSource) -> Population {
    let n = model.variable_count();
    let mut genotypes = Vec::with_capacity(count);
    for _ in 0..count {
        let mut g = Genotype::zeros(n).expect("models have at least one variable");
        for &var in model.topological_order() {
            let p = model.trees[var].lookup(&g);
            if rng.gen_bool(p) {
                g.set(var, true);
            }
        }
        genotypes.push(g);
    }
    Population::from_genotypes(genotypes)
}

/// Candidate split in the greedy search; ordered by gain, ties broken
/// toward the lowest (variable, leaf, test) triple for determinism.
#[derive(Debug, PartialEq)]
struct Candidate {
    gain: f64,
    var: u16,
    leaf_id: u32,
    test: u16,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.var.cmp(&self.var))
            .then_with(|| other.leaf_id.cmp(&self.leaf_id))
            .then_with(|| other.test.cmp(&self.test))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct BuildLeaf {
    id: u32,
    node: usize,
    mask: Vec<u64>,
    count: usize,
    ones: usize,
    path: SmallVec<[u16; 8]>,
}

struct BuildTree {
    nodes: Vec<TreeNode>,
    leaves: Vec<BuildLeaf>, // alive leaves only
}

impl BuildTree {
    fn leaf_position(&self, id: u32) -> Option<usize> {
        self.leaves.iter().position(|l| l.id == id)
    }
}

/// Greedy construction returning the model plus the accepted gains in
/// order; the gain trace backs the score-monotonicity tests.
pub(crate) fn build_with_gains(cluster: &[Individual]) -> Result<(BayesNetLocal, Vec<f64>)> {
    let s = cluster.len();
    if s < 2 {
        return Err(invalid_argument(format!(
            "model building needs a cluster of at least 2, got {s}"
        )));
    }
    let n = cluster[0].genotype.len();
    let words = s.div_ceil(64);

    // Column bitsets: columns[i] holds bit m iff member m has X_i = 1.
    let mut columns = vec![vec![0u64; words]; n];
    for (m, ind) in cluster.iter().enumerate() {
        debug_assert_eq!(ind.genotype.len(), n);
        for (i, col) in columns.iter_mut().enumerate() {
            if ind.genotype.get(i) {
                col[m / 64] |= 1u64 << (m % 64);
            }
        }
    }

    // log2(k!) table; largest argument used is s + 1.
    let mut lf = vec![0.0f64; s + 2];
    for k in 1..lf.len() {
        lf[k] = lf[k - 1] + (k as f64).log2();
    }
    let leaf_ll = |m0: usize, m1: usize| lf[m0] + lf[m1] - lf[m0 + m1 + 1];
    let penalty = 0.5 * (s as f64).log2();

    let mut full_mask = vec![u64::MAX; words];
    if s % 64 != 0 {
        full_mask[words - 1] = (1u64 << (s % 64)) - 1;
    }

    let mut parents: Vec<Vec<bool>> = vec![vec![false; n]; n];
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();
    let mut next_leaf_id = 0u32;

    let evaluate_leaf = |leaf: &BuildLeaf,
                             var: usize,
                             columns: &[Vec<u64>],
                             heap: &mut BinaryHeap<Candidate>| {
        let base = leaf_ll(leaf.count - leaf.ones, leaf.ones);
        for test in 0..n {
            if test == var || leaf.path.contains(&(test as u16)) {
                continue;
            }
            let on_test = popcount_and(&leaf.mask, &columns[test]);
            if on_test == 0 || on_test == leaf.count {
                continue; // uninformative split, gain is -penalty
            }
            let both = popcount_and3(&leaf.mask, &columns[test], &columns[var]);
            let t1v1 = both;
            let t1v0 = on_test - both;
            let t0v1 = leaf.ones - both;
            let t0v0 = leaf.count - on_test - t0v1;
            let gain = leaf_ll(t0v0, t0v1) + leaf_ll(t1v0, t1v1) - base - penalty;
            if gain > 0.0 {
                heap.push(Candidate {
                    gain,
                    var: var as u16,
                    leaf_id: leaf.id,
                    test: test as u16,
                });
            }
        }
    };

    let mut trees: Vec<BuildTree> = Vec::with_capacity(n);
    for var in 0..n {
        let leaf = BuildLeaf {
            id: next_leaf_id,
            node: 0,
            mask: full_mask.clone(),
            count: s,
            ones: popcount(&columns[var]),
            path: SmallVec::new(),
        };
        next_leaf_id += 1;
        evaluate_leaf(&leaf, var, &columns, &mut heap);
        trees.push(BuildTree {
            nodes: vec![TreeNode::Leaf { p: 0.0 }],
            leaves: vec![leaf],
        });
    }

    let mut accepted_gains = Vec::new();
    while let Some(candidate) = heap.pop() {
        let var = candidate.var as usize;
        let test = candidate.test as usize;
        let Some(pos) = trees[var].leaf_position(candidate.leaf_id) else {
            continue; // leaf was already split by a better candidate
        };
        if !edge_is_acyclic(&parents, test, var) {
            // Edges are only ever added, so a candidate that closes a
            // cycle now stays invalid forever; drop it.
            continue;
        }

        let tree = &mut trees[var];
        let leaf = tree.leaves.swap_remove(pos);
        let mask_one = and(&leaf.mask, &columns[test]);
        let count_one = popcount(&mask_one);
        let ones_one = popcount_and(&mask_one, &columns[var]);
        let mask_zero = and_not(&leaf.mask, &columns[test]);
        let count_zero = leaf.count - count_one;
        let ones_zero = leaf.ones - ones_one;

        let mut path = leaf.path.clone();
        path.push(test as u16);

        let zero_node = tree.nodes.len();
        tree.nodes.push(TreeNode::Leaf { p: 0.0 });
        let one_node = tree.nodes.len();
        tree.nodes.push(TreeNode::Leaf { p: 0.0 });
        tree.nodes[leaf.node] = TreeNode::Split {
            test,
            zero: zero_node,
            one: one_node,
        };

        let zero_leaf = BuildLeaf {
            id: next_leaf_id,
            node: zero_node,
            mask: mask_zero,
            count: count_zero,
            ones: ones_zero,
            path: path.clone(),
        };
        let one_leaf = BuildLeaf {
            id: next_leaf_id + 1,
            node: one_node,
            mask: mask_one,
            count: count_one,
            ones: ones_one,
            path,
        };
        next_leaf_id += 2;

        parents[var][test] = true;
        accepted_gains.push(candidate.gain);

        evaluate_leaf(&zero_leaf, var, &columns, &mut heap);
        evaluate_leaf(&one_leaf, var, &columns, &mut heap);
        let tree = &mut trees[var];
        tree.leaves.push(zero_leaf);
        tree.leaves.push(one_leaf);
    }

    // Finalize leaf probabilities with the Dirichlet(1,1) posterior mean,
    // clamped to the sampling floor.
    let floor = probability_floor(s);
    let final_trees: Vec<DecisionTree> = trees
        .into_iter()
        .map(|tree| {
            let mut nodes = tree.nodes;
            for leaf in tree.leaves {
                let p = (leaf.ones as f64 + 1.0) / (leaf.count as f64 + 2.0);
                nodes[leaf.node] = TreeNode::Leaf {
                    p: p.clamp(floor, 1.0 - floor),
                };
            }
            DecisionTree { nodes, root: 0 }
        })
        .collect();

    let model = BayesNetLocal::from_trees(final_trees)
        .expect("incremental acyclicity checks keep the graph a DAG");
    Ok((model, accepted_gains))
}

/// Is adding edge `from -> to` safe? A cycle appears iff `from` is already
/// reachable from `to` along existing edges.
fn edge_is_acyclic(parents: &[Vec<bool>], from: usize, to: usize) -> bool {
    if parents[to][from] {
        return true; // edge already present
    }
    if from == to {
        return false;
    }
    let n = parents.len();
    let mut visited = vec![false; n];
    let mut stack = vec![to];
    visited[to] = true;
    while let Some(v) = stack.pop() {
        for (child, ps) in parents.iter().enumerate() {
            if ps[v] && !visited[child] {
                if child == from {
                    return false;
                }
                visited[child] = true;
                stack.push(child);
            }
        }
    }
    true
}

fn popcount(a: &[u64]) -> usize {
    a.iter().map(|w| w.count_ones() as usize).sum()
}

fn popcount_and(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x & y).count_ones() as usize)
        .sum()
}

fn popcount_and3(a: &[u64], b: &[u64], c: &[u64]) -> usize {
    a.iter()
        .zip(b.iter())
        .zip(c.iter())
        .map(|((x, y), z)| (x & y & z).count_ones() as usize)
        .sum()
}

fn and(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b.iter()).map(|(x, y)| x & y).collect()
}

fn and_not(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b.iter()).map(|(x, y)| x & !y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::Genotype;

    fn cluster_from(strings: &[&str]) -> Vec<Individual> {
        strings
            .iter()
            .map(|s| Individual::new(Genotype::from_bit_str(s).unwrap()))
            .collect()
    }

    #[test]
    fn build_rejects_tiny_clusters() {
        assert!(hboa_build(&[]).is_err());
        assert!(hboa_build(&cluster_from(&["101"])).is_err());
    }

    #[test]
    fn identical_strings_stay_unsplit() {
        let cluster = cluster_from(&["10110"; 40]);
        let (model, gains) = build_with_gains(&cluster).unwrap();
        assert!(gains.is_empty());
        for tree in model.trees() {
            assert_eq!(tree.leaf_count(), 1);
        }
        // Posterior means follow the data: (40+1)/(40+2) clamped.
        let floor = probability_floor(40);
        let expected_one = (41.0f64 / 42.0).clamp(floor, 1.0 - floor);
        match &model.trees()[0].nodes()[0] {
            TreeNode::Leaf { p } => assert!((p - expected_one).abs() < 1e-12),
            _ => panic!("expected a leaf"),
        }
    }

    #[test]
    fn copied_variable_links_one_direction_only() {
        // X_2 equals X_1 on 100 samples: one tree splits on the other,
        // never both (the second edge would close a cycle).
        let mut strings = Vec::new();
        for i in 0..100 {
            strings.push(if i % 2 == 0 { "11" } else { "00" });
        }
        let cluster = cluster_from(&strings);
        let model = hboa_build(&cluster).unwrap();
        let splits: Vec<usize> = model.trees().iter().map(|t| t.leaf_count() - 1).collect();
        assert_eq!(splits.iter().sum::<usize>(), 1, "splits per tree: {splits:?}");
        assert_eq!(model.parent_edges().len(), 1);
    }

    #[test]
    fn accepted_gains_are_strictly_positive_and_score_increases() {
        let mut rng = RandomSource::new(42);
        // Pairwise-coupled positions: bit 2i+1 copies bit 2i with noise.
        let mut cluster = Vec::new();
        for _ in 0..120 {
            let mut g = Genotype::zeros(8).unwrap();
            for pair in 0..4 {
                let v = rng.gen_bool(0.5);
                g.set(2 * pair, v);
                let flip = rng.gen_bool(0.1);
                g.set(2 * pair + 1, v ^ flip);
            }
            cluster.push(Individual::new(g));
        }
        let (_, gains) = build_with_gains(&cluster).unwrap();
        assert!(!gains.is_empty());
        assert!(gains.iter().all(|&g| g > 0.0));
    }

    #[test]
    fn dependency_graph_is_acyclic_and_ordered() {
        let mut rng = RandomSource::new(9);
        let mut cluster = Vec::new();
        for _ in 0..80 {
            cluster.push(Individual::new(Genotype::random(12, &mut rng).unwrap()));
        }
        let model = hboa_build(&cluster).unwrap();
        let order = model.topological_order();
        assert_eq!(order.len(), 12);
        let position: Vec<usize> = {
            let mut pos = vec![0; 12];
            for (i, &v) in order.iter().enumerate() {
                pos[v] = i;
            }
            pos
        };
        for (parent, child) in model.parent_edges() {
            assert!(position[parent] < position[child]);
        }
    }

    #[test]
    fn from_trees_detects_cycles() {
        let t0 = DecisionTree::split(1, DecisionTree::leaf(0.1), DecisionTree::leaf(0.9));
        let t1 = DecisionTree::split(0, DecisionTree::leaf(0.2), DecisionTree::leaf(0.8));
        assert!(BayesNetLocal::from_trees(vec![t0, t1]).is_err());
    }

    #[test]
    fn from_trees_rejects_out_of_range_tests() {
        let t0 = DecisionTree::split(5, DecisionTree::leaf(0.1), DecisionTree::leaf(0.9));
        let t1 = DecisionTree::leaf(0.5);
        assert!(BayesNetLocal::from_trees(vec![t0, t1]).is_err());
    }

    #[test]
    fn sampling_respects_deterministic_leaves() {
        // X_1 uniform; X_2 copies X_1 through p=1/p=0 leaves.
        let t0 = DecisionTree::leaf(0.5);
        let t1 = DecisionTree::split(0, DecisionTree::leaf(0.0), DecisionTree::leaf(1.0));
        let model = BayesNetLocal::from_trees(vec![t0, t1]).unwrap();
        let mut rng = RandomSource::new(5);
        let pop = hboa_sample(&model, 200, &mut rng);
        for ind in pop.iter() {
            assert_eq!(ind.genotype.get(0), ind.genotype.get(1));
        }
    }

    #[test]
    fn all_leaf_model_samples_uniformly() {
        let model =
            BayesNetLocal::from_trees((0..6).map(|_| DecisionTree::leaf(0.5)).collect()).unwrap();
        let mut rng = RandomSource::new(6);
        let pop = hboa_sample(&model, 2000, &mut rng);
        let ones: usize = pop.iter().map(|i| i.genotype.count_ones()).sum();
        let fraction = ones as f64 / 12_000.0;
        assert!((0.47..=0.53).contains(&fraction), "fraction {fraction}");
    }

    #[test]
    fn sampling_is_deterministic_under_seed() {
        let cluster = cluster_from(&["1100", "0011", "1111", "0000", "1100", "0011"]);
        let model = hboa_build(&cluster).unwrap();
        let a = hboa_sample(&model, 20, &mut RandomSource::new(77));
        let b = hboa_sample(&model, 20, &mut RandomSource::new(77));
        assert_eq!(a, b);
    }

    #[test]
    fn trap_cluster_linkage_stays_within_blocks() {
        // Clusters of Pareto-optimal trap genotypes at n=10 (each 5-bit
        // block uniformly all-0 or all-1): dependencies should connect
        // positions inside a block far more often than across blocks.
        let mut within = 0usize;
        let mut across = 0usize;
        for seed in 0..20u64 {
            let mut rng = RandomSource::new(1000 + seed);
            let mut cluster = Vec::new();
            for _ in 0..60 {
                let mut g = Genotype::zeros(10).unwrap();
                for block in 0..2 {
                    if rng.gen_bool(0.5) {
                        for i in 0..5 {
                            g.set(block * 5 + i, true);
                        }
                    }
                }
                cluster.push(Individual::new(g));
            }
            let model = hboa_build(&cluster).unwrap();
            for (parent, child) in model.parent_edges() {
                if parent / 5 == child / 5 {
                    within += 1;
                } else {
                    across += 1;
                }
            }
        }
        assert!(
            within > 4 * across.max(1),
            "within-block edges {within}, across {across}"
        );
    }
}
