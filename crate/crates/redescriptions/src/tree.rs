//! Depth-limited classification trees over descriptor-membership features.
//!
//! Induction is greedy on weighted split entropy with deterministic ties
//! (lowest descriptor index), so the only nondeterminism is the seeded
//! randomized root move and the leaf-label randomization. Reading a labeled
//! tree off turns each class into the union of its root-to-leaf path
//! conjunctions, with negated literals on no-branches.

use std::collections::BTreeMap;

use rand::Rng;

use crate::adtree::{split_entropy, ClassCounter, ClassHistogram};
use crate::bitset::BitSet;
use crate::canon::canonicalize;
use crate::error::Result;
use crate::expr::{Literal, SetExpression};
use crate::store::{DescriptorFamily, FamilyId};

/// Knobs for growing one tree.
#[derive(Clone, Debug)]
pub struct InductionPolicy {
    pub depth_limit: usize,
    pub root_random_prob: f64,
    pub min_leaf_size: usize,
    /// Descriptor indices excluded because they already appear in the
    /// opposing tree's expressions.
    pub forbid: Vec<usize>,
}

impl InductionPolicy {
    pub fn new(depth_limit: usize) -> Self {
        InductionPolicy {
            depth_limit,
            root_random_prob: 0.0,
            min_leaf_size: 1,
            forbid: Vec::new(),
        }
    }
}

/// Features plus the target labeling the tree tries to match. Class labels
/// index into `class_renders`, whose strings are the canonical renderings
/// used for deterministic tie-breaks.
pub struct LabeledDataset<'a> {
    pub features: &'a DescriptorFamily,
    pub labels: &'a [usize],
    pub num_classes: usize,
    pub class_renders: &'a [String],
}

impl LabeledDataset<'_> {
    /// Active features minus the forbidden ones, ascending.
    pub fn admissible(&self, policy: &InductionPolicy) -> Vec<usize> {
        self.features
            .active_indices()
            .filter(|i| !policy.forbid.contains(i))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum TreeNode {
    Decision {
        feature: usize,
        yes: Box<TreeNode>,
        no: Box<TreeNode>,
    },
    Leaf {
        label: Option<usize>,
        reaching: BitSet,
    },
}

/// A grown tree plus the flags the alternation loop reacts to.
#[derive(Clone, Debug)]
pub struct InducedTree {
    pub root: TreeNode,
    /// The root could not split: no admissible feature survived the
    /// min-leaf filter (or none was admissible at all).
    pub degenerate: bool,
    /// No admissible feature existed in the first place.
    pub no_admissible_features: bool,
    /// Some leaf had no reaching objects and got a random label.
    pub empty_leaf: bool,
    /// All leaves drew the same majority label and one was reassigned.
    pub relabeled_leaf: bool,
}

/// Greedy top-down induction. Splitting stops on purity, the depth limit,
/// an entropy plateau, or when every candidate would starve a child below
/// `min_leaf_size`. With probability `root_random_prob` the root split is
/// instead drawn uniformly from the admissible candidates.
pub fn induce_tree(
    data: &LabeledDataset,
    counter: &dyn ClassCounter,
    policy: &InductionPolicy,
    rng: &mut impl Rng,
) -> Result<InducedTree> {
    let admissible = data.admissible(policy);
    let universe_len = data.labels.len();
    let all = BitSet::full(universe_len);
    let mut degenerate = false;

    let root = grow(
        data,
        counter,
        policy,
        &admissible,
        rng,
        &mut Vec::new(),
        all,
        0,
        &mut degenerate,
    )?;

    Ok(InducedTree {
        degenerate: degenerate || matches!(root, TreeNode::Leaf { .. }),
        no_admissible_features: admissible.is_empty(),
        root,
        empty_leaf: false,
        relabeled_leaf: false,
    })
}

#[allow(clippy::too_many_arguments)]
fn grow(
    data: &LabeledDataset,
    counter: &dyn ClassCounter,
    policy: &InductionPolicy,
    admissible: &[usize],
    rng: &mut impl Rng,
    path: &mut Vec<Literal>,
    reaching: BitSet,
    depth: usize,
    degenerate: &mut bool,
) -> Result<TreeNode> {
    let hist = counter.query_counts(path)?;
    debug_assert_eq!(hist.total, reaching.count());

    if hist.is_pure() || depth >= policy.depth_limit {
        return Ok(TreeNode::Leaf {
            label: None,
            reaching,
        });
    }

    // Candidates that keep both children at or above the leaf floor.
    let mut candidates: Vec<usize> = Vec::new();
    for &f in admissible {
        if path.iter().any(|l| l.index == f) {
            continue;
        }
        let n_yes = reaching.intersect_count(&data.features.descriptor(f).members);
        let n_no = hist.total - n_yes;
        if n_yes >= policy.min_leaf_size && n_no >= policy.min_leaf_size {
            candidates.push(f);
        }
    }
    if candidates.is_empty() {
        if depth == 0 {
            *degenerate = true;
        }
        return Ok(TreeNode::Leaf {
            label: None,
            reaching,
        });
    }

    let feature = if depth == 0 && policy.root_random_prob > 0.0
        && rng.gen::<f64>() < policy.root_random_prob
    {
        candidates[rng.gen_range(0..candidates.len())]
    } else {
        let mut best: Option<(f64, usize)> = None;
        for &f in &candidates {
            let e = split_entropy(counter, path, f)?;
            if best.map(|(be, _)| e < be - 1e-12).unwrap_or(true) {
                best = Some((e, f));
            }
        }
        let (best_entropy, best_feature) = best.expect("candidates non-empty");
        if best_entropy >= hist.entropy_bits() - 1e-12 {
            // No split reduces entropy.
            if depth == 0 {
                *degenerate = true;
            }
            return Ok(TreeNode::Leaf {
                label: None,
                reaching,
            });
        }
        best_feature
    };

    let members = &data.features.descriptor(feature).members;
    let yes_reaching = reaching.and(members);
    let no_reaching = reaching.and_not(members);

    path.push(Literal::positive(feature));
    let yes = grow(
        data, counter, policy, admissible, rng, path, yes_reaching, depth + 1, degenerate,
    )?;
    path.pop();
    path.push(Literal::negative(feature));
    let no = grow(
        data, counter, policy, admissible, rng, path, no_reaching, depth + 1, degenerate,
    )?;
    path.pop();

    Ok(TreeNode::Decision {
        feature,
        yes: Box::new(yes),
        no: Box::new(no),
    })
}

fn leaves_mut<'t>(node: &'t mut TreeNode, out: &mut Vec<&'t mut TreeNode>) {
    match node {
        TreeNode::Leaf { .. } => out.push(node),
        TreeNode::Decision { yes, no, .. } => {
            leaves_mut(yes, out);
            leaves_mut(no, out);
        }
    }
}

fn leaf_views(node: &TreeNode, path: &mut Vec<Literal>, out: &mut Vec<(Vec<Literal>, BitSet, Option<usize>)>) {
    match node {
        TreeNode::Leaf { label, reaching } => out.push((path.clone(), reaching.clone(), *label)),
        TreeNode::Decision { feature, yes, no } => {
            path.push(Literal::positive(*feature));
            leaf_views(yes, path, out);
            path.pop();
            path.push(Literal::negative(*feature));
            leaf_views(no, path, out);
            path.pop();
        }
    }
}

/// All (path, reaching set, label) triples in yes-before-no order.
pub fn leaf_paths(tree: &InducedTree) -> Vec<(Vec<Literal>, BitSet, Option<usize>)> {
    let mut out = Vec::new();
    leaf_views(&tree.root, &mut Vec::new(), &mut out);
    out
}

/// Majority vote per leaf, ties resolved toward the label with the smallest
/// canonical rendering. If every leaf ends up with one same label and there
/// are at least two leaves, a uniformly random leaf is reassigned to a
/// different label present among its objects (or a uniformly random other
/// label when the leaf is pure). Empty leaves get a random label.
pub fn assign_leaf_labels(
    tree: &mut InducedTree,
    data: &LabeledDataset,
    rng: &mut impl Rng,
) {
    let mut leaves = Vec::new();
    leaves_mut(&mut tree.root, &mut leaves);
    let k = data.num_classes;

    let mut assigned: Vec<usize> = Vec::with_capacity(leaves.len());
    for leaf in leaves.iter() {
        let TreeNode::Leaf { reaching, .. } = &**leaf else {
            unreachable!()
        };
        if reaching.is_empty() {
            tree.empty_leaf = true;
            assigned.push(rng.gen_range(0..k));
            continue;
        }
        let hist = ClassHistogram::from_objects(reaching, data.labels, k);
        assigned.push(majority(&hist, data.class_renders, None));
    }

    if leaves.len() >= 2 && assigned.windows(2).all(|w| w[0] == w[1]) {
        let li = rng.gen_range(0..leaves.len());
        let current = assigned[li];
        let TreeNode::Leaf { reaching, .. } = &*leaves[li] else {
            unreachable!()
        };
        let hist = ClassHistogram::from_objects(reaching, data.labels, k);
        let has_other = hist
            .counts
            .iter()
            .enumerate()
            .any(|(c, &n)| n > 0 && c != current);
        let replacement = if has_other {
            majority(&hist, data.class_renders, Some(current))
        } else {
            // Pure leaf: any other label, uniformly.
            let others: Vec<usize> = (0..k).filter(|&c| c != current).collect();
            if others.is_empty() {
                current
            } else {
                others[rng.gen_range(0..others.len())]
            }
        };
        if replacement != current {
            assigned[li] = replacement;
            tree.relabeled_leaf = true;
        }
    }

    for (leaf, label) in leaves.into_iter().zip(assigned) {
        if let TreeNode::Leaf { label: slot, .. } = leaf {
            *slot = Some(label);
        }
    }
}

/// Highest count wins; ties go to the smallest canonical rendering.
fn majority(hist: &ClassHistogram, renders: &[String], exclude: Option<usize>) -> usize {
    let mut best: Option<usize> = None;
    for (c, &n) in hist.counts.iter().enumerate() {
        if n == 0 || Some(c) == exclude {
            continue;
        }
        best = match best {
            None => Some(c),
            Some(b) => {
                let better = n > hist.counts[b]
                    || (n == hist.counts[b] && renders[c] < renders[b]);
                Some(if better { c } else { b })
            }
        };
    }
    best.expect("non-empty histogram")
}

/// One class read off a labeled tree.
#[derive(Clone, Debug)]
pub struct ReadOffClass {
    pub expr: SetExpression,
    pub paths: Vec<Vec<Literal>>,
    pub region: BitSet,
}

/// Converts each class into the canonicalized union of its leaves' path
/// conjunctions. The regions partition the universe.
pub fn read_off(tree: &InducedTree, family: FamilyId) -> Result<BTreeMap<usize, ReadOffClass>> {
    let mut by_class: BTreeMap<usize, ReadOffClass> = BTreeMap::new();
    for (path, reaching, label) in leaf_paths(tree) {
        let label = label.expect("read_off requires a labeled tree");
        let entry = by_class.entry(label).or_insert_with(|| ReadOffClass {
            expr: SetExpression::from_conjuncts(family, vec![]),
            paths: Vec::new(),
            region: BitSet::new(reaching.len()),
        });
        entry.expr.conjuncts.push(path.clone());
        entry.paths.push(path);
        entry.region.or_with(&reaching);
    }
    for class in by_class.values_mut() {
        class.expr = canonicalize(&class.expr)?;
    }
    Ok(by_class)
}
