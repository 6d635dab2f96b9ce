//! Counting structures answering "how many objects of each class satisfy
//! this conjunction of descriptor-membership literals".
//!
//! The AD-tree stores per-class counts for every non-empty conjunction of
//! positive literals in ascending descriptor order, up to a depth just
//! above the classification-tree depth limit. Counts for negated literals
//! are derived by subtraction rather than cached. Because features and
//! class labels change every alternation, the structure is rebuilt from
//! scratch each time.
//!
//! `DirectCounter` answers the same queries by raw bitset intersection; the
//! two are interchangeable (a tested property), so which one the miner uses
//! is purely a speed decision.

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::expr::Literal;
use crate::store::DescriptorFamily;

/// Per-class object counts for one conjunction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassHistogram {
    pub counts: Vec<usize>,
    pub total: usize,
}

impl ClassHistogram {
    pub fn zeros(num_classes: usize) -> Self {
        ClassHistogram {
            counts: vec![0; num_classes],
            total: 0,
        }
    }

    pub fn from_objects(objects: &BitSet, labels: &[usize], num_classes: usize) -> Self {
        let mut h = ClassHistogram::zeros(num_classes);
        for pos in objects.iter() {
            h.counts[labels[pos]] += 1;
            h.total += 1;
        }
        h
    }

    pub fn subtract(&self, other: &ClassHistogram) -> ClassHistogram {
        debug_assert!(other.total <= self.total);
        ClassHistogram {
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a - b)
                .collect(),
            total: self.total - other.total,
        }
    }

    pub fn is_pure(&self) -> bool {
        self.counts.iter().filter(|&&c| c > 0).count() <= 1
    }

    /// Shannon entropy of the class distribution, in bits; 0·log 0 = 0.
    pub fn entropy_bits(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        self.counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum()
    }
}

/// Common query surface for the AD-tree and the direct counter.
pub trait ClassCounter {
    /// Exact per-class counts of objects satisfying every literal.
    fn query_counts(&self, query: &[Literal]) -> Result<ClassHistogram>;
    fn num_classes(&self) -> usize;
}

/// Sorts a query, rejects over-deep ones, dedupes repeats and detects
/// contradictions (which yield a zero histogram rather than an error).
fn normalize_query(query: &[Literal], max_depth: Option<usize>) -> Result<Option<Vec<Literal>>> {
    if let Some(max) = max_depth {
        if query.len() > max {
            return Err(Error::QueryTooDeep {
                depth: query.len(),
                max,
            });
        }
    }
    let mut sorted = query.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for w in sorted.windows(2) {
        if w[0].index == w[1].index {
            return Ok(None); // literal and its negation
        }
    }
    Ok(Some(sorted))
}

struct AdNode {
    hist: ClassHistogram,
    /// Children keyed by feature index, ascending; only features greater
    /// than every feature on the path to this node, only non-zero counts.
    children: Vec<(usize, AdNode)>,
}

/// Precomputed counts for conjunctions of up to `max_query_depth` literals.
pub struct AdTree {
    root: AdNode,
    num_classes: usize,
    max_query_depth: usize,
}

/// Builds the counting structure for one alternation's features and labels.
pub fn build_adtree(
    features: &DescriptorFamily,
    labeling: &[usize],
    num_classes: usize,
    max_query_depth: usize,
) -> Result<AdTree> {
    if max_query_depth < 1 {
        return Err(Error::InvalidConfig(
            "AD-tree max_query_depth must be at least 1".into(),
        ));
    }
    let universe_len = labeling.len();
    let all = BitSet::full(universe_len);
    let root = build_node(&all, features, labeling, num_classes, 0, max_query_depth, 0);
    Ok(AdTree {
        root,
        num_classes,
        max_query_depth,
    })
}

/// Chains carry features in ascending index order, so a node only spawns
/// children for features above the last one on its path.
fn build_node(
    objects: &BitSet,
    features: &DescriptorFamily,
    labeling: &[usize],
    num_classes: usize,
    depth: usize,
    max_depth: usize,
    first_feature: usize,
) -> AdNode {
    let hist = ClassHistogram::from_objects(objects, labeling, num_classes);
    let mut children = Vec::new();
    if depth < max_depth {
        for f in first_feature..features.len() {
            let subset = objects.and(&features.descriptor(f).members);
            if subset.is_empty() {
                continue;
            }
            children.push((
                f,
                build_node(
                    &subset,
                    features,
                    labeling,
                    num_classes,
                    depth + 1,
                    max_depth,
                    f + 1,
                ),
            ));
        }
    }
    AdNode { hist, children }
}

impl AdTree {
    pub fn max_query_depth(&self) -> usize {
        self.max_query_depth
    }

    fn positive_query(&self, node: &AdNode, lits: &[Literal]) -> ClassHistogram {
        match lits.split_first() {
            None => node.hist.clone(),
            Some((first, rest)) => {
                debug_assert!(!first.negated);
                match node
                    .children
                    .binary_search_by_key(&first.index, |(f, _)| *f)
                {
                    Ok(i) => self.positive_query(&node.children[i].1, rest),
                    Err(_) => ClassHistogram::zeros(self.num_classes),
                }
            }
        }
    }

    /// count(ctx ∧ ¬L ∧ rest) = count(ctx ∧ rest) − count(ctx ∧ L ∧ rest):
    /// negations resolve into positive-chain lookups by subtraction.
    fn mixed_query(&self, node: &AdNode, lits: &[Literal]) -> ClassHistogram {
        match lits.iter().position(|l| l.negated) {
            None => self.positive_query(node, lits),
            Some(i) => {
                let mut without: Vec<Literal> = lits.to_vec();
                let neg = without.remove(i);
                let with_positive: Vec<Literal> = {
                    let mut v = without.clone();
                    v.push(Literal::positive(neg.index));
                    v.sort_unstable();
                    v
                };
                let base = self.mixed_query(node, &without);
                let pos = self.mixed_query(node, &with_positive);
                base.subtract(&pos)
            }
        }
    }
}

impl ClassCounter for AdTree {
    fn query_counts(&self, query: &[Literal]) -> Result<ClassHistogram> {
        match normalize_query(query, Some(self.max_query_depth))? {
            None => Ok(ClassHistogram::zeros(self.num_classes)),
            Some(sorted) => Ok(self.mixed_query(&self.root, &sorted)),
        }
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// Bitset-intersection counting over the same inputs.
pub struct DirectCounter<'a> {
    features: &'a DescriptorFamily,
    labeling: &'a [usize],
    num_classes: usize,
}

impl<'a> DirectCounter<'a> {
    pub fn new(features: &'a DescriptorFamily, labeling: &'a [usize], num_classes: usize) -> Self {
        DirectCounter {
            features,
            labeling,
            num_classes,
        }
    }
}

impl ClassCounter for DirectCounter<'_> {
    fn query_counts(&self, query: &[Literal]) -> Result<ClassHistogram> {
        let Some(sorted) = normalize_query(query, None)? else {
            return Ok(ClassHistogram::zeros(self.num_classes));
        };
        let mut acc = BitSet::full(self.labeling.len());
        for lit in &sorted {
            let members = &self.features.descriptor(lit.index).members;
            if lit.negated {
                acc = acc.and_not(members);
            } else {
                acc.and_with(members);
            }
        }
        Ok(ClassHistogram::from_objects(
            &acc,
            self.labeling,
            self.num_classes,
        ))
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// Weighted entropy of splitting `context` on `candidate`:
/// (n_yes/n)·H(yes) + (n_no/n)·H(no), +∞ when the context is empty.
pub fn split_entropy(
    counter: &dyn ClassCounter,
    context: &[Literal],
    candidate: usize,
) -> Result<f64> {
    let parent = counter.query_counts(context)?;
    if parent.total == 0 {
        return Ok(f64::INFINITY);
    }
    let mut with_candidate = context.to_vec();
    with_candidate.push(Literal::positive(candidate));
    let yes = counter.query_counts(&with_candidate)?;
    let no = parent.subtract(&yes);
    let n = parent.total as f64;
    Ok(yes.total as f64 / n * yes.entropy_bits() + no.total as f64 / n * no.entropy_bits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Fig. 2 setup: Y descriptors as features, greedy-cover labels over X.
    /// Classes: 0 = X4 {o1,o5}, 1 = X1 {o2,o3}, 2 = X2 {o4}.
    fn fig2() -> (crate::store::Store, Vec<usize>, usize) {
        let store = fixtures::fig1_store();
        let labels = vec![0, 1, 1, 2, 0];
        (store, labels, 3)
    }

    #[test]
    fn root_histogram_matches_table() {
        let (store, labels, k) = fig2();
        let tree = build_adtree(&store.y, &labels, k, 3).unwrap();
        let h = tree.query_counts(&[]).unwrap();
        assert_eq!(h.counts, vec![2, 2, 1]); // X4:2, X1:2, X2:1
        assert_eq!(h.total, 5);
    }

    #[test]
    fn single_object_universe() {
        // No descriptor can be a proper subset of a one-object universe,
        // so the feature family is empty; the root count still answers.
        let fam = crate::store::DescriptorFamily::new(crate::store::FamilyId::Y);
        let tree = build_adtree(&fam, &[0], 1, 2).unwrap();
        assert_eq!(tree.query_counts(&[]).unwrap().total, 1);
    }

    #[test]
    fn zero_depth_is_rejected() {
        let (store, labels, k) = fig2();
        assert!(matches!(
            build_adtree(&store.y, &labels, k, 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn positive_queries_match_table() {
        let (store, labels, k) = fig2();
        let tree = build_adtree(&store.y, &labels, k, 3).unwrap();
        // [Y2] -> o2,o3,o4: X1:2, X2:1
        let h = tree.query_counts(&[Literal::positive(1)]).unwrap();
        assert_eq!(h.counts, vec![0, 2, 1]);
        // [Y3, Y2] -> o3: X1:1
        let h = tree
            .query_counts(&[Literal::positive(2), Literal::positive(1)])
            .unwrap();
        assert_eq!(h.counts, vec![0, 1, 0]);
        assert_eq!(h.total, 1);
    }

    #[test]
    fn contradictory_query_is_empty() {
        let (store, labels, k) = fig2();
        let tree = build_adtree(&store.y, &labels, k, 3).unwrap();
        let h = tree
            .query_counts(&[Literal::positive(0), Literal::negative(0)])
            .unwrap();
        assert_eq!(h.total, 0);
    }

    #[test]
    fn over_deep_query_errors() {
        let (store, labels, k) = fig2();
        let tree = build_adtree(&store.y, &labels, k, 2).unwrap();
        let q = [
            Literal::positive(0),
            Literal::positive(1),
            Literal::positive(2),
        ];
        assert!(matches!(
            tree.query_counts(&q),
            Err(Error::QueryTooDeep { depth: 3, max: 2 })
        ));
    }

    #[test]
    fn split_entropy_fig2_candidates() {
        let (store, labels, k) = fig2();
        let tree = build_adtree(&store.y, &labels, k, 3).unwrap();
        // Y3: yes {o3:X1, o5:X4}, no {o1:X4, o2:X1, o4:X2}
        let e = split_entropy(&tree, &[], 2).unwrap();
        let expected = 0.4 * 1.0 + 0.6 * (3.0f64).log2();
        assert!((e - expected).abs() < 1e-9);
        assert!((e - 1.3510).abs() < 1e-3);
    }

    #[test]
    fn split_entropy_pure_and_useless() {
        // Universe of 4: class 0 = {0,1}, class 1 = {2,3}.
        let mut fam = crate::store::DescriptorFamily::new(crate::store::FamilyId::Y);
        for (name, members) in [
            ("perfect", vec![0usize, 1]),
            ("useless", vec![0, 2]),
        ] {
            fam.push(crate::store::Descriptor {
                name: name.into(),
                members: crate::bitset::BitSet::from_positions(4, members),
                source_tag: String::new(),
                bucket: None,
            })
            .unwrap();
        }
        let labels = vec![0, 0, 1, 1];
        let tree = build_adtree(&fam, &labels, 2, 2).unwrap();
        assert!(split_entropy(&tree, &[], 0).unwrap().abs() < 1e-12);
        let parent = tree.query_counts(&[]).unwrap().entropy_bits();
        let useless = split_entropy(&tree, &[], 1).unwrap();
        assert!((useless - parent).abs() < 1e-12);
    }

    #[test]
    fn empty_context_sentinel() {
        let (store, labels, k) = fig2();
        let tree = build_adtree(&store.y, &labels, k, 3).unwrap();
        // Context Y3 & !Y3 is contradictory: total 0 -> +inf sentinel.
        let ctx = [Literal::positive(2), Literal::negative(2)];
        assert!(split_entropy(&tree, &ctx, 0).unwrap().is_infinite());
    }

    fn random_family(
        rng: &mut StdRng,
        universe_len: usize,
        n_desc: usize,
    ) -> crate::store::DescriptorFamily {
        let mut fam = crate::store::DescriptorFamily::new(crate::store::FamilyId::Y);
        let mut added = 0;
        while added < n_desc {
            let members = crate::bitset::BitSet::from_positions(
                universe_len,
                (0..universe_len).filter(|_| rng.gen_bool(0.5)),
            );
            if !members.is_proper_nonempty() {
                continue;
            }
            if fam
                .push(crate::store::Descriptor {
                    name: format!("D{added}"),
                    members,
                    source_tag: String::new(),
                    bucket: None,
                })
                .is_ok()
            {
                added += 1;
            }
        }
        fam
    }

    /// Brute-force row scan used as the independent oracle for AD-tree
    /// queries.
    fn brute_force(
        fam: &crate::store::DescriptorFamily,
        labels: &[usize],
        k: usize,
        query: &[Literal],
    ) -> ClassHistogram {
        let mut h = ClassHistogram::zeros(k);
        'obj: for pos in 0..labels.len() {
            for lit in query {
                let inside = fam.descriptor(lit.index).members.contains(pos);
                if inside == lit.negated {
                    continue 'obj;
                }
            }
            h.counts[labels[pos]] += 1;
            h.total += 1;
        }
        h
    }

    #[test]
    fn adtree_matches_brute_force_on_random_instances() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..30 {
            // proper non-empty descriptors need at least two objects
            let n = rng.gen_range(2..=12);
            let d = rng.gen_range(1..=8);
            let k = rng.gen_range(1..=4);
            let fam = random_family(&mut rng, n, d);
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let tree = build_adtree(&fam, &labels, k, 3).unwrap();
            let direct = DirectCounter::new(&fam, &labels, k);
            for _ in 0..40 {
                let depth = rng.gen_range(0..=3);
                let mut q = Vec::new();
                for _ in 0..depth {
                    q.push(Literal {
                        index: rng.gen_range(0..d),
                        negated: rng.gen_bool(0.5),
                    });
                }
                let expected = match normalize_query(&q, None).unwrap() {
                    None => ClassHistogram::zeros(k),
                    Some(sorted) => brute_force(&fam, &labels, k, &sorted),
                };
                assert_eq!(tree.query_counts(&q).unwrap(), expected);
                assert_eq!(direct.query_counts(&q).unwrap(), expected);
            }
        }
    }

    #[test]
    fn yes_and_no_counts_sum_to_context() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..20 {
            let n = rng.gen_range(2..=12);
            let d = rng.gen_range(2..=6);
            let fam = random_family(&mut rng, n, d);
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let tree = build_adtree(&fam, &labels, 3, 3).unwrap();
            for _ in 0..20 {
                // keep one feature free for the split literal
                let ctx_len = rng.gen_range(0..=2.min(d - 1));
                let mut ctx: Vec<Literal> = Vec::new();
                let mut used: Vec<usize> = Vec::new();
                while ctx.len() < ctx_len {
                    let f = rng.gen_range(0..d);
                    if used.contains(&f) {
                        continue;
                    }
                    used.push(f);
                    ctx.push(Literal {
                        index: f,
                        negated: rng.gen_bool(0.5),
                    });
                }
                let lit = loop {
                    let f = rng.gen_range(0..d);
                    if !used.contains(&f) {
                        break f;
                    }
                };
                let mut yes = ctx.clone();
                yes.push(Literal::positive(lit));
                let mut no = ctx.clone();
                no.push(Literal::negative(lit));
                let total = tree.query_counts(&ctx).unwrap().total;
                let y = tree.query_counts(&yes).unwrap().total;
                let n_ = tree.query_counts(&no).unwrap().total;
                assert_eq!(y + n_, total);
            }
        }
    }

    #[test]
    fn split_entropy_invariant_under_label_renaming() {
        let (store, labels, k) = fig2();
        let tree = build_adtree(&store.y, &labels, k, 3).unwrap();
        // Rename classes 0,1,2 -> 2,0,1.
        let renamed: Vec<usize> = labels.iter().map(|&c| (c + 2) % 3).collect();
        let tree2 = build_adtree(&store.y, &renamed, k, 3).unwrap();
        for f in 0..store.y.len() {
            let a = split_entropy(&tree, &[], f).unwrap();
            let b = split_entropy(&tree2, &[], f).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}
