//! The alternating mining loop: greedy set-cover initialization, tree
//! induction against the previous tree's partition, leaf matching, Jaccard
//! acceptance with the complement check, tightening, and the exploration
//! policy that retires descriptors as they participate in results.
//!
//! The state carried between alternations is exactly the current labeling
//! (with its defining expressions and tree paths) plus the active masks and
//! rng: the next state is a function of the current one only.

use std::collections::BTreeSet;
use std::time::Instant;


use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::adtree::{build_adtree, ClassCounter, DirectCounter};
use crate::bitset::BitSet;
use crate::canon::canonicalize;
use crate::error::{Error, Result};
use crate::expr::{complement_jaccard, jaccard, Literal, Redescription, SetExpression, Threshold};
use crate::report::{IterationRow, RunReport, StopReason};
use crate::store::{FamilyId, Store};
use crate::tighten::{tighten, TightenParams, TightenStep};
use crate::tree::{
    assign_leaf_labels, induce_tree, leaf_paths, read_off, InductionPolicy, LabeledDataset,
};

/// Per-side syntactic bias on the expressions allowed into redescriptions.
#[derive(Clone, Copy, Debug)]
pub struct Bias {
    pub allow_negation_lhs: bool,
    pub allow_negation_rhs: bool,
    pub allow_disjunction_lhs: bool,
    pub allow_disjunction_rhs: bool,
}

impl Default for Bias {
    fn default() -> Self {
        Bias {
            allow_negation_lhs: true,
            allow_negation_rhs: true,
            allow_disjunction_lhs: true,
            allow_disjunction_rhs: true,
        }
    }
}

impl Bias {
    pub fn allow_negation(&self, family: FamilyId) -> bool {
        match family {
            FamilyId::X => self.allow_negation_lhs,
            FamilyId::Y => self.allow_negation_rhs,
        }
    }

    pub fn allow_disjunction(&self, family: FamilyId) -> bool {
        match family {
            FamilyId::X => self.allow_disjunction_lhs,
            FamilyId::Y => self.allow_disjunction_rhs,
        }
    }

    pub fn admits(&self, expr: &SetExpression) -> bool {
        (self.allow_negation(expr.family) || !expr.has_negation())
            && (self.allow_disjunction(expr.family) || !expr.is_disjunctive())
    }
}

/// Everything the mining loop is configured by. A fixed config and seed
/// make the whole run, including its serialized output, reproducible.
#[derive(Clone, Debug)]
pub struct MinerConfig {
    pub theta: Threshold,
    pub depth_top: usize,
    pub depth_bottom: usize,
    pub max_idle_alternations: usize,
    pub max_total_alternations: usize,
    pub min_support: usize,
    pub min_leaf_size: usize,
    pub seed: u64,
    pub root_random_prob: f64,
    pub bias: Bias,
    pub tighten_tolerance: Threshold,
    /// Exploration policy variant: also retire the terminal decision node
    /// of each matched path, not only the ones above it.
    pub deactivate_full_path: bool,
    /// Run the initial greedy cover over Y and grow the first tree over X.
    pub cover_with_y: bool,
    /// Use direct bitset counting instead of an AD-tree when the universe
    /// is at most this large.
    pub direct_count_cutoff: usize,
    /// Never build an AD-tree over more features than this; fall back to
    /// direct counting (the two are equivalent, this is purely a size cap).
    pub adtree_max_features: usize,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            theta: Threshold::Exact { num: 1, den: 2 },
            depth_top: 2,
            depth_bottom: 2,
            max_idle_alternations: 10,
            max_total_alternations: 1000,
            min_support: 1,
            min_leaf_size: 1,
            seed: 0,
            root_random_prob: 0.1,
            bias: Bias::default(),
            tighten_tolerance: Threshold::ZERO,
            deactivate_full_path: false,
            cover_with_y: false,
            direct_count_cutoff: 64,
            adtree_max_features: 128,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<()> {
        let theta = self.theta.to_f64();
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidConfig("theta must lie in (0,1]".into()));
        }
        if self.depth_top < 1 || self.depth_bottom < 1 {
            return Err(Error::InvalidConfig("depth limits must be at least 1".into()));
        }
        if self.max_idle_alternations < 1 {
            return Err(Error::InvalidConfig(
                "max idle alternations must be at least 1".into(),
            ));
        }
        if self.max_total_alternations < 1 {
            return Err(Error::InvalidConfig(
                "max total alternations must be at least 1".into(),
            ));
        }
        if self.min_support < 1 {
            return Err(Error::InvalidConfig("min support must be at least 1".into()));
        }
        if self.min_leaf_size < 1 {
            return Err(Error::InvalidConfig("min leaf size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.root_random_prob) {
            return Err(Error::InvalidConfig(
                "root random probability must lie in [0,1]".into(),
            ));
        }
        Ok(())
    }

    fn depth_for(&self, side: FamilyId) -> usize {
        match side {
            FamilyId::X => self.depth_top,
            FamilyId::Y => self.depth_bottom,
        }
    }
}

/// The current partition of the universe: per-object class ids plus each
/// class's defining expression (over the family opposite to the side about
/// to grow) and the tree paths that realized it.
#[derive(Clone, Debug)]
struct ClassTable {
    exprs: Vec<SetExpression>,
    renders: Vec<String>,
    paths: Vec<Vec<Vec<Literal>>>,
}

impl ClassTable {
    fn len(&self) -> usize {
        self.exprs.len()
    }
}

/// Mining state between alternations.
#[derive(Debug)]
pub struct MinerState {
    pub store: Store,
    /// Family serving as features in the next alternation.
    current_side: FamilyId,
    labeling: Vec<usize>,
    classes: ClassTable,
    pub iteration: usize,
    pub idle: usize,
    emitted: BTreeSet<(String, String)>,
    rng: ChaCha8Rng,
    seed: u64,
}

impl MinerState {
    pub fn current_side(&self) -> FamilyId {
        self.current_side
    }

    pub fn labeling(&self) -> &[usize] {
        &self.labeling
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// The partition invariant: every object carries exactly one class.
    fn assert_labeling_total(&self) {
        debug_assert!(self.labeling.len() == self.store.universe.len());
        debug_assert!(self.labeling.iter().all(|&c| c < self.classes.len()));
    }
}

/// Greedy set cover over the covering family: repeatedly take the active
/// descriptor covering the most uncovered objects (ties to the lowest
/// index); each object is labeled by the descriptor that first covered it.
pub fn initialize(store: Store, config: &MinerConfig) -> Result<MinerState> {
    config.validate()?;
    store.x.verify_covering(&store.universe)?;
    store.y.verify_covering(&store.universe)?;

    let cover_side = if config.cover_with_y {
        FamilyId::Y
    } else {
        FamilyId::X
    };
    let family = store.family(cover_side);
    let n = store.universe.len();

    let mut uncovered = BitSet::full(n);
    let mut labeling = vec![usize::MAX; n];
    let mut exprs = Vec::new();
    let mut renders = Vec::new();
    let mut paths = Vec::new();
    while !uncovered.is_empty() {
        let mut best: Option<(usize, usize)> = None; // (gain, index)
        for idx in family.active_indices() {
            let gain = family.descriptor(idx).members.intersect_count(&uncovered);
            if gain > 0 && best.map(|(g, _)| gain > g).unwrap_or(true) {
                best = Some((gain, idx));
            }
        }
        let Some((_, idx)) = best else {
            // Loaders guarantee covering; active-mask games could break it.
            return Err(store
                .family(cover_side)
                .verify_covering(&store.universe)
                .err()
                .unwrap_or(Error::Internal("cover stalled".into())));
        };
        let class = exprs.len();
        for pos in family.descriptor(idx).members.and(&uncovered).iter() {
            labeling[pos] = class;
        }
        uncovered = uncovered.and_not(&family.descriptor(idx).members);
        exprs.push(SetExpression::literal(cover_side, idx));
        renders.push(family.descriptor(idx).name.clone());
        paths.push(vec![vec![Literal::positive(idx)]]);
    }

    let state = MinerState {
        current_side: cover_side.opposite(),
        labeling,
        classes: ClassTable {
            exprs,
            renders,
            paths,
        },
        iteration: 0,
        idle: 0,
        emitted: BTreeSet::new(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        seed: config.seed,
        store,
    };
    state.assert_labeling_total();
    Ok(state)
}

/// A leaf-matched expression pair before acceptance checks.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub side_expr: SetExpression,
    pub label_expr: SetExpression,
    pub side_support: BitSet,
    pub label_support: BitSet,
    side_paths: Vec<Vec<Literal>>,
    label_paths: Vec<Vec<Literal>>,
}

/// What one alternation produced.
pub struct AltOutcome {
    pub candidates: Vec<Candidate>,
    pub no_admissible_features: bool,
    pub degenerate: bool,
    pub admissible_features: usize,
}

enum Counter<'a> {
    Tree(crate::adtree::AdTree),
    Direct(DirectCounter<'a>),
}

impl Counter<'_> {
    fn as_dyn(&self) -> &dyn ClassCounter {
        match self {
            Counter::Tree(t) => t,
            Counter::Direct(d) => d,
        }
    }
}

/// Grows one tree over the current side's admissible features against the
/// current labeling, reads the new partition off, and pairs every group
/// with the class label it matched. Flips the state to the other side.
pub fn alternate_once(state: &mut MinerState, config: &MinerConfig) -> Result<AltOutcome> {
    state.assert_labeling_total();
    let side = state.current_side;
    let opposing = side.opposite();
    let depth = config.depth_for(side);

    // A descriptor already appearing in the opposing tree's expressions is
    // off limits here; on disjoint vocabularies this never triggers, but
    // overlapping families share names.
    let forbidden_names: BTreeSet<&str> = state
        .classes
        .exprs
        .iter()
        .flat_map(|e| e.conjuncts.iter().flatten())
        .map(|lit| state.store.family(opposing).descriptor(lit.index).name.as_str())
        .collect();
    let features = state.store.family(side);
    let forbid: Vec<usize> = (0..features.len())
        .filter(|&i| forbidden_names.contains(features.descriptor(i).name.as_str()))
        .collect();

    let policy = InductionPolicy {
        depth_limit: depth,
        root_random_prob: config.root_random_prob,
        min_leaf_size: config.min_leaf_size,
        forbid,
    };
    let data = LabeledDataset {
        features,
        labels: &state.labeling,
        num_classes: state.classes.len(),
        class_renders: &state.classes.renders,
    };
    let admissible_features = data.admissible(&policy).len();
    let n = state.store.universe.len();
    let counter = if n <= config.direct_count_cutoff || features.len() > config.adtree_max_features
    {
        Counter::Direct(DirectCounter::new(features, &state.labeling, data.num_classes))
    } else {
        Counter::Tree(build_adtree(
            features,
            &state.labeling,
            data.num_classes,
            depth + 1,
        )?)
    };

    let mut tree = induce_tree(&data, counter.as_dyn(), &policy, &mut state.rng)?;
    assign_leaf_labels(&mut tree, &data, &mut state.rng);

    // Read the partition off, grouped per class or per leaf depending on
    // whether this side may form disjunctions.
    struct Group {
        orig_class: usize,
        expr: SetExpression,
        paths: Vec<Vec<Literal>>,
        region: BitSet,
    }
    let groups: Vec<Group> = if config.bias.allow_disjunction(side) {
        read_off(&tree, side)?
            .into_iter()
            .map(|(class, c)| Group {
                orig_class: class,
                expr: c.expr,
                paths: c.paths,
                region: c.region,
            })
            .collect()
    } else {
        leaf_paths(&tree)
            .into_iter()
            .map(|(path, reaching, label)| {
                Ok(Group {
                    orig_class: label.expect("labeled tree"),
                    expr: canonicalize(&SetExpression::from_conjuncts(side, vec![path.clone()]))?,
                    paths: vec![path],
                    region: reaching,
                })
            })
            .collect::<Result<_>>()?
    };

    let mut candidates = Vec::new();
    let mut new_labeling = vec![usize::MAX; n];
    let mut table = ClassTable {
        exprs: Vec::with_capacity(groups.len()),
        renders: Vec::with_capacity(groups.len()),
        paths: Vec::with_capacity(groups.len()),
    };
    for group in &groups {
        let class = table.len();
        for pos in group.region.iter() {
            new_labeling[pos] = class;
        }
        table.exprs.push(group.expr.clone());
        table.renders.push(group.expr.render(features));
        table.paths.push(group.paths.clone());

        // Candidate expression: under a no-negation bias only the pure
        // yes-branch paths count; the labeling above still uses the full
        // partition expression.
        let cand_expr = if config.bias.allow_negation(side) {
            Some(group.expr.clone())
        } else {
            let positive: Vec<Vec<Literal>> = group
                .paths
                .iter()
                .filter(|p| p.iter().all(|l| !l.negated))
                .cloned()
                .collect();
            if positive.is_empty() {
                None
            } else {
                Some(canonicalize(&SetExpression::from_conjuncts(side, positive))?)
            }
        };
        if let Some(side_expr) = cand_expr {
            let label_expr = state.classes.exprs[group.orig_class].clone();
            let side_support = side_expr.evaluate(&state.store)?;
            let label_support = label_expr.evaluate(&state.store)?;
            candidates.push(Candidate {
                side_expr,
                label_expr,
                side_support,
                label_support,
                side_paths: group.paths.clone(),
                label_paths: state.classes.paths[group.orig_class].clone(),
            });
        }
    }

    state.labeling = new_labeling;
    state.classes = table;
    state.current_side = opposing;
    state.iteration += 1;
    state.assert_labeling_total();

    Ok(AltOutcome {
        candidates,
        no_admissible_features: tree.no_admissible_features,
        degenerate: tree.degenerate,
        admissible_features,
    })
}

/// An accepted candidate with the path data the exploration policy needs.
pub struct Accepted {
    pub redescription: Redescription,
    x_paths: Vec<Vec<Literal>>,
    y_paths: Vec<Vec<Literal>>,
}

fn render_key(red: &Redescription, store: &Store) -> (String, String) {
    (red.lhs.render(&store.x), red.rhs.render(&store.y))
}

/// Applies the acceptance predicate: syntactic bias on both sides, support
/// bounds, the Jaccard threshold, the complement threshold, and canonical
/// deduplication against everything already emitted.
pub fn accept_candidates(
    state: &mut MinerState,
    candidates: &[Candidate],
    config: &MinerConfig,
) -> Vec<Accepted> {
    let n = state.store.universe.len();
    let mut accepted = Vec::new();
    for cand in candidates {
        let (lhs, rhs, lhs_support, rhs_support, x_paths, y_paths) =
            if cand.side_expr.family == FamilyId::X {
                (
                    &cand.side_expr,
                    &cand.label_expr,
                    &cand.side_support,
                    &cand.label_support,
                    &cand.side_paths,
                    &cand.label_paths,
                )
            } else {
                (
                    &cand.label_expr,
                    &cand.side_expr,
                    &cand.label_support,
                    &cand.side_support,
                    &cand.label_paths,
                    &cand.side_paths,
                )
            };
        if !config.bias.admits(lhs) || !config.bias.admits(rhs) {
            continue;
        }
        let support_ok = |s: &BitSet| {
            let c = s.count();
            c >= config.min_support && c + config.min_support <= n
        };
        if !support_ok(lhs_support) || !support_ok(rhs_support) {
            continue;
        }
        let j = jaccard(lhs_support, rhs_support);
        if !config.theta.met_by(j) {
            continue;
        }
        let cj = complement_jaccard(lhs_support, rhs_support);
        if !config.theta.met_by(cj) {
            continue;
        }
        let red = Redescription {
            lhs: lhs.clone(),
            rhs: rhs.clone(),
            jaccard: j,
            complement_jaccard: cj,
            lhs_support: lhs_support.clone(),
            rhs_support: rhs_support.clone(),
            iteration: state.iteration,
            seed: state.seed,
        };
        let key = render_key(&red, &state.store);
        if state.emitted.contains(&key) {
            continue;
        }
        state.emitted.insert(key);
        accepted.push(Accepted {
            redescription: red,
            x_paths: x_paths.clone(),
            y_paths: y_paths.clone(),
        });
    }
    accepted
}

/// Retires descriptors that served as non-terminal decision nodes on the
/// matched paths of accepted redescriptions. Deactivation only flips the
/// active mask; member sets, and therefore everything already emitted,
/// stay valid.
pub fn apply_exploration_policy(
    state: &mut MinerState,
    accepted: &[Accepted],
    config: &MinerConfig,
) {
    let mut retire: BTreeSet<(FamilyId, usize)> = BTreeSet::new();
    for acc in accepted {
        for (family, paths) in [
            (FamilyId::X, &acc.x_paths),
            (FamilyId::Y, &acc.y_paths),
        ] {
            for path in paths.iter() {
                let cut = if config.deactivate_full_path {
                    path.len()
                } else {
                    path.len().saturating_sub(1)
                };
                for lit in &path[..cut] {
                    retire.insert((family, lit.index));
                }
            }
        }
    }
    for (family, idx) in retire {
        state.store.family_mut(family).deactivate(idx);
    }
}

/// A final mined redescription together with its tightening trace.
pub struct MinedRedescription {
    pub redescription: Redescription,
    pub tighten_steps: Vec<TightenStep>,
}

pub struct MinerOutput {
    pub redescriptions: Vec<MinedRedescription>,
    pub report: RunReport,
    /// The store as the run left it (active masks flipped, members intact).
    pub store: Store,
}

/// Runs the full loop: initialize, then alternate / accept / tighten /
/// retire until the idle limit, the total-alternation cap, or a dead end
/// with no admissible features.
pub fn run(store: Store, config: &MinerConfig) -> Result<MinerOutput> {
    let started = Instant::now();
    let mut state = initialize(store, config)?;
    let mut outputs: Vec<MinedRedescription> = Vec::new();
    let mut rows: Vec<IterationRow> = Vec::new();
    let tighten_params = TightenParams {
        theta: config.theta,
        tolerance: config.tighten_tolerance,
        min_support: config.min_support,
    };

    let stop = loop {
        if state.iteration >= config.max_total_alternations {
            break StopReason::MaxAlternations;
        }
        let side = state.current_side;
        let alt = alternate_once(&mut state, config)?;
        let accepted = accept_candidates(&mut state, &alt.candidates, config);
        let n_accepted = accepted.len();

        for acc in &accepted {
            let result = tighten(&acc.redescription, &state.store, &tighten_params)?;
            let pre_key = render_key(&acc.redescription, &state.store);
            let post_key = render_key(&result.tightened, &state.store);
            if post_key != pre_key {
                if state.emitted.contains(&post_key) {
                    continue; // tightened into something already reported
                }
                state.emitted.insert(post_key);
            }
            outputs.push(MinedRedescription {
                redescription: result.tightened,
                tighten_steps: result.steps,
            });
        }

        if n_accepted > 0 {
            state.idle = 0;
        } else {
            state.idle += 1;
        }
        apply_exploration_policy(&mut state, &accepted, config);

        rows.push(IterationRow {
            iteration: state.iteration,
            side: side.to_string(),
            admissible_features: alt.admissible_features,
            candidates: alt.candidates.len(),
            accepted: n_accepted,
            idle_after: state.idle,
            active_x: state.store.x.active_count(),
            active_y: state.store.y.active_count(),
        });

        if state.idle >= config.max_idle_alternations {
            break StopReason::IdleLimit;
        }
        if alt.no_admissible_features && n_accepted == 0 {
            break StopReason::NoAdmissibleFeatures;
        }
    };

    let report = RunReport {
        config_echo: config_echo(config),
        rows,
        stop,
        total_emitted: outputs.len(),
        elapsed: started.elapsed(),
    };
    Ok(MinerOutput {
        redescriptions: outputs,
        report,
        store: state.store,
    })
}

fn config_echo(config: &MinerConfig) -> String {
    format!(
        "theta={} depth_top={} depth_bottom={} max_idle={} max_alternations={} \
         min_support={} min_leaf={} seed={} root_random_prob={} tighten_tolerance={} \
         neg_lhs={} neg_rhs={} disj_lhs={} disj_rhs={} full_path={} cover_with_y={}",
        config.theta,
        config.depth_top,
        config.depth_bottom,
        config.max_idle_alternations,
        config.max_total_alternations,
        config.min_support,
        config.min_leaf_size,
        config.seed,
        config.root_random_prob,
        config.tighten_tolerance,
        config.bias.allow_negation_lhs,
        config.bias.allow_negation_rhs,
        config.bias.allow_disjunction_lhs,
        config.bias.allow_disjunction_rhs,
        config.deactivate_full_path,
        config.cover_with_y,
    )
}
