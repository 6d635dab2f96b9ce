//! Brute-force enumeration of every bias-admissible expression pair, used
//! as the soundness reference for the miner and exposed as the `oracle`
//! subcommand for small inputs.
//!
//! The expression space is every union of up to 2^depth conjunctions of at
//! most `depth` literals each, which is exactly the shape a depth-limited
//! tree's read-off (before or after minimization and tightening) can take.
//! Enumeration works over distinct support sets: conjunct supports are
//! computed per object with a direct membership scan, independent of the
//! bitset algebra used by the mining path, and then closed under union up
//! to the conjunct budget.

use std::collections::BTreeMap;

use crate::bitset::BitSet;
use crate::engine::Bias;
use crate::error::{Error, Result};
use crate::expr::{complement_jaccard, jaccard, Coefficient, Threshold};
use crate::store::{DescriptorFamily, FamilyId, Store};

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub theta: Threshold,
    pub depth_lhs: usize,
    pub depth_rhs: usize,
    pub min_support: usize,
    pub bias: Bias,
    /// Refuse to enumerate more admissible expressions per side than this.
    pub max_expressions: u128,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            theta: Threshold::Exact { num: 1, den: 2 },
            depth_lhs: 2,
            depth_rhs: 2,
            min_support: 1,
            bias: Bias::default(),
            max_expressions: 1_000_000,
        }
    }
}

/// One support pair meeting the acceptance predicate, with example
/// expressions realizing each side.
#[derive(Clone, Debug)]
pub struct OracleEntry {
    pub lhs_support: BitSet,
    pub rhs_support: BitSet,
    pub jaccard: Coefficient,
    pub complement_jaccard: Coefficient,
    pub lhs_example: String,
    pub rhs_example: String,
}

/// Distinct realizable supports on one side, each with a representative
/// rendering.
fn side_supports(
    family: &DescriptorFamily,
    family_id: FamilyId,
    universe_len: usize,
    depth: usize,
    bias: &Bias,
    max_expressions: u128,
) -> Result<BTreeMap<BitSet, String>> {
    let allow_negation = bias.allow_negation(family_id);
    let max_conjuncts = if bias.allow_disjunction(family_id) {
        1usize << depth
    } else {
        1
    };

    // Admissible conjuncts: every combination of 1..=depth distinct
    // descriptors with a sign pattern each.
    let mut conjuncts: Vec<(BitSet, String)> = Vec::new();
    let mut stack: Vec<(usize, bool)> = Vec::new();
    build_conjuncts(
        family,
        universe_len,
        depth,
        allow_negation,
        0,
        &mut stack,
        &mut conjuncts,
    );

    let count = expression_count(conjuncts.len() as u128, max_conjuncts);
    if count > max_expressions {
        return Err(Error::EnumerationTooLarge {
            count,
            bound: max_expressions,
        });
    }

    // Close the conjunct supports under union, level by level; a union of
    // c conjuncts is a union of (c-1) conjuncts plus one more, so each
    // level only extends the previous one.
    let mut supports: BTreeMap<BitSet, String> = BTreeMap::new();
    for (s, r) in &conjuncts {
        supports.entry(s.clone()).or_insert_with(|| r.clone());
    }
    let mut frontier: Vec<(BitSet, String)> = conjuncts.clone();
    for _ in 2..=max_conjuncts {
        let mut next: Vec<(BitSet, String)> = Vec::new();
        for (base, base_render) in &frontier {
            for (c, c_render) in &conjuncts {
                let union = base.or(c);
                if union == *base {
                    continue;
                }
                if !supports.contains_key(&union) {
                    let render = format!("{base_render} | {c_render}");
                    supports.insert(union.clone(), render.clone());
                    next.push((union, render));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(supports)
}

fn build_conjuncts(
    family: &DescriptorFamily,
    universe_len: usize,
    depth_left: usize,
    allow_negation: bool,
    start: usize,
    stack: &mut Vec<(usize, bool)>,
    out: &mut Vec<(BitSet, String)>,
) {
    if !stack.is_empty() {
        let support = BitSet::from_positions(
            universe_len,
            (0..universe_len).filter(|&pos| {
                stack
                    .iter()
                    .all(|&(idx, negated)| family.descriptor(idx).members.contains(pos) != negated)
            }),
        );
        let render = stack
            .iter()
            .map(|&(idx, negated)| {
                let name = &family.descriptor(idx).name;
                if negated {
                    format!("!{name}")
                } else {
                    name.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" & ");
        let render = if stack.len() > 1 {
            format!("({render})")
        } else {
            render
        };
        out.push((support, render));
    }
    if depth_left == 0 {
        return;
    }
    for idx in start..family.len() {
        for negated in [false, true] {
            if negated && !allow_negation {
                continue;
            }
            stack.push((idx, negated));
            build_conjuncts(
                family,
                universe_len,
                depth_left - 1,
                allow_negation,
                idx + 1,
                stack,
                out,
            );
            stack.pop();
        }
    }
}

/// Number of DNFs formable from `m` conjuncts with up to `max_conjuncts`
/// terms: sum of binomial coefficients, saturating.
fn expression_count(m: u128, max_conjuncts: usize) -> u128 {
    let mut total: u128 = 0;
    let mut term: u128 = 1;
    for c in 1..=max_conjuncts as u128 {
        if c > m {
            break;
        }
        term = match term.checked_mul(m - c + 1) {
            Some(t) => t / c,
            None => return u128::MAX,
        };
        total = total.saturating_add(term);
    }
    total
}

/// Every support pair realizable by bias-admissible expressions that passes
/// the full acceptance predicate (threshold, complement, support bounds).
pub fn enumerate(store: &Store, config: &OracleConfig) -> Result<Vec<OracleEntry>> {
    let n = store.universe.len();
    let lhs = side_supports(
        &store.x,
        FamilyId::X,
        n,
        config.depth_lhs,
        &config.bias,
        config.max_expressions,
    )?;
    let rhs = side_supports(
        &store.y,
        FamilyId::Y,
        n,
        config.depth_rhs,
        &config.bias,
        config.max_expressions,
    )?;

    let support_ok = |s: &BitSet| {
        let c = s.count();
        c >= config.min_support && c + config.min_support <= n
    };
    let mut entries = Vec::new();
    for (ls, lr) in &lhs {
        if !support_ok(ls) {
            continue;
        }
        for (rs, rr) in &rhs {
            if !support_ok(rs) {
                continue;
            }
            let j = jaccard(ls, rs);
            if !config.theta.met_by(j) {
                continue;
            }
            let cj = complement_jaccard(ls, rs);
            if !config.theta.met_by(cj) {
                continue;
            }
            entries.push(OracleEntry {
                lhs_support: ls.clone(),
                rhs_support: rs.clone(),
                jaccard: j,
                complement_jaccard: cj,
                lhs_example: lr.clone(),
                rhs_example: rr.clone(),
            });
        }
    }
    Ok(entries)
}

/// Does the enumeration contain this exact (support pair, coefficient)?
pub fn contains(entries: &[OracleEntry], lhs: &BitSet, rhs: &BitSet, j: Coefficient) -> bool {
    entries
        .iter()
        .any(|e| e.lhs_support == *lhs && e.rhs_support == *rhs && e.jaccard == j)
}
