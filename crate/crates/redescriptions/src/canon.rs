//! Canonical form for set expressions: tabular (prime-implicant) boolean
//! minimization over the expression's descriptor variables, followed by a
//! deterministic ordering of literals and conjuncts.
//!
//! The canonical form is syntactic: two expressions that compute the same
//! boolean function of their descriptors canonicalize identically no matter
//! what data is loaded, which is what makes redescription deduplication
//! stable across runs.

use crate::error::{Error, Result};
use crate::expr::{Literal, SetExpression};

/// An implicant over k variables: `value` holds the required bits, `mask`
/// marks the dashed (don't-care) positions, where `value` is zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Implicant {
    value: u32,
    mask: u32,
}

impl Implicant {
    fn covers(&self, minterm: u32) -> bool {
        minterm & !self.mask == self.value
    }
}

const MAX_VARIABLES: usize = 16;

/// Rewrites `expr` as a minimal DNF equivalent to it as a boolean function
/// of its descriptors. Evaluation is preserved for every store.
pub fn canonicalize(expr: &SetExpression) -> Result<SetExpression> {
    if expr.is_constant_true() {
        return Ok(SetExpression::universe_true(expr.family));
    }
    if expr.conjuncts.is_empty() {
        return Ok(expr.clone());
    }
    let vars = expr.variables();
    let k = vars.len();
    if k > MAX_VARIABLES {
        return Err(Error::TooManyVariables(k));
    }
    let var_pos = |index: usize| vars.binary_search(&index).expect("variable present");

    // Truth table over the 2^k assignments.
    let mut minterms: Vec<u32> = Vec::new();
    for m in 0..(1u32 << k) {
        let satisfied = expr.conjuncts.iter().any(|conj| {
            conj.iter().all(|lit| {
                let bit = m >> var_pos(lit.index) & 1 == 1;
                bit != lit.negated
            })
        });
        if satisfied {
            minterms.push(m);
        }
    }
    if minterms.is_empty() {
        return Ok(SetExpression::from_conjuncts(expr.family, vec![]));
    }
    if minterms.len() == 1usize << k {
        return Ok(SetExpression::universe_true(expr.family));
    }

    let primes = prime_implicants(&minterms, k);
    let mut chosen = select_cover(&primes, &minterms);

    let mut conjuncts: Vec<Vec<Literal>> = chosen
        .drain(..)
        .map(|imp| implicant_to_conjunct(imp, &vars, k))
        .collect();
    conjuncts.sort();
    conjuncts.dedup();
    Ok(SetExpression::from_conjuncts(expr.family, conjuncts))
}

/// Classic iterative combining: merge implicants differing in exactly one
/// cared-for bit until nothing merges; the uncombined ones are prime.
fn prime_implicants(minterms: &[u32], k: usize) -> Vec<Implicant> {
    let mut current: Vec<Implicant> = minterms
        .iter()
        .map(|&m| Implicant { value: m, mask: 0 })
        .collect();
    let mut primes: Vec<Implicant> = Vec::new();
    while !current.is_empty() {
        let mut combined = vec![false; current.len()];
        let mut next: Vec<Implicant> = Vec::new();
        for i in 0..current.len() {
            for j in i + 1..current.len() {
                let (a, b) = (current[i], current[j]);
                if a.mask != b.mask {
                    continue;
                }
                let diff = a.value ^ b.value;
                if diff.count_ones() == 1 {
                    combined[i] = true;
                    combined[j] = true;
                    next.push(Implicant {
                        value: a.value & !diff,
                        mask: a.mask | diff,
                    });
                }
            }
        }
        for (i, imp) in current.iter().enumerate() {
            if !combined[i] {
                primes.push(*imp);
            }
        }
        next.sort_unstable();
        next.dedup();
        current = next;
        let _ = k;
    }
    primes.sort_unstable();
    primes.dedup();
    primes
}

/// Bit blocks marking which of the listed minterms an implicant covers.
fn coverage(imp: Implicant, minterms: &[u32]) -> Vec<u64> {
    let mut blocks = vec![0u64; minterms.len().div_ceil(64)];
    for (i, &m) in minterms.iter().enumerate() {
        if imp.covers(m) {
            blocks[i / 64] |= 1 << (i % 64);
        }
    }
    blocks
}

fn blocks_or(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x |= y;
    }
}

fn blocks_cover_all(a: &[u64], total: usize) -> bool {
    let mut remaining = total;
    for (i, &block) in a.iter().enumerate() {
        let width = (total - i * 64).min(64);
        let mask = if width == 64 { !0u64 } else { (1u64 << width) - 1 };
        remaining -= (block & mask).count_ones() as usize;
    }
    remaining == 0
}

/// Essential primes first, then a minimum-cardinality cover of whatever is
/// left. The exact search is iterative deepening over prime combinations in
/// a fixed order, so the result is deterministic; inputs large enough to
/// exhaust the search budget fall back to a deterministic greedy cover.
fn select_cover(primes: &[Implicant], minterms: &[u32]) -> Vec<Implicant> {
    let mut ordered: Vec<Implicant> = primes.to_vec();
    // Fewer literals (more dashes) first, then by cube value.
    ordered.sort_by_key(|p| (std::cmp::Reverse(p.mask.count_ones()), p.value, p.mask));

    let mut chosen: Vec<Implicant> = Vec::new();
    let mut covered = vec![false; minterms.len()];

    // Essential primes: minterms covered by exactly one prime.
    for (mi, &m) in minterms.iter().enumerate() {
        let covering: Vec<usize> = ordered
            .iter()
            .enumerate()
            .filter(|(_, p)| p.covers(m))
            .map(|(i, _)| i)
            .collect();
        if covering.len() == 1 {
            let p = ordered[covering[0]];
            if !chosen.contains(&p) {
                chosen.push(p);
                for (i, &mm) in minterms.iter().enumerate() {
                    if p.covers(mm) {
                        covered[i] = true;
                    }
                }
            }
            let _ = mi;
        }
    }

    let remaining: Vec<u32> = minterms
        .iter()
        .enumerate()
        .filter(|(i, _)| !covered[*i])
        .map(|(_, &m)| m)
        .collect();
    if remaining.is_empty() {
        return chosen;
    }

    let candidates: Vec<Implicant> = ordered
        .iter()
        .copied()
        .filter(|p| !chosen.contains(p) && remaining.iter().any(|&m| p.covers(m)))
        .collect();
    let covs: Vec<Vec<u64>> = candidates
        .iter()
        .map(|&p| coverage(p, &remaining))
        .collect();

    if let Some(extra) = exact_cover(&candidates, &covs, remaining.len()) {
        chosen.extend(extra);
        return chosen;
    }

    // Greedy fallback: repeatedly take the candidate covering the most
    // still-uncovered minterms, ties resolved by candidate order.
    let mut acc = vec![0u64; remaining.len().div_ceil(64)];
    while !blocks_cover_all(&acc, remaining.len()) {
        let mut best: Option<(usize, usize)> = None;
        for (i, cov) in covs.iter().enumerate() {
            let gain: usize = cov
                .iter()
                .zip(&acc)
                .map(|(c, a)| (c & !a).count_ones() as usize)
                .sum();
            if gain > 0 && best.map(|(g, _)| gain > g).unwrap_or(true) {
                best = Some((gain, i));
            }
        }
        let (_, i) = best.expect("primes cover all minterms");
        blocks_or(&mut acc, &covs[i]);
        chosen.push(candidates[i]);
    }
    chosen
}

const EXACT_SEARCH_BUDGET: usize = 1 << 20;

/// Minimum-cardinality cover by iterative deepening; `None` when the
/// combination space exceeds the search budget.
fn exact_cover(
    candidates: &[Implicant],
    covs: &[Vec<u64>],
    total: usize,
) -> Option<Vec<Implicant>> {
    let n = candidates.len();
    if n == 0 {
        return None;
    }
    let mut budget = EXACT_SEARCH_BUDGET;
    for size in 1..=n {
        let mut pick = Vec::with_capacity(size);
        if let Some(found) = search(candidates, covs, total, size, 0, &mut pick, &mut budget) {
            return Some(found);
        }
        if budget == 0 {
            return None;
        }
    }
    None
}

fn search(
    candidates: &[Implicant],
    covs: &[Vec<u64>],
    total: usize,
    size: usize,
    start: usize,
    pick: &mut Vec<usize>,
    budget: &mut usize,
) -> Option<Vec<Implicant>> {
    if pick.len() == size {
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        let mut acc = vec![0u64; total.div_ceil(64)];
        for &i in pick.iter() {
            blocks_or(&mut acc, &covs[i]);
        }
        if blocks_cover_all(&acc, total) {
            return Some(pick.iter().map(|&i| candidates[i]).collect());
        }
        return None;
    }
    for i in start..candidates.len() {
        if candidates.len() - i < size - pick.len() {
            break;
        }
        pick.push(i);
        if let Some(found) = search(candidates, covs, total, size, i + 1, pick, budget) {
            return Some(found);
        }
        pick.pop();
        if *budget == 0 {
            return None;
        }
    }
    None
}

fn implicant_to_conjunct(imp: Implicant, vars: &[usize], k: usize) -> Vec<Literal> {
    let mut conj = Vec::new();
    for (p, &var) in vars.iter().enumerate().take(k) {
        if imp.mask >> p & 1 == 1 {
            continue; // dashed
        }
        conj.push(Literal {
            index: var,
            negated: imp.value >> p & 1 == 0,
        });
    }
    conj.sort_unstable();
    conj
}
