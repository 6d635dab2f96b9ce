//! Set-theoretic expressions over descriptor literals, and the coefficients
//! that score how well two of them describe the same objects.
//!
//! Expressions are kept in disjunctive normal form: a union of conjuncts,
//! each conjunct an intersection of (possibly complemented) descriptors.
//! A set difference A − B is represented as A ∧ ¬B. The constant-true
//! expression (a single empty conjunct) can come out of reading off a
//! single-leaf tree; the miner discards it through the proper-subset
//! support rule, so it never reaches any output.

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::store::{DescriptorFamily, FamilyId, Store};

/// A descriptor occurrence, possibly complemented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub index: usize,
    pub negated: bool,
}

impl Literal {
    pub fn positive(index: usize) -> Self {
        Literal {
            index,
            negated: false,
        }
    }

    pub fn negative(index: usize) -> Self {
        Literal {
            index,
            negated: true,
        }
    }
}

/// A DNF expression whose literals all come from one vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetExpression {
    pub family: FamilyId,
    pub conjuncts: Vec<Vec<Literal>>,
}

impl SetExpression {
    /// A single positive literal.
    pub fn literal(family: FamilyId, index: usize) -> Self {
        SetExpression {
            family,
            conjuncts: vec![vec![Literal::positive(index)]],
        }
    }

    /// The constant-true expression (evaluates to the whole universe).
    pub fn universe_true(family: FamilyId) -> Self {
        SetExpression {
            family,
            conjuncts: vec![vec![]],
        }
    }

    pub fn from_conjuncts(family: FamilyId, conjuncts: Vec<Vec<Literal>>) -> Self {
        SetExpression { family, conjuncts }
    }

    pub fn is_constant_true(&self) -> bool {
        self.conjuncts.iter().any(|c| c.is_empty())
    }

    pub fn literal_count(&self) -> usize {
        self.conjuncts.iter().map(|c| c.len()).sum()
    }

    pub fn has_negation(&self) -> bool {
        self.conjuncts.iter().flatten().any(|l| l.negated)
    }

    pub fn is_disjunctive(&self) -> bool {
        self.conjuncts.len() > 1
    }

    /// Distinct descriptor indices referenced, ascending.
    pub fn variables(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.conjuncts.iter().flatten().map(|l| l.index).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Checks the structural invariants expected of user-supplied
    /// expressions: at least one conjunct, no empty conjunct, no duplicate
    /// or contradictory literal inside a conjunct.
    pub fn validate(&self, family: &DescriptorFamily) -> Result<()> {
        if self.conjuncts.is_empty() {
            return Err(Error::MalformedInput("expression has no conjuncts".into()));
        }
        for conj in &self.conjuncts {
            if conj.is_empty() {
                return Err(Error::MalformedInput("empty conjunct".into()));
            }
            for (i, lit) in conj.iter().enumerate() {
                if family.get(lit.index).is_none() {
                    return Err(Error::UnknownDescriptor(format!(
                        "{}#{}",
                        self.family, lit.index
                    )));
                }
                for other in &conj[i + 1..] {
                    if other.index == lit.index {
                        let name = &family.descriptor(lit.index).name;
                        return Err(Error::MalformedInput(if other.negated != lit.negated {
                            format!("conjunct contains {name} and its negation")
                        } else {
                            format!("duplicate literal {name} in conjunct")
                        }));
                    }
                }
            }
        }
        Ok(())
    }

    /// Sorts and dedupes literals and conjuncts without changing meaning.
    /// This is ordering normalization only; `canon::canonicalize` does the
    /// actual boolean minimization.
    pub fn normalized(&self) -> SetExpression {
        let mut conjuncts: Vec<Vec<Literal>> = self
            .conjuncts
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        conjuncts.sort();
        conjuncts.dedup();
        SetExpression {
            family: self.family,
            conjuncts,
        }
    }

    /// The objects the expression denotes: union over conjuncts of the
    /// intersection of member sets, complements taken in the universe.
    pub fn evaluate(&self, store: &Store) -> Result<BitSet> {
        self.evaluate_in(store.family(self.family), store.universe.len())
    }

    pub fn evaluate_in(&self, family: &DescriptorFamily, universe_len: usize) -> Result<BitSet> {
        let mut result = BitSet::new(universe_len);
        for conj in &self.conjuncts {
            let mut acc = BitSet::full(universe_len);
            for lit in conj {
                let d = family.get(lit.index).ok_or_else(|| {
                    Error::UnknownDescriptor(format!("{}#{}", self.family, lit.index))
                })?;
                if lit.negated {
                    acc = acc.and_not(&d.members);
                } else {
                    acc.and_with(&d.members);
                }
            }
            result.or_with(&acc);
        }
        Ok(result)
    }

    /// Renders in the expression grammar: `&` intersection, `|` union,
    /// `!` complement. Multi-literal conjuncts are parenthesized inside a
    /// disjunction.
    pub fn render(&self, family: &DescriptorFamily) -> String {
        if self.conjuncts.is_empty() {
            return "⊥".to_string();
        }
        let parts: Vec<String> = self
            .conjuncts
            .iter()
            .map(|conj| {
                if conj.is_empty() {
                    return "⊤".to_string();
                }
                let lits: Vec<String> = conj
                    .iter()
                    .map(|l| {
                        let name = &family.descriptor(l.index).name;
                        if l.negated {
                            format!("!{name}")
                        } else {
                            name.clone()
                        }
                    })
                    .collect();
                let joined = lits.join(" & ");
                if self.conjuncts.len() > 1 && conj.len() > 1 {
                    format!("({joined})")
                } else {
                    joined
                }
            })
            .collect();
        parts.join(" | ")
    }
}

/// An exact rational in [0, 1], kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Coefficient {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Coefficient {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "coefficient denominator must be positive");
        let g = gcd(num, den).max(1);
        Coefficient {
            num: num / g,
            den: den / g,
        }
    }

    pub fn one() -> Self {
        Coefficient { num: 1, den: 1 }
    }

    pub fn zero() -> Self {
        Coefficient { num: 0, den: 1 }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialOrd for Coefficient {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coefficient {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let lhs = self.num as u128 * other.den as u128;
        let rhs = other.num as u128 * self.den as u128;
        lhs.cmp(&rhs)
    }
}

impl std::fmt::Display for Coefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// A comparison threshold: exact when written as a ratio like `1/2`,
/// approximate (1e-9 slack) when written as a decimal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    Exact { num: u64, den: u64 },
    Approx(f64),
}

impl Threshold {
    pub const ZERO: Threshold = Threshold::Exact { num: 0, den: 1 };

    pub fn parse(text: &str) -> Result<Threshold> {
        let text = text.trim();
        if let Some((n, d)) = text.split_once('/') {
            let num: u64 = n.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("bad rational threshold {text:?}"))
            })?;
            let den: u64 = d.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("bad rational threshold {text:?}"))
            })?;
            if den == 0 {
                return Err(Error::InvalidConfig("threshold denominator is zero".into()));
            }
            Ok(Threshold::Exact { num, den })
        } else {
            let v: f64 = text
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad threshold {text:?}")))?;
            Ok(Threshold::Approx(v))
        }
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            Threshold::Exact { num, den } => num as f64 / den as f64,
            Threshold::Approx(v) => v,
        }
    }

    /// Is `c >= self`?
    pub fn met_by(&self, c: Coefficient) -> bool {
        match *self {
            Threshold::Exact { num, den } => {
                c.num as u128 * den as u128 >= num as u128 * c.den as u128
            }
            Threshold::Approx(v) => c.to_f64() >= v - 1e-9,
        }
    }

    /// Is `new >= reference - self`? Used as the tightening tolerance.
    pub fn within_drop(&self, new: Coefficient, reference: Coefficient) -> bool {
        match *self {
            Threshold::Exact { num, den } => {
                // new + tol >= reference, cross-multiplied over u128
                let lhs = (new.num as u128 * den as u128 + num as u128 * new.den as u128)
                    * reference.den as u128;
                let rhs = reference.num as u128 * new.den as u128 * den as u128;
                lhs >= rhs
            }
            Threshold::Approx(v) => new.to_f64() >= reference.to_f64() - v - 1e-9,
        }
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Threshold::Exact { num, den } => write!(f, "{num}/{den}"),
            Threshold::Approx(v) => write!(f, "{v}"),
        }
    }
}

/// Jaccard's coefficient |a ∩ b| / |a ∪ b| as an exact rational.
///
/// Two empty sets score 1 by convention; valid redescription supports are
/// proper non-empty subsets, so mining never reaches that case.
pub fn jaccard(a: &BitSet, b: &BitSet) -> Coefficient {
    let union = a.union_count(b);
    if union == 0 {
        return Coefficient::one();
    }
    Coefficient::new(a.intersect_count(b) as u64, union as u64)
}

/// Jaccard's coefficient of the two complements.
pub fn complement_jaccard(a: &BitSet, b: &BitSet) -> Coefficient {
    jaccard(&a.not(), &b.not())
}

fn entropy_terms(probabilities: impl IntoIterator<Item = f64>) -> f64 {
    probabilities
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// The entropy distance H(A,B) − I(A;B) = H(A|B) + H(B|A), in bits, between
/// the membership indicators of `a` and `b` under one uniform draw from the
/// universe. Zero when the sets are equal (and also when they are exact
/// complements: each indicator then determines the other).
pub fn entropy_distance(a: &BitSet, b: &BitSet, universe_len: usize) -> f64 {
    assert!(universe_len > 0, "entropy distance over an empty universe");
    let n = universe_len as f64;
    let n11 = a.intersect_count(b) as f64;
    let n10 = a.count() as f64 - n11;
    let n01 = b.count() as f64 - n11;
    let n00 = n - n11 - n10 - n01;
    let h_joint = entropy_terms([n11 / n, n10 / n, n01 / n, n00 / n]);
    let h_a = entropy_terms([(n11 + n10) / n, (n01 + n00) / n]);
    let h_b = entropy_terms([(n11 + n01) / n, (n10 + n00) / n]);
    // distance = 2·H(A,B) − H(A) − H(B); clamp float dust.
    (2.0 * h_joint - h_a - h_b).max(0.0)
}

/// A mined equivalence: two expressions, one per vocabulary, with their
/// supports, scores and provenance.
#[derive(Clone, Debug)]
pub struct Redescription {
    pub lhs: SetExpression,
    pub rhs: SetExpression,
    pub jaccard: Coefficient,
    pub complement_jaccard: Coefficient,
    pub lhs_support: BitSet,
    pub rhs_support: BitSet,
    pub iteration: usize,
    pub seed: u64,
}

impl Redescription {
    /// Builds the record from expressions, recomputing both coefficients
    /// from freshly evaluated supports.
    pub fn evaluate(
        lhs: SetExpression,
        rhs: SetExpression,
        store: &Store,
        iteration: usize,
        seed: u64,
    ) -> Result<Redescription> {
        let lhs_support = lhs.evaluate(store)?;
        let rhs_support = rhs.evaluate(store)?;
        Ok(Redescription {
            jaccard: jaccard(&lhs_support, &rhs_support),
            complement_jaccard: complement_jaccard(&lhs_support, &rhs_support),
            lhs,
            rhs,
            lhs_support,
            rhs_support,
            iteration,
            seed,
        })
    }
}
