//! Post-acceptance simplification: drop literals and narrow range
//! descriptors wherever doing so does not degrade the Jaccard coefficient
//! beyond the configured tolerance, re-verifying the full acceptance
//! predicate (threshold, complement, support bounds) after every change.

use crate::canon::canonicalize;
use crate::error::Result;
use crate::expr::{complement_jaccard, jaccard, Coefficient, Redescription, SetExpression, Threshold};
use crate::store::{FamilyId, Store};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TightenAction {
    DropLiteral,
    NarrowRange,
}

impl std::fmt::Display for TightenAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TightenAction::DropLiteral => write!(f, "drop-literal"),
            TightenAction::NarrowRange => write!(f, "narrow-range"),
        }
    }
}

/// One kept change, for the `--explain` trace.
#[derive(Clone, Debug)]
pub struct TightenStep {
    pub action: TightenAction,
    pub side: FamilyId,
    pub term: String,
    pub jaccard_before: Coefficient,
    pub jaccard_after: Coefficient,
}

#[derive(Clone, Debug)]
pub struct TightenResult {
    pub original: Redescription,
    pub tightened: Redescription,
    pub steps: Vec<TightenStep>,
}

#[derive(Clone, Copy, Debug)]
pub struct TightenParams {
    pub theta: Threshold,
    pub tolerance: Threshold,
    pub min_support: usize,
}

/// A tentative edit of one side's expression.
enum Edit {
    Drop { conjunct: usize, literal: usize },
    Narrow { conjunct: usize, literal: usize, replacement: usize },
}

fn apply_edit(expr: &SetExpression, edit: &Edit) -> Option<SetExpression> {
    let mut conjuncts = expr.conjuncts.clone();
    match *edit {
        Edit::Drop { conjunct, literal } => {
            conjuncts[conjunct].remove(literal);
            if conjuncts[conjunct].is_empty() {
                conjuncts.remove(conjunct);
            }
            if conjuncts.is_empty() {
                return None; // cannot empty the whole expression
            }
        }
        Edit::Narrow {
            conjunct,
            literal,
            replacement,
        } => {
            let lit = &mut conjuncts[conjunct][literal];
            lit.index = replacement;
        }
    }
    Some(SetExpression::from_conjuncts(expr.family, conjuncts))
}

/// Greedy deterministic loop: left side before right side, conjuncts and
/// literals in canonical order, the drop attempted before the narrowing.
/// A change is kept only if the new coefficient stays within `tolerance` of
/// both the running and the original coefficient and the redescription
/// still passes acceptance in full. Kept changes restart the scan; the
/// result is an identity transform when nothing tightens.
pub fn tighten(r: &Redescription, store: &Store, params: &TightenParams) -> Result<TightenResult> {
    let original = r.clone();
    let mut current = r.clone();
    let mut steps: Vec<TightenStep> = Vec::new();
    let n = store.universe.len();

    'restart: loop {
        for side in [FamilyId::X, FamilyId::Y] {
            let expr = match side {
                FamilyId::X => &current.lhs,
                FamilyId::Y => &current.rhs,
            };
            let family = store.family(side);
            for ci in 0..expr.conjuncts.len() {
                for li in 0..expr.conjuncts[ci].len() {
                    let lit = expr.conjuncts[ci][li];
                    let mut edits = vec![Edit::Drop {
                        conjunct: ci,
                        literal: li,
                    }];
                    if let Some(narrower) = family.next_narrower_bucket(lit.index) {
                        edits.push(Edit::Narrow {
                            conjunct: ci,
                            literal: li,
                            replacement: narrower,
                        });
                    }
                    for edit in &edits {
                        let Some(candidate) = apply_edit(expr, edit) else {
                            continue;
                        };
                        let candidate = canonicalize(&candidate)?;
                        if let Some(next) =
                            try_change(&current, &original, side, candidate, store, params, n)?
                        {
                            let term = match edit {
                                Edit::Drop { .. } => {
                                    let name = &family.descriptor(lit.index).name;
                                    if lit.negated {
                                        format!("!{name}")
                                    } else {
                                        name.clone()
                                    }
                                }
                                Edit::Narrow { replacement, .. } => format!(
                                    "{}→{}",
                                    family.descriptor(lit.index).name,
                                    family.descriptor(*replacement).name
                                ),
                            };
                            steps.push(TightenStep {
                                action: match edit {
                                    Edit::Drop { .. } => TightenAction::DropLiteral,
                                    Edit::Narrow { .. } => TightenAction::NarrowRange,
                                },
                                side,
                                term,
                                jaccard_before: current.jaccard,
                                jaccard_after: next.jaccard,
                            });
                            current = next;
                            continue 'restart;
                        }
                    }
                }
            }
        }
        break;
    }

    Ok(TightenResult {
        original,
        tightened: current,
        steps,
    })
}

/// Evaluates one edited side and re-checks the full acceptance predicate.
fn try_change(
    current: &Redescription,
    original: &Redescription,
    side: FamilyId,
    candidate: SetExpression,
    store: &Store,
    params: &TightenParams,
    n: usize,
) -> Result<Option<Redescription>> {
    let support = candidate.evaluate(store)?;
    let count = support.count();
    if count < params.min_support || count + params.min_support > n {
        return Ok(None);
    }
    let (lhs, rhs, lhs_support, rhs_support) = match side {
        FamilyId::X => (
            candidate,
            current.rhs.clone(),
            support,
            current.rhs_support.clone(),
        ),
        FamilyId::Y => (
            current.lhs.clone(),
            candidate,
            current.lhs_support.clone(),
            support,
        ),
    };
    let j = jaccard(&lhs_support, &rhs_support);
    if !params.tolerance.within_drop(j, current.jaccard)
        || !params.tolerance.within_drop(j, original.jaccard)
        || !params.theta.met_by(j)
    {
        return Ok(None);
    }
    let cj = complement_jaccard(&lhs_support, &rhs_support);
    if !params.theta.met_by(cj) {
        return Ok(None);
    }
    Ok(Some(Redescription {
        lhs,
        rhs,
        jaccard: j,
        complement_jaccard: cj,
        lhs_support,
        rhs_support,
        iteration: current.iteration,
        seed: current.seed,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitset::BitSet;
    use crate::expr::Literal;
    use crate::store::{bucketize_numeric, BucketSpec, Descriptor, DescriptorFamily, NumericMatrix, ObjectUniverse};

    fn params(theta_num: u64, theta_den: u64) -> TightenParams {
        TightenParams {
            theta: Threshold::Exact {
                num: theta_num,
                den: theta_den,
            },
            tolerance: Threshold::ZERO,
            min_support: 1,
        }
    }

    /// D1 ⊂ D2, so D2 is redundant inside D1 & D2.
    fn redundant_term_store() -> Store {
        let universe = ObjectUniverse::from_names(["a", "b", "c", "d"]).unwrap();
        let mut x = DescriptorFamily::new(FamilyId::X);
        for (name, members) in [("D1", vec![0usize, 1]), ("D2", vec![0, 1, 2]), ("Dr", vec![2, 3])] {
            x.push(Descriptor {
                name: name.into(),
                members: BitSet::from_positions(4, members),
                source_tag: String::new(),
                bucket: None,
            })
            .unwrap();
        }
        let mut y = DescriptorFamily::new(FamilyId::Y);
        for (name, members) in [("F", vec![0usize, 1]), ("Fr", vec![1, 2, 3])] {
            y.push(Descriptor {
                name: name.into(),
                members: BitSet::from_positions(4, members),
                source_tag: String::new(),
                bucket: None,
            })
            .unwrap();
        }
        Store::new(universe, x, y)
    }

    #[test]
    fn drops_a_redundant_term() {
        let store = redundant_term_store();
        let lhs = SetExpression::from_conjuncts(
            FamilyId::X,
            vec![vec![Literal::positive(0), Literal::positive(1)]],
        );
        let rhs = SetExpression::literal(FamilyId::Y, 0);
        let red = Redescription::evaluate(lhs, rhs, &store, 1, 0).unwrap();
        assert_eq!(red.jaccard, Coefficient::one());
        let result = tighten(&red, &store, &params(1, 2)).unwrap();
        assert_eq!(result.tightened.lhs.render(&store.x), "D1");
        assert_eq!(result.tightened.jaccard, Coefficient::one());
        assert_eq!(result.steps.len(), 1);
        assert_eq!(result.steps[0].action, TightenAction::DropLiteral);
        assert_eq!(result.steps[0].term, "D2");
        // literal count never increases
        assert!(result.tightened.lhs.literal_count() <= red.lhs.literal_count());
    }

    #[test]
    fn identity_when_nothing_tightens() {
        let store = redundant_term_store();
        // D1 ⟺ F is already minimal: dropping the only literal on either
        // side would empty the expression.
        let red = Redescription::evaluate(
            SetExpression::literal(FamilyId::X, 0),
            SetExpression::literal(FamilyId::Y, 0),
            &store,
            1,
            0,
        )
        .unwrap();
        let result = tighten(&red, &store, &params(1, 2)).unwrap();
        assert!(result.steps.is_empty());
        assert_eq!(result.tightened.lhs, red.lhs);
        assert_eq!(result.tightened.rhs, red.rhs);
    }

    #[test]
    fn narrows_a_range_descriptor() {
        // lhs "v∈[0,2]" has support {a,b,c}, the configured narrower bucket
        // "v∈[0,1]" has support {a,b}, and the rhs support is {a,b}:
        // narrowing lifts J from 2/3 to 1 and is kept.
        let universe = ObjectUniverse::from_names(["a", "b", "c", "d"]).unwrap();
        let matrix = NumericMatrix {
            columns: vec!["v".into()],
            values: vec![vec![0.5, 1.0, 2.0, -3.0]],
        };
        let specs = vec![BucketSpec {
            variable: "v".into(),
            boundaries: vec![1.0, 2.0],
        }];
        let (mut x, dropped) = bucketize_numeric(&matrix, &specs, &universe, FamilyId::X).unwrap();
        assert!(dropped.is_empty());
        x.push(Descriptor {
            name: "rest_x".into(),
            members: BitSet::from_positions(4, [3]),
            source_tag: String::new(),
            bucket: None,
        })
        .unwrap();
        let mut y = DescriptorFamily::new(FamilyId::Y);
        for (name, members) in [("F", vec![0usize, 1]), ("rest_y", vec![2, 3])] {
            y.push(Descriptor {
                name: name.into(),
                members: BitSet::from_positions(4, members),
                source_tag: String::new(),
                bucket: None,
            })
            .unwrap();
        }
        let store = Store::new(universe, x, y);

        let red = Redescription::evaluate(
            SetExpression::literal(FamilyId::X, 1), // v∈[0,2] = {a,b,c}
            SetExpression::literal(FamilyId::Y, 0), // F = {a,b}
            &store,
            2,
            7,
        )
        .unwrap();
        assert_eq!(red.jaccard, Coefficient::new(2, 3));
        let result = tighten(&red, &store, &params(1, 2)).unwrap();
        assert_eq!(result.tightened.lhs.render(&store.x), "v∈[0,1]");
        assert_eq!(result.tightened.jaccard, Coefficient::one());
        assert!(result
            .steps
            .iter()
            .any(|s| s.action == TightenAction::NarrowRange && s.term == "v∈[0,2]→v∈[0,1]"));
    }

    #[test]
    fn tighten_is_idempotent() {
        let store = redundant_term_store();
        let lhs = SetExpression::from_conjuncts(
            FamilyId::X,
            vec![vec![Literal::positive(0), Literal::positive(1)]],
        );
        let rhs = SetExpression::literal(FamilyId::Y, 0);
        let red = Redescription::evaluate(lhs, rhs, &store, 1, 0).unwrap();
        let once = tighten(&red, &store, &params(1, 2)).unwrap();
        let twice = tighten(&once.tightened, &store, &params(1, 2)).unwrap();
        assert!(twice.steps.is_empty());
        assert_eq!(once.tightened.lhs, twice.tightened.lhs);
        assert_eq!(once.tightened.rhs, twice.tightened.rhs);
    }
}
