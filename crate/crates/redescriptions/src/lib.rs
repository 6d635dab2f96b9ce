//! Redescription mining: finding pairs of set-theoretic expressions, one
//! per descriptor vocabulary, that describe (approximately) the same subset
//! of a universal object set.
//!
//! The miner grows two depth-limited classification trees in alternation,
//! each over one vocabulary's membership features, matched at their leaves:
//! one tree's leaf partition becomes the class labeling the other tree is
//! grown against. Matched leaf pairs whose expressions agree at or above a
//! Jaccard threshold, in both the stated and the complementary form, are
//! emitted, tightened, and fed back into an exploration policy that retires
//! used-up descriptors until the vocabularies are exhausted.

pub mod adtree;
pub mod bitset;
pub mod canon;
pub mod cli;
pub mod engine;
pub mod error;
pub mod expr;
pub mod oracle;
pub mod parse;
pub mod report;
pub mod store;
pub mod tighten;
pub mod tree;

pub use engine::{run, MinerConfig};
pub use error::{Error, Result};
pub use expr::{Coefficient, Redescription, SetExpression, Threshold};
pub use store::{DescriptorFamily, FamilyId, ObjectUniverse, Store};
