//! Output writers: JSON-lines and paper-style text for the redescription
//! list, plus the human-readable run log.
//!
//! The JSON-lines and text payloads are byte-reproducible for a fixed seed
//! and inputs; wall-clock timing only ever appears in the run log.

use std::io::Write;
use std::time::Duration;

use serde::Serialize;

use crate::engine::MinedRedescription;
use crate::error::Result;
use crate::store::Store;
use crate::tighten::TightenStep;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    IdleLimit,
    MaxAlternations,
    NoAdmissibleFeatures,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopReason::IdleLimit => write!(f, "idle limit reached"),
            StopReason::MaxAlternations => write!(f, "alternation cap reached"),
            StopReason::NoAdmissibleFeatures => write!(f, "no admissible features left"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IterationRow {
    pub iteration: usize,
    pub side: String,
    pub admissible_features: usize,
    pub candidates: usize,
    pub accepted: usize,
    pub idle_after: usize,
    pub active_x: usize,
    pub active_y: usize,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config_echo: String,
    pub rows: Vec<IterationRow>,
    pub stop: StopReason,
    pub total_emitted: usize,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn write_log(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "config: {}", self.config_echo)?;
        writeln!(
            w,
            "{:>5} {:>4} {:>9} {:>10} {:>8} {:>5} {:>8} {:>8}",
            "iter", "side", "features", "candidates", "accepted", "idle", "active_x", "active_y"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{:>5} {:>4} {:>9} {:>10} {:>8} {:>5} {:>8} {:>8}",
                r.iteration,
                r.side,
                r.admissible_features,
                r.candidates,
                r.accepted,
                r.idle_after,
                r.active_x,
                r.active_y
            )?;
        }
        writeln!(
            w,
            "stopped: {} after {} alternations, {} redescriptions, {:.3}s",
            self.stop,
            self.rows.len(),
            self.total_emitted,
            self.elapsed.as_secs_f64()
        )?;
        Ok(())
    }
}

#[derive(Serialize)]
struct StepRecord {
    action: String,
    side: String,
    term: String,
    jaccard_before: String,
    jaccard_after: String,
}

impl StepRecord {
    fn from(step: &TightenStep) -> Self {
        StepRecord {
            action: step.action.to_string(),
            side: step.side.to_string(),
            term: step.term.clone(),
            jaccard_before: step.jaccard_before.to_string(),
            jaccard_after: step.jaccard_after.to_string(),
        }
    }
}

#[derive(Serialize)]
struct RedescriptionRecord<'a> {
    lhs: String,
    rhs: String,
    jaccard: String,
    jaccard_float: f64,
    complement_jaccard: String,
    complement_jaccard_float: f64,
    lhs_support: Vec<&'a str>,
    rhs_support: Vec<&'a str>,
    iteration: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tightening: Option<Vec<StepRecord>>,
}

/// One JSON object per redescription, one per line.
pub fn write_jsonl(
    w: &mut impl Write,
    mined: &[MinedRedescription],
    store: &Store,
    explain: bool,
) -> Result<()> {
    for m in mined {
        let r = &m.redescription;
        let record = RedescriptionRecord {
            lhs: r.lhs.render(&store.x),
            rhs: r.rhs.render(&store.y),
            jaccard: r.jaccard.to_string(),
            jaccard_float: r.jaccard.to_f64(),
            complement_jaccard: r.complement_jaccard.to_string(),
            complement_jaccard_float: r.complement_jaccard.to_f64(),
            lhs_support: store.universe.names_of(&r.lhs_support),
            rhs_support: store.universe.names_of(&r.rhs_support),
            iteration: r.iteration,
            seed: r.seed,
            tightening: if explain {
                Some(m.tighten_steps.iter().map(StepRecord::from).collect())
            } else {
                None
            },
        };
        serde_json::to_writer(&mut *w, &record)
            .map_err(|e| crate::error::Error::Internal(format!("serialize: {e}")))?;
        writeln!(w)?;
    }
    Ok(())
}

/// The listing style used in write-ups: `E ⟺ F (J=...)`.
pub fn write_text(w: &mut impl Write, mined: &[MinedRedescription], store: &Store) -> Result<()> {
    for m in mined {
        let r = &m.redescription;
        writeln!(
            w,
            "{} ⟺ {}  (J={}, complement J={}, support {}↔{}, iteration {})",
            r.lhs.render(&store.x),
            r.rhs.render(&store.y),
            r.jaccard,
            r.complement_jaccard,
            r.lhs_support.count(),
            r.rhs_support.count(),
            r.iteration,
        )?;
    }
    Ok(())
}
