//! Which logged runs survive into the submitted notebook.
//!
//! A run is a final cell when its canonical source equals the canonical
//! source of some code cell of the final notebook; otherwise it is hidden.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{canonicalize_source, ExecutionLog, FinalNotebook};
use crate::percent::{fraction, percent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MatchFlag {
    FinalCell,
    HiddenCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub user_id: String,
    /// One flag per run, in log order.
    pub flags: Vec<MatchFlag>,
    pub hidden_count: u64,
    pub final_count: u64,
    pub total: u64,
}

impl MatchResult {
    fn from_flags(user_id: &str, flags: Vec<MatchFlag>) -> Self {
        let final_count = flags.iter().filter(|f| **f == MatchFlag::FinalCell).count() as u64;
        let total = flags.len() as u64;
        MatchResult {
            user_id: user_id.to_string(),
            flags,
            hidden_count: total - final_count,
            final_count,
            total,
        }
    }

    /// `None` for an empty log.
    pub fn hidden_rate(&self) -> Option<f64> {
        fraction(self.hidden_count, self.total)
    }

    pub fn final_rate(&self) -> Option<f64> {
        fraction(self.final_count, self.total)
    }
}

pub fn match_runs(log: &ExecutionLog, final_notebook: &FinalNotebook) -> MatchResult {
    let finals: HashSet<String> = final_notebook
        .code_cells
        .iter()
        .map(|c| canonicalize_source(c))
        .collect();
    let flags = log
        .runs()
        .iter()
        .map(|run| {
            if finals.contains(&canonicalize_source(&run.source)) {
                MatchFlag::FinalCell
            } else {
                MatchFlag::HiddenCell
            }
        })
        .collect();
    MatchResult::from_flags(log.user_id(), flags)
}

/// Pooled hidden/final split over every run of every user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HiddenDistribution {
    pub hidden: u64,
    pub final_cells: u64,
    pub total: u64,
}

impl HiddenDistribution {
    pub fn hidden_pct(&self) -> f64 {
        percent(self.hidden, self.total).unwrap_or(0.0)
    }

    pub fn final_pct(&self) -> f64 {
        percent(self.final_cells, self.total).unwrap_or(0.0)
    }
}

/// Pools counts over all results; percentages are over the union of runs,
/// not averaged per user.
pub fn pooled_hidden_distribution(results: &[MatchResult]) -> Result<HiddenDistribution> {
    let (hidden, final_cells) = results
        .iter()
        .fold((0, 0), |(h, f), r| (h + r.hidden_count, f + r.final_count));
    let total = hidden + final_cells;
    if total == 0 {
        return Err(Error::NoRuns);
    }
    Ok(HiddenDistribution {
        hidden,
        final_cells,
        total,
    })
}
