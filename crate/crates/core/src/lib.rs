//! Analysis of per-cell execution logs captured from computational notebooks.
//!
//! A log holds one record per cell run (source, start time, outcome). From a
//! cohort of logs plus each user's submitted notebook this crate computes:
//!
//! * how many runs never made it into the final notebook ([`matching`]),
//! * the split between clean runs, parse failures and runtime errors
//!   ([`errors`]),
//! * per-user timelines and gap-based sessions ([`timeline`]),
//! * how often each dataset column is referenced ([`references`]),
//! * the task phase of every run from literal code patterns ([`phases`]),
//! * per-user KPIs built on all of the above ([`kpi`]),
//!
//! and renders them as Markdown, CSV, JSON and SVG ([`report`]).
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod error;
pub mod errors;
pub mod ingest;
pub mod kpi;
pub mod matching;
pub mod model;
pub mod percent;
pub mod phases;
pub mod pipeline;
pub mod references;
pub mod report;
pub mod timeline;

pub use error::{Error, Result};
pub use model::{
    canonicalize_source, CellRun, ErrorInfo, ErrorKind, ExecutionLog, FinalNotebook, Outcome,
    Phase, Schema,
};
