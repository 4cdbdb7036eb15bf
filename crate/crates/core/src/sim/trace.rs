//! Line-delimited event traces.
//!
//! Each line is `time<TAB>kind<TAB>ue<TAB>update_id`. `ue` is the 0-based UE
//! index or `-` for events that concern no single UE (generation, idle,
//! broadcast start). `kind` is one of `generate`, `serve_start`,
//! `serve_end_ok`, `serve_end_fail`, `preempt` and `idle`. A broadcast
//! transmission produces one `serve_start` and one `serve_end_*` per UE.

use std::fmt;
use std::io::{self, Write};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Generate,
    ServeStart,
    ServeEnd { success: bool },
    /// The running transmission was abandoned for a newer update.
    Preempt,
    Idle,
}

impl TraceKind {
    pub fn label(self) -> &'static str {
        match self {
            TraceKind::Generate => "generate",
            TraceKind::ServeStart => "serve_start",
            TraceKind::ServeEnd { success: true } => "serve_end_ok",
            TraceKind::ServeEnd { success: false } => "serve_end_fail",
            TraceKind::Preempt => "preempt",
            TraceKind::Idle => "idle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub ue: Option<usize>,
    /// Sequence number of the status update; `None` for idle.
    pub update_id: Option<u64>,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t", self.time, self.kind.label())?;
        match self.ue {
            Some(k) => write!(f, "{k}\t")?,
            None => f.write_str("-\t")?,
        }
        match self.update_id {
            Some(id) => write!(f, "{id}"),
            None => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EventTrace {
    pub events: Vec<TraceEvent>,
}

impl EventTrace {
    pub fn write_lines<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.events {
            writeln!(out, "{e}")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}
