//! Trace serialization.
//!
//! Traces are newline-delimited JSON, one record per line, with fixed
//! field names: `step`, `act` (t/h/e per vertex), `choice` (0/1/. per
//! vertex), `cmd` (p/0/1 per vertex), `prio` (array of "j>k" strings,
//! dominator first) and `mode`. Distributed records additionally carry
//! `dvec` (one dominance bit string per vertex), and the first record
//! carries `order` (each vertex's neighbour list) so a distributed run is
//! reproducible from its trace alone. A flattened CSV export is available
//! for plotting.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{Architecture, Dynamics, StepRecord, Trace};
use crate::distributed::DominanceVector;
use crate::graph::{VertexId, VertexMap};
use crate::hub::{ActivityMap, CommandMap, MaybeChoiceMap, PriorityMap};
use crate::philosopher::Code;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: invalid {field} field")]
    BadField { line: usize, field: &'static str },
    #[error("line {line}: fields disagree on the vertex count")]
    WidthMismatch { line: usize },
}

#[derive(Serialize, Deserialize)]
struct WireRecord {
    step: u64,
    act: String,
    choice: String,
    cmd: String,
    prio: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dvec: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<Vec<Vec<VertexId>>>,
    mode: String,
}

fn mode_of(text: &str) -> Option<(Dynamics, Architecture)> {
    let (dynamics, architecture) = text.split_once('-')?;
    let dynamics = match dynamics {
        "clocked" => Dynamics::Clocked,
        "polled" => Dynamics::Polled,
        _ => return None,
    };
    let architecture = match architecture {
        "centralized" => Architecture::Centralized,
        "distributed" => Architecture::Distributed,
        _ => return None,
    };
    Some((dynamics, architecture))
}

fn to_wire(record: &StepRecord, order: Option<&Vec<Vec<VertexId>>>) -> WireRecord {
    WireRecord {
        step: record.step,
        act: record.activities.code_string(),
        choice: record.choices.code_string(),
        cmd: record.commands.code_string(),
        prio: record.priorities.to_strings(),
        dvec: record
            .dominance
            .as_ref()
            .map(|vs| vs.values().iter().map(DominanceVector::bit_string).collect()),
        order: order.cloned(),
        mode: record.mode_string(),
    }
}

fn from_wire(wire: WireRecord, line: usize) -> Result<(StepRecord, Option<Vec<Vec<VertexId>>>), TraceError> {
    let activities = ActivityMap::from_code_string(&wire.act)
        .ok_or(TraceError::BadField { line, field: "act" })?;
    let n = activities.vertex_count();
    let choices = MaybeChoiceMap::from_code_string(&wire.choice)
        .ok_or(TraceError::BadField { line, field: "choice" })?;
    let commands = CommandMap::from_code_string(&wire.cmd)
        .ok_or(TraceError::BadField { line, field: "cmd" })?;
    if choices.vertex_count() != n || commands.vertex_count() != n {
        return Err(TraceError::WidthMismatch { line });
    }
    let priorities = PriorityMap::from_strings(n, &wire.prio)
        .map_err(|_| TraceError::BadField { line, field: "prio" })?;
    let dominance = match wire.dvec {
        None => None,
        Some(strings) => {
            if strings.len() != n {
                return Err(TraceError::WidthMismatch { line });
            }
            let vectors = strings
                .iter()
                .map(|s| DominanceVector::from_bit_string(s))
                .collect::<Option<Vec<_>>>()
                .ok_or(TraceError::BadField { line, field: "dvec" })?;
            Some(VertexMap::from_values(vectors))
        }
    };
    let (dynamics, architecture) =
        mode_of(&wire.mode).ok_or(TraceError::BadField { line, field: "mode" })?;
    Ok((
        StepRecord {
            step: wire.step,
            activities,
            choices,
            commands,
            priorities,
            dominance,
            dynamics,
            architecture,
        },
        wire.order,
    ))
}

/// Write records as NDJSON. The neighbour order, when given, is attached
/// to the first record.
pub fn write_ndjson<W: Write>(
    mut out: W,
    records: &[StepRecord],
    order: Option<&Vec<Vec<VertexId>>>,
) -> Result<(), TraceError> {
    for (i, record) in records.iter().enumerate() {
        let wire = to_wire(record, if i == 0 { order } else { None });
        let line = serde_json::to_string(&wire).map_err(|source| TraceError::Json { line: i + 1, source })?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Serialize a whole run.
pub fn trace_to_ndjson(trace: &Trace) -> Result<String, TraceError> {
    let mut buffer = Vec::new();
    write_ndjson(&mut buffer, &trace.records, trace.order.as_ref())?;
    Ok(String::from_utf8(buffer).expect("NDJSON is UTF-8"))
}

/// Parsed trace file: the records plus the neighbour order if one was
/// recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub records: Vec<StepRecord>,
    pub order: Option<Vec<Vec<VertexId>>>,
}

/// Read an NDJSON trace. Blank lines are ignored.
pub fn read_ndjson<R: BufRead>(reader: R) -> Result<TraceFile, TraceError> {
    let mut records = Vec::new();
    let mut order = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: WireRecord = serde_json::from_str(&line)
            .map_err(|source| TraceError::Json { line: i + 1, source })?;
        let (record, rec_order) = from_wire(wire, i + 1)?;
        if rec_order.is_some() {
            order = rec_order;
        }
        records.push(record);
    }
    Ok(TraceFile { records, order })
}

pub fn parse_ndjson(text: &str) -> Result<TraceFile, TraceError> {
    read_ndjson(text.as_bytes())
}

/// Flattened per-vertex CSV (one row per step and vertex) for plotting.
pub fn write_csv<W: Write>(mut out: W, records: &[StepRecord]) -> Result<(), TraceError> {
    writeln!(out, "step,vertex,activity,choice,command,is_top")?;
    for record in records {
        let top = crate::hub::top_vertices(&record.priorities);
        for (j, a) in record.activities.iter() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                record.step,
                j,
                a.code(),
                record.choices.get(j).code(),
                record.commands.get(j).code(),
                u8::from(top.contains(&j)),
            )?;
        }
    }
    Ok(())
}
