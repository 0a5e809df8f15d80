//! Resource arbitration among conflicting processes, built as feedback
//! control and checked empirically.
//!
//! A set of philosophers sits on a conflict graph; adjacent ones must
//! never eat at once, and nobody may starve. This crate models each
//! philosopher as a small transition system, adds either one centralised
//! hub controller or one local controller per vertex, runs the whole
//! composite in deterministic lockstep, and verifies the safety and
//! progress properties of the arbitration on every recorded trace.
//!
//! Module map:
//!
//! * [`system`] — generic finite transition systems, interconnects,
//!   composition, clocks and bounded behaviour enumeration.
//! * [`philosopher`] — the activity/choice/command alphabets, the
//!   philosopher variants and the single-diner controller.
//! * [`graph`] — conflict graphs and per-vertex maps.
//! * [`hub`] — the centralised controller: edge orientations, the
//!   re-orientation rule and the command law.
//! * [`distributed`] — per-vertex controllers over dominance bit vectors,
//!   plus the scatter/gather encoding tying them to the hub's state.
//! * [`stream`] — reproducible choice streams (scripted, seeded,
//!   bounded-eating).
//! * [`executor`] — clocked and polled lockstep runs under either
//!   architecture.
//! * [`metrics`] — per-step progress metrics that bound hungry waits.
//! * [`invariants`] — the property-check engine over recorded traces.
//! * [`trace`] — NDJSON and CSV trace serialization.

pub mod distributed;
pub mod executor;
pub mod graph;
pub mod hub;
pub mod invariants;
mod masks;
pub mod metrics;
pub mod philosopher;
mod rng;
pub mod stream;
pub mod system;
pub mod trace;

pub use executor::{run, run_clocked, run_polled, Architecture, Dynamics, StepRecord, Trace};
pub use graph::{parse_graph, ConflictGraph, VertexId, VertexMap};
pub use hub::{ActivityMap, ChoiceMap, CommandMap, MaybeChoiceMap, PriorityMap};
pub use invariants::{check_equivalence, check_run, check_trace, CheckOptions, InvariantReport};
pub use philosopher::{Activity, Choice, Command, MaybeChoice};
pub use stream::StreamSpec;
