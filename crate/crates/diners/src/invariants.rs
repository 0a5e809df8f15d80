//! Trajectory invariant checking.
//!
//! Every safety and progress property the controller is supposed to
//! enforce is checked here against recorded traces, each as a named check
//! with its first violating step. The properties concern polled states;
//! clocked traces are therefore checked on their odd-cycle sample (plus a
//! safety sweep over every cycle, which must also hold).

use std::fmt;

use thiserror::Error;

use crate::distributed::NeighbourOrder;
use crate::executor::{Dynamics, StepRecord, Trace};
use crate::graph::{ConflictGraph, VertexId, VertexMap};
use crate::hub::PriorityMap;
use crate::masks::{activity_mask, bit, dominator_masks, subordinate_masks, transitive_closure,
    MAX_MASK_VERTICES};
use crate::metrics::MetricTracker;
use crate::philosopher::{Activity, Command};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("cannot check an empty trace")]
    EmptyTrace,
    #[error("the checker supports up to {max} vertices, got {got}")]
    TooManyVertices { got: usize, max: usize },
    #[error("record {index} covers {got} vertices, expected {expected}")]
    InconsistentWidth {
        index: usize,
        got: usize,
        expected: usize,
    },
}

/// One named check with its outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// First violation, with the step it happened at.
    pub detail: Option<String>,
}

impl CheckResult {
    fn pass(name: &'static str) -> Self {
        CheckResult {
            name,
            passed: true,
            detail: None,
        }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        CheckResult {
            name,
            passed: false,
            detail: Some(detail),
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dots = ".".repeat(36usize.saturating_sub(self.name.len()).max(2));
        if self.passed {
            write!(f, "{} {} pass", self.name, dots)
        } else {
            write!(
                f,
                "{} {} FAIL ({})",
                self.name,
                dots,
                self.detail.as_deref().unwrap_or("no detail")
            )
        }
    }
}

/// Outcome of a full trace check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantReport {
    pub checks: Vec<CheckResult>,
    /// Longest observed hungry stretch, in polled steps.
    pub max_hungry_wait: u64,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for check in &self.checks {
            writeln!(f, "{check}")?;
        }
        writeln!(f, "max hungry wait: {} steps", self.max_hungry_wait)
    }
}

/// Tunables for [`check_trace`].
#[derive(Debug, Clone, Default)]
pub struct CheckOptions {
    /// Eating bound of the stream that produced the trace. Enables the
    /// metric-decrease, bounded-eating and starvation checks.
    pub max_eat: Option<u32>,
    /// Hungry-wait bound for the starvation check; defaults to
    /// (n + 1) * (max_eat + 2), which generously covers the longest
    /// dominator chain.
    pub starvation_bound: Option<u64>,
    /// Neighbour order of a distributed run; enables the dominance
    /// compatibility check on the recorded vectors.
    pub order: Option<Vec<Vec<VertexId>>>,
}

impl CheckOptions {
    pub fn with_max_eat(max_eat: u32) -> Self {
        CheckOptions {
            max_eat: Some(max_eat),
            ..CheckOptions::default()
        }
    }
}

/// Check a whole trace. Violations are results, not errors; the `Err`
/// variant is reserved for traces the checker cannot process at all.
pub fn check_trace(records: &[StepRecord], opts: &CheckOptions) -> Result<InvariantReport, CheckError> {
    if records.is_empty() {
        return Err(CheckError::EmptyTrace);
    }
    let n = records[0].vertex_count();
    if n > MAX_MASK_VERTICES {
        return Err(CheckError::TooManyVertices {
            got: n,
            max: MAX_MASK_VERTICES,
        });
    }
    for (index, rec) in records.iter().enumerate() {
        if rec.vertex_count() != n {
            return Err(CheckError::InconsistentWidth {
                index,
                got: rec.vertex_count(),
                expected: n,
            });
        }
    }

    let clocked = records[0].dynamics == Dynamics::Clocked;
    let polled: Vec<&StepRecord> = if clocked {
        records.iter().skip(1).step_by(2).collect()
    } else {
        records.iter().collect()
    };

    let mut checks = Vec::new();
    checks.push(steps_contiguous(records));
    if clocked {
        checks.push(safety_all_cycles(records));
    }

    let views: Vec<View> = polled.iter().map(|r| View::of(r)).collect();
    checks.push(per_step(&polled, &views, "safety", |rec, v| {
        for j in 1..=v.n {
            if v.eating & bit(j) != 0 && v.adjacency[j] & v.eating != 0 {
                let k = (v.adjacency[j] & v.eating).trailing_zeros() as usize + 1;
                return Some(format!(
                    "step {}: adjacent vertices {j} and {k} both eating",
                    rec.step
                ));
            }
        }
        None
    }));
    checks.push(per_step(&polled, &views, "eaters-are-sinks", |rec, v| {
        for j in 1..=v.n {
            if v.eating & bit(j) != 0 && v.subordinates[j] != 0 {
                let k = v.subordinates[j].trailing_zeros() as usize + 1;
                return Some(format!(
                    "step {}: eating vertex {j} still dominates {k}",
                    rec.step
                ));
            }
        }
        None
    }));
    checks.push(per_step(&polled, &views, "hungry-dominate-thinkers", |rec, v| {
        for j in 1..=v.n {
            if v.hungry & bit(j) != 0 {
                let thinking_dominators = v.dominators[j] & v.thinking;
                if thinking_dominators != 0 {
                    let k = thinking_dominators.trailing_zeros() as usize + 1;
                    return Some(format!(
                        "step {}: hungry vertex {j} is dominated by thinking vertex {k}",
                        rec.step
                    ));
                }
            }
        }
        None
    }));
    checks.push(per_step(&polled, &views, "acyclicity", |rec, v| {
        // A cycle shows up as a vertex inside its own dominator closure.
        for j in 1..=v.n {
            if v.closure[j] & bit(j) != 0 {
                return Some(format!(
                    "step {}: vertex {j} transitively dominates itself",
                    rec.step
                ));
            }
        }
        None
    }));
    checks.push(per_step(&polled, &views, "hungry-always-forced", |rec, v| {
        for j in 1..=v.n {
            if v.hungry & bit(j) != 0 && *rec.commands.get(j) == Command::Pass {
                return Some(format!(
                    "step {}: hungry vertex {j} was passed its own choice",
                    rec.step
                ));
            }
        }
        None
    }));
    checks.push(per_pair(&polled, &views, "activity-transitions", |a, b, _, _| {
        for j in 1..=a.vertex_count() {
            let from = *a.activities.get(j);
            let to = *b.activities.get(j);
            if to != from.stay() && to != from.switch() {
                return Some(format!(
                    "step {}: vertex {j} jumped from {:?} to {:?}",
                    a.step, from, to
                ));
            }
        }
        None
    }));
    checks.push(per_pair(&polled, &views, "priority-holds", |a, b, va, _| {
        for j in 1..=va.n {
            let dominated_hungry = va.subordinates[j] & va.hungry;
            let mut rest = dominated_hungry;
            while rest != 0 {
                let k = rest.trailing_zeros() as usize + 1;
                rest &= rest - 1;
                if *b.activities.get(k) != Activity::Hungry {
                    return Some(format!(
                        "step {}: vertex {k} was hungry and dominated by {j} yet moved on",
                        a.step
                    ));
                }
            }
        }
        None
    }));
    checks.push(per_pair(&polled, &views, "subordinate-monotone", |a, _, va, vb| {
        for j in continuing_hungry(va, vb) {
            if va.subordinates[j] & !vb.subordinates[j] != 0 {
                return Some(format!(
                    "step {}: hungry vertex {j} lost a subordinate",
                    a.step
                ));
            }
        }
        None
    }));
    checks.push(per_pair(&polled, &views, "dominator-antimonotone", |a, _, va, vb| {
        for j in continuing_hungry(va, vb) {
            if vb.dominators[j] & !va.dominators[j] != 0 {
                return Some(format!(
                    "step {}: hungry vertex {j} gained a dominator",
                    a.step
                ));
            }
        }
        None
    }));
    checks.push(per_pair(&polled, &views, "top-continues", |a, _, va, vb| {
        for j in continuing_hungry(va, vb) {
            if va.dominators[j] == 0 && vb.dominators[j] != 0 {
                return Some(format!(
                    "step {}: hungry top vertex {j} stopped being top",
                    a.step
                ));
            }
        }
        None
    }));
    checks.push(per_pair(&polled, &views, "no-new-eating-neighbours", |a, _, va, vb| {
        for j in continuing_hungry(va, vb) {
            if va.dominators[j] == 0 {
                let before = va.adjacency[j] & va.eating;
                let after = vb.adjacency[j] & vb.eating;
                if after & !before != 0 {
                    let k = (after & !before).trailing_zeros() as usize + 1;
                    return Some(format!(
                        "step {}: neighbour {k} of continuing hungry top vertex {j} started eating",
                        a.step
                    ));
                }
            }
        }
        None
    }));
    checks.push(per_pair(&polled, &views, "transitive-dominator-shrinks", |a, _, va, vb| {
        for j in continuing_hungry(va, vb) {
            if vb.closure[j] & !va.closure[j] != 0 {
                return Some(format!(
                    "step {}: the dominator closure of hungry vertex {j} grew",
                    a.step
                ));
            }
        }
        None
    }));

    if let Some(order) = &opts.order {
        checks.push(dominance_compatibility(&polled, order));
    }

    let (starvation, max_hungry_wait) = hungry_waits(&polled, n, opts);
    if let Some(max_eat) = opts.max_eat {
        checks.push(bounded_eating(&polled, max_eat));
        checks.extend(metric_decrease(&polled, &views, max_eat));
        checks.push(starvation.expect("starvation check present when max_eat is known"));
    }

    Ok(InvariantReport {
        checks,
        max_hungry_wait,
    })
}

/// Convenience wrapper for a full [`Trace`], carrying its neighbour order
/// over to the dominance compatibility check.
pub fn check_run(trace: &Trace, opts: &CheckOptions) -> Result<InvariantReport, CheckError> {
    let mut opts = opts.clone();
    if opts.order.is_none() {
        opts.order = trace.order.clone();
    }
    let mut report = check_trace(&trace.records, &opts)?;
    let name = "no-eating-pair-updates";
    report.checks.push(if trace.eating_pair_updates == 0 {
        CheckResult::pass(name)
    } else {
        CheckResult::fail(
            name,
            format!(
                "the (eating, eating) dominance row fired {} times",
                trace.eating_pair_updates
            ),
        )
    });
    Ok(report)
}

/// Per-step equality of two runs fed the same choices: activities,
/// commands and the (gathered) edge orientation must coincide exactly.
pub fn check_equivalence(central: &[StepRecord], distributed: &[StepRecord]) -> CheckResult {
    let name = "distributed-equivalence";
    if central.len() != distributed.len() {
        return CheckResult::fail(
            name,
            format!(
                "trace lengths differ: {} vs {}",
                central.len(),
                distributed.len()
            ),
        );
    }
    for (c, d) in central.iter().zip(distributed) {
        if c.activities != d.activities {
            return CheckResult::fail(
                name,
                format!(
                    "step {}: activities differ ({} vs {})",
                    c.step,
                    c.activities.code_string(),
                    d.activities.code_string()
                ),
            );
        }
        if c.commands != d.commands {
            return CheckResult::fail(
                name,
                format!(
                    "step {}: commands differ ({} vs {})",
                    c.step,
                    c.commands.code_string(),
                    d.commands.code_string()
                ),
            );
        }
        if c.priorities != d.priorities {
            return CheckResult::fail(name, format!("step {}: priority maps differ", c.step));
        }
    }
    CheckResult::pass(name)
}

struct View {
    n: usize,
    eating: u64,
    hungry: u64,
    thinking: u64,
    dominators: Vec<u64>,
    subordinates: Vec<u64>,
    adjacency: Vec<u64>,
    closure: Vec<u64>,
}

impl View {
    fn of(rec: &StepRecord) -> View {
        let n = rec.vertex_count();
        let dominators = dominator_masks(&rec.priorities);
        let subordinates = subordinate_masks(&rec.priorities);
        let adjacency: Vec<u64> = (0..=n)
            .map(|j| dominators.get(j).unwrap_or(&0) | subordinates.get(j).unwrap_or(&0))
            .collect();
        let closure = transitive_closure(&dominators);
        View {
            n,
            eating: activity_mask(&rec.activities, Activity::Eating),
            hungry: activity_mask(&rec.activities, Activity::Hungry),
            thinking: activity_mask(&rec.activities, Activity::Thinking),
            dominators,
            subordinates,
            adjacency,
            closure,
        }
    }
}

/// Vertices hungry in both views.
fn continuing_hungry(a: &View, b: &View) -> impl Iterator<Item = usize> {
    let both = a.hungry & b.hungry;
    let n = a.n;
    (1..=n).filter(move |&j| both & bit(j) != 0)
}

fn per_step(
    records: &[&StepRecord],
    views: &[View],
    name: &'static str,
    check: impl Fn(&StepRecord, &View) -> Option<String>,
) -> CheckResult {
    for (rec, view) in records.iter().zip(views) {
        if let Some(detail) = check(rec, view) {
            return CheckResult::fail(name, detail);
        }
    }
    CheckResult::pass(name)
}

fn per_pair(
    records: &[&StepRecord],
    views: &[View],
    name: &'static str,
    check: impl Fn(&StepRecord, &StepRecord, &View, &View) -> Option<String>,
) -> CheckResult {
    for i in 1..records.len() {
        if let Some(detail) = check(records[i - 1], records[i], &views[i - 1], &views[i]) {
            return CheckResult::fail(name, detail);
        }
    }
    CheckResult::pass(name)
}

fn steps_contiguous(records: &[StepRecord]) -> CheckResult {
    let name = "steps-contiguous";
    for (i, rec) in records.iter().enumerate() {
        if rec.step != i as u64 {
            return CheckResult::fail(
                name,
                format!("record {i} carries step index {}", rec.step),
            );
        }
    }
    CheckResult::pass(name)
}

fn safety_all_cycles(records: &[StepRecord]) -> CheckResult {
    let name = "safety-all-cycles";
    for rec in records {
        let eating = activity_mask(&rec.activities, Activity::Eating);
        for (from, to) in rec.priorities.directed_edges() {
            if eating & bit(from) != 0 && eating & bit(to) != 0 {
                return CheckResult::fail(
                    name,
                    format!(
                        "cycle {}: adjacent vertices {from} and {to} both eating",
                        rec.step
                    ),
                );
            }
        }
    }
    CheckResult::pass(name)
}

fn dominance_compatibility(records: &[&StepRecord], order: &[Vec<VertexId>]) -> CheckResult {
    let name = "dominance-compatibility";
    let Some(first) = records.first() else {
        return CheckResult::pass(name);
    };
    let n = first.vertex_count();
    let edges: Vec<(VertexId, VertexId)> = first
        .priorities
        .directed_edges()
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    let graph = match ConflictGraph::new(n, edges) {
        Ok(g) => g,
        Err(e) => return CheckResult::fail(name, format!("priority domain is not a graph: {e}")),
    };
    let order = match NeighbourOrder::new(&graph, order.to_vec()) {
        Ok(o) => o,
        Err(e) => return CheckResult::fail(name, format!("invalid neighbour order: {e}")),
    };
    for rec in records {
        let Some(vectors) = &rec.dominance else {
            return CheckResult::fail(
                name,
                format!("step {}: record has no dominance vectors", rec.step),
            );
        };
        match crate::distributed::gather_priority(vectors, &order) {
            Ok(gathered) => {
                if gathered != rec.priorities {
                    return CheckResult::fail(
                        name,
                        format!(
                            "step {}: gathered vectors disagree with the recorded orientation",
                            rec.step
                        ),
                    );
                }
            }
            Err(e) => return CheckResult::fail(name, format!("step {}: {e}", rec.step)),
        }
    }
    CheckResult::pass(name)
}

fn bounded_eating(records: &[&StepRecord], max_eat: u32) -> CheckResult {
    let name = "bounded-eating";
    let n = records[0].vertex_count();
    let mut runs = vec![0u32; n + 1];
    for rec in records {
        for (j, a) in rec.activities.iter() {
            if *a == Activity::Eating {
                runs[j] += 1;
                if runs[j] > max_eat {
                    return CheckResult::fail(
                        name,
                        format!(
                            "step {}: vertex {j} ate for {} consecutive steps (bound {max_eat})",
                            rec.step, runs[j]
                        ),
                    );
                }
            } else {
                runs[j] = 0;
            }
        }
    }
    CheckResult::pass(name)
}

fn metric_decrease(records: &[&StepRecord], views: &[View], max_eat: u32) -> Vec<CheckResult> {
    let mut tracker = MetricTracker::new(max_eat);
    let mut eating_left = CheckResult::pass("eating-left-decreases");
    let mut ready_wait = CheckResult::pass("ready-wait-decreases");
    let mut top_distance = CheckResult::pass("top-distance-decreases");
    let mut previous: Option<crate::metrics::MetricSnapshot> = None;
    for (i, rec) in records.iter().enumerate() {
        // The tracker wants the original step indices only for ordering;
        // feed it our polled index.
        let mut renumbered = (*rec).clone();
        renumbered.step = i as u64;
        let snap = tracker
            .observe(&renumbered)
            .expect("vertex count already validated");
        if let Some(prev_snap) = &previous {
            let va = &views[i - 1];
            let vb = &views[i];
            for j in 1..=va.n {
                let b = bit(j);
                if va.eating & b != 0 && vb.eating & b != 0 && eating_left.passed {
                    let (before, after) = (*prev_snap.eating_left.get(j), *snap.eating_left.get(j));
                    if after >= before {
                        eating_left = CheckResult::fail(
                            "eating-left-decreases",
                            format!(
                                "step {}: vertex {j} kept eating but eating_left went {before} -> {after}",
                                records[i - 1].step
                            ),
                        );
                    }
                }
                if va.hungry & b != 0 && vb.hungry & b != 0 {
                    if va.dominators[j] == 0 && ready_wait.passed {
                        let (before, after) = (*prev_snap.ready_wait.get(j), *snap.ready_wait.get(j));
                        if after >= before {
                            ready_wait = CheckResult::fail(
                                "ready-wait-decreases",
                                format!(
                                    "step {}: hungry top vertex {j} stayed hungry but ready_wait went {before} -> {after}",
                                    records[i - 1].step
                                ),
                            );
                        }
                    }
                    if va.dominators[j] != 0 && top_distance.passed {
                        let (before, after) =
                            (*prev_snap.top_distance.get(j), *snap.top_distance.get(j));
                        if after >= before {
                            top_distance = CheckResult::fail(
                                "top-distance-decreases",
                                format!(
                                    "step {}: hungry non-top vertex {j} stayed hungry but top_distance went {before:?} -> {after:?}",
                                    records[i - 1].step
                                ),
                            );
                        }
                    }
                }
            }
        }
        previous = Some(snap);
    }
    vec![eating_left, ready_wait, top_distance]
}

/// Scan hungry intervals. Returns the starvation check (when a bound is
/// derivable) and the longest observed wait.
fn hungry_waits(
    records: &[&StepRecord],
    n: usize,
    opts: &CheckOptions,
) -> (Option<CheckResult>, u64) {
    let name = "starvation-freedom";
    let bound = opts.starvation_bound.or_else(|| {
        opts.max_eat
            .map(|max_eat| (n as u64 + 1) * (u64::from(max_eat) + 2))
    });
    let mut max_wait = 0u64;
    let mut worst: Option<(VertexId, u64, u64)> = None; // vertex, start, length
    let mut starts = vec![None::<u64>; n + 1];
    for (i, rec) in records.iter().enumerate() {
        for (j, a) in rec.activities.iter() {
            match (*a == Activity::Hungry, starts[j]) {
                (true, None) => starts[j] = Some(i as u64),
                (true, Some(_)) => {}
                (false, Some(start)) => {
                    let wait = i as u64 - start;
                    if wait > max_wait {
                        max_wait = wait;
                        worst = Some((j, start, wait));
                    }
                    starts[j] = None;
                }
                (false, None) => {}
            }
        }
    }
    for j in 1..=n {
        if let Some(start) = starts[j] {
            let wait = records.len() as u64 - start;
            if wait > max_wait {
                max_wait = wait;
                worst = Some((j, start, wait));
            }
        }
    }
    let check = bound.map(|bound| {
        if max_wait <= bound {
            CheckResult::pass(name)
        } else {
            let (j, start, wait) = worst.expect("a wait above the bound was observed");
            CheckResult::fail(
                name,
                format!(
                    "vertex {j} stayed hungry for {wait} steps from step {start} (bound {bound})"
                ),
            )
        }
    });
    (check, max_wait)
}

/// Corrupt a record for fault-injection tests: force the given vertex to
/// an activity without touching anything else.
pub fn corrupt_activity(record: &mut StepRecord, j: VertexId, activity: Activity) {
    let mut activities = VertexMap::from_values(record.activities.values().to_vec());
    activities.set(j, activity);
    record.activities = activities;
}

/// Recompute what a record's priority map should be so fault injection can
/// corrupt orientations too.
pub fn replace_priorities(record: &mut StepRecord, priorities: PriorityMap) {
    record.priorities = priorities;
}
