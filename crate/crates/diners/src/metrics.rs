//! Per-step progress metrics.
//!
//! Three per-vertex quantities witness that the controller makes progress
//! under a bounded-eating stream:
//!
//! * `eating_left` — steps before the vertex stops eating; strictly
//!   decreasing while it keeps eating.
//! * `ready_wait` — for a hungry vertex dominating all its neighbours,
//!   the total `eating_left` of its eating neighbours; strictly decreasing
//!   while it stays hungry.
//! * `top_distance` — for a hungry vertex, the lexicographic pair
//!   (size of its transitive dominator set, total `ready_wait` of the top
//!   vertices in that set); strictly decreasing while a non-dominating
//!   hungry vertex stays hungry.
//!
//! Together they bound every hungry wait, which is how starvation freedom
//! is checked empirically.

use thiserror::Error;

use crate::executor::StepRecord;
use crate::graph::VertexMap;
use crate::masks::{activity_mask, bit, dominator_masks, subordinate_masks, transitive_closure,
    MAX_MASK_VERTICES};
use crate::philosopher::Activity;
use crate::stream::StreamSpec;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("metrics need a bounded-eating stream (the eat countdown is undefined otherwise)")]
    UnsupportedStream,
    #[error("metrics support up to {max} vertices, got {got}")]
    TooManyVertices { got: usize, max: usize },
    #[error("records must be observed in order: expected step {expected}, got {got}")]
    OutOfOrder { expected: u64, got: u64 },
}

/// The three metric families at one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricSnapshot {
    pub eating_left: VertexMap<u64>,
    pub ready_wait: VertexMap<u64>,
    pub top_distance: VertexMap<(u64, u64)>,
}

/// Streaming metric computation over a trace. Owns the eat-run countdown
/// derived from the bounded-eating stream definition.
#[derive(Debug, Clone)]
pub struct MetricTracker {
    max_eat: u32,
    eating_runs: Vec<u32>,
    next_step: Option<u64>,
}

impl MetricTracker {
    pub fn new(max_eat: u32) -> Self {
        MetricTracker {
            max_eat,
            eating_runs: Vec::new(),
            next_step: None,
        }
    }

    /// Build from a stream description; only bounded-eating streams define
    /// the countdown.
    pub fn for_stream(spec: &StreamSpec) -> Result<Self, MetricsError> {
        match spec.max_eat() {
            Some(max_eat) => Ok(MetricTracker::new(max_eat)),
            None => Err(MetricsError::UnsupportedStream),
        }
    }

    pub fn max_eat(&self) -> u32 {
        self.max_eat
    }

    /// Metrics for the next record of the trace. Records must arrive in
    /// step order so the eat runs accumulate correctly.
    pub fn observe(&mut self, record: &StepRecord) -> Result<MetricSnapshot, MetricsError> {
        let n = record.vertex_count();
        if n > MAX_MASK_VERTICES {
            return Err(MetricsError::TooManyVertices {
                got: n,
                max: MAX_MASK_VERTICES,
            });
        }
        if let Some(expected) = self.next_step {
            if record.step != expected {
                return Err(MetricsError::OutOfOrder {
                    expected,
                    got: record.step,
                });
            }
        }
        self.next_step = Some(record.step + 1);
        if self.eating_runs.len() != n + 1 {
            self.eating_runs = vec![0; n + 1];
        }
        for (j, a) in record.activities.iter() {
            if *a == Activity::Eating {
                self.eating_runs[j] += 1;
            } else {
                self.eating_runs[j] = 0;
            }
        }

        let eating = activity_mask(&record.activities, Activity::Eating);
        let hungry = activity_mask(&record.activities, Activity::Hungry);
        let dominators = dominator_masks(&record.priorities);
        let subordinates = subordinate_masks(&record.priorities);
        let closure = transitive_closure(&dominators);
        let top_mask: u64 = (1..=n).filter(|&j| dominators[j] == 0).fold(0, |m, j| m | bit(j));

        let eating_left = VertexMap::from_fn(n, |j| {
            if *record.activities.get(j) == Activity::Eating {
                u64::from(self.max_eat + 1).saturating_sub(u64::from(self.eating_runs[j]))
            } else {
                0
            }
        });

        let ready_wait = VertexMap::from_fn(n, |j| {
            if hungry & bit(j) != 0 && dominators[j] == 0 {
                sum_over(subordinates[j] & eating, &eating_left)
            } else {
                0
            }
        });

        let top_distance = VertexMap::from_fn(n, |j| {
            if hungry & bit(j) == 0 {
                return (0, 0);
            }
            let above = closure[j];
            let tops_above = above & top_mask;
            (u64::from(above.count_ones()), sum_over(tops_above, &ready_wait))
        });

        Ok(MetricSnapshot {
            eating_left,
            ready_wait,
            top_distance,
        })
    }
}

fn sum_over(mut mask: u64, values: &VertexMap<u64>) -> u64 {
    let mut total = 0;
    while mask != 0 {
        let j = mask.trailing_zeros() as usize + 1;
        mask &= mask - 1;
        total += values.get(j);
    }
    total
}

/// Metrics for every record of a trace, in order.
pub fn compute_metrics(
    records: &[StepRecord],
    max_eat: u32,
) -> Result<Vec<MetricSnapshot>, MetricsError> {
    let mut tracker = MetricTracker::new(max_eat);
    records.iter().map(|r| tracker.observe(r)).collect()
}
