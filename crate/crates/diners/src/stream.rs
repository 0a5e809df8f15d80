//! Choice-input generation for runs.
//!
//! Simulation never draws hidden randomness: every choice a philosopher
//! makes comes from a stream that is either scripted or derived from a
//! seed by a counter-keyed generator, so identical configurations replay
//! bit-identically. The bounded-eating stream additionally guarantees the
//! standing assumption that nobody eats forever: a vertex that has eaten
//! `max_eat` consecutive steps is handed the switch choice.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::VertexMap;
use crate::hub::{ActivityMap, MaybeChoiceMap};
use crate::philosopher::{Activity, Choice, MaybeChoice};
use crate::rng::{mix3, unit_f64};

#[derive(Debug, Error, PartialEq)]
pub enum StreamError {
    #[error("p_switch must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("max_eat must be at least 1")]
    ZeroMaxEat,
    #[error("script line {line} has {got} entries for {expected} vertices")]
    ScriptWidthMismatch {
        line: usize,
        got: usize,
        expected: usize,
    },
    #[error("script line {line} contains an invalid character (expected 0, 1 or .)")]
    ScriptBadChar { line: usize },
    #[error("script has {len} lines but the run needs {needed} choice steps")]
    ScriptTooShort { len: usize, needed: usize },
}

/// Reproducible description of a choice source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StreamSpec {
    /// Fixed per-step lines of per-vertex codes (`0`, `1` or `.` for an
    /// absent choice), replayed exactly.
    Scripted { lines: Vec<String> },
    /// Every vertex switches with probability `p_switch` each step,
    /// independently, keyed by (seed, vertex, step).
    Seeded { seed: u64, p_switch: f64 },
    /// Like `Seeded` for thinking and hungry vertices, but an eating
    /// vertex stays exactly until it has eaten `max_eat` consecutive
    /// steps and is then made to switch.
    BoundedEating {
        seed: u64,
        max_eat: u32,
        p_switch: f64,
    },
}

impl StreamSpec {
    /// Validate parameters against a vertex count and the number of choice
    /// steps the run will consume.
    pub fn validate(&self, vertex_count: usize, choice_steps: usize) -> Result<(), StreamError> {
        match self {
            StreamSpec::Scripted { lines } => {
                if lines.len() < choice_steps {
                    return Err(StreamError::ScriptTooShort {
                        len: lines.len(),
                        needed: choice_steps,
                    });
                }
                for (i, line) in lines.iter().enumerate() {
                    if line.chars().count() != vertex_count {
                        return Err(StreamError::ScriptWidthMismatch {
                            line: i + 1,
                            got: line.chars().count(),
                            expected: vertex_count,
                        });
                    }
                    if MaybeChoiceMap::from_code_string(line).is_none() {
                        return Err(StreamError::ScriptBadChar { line: i + 1 });
                    }
                }
                Ok(())
            }
            StreamSpec::Seeded { p_switch, .. } => check_probability(*p_switch),
            StreamSpec::BoundedEating {
                max_eat, p_switch, ..
            } => {
                if *max_eat == 0 {
                    return Err(StreamError::ZeroMaxEat);
                }
                check_probability(*p_switch)
            }
        }
    }

    pub fn max_eat(&self) -> Option<u32> {
        match self {
            StreamSpec::BoundedEating { max_eat, .. } => Some(*max_eat),
            _ => None,
        }
    }

    pub fn is_bounded_eating(&self) -> bool {
        matches!(self, StreamSpec::BoundedEating { .. })
    }

    /// Convenience constructor for a single-vertex script of plain
    /// choices.
    pub fn scripted_choices(choices: &[Choice]) -> StreamSpec {
        StreamSpec::Scripted {
            lines: choices
                .iter()
                .map(|b| {
                    VertexMap::from_values(vec![MaybeChoice::Present(*b)]).code_string()
                })
                .collect(),
        }
    }
}

fn check_probability(p: f64) -> Result<(), StreamError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(StreamError::BadProbability(p))
    }
}

/// A live stream instance. Holds the per-vertex eating-run counters that
/// the bounded-eating kind needs; those counters double as the countdown
/// oracle behind the starvation metrics.
#[derive(Debug, Clone)]
pub struct ChoiceStream {
    spec: StreamSpec,
    script: Vec<MaybeChoiceMap>,
    eating_runs: Vec<u32>,
    next_step: u64,
}

impl ChoiceStream {
    pub fn new(spec: &StreamSpec, vertex_count: usize) -> Result<Self, StreamError> {
        spec.validate(vertex_count, 0)?;
        let script = match spec {
            StreamSpec::Scripted { lines } => lines
                .iter()
                .map(|l| MaybeChoiceMap::from_code_string(l).expect("validated above"))
                .collect(),
            _ => Vec::new(),
        };
        Ok(ChoiceStream {
            spec: spec.clone(),
            script,
            eating_runs: vec![0; vertex_count + 1],
            next_step: 0,
        })
    }

    pub fn spec(&self) -> &StreamSpec {
        &self.spec
    }

    /// Consecutive eating steps of vertex j, including the step most
    /// recently passed to [`ChoiceStream::choices_at`].
    pub fn eating_run(&self, j: usize) -> u32 {
        self.eating_runs[j]
    }

    /// The choices for one polled step. Must be called once per step, in
    /// order; the activities are the current (pre-transition) ones.
    pub fn choices_at(
        &mut self,
        step: u64,
        activities: &ActivityMap,
    ) -> Result<MaybeChoiceMap, StreamError> {
        debug_assert_eq!(step, self.next_step, "stream consumed out of order");
        self.next_step = step + 1;
        for (j, a) in activities.iter() {
            if *a == Activity::Eating {
                self.eating_runs[j] += 1;
            } else {
                self.eating_runs[j] = 0;
            }
        }
        let n = activities.vertex_count();
        match &self.spec {
            StreamSpec::Scripted { lines } => {
                let idx = usize::try_from(step).expect("step fits usize");
                if idx >= self.script.len() {
                    return Err(StreamError::ScriptTooShort {
                        len: lines.len(),
                        needed: idx + 1,
                    });
                }
                Ok(self.script[idx].clone())
            }
            StreamSpec::Seeded { seed, p_switch } => {
                let (seed, p) = (*seed, *p_switch);
                Ok(MaybeChoiceMap::from_fn(n, |j| {
                    MaybeChoice::Present(random_choice(seed, j as u64, step, p))
                }))
            }
            StreamSpec::BoundedEating {
                seed,
                max_eat,
                p_switch,
            } => {
                let (seed, max_eat, p) = (*seed, *max_eat, *p_switch);
                let runs = &self.eating_runs;
                Ok(MaybeChoiceMap::from_fn(n, |j| {
                    let b = if *activities.get(j) == Activity::Eating {
                        if runs[j] >= max_eat {
                            Choice::Switch
                        } else {
                            Choice::Stay
                        }
                    } else {
                        random_choice(seed, j as u64, step, p)
                    };
                    MaybeChoice::Present(b)
                }))
            }
        }
    }
}

fn random_choice(seed: u64, vertex: u64, step: u64, p_switch: f64) -> Choice {
    if unit_f64(mix3(seed, vertex, step)) < p_switch {
        Choice::Switch
    } else {
        Choice::Stay
    }
}
