//! Deterministic lockstep execution.
//!
//! Two dynamics are supported. *Clocked* runs advance one global clock
//! cycle at a time: choices arrive only at odd cycles (absent at even
//! ones) and every subsystem's output lags its input by one cycle.
//! *Polled* runs sample the clocked system at the odd cycles, which
//! collapses the pacing: a choice is present every step, commands are
//! derived from the current state, and the orientation update sees the
//! new activities. Both dynamics run under either the centralised hub or
//! the per-vertex local controllers, from the same choice stream, so runs
//! are directly comparable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributed::{
    gather_priority, local_command, update_dominance, DistributedError, DominanceVector,
    LocalActivityView, NeighbourOrder,
};
use crate::graph::{ConflictGraph, VertexId, VertexMap};
use crate::hub::{
    command_map, update_priorities, ActivityMap, CommandMap, HubError, MaybeChoiceMap,
    PriorityMap,
};
use crate::philosopher::{apply_command, apply_paced, control_law, Activity, Choice, Command,
    MaybeChoice};
use crate::stream::{ChoiceStream, StreamError, StreamSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Centralized,
    Distributed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    Clocked,
    Polled,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Centralized => "centralized",
            Architecture::Distributed => "distributed",
        }
    }
}

impl Dynamics {
    pub fn as_str(self) -> &'static str {
        match self {
            Dynamics::Clocked => "clocked",
            Dynamics::Polled => "polled",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExecError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Hub(#[from] HubError),
    #[error(transparent)]
    Distributed(#[from] DistributedError),
}

/// Full snapshot of one step (or clock cycle): everything needed to replay
/// and to check every invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub activities: ActivityMap,
    pub choices: MaybeChoiceMap,
    pub commands: CommandMap,
    pub priorities: PriorityMap,
    /// Raw dominance vectors, present on distributed runs.
    pub dominance: Option<VertexMap<DominanceVector>>,
    pub dynamics: Dynamics,
    pub architecture: Architecture,
}

impl StepRecord {
    pub fn mode_string(&self) -> String {
        format!("{}-{}", self.dynamics.as_str(), self.architecture.as_str())
    }

    pub fn vertex_count(&self) -> usize {
        self.activities.vertex_count()
    }
}

/// A completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<StepRecord>,
    pub dynamics: Dynamics,
    pub architecture: Architecture,
    /// Neighbour order used by distributed runs (None for centralised).
    pub order: Option<Vec<Vec<VertexId>>>,
    /// How often the (eating, eating) dominance row fired. Safety makes it
    /// unreachable; a nonzero count means the run was corrupt.
    pub eating_pair_updates: u64,
}

impl Trace {
    pub fn vertex_count(&self) -> usize {
        self.records.first().map_or(0, StepRecord::vertex_count)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Steps each vertex spent eating.
    pub fn eat_counts(&self) -> VertexMap<u64> {
        let n = self.vertex_count();
        let mut counts = VertexMap::uniform(n, 0u64);
        for rec in &self.records {
            for (j, a) in rec.activities.iter() {
                if *a == Activity::Eating {
                    counts.set(j, counts.get(j) + 1);
                }
            }
        }
        counts
    }
}

/// Run with the given dynamics and architecture for `horizon` records
/// (polled steps or clock cycles respectively).
pub fn run(
    graph: &ConflictGraph,
    order: &NeighbourOrder,
    architecture: Architecture,
    dynamics: Dynamics,
    stream: &StreamSpec,
    horizon: u64,
) -> Result<Trace, ExecError> {
    if horizon == 0 {
        return Err(ExecError::ZeroHorizon);
    }
    let n = graph.vertex_count();
    let choice_steps = match dynamics {
        Dynamics::Polled => horizon,
        Dynamics::Clocked => horizon / 2,
    };
    stream.validate(n, usize::try_from(choice_steps).expect("horizon fits usize"))?;
    match (dynamics, architecture) {
        (Dynamics::Polled, Architecture::Centralized) => polled_centralized(graph, stream, horizon),
        (Dynamics::Polled, Architecture::Distributed) => {
            polled_distributed(graph, order, stream, horizon)
        }
        (Dynamics::Clocked, Architecture::Centralized) => {
            clocked_centralized(graph, stream, horizon)
        }
        (Dynamics::Clocked, Architecture::Distributed) => {
            clocked_distributed(graph, order, stream, horizon)
        }
    }
}

/// Polled run (one record per step).
pub fn run_polled(
    graph: &ConflictGraph,
    order: &NeighbourOrder,
    architecture: Architecture,
    stream: &StreamSpec,
    horizon: u64,
) -> Result<Trace, ExecError> {
    run(graph, order, architecture, Dynamics::Polled, stream, horizon)
}

/// Clocked run (one record per clock cycle; choices at odd cycles only).
pub fn run_clocked(
    graph: &ConflictGraph,
    order: &NeighbourOrder,
    architecture: Architecture,
    stream: &StreamSpec,
    horizon: u64,
) -> Result<Trace, ExecError> {
    run(graph, order, architecture, Dynamics::Clocked, stream, horizon)
}

fn paced_step(activities: &ActivityMap, choices: &MaybeChoiceMap, commands: &CommandMap) -> ActivityMap {
    ActivityMap::from_fn(activities.vertex_count(), |j| {
        apply_paced(*activities.get(j), *choices.get(j), *commands.get(j))
    })
}

fn polled_centralized(
    graph: &ConflictGraph,
    stream: &StreamSpec,
    horizon: u64,
) -> Result<Trace, ExecError> {
    let n = graph.vertex_count();
    let mut stream = ChoiceStream::new(stream, n)?;
    let mut activities = ActivityMap::uniform(n, Activity::Thinking);
    let mut priorities = PriorityMap::initial(graph);
    let mut records = Vec::with_capacity(horizon as usize);
    for step in 0..horizon {
        let commands = command_map(&priorities, &activities)?;
        let choices = stream.choices_at(step, &activities)?;
        let next_activities = paced_step(&activities, &choices, &commands);
        records.push(StepRecord {
            step,
            activities: std::mem::replace(&mut activities, next_activities),
            choices,
            commands,
            priorities: priorities.clone(),
            dominance: None,
            dynamics: Dynamics::Polled,
            architecture: Architecture::Centralized,
        });
        priorities = update_priorities(&priorities, &activities)?;
    }
    Ok(Trace {
        records,
        dynamics: Dynamics::Polled,
        architecture: Architecture::Centralized,
        order: None,
        eating_pair_updates: 0,
    })
}

fn polled_distributed(
    graph: &ConflictGraph,
    order: &NeighbourOrder,
    stream: &StreamSpec,
    horizon: u64,
) -> Result<Trace, ExecError> {
    let n = graph.vertex_count();
    let mut stream = ChoiceStream::new(stream, n)?;
    let mut activities = ActivityMap::uniform(n, Activity::Thinking);
    let mut vectors = VertexMap::from_fn(n, |j| DominanceVector::initial(order, j));
    let mut eating_pairs = 0u64;
    let mut records = Vec::with_capacity(horizon as usize);
    for step in 0..horizon {
        let views: Vec<LocalActivityView> = (1..=n)
            .map(|j| LocalActivityView::gather(j, order, &activities))
            .collect();
        let mut commands = CommandMap::uniform(n, Command::Pass);
        for j in 1..=n {
            commands.set(j, local_command(vectors.get(j), &views[j - 1])?);
        }
        let choices = stream.choices_at(step, &activities)?;
        let next_activities = paced_step(&activities, &choices, &commands);
        records.push(StepRecord {
            step,
            activities: std::mem::replace(&mut activities, next_activities),
            choices,
            commands,
            priorities: gather_priority(&vectors, order)?,
            dominance: Some(vectors.clone()),
            dynamics: Dynamics::Polled,
            architecture: Architecture::Distributed,
        });
        // The orientation update reads the *new* activities.
        let mut next_vectors = Vec::with_capacity(n);
        for j in 1..=n {
            let view = LocalActivityView::gather(j, order, &activities);
            eating_pairs += eating_pair_count(&view);
            next_vectors.push(update_dominance(vectors.get(j), &view)?);
        }
        vectors = VertexMap::from_values(next_vectors);
    }
    Ok(Trace {
        records,
        dynamics: Dynamics::Polled,
        architecture: Architecture::Distributed,
        order: Some(order.to_lists()),
        eating_pair_updates: eating_pairs,
    })
}

fn clocked_centralized(
    graph: &ConflictGraph,
    stream: &StreamSpec,
    horizon: u64,
) -> Result<Trace, ExecError> {
    let n = graph.vertex_count();
    let mut stream = ChoiceStream::new(stream, n)?;
    let mut activities = ActivityMap::uniform(n, Activity::Thinking);
    let mut priorities = PriorityMap::initial(graph);
    let mut commands = CommandMap::uniform(n, Command::Pass);
    let mut records = Vec::with_capacity(horizon as usize);
    for cycle in 0..horizon {
        let choices = if cycle % 2 == 1 {
            stream.choices_at((cycle - 1) / 2, &activities)?
        } else {
            MaybeChoiceMap::uniform(n, MaybeChoice::Absent)
        };
        records.push(StepRecord {
            step: cycle,
            activities: activities.clone(),
            choices: choices.clone(),
            commands: commands.clone(),
            priorities: priorities.clone(),
            dominance: None,
            dynamics: Dynamics::Clocked,
            architecture: Architecture::Centralized,
        });
        // One-cycle delay: the next orientation and commands are computed
        // from this cycle's activities, while the plant moves under this
        // cycle's commands.
        let next_activities = paced_step(&activities, &choices, &commands);
        let next_priorities = update_priorities(&priorities, &activities)?;
        let next_commands = command_map(&next_priorities, &activities)?;
        activities = next_activities;
        priorities = next_priorities;
        commands = next_commands;
    }
    Ok(Trace {
        records,
        dynamics: Dynamics::Clocked,
        architecture: Architecture::Centralized,
        order: None,
        eating_pair_updates: 0,
    })
}

fn clocked_distributed(
    graph: &ConflictGraph,
    order: &NeighbourOrder,
    stream: &StreamSpec,
    horizon: u64,
) -> Result<Trace, ExecError> {
    let n = graph.vertex_count();
    let mut stream = ChoiceStream::new(stream, n)?;
    let mut activities = ActivityMap::uniform(n, Activity::Thinking);
    let mut vectors = VertexMap::from_fn(n, |j| DominanceVector::initial(order, j));
    let mut commands = CommandMap::uniform(n, Command::Pass);
    let mut eating_pairs = 0u64;
    let mut records = Vec::with_capacity(horizon as usize);
    for cycle in 0..horizon {
        let choices = if cycle % 2 == 1 {
            stream.choices_at((cycle - 1) / 2, &activities)?
        } else {
            MaybeChoiceMap::uniform(n, MaybeChoice::Absent)
        };
        records.push(StepRecord {
            step: cycle,
            activities: activities.clone(),
            choices: choices.clone(),
            commands: commands.clone(),
            priorities: gather_priority(&vectors, order)?,
            dominance: Some(vectors.clone()),
            dynamics: Dynamics::Clocked,
            architecture: Architecture::Distributed,
        });
        let next_activities = paced_step(&activities, &choices, &commands);
        let mut next_vectors = Vec::with_capacity(n);
        let mut next_commands = CommandMap::uniform(n, Command::Pass);
        for j in 1..=n {
            let view = LocalActivityView::gather(j, order, &activities);
            eating_pairs += eating_pair_count(&view);
            let updated = update_dominance(vectors.get(j), &view)?;
            next_commands.set(j, local_command(&updated, &view)?);
            next_vectors.push(updated);
        }
        activities = next_activities;
        vectors = VertexMap::from_values(next_vectors);
        commands = next_commands;
    }
    Ok(Trace {
        records,
        dynamics: Dynamics::Clocked,
        architecture: Architecture::Distributed,
        order: Some(order.to_lists()),
        eating_pair_updates: eating_pairs,
    })
}

fn eating_pair_count(view: &LocalActivityView) -> u64 {
    if view.own() != Activity::Eating {
        return 0;
    }
    (1..=view.degree())
        .filter(|&m| view.neighbour(m) == Activity::Eating)
        .count() as u64
}

/// The single-philosopher feedback loop *without* pacing: a choice arrives
/// every clock cycle, so a command computed from cycle t's activity only
/// lands at cycle t+1, one choice too late.
pub mod one_diner {
    use super::*;

    /// One cycle of the unpaced loop. `choice` is None on the final
    /// recorded cycle (nothing is consumed there).
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub struct UnpacedRecord {
        pub cycle: u64,
        pub choice: Option<Choice>,
        pub activity: Activity,
        pub command: Command,
    }

    /// Drive the commanded philosopher and the controller in direct
    /// feedback, one choice per cycle. Produces `choices.len() + 1`
    /// records.
    pub fn run_unpaced(choices: &[Choice]) -> Vec<UnpacedRecord> {
        let mut activity = Activity::Thinking;
        let mut command = Command::Pass;
        let mut records = Vec::with_capacity(choices.len() + 1);
        for (cycle, &b) in choices.iter().enumerate() {
            records.push(UnpacedRecord {
                cycle: cycle as u64,
                choice: Some(b),
                activity,
                command,
            });
            let next_activity = apply_command(activity, b, command);
            command = control_law(activity);
            activity = next_activity;
        }
        records.push(UnpacedRecord {
            cycle: choices.len() as u64,
            choice: None,
            activity,
            command,
        });
        records
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring5() -> ConflictGraph {
        ConflictGraph::ring(5).unwrap()
    }

    fn bounded(seed: u64, max_eat: u32) -> StreamSpec {
        StreamSpec::BoundedEating {
            seed,
            max_eat,
            p_switch: 0.5,
        }
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let g = ring5();
        let order = NeighbourOrder::ascending(&g);
        assert_eq!(
            run_polled(&g, &order, Architecture::Centralized, &bounded(1, 3), 0),
            Err(ExecError::ZeroHorizon)
        );
    }

    #[test]
    fn single_hungry_vertex_eats_next_step() {
        // n=1 polled: think, switch to hungry, then the controller forces
        // eating on the very next step.
        let g = ConflictGraph::new(1, []).unwrap();
        let order = NeighbourOrder::ascending(&g);
        let spec = StreamSpec::Scripted {
            lines: vec!["1".into(), "0".into(), "0".into()],
        };
        let trace = run_polled(&g, &order, Architecture::Centralized, &spec, 3).unwrap();
        let acts: Vec<char> = trace
            .records
            .iter()
            .map(|r| r.activities.code_string().chars().next().unwrap())
            .collect();
        assert_eq!(acts, vec!['t', 'h', 'e']);
        assert_eq!(*trace.records[1].commands.get(1), Command::ForceSwitch);
    }

    #[test]
    fn all_absent_script_freezes_activities() {
        let g = ring5();
        let order = NeighbourOrder::ascending(&g);
        let spec = StreamSpec::Scripted {
            lines: vec![".....".into(); 10],
        };
        for dynamics in [Dynamics::Polled, Dynamics::Clocked] {
            let trace = run(&g, &order, Architecture::Centralized, dynamics, &spec, 10).unwrap();
            for rec in &trace.records {
                assert_eq!(rec.activities.code_string(), "ttttt");
            }
        }
    }

    #[test]
    fn all_stay_choices_are_a_fixpoint() {
        let g = ring5();
        let order = NeighbourOrder::ascending(&g);
        let spec = StreamSpec::Seeded {
            seed: 0,
            p_switch: 0.0,
        };
        let trace = run_polled(&g, &order, Architecture::Centralized, &spec, 20).unwrap();
        let d0 = PriorityMap::initial(&g);
        for rec in &trace.records {
            assert_eq!(rec.activities.code_string(), "ttttt");
            assert_eq!(rec.commands.code_string(), "ppppp");
            assert_eq!(rec.priorities, d0);
        }
    }

    #[test]
    fn runs_are_bit_identical_across_repeats() {
        let g = ConflictGraph::random_connected(7, 0.4, 5).unwrap();
        let order = NeighbourOrder::shuffled(&g, 9);
        for arch in [Architecture::Centralized, Architecture::Distributed] {
            for dynamics in [Dynamics::Polled, Dynamics::Clocked] {
                let t1 = run(&g, &order, arch, dynamics, &bounded(11, 3), 400).unwrap();
                let t2 = run(&g, &order, arch, dynamics, &bounded(11, 3), 400).unwrap();
                assert_eq!(t1, t2);
            }
        }
    }

    #[test]
    fn polled_equals_clocked_sampled_at_odd_cycles() {
        let g = ConflictGraph::random_connected(6, 0.4, 12).unwrap();
        let order = NeighbourOrder::ascending(&g);
        let steps = 50u64;
        for arch in [Architecture::Centralized, Architecture::Distributed] {
            let polled = run_polled(&g, &order, arch, &bounded(3, 3), steps).unwrap();
            let clocked = run_clocked(&g, &order, arch, &bounded(3, 3), 2 * steps).unwrap();
            for i in 0..steps as usize {
                let p = &polled.records[i];
                let c = &clocked.records[2 * i + 1];
                assert_eq!(p.activities, c.activities, "step {i}");
                assert_eq!(p.choices, c.choices, "step {i}");
                assert_eq!(p.commands, c.commands, "step {i}");
                assert_eq!(p.priorities, c.priorities, "step {i}");
            }
        }
    }

    #[test]
    fn distributed_run_never_hits_the_eating_pair_row() {
        let g = ConflictGraph::random_connected(8, 0.3, 21).unwrap();
        let order = NeighbourOrder::ascending(&g);
        let trace =
            run_polled(&g, &order, Architecture::Distributed, &bounded(2, 4), 500).unwrap();
        assert_eq!(trace.eating_pair_updates, 0);
    }

    #[test]
    fn eat_counts_add_up() {
        let g = ring5();
        let order = NeighbourOrder::ascending(&g);
        let trace = run_polled(&g, &order, Architecture::Centralized, &bounded(4, 2), 300).unwrap();
        let counts = trace.eat_counts();
        let total: u64 = counts.values().iter().sum();
        let eating_records: u64 = trace
            .records
            .iter()
            .map(|r| {
                r.activities
                    .code_string()
                    .chars()
                    .filter(|&c| c == 'e')
                    .count() as u64
            })
            .sum();
        assert_eq!(total, eating_records);
        assert!(total > 0, "somebody should get to eat in 300 steps");
    }

    #[test]
    fn unpaced_loop_misses_the_window() {
        use one_diner::run_unpaced;
        let records = run_unpaced(&[
            Choice::Switch,
            Choice::Stay,
            Choice::Stay,
            Choice::Stay,
        ]);
        let acts: Vec<Activity> = records.iter().map(|r| r.activity).collect();
        let cmds: Vec<Command> = records.iter().map(|r| r.command).collect();
        assert_eq!(
            acts,
            vec![
                Activity::Thinking,
                Activity::Hungry,
                Activity::Hungry,
                Activity::Eating,
                Activity::Thinking,
            ]
        );
        assert_eq!(
            cmds,
            vec![
                Command::Pass,
                Command::Pass,
                Command::ForceSwitch,
                Command::ForceSwitch,
                Command::Pass,
            ]
        );
    }
}
