//! The centralised hub controller.
//!
//! The hub keeps one piece of state per conflict edge: which endpoint
//! currently dominates. Each step it re-orients edges so that eaters are
//! dominated by every neighbour and hungry vertices dominate thinkers,
//! then commands each hungry vertex to eat exactly when it dominates all
//! its neighbours and none of them is eating. The orientation never forms
//! a directed cycle along a run, which is what starvation freedom rests
//! on.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{ConflictGraph, VertexId, VertexMap};
use crate::philosopher::{Activity, Choice, Command, MaybeChoice};

pub type ActivityMap = VertexMap<Activity>;
pub type ChoiceMap = VertexMap<Choice>;
pub type MaybeChoiceMap = VertexMap<MaybeChoice>;
pub type CommandMap = VertexMap<Command>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HubError {
    #[error("activity map covers {map} vertices but the priority map covers {priorities}")]
    DomainMismatch { map: usize, priorities: usize },
    #[error("directed edge {from}>{to} does not correspond to a graph edge")]
    UnknownEdge { from: VertexId, to: VertexId },
    #[error("edge {{{j}, {k}}} is oriented twice")]
    DuplicateEdge { j: VertexId, k: VertexId },
    #[error("malformed priority entry {0:?}, expected \"j>k\"")]
    BadPriorityEntry(String),
}

/// An orientation of the conflict graph: each edge is mapped to the
/// endpoint that currently dominates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityMap {
    vertex_count: usize,
    // Keyed by the normalised (lower, higher) edge; the value is the
    // dominating endpoint.
    orientation: BTreeMap<(VertexId, VertexId), VertexId>,
}

impl PriorityMap {
    /// The start-of-time orientation: on every edge the higher-numbered
    /// endpoint dominates. Acyclic by construction (it embeds in the
    /// numeric order).
    pub fn initial(graph: &ConflictGraph) -> Self {
        let orientation = graph
            .edges()
            .iter()
            .map(|&(lo, hi)| ((lo, hi), hi))
            .collect();
        PriorityMap {
            vertex_count: graph.vertex_count(),
            orientation,
        }
    }

    /// Build from (dominator, dominated) pairs covering each edge once.
    pub fn from_directed(
        vertex_count: usize,
        pairs: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<Self, HubError> {
        let mut orientation = BTreeMap::new();
        for (from, to) in pairs {
            if from == to || from == 0 || to == 0 || from > vertex_count || to > vertex_count {
                return Err(HubError::UnknownEdge { from, to });
            }
            let key = (from.min(to), from.max(to));
            if orientation.insert(key, from).is_some() {
                return Err(HubError::DuplicateEdge { j: key.0, k: key.1 });
            }
        }
        Ok(PriorityMap {
            vertex_count,
            orientation,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.orientation.len()
    }

    /// True when the orientation's domain is exactly the graph's edge set.
    pub fn matches_graph(&self, graph: &ConflictGraph) -> bool {
        self.vertex_count == graph.vertex_count()
            && self.orientation.len() == graph.edge_count()
            && self.orientation.keys().all(|&(j, k)| graph.has_edge(j, k))
    }

    /// The dominating endpoint of edge {j, k}, or None if not an edge.
    pub fn dominator_of_edge(&self, j: VertexId, k: VertexId) -> Option<VertexId> {
        self.orientation.get(&(j.min(k), j.max(k))).copied()
    }

    /// True when j dominates k across an existing edge.
    pub fn dominates(&self, j: VertexId, k: VertexId) -> bool {
        self.dominator_of_edge(j, k) == Some(j)
    }

    /// Directed edges as (dominator, dominated) pairs.
    pub fn directed_edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.orientation.iter().map(
            |(&(lo, hi), &dom)| {
                if dom == lo {
                    (lo, hi)
                } else {
                    (hi, lo)
                }
            },
        )
    }

    /// The subordinates of j: neighbours j dominates.
    pub fn subordinates(&self, j: VertexId) -> BTreeSet<VertexId> {
        self.directed_edges()
            .filter(|&(from, _)| from == j)
            .map(|(_, to)| to)
            .collect()
    }

    /// The dominators of j: neighbours dominating j.
    pub fn dominators(&self, j: VertexId) -> BTreeSet<VertexId> {
        self.directed_edges()
            .filter(|&(_, to)| to == j)
            .map(|(from, _)| from)
            .collect()
    }

    /// Transitive closure of the dominator relation above j.
    pub fn transitive_dominators(&self, j: VertexId) -> BTreeSet<VertexId> {
        let mut closed = BTreeSet::new();
        let mut stack: Vec<VertexId> = self.dominators(j).into_iter().collect();
        while let Some(k) = stack.pop() {
            if closed.insert(k) {
                stack.extend(self.dominators(k));
            }
        }
        closed
    }

    /// True when the orientation has no directed cycle.
    pub fn is_acyclic(&self) -> bool {
        let n = self.vertex_count;
        let mut indegree = vec![0usize; n + 1];
        let mut out = vec![Vec::new(); n + 1];
        for (from, to) in self.directed_edges() {
            indegree[to] += 1;
            out[from].push(to);
        }
        let mut queue: Vec<VertexId> = (1..=n).filter(|&j| indegree[j] == 0).collect();
        let mut removed = 0;
        while let Some(j) = queue.pop() {
            removed += 1;
            for &k in &out[j] {
                indegree[k] -= 1;
                if indegree[k] == 0 {
                    queue.push(k);
                }
            }
        }
        removed == n
    }

    /// Text form: one "j>k" entry per directed edge, j dominating.
    pub fn to_strings(&self) -> Vec<String> {
        self.orientation
            .iter()
            .map(|(&(lo, hi), &dom)| {
                let sub = if dom == lo { hi } else { lo };
                format!("{dom}>{sub}")
            })
            .collect()
    }

    /// Parse the text form produced by [`PriorityMap::to_strings`].
    pub fn from_strings<S: AsRef<str>>(
        vertex_count: usize,
        entries: impl IntoIterator<Item = S>,
    ) -> Result<Self, HubError> {
        let mut pairs = Vec::new();
        for entry in entries {
            let text = entry.as_ref();
            let (from, to) = text
                .split_once('>')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                .ok_or_else(|| HubError::BadPriorityEntry(text.to_string()))?;
            pairs.push((from, to));
        }
        PriorityMap::from_directed(vertex_count, pairs)
    }

    fn check_domain(&self, activities: &ActivityMap) -> Result<(), HubError> {
        if activities.vertex_count() != self.vertex_count {
            return Err(HubError::DomainMismatch {
                map: activities.vertex_count(),
                priorities: self.vertex_count,
            });
        }
        Ok(())
    }
}

/// Re-orient every directed edge in one simultaneous pass: an edge pointing
/// out of an eater reverses, an edge from a thinker onto a hungry vertex
/// reverses, every other edge keeps its direction.
pub fn update_priorities(
    priorities: &PriorityMap,
    activities: &ActivityMap,
) -> Result<PriorityMap, HubError> {
    priorities.check_domain(activities)?;
    let mut orientation = BTreeMap::new();
    for (from, to) in priorities.directed_edges() {
        let key = (from.min(to), from.max(to));
        let reversed = match (*activities.get(from), *activities.get(to)) {
            (Activity::Eating, _) => true,
            (Activity::Thinking, Activity::Hungry) => true,
            _ => false,
        };
        orientation.insert(key, if reversed { to } else { from });
    }
    Ok(PriorityMap {
        vertex_count: priorities.vertex_count,
        orientation,
    })
}

/// The vertices dominating all of their neighbours. Isolated vertices
/// qualify vacuously.
pub fn top_vertices(priorities: &PriorityMap) -> BTreeSet<VertexId> {
    let mut top: BTreeSet<VertexId> = (1..=priorities.vertex_count).collect();
    for (_, to) in priorities.directed_edges() {
        top.remove(&to);
    }
    top
}

/// Ready to eat: hungry, dominating all neighbours, and no neighbour
/// eating.
pub fn is_ready(priorities: &PriorityMap, activities: &ActivityMap, j: VertexId) -> bool {
    if *activities.get(j) != Activity::Hungry {
        return false;
    }
    for (from, to) in priorities.directed_edges() {
        if to == j {
            return false; // dominated by `from`, not top
        }
        if from == j && *activities.get(to) == Activity::Eating {
            return false;
        }
    }
    true
}

/// The hub's command law, per vertex: thinkers and eaters pass, a ready
/// hungry vertex is forced to switch, any other hungry vertex is forced to
/// stay.
pub fn command_map(
    priorities: &PriorityMap,
    activities: &ActivityMap,
) -> Result<CommandMap, HubError> {
    priorities.check_domain(activities)?;
    let n = priorities.vertex_count;
    let top = top_vertices(priorities);
    let mut eating_neighbour = vec![false; n + 1];
    for (from, to) in priorities.directed_edges() {
        if *activities.get(from) == Activity::Eating {
            eating_neighbour[to] = true;
        }
        if *activities.get(to) == Activity::Eating {
            eating_neighbour[from] = true;
        }
    }
    Ok(CommandMap::from_fn(n, |j| match *activities.get(j) {
        Activity::Thinking | Activity::Eating => Command::Pass,
        Activity::Hungry => {
            if top.contains(&j) && !eating_neighbour[j] {
                Command::ForceSwitch
            } else {
                Command::ForceStay
            }
        }
    }))
}

/// The hub's full state: the edge orientation plus the last command map
/// (which is also its output).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HubState {
    pub priorities: PriorityMap,
    pub commands: CommandMap,
}

/// Start-of-time hub state: initial orientation, all commands pass.
pub fn initial_hub_state(graph: &ConflictGraph) -> HubState {
    HubState {
        priorities: PriorityMap::initial(graph),
        commands: CommandMap::uniform(graph.vertex_count(), Command::Pass),
    }
}

/// One hub transition: update the orientation first, then compute commands
/// from the *new* orientation.
pub fn hub_step(state: &HubState, activities: &ActivityMap) -> Result<HubState, HubError> {
    let priorities = update_priorities(&state.priorities, activities)?;
    let commands = command_map(&priorities, activities)?;
    Ok(HubState {
        priorities,
        commands,
    })
}
