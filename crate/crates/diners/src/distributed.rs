//! Per-vertex local controllers.
//!
//! The hub's edge orientation is split across the vertices: each vertex
//! keeps one boolean per incident edge (true = "I dominate my m-th
//! neighbour"), so an edge is represented twice, with opposite values. Each
//! local controller sees only its own activity and its neighbours'
//! activities, updates its dominance bits pointwise, and issues the same
//! command the hub would.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{ConflictGraph, VertexId, VertexMap};
use crate::hub::{ActivityMap, PriorityMap};
use crate::philosopher::{Activity, Command};
use crate::rng::SplitMix64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistributedError {
    #[error("vertex {vertex}: dominance vector has {vector} bits for {neighbours} neighbours")]
    LengthMismatch {
        vertex: VertexId,
        vector: usize,
        neighbours: usize,
    },
    #[error("neighbour list for vertex {vertex} does not match the graph")]
    BadNeighbourList { vertex: VertexId },
    #[error(
        "edge {{{j}, {k}}}: dominance bits are not complementary (both sides claim {claim})"
    )]
    IncompatibleBits { j: VertexId, k: VertexId, claim: bool },
    #[error("priority map does not cover the neighbour order's graph")]
    PriorityDomainMismatch,
}

/// Per-vertex neighbour vectors: an arbitrary but fixed ordering of each
/// vertex's neighbourhood, with a consistent reverse index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighbourOrder {
    lists: Vec<Vec<VertexId>>, // index 0 unused
}

impl NeighbourOrder {
    /// Default order: ascending vertex id.
    pub fn ascending(graph: &ConflictGraph) -> Self {
        let mut lists = vec![Vec::new()];
        for j in graph.vertices() {
            lists.push(graph.neighbours(j).iter().copied().collect());
        }
        NeighbourOrder { lists }
    }

    /// Seeded shuffle of every neighbourhood. Runs over shuffled orders
    /// must agree with the hub exactly like ascending ones.
    pub fn shuffled(graph: &ConflictGraph, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut order = NeighbourOrder::ascending(graph);
        for list in order.lists.iter_mut().skip(1) {
            rng.shuffle(list);
        }
        order
    }

    /// Validate explicit neighbour lists against the graph.
    pub fn new(
        graph: &ConflictGraph,
        lists: Vec<Vec<VertexId>>,
    ) -> Result<Self, DistributedError> {
        if lists.len() != graph.vertex_count() {
            return Err(DistributedError::BadNeighbourList {
                vertex: lists.len(),
            });
        }
        for (i, list) in lists.iter().enumerate() {
            let j = i + 1;
            let as_set: BTreeSet<VertexId> = list.iter().copied().collect();
            if as_set.len() != list.len() || &as_set != graph.neighbours(j) {
                return Err(DistributedError::BadNeighbourList { vertex: j });
            }
        }
        let mut full = vec![Vec::new()];
        full.extend(lists);
        Ok(NeighbourOrder { lists: full })
    }

    pub fn vertex_count(&self) -> usize {
        self.lists.len() - 1
    }

    pub fn neighbours(&self, j: VertexId) -> &[VertexId] {
        &self.lists[j]
    }

    pub fn degree(&self, j: VertexId) -> usize {
        self.lists[j].len()
    }

    /// The 1-based port index m with neighbours(j)[m] = k.
    pub fn port_of(&self, j: VertexId, k: VertexId) -> Option<usize> {
        self.lists[j].iter().position(|&v| v == k).map(|i| i + 1)
    }

    /// Raw lists (vertex 1 first), e.g. for trace headers.
    pub fn to_lists(&self) -> Vec<Vec<VertexId>> {
        self.lists[1..].to_vec()
    }
}

/// One vertex's share of the edge orientation: bit m is true when the
/// vertex dominates its m-th neighbour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominanceVector {
    bits: Vec<bool>,
}

impl DominanceVector {
    pub fn new(bits: Vec<bool>) -> Self {
        DominanceVector { bits }
    }

    /// Start-of-time bits for vertex j: dominate exactly the
    /// lower-numbered neighbours.
    pub fn initial(order: &NeighbourOrder, j: VertexId) -> Self {
        DominanceVector {
            bits: order.neighbours(j).iter().map(|&k| j > k).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit at 1-based port m.
    pub fn get(&self, m: usize) -> bool {
        self.bits[m - 1]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Wire form: '1'/'0' per port, in neighbour order.
    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(text: &str) -> Option<Self> {
        text.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<bool>>>()
            .map(DominanceVector::new)
    }
}

/// What one local controller reads each step: its own activity (port 0)
/// and its neighbours' activities (ports 1..=degree).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalActivityView {
    own: Activity,
    neighbours: Vec<Activity>,
}

impl LocalActivityView {
    pub fn new(own: Activity, neighbours: Vec<Activity>) -> Self {
        LocalActivityView { own, neighbours }
    }

    /// Assemble vertex j's view from the global activity map.
    pub fn gather(j: VertexId, order: &NeighbourOrder, activities: &ActivityMap) -> Self {
        LocalActivityView {
            own: *activities.get(j),
            neighbours: order
                .neighbours(j)
                .iter()
                .map(|&k| *activities.get(k))
                .collect(),
        }
    }

    pub fn own(&self) -> Activity {
        self.own
    }

    /// Activity at 1-based port m.
    pub fn neighbour(&self, m: usize) -> Activity {
        self.neighbours[m - 1]
    }

    pub fn degree(&self) -> usize {
        self.neighbours.len()
    }
}

/// Pointwise dominance update for one edge, seen from one endpoint.
///
/// Mirrors the hub's re-orientation: an eater drops dominance over
/// everyone, a hungry vertex takes dominance over thinkers, peers in the
/// same activity keep the current bit. The (eating, eating) row keeps the
/// bit as defined; it is unreachable on safe runs and the executor counts
/// any firing as a diagnostic.
pub fn update_dominance_bit(current: bool, own: Activity, neighbour: Activity) -> bool {
    use Activity::*;
    match (own, neighbour) {
        (Thinking, Thinking) => current,
        (Thinking, Hungry) => false,
        (Thinking, Eating) => true,
        (Hungry, Eating) => true,
        (Hungry, Hungry) => current,
        (Eating, Hungry) => false,
        (Eating, Thinking) => false,
        (Hungry, Thinking) => true,
        (Eating, Eating) => current,
    }
}

fn check_lengths(
    vector: &DominanceVector,
    view: &LocalActivityView,
) -> Result<(), DistributedError> {
    if vector.len() != view.degree() {
        return Err(DistributedError::LengthMismatch {
            vertex: 0,
            vector: vector.len(),
            neighbours: view.degree(),
        });
    }
    Ok(())
}

/// Pointwise [`update_dominance_bit`] over a whole dominance vector.
pub fn update_dominance(
    vector: &DominanceVector,
    view: &LocalActivityView,
) -> Result<DominanceVector, DistributedError> {
    check_lengths(vector, view)?;
    Ok(DominanceVector {
        bits: (1..=vector.len())
            .map(|m| update_dominance_bit(vector.get(m), view.own(), view.neighbour(m)))
            .collect(),
    })
}

/// True when the vertex dominates all of its neighbours.
pub fn is_local_top(vector: &DominanceVector) -> bool {
    vector.bits().iter().all(|&b| b)
}

/// Local readiness: hungry, dominating everyone, and no neighbour eating.
pub fn is_local_ready(
    vector: &DominanceVector,
    view: &LocalActivityView,
) -> Result<bool, DistributedError> {
    check_lengths(vector, view)?;
    Ok(view.own() == Activity::Hungry
        && is_local_top(vector)
        && (1..=view.degree()).all(|m| view.neighbour(m) != Activity::Eating))
}

/// The local command law; agrees with the hub's per-vertex command.
pub fn local_command(
    vector: &DominanceVector,
    view: &LocalActivityView,
) -> Result<Command, DistributedError> {
    check_lengths(vector, view)?;
    Ok(match view.own() {
        Activity::Thinking | Activity::Eating => Command::Pass,
        Activity::Hungry => {
            if is_local_ready(vector, view)? {
                Command::ForceSwitch
            } else {
                Command::ForceStay
            }
        }
    })
}

/// One local controller's state: its dominance bits and last command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalControllerState {
    pub dominance: DominanceVector,
    pub command: Command,
}

impl LocalControllerState {
    pub fn initial(order: &NeighbourOrder, j: VertexId) -> Self {
        LocalControllerState {
            dominance: DominanceVector::initial(order, j),
            command: Command::Pass,
        }
    }
}

/// One local transition: update the dominance vector first, then compute
/// the command from the *new* vector.
pub fn local_step(
    state: &LocalControllerState,
    view: &LocalActivityView,
) -> Result<LocalControllerState, DistributedError> {
    let dominance = update_dominance(&state.dominance, view)?;
    let command = local_command(&dominance, view)?;
    Ok(LocalControllerState { dominance, command })
}

/// Split a hub orientation into per-vertex dominance vectors.
pub fn scatter_priority(
    priorities: &PriorityMap,
    order: &NeighbourOrder,
) -> Result<VertexMap<DominanceVector>, DistributedError> {
    let n = order.vertex_count();
    if priorities.vertex_count() != n {
        return Err(DistributedError::PriorityDomainMismatch);
    }
    let mut vectors = Vec::with_capacity(n);
    for j in 1..=n {
        let mut bits = Vec::with_capacity(order.degree(j));
        for &k in order.neighbours(j) {
            match priorities.dominator_of_edge(j, k) {
                Some(dom) => bits.push(dom == j),
                None => return Err(DistributedError::PriorityDomainMismatch),
            }
        }
        vectors.push(DominanceVector::new(bits));
    }
    Ok(VertexMap::from_values(vectors))
}

/// Reassemble a hub orientation from per-vertex vectors, rejecting
/// incompatible bit pairs and naming the offending edge.
pub fn gather_priority(
    vectors: &VertexMap<DominanceVector>,
    order: &NeighbourOrder,
) -> Result<PriorityMap, DistributedError> {
    let n = order.vertex_count();
    let mut pairs = Vec::new();
    for j in 1..=n {
        let vector = vectors.get(j);
        if vector.len() != order.degree(j) {
            return Err(DistributedError::LengthMismatch {
                vertex: j,
                vector: vector.len(),
                neighbours: order.degree(j),
            });
        }
        for (i, &k) in order.neighbours(j).iter().enumerate() {
            let mine = vector.get(i + 1);
            let port_back = order
                .port_of(k, j)
                .ok_or(DistributedError::BadNeighbourList { vertex: k })?;
            let theirs = vectors.get(k).get(port_back);
            if mine == theirs {
                return Err(DistributedError::IncompatibleBits {
                    j: j.min(k),
                    k: j.max(k),
                    claim: mine,
                });
            }
            if mine {
                pairs.push((j, k));
            }
        }
    }
    PriorityMap::from_directed(n, pairs).map_err(|_| DistributedError::PriorityDomainMismatch)
}
