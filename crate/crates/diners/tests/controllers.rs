//! Cross-checks between the hub controller and the local controllers on
//! random states, plus the re-orientation properties that do not need a
//! full run.

use proptest::prelude::*;

use diners::distributed::{
    gather_priority, is_local_ready, is_local_top, local_command, scatter_priority,
    update_dominance, DominanceVector, LocalActivityView, NeighbourOrder,
};
use diners::graph::{ConflictGraph, VertexMap};
use diners::hub::{
    command_map, hub_step, initial_hub_state, is_ready, top_vertices, update_priorities,
    ActivityMap, PriorityMap,
};
use diners::philosopher::Activity;

fn arb_graph() -> impl Strategy<Value = ConflictGraph> {
    (2usize..=8, any::<u64>())
        .prop_map(|(n, seed)| ConflictGraph::random_connected(n, 0.4, seed).unwrap())
}

/// A random orientation of the graph's edges (not necessarily reachable).
fn arb_priorities(graph: &ConflictGraph, bits: &[bool]) -> PriorityMap {
    let pairs: Vec<(usize, usize)> = graph
        .edges()
        .iter()
        .zip(bits)
        .map(|(&(lo, hi), &flip)| if flip { (lo, hi) } else { (hi, lo) })
        .collect();
    PriorityMap::from_directed(graph.vertex_count(), pairs).unwrap()
}

fn arb_state() -> impl Strategy<Value = (ConflictGraph, PriorityMap, ActivityMap)> {
    arb_graph().prop_flat_map(|graph| {
        let edge_count = graph.edge_count();
        let n = graph.vertex_count();
        (
            Just(graph),
            proptest::collection::vec(any::<bool>(), edge_count.max(1)),
            proptest::collection::vec(0u8..3, n),
        )
            .prop_map(|(graph, bits, acts)| {
                let priorities = arb_priorities(&graph, &bits);
                let activities = ActivityMap::from_values(
                    acts.iter()
                        .map(|&i| [Activity::Thinking, Activity::Hungry, Activity::Eating][i as usize])
                        .collect(),
                );
                (graph, priorities, activities)
            })
    })
}

/// Replace adjacent eating pairs so the state is safe (demote the
/// higher-numbered eater); random states otherwise hit the one dominance
/// row that deliberately diverges between the two controllers.
fn make_safe(graph: &ConflictGraph, activities: &ActivityMap) -> ActivityMap {
    let mut out = ActivityMap::from_values(activities.values().to_vec());
    for &(lo, hi) in graph.edges() {
        if *out.get(lo) == Activity::Eating && *out.get(hi) == Activity::Eating {
            out.set(hi, Activity::Hungry);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn reorientation_is_idempotent((graph, priorities, activities) in arb_state()) {
        // Idempotence holds on safe states (no adjacent eaters), which is
        // where the dynamics lives; with two adjacent eaters the edge
        // between them flip-flops by construction.
        let activities = make_safe(&graph, &activities);
        let once = update_priorities(&priorities, &activities).unwrap();
        let twice = update_priorities(&once, &activities).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn top_set_matches_indegree_scan((_, priorities, _) in arb_state()) {
        let top = top_vertices(&priorities);
        for j in 1..=priorities.vertex_count() {
            let indegree_zero = priorities.dominators(j).is_empty();
            prop_assert_eq!(top.contains(&j), indegree_zero);
        }
    }

    #[test]
    fn hub_step_decomposes((graph, priorities, activities) in arb_state()) {
        let state = diners::hub::HubState {
            priorities: priorities.clone(),
            commands: initial_hub_state(&graph).commands,
        };
        let stepped = hub_step(&state, &activities).unwrap();
        let updated = update_priorities(&priorities, &activities).unwrap();
        prop_assert_eq!(&stepped.priorities, &updated);
        prop_assert_eq!(&stepped.commands, &command_map(&updated, &activities).unwrap());
    }

    #[test]
    fn local_views_agree_with_hub((graph, priorities, activities) in arb_state()) {
        // top/ready/command agreement holds on arbitrary states; the
        // scatter encoding carries the orientation across.
        let order = NeighbourOrder::ascending(&graph);
        let vectors = scatter_priority(&priorities, &order).unwrap();
        let top = top_vertices(&priorities);
        let commands = command_map(&priorities, &activities).unwrap();
        for j in graph.vertices() {
            let view = LocalActivityView::gather(j, &order, &activities);
            let vector = vectors.get(j);
            prop_assert_eq!(top.contains(&j), is_local_top(vector), "top at {}", j);
            prop_assert_eq!(
                is_ready(&priorities, &activities, j),
                is_local_ready(vector, &view).unwrap(),
                "ready at {}", j
            );
            prop_assert_eq!(
                *commands.get(j),
                local_command(vector, &view).unwrap(),
                "command at {}", j
            );
        }
    }

    #[test]
    fn local_updates_gather_to_hub_update((graph, priorities, activities) in arb_state()) {
        // On safe states the pointwise dominance updates reassemble into
        // exactly the hub's re-orientation.
        let activities = make_safe(&graph, &activities);
        let order = NeighbourOrder::ascending(&graph);
        let vectors = scatter_priority(&priorities, &order).unwrap();
        let updated_vectors: Vec<DominanceVector> = graph
            .vertices()
            .map(|j| {
                let view = LocalActivityView::gather(j, &order, &activities);
                update_dominance(vectors.get(j), &view).unwrap()
            })
            .collect();
        let gathered =
            gather_priority(&VertexMap::from_values(updated_vectors), &order).unwrap();
        prop_assert_eq!(gathered, update_priorities(&priorities, &activities).unwrap());
    }
}
