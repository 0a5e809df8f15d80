//! Bitmask views of per-step state, shared by the metric and invariant
//! machinery. Vertex j maps to bit j-1; the checker caps runs at 64
//! vertices, which is far beyond desk scale.

use crate::graph::VertexMap;
use crate::hub::PriorityMap;
use crate::philosopher::Activity;

pub(crate) const MAX_MASK_VERTICES: usize = 64;

pub(crate) fn bit(j: usize) -> u64 {
    1u64 << (j - 1)
}

pub(crate) fn activity_mask(map: &VertexMap<Activity>, which: Activity) -> u64 {
    let mut mask = 0u64;
    for (j, a) in map.iter() {
        if *a == which {
            mask |= bit(j);
        }
    }
    mask
}

/// For each vertex, the mask of its dominators (index 0 unused).
pub(crate) fn dominator_masks(priorities: &PriorityMap) -> Vec<u64> {
    let mut masks = vec![0u64; priorities.vertex_count() + 1];
    for (from, to) in priorities.directed_edges() {
        masks[to] |= bit(from);
    }
    masks
}

/// For each vertex, the mask of its subordinates (index 0 unused).
pub(crate) fn subordinate_masks(priorities: &PriorityMap) -> Vec<u64> {
    let mut masks = vec![0u64; priorities.vertex_count() + 1];
    for (from, to) in priorities.directed_edges() {
        masks[from] |= bit(to);
    }
    masks
}

/// Transitive closure of a per-vertex relation given as masks: the result
/// at j covers everything reachable from j in one or more hops.
pub(crate) fn transitive_closure(direct: &[u64]) -> Vec<u64> {
    let mut closed = direct.to_vec();
    loop {
        let mut changed = false;
        for j in 1..closed.len() {
            let mut extended = closed[j];
            let mut rest = closed[j];
            while rest != 0 {
                let k = rest.trailing_zeros() as usize + 1;
                rest &= rest - 1;
                extended |= closed[k];
            }
            if extended != closed[j] {
                closed[j] = extended;
                changed = true;
            }
        }
        if !changed {
            return closed;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ConflictGraph;

    #[test]
    fn closure_follows_chains() {
        // 3 -> 2 -> 1 under the initial orientation of a path.
        let g = ConflictGraph::new(3, [(1, 2), (2, 3)]).unwrap();
        let d = PriorityMap::initial(&g);
        let dominators = dominator_masks(&d);
        let closed = transitive_closure(&dominators);
        assert_eq!(closed[1], bit(2) | bit(3));
        assert_eq!(closed[2], bit(3));
        assert_eq!(closed[3], 0);
    }

    #[test]
    fn closure_matches_set_based_route() {
        for seed in 0..20 {
            let g = ConflictGraph::random_connected(8, 0.4, seed).unwrap();
            let d = PriorityMap::initial(&g);
            let closed = transitive_closure(&dominator_masks(&d));
            for j in g.vertices() {
                let via_sets: u64 = d
                    .transitive_dominators(j)
                    .into_iter()
                    .fold(0, |m, k| m | bit(k));
                assert_eq!(closed[j], via_sets, "vertex {j} seed {seed}");
            }
        }
    }
}
