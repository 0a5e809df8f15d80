//! Composition oracles: the product constructions are checked against
//! brute-force enumeration of their defining clauses, and the two routes
//! to synchronous composition are checked against each other.

use std::collections::BTreeSet;

use proptest::prelude::*;

use diners::philosopher::{
    controller, feedback_interconnect_paced, free_philosopher, paced_philosopher, Activity,
    Choice, Code, Command, MaybeChoice,
};
use diners::system::{
    compose, hoare_compose, lift_and_compose, Interconnect, System, DEFAULT_BEHAVIOUR_CAP,
};

type Transparent = System<u8, u8, u8>;

fn build_transparent(
    state_count: usize,
    input_offset: u8,
    input_count: usize,
    transition_bits: &[bool],
    initial_bits: &[bool],
) -> Transparent {
    let states: Vec<u8> = (0..state_count as u8).collect();
    let inputs: Vec<u8> = (0..input_count as u8).map(|u| u + input_offset).collect();
    let mut transitions = Vec::new();
    let mut idx = 0;
    for &s in &states {
        for &u in &inputs {
            for &t in &states {
                if transition_bits[idx] {
                    transitions.push((s, u, t));
                }
                idx += 1;
            }
        }
    }
    let mut initial: Vec<u8> = states
        .iter()
        .zip(initial_bits)
        .filter_map(|(&s, &keep)| keep.then_some(s))
        .collect();
    if initial.is_empty() {
        initial.push(0);
    }
    System::transparent(states, initial, inputs, transitions).unwrap()
}

fn arb_transparent(input_offset: u8) -> impl Strategy<Value = Transparent> {
    (1usize..=3, 1usize..=3).prop_flat_map(move |(ns, ni)| {
        (
            proptest::collection::vec(any::<bool>(), ns * ni * ns),
            proptest::collection::vec(any::<bool>(), ns),
        )
            .prop_map(move |(tbits, ibits)| {
                build_transparent(ns, input_offset, ni, &tbits, &ibits)
            })
    })
}

fn arb_pair_with_interconnect(
) -> impl Strategy<Value = (Transparent, Transparent, Interconnect<u8, u8, u8, u8>)> {
    (arb_transparent(0), arb_transparent(0)).prop_flat_map(|(c, a)| {
        let tuple_count =
            c.states().len() * a.states().len() * c.inputs().len() * a.inputs().len();
        let (c2, a2) = (c.clone(), a.clone());
        proptest::collection::vec(any::<bool>(), tuple_count).prop_map(move |bits| {
            let mut tuples = Vec::new();
            let mut idx = 0;
            for &xc in c2.states() {
                for &xa in a2.states() {
                    for &uc in c2.inputs() {
                        for &ua in a2.inputs() {
                            if bits[idx] {
                                tuples.push((xc, xa, uc, ua));
                            }
                            idx += 1;
                        }
                    }
                }
            }
            (c2.clone(), a2.clone(), Interconnect::new(tuples))
        })
    })
}

/// Brute-force enumeration of the product transition clauses: both
/// subsystem transitions must fire and the tuple must be admitted.
fn oracle_product_transitions(
    c: &Transparent,
    a: &Transparent,
    ic: &Interconnect<u8, u8, u8, u8>,
) -> BTreeSet<((u8, u8), (u8, u8), (u8, u8))> {
    let states: BTreeSet<(u8, u8)> = ic
        .tuples()
        .iter()
        .map(|&(xc, xa, _, _)| (xc, xa))
        .collect();
    let mut out = BTreeSet::new();
    for &(xc, xa) in &states {
        for &uc in c.inputs() {
            for &ua in a.inputs() {
                for &(xc2, xa2) in &states {
                    if c.transitions().contains(&(xc, uc, xc2))
                        && a.transitions().contains(&(xa, ua, xa2))
                        && ic.contains(&(xc, xa, uc, ua))
                    {
                        out.insert(((xc, xa), (uc, ua), (xc2, xa2)));
                    }
                }
            }
        }
    }
    out
}

/// Fold a lifted input pair back onto the plain label it encodes.
fn unlift(pair: &(Option<u8>, Option<u8>)) -> u8 {
    match pair {
        (Some(u), Some(v)) => {
            assert_eq!(u, v, "shared transitions must carry equal labels");
            *u
        }
        (Some(u), None) => *u,
        (None, Some(u)) => *u,
        (None, None) => panic!("the idle/idle pair must never be admitted"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn product_matches_clause_enumeration((c, a, ic) in arb_pair_with_interconnect()) {
        let product = compose(&c, &a, &ic).unwrap();
        prop_assert_eq!(product.transitions(), &oracle_product_transitions(&c, &a, &ic));
        // Clause 1 and 2: admitted pairs, intersected with initial ones.
        let states: BTreeSet<(u8, u8)> =
            ic.tuples().iter().map(|&(xc, xa, _, _)| (xc, xa)).collect();
        prop_assert_eq!(product.states(), &states);
        let initial: BTreeSet<(u8, u8)> = states
            .iter()
            .filter(|(xc, xa)| c.initial().contains(xc) && a.initial().contains(xa))
            .copied()
            .collect();
        prop_assert_eq!(product.initial(), &initial);
        prop_assert_eq!(product.inputs().len(), c.inputs().len() * a.inputs().len());
    }

    #[test]
    fn synchronous_routes_agree(c in arb_transparent(0), a in arb_transparent(1)) {
        // Input offsets 0 and 1 give partially overlapping alphabets.
        let direct = hoare_compose(&c, &a).unwrap();
        let lifted = lift_and_compose(&c, &a).unwrap();
        let relabelled: BTreeSet<((u8, u8), u8, (u8, u8))> = lifted
            .transitions()
            .iter()
            .map(|(s, u, t)| (*s, unlift(u), *t))
            .collect();
        prop_assert_eq!(&relabelled, direct.transitions());
        prop_assert_eq!(lifted.states(), direct.states());
        prop_assert_eq!(lifted.initial(), direct.initial());
    }

    #[test]
    fn clock_extension_preserves_behaviours(sys in arb_transparent(0)) {
        // Branches with bit 0 never fire, so the reachable output traces
        // under constant-1 driving are exactly the original ones.
        let extended = sys.clock_extend();
        let plain = sys.bounded_behaviours(5, DEFAULT_BEHAVIOUR_CAP).unwrap();
        let gated = extended.bounded_behaviours(5, DEFAULT_BEHAVIOUR_CAP).unwrap();
        prop_assert_eq!(plain, gated);
    }
}

#[test]
fn alternating_clock_bits_sample_the_undriven_run() {
    // Drive the clock-extended choice philosopher with bits 1,0,1,0,...,
    // holding state on bit 0. The states seen at bit-1 instants must equal
    // the undriven run on the same choices.
    let p = diners::philosopher::choice_philosopher();
    let extended = p.clock_extend();
    let choices = [
        Choice::Switch,
        Choice::Switch,
        Choice::Stay,
        Choice::Switch,
        Choice::Switch,
        Choice::Stay,
    ];

    let mut undriven = vec![Activity::Thinking];
    for &b in &choices {
        let current = *undriven.last().unwrap();
        let next = *p.successors(&current, &b).next().unwrap();
        undriven.push(next);
    }

    let mut driven = vec![Activity::Thinking];
    let mut sampled = vec![Activity::Thinking];
    let mut next_choice = 0;
    for cycle in 0..2 * choices.len() {
        let current = *driven.last().unwrap();
        let bit = cycle % 2 == 0;
        let next = if bit {
            let input = (choices[next_choice], true);
            next_choice += 1;
            let succ = *extended.successors(&current, &input).next().unwrap();
            sampled.push(succ);
            succ
        } else {
            // No transition fires on bit 0; the executor's reading is a
            // stutter.
            assert_eq!(extended.successors(&current, &(Choice::Stay, false)).count(), 0);
            current
        };
        driven.push(next);
    }
    assert_eq!(sampled, undriven);
}

#[test]
fn free_philosopher_traces_at_horizon_three() {
    let q = free_philosopher();
    let traces = q.bounded_behaviours(3, DEFAULT_BEHAVIOUR_CAP).unwrap();
    let strings: BTreeSet<String> = traces
        .iter()
        .map(|t| t.iter().map(|a| a.code()).collect())
        .collect();
    let expected: BTreeSet<String> = ["ttt", "tth", "thh", "the"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(strings, expected);
}

#[test]
fn free_and_choice_philosophers_agree_on_short_horizons() {
    let q = free_philosopher();
    let p = diners::philosopher::choice_philosopher();
    for horizon in 1..=6 {
        assert_eq!(
            q.bounded_behaviours(horizon, DEFAULT_BEHAVIOUR_CAP).unwrap(),
            p.bounded_behaviours(horizon, DEFAULT_BEHAVIOUR_CAP).unwrap(),
            "horizon {horizon}"
        );
    }
}

#[test]
fn paced_feedback_composite_replays_the_paced_table() {
    // Compose the controller with the paced philosopher through the
    // feedback interconnect and drive the lifted-choice prefix
    // ⊥,1,⊥,0,⊥,0,⊥,0,⊥,1,⊥ from the initial state. The (activity,
    // command) trajectory is the worked eleven-row table.
    let t = compose(&controller(), &paced_philosopher(), &feedback_interconnect_paced()).unwrap();
    assert!(t.is_deterministic());

    let prefix = [
        MaybeChoice::Absent,
        MaybeChoice::Present(Choice::Switch),
        MaybeChoice::Absent,
        MaybeChoice::Present(Choice::Stay),
        MaybeChoice::Absent,
        MaybeChoice::Present(Choice::Stay),
        MaybeChoice::Absent,
        MaybeChoice::Present(Choice::Stay),
        MaybeChoice::Absent,
        MaybeChoice::Present(Choice::Switch),
        MaybeChoice::Absent,
    ];
    let mut state = (Command::Pass, Activity::Thinking);
    let mut seen = vec![state];
    for b in prefix.iter().take(prefix.len() - 1) {
        let (cmd, act) = state;
        let input = (act, (*b, cmd));
        let successors: Vec<_> = t.successors(&state, &input).collect();
        assert_eq!(successors.len(), 1, "composite is deterministic");
        state = *successors[0];
        seen.push(state);
    }

    let expected_activities = "tthheeeeeet";
    let expected_commands = "ppp11pppppp";
    let activities: String = seen.iter().map(|(_, a)| a.code()).collect();
    let commands: String = seen.iter().map(|(c, _)| c.code()).collect();
    assert_eq!(activities, expected_activities);
    assert_eq!(commands, expected_commands);
}
