//! Finite transition systems with output, interconnect relations and their
//! composition.
//!
//! Systems here are *extensional*: state, input and output spaces are
//! explicit finite sets and the dynamics is a set of triples. That keeps
//! every product construction enumerable, so the domain-specific modules
//! (which run function-coded dynamics for speed) can be cross-checked
//! against exhaustive composition on small instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SystemError {
    #[error("initial state {0} is not in the state set")]
    InitialNotState(String),
    #[error("transition {0} references a label outside the system's sets")]
    BadTransition(String),
    #[error("output map misses state {0}")]
    OutputMapNotTotal(String),
    #[error("output map sends {state} to {output}, which is not in the output set")]
    BadOutput { state: String, output: String },
    #[error("interconnect tuple {0} references a label outside the composed systems")]
    BadInterconnectTuple(String),
    #[error("system is not transparent: state {0} does not map to itself")]
    NotTransparent(String),
    #[error("behaviour enumeration exceeded the cap of {cap} explored nodes")]
    ExplorationCapExceeded { cap: usize },
    #[error("clock period must be at least 1")]
    ZeroPeriod,
}

/// A six-field system record: states, initial states, inputs, transition
/// relation, outputs and a total output map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct System<S, U, Y> {
    states: BTreeSet<S>,
    initial: BTreeSet<S>,
    inputs: BTreeSet<U>,
    transitions: BTreeSet<(S, U, S)>,
    outputs: BTreeSet<Y>,
    output_map: BTreeMap<S, Y>,
}

impl<S, U, Y> System<S, U, Y>
where
    S: Clone + Ord + Debug,
    U: Clone + Ord + Debug,
    Y: Clone + Ord + Debug,
{
    /// Build a system, validating that initial states, transition triples
    /// and the output map stay inside the declared sets.
    pub fn new(
        states: impl IntoIterator<Item = S>,
        initial: impl IntoIterator<Item = S>,
        inputs: impl IntoIterator<Item = U>,
        transitions: impl IntoIterator<Item = (S, U, S)>,
        outputs: impl IntoIterator<Item = Y>,
        output_map: impl IntoIterator<Item = (S, Y)>,
    ) -> Result<Self, SystemError> {
        let states: BTreeSet<S> = states.into_iter().collect();
        let initial: BTreeSet<S> = initial.into_iter().collect();
        let inputs: BTreeSet<U> = inputs.into_iter().collect();
        let transitions: BTreeSet<(S, U, S)> = transitions.into_iter().collect();
        let outputs: BTreeSet<Y> = outputs.into_iter().collect();
        let output_map: BTreeMap<S, Y> = output_map.into_iter().collect();

        for s in &initial {
            if !states.contains(s) {
                return Err(SystemError::InitialNotState(format!("{s:?}")));
            }
        }
        for (s, u, t) in &transitions {
            if !states.contains(s) || !states.contains(t) || !inputs.contains(u) {
                return Err(SystemError::BadTransition(format!("{:?}", (s, u, t))));
            }
        }
        for s in &states {
            match output_map.get(s) {
                None => return Err(SystemError::OutputMapNotTotal(format!("{s:?}"))),
                Some(y) if !outputs.contains(y) => {
                    return Err(SystemError::BadOutput {
                        state: format!("{s:?}"),
                        output: format!("{y:?}"),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(System {
            states,
            initial,
            inputs,
            transitions,
            outputs,
            output_map,
        })
    }

    pub fn states(&self) -> &BTreeSet<S> {
        &self.states
    }

    pub fn initial(&self) -> &BTreeSet<S> {
        &self.initial
    }

    pub fn inputs(&self) -> &BTreeSet<U> {
        &self.inputs
    }

    pub fn transitions(&self) -> &BTreeSet<(S, U, S)> {
        &self.transitions
    }

    pub fn outputs(&self) -> &BTreeSet<Y> {
        &self.outputs
    }

    /// Output of a state. Panics if the state is foreign to the system;
    /// construction guarantees totality over its own states.
    pub fn output(&self, s: &S) -> &Y {
        &self.output_map[s]
    }

    pub fn successors<'a>(&'a self, s: &'a S, u: &'a U) -> impl Iterator<Item = &'a S> {
        self.transitions
            .iter()
            .filter(move |(from, input, _)| from == s && input == u)
            .map(|(_, _, to)| to)
    }

    /// True when no (state, input) pair has two successors.
    pub fn is_deterministic(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.transitions
            .iter()
            .all(|(s, u, _)| seen.insert((s.clone(), u.clone())))
    }

    /// Extend the interface with a clock bit: transitions fire only when
    /// the underlying transition fires and the bit is 1.
    pub fn clock_extend(&self) -> System<S, (U, bool), Y> {
        let inputs: BTreeSet<(U, bool)> = self
            .inputs
            .iter()
            .flat_map(|u| [(u.clone(), false), (u.clone(), true)])
            .collect();
        let transitions: BTreeSet<(S, (U, bool), S)> = self
            .transitions
            .iter()
            .map(|(s, u, t)| (s.clone(), (u.clone(), true), t.clone()))
            .collect();
        System {
            states: self.states.clone(),
            initial: self.initial.clone(),
            inputs,
            transitions,
            outputs: self.outputs.clone(),
            output_map: self.output_map.clone(),
        }
    }

    /// The exact set of length-`horizon` output traces reachable from the
    /// initial states under all input resolutions. `cap` bounds the number
    /// of explored nodes.
    pub fn bounded_behaviours(
        &self,
        horizon: usize,
        cap: usize,
    ) -> Result<BTreeSet<Vec<Y>>, SystemError> {
        assert!(horizon >= 1, "horizon must be at least 1");
        let mut layer: BTreeSet<(S, Vec<Y>)> = self
            .initial
            .iter()
            .map(|s| (s.clone(), vec![self.output(s).clone()]))
            .collect();
        let mut explored = layer.len();
        for _ in 1..horizon {
            let mut next = BTreeSet::new();
            for (s, trace) in &layer {
                for (from, _, to) in &self.transitions {
                    if from != s {
                        continue;
                    }
                    explored += 1;
                    if explored > cap {
                        return Err(SystemError::ExplorationCapExceeded { cap });
                    }
                    let mut extended = trace.clone();
                    extended.push(self.output(to).clone());
                    next.insert((to.clone(), extended));
                }
            }
            layer = next;
        }
        Ok(layer.into_iter().map(|(_, trace)| trace).collect())
    }
}

/// Default cap for behaviour enumeration.
pub const DEFAULT_BEHAVIOUR_CAP: usize = 1_000_000;

impl<S, U> System<S, U, S>
where
    S: Clone + Ord + Debug,
    U: Clone + Ord + Debug,
{
    /// Build a transparent system: outputs are the states themselves.
    pub fn transparent(
        states: impl IntoIterator<Item = S>,
        initial: impl IntoIterator<Item = S>,
        inputs: impl IntoIterator<Item = U>,
        transitions: impl IntoIterator<Item = (S, U, S)>,
    ) -> Result<Self, SystemError> {
        let states: Vec<S> = states.into_iter().collect();
        let outputs = states.clone();
        let output_map: Vec<(S, S)> = states.iter().map(|s| (s.clone(), s.clone())).collect();
        System::new(states, initial, inputs, transitions, outputs, output_map)
    }

    /// True when the output map is the identity.
    pub fn is_transparent(&self) -> bool {
        self.states.iter().all(|s| self.output(s) == s)
    }
}

/// An interconnect relates the states and the inputs of two systems; it
/// fully determines their composition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interconnect<Sc, Sa, Uc, Ua> {
    tuples: BTreeSet<(Sc, Sa, Uc, Ua)>,
}

impl<Sc, Sa, Uc, Ua> Interconnect<Sc, Sa, Uc, Ua>
where
    Sc: Clone + Ord + Debug,
    Sa: Clone + Ord + Debug,
    Uc: Clone + Ord + Debug,
    Ua: Clone + Ord + Debug,
{
    pub fn new(tuples: impl IntoIterator<Item = (Sc, Sa, Uc, Ua)>) -> Self {
        Interconnect {
            tuples: tuples.into_iter().collect(),
        }
    }

    pub fn tuples(&self) -> &BTreeSet<(Sc, Sa, Uc, Ua)> {
        &self.tuples
    }

    pub fn contains(&self, t: &(Sc, Sa, Uc, Ua)) -> bool {
        self.tuples.contains(t)
    }
}

/// Composition of two systems with respect to an interconnect.
///
/// Product states are the pairs admitted by the interconnect; a product
/// transition fires only when both subsystem transitions fire and the
/// (states, inputs) tuple is admitted.
pub fn compose<Sc, Sa, Uc, Ua, Yc, Ya>(
    sys_c: &System<Sc, Uc, Yc>,
    sys_a: &System<Sa, Ua, Ya>,
    ic: &Interconnect<Sc, Sa, Uc, Ua>,
) -> Result<System<(Sc, Sa), (Uc, Ua), (Yc, Ya)>, SystemError>
where
    Sc: Clone + Ord + Debug,
    Sa: Clone + Ord + Debug,
    Uc: Clone + Ord + Debug,
    Ua: Clone + Ord + Debug,
    Yc: Clone + Ord + Debug,
    Ya: Clone + Ord + Debug,
{
    for t @ (xc, xa, uc, ua) in ic.tuples() {
        if !sys_c.states().contains(xc)
            || !sys_a.states().contains(xa)
            || !sys_c.inputs().contains(uc)
            || !sys_a.inputs().contains(ua)
        {
            return Err(SystemError::BadInterconnectTuple(format!("{t:?}")));
        }
    }

    let states: BTreeSet<(Sc, Sa)> = ic
        .tuples()
        .iter()
        .map(|(xc, xa, _, _)| (xc.clone(), xa.clone()))
        .collect();
    let initial: BTreeSet<(Sc, Sa)> = states
        .iter()
        .filter(|(xc, xa)| sys_c.initial().contains(xc) && sys_a.initial().contains(xa))
        .cloned()
        .collect();
    let inputs: BTreeSet<(Uc, Ua)> = sys_c
        .inputs()
        .iter()
        .flat_map(|uc| {
            sys_a
                .inputs()
                .iter()
                .map(move |ua| (uc.clone(), ua.clone()))
        })
        .collect();

    let mut transitions = BTreeSet::new();
    for (xc, xa, uc, ua) in ic.tuples() {
        for xc2 in sys_c.successors(xc, uc) {
            for xa2 in sys_a.successors(xa, ua) {
                if states.contains(&(xc2.clone(), xa2.clone())) {
                    transitions.insert((
                        (xc.clone(), xa.clone()),
                        (uc.clone(), ua.clone()),
                        (xc2.clone(), xa2.clone()),
                    ));
                }
            }
        }
    }

    let outputs: BTreeSet<(Yc, Ya)> = sys_c
        .outputs()
        .iter()
        .flat_map(|yc| {
            sys_a
                .outputs()
                .iter()
                .map(move |ya| (yc.clone(), ya.clone()))
        })
        .collect();
    let output_map: BTreeMap<(Sc, Sa), (Yc, Ya)> = states
        .iter()
        .map(|(xc, xa)| {
            (
                (xc.clone(), xa.clone()),
                (sys_c.output(xc).clone(), sys_a.output(xa).clone()),
            )
        })
        .collect();

    Ok(System {
        states,
        initial,
        inputs,
        transitions,
        outputs,
        output_map,
    })
}

/// Synchronous (shared-action) composition of two transparent systems:
/// shared inputs advance both sides in lockstep, non-shared inputs advance
/// exactly one side.
pub fn hoare_compose<Sc, Sa, U>(
    sys_c: &System<Sc, U, Sc>,
    sys_a: &System<Sa, U, Sa>,
) -> Result<System<(Sc, Sa), U, (Sc, Sa)>, SystemError>
where
    Sc: Clone + Ord + Debug,
    Sa: Clone + Ord + Debug,
    U: Clone + Ord + Debug,
{
    require_transparent(sys_c)?;
    require_transparent(sys_a)?;

    let states: Vec<(Sc, Sa)> = sys_c
        .states()
        .iter()
        .flat_map(|xc| {
            sys_a
                .states()
                .iter()
                .map(move |xa| (xc.clone(), xa.clone()))
        })
        .collect();
    let initial: Vec<(Sc, Sa)> = sys_c
        .initial()
        .iter()
        .flat_map(|xc| {
            sys_a
                .initial()
                .iter()
                .map(move |xa| (xc.clone(), xa.clone()))
        })
        .collect();
    let inputs: BTreeSet<U> = sys_c.inputs().union(sys_a.inputs()).cloned().collect();

    let mut transitions = Vec::new();
    for (xc, xa) in &states {
        for u in &inputs {
            let in_c = sys_c.inputs().contains(u);
            let in_a = sys_a.inputs().contains(u);
            if in_c && in_a {
                for xc2 in sys_c.successors(xc, u) {
                    for xa2 in sys_a.successors(xa, u) {
                        transitions.push(((xc.clone(), xa.clone()), u.clone(), (xc2.clone(), xa2.clone())));
                    }
                }
            } else if in_c {
                for xc2 in sys_c.successors(xc, u) {
                    transitions.push(((xc.clone(), xa.clone()), u.clone(), (xc2.clone(), xa.clone())));
                }
            } else if in_a {
                for xa2 in sys_a.successors(xa, u) {
                    transitions.push(((xc.clone(), xa.clone()), u.clone(), (xc.clone(), xa2.clone())));
                }
            }
        }
    }

    System::transparent(states, initial, inputs, transitions)
}

/// The same synchronous composition, but obtained by lifting both input
/// spaces with an idle element (`None`), adding idle self-loops, and
/// composing with the interconnect that pairs shared inputs and idles the
/// side that does not own a non-shared input. Serves as an independent
/// route to [`hoare_compose`].
pub fn lift_and_compose<Sc, Sa, U>(
    sys_c: &System<Sc, U, Sc>,
    sys_a: &System<Sa, U, Sa>,
) -> Result<System<(Sc, Sa), (Option<U>, Option<U>), (Sc, Sa)>, SystemError>
where
    Sc: Clone + Ord + Debug,
    Sa: Clone + Ord + Debug,
    U: Clone + Ord + Debug,
{
    require_transparent(sys_c)?;
    require_transparent(sys_a)?;

    let lifted_c = lift(sys_c);
    let lifted_a = lift(sys_a);

    let shared: BTreeSet<&U> = sys_c.inputs().intersection(sys_a.inputs()).collect();
    let only_c: BTreeSet<&U> = sys_c.inputs().difference(sys_a.inputs()).collect();
    let only_a: BTreeSet<&U> = sys_a.inputs().difference(sys_c.inputs()).collect();

    let mut pairs: Vec<(Option<U>, Option<U>)> = Vec::new();
    for u in &shared {
        pairs.push((Some((*u).clone()), Some((*u).clone())));
    }
    for u in &only_c {
        pairs.push((Some((*u).clone()), None));
    }
    for u in &only_a {
        pairs.push((None, Some((*u).clone())));
    }

    let mut tuples = Vec::new();
    for xc in sys_c.states() {
        for xa in sys_a.states() {
            for (uc, ua) in &pairs {
                tuples.push((xc.clone(), xa.clone(), uc.clone(), ua.clone()));
            }
        }
    }
    let ic = Interconnect::new(tuples);
    let product = compose(&lifted_c, &lifted_a, &ic)?;

    // The Tabuada product of transparent systems outputs state pairs; fold
    // the nested pair back into the plain (Sc, Sa) form.
    let transitions: Vec<((Sc, Sa), (Option<U>, Option<U>), (Sc, Sa))> = product
        .transitions()
        .iter()
        .cloned()
        .collect();
    System::transparent(
        product.states().iter().cloned().collect::<Vec<_>>(),
        product.initial().iter().cloned().collect::<Vec<_>>(),
        product.inputs().iter().cloned().collect::<Vec<_>>(),
        transitions,
    )
}

fn require_transparent<S, U>(sys: &System<S, U, S>) -> Result<(), SystemError>
where
    S: Clone + Ord + Debug,
    U: Clone + Ord + Debug,
{
    match sys.states().iter().find(|s| sys.output(s) != *s) {
        Some(s) => Err(SystemError::NotTransparent(format!("{s:?}"))),
        None => Ok(()),
    }
}

/// Lift a transparent system's input space with `None` and add idle
/// self-loops on every state.
fn lift<S, U>(sys: &System<S, U, S>) -> System<S, Option<U>, S>
where
    S: Clone + Ord + Debug,
    U: Clone + Ord + Debug,
{
    let inputs: Vec<Option<U>> = std::iter::once(None)
        .chain(sys.inputs().iter().cloned().map(Some))
        .collect();
    let transitions: Vec<(S, Option<U>, S)> = sys
        .transitions()
        .iter()
        .map(|(s, u, t)| (s.clone(), Some(u.clone()), t.clone()))
        .chain(sys.states().iter().map(|s| (s.clone(), None, s.clone())))
        .collect();
    System::transparent(
        sys.states().iter().cloned().collect::<Vec<_>>(),
        sys.initial().iter().cloned().collect::<Vec<_>>(),
        inputs,
        transitions,
    )
    .expect("lifting preserves well-formedness")
}

/// A global clock with integer timebase: output is 1 exactly when `now` is
/// a multiple of `period`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clock {
    period: u64,
    now: u64,
}

impl Clock {
    pub fn new(period: u64) -> Result<Self, SystemError> {
        if period == 0 {
            return Err(SystemError::ZeroPeriod);
        }
        Ok(Clock { period, now: 0 })
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Advance time by `units` base time units.
    pub fn advance(&mut self, units: u64) {
        self.now += units;
    }

    /// The tick output: true exactly at multiples of the period.
    pub fn ticking(&self) -> bool {
        self.now % self.period == 0
    }
}
