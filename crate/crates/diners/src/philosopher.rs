//! The philosopher family of systems and the single-diner controller.
//!
//! A philosopher cycles through three activities: thinking, hungry, eating.
//! Its raw dynamics are non-deterministic (stay or move on, at will); the
//! variants here successively externalise that freedom as a binary *choice*
//! input, add a controller *command* input that can override the choice, and
//! finally slow the choice down with an explicit "no input this cycle"
//! symbol so a one-cycle controller delay can never race the plant.

use crate::system::{Interconnect, System};

/// A philosopher's phase. The only legal moves are staying put or advancing
/// one step around the thinking → hungry → eating cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Activity {
    Thinking,
    Hungry,
    Eating,
}

/// A philosopher's own preference: keep the current activity or move on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Choice {
    Stay,
    Switch,
}

/// A choice slot that may be empty. `Absent` means no input arrived this
/// cycle and the philosopher must hold its state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MaybeChoice {
    Absent,
    Present(Choice),
}

/// A controller command. `Pass` defers to the philosopher's own choice;
/// the force commands substitute a fixed choice for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    Pass,
    ForceStay,
    ForceSwitch,
}

/// Single-character wire encoding shared by traces, scripts and the CLI.
pub trait Code: Sized + Copy {
    fn code(self) -> char;
    fn from_code(c: char) -> Option<Self>;
}

impl Activity {
    pub const ALL: [Activity; 3] = [Activity::Thinking, Activity::Hungry, Activity::Eating];

    /// Identity on activities; named for symmetry with [`Activity::switch`].
    pub fn stay(self) -> Activity {
        self
    }

    /// The next activity around the cycle.
    pub fn switch(self) -> Activity {
        match self {
            Activity::Thinking => Activity::Hungry,
            Activity::Hungry => Activity::Eating,
            Activity::Eating => Activity::Thinking,
        }
    }
}

impl Choice {
    pub const ALL: [Choice; 2] = [Choice::Stay, Choice::Switch];
}

impl MaybeChoice {
    pub const ALL: [MaybeChoice; 3] = [
        MaybeChoice::Absent,
        MaybeChoice::Present(Choice::Stay),
        MaybeChoice::Present(Choice::Switch),
    ];
}

impl Command {
    pub const ALL: [Command; 3] = [Command::Pass, Command::ForceStay, Command::ForceSwitch];
}

impl Code for Activity {
    fn code(self) -> char {
        match self {
            Activity::Thinking => 't',
            Activity::Hungry => 'h',
            Activity::Eating => 'e',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        match c {
            't' => Some(Activity::Thinking),
            'h' => Some(Activity::Hungry),
            'e' => Some(Activity::Eating),
            _ => None,
        }
    }
}

impl Code for Choice {
    fn code(self) -> char {
        match self {
            Choice::Stay => '0',
            Choice::Switch => '1',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        match c {
            '0' => Some(Choice::Stay),
            '1' => Some(Choice::Switch),
            _ => None,
        }
    }
}

impl Code for MaybeChoice {
    fn code(self) -> char {
        match self {
            MaybeChoice::Absent => '.',
            MaybeChoice::Present(b) => b.code(),
        }
    }

    fn from_code(c: char) -> Option<Self> {
        match c {
            '.' => Some(MaybeChoice::Absent),
            _ => Choice::from_code(c).map(MaybeChoice::Present),
        }
    }
}

impl Code for Command {
    fn code(self) -> char {
        match self {
            Command::Pass => 'p',
            Command::ForceStay => '0',
            Command::ForceSwitch => '1',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        match c {
            'p' => Some(Command::Pass),
            '0' => Some(Command::ForceStay),
            '1' => Some(Command::ForceSwitch),
            _ => None,
        }
    }
}

/// Next activity of the choice-driven philosopher: stay on `Stay`, advance
/// on `Switch`.
pub fn apply_choice(a: Activity, b: Choice) -> Activity {
    match b {
        Choice::Stay => a.stay(),
        Choice::Switch => a.switch(),
    }
}

/// Next activity under a command: `Pass` defers to the choice, a force
/// command discards the choice and substitutes its own.
pub fn apply_command(a: Activity, b: Choice, c: Command) -> Activity {
    match c {
        Command::Pass => apply_choice(a, b),
        Command::ForceStay => apply_choice(a, Choice::Stay),
        Command::ForceSwitch => apply_choice(a, Choice::Switch),
    }
}

/// Next activity when the choice slot may be empty: an absent choice holds
/// the state regardless of the command, otherwise behave as
/// [`apply_command`].
pub fn apply_paced(a: Activity, b: MaybeChoice, c: Command) -> Activity {
    match b {
        MaybeChoice::Absent => a,
        MaybeChoice::Present(b) => apply_command(a, b, c),
    }
}

/// The single-diner control law: force a hungry philosopher to switch to
/// eating, let everyone else do as they please.
pub fn control_law(a: Activity) -> Command {
    match a {
        Activity::Hungry => Command::ForceSwitch,
        Activity::Thinking | Activity::Eating => Command::Pass,
    }
}

fn activity_identity() -> Vec<(Activity, Activity)> {
    Activity::ALL.iter().map(|&a| (a, a)).collect()
}

/// The unconstrained philosopher: autonomous, non-deterministic,
/// transparent. Every state may stay or advance.
pub fn free_philosopher() -> System<Activity, (), Activity> {
    let transitions = Activity::ALL
        .iter()
        .flat_map(|&a| [(a, (), a.stay()), (a, (), a.switch())])
        .collect::<Vec<_>>();
    System::new(
        Activity::ALL,
        [Activity::Thinking],
        [()],
        transitions,
        Activity::ALL,
        activity_identity(),
    )
    .expect("free philosopher is well formed")
}

/// The choice-driven philosopher: deterministic once the binary choice is
/// supplied. Behaviourally equivalent to [`free_philosopher`].
pub fn choice_philosopher() -> System<Activity, Choice, Activity> {
    let transitions = Activity::ALL
        .iter()
        .flat_map(|&a| Choice::ALL.iter().map(move |&b| (a, b, apply_choice(a, b))))
        .collect::<Vec<_>>();
    System::new(
        Activity::ALL,
        [Activity::Thinking],
        Choice::ALL,
        transitions,
        Activity::ALL,
        activity_identity(),
    )
    .expect("choice philosopher is well formed")
}

/// The philosopher extended with a command input so a controller can
/// override its choice.
pub fn commanded_philosopher() -> System<Activity, (Choice, Command), Activity> {
    let mut transitions = Vec::new();
    for &a in &Activity::ALL {
        for &b in &Choice::ALL {
            for &c in &Command::ALL {
                transitions.push((a, (b, c), apply_command(a, b, c)));
            }
        }
    }
    let inputs = Choice::ALL
        .iter()
        .flat_map(|&b| Command::ALL.iter().map(move |&c| (b, c)))
        .collect::<Vec<_>>();
    System::new(
        Activity::ALL,
        [Activity::Thinking],
        inputs,
        transitions,
        Activity::ALL,
        activity_identity(),
    )
    .expect("commanded philosopher is well formed")
}

/// The slow-choice philosopher: like [`commanded_philosopher`] but the
/// choice slot may be empty, in which case the state holds for one cycle.
pub fn paced_philosopher() -> System<Activity, (MaybeChoice, Command), Activity> {
    let mut transitions = Vec::new();
    for &a in &Activity::ALL {
        for &b in &MaybeChoice::ALL {
            for &c in &Command::ALL {
                transitions.push((a, (b, c), apply_paced(a, b, c)));
            }
        }
    }
    let inputs = MaybeChoice::ALL
        .iter()
        .flat_map(|&b| Command::ALL.iter().map(move |&c| (b, c)))
        .collect::<Vec<_>>();
    System::new(
        Activity::ALL,
        [Activity::Thinking],
        inputs,
        transitions,
        Activity::ALL,
        activity_identity(),
    )
    .expect("paced philosopher is well formed")
}

/// The single-diner controller: reads an activity, outputs the command of
/// [`control_law`] one cycle later. Its state is the pending command.
pub fn controller() -> System<Command, Activity, Command> {
    let mut transitions = Vec::new();
    for &c in &Command::ALL {
        for &a in &Activity::ALL {
            transitions.push((c, a, control_law(a)));
        }
    }
    System::new(
        Command::ALL,
        [Command::Pass],
        Activity::ALL,
        transitions,
        Command::ALL,
        Command::ALL.iter().map(|&c| (c, c)).collect::<Vec<_>>(),
    )
    .expect("controller is well formed")
}

/// Feedback wiring between [`controller`] and [`commanded_philosopher`]:
/// the philosopher's activity feeds the controller input, the controller's
/// command feeds the philosopher's command input, and the choice component
/// is free.
pub fn feedback_interconnect_commanded(
) -> Interconnect<Command, Activity, Activity, (Choice, Command)> {
    let mut tuples = Vec::new();
    for &cmd_state in &Command::ALL {
        for &act_state in &Activity::ALL {
            for &b in &Choice::ALL {
                tuples.push((cmd_state, act_state, act_state, (b, cmd_state)));
            }
        }
    }
    Interconnect::new(tuples)
}

/// Feedback wiring between [`controller`] and [`paced_philosopher`]; same
/// shape as [`feedback_interconnect_commanded`] with the lifted choice
/// component free.
pub fn feedback_interconnect_paced(
) -> Interconnect<Command, Activity, Activity, (MaybeChoice, Command)> {
    let mut tuples = Vec::new();
    for &cmd_state in &Command::ALL {
        for &act_state in &Activity::ALL {
            for &b in &MaybeChoice::ALL {
                tuples.push((cmd_state, act_state, act_state, (b, cmd_state)));
            }
        }
    }
    Interconnect::new(tuples)
}
