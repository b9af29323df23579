//! Core domain types: move alphabets, positions, payoff automata, game
//! specs, behavioral strategies, and the elementary payoff transforms.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::matrix::Field;
use crate::rational::Q;

/// The two players. Player I picks from `X` and maximizes; player II picks
/// from `Y` and minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    I,
    II,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::I => Player::II,
            Player::II => Player::I,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::I => write!(f, "I"),
            Player::II => write!(f, "II"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    EmptyAlphabet(Player),
    DuplicateMove {
        player: Player,
        label: String,
    },
    UnknownMove {
        player: Player,
        label: String,
    },
    TransitionShape {
        state: String,
    },
    TransitionTarget {
        state: String,
        target: usize,
    },
    TerminalNotAbsorbing {
        state: String,
    },
    DuplicateState {
        name: String,
    },
    UnknownState {
        name: String,
    },
    MissingPayoff {
        state: String,
        context: String,
    },
    PayoffOutOfBounds {
        state: String,
    },
    MatrixShape {
        expected_rows: usize,
        expected_cols: usize,
    },
    EntryOutOfBounds {
        row: usize,
        col: usize,
    },
    BoundsInverted,
    BoundsExcludeIndicator,
    NonStochasticRow {
        context: String,
    },
    NegativeProbability {
        context: String,
    },
    RowLength {
        context: String,
        expected: usize,
        got: usize,
    },
    AlphabetMismatch {
        detail: String,
    },
    PositionOutOfRange {
        index: usize,
    },
    NegativeScale,
    UnsupportedKind {
        operation: &'static str,
        kind: String,
    },
    DescriptorMismatch {
        kind: String,
    },
    BadStartPosition {
        detail: String,
    },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ModelError::*;
        match self {
            EmptyAlphabet(p) => write!(f, "alphabet empty for player {p}"),
            DuplicateMove { player, label } => {
                write!(f, "duplicate move label '{label}' for player {player}")
            }
            UnknownMove { player, label } => {
                write!(f, "unknown move label '{label}' for player {player}")
            }
            TransitionShape { state } => {
                write!(f, "transition function of state '{state}' is not total")
            }
            TransitionTarget { state, target } => {
                write!(f, "state '{state}' has transition to unknown state #{target}")
            }
            TerminalNotAbsorbing { state } => {
                write!(f, "terminal state '{state}' has an outgoing non-self transition")
            }
            DuplicateState { name } => write!(f, "duplicate state '{name}'"),
            UnknownState { name } => write!(f, "unknown state '{name}'"),
            MissingPayoff { state, context } => {
                write!(f, "state '{state}' is missing a payoff label ({context})")
            }
            PayoffOutOfBounds { state } => {
                write!(f, "payoff label of state '{state}' lies outside the declared bounds")
            }
            MatrixShape {
                expected_rows,
                expected_cols,
            } => write!(
                f,
                "matrix dimension mismatch: expected {expected_rows} rows of {expected_cols} entries"
            ),
            EntryOutOfBounds { row, col } => {
                write!(f, "matrix entry ({row}, {col}) lies outside the declared bounds")
            }
            BoundsInverted => write!(f, "payoff bounds are inverted"),
            BoundsExcludeIndicator => {
                write!(f, "indicator payoffs need bounds containing [0, 1]")
            }
            NonStochasticRow { context } => {
                write!(f, "non-stochastic row ({context}): probabilities must sum to 1")
            }
            NegativeProbability { context } => {
                write!(f, "negative probability ({context})")
            }
            RowLength {
                context,
                expected,
                got,
            } => write!(
                f,
                "probability row ({context}) has {got} entries, expected {expected}"
            ),
            AlphabetMismatch { detail } => write!(f, "alphabet mismatch: {detail}"),
            PositionOutOfRange { index } => {
                write!(f, "position contains joint-move index {index} outside the alphabet")
            }
            NegativeScale => write!(f, "scale factor must be nonnegative"),
            UnsupportedKind { operation, kind } => {
                write!(f, "operation '{operation}' does not support kind '{kind}'")
            }
            DescriptorMismatch { kind } => {
                write!(f, "payoff descriptor does not match kind '{kind}'")
            }
            BadStartPosition { detail } => write!(f, "bad start position: {detail}"),
        }
    }
}

impl std::error::Error for ModelError {}

/// Finite move sets for the two players. The joint alphabet is `X x Y`
/// enumerated row-major: `z = x * |Y| + y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveAlphabets {
    x_moves: Vec<String>,
    y_moves: Vec<String>,
}

impl MoveAlphabets {
    pub fn new(x_moves: Vec<String>, y_moves: Vec<String>) -> Result<Self, ModelError> {
        for (player, moves) in [(Player::I, &x_moves), (Player::II, &y_moves)] {
            if moves.is_empty() {
                return Err(ModelError::EmptyAlphabet(player));
            }
            for (i, label) in moves.iter().enumerate() {
                if moves[..i].contains(label) {
                    return Err(ModelError::DuplicateMove {
                        player,
                        label: label.clone(),
                    });
                }
            }
        }
        Ok(MoveAlphabets { x_moves, y_moves })
    }

    pub fn x_len(&self) -> usize {
        self.x_moves.len()
    }

    pub fn y_len(&self) -> usize {
        self.y_moves.len()
    }

    pub fn joint_len(&self) -> usize {
        self.x_moves.len() * self.y_moves.len()
    }

    pub fn moves(&self, player: Player) -> &[String] {
        match player {
            Player::I => &self.x_moves,
            Player::II => &self.y_moves,
        }
    }

    pub fn move_count(&self, player: Player) -> usize {
        self.moves(player).len()
    }

    pub fn joint_index(&self, x: usize, y: usize) -> usize {
        x * self.y_moves.len() + y
    }

    pub fn split_joint(&self, z: usize) -> (usize, usize) {
        (z / self.y_moves.len(), z % self.y_moves.len())
    }

    pub fn move_index(&self, player: Player, label: &str) -> Result<usize, ModelError> {
        self.moves(player)
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| ModelError::UnknownMove {
                player,
                label: label.to_string(),
            })
    }

    pub fn joint_label(&self, z: usize) -> (String, String) {
        let (x, y) = self.split_joint(z);
        (self.x_moves[x].clone(), self.y_moves[y].clone())
    }
}

/// A finite play: a sequence of joint-move indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Position(Vec<usize>);

impl Position {
    pub fn empty() -> Self {
        Position(Vec::new())
    }

    pub fn from_moves(moves: Vec<usize>) -> Self {
        Position(moves)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn moves(&self) -> &[usize] {
        &self.0
    }

    pub fn child(&self, z: usize) -> Position {
        let mut moves = self.0.clone();
        moves.push(z);
        Position(moves)
    }

    /// `self` precedes or equals `other`.
    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// `self` strictly precedes `other`.
    pub fn strictly_precedes(&self, other: &Position) -> bool {
        other.0.len() > self.0.len() && self.is_prefix_of(other)
    }

    pub fn prefix(&self, len: usize) -> Position {
        Position(self.0[..len].to_vec())
    }

    /// The remainder of `other` after this prefix.
    pub fn suffix_of(&self, other: &Position) -> Option<Position> {
        if self.is_prefix_of(other) {
            Some(Position(other.0[self.0.len()..].to_vec()))
        } else {
            None
        }
    }
}

/// Per-state payoff record of an automaton.
#[derive(Debug, Clone, PartialEq)]
pub struct StateLabel {
    /// Position value used by sup-payoffs and as terminal payoff.
    pub u: Option<Q>,
    /// Membership flag used by open-set and recurrence objectives.
    pub accepting: bool,
    /// Absorbing: the payoff is decided once this state is entered.
    pub terminal: bool,
}

impl StateLabel {
    pub fn new(u: Option<Q>, accepting: bool, terminal: bool) -> Self {
        StateLabel {
            u,
            accepting,
            terminal,
        }
    }
}

/// Deterministic automaton over joint moves whose state labels drive the
/// payoff. States are canonicalized (sorted by name) at construction so
/// serialization round-trips structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffAutomaton {
    pub name: String,
    state_names: Vec<String>,
    labels: Vec<StateLabel>,
    start: usize,
    /// `transitions[state][joint]`.
    transitions: Vec<Vec<usize>>,
}

impl PayoffAutomaton {
    pub fn new(
        name: impl Into<String>,
        state_names: Vec<String>,
        labels: Vec<StateLabel>,
        start: usize,
        transitions: Vec<Vec<usize>>,
        joint_len: usize,
    ) -> Result<Self, ModelError> {
        let count = state_names.len();
        if labels.len() != count || transitions.len() != count {
            return Err(ModelError::TransitionShape {
                state: "<automaton>".into(),
            });
        }
        for (i, sname) in state_names.iter().enumerate() {
            if state_names[..i].contains(sname) {
                return Err(ModelError::DuplicateState {
                    name: sname.clone(),
                });
            }
        }
        if start >= count {
            return Err(ModelError::UnknownState {
                name: format!("#{start}"),
            });
        }

        // Canonical state order: sorted by name.
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| state_names[a].cmp(&state_names[b]));
        let mut remap = vec![0usize; count];
        for (new_idx, &old_idx) in order.iter().enumerate() {
            remap[old_idx] = new_idx;
        }
        let mut names = vec![String::new(); count];
        let mut labs = vec![StateLabel::new(None, false, false); count];
        let mut trans = vec![Vec::new(); count];
        for old in 0..count {
            names[remap[old]] = state_names[old].clone();
            labs[remap[old]] = labels[old].clone();
            trans[remap[old]] = transitions[old]
                .iter()
                .map(|&t| {
                    if t < count {
                        Ok(remap[t])
                    } else {
                        Err(ModelError::TransitionTarget {
                            state: state_names[old].clone(),
                            target: t,
                        })
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
        }

        let automaton = PayoffAutomaton {
            name: name.into(),
            state_names: names,
            labels: labs,
            start: remap[start],
            transitions: trans,
        };
        automaton.validate(joint_len)?;
        Ok(automaton)
    }

    fn validate(&self, joint_len: usize) -> Result<(), ModelError> {
        for (s, row) in self.transitions.iter().enumerate() {
            if row.len() != joint_len {
                return Err(ModelError::TransitionShape {
                    state: self.state_names[s].clone(),
                });
            }
            if self.labels[s].terminal {
                for &t in row {
                    if t != s {
                        return Err(ModelError::TerminalNotAbsorbing {
                            state: self.state_names[s].clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.state_names[s]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn label(&self, s: usize) -> &StateLabel {
        &self.labels[s]
    }

    pub fn labels(&self) -> &[StateLabel] {
        &self.labels
    }

    pub fn step(&self, s: usize, z: usize) -> usize {
        self.transitions[s][z]
    }

    pub fn transitions(&self, s: usize) -> &[usize] {
        &self.transitions[s]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_names.iter().position(|n| n == name)
    }

    /// State reached from `from` after playing `p`.
    pub fn run_from(&self, from: usize, p: &Position) -> Result<usize, ModelError> {
        let joint = self.transitions[0].len();
        let mut s = from;
        for &z in p.moves() {
            if z >= joint {
                return Err(ModelError::PositionOutOfRange { index: z });
            }
            s = self.transitions[s][z];
        }
        Ok(s)
    }

    /// States visited along `p` from the start state, including both ends.
    pub fn visited_from_start(&self, p: &Position) -> Result<Vec<usize>, ModelError> {
        let joint = self.transitions[0].len();
        let mut s = self.start;
        let mut out = Vec::with_capacity(p.len() + 1);
        out.push(s);
        for &z in p.moves() {
            if z >= joint {
                return Err(ModelError::PositionOutOfRange { index: z });
            }
            s = self.transitions[s][z];
            out.push(s);
        }
        Ok(out)
    }

    /// All states reachable from `from` in any number of steps.
    pub fn reachable_from(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(s) = stack.pop() {
            for &t in &self.transitions[s] {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }

    /// States reachable from `from` in exactly `depth` steps.
    pub fn reachable_in_exactly(&self, from: usize, depth: usize) -> Vec<bool> {
        let mut layer = vec![false; self.num_states()];
        layer[from] = true;
        for _ in 0..depth {
            let mut next = vec![false; self.num_states()];
            for (s, &on) in layer.iter().enumerate() {
                if on {
                    for &t in &self.transitions[s] {
                        next[t] = true;
                    }
                }
            }
            layer = next;
        }
        layer
    }

    /// Quotient by label-preserving bisimulation (Moore partition
    /// refinement): the smallest automaton with the same labeled behavior
    /// from every state.
    pub fn minimized(&self) -> PayoffAutomaton {
        let n = self.num_states();
        let joint = self.transitions[0].len();
        // Initial partition by state label.
        let mut class = vec![0usize; n];
        {
            let mut seen: Vec<(usize, usize)> = Vec::new(); // (representative, class)
            for s in 0..n {
                let found = seen
                    .iter()
                    .find(|&&(rep, _)| self.labels[rep] == self.labels[s]);
                class[s] = match found {
                    Some(&(_, c)) => c,
                    None => {
                        let c = seen.len();
                        seen.push((s, c));
                        c
                    }
                };
            }
        }
        loop {
            let mut signatures: Vec<(usize, Vec<usize>)> = Vec::with_capacity(n);
            for s in 0..n {
                signatures.push((
                    class[s],
                    self.transitions[s].iter().map(|&t| class[t]).collect(),
                ));
            }
            let mut next = vec![0usize; n];
            let mut seen: Vec<(usize, usize)> = Vec::new();
            for s in 0..n {
                let found = seen
                    .iter()
                    .find(|&&(rep, _)| signatures[rep] == signatures[s]);
                next[s] = match found {
                    Some(&(_, c)) => c,
                    None => {
                        let c = seen.len();
                        seen.push((s, c));
                        c
                    }
                };
            }
            if next == class {
                break;
            }
            class = next;
        }
        let count = class.iter().max().map(|&c| c + 1).unwrap_or(0);
        let mut rep = vec![usize::MAX; count];
        for s in 0..n {
            if s < rep[class[s]] {
                rep[class[s]] = s;
            }
        }
        let names: Vec<String> = rep.iter().map(|&s| self.state_names[s].clone()).collect();
        let labels: Vec<StateLabel> = rep.iter().map(|&s| self.labels[s].clone()).collect();
        let transitions: Vec<Vec<usize>> = rep
            .iter()
            .map(|&s| self.transitions[s].iter().map(|&t| class[t]).collect())
            .collect();
        PayoffAutomaton::new(
            self.name.clone(),
            names,
            labels,
            class[self.start],
            transitions,
            joint,
        )
        .expect("quotient of a valid automaton is valid")
    }

    /// Structural fingerprint under BFS renumbering from the start state.
    /// Two automata over the same alphabet get equal signatures iff their
    /// reachable parts are isomorphic respecting labels.
    pub fn reachable_signature(&self) -> Vec<(Option<Q>, bool, bool, Vec<usize>)> {
        let joint = self.transitions[0].len();
        let mut order: Vec<usize> = Vec::new();
        let mut index = vec![usize::MAX; self.num_states()];
        let mut queue = std::collections::VecDeque::new();
        index[self.start] = 0;
        order.push(self.start);
        queue.push_back(self.start);
        while let Some(s) = queue.pop_front() {
            for z in 0..joint {
                let t = self.transitions[s][z];
                if index[t] == usize::MAX {
                    index[t] = order.len();
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        order
            .iter()
            .map(|&s| {
                let lab = &self.labels[s];
                (
                    lab.u.clone(),
                    lab.accepting,
                    lab.terminal,
                    self.transitions[s].iter().map(|&t| index[t]).collect(),
                )
            })
            .collect()
    }
}

/// Payoff family of a game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameKind {
    /// One simultaneous round scored by an explicit table.
    Matrix,
    /// Exactly `n` rounds; the automaton state reached at the horizon pays
    /// its `u` label.
    Finite(usize),
    /// Payoff is the supremum of `u` over all visited states.
    GeneralizedOpen,
    /// Payoff 1 once an accepting state is visited, else 0.
    OpenSet,
    /// Payoff 1 iff accepting states are visited infinitely often.
    GDelta,
    /// Payoff 1 once any component automaton accepts.
    UnionOfOpen,
}

impl GameKind {
    pub fn token(&self) -> String {
        match self {
            GameKind::Matrix => "matrix".into(),
            GameKind::Finite(n) => format!("finite {n}"),
            GameKind::GeneralizedOpen => "generalized-open".into(),
            GameKind::OpenSet => "open-set".into(),
            GameKind::GDelta => "gdelta".into(),
            GameKind::UnionOfOpen => "union".into(),
        }
    }
}

/// Payoff data backing a [`GameKind`].
#[derive(Debug, Clone, PartialEq)]
pub enum PayoffDescriptor {
    Table(Vec<Vec<Q>>),
    Automaton(PayoffAutomaton),
    Union(Vec<PayoffAutomaton>),
}

/// A fully validated game description.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub name: String,
    pub alphabets: MoveAlphabets,
    pub kind: GameKind,
    pub descriptor: PayoffDescriptor,
    /// Closed interval containing every possible payoff.
    pub bounds: (Q, Q),
    /// Position the game starts from; empty by default.
    pub start_position: Position,
}

impl GameSpec {
    pub fn new(
        name: impl Into<String>,
        alphabets: MoveAlphabets,
        kind: GameKind,
        descriptor: PayoffDescriptor,
        bounds: (Q, Q),
        start_position: Position,
    ) -> Result<Self, ModelError> {
        let spec = GameSpec {
            name: name.into(),
            alphabets,
            kind,
            descriptor,
            bounds,
            start_position,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let (lo, hi) = &self.bounds;
        if lo > hi {
            return Err(ModelError::BoundsInverted);
        }
        for &z in self.start_position.moves() {
            if z >= self.alphabets.joint_len() {
                return Err(ModelError::BadStartPosition {
                    detail: format!("joint index {z} outside the alphabet"),
                });
            }
        }
        match (&self.kind, &self.descriptor) {
            (GameKind::Matrix, PayoffDescriptor::Table(rows)) => {
                if rows.len() != self.alphabets.x_len()
                    || rows.iter().any(|r| r.len() != self.alphabets.y_len())
                {
                    return Err(ModelError::MatrixShape {
                        expected_rows: self.alphabets.x_len(),
                        expected_cols: self.alphabets.y_len(),
                    });
                }
                for (i, row) in rows.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        if v < lo || v > hi {
                            return Err(ModelError::EntryOutOfBounds { row: i, col: j });
                        }
                    }
                }
                if !self.start_position.is_empty() {
                    return Err(ModelError::BadStartPosition {
                        detail: "matrix games start at the empty position".into(),
                    });
                }
            }
            (GameKind::Finite(n), PayoffDescriptor::Automaton(aut)) => {
                aut.validate(self.alphabets.joint_len())?;
                self.check_u_bounds(aut)?;
                let from = aut.run_from(aut.start(), &self.start_position)?;
                let horizon = aut.reachable_in_exactly(from, *n);
                for (s, &on) in horizon.iter().enumerate() {
                    if on && aut.label(s).u.is_none() {
                        return Err(ModelError::MissingPayoff {
                            state: aut.state_name(s).to_string(),
                            context: format!("reachable at horizon {n}"),
                        });
                    }
                }
                self.check_terminals_have_u(aut)?;
            }
            (GameKind::GeneralizedOpen, PayoffDescriptor::Automaton(aut)) => {
                aut.validate(self.alphabets.joint_len())?;
                self.check_u_bounds(aut)?;
                let from = aut.run_from(aut.start(), &self.start_position)?;
                for (s, &on) in aut.reachable_from(from).iter().enumerate() {
                    if on && aut.label(s).u.is_none() {
                        return Err(ModelError::MissingPayoff {
                            state: aut.state_name(s).to_string(),
                            context: "reachable in a sup-payoff game".into(),
                        });
                    }
                }
            }
            (GameKind::OpenSet, PayoffDescriptor::Automaton(aut))
            | (GameKind::GDelta, PayoffDescriptor::Automaton(aut)) => {
                aut.validate(self.alphabets.joint_len())?;
                self.check_u_bounds(aut)?;
                if lo > &Q::zero() || hi < &Q::one() {
                    return Err(ModelError::BoundsExcludeIndicator);
                }
            }
            (GameKind::UnionOfOpen, PayoffDescriptor::Union(auts)) => {
                if auts.is_empty() {
                    return Err(ModelError::DescriptorMismatch {
                        kind: self.kind.token(),
                    });
                }
                for aut in auts {
                    aut.validate(self.alphabets.joint_len())?;
                    self.check_u_bounds(aut)?;
                }
                if lo > &Q::zero() || hi < &Q::one() {
                    return Err(ModelError::BoundsExcludeIndicator);
                }
            }
            _ => {
                return Err(ModelError::DescriptorMismatch {
                    kind: self.kind.token(),
                });
            }
        }
        Ok(())
    }

    fn check_u_bounds(&self, aut: &PayoffAutomaton) -> Result<(), ModelError> {
        let (lo, hi) = &self.bounds;
        for s in 0..aut.num_states() {
            if let Some(u) = &aut.label(s).u {
                if u < lo || u > hi {
                    return Err(ModelError::PayoffOutOfBounds {
                        state: aut.state_name(s).to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    fn check_terminals_have_u(&self, aut: &PayoffAutomaton) -> Result<(), ModelError> {
        for s in 0..aut.num_states() {
            if aut.label(s).terminal && aut.label(s).u.is_none() {
                return Err(ModelError::MissingPayoff {
                    state: aut.state_name(s).to_string(),
                    context: "terminal state".into(),
                });
            }
        }
        Ok(())
    }

    pub fn automaton(&self) -> Option<&PayoffAutomaton> {
        match &self.descriptor {
            PayoffDescriptor::Automaton(a) => Some(a),
            _ => None,
        }
    }

    pub fn table(&self) -> Option<&Vec<Vec<Q>>> {
        match &self.descriptor {
            PayoffDescriptor::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn union_automata(&self) -> Option<&[PayoffAutomaton]> {
        match &self.descriptor {
            PayoffDescriptor::Union(a) => Some(a),
            _ => None,
        }
    }

    pub fn bounds_f64(&self) -> (f64, f64) {
        (
            crate::rational::q_to_f64(&self.bounds.0),
            crate::rational::q_to_f64(&self.bounds.1),
        )
    }
}

/// Observation automaton of a finite-state strategy: per-state mixed move
/// and deterministic transitions over joint moves.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyAutomaton {
    state_names: Vec<String>,
    rows: Vec<Vec<Q>>,
    start: usize,
    transitions: Vec<Vec<usize>>,
}

impl StrategyAutomaton {
    pub fn new(
        state_names: Vec<String>,
        rows: Vec<Vec<Q>>,
        start: usize,
        transitions: Vec<Vec<usize>>,
    ) -> Result<Self, ModelError> {
        let count = state_names.len();
        if rows.len() != count || transitions.len() != count || start >= count {
            return Err(ModelError::TransitionShape {
                state: "<strategy>".into(),
            });
        }
        for (i, name) in state_names.iter().enumerate() {
            if state_names[..i].contains(name) {
                return Err(ModelError::DuplicateState { name: name.clone() });
            }
        }
        // Canonical order, mirroring the payoff automaton.
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| state_names[a].cmp(&state_names[b]));
        let mut remap = vec![0usize; count];
        for (new_idx, &old_idx) in order.iter().enumerate() {
            remap[old_idx] = new_idx;
        }
        let mut names = vec![String::new(); count];
        let mut new_rows = vec![Vec::new(); count];
        let mut trans = vec![Vec::new(); count];
        for old in 0..count {
            names[remap[old]] = state_names[old].clone();
            new_rows[remap[old]] = rows[old].clone();
            trans[remap[old]] = transitions[old]
                .iter()
                .map(|&t| {
                    if t < count {
                        Ok(remap[t])
                    } else {
                        Err(ModelError::TransitionTarget {
                            state: state_names[old].clone(),
                            target: t,
                        })
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
        }
        Ok(StrategyAutomaton {
            state_names: names,
            rows: new_rows,
            start: remap[start],
            transitions: trans,
        })
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn rows(&self) -> &[Vec<Q>] {
        &self.rows
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn transitions(&self, s: usize) -> &[usize] {
        &self.transitions[s]
    }

    fn run(&self, p: &Position, joint_len: usize) -> Result<usize, ModelError> {
        let mut s = self.start;
        for &z in p.moves() {
            if z >= joint_len {
                return Err(ModelError::PositionOutOfRange { index: z });
            }
            if self.transitions[s].len() != joint_len {
                return Err(ModelError::AlphabetMismatch {
                    detail: format!(
                        "strategy automaton expects {} joint moves, game has {}",
                        self.transitions[s].len(),
                        joint_len
                    ),
                });
            }
            s = self.transitions[s][z];
        }
        Ok(s)
    }
}

/// How a strategy stores its distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyBody {
    /// Uniform over own moves at every position.
    Uniform,
    /// Explicit rows keyed by position; uniform outside the listed domain.
    Table(BTreeMap<Position, Vec<Q>>),
    /// Finite-state observation automaton.
    FiniteState(StrategyAutomaton),
}

/// A behavioral strategy for one player. Rows are exact distributions;
/// positions outside the stored domain fall back to the uniform
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralStrategy {
    pub owner: Player,
    pub name: String,
    pub body: StrategyBody,
}

/// Row sums may be off by at most this much before rescaling; anything
/// worse is rejected as non-stochastic.
pub const ROW_SUM_TOLERANCE: (i64, i64) = (1, 1_000_000_000);

fn check_row(row: &[Q], expected: usize, context: &str) -> Result<Vec<Q>, ModelError> {
    if row.len() != expected {
        return Err(ModelError::RowLength {
            context: context.to_string(),
            expected,
            got: row.len(),
        });
    }
    let mut sum = Q::zero();
    for v in row {
        if v < &Q::zero() {
            return Err(ModelError::NegativeProbability {
                context: context.to_string(),
            });
        }
        sum += v.clone();
    }
    let tol = crate::rational::q(ROW_SUM_TOLERANCE.0, ROW_SUM_TOLERANCE.1);
    let err = (sum.clone() - Q::one()).abs();
    if err > tol {
        return Err(ModelError::NonStochasticRow {
            context: context.to_string(),
        });
    }
    if sum == Q::one() {
        Ok(row.to_vec())
    } else {
        // Rescale exactly so downstream exact arithmetic sees a true
        // distribution.
        Ok(row.iter().map(|v| v.clone() / sum.clone()).collect())
    }
}

impl BehavioralStrategy {
    pub fn uniform(owner: Player) -> Self {
        BehavioralStrategy {
            owner,
            name: String::new(),
            body: StrategyBody::Uniform,
        }
    }

    pub fn table(
        owner: Player,
        name: impl Into<String>,
        entries: Vec<(Position, Vec<Q>)>,
        move_count: usize,
    ) -> Result<Self, ModelError> {
        let mut map = BTreeMap::new();
        for (pos, row) in entries {
            let row = check_row(
                &row,
                move_count,
                &format!("table entry of length {}", pos.len()),
            )?;
            map.insert(pos, row);
        }
        Ok(BehavioralStrategy {
            owner,
            name: name.into(),
            body: StrategyBody::Table(map),
        })
    }

    pub fn finite_state(
        owner: Player,
        name: impl Into<String>,
        automaton: StrategyAutomaton,
        move_count: usize,
    ) -> Result<Self, ModelError> {
        let mut automaton = automaton;
        for s in 0..automaton.rows.len() {
            automaton.rows[s] = check_row(
                &automaton.rows[s],
                move_count,
                &format!("state '{}'", automaton.state_names[s]),
            )?;
        }
        Ok(BehavioralStrategy {
            owner,
            name: name.into(),
            body: StrategyBody::FiniteState(automaton),
        })
    }

    /// Largest position length stored explicitly, plus one; zero when the
    /// strategy has no positional domain.
    pub fn table_depth(&self) -> usize {
        match &self.body {
            StrategyBody::Table(map) => map.keys().map(|p| p.len() + 1).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Exact distribution at a position.
    pub fn distribution(
        &self,
        alphabets: &MoveAlphabets,
        p: &Position,
    ) -> Result<Vec<Q>, ModelError> {
        let count = alphabets.move_count(self.owner);
        let uniform = || {
            let share = Q::one() / Q::from_integer(count.into());
            vec![share; count]
        };
        for &z in p.moves() {
            if z >= alphabets.joint_len() {
                return Err(ModelError::PositionOutOfRange { index: z });
            }
        }
        let row = match &self.body {
            StrategyBody::Uniform => uniform(),
            StrategyBody::Table(map) => match map.get(p) {
                Some(row) => row.clone(),
                None => uniform(),
            },
            StrategyBody::FiniteState(aut) => {
                let s = aut.run(p, alphabets.joint_len())?;
                aut.rows[s].clone()
            }
        };
        if row.len() != count {
            return Err(ModelError::AlphabetMismatch {
                detail: format!(
                    "strategy for player {} has rows of {} moves, game expects {}",
                    self.owner,
                    row.len(),
                    count
                ),
            });
        }
        Ok(row)
    }

    /// Distribution at a position in an arbitrary field.
    pub fn distribution_in<S: Field>(
        &self,
        alphabets: &MoveAlphabets,
        p: &Position,
    ) -> Result<Vec<S>, ModelError> {
        Ok(self
            .distribution(alphabets, p)?
            .iter()
            .map(S::from_q)
            .collect())
    }
}

/// Probability that play passes through `p` when I plays `sigma` and II
/// plays `tau`: the product of per-round move probabilities.
pub fn measure_of_position(
    alphabets: &MoveAlphabets,
    sigma: &BehavioralStrategy,
    tau: &BehavioralStrategy,
    p: &Position,
) -> Result<f64, ModelError> {
    measure_of_position_in::<f64>(alphabets, sigma, tau, p)
}

/// Exact-rational variant of [`measure_of_position`].
pub fn measure_of_position_exact(
    alphabets: &MoveAlphabets,
    sigma: &BehavioralStrategy,
    tau: &BehavioralStrategy,
    p: &Position,
) -> Result<Q, ModelError> {
    measure_of_position_in::<Q>(alphabets, sigma, tau, p)
}

pub fn measure_of_position_in<S: Field>(
    alphabets: &MoveAlphabets,
    sigma: &BehavioralStrategy,
    tau: &BehavioralStrategy,
    p: &Position,
) -> Result<S, ModelError> {
    if sigma.owner != Player::I || tau.owner != Player::II {
        return Err(ModelError::AlphabetMismatch {
            detail: "measure needs a player-I strategy and a player-II strategy".into(),
        });
    }
    let mut total = S::one();
    for (round, &z) in p.moves().iter().enumerate() {
        if z >= alphabets.joint_len() {
            return Err(ModelError::PositionOutOfRange { index: z });
        }
        let prefix = p.prefix(round);
        let (x, y) = alphabets.split_joint(z);
        let sx: Vec<S> = sigma.distribution_in(alphabets, &prefix)?;
        let ty: Vec<S> = tau.distribution_in(alphabets, &prefix)?;
        total = total * sx[x].clone() * ty[y].clone();
    }
    Ok(total)
}

/// Rescale and shift every payoff: the new game pays `a * f + c`.
/// Supported wherever the transform stays representable; the identity
/// `(1, 0)` is a no-op for every kind.
pub fn scale_shift_payoff(spec: &GameSpec, a: &Q, c: &Q) -> Result<GameSpec, ModelError> {
    if a < &Q::zero() {
        return Err(ModelError::NegativeScale);
    }
    if a == &Q::one() && c.is_zero() {
        return Ok(spec.clone());
    }
    let bounds = (
        a.clone() * spec.bounds.0.clone() + c.clone(),
        a.clone() * spec.bounds.1.clone() + c.clone(),
    );
    let scale_u = |aut: &PayoffAutomaton| -> PayoffAutomaton {
        let mut out = aut.clone();
        for lab in out.labels.iter_mut() {
            if let Some(u) = &lab.u {
                lab.u = Some(a.clone() * u.clone() + c.clone());
            }
        }
        out
    };
    match (&spec.kind, &spec.descriptor) {
        (GameKind::Matrix, PayoffDescriptor::Table(rows)) => {
            let table = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|v| a.clone() * v.clone() + c.clone())
                        .collect()
                })
                .collect();
            GameSpec::new(
                spec.name.clone(),
                spec.alphabets.clone(),
                GameKind::Matrix,
                PayoffDescriptor::Table(table),
                bounds,
                spec.start_position.clone(),
            )
        }
        (GameKind::Finite(n), PayoffDescriptor::Automaton(aut)) => GameSpec::new(
            spec.name.clone(),
            spec.alphabets.clone(),
            GameKind::Finite(*n),
            PayoffDescriptor::Automaton(scale_u(aut)),
            bounds,
            spec.start_position.clone(),
        ),
        (GameKind::GeneralizedOpen, PayoffDescriptor::Automaton(aut)) => GameSpec::new(
            spec.name.clone(),
            spec.alphabets.clone(),
            GameKind::GeneralizedOpen,
            PayoffDescriptor::Automaton(scale_u(aut)),
            bounds,
            spec.start_position.clone(),
        ),
        (GameKind::OpenSet, PayoffDescriptor::Automaton(aut)) => {
            // An indicator sup-payoff scales into a plain sup-payoff with
            // u = a + c on accepting states and c elsewhere.
            let mut out = aut.clone();
            for lab in out.labels.iter_mut() {
                lab.u = Some(if lab.accepting {
                    a.clone() + c.clone()
                } else {
                    c.clone()
                });
            }
            GameSpec::new(
                spec.name.clone(),
                spec.alphabets.clone(),
                GameKind::GeneralizedOpen,
                PayoffDescriptor::Automaton(out),
                bounds,
                spec.start_position.clone(),
            )
        }
        _ => Err(ModelError::UnsupportedKind {
            operation: "scale_shift_payoff",
            kind: spec.kind.token(),
        }),
    }
}

/// Exchange the players: the switched game negates the payoff and swaps
/// the alphabets, so solving it yields the negated value of the original.
pub fn switch_players(spec: &GameSpec) -> Result<GameSpec, ModelError> {
    let alphabets = MoveAlphabets::new(
        spec.alphabets.y_moves.clone(),
        spec.alphabets.x_moves.clone(),
    )?;
    let bounds = (-spec.bounds.1.clone(), -spec.bounds.0.clone());
    let swap_position = |p: &Position| -> Position {
        Position::from_moves(
            p.moves()
                .iter()
                .map(|&z| {
                    let (x, y) = spec.alphabets.split_joint(z);
                    alphabets.joint_index(y, x)
                })
                .collect(),
        )
    };
    match (&spec.kind, &spec.descriptor) {
        (GameKind::Matrix, PayoffDescriptor::Table(rows)) => {
            let mut table = vec![vec![Q::zero(); spec.alphabets.x_len()]; spec.alphabets.y_len()];
            for (i, row) in rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    table[j][i] = -v.clone();
                }
            }
            GameSpec::new(
                spec.name.clone(),
                alphabets,
                GameKind::Matrix,
                PayoffDescriptor::Table(table),
                bounds,
                Position::empty(),
            )
        }
        (GameKind::Finite(n), PayoffDescriptor::Automaton(aut)) => {
            let mut out = aut.clone();
            for lab in out.labels.iter_mut() {
                if let Some(u) = &lab.u {
                    lab.u = Some(-u.clone());
                }
            }
            for s in 0..out.transitions.len() {
                let mut row = vec![0usize; alphabets.joint_len()];
                for (z, &t) in aut.transitions[s].iter().enumerate() {
                    let (x, y) = spec.alphabets.split_joint(z);
                    row[alphabets.joint_index(y, x)] = t;
                }
                out.transitions[s] = row;
            }
            let start_position = swap_position(&spec.start_position);
            GameSpec::new(
                spec.name.clone(),
                alphabets,
                GameKind::Finite(*n),
                PayoffDescriptor::Automaton(out),
                bounds,
                start_position,
            )
        }
        _ => Err(ModelError::UnsupportedKind {
            operation: "switch_players",
            kind: spec.kind.token(),
        }),
    }
}

/// Rescale the payoffs onto `[0, 1]` (a no-op for games already there).
/// Returns the transformed game together with the scale and shift that
/// map a value of the original game onto the new one; callers report
/// values in original units by inverting them.
pub fn normalize_to_unit(spec: &GameSpec) -> Result<(GameSpec, Q, Q), ModelError> {
    let (lo, hi) = spec.bounds.clone();
    if lo == Q::zero() && hi == Q::one() {
        return Ok((spec.clone(), Q::one(), Q::zero()));
    }
    let width = hi - lo.clone();
    let (a, c) = if width.is_zero() {
        (Q::one(), -lo)
    } else {
        (Q::one() / width.clone(), -lo / width)
    };
    let normalized = scale_shift_payoff(spec, &a, &c)?;
    Ok((normalized, a, c))
}

/// Certified interval around a game value at some truncation depth.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueBracket {
    pub lower: f64,
    pub upper: f64,
    pub depth: usize,
    /// Set when `upper - lower` is within the convergence tolerance.
    pub converged: bool,
}


#[cfg(test)]
mod normalize_tests {
    use super::*;
    use crate::finite::backward_induction_exact;
    use crate::rational::{q, q_int};

    #[test]
    fn normalization_maps_values_onto_the_unit_interval() {
        let table = vec![vec![q_int(-2), q_int(2)], vec![q_int(2), q_int(-2)]];
        let spec = GameSpec::new(
            "pennies",
            MoveAlphabets::new(vec!["a".into(), "b".into()], vec!["l".into(), "r".into()]).unwrap(),
            GameKind::Matrix,
            PayoffDescriptor::Table(table),
            (q_int(-2), q_int(2)),
            Position::empty(),
        )
        .unwrap();
        let (unit, a, c) = normalize_to_unit(&spec).unwrap();
        assert_eq!(unit.bounds, (q_int(0), q_int(1)));
        let v = backward_induction_exact(&spec).unwrap().value;
        let w = backward_induction_exact(&unit).unwrap().value;
        assert_eq!(w, a * v + c);
        assert_eq!(w, q(1, 2));
    }
}
