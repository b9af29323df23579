//! Backward induction for finite games, exact expected payoff, best
//! response, equivalent truncation, and strategy stitching.
//!
//! Value tables are computed over (automaton state, remaining depth), so
//! the cost is `|Q| * n` one-round solves instead of one per position.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_traits::{One, Zero};

use crate::game::{
    BehavioralStrategy, GameKind, GameSpec, ModelError, MoveAlphabets, PayoffAutomaton, Player,
    Position, StateLabel, StrategyAutomaton, StrategyBody,
};
use crate::matrix::{solve_matrix_generic, Field, SolveError};
use crate::rational::Q;

#[derive(Debug, Clone, PartialEq)]
pub enum FiniteError {
    Model(ModelError),
    Solve(SolveError),
    MissingTerminalPayoff { state: String },
    MissingBoundaryValue { state: String },
    NonAntichainBoundary { state: String },
    OverlappingDomains { detail: String },
    MissingInnerStrategy { state: String },
    OwnerMismatch,
    StartPositionUnsupported { operation: &'static str },
}

impl fmt::Display for FiniteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiniteError::Model(e) => write!(f, "{e}"),
            FiniteError::Solve(e) => write!(f, "{e}"),
            FiniteError::MissingTerminalPayoff { state } => {
                write!(f, "missing payoff label at horizon for state '{state}'")
            }
            FiniteError::MissingBoundaryValue { state } => {
                write!(f, "boundary state '{state}' has no value")
            }
            FiniteError::NonAntichainBoundary { state } => write!(
                f,
                "boundary is not an antichain: state '{state}' is only reached through other boundary states (or not at all)"
            ),
            FiniteError::OverlappingDomains { detail } => {
                write!(f, "overlapping strategy domains: {detail}")
            }
            FiniteError::MissingInnerStrategy { state } => {
                write!(f, "no inner strategy for boundary state '{state}'")
            }
            FiniteError::OwnerMismatch => {
                write!(f, "stitched strategies must all belong to the same player")
            }
            FiniteError::StartPositionUnsupported { operation } => {
                write!(f, "operation '{operation}' requires the empty start position")
            }
        }
    }
}

impl std::error::Error for FiniteError {}

impl From<ModelError> for FiniteError {
    fn from(e: ModelError) -> Self {
        FiniteError::Model(e)
    }
}

impl From<SolveError> for FiniteError {
    fn from(e: SolveError) -> Self {
        FiniteError::Solve(e)
    }
}

/// Solved finite game: the value, the per-(state, remaining-depth) value
/// table, and optimal strategies for both players.
#[derive(Debug, Clone)]
pub struct SolveReport<S> {
    pub value: S,
    pub horizon: usize,
    pub state_names: Vec<String>,
    /// `value_at[r][s]` is the value with `r` rounds remaining from state
    /// `s`; row 0 holds the terminal payoffs.
    pub value_at: Vec<Vec<S>>,
    pub strategy_i: BehavioralStrategy,
    pub strategy_ii: BehavioralStrategy,
}

/// A finite game normalized to (automaton, horizon, initial state).
pub(crate) struct FiniteForm {
    pub automaton: PayoffAutomaton,
    pub horizon: usize,
    pub initial: usize,
}

/// View a matrix or finite-kind spec as an automaton game.
pub(crate) fn finite_form(spec: &GameSpec) -> Result<FiniteForm, FiniteError> {
    match (&spec.kind, &spec.descriptor) {
        (GameKind::Matrix, crate::game::PayoffDescriptor::Table(rows)) => {
            let joint = spec.alphabets.joint_len();
            let mut names = vec!["root".to_string()];
            let mut labels = vec![StateLabel::new(None, false, false)];
            let mut transitions = vec![Vec::with_capacity(joint)];
            for x in 0..spec.alphabets.x_len() {
                for y in 0..spec.alphabets.y_len() {
                    let idx = names.len();
                    names.push(format!("cell_{x}_{y}"));
                    labels.push(StateLabel::new(Some(rows[x][y].clone()), false, true));
                    transitions.push(vec![idx; joint]);
                    transitions[0].push(idx);
                }
            }
            let automaton = PayoffAutomaton::new("matrix", names, labels, 0, transitions, joint)?;
            let initial = automaton.start();
            Ok(FiniteForm {
                automaton,
                horizon: 1,
                initial,
            })
        }
        (GameKind::Finite(n), crate::game::PayoffDescriptor::Automaton(aut)) => {
            let initial = aut.run_from(aut.start(), &spec.start_position)?;
            Ok(FiniteForm {
                automaton: aut.clone(),
                horizon: *n,
                initial,
            })
        }
        _ => Err(FiniteError::Model(ModelError::UnsupportedKind {
            operation: "finite solve",
            kind: spec.kind.token(),
        })),
    }
}

pub(crate) struct Layers<S> {
    pub values: Vec<Vec<S>>,
    /// Mixed rows per (remaining, state); `None` means the one-round game
    /// was constant and any row does.
    pub rows_i: Vec<Vec<Option<Vec<S>>>>,
    pub rows_ii: Vec<Vec<Option<Vec<S>>>>,
}

/// Backward induction over (state, remaining depth) with an explicit
/// terminal payoff vector.
pub(crate) fn layered_values<S: Field>(
    aut: &PayoffAutomaton,
    alphabets: &MoveAlphabets,
    horizon: usize,
    terminal: &[S],
) -> Result<Layers<S>, FiniteError> {
    let states = aut.num_states();
    let mut values: Vec<Vec<S>> = Vec::with_capacity(horizon + 1);
    let mut rows_i: Vec<Vec<Option<Vec<S>>>> = Vec::with_capacity(horizon + 1);
    let mut rows_ii: Vec<Vec<Option<Vec<S>>>> = Vec::with_capacity(horizon + 1);
    values.push(terminal.to_vec());
    rows_i.push(vec![None; states]);
    rows_ii.push(vec![None; states]);

    for r in 1..=horizon {
        let mut layer = Vec::with_capacity(states);
        let mut li = Vec::with_capacity(states);
        let mut lii = Vec::with_capacity(states);
        for s in 0..states {
            let mut payoffs = vec![vec![S::zero(); alphabets.y_len()]; alphabets.x_len()];
            let mut constant = true;
            let first = values[r - 1][aut.step(s, 0)].clone();
            for x in 0..alphabets.x_len() {
                for y in 0..alphabets.y_len() {
                    let z = alphabets.joint_index(x, y);
                    let v = values[r - 1][aut.step(s, z)].clone();
                    if v != first {
                        constant = false;
                    }
                    payoffs[x][y] = v;
                }
            }
            if constant {
                layer.push(first);
                li.push(None);
                lii.push(None);
            } else {
                let sol = solve_matrix_generic(&payoffs)?;
                layer.push(sol.value);
                li.push(Some(sol.row_strategy));
                lii.push(Some(sol.col_strategy));
            }
        }
        values.push(layer);
        rows_i.push(li);
        rows_ii.push(lii);
    }
    Ok(Layers {
        values,
        rows_i,
        rows_ii,
    })
}

fn uniform_row(count: usize) -> Vec<Q> {
    let share = Q::one() / Q::from_integer(count.into());
    vec![share; count]
}

fn row_to_q<S: Field>(row: &[S]) -> Vec<Q> {
    let mut out: Vec<Q> = row.iter().map(Field::to_exact).collect();
    // Absorb approximation dust into the heaviest entry so the row is an
    // exact distribution (a no-op for exact inputs).
    if let Some(heaviest) = (0..out.len()).max_by(|&a, &b| {
        out[a]
            .partial_cmp(&out[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    }) {
        let rest: Q = out
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != heaviest)
            .map(|(_, v)| v.clone())
            .sum();
        let residual = Q::one() - rest;
        if residual >= Q::zero() {
            out[heaviest] = residual;
        }
    }
    out
}

/// Build a finite-state strategy over (payoff state, round) pairs from the
/// per-layer mixed rows.
fn extract_strategy<S: Field>(
    aut: &PayoffAutomaton,
    alphabets: &MoveAlphabets,
    horizon: usize,
    initial: usize,
    layers: &Layers<S>,
    owner: Player,
) -> Result<BehavioralStrategy, FiniteError> {
    let move_count = alphabets.move_count(owner);
    let rows_of = |s: usize, r: usize| -> Vec<Q> {
        let table = match owner {
            Player::I => &layers.rows_i,
            Player::II => &layers.rows_ii,
        };
        match table[r][s].as_ref() {
            Some(row) => row_to_q(row),
            None => uniform_row(move_count),
        }
    };

    // Reachable (state, round) pairs, breadth-first from the initial state.
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert((initial, 0), 0);
    order.push((initial, 0));
    queue.push_back((initial, 0));
    while let Some((s, r)) = queue.pop_front() {
        for z in 0..alphabets.joint_len() {
            let next = if aut.label(s).terminal {
                (s, r)
            } else {
                (aut.step(s, z), (r + 1).min(horizon))
            };
            if !index.contains_key(&next) {
                index.insert(next, order.len());
                order.push(next);
                queue.push_back(next);
            }
        }
    }

    let mut names = Vec::with_capacity(order.len());
    let mut rows = Vec::with_capacity(order.len());
    let mut transitions = Vec::with_capacity(order.len());
    for &(s, r) in &order {
        names.push(format!("{}_r{r}", aut.state_name(s)));
        let row = if r < horizon && !aut.label(s).terminal {
            rows_of(s, horizon - r)
        } else {
            uniform_row(move_count)
        };
        rows.push(row);
        let mut trans = Vec::with_capacity(alphabets.joint_len());
        for z in 0..alphabets.joint_len() {
            let next = if aut.label(s).terminal {
                (s, r)
            } else {
                (aut.step(s, z), (r + 1).min(horizon))
            };
            trans.push(index[&next]);
        }
        transitions.push(trans);
    }
    let automaton = StrategyAutomaton::new(names, rows, index[&(initial, 0)], transitions)?;
    Ok(BehavioralStrategy::finite_state(
        owner,
        format!("optimal_{}", owner),
        automaton,
        move_count,
    )?)
}

fn solve_in<S: Field>(spec: &GameSpec) -> Result<SolveReport<S>, FiniteError> {
    let form = finite_form(spec)?;
    let aut = &form.automaton;
    let mut terminal = Vec::with_capacity(aut.num_states());
    let at_horizon = aut.reachable_in_exactly(form.initial, form.horizon);
    for s in 0..aut.num_states() {
        match &aut.label(s).u {
            Some(u) => terminal.push(S::from_q(u)),
            None if at_horizon[s] => {
                return Err(FiniteError::MissingTerminalPayoff {
                    state: aut.state_name(s).to_string(),
                })
            }
            None => terminal.push(S::zero()),
        }
    }
    let layers = layered_values(aut, &spec.alphabets, form.horizon, &terminal)?;
    let value = layers.values[form.horizon][form.initial].clone();

    let (strategy_i, strategy_ii) = if spec.kind == GameKind::Matrix {
        // One-round table games carry their mix as a single table entry.
        let make = |owner: Player| -> Result<BehavioralStrategy, FiniteError> {
            let rows = match owner {
                Player::I => &layers.rows_i,
                Player::II => &layers.rows_ii,
            };
            let count = spec.alphabets.move_count(owner);
            let row = match rows[form.horizon][form.initial].as_ref() {
                Some(r) => row_to_q(r),
                None => uniform_row(count),
            };
            Ok(BehavioralStrategy::table(
                owner,
                format!("optimal_{owner}"),
                vec![(spec.start_position.clone(), row)],
                count,
            )?)
        };
        (make(Player::I)?, make(Player::II)?)
    } else {
        (
            extract_strategy(
                aut,
                &spec.alphabets,
                form.horizon,
                form.initial,
                &layers,
                Player::I,
            )?,
            extract_strategy(
                aut,
                &spec.alphabets,
                form.horizon,
                form.initial,
                &layers,
                Player::II,
            )?,
        )
    };

    Ok(SolveReport {
        value,
        horizon: form.horizon,
        state_names: aut.state_names().to_vec(),
        value_at: layers.values,
        strategy_i,
        strategy_ii,
    })
}

/// Solve a matrix or finite game in floating point.
pub fn backward_induction(spec: &GameSpec) -> Result<SolveReport<f64>, FiniteError> {
    solve_in::<f64>(spec)
}

/// Solve a matrix or finite game in exact rationals.
pub fn backward_induction_exact(spec: &GameSpec) -> Result<SolveReport<Q>, FiniteError> {
    solve_in::<Q>(spec)
}

/// Exact expected payoff of the strategy pair, summed over the live
/// position tree. Positions at or after terminal states are never
/// consulted.
pub fn expected_payoff_in<S: Field>(
    spec: &GameSpec,
    sigma: &BehavioralStrategy,
    tau: &BehavioralStrategy,
) -> Result<S, FiniteError> {
    if sigma.owner != Player::I || tau.owner != Player::II {
        return Err(FiniteError::Model(ModelError::AlphabetMismatch {
            detail: "expected a player-I strategy and a player-II strategy".into(),
        }));
    }
    let form = finite_form(spec)?;
    let aut = &form.automaton;

    fn walk<S: Field>(
        aut: &PayoffAutomaton,
        alphabets: &MoveAlphabets,
        sigma: &BehavioralStrategy,
        tau: &BehavioralStrategy,
        p: &Position,
        s: usize,
        remaining: usize,
    ) -> Result<S, FiniteError> {
        let label = aut.label(s);
        if label.terminal || remaining == 0 {
            return match &label.u {
                Some(u) => Ok(S::from_q(u)),
                None => Err(FiniteError::MissingTerminalPayoff {
                    state: aut.state_name(s).to_string(),
                }),
            };
        }
        let sx: Vec<S> = sigma.distribution_in(alphabets, p)?;
        let ty: Vec<S> = tau.distribution_in(alphabets, p)?;
        let mut total = S::zero();
        for (x, px) in sx.iter().enumerate() {
            if *px == S::zero() {
                continue;
            }
            for (y, py) in ty.iter().enumerate() {
                if *py == S::zero() {
                    continue;
                }
                let z = alphabets.joint_index(x, y);
                let sub = walk::<S>(
                    aut,
                    alphabets,
                    sigma,
                    tau,
                    &p.child(z),
                    aut.step(s, z),
                    remaining - 1,
                )?;
                total = total + px.clone() * py.clone() * sub;
            }
        }
        Ok(total)
    }

    walk::<S>(
        aut,
        &spec.alphabets,
        sigma,
        tau,
        &spec.start_position,
        form.initial,
        form.horizon,
    )
}

pub fn expected_payoff(
    spec: &GameSpec,
    sigma: &BehavioralStrategy,
    tau: &BehavioralStrategy,
) -> Result<f64, FiniteError> {
    expected_payoff_in::<f64>(spec, sigma, tau)
}

pub fn expected_payoff_exact(
    spec: &GameSpec,
    sigma: &BehavioralStrategy,
    tau: &BehavioralStrategy,
) -> Result<Q, FiniteError> {
    expected_payoff_in::<Q>(spec, sigma, tau)
}

/// A pure counterstrategy and the value it attains against the fixed
/// strategy.
#[derive(Debug, Clone)]
pub struct BestResponse<S> {
    pub responder: Player,
    pub strategy: BehavioralStrategy,
    pub value: S,
}

/// Best response against a fixed behavioral strategy by dynamic
/// programming over the live position tree; a best response to a fixed
/// mixed strategy can always be taken pure. Ties break toward the
/// lexicographically smallest move.
pub fn best_response_in<S: Field>(
    spec: &GameSpec,
    fixed: &BehavioralStrategy,
) -> Result<BestResponse<S>, FiniteError> {
    let responder = fixed.owner.opponent();
    let form = finite_form(spec)?;
    let aut = &form.automaton;
    let alphabets = &spec.alphabets;
    let own_count = alphabets.move_count(responder);

    struct Dp<'a, S> {
        aut: &'a PayoffAutomaton,
        alphabets: &'a MoveAlphabets,
        fixed: &'a BehavioralStrategy,
        responder: Player,
        memo: HashMap<Position, S>,
        choices: BTreeMap<Position, usize>,
    }

    impl<S: Field> Dp<'_, S> {
        fn value(&mut self, p: &Position, s: usize, remaining: usize) -> Result<S, FiniteError> {
            let label = self.aut.label(s);
            if label.terminal || remaining == 0 {
                return match &label.u {
                    Some(u) => Ok(S::from_q(u)),
                    None => Err(FiniteError::MissingTerminalPayoff {
                        state: self.aut.state_name(s).to_string(),
                    }),
                };
            }
            if let Some(v) = self.memo.get(p) {
                return Ok(v.clone());
            }
            let opp: Vec<S> = self.fixed.distribution_in(self.alphabets, p)?;
            let own_count = self.alphabets.move_count(self.responder);
            let mut best: Option<(S, usize)> = None;
            for own in 0..own_count {
                let mut expect = S::zero();
                for (other, weight) in opp.iter().enumerate() {
                    if *weight == S::zero() {
                        continue;
                    }
                    let (x, y) = match self.responder {
                        Player::I => (own, other),
                        Player::II => (other, own),
                    };
                    let z = self.alphabets.joint_index(x, y);
                    let sub = self.value(&p.child(z), self.aut.step(s, z), remaining - 1)?;
                    expect = expect + weight.clone() * sub;
                }
                let improves = match &best {
                    None => true,
                    Some((v, _)) => match self.responder {
                        Player::I => expect > *v,
                        Player::II => expect < *v,
                    },
                };
                if improves {
                    best = Some((expect, own));
                }
            }
            let (value, choice) = best.expect("nonempty move set");
            self.memo.insert(p.clone(), value.clone());
            self.choices.insert(p.clone(), choice);
            Ok(value)
        }
    }

    let mut dp = Dp {
        aut,
        alphabets,
        fixed,
        responder,
        memo: HashMap::new(),
        choices: BTreeMap::new(),
    };
    let value = dp.value(&spec.start_position, form.initial, form.horizon)?;

    let entries: Vec<(Position, Vec<Q>)> = dp
        .choices
        .iter()
        .map(|(p, &choice)| {
            let mut row = vec![Q::zero(); own_count];
            row[choice] = Q::one();
            (p.clone(), row)
        })
        .collect();
    let strategy = BehavioralStrategy::table(responder, "best_response", entries, own_count)?;
    Ok(BestResponse {
        responder,
        strategy,
        value,
    })
}

pub fn best_response(
    spec: &GameSpec,
    fixed: &BehavioralStrategy,
) -> Result<BestResponse<f64>, FiniteError> {
    best_response_in::<f64>(spec, fixed)
}

pub fn best_response_exact(
    spec: &GameSpec,
    fixed: &BehavioralStrategy,
) -> Result<BestResponse<Q>, FiniteError> {
    best_response_in::<Q>(spec, fixed)
}

/// Replace each boundary state by an absorbing stop with the given payoff.
/// The boundary, read as first visits to the state set, forms an antichain
/// of stopping positions; states shadowed by the rest of the boundary are
/// rejected because their values could never matter.
pub fn truncate(
    spec: &GameSpec,
    boundary: &BTreeSet<usize>,
    values: &BTreeMap<usize, Q>,
) -> Result<GameSpec, FiniteError> {
    let (n, aut) = match (&spec.kind, &spec.descriptor) {
        (GameKind::Finite(n), crate::game::PayoffDescriptor::Automaton(aut)) => (*n, aut),
        _ => {
            return Err(FiniteError::Model(ModelError::UnsupportedKind {
                operation: "truncate",
                kind: spec.kind.token(),
            }))
        }
    };
    for &s in boundary {
        let value = values
            .get(&s)
            .ok_or_else(|| FiniteError::MissingBoundaryValue {
                state: aut.state_name(s).to_string(),
            })?;
        if value < &spec.bounds.0 || value > &spec.bounds.1 {
            return Err(FiniteError::Model(ModelError::PayoffOutOfBounds {
                state: aut.state_name(s).to_string(),
            }));
        }
    }

    // First-visit reachability: walk from the start without expanding
    // boundary states; each boundary state must be seen.
    let initial = aut.run_from(aut.start(), &spec.start_position)?;
    let mut seen = vec![false; aut.num_states()];
    let mut stack = vec![initial];
    seen[initial] = true;
    while let Some(s) = stack.pop() {
        if boundary.contains(&s) {
            continue;
        }
        for z in 0..spec.alphabets.joint_len() {
            let t = aut.step(s, z);
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    for &s in boundary {
        if !seen[s] {
            return Err(FiniteError::NonAntichainBoundary {
                state: aut.state_name(s).to_string(),
            });
        }
    }

    let mut names = Vec::with_capacity(aut.num_states());
    let mut labels = Vec::with_capacity(aut.num_states());
    let mut transitions = Vec::with_capacity(aut.num_states());
    for s in 0..aut.num_states() {
        names.push(aut.state_name(s).to_string());
        if boundary.contains(&s) {
            labels.push(StateLabel::new(Some(values[&s].clone()), false, true));
            transitions.push(vec![s; spec.alphabets.joint_len()]);
        } else {
            labels.push(aut.label(s).clone());
            transitions.push(aut.transitions(s).to_vec());
        }
    }
    let automaton = PayoffAutomaton::new(
        aut.name.clone(),
        names,
        labels,
        aut.start(),
        transitions,
        spec.alphabets.joint_len(),
    )?;
    Ok(GameSpec::new(
        spec.name.clone(),
        spec.alphabets.clone(),
        GameKind::Finite(n),
        crate::game::PayoffDescriptor::Automaton(automaton),
        spec.bounds.clone(),
        spec.start_position.clone(),
    )?)
}

/// Unroll a finite game so each state also remembers the round it is
/// visited in. States at a fixed round form an antichain, which makes
/// depth-based truncation expressible.
pub fn depth_product(spec: &GameSpec) -> Result<GameSpec, FiniteError> {
    let (n, aut) = match (&spec.kind, &spec.descriptor) {
        (GameKind::Finite(n), crate::game::PayoffDescriptor::Automaton(aut)) => (*n, aut),
        _ => {
            return Err(FiniteError::Model(ModelError::UnsupportedKind {
                operation: "depth_product",
                kind: spec.kind.token(),
            }))
        }
    };
    if !spec.start_position.is_empty() {
        return Err(FiniteError::StartPositionUnsupported {
            operation: "depth_product",
        });
    }
    let joint = spec.alphabets.joint_len();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    let start = (aut.start(), 0usize);
    index.insert(start, 0);
    order.push(start);
    queue.push_back(start);
    let advance = |s: usize, r: usize, z: usize| -> (usize, usize) {
        if aut.label(s).terminal {
            (s, r)
        } else {
            (aut.step(s, z), (r + 1).min(n))
        }
    };
    while let Some((s, r)) = queue.pop_front() {
        for z in 0..joint {
            let next = advance(s, r, z);
            if !index.contains_key(&next) {
                index.insert(next, order.len());
                order.push(next);
                queue.push_back(next);
            }
        }
    }
    let mut names = Vec::with_capacity(order.len());
    let mut labels = Vec::with_capacity(order.len());
    let mut transitions = Vec::with_capacity(order.len());
    for &(s, r) in &order {
        names.push(format!("{}_r{r}", aut.state_name(s)));
        labels.push(aut.label(s).clone());
        transitions.push((0..joint).map(|z| index[&advance(s, r, z)]).collect());
    }
    let automaton = PayoffAutomaton::new(
        aut.name.clone(),
        names,
        labels,
        index[&start],
        transitions,
        joint,
    )?;
    Ok(GameSpec::new(
        spec.name.clone(),
        spec.alphabets.clone(),
        GameKind::Finite(n),
        crate::game::PayoffDescriptor::Automaton(automaton),
        spec.bounds.clone(),
        Position::empty(),
    )?)
}

/// States reachable at exactly `round` steps from the initial state;
/// on a depth product these index an antichain usable as a boundary.
pub fn states_at_round(spec: &GameSpec, round: usize) -> Result<BTreeSet<usize>, FiniteError> {
    let form = finite_form(spec)?;
    let reach = form.automaton.reachable_in_exactly(form.initial, round);
    Ok(reach
        .iter()
        .enumerate()
        .filter_map(|(s, &on)| if on { Some(s) } else { None })
        .collect())
}

/// Glue an outer strategy on a truncated game to inner subgame strategies
/// at the boundary. The result is a table strategy on the live positions
/// of the extended game up to its horizon: before the first boundary
/// visit it plays like `outer`, afterwards like the matching inner
/// strategy consulted with the position relative to the crossing.
pub fn stitch_strategies(
    spec: &GameSpec,
    boundary: &BTreeSet<usize>,
    outer: &BehavioralStrategy,
    at_boundary: &BTreeMap<usize, BehavioralStrategy>,
) -> Result<BehavioralStrategy, FiniteError> {
    let (n, aut) = match (&spec.kind, &spec.descriptor) {
        (GameKind::Finite(n), crate::game::PayoffDescriptor::Automaton(aut)) => (*n, aut),
        _ => {
            return Err(FiniteError::Model(ModelError::UnsupportedKind {
                operation: "stitch_strategies",
                kind: spec.kind.token(),
            }))
        }
    };
    if !spec.start_position.is_empty() {
        return Err(FiniteError::StartPositionUnsupported {
            operation: "stitch_strategies",
        });
    }
    let owner = outer.owner;
    for inner in at_boundary.values() {
        if inner.owner != owner {
            return Err(FiniteError::OwnerMismatch);
        }
    }
    for &s in boundary {
        if !at_boundary.contains_key(&s) {
            return Err(FiniteError::MissingInnerStrategy {
                state: aut.state_name(s).to_string(),
            });
        }
    }

    // The outer strategy must stay silent at and after the boundary.
    if let StrategyBody::Table(entries) = &outer.body {
        for p in entries.keys() {
            let visited = aut.visited_from_start(p)?;
            if let Some(&hit) = visited.iter().find(|s| boundary.contains(s)) {
                return Err(FiniteError::OverlappingDomains {
                    detail: format!(
                        "outer strategy defines a row at or after the stop at state '{}'",
                        aut.state_name(hit)
                    ),
                });
            }
        }
    }

    let move_count = spec.alphabets.move_count(owner);
    let mut entries: Vec<(Position, Vec<Q>)> = Vec::new();
    // Walk the live tree; stop below terminal states and the horizon.
    let mut frontier: Vec<(Position, usize, Option<(usize, Position)>)> =
        vec![(Position::empty(), aut.start(), None)];
    while let Some((p, s, crossing)) = frontier.pop() {
        if aut.label(s).terminal || p.len() >= n {
            continue;
        }
        let crossing = match crossing {
            Some(c) => Some(c),
            None if boundary.contains(&s) => Some((s, p.clone())),
            None => None,
        };
        let row = match &crossing {
            None => outer.distribution(&spec.alphabets, &p)?,
            Some((state, at)) => {
                let relative = at
                    .suffix_of(&p)
                    .expect("crossing position precedes the current position");
                at_boundary[state].distribution(&spec.alphabets, &relative)?
            }
        };
        entries.push((p.clone(), row));
        for z in 0..spec.alphabets.joint_len() {
            frontier.push((p.child(z), aut.step(s, z), crossing.clone()));
        }
    }
    Ok(BehavioralStrategy::table(
        owner, "stitched", entries, move_count,
    )?)
}
