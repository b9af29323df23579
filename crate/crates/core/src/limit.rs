//! Value approximation for infinite games: certified brackets for
//! sup-payoff (open) objectives, limits over unions of open sets, sound
//! two-sided bounds for recurrence (G-delta style) objectives, and the
//! locally optimal one-round strategy together with its failure mode.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_traits::{One, Zero};

use crate::finite::{layered_values, FiniteError};
use crate::game::{
    BehavioralStrategy, GameKind, GameSpec, ModelError, MoveAlphabets, PayoffAutomaton, Player,
    Position, StateLabel, StrategyAutomaton, ValueBracket,
};
use crate::matrix::{solve_matrix_generic, Field};
use crate::rational::{q_to_f64, Q};

#[derive(Debug, Clone, PartialEq)]
pub enum LimitError {
    Finite(FiniteError),
    OracleGap { state: String, round: usize },
    KMaxTooSmall,
    EmptyUnion,
    DepthTooSmall,
}

impl fmt::Display for LimitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitError::Finite(e) => write!(f, "{e}"),
            LimitError::OracleGap { state, round } => {
                write!(
                    f,
                    "value oracle has no entry for state '{state}' at round {round}"
                )
            }
            LimitError::KMaxTooSmall => write!(f, "k_max must be at least 1"),
            LimitError::EmptyUnion => write!(f, "union needs at least one component"),
            LimitError::DepthTooSmall => write!(f, "depth must be at least 0"),
        }
    }
}

impl std::error::Error for LimitError {}

impl From<FiniteError> for LimitError {
    fn from(e: FiniteError) -> Self {
        LimitError::Finite(e)
    }
}

impl From<ModelError> for LimitError {
    fn from(e: ModelError) -> Self {
        LimitError::Finite(FiniteError::Model(e))
    }
}

/// Convergence verdict of a bracket trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    /// Upper and lower met within tolerance.
    Converged,
    /// The lower bound stopped moving; an estimate, not a certificate.
    StabilizedEstimate,
    NotConverged,
}

impl fmt::Display for Convergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Convergence::Converged => write!(f, "converged"),
            Convergence::StabilizedEstimate => {
                write!(f, "stabilized (estimate, not a certificate)")
            }
            Convergence::NotConverged => write!(f, "not converged"),
        }
    }
}

/// Per-depth brackets of a game value, with exact values when solved in
/// rational mode.
#[derive(Debug, Clone)]
pub struct BracketTrace {
    pub brackets: Vec<ValueBracket>,
    pub exact: Option<Vec<(Q, Q)>>,
    /// Recurrence objectives only: per-depth minimum over k of the open
    /// superset's lower value — an upper *estimate*, not a certificate.
    pub upper_estimates: Option<Vec<f64>>,
    pub upper_estimates_exact: Option<Vec<Q>>,
    pub k_max: Option<usize>,
    pub verdict: Convergence,
}

impl BracketTrace {
    pub fn final_lower(&self) -> f64 {
        self.brackets.last().map(|b| b.lower).unwrap_or(f64::NAN)
    }

    pub fn final_upper(&self) -> f64 {
        self.brackets.last().map(|b| b.upper).unwrap_or(f64::NAN)
    }
}

fn verdict_of(lower: &[f64], upper: &[f64], tol: f64) -> Convergence {
    let n = lower.len();
    if n > 0 && (upper[n - 1] - lower[n - 1]).abs() <= tol {
        return Convergence::Converged;
    }
    if n >= 4 {
        let stable = (n - 3..n).all(|d| (lower[d] - lower[d - 1]).abs() < tol);
        if stable {
            return Convergence::StabilizedEstimate;
        }
    }
    Convergence::NotConverged
}

fn assemble_trace(lower: Vec<f64>, upper: Vec<f64>, tol: f64) -> BracketTrace {
    let verdict = verdict_of(&lower, &upper, tol);
    let brackets = lower
        .iter()
        .zip(&upper)
        .enumerate()
        .map(|(depth, (&lo, &hi))| ValueBracket {
            lower: lo,
            upper: hi,
            depth,
            converged: (hi - lo).abs() <= tol,
        })
        .collect();
    BracketTrace {
        brackets,
        exact: None,
        upper_estimates: None,
        upper_estimates_exact: None,
        k_max: None,
        verdict,
    }
}

/// Sup-payoff product: base state paired with the running maximum of `u`
/// over all visited states. The product's `u` label is that running
/// maximum, so the depth-`n` truncation of the sup game is the finite
/// game scoring the product label at the horizon.
struct SupProduct {
    automaton: PayoffAutomaton,
    /// Sound horizon payoff for the upper truncation:
    /// `max(running max, sup of u over base states still reachable)`.
    upper_payoff: Vec<Q>,
    initial: usize,
}

/// `u` values per state for kinds with a sup-payoff reading.
fn sup_values(spec: &GameSpec, aut: &PayoffAutomaton) -> Result<Vec<Q>, LimitError> {
    match spec.kind {
        GameKind::GeneralizedOpen => aut
            .labels()
            .iter()
            .enumerate()
            .map(|(s, lab)| {
                lab.u.clone().ok_or_else(|| {
                    LimitError::Finite(FiniteError::MissingTerminalPayoff {
                        state: aut.state_name(s).to_string(),
                    })
                })
            })
            .collect(),
        // Indicator of the accepting states.
        GameKind::OpenSet | GameKind::UnionOfOpen => Ok(aut
            .labels()
            .iter()
            .map(|lab| if lab.accepting { Q::one() } else { Q::zero() })
            .collect()),
        _ => Err(LimitError::Finite(FiniteError::Model(
            ModelError::UnsupportedKind {
                operation: "sup-payoff bracket",
                kind: spec.kind.token(),
            },
        ))),
    }
}

fn build_sup_product(
    aut: &PayoffAutomaton,
    alphabets: &MoveAlphabets,
    u: &[Q],
    start_position: &Position,
) -> Result<SupProduct, LimitError> {
    let joint = alphabets.joint_len();

    // Sup of u over the states reachable from each base state.
    let reach_sup: Vec<Q> = (0..aut.num_states())
        .map(|s| {
            aut.reachable_from(s)
                .iter()
                .enumerate()
                .filter_map(|(t, &on)| if on { Some(u[t].clone()) } else { None })
                .max()
                .expect("a state reaches at least itself")
        })
        .collect();

    // Initial product state: run the start prefix, folding the running max.
    let mut base = aut.start();
    let mut running = u[base].clone();
    for &z in start_position.moves() {
        base = aut.step(base, z);
        if u[base] > running {
            running = u[base].clone();
        }
    }

    let mut index: HashMap<(usize, Q), usize> = HashMap::new();
    let mut order: Vec<(usize, Q)> = Vec::new();
    let mut queue = VecDeque::new();
    let start_key = (base, running);
    index.insert(start_key.clone(), 0);
    order.push(start_key.clone());
    queue.push_back(start_key);
    while let Some((s, m)) = queue.pop_front() {
        for z in 0..joint {
            let t = aut.step(s, z);
            let mt = if u[t] > m { u[t].clone() } else { m.clone() };
            let key = (t, mt);
            if !index.contains_key(&key) {
                index.insert(key.clone(), order.len());
                order.push(key.clone());
                queue.push_back(key);
            }
        }
    }

    let mut names = Vec::with_capacity(order.len());
    let mut labels = Vec::with_capacity(order.len());
    let mut transitions = Vec::with_capacity(order.len());
    let mut upper_payoff = Vec::with_capacity(order.len());
    for (i, (s, m)) in order.iter().enumerate() {
        names.push(format!("p{i}_{}", aut.state_name(*s)));
        labels.push(StateLabel::new(
            Some(m.clone()),
            aut.label(*s).accepting,
            aut.label(*s).terminal,
        ));
        let mut row = Vec::with_capacity(joint);
        for z in 0..joint {
            let t = aut.step(*s, z);
            let mt = if u[t] > *m { u[t].clone() } else { m.clone() };
            row.push(index[&(t, mt)]);
        }
        transitions.push(row);
        upper_payoff.push(if reach_sup[*s] > *m {
            reach_sup[*s].clone()
        } else {
            m.clone()
        });
    }
    // Canonicalization reorders states; track everything through names.
    let start_name = names[0].clone();
    let by_name: HashMap<String, Q> = names
        .iter()
        .cloned()
        .zip(upper_payoff.into_iter())
        .collect();
    let automaton = PayoffAutomaton::new("sup_product", names, labels, 0, transitions, joint)?;
    let upper_payoff = (0..automaton.num_states())
        .map(|s| by_name[automaton.state_name(s)].clone())
        .collect();
    let initial = automaton
        .state_index(&start_name)
        .expect("start state kept its name");
    Ok(SupProduct {
        automaton,
        upper_payoff,
        initial,
    })
}

fn sup_product_for(spec: &GameSpec) -> Result<SupProduct, LimitError> {
    let aut = match (&spec.kind, &spec.descriptor) {
        (GameKind::UnionOfOpen, crate::game::PayoffDescriptor::Union(auts)) => {
            union_product(auts, &spec.alphabets)?
        }
        _ => spec
            .automaton()
            .ok_or_else(|| {
                LimitError::Finite(FiniteError::Model(ModelError::UnsupportedKind {
                    operation: "sup-payoff bracket",
                    kind: spec.kind.token(),
                }))
            })?
            .clone(),
    };
    let u = sup_values(spec, &aut)?;
    build_sup_product(&aut, &spec.alphabets, &u, &spec.start_position)
}

/// The depth-`n` truncation of a sup-payoff game as a finite game: the
/// horizon pays the running maximum of `u` over all visited states.
pub fn finite_truncation(spec: &GameSpec, depth: usize) -> Result<GameSpec, LimitError> {
    let product = sup_product_for(spec)?;
    if product.initial != product.automaton.start() {
        // A nonempty start prefix was folded into the initial state; keep
        // positions aligned by rebasing the automaton on it.
        let aut = &product.automaton;
        let rebased = PayoffAutomaton::new(
            aut.name.clone(),
            aut.state_names().to_vec(),
            aut.labels().to_vec(),
            product.initial,
            (0..aut.num_states())
                .map(|s| aut.transitions(s).to_vec())
                .collect(),
            spec.alphabets.joint_len(),
        )?;
        return Ok(GameSpec::new(
            spec.name.clone(),
            spec.alphabets.clone(),
            GameKind::Finite(depth),
            crate::game::PayoffDescriptor::Automaton(rebased),
            spec.bounds.clone(),
            Position::empty(),
        )?);
    }
    Ok(GameSpec::new(
        spec.name.clone(),
        spec.alphabets.clone(),
        GameKind::Finite(depth),
        crate::game::PayoffDescriptor::Automaton(product.automaton),
        spec.bounds.clone(),
        Position::empty(),
    )?)
}

struct TraceData<S> {
    lower: Vec<S>,
    upper: Vec<S>,
}

/// Per-depth lower and upper truncation values. Entry `d` is the value of
/// the game cut after `max(d - 1, 0)` rounds: the lower side scores the
/// running max of `u` (a guaranteed underestimate converging to the
/// value from below), the upper side additionally credits the best `u`
/// still reachable from the final state (a certified overestimate that
/// need not converge).
fn sup_trace_in<S: Field>(
    product: &SupProduct,
    alphabets: &MoveAlphabets,
    depth: usize,
) -> Result<TraceData<S>, LimitError> {
    let aut = &product.automaton;
    let horizon = depth.saturating_sub(1);
    let lower_terminal: Vec<S> = aut
        .labels()
        .iter()
        .map(|lab| {
            S::from_q(
                lab.u
                    .as_ref()
                    .expect("product states carry the running max"),
            )
        })
        .collect();
    let upper_terminal: Vec<S> = product.upper_payoff.iter().map(|v| S::from_q(v)).collect();
    let lower_layers = layered_values(aut, alphabets, horizon, &lower_terminal)?;
    let upper_layers = layered_values(aut, alphabets, horizon, &upper_terminal)?;
    let pick = |layers: &Vec<Vec<S>>, d: usize| -> S {
        layers[d.saturating_sub(1)][product.initial].clone()
    };
    Ok(TraceData {
        lower: (0..=depth).map(|d| pick(&lower_layers.values, d)).collect(),
        upper: (0..=depth).map(|d| pick(&upper_layers.values, d)).collect(),
    })
}

/// Certified value bracket of a sup-payoff (open) game per depth.
pub fn open_value_bracket(
    spec: &GameSpec,
    depth: usize,
    tol: f64,
) -> Result<BracketTrace, LimitError> {
    let product = sup_product_for(spec)?;
    let data = sup_trace_in::<f64>(&product, &spec.alphabets, depth)?;
    Ok(assemble_trace(data.lower, data.upper, tol))
}

/// Exact-rational variant of [`open_value_bracket`].
pub fn open_value_bracket_exact(
    spec: &GameSpec,
    depth: usize,
    tol: f64,
) -> Result<BracketTrace, LimitError> {
    let product = sup_product_for(spec)?;
    let data = sup_trace_in::<Q>(&product, &spec.alphabets, depth)?;
    let lower: Vec<f64> = data.lower.iter().map(q_to_f64).collect();
    let upper: Vec<f64> = data.upper.iter().map(q_to_f64).collect();
    let mut trace = assemble_trace(lower, upper, tol);
    trace.exact = Some(data.lower.into_iter().zip(data.upper).collect());
    Ok(trace)
}

/// Product of open-set automata accepting when any component accepts.
/// Accepting product states absorb: for indicator payoffs the sup is
/// decided at the first hit.
pub fn union_product(
    auts: &[PayoffAutomaton],
    alphabets: &MoveAlphabets,
) -> Result<PayoffAutomaton, LimitError> {
    if auts.is_empty() {
        return Err(LimitError::EmptyUnion);
    }
    let joint = alphabets.joint_len();
    let accepting = |tuple: &[usize]| -> bool {
        tuple
            .iter()
            .zip(auts)
            .any(|(&s, aut)| aut.label(s).accepting)
    };

    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut order: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    let start: Vec<usize> = auts.iter().map(|a| a.start()).collect();
    index.insert(start.clone(), 0);
    order.push(start.clone());
    queue.push_back(start);
    while let Some(tuple) = queue.pop_front() {
        if accepting(&tuple) {
            continue; // absorbing
        }
        for z in 0..joint {
            let next: Vec<usize> = tuple
                .iter()
                .zip(auts)
                .map(|(&s, aut)| aut.step(s, z))
                .collect();
            if !index.contains_key(&next) {
                index.insert(next.clone(), order.len());
                order.push(next.clone());
                queue.push_back(next);
            }
        }
    }

    let mut names = Vec::with_capacity(order.len());
    let mut labels = Vec::with_capacity(order.len());
    let mut transitions = Vec::with_capacity(order.len());
    for (i, tuple) in order.iter().enumerate() {
        let acc = accepting(tuple);
        names.push(format!("u{i}"));
        labels.push(StateLabel::new(
            Some(if acc { Q::one() } else { Q::zero() }),
            acc,
            acc,
        ));
        if acc {
            transitions.push(vec![i; joint]);
        } else {
            transitions.push(
                (0..joint)
                    .map(|z| {
                        let next: Vec<usize> = tuple
                            .iter()
                            .zip(auts)
                            .map(|(&s, aut)| aut.step(s, z))
                            .collect();
                        index[&next]
                    })
                    .collect(),
            );
        }
    }
    let product = PayoffAutomaton::new("union", names, labels, 0, transitions, joint)?;
    // Quotient away redundant product states so a stabilized union is
    // structurally recognizable (and the state count stays flat).
    Ok(product.minimized())
}

/// The union game over the first `j` component sets, as an open-set spec.
pub fn union_prefix_spec(specs: &[GameSpec], j: usize) -> Result<GameSpec, LimitError> {
    if specs.is_empty() || j == 0 || j > specs.len() {
        return Err(LimitError::EmptyUnion);
    }
    let alphabets = specs[0].alphabets.clone();
    let mut components = Vec::with_capacity(j);
    for spec in &specs[..j] {
        if spec.kind != GameKind::OpenSet {
            return Err(LimitError::Finite(FiniteError::Model(
                ModelError::UnsupportedKind {
                    operation: "union_value_limit",
                    kind: spec.kind.token(),
                },
            )));
        }
        if spec.alphabets != alphabets {
            return Err(LimitError::Finite(FiniteError::Model(
                ModelError::AlphabetMismatch {
                    detail: "union components must share the move alphabets".into(),
                },
            )));
        }
        components.push(
            spec.automaton()
                .expect("open-set specs carry one automaton")
                .clone(),
        );
    }
    let product = union_product(&components, &alphabets)?;
    Ok(GameSpec::new(
        format!("union_{j}"),
        alphabets,
        GameKind::OpenSet,
        crate::game::PayoffDescriptor::Automaton(product),
        (Q::zero(), Q::one()),
        Position::empty(),
    )?)
}

/// Bracket traces of the nested unions over the first `j` components,
/// for `j = 1..=n`. Lower estimates are nondecreasing in `j`.
pub fn union_value_limit(
    specs: &[GameSpec],
    n: usize,
    depth: usize,
    tol: f64,
    exact: bool,
) -> Result<Vec<BracketTrace>, LimitError> {
    if specs.is_empty() || n == 0 || n > specs.len() {
        return Err(LimitError::EmptyUnion);
    }
    let mut traces = Vec::with_capacity(n);
    for j in 1..=n {
        let union = union_prefix_spec(specs, j)?;
        let trace = if exact {
            open_value_bracket_exact(&union, depth, tol)?
        } else {
            open_value_bracket(&union, depth, tol)?
        };
        traces.push(trace);
    }
    Ok(traces)
}

/// Count visits to accepting states, capped at `k`; once `k` visits are
/// seen the product accepts and absorbs. The result is the open-set
/// automaton of "accepting states visited at least `k` times".
pub fn counting_product(
    aut: &PayoffAutomaton,
    alphabets: &MoveAlphabets,
    k: usize,
) -> Result<PayoffAutomaton, LimitError> {
    if k == 0 {
        return Err(LimitError::KMaxTooSmall);
    }
    let joint = alphabets.joint_len();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    let c0 = usize::from(aut.label(aut.start()).accepting).min(k);
    let start = (aut.start(), c0);
    index.insert(start, 0);
    order.push(start);
    queue.push_back(start);
    while let Some((s, c)) = queue.pop_front() {
        if c >= k {
            continue; // absorbing accept
        }
        for z in 0..joint {
            let t = aut.step(s, z);
            let ct = (c + usize::from(aut.label(t).accepting)).min(k);
            let key = (t, ct);
            if !index.contains_key(&key) {
                index.insert(key, order.len());
                order.push(key);
                queue.push_back(key);
            }
        }
    }
    let mut names = Vec::with_capacity(order.len());
    let mut labels = Vec::with_capacity(order.len());
    let mut transitions = Vec::with_capacity(order.len());
    for (i, &(s, c)) in order.iter().enumerate() {
        let hit = c >= k;
        names.push(format!("k{i}_{}", aut.state_name(s)));
        labels.push(StateLabel::new(
            Some(if hit { Q::one() } else { Q::zero() }),
            hit,
            hit,
        ));
        if hit {
            transitions.push(vec![i; joint]);
        } else {
            transitions.push(
                (0..joint)
                    .map(|z| {
                        let t = aut.step(s, z);
                        let ct = (c + usize::from(aut.label(t).accepting)).min(k);
                        index[&(t, ct)]
                    })
                    .collect(),
            );
        }
    }
    Ok(PayoffAutomaton::new(
        "count",
        names,
        labels,
        0,
        transitions,
        joint,
    )?)
}

/// States from which every infinite continuation visits accepting states
/// infinitely often: no state that can sustain an accepting-free infinite
/// path is reachable.
pub fn inevitable_states(aut: &PayoffAutomaton) -> Vec<bool> {
    let n = aut.num_states();
    // Survivors of iterated trimming inside the non-accepting subgraph:
    // states with an infinite accepting-free path.
    let mut alive: Vec<bool> = (0..n).map(|s| !aut.label(s).accepting).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if alive[s] && !aut.transitions(s).iter().any(|&t| alive[t]) {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..n)
        .map(|s| {
            aut.reachable_from(s)
                .iter()
                .enumerate()
                .all(|(t, &on)| !on || !alive[t])
        })
        .collect()
}

/// Two-sided bounds for the payoff "accepting states are visited
/// infinitely often".
///
/// Upper side: for each `k <= k_max` the set "visited at least `k` times"
/// is an open superset, so its certified upper bound is an upper bound
/// here; the reported upper is the minimum over `k`. The open supersets'
/// lower values converge to their own values, which still only bound this
/// game from above — they are reported separately as estimates.
///
/// Lower side: a finite play can never witness infinite recurrence, so
/// only structural inevitability counts: positions whose state forces
/// accepting visits forever pay 1, everything else 0.
pub fn gdelta_value_bracket(
    spec: &GameSpec,
    k_max: usize,
    depth: usize,
    tol: f64,
    exact: bool,
) -> Result<BracketTrace, LimitError> {
    if k_max == 0 {
        return Err(LimitError::KMaxTooSmall);
    }
    let aut = match (&spec.kind, &spec.descriptor) {
        (GameKind::GDelta, crate::game::PayoffDescriptor::Automaton(aut)) => aut,
        _ => {
            return Err(LimitError::Finite(FiniteError::Model(
                ModelError::UnsupportedKind {
                    operation: "gdelta_value_bracket",
                    kind: spec.kind.token(),
                },
            )))
        }
    };

    // Lower truncations on the base automaton.
    let inevitable = inevitable_states(aut);
    let lower_terminal: Vec<Q> = inevitable
        .iter()
        .map(|&inev| if inev { Q::one() } else { Q::zero() })
        .collect();
    let horizon = depth.saturating_sub(1);
    let initial = aut.run_from(aut.start(), &spec.start_position)?;
    let lower_layers = layered_values::<Q>(aut, &spec.alphabets, horizon, &lower_terminal)?;
    let lower_exact: Vec<Q> = (0..=depth)
        .map(|d| lower_layers.values[d.saturating_sub(1)][initial].clone())
        .collect();

    // Upper bounds through the counting supersets.
    let mut upper_exact: Vec<Q> = Vec::new();
    let mut estimates_exact: Vec<Q> = Vec::new();
    for k in 1..=k_max {
        let counting = counting_product(aut, &spec.alphabets, k)?;
        let open = GameSpec::new(
            format!("{}_count{k}", spec.name),
            spec.alphabets.clone(),
            GameKind::OpenSet,
            crate::game::PayoffDescriptor::Automaton(counting),
            (Q::zero(), Q::one()),
            spec.start_position.clone(),
        )?;
        let product = sup_product_for(&open)?;
        let data = sup_trace_in::<Q>(&product, &spec.alphabets, depth)?;
        if k == 1 {
            upper_exact = data.upper;
            estimates_exact = data.lower;
        } else {
            for (acc, v) in upper_exact.iter_mut().zip(data.upper) {
                if v < *acc {
                    *acc = v;
                }
            }
            for (acc, v) in estimates_exact.iter_mut().zip(data.lower) {
                if v < *acc {
                    *acc = v;
                }
            }
        }
    }

    let lower: Vec<f64> = lower_exact.iter().map(q_to_f64).collect();
    let upper: Vec<f64> = upper_exact.iter().map(q_to_f64).collect();
    let mut trace = assemble_trace(lower, upper, tol);
    trace.k_max = Some(k_max);
    trace.upper_estimates = Some(estimates_exact.iter().map(q_to_f64).collect());
    if exact {
        trace.exact = Some(lower_exact.into_iter().zip(upper_exact).collect());
        trace.upper_estimates_exact = Some(estimates_exact);
    }
    Ok(trace)
}

/// Value oracle for the locally optimal construction: maps (automaton
/// state, round) to a claimed game value.
pub type ValueOracle<'a> = &'a dyn Fn(usize, usize) -> Option<Q>;

/// At every position play the one-round optimum of the game whose payoffs
/// are the oracle values of the successor states. With exact finite
/// values this reproduces an optimal strategy; fed the true values of an
/// infinite game it can fail badly for the player trying to reach the
/// payoff, which is the point of the construction.
pub fn locally_optimal_strategy(
    spec: &GameSpec,
    owner: Player,
    oracle: ValueOracle<'_>,
    depth: usize,
) -> Result<BehavioralStrategy, LimitError> {
    let aut = match (&spec.kind, &spec.descriptor) {
        (_, crate::game::PayoffDescriptor::Automaton(aut)) => aut,
        _ => {
            return Err(LimitError::Finite(FiniteError::Model(
                ModelError::UnsupportedKind {
                    operation: "locally_optimal_strategy",
                    kind: spec.kind.token(),
                },
            )))
        }
    };
    let alphabets = &spec.alphabets;
    let joint = alphabets.joint_len();
    let move_count = alphabets.move_count(owner);
    let initial = aut.run_from(aut.start(), &spec.start_position)?;

    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert((initial, 0), 0);
    order.push((initial, 0));
    queue.push_back((initial, 0));
    while let Some((s, r)) = queue.pop_front() {
        for z in 0..joint {
            let next = if aut.label(s).terminal {
                (s, r)
            } else {
                (aut.step(s, z), (r + 1).min(depth))
            };
            if !index.contains_key(&next) {
                index.insert(next, order.len());
                order.push(next);
                queue.push_back(next);
            }
        }
    }

    let uniform = || {
        let share = Q::one() / Q::from_integer(move_count.into());
        vec![share; move_count]
    };
    let mut names = Vec::with_capacity(order.len());
    let mut rows = Vec::with_capacity(order.len());
    let mut transitions = Vec::with_capacity(order.len());
    for &(s, r) in &order {
        names.push(format!("{}_r{r}", aut.state_name(s)));
        let row = if aut.label(s).terminal || r >= depth {
            uniform()
        } else {
            let mut payoffs = vec![vec![Q::zero(); alphabets.y_len()]; alphabets.x_len()];
            for x in 0..alphabets.x_len() {
                for y in 0..alphabets.y_len() {
                    let t = aut.step(s, alphabets.joint_index(x, y));
                    payoffs[x][y] = oracle(t, r + 1).ok_or_else(|| LimitError::OracleGap {
                        state: aut.state_name(t).to_string(),
                        round: r + 1,
                    })?;
                }
            }
            let sol = solve_matrix_generic(&payoffs).map_err(FiniteError::from)?;
            match owner {
                Player::I => sol.row_strategy,
                Player::II => sol.col_strategy,
            }
        };
        rows.push(row);
        transitions.push(
            (0..joint)
                .map(|z| {
                    let next = if aut.label(s).terminal {
                        (s, r)
                    } else {
                        (aut.step(s, z), (r + 1).min(depth))
                    };
                    index[&next]
                })
                .collect(),
        );
    }
    let automaton = StrategyAutomaton::new(names, rows, index[&(initial, 0)], transitions)
        .map_err(FiniteError::from)?;
    Ok(
        BehavioralStrategy::finite_state(owner, "locally_optimal", automaton, move_count)
            .map_err(FiniteError::from)?,
    )
}
