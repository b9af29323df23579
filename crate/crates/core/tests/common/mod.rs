//! Shared deterministic instance generators for the integration tests.
// Each integration binary compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

use blackwell::game::{
    BehavioralStrategy, GameKind, GameSpec, MoveAlphabets, PayoffAutomaton, PayoffDescriptor,
    Player, Position, StateLabel,
};
use blackwell::rational::{q, Q};
use blackwell::sim::SplitMix64;
use num_traits::Zero;

pub struct TestRng(SplitMix64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(SplitMix64::new(seed))
    }

    pub fn below(&mut self, bound: usize) -> usize {
        (self.0.next_u64() % bound as u64) as usize
    }

    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        lo + (self.0.next_u64() % (hi - lo + 1) as u64) as i64
    }

    pub fn f64_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.next_f64()
    }

    /// Small exact rational with denominator 1, 2 or 4.
    pub fn small_q(&mut self) -> Q {
        let denom = [1i64, 2, 4][self.below(3)];
        q(self.range_i64(-8, 8), denom)
    }

    /// Exact nonnegative rational, at most `hi`.
    pub fn small_nonneg_q(&mut self, hi: i64) -> Q {
        q(self.range_i64(0, hi * 4), 4)
    }

    /// Random exact probability row of the given width.
    pub fn probability_row(&mut self, width: usize) -> Vec<Q> {
        let weights: Vec<i64> = (0..width).map(|_| self.range_i64(1, 5)).collect();
        let total: i64 = weights.iter().sum();
        weights.iter().map(|&w| q(w, total)).collect()
    }
}

pub fn move_labels(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

fn bounds_of(values: impl Iterator<Item = Q>) -> (Q, Q) {
    let mut lo: Option<Q> = None;
    let mut hi: Option<Q> = None;
    for v in values {
        if lo.as_ref().map_or(true, |cur| &v < cur) {
            lo = Some(v.clone());
        }
        if hi.as_ref().map_or(true, |cur| &v > cur) {
            hi = Some(v);
        }
    }
    (lo.unwrap_or_else(Q::zero), hi.unwrap_or_else(Q::zero))
}

/// Random matrix game with exact rational entries, up to 4x4.
pub fn random_matrix_spec(rng: &mut TestRng, tag: usize) -> GameSpec {
    let x_len = 1 + rng.below(4);
    let y_len = 1 + rng.below(4);
    let table: Vec<Vec<Q>> = (0..x_len)
        .map(|_| (0..y_len).map(|_| rng.small_q()).collect())
        .collect();
    let (lo, hi) = bounds_of(table.iter().flatten().cloned());
    GameSpec::new(
        format!("matrix{tag}"),
        MoveAlphabets::new(move_labels("a", x_len), move_labels("b", y_len)).unwrap(),
        GameKind::Matrix,
        PayoffDescriptor::Table(table),
        (lo, hi),
        Position::empty(),
    )
    .unwrap()
}

/// Random finite game: every state carries a payoff label, transitions
/// are arbitrary, and an occasional state is an absorbing stop.
pub fn random_finite_spec(rng: &mut TestRng, tag: usize) -> GameSpec {
    let horizon = 1 + rng.below(3);
    random_finite_spec_with_horizon(rng, tag, horizon)
}

pub fn random_finite_spec_with_horizon(rng: &mut TestRng, tag: usize, horizon: usize) -> GameSpec {
    let x_len = 1 + rng.below(3);
    let y_len = 1 + rng.below(3);
    let states = 3 + rng.below(4);
    let joint = x_len * y_len;
    let mut names = Vec::with_capacity(states);
    let mut labels = Vec::with_capacity(states);
    let mut transitions = Vec::with_capacity(states);
    for s in 0..states {
        names.push(format!("s{s}"));
        let terminal = s != 0 && rng.below(6) == 0;
        labels.push(StateLabel::new(Some(rng.small_q()), false, terminal));
        transitions.push(if terminal {
            vec![s; joint]
        } else {
            (0..joint).map(|_| rng.below(states)).collect()
        });
    }
    let automaton = PayoffAutomaton::new("payoff", names, labels, 0, transitions, joint).unwrap();
    let (lo, hi) = bounds_of(automaton.labels().iter().filter_map(|l| l.u.clone()));
    GameSpec::new(
        format!("finite{tag}"),
        MoveAlphabets::new(move_labels("a", x_len), move_labels("b", y_len)).unwrap(),
        GameKind::Finite(horizon),
        PayoffDescriptor::Automaton(automaton),
        (lo, hi),
        Position::empty(),
    )
    .unwrap()
}

/// Two-round game over 2x2 alphabets whose payoff is an arbitrary exact
/// function of the full history (a depth-2 position tree).
pub fn random_two_round_tree(rng: &mut TestRng, tag: usize) -> GameSpec {
    let joint = 4usize;
    // 1 root + 4 depth-1 + 16 depth-2 leaf states.
    let mut names = vec!["root".to_string()];
    let mut labels = vec![StateLabel::new(Some(Q::zero()), false, false)];
    let mut transitions: Vec<Vec<usize>> = vec![vec![0; joint]];
    for z1 in 0..joint {
        let mid = names.len();
        names.push(format!("d1_{z1}"));
        labels.push(StateLabel::new(Some(Q::zero()), false, false));
        transitions.push(vec![0; joint]);
        transitions[0][z1] = mid;
        for z2 in 0..joint {
            let leaf = names.len();
            names.push(format!("leaf_{z1}_{z2}"));
            labels.push(StateLabel::new(Some(rng.small_q()), false, true));
            transitions.push(vec![leaf; joint]);
            transitions[mid][z2] = leaf;
        }
    }
    let automaton = PayoffAutomaton::new("payoff", names, labels, 0, transitions, joint).unwrap();
    let (lo, hi) = bounds_of(automaton.labels().iter().filter_map(|l| l.u.clone()));
    GameSpec::new(
        format!("tree{tag}"),
        MoveAlphabets::new(move_labels("a", 2), move_labels("b", 2)).unwrap(),
        GameKind::Finite(2),
        PayoffDescriptor::Automaton(automaton),
        (lo, hi),
        Position::empty(),
    )
    .unwrap()
}

/// Random open-set game: accepting states absorb with payoff decided.
pub fn random_open_set_spec(rng: &mut TestRng, tag: usize) -> GameSpec {
    random_open_set_spec_over(rng, tag, 2, 2)
}

pub fn random_open_set_spec_over(
    rng: &mut TestRng,
    tag: usize,
    x_len: usize,
    y_len: usize,
) -> GameSpec {
    let states = 3 + rng.below(3);
    let joint = x_len * y_len;
    let mut names = Vec::with_capacity(states);
    let mut labels = Vec::with_capacity(states);
    let mut transitions = Vec::with_capacity(states);
    for s in 0..states {
        names.push(format!("s{s}"));
        let accepting = s != 0 && rng.below(3) == 0;
        labels.push(StateLabel::new(None, accepting, accepting));
        transitions.push(if accepting {
            vec![s; joint]
        } else {
            (0..joint).map(|_| rng.below(states)).collect()
        });
    }
    let automaton = PayoffAutomaton::new("payoff", names, labels, 0, transitions, joint).unwrap();
    GameSpec::new(
        format!("open{tag}"),
        MoveAlphabets::new(move_labels("a", x_len), move_labels("b", y_len)).unwrap(),
        GameKind::OpenSet,
        PayoffDescriptor::Automaton(automaton),
        (Q::zero(), Q::from_integer(1.into())),
        Position::empty(),
    )
    .unwrap()
}

/// Random sup-payoff game with rational labels on every state.
pub fn random_generalized_open_spec(rng: &mut TestRng, tag: usize) -> GameSpec {
    let states = 3 + rng.below(3);
    let joint = 4usize;
    let mut names = Vec::with_capacity(states);
    let mut labels = Vec::with_capacity(states);
    let mut transitions = Vec::with_capacity(states);
    for s in 0..states {
        names.push(format!("s{s}"));
        labels.push(StateLabel::new(Some(rng.small_nonneg_q(2)), false, false));
        transitions.push((0..joint).map(|_| rng.below(states)).collect());
    }
    let automaton = PayoffAutomaton::new("payoff", names, labels, 0, transitions, joint).unwrap();
    let (lo, hi) = bounds_of(automaton.labels().iter().filter_map(|l| l.u.clone()));
    GameSpec::new(
        format!("gopen{tag}"),
        MoveAlphabets::new(move_labels("a", 2), move_labels("b", 2)).unwrap(),
        GameKind::GeneralizedOpen,
        PayoffDescriptor::Automaton(automaton),
        (lo, hi),
        Position::empty(),
    )
    .unwrap()
}

/// Random recurrence-objective game.
pub fn random_gdelta_spec(rng: &mut TestRng, tag: usize) -> GameSpec {
    let states = 2 + rng.below(4);
    let joint = 4usize;
    let mut names = Vec::with_capacity(states);
    let mut labels = Vec::with_capacity(states);
    let mut transitions = Vec::with_capacity(states);
    for s in 0..states {
        names.push(format!("s{s}"));
        labels.push(StateLabel::new(None, rng.below(3) == 0, false));
        transitions.push((0..joint).map(|_| rng.below(states)).collect());
    }
    let automaton = PayoffAutomaton::new("payoff", names, labels, 0, transitions, joint).unwrap();
    GameSpec::new(
        format!("rec{tag}"),
        MoveAlphabets::new(move_labels("a", 2), move_labels("b", 2)).unwrap(),
        GameKind::GDelta,
        PayoffDescriptor::Automaton(automaton),
        (Q::zero(), Q::from_integer(1.into())),
        Position::empty(),
    )
    .unwrap()
}

/// Random union of open-set games over shared alphabets.
pub fn random_union_spec(rng: &mut TestRng, tag: usize) -> GameSpec {
    let count = 2 + rng.below(3);
    let automata: Vec<PayoffAutomaton> = (0..count)
        .map(|i| {
            random_open_set_spec(rng, tag * 10 + i)
                .automaton()
                .unwrap()
                .clone()
        })
        .collect();
    GameSpec::new(
        format!("union{tag}"),
        MoveAlphabets::new(move_labels("a", 2), move_labels("b", 2)).unwrap(),
        GameKind::UnionOfOpen,
        PayoffDescriptor::Union(automata),
        (Q::zero(), Q::from_integer(1.into())),
        Position::empty(),
    )
    .unwrap()
}

/// A random spec of any kind, for round-trip coverage.
pub fn random_any_spec(rng: &mut TestRng, tag: usize) -> GameSpec {
    match rng.below(6) {
        0 => random_matrix_spec(rng, tag),
        1 => random_finite_spec(rng, tag),
        2 => random_generalized_open_spec(rng, tag),
        3 => random_open_set_spec(rng, tag),
        4 => random_gdelta_spec(rng, tag),
        _ => random_union_spec(rng, tag),
    }
}

/// Random table strategy over positions up to the given depth.
pub fn random_table_strategy(
    rng: &mut TestRng,
    owner: Player,
    alphabets: &MoveAlphabets,
    depth: usize,
) -> BehavioralStrategy {
    let count = alphabets.move_count(owner);
    let mut entries = Vec::new();
    let mut frontier = vec![Position::empty()];
    for _ in 0..=depth {
        for p in &frontier {
            if rng.below(4) != 0 {
                entries.push((p.clone(), rng.probability_row(count)));
            }
        }
        frontier = frontier
            .iter()
            .flat_map(|p| {
                (0..alphabets.joint_len())
                    .map(|z| p.child(z))
                    .collect::<Vec<_>>()
            })
            .collect();
        if frontier.len() > 64 {
            frontier.truncate(64);
        }
    }
    BehavioralStrategy::table(owner, "random", entries, count).unwrap()
}
