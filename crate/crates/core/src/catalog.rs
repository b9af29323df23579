//! Built-in example games and strategies.

use num_traits::{One, Zero};

use crate::game::{
    BehavioralStrategy, GameKind, GameSpec, MoveAlphabets, PayoffAutomaton, PayoffDescriptor,
    Player, Position, StateLabel,
};
use crate::rational::{q_int, Q};

/// Scissors-paper-stone: the loser pays the winner one unit.
pub fn sps() -> GameSpec {
    let moves: Vec<String> = ["scissors", "paper", "stone"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let alphabets = MoveAlphabets::new(moves.clone(), moves).unwrap();
    // scissors beat paper, paper beats stone, stone blunts scissors
    let table = vec![
        vec![q_int(0), q_int(1), q_int(-1)],
        vec![q_int(-1), q_int(0), q_int(1)],
        vec![q_int(1), q_int(-1), q_int(0)],
    ];
    GameSpec::new(
        "sps",
        alphabets,
        GameKind::Matrix,
        PayoffDescriptor::Table(table),
        (q_int(-1), q_int(1)),
        Position::empty(),
    )
    .unwrap()
}

/// Both players repeatedly say continue or stop. The payoff is 1 once
/// exactly one of them has stopped, 0 if they stop together or never
/// stop: player II tries to match the round player I stops in.
pub fn stopgame() -> GameSpec {
    let moves: Vec<String> = ["continue", "stop"].iter().map(|s| s.to_string()).collect();
    let alphabets = MoveAlphabets::new(moves.clone(), moves).unwrap();
    let automaton = PayoffAutomaton::new(
        "payoff",
        vec!["live".into(), "won".into(), "lost".into()],
        vec![
            StateLabel::new(Some(Q::zero()), false, false),
            StateLabel::new(Some(Q::one()), true, true),
            StateLabel::new(Some(Q::zero()), false, true),
        ],
        0,
        // joint order: (continue,continue), (continue,stop), (stop,continue), (stop,stop)
        vec![vec![0, 1, 1, 2], vec![1, 1, 1, 1], vec![2, 2, 2, 2]],
        4,
    )
    .unwrap();
    GameSpec::new(
        "stopgame",
        alphabets,
        GameKind::GeneralizedOpen,
        PayoffDescriptor::Automaton(automaton),
        (Q::zero(), Q::one()),
        Position::empty(),
    )
    .unwrap()
}

fn bit_game(accepting_move: usize, name: &str) -> GameSpec {
    let x: Vec<String> = vec!["wait".into()];
    let y: Vec<String> = vec!["zero".into(), "one".into()];
    let alphabets = MoveAlphabets::new(x, y).unwrap();
    // State records player II's last move; player I has no influence.
    let accepting = |s: usize| s == 1;
    let automaton = PayoffAutomaton::new(
        "payoff",
        vec!["other".into(), "hit".into()],
        vec![
            StateLabel::new(Some(Q::zero()), accepting(0), false),
            StateLabel::new(Some(Q::zero()), accepting(1), false),
        ],
        0,
        {
            // joint moves: (wait,zero) = 0, (wait,one) = 1
            let to_state = |z: usize| usize::from(z == accepting_move);
            vec![
                vec![to_state(0), to_state(1)],
                vec![to_state(0), to_state(1)],
            ]
        },
        2,
    )
    .unwrap();
    GameSpec::new(
        name,
        alphabets,
        GameKind::GDelta,
        PayoffDescriptor::Automaton(automaton),
        (Q::zero(), Q::one()),
        Position::empty(),
    )
    .unwrap()
}

/// Player II emits bits; the payoff is 1 iff the bit 1 recurs forever.
/// Player II wins (value 0) by eventually playing only zeros.
pub fn inf_ones() -> GameSpec {
    bit_game(1, "inf-ones")
}

/// The complementary bit game: payoff 1 iff the bit 0 recurs forever.
/// Together with `inf_ones` every play satisfies one of the two
/// objectives, yet each game alone has value 0.
pub fn fin_ones() -> GameSpec {
    bit_game(0, "fin-ones")
}

/// The stop-game strategy that picks a stopping round uniformly from
/// `1..=n`: at round `k`, if still live, stop with probability
/// `1/(n-k+1)`. Its value is exactly `1 - 1/n`.
pub fn sigma_n(n: usize) -> BehavioralStrategy {
    assert!(n >= 1, "sigma_n needs n >= 1");
    let mut entries = Vec::with_capacity(n);
    let mut live = Position::empty();
    for k in 1..=n {
        let stop = Q::new(1.into(), ((n - k + 1) as i64).into());
        entries.push((live.clone(), vec![Q::one() - stop.clone(), stop]));
        live = live.child(0); // (continue, continue)
    }
    BehavioralStrategy::table(Player::I, format!("sigma{n}"), entries, 2).unwrap()
}

/// Canonical document for a named example, if the name is known.
pub fn example_document(name: &str) -> Option<String> {
    let spec = match name {
        "sps" => sps(),
        "stopgame" => stopgame(),
        "inf-ones" => inf_ones(),
        "fin-ones" => fin_ones(),
        _ => return None,
    };
    Some(crate::format::serialize_game(&spec))
}

/// Names accepted by [`example_document`].
pub const EXAMPLE_NAMES: [&str; 4] = ["sps", "stopgame", "inf-ones", "fin-ones"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_game;

    #[test]
    fn documents_parse_to_their_specs() {
        for name in EXAMPLE_NAMES {
            let doc = example_document(name).unwrap();
            let spec = parse_game(&doc).unwrap();
            assert_eq!(spec.name, name);
        }
        assert!(example_document("nonesuch").is_none());
    }

    #[test]
    fn sps_is_a_three_by_three_matrix() {
        let spec = sps();
        assert_eq!(spec.kind, GameKind::Matrix);
        let table = spec.table().unwrap();
        assert_eq!(table.len(), 3);
        // Cyclic: every row contains one win, one draw, one loss.
        for row in table {
            let mut sorted = row.clone();
            sorted.sort();
            assert_eq!(sorted, vec![q_int(-1), q_int(0), q_int(1)]);
        }
    }

    #[test]
    fn stopgame_has_three_states() {
        let spec = stopgame();
        assert_eq!(spec.kind, GameKind::GeneralizedOpen);
        assert_eq!(spec.automaton().unwrap().num_states(), 3);
    }

    #[test]
    fn bit_games_accept_on_the_named_move() {
        let inf = inf_ones();
        assert_eq!(inf.kind, GameKind::GDelta);
        let aut = inf.automaton().unwrap();
        // The accepting state is entered exactly on player II's move `one`.
        let hit = aut.state_index("hit").unwrap();
        let other = aut.state_index("other").unwrap();
        assert!(aut.label(hit).accepting);
        assert_eq!(aut.step(other, 1), hit);
        assert_eq!(aut.step(other, 0), other);

        let fin = fin_ones();
        let aut = fin.automaton().unwrap();
        let hit = aut.state_index("hit").unwrap();
        let other = aut.state_index("other").unwrap();
        assert_eq!(aut.step(other, 0), hit);
        assert_eq!(aut.step(other, 1), other);
    }

    #[test]
    fn complementary_bit_games_are_both_worthless_for_player_one() {
        use crate::limit::gdelta_value_bracket;
        for spec in [inf_ones(), fin_ones()] {
            let trace = gdelta_value_bracket(&spec, 2, 4, 1e-6, true).unwrap();
            for (lo, _) in trace.exact.as_ref().unwrap() {
                assert_eq!(lo, &Q::zero());
            }
        }
    }
}
