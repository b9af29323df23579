//! Acceptance suite: one test per criterion, each printing a PASS line.
//! Exact small-instance oracles stand in for the limit statements the
//! criteria are derived from.

mod common;

use std::collections::{BTreeMap, HashMap};

use blackwell::catalog;
use blackwell::finite::{
    backward_induction_exact, best_response_exact, depth_product, expected_payoff, states_at_round,
    stitch_strategies, truncate,
};
use blackwell::format::{parse_game, parse_strategy, serialize_game};
use blackwell::game::{
    measure_of_position_exact, scale_shift_payoff, switch_players, BehavioralStrategy, GameKind,
    GameSpec, PayoffAutomaton, Player, Position,
};
use blackwell::limit::{
    finite_truncation, gdelta_value_bracket, locally_optimal_strategy, open_value_bracket_exact,
    union_prefix_spec, union_value_limit,
};
use blackwell::matrix::{solve_matrix, solve_matrix_exact};
use blackwell::rational::{q, q_int, Q};
use blackwell::sim::simulate;
use common::TestRng;
use num_traits::{One, Zero};

#[test]
fn criterion_01_sps_exactness() {
    // The canonical document and the raw cyclic matrix agree.
    let report = backward_induction_exact(&catalog::sps()).unwrap();
    assert_eq!(report.value, q_int(0));
    let thirds = vec![q(1, 3), q(1, 3), q(1, 3)];
    for strategy in [&report.strategy_i, &report.strategy_ii] {
        match &strategy.body {
            blackwell::game::StrategyBody::Table(entries) => {
                assert_eq!(entries.get(&Position::empty()).unwrap(), &thirds);
            }
            other => panic!("expected a table strategy, got {other:?}"),
        }
    }

    let raw = vec![
        vec![q_int(0), q_int(-1), q_int(1)],
        vec![q_int(1), q_int(0), q_int(-1)],
        vec![q_int(-1), q_int(1), q_int(0)],
    ];
    let sol = solve_matrix_exact(&raw).unwrap();
    assert_eq!(sol.value, q_int(0));
    assert_eq!(sol.row_strategy, thirds);
    assert_eq!(sol.col_strategy, thirds);
    println!("criterion 01 (sps exactness): PASS");
}

#[test]
fn criterion_02_minimax_duality() {
    let mut rng = TestRng::new(0x0202);
    for case in 0..500 {
        let rows = 1 + rng.below(6);
        let cols = 1 + rng.below(6);
        let matrix: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.f64_in(-1.0, 1.0)).collect())
            .collect();
        let sol = solve_matrix(&matrix, 1e-9).unwrap();
        let primal = sol.row_guarantee(&matrix);
        let dual = sol.col_guarantee(&matrix);
        assert!(
            (primal - dual).abs() <= 1e-7,
            "case {case}: primal {primal} vs dual {dual}"
        );
        assert!(primal >= sol.value - 1e-7, "case {case}: row guarantee");
        assert!(dual <= sol.value + 1e-7, "case {case}: col guarantee");
        assert!(sol.certificate_gap <= 1e-7, "case {case}: gap");
    }
    println!("criterion 02 (minimax duality, 500 matrices): PASS");
}

/// Enumerate the pure behavioral strategies of a two-round 2x2 game (one
/// binary choice at the root and at each of the four depth-1 positions),
/// score every pure-versus-pure pair, and solve the resulting 32x32
/// matrix game exactly.
fn normal_form_value(spec: &GameSpec) -> Q {
    let aut = spec.automaton().unwrap();
    let choice = |code: usize, slot: usize| (code >> slot) & 1;
    let mut table = vec![vec![Q::zero(); 32]; 32];
    for (ci, row) in table.iter_mut().enumerate() {
        for (cj, cell) in row.iter_mut().enumerate() {
            let x1 = choice(ci, 0);
            let y1 = choice(cj, 0);
            let z1 = x1 * 2 + y1;
            let x2 = choice(ci, 1 + z1);
            let y2 = choice(cj, 1 + z1);
            let z2 = x2 * 2 + y2;
            let state = aut.step(aut.step(aut.start(), z1), z2);
            *cell = aut.label(state).u.clone().unwrap();
        }
    }
    solve_matrix_exact(&table).unwrap().value
}

#[test]
fn criterion_03_normal_form_oracle() {
    let mut rng = TestRng::new(0x0303);
    for case in 0..100 {
        let spec = common::random_two_round_tree(&mut rng, case);
        let induction = backward_induction_exact(&spec).unwrap().value;
        let enumerated = normal_form_value(&spec);
        assert_eq!(induction, enumerated, "case {case}");
    }
    println!("criterion 03 (normal-form oracle, 100 games): PASS");
}

#[test]
fn criterion_04_stop_game_strategy_value() {
    for n in 2..=20usize {
        let truncated = finite_truncation(&catalog::stopgame(), n).unwrap();
        let sigma = catalog::sigma_n(n);
        let br = best_response_exact(&truncated, &sigma).unwrap();
        assert_eq!(br.value, Q::one() - q(1, n as i64), "n = {n}");
    }
    println!("criterion 04 (stop-game strategy value, n = 2..=20): PASS");
}

/// Independent oracle for the stop-game truncation values: recurse over
/// explicit positions, score the running maximum of `u` along each path
/// by replaying it on the base automaton, and solve each one-round game
/// exactly.
fn explicit_position_value(
    spec: &GameSpec,
    p: &Position,
    remaining: usize,
    memo: &mut HashMap<Position, Q>,
) -> Q {
    if let Some(v) = memo.get(p) {
        return v.clone();
    }
    let aut = spec.automaton().unwrap();
    let value = if remaining == 0 {
        let visited = aut.visited_from_start(p).unwrap();
        visited
            .iter()
            .map(|&s| aut.label(s).u.clone().unwrap())
            .max()
            .unwrap()
    } else {
        let mut payoffs = vec![vec![Q::zero(); 2]; 2];
        for x in 0..2usize {
            for y in 0..2usize {
                let z = spec.alphabets.joint_index(x, y);
                payoffs[x][y] = explicit_position_value(spec, &p.child(z), remaining - 1, memo);
            }
        }
        solve_matrix_exact(&payoffs).unwrap().value
    };
    memo.insert(p.clone(), value.clone());
    value
}

#[test]
fn criterion_05_stop_game_bracket() {
    let spec = catalog::stopgame();
    let trace = open_value_bracket_exact(&spec, 20, 1e-6).unwrap();
    let exact = trace.exact.as_ref().unwrap();

    for d in 1..=6usize {
        let closed_form = Q::one() - q(1, d as i64);
        assert_eq!(exact[d].0, closed_form, "closed form at depth {d}");
        let mut memo = HashMap::new();
        let oracle = explicit_position_value(&spec, &Position::empty(), d - 1, &mut memo);
        assert_eq!(exact[d].0, oracle, "explicit-position oracle at depth {d}");
    }
    for d in 1..exact.len() {
        assert!(exact[d - 1].0 <= exact[d].0, "nondecreasing at {d}");
    }
    // Every bracket contains the limit value 1.
    for (lo, hi) in exact {
        assert!(lo <= &Q::one() && &Q::one() <= hi);
    }
    println!("criterion 05 (stop-game bracket, closed form to depth 6, monotone to 20): PASS");
}

#[test]
fn criterion_06_locally_optimal_failure() {
    let spec = catalog::stopgame();
    let aut = spec.automaton().unwrap();
    let live = aut.state_index("live").unwrap();
    let won = aut.state_index("won").unwrap();
    // The true values of the infinite game at every position.
    let oracle = move |state: usize, _round: usize| -> Option<Q> {
        Some(if state == live || state == won {
            Q::one()
        } else {
            Q::zero()
        })
    };
    let local = locally_optimal_strategy(&spec, Player::I, &oracle, 10).unwrap();
    for depth in 1..=10usize {
        let truncated = finite_truncation(&spec, depth).unwrap();
        let br = best_response_exact(&truncated, &local).unwrap();
        assert_eq!(br.value, Q::zero(), "depth {depth}");
    }
    let trace = open_value_bracket_exact(&spec, 10, 1e-6).unwrap();
    let lower_10 = &trace.exact.as_ref().unwrap()[10].0;
    assert!(lower_10 >= &q(9, 10));
    println!("criterion 06 (locally optimal failure: response 0, lower_10 >= 0.9): PASS");
}

#[test]
fn criterion_07_gdelta_example() {
    let spec = catalog::inf_ones();
    let trace = gdelta_value_bracket(&spec, 3, 5, 1e-6, true).unwrap();
    let exact = trace.exact.as_ref().unwrap();
    let estimates = trace.upper_estimates_exact.as_ref().unwrap();
    for d in 0..=5usize {
        assert_eq!(exact[d].0, Q::zero(), "lower at depth {d}");
        assert_eq!(estimates[d], Q::zero(), "estimate at depth {d}");
    }
    println!("criterion 07 (recurrence example: estimate 0 and lower 0 at depth 5): PASS");
}

#[test]
fn criterion_08_lemma_suite() {
    let mut rng = TestRng::new(0x0808);
    for case in 0..200 {
        let spec = if case % 2 == 0 {
            common::random_matrix_spec(&mut rng, case)
        } else {
            common::random_finite_spec(&mut rng, case)
        };
        let value = backward_induction_exact(&spec).unwrap().value;

        // Affine rescaling of the payoff rescales the value.
        let a = q(rng.range_i64(0, 8), 4);
        let c = rng.small_q();
        let scaled = scale_shift_payoff(&spec, &a, &c).unwrap();
        let scaled_value = backward_induction_exact(&scaled).unwrap().value;
        assert_eq!(
            scaled_value,
            a.clone() * value.clone() + c.clone(),
            "case {case}: affine"
        );

        // Switching the players negates the value.
        let switched = switch_players(&spec).unwrap();
        let switched_value = backward_induction_exact(&switched).unwrap().value;
        assert_eq!(switched_value, -value.clone(), "case {case}: switched");

        // Pointwise dominance implies value dominance.
        let bumped = scale_shift_payoff(&spec, &Q::one(), &rng.small_nonneg_q(2)).unwrap();
        let bumped_value = backward_induction_exact(&bumped).unwrap().value;
        assert!(bumped_value >= value, "case {case}: dominance");

        // The strategy measure is a probability measure layer by layer.
        let sigma = common::random_table_strategy(&mut rng, Player::I, &spec.alphabets, 1);
        let tau = common::random_table_strategy(&mut rng, Player::II, &spec.alphabets, 1);
        let mut total = Q::zero();
        let mut frontier = vec![Position::empty()];
        for _ in 0..2 {
            frontier = frontier
                .iter()
                .flat_map(|p| {
                    (0..spec.alphabets.joint_len())
                        .map(|z| p.child(z))
                        .collect::<Vec<_>>()
                })
                .collect();
        }
        for p in &frontier {
            total += measure_of_position_exact(&spec.alphabets, &sigma, &tau, p).unwrap();
        }
        assert_eq!(total, Q::one(), "case {case}: measure normalization");
    }
    println!("criterion 08 (lemma suite on 200 random specs): PASS");
}

#[test]
fn criterion_09_truncation_equivalence() {
    let mut rng = TestRng::new(0x0909);
    for case in 0..50 {
        let base = common::random_finite_spec_with_horizon(&mut rng, case, 3);
        let spec = depth_product(&base).unwrap();
        let report = backward_induction_exact(&spec).unwrap();
        let aut = spec.automaton().unwrap();

        let mut truncated_specs = Vec::new();
        for round in [1usize, 2] {
            let boundary = states_at_round(&spec, round).unwrap();
            let values: BTreeMap<usize, Q> = boundary
                .iter()
                .map(|&s| (s, report.value_at[report.horizon - round][s].clone()))
                .collect();
            let cut = truncate(&spec, &boundary, &values).unwrap();
            let cut_value = backward_induction_exact(&cut).unwrap().value;
            assert_eq!(cut_value, report.value, "case {case}: cut at {round}");
            truncated_specs.push((boundary, cut));
        }

        // Stitch exact-optimal parts back together and certify both sides.
        let (boundary, cut) = &truncated_specs[0];
        let cut_report = backward_induction_exact(cut).unwrap();
        for player in [Player::I, Player::II] {
            let outer = match player {
                Player::I => cut_report.strategy_i.clone(),
                Player::II => cut_report.strategy_ii.clone(),
            };
            let mut inners: BTreeMap<usize, BehavioralStrategy> = BTreeMap::new();
            for &s in boundary.iter() {
                let sub_aut = PayoffAutomaton::new(
                    aut.name.clone(),
                    aut.state_names().to_vec(),
                    aut.labels().to_vec(),
                    s,
                    (0..aut.num_states())
                        .map(|t| aut.transitions(t).to_vec())
                        .collect(),
                    spec.alphabets.joint_len(),
                )
                .unwrap();
                let sub = GameSpec::new(
                    "sub",
                    spec.alphabets.clone(),
                    GameKind::Finite(report.horizon - 1),
                    blackwell::game::PayoffDescriptor::Automaton(sub_aut),
                    spec.bounds.clone(),
                    Position::empty(),
                )
                .unwrap();
                let sub_report = backward_induction_exact(&sub).unwrap();
                inners.insert(
                    s,
                    match player {
                        Player::I => sub_report.strategy_i,
                        Player::II => sub_report.strategy_ii,
                    },
                );
            }
            let stitched = stitch_strategies(&spec, boundary, &outer, &inners).unwrap();
            let certified = best_response_exact(&spec, &stitched).unwrap();
            assert_eq!(certified.value, report.value, "case {case}: {player:?}");
        }
    }
    println!("criterion 09 (truncation equivalence and stitching, 50 games): PASS");
}

#[test]
fn criterion_10_union_limit_monotonicity() {
    let mut rng = TestRng::new(0x1010);
    for family in 0..20 {
        let specs: Vec<GameSpec> = (0..4)
            .map(|i| common::random_open_set_spec(&mut rng, family * 10 + i))
            .collect();
        let traces = union_value_limit(&specs, 4, 4, 1e-6, true).unwrap();
        let estimates: Vec<Q> = traces
            .iter()
            .map(|t| t.exact.as_ref().unwrap().last().unwrap().0.clone())
            .collect();
        for j in 1..estimates.len() {
            assert!(
                estimates[j - 1] <= estimates[j],
                "family {family}: estimates must be nondecreasing"
            );
        }
        // Once the union automaton stops changing, the estimate stops too.
        for j in 1..4usize {
            let smaller = union_prefix_spec(&specs, j).unwrap();
            let larger = union_prefix_spec(&specs, j + 1).unwrap();
            let sig_small = smaller
                .automaton()
                .unwrap()
                .minimized()
                .reachable_signature();
            let sig_large = larger
                .automaton()
                .unwrap()
                .minimized()
                .reachable_signature();
            if sig_small == sig_large {
                assert_eq!(
                    estimates[j - 1],
                    estimates[j],
                    "family {family}: stabilized automaton, moving estimate"
                );
            }
        }
    }
    println!("criterion 10 (union limit monotonicity, 20 families): PASS");
}

#[test]
fn criterion_11_simulation_consistency() {
    let mut rng = TestRng::new(0x1111);
    let spec = common::random_two_round_tree(&mut rng, 0);
    let sigma = common::random_table_strategy(&mut rng, Player::I, &spec.alphabets, 1);
    let tau = common::random_table_strategy(&mut rng, Player::II, &spec.alphabets, 1);
    let exact = expected_payoff(&spec, &sigma, &tau).unwrap();

    let mut within = 0usize;
    for seed in 0..100u64 {
        let report = simulate(&spec, &sigma, &tau, 1500, 2, seed).unwrap();
        if (report.mean - exact).abs() <= 4.0 * report.std_error {
            within += 1;
        }
    }
    assert!(
        within >= 95,
        "only {within}/100 runs within 4 standard errors"
    );
    println!("criterion 11 (simulation consistency: {within}/100 within 4 SE): PASS");
}

#[test]
fn criterion_12_parser_round_trip() {
    let mut rng = TestRng::new(0x1212);
    for case in 0..200 {
        let spec = common::random_any_spec(&mut rng, case);
        let text = serialize_game(&spec);
        let back = parse_game(&text)
            .unwrap_or_else(|e| panic!("case {case}: reparse failed: {e}\n{text}"));
        assert_eq!(back, spec, "case {case}");
    }

    let base = serialize_game(&catalog::stopgame());
    let alphabets = catalog::stopgame().alphabets;
    let mutate = |from: &str, to: &str| base.replace(from, to);
    let invalid_games: Vec<(String, String)> = vec![
        (
            "dropped transition".into(),
            mutate("  live (stop,stop) -> lost;\n", ""),
        ),
        (
            "unknown move".into(),
            mutate("(stop,stop) -> lost", "(halt,stop) -> lost"),
        ),
        (
            "unknown target state".into(),
            mutate("-> lost;", "-> limbo;"),
        ),
        (
            "duplicate state".into(),
            mutate(
                "state lost u=0 terminal;",
                "state lost u=0 terminal;\n  state lost u=0;",
            ),
        ),
        (
            "duplicate transition".into(),
            mutate(
                "live (stop,stop) -> lost;",
                "live (stop,stop) -> lost;\n  live (stop,stop) -> won;",
            ),
        ),
        (
            "terminal escape".into(),
            mutate(
                "live (stop,stop) -> lost;",
                "live (stop,stop) -> lost;\n  lost (stop,stop) -> live;",
            ),
        ),
        (
            "payoff out of bounds".into(),
            mutate(
                "state won u=1 accepting terminal;",
                "state won u=7 accepting terminal;",
            ),
        ),
        (
            "inverted bounds".into(),
            mutate("bounds = [0, 1]", "bounds = [1, 0]"),
        ),
        ("missing bounds".into(), mutate("bounds = [0, 1]\n", "")),
        (
            "missing kind".into(),
            mutate("kind = generalized-open\n", ""),
        ),
        (
            "unknown kind".into(),
            mutate("kind = generalized-open", "kind = borelian"),
        ),
        (
            "missing dfa".into(),
            base.split("dfa").next().unwrap().to_string(),
        ),
        (
            "empty moves".into(),
            mutate("moves I = {continue, stop}", "moves I = {}"),
        ),
        (
            "duplicate move".into(),
            mutate("moves I = {continue, stop}", "moves I = {stop, stop}"),
        ),
        ("unknown section".into(), format!("{base}payout = 3\n")),
        ("missing start state".into(), mutate("  start live;\n", "")),
        (
            "unknown start state".into(),
            mutate("start live;", "start limbo;"),
        ),
        (
            "unterminated string".into(),
            mutate("game \"stopgame\"", "game \"stopgame"),
        ),
        ("stray character".into(), format!("{base}?\n")),
        ("bad number".into(), mutate("u=1", "u=1.2.3")),
        (
            "matrix on automaton kind".into(),
            mutate("kind = generalized-open", "kind = matrix"),
        ),
        ("missing payoff at horizon".into(), {
            let finite = mutate("kind = generalized-open", "kind = finite 2");
            finite.replace("state live u=0;", "state live;")
        }),
    ];
    let strategy_doc = |body: &str| format!("strategy I \"s\"\n{body}\n");
    let invalid_strategies: Vec<(String, String)> = vec![
        (
            "row sums to 0.9".into(),
            strategy_doc("at e play {continue: 0.9}"),
        ),
        (
            "negative probability".into(),
            strategy_doc("at e play {continue: -1, stop: 2}"),
        ),
        (
            "unknown move in row".into(),
            strategy_doc("at e play {halt: 1}"),
        ),
        (
            "duplicate row move".into(),
            strategy_doc("at e play {stop: 0.5, stop: 0.5}"),
        ),
        (
            "duplicate position".into(),
            strategy_doc("at e play {stop: 1}\nat e play {continue: 1}"),
        ),
        ("unknown player".into(), "strategy III\nuniform\n".into()),
        ("missing body".into(), "strategy I \"s\"\n".into()),
        (
            "zero denominator".into(),
            strategy_doc("at e play {stop: 1/0}"),
        ),
    ];
    let mut cases = 0usize;
    for (what, doc) in &invalid_games {
        let err = match parse_game(doc) {
            Err(e) => e,
            Ok(_) => panic!("{what}: accepted:\n{doc}"),
        };
        assert!(err.line >= 1 && err.col >= 1, "{what}: location missing");
        cases += 1;
    }
    for (what, doc) in &invalid_strategies {
        let err = match parse_strategy(doc, &alphabets) {
            Err(e) => e,
            Ok(_) => panic!("{what}: accepted:\n{doc}"),
        };
        assert!(err.line >= 1 && err.col >= 1, "{what}: location missing");
        cases += 1;
    }
    assert!(cases >= 30, "invalid corpus has only {cases} cases");
    println!("criterion 12 (round trip on 200 specs, {cases} invalid cases rejected): PASS");
}
