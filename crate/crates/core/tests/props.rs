//! Property tests for the solver invariants and the file formats.

mod common;

use blackwell::format::{parse_game, serialize_game};
use blackwell::game::{measure_of_position_exact, Player, Position};
use blackwell::matrix::{separating_hyperplane, solve_matrix, Separation};
use blackwell::rational::Q;
use common::TestRng;
use num_traits::One;
use proptest::prelude::*;

fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(rows, cols)| {
        proptest::collection::vec(
            proptest::collection::vec(-1.0f64..1.0, cols..=cols),
            rows..=rows,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The row strategy guarantees the value, the column strategy caps
    /// it, and the two meet.
    #[test]
    fn duality_certificates_hold(matrix in matrix_strategy()) {
        let sol = solve_matrix(&matrix, 1e-9).unwrap();
        let primal = sol.row_guarantee(&matrix);
        let dual = sol.col_guarantee(&matrix);
        prop_assert!((primal - dual).abs() <= 1e-7);
        prop_assert!(sol.certificate_gap <= 1e-7);
        let lo = matrix.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        let hi = matrix.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(sol.value >= lo - 1e-9 && sol.value <= hi + 1e-9);
    }

    /// Entrywise perturbations move the value by at most their size.
    #[test]
    fn value_is_lipschitz_in_the_entries(
        matrix in matrix_strategy(),
        eps in 0.0f64..0.25,
        direction in proptest::collection::vec(-1.0f64..1.0, 25),
    ) {
        let perturbed: Vec<Vec<f64>> = matrix
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| v + eps * direction[(i * 5 + j) % 25])
                    .collect()
            })
            .collect();
        let a = solve_matrix(&matrix, 1e-9).unwrap().value;
        let b = solve_matrix(&perturbed, 1e-9).unwrap().value;
        prop_assert!((a - b).abs() <= eps + 1e-7);
    }

    /// A reported separation is strict on both sides, with margin at
    /// least half the hull distance.
    #[test]
    fn separations_are_strict(
        points in proptest::collection::vec(
            proptest::collection::vec(-2.0f64..2.0, 3..=3),
            1..6,
        ),
        b in proptest::collection::vec(-3.0f64..3.0, 3..=3),
    ) {
        let tol = 1e-9;
        match separating_hyperplane(&points, &b, tol).unwrap() {
            Separation::Inside => {}
            Separation::Separated { normal, offset } => {
                let margin = normal.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>() - offset;
                prop_assert!(margin > 0.0);
                for p in &points {
                    let side = normal.iter().zip(p).map(|(a, c)| a * c).sum::<f64>();
                    prop_assert!(side < offset);
                    if margin >= 5.0 * tol {
                        prop_assert!(offset - side >= 0.9 * margin - 1e-12);
                    }
                }
            }
        }
    }

    /// Layer sums of the play measure are exactly one and splitting a
    /// position over its children preserves its mass.
    #[test]
    fn measure_is_a_probability_layer_by_layer(seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let spec = common::random_finite_spec(&mut rng, 0);
        let sigma = common::random_table_strategy(&mut rng, Player::I, &spec.alphabets, 1);
        let tau = common::random_table_strategy(&mut rng, Player::II, &spec.alphabets, 1);
        let joint = spec.alphabets.joint_len();

        let mut total = Q::from_integer(0.into());
        let mut frontier = vec![Position::empty()];
        for _ in 0..2 {
            frontier = frontier
                .iter()
                .flat_map(|p| (0..joint).map(|z| p.child(z)).collect::<Vec<_>>())
                .collect();
        }
        for p in &frontier {
            total += measure_of_position_exact(&spec.alphabets, &sigma, &tau, p).unwrap();
        }
        prop_assert_eq!(total, Q::one());

        let p = Position::from_moves(vec![0]);
        let whole = measure_of_position_exact(&spec.alphabets, &sigma, &tau, &p).unwrap();
        let mut parts = Q::from_integer(0.into());
        for z in 0..joint {
            parts += measure_of_position_exact(&spec.alphabets, &sigma, &tau, &p.child(z)).unwrap();
        }
        prop_assert_eq!(whole, parts);
    }

    /// Serialization is canonical: parsing it back reproduces the value.
    #[test]
    fn documents_round_trip(seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let spec = common::random_any_spec(&mut rng, 0);
        let text = serialize_game(&spec);
        let back = parse_game(&text).unwrap();
        prop_assert_eq!(back, spec);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Brackets are monotone and ordered: lower bounds never decrease
    /// with depth, upper bounds never increase, and lower stays below
    /// upper.
    #[test]
    fn brackets_are_monotone_and_ordered(seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let spec = if seed % 2 == 0 {
            common::random_generalized_open_spec(&mut rng, 0)
        } else {
            common::random_open_set_spec(&mut rng, 0)
        };
        let trace = blackwell::limit::open_value_bracket_exact(&spec, 6, 1e-6).unwrap();
        let exact = trace.exact.as_ref().unwrap();
        for d in 0..exact.len() {
            prop_assert!(exact[d].0 <= exact[d].1, "ordered at {d}");
            if d > 0 {
                prop_assert!(exact[d - 1].0 <= exact[d].0, "lower monotone at {d}");
                prop_assert!(exact[d - 1].1 >= exact[d].1, "upper monotone at {d}");
            }
        }
    }

    /// Stitching delta-suboptimal inner strategies onto an exact outer
    /// loses at most delta.
    #[test]
    fn stitching_loses_at_most_the_inner_slack(seed in any::<u64>()) {
        use blackwell::finite::{
            backward_induction_exact, best_response_exact, depth_product, states_at_round,
            stitch_strategies, truncate,
        };
        use blackwell::game::{BehavioralStrategy, GameKind, GameSpec, PayoffAutomaton};
        use std::collections::BTreeMap;

        let mut rng = TestRng::new(seed);
        let base = common::random_finite_spec_with_horizon(&mut rng, 0, 2);
        let spec = depth_product(&base).unwrap();
        let report = backward_induction_exact(&spec).unwrap();
        let aut = spec.automaton().unwrap();
        let boundary = states_at_round(&spec, 1).unwrap();
        let values: BTreeMap<usize, Q> = boundary
            .iter()
            .map(|&s| (s, report.value_at[report.horizon - 1][s].clone()))
            .collect();
        let cut = truncate(&spec, &boundary, &values).unwrap();
        let outer = backward_induction_exact(&cut).unwrap().strategy_i;

        // Inner play is uniform, which is generally suboptimal; its slack
        // in each subgame bounds the loss of the stitched whole.
        let mut inners: BTreeMap<usize, BehavioralStrategy> = BTreeMap::new();
        let mut slack = Q::from_integer(0.into());
        for &s in &boundary {
            let sub_aut = PayoffAutomaton::new(
                aut.name.clone(),
                aut.state_names().to_vec(),
                aut.labels().to_vec(),
                s,
                (0..aut.num_states()).map(|t| aut.transitions(t).to_vec()).collect(),
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
            let sub_value = backward_induction_exact(&sub).unwrap().value;
            let uniform = BehavioralStrategy::uniform(Player::I);
            let uniform_value = best_response_exact(&sub, &uniform).unwrap().value;
            let this_slack = sub_value - uniform_value;
            if this_slack > slack {
                slack = this_slack;
            }
            inners.insert(s, uniform);
        }
        let stitched = stitch_strategies(&spec, &boundary, &outer, &inners).unwrap();
        let certified = best_response_exact(&spec, &stitched).unwrap();
        prop_assert!(certified.value >= report.value.clone() - slack.clone(),
            "value {} below {} - {}", certified.value, report.value, slack);
        prop_assert!(certified.value <= report.value);
    }
}
