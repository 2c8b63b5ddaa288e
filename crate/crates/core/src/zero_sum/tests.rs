use super::*;
use crate::game::{generate_kuhn2, generate_kuhn3, ExtensiveFormGame, StrategicFormGame};
use crate::lp::LinearProgram;
use crate::sequence::{build_sequence_form, embed_strategic_form, realization_to_behavioral, BehavioralStrategy};
use crate::verifier;

fn bimatrix(m: usize, a: Vec<f64>) -> SequenceFormGame {
    let b = a.iter().map(|v| -v).collect();
    embed_strategic_form(&StrategicFormGame::new(vec![m, m], vec![a, b]).unwrap())
}

fn verify(game: &ExtensiveFormGame, sf: &SequenceFormGame, s: &ZeroSumSolution) -> f64 {
    let b = realization_to_behavioral(sf, &[s.x.clone(), s.y.clone()]).unwrap();
    verifier::epsilon(game, &b).unwrap()
}

#[test]
fn matching_pennies() {
    let sf = bimatrix(2, vec![1.0, -1.0, -1.0, 1.0]);
    let s = solve_zero_sum(&sf).unwrap();
    assert!(s.value.abs() < 1e-12);
    for v in s.x.iter().chain(&s.y) {
        assert!((v - 0.5).abs() < 1e-12);
    }
}

#[test]
fn rock_paper_scissors() {
    let sf = bimatrix(3, vec![0.0, -1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 1.0, 0.0]);
    let s = solve_zero_sum(&sf).unwrap();
    assert!(s.value.abs() < 1e-12);
    for v in s.x.iter().chain(&s.y) {
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn rejects_bad_inputs() {
    let g = StrategicFormGame::new(vec![2, 2], vec![vec![1.0; 4], vec![1.0; 4]]).unwrap();
    assert!(matches!(solve_zero_sum(&embed_strategic_form(&g)), Err(ZeroSumError::NotZeroSum)));
    let sf = build_sequence_form(&generate_kuhn3(), None).unwrap();
    assert!(matches!(solve_zero_sum(&sf), Err(ZeroSumError::PlayerCount(3))));
}

/// Every pure strategy of `player` as a behavioral profile component.
fn pure_strategies(game: &ExtensiveFormGame, player: usize) -> Vec<Vec<Vec<f64>>> {
    let sets = game.player_infosets(player);
    let sizes: Vec<usize> = sets.iter().map(|&s| game.infoset(s).actions.len()).collect();
    let total: usize = sizes.iter().product();
    (0..total)
        .map(|mut k| {
            sizes
                .iter()
                .map(|&m| {
                    let mut d = vec![0.0; m];
                    d[k % m] = 1.0;
                    k /= m;
                    d
                })
                .collect()
        })
        .collect()
}

/// Normal-form value: tabulate every pure pair by walking the tree, then solve
/// `max v s.t. Σ_i σ_i a_ij ≥ v ∀j, Σσ = 1`.
fn normal_form_value(game: &ExtensiveFormGame) -> f64 {
    let rows = pure_strategies(game, 0);
    let cols = pure_strategies(game, 1);
    let mut lp = LinearProgram::new(Sense::Maximize);
    let sigma: Vec<usize> = rows.iter().map(|_| lp.add_var(0.0, 1.0, 0.0)).collect();
    let v = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let mut table = vec![vec![0.0; cols.len()]; rows.len()];
    for (i, r) in rows.iter().enumerate() {
        for (j, c) in cols.iter().enumerate() {
            let b = BehavioralStrategy {
                probs: vec![r.clone(), c.clone()],
                unreachable: vec![vec![false; r.len()], vec![false; c.len()]],
            };
            table[i][j] = verifier::expected_payoffs(game, &b).unwrap()[0];
        }
    }
    for j in 0..cols.len() {
        let mut coefs: Vec<(usize, f64)> = (0..rows.len()).map(|i| (sigma[i], table[i][j])).collect();
        coefs.push((v, -1.0));
        lp.add_row(coefs, RowKind::Ge, 0.0);
    }
    lp.add_row(sigma.iter().map(|&s| (s, 1.0)).collect(), RowKind::Eq, 1.0);
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    s.objective
}

/// A textbook equilibrium: player 1 never bluffs, calls with the queen a
/// third of the time; player 2 bluffs the jack and calls the queen a third of
/// the time.
fn kuhn2_textbook(game: &ExtensiveFormGame) -> BehavioralStrategy {
    let second = |label: &str| -> f64 {
        match label {
            "Q/kb" | "J/k" | "Q/b" => 1.0 / 3.0,
            "K/kb" | "K/k" | "K/b" => 1.0,
            _ => 0.0,
        }
    };
    let probs: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|p| {
            game.player_infosets(p)
                .iter()
                .map(|&s| {
                    let q = second(&game.infoset(s).label);
                    vec![1.0 - q, q]
                })
                .collect()
        })
        .collect();
    let unreachable = probs.iter().map(|v| vec![false; v.len()]).collect();
    BehavioralStrategy { probs, unreachable }
}

#[test]
fn kuhn2_value_matches_independent_oracles() {
    let game = generate_kuhn2();
    let oracle = normal_form_value(&game);
    assert!((oracle + 1.0 / 18.0).abs() < 1e-9, "normal form {oracle}");
    let textbook = kuhn2_textbook(&game);
    let eval = verifier::evaluate(&game, &textbook).unwrap();
    assert!((eval.expected[0] + 1.0 / 18.0).abs() < 1e-12);
    assert!(eval.epsilon < 1e-12);

    let sf = build_sequence_form(&game, None).unwrap();
    let s = solve_zero_sum(&sf).unwrap();
    assert!((s.value + 1.0 / 18.0).abs() < 1e-9, "{}", s.value);
    assert!((s.value - oracle).abs() < 1e-9);
    assert!((s.primal_objective - s.dual_objective).abs() < 1e-7);
    assert!(verify(&game, &sf, &s) <= 1e-7);
}

#[test]
fn solution_invariants_on_kuhn2() {
    let sf = build_sequence_form(&generate_kuhn2(), None).unwrap();
    let s = solve_zero_sum(&sf).unwrap();
    assert!(sf.player(0).flow_residual(&s.x) <= 1e-9);
    assert!(sf.player(1).flow_residual(&s.y) <= 1e-9);
    assert!(s.x.iter().chain(&s.y).all(|&v| v >= -1e-12));
    assert!((s.value - s.primal_objective).abs() <= 1e-7);
    assert_eq!(s.p.len(), sf.player(0).num_rows());
    assert_eq!(s.q.len(), sf.player(1).num_rows());
    // Only the root rows have a nonzero right-hand side.
    assert!((s.q[0] - s.value).abs() < 1e-9);
    assert!((s.p[0] - s.value).abs() < 1e-9);
}

#[test]
fn random_zero_sum_matrices_verify() {
    use rand::{Rng, SeedableRng};
    for seed in 0..30u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(2..=5);
        let a: Vec<f64> = (0..m * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sf = bimatrix(m, a.clone());
        let s = solve_zero_sum(&sf).unwrap();
        let g = StrategicFormGame::new(vec![m, m], vec![a.clone(), a.iter().map(|v| -v).collect()]).unwrap();
        assert!(verify(&g.to_extensive(), &sf, &s) <= 1e-9, "seed {seed}");
    }
}
