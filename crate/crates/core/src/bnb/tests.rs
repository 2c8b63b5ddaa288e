use super::*;
use crate::game::{generate_kuhn2, generate_kuhn3, generate_random_sfg, kuhn3_pins, prune_pins, StrategicFormGame};
use crate::ncp::{assemble_ncp, assemble_ncp_with, NcpConfig};
use crate::sequence::{build_sequence_form, embed_strategic_form};
use crate::zero_sum::solve_zero_sum;

struct Fixture {
    game: ExtensiveFormGame,
    sf: SequenceFormGame,
    system: FeasibilitySystem,
}

fn strategic(g: &StrategicFormGame) -> Fixture {
    let sf = embed_strategic_form(g);
    Fixture {
        game: g.to_extensive(),
        system: assemble_ncp(&sf),
        sf,
    }
}

fn extensive(game: ExtensiveFormGame) -> Fixture {
    let sf = build_sequence_form(&game, None).unwrap();
    Fixture {
        system: assemble_ncp(&sf),
        sf,
        game,
    }
}

fn pennies() -> StrategicFormGame {
    StrategicFormGame::new(vec![2, 2], vec![vec![1.0, -1.0, -1.0, 1.0], vec![-1.0, 1.0, 1.0, -1.0]]).unwrap()
}

fn pure_bnb() -> SolverOptions {
    SolverOptions {
        heuristic: false,
        ..SolverOptions::default()
    }
}

fn run(f: &Fixture, opts: &SolverOptions) -> SolveResult {
    solve(&f.system, &f.sf, &f.game, opts).unwrap()
}

/// Value of `coefs · v` for a relaxation row.
fn activity(coefs: &[(usize, f64)], v: &[f64]) -> f64 {
    coefs.iter().map(|&(j, c)| c * v[j]).sum()
}

fn satisfied(kind: RowKind, lhs: f64, rhs: f64, tol: f64) -> bool {
    match kind {
        RowKind::Eq => (lhs - rhs).abs() <= tol,
        RowKind::Le => lhs <= rhs + tol,
        RowKind::Ge => lhs >= rhs - tol,
    }
}

#[test]
fn unit_box_envelope() {
    let rows = mccormick_rows(0, 1, 2, (0.0, 1.0), (0.0, 1.0));
    // w ≥ 0, w ≥ a + b − 1, w ≤ a, w ≤ b
    let expect = [
        (vec![(2, 1.0), (1, -0.0), (0, -0.0)], RowKind::Ge, -0.0),
        (vec![(2, 1.0), (1, -1.0), (0, -1.0)], RowKind::Ge, -1.0),
        (vec![(2, 1.0), (1, -1.0), (0, -0.0)], RowKind::Le, -0.0),
        (vec![(2, 1.0), (1, -0.0), (0, -1.0)], RowKind::Le, -0.0),
    ];
    for (got, want) in rows.iter().zip(&expect) {
        assert_eq!(got.1, want.1);
        assert_eq!(got.2, want.2);
        assert_eq!(got.0, want.0);
    }
}

#[test]
fn fixed_factor_makes_envelope_exact() {
    let t = 0.3;
    let rows = mccormick_rows(0, 1, 2, (t, t), (0.0, 1.0));
    for b in [0.0, 0.25, 0.7, 1.0] {
        let lo = rows
            .iter()
            .filter(|r| r.1 == RowKind::Ge)
            .map(|r| r.2 - activity(&r.0[1..], &[t, b, 0.0]))
            .fold(f64::NEG_INFINITY, f64::max);
        let hi = rows
            .iter()
            .filter(|r| r.1 == RowKind::Le)
            .map(|r| r.2 - activity(&r.0[1..], &[t, b, 0.0]))
            .fold(f64::INFINITY, f64::min);
        assert!((lo - t * b).abs() < 1e-15 && (hi - t * b).abs() < 1e-15);
    }
}

#[test]
fn midpoint_gap_is_a_quarter() {
    let rows = mccormick_rows(0, 1, 2, (0.0, 1.0), (0.0, 1.0));
    let point = [0.5, 0.5, 0.0];
    let bound = |kind| {
        rows.iter()
            .filter(|r| r.1 == kind)
            .map(|r| r.2 - activity(&r.0[1..], &point))
            .collect::<Vec<f64>>()
    };
    let lo = bound(RowKind::Ge).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let hi = bound(RowKind::Le).into_iter().fold(f64::INFINITY, f64::min);
    assert_eq!((lo, hi), (0.0, 0.5));
    assert_eq!((0.25f64 - lo).max(hi - 0.25), 0.25);
}

#[test]
fn empty_box_needs_no_lp() {
    let f = strategic(&pennies());
    let mut node = BnbNode::root(&f.system);
    node.lower[0] = 0.7;
    node.upper[0] = 0.6;
    assert!(relax_node(&f.system, &node).is_none());
}

#[test]
fn decisions_become_fixings() {
    let f = strategic(&pennies());
    let mut node = BnbNode::root(&f.system);
    node.decisions[0] = PairState::XZero;
    node.decisions[1] = PairState::RZero;
    let relax = relax_node(&f.system, &node).unwrap();
    let (p0, p1) = (f.system.pairs[0], f.system.pairs[1]);
    assert_eq!((relax.lp.lower[p0.x], relax.lp.upper[p0.x]), (0.0, 0.0));
    assert_eq!((relax.lp.lower[p1.r], relax.lp.upper[p1.r]), (0.0, 0.0));
    // Decided pairs drop out of the surrogate objective.
    assert_eq!(relax.lp.objective[p0.x], 0.0);
    assert_eq!(relax.lp.objective[p0.r], 0.0);
    assert_eq!(relax.lp.objective[f.system.pairs[2].x], 1.0);
}

/// Known equilibria, completed with `t = a·b`, satisfy every root row.
#[test]
fn root_relaxation_admits_known_equilibria() {
    let mut cases: Vec<(Fixture, Vec<Vec<f64>>)> = vec![
        (strategic(&pennies()), vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
        (
            strategic(
                &StrategicFormGame::new(
                    vec![3, 3],
                    vec![
                        vec![0.0, -1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 1.0, 0.0],
                        vec![0.0, 1.0, -1.0, -1.0, 0.0, 1.0, 1.0, -1.0, 0.0],
                    ],
                )
                .unwrap(),
            ),
            vec![vec![1.0 / 3.0; 3], vec![1.0 / 3.0; 3]],
        ),
    ];
    let kuhn2 = extensive(generate_kuhn2());
    let zs = solve_zero_sum(&kuhn2.sf).unwrap();
    cases.push((kuhn2, vec![zs.x, zs.y]));
    let g3 = generate_kuhn3();
    let f3 = extensive(g3);
    let sol = run(&f3, &SolverOptions::default());
    cases.push((f3, sol.profile.unwrap().realization));
    for (f, plans) in cases {
        let v = f.system.lift(&f.sf, &plans);
        assert!(f.system.residuals(&v).max() <= 1e-9);
        let relax = relax_node(&f.system, &BnbNode::root(&f.system)).unwrap();
        let mut point = v.clone();
        point.resize(relax.lp.num_vars(), 0.0);
        for &(a, b, w) in &relax.terms {
            point[w] = v[a] * v[b];
        }
        for (j, &x) in point.iter().enumerate() {
            assert!(x >= relax.lp.lower[j] - 1e-12 && x <= relax.lp.upper[j] + 1e-12);
        }
        for row in &relax.lp.rows {
            assert!(satisfied(row.kind, activity(&row.coefs, &point), row.rhs, 1e-9));
        }
    }
}

fn three_player_fixture() -> Fixture {
    strategic(&generate_random_sfg(3, 2, 11))
}

#[test]
fn branches_on_most_violated_pair() {
    let f = three_player_fixture();
    let node = BnbNode::root(&f.system);
    let relax = relax_node(&f.system, &node).unwrap();
    let mut point = vec![0.0; relax.lp.num_vars()];
    let pr = f.system.pairs[1];
    point[pr.x] = 0.6;
    point[pr.r] = 0.5;
    let other = f.system.pairs[3];
    point[other.x] = 0.2;
    point[other.r] = 0.1;
    let (a, b, w) = relax.terms[0];
    point[a] = 0.5;
    point[b] = 0.5;
    point[w] = 0.0;
    let opts = SolverOptions::default();
    match branch_select(&f.system, &node, &relax, &point, &opts) {
        Branch::Pair { pair, violation } => {
            assert_eq!(pair, 1);
            assert!((violation - 0.3).abs() < 1e-15);
        }
        other => panic!("expected a pair branch, got {other:?}"),
    }
}

#[test]
fn spatial_split_is_clamped() {
    let f = three_player_fixture();
    let mut node = BnbNode::root(&f.system);
    let relax = relax_node(&f.system, &node).unwrap();
    let (a, b, w) = relax.terms[0];
    node.upper[a] = 0.5;
    let mut point = vec![0.0; relax.lp.num_vars()];
    point[a] = 0.25;
    point[b] = 0.99;
    point[w] = 0.0;
    let opts = SolverOptions::default();
    match branch_select(&f.system, &node, &relax, &point, &opts) {
        Branch::Split { var, at, gap } => {
            assert_eq!(var, b, "the wider box is split");
            assert!((at - 0.9).abs() < 1e-15);
            assert!((gap - 0.2475).abs() < 1e-15);
        }
        other => panic!("expected a split, got {other:?}"),
    }
}

#[test]
fn consistent_point_needs_no_branch() {
    let f = strategic(&pennies());
    let node = BnbNode::root(&f.system);
    let relax = relax_node(&f.system, &node).unwrap();
    let v = f.system.lift(&f.sf, &[vec![0.5, 0.5], vec![0.5, 0.5]]);
    assert_eq!(branch_select(&f.system, &node, &relax, &v, &SolverOptions::default()), Branch::Feasible);
}

#[test]
fn degenerate_boxes_cannot_be_split() {
    let f = three_player_fixture();
    let mut node = BnbNode::root(&f.system);
    for k in 0..node.decisions.len() {
        node.decisions[k] = PairState::RZero;
    }
    let relax = relax_node(&f.system, &node).unwrap();
    let (a, b, w) = relax.terms[0];
    for v in [a, b] {
        node.lower[v] = 0.5;
        node.upper[v] = 0.5;
    }
    let mut point = vec![0.0; relax.lp.num_vars()];
    point[a] = 0.5;
    point[b] = 0.5;
    point[w] = 0.1;
    assert_eq!(branch_select(&f.system, &node, &relax, &point, &SolverOptions::default()), Branch::Exhausted);
}

#[test]
fn incumbent_check_cases() {
    let f = strategic(&pennies());
    let opts = SolverOptions::default();
    let v = f.system.lift(&f.sf, &[vec![0.5, 0.5], vec![0.5, 0.5]]);
    match incumbent_check(&f.system, &f.sf, &f.game, &v, &opts) {
        IncumbentCheck::Accepted(p) => assert_eq!(p.verified_epsilon, Some(0.0)),
        other => panic!("{other:?}"),
    }
    let mut bad = v.clone();
    bad[f.system.x[0][0]] = 0.9;
    assert_eq!(incumbent_check(&f.system, &f.sf, &f.game, &bad, &opts), IncumbentCheck::Invalid);
    let mut neg = v.clone();
    neg[f.system.x[0][0]] = -1e-3;
    neg[f.system.x[0][1]] = 1.001;
    assert_eq!(incumbent_check(&f.system, &f.sf, &f.game, &neg, &opts), IncumbentCheck::Invalid);
    // Tiny negatives are repaired.
    let mut tiny = v;
    tiny[f.system.x[0][0]] = -1e-12;
    tiny[f.system.x[0][1]] = 1.0 + 1e-12;
    assert!(matches!(incumbent_check(&f.system, &f.sf, &f.game, &tiny, &opts), IncumbentCheck::Rejected(_)));
}

#[test]
fn uniform_reduced_kuhn3_is_rejected() {
    let g = generate_kuhn3();
    let f = extensive(prune_pins(&g, &kuhn3_pins(&g)).unwrap());
    let b = BehavioralStrategy::uniform(&f.sf);
    let profile = StrategyProfile::from_behavioral(&f.sf, b).unwrap();
    let v = f.system.lift(&f.sf, &profile.realization);
    match incumbent_check(&f.system, &f.sf, &f.game, &v, &SolverOptions::default()) {
        IncumbentCheck::Rejected(p) => assert!(p.verified_epsilon.unwrap() > 0.01),
        other => panic!("{other:?}"),
    }
}

#[test]
fn pennies_both_modes() {
    let f = strategic(&pennies());
    for opts in [SolverOptions::default(), pure_bnb()] {
        let r = run(&f, &opts);
        assert_eq!(r.status, SolveStatus::EquilibriumFound);
        let p = r.profile.unwrap();
        assert!(p.verified_epsilon.unwrap() <= 1e-9);
        for dist in p.behavioral.probs.iter().flatten() {
            assert!((dist[0] - 0.5).abs() < 1e-9);
        }
        assert!(f.system.residuals(&r.assignment.unwrap()).max() <= 1e-6);
    }
}

/// First-strategy probabilities of a 2×2×2 profile form an equilibrium when
/// no player gains by moving to either pure strategy.
fn two_strategy_equilibrium(g: &StrategicFormGame, probs: &[f64], tol: f64) -> bool {
    let payoff = |p: usize, probs: &[f64]| -> f64 {
        (0..g.joint_size())
            .map(|k| {
                let w: f64 = g
                    .joint(k)
                    .iter()
                    .enumerate()
                    .map(|(q, &s)| if s == 0 { probs[q] } else { 1.0 - probs[q] })
                    .product();
                w * g.payoff_table(p)[k]
            })
            .sum()
    };
    (0..g.num_players()).all(|p| {
        let base = payoff(p, probs);
        [0.0, 1.0].iter().all(|&d| {
            let mut dev = probs.to_vec();
            dev[p] = d;
            payoff(p, &dev) <= base + tol
        })
    })
}

#[test]
fn random_games_solve_in_both_modes() {
    for seed in 0..8u64 {
        for (n, m) in [(3usize, 2usize), (3, 3), (2, 4)] {
            let g = generate_random_sfg(n, m, seed);
            let f = strategic(&g);
            for opts in [SolverOptions::default(), pure_bnb()] {
                let r = run(&f, &opts);
                assert_eq!(r.status, SolveStatus::EquilibriumFound, "n{n} m{m} seed {seed}");
                let p = r.profile.unwrap();
                assert!(p.verified_epsilon.unwrap() <= 1e-6);
                if m == 2 {
                    let probs: Vec<f64> = p.behavioral.probs.iter().map(|d| d[0][0]).collect();
                    assert!(two_strategy_equilibrium(&g, &probs, 1e-6), "seed {seed}");
                }
            }
        }
    }
}

#[test]
fn two_player_games_only_branch_on_pairs() {
    for seed in 0..10u64 {
        let f = strategic(&generate_random_sfg(2, 4, seed));
        let r = run(&f, &pure_bnb());
        assert_eq!(r.status, SolveStatus::EquilibriumFound);
        assert_eq!(r.stats.spatial_branches, 0);
        assert!(r.stats.max_depth <= 8);
    }
}

#[test]
fn zero_sum_values_agree() {
    let f = extensive(generate_kuhn2());
    let r = run(&f, &SolverOptions::default());
    let p = r.profile.unwrap();
    let v = f.sf.expected_payoffs(&p.realization)[0];
    assert!((v + 1.0 / 18.0).abs() <= 1e-6);
    for seed in 0..5u64 {
        let g = generate_random_sfg(2, 3, seed);
        let a = g.payoff_table(0).to_vec();
        let zs = StrategicFormGame::new(vec![3, 3], vec![a.clone(), a.iter().map(|x| -x).collect()]).unwrap();
        let f = strategic(&zs);
        let value = solve_zero_sum(&f.sf).unwrap().value;
        for opts in [SolverOptions::default(), pure_bnb()] {
            let p = run(&f, &opts).profile.unwrap();
            assert!((f.sf.expected_payoffs(&p.realization)[0] - value).abs() <= 1e-6);
        }
    }
}

#[test]
fn single_worker_runs_repeat_exactly() {
    for seed in [3u64, 4] {
        let f = strategic(&generate_random_sfg(3, 3, seed));
        for heuristic in [true, false] {
            let opts = SolverOptions {
                heuristic,
                seed: 7,
                ..SolverOptions::default()
            };
            let a = run(&f, &opts);
            let b = run(&f, &opts);
            assert_eq!(a.stats.nodes, b.stats.nodes);
            assert_eq!(a.stats.lp_solves, b.stats.lp_solves);
            assert_eq!(a.profile, b.profile);
        }
    }
}

#[test]
fn parallel_workers_find_equilibria() {
    let f = strategic(&generate_random_sfg(3, 3, 2));
    let opts = SolverOptions {
        workers: 4,
        heuristic: false,
        ..SolverOptions::default()
    };
    let r = run(&f, &opts);
    assert_eq!(r.status, SolveStatus::EquilibriumFound);
    assert!(r.epsilon().unwrap() <= 1e-6);
}

#[test]
fn node_limit_reports_best_candidate() {
    let f = strategic(&generate_random_sfg(3, 3, 2));
    let opts = SolverOptions {
        node_limit: Some(1),
        ..pure_bnb()
    };
    let r = run(&f, &opts);
    if r.status == SolveStatus::LimitReached {
        assert_eq!(r.stats.nodes, 1);
        assert!(r.diagnostic.unwrap().contains("node limit"));
        assert!(r.profile.map_or(true, |p| p.verified_epsilon.unwrap() > 1e-6));
    } else {
        assert_eq!(r.status, SolveStatus::EquilibriumFound);
    }
    let zero = SolverOptions {
        time_limit: Some(Duration::ZERO),
        ..pure_bnb()
    };
    let r = run(&f, &zero);
    assert_eq!(r.status, SolveStatus::LimitReached);
    assert_eq!(r.stats.nodes, 0);
}

#[test]
fn tiny_multiplier_bound_is_infeasible() {
    // Every payoff is at least 4, so the value multiplier cannot fit under M = 0.024.
    let g = StrategicFormGame::new(vec![2, 2], vec![vec![6.0, 4.0, 4.0, 6.0], vec![4.0, 6.0, 6.0, 4.0]]).unwrap();
    let sf = embed_strategic_form(&g);
    let system = assemble_ncp_with(&sf, &NcpConfig { m_scale: 1e-3 });
    let r = solve(&system, &sf, &g.to_extensive(), &SolverOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
    assert!(r.diagnostic.unwrap().contains("infeasible"));
    assert_eq!(r.stats.infeasible_leaves, r.stats.nodes);
}

#[test]
fn options_are_validated() {
    let f = strategic(&pennies());
    let bad = SolverOptions {
        epsilon_target: 0.0,
        ..SolverOptions::default()
    };
    assert_eq!(solve(&f.system, &f.sf, &f.game, &bad).unwrap_err(), SolveError::EpsilonTarget(0.0));
    let bad = SolverOptions {
        workers: 0,
        ..SolverOptions::default()
    };
    assert_eq!(solve(&f.system, &f.sf, &f.game, &bad).unwrap_err(), SolveError::Workers);
    let other = extensive(generate_kuhn2());
    assert!(matches!(solve(&f.system, &other.sf, &other.game, &SolverOptions::default()), Err(SolveError::Mismatch(_))));
}

#[test]
fn stats_serialize() {
    let f = strategic(&pennies());
    let json = run(&f, &SolverOptions::default()).stats_json();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["status"], "EquilibriumFound");
    assert!(v["nodes"].as_u64().unwrap() >= 1);
    assert!(v["lp_solves"].is_u64());
}
