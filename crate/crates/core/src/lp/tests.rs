use super::*;
use crate::linalg::DenseLu;
use proptest::prelude::*;

fn tiny(sense: Sense) -> LinearProgram {
    LinearProgram::new(sense)
}

#[test]
fn bounded_max() {
    let mut lp = tiny(Sense::Maximize);
    let x = lp.add_var(0.0, 10.0, 1.0);
    lp.add_row(vec![(x, 1.0)], RowKind::Le, 3.0);
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective - 3.0).abs() < 1e-12);
    assert!((s.dual_objective - 3.0).abs() < 1e-12);
    assert!((s.duals[0] - 1.0).abs() < 1e-12);
}

#[test]
fn contradictory_rows_are_infeasible() {
    let mut lp = tiny(Sense::Minimize);
    let x = lp.add_var(0.0, f64::INFINITY, 0.0);
    let y = lp.add_var(0.0, f64::INFINITY, 0.0);
    lp.add_row(vec![(x, 1.0), (y, 1.0)], RowKind::Eq, 1.0);
    lp.add_row(vec![(x, 1.0)], RowKind::Ge, 2.0);
    assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn open_direction_is_unbounded() {
    let mut lp = tiny(Sense::Maximize);
    let x = lp.add_var(0.0, f64::INFINITY, 1.0);
    let y = lp.add_var(0.0, f64::INFINITY, 0.0);
    lp.add_row(vec![(x, 1.0), (y, -1.0)], RowKind::Le, 1.0);
    assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn free_variables_and_equalities() {
    // min x + 2y  s.t. x - y = 1, x + y >= 3, x, y free
    let mut lp = tiny(Sense::Minimize);
    let x = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let y = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 2.0);
    lp.add_row(vec![(x, 1.0), (y, -1.0)], RowKind::Eq, 1.0);
    lp.add_row(vec![(x, 1.0), (y, 1.0)], RowKind::Ge, 3.0);
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    assert!((s.objective - 4.0).abs() < 1e-12);
    assert!((s.dual_objective - 4.0).abs() < 1e-12);
}

#[test]
fn empty_problem() {
    let lp = tiny(Sense::Minimize);
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert_eq!(s.objective, 0.0);
}

#[test]
fn invalid_input_is_rejected() {
    let mut lp = tiny(Sense::Minimize);
    lp.add_var(1.0, 0.0, 0.0);
    assert_eq!(solve_lp(&lp).unwrap_err(), LpError::CrossedBounds(0));
    let mut lp = tiny(Sense::Minimize);
    lp.add_var(0.0, 1.0, 0.0);
    lp.add_row(vec![(3, 1.0)], RowKind::Le, 1.0);
    assert!(matches!(solve_lp(&lp), Err(LpError::BadIndex { .. })));
}

/// Beale's example cycles under the textbook rule without anti-cycling.
#[test]
fn beale_cycling_example() {
    let mut lp = tiny(Sense::Minimize);
    let c = [-0.75, 150.0, -0.02, 6.0];
    let v: Vec<usize> = c.iter().map(|&ci| lp.add_var(0.0, f64::INFINITY, ci)).collect();
    lp.add_row(vec![(v[0], 0.25), (v[1], -60.0), (v[2], -0.04), (v[3], 9.0)], RowKind::Le, 0.0);
    lp.add_row(vec![(v[0], 0.5), (v[1], -90.0), (v[2], -0.02), (v[3], 3.0)], RowKind::Le, 0.0);
    lp.add_row(vec![(v[2], 1.0)], RowKind::Le, 1.0);
    let opts = LpOptions {
        bland_after: 0,
        ..LpOptions::default()
    };
    for o in [LpOptions::default(), opts] {
        let s = solve_lp_with(&lp, &o).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-12, "{}", s.objective);
    }
}

#[test]
fn iteration_limit_is_reported() {
    let mut lp = tiny(Sense::Maximize);
    let v: Vec<usize> = (0..5).map(|_| lp.add_var(0.0, f64::INFINITY, 1.0)).collect();
    for k in 0..5 {
        lp.add_row(vec![(v[k], 1.0), (v[(k + 1) % 5], 1.0)], RowKind::Le, 1.0 + k as f64);
    }
    let opts = LpOptions {
        max_iterations: Some(1),
        ..LpOptions::default()
    };
    assert_eq!(solve_lp_with(&lp, &opts).unwrap().status, LpStatus::IterationLimit);
}

#[test]
fn lp_text_dump() {
    let mut lp = tiny(Sense::Maximize);
    let x = lp.add_named_var("x".into(), 0.0, 10.0, 1.0);
    lp.add_row(vec![(x, 1.0)], RowKind::Le, 3.0);
    let text = lp.to_lp_format();
    assert!(text.starts_with("Maximize\n obj: + 1 x\nSubject To\n c0: + 1 x <= 3\n"));
    assert!(text.contains(" 0 <= x <= 10\n"));
}

/// Brute force over every choice of `n` active constraints (rows as
/// equalities or bounds): the best feasible vertex.
fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, c) in &row.coefs {
            a[j] += c;
        }
        planes.push((a, row.rhs));
    }
    for j in 0..n {
        for b in [lp.lower[j], lp.upper[j]] {
            if b.is_finite() {
                let mut a = vec![0.0; n];
                a[j] = 1.0;
                planes.push((a, b));
            }
        }
    }
    let feasible = |x: &[f64]| {
        let tol = 1e-9;
        (0..n).all(|j| x[j] >= lp.lower[j] - tol && x[j] <= lp.upper[j] + tol)
            && lp.rows.iter().all(|row| {
                let v: f64 = row.coefs.iter().map(|&(j, c)| c * x[j]).sum();
                match row.kind {
                    RowKind::Eq => (v - row.rhs).abs() <= tol,
                    RowKind::Le => v <= row.rhs + tol,
                    RowKind::Ge => v >= row.rhs - tol,
                }
            })
    };
    let sign = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    if planes.len() < n {
        return None;
    }
    loop {
        let mut m = Vec::with_capacity(n * n);
        let mut b = Vec::with_capacity(n);
        for &k in &pick {
            m.extend_from_slice(&planes[k].0);
            b.push(planes[k].1);
        }
        if let Ok(lu) = DenseLu::factor(m, n, 1e-10) {
            let x = lu.solve(&b);
            if feasible(&x) {
                let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                if best.map_or(true, |b| sign * obj < sign * b) {
                    best = Some(obj);
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < planes.len() - n + i {
                break;
            }
        }
        pick[i] += 1;
        for k in i + 1..n {
            pick[k] = pick[k - 1] + 1;
        }
    }
}

fn random_lp() -> impl Strategy<Value = LinearProgram> {
    (1usize..=6, 1usize..=6, any::<bool>()).prop_flat_map(|(n, m, maximize)| {
        (
            proptest::collection::vec(-4i32..=4, n),
            proptest::collection::vec((-3i32..=0, 1i32..=4), n),
            proptest::collection::vec((proptest::collection::vec(-3i32..=3, n), 0u8..3, -6i32..=6), m),
        )
            .prop_map(move |(c, bounds, rows)| {
                let mut lp = LinearProgram::new(if maximize { Sense::Maximize } else { Sense::Minimize });
                for j in 0..n {
                    lp.add_var(bounds[j].0 as f64, bounds[j].1 as f64, c[j] as f64);
                }
                for (a, kind, rhs) in rows {
                    let kind = [RowKind::Le, RowKind::Ge, RowKind::Eq][kind as usize];
                    let coefs = a.iter().enumerate().map(|(j, &v)| (j, v as f64)).collect();
                    lp.add_row(coefs, kind, rhs as f64);
                }
                lp
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]
    #[test]
    fn agrees_with_vertex_enumeration(lp in random_lp()) {
        let s = solve_lp(&lp).unwrap();
        match vertex_oracle(&lp) {
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!((s.objective - best).abs() <= 1e-8 * (1.0 + best.abs()), "{} vs {}", s.objective, best);
                prop_assert!((s.objective - s.dual_objective).abs() <= 1e-7 * (1.0 + s.objective.abs()));
                let rhs = lp.rows.iter().fold(0.0f64, |a, r| a.max(r.rhs.abs()));
                prop_assert!(s.primal_residual <= 1e-9 * (1.0 + rhs));
                prop_assert!(s.bound_violation <= 1e-9);
                prop_assert!(s.dual_residual <= 1e-9);
            }
        }
    }

    #[test]
    fn same_input_same_answer(lp in random_lp()) {
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn refactorization_keeps_long_runs_accurate() {
    // Transportation-style LP with many pivots and a tiny refactor interval.
    let (s, d) = (7usize, 9usize);
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut v = vec![vec![0; d]; s];
    for i in 0..s {
        for j in 0..d {
            v[i][j] = lp.add_var(0.0, f64::INFINITY, ((i * 7 + j * 3) % 11) as f64 + 1.0);
        }
    }
    for i in 0..s {
        lp.add_row((0..d).map(|j| (v[i][j], 1.0)).collect(), RowKind::Le, 10.0 + i as f64);
    }
    for j in 0..d {
        lp.add_row((0..s).map(|i| (v[i][j], 1.0)).collect(), RowKind::Eq, 6.0 + j as f64 % 3.0);
    }
    let base = solve_lp(&lp).unwrap();
    let opts = LpOptions {
        refactor_every: 3,
        ..LpOptions::default()
    };
    let other = solve_lp_with(&lp, &opts).unwrap();
    assert_eq!(base.status, LpStatus::Optimal);
    assert!((base.objective - other.objective).abs() < 1e-9);
    assert!((base.objective - base.dual_objective).abs() < 1e-9);
}
