//! Local primal heuristic: drive the complementarity system to zero from a
//! starting point with a projected Levenberg-Marquardt iteration on the
//! (optionally smoothed) Fischer-Burmeister reformulation.
//!
//! Unknowns are realizations, multipliers and auxiliary products; slacks are
//! eliminated through the stationarity rows. Smoothing `x r = μ` is followed
//! down to `μ = 0`, which traces an interior path toward a complementary point.

use crate::linalg::DenseLu;
use crate::ncp::FeasibilitySystem;

/// Which side of each complementarity pair a node has forced to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairState {
    Free,
    XZero,
    RZero,
}

#[derive(Debug, Clone)]
pub struct PolishOptions {
    pub max_iters: usize,
    /// Smoothing levels visited in order; the last should be 0.
    pub mu_schedule: Vec<f64>,
    pub tol: f64,
}

impl Default for PolishOptions {
    fn default() -> Self {
        PolishOptions {
            max_iters: 60,
            mu_schedule: vec![0.0],
            tol: 1e-13,
        }
    }
}

impl PolishOptions {
    pub fn homotopy() -> Self {
        PolishOptions {
            max_iters: 25,
            mu_schedule: vec![1e-1, 2e-2, 4e-3, 8e-4, 1.6e-4, 3.2e-5, 6.4e-6, 1e-6, 1e-8, 0.0],
            tol: 1e-13,
        }
    }
}

struct Layout<'a> {
    sys: &'a FeasibilitySystem,
    /// unknown column of each variable, `usize::MAX` when held fixed
    col: Vec<usize>,
    vars: Vec<usize>,
    /// stationarity row index of each pair's slack
    scale: Vec<f64>,
    states: &'a [PairState],
}

impl<'a> Layout<'a> {
    fn new(sys: &'a FeasibilitySystem, states: &'a [PairState], lower: &[f64], upper: &[f64]) -> Self {
        let mut col = vec![usize::MAX; sys.num_variables()];
        let mut vars = Vec::new();
        let slack: std::collections::HashSet<usize> = sys.pairs.iter().map(|p| p.r).collect();
        for v in 0..sys.num_variables() {
            if slack.contains(&v) || upper[v] - lower[v] <= 0.0 {
                continue;
            }
            col[v] = vars.len();
            vars.push(v);
        }
        for (k, pr) in sys.pairs.iter().enumerate() {
            if states[k] == PairState::XZero && col[pr.x] != usize::MAX {
                vars.retain(|&v| v != pr.x);
                col[pr.x] = usize::MAX;
            }
        }
        for (c, &v) in vars.iter().enumerate() {
            col[v] = c;
        }
        let scale = sys
            .stationarity
            .iter()
            .map(|row| sys.big_m[row.player] / (1 + sys.lambda[row.player].len()) as f64)
            .collect();
        Layout {
            sys,
            col,
            vars,
            scale,
            states,
        }
    }

    /// Residual vector and sparse Jacobian rows at `v` (slacks refreshed in place).
    fn eval(&self, v: &mut [f64], mu: f64) -> (Vec<f64>, Vec<Vec<(usize, f64)>>) {
        let sys = self.sys;
        let mut f = Vec::new();
        let mut jac = Vec::new();
        for row in &sys.linear {
            let mut val = -row.rhs;
            let mut j = Vec::new();
            for &(i, c) in &row.terms {
                val += c * v[i];
                if self.col[i] != usize::MAX {
                    j.push((self.col[i], c));
                }
            }
            f.push(val);
            jac.push(j);
        }
        for d in &sys.products {
            f.push(v[d.w] - v[d.a] * v[d.b]);
            let mut j = Vec::new();
            for (i, c) in [(d.w, 1.0), (d.a, -v[d.b]), (d.b, -v[d.a])] {
                if self.col[i] != usize::MAX {
                    j.push((self.col[i], c));
                }
            }
            jac.push(j);
        }
        for (k, row) in sys.stationarity.iter().enumerate() {
            let pr = sys.pairs[k];
            // slack = stationarity row evaluated without its own -r term
            let mut r = row.constant;
            let mut dr: Vec<(usize, f64)> = Vec::new();
            for &(i, c) in &row.linear {
                if i == pr.r {
                    continue;
                }
                r += c * v[i];
                if self.col[i] != usize::MAX {
                    dr.push((self.col[i], c));
                }
            }
            for &(a, b, c) in &row.products {
                r += c * v[a] * v[b];
                if self.col[a] != usize::MAX {
                    dr.push((self.col[a], c * v[b]));
                }
                if self.col[b] != usize::MAX {
                    dr.push((self.col[b], c * v[a]));
                }
            }
            v[pr.r] = r;
            let s = self.scale[k];
            let b = r / s;
            match self.states[k] {
                PairState::RZero => {
                    f.push(b);
                    jac.push(dr.iter().map(|&(c, d)| (c, d / s)).collect());
                }
                state => {
                    let a = if state == PairState::XZero { 0.0 } else { v[pr.x] };
                    let rho = (a * a + b * b + 2.0 * mu).sqrt();
                    f.push(a + b - rho);
                    let (da, db) = if rho > 1e-300 {
                        (1.0 - a / rho, 1.0 - b / rho)
                    } else {
                        (1.0 - std::f64::consts::FRAC_1_SQRT_2, 1.0 - std::f64::consts::FRAC_1_SQRT_2)
                    };
                    let mut j: Vec<(usize, f64)> = dr.iter().map(|&(c, d)| (c, db * d / s)).collect();
                    if self.col[pr.x] != usize::MAX {
                        j.push((self.col[pr.x], da));
                    }
                    jac.push(j);
                }
            }
        }
        (f, jac)
    }
}

fn norm2(f: &[f64]) -> f64 {
    f.iter().map(|x| x * x).sum()
}

/// Run the heuristic from `start`. Variables outside the unknown set keep
/// their start values (pairs in state `XZero` get `x = 0`). Returns the final
/// assignment, slacks included, and the max-norm of the unsmoothed residual.
pub fn polish(
    sys: &FeasibilitySystem,
    start: &[f64],
    states: &[PairState],
    lower: &[f64],
    upper: &[f64],
    opts: &PolishOptions,
) -> (Vec<f64>, f64) {
    let lay = Layout::new(sys, states, lower, upper);
    let mut v: Vec<f64> = start
        .iter()
        .enumerate()
        .map(|(i, &x)| x.clamp(lower[i], upper[i]))
        .collect();
    for (k, pr) in sys.pairs.iter().enumerate() {
        if states[k] == PairState::XZero {
            v[pr.x] = 0.0;
        }
    }
    let nu = lay.vars.len();
    for &mu in &opts.mu_schedule {
        let (mut f, mut jac) = lay.eval(&mut v, mu);
        let mut cost = norm2(&f);
        let mut damping = 1e-3;
        for _ in 0..opts.max_iters {
            if cost.sqrt() <= opts.tol || nu == 0 {
                break;
            }
            let mut jtj = vec![0.0; nu * nu];
            let mut g = vec![0.0; nu];
            for (row, &fi) in jac.iter().zip(&f) {
                for &(a, da) in row {
                    g[a] += da * fi;
                    for &(b, db) in row {
                        jtj[a * nu + b] += da * db;
                    }
                }
            }
            let mut improved = false;
            for _ in 0..12 {
                let mut m = jtj.clone();
                for i in 0..nu {
                    m[i * nu + i] += damping * (1.0 + jtj[i * nu + i]);
                }
                let Ok(lu) = DenseLu::factor(m, nu, 1e-300) else {
                    damping *= 10.0;
                    continue;
                };
                let step = lu.solve(&g);
                let mut trial = v.clone();
                for (c, &var) in lay.vars.iter().enumerate() {
                    trial[var] = (v[var] - step[c]).clamp(lower[var], upper[var]);
                }
                let (tf, tj) = lay.eval(&mut trial, mu);
                let tc = norm2(&tf);
                if tc < cost {
                    v = trial;
                    f = tf;
                    jac = tj;
                    cost = tc;
                    damping = (damping / 5.0).max(1e-12);
                    improved = true;
                    break;
                }
                damping *= 8.0;
            }
            if !improved {
                break;
            }
        }
    }
    let (f, _) = lay.eval(&mut v, 0.0);
    let worst = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (v, worst)
}
