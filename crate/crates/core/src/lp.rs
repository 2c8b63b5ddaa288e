//! Bounded-variable revised simplex.
//!
//! Every row `a_i x` gets a logical `s_i` carrying the row bounds, so the
//! working system is `A x - s = 0`. Rows whose starting activity is out of
//! range get an artificial column; phase 1 minimizes their sum. The basis is
//! factorized through its structural kernel (rows not covered by a basic unit
//! column) with a dense LU, refreshed every `refactor_every` pivots and kept
//! current in between with product-form eta updates.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::DenseLu;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowKind {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpRow {
    pub coefs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub names: Vec<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("variable {0} has lower bound above upper bound")]
    CrossedBounds(usize),
    #[error("non-finite data in {0}")]
    NonFinite(String),
    #[error("row {row} references variable {var}, only {n} exist")]
    BadIndex { row: usize, var: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub row_activity: Vec<f64>,
    /// One multiplier per row, in the sense of the objective as given.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    /// Lower (minimize) or upper (maximize) bound implied by the duals.
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub bound_violation: f64,
    /// Largest reduced cost or dual pushing against an infinite bound.
    pub dual_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOptions {
    pub max_iterations: Option<usize>,
    pub bland_after: usize,
    pub refactor_every: usize,
    pub feas_tol: f64,
    pub opt_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_iterations: None,
            bland_after: 50,
            refactor_every: 64,
            feas_tol: 1e-9,
            opt_tol: 1e-9,
        }
    }
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
            names: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.add_named_var(format!("v{}", self.objective.len()), lower, upper, cost)
    }

    pub fn add_named_var(&mut self, name: String, lower: f64, upper: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.push(name);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) -> usize {
        self.rows.push(LpRow { coefs, kind, rhs });
        self.rows.len() - 1
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || !self.objective[j].is_finite() {
                return Err(LpError::NonFinite(format!("variable {j}")));
            }
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpError::CrossedBounds(j));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of row {i}")));
            }
            for &(var, c) in &row.coefs {
                if var >= n {
                    return Err(LpError::BadIndex { row: i, var, n });
                }
                if !c.is_finite() {
                    return Err(LpError::NonFinite(format!("row {i}")));
                }
            }
        }
        Ok(())
    }

    /// CPLEX-style LP text.
    pub fn to_lp_format(&self) -> String {
        let name = |j: usize| self.names.get(j).cloned().unwrap_or_else(|| format!("v{j}"));
        let term = |c: f64, j: usize| format!("{} {} {}", if c < 0.0 { "-" } else { "+" }, c.abs(), name(j));
        let mut out = String::new();
        let _ = writeln!(out, "{}", if self.sense == Sense::Minimize { "Minimize" } else { "Maximize" });
        let obj: Vec<String> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| term(c, j))
            .collect();
        let _ = writeln!(out, " obj: {}", if obj.is_empty() { "0".to_string() } else { obj.join(" ") });
        let _ = writeln!(out, "Subject To");
        for (i, row) in self.rows.iter().enumerate() {
            let lhs: Vec<String> = row.coefs.iter().map(|&(j, c)| term(c, j)).collect();
            let op = match row.kind {
                RowKind::Eq => "=",
                RowKind::Le => "<=",
                RowKind::Ge => ">=",
            };
            let _ = writeln!(out, " c{i}: {} {op} {}", if lhs.is_empty() { "0".into() } else { lhs.join(" ") }, row.rhs);
        }
        let _ = writeln!(out, "Bounds");
        for j in 0..self.num_vars() {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l == f64::NEG_INFINITY && u == f64::INFINITY {
                let _ = writeln!(out, " {} free", name(j));
            } else {
                let lo = if l == f64::NEG_INFINITY { "-inf".into() } else { l.to_string() };
                let hi = if u == f64::INFINITY { "+inf".into() } else { u.to_string() };
                let _ = writeln!(out, " {lo} <= {} <= {hi}", name(j));
            }
        }
        let _ = writeln!(out, "End");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Free nonbasic, held at zero.
    Zero,
}

struct Eta {
    pos: usize,
    col: Vec<(usize, f64)>,
    pivot: f64,
}

struct Kernel {
    lu: Option<DenseLu>,
    /// kernel row -> constraint row, kernel column -> basis position
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// basis position of the unit column covering each row, if any
    unit_pos: Vec<Option<usize>>,
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    /// artificial column sign per row
    sigma: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    val: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    /// basis as of the last factorization; etas account for later pivots
    factor_basis: Vec<usize>,
    kernel: Kernel,
    etas: Vec<Eta>,
    opts: &'a LpOptions,
    iterations: usize,
    limit: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    Limit,
    Singular,
}

impl<'a> Simplex<'a> {
    fn new(lp: &LinearProgram, opts: &'a LpOptions) -> Self {
        let n = lp.num_vars();
        let m = lp.rows.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, c) in &row.coefs {
                if c != 0.0 {
                    cols[j].push((i, c));
                }
            }
        }
        let mut col_start = vec![0];
        let mut col_row = Vec::new();
        let mut col_val = Vec::new();
        for c in &mut cols {
            c.sort_by_key(|&(i, _)| i);
            // merge duplicate entries
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(c.len());
            for &(i, v) in c.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += v,
                    _ => merged.push((i, v)),
                }
            }
            for (i, v) in merged {
                col_row.push(i);
                col_val.push(v);
            }
            col_start.push(col_row.len());
        }
        let total = n + 2 * m;
        let mut lb = Vec::with_capacity(total);
        let mut ub = Vec::with_capacity(total);
        lb.extend_from_slice(&lp.lower);
        ub.extend_from_slice(&lp.upper);
        for row in &lp.rows {
            let (l, u) = match row.kind {
                RowKind::Eq => (row.rhs, row.rhs),
                RowKind::Le => (f64::NEG_INFINITY, row.rhs),
                RowKind::Ge => (row.rhs, f64::INFINITY),
            };
            lb.push(l);
            ub.push(u);
        }
        lb.extend(std::iter::repeat(0.0).take(m));
        ub.extend(std::iter::repeat(0.0).take(m));
        let limit = opts.max_iterations.unwrap_or(20 * (n + m) + 10_000);
        Simplex {
            m,
            n,
            col_start,
            col_row,
            col_val,
            sigma: vec![1.0; m],
            lb,
            ub,
            cost: vec![0.0; total],
            val: vec![0.0; total],
            state: vec![State::AtLower; total],
            basis: Vec::new(),
            factor_basis: Vec::new(),
            kernel: Kernel {
                lu: None,
                rows: Vec::new(),
                cols: Vec::new(),
                unit_pos: Vec::new(),
            },
            etas: Vec::new(),
            opts,
            iterations: 0,
            limit,
        }
    }

    /// Sparse column of any variable.
    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|k| (self.col_row[k], self.col_val[k]))
                .collect()
        } else if j < self.n + self.m {
            vec![(j - self.n, -1.0)]
        } else {
            let i = j - self.n - self.m;
            vec![(i, self.sigma[i])]
        }
    }

    fn unit_row(&self, j: usize) -> Option<(usize, f64)> {
        if j < self.n {
            None
        } else if j < self.n + self.m {
            Some((j - self.n, -1.0))
        } else {
            let i = j - self.n - self.m;
            Some((i, self.sigma[i]))
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        let (l, u) = (self.lb[j], self.ub[j]);
        if l.is_finite() {
            l
        } else if u.is_finite() {
            u
        } else {
            0.0
        }
    }

    fn place_nonbasic(&mut self, j: usize, prefer: f64) {
        let (l, u) = (self.lb[j], self.ub[j]);
        let (state, v) = match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if (prefer - u).abs() < (prefer - l).abs() {
                    (State::AtUpper, u)
                } else {
                    (State::AtLower, l)
                }
            }
            (true, false) => (State::AtLower, l),
            (false, true) => (State::AtUpper, u),
            (false, false) => (State::Zero, 0.0),
        };
        self.state[j] = state;
        self.val[j] = v;
    }

    /// Slack basis with artificials on rows whose activity is out of range.
    /// Returns whether any artificial is needed.
    fn crash(&mut self, keep_values: bool) -> bool {
        let (n, m) = (self.n, self.m);
        for j in 0..n {
            let prefer = if keep_values { self.val[j] } else { self.nonbasic_value(j) };
            self.place_nonbasic(j, prefer);
        }
        let mut act = vec![0.0; m];
        for j in 0..n {
            let v = self.val[j];
            if v != 0.0 {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    act[self.col_row[k]] += self.col_val[k] * v;
                }
            }
        }
        self.basis = vec![0; m];
        let mut any = false;
        for i in 0..m {
            let (s, a) = (n + i, n + m + i);
            let (l, u) = (self.lb[s], self.ub[s]);
            let tol = self.opts.feas_tol * (1.0 + act[i].abs());
            if act[i] >= l - tol && act[i] <= u + tol {
                self.state[s] = State::Basic(i);
                self.val[s] = act[i];
                self.basis[i] = s;
                self.lb[a] = 0.0;
                self.ub[a] = 0.0;
                self.state[a] = State::AtLower;
                self.val[a] = 0.0;
            } else {
                let bound = if act[i] < l { l } else { u };
                self.state[s] = if act[i] < l { State::AtLower } else { State::AtUpper };
                self.val[s] = bound;
                // a_i x - s + sigma t = 0  =>  sigma t = bound - act
                self.sigma[i] = if bound > act[i] { 1.0 } else { -1.0 };
                self.lb[a] = 0.0;
                self.ub[a] = f64::INFINITY;
                self.state[a] = State::Basic(i);
                self.val[a] = (bound - act[i]).abs();
                self.basis[i] = a;
                any = true;
            }
        }
        self.etas.clear();
        self.factor_basis = self.basis.clone();
        self.kernel = Kernel {
            lu: None,
            rows: Vec::new(),
            cols: Vec::new(),
            unit_pos: (0..m).map(Some).collect(),
        };
        any
    }

    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut unit_pos = vec![None; m];
        let mut cols = Vec::new();
        for (pos, &j) in self.basis.iter().enumerate() {
            match self.unit_row(j) {
                Some((i, _)) => {
                    if unit_pos[i].is_some() {
                        return false;
                    }
                    unit_pos[i] = Some(pos);
                }
                None => cols.push(pos),
            }
        }
        let rows: Vec<usize> = (0..m).filter(|&i| unit_pos[i].is_none()).collect();
        let k = rows.len();
        if k != cols.len() {
            return false;
        }
        let lu = if k == 0 {
            None
        } else {
            let mut row_index = vec![usize::MAX; m];
            for (r, &i) in rows.iter().enumerate() {
                row_index[i] = r;
            }
            let mut dense = vec![0.0; k * k];
            let mut scale = 0.0f64;
            for (c, &pos) in cols.iter().enumerate() {
                let j = self.basis[pos];
                for q in self.col_start[j]..self.col_start[j + 1] {
                    let r = row_index[self.col_row[q]];
                    if r != usize::MAX {
                        dense[r * k + c] = self.col_val[q];
                        scale = scale.max(self.col_val[q].abs());
                    }
                }
            }
            match DenseLu::factor(dense, k, 1e-11 * scale.max(1.0)) {
                Ok(lu) => Some(lu),
                Err(_) => return false,
            }
        };
        self.kernel = Kernel {
            lu,
            rows,
            cols,
            unit_pos,
        };
        self.factor_basis = self.basis.clone();
        self.etas.clear();
        true
    }

    /// Solve `B z = a` for a dense right-hand side, result by basis position.
    fn ftran(&self, a: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut z = vec![0.0; m];
        let mut rest = a.to_vec();
        if let Some(lu) = &self.kernel.lu {
            let rhs: Vec<f64> = self.kernel.rows.iter().map(|&i| a[i]).collect();
            let zs = lu.solve(&rhs);
            for (c, &pos) in self.kernel.cols.iter().enumerate() {
                z[pos] = zs[c];
                let j = self.basis_at_factor(pos);
                for q in self.col_start[j]..self.col_start[j + 1] {
                    rest[self.col_row[q]] -= self.col_val[q] * zs[c];
                }
            }
        }
        for i in 0..m {
            if let Some(pos) = self.kernel.unit_pos[i] {
                let (_, coef) = self.unit_row(self.basis_at_factor(pos)).expect("unit column");
                z[pos] = rest[i] / coef;
            }
        }
        for eta in &self.etas {
            let zr = z[eta.pos] / eta.pivot;
            if zr != 0.0 {
                for &(i, v) in &eta.col {
                    z[i] -= v * zr;
                }
            }
            z[eta.pos] = zr;
        }
        z
    }

    /// Solve `Bᵀ y = c` for `c` given by basis position, result by row.
    fn btran(&self, c: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut w = c.to_vec();
        for eta in self.etas.iter().rev() {
            let s: f64 = eta.col.iter().map(|&(i, v)| v * w[i]).sum();
            w[eta.pos] = (w[eta.pos] - s) / eta.pivot;
        }
        let mut y = vec![0.0; m];
        for i in 0..m {
            if let Some(pos) = self.kernel.unit_pos[i] {
                let (_, coef) = self.unit_row(self.basis_at_factor(pos)).expect("unit column");
                y[i] = w[pos] / coef;
            }
        }
        if let Some(lu) = &self.kernel.lu {
            let rhs: Vec<f64> = self
                .kernel
                .cols
                .iter()
                .map(|&pos| {
                    let j = self.basis_at_factor(pos);
                    let mut s = w[pos];
                    for q in self.col_start[j]..self.col_start[j + 1] {
                        let i = self.col_row[q];
                        if self.kernel.unit_pos[i].is_some() {
                            s -= self.col_val[q] * y[i];
                        }
                    }
                    s
                })
                .collect();
            let yr = lu.solve_transpose(&rhs);
            for (r, &i) in self.kernel.rows.iter().enumerate() {
                y[i] = yr[r];
            }
        }
        y
    }

    /// Variable that occupied `pos` when the kernel was last factorized.
    fn basis_at_factor(&self, pos: usize) -> usize {
        self.factor_basis[pos]
    }

    /// Recompute basic values from the nonbasic ones: `B x_B = -N x_N`.
    fn recompute_basics(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + 2 * self.m {
            if matches!(self.state[j], State::Basic(_)) {
                continue;
            }
            let v = self.val[j];
            if v != 0.0 {
                for (i, c) in self.column(j) {
                    rhs[i] -= c * v;
                }
            }
        }
        let z = self.ftran(&rhs);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.val[j] = z[pos];
        }
    }

    fn dense_column(&self, j: usize) -> Vec<f64> {
        let mut a = vec![0.0; self.m];
        for (i, c) in self.column(j) {
            a[i] += c;
        }
        a
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let mut d = self.cost[j];
            for q in self.col_start[j]..self.col_start[j + 1] {
                d -= y[self.col_row[q]] * self.col_val[q];
            }
            d
        } else {
            let (i, c) = self.unit_row(j).expect("unit column");
            self.cost[j] - c * y[i]
        }
    }

    fn duals(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        self.btran(&cb)
    }

    /// Run simplex iterations on the current cost vector.
    fn run(&mut self) -> Outcome {
        let total = self.n + 2 * self.m;
        let tol = self.opts.opt_tol;
        let ftol = self.opts.feas_tol;
        let mut degenerate = 0usize;
        loop {
            if self.etas.len() >= self.opts.refactor_every {
                if !self.refactor() {
                    return Outcome::Singular;
                }
                self.recompute_basics();
            }
            if self.iterations >= self.limit {
                return Outcome::Limit;
            }
            let y = self.duals();
            let bland = degenerate >= self.opts.bland_after;
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..total {
                let eligible = match self.state[j] {
                    State::Basic(_) => continue,
                    _ if self.ub[j] - self.lb[j] <= 0.0 => continue,
                    s => {
                        let d = self.reduced_cost(j, &y);
                        let ok = match s {
                            State::AtLower => d < -tol,
                            State::AtUpper => d > tol,
                            State::Zero => d.abs() > tol,
                            State::Basic(_) => false,
                        };
                        ok.then_some(d)
                    }
                };
                if let Some(d) = eligible {
                    if bland {
                        enter = Some((j, d));
                        break;
                    }
                    if enter.map_or(true, |(_, best)| d.abs() > best.abs()) {
                        enter = Some((j, d));
                    }
                }
            }
            let Some((q, dq)) = enter else {
                return Outcome::Optimal;
            };
            let alpha = self.ftran(&self.dense_column(q));
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            // basic value at pos moves by -dir * theta * alpha[pos]
            let piv_tol = 1e-9;
            let mut theta_max = f64::INFINITY;
            for (pos, &j) in self.basis.iter().enumerate() {
                let rate = -dir * alpha[pos];
                if rate.abs() <= piv_tol {
                    continue;
                }
                let room = if rate < 0.0 {
                    self.val[j] - self.lb[j] + ftol
                } else {
                    self.ub[j] - self.val[j] + ftol
                };
                theta_max = theta_max.min(room / rate.abs());
            }
            let mut leave: Option<(usize, f64)> = None;
            let mut best_size = 0.0;
            if theta_max.is_finite() {
                for (pos, &j) in self.basis.iter().enumerate() {
                    let rate = -dir * alpha[pos];
                    if rate.abs() <= piv_tol {
                        continue;
                    }
                    let room = if rate < 0.0 {
                        self.val[j] - self.lb[j]
                    } else {
                        self.ub[j] - self.val[j]
                    };
                    let ratio = (room / rate.abs()).max(0.0);
                    if ratio <= theta_max {
                        let better = if bland {
                            leave.map_or(true, |(p, r)| ratio < r || (ratio == r && j < self.basis[p]))
                        } else {
                            rate.abs() > best_size
                        };
                        if better {
                            best_size = rate.abs();
                            leave = Some((pos, ratio));
                        }
                    }
                }
            }
            let flip = self.ub[q] - self.lb[q];
            let theta = match leave {
                Some((_, t)) if t < flip => t,
                _ if flip.is_finite() => flip,
                _ => return Outcome::Unbounded,
            };
            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.val[q] += dir * theta;
            for (pos, &j) in self.basis.iter().enumerate() {
                if alpha[pos] != 0.0 {
                    self.val[j] -= dir * theta * alpha[pos];
                }
            }
            match leave {
                Some((pos, t)) if t < flip => {
                    let out = self.basis[pos];
                    let rate = -dir * alpha[pos];
                    if rate < 0.0 {
                        self.val[out] = self.lb[out];
                        self.state[out] = State::AtLower;
                    } else {
                        self.val[out] = self.ub[out];
                        self.state[out] = State::AtUpper;
                    }
                    if self.lb[out] == self.ub[out] {
                        self.state[out] = State::AtLower;
                    }
                    self.basis[pos] = q;
                    self.state[q] = State::Basic(pos);
                    let col: Vec<(usize, f64)> = alpha
                        .iter()
                        .enumerate()
                        .filter(|&(i, &v)| i != pos && v != 0.0)
                        .map(|(i, &v)| (i, v))
                        .collect();
                    self.etas.push(Eta {
                        pos,
                        col,
                        pivot: alpha[pos],
                    });
                }
                _ => {
                    self.state[q] = if dir > 0.0 { State::AtUpper } else { State::AtLower };
                    self.val[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
                }
            }
        }
    }
}

fn row_bounds(row: &LpRow) -> (f64, f64) {
    match row.kind {
        RowKind::Eq => (row.rhs, row.rhs),
        RowKind::Le => (f64::NEG_INFINITY, row.rhs),
        RowKind::Ge => (row.rhs, f64::INFINITY),
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(lp, &LpOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let (n, m) = (lp.num_vars(), lp.rows.len());
    let sign = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut sx = Simplex::new(lp, opts);
    let rhs_norm = lp.rows.iter().fold(0.0f64, |a, r| a.max(r.rhs.abs()));
    let mut restarts = 0;
    let mut keep = false;
    let status = 'outer: loop {
        let needs_phase1 = sx.crash(keep);
        keep = true;
        if needs_phase1 {
            for j in 0..n + 2 * m {
                sx.cost[j] = if j >= n + m { 1.0 } else { 0.0 };
            }
            match sx.run() {
                Outcome::Optimal => {}
                Outcome::Limit => break 'outer LpStatus::IterationLimit,
                Outcome::Singular | Outcome::Unbounded => {
                    restarts += 1;
                    if restarts > 3 {
                        break 'outer LpStatus::IterationLimit;
                    }
                    log::debug!("lp: basis repair during phase 1");
                    continue 'outer;
                }
            }
            let infeas: f64 = (n + m..n + 2 * m).map(|j| sx.val[j].max(0.0)).sum();
            if infeas > opts.feas_tol * (1.0 + rhs_norm) {
                break 'outer LpStatus::Infeasible;
            }
            for j in n + m..n + 2 * m {
                sx.ub[j] = 0.0;
                if !matches!(sx.state[j], State::Basic(_)) {
                    sx.val[j] = 0.0;
                    sx.state[j] = State::AtLower;
                }
            }
        }
        for j in 0..n + 2 * m {
            sx.cost[j] = if j < n { sign * lp.objective[j] } else { 0.0 };
        }
        match sx.run() {
            Outcome::Optimal => break 'outer LpStatus::Optimal,
            Outcome::Unbounded => break 'outer LpStatus::Unbounded,
            Outcome::Limit => break 'outer LpStatus::IterationLimit,
            Outcome::Singular => {
                restarts += 1;
                if restarts > 3 {
                    break 'outer LpStatus::IterationLimit;
                }
                log::debug!("lp: basis repair during phase 2");
            }
        }
    };
    if sx.refactor() {
        sx.recompute_basics();
    }
    let x: Vec<f64> = sx.val[..n].to_vec();
    let mut row_activity = vec![0.0; m];
    for (i, row) in lp.rows.iter().enumerate() {
        row_activity[i] = row.coefs.iter().map(|&(j, c)| c * x[j]).sum();
    }
    let mut bound_violation = 0.0f64;
    for j in 0..n {
        bound_violation = bound_violation.max(lp.lower[j] - x[j]).max(x[j] - lp.upper[j]);
    }
    let mut primal_residual = 0.0f64;
    for (i, row) in lp.rows.iter().enumerate() {
        let (l, u) = row_bounds(row);
        primal_residual = primal_residual.max(l - row_activity[i]).max(row_activity[i] - u);
    }
    let y = sx.duals();
    let reduced: Vec<f64> = (0..n).map(|j| sx.reduced_cost(j, &y)).collect();
    // Dual bound for the internal minimization: every row and column
    // contributes its reduced cost times the bound it pushes against.
    let bound_term = |d: f64, l: f64, u: f64| -> f64 {
        if d.abs() <= 1e-11 {
            0.0
        } else if d > 0.0 {
            if l.is_finite() {
                d * l
            } else {
                f64::NEG_INFINITY
            }
        } else if u.is_finite() {
            d * u
        } else {
            f64::NEG_INFINITY
        }
    };
    let infeasibility = |d: f64, l: f64, u: f64| -> f64 {
        if (d > 0.0 && l == f64::NEG_INFINITY) || (d < 0.0 && u == f64::INFINITY) {
            d.abs()
        } else {
            0.0
        }
    };
    let mut dual_min = 0.0;
    let mut dual_residual = 0.0f64;
    for (i, row) in lp.rows.iter().enumerate() {
        let (l, u) = row_bounds(row);
        dual_min += bound_term(y[i], l, u);
        dual_residual = dual_residual.max(infeasibility(y[i], l, u));
    }
    for j in 0..n {
        dual_min += bound_term(reduced[j], lp.lower[j], lp.upper[j]);
        dual_residual = dual_residual.max(infeasibility(reduced[j], lp.lower[j], lp.upper[j]));
    }
    let objective: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status,
        x,
        row_activity,
        duals: y.iter().map(|v| sign * v).collect(),
        reduced_costs: reduced.iter().map(|v| sign * v).collect(),
        objective,
        dual_objective: sign * dual_min,
        primal_residual: primal_residual.max(0.0),
        bound_violation: bound_violation.max(0.0),
        dual_residual,
        iterations: sx.iterations,
    })
}

#[cfg(test)]
mod tests;
