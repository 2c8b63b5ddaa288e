//! Two-player zero-sum games: the pair of sequence-form linear programs
//!
//! ```text
//! max  fᵀq   s.t.  Fᵀq − Aᵀx ≤ 0,  E x = e,  x ≥ 0
//! min  eᵀp   s.t.  Eᵀp − A y ≥ 0,  F y = f,  y ≥ 0
//! ```
//!
//! where `A` holds player 1's chance-weighted payoffs. Both are solved and
//! their optimal values must agree.

use thiserror::Error;

use crate::lp::{solve_lp, LinearProgram, LpError, LpSolution, LpStatus, RowKind, Sense};
use crate::sequence::{PlayerSequences, SequenceFormGame};

#[derive(Debug, Error)]
pub enum ZeroSumError {
    #[error("expected 2 players, got {0}")]
    PlayerCount(usize),
    #[error("payoffs do not sum to zero")]
    NotZeroSum,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("{which} LP ended with status {status:?}")]
    LpFailed { which: &'static str, status: LpStatus },
    #[error("LP values disagree: {primal} vs {dual}")]
    DualityGap { primal: f64, dual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSumSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Player 1's expected payoff.
    pub value: f64,
    /// Player 1's constraint duals (from the minimizer's LP).
    pub p: Vec<f64>,
    /// Player 2's constraint duals (from the maximizer's LP).
    pub q: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

/// Dense `A` as sparse columns: `cols[j] = [(i, a_ij)]`, and the transpose.
fn payoff_matrix(sf: &SequenceFormGame) -> (Vec<Vec<(usize, f64)>>, Vec<Vec<(usize, f64)>>) {
    let (d1, d2) = (sf.player(0).num_sequences(), sf.player(1).num_sequences());
    let mut dense = std::collections::BTreeMap::new();
    for e in sf.entries() {
        *dense.entry((e.sequences[0], e.sequences[1])).or_insert(0.0) += e.payoffs[0];
    }
    let mut by_row = vec![Vec::new(); d1];
    let mut by_col = vec![Vec::new(); d2];
    for (&(i, j), &a) in &dense {
        if a != 0.0 {
            by_row[i].push((j, a));
            by_col[j].push((i, a));
        }
    }
    (by_row, by_col)
}

fn add_plan(lp: &mut LinearProgram, ps: &PlayerSequences, prefix: &str) -> Vec<usize> {
    let vars: Vec<usize> = (0..ps.num_sequences())
        .map(|s| {
            let upper = if ps.pinned().contains(&s) { 0.0 } else { f64::INFINITY };
            lp.add_named_var(format!("{prefix}{s}"), 0.0, upper, 0.0)
        })
        .collect();
    for (row, terms) in ps.constraint_rows().iter().enumerate() {
        lp.add_row(
            terms.iter().map(|&(s, c)| (vars[s], c)).collect(),
            RowKind::Eq,
            ps.rhs()[row],
        );
    }
    vars
}

/// Columns of `Eᵀ`: for each sequence, the rows it appears in.
fn transpose_rows(ps: &PlayerSequences) -> Vec<Vec<(usize, f64)>> {
    let mut cols = vec![Vec::new(); ps.num_sequences()];
    for (row, terms) in ps.constraint_rows().iter().enumerate() {
        for &(s, c) in terms {
            cols[s].push((row, c));
        }
    }
    cols
}

/// Player 1's LP: variables `x` then `q`.
pub fn maximizer_lp(sf: &SequenceFormGame) -> LinearProgram {
    let (p1, p2) = (sf.player(0), sf.player(1));
    let (_, a_cols) = payoff_matrix(sf);
    let mut lp = LinearProgram::new(Sense::Maximize);
    let x = add_plan(&mut lp, p1, "x");
    let q: Vec<usize> = (0..p2.num_rows())
        .map(|k| lp.add_named_var(format!("q{k}"), f64::NEG_INFINITY, f64::INFINITY, p2.rhs()[k]))
        .collect();
    for (j, f_col) in transpose_rows(p2).iter().enumerate() {
        let mut coefs: Vec<(usize, f64)> = f_col.iter().map(|&(k, c)| (q[k], c)).collect();
        coefs.extend(a_cols[j].iter().map(|&(i, a)| (x[i], -a)));
        lp.add_row(coefs, RowKind::Le, 0.0);
    }
    lp
}

/// Player 2's LP: variables `y` then `p`.
pub fn minimizer_lp(sf: &SequenceFormGame) -> LinearProgram {
    let (p1, p2) = (sf.player(0), sf.player(1));
    let (a_rows, _) = payoff_matrix(sf);
    let mut lp = LinearProgram::new(Sense::Minimize);
    let y = add_plan(&mut lp, p2, "y");
    let p: Vec<usize> = (0..p1.num_rows())
        .map(|k| lp.add_named_var(format!("p{k}"), f64::NEG_INFINITY, f64::INFINITY, p1.rhs()[k]))
        .collect();
    for (i, e_col) in transpose_rows(p1).iter().enumerate() {
        let mut coefs: Vec<(usize, f64)> = e_col.iter().map(|&(k, c)| (p[k], c)).collect();
        coefs.extend(a_rows[i].iter().map(|&(j, a)| (y[j], -a)));
        lp.add_row(coefs, RowKind::Ge, 0.0);
    }
    lp
}

fn optimal(sol: LpSolution, which: &'static str) -> Result<LpSolution, ZeroSumError> {
    if sol.status == LpStatus::Optimal {
        Ok(sol)
    } else {
        Err(ZeroSumError::LpFailed {
            which,
            status: sol.status,
        })
    }
}

pub fn solve_zero_sum(sf: &SequenceFormGame) -> Result<ZeroSumSolution, ZeroSumError> {
    if sf.num_players() != 2 {
        return Err(ZeroSumError::PlayerCount(sf.num_players()));
    }
    if !sf.is_zero_sum(1e-12) {
        return Err(ZeroSumError::NotZeroSum);
    }
    let (d1, d2) = (sf.player(0).num_sequences(), sf.player(1).num_sequences());
    let max = optimal(solve_lp(&maximizer_lp(sf))?, "maximizer")?;
    let min = optimal(solve_lp(&minimizer_lp(sf))?, "minimizer")?;
    log::debug!(
        "zero-sum LPs: {} and {} iterations, values {} / {}",
        max.iterations,
        min.iterations,
        max.objective,
        min.objective
    );
    if (max.objective - min.objective).abs() > 1e-7 * (1.0 + max.objective.abs()) {
        return Err(ZeroSumError::DualityGap {
            primal: max.objective,
            dual: min.objective,
        });
    }
    let x: Vec<f64> = max.x[..d1].iter().map(|v| v.max(0.0)).collect();
    let y: Vec<f64> = min.x[..d2].iter().map(|v| v.max(0.0)).collect();
    let value = sf.expected_payoffs(&[x.clone(), y.clone()])[0];
    Ok(ZeroSumSolution {
        p: min.x[d2..].to_vec(),
        q: max.x[d1..].to_vec(),
        x,
        y,
        value,
        primal_objective: max.objective,
        dual_objective: min.objective,
    })
}

#[cfg(test)]
mod tests;
