//! The complementarity feasibility system whose solutions are exactly the
//! Nash equilibria of a sequence-form game.
//!
//! Variables are realization plans `x`, one multiplier per flow row `λ`, and
//! one slack per sequence `r`. Every sequence contributes a stationarity row
//!
//! ```text
//! -Σ_e u_p(e) ∏_{q≠p} x_{q,e_q} + Σ_row λ_{p,row} E_p[row, i] - r_{p,i} = 0
//! ```
//!
//! and a complementarity pair `x_{p,i} · r_{p,i} = 0`. Products of more than
//! two opponents go through auxiliary product variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::sequence::SequenceFormGame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarKind {
    Realization { player: usize, seq: usize },
    Multiplier { player: usize, row: usize },
    Slack { player: usize, seq: usize },
    Product { block: usize, index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    #[serde(flatten)]
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearKind {
    Flow,
    Pin,
}

/// `Σ coef · var = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearRow {
    pub kind: LinearKind,
    pub player: usize,
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// `constant + Σ coef · var + Σ coef · a · b = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BilinearRow {
    pub player: usize,
    pub seq: usize,
    pub constant: f64,
    pub linear: Vec<(usize, f64)>,
    pub products: Vec<(usize, usize, f64)>,
}

impl BilinearRow {
    pub fn eval(&self, v: &[f64]) -> f64 {
        self.constant
            + self.linear.iter().map(|&(i, c)| c * v[i]).sum::<f64>()
            + self.products.iter().map(|&(a, b, c)| c * v[a] * v[b]).sum::<f64>()
    }
}

/// `w = a · b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProductDef {
    pub w: usize,
    pub a: usize,
    pub b: usize,
}

/// Complementarity pair: at least one of `x` and `r` must vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CompPair {
    pub x: usize,
    pub r: usize,
}

/// A set of players whose joint realization products are materialized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProductBlock {
    /// Ascending player indices.
    pub players: Vec<usize>,
    /// The two sub-blocks (by player set) whose outer product defines this one.
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub size: usize,
}

/// How each player's opponent product is split into at most two factors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProductPlan {
    pub blocks: Vec<ProductBlock>,
    /// Per player, the one or two opponent player sets whose variables multiply.
    pub factors: Vec<Vec<Vec<usize>>>,
    pub auxiliary: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcpConfig {
    /// Multiplies the default big-M bound on multipliers and slacks.
    pub m_scale: f64,
}

impl Default for NcpConfig {
    fn default() -> Self {
        NcpConfig { m_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilitySystem {
    pub variables: Vec<Variable>,
    pub linear: Vec<LinearRow>,
    pub stationarity: Vec<BilinearRow>,
    pub pairs: Vec<CompPair>,
    pub products: Vec<ProductDef>,
    pub plan: ProductPlan,
    /// `x[p][i]`, `lambda[p][row]`, `r[p][i]` variable indices.
    pub x: Vec<Vec<usize>>,
    pub lambda: Vec<Vec<usize>>,
    pub r: Vec<Vec<usize>>,
    /// First variable index of each product block, parallel to `plan.blocks`.
    pub block_offset: Vec<usize>,
    pub big_m: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NcpStats {
    pub variables: usize,
    pub realization: usize,
    pub multipliers: usize,
    pub slacks: usize,
    pub auxiliary: usize,
    pub linear_rows: usize,
    pub pin_rows: usize,
    pub stationarity_rows: usize,
    pub complementarity_pairs: usize,
    pub product_rows: usize,
    pub quadratic_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ResidualReport {
    pub linear: f64,
    pub stationarity: f64,
    pub complementarity: f64,
    pub product: f64,
    pub bounds: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        [self.linear, self.stationarity, self.complementarity, self.product, self.bounds]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Group {
    Leaf(usize),
    Join(Box<Group>, Box<Group>),
}

impl Group {
    fn players(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out.sort_unstable();
        out
    }

    fn collect(&self, out: &mut Vec<usize>) {
        match self {
            Group::Leaf(q) => out.push(*q),
            Group::Join(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    fn joins<'a>(&'a self, out: &mut Vec<&'a Group>) {
        if let Group::Join(a, b) = self {
            a.joins(out);
            b.joins(out);
            out.push(self);
        }
    }
}

/// Every way of reducing a list of factors to two by repeatedly joining
/// neighbours.
fn merge_variants(list: Vec<Group>, out: &mut Vec<(Group, Group)>) {
    if list.len() == 2 {
        let pair = (list[0].clone(), list[1].clone());
        if !out.contains(&pair) {
            out.push(pair);
        }
        return;
    }
    for k in 0..list.len() - 1 {
        let mut next = list.clone();
        let b = next.remove(k + 1);
        let a = next.remove(k);
        next.insert(k, Group::Join(Box::new(a), Box::new(b)));
        merge_variants(next, out);
    }
}

const MAX_PLAN_COMBINATIONS: usize = 1 << 14;

/// Decide how each player's product of opponent realizations is written as
/// a single degree-2 term.
///
/// Players are paired in consecutive order (0,1), (2,3), .... A player's
/// opponents are grouped by those pairs (intact pairs become joint blocks,
/// broken pairs leave single players), and neighbouring groups are joined
/// until two factors remain. When only one joint block remains it is split
/// back into its halves. Among all join orders the combination with the
/// fewest auxiliary variables is kept, with blocks shared between players.
pub fn pair_product_scheme(n: usize, dims: &[usize]) -> ProductPlan {
    assert_eq!(dims.len(), n, "one dimension per player");
    let mut variants: Vec<Vec<(Group, Group)>> = Vec::with_capacity(n);
    let mut singles: Vec<Option<Group>> = vec![None; n];
    for p in 0..n {
        let mut groups = Vec::new();
        for start in (0..n).step_by(2) {
            let members: Vec<usize> = (start..(start + 2).min(n)).filter(|&q| q != p).collect();
            match members.as_slice() {
                [a, b] => groups.push(Group::Join(Box::new(Group::Leaf(*a)), Box::new(Group::Leaf(*b)))),
                [a] => groups.push(Group::Leaf(*a)),
                _ => {}
            }
        }
        if groups.len() == 1 {
            match groups.pop().unwrap() {
                Group::Join(a, b) => groups = vec![*a, *b],
                leaf => {
                    singles[p] = Some(leaf);
                    variants.push(Vec::new());
                    continue;
                }
            }
        }
        let mut v = Vec::new();
        if groups.len() >= 2 {
            merge_variants(groups, &mut v);
        }
        variants.push(v);
    }

    let size = |players: &[usize]| players.iter().map(|&q| dims[q]).product::<usize>();
    let cost = |choice: &[usize]| -> usize {
        let mut sets = BTreeSet::new();
        for (p, &c) in choice.iter().enumerate() {
            if let Some((a, b)) = variants[p].get(c) {
                let mut joins = Vec::new();
                a.joins(&mut joins);
                b.joins(&mut joins);
                for j in joins {
                    sets.insert(j.players());
                }
            }
        }
        sets.iter().map(|s| size(s)).sum()
    };

    let combos: usize = variants
        .iter()
        .map(|v| v.len().max(1))
        .try_fold(1usize, |acc, k| acc.checked_mul(k))
        .unwrap_or(usize::MAX);
    let mut best = vec![0usize; n];
    if combos <= MAX_PLAN_COMBINATIONS {
        let mut choice = vec![0usize; n];
        let mut best_cost = usize::MAX;
        loop {
            let c = cost(&choice);
            if c < best_cost {
                best_cost = c;
                best = choice.clone();
            }
            let mut k = 0;
            while k < n {
                choice[k] += 1;
                if choice[k] < variants[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
    } else {
        log::warn!("{combos} pairing combinations; keeping the first join order for every player");
    }

    // Materialize blocks keyed by player set, children before parents.
    let mut blocks: Vec<ProductBlock> = Vec::new();
    let mut known: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut factors = Vec::with_capacity(n);
    for p in 0..n {
        if let Some(leaf) = &singles[p] {
            factors.push(vec![leaf.players()]);
            continue;
        }
        match variants[p].get(best[p]) {
            None => factors.push(Vec::new()),
            Some((a, b)) => {
                for spec in [a, b] {
                    let mut joins = Vec::new();
                    spec.joins(&mut joins);
                    for j in joins {
                        let set = j.players();
                        if known.contains_key(&set) {
                            continue;
                        }
                        let Group::Join(l, r) = j else { unreachable!() };
                        known.insert(set.clone(), blocks.len());
                        blocks.push(ProductBlock {
                            size: size(&set),
                            players: set,
                            left: l.players(),
                            right: r.players(),
                        });
                    }
                }
                factors.push(vec![a.players(), b.players()]);
            }
        }
    }
    let auxiliary = blocks.iter().map(|b| b.size).sum();
    ProductPlan {
        blocks,
        factors,
        auxiliary,
    }
}

/// Position of a joint sequence tuple inside a block (mixed radix over the
/// block's players in ascending order).
fn block_position(players: &[usize], dims: &[usize], seqs: &[usize]) -> usize {
    players.iter().fold(0, |acc, &q| acc * dims[q] + seqs[q])
}

impl FeasibilitySystem {
    pub fn num_players(&self) -> usize {
        self.x.len()
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    /// Variable holding `∏_{q ∈ players} x_{q, seqs[q]}`.
    pub fn factor_var(&self, players: &[usize], seqs: &[usize]) -> usize {
        if let [q] = players {
            return self.x[*q][seqs[*q]];
        }
        let dims: Vec<usize> = self.x.iter().map(Vec::len).collect();
        let b = self
            .plan
            .blocks
            .iter()
            .position(|b| b.players == players)
            .expect("factor set is a planned block");
        self.block_offset[b] + block_position(players, &dims, seqs)
    }

    pub fn stats(&self) -> NcpStats {
        let count = |f: fn(&VarKind) -> bool| self.variables.iter().filter(|v| f(&v.kind)).count();
        let pin_rows = self.linear.iter().filter(|r| r.kind == LinearKind::Pin).count();
        NcpStats {
            variables: self.variables.len(),
            realization: count(|k| matches!(k, VarKind::Realization { .. })),
            multipliers: count(|k| matches!(k, VarKind::Multiplier { .. })),
            slacks: count(|k| matches!(k, VarKind::Slack { .. })),
            auxiliary: count(|k| matches!(k, VarKind::Product { .. })),
            linear_rows: self.linear.len(),
            pin_rows,
            stationarity_rows: self.stationarity.len(),
            complementarity_pairs: self.pairs.len(),
            product_rows: self.products.len(),
            quadratic_rows: self.stationarity.len() + self.pairs.len() + self.products.len(),
        }
    }

    pub fn residuals(&self, v: &[f64]) -> ResidualReport {
        residuals(self, v)
    }

    /// Complete realization plans to a full assignment: auxiliary products
    /// from their definitions, multipliers from a bottom-up best-response
    /// pass, and slacks from the stationarity rows. At an equilibrium the
    /// result satisfies the whole system.
    pub fn lift(&self, sf: &SequenceFormGame, plans: &[Vec<f64>]) -> Vec<f64> {
        let n = self.num_players();
        let mut v = vec![0.0; self.variables.len()];
        for p in 0..n {
            for (i, &var) in self.x[p].iter().enumerate() {
                v[var] = plans[p][i];
            }
        }
        for d in &self.products {
            v[d.w] = v[d.a] * v[d.b];
        }
        // g[p][i]: payoff collected directly at sequence i against the others.
        let mut g: Vec<Vec<f64>> = self.x.iter().map(|x| vec![0.0; x.len()]).collect();
        for e in sf.entries() {
            for p in 0..n {
                let others: f64 = (0..n).filter(|&q| q != p).map(|q| plans[q][e.sequences[q]]).product();
                g[p][e.sequences[p]] += e.payoffs[p] * others;
            }
        }
        for p in 0..n {
            let ps = sf.player(p);
            let mut value = g[p].clone();
            let mut lam = vec![0.0; ps.num_rows()];
            for s in ps.infosets().iter().rev() {
                let best = s.sequences.iter().map(|&i| value[i]).fold(f64::NEG_INFINITY, f64::max);
                lam[s.row] = best;
                if let Some(parent) = s.parent {
                    value[parent] += best;
                }
            }
            // Rows not owned by an infoset (the root row) close the empty sequence.
            let owned: BTreeSet<usize> = ps.infosets().iter().map(|s| s.row).collect();
            for row in 0..ps.num_rows() {
                if !owned.contains(&row) {
                    let col0 = ps.constraint_rows()[row].iter().find(|&&(_, c)| c > 0.0).map(|&(i, _)| i);
                    if let Some(i) = col0 {
                        lam[row] = value[i];
                    }
                }
            }
            for (row, &var) in self.lambda[p].iter().enumerate() {
                v[var] = lam[row];
            }
        }
        for row in &self.stationarity {
            let r = self.r[row.player][row.seq];
            v[r] = 0.0;
            v[r] = row.eval(&v);
        }
        v
    }

    /// Plain-text listing of variables, rows and pairs.
    pub fn dump(&self) -> String {
        let name = |i: usize| self.variables[i].name.as_str();
        let mut out = String::new();
        let s = self.stats();
        let _ = writeln!(
            out,
            "variables {}  linear {}  quadratic {}  pairs {}  products {}",
            s.variables, s.linear_rows, s.quadratic_rows, s.complementarity_pairs, s.product_rows
        );
        let _ = writeln!(out, "\nVARIABLES");
        for v in &self.variables {
            let _ = writeln!(out, "  {} in [{}, {}]", v.name, v.lower, v.upper);
        }
        let _ = writeln!(out, "\nLINEAR");
        for (k, row) in self.linear.iter().enumerate() {
            let terms: Vec<String> = row.terms.iter().map(|&(i, c)| format!("{c:+} {}", name(i))).collect();
            let _ = writeln!(out, "  l{k} ({:?}): {} = {}", row.kind, terms.join(" "), row.rhs);
        }
        let _ = writeln!(out, "\nSTATIONARITY");
        for (k, row) in self.stationarity.iter().enumerate() {
            let mut terms: Vec<String> = Vec::new();
            if row.constant != 0.0 {
                terms.push(format!("{:+}", row.constant));
            }
            terms.extend(row.linear.iter().map(|&(i, c)| format!("{c:+} {}", name(i))));
            terms.extend(
                row.products
                    .iter()
                    .map(|&(a, b, c)| format!("{c:+} {}*{}", name(a), name(b))),
            );
            let _ = writeln!(out, "  s{k}: {} = 0", terms.join(" "));
        }
        let _ = writeln!(out, "\nPAIRS");
        for pr in &self.pairs {
            let _ = writeln!(out, "  {} _|_ {}", name(pr.x), name(pr.r));
        }
        if !self.products.is_empty() {
            let _ = writeln!(out, "\nPRODUCTS");
            for d in &self.products {
                let _ = writeln!(out, "  {} = {}*{}", name(d.w), name(d.a), name(d.b));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }
}

pub fn assemble_ncp(sf: &SequenceFormGame) -> FeasibilitySystem {
    assemble_ncp_with(sf, &NcpConfig::default())
}

pub fn assemble_ncp_with(sf: &SequenceFormGame, cfg: &NcpConfig) -> FeasibilitySystem {
    let n = sf.num_players();
    assert!(n >= 2, "the complementarity system needs at least two players");
    let dims = sf.dims();
    let mut variables = Vec::new();
    fn add(vars: &mut Vec<Variable>, name: String, kind: VarKind, lower: f64, upper: f64) -> usize {
        vars.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        vars.len() - 1
    }

    let big_m: Vec<f64> = (0..n)
        .map(|p| {
            let top = sf
                .entries()
                .iter()
                .fold(0.0f64, |m, e| m.max(e.payoffs[p].abs()));
            let top = if top > 0.0 { top } else { 1.0 };
            cfg.m_scale * (1 + sf.player(p).num_rows()) as f64 * top
        })
        .collect();

    let mut x = Vec::with_capacity(n);
    for p in 0..n {
        let ps = sf.player(p);
        x.push(
            (0..dims[p])
                .map(|i| {
                    add(
                        &mut variables,
                        format!("x{}[{}]", p + 1, ps.sequence_label(i)),
                        VarKind::Realization { player: p, seq: i },
                        0.0,
                        1.0,
                    )
                })
                .collect::<Vec<_>>(),
        );
    }
    let mut lambda = Vec::with_capacity(n);
    for p in 0..n {
        lambda.push(
            (0..sf.player(p).num_rows())
                .map(|row| {
                    add(
                        &mut variables,
                        format!("lam{}[{row}]", p + 1),
                        VarKind::Multiplier { player: p, row },
                        -big_m[p],
                        big_m[p],
                    )
                })
                .collect::<Vec<_>>(),
        );
    }
    let mut r = Vec::with_capacity(n);
    for p in 0..n {
        let ps = sf.player(p);
        r.push(
            (0..dims[p])
                .map(|i| {
                    add(
                        &mut variables,
                        format!("r{}[{}]", p + 1, ps.sequence_label(i)),
                        VarKind::Slack { player: p, seq: i },
                        0.0,
                        big_m[p],
                    )
                })
                .collect::<Vec<_>>(),
        );
    }

    let plan = pair_product_scheme(n, &dims);
    let mut block_offset = Vec::with_capacity(plan.blocks.len());
    for (b, block) in plan.blocks.iter().enumerate() {
        let tag: String = block.players.iter().map(|q| (q + 1).to_string()).collect();
        block_offset.push(variables.len());
        for index in 0..block.size {
            add(&mut variables, format!("w{tag}[{index}]"), VarKind::Product { block: b, index }, 0.0, 1.0);
        }
    }

    let mut system = FeasibilitySystem {
        variables,
        linear: Vec::new(),
        stationarity: Vec::new(),
        pairs: Vec::new(),
        products: Vec::new(),
        plan,
        x,
        lambda,
        r,
        block_offset,
        big_m,
    };

    // Product definitions: every tuple of a block splits into its two halves.
    for (b, block) in system.plan.blocks.iter().enumerate() {
        let mut seqs = vec![0usize; n];
        for index in 0..block.size {
            let mut rest = index;
            for &q in block.players.iter().rev() {
                seqs[q] = rest % dims[q];
                rest /= dims[q];
            }
            let w = system.block_offset[b] + index;
            let a = system.factor_var(&block.left, &seqs);
            let c = system.factor_var(&block.right, &seqs);
            system.products.push(ProductDef { w, a, b: c });
        }
    }

    for p in 0..n {
        let ps = sf.player(p);
        for (row, terms) in ps.constraint_rows().iter().enumerate() {
            system.linear.push(LinearRow {
                kind: LinearKind::Flow,
                player: p,
                terms: terms.iter().map(|&(i, c)| (system.x[p][i], c)).collect(),
                rhs: ps.rhs()[row],
            });
        }
    }
    for p in 0..n {
        for &i in sf.player(p).pinned() {
            system.linear.push(LinearRow {
                kind: LinearKind::Pin,
                player: p,
                terms: vec![(system.x[p][i], 1.0)],
                rhs: 0.0,
            });
        }
    }

    // Payoff terms grouped by (player, own sequence), merged per factor pair.
    let mut linear_terms: Vec<Vec<BTreeMap<usize, f64>>> =
        dims.iter().map(|&d| vec![BTreeMap::new(); d]).collect();
    let mut product_terms: Vec<Vec<BTreeMap<(usize, usize), f64>>> =
        dims.iter().map(|&d| vec![BTreeMap::new(); d]).collect();
    for e in sf.entries() {
        for p in 0..n {
            let u = e.payoffs[p];
            if u == 0.0 {
                continue;
            }
            let i = e.sequences[p];
            match system.plan.factors[p].as_slice() {
                [single] => {
                    let v = system.factor_var(single, &e.sequences);
                    *linear_terms[p][i].entry(v).or_insert(0.0) -= u;
                }
                [fa, fb] => {
                    let a = system.factor_var(fa, &e.sequences);
                    let b = system.factor_var(fb, &e.sequences);
                    let key = (a.min(b), a.max(b));
                    *product_terms[p][i].entry(key).or_insert(0.0) -= u;
                }
                _ => unreachable!("every player has opponents"),
            }
        }
    }
    for p in 0..n {
        let ps = sf.player(p);
        let mut column: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dims[p]];
        for (row, terms) in ps.constraint_rows().iter().enumerate() {
            for &(i, c) in terms {
                column[i].push((row, c));
            }
        }
        for i in 0..dims[p] {
            let mut linear: Vec<(usize, f64)> = linear_terms[p][i].iter().map(|(&v, &c)| (v, c)).collect();
            linear.extend(column[i].iter().map(|&(row, c)| (system.lambda[p][row], c)));
            linear.push((system.r[p][i], -1.0));
            let products = product_terms[p][i].iter().map(|(&(a, b), &c)| (a, b, c)).collect();
            system.stationarity.push(BilinearRow {
                player: p,
                seq: i,
                constant: 0.0,
                linear,
                products,
            });
            system.pairs.push(CompPair {
                x: system.x[p][i],
                r: system.r[p][i],
            });
        }
    }
    system
}

pub fn residuals(system: &FeasibilitySystem, v: &[f64]) -> ResidualReport {
    assert_eq!(v.len(), system.variables.len(), "assignment covers every variable");
    let linear = system
        .linear
        .iter()
        .map(|row| (row.terms.iter().map(|&(i, c)| c * v[i]).sum::<f64>() - row.rhs).abs())
        .fold(0.0, f64::max);
    let stationarity = system
        .stationarity
        .iter()
        .map(|row| row.eval(v).abs())
        .fold(0.0, f64::max);
    let complementarity = system
        .pairs
        .iter()
        .map(|pr| (v[pr.x] * v[pr.r]).abs())
        .fold(0.0, f64::max);
    let product = system
        .products
        .iter()
        .map(|d| (v[d.w] - v[d.a] * v[d.b]).abs())
        .fold(0.0, f64::max);
    let bounds = system
        .variables
        .iter()
        .zip(v)
        .map(|(var, &val)| (var.lower - val).max(val - var.upper).max(0.0))
        .fold(0.0, f64::max);
    ResidualReport {
        linear,
        stationarity,
        complementarity,
        product,
        bounds,
    }
}
