//! Spatial branch-and-bound over the complementarity system.
//!
//! Every node solves a linear relaxation in which each bilinear term is
//! replaced by a variable held inside its McCormick envelope. Branching first
//! splits violated complementarity pairs into their two sides and otherwise
//! splits the box of a factor whose product the envelope misses. Every LP
//! point (and, optionally, a locally polished version of it) is offered to the
//! verifier; the first profile within the regret target ends the search.

pub mod polish;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::game::ExtensiveFormGame;
use crate::lp::{solve_lp_with, LinearProgram, LpOptions, LpStatus, RowKind, Sense};
use crate::ncp::FeasibilitySystem;
use crate::sequence::{BehavioralStrategy, SequenceFormGame, StrategyProfile};
use crate::verifier;

pub use polish::{polish, PairState, PolishOptions};

/// Realization values this far below zero are rounded up before verification.
const REPAIR_TOLERANCE: f64 = 1e-9;
/// Flow violation beyond which an LP point is not worth verifying.
const FLOW_GUARD: f64 = 1e-6;
/// Residual bound promised for an accepted assignment.
const ASSIGNMENT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub epsilon_target: f64,
    pub residual_tol: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    pub workers: usize,
    pub seed: u64,
    /// Run the local polish heuristic at the root and at every node.
    pub heuristic: bool,
    /// Random restarts of the root heuristic in addition to the uniform profile.
    pub root_starts: usize,
    /// Fraction of a box kept on each side of a spatial split.
    pub split_margin: f64,
    /// Emit a progress line every this many nodes (0 disables).
    pub log_every: u64,
    pub lp: LpOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            epsilon_target: 1e-6,
            residual_tol: 1e-9,
            time_limit: None,
            node_limit: None,
            workers: 1,
            seed: 0,
            heuristic: true,
            root_starts: 16,
            split_margin: 0.1,
            log_every: 100,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("epsilon target must be positive, got {0}")]
    EpsilonTarget(f64),
    #[error("at least one worker is required")]
    Workers,
    #[error("split margin must lie in (0, 0.5), got {0}")]
    SplitMargin(f64),
    #[error("system and game disagree: {0}")]
    Mismatch(String),
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.epsilon_target > 0.0) {
            return Err(SolveError::EpsilonTarget(self.epsilon_target));
        }
        if self.workers == 0 {
            return Err(SolveError::Workers);
        }
        if !(self.split_margin > 0.0 && self.split_margin < 0.5) {
            return Err(SolveError::SplitMargin(self.split_margin));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// One entry per complementarity pair; `Free` means undecided.
    pub decisions: Vec<PairState>,
    /// Violation measured at the parent's LP point.
    pub score: f64,
    pub depth: usize,
    pub id: u64,
}

impl BnbNode {
    pub fn root(system: &FeasibilitySystem) -> Self {
        BnbNode {
            lower: system.variables.iter().map(|v| v.lower).collect(),
            upper: system.variables.iter().map(|v| v.upper).collect(),
            decisions: vec![PairState::Free; system.pairs.len()],
            score: 0.0,
            depth: 0,
            id: 0,
        }
    }

    fn child(&self, score: f64) -> Self {
        BnbNode {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            decisions: self.decisions.clone(),
            score,
            depth: self.depth + 1,
            id: 0,
        }
    }

    /// Node box with pair decisions applied as fixings.
    fn effective_bounds(&self, system: &FeasibilitySystem) -> (Vec<f64>, Vec<f64>) {
        let (mut lo, mut hi) = (self.lower.clone(), self.upper.clone());
        for (pr, state) in system.pairs.iter().zip(&self.decisions) {
            let v = match state {
                PairState::Free => continue,
                PairState::XZero => pr.x,
                PairState::RZero => pr.r,
            };
            lo[v] = lo[v].max(0.0);
            hi[v] = hi[v].min(0.0);
        }
        (lo, hi)
    }
}

/// LP relaxation of a node. Columns `0..system.num_variables()` are the
/// system's variables; the rest are envelope variables listed in `terms`.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub lp: LinearProgram,
    /// `(a, b, column)`: the column stands in for `v[a] · v[b]`.
    pub terms: Vec<(usize, usize, usize)>,
}

/// The four McCormick inequalities for `w ≈ a·b` over the given boxes.
pub fn mccormick_rows(a: usize, b: usize, w: usize, (al, au): (f64, f64), (bl, bu): (f64, f64)) -> Vec<(Vec<(usize, f64)>, RowKind, f64)> {
    vec![
        (vec![(w, 1.0), (b, -al), (a, -bl)], RowKind::Ge, -al * bl),
        (vec![(w, 1.0), (b, -au), (a, -bu)], RowKind::Ge, -au * bu),
        (vec![(w, 1.0), (b, -au), (a, -bl)], RowKind::Le, -au * bl),
        (vec![(w, 1.0), (b, -al), (a, -bu)], RowKind::Le, -al * bu),
    ]
}

/// Build the relaxation, or `None` when the node box is empty.
pub fn relax_node(system: &FeasibilitySystem, node: &BnbNode) -> Option<Relaxation> {
    let (lo, hi) = node.effective_bounds(system);
    if lo.iter().zip(&hi).any(|(l, u)| l > u) {
        return None;
    }
    let mut lp = LinearProgram::new(Sense::Minimize);
    for (j, var) in system.variables.iter().enumerate() {
        lp.add_named_var(var.name.clone(), lo[j], hi[j], 0.0);
    }
    for (k, pr) in system.pairs.iter().enumerate() {
        if node.decisions[k] == PairState::Free {
            let player = system.stationarity[k].player;
            lp.objective[pr.x] += 1.0;
            lp.objective[pr.r] += 1.0 / system.big_m[player];
        }
    }
    let mut column: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut terms = Vec::new();
    for d in &system.products {
        column.insert((d.a.min(d.b), d.a.max(d.b)), d.w);
        terms.push((d.a, d.b, d.w));
    }
    for row in &system.stationarity {
        for &(a, b, _) in &row.products {
            let key = (a.min(b), a.max(b));
            if !column.contains_key(&key) {
                let (l, u) = envelope_range((lo[a], hi[a]), (lo[b], hi[b]));
                let w = lp.add_named_var(format!("t[{},{}]", system.variables[a].name, system.variables[b].name), l, u, 0.0);
                column.insert(key, w);
                terms.push((a, b, w));
            }
        }
    }
    for row in &system.linear {
        lp.add_row(row.terms.clone(), RowKind::Eq, row.rhs);
    }
    for row in &system.stationarity {
        let mut coefs = row.linear.clone();
        for &(a, b, c) in &row.products {
            coefs.push((column[&(a.min(b), a.max(b))], c));
        }
        lp.add_row(coefs, RowKind::Eq, -row.constant);
    }
    for &(a, b, w) in &terms {
        for (coefs, kind, rhs) in mccormick_rows(a, b, w, (lo[a], hi[a]), (lo[b], hi[b])) {
            lp.add_row(coefs, kind, rhs);
        }
    }
    Some(Relaxation { lp, terms })
}

fn envelope_range((al, au): (f64, f64), (bl, bu): (f64, f64)) -> (f64, f64) {
    let c = [al * bl, al * bu, au * bl, au * bu];
    (c.iter().cloned().fold(f64::INFINITY, f64::min), c.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Branch {
    /// Split pair `k` into `x = 0` and `r = 0`.
    Pair { pair: usize, violation: f64 },
    /// Split the box of `var` at `at`.
    Split { var: usize, at: f64, gap: f64 },
    /// The point satisfies the system within tolerance.
    Feasible,
    /// Violations remain but every factor box is already a point.
    Exhausted,
}

/// Pick the branching decision at an LP point (system columns first, then
/// envelope columns as listed in `relax.terms`).
pub fn branch_select(system: &FeasibilitySystem, node: &BnbNode, relax: &Relaxation, point: &[f64], opts: &SolverOptions) -> Branch {
    let mut best: Option<(usize, f64)> = None;
    for (k, pr) in system.pairs.iter().enumerate() {
        if node.decisions[k] != PairState::Free {
            continue;
        }
        let v = point[pr.x].max(0.0) * point[pr.r].max(0.0);
        if v > opts.residual_tol && best.map_or(true, |(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    if let Some((pair, violation)) = best {
        return Branch::Pair { pair, violation };
    }
    let mut worst: Option<(usize, usize, f64)> = None;
    for &(a, b, w) in &relax.terms {
        let gap = (point[w] - point[a] * point[b]).abs();
        if gap > opts.residual_tol && worst.map_or(true, |(_, _, g)| gap > g) {
            worst = Some((a, b, gap));
        }
    }
    let Some((a, b, gap)) = worst else {
        return Branch::Feasible;
    };
    let width = |v: usize| node.upper[v] - node.lower[v];
    let var = if width(b) > width(a) || (width(b) == width(a) && b < a) { b } else { a };
    let (l, u) = (node.lower[var], node.upper[var]);
    if u - l <= 1e-12 {
        return Branch::Exhausted;
    }
    let at = point[var].clamp(l + opts.split_margin * (u - l), u - opts.split_margin * (u - l));
    Branch::Split { var, at, gap }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IncumbentCheck {
    Accepted(StrategyProfile),
    /// Verified but above target; the profile carries its epsilon.
    Rejected(StrategyProfile),
    /// Not a valid realization plan after repair; the verifier was not called.
    Invalid,
}

/// Turn the realization part of `values` into a verified profile.
pub fn incumbent_check(
    system: &FeasibilitySystem,
    sf: &SequenceFormGame,
    game: &ExtensiveFormGame,
    values: &[f64],
    opts: &SolverOptions,
) -> IncumbentCheck {
    let mut plans = Vec::with_capacity(system.num_players());
    for (p, cols) in system.x.iter().enumerate() {
        let mut x = Vec::with_capacity(cols.len());
        for &c in cols {
            let v = values[c];
            if !(v >= -REPAIR_TOLERANCE) {
                return IncumbentCheck::Invalid;
            }
            x.push(v.max(0.0));
        }
        if sf.player(p).flow_residual(&x) > FLOW_GUARD {
            return IncumbentCheck::Invalid;
        }
        plans.push(x);
    }
    let Ok(mut profile) = StrategyProfile::from_realization(sf, &plans) else {
        return IncumbentCheck::Invalid;
    };
    let Ok(eps) = verifier::epsilon(game, &profile.behavioral) else {
        return IncumbentCheck::Invalid;
    };
    profile.verified_epsilon = Some(eps);
    if eps <= opts.epsilon_target {
        IncumbentCheck::Accepted(profile)
    } else {
        IncumbentCheck::Rejected(profile)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    EquilibriumFound,
    Infeasible,
    LimitReached,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_solves: u64,
    pub lp_failures: u64,
    pub infeasible_leaves: u64,
    pub unresolved_leaves: u64,
    pub heuristic_runs: u64,
    pub pair_branches: u64,
    pub spatial_branches: u64,
    pub max_depth: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Accepted equilibrium, or the lowest-epsilon candidate seen.
    pub profile: Option<StrategyProfile>,
    /// Full system assignment consistent with `profile` (on success).
    pub assignment: Option<Vec<f64>>,
    pub stats: SolveStats,
    pub diagnostic: Option<String>,
}

impl SolveResult {
    pub fn epsilon(&self) -> Option<f64> {
        self.profile.as_ref().and_then(|p| p.verified_epsilon)
    }

    pub fn stats_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            status: SolveStatus,
            epsilon: Option<f64>,
            #[serde(flatten)]
            stats: &'a SolveStats,
            diagnostic: &'a Option<String>,
        }
        serde_json::to_string(&Out {
            status: self.status,
            epsilon: self.epsilon(),
            stats: &self.stats,
            diagnostic: &self.diagnostic,
        })
        .expect("serializable")
    }
}

struct Queued(BnbNode);

impl Ord for Queued {
    // The heap pops the greatest element: lowest score, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .score
            .total_cmp(&self.0.score)
            .then(self.0.depth.cmp(&other.0.depth))
            .then(other.0.id.cmp(&self.0.id))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

struct Shared {
    heap: BinaryHeap<Queued>,
    next_id: u64,
    active: usize,
    stats: SolveStats,
    best: Option<StrategyProfile>,
    found: Option<(StrategyProfile, Vec<f64>)>,
    limit: Option<String>,
}

impl Shared {
    fn offer(&mut self, profile: StrategyProfile) {
        let eps = profile.verified_epsilon.unwrap_or(f64::INFINITY);
        if self.best.as_ref().map_or(true, |b| eps < b.verified_epsilon.unwrap_or(f64::INFINITY)) {
            self.best = Some(profile);
        }
    }

    fn push(&mut self, mut node: BnbNode) {
        node.id = self.next_id;
        self.next_id += 1;
        self.heap.push(Queued(node));
    }
}

#[derive(Default)]
struct NodeOutcome {
    children: Vec<BnbNode>,
    lp_solved: bool,
    lp_failed: bool,
    infeasible: bool,
    unresolved: bool,
    heuristic_runs: u64,
    branch: Option<bool>,
    candidates: Vec<StrategyProfile>,
    found: Option<(StrategyProfile, Vec<f64>)>,
}

struct Context<'a> {
    system: &'a FeasibilitySystem,
    sf: &'a SequenceFormGame,
    game: &'a ExtensiveFormGame,
    opts: &'a SolverOptions,
    global_lower: Vec<f64>,
    global_upper: Vec<f64>,
}

impl Context<'_> {
    /// Check a point; on acceptance also produce a consistent assignment.
    fn consider(&self, values: &[f64], out: &mut NodeOutcome) -> bool {
        match incumbent_check(self.system, self.sf, self.game, values, self.opts) {
            IncumbentCheck::Accepted(profile) => {
                let assignment = self.system.lift(self.sf, &profile.realization);
                let residual = self.system.residuals(&assignment).max();
                if residual <= ASSIGNMENT_TOLERANCE {
                    out.found = Some((profile, assignment));
                    return true;
                }
                log::debug!("accepted profile lifts with residual {residual:.3e}; ignoring");
                out.candidates.push(profile);
            }
            IncumbentCheck::Rejected(profile) => out.candidates.push(profile),
            IncumbentCheck::Invalid => {}
        }
        false
    }

    fn polish_from(&self, start: &[f64], states: &[PairState], opts: &PolishOptions, out: &mut NodeOutcome) -> bool {
        out.heuristic_runs += 1;
        let (v, worst) = polish(self.system, start, states, &self.global_lower, &self.global_upper, opts);
        log::trace!("polish residual {worst:.3e}");
        self.consider(&v, out)
    }

    /// Homotopy polish from the uniform profile, then from seeded random ones.
    fn root_heuristic(&self, out: &mut NodeOutcome) -> bool {
        let free = vec![PairState::Free; self.system.pairs.len()];
        let homotopy = PolishOptions::homotopy();
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        for k in 0..=self.opts.root_starts {
            let b = if k == 0 {
                BehavioralStrategy::uniform(self.sf)
            } else {
                random_behavioral(self.sf, &mut rng)
            };
            let Ok(profile) = StrategyProfile::from_behavioral(self.sf, b) else {
                continue;
            };
            let start = self.system.lift(self.sf, &profile.realization);
            if self.consider(&start, out) || self.polish_from(&start, &free, &homotopy, out) {
                return true;
            }
        }
        false
    }

    fn process(&self, node: &BnbNode) -> NodeOutcome {
        let mut out = NodeOutcome::default();
        let Some(relax) = relax_node(self.system, node) else {
            out.infeasible = true;
            return out;
        };
        let sol = match solve_lp_with(&relax.lp, &self.opts.lp) {
            Ok(sol) => sol,
            Err(e) => {
                log::warn!("node {}: malformed relaxation: {e}", node.id);
                out.lp_failed = true;
                out.unresolved = true;
                return out;
            }
        };
        out.lp_solved = true;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                out.infeasible = true;
                return out;
            }
            status => {
                log::debug!("node {}: LP ended with {status:?}", node.id);
                out.lp_failed = true;
                out.unresolved = true;
                return out;
            }
        }
        let point = &sol.x;
        let nv = self.system.num_variables();
        if self.consider(&point[..nv], &mut out) {
            return out;
        }
        if self.opts.heuristic {
            if self.polish_from(&point[..nv], &node.decisions, &PolishOptions::default(), &mut out) {
                return out;
            }
            if node.depth == 0 && self.root_heuristic(&mut out) {
                return out;
            }
        }
        match branch_select(self.system, node, &relax, point, self.opts) {
            Branch::Pair { pair, violation } => {
                out.branch = Some(true);
                for state in [PairState::XZero, PairState::RZero] {
                    let mut child = node.child(violation);
                    child.decisions[pair] = state;
                    out.children.push(child);
                }
            }
            Branch::Split { var, at, gap } => {
                out.branch = Some(false);
                let mut left = node.child(gap);
                left.upper[var] = at;
                let mut right = node.child(gap);
                right.lower[var] = at;
                out.children.push(left);
                out.children.push(right);
            }
            Branch::Feasible | Branch::Exhausted => out.unresolved = true,
        }
        out
    }
}

fn random_behavioral(sf: &SequenceFormGame, rng: &mut ChaCha8Rng) -> BehavioralStrategy {
    let mut b = BehavioralStrategy::uniform(sf);
    for (p, ps) in sf.players().iter().enumerate() {
        for (s, info) in ps.infosets().iter().enumerate() {
            let weights: Vec<f64> = info
                .sequences
                .iter()
                .map(|q| if ps.pinned().contains(q) { 0.0 } else { rng.gen::<f64>() + 1e-3 })
                .collect();
            let total: f64 = weights.iter().sum();
            if total > 0.0 {
                b.probs[p][s] = weights.iter().map(|w| w / total).collect();
            }
        }
    }
    b
}

/// Search for a profile whose verified regret is within `opts.epsilon_target`.
pub fn solve(
    system: &FeasibilitySystem,
    sf: &SequenceFormGame,
    game: &ExtensiveFormGame,
    opts: &SolverOptions,
) -> Result<SolveResult, SolveError> {
    opts.validate()?;
    if sf.num_players() != system.num_players() || game.num_players() != system.num_players() {
        return Err(SolveError::Mismatch("player counts differ".into()));
    }
    if sf.dims().iter().zip(&system.x).any(|(d, x)| *d != x.len()) {
        return Err(SolveError::Mismatch("sequence counts differ".into()));
    }
    let start = Instant::now();
    let ctx = Context {
        system,
        sf,
        game,
        opts,
        global_lower: system.variables.iter().map(|v| v.lower).collect(),
        global_upper: system.variables.iter().map(|v| v.upper).collect(),
    };
    let shared = Mutex::new(Shared {
        heap: BinaryHeap::new(),
        next_id: 0,
        active: 0,
        stats: SolveStats::default(),
        best: None,
        found: None,
        limit: None,
    });
    let wake = Condvar::new();

    shared.lock().expect("solver state").push(BnbNode::root(system));

    if opts.workers == 1 {
        worker(&ctx, &shared, &wake, start);
    } else {
        std::thread::scope(|scope| {
            for _ in 0..opts.workers {
                scope.spawn(|| worker(&ctx, &shared, &wake, start));
            }
        });
    }

    let mut st = shared.into_inner().expect("solver state");
    st.stats.wall_ms = start.elapsed().as_millis() as u64;
    let result = if let Some((profile, assignment)) = st.found.take() {
        SolveResult {
            status: SolveStatus::EquilibriumFound,
            profile: Some(profile),
            assignment: Some(assignment),
            stats: st.stats.clone(),
            diagnostic: None,
        }
    } else if let Some(reason) = st.limit.take() {
        SolveResult {
            status: SolveStatus::LimitReached,
            profile: st.best.take(),
            assignment: None,
            stats: st.stats.clone(),
            diagnostic: Some(reason),
        }
    } else if st.stats.unresolved_leaves > 0 {
        SolveResult {
            status: SolveStatus::LimitReached,
            profile: st.best.take(),
            assignment: None,
            stats: st.stats.clone(),
            diagnostic: Some(format!(
                "search exhausted with {} leaves left unresolved (LP failures or points within tolerance but above the epsilon target)",
                st.stats.unresolved_leaves
            )),
        }
    } else {
        SolveResult {
            status: SolveStatus::Infeasible,
            profile: st.best.take(),
            assignment: None,
            stats: st.stats.clone(),
            diagnostic: Some(format!(
                "every leaf relaxation was infeasible ({} leaves); the multiplier bound may be too small",
                st.stats.infeasible_leaves
            )),
        }
    };
    log::info!("solve finished: {}", result.stats_json());
    Ok(result)
}

fn worker(ctx: &Context<'_>, shared: &Mutex<Shared>, wake: &Condvar, start: Instant) {
    let opts = ctx.opts;
    loop {
        let node = {
            let mut st = shared.lock().expect("solver state");
            loop {
                if st.found.is_some() || st.limit.is_some() {
                    wake.notify_all();
                    return;
                }
                if opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
                    st.limit = Some(format!("time limit reached after {} nodes", st.stats.nodes));
                    continue;
                }
                if opts.node_limit.is_some_and(|n| st.stats.nodes >= n) {
                    st.limit = Some(format!("node limit of {} reached", st.stats.nodes));
                    continue;
                }
                if let Some(Queued(node)) = st.heap.pop() {
                    st.active += 1;
                    st.stats.nodes += 1;
                    st.stats.max_depth = st.stats.max_depth.max(node.depth);
                    if opts.log_every > 0 && st.stats.nodes % opts.log_every == 0 {
                        log::info!(
                            "nodes {} open {} best eps {:.3e} elapsed {:.1}s",
                            st.stats.nodes,
                            st.heap.len(),
                            st.best.as_ref().and_then(|b| b.verified_epsilon).unwrap_or(f64::INFINITY),
                            start.elapsed().as_secs_f64()
                        );
                    }
                    break node;
                }
                if st.active == 0 {
                    wake.notify_all();
                    return;
                }
                st = wake.wait(st).expect("solver state");
            }
        };
        let out = ctx.process(&node);
        let mut st = shared.lock().expect("solver state");
        st.active -= 1;
        st.stats.lp_solves += out.lp_solved as u64;
        st.stats.lp_failures += out.lp_failed as u64;
        st.stats.infeasible_leaves += out.infeasible as u64;
        st.stats.unresolved_leaves += out.unresolved as u64;
        st.stats.heuristic_runs += out.heuristic_runs;
        match out.branch {
            Some(true) => st.stats.pair_branches += 1,
            Some(false) => st.stats.spatial_branches += 1,
            None => {}
        }
        for c in out.candidates {
            st.offer(c);
        }
        if st.found.is_none() {
            st.found = out.found;
        }
        for child in out.children {
            st.push(child);
        }
        wake.notify_all();
    }
}

#[cfg(test)]
mod tests;
