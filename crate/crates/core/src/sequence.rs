//! Multiplayer sequence form: per-player sequence sets, flow constraints
//! `E_p x_p = e_p`, and sparse chance-weighted payoff entries (one per
//! terminal). Also the realization-plan / behavioral-strategy conversions.

use num_traits::CheckedMul;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::GameError;
use crate::game::{validate_perfect_recall, ExtensiveFormGame, Node, Number, PinList, StrategicFormGame};

/// Realization below this is treated as "never reached".
pub const REACH_TOLERANCE: f64 = 1e-9;
/// Flow-constraint residual accepted when converting a plan.
pub const PLAN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SeqInfoset {
    pub label: String,
    pub actions: Vec<String>,
    /// Constraint row of this information set.
    pub row: usize,
    /// Sequence leading into the information set; `None` means the row is a
    /// simplex row with right-hand side 1.
    pub parent: Option<usize>,
    /// Sequence index for each action.
    pub sequences: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSequences {
    num_sequences: usize,
    infosets: Vec<SeqInfoset>,
    /// For each sequence, the `(infoset, action)` ending it; `None` for the empty sequence.
    last_action: Vec<Option<(usize, usize)>>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    pinned: Vec<usize>,
}

impl PlayerSequences {
    pub fn num_sequences(&self) -> usize {
        self.num_sequences
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn infosets(&self) -> &[SeqInfoset] {
        &self.infosets
    }

    pub fn last_action(&self, seq: usize) -> Option<(usize, usize)> {
        self.last_action[seq]
    }

    /// Sparse rows of `E_p`, entries `(sequence, coefficient)`.
    pub fn constraint_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Sequences forced to zero by pins, ascending.
    pub fn pinned(&self) -> &[usize] {
        &self.pinned
    }

    /// Dense copy of `E_p`.
    pub fn constraint_matrix(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.num_sequences]; self.rows.len()];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[r][c] += v;
            }
        }
        m
    }

    /// `max |E_p x - e_p|`.
    pub fn flow_residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, &b)| (row.iter().map(|&(c, v)| v * x[c]).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    }

    /// Readable name of a sequence, e.g. `"K/kb:call"`.
    pub fn sequence_label(&self, seq: usize) -> String {
        match self.last_action[seq] {
            None => "∅".into(),
            Some((s, a)) => format!("{}:{}", self.infosets[s].label, self.infosets[s].actions[a]),
        }
    }
}

/// One terminal: the sequence each player played to reach it, and the payoff
/// vector multiplied by the chance probability of the path.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffEntry {
    pub sequences: Vec<usize>,
    pub payoffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFormGame {
    players: Vec<PlayerSequences>,
    entries: Vec<PayoffEntry>,
}

impl SequenceFormGame {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn player(&self, p: usize) -> &PlayerSequences {
        &self.players[p]
    }

    pub fn players(&self) -> &[PlayerSequences] {
        &self.players
    }

    pub fn entries(&self) -> &[PayoffEntry] {
        &self.entries
    }

    pub fn dims(&self) -> Vec<usize> {
        self.players.iter().map(|p| p.num_sequences).collect()
    }

    pub fn num_pin_rows(&self) -> usize {
        self.players.iter().map(|p| p.pinned.len()).sum()
    }

    /// Multilinear payoff `Σ_e payoff_e ∏_p x_{p, i_p}` for every player.
    pub fn expected_payoffs(&self, plans: &[Vec<f64>]) -> Vec<f64> {
        let n = self.num_players();
        let mut out = vec![0.0; n];
        for e in &self.entries {
            let w: f64 = e
                .sequences
                .iter()
                .enumerate()
                .map(|(p, &s)| plans[p][s])
                .product();
            if w != 0.0 {
                for p in 0..n {
                    out[p] += w * e.payoffs[p];
                }
            }
        }
        out
    }

    /// `max |payoff_e|` over all entries and players.
    pub fn max_abs_payoff(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| e.payoffs.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero_sum(&self, tol: f64) -> bool {
        self.entries
            .iter()
            .all(|e| e.payoffs.iter().sum::<f64>().abs() <= tol)
    }
}

/// Build the sequence form of a perfect-recall game. Pins become extra
/// `x = 0` rows on the sequences ending in a pinned action.
pub fn build_sequence_form(
    game: &ExtensiveFormGame,
    pins: Option<&PinList>,
) -> Result<SequenceFormGame, GameError> {
    validate_perfect_recall(game)?;
    let n = game.num_players();
    let mut players: Vec<PlayerSequences> = (0..n)
        .map(|p| PlayerSequences {
            num_sequences: 1,
            infosets: Vec::with_capacity(game.player_infosets(p).len()),
            last_action: vec![None],
            rows: vec![vec![(0, 1.0)]],
            rhs: vec![1.0],
            pinned: Vec::new(),
        })
        .collect();
    // global infoset -> per-player infoset index in `players[p].infosets`
    let mut seq_infoset = vec![usize::MAX; game.infosets().len()];
    let mut entries = Vec::with_capacity(game.stats().terminal);
    let mut current = vec![0usize; n];
    walk(
        game,
        game.root(),
        Number::from(1),
        &mut current,
        &mut players,
        &mut seq_infoset,
        &mut entries,
    )?;
    if let Some(pins) = pins {
        for (s, a) in pins.resolve(game)? {
            let info = game.infoset(s);
            let local = seq_infoset[s];
            if local == usize::MAX {
                continue;
            }
            let ps = &mut players[info.player];
            let seq = ps.infosets[local].sequences[a];
            if !ps.pinned.contains(&seq) {
                ps.pinned.push(seq);
            }
        }
        for ps in &mut players {
            ps.pinned.sort_unstable();
        }
    }
    Ok(SequenceFormGame { players, entries })
}

fn times(a: Number, b: Number) -> Number {
    match (a, b) {
        (Number::Exact(x), Number::Exact(y)) => x
            .checked_mul(&y)
            .map(Number::Exact)
            .unwrap_or(Number::Float(a.to_f64() * b.to_f64())),
        _ => Number::Float(a.to_f64() * b.to_f64()),
    }
}

fn walk(
    game: &ExtensiveFormGame,
    id: usize,
    weight: Number,
    current: &mut Vec<usize>,
    players: &mut [PlayerSequences],
    seq_infoset: &mut [usize],
    entries: &mut Vec<PayoffEntry>,
) -> Result<(), GameError> {
    match game.node(id) {
        Node::Terminal { payoffs, .. } => {
            entries.push(PayoffEntry {
                sequences: current.clone(),
                payoffs: payoffs.iter().map(|&v| times(weight, v).to_f64()).collect(),
            });
        }
        Node::Chance { outcomes, .. } => {
            for o in outcomes {
                walk(
                    game,
                    o.child,
                    times(weight, o.prob),
                    current,
                    players,
                    seq_infoset,
                    entries,
                )?;
            }
        }
        Node::Decision {
            infoset, children, ..
        } => {
            let info = game.infoset(*infoset);
            let p = info.player;
            if info.actions.is_empty() {
                return Err(GameError::Semantic {
                    path: game.path_to(id),
                    message: "information set with no actions".into(),
                });
            }
            if seq_infoset[*infoset] == usize::MAX {
                let ps = &mut players[p];
                let local = ps.infosets.len();
                let first = ps.num_sequences;
                let k = info.actions.len();
                let sequences: Vec<usize> = (first..first + k).collect();
                ps.num_sequences += k;
                for a in 0..k {
                    ps.last_action.push(Some((local, a)));
                }
                let parent = current[p];
                let mut row = vec![(parent, -1.0)];
                row.extend(sequences.iter().map(|&s| (s, 1.0)));
                let row_index = ps.rows.len();
                ps.rows.push(row);
                ps.rhs.push(0.0);
                ps.infosets.push(SeqInfoset {
                    label: info.label.clone(),
                    actions: info.actions.clone(),
                    row: row_index,
                    parent: Some(parent),
                    sequences,
                });
                seq_infoset[*infoset] = local;
            }
            let local = seq_infoset[*infoset];
            let saved = current[p];
            for (a, &c) in children.iter().enumerate() {
                current[p] = players[p].infosets[local].sequences[a];
                walk(game, c, weight, current, players, seq_infoset, entries)?;
            }
            current[p] = saved;
        }
    }
    Ok(())
}

/// Strategic-form games as a degenerate sequence form: one simplex row of
/// ones per player and no empty sequence.
pub fn embed_strategic_form(g: &StrategicFormGame) -> SequenceFormGame {
    let players = g
        .strategies()
        .iter()
        .enumerate()
        .map(|(p, &m)| PlayerSequences {
            num_sequences: m,
            infosets: vec![SeqInfoset {
                label: format!("P{}", p + 1),
                actions: (1..=m).map(|s| format!("s{s}")).collect(),
                row: 0,
                parent: None,
                sequences: (0..m).collect(),
            }],
            last_action: (0..m).map(|a| Some((0, a))).collect(),
            rows: vec![(0..m).map(|s| (s, 1.0)).collect()],
            rhs: vec![1.0],
            pinned: Vec::new(),
        })
        .collect();
    let entries = (0..g.joint_size())
        .map(|k| PayoffEntry {
            sequences: g.joint(k),
            payoffs: (0..g.num_players()).map(|p| g.payoff_table(p)[k]).collect(),
        })
        .collect();
    SequenceFormGame { players, entries }
}

/// Per-player, per-infoset action distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralStrategy {
    pub probs: Vec<Vec<Vec<f64>>>,
    /// Set where the plan gave the information set (near) zero reach.
    pub unreachable: Vec<Vec<bool>>,
}

impl BehavioralStrategy {
    /// Uniform play everywhere, avoiding pinned actions.
    pub fn uniform(sf: &SequenceFormGame) -> Self {
        let probs = sf
            .players
            .iter()
            .map(|ps| {
                ps.infosets
                    .iter()
                    .map(|s| uniform_unpinned(ps, s))
                    .collect()
            })
            .collect();
        let unreachable = sf
            .players
            .iter()
            .map(|ps| vec![false; ps.infosets.len()])
            .collect();
        BehavioralStrategy { probs, unreachable }
    }

    pub fn probability(&self, player: usize, infoset: usize, action: usize) -> f64 {
        self.probs[player][infoset][action]
    }
}

fn uniform_unpinned(ps: &PlayerSequences, s: &SeqInfoset) -> Vec<f64> {
    let free = s
        .sequences
        .iter()
        .filter(|q| !ps.pinned.contains(q))
        .count()
        .max(1);
    s.sequences
        .iter()
        .map(|q| {
            if ps.pinned.contains(q) && free < s.sequences.len() {
                0.0
            } else {
                1.0 / free as f64
            }
        })
        .collect()
}

/// Convert realization plans to behavioral strategies. Information sets whose
/// parent realization is at most [`REACH_TOLERANCE`] get the uniform
/// distribution over unpinned actions and are flagged unreachable.
pub fn realization_to_behavioral(
    sf: &SequenceFormGame,
    plans: &[Vec<f64>],
) -> Result<BehavioralStrategy, GameError> {
    if plans.len() != sf.num_players() {
        return Err(GameError::Strategy(format!(
            "expected {} plans, got {}",
            sf.num_players(),
            plans.len()
        )));
    }
    let mut probs = Vec::with_capacity(plans.len());
    let mut unreachable = Vec::with_capacity(plans.len());
    for (p, (ps, x)) in sf.players.iter().zip(plans).enumerate() {
        if x.len() != ps.num_sequences {
            return Err(GameError::Strategy(format!(
                "player {} plan has length {}, expected {}",
                p + 1,
                x.len(),
                ps.num_sequences
            )));
        }
        let res = ps.flow_residual(x);
        if res > PLAN_TOLERANCE || x.iter().any(|&v| v < -PLAN_TOLERANCE || !v.is_finite()) {
            return Err(GameError::Strategy(format!(
                "player {} plan violates the flow constraints (residual {res:.3e})",
                p + 1
            )));
        }
        let mut pp = Vec::with_capacity(ps.infosets.len());
        let mut pu = Vec::with_capacity(ps.infosets.len());
        for s in &ps.infosets {
            let reach = s.parent.map_or(1.0, |q| x[q]);
            let mass: f64 = s.sequences.iter().map(|&q| x[q].max(0.0)).sum();
            if reach <= REACH_TOLERANCE || mass <= 0.0 {
                pp.push(uniform_unpinned(ps, s));
                pu.push(true);
            } else {
                // Flow conservation makes `mass` equal to `reach`; dividing by
                // the children's mass yields an exact distribution.
                pp.push(s.sequences.iter().map(|&q| x[q].max(0.0) / mass).collect());
                pu.push(false);
            }
        }
        probs.push(pp);
        unreachable.push(pu);
    }
    Ok(BehavioralStrategy { probs, unreachable })
}

/// Realization of each sequence as the product of its action probabilities.
pub fn behavioral_to_realization(
    sf: &SequenceFormGame,
    b: &BehavioralStrategy,
) -> Result<Vec<Vec<f64>>, GameError> {
    if b.probs.len() != sf.num_players() {
        return Err(GameError::Strategy("player count mismatch".into()));
    }
    let mut plans = Vec::with_capacity(sf.num_players());
    for (p, ps) in sf.players.iter().enumerate() {
        let bp = &b.probs[p];
        if bp.len() != ps.infosets.len() {
            return Err(GameError::Strategy(format!(
                "player {} has {} distributions, expected {}",
                p + 1,
                bp.len(),
                ps.infosets.len()
            )));
        }
        let mut x = vec![0.0; ps.num_sequences];
        if ps.infosets.iter().any(|s| s.parent.is_some()) {
            x[0] = 1.0;
        }
        // Parent sequences are always numbered before their children.
        for (s, dist) in ps.infosets.iter().zip(bp) {
            if dist.len() != s.actions.len()
                || dist.iter().any(|&v| !(v >= -1e-12) || !v.is_finite())
                || (dist.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return Err(GameError::Strategy(format!(
                    "malformed distribution at information set {:?}",
                    s.label
                )));
            }
            let reach = s.parent.map_or(1.0, |q| x[q]);
            for (&q, &v) in s.sequences.iter().zip(dist) {
                x[q] = reach * v.max(0.0);
            }
        }
        plans.push(x);
    }
    Ok(plans)
}

/// A strategy profile in both representations.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    pub realization: Vec<Vec<f64>>,
    pub behavioral: BehavioralStrategy,
    pub verified_epsilon: Option<f64>,
}

impl StrategyProfile {
    pub fn from_behavioral(sf: &SequenceFormGame, b: BehavioralStrategy) -> Result<Self, GameError> {
        let realization = behavioral_to_realization(sf, &b)?;
        Ok(StrategyProfile {
            realization,
            behavioral: b,
            verified_epsilon: None,
        })
    }

    /// Normalize a plan through the behavioral form so that the stored
    /// realization satisfies the flow constraints up to rounding.
    pub fn from_realization(sf: &SequenceFormGame, plans: &[Vec<f64>]) -> Result<Self, GameError> {
        let b = realization_to_behavioral(sf, plans)?;
        Self::from_behavioral(sf, b)
    }

    pub fn to_json(&self, sf: &SequenceFormGame) -> String {
        let raw = |v: f64| RawValue::from_string(format!("{v:.16e}")).expect("valid number");
        let players = sf
            .players
            .iter()
            .enumerate()
            .map(|(p, ps)| {
                let mut strategy = Vec::new();
                for (si, s) in ps.infosets.iter().enumerate() {
                    for (a, action) in s.actions.iter().enumerate() {
                        strategy.push(ActionOut {
                            infoset: &s.label,
                            index: si,
                            action,
                            probability: raw(self.behavioral.probs[p][si][a]),
                            reachable: !self.behavioral.unreachable[p][si],
                        });
                    }
                }
                PlayerOut {
                    player: p + 1,
                    strategy,
                    realization: self.realization[p].iter().map(|&v| raw(v)).collect(),
                }
            })
            .collect();
        let out = ProfileOut {
            epsilon: self.verified_epsilon.map(raw),
            players,
        };
        serde_json::to_string_pretty(&out).expect("serializable")
    }

    /// Read a profile written by [`StrategyProfile::to_json`]. Behavioral
    /// probabilities are authoritative; the realization is recomputed.
    pub fn from_json(sf: &SequenceFormGame, text: &str) -> Result<Self, GameError> {
        let input: ProfileIn = serde_json::from_str(text)?;
        if input.players.len() != sf.num_players() {
            return Err(GameError::Strategy(format!(
                "profile has {} players, game has {}",
                input.players.len(),
                sf.num_players()
            )));
        }
        let mut probs: Vec<Vec<Vec<f64>>> = sf
            .players
            .iter()
            .map(|ps| ps.infosets.iter().map(|s| vec![f64::NAN; s.actions.len()]).collect())
            .collect();
        for (p, pl) in input.players.iter().enumerate() {
            let ps = &sf.players[p];
            for a in &pl.strategy {
                let s = ps.infosets.get(a.index).ok_or_else(|| {
                    GameError::Strategy(format!("player {} has no information set {}", p + 1, a.index))
                })?;
                if s.label != a.infoset {
                    return Err(GameError::Strategy(format!(
                        "information set {} is {:?} in the game but {:?} in the profile",
                        a.index, s.label, a.infoset
                    )));
                }
                let k = s.actions.iter().position(|x| *x == a.action).ok_or_else(|| {
                    GameError::Strategy(format!("unknown action {:?} at {:?}", a.action, s.label))
                })?;
                probs[p][a.index][k] = a.probability;
            }
        }
        if probs.iter().flatten().flatten().any(|v| v.is_nan()) {
            return Err(GameError::Strategy("profile does not cover every action".into()));
        }
        let unreachable = input
            .players
            .iter()
            .zip(&sf.players)
            .map(|(pl, ps)| {
                let mut u = vec![false; ps.infosets.len()];
                for a in &pl.strategy {
                    u[a.index] |= !a.reachable;
                }
                u
            })
            .collect();
        let mut profile = StrategyProfile::from_behavioral(sf, BehavioralStrategy { probs, unreachable })?;
        profile.verified_epsilon = input.epsilon;
        Ok(profile)
    }
}

#[derive(Serialize)]
struct ProfileOut<'a> {
    epsilon: Option<Box<RawValue>>,
    players: Vec<PlayerOut<'a>>,
}

#[derive(Serialize)]
struct PlayerOut<'a> {
    player: usize,
    strategy: Vec<ActionOut<'a>>,
    realization: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
struct ActionOut<'a> {
    infoset: &'a str,
    index: usize,
    action: &'a str,
    probability: Box<RawValue>,
    reachable: bool,
}

#[derive(Deserialize)]
struct ProfileIn {
    epsilon: Option<f64>,
    players: Vec<PlayerIn>,
}

#[derive(Deserialize)]
struct PlayerIn {
    strategy: Vec<ActionIn>,
}

#[derive(Deserialize)]
struct ActionIn {
    infoset: String,
    index: usize,
    action: String,
    probability: f64,
    #[serde(default = "yes")]
    reachable: bool,
}

fn yes() -> bool {
    true
}
