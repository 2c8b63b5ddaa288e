//! Exact evaluation of a behavioral profile on the game tree: expected
//! payoffs, best-response values and the resulting regret epsilon.
//!
//! Nothing here touches the complementarity system or the LP machinery; the
//! solver's acceptance decisions are made against these numbers.

use crate::error::GameError;
use crate::game::{ExtensiveFormGame, Node};
use crate::sequence::BehavioralStrategy;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn check_shape(game: &ExtensiveFormGame, b: &BehavioralStrategy) -> Result<(), GameError> {
    if b.probs.len() != game.num_players() {
        return Err(GameError::Strategy(format!(
            "profile has {} players, game has {}",
            b.probs.len(),
            game.num_players()
        )));
    }
    for p in 0..game.num_players() {
        let sets = game.player_infosets(p);
        if b.probs[p].len() != sets.len() {
            return Err(GameError::Strategy(format!(
                "player {} has {} distributions, game has {} information sets",
                p + 1,
                b.probs[p].len(),
                sets.len()
            )));
        }
        for (dist, &s) in b.probs[p].iter().zip(sets) {
            if dist.len() != game.infoset(s).actions.len() {
                return Err(GameError::Strategy(format!(
                    "information set {:?} has {} actions, profile gives {}",
                    game.infoset(s).label,
                    game.infoset(s).actions.len(),
                    dist.len()
                )));
            }
        }
    }
    Ok(())
}

fn action_prob(game: &ExtensiveFormGame, b: &BehavioralStrategy, infoset: usize, a: usize) -> f64 {
    let info = game.infoset(infoset);
    b.probs[info.player][info.index][a]
}

/// Expected payoff of every player under `b`, by a full tree walk.
pub fn expected_payoffs(game: &ExtensiveFormGame, b: &BehavioralStrategy) -> Result<Vec<f64>, GameError> {
    check_shape(game, b)?;
    Ok(node_value(game, b, game.root()))
}

fn node_value(game: &ExtensiveFormGame, b: &BehavioralStrategy, id: usize) -> Vec<f64> {
    let n = game.num_players();
    match game.node(id) {
        Node::Terminal { payoffs, .. } => payoffs.iter().map(|v| v.to_f64()).collect(),
        Node::Chance { outcomes, .. } => {
            let mut acc = vec![KahanSum::default(); n];
            for o in outcomes {
                let pr = o.prob.to_f64();
                if pr == 0.0 {
                    continue;
                }
                for (s, v) in acc.iter_mut().zip(node_value(game, b, o.child)) {
                    s.add(pr * v);
                }
            }
            acc.iter().map(KahanSum::value).collect()
        }
        Node::Decision {
            infoset, children, ..
        } => {
            let mut acc = vec![0.0; n];
            for (a, &c) in children.iter().enumerate() {
                let pr = action_prob(game, b, *infoset, a);
                if pr == 0.0 {
                    continue;
                }
                for (s, v) in acc.iter_mut().zip(node_value(game, b, c)) {
                    *s += pr * v;
                }
            }
            acc
        }
    }
}

/// Best-response value for `player` against the others' strategies in `b`,
/// together with the maximizing pure strategy (one action per information set).
pub fn best_response(
    game: &ExtensiveFormGame,
    b: &BehavioralStrategy,
    player: usize,
) -> Result<(f64, Vec<usize>), GameError> {
    check_shape(game, b)?;
    let sets = game.player_infosets(player);
    // local index of each of the player's infosets, by global id
    let mut local = vec![usize::MAX; game.infosets().len()];
    for (k, &s) in sets.iter().enumerate() {
        local[s] = k;
    }
    // Leaf value hanging directly below each own sequence: index 0 is the
    // empty sequence, (k, a) maps to offset[k] + a.
    let mut offset = Vec::with_capacity(sets.len());
    let mut total = 1;
    for &s in sets {
        offset.push(total);
        total += game.infoset(s).actions.len();
    }
    let mut leaf = vec![0.0; total];
    let mut parent_seq = vec![usize::MAX; sets.len()];
    let mut order = Vec::with_capacity(sets.len());
    let mut stack = vec![(game.root(), 1.0f64, 0usize)];
    while let Some((id, reach, seq)) = stack.pop() {
        match game.node(id) {
            Node::Terminal { payoffs, .. } => leaf[seq] += reach * payoffs[player].to_f64(),
            Node::Chance { outcomes, .. } => {
                for o in outcomes.iter().rev() {
                    let pr = o.prob.to_f64();
                    if pr != 0.0 {
                        stack.push((o.child, reach * pr, seq));
                    }
                }
            }
            Node::Decision {
                infoset, children, ..
            } => {
                let info = game.infoset(*infoset);
                if info.player == player {
                    let k = local[*infoset];
                    if parent_seq[k] == usize::MAX {
                        order.push(k);
                    }
                    parent_seq[k] = seq;
                    for (a, &c) in children.iter().enumerate().rev() {
                        stack.push((c, reach, offset[k] + a));
                    }
                } else {
                    for (a, &c) in children.iter().enumerate().rev() {
                        let pr = b.probs[info.player][info.index][a];
                        if pr != 0.0 {
                            stack.push((c, reach * pr, seq));
                        }
                    }
                }
            }
        }
    }
    // Discovery order is a preorder of the player's own sequence tree, so a
    // reverse sweep sees children first. Unreached sets contribute nothing.
    let mut value = leaf;
    let mut choice = vec![0usize; sets.len()];
    for &k in order.iter().rev() {
        let n_act = game.infoset(sets[k]).actions.len();
        let (best_a, best_v) = (0..n_act)
            .map(|a| (a, value[offset[k] + a]))
            .fold((0, f64::NEG_INFINITY), |acc, (a, v)| if v > acc.1 { (a, v) } else { acc });
        choice[k] = best_a;
        value[parent_seq[k]] += best_v;
    }
    Ok((value[0], choice))
}

pub fn best_response_value(
    game: &ExtensiveFormGame,
    b: &BehavioralStrategy,
    player: usize,
) -> Result<f64, GameError> {
    best_response(game, b, player).map(|(v, _)| v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub expected: Vec<f64>,
    pub best_response: Vec<f64>,
    pub epsilon: f64,
}

impl Evaluation {
    pub fn regret(&self, player: usize) -> f64 {
        self.best_response[player] - self.expected[player]
    }
}

/// Expected payoffs, best responses and the maximum regret (clamped at zero).
pub fn evaluate(game: &ExtensiveFormGame, b: &BehavioralStrategy) -> Result<Evaluation, GameError> {
    let expected = expected_payoffs(game, b)?;
    let best_response = (0..game.num_players())
        .map(|p| best_response_value(game, b, p))
        .collect::<Result<Vec<_>, _>>()?;
    let epsilon = expected
        .iter()
        .zip(&best_response)
        .map(|(e, br)| br - e)
        .fold(0.0f64, f64::max);
    Ok(Evaluation {
        expected,
        best_response,
        epsilon,
    })
}

pub fn epsilon(game: &ExtensiveFormGame, b: &BehavioralStrategy) -> Result<f64, GameError> {
    evaluate(game, b).map(|e| e.epsilon)
}
