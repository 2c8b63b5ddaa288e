//! Extensive-form and strategic-form game models.
//!
//! Nodes are stored in depth-first (preorder) order with the root at index 0.
//! Information sets are numbered in order of first appearance in that walk,
//! both globally and per player.

mod efg;
mod kuhn;
mod number;
mod pins;
mod recall;
mod strategic;

use std::collections::HashMap;
use std::fmt;

pub use efg::{parse_efg, write_efg};
pub use kuhn::{generate_kuhn, generate_kuhn2, generate_kuhn3, kuhn3_pins};
pub use number::Number;
pub use pins::{prune_pins, Pin, PinList};
pub use recall::{validate_perfect_recall, RecallViolation};
pub use strategic::{generate_random_sfg, StrategicFormGame};

use crate::error::GameError;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct ChanceOutcome {
    pub label: String,
    pub prob: Number,
    pub child: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Chance {
        label: String,
        outcomes: Vec<ChanceOutcome>,
    },
    Decision {
        label: String,
        /// Global information-set index.
        infoset: usize,
        children: Vec<NodeId>,
    },
    Terminal {
        label: String,
        payoffs: Vec<Number>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Infoset {
    pub player: usize,
    /// Position among the owning player's information sets.
    pub index: usize,
    pub label: String,
    pub actions: Vec<String>,
    pub nodes: Vec<NodeId>,
}

/// Node counts used throughout tests and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TreeStats {
    pub total: usize,
    pub decision: usize,
    pub terminal: usize,
    pub chance: usize,
    pub infosets: usize,
}

impl fmt::Display for TreeStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} nodes ({} decision, {} terminal, {} chance), {} infosets",
            self.total, self.decision, self.terminal, self.chance, self.infosets
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensiveFormGame {
    title: String,
    player_names: Vec<String>,
    nodes: Vec<Node>,
    parents: Vec<Option<NodeId>>,
    infosets: Vec<Infoset>,
    player_infosets: Vec<Vec<usize>>,
}

/// Recursive description of a game tree, used to build an [`ExtensiveFormGame`].
///
/// Decision nodes name their information set through `key`; nodes sharing a
/// `(player, key)` pair land in the same information set.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Chance {
        label: String,
        outcomes: Vec<(String, Number, TreeNode)>,
    },
    Decision {
        label: String,
        player: usize,
        key: String,
        infoset_label: String,
        actions: Vec<(String, TreeNode)>,
    },
    Terminal {
        label: String,
        payoffs: Vec<Number>,
    },
}

impl ExtensiveFormGame {
    pub fn from_tree(
        title: impl Into<String>,
        player_names: Vec<String>,
        root: TreeNode,
    ) -> Result<Self, GameError> {
        if player_names.is_empty() {
            return Err(GameError::Semantic {
                path: String::new(),
                message: "game needs at least one player".into(),
            });
        }
        let mut builder = Builder {
            n_players: player_names.len(),
            nodes: Vec::new(),
            parents: Vec::new(),
            infosets: Vec::new(),
            player_infosets: vec![Vec::new(); player_names.len()],
            keys: HashMap::new(),
            path: Vec::new(),
        };
        builder.add(root, None)?;
        Ok(ExtensiveFormGame {
            title: title.into(),
            player_names,
            nodes: builder.nodes,
            parents: builder.parents,
            infosets: builder.infosets,
            player_infosets: builder.player_infosets,
        })
    }

    /// Rebuild the recursive description. `from_tree(to_tree())` reproduces the game.
    pub fn to_tree(&self) -> TreeNode {
        self.subtree(self.root(), &|_, _| true)
    }

    pub(crate) fn subtree(&self, id: NodeId, keep: &dyn Fn(usize, usize) -> bool) -> TreeNode {
        match &self.nodes[id] {
            Node::Chance { label, outcomes } => TreeNode::Chance {
                label: label.clone(),
                outcomes: outcomes
                    .iter()
                    .map(|o| (o.label.clone(), o.prob, self.subtree(o.child, keep)))
                    .collect(),
            },
            Node::Decision {
                label,
                infoset,
                children,
            } => {
                let info = &self.infosets[*infoset];
                TreeNode::Decision {
                    label: label.clone(),
                    player: info.player,
                    key: format!("#{}", info.index),
                    infoset_label: info.label.clone(),
                    actions: children
                        .iter()
                        .enumerate()
                        .filter(|(a, _)| keep(*infoset, *a))
                        .map(|(a, &c)| (info.actions[a].clone(), self.subtree(c, keep)))
                        .collect(),
                }
            }
            Node::Terminal { label, payoffs } => TreeNode::Terminal {
                label: label.clone(),
                payoffs: payoffs.clone(),
            },
        }
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn player_names(&self) -> &[String] {
        &self.player_names
    }

    pub fn num_players(&self) -> usize {
        self.player_names.len()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parents[id]
    }

    pub fn infosets(&self) -> &[Infoset] {
        &self.infosets
    }

    pub fn infoset(&self, global: usize) -> &Infoset {
        &self.infosets[global]
    }

    /// Global indices of `player`'s information sets, in per-player order.
    pub fn player_infosets(&self, player: usize) -> &[usize] {
        &self.player_infosets[player]
    }

    /// Look up a global infoset index from `(player, per-player index)`.
    pub fn infoset_id(&self, player: usize, index: usize) -> Option<usize> {
        self.player_infosets.get(player)?.get(index).copied()
    }

    pub fn stats(&self) -> TreeStats {
        let mut s = TreeStats {
            total: self.nodes.len(),
            infosets: self.infosets.len(),
            ..Default::default()
        };
        for n in &self.nodes {
            match n {
                Node::Chance { .. } => s.chance += 1,
                Node::Decision { .. } => s.decision += 1,
                Node::Terminal { .. } => s.terminal += 1,
            }
        }
        s
    }

    /// Terminal nodes in preorder.
    pub fn terminals(&self) -> impl Iterator<Item = (NodeId, &[Number])> {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            Node::Terminal { payoffs, .. } => Some((i, payoffs.as_slice())),
            _ => None,
        })
    }

    /// Action labels from the root to `id`, joined with `/`.
    pub fn path_to(&self, id: NodeId) -> String {
        let mut labels = Vec::new();
        let mut cur = id;
        while let Some(p) = self.parents[cur] {
            let label = match &self.nodes[p] {
                Node::Chance { outcomes, .. } => outcomes
                    .iter()
                    .find(|o| o.child == cur)
                    .map(|o| o.label.clone()),
                Node::Decision {
                    infoset, children, ..
                } => children
                    .iter()
                    .position(|&c| c == cur)
                    .map(|a| self.infosets[*infoset].actions[a].clone()),
                Node::Terminal { .. } => None,
            };
            labels.push(label.unwrap_or_default());
            cur = p;
        }
        labels.reverse();
        labels.join("/")
    }

    /// True when every terminal payoff vector sums to zero.
    pub fn is_zero_sum(&self) -> bool {
        self.terminals().all(|(_, pay)| {
            let exact: Option<num_rational::Rational64> =
                pay.iter().try_fold(num_rational::Rational64::from_integer(0), |acc, v| {
                    v.as_rational().map(|r| acc + r)
                });
            match exact {
                Some(sum) => sum == num_rational::Rational64::from_integer(0),
                None => pay.iter().map(Number::to_f64).sum::<f64>().abs() <= 1e-12,
            }
        })
    }
}

struct Builder {
    n_players: usize,
    nodes: Vec<Node>,
    parents: Vec<Option<NodeId>>,
    infosets: Vec<Infoset>,
    player_infosets: Vec<Vec<usize>>,
    keys: HashMap<(usize, String), usize>,
    path: Vec<String>,
}

impl Builder {
    fn err(&self, message: impl Into<String>) -> GameError {
        GameError::Semantic {
            path: self.path.join("/"),
            message: message.into(),
        }
    }

    fn add(&mut self, tree: TreeNode, parent: Option<NodeId>) -> Result<NodeId, GameError> {
        let id = self.nodes.len();
        self.parents.push(parent);
        match tree {
            TreeNode::Terminal { label, payoffs } => {
                if payoffs.len() != self.n_players {
                    return Err(self.err(format!(
                        "terminal has {} payoffs, expected {}",
                        payoffs.len(),
                        self.n_players
                    )));
                }
                if payoffs.iter().any(|p| !p.to_f64().is_finite()) {
                    return Err(self.err("non-finite payoff"));
                }
                self.nodes.push(Node::Terminal { label, payoffs });
            }
            TreeNode::Chance { label, outcomes } => {
                if outcomes.is_empty() {
                    return Err(self.err("chance node without outcomes"));
                }
                check_probabilities(outcomes.iter().map(|o| o.1))
                    .map_err(|m| self.err(m))?;
                self.nodes.push(Node::Chance {
                    label,
                    outcomes: Vec::new(),
                });
                let mut done = Vec::with_capacity(outcomes.len());
                for (olabel, prob, child) in outcomes {
                    self.path.push(olabel.clone());
                    let c = self.add(child, Some(id))?;
                    self.path.pop();
                    done.push(ChanceOutcome {
                        label: olabel,
                        prob,
                        child: c,
                    });
                }
                self.nodes[id] = Node::Chance {
                    label: match &self.nodes[id] {
                        Node::Chance { label, .. } => label.clone(),
                        _ => unreachable!(),
                    },
                    outcomes: done,
                };
            }
            TreeNode::Decision {
                label,
                player,
                key,
                infoset_label,
                actions,
            } => {
                if player >= self.n_players {
                    return Err(self.err(format!("player {} out of range", player + 1)));
                }
                if actions.is_empty() {
                    return Err(self.err("decision node without actions"));
                }
                let labels: Vec<String> = actions.iter().map(|(a, _)| a.clone()).collect();
                let infoset = match self.keys.get(&(player, key.clone())) {
                    Some(&s) => {
                        if self.infosets[s].actions != labels {
                            return Err(self.err(format!(
                                "information set {:?} has inconsistent actions {:?} vs {:?}",
                                self.infosets[s].label, self.infosets[s].actions, labels
                            )));
                        }
                        s
                    }
                    None => {
                        let s = self.infosets.len();
                        let index = self.player_infosets[player].len();
                        self.infosets.push(Infoset {
                            player,
                            index,
                            label: infoset_label,
                            actions: labels,
                            nodes: Vec::new(),
                        });
                        self.player_infosets[player].push(s);
                        self.keys.insert((player, key), s);
                        s
                    }
                };
                self.infosets[infoset].nodes.push(id);
                self.nodes.push(Node::Decision {
                    label,
                    infoset,
                    children: Vec::new(),
                });
                let mut children = Vec::with_capacity(actions.len());
                for (alabel, child) in actions {
                    self.path.push(alabel);
                    children.push(self.add(child, Some(id))?);
                    self.path.pop();
                }
                if let Node::Decision { children: c, .. } = &mut self.nodes[id] {
                    *c = children;
                }
            }
        }
        Ok(id)
    }
}

fn check_probabilities(probs: impl Iterator<Item = Number> + Clone) -> Result<(), String> {
    if probs.clone().any(|p| p.to_f64() < 0.0 || !p.to_f64().is_finite()) {
        return Err("negative chance probability".into());
    }
    let exact: Option<num_rational::Rational64> = probs
        .clone()
        .try_fold(num_rational::Rational64::from_integer(0), |acc, p| {
            p.as_rational().map(|r| acc + r)
        });
    match exact {
        Some(sum) if sum != num_rational::Rational64::from_integer(1) => {
            Err(format!("chance probabilities sum to {sum}, not 1"))
        }
        Some(_) => Ok(()),
        None => {
            let sum: f64 = probs.map(|p| p.to_f64()).sum();
            if (sum - 1.0).abs() > 1e-12 {
                Err(format!("chance probabilities sum to {sum}, not 1"))
            } else {
                Ok(())
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn one_decision(actions: usize) -> ExtensiveFormGame {
        let root = TreeNode::Decision {
            label: String::new(),
            player: 0,
            key: "root".into(),
            infoset_label: "root".into(),
            actions: (0..actions)
                .map(|a| {
                    (
                        format!("a{a}"),
                        TreeNode::Terminal {
                            label: String::new(),
                            payoffs: vec![Number::from(a as i64)],
                        },
                    )
                })
                .collect(),
        };
        ExtensiveFormGame::from_tree("one", vec!["P1".into()], root).unwrap()
    }

    #[test]
    fn smallest_decision_game() {
        let g = one_decision(2);
        let s = g.stats();
        assert_eq!((s.total, s.decision, s.terminal, s.infosets), (3, 1, 2, 1));
        assert_eq!(g.path_to(2), "a1");
    }

    #[test]
    fn bad_chance_probabilities_rejected() {
        let leaf = || TreeNode::Terminal {
            label: String::new(),
            payoffs: vec![Number::from(0)],
        };
        let root = TreeNode::Chance {
            label: String::new(),
            outcomes: vec![
                ("a".into(), Number::ratio(1, 2), leaf()),
                ("b".into(), Number::ratio(1, 3), leaf()),
            ],
        };
        let err = ExtensiveFormGame::from_tree("x", vec!["P".into()], root).unwrap_err();
        assert!(matches!(err, GameError::Semantic { .. }), "{err}");
    }

    #[test]
    fn inconsistent_infoset_actions_report_path() {
        let leaf = || TreeNode::Terminal {
            label: String::new(),
            payoffs: vec![Number::from(0)],
        };
        let dec = |acts: &[&str]| TreeNode::Decision {
            label: String::new(),
            player: 0,
            key: "s".into(),
            infoset_label: "s".into(),
            actions: acts.iter().map(|a| (a.to_string(), leaf())).collect(),
        };
        let root = TreeNode::Chance {
            label: String::new(),
            outcomes: vec![
                ("h".into(), Number::ratio(1, 2), dec(&["x", "y"])),
                ("t".into(), Number::ratio(1, 2), dec(&["x", "z"])),
            ],
        };
        match ExtensiveFormGame::from_tree("x", vec!["P".into()], root).unwrap_err() {
            GameError::Semantic { path, .. } => assert_eq!(path, "t"),
            e => panic!("unexpected {e}"),
        }
    }
}
