use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ExtensiveFormGame, Number, TreeNode};
use crate::error::GameError;

/// An n-player normal-form game. Payoff arrays are flattened in row-major
/// joint-index order (player 1's strategy varies slowest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategicFormGame {
    players: usize,
    strategies: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
}

impl StrategicFormGame {
    pub fn new(strategies: Vec<usize>, payoffs: Vec<Vec<f64>>) -> Result<Self, GameError> {
        let g = StrategicFormGame {
            players: strategies.len(),
            strategies,
            payoffs,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), GameError> {
        if self.players == 0 || self.strategies.len() != self.players {
            return Err(GameError::Strategic("player count mismatch".into()));
        }
        if self.strategies.iter().any(|&m| m == 0) {
            return Err(GameError::Strategic("every player needs a strategy".into()));
        }
        let size = self.joint_size();
        if self.payoffs.len() != self.players || self.payoffs.iter().any(|t| t.len() != size) {
            return Err(GameError::Strategic(format!(
                "expected {} payoff arrays of length {size}",
                self.players
            )));
        }
        if self.payoffs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GameError::Strategic("non-finite payoff".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, GameError> {
        let g: StrategicFormGame = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn num_players(&self) -> usize {
        self.players
    }

    pub fn strategies(&self) -> &[usize] {
        &self.strategies
    }

    pub fn joint_size(&self) -> usize {
        self.strategies.iter().product()
    }

    pub fn payoff_table(&self, player: usize) -> &[f64] {
        &self.payoffs[player]
    }

    /// Decode a flat joint index into per-player strategy indices.
    pub fn joint(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.players];
        for p in (0..self.players).rev() {
            out[p] = index % self.strategies[p];
            index /= self.strategies[p];
        }
        out
    }

    /// Tree form: players move in order, each in a single information set.
    pub fn to_extensive(&self) -> ExtensiveFormGame {
        fn level(g: &StrategicFormGame, p: usize, prefix: usize) -> TreeNode {
            if p == g.players {
                return TreeNode::Terminal {
                    label: String::new(),
                    payoffs: (0..g.players)
                        .map(|q| Number::Float(g.payoffs[q][prefix]))
                        .collect(),
                };
            }
            TreeNode::Decision {
                label: String::new(),
                player: p,
                key: "s".into(),
                infoset_label: format!("P{}", p + 1),
                actions: (0..g.strategies[p])
                    .map(|s| {
                        (
                            format!("s{}", s + 1),
                            level(g, p + 1, prefix * g.strategies[p] + s),
                        )
                    })
                    .collect(),
            }
        }
        let names = (1..=self.players).map(|p| format!("Player {p}")).collect();
        ExtensiveFormGame::from_tree("strategic form", names, level(self, 0, 0))
            .expect("strategic tree is well formed")
    }
}

/// Payoffs i.i.d. uniform on [0, 1) from a ChaCha8 stream seeded with `seed`.
pub fn generate_random_sfg(players: usize, strategies: usize, seed: u64) -> StrategicFormGame {
    assert!(players >= 2 && strategies >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = strategies.pow(players as u32);
    let payoffs = (0..players)
        .map(|_| (0..size).map(|_| rng.gen::<f64>()).collect())
        .collect();
    StrategicFormGame {
        players,
        strategies: vec![strategies; players],
        payoffs,
    }
}
