use std::fmt;

use super::{ExtensiveFormGame, Node};

/// Two nodes of one information set reached through different own histories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecallViolation {
    pub player: usize,
    pub infoset: String,
    pub first: String,
    pub second: String,
}

impl fmt::Display for RecallViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "perfect recall violated for player {} at information set {:?}: histories [{}] and [{}]",
            self.player + 1,
            self.infoset,
            self.first,
            self.second
        )
    }
}

impl std::error::Error for RecallViolation {}

/// Check that every node of each information set is preceded by the same
/// sequence of the owner's own (information set, action) choices.
pub fn validate_perfect_recall(game: &ExtensiveFormGame) -> Result<(), RecallViolation> {
    let n = game.num_players();
    let mut seen: Vec<Option<Vec<(usize, usize)>>> = vec![None; game.infosets().len()];
    let mut histories: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    walk(game, game.root(), &mut histories, &mut seen)
}

fn walk(
    game: &ExtensiveFormGame,
    id: usize,
    hist: &mut Vec<Vec<(usize, usize)>>,
    seen: &mut Vec<Option<Vec<(usize, usize)>>>,
) -> Result<(), RecallViolation> {
    match game.node(id) {
        Node::Terminal { .. } => Ok(()),
        Node::Chance { outcomes, .. } => {
            for o in outcomes {
                walk(game, o.child, hist, seen)?;
            }
            Ok(())
        }
        Node::Decision {
            infoset, children, ..
        } => {
            let p = game.infoset(*infoset).player;
            match &seen[*infoset] {
                None => seen[*infoset] = Some(hist[p].clone()),
                Some(prev) if *prev != hist[p] => {
                    let show = |h: &[(usize, usize)]| {
                        h.iter()
                            .map(|&(s, a)| {
                                let info = game.infoset(s);
                                format!("{}:{}", info.label, info.actions[a])
                            })
                            .collect::<Vec<_>>()
                            .join(", ")
                    };
                    return Err(RecallViolation {
                        player: p,
                        infoset: game.infoset(*infoset).label.clone(),
                        first: show(prev),
                        second: show(&hist[p]),
                    });
                }
                Some(_) => {}
            }
            for (a, &c) in children.iter().enumerate() {
                hist[p].push((*infoset, a));
                walk(game, c, hist, seen)?;
                hist[p].pop();
            }
            Ok(())
        }
    }
}
