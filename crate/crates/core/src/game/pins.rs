use std::collections::HashSet;

use super::ExtensiveFormGame;
use crate::error::GameError;

/// A single forced-zero action: `(player, per-player infoset index, action label)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pin {
    pub player: usize,
    pub infoset: usize,
    pub action: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PinList {
    entries: Vec<Pin>,
}

impl PinList {
    pub fn new(entries: Vec<Pin>) -> Self {
        PinList { entries }
    }

    pub fn entries(&self) -> &[Pin] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Resolve each pin to `(global infoset, action index)`, checking that the
    /// action exists and that no information set loses every action.
    pub fn resolve(&self, game: &ExtensiveFormGame) -> Result<Vec<(usize, usize)>, GameError> {
        let mut out = Vec::with_capacity(self.entries.len());
        for pin in &self.entries {
            let id = game.infoset_id(pin.player, pin.infoset).ok_or_else(|| {
                GameError::InvalidPin(format!(
                    "player {} has no information set {}",
                    pin.player + 1,
                    pin.infoset
                ))
            })?;
            let info = game.infoset(id);
            let a = info
                .actions
                .iter()
                .position(|x| *x == pin.action)
                .ok_or_else(|| {
                    GameError::InvalidPin(format!(
                        "information set {:?} has no action {:?}",
                        info.label, pin.action
                    ))
                })?;
            if !out.contains(&(id, a)) {
                out.push((id, a));
            }
        }
        for info_id in out.iter().map(|&(s, _)| s).collect::<HashSet<_>>() {
            let pinned = out.iter().filter(|&&(s, _)| s == info_id).count();
            if pinned == game.infoset(info_id).actions.len() {
                return Err(GameError::InvalidPin(format!(
                    "every action of information set {:?} is pinned",
                    game.infoset(info_id).label
                )));
            }
        }
        Ok(out)
    }
}

/// Delete every pinned action together with its subtree.
///
/// Decision nodes left with a single action stay in the tree as forced
/// decisions; the information-set partition is rebuilt over survivors.
pub fn prune_pins(game: &ExtensiveFormGame, pins: &PinList) -> Result<ExtensiveFormGame, GameError> {
    let pinned: HashSet<(usize, usize)> = pins.resolve(game)?.into_iter().collect();
    let tree = game.subtree(game.root(), &|s, a| !pinned.contains(&(s, a)));
    ExtensiveFormGame::from_tree(game.title(), game.player_names().to_vec(), tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{generate_kuhn3, kuhn3_pins, Node};

    #[test]
    fn kuhn3_reduced_counts() {
        let g = generate_kuhn3();
        let r = prune_pins(&g, &kuhn3_pins(&g)).unwrap();
        let s = r.stats();
        assert_eq!(
            (s.total, s.decision, s.terminal, s.chance, s.infosets),
            (415, 252, 162, 1, 48)
        );
    }

    #[test]
    fn empty_pins_is_identity() {
        let g = generate_kuhn3();
        let r = prune_pins(&g, &PinList::default()).unwrap();
        assert_eq!(r.stats(), g.stats());
        assert_eq!(crate::game::write_efg(&r), crate::game::write_efg(&g));
    }

    #[test]
    fn pruning_keeps_forced_decision() {
        let g = crate::game::tests::one_decision(2);
        let pins = PinList::new(vec![Pin {
            player: 0,
            infoset: 0,
            action: "a0".into(),
        }]);
        let r = prune_pins(&g, &pins).unwrap();
        let s = r.stats();
        assert_eq!((s.decision, s.terminal), (1, 1));
        assert!(matches!(r.node(0), Node::Decision { children, .. } if children.len() == 1));
        assert_eq!(r.infoset(0).actions, vec!["a1".to_string()]);
    }

    #[test]
    fn missing_action_and_full_pin_rejected() {
        let g = crate::game::tests::one_decision(2);
        let bad = PinList::new(vec![Pin {
            player: 0,
            infoset: 0,
            action: "zz".into(),
        }]);
        assert!(matches!(prune_pins(&g, &bad), Err(GameError::InvalidPin(_))));
        let all = PinList::new(
            ["a0", "a1"]
                .iter()
                .map(|a| Pin {
                    player: 0,
                    infoset: 0,
                    action: a.to_string(),
                })
                .collect(),
        );
        assert!(matches!(prune_pins(&g, &all), Err(GameError::InvalidPin(_))));
    }

    #[test]
    fn pruning_preserves_surviving_payoffs() {
        let g = generate_kuhn3();
        let r = prune_pins(&g, &kuhn3_pins(&g)).unwrap();
        let full: std::collections::HashMap<String, Vec<_>> = g
            .terminals()
            .map(|(id, p)| (g.path_to(id), p.to_vec()))
            .collect();
        for (id, p) in r.terminals() {
            assert_eq!(full[&r.path_to(id)], p.to_vec());
        }
    }
}
