//! Resolving a game argument (built-in name or file) into the objects the
//! commands need.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use seqnash::game::{generate_kuhn2, generate_kuhn3, kuhn3_pins, parse_efg, prune_pins, StrategicFormGame};
use seqnash::sequence::{build_sequence_form, embed_strategic_form, SequenceFormGame};
use seqnash::{ExtensiveFormGame, PinList};

pub const BUILTIN: [&str; 5] = ["kuhn2", "kuhn3", "kuhn3-reduced", "pennies", "rps"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PinMode {
    /// Keep the tree and add `x = 0` rows for pinned sequences.
    Constraints,
    /// Delete pinned actions and their subtrees.
    Prune,
    /// Ignore the pin list.
    None,
}

pub enum Loaded {
    Extensive { game: ExtensiveFormGame, pins: PinList },
    Strategic(StrategicFormGame),
}

pub struct Prepared {
    pub game: ExtensiveFormGame,
    pub sf: SequenceFormGame,
    pub strategic: bool,
}

pub fn pennies() -> StrategicFormGame {
    StrategicFormGame::new(vec![2, 2], vec![vec![1.0, -1.0, -1.0, 1.0], vec![-1.0, 1.0, 1.0, -1.0]])
        .expect("valid game")
}

pub fn rps() -> StrategicFormGame {
    let a = vec![0.0, -1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 1.0, 0.0];
    let b = a.iter().map(|v| -v).collect();
    StrategicFormGame::new(vec![3, 3], vec![a, b]).expect("valid game")
}

fn builtin(name: &str) -> Option<Loaded> {
    Some(match name {
        "kuhn2" => Loaded::Extensive {
            game: generate_kuhn2(),
            pins: PinList::default(),
        },
        "kuhn3" => {
            let game = generate_kuhn3();
            let pins = kuhn3_pins(&game);
            Loaded::Extensive { game, pins }
        }
        "kuhn3-reduced" => {
            let game = generate_kuhn3();
            let pruned = prune_pins(&game, &kuhn3_pins(&game)).expect("bundled pins are valid");
            Loaded::Extensive {
                game: pruned,
                pins: PinList::default(),
            }
        }
        "pennies" => Loaded::Strategic(pennies()),
        "rps" => Loaded::Strategic(rps()),
        _ => return None,
    })
}

/// A built-in name, or a path: `.json` files hold strategic-form games and
/// anything else is read as `.efg` text.
pub fn load(arg: &str) -> Result<Loaded> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        if path.extension().is_some_and(|e| e == "json") {
            let g = StrategicFormGame::from_json(&text).with_context(|| format!("parsing {arg}"))?;
            return Ok(Loaded::Strategic(g));
        }
        let game = parse_efg(&text).with_context(|| format!("parsing {arg}"))?;
        return Ok(Loaded::Extensive {
            game,
            pins: PinList::default(),
        });
    }
    match builtin(arg) {
        Some(g) => Ok(g),
        None => bail!("{arg:?} is neither a file nor a built-in game ({})", BUILTIN.join(", ")),
    }
}

pub fn prepare(loaded: Loaded, mode: PinMode) -> Result<Prepared> {
    Ok(match loaded {
        Loaded::Extensive { game, pins } => {
            let (game, sf) = match mode {
                PinMode::Constraints if !pins.is_empty() => {
                    let sf = build_sequence_form(&game, Some(&pins))?;
                    (game, sf)
                }
                PinMode::Prune if !pins.is_empty() => {
                    let pruned = prune_pins(&game, &pins)?;
                    let sf = build_sequence_form(&pruned, None)?;
                    (pruned, sf)
                }
                _ => {
                    let sf = build_sequence_form(&game, None)?;
                    (game, sf)
                }
            };
            Prepared {
                game,
                sf,
                strategic: false,
            }
        }
        Loaded::Strategic(g) => Prepared {
            game: g.to_extensive(),
            sf: embed_strategic_form(&g),
            strategic: true,
        },
    })
}
