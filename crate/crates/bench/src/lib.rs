//! Shared fixtures for the criterion benches.

use seqnash::game::{generate_kuhn3, generate_random_sfg, kuhn3_pins, ExtensiveFormGame};
use seqnash::ncp::{assemble_ncp, FeasibilitySystem};
use seqnash::sequence::{build_sequence_form, embed_strategic_form, SequenceFormGame};

pub struct Fixture {
    pub game: ExtensiveFormGame,
    pub sf: SequenceFormGame,
    pub system: FeasibilitySystem,
}

/// Full three-player Kuhn poker with the dominated actions pinned as rows.
pub fn kuhn3_pinned() -> Fixture {
    let game = generate_kuhn3();
    let sf = build_sequence_form(&game, Some(&kuhn3_pins(&game))).expect("valid game");
    let system = assemble_ncp(&sf);
    Fixture { game, sf, system }
}

pub fn random_sfg(players: usize, strategies: usize, seed: u64) -> Fixture {
    let g = generate_random_sfg(players, strategies, seed);
    let sf = embed_strategic_form(&g);
    let system = assemble_ncp(&sf);
    Fixture {
        game: g.to_extensive(),
        sf,
        system,
    }
}
