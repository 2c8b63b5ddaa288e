//! Exact Nash equilibrium computation for multiplayer extensive-form games
//! through the sequence-form complementarity system.

pub mod error;
pub mod game;

pub use error::GameError;
pub use game::{ExtensiveFormGame, PinList, StrategicFormGame};
pub mod sequence;
pub mod verifier;
pub mod ncp;
pub mod linalg;
pub mod bnb;
pub mod lp;
pub mod zero_sum;
