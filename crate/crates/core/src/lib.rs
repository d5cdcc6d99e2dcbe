//! Reflectionless N-soliton potentials built from a prescribed bound-state
//! spectrum, the Lax and dual hierarchies expressed through the bound-state
//! densities, their time evolution, and independent numerical oracles used
//! to check all of it.

pub mod asymptotics;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod hierarchy;
pub mod identities;
pub mod oracle;
pub mod spectrum;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
pub use spectrum::Spectrum;
pub use state::{build_state, SolitonState};
