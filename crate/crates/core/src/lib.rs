//! Lifted (Tanner) codes on multilayer agreement samplers.
//!
//! The crate builds four-layer set systems with a downward Markov
//! chain, lifts base codes through them, runs the natural Tanner
//! tester, and audits the quantitative ingredients of local
//! testability: the sampler constant of the containment graph, the
//! soundness of the agreement test, local code distance, tester
//! strength, and the per-round behavior of iterative self-correction.
//! All definitional quantities are exact rationals.

pub mod agreement;
pub mod code;
pub mod correct;
pub mod error;
pub mod exec;
pub mod field;
pub mod fixtures;
pub mod grassmann;
pub mod json;
pub mod rational;
pub mod rng;
pub mod system;
pub mod tanner;

pub use code::{LinearCode, DEFAULT_ENUMERATION_BUDGET};
pub use error::{LtcError, Result};
pub use field::{CoordId, CoordSet, Field, FieldElement, Word};
pub use rational::Rational;
pub use system::{BipartiteWeighted, Layer, LayeredSystem};
