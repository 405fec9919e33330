//! Fair court scheduling with ordered weighted averaging.
//!
//! The crate covers the whole pipeline: synthetic defendant pools
//! ([`datagen`]), the utility algebra ([`schedule`]), OWA aggregation and its
//! gradients ([`owa`]), the differentiable matching layer ([`matching`]),
//! reference OWA solvers ([`oracle`]), preference-predicting networks and
//! their training losses ([`learn`]), and regret/fairness evaluation
//! ([`eval`]).

pub mod datagen;
pub mod defendant;
pub mod error;
pub mod eval;
pub mod learn;
pub mod matching;
pub mod oracle;
pub mod owa;
pub mod schedule;

pub use error::{Error, Result};
