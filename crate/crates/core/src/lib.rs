//! Category-flavoured language statistics: graded n-gram counts, extension
//! probabilities, probabilistic matrices, semantic spaces, embedding
//! divergences and bias measurement.

pub mod bias;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod markov;
pub mod spaces;
pub mod syntax;
pub mod synthetic;
pub mod yoneda;

pub use error::{Error, ErrorClass, Result};
