//! Exact computation of Poisson commutants of Lie algebra chains.

pub mod cache;
pub mod chain;
pub mod cli;
pub mod closure;
pub mod error;
pub mod invariants;
pub mod labels;
pub mod linalg;
pub mod parse;
pub mod poly;
pub mod scalar;

pub use chain::{builtin_chain, parse_chain_file, ChainSpec, JacobiReport, LieAlgebraSpec};
pub use error::{Error, ErrorKind, Result};
pub use poly::{bidegree_components, poisson_bracket, BidegreeSet, Monomial, Polynomial};
pub use scalar::{GaussianRational, Rational};
