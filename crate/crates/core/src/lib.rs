//! Generalized moments and cumulants of non-commuting stochastic operators.
//!
//! Expansions are generated symbolically as [`expr::Expression`]s under one
//! of four ordering maps and checked numerically on exact finite models
//! ([`numeric`]) and on fermionic Fock states ([`fermi`]).

pub mod combinatorics;
pub mod error;
pub mod expr;
pub mod fermi;
pub mod numeric;
pub mod ordering;
pub mod transforms;

pub use error::{Error, Result};
pub use expr::{Bracket, BracketKind, Coeff, Expression};
pub use ordering::OrderingMapKind;
