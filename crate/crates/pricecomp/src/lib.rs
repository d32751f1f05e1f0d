//! Exact-arithmetic analysis of price competition in linear Fisher markets:
//! stable allocations under seller-chosen prices and priorities,
//! revenue-optimal stable allocations, competitive and maximin equilibria,
//! duopoly bang-per-buck games, and brute-force oracles that cross-validate
//! every tractable result.

// Matrices here are addressed by (buyer, item) indices end to end; indexed
// loops keep that explicit.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod rational;

pub mod flow;
pub mod lp;

pub mod duopoly;
pub mod equilibrium;
pub mod gadgets;
pub mod gen;
pub mod io;
pub mod market;
pub mod oracle;
pub mod revenue;
pub mod stability;

pub use error::{Error, Result};
pub use rational::Rational;
