//! A desk-scale laboratory for combinatorial set theory on countable ordinals.
//!
//! The crate is organised bottom-up:
//!
//! - [`ordinals`]: exact ordinals below ω^ω in Cantor normal form, plus a
//!   pairing bijection between finite ordinal sequences and ordinals.
//! - [`csets`]: symbolic closed sets of ordinals and piecewise C-sequences,
//!   with coherence, lower-regressive and avoiding-level checkers.
//! - [`forcing`]: the end-extension poset of C-sequence conditions, its
//!   extension construction, the strategic-closure game and ω-fusion.
//! - [`treelab`]: rationals, nodes of the coordinate tree, c-value interval
//!   bounds, squares, derived trees, the ℚ_κ order and specialization maps.
//! - [`elevators`]: the coarsening relation induced by an antichain of
//!   distinguished pairs, and q-elevators with their factories.
//! - [`builder`]: the level-by-level tree construction engine.
//! - [`topology`]: interval-topology neighbourhood constructions on the
//!   built trees.

pub mod builder;
pub mod csets;
pub mod elevators;
pub mod forcing;
pub mod ordinals;
pub mod schema;
pub mod topology;
pub mod treelab;

pub use ordinals::Ordinal;
pub use treelab::{NodeRef, Rational};
