//! Symbolic–numeric calculus for Stieltjes (g-)derivatives.
//!
//! A *derivator* is a nondecreasing, left-continuous function `g: R -> R`.
//! It induces a measure `mu_g([c,d)) = g(d) - g(c)` and a derivative
//! `f'_g(t) = lim (f(s) - f(t)) / (g(s) - g(t))`, with side rules at jump
//! points (`D_g`) and flat regions (`C_g`). This crate provides:
//!
//! * [`derivator`] — an exact piecewise model of `g` (linear segments, atomic
//!   jumps, accumulating jump families) with evaluation, measure, the star
//!   map `t*`, level sets, and domain validation;
//! * [`pointclass`] — exact classification of a point into the structural
//!   sets `C_g`, `D_g`, `N_g^-`, `N_g^+`, the accumulation-based classes
//!   `D1..D3`, `~D1..~D3`, `C1..C3`, and the sets `A_g` and `H_g`;
//! * [`oracle`] — numeric ground truth: g-derivatives and g-continuity
//!   computed straight from the limit definitions;
//! * [`calculus`] — a closed expression language with symbolic
//!   g-differentiation (product rules up to order three, n-ary products),
//!   each derivative paired with its validity domain;
//! * [`regularity`] — g-continuity classification of `Delta g` and
//!   `Delta g*`, level-set constancy checks, and the `BC^1_g`
//!   product-membership criterion;
//! * [`verify`] — a randomized symbolic-vs-oracle verification campaign.
//!
//! All types are immutable after construction and every operation is a pure
//! function, so values can be shared freely across threads.

pub mod calculus;
pub mod config;
pub mod derivator;
mod error;
pub mod fileio;
pub mod oracle;
pub mod pointclass;
pub mod regularity;
pub mod verify;

pub use derivator::{Derivator, GValue, Interval, JumpFamily};
pub use error::Error;
pub use pointclass::{classify, PointClassification};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
