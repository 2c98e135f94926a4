//! An `SL(2, R)` cocycle over the doubling map assembled from a devil's staircase,
//! Herman's cocycle and a bounded family on the gaps, with the numerics that
//! check its Lyapunov exponents.
//!
//! The book in `book/` walks through each module; its snippets run as doc-tests.

pub mod alpha;
pub mod ball;
pub mod checks;
pub mod circle;
pub mod cocycle;
mod error;
pub mod families;
pub mod gaps;
pub mod lab;
pub mod mat2;
pub mod modulation;
pub mod periodic;
pub mod staircase;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/circle.md")]
    mod circle {}
    #[doc = include_str!("../../../book/src/staircase.md")]
    mod staircase {}
    #[doc = include_str!("../../../book/src/gaps.md")]
    mod gaps {}
    #[doc = include_str!("../../../book/src/modulation.md")]
    mod modulation {}
    #[doc = include_str!("../../../book/src/cocycles.md")]
    mod cocycles {}
    #[doc = include_str!("../../../book/src/families.md")]
    mod families {}
    #[doc = include_str!("../../../book/src/periodic.md")]
    mod periodic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
