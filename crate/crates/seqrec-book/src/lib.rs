//! Runs every code snippet in the mdbook guide (`book/src/`) as a doctest.
//!
//! mdbook renders the chapters but cannot execute them; including each
//! chapter as module documentation makes `cargo test --doc` compile and
//! run all of its Rust code blocks, so the guide cannot drift from the
//! library. One module per chapter keeps doctest failures traceable to
//! their source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/logs-and-sequences.md")]
pub mod logs_and_sequences {}

#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}

#[doc = include_str!("../../../book/src/similarity.md")]
pub mod similarity {}

#[doc = include_str!("../../../book/src/collaborative-filtering.md")]
pub mod collaborative_filtering {}

#[doc = include_str!("../../../book/src/blending-and-ranking.md")]
pub mod blending_and_ranking {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/synthetic-logs.md")]
pub mod synthetic_logs {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
