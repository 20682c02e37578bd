//! The guide's chapters, included as rustdoc so that every fenced Rust
//! sample in `book/` is compiled and executed by `cargo test`. Edit the
//! chapters under `book/src/`; this crate only mirrors them. The workspace
//! README rides along for the same reason.

#[doc = include_str!("../../../README.md")]
pub mod readme {}

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/getting-started.md")]
pub mod getting_started {}

#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[doc = include_str!("../../../book/src/splits.md")]
pub mod splits {}

#[doc = include_str!("../../../book/src/forests.md")]
pub mod forests {}

#[doc = include_str!("../../../book/src/importance.md")]
pub mod importance {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
