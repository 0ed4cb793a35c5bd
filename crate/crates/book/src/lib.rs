//! Compiles the guide's code samples as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/manifest.md")]
pub mod manifest {}

#[doc = include_str!("../../../book/src/scoring.md")]
pub mod scoring {}

#[doc = include_str!("../../../book/src/allocation.md")]
pub mod allocation {}

#[doc = include_str!("../../../book/src/kernel.md")]
pub mod kernel {}

#[doc = include_str!("../../../book/src/sampling.md")]
pub mod sampling {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
