//! The guide under `book/`, compiled as documentation so every code block runs
//! as a doc-test.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/images.md")]
pub mod images {}

#[doc = include_str!("../../../book/src/sampling.md")]
pub mod sampling {}

#[doc = include_str!("../../../book/src/mixing.md")]
pub mod mixing {}

#[doc = include_str!("../../../book/src/policies.md")]
pub mod policies {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/inspection.md")]
pub mod inspection {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
