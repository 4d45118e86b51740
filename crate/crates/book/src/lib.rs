//! The guide's chapters, included verbatim so their code blocks run as
//! doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}

#[doc = include_str!("../../../book/src/boundary-data.md")]
pub mod boundary_data {}

#[doc = include_str!("../../../book/src/disk-extension.md")]
pub mod disk_extension {}

#[doc = include_str!("../../../book/src/gluing.md")]
pub mod gluing {}

#[doc = include_str!("../../../book/src/heat-flow.md")]
pub mod heat_flow {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
