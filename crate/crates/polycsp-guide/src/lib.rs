//! Runs every code block of the book under `cargo test --doc`, one module
//! per chapter, so the guide cannot drift from the library. mdbook itself
//! does not execute examples against crate dependencies; including the
//! chapters as doc comments here makes rustdoc do it instead.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/instances.md")]
pub mod instances {}

#[doc = include_str!("../../../book/src/operations.md")]
pub mod operations {}

#[doc = include_str!("../../../book/src/representations.md")]
pub mod representations {}

#[doc = include_str!("../../../book/src/solving.md")]
pub mod solving {}

#[doc = include_str!("../../../book/src/certificates.md")]
pub mod certificates {}

#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
