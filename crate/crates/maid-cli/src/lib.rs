//! Document formats and text renderers behind the `maid` binary. Split out
//! as a library so integration tests can parse what the binary prints.

pub mod doc;
pub mod render;
