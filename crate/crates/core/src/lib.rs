//! Perspectivized stance vectors for debate arguments.
//!
//! Pipeline: align arguments to a concept graph ([`graph`]), induce a topic
//! signature ([`signature`]), predict a stance per signature concept
//! ([`stance`]), aggregate pairs of vectors ([`aggregate`]) and score the
//! result against annotations ([`eval`]). [`llm`] holds the cached model client
//! and the prompt templates. [`import`] converts flat dataset exports into a
//! corpus file.

pub mod aggregate;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod graph;
pub mod import;
pub mod llm;
pub mod signature;
pub mod stance;
mod util;

pub use error::{Error, Result};
pub use util::{cosine, sha256_hex};
