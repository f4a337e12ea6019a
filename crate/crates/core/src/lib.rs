//! Recovering censored person names from news posts and their comments.
//!
//! The pipeline censors a target name in a handful of posts, gathers the
//! names mentioned in the comments under those posts, keeps the `k` most
//! frequent as candidates, and trains a context classifier that tells the
//! candidates apart using only the words around each (masked) mention.
//! The classifier is then asked which candidate fits the censored posts.

pub mod candidates;
pub mod censorship;
pub mod cer;
pub mod corpus;
pub mod entity_recognition;
pub mod evaluation;
pub mod pipeline;
pub mod snippet_index;
pub mod text;
mod util;

pub use util::{derive_seed, write_atomic};
