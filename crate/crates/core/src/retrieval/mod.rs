//! Homolog acquisition: precomputed a2m/a3m files and the Foldseek web
//! search, both ending in an [`AlignmentMatrix`] for counting.

mod cache;
mod client;
mod hits;
mod merge;

pub use cache::{cache_key, ResultCache};
pub use client::{
    foldseek_search, FoldseekClient, FoldseekDatabase, HttpResponse, HttpTransport, MultipartForm, ReqwestTransport,
    RetrievalJob, Sleeper, ThreadSleeper, DEFAULT_FOLDSEEK_URL, ENDPOINT_ENV,
};
pub use hits::{hits_to_alignment, parse_foldseek_json, FoldseekHit};
pub use merge::merge_alignments;

use crate::bio_io::{parse_a2m, reformat_a3m, A2mOptions, AlignmentMatrix, IoError, ResidueSequence};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("retrieval job needs at least one database")]
    NoDatabases,
    #[error("unknown database '{0}'")]
    UnknownDatabase(String),
    #[error("poll interval must be positive")]
    PollInterval,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status} from {url}")]
    Http { status: u16, url: String },
    #[error("search did not complete after {polls} polls (last status {last})")]
    MaxPolls { polls: usize, last: String },
    #[error("malformed Foldseek response: {0}")]
    MalformedJson(String),
    #[error("hit '{target_id}': {reason}")]
    Coverage { target_id: String, reason: String },
    #[error("alignments differ: {0}")]
    Incompatible(String),
    #[error(transparent)]
    File(#[from] IoError),
}

/// Reads an a2m or a3m alignment (chosen by extension) against `query`.
pub fn load_alignment(path: &Path, query: &ResidueSequence, options: A2mOptions) -> Result<AlignmentMatrix, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let is_a3m = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("a3m"));
    let text = if is_a3m {
        reformat_a3m(&text).map_err(|e| IoError::parse(path, e))?
    } else {
        text
    };
    parse_a2m(&text, query, options).map_err(|e| IoError::parse(path, e))
}
