//! Structure tokens: each residue's local CA neighborhood is summarized by a
//! rigid-motion invariant descriptor and quantized against a K-means
//! codebook.

mod codebook;
mod featurize;
mod graph;
mod kmeans;

pub use codebook::{load_codebook, save_codebook, Codebook, CODEBOOK_MAGIC, CODEBOOK_VERSION};
pub use featurize::{featurize, FeaturizerConfig, StructureDescriptor, FEATURE_LEN};
pub use graph::{build_local_graph, GraphParams, LocalStructureGraph};
pub use kmeans::{assign_tokens, kmeans_fit, KMeansFit, KMeansParams};

use crate::bio_io::BackboneCoords;
use rayon::prelude::*;
use thiserror::Error;

/// Paper-scale codebook size; desk-scale runs use much smaller `k`.
pub const DEFAULT_CODEBOOK_SIZE: usize = 2048;

#[derive(Debug, Error)]
pub enum StructError {
    #[error("anchor {anchor} out of range for {len} residues")]
    AnchorOutOfRange { anchor: usize, len: usize },
    #[error("degenerate geometry: residues {first} and {second} have coincident CA positions")]
    DegenerateGeometry { first: usize, second: usize },
    #[error("descriptor dimension {0} is smaller than the {FEATURE_LEN} raw features")]
    DimensionTooSmall(usize),
    #[error("k-means needs at least k={k} points, got {points}")]
    TooFewPoints { points: usize, k: usize },
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a codebook file (bad magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported codebook version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated codebook: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Token indices in `[0, k)`, one per residue.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructureTokenSequence {
    pub tokens: Vec<u32>,
}

impl StructureTokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Descriptors for every residue of a structure, in residue order.
pub fn describe_structure(
    coords: &BackboneCoords,
    config: &FeaturizerConfig,
) -> Result<Vec<StructureDescriptor>, StructError> {
    (0..coords.len())
        .into_par_iter()
        .map(|anchor| {
            let graph = build_local_graph(coords, anchor, &config.graph)?;
            featurize(&graph, config)
        })
        .collect()
}

/// Full tokenization: local graphs, descriptors, nearest-centroid lookup.
pub fn tokenize_structure(
    coords: &BackboneCoords,
    codebook: &Codebook,
    config: &FeaturizerConfig,
) -> Result<StructureTokenSequence, StructError> {
    let descriptors = describe_structure(coords, config)?;
    assign_tokens(&descriptors, codebook)
}
