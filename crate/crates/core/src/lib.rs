//! Zero-shot mutation-effect scoring that blends a structure-aware masked
//! language model with evolutionary logits computed from homolog alignments.
//!
//! Pipeline: CA coordinates -> local graphs -> descriptors -> codebook
//! tokens; residue + structure tokens -> disentangled-attention LM ->
//! native log-probabilities; homolog alignment -> frequency matrix ->
//! evolutionary log-probabilities; blend by the retrieval ratio and score
//! each mutant by summed log-probability differences.

pub mod bio_io;
pub mod evalbench;
pub mod evo;
pub mod logits;
pub mod native_lm;
pub mod retrieval;
pub mod scoring;
pub mod struct_tok;
pub mod vocab;
