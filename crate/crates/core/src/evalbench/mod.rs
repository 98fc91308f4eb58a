//! Alignment error, synthetic data and the retrieval protocol.

mod metric;
pub mod retrieval;
pub mod synth;

use alloc::string::String;

pub use metric::{alignment_error, directed_distance};
pub use retrieval::{
    accuracy_at, align, distance_matrix, path_distance, retrieval_benchmark, DistanceMatrix, Method, MethodConfig,
    PairFailure, RetrievalReport,
};
pub use synth::{
    eta_grid, gen_multimodal, gen_nongaussian, gen_retrieval_split, generate, LabeledSequence, SynthData, SynthKind,
    SynthSpec,
};

use crate::seqcore::AlignmentPath;

/// One benchmark run. `wall_ms` is filled in by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub method: Method,
    /// Noise level or dataset name.
    pub setting: String,
    pub seed: u64,
    pub truth: AlignmentPath,
    pub estimate: AlignmentPath,
    pub error: f64,
    pub wall_ms: f64,
}
