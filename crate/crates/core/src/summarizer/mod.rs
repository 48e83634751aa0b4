//! Building summaries from data graphs: typed summaries and MinHash refinement.

pub mod minhash;
pub mod partition;
pub mod refine;
pub mod types;

pub use minhash::{
    approx_jaccard, jaccard, jaccard_of, vicinity, MinHashScheme, Signature, VicinityIndex,
    VicinityPair,
};
pub use partition::{
    partition_with_fallback, FilePartition, LabelPropagation, PartitionAssignment, Partitioner,
    SinglePartition, MAX_EDGE_CUT,
};
pub use refine::{
    merge_similar_types, minhash_refine, IterationStats, MergeRecord, RefineConfig, RefineOutcome,
    TypeProfile,
};
pub use types::{
    compute_types, equi_depth, freedman_diaconis, self_mapped, typed_summary, BucketCount,
    Direction, HistogramSpec, ResourceType,
};

use crate::rdf::RdfGraph;
use crate::summary::{Summary, SummaryError};

#[derive(Debug, thiserror::Error)]
pub enum SummarizerError {
    #[error("partition file line {line}: {message}")]
    PartitionFile { line: usize, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("resource {0} has no type")]
    MissingType(String),
    #[error(transparent)]
    Summary(#[from] SummaryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct SummarizerConfig {
    pub histogram: HistogramSpec,
    pub refine: RefineConfig,
}

/// What the full pipeline produced.
#[derive(Debug, Clone)]
pub struct SummarizeOutcome {
    pub summary: Summary,
    pub typed_size: usize,
    /// Present when the typed summary exceeded the target.
    pub refinement: Option<RefineOutcome>,
    pub partition_fallback: bool,
}

impl SummarizeOutcome {
    pub fn achieved(&self) -> bool {
        self.refinement.as_ref().map_or(true, |r| r.achieved)
    }
}

/// Types every resource, builds the typed summary, and if that is larger
/// than the target runs MinHash refinement from the trivial summary.
/// Refinement wins only when it ends up smaller than the typed summary.
pub fn summarize(
    g: &RdfGraph,
    partitioner: &dyn Partitioner,
    config: &SummarizerConfig,
) -> Result<SummarizeOutcome, SummarizerError> {
    let (parts, partition_fallback) = partition_with_fallback(g, partitioner, MAX_EDGE_CUT);
    let types = compute_types(g, &config.histogram, &parts);
    let typed = typed_summary(g, &types)?;
    let typed_size = typed.len();
    if typed_size <= config.refine.target {
        return Ok(SummarizeOutcome {
            summary: typed,
            typed_size,
            refinement: None,
            partition_fallback,
        });
    }
    let refined = minhash_refine(g, &types, &config.refine)?;
    let summary = if refined.summary.len() < typed_size {
        refined.summary.clone()
    } else {
        typed
    };
    Ok(SummarizeOutcome {
        summary,
        typed_size,
        refinement: Some(refined),
        partition_fallback,
    })
}
