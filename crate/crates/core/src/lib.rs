//! Cardinality estimation for conjunctive queries over RDF graph summaries.

pub mod estimator;
pub mod fixtures;
pub mod oracle;
pub mod query;
pub mod rdf;
pub mod summarizer;
pub mod summary;
pub mod synth;
