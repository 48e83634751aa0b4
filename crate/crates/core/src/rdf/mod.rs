//! Resource interning, indexed triple storage and N-Triples I/O.

mod dictionary;
mod graph;
pub(crate) mod lexer;
mod ntriples;

pub use dictionary::{
    Dictionary, Node, ResourceId, ResourceKind, RDF_LANG_STRING, RDF_TYPE, XSD_STRING,
};
pub use graph::{Pattern, RdfGraph, Triple, TripleSet};
pub use lexer::SyntaxError;
pub use ntriples::{parse_ntriples, parse_ntriples_str, write_ntriples};

#[derive(Debug, thiserror::Error)]
pub enum RdfError {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
