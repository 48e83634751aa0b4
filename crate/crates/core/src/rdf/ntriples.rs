use std::io::{BufRead, Write};
use std::sync::Arc;

use super::dictionary::{Dictionary, Node};
use super::graph::{RdfGraph, Triple, TripleSet};
use super::lexer::Lexer;
use super::RdfError;

/// Parses line-oriented N-Triples into a graph with a fresh dictionary.
///
/// Blank lines and `#` comments are allowed; any other malformed line is an
/// error carrying its line number.
pub fn parse_ntriples<R: BufRead>(reader: R) -> Result<RdfGraph, RdfError> {
    let mut dictionary = Dictionary::new();
    let mut triples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(t) = parse_line(&line, idx + 1, &mut dictionary)? {
            triples.push(t);
        }
    }
    Ok(RdfGraph::new(Arc::new(dictionary), TripleSet::new(triples)))
}

pub fn parse_ntriples_str(text: &str) -> Result<RdfGraph, RdfError> {
    parse_ntriples(text.as_bytes())
}

fn parse_line(
    line: &str,
    line_no: usize,
    dictionary: &mut Dictionary,
) -> Result<Option<Triple>, RdfError> {
    let mut lx = Lexer::new(line, line_no);
    if lx.at_end() {
        return Ok(None);
    }
    let s = lx.node()?;
    if matches!(s, Node::Literal { .. }) {
        return Err(lx.error("literal in subject position").into());
    }
    let p = lx.node()?;
    if !matches!(p, Node::Iri(_)) {
        return Err(lx.error("predicate must be an IRI").into());
    }
    let o = lx.node()?;
    lx.expect_dot()?;
    lx.expect_end()?;
    Ok(Some(Triple::new(
        dictionary.intern(s),
        dictionary.intern(p),
        dictionary.intern(o),
    )))
}

pub fn write_ntriples<W: Write>(graph: &RdfGraph, mut sink: W) -> std::io::Result<()> {
    sink.write_all(graph.to_ntriples().as_bytes())
}
