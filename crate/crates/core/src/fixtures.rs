//! The running example: a small company graph and its four-bucket summary.

use crate::query::Query;
use crate::rdf::{parse_ntriples_str, Node, RdfGraph, RDF_TYPE};
use crate::summary::{summarize_graph, BucketMapping, Summary};

/// Employees manage each other and own cars; every resource has a class.
pub fn example_graph() -> RdfGraph {
    let ty = format!("<{RDF_TYPE}>");
    let text = format!(
        "<e1> <manages> <e2> .
<e1> <manages> <e3> .
<e2> <manages> <e4> .
<e3> <owns> <c3> .
<e4> <owns> <c4> .
<e2> <owns> <c1> .
<e4> <owns> <c2> .
<e1> {ty} <Single> .
<e2> {ty} <Single> .
<e3> {ty} <Married> .
<e4> {ty} <Married> .
<c1> {ty} <Roadster> .
<c2> {ty} <Roadster> .
<c3> {ty} <Van> .
<c4> {ty} <Van> .
"
    );
    parse_ntriples_str(&text).expect("fixture parses")
}

/// Bucket of each grouped resource; everything else maps to itself.
pub const EXAMPLE_BUCKETS: [(&str, &str); 8] = [
    ("e1", "b1"),
    ("e2", "b1"),
    ("c1", "b2"),
    ("c2", "b2"),
    ("e3", "b3"),
    ("e4", "b3"),
    ("c3", "b4"),
    ("c4", "b4"),
];

pub fn example_mapping(g: &RdfGraph) -> BucketMapping {
    let mut m = BucketMapping::identity(g);
    for (r, b) in EXAMPLE_BUCKETS {
        let bucket = m.bucket(Node::iri(b));
        let resource = g.dictionary().lookup(&Node::iri(r)).expect("fixture resource");
        m.assign(resource, bucket);
    }
    m
}

pub fn example_summary() -> Summary {
    let g = example_graph();
    summarize_graph(&g, example_mapping(&g)).expect("fixture summarises")
}

/// Two ground atoms on distinct summary triples.
pub const Q1: &str = "<e1> <manages> <e3> .\n<e3> <owns> <c3> .\n";
/// A chain of two atoms.
pub const Q2: &str = "?x <manages> ?y .\n?y <owns> ?z .\n";
/// Two atoms that can land on the same triple.
pub const Q3: &str = "<e3> <owns> ?x .\n<e3> <owns> ?y .\n";
/// Atoms that only unify after bucketing.
pub const Q4: &str = "<e3> <owns> ?x .\n<e4> <owns> ?y .\n";

pub fn example_query(text: &str, s: &Summary) -> Query {
    Query::parse(text, s.dictionary()).expect("fixture query parses")
}
