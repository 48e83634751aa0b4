use std::collections::HashMap;

use super::{Atom, Query, Term, VarId};
use crate::rdf::lexer::Lexer;
use crate::rdf::{Dictionary, Node, ResourceId, SyntaxError};

/// A query term before binding to a dictionary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Resource(Node),
    Variable(String),
}

/// Lexical form of a parsed query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryPattern {
    pub atoms: Vec<[PatternTerm; 3]>,
}

/// Parses one triple pattern per line, each ending with `.`.
/// Terms are `<iri>`, `_:blank`, literals, or `?var`.
pub fn parse_query(text: &str) -> Result<QueryPattern, SyntaxError> {
    let mut atoms = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let mut lx = Lexer::new(line, idx + 1);
        if lx.at_end() {
            continue;
        }
        let mut terms = Vec::with_capacity(3);
        for _ in 0..3 {
            let t = match lx.variable()? {
                Some(name) => PatternTerm::Variable(name),
                None => PatternTerm::Resource(lx.node()?),
            };
            terms.push(t);
        }
        lx.expect_dot()?;
        lx.expect_end()?;
        let [s, p, o]: [PatternTerm; 3] = terms.try_into().expect("three terms");
        atoms.push([s, p, o]);
    }
    Ok(QueryPattern { atoms })
}

impl QueryPattern {
    /// Resolves resources against `dictionary`. Resources the dictionary does
    /// not know get placeholder ids that match nothing; they are listed in
    /// [`Query::unresolved`].
    pub fn bind(&self, dictionary: &Dictionary) -> Query {
        let mut vars: HashMap<&str, VarId> = HashMap::new();
        let mut names: Vec<String> = Vec::new();
        let mut unresolved: Vec<(ResourceId, Node)> = Vec::new();
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for pattern in &self.atoms {
            let mut terms = [Term::Variable(VarId(0)); 3];
            for (slot, t) in terms.iter_mut().zip(pattern) {
                *slot = match t {
                    PatternTerm::Variable(name) => Term::Variable(*vars.entry(name).or_insert_with(|| {
                        names.push(name.clone());
                        VarId(names.len() as u32 - 1)
                    })),
                    PatternTerm::Resource(node) => Term::Resource(match dictionary.lookup(node) {
                        Some(id) => id,
                        None => match unresolved.iter().find(|(_, n)| n == node) {
                            Some((id, _)) => *id,
                            None => {
                                let id = ResourceId((dictionary.len() + unresolved.len()) as u32);
                                unresolved.push((id, node.clone()));
                                id
                            }
                        },
                    }),
                };
            }
            atoms.push(Atom { terms });
        }
        let mut q = Query::new(atoms, names);
        q.set_unresolved(unresolved);
        q
    }
}

impl Query {
    /// Parses and binds in one step.
    pub fn parse(text: &str, dictionary: &Dictionary) -> Result<Query, SyntaxError> {
        Ok(parse_query(text)?.bind(dictionary))
    }
}
