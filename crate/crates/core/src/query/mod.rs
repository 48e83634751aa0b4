//! Conjunctive queries (basic graph patterns): representation, parsing and
//! exact evaluation.

mod eval;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::rdf::{Dictionary, Node, ResourceId, Triple};

pub use eval::{cardinality, Answer, Evaluator};
pub use parse::{parse_query, PatternTerm, QueryPattern};

/// Index of a variable within its query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A resource or a variable.
///
/// The derived ordering is the fixed total term order used by the estimator:
/// resources by id, then variables by id, every resource before every variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Resource(ResourceId),
    Variable(VarId),
}

impl Term {
    pub fn as_resource(self) -> Option<ResourceId> {
        match self {
            Term::Resource(r) => Some(r),
            Term::Variable(_) => None,
        }
    }

    pub fn as_variable(self) -> Option<VarId> {
        match self {
            Term::Variable(v) => Some(v),
            Term::Resource(_) => None,
        }
    }

    pub fn is_variable(self) -> bool {
        matches!(self, Term::Variable(_))
    }
}

/// Comparator over terms; resources precede variables.
pub fn term_order(a: &Term, b: &Term) -> std::cmp::Ordering {
    a.cmp(b)
}

/// A triple pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub terms: [Term; 3],
}

impl Atom {
    pub fn new(s: Term, p: Term, o: Term) -> Self {
        Self { terms: [s, p, o] }
    }

    pub fn ground(t: Triple) -> Self {
        Self::new(
            Term::Resource(t.s),
            Term::Resource(t.p),
            Term::Resource(t.o),
        )
    }

    pub fn variables(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.iter().filter_map(|t| t.as_variable())
    }

    pub fn resources(&self) -> impl Iterator<Item = ResourceId> + '_ {
        self.terms.iter().filter_map(|t| t.as_resource())
    }

    pub fn map_resources(&self, mut f: impl FnMut(ResourceId) -> ResourceId) -> Atom {
        Atom {
            terms: self.terms.map(|t| match t {
                Term::Resource(r) => Term::Resource(f(r)),
                v => v,
            }),
        }
    }

    /// Instantiates the atom under a total assignment of its variables.
    pub fn instantiate(&self, answer: &[ResourceId]) -> Triple {
        let [s, p, o] = self.terms.map(|t| match t {
            Term::Resource(r) => r,
            Term::Variable(v) => answer[v.index()],
        });
        Triple::new(s, p, o)
    }
}

/// A conjunctive query: a finite set of atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    atoms: Vec<Atom>,
    var_names: Vec<String>,
    /// Resources named by the query text but absent from the dictionary it was
    /// bound against; they carry placeholder ids past the dictionary's end.
    unresolved: Vec<(ResourceId, Node)>,
}

impl Query {
    /// Builds a query, removing duplicate atoms and renumbering variables densely
    /// in order of first occurrence.
    pub fn new(atoms: Vec<Atom>, var_names: Vec<String>) -> Self {
        let mut seen = BTreeSet::new();
        let atoms: Vec<Atom> = atoms.into_iter().filter(|a| seen.insert(*a)).collect();
        let mut remap: BTreeMap<VarId, VarId> = BTreeMap::new();
        let mut names = Vec::new();
        for a in &atoms {
            for v in a.variables() {
                remap.entry(v).or_insert_with(|| {
                    names.push(
                        var_names
                            .get(v.index())
                            .cloned()
                            .unwrap_or_else(|| format!("v{}", v.0)),
                    );
                    VarId(names.len() as u32 - 1)
                });
            }
        }
        let atoms = atoms
            .into_iter()
            .map(|a| Atom {
                terms: a.terms.map(|t| match t {
                    Term::Variable(v) => Term::Variable(remap[&v]),
                    r => r,
                }),
            })
            .collect();
        Self {
            atoms,
            var_names: names,
            unresolved: Vec::new(),
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn var_count(&self) -> usize {
        self.var_names.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        (0..self.var_names.len() as u32).map(VarId)
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.var_names[v.index()]
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    /// res(q)
    pub fn resources(&self) -> BTreeSet<ResourceId> {
        self.atoms.iter().flat_map(|a| a.resources()).collect()
    }

    /// term(q)
    pub fn terms(&self) -> BTreeSet<Term> {
        self.atoms.iter().flat_map(|a| a.terms).collect()
    }

    pub fn is_ground(&self) -> bool {
        self.var_names.is_empty()
    }

    pub fn unresolved(&self) -> &[(ResourceId, Node)] {
        &self.unresolved
    }

    /// Lexical form of a resource of this query.
    pub fn render_resource(&self, dictionary: &Dictionary, r: ResourceId) -> String {
        match self.unresolved.iter().find(|(id, _)| *id == r) {
            Some((_, node)) => node.to_string(),
            None => dictionary.render(r),
        }
    }

    /// q ∪ ρ(q), where ρ renames every variable to a fresh one. Fresh variables
    /// take ids `n..2n` and the original name with a `'` suffix.
    pub fn union_with_renamed_copy(&self) -> Query {
        let n = self.var_names.len() as u32;
        let mut atoms = self.atoms.clone();
        atoms.extend(self.atoms.iter().map(|a| Atom {
            terms: a.terms.map(|t| match t {
                Term::Variable(v) => Term::Variable(VarId(v.0 + n)),
                r => r,
            }),
        }));
        let mut names = self.var_names.clone();
        names.extend(self.var_names.iter().map(|s| format!("{s}'")));
        let mut q = Query::new(atoms, names);
        q.unresolved = self.unresolved.clone();
        q
    }

    /// Adds an atom, keeping set semantics.
    pub fn with_atom(&self, atom: Atom) -> Query {
        let mut atoms = self.atoms.clone();
        atoms.push(atom);
        let mut q = Query::new(atoms, self.var_names.clone());
        q.unresolved = self.unresolved.clone();
        q
    }

    pub(crate) fn set_unresolved(&mut self, unresolved: Vec<(ResourceId, Node)>) {
        self.unresolved = unresolved;
    }

    pub fn display<'a>(&'a self, dictionary: &'a Dictionary) -> QueryDisplay<'a> {
        QueryDisplay {
            query: self,
            dictionary,
        }
    }
}

pub struct QueryDisplay<'a> {
    query: &'a Query,
    dictionary: &'a Dictionary,
}

impl fmt::Display for QueryDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.query.atoms {
            let parts: Vec<String> = a
                .terms
                .iter()
                .map(|t| match t {
                    Term::Resource(r) => self.query.render_resource(self.dictionary, *r),
                    Term::Variable(v) => format!("?{}", self.query.var_name(*v)),
                })
                .collect();
            writeln!(f, "{} .", parts.join(" "))?;
        }
        Ok(())
    }
}

/// A mapping from variables to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<VarId, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_answer(answer: &[ResourceId]) -> Self {
        Self {
            map: answer
                .iter()
                .enumerate()
                .map(|(i, r)| (VarId(i as u32), Term::Resource(*r)))
                .collect(),
        }
    }

    pub fn insert(&mut self, v: VarId, t: Term) {
        self.map.insert(v, t);
    }

    pub fn get(&self, v: VarId) -> Option<Term> {
        self.map.get(&v).copied()
    }

    pub fn domain(&self) -> impl Iterator<Item = VarId> + '_ {
        self.map.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply_term(&self, t: Term) -> Term {
        match t {
            Term::Variable(v) => self.get(v).unwrap_or(t),
            r => r,
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom {
            terms: a.terms.map(|t| self.apply_term(t)),
        }
    }

    /// π(Z) for a set of atoms; the result is again a set.
    pub fn apply(&self, atoms: &[Atom]) -> BTreeSet<Atom> {
        atoms.iter().map(|a| self.apply_atom(a)).collect()
    }
}

/// q-error of estimating a true cardinality `n` as `e`.
pub fn qerror(n: u64, e: f64) -> f64 {
    let n = (n as f64).max(1.0);
    let e = e.max(1.0);
    (n / e).max(e / n)
}
