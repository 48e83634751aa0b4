//! Weighted graph summaries (H, w, μ) and the possible-worlds bookkeeping
//! around them.

mod io;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::query::{Atom, Query, Term};
use crate::rdf::{Dictionary, Node, RdfGraph, ResourceId, SyntaxError, Triple, TripleSet};

#[derive(Debug, thiserror::Error)]
pub enum SummaryError {
    #[error("resource {0} of the graph has no bucket")]
    UnmappedResource(String),
    #[error("resource {0} is outside the domain of the summarisation function")]
    OutsideDomain(String),
    #[error("unknown bucket {0}")]
    UnknownBucket(String),
    #[error("cannot merge bucket {0} into itself")]
    SelfMerge(String),
    #[error("summary triple {0} has weight 0")]
    ZeroWeight(String),
    #[error("summary triple {0} uses a bucket with no preimage")]
    EmptyBucket(String),
    #[error("unsupported summary format header {0:?}")]
    Version(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A summarisation function under construction: the map from resources to
/// buckets, plus the dictionary naming both.
#[derive(Debug, Clone)]
pub struct BucketMapping {
    dictionary: Dictionary,
    mu: HashMap<ResourceId, ResourceId>,
}

impl BucketMapping {
    /// An empty mapping whose dictionary extends `base`, so ids of `base` stay valid.
    pub fn new(base: &Dictionary) -> Self {
        Self {
            dictionary: base.clone(),
            mu: HashMap::new(),
        }
    }

    /// μ = identity on res(g).
    pub fn identity(g: &RdfGraph) -> Self {
        let mut m = Self::new(g.dictionary());
        for r in g.resources() {
            m.assign(r, r);
        }
        m
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    /// Interns a bucket name.
    pub fn bucket(&mut self, name: Node) -> ResourceId {
        self.dictionary.intern(name)
    }

    pub fn assign(&mut self, resource: ResourceId, bucket: ResourceId) {
        self.mu.insert(resource, bucket);
    }

    pub fn get(&self, resource: ResourceId) -> Option<ResourceId> {
        self.mu.get(&resource).copied()
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// A summary S = (H, w, μ).
#[derive(Debug, Clone)]
pub struct Summary {
    dictionary: Arc<Dictionary>,
    graph: TripleSet,
    weights: HashMap<Triple, u64>,
    mu: HashMap<ResourceId, ResourceId>,
    /// μ⁻¹(b), sorted.
    members: BTreeMap<ResourceId, Vec<ResourceId>>,
}

/// The unique summary of `g` under the summarisation function in `mapping`:
/// H = μ(G) and w(h) counts the triples of G collapsing onto h.
pub fn summarize_graph(g: &RdfGraph, mapping: BucketMapping) -> Result<Summary, SummaryError> {
    let mut weights: HashMap<Triple, u64> = HashMap::new();
    for t in g.iter() {
        let mut image = [ResourceId(0); 3];
        for (slot, r) in image.iter_mut().zip(t.resources()) {
            *slot = mapping
                .get(r)
                .ok_or_else(|| SummaryError::UnmappedResource(g.dictionary().render(r)))?;
        }
        *weights.entry(Triple::new(image[0], image[1], image[2])).or_insert(0) += 1;
    }
    Summary::new(Arc::new(mapping.dictionary), mapping.mu, weights)
}

impl Summary {
    /// Assembles a summary from its parts. Every weight must be positive and
    /// every bucket of H must have a preimage; consistency is not required.
    pub fn new(
        dictionary: Arc<Dictionary>,
        mu: HashMap<ResourceId, ResourceId>,
        weights: impl IntoIterator<Item = (Triple, u64)>,
    ) -> Result<Self, SummaryError> {
        let weights: HashMap<Triple, u64> = weights.into_iter().collect();
        let mut members: BTreeMap<ResourceId, Vec<ResourceId>> = BTreeMap::new();
        for (&r, &b) in &mu {
            members.entry(b).or_default().push(r);
        }
        for list in members.values_mut() {
            list.sort_unstable();
        }
        let s = Self {
            graph: TripleSet::new(weights.keys().copied()),
            dictionary,
            weights,
            mu,
            members,
        };
        for (t, w) in s.iter_weighted() {
            if w == 0 {
                return Err(SummaryError::ZeroWeight(s.render_triple(t)));
            }
            if t.resources().iter().any(|b| !s.members.contains_key(b)) {
                return Err(SummaryError::EmptyBucket(s.render_triple(t)));
            }
        }
        Ok(s)
    }

    /// An empty summary over an empty dictionary.
    pub fn empty() -> Self {
        Self::new(Arc::new(Dictionary::new()), HashMap::new(), []).expect("empty summary")
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn shared_dictionary(&self) -> &Arc<Dictionary> {
        &self.dictionary
    }

    /// H.
    pub fn graph(&self) -> &TripleSet {
        &self.graph
    }

    /// |H|
    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    /// Triples of H with their weights, in SPO order.
    pub fn iter_weighted(&self) -> impl Iterator<Item = (Triple, u64)> + '_ {
        self.graph.iter().map(|t| (t, self.weights[&t]))
    }

    pub fn weight(&self, t: &Triple) -> Option<u64> {
        self.weights.get(t).copied()
    }

    /// Σ_h w(h), which equals |G| for any represented graph G.
    pub fn total_weight(&self) -> u64 {
        self.weights.values().sum()
    }

    /// μ(r), if r ∈ dom(μ).
    pub fn mu(&self, r: ResourceId) -> Option<ResourceId> {
        self.mu.get(&r).copied()
    }

    pub fn domain_len(&self) -> usize {
        self.mu.len()
    }

    /// (resource, bucket) pairs of μ, sorted by resource.
    pub fn mapping(&self) -> Vec<(ResourceId, ResourceId)> {
        let mut m: Vec<_> = self.mu.iter().map(|(&r, &b)| (r, b)).collect();
        m.sort_unstable();
        m
    }

    /// All buckets, i.e. the range of μ, in id order.
    pub fn buckets(&self) -> impl Iterator<Item = ResourceId> + '_ {
        self.members.keys().copied()
    }

    pub fn bucket_count(&self) -> usize {
        self.members.len()
    }

    /// μ⁻¹(b), sorted.
    pub fn members(&self, b: ResourceId) -> &[ResourceId] {
        self.members.get(&b).map(Vec::as_slice).unwrap_or(&[])
    }

    /// size(b) = |μ⁻¹(b)|
    pub fn size(&self, b: ResourceId) -> u64 {
        self.members(b).len() as u64
    }

    /// size(⟨b1,b2,b3⟩) = size(b1)·size(b2)·size(b3)
    pub fn triple_size(&self, t: &Triple) -> u128 {
        t.resources().iter().map(|&b| self.size(b) as u128).product()
    }

    /// w(h) ≤ size(h) for every h ∈ H.
    pub fn is_consistent(&self) -> bool {
        self.iter_weighted()
            .all(|(t, w)| w as u128 <= self.triple_size(&t))
    }

    /// |⟦S⟧| = ∏_h C(size(h), w(h)), or 0 when S is inconsistent.
    pub fn count_worlds(&self) -> BigUint {
        let mut total = BigUint::one();
        for (t, w) in self.iter_weighted() {
            let n = self.triple_size(&t);
            if w as u128 > n {
                return BigUint::zero();
            }
            total *= binomial(n, w as u128);
        }
        total
    }

    /// μ(q). Fails if q mentions a resource outside dom(μ).
    pub fn map_query(&self, q: &Query) -> Result<Query, SummaryError> {
        let mut atoms = Vec::with_capacity(q.len());
        for a in q.atoms() {
            let mut terms = a.terms;
            for t in terms.iter_mut() {
                if let Term::Resource(r) = *t {
                    let b = self.mu(r).ok_or_else(|| {
                        SummaryError::OutsideDomain(q.render_resource(&self.dictionary, r))
                    })?;
                    *t = Term::Resource(b);
                }
            }
            atoms.push(Atom { terms });
        }
        Ok(Query::new(atoms, q.var_names().to_vec()))
    }

    /// Checks that every resource of q lies in dom(μ).
    pub fn check_domain(&self, q: &Query) -> Result<(), SummaryError> {
        match q.resources().into_iter().find(|r| self.mu(*r).is_none()) {
            Some(r) => Err(SummaryError::OutsideDomain(
                q.render_resource(&self.dictionary, r),
            )),
            None => Ok(()),
        }
    }

    /// Whether this summary represents the graph with triples `g` (in this
    /// summary's id space): res(g) ⊆ dom(μ), μ(g) = H, and each w(h) counts
    /// the triples of g mapped onto h.
    pub fn represents(&self, g: &TripleSet) -> bool {
        let mut counts: HashMap<Triple, u64> = HashMap::with_capacity(self.weights.len());
        for t in g.iter() {
            let (Some(s), Some(p), Some(o)) = (self.mu(t.s), self.mu(t.p), self.mu(t.o)) else {
                return false;
            };
            *counts.entry(Triple::new(s, p, o)).or_insert(0) += 1;
        }
        counts == self.weights
    }

    /// Merges bucket `from` into `into`: every preimage of `from` is remapped to
    /// `into`, and triples of H that collapse have their weights summed.
    pub fn merge_buckets(&mut self, from: ResourceId, into: ResourceId) -> Result<(), SummaryError> {
        if from == into {
            return Err(SummaryError::SelfMerge(self.dictionary.render(from)));
        }
        for b in [from, into] {
            if !self.members.contains_key(&b) {
                return Err(SummaryError::UnknownBucket(self.dictionary.render(b)));
            }
        }
        self.redirect(&HashMap::from([(from, into)]));
        Ok(())
    }

    /// Applies many merges at once. `target` maps buckets to the bucket they are
    /// merged into; targets must themselves be left unmapped.
    pub fn redirect(&mut self, target: &HashMap<ResourceId, ResourceId>) {
        if target.is_empty() {
            return;
        }
        let image = |b: ResourceId| target.get(&b).copied().unwrap_or(b);
        for b in self.mu.values_mut() {
            *b = image(*b);
        }
        let mut weights: HashMap<Triple, u64> = HashMap::with_capacity(self.weights.len());
        for (t, w) in self.weights.drain() {
            *weights.entry(t.map(image)).or_insert(0) += w;
        }
        for (&from, &into) in target {
            if let Some(moved) = self.members.remove(&from) {
                let list = self.members.entry(into).or_default();
                list.extend(moved);
                list.sort_unstable();
            }
        }
        self.graph = TripleSet::new(weights.keys().copied());
        self.weights = weights;
    }

    /// The summary with every bucket named by its sorted member list, so two
    /// summaries agree on it iff they differ only in bucket names.
    pub fn canonical_form(&self) -> Vec<String> {
        let labels: HashMap<ResourceId, String> = self
            .members
            .iter()
            .map(|(&b, m)| {
                let mut names: Vec<String> = m.iter().map(|r| self.dictionary.render(*r)).collect();
                names.sort_unstable();
                (b, format!("{{{}}}", names.join(" ")))
            })
            .collect();
        let mut out: Vec<String> = labels.values().map(|l| format!("B {l}")).collect();
        out.extend(
            self.iter_weighted()
                .map(|(t, w)| format!("T {} {} {} {w}", labels[&t.s], labels[&t.p], labels[&t.o])),
        );
        out.sort_unstable();
        out
    }

    pub fn same_up_to_bucket_names(&self, other: &Summary) -> bool {
        self.canonical_form() == other.canonical_form()
    }

    fn render_triple(&self, t: Triple) -> String {
        format!(
            "{} {} {}",
            self.dictionary.render(t.s),
            self.dictionary.render(t.p),
            self.dictionary.render(t.o)
        )
    }
}

/// Structural equality up to renumbering of the dictionary.
impl PartialEq for Summary {
    fn eq(&self, other: &Self) -> bool {
        self.to_sumrdf() == other.to_sumrdf()
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sumrdf())
    }
}

/// C(n, k) for n possibly beyond 64 bits.
pub fn binomial(n: u128, k: u128) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}
