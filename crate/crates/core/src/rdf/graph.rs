use std::collections::BTreeSet;
use std::ops::Range;
use std::sync::Arc;

use super::dictionary::{Dictionary, ResourceId};

/// A variable-free triple of interned resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub s: ResourceId,
    pub p: ResourceId,
    pub o: ResourceId,
}

impl Triple {
    pub fn new(s: ResourceId, p: ResourceId, o: ResourceId) -> Self {
        Self { s, p, o }
    }

    pub fn resources(&self) -> [ResourceId; 3] {
        [self.s, self.p, self.o]
    }

    pub fn map(&self, mut f: impl FnMut(ResourceId) -> ResourceId) -> Triple {
        Triple::new(f(self.s), f(self.p), f(self.o))
    }
}

/// Position pattern for [`TripleSet::matches`]: `None` is a wildcard.
pub type Pattern = [Option<ResourceId>; 3];

#[derive(Debug, Clone, Copy)]
enum Order {
    Spo,
    Pos,
    Osp,
}

/// Immutable, duplicate-free set of triples with SPO, POS and OSP indexes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripleSet {
    spo: Vec<[u32; 3]>,
    pos: Vec<[u32; 3]>,
    osp: Vec<[u32; 3]>,
}

impl TripleSet {
    pub fn new(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut spo: Vec<[u32; 3]> = triples
            .into_iter()
            .map(|t| [t.s.0, t.p.0, t.o.0])
            .collect();
        spo.sort_unstable();
        spo.dedup();
        let mut pos: Vec<[u32; 3]> = spo.iter().map(|&[s, p, o]| [p, o, s]).collect();
        pos.sort_unstable();
        let mut osp: Vec<[u32; 3]> = spo.iter().map(|&[s, p, o]| [o, s, p]).collect();
        osp.sort_unstable();
        Self { spo, pos, osp }
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.spo.binary_search(&[t.s.0, t.p.0, t.o.0]).is_ok()
    }

    /// All triples in SPO order.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = Triple> + '_ {
        self.spo.iter().map(|&k| decode(Order::Spo, k))
    }

    /// Distinct resources occurring in any position.
    pub fn resources(&self) -> BTreeSet<ResourceId> {
        self.spo
            .iter()
            .flat_map(|t| t.iter().copied())
            .map(ResourceId)
            .collect()
    }

    /// Distinct resources occurring in predicate position.
    pub fn predicates(&self) -> Vec<ResourceId> {
        let mut out: Vec<ResourceId> = self.pos.iter().map(|k| ResourceId(k[0])).collect();
        out.dedup();
        out
    }

    fn plan(&self, pattern: &Pattern) -> (Order, Vec<u32>) {
        let [s, p, o] = pattern.map(|x| x.map(|r| r.0));
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => (Order::Spo, vec![s, p, o]),
            (Some(s), Some(p), None) => (Order::Spo, vec![s, p]),
            (Some(s), None, Some(o)) => (Order::Osp, vec![o, s]),
            (Some(s), None, None) => (Order::Spo, vec![s]),
            (None, Some(p), Some(o)) => (Order::Pos, vec![p, o]),
            (None, Some(p), None) => (Order::Pos, vec![p]),
            (None, None, Some(o)) => (Order::Osp, vec![o]),
            (None, None, None) => (Order::Spo, vec![]),
        }
    }

    fn index(&self, order: Order) -> &[[u32; 3]] {
        match order {
            Order::Spo => &self.spo,
            Order::Pos => &self.pos,
            Order::Osp => &self.osp,
        }
    }

    fn prefix_range(index: &[[u32; 3]], prefix: &[u32]) -> Range<usize> {
        let n = prefix.len();
        let lo = index.partition_point(|k| k[..n] < *prefix);
        let hi = lo + index[lo..].partition_point(|k| k[..n] == *prefix);
        lo..hi
    }

    /// Triples matching every bound position, in index order.
    pub fn matches(&self, pattern: Pattern) -> impl Iterator<Item = Triple> + '_ {
        let (order, prefix) = self.plan(&pattern);
        let index = self.index(order);
        let range = Self::prefix_range(index, &prefix);
        index[range].iter().map(move |&k| decode(order, k))
    }

    /// Number of triples [`TripleSet::matches`] would yield.
    pub fn count(&self, pattern: Pattern) -> usize {
        let (order, prefix) = self.plan(&pattern);
        Self::prefix_range(self.index(order), &prefix).len()
    }
}

#[inline]
fn decode(order: Order, k: [u32; 3]) -> Triple {
    let [s, p, o] = match order {
        Order::Spo => k,
        Order::Pos => [k[2], k[0], k[1]],
        Order::Osp => [k[1], k[2], k[0]],
    };
    Triple::new(ResourceId(s), ResourceId(p), ResourceId(o))
}

impl FromIterator<Triple> for TripleSet {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        TripleSet::new(iter)
    }
}

/// An RDF graph: a triple set together with the dictionary its ids refer to.
#[derive(Debug, Clone)]
pub struct RdfGraph {
    dictionary: Arc<Dictionary>,
    triples: TripleSet,
}

impl RdfGraph {
    pub fn new(dictionary: Arc<Dictionary>, triples: TripleSet) -> Self {
        Self {
            dictionary,
            triples,
        }
    }

    pub fn empty() -> Self {
        Self::new(Arc::new(Dictionary::new()), TripleSet::default())
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn shared_dictionary(&self) -> &Arc<Dictionary> {
        &self.dictionary
    }

    pub fn triples(&self) -> &TripleSet {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Triple> + '_ {
        self.triples.iter()
    }

    pub fn matches(&self, pattern: Pattern) -> impl Iterator<Item = Triple> + '_ {
        self.triples.matches(pattern)
    }

    pub fn resources(&self) -> BTreeSet<ResourceId> {
        self.triples.resources()
    }

    pub fn rdf_type(&self) -> Option<ResourceId> {
        self.dictionary.rdf_type()
    }

    /// Triples rendered as N-Triples lines, in SPO id order.
    pub fn to_ntriples(&self) -> String {
        let mut out = String::new();
        for t in self.iter() {
            out.push_str(&format!(
                "{} {} {} .\n",
                self.dictionary.render(t.s),
                self.dictionary.render(t.p),
                self.dictionary.render(t.o)
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(i: u32) -> ResourceId {
        ResourceId(i)
    }

    fn sample() -> TripleSet {
        TripleSet::new([
            Triple::new(r(1), r(10), r(2)),
            Triple::new(r(1), r(10), r(3)),
            Triple::new(r(2), r(11), r(3)),
            Triple::new(r(3), r(10), r(1)),
            Triple::new(r(1), r(10), r(2)),
        ])
    }

    #[test]
    fn duplicates_collapse() {
        assert_eq!(sample().len(), 4);
    }

    #[test]
    fn every_binding_shape_matches_brute_force() {
        let g = sample();
        let all: Vec<Triple> = g.iter().collect();
        let vals = [None, Some(r(1)), Some(r(2)), Some(r(3)), Some(r(10))];
        for s in vals {
            for p in vals {
                for o in vals {
                    let mut got: Vec<Triple> = g.matches([s, p, o]).collect();
                    got.sort();
                    let want: Vec<Triple> = all
                        .iter()
                        .copied()
                        .filter(|t| {
                            s.map_or(true, |x| x == t.s)
                                && p.map_or(true, |x| x == t.p)
                                && o.map_or(true, |x| x == t.o)
                        })
                        .collect();
                    assert_eq!(got, want, "pattern {s:?} {p:?} {o:?}");
                    assert_eq!(g.count([s, p, o]), want.len());
                }
            }
        }
    }

    #[test]
    fn wildcard_pattern_yields_everything() {
        let g = sample();
        assert_eq!(g.matches([None, None, None]).count(), g.len());
        assert_eq!(g.predicates(), vec![r(10), r(11)]);
    }
}
