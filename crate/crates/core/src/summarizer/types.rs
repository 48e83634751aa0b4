//! Resource types and the typed summary.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::num::NonZeroU32;

use crate::rdf::{Node, RdfGraph, ResourceId, ResourceKind};
use crate::summary::{summarize_graph, BucketMapping, Summary, SummaryError};

use super::partition::PartitionAssignment;

/// type(r) = ⟨C(r), O(r), I(r), P(r)⟩. The vectors hold histogram bucket ids
/// (starting at 1), one per predicate other than rdf:type in dictionary-id order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResourceType {
    pub class_type: BTreeSet<ResourceId>,
    pub outgoing: Vec<u32>,
    pub incoming: Vec<u32>,
    pub partition: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Outgoing,
    Incoming,
}

/// Number of histogram buckets J for one predicate and direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BucketCount {
    Fixed(NonZeroU32),
    /// Chosen from the frequency distribution by the Freedman–Diaconis rule.
    FreedmanDiaconis,
}

impl BucketCount {
    pub const ONE: BucketCount = BucketCount::Fixed(NonZeroU32::MIN);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramSpec {
    pub default: BucketCount,
    pub overrides: HashMap<(ResourceId, Direction), BucketCount>,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            default: BucketCount::ONE,
            overrides: HashMap::new(),
        }
    }
}

impl HistogramSpec {
    pub fn uniform(count: BucketCount) -> Self {
        Self {
            default: count,
            overrides: HashMap::new(),
        }
    }

    pub fn get(&self, predicate: ResourceId, direction: Direction) -> BucketCount {
        self.overrides
            .get(&(predicate, direction))
            .copied()
            .unwrap_or(self.default)
    }
}

/// Resources that keep their own name in any summary built here: predicates
/// and objects of rdf:type triples.
pub fn self_mapped(g: &RdfGraph) -> BTreeSet<ResourceId> {
    let ty = g.rdf_type();
    let mut out: BTreeSet<ResourceId> = g.triples().predicates().into_iter().collect();
    if let Some(ty) = ty {
        out.extend(g.iter().filter(|t| t.p == ty).map(|t| t.o));
    }
    out
}

/// Predicates other than rdf:type in dictionary-id order.
pub fn type_predicates(g: &RdfGraph) -> Vec<ResourceId> {
    let ty = g.rdf_type();
    let mut preds: Vec<ResourceId> = g
        .triples()
        .predicates()
        .into_iter()
        .filter(|p| Some(*p) != ty)
        .collect();
    preds.sort_unstable();
    preds
}

/// Equi-depth histogram: sorts `(count, resource)` pairs and slices them into
/// runs of ⌈N/J⌉, numbered from 1.
pub fn equi_depth(counts: &[(u64, ResourceId)], buckets: u32) -> HashMap<ResourceId, u32> {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let width = sorted.len().div_ceil(buckets.max(1) as usize).max(1);
    sorted
        .iter()
        .enumerate()
        .map(|(i, &(_, r))| (r, (i / width) as u32 + 1))
        .collect()
}

/// J from the Freedman–Diaconis bin width 2·IQR·N^(−1/3), at least 1 and at
/// most N.
pub fn freedman_diaconis(counts: &[u64]) -> u32 {
    if counts.len() < 2 {
        return 1;
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let quantile = |q: f64| {
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] as f64 + (sorted[hi] as f64 - sorted[lo] as f64) * (pos - lo as f64)
    };
    let iqr = quantile(0.75) - quantile(0.25);
    let range = (sorted[sorted.len() - 1] - sorted[0]) as f64;
    if iqr <= 0.0 || range <= 0.0 {
        return 1;
    }
    let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
    ((range / width).ceil() as u32).clamp(1, sorted.len() as u32)
}

/// The type of every resource of `g`.
pub fn compute_types(
    g: &RdfGraph,
    spec: &HistogramSpec,
    partition: &PartitionAssignment,
) -> BTreeMap<ResourceId, ResourceType> {
    let d = g.dictionary();
    let ty = g.rdf_type();
    let resources: Vec<ResourceId> = g.resources().into_iter().collect();
    let predicates = type_predicates(g);
    let slot: HashMap<ResourceId, usize> =
        predicates.iter().enumerate().map(|(i, p)| (*p, i)).collect();

    let mut classes: HashMap<ResourceId, BTreeSet<ResourceId>> = HashMap::new();
    let mut out_counts: Vec<HashMap<ResourceId, u64>> = vec![HashMap::new(); predicates.len()];
    let mut in_counts: Vec<HashMap<ResourceId, u64>> = vec![HashMap::new(); predicates.len()];
    for t in g.iter() {
        if Some(t.p) == ty {
            classes.entry(t.s).or_default().insert(t.o);
        } else {
            let i = slot[&t.p];
            *out_counts[i].entry(t.s).or_insert(0) += 1;
            *in_counts[i].entry(t.o).or_insert(0) += 1;
        }
    }

    let histogram = |counts: &HashMap<ResourceId, u64>, p: ResourceId, dir: Direction| {
        let pairs: Vec<(u64, ResourceId)> = resources
            .iter()
            .map(|r| (counts.get(r).copied().unwrap_or(0), *r))
            .collect();
        let j = match spec.get(p, dir) {
            BucketCount::Fixed(j) => j.get(),
            BucketCount::FreedmanDiaconis => {
                freedman_diaconis(&pairs.iter().map(|(c, _)| *c).collect::<Vec<_>>())
            }
        };
        equi_depth(&pairs, j)
    };
    let out_ids: Vec<HashMap<ResourceId, u32>> = predicates
        .iter()
        .zip(&out_counts)
        .map(|(p, c)| histogram(c, *p, Direction::Outgoing))
        .collect();
    let in_ids: Vec<HashMap<ResourceId, u32>> = predicates
        .iter()
        .zip(&in_counts)
        .map(|(p, c)| histogram(c, *p, Direction::Incoming))
        .collect();

    resources
        .iter()
        .map(|&r| {
            let class_type = match d.kind(r) {
                Some(ResourceKind::Literal) => d.datatype_of(r).into_iter().collect(),
                _ => classes.get(&r).cloned().unwrap_or_default(),
            };
            let rt = ResourceType {
                class_type,
                outgoing: out_ids.iter().map(|h| h[&r]).collect(),
                incoming: in_ids.iter().map(|h| h[&r]).collect(),
                partition: partition.get(r),
            };
            (r, rt)
        })
        .collect()
}

/// Fresh bucket names `<urn:sumrdf:bucket:N>` that do not clash with `g`.
pub(crate) struct BucketNamer {
    next: usize,
}

impl BucketNamer {
    pub(crate) fn new() -> Self {
        Self { next: 1 }
    }

    pub(crate) fn fresh(&mut self, mapping: &mut BucketMapping) -> ResourceId {
        loop {
            let node = Node::iri(format!("urn:sumrdf:bucket:{}", self.next));
            self.next += 1;
            if mapping.dictionary().lookup(&node).is_none() {
                return mapping.bucket(node);
            }
        }
    }
}

/// Self-mapped resources keep their names; every other resource goes to the
/// bucket of its type. Buckets are numbered by their smallest member.
pub fn typed_summary(
    g: &RdfGraph,
    types: &BTreeMap<ResourceId, ResourceType>,
) -> Result<Summary, SummaryError> {
    let fixed = self_mapped(g);
    let mut mapping = BucketMapping::new(g.dictionary());
    let mut namer = BucketNamer::new();
    let mut bucket_of: HashMap<&ResourceType, ResourceId> = HashMap::new();
    for r in g.resources() {
        if fixed.contains(&r) {
            mapping.assign(r, r);
            continue;
        }
        let t = types
            .get(&r)
            .ok_or_else(|| SummaryError::UnmappedResource(g.dictionary().render(r)))?;
        let b = match bucket_of.get(t) {
            Some(b) => *b,
            None => {
                let b = namer.fresh(&mut mapping);
                bucket_of.insert(t, b);
                b
            }
        };
        mapping.assign(r, b);
    }
    summarize_graph(g, mapping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::rdf::parse_ntriples_str;

    fn id(g: &RdfGraph, name: &str) -> ResourceId {
        g.dictionary().lookup(&Node::iri(name)).unwrap()
    }

    #[test]
    fn histogram_slicing() {
        let pairs: Vec<(u64, ResourceId)> =
            [5, 0, 3, 3, 9].iter().enumerate().map(|(i, c)| (*c, ResourceId(i as u32))).collect();
        let h = equi_depth(&pairs, 2);
        // sorted: (0,1) (3,2) (3,3) | (5,0) (9,4)
        assert_eq!(h[&ResourceId(1)], 1);
        assert_eq!(h[&ResourceId(3)], 1);
        assert_eq!(h[&ResourceId(0)], 2);
        assert_eq!(h[&ResourceId(4)], 2);
        let one = equi_depth(&pairs, 1);
        assert!(one.values().all(|&b| b == 1));
        let many = equi_depth(&pairs, 10);
        assert_eq!(many[&ResourceId(4)], 5);
    }

    #[test]
    fn freedman_diaconis_rule() {
        assert_eq!(freedman_diaconis(&[0, 0, 0, 0]), 1);
        assert_eq!(freedman_diaconis(&[7]), 1);
        let spread: Vec<u64> = (0..1000).collect();
        // IQR = 499.5, width = 99.9, range 999
        assert_eq!(freedman_diaconis(&spread), 10);
    }

    #[test]
    fn example_types() {
        let g = example_graph();
        let types = compute_types(&g, &HistogramSpec::default(), &PartitionAssignment::single());
        let t = |n| &types[&id(&g, n)];
        assert_eq!(t("e1"), t("e2"));
        assert_eq!(t("e3"), t("e4"));
        assert_ne!(t("e1"), t("e3"));
        assert_eq!(t("c1"), t("c2"));
        assert_eq!(t("c3"), t("c4"));
        assert_ne!(t("c1"), t("c3"));
        assert_eq!(t("e1").class_type, BTreeSet::from([id(&g, "Single")]));
        assert_eq!(t("e1").outgoing.len(), 2);
    }

    #[test]
    fn example_typed_summary_matches_hand_bucketing() {
        let g = example_graph();
        let types = compute_types(&g, &HistogramSpec::default(), &PartitionAssignment::single());
        let s = typed_summary(&g, &types).unwrap();
        assert!(s.represents(g.triples()));
        assert!(s.same_up_to_bucket_names(&example_summary()));
        let owns = id(&g, "owns");
        assert_eq!(s.mu(owns), Some(owns));
        let single = id(&g, "Single");
        assert_eq!(s.mu(single), Some(single));
    }

    #[test]
    fn finer_histograms_split_resources() {
        let g = example_graph();
        let spec = HistogramSpec::uniform(BucketCount::Fixed(NonZeroU32::new(4).unwrap()));
        let types = compute_types(&g, &spec, &PartitionAssignment::single());
        // e1 manages two, e2 manages one
        assert_ne!(types[&id(&g, "e1")], types[&id(&g, "e2")]);
    }

    #[test]
    fn literal_class_is_its_datatype() {
        let g = parse_ntriples_str(
            "<a> <p> \"5\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n<a> <p> \"x\" .\n",
        )
        .unwrap();
        let types = compute_types(&g, &HistogramSpec::default(), &PartitionAssignment::single());
        let five = g
            .dictionary()
            .lookup(&Node::typed_literal("5", "http://www.w3.org/2001/XMLSchema#integer"))
            .unwrap();
        let int = id(&g, "http://www.w3.org/2001/XMLSchema#integer");
        assert_eq!(types[&five].class_type, BTreeSet::from([int]));
        // a has no incoming p edges and still gets histogram bucket 1
        assert_eq!(types[&id(&g, "a")].incoming, vec![1]);
    }

    #[test]
    fn distinct_types_give_identity_like_summary() {
        let g = parse_ntriples_str("<a> <p> <b> .\n<b> <p> <c> .\n<c> <p> <d> .\n").unwrap();
        let types: BTreeMap<ResourceId, ResourceType> = g
            .resources()
            .into_iter()
            .map(|r| {
                let t = ResourceType {
                    class_type: BTreeSet::new(),
                    outgoing: vec![],
                    incoming: vec![],
                    partition: r.0,
                };
                (r, t)
            })
            .collect();
        let s = typed_summary(&g, &types).unwrap();
        assert_eq!(s.len(), g.len());
        assert!(s.represents(g.triples()));
    }
}
