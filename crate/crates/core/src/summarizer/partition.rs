//! Partition types: which densely connected group a resource belongs to.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::rdf::lexer::Lexer;
use crate::rdf::{Node, RdfGraph, ResourceId};

use super::SummarizerError;

/// Resources absent from the map are in partition 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartitionAssignment {
    parts: HashMap<ResourceId, u32>,
}

impl PartitionAssignment {
    pub fn single() -> Self {
        Self::default()
    }

    pub fn from_map(parts: HashMap<ResourceId, u32>) -> Self {
        Self { parts }
    }

    pub fn get(&self, r: ResourceId) -> u32 {
        self.parts.get(&r).copied().unwrap_or(0)
    }

    pub fn partition_count(&self) -> usize {
        let mut ids: Vec<u32> = self.parts.values().copied().collect();
        ids.push(0);
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Fraction of non-rdf:type triples whose subject and object lie in
    /// different partitions.
    pub fn edge_cut(&self, g: &RdfGraph) -> f64 {
        let ty = g.rdf_type();
        let (mut edges, mut cut) = (0usize, 0usize);
        for t in g.iter().filter(|t| Some(t.p) != ty) {
            edges += 1;
            if self.get(t.s) != self.get(t.o) {
                cut += 1;
            }
        }
        if edges == 0 {
            0.0
        } else {
            cut as f64 / edges as f64
        }
    }
}

pub trait Partitioner {
    fn name(&self) -> &str;
    fn assign(&self, g: &RdfGraph) -> PartitionAssignment;
}

/// Everything in one partition.
#[derive(Debug, Clone, Copy, Default)]
pub struct SinglePartition;

impl Partitioner for SinglePartition {
    fn name(&self) -> &str {
        "single"
    }

    fn assign(&self, _g: &RdfGraph) -> PartitionAssignment {
        PartitionAssignment::single()
    }
}

/// Communities found by label propagation on the undirected non-rdf:type
/// edges, packed largest first into `partitions` bins of similar size.
#[derive(Debug, Clone)]
pub struct LabelPropagation {
    pub partitions: u32,
    pub seed: u64,
    pub max_rounds: usize,
}

impl LabelPropagation {
    pub fn new(partitions: u32, seed: u64) -> Self {
        Self {
            partitions: partitions.max(1),
            seed,
            max_rounds: 30,
        }
    }

    fn communities(&self, g: &RdfGraph) -> (Vec<ResourceId>, Vec<usize>) {
        let ty = g.rdf_type();
        let nodes: Vec<ResourceId> = g.resources().into_iter().collect();
        let index: HashMap<ResourceId, usize> =
            nodes.iter().enumerate().map(|(i, r)| (*r, i)).collect();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for t in g.iter().filter(|t| Some(t.p) != ty && t.s != t.o) {
            let (a, b) = (index[&t.s], index[&t.o]);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut labels: Vec<usize> = (0..nodes.len()).collect();
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        let mut tally: BTreeMap<usize, usize> = BTreeMap::new();
        for _ in 0..self.max_rounds {
            order.shuffle(&mut rng);
            let mut changed = false;
            for &v in &order {
                if adj[v].is_empty() {
                    continue;
                }
                tally.clear();
                for &u in &adj[v] {
                    *tally.entry(labels[u]).or_insert(0) += 1;
                }
                let best = tally.values().copied().max().unwrap_or(0);
                // keep the current label on ties so the process settles
                let current = tally.get(&labels[v]).copied().unwrap_or(0);
                if current == best {
                    continue;
                }
                let pick = tally
                    .iter()
                    .find(|(_, &c)| c == best)
                    .map(|(l, _)| *l)
                    .unwrap_or(labels[v]);
                labels[v] = pick;
                changed = true;
            }
            if !changed {
                break;
            }
        }
        (nodes, labels)
    }
}

impl Partitioner for LabelPropagation {
    fn name(&self) -> &str {
        "label-propagation"
    }

    fn assign(&self, g: &RdfGraph) -> PartitionAssignment {
        let (nodes, labels) = self.communities(g);
        let mut members: BTreeMap<usize, Vec<ResourceId>> = BTreeMap::new();
        for (r, l) in nodes.iter().zip(&labels) {
            members.entry(*l).or_default().push(*r);
        }
        let mut communities: Vec<Vec<ResourceId>> = members.into_values().collect();
        communities.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        let mut load = vec![0usize; self.partitions as usize];
        let mut parts = HashMap::new();
        for c in communities {
            let (bin, _) = load
                .iter()
                .enumerate()
                .min_by_key(|(i, l)| (**l, *i))
                .expect("at least one partition");
            load[bin] += c.len();
            for r in c {
                parts.insert(r, bin as u32);
            }
        }
        PartitionAssignment::from_map(parts)
    }
}

/// Partition ids read from `<resource>\t<partition-id>` lines.
#[derive(Debug, Clone, Default)]
pub struct FilePartition {
    entries: HashMap<Node, u32>,
}

impl FilePartition {
    pub fn load<R: BufRead>(source: R) -> Result<Self, SummarizerError> {
        let mut entries = HashMap::new();
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (resource, part) = line.rsplit_once('\t').ok_or_else(|| {
                SummarizerError::PartitionFile {
                    line: line_no,
                    message: "expected <resource>\\t<partition-id>".into(),
                }
            })?;
            let mut lx = Lexer::new(resource, line_no);
            let node = lx.node().map_err(|e| SummarizerError::PartitionFile {
                line: line_no,
                message: e.to_string(),
            })?;
            lx.expect_end().map_err(|e| SummarizerError::PartitionFile {
                line: line_no,
                message: e.to_string(),
            })?;
            let part: u32 = part.trim().parse().map_err(|_| SummarizerError::PartitionFile {
                line: line_no,
                message: format!("invalid partition id {:?}", part.trim()),
            })?;
            entries.insert(node, part);
        }
        Ok(Self { entries })
    }
}

impl Partitioner for FilePartition {
    fn name(&self) -> &str {
        "file"
    }

    fn assign(&self, g: &RdfGraph) -> PartitionAssignment {
        let d = g.dictionary();
        PartitionAssignment::from_map(
            self.entries
                .iter()
                .filter_map(|(n, p)| d.lookup(n).map(|r| (r, *p)))
                .collect(),
        )
    }
}

/// Cut fraction above which a partitioning is discarded.
pub const MAX_EDGE_CUT: f64 = 0.2;

/// Runs `partitioner` and falls back to a single partition when more than
/// `max_cut` of the edges cross partitions. The flag reports the fallback.
pub fn partition_with_fallback(
    g: &RdfGraph,
    partitioner: &dyn Partitioner,
    max_cut: f64,
) -> (PartitionAssignment, bool) {
    let parts = partitioner.assign(g);
    if parts.edge_cut(g) > max_cut {
        (PartitionAssignment::single(), true)
    } else {
        (parts, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_ntriples_str;

    fn two_cliques() -> RdfGraph {
        let mut text = String::new();
        for group in ["a", "b"] {
            for i in 0..6 {
                for j in 0..6 {
                    if i != j {
                        text.push_str(&format!("<{group}{i}> <p> <{group}{j}> .\n"));
                    }
                }
            }
        }
        text.push_str("<a0> <p> <b0> .\n");
        parse_ntriples_str(&text).unwrap()
    }

    #[test]
    fn label_propagation_finds_cliques() {
        let g = two_cliques();
        let lp = LabelPropagation::new(2, 7);
        let parts = lp.assign(&g);
        let id = |n: &str| g.dictionary().lookup(&Node::iri(n)).unwrap();
        for i in 1..6 {
            assert_eq!(parts.get(id("a0")), parts.get(id(&format!("a{i}"))));
            assert_eq!(parts.get(id("b0")), parts.get(id(&format!("b{i}"))));
        }
        assert_ne!(parts.get(id("a0")), parts.get(id("b0")));
        assert!(parts.edge_cut(&g) < 0.05);
        let (kept, fell_back) = partition_with_fallback(&g, &lp, MAX_EDGE_CUT);
        assert!(!fell_back);
        assert_eq!(kept, parts);
        assert_eq!(lp.assign(&g), parts);
    }

    #[test]
    fn heavy_cut_falls_back() {
        let g = parse_ntriples_str("<x> <p> <y> .\n<y> <p> <z> .\n").unwrap();
        let file = FilePartition::load("<x>\t0\n<y>\t1\n<z>\t0\n".as_bytes()).unwrap();
        assert_eq!(file.assign(&g).edge_cut(&g), 1.0);
        let (parts, fell_back) = partition_with_fallback(&g, &file, MAX_EDGE_CUT);
        assert!(fell_back);
        assert_eq!(parts.partition_count(), 1);
    }

    #[test]
    fn partition_file_errors() {
        assert!(FilePartition::load("<x> 0\n".as_bytes()).is_err());
        assert!(FilePartition::load("<x>\tzero\n".as_bytes()).is_err());
        assert!(FilePartition::load("x\t0\n".as_bytes()).is_err());
        let ok = FilePartition::load("# comment\n\n\"lit\"\t3\n".as_bytes()).unwrap();
        assert_eq!(ok.entries.len(), 1);
    }
}
