//! Bucket vicinities, their Jaccard index, and MinHash sketches of it.

use std::collections::{BTreeSet, HashMap};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};

use crate::rdf::ResourceId;
use crate::summary::Summary;

use super::SummarizerError;

/// An element of a vicinity: (predicate, object) for outgoing edges and
/// (subject, predicate) for incoming ones. The two kinds are not tagged.
pub type VicinityPair = (ResourceId, ResourceId);

/// vic(b) for every bucket of one summary, skipping μ(rdf:type) edges.
#[derive(Debug, Clone, Default)]
pub struct VicinityIndex {
    vicinities: HashMap<ResourceId, Vec<VicinityPair>>,
}

impl VicinityIndex {
    pub fn new(s: &Summary) -> Self {
        let ty = s.dictionary().rdf_type().and_then(|t| s.mu(t));
        let mut vicinities: HashMap<ResourceId, Vec<VicinityPair>> = HashMap::new();
        for t in s.graph().iter().filter(|t| Some(t.p) != ty) {
            vicinities.entry(t.s).or_default().push((t.p, t.o));
            vicinities.entry(t.o).or_default().push((t.s, t.p));
        }
        for v in vicinities.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        Self { vicinities }
    }

    /// Sorted and duplicate free.
    pub fn get(&self, b: ResourceId) -> &[VicinityPair] {
        self.vicinities.get(&b).map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn vicinity(s: &Summary, b: ResourceId) -> BTreeSet<VicinityPair> {
    VicinityIndex::new(s).get(b).iter().copied().collect()
}

/// |A ∩ B| / |A ∪ B|, or 1 when both are empty.
pub fn jaccard_of(a: &BTreeSet<VicinityPair>, b: &BTreeSet<VicinityPair>) -> Ratio<u64> {
    let union = a.union(b).count() as u64;
    if union == 0 {
        return Ratio::from_integer(1);
    }
    Ratio::new(a.intersection(b).count() as u64, union)
}

pub fn jaccard(s: &Summary, b1: ResourceId, b2: ResourceId) -> Ratio<u64> {
    let index = VicinityIndex::new(s);
    let set = |b| index.get(b).iter().copied().collect::<BTreeSet<_>>();
    jaccard_of(&set(b1), &set(b2))
}

/// Signature cell of an empty vicinity. Real hash values are clamped below it.
pub const INFINITY: u64 = u64::MAX;

/// m × n matrix of minima, row major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    n: usize,
    cells: Vec<u64>,
}

impl Signature {
    pub fn row(&self, i: usize) -> &[u64] {
        &self.cells[i * self.n..(i + 1) * self.n]
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn is_infinite(&self) -> bool {
        self.cells.iter().all(|&c| c == INFINITY)
    }
}

/// Fraction of equal cells; ∞ equals ∞.
pub fn approx_jaccard(a: &Signature, b: &Signature) -> f64 {
    assert_eq!(a.cells.len(), b.cells.len(), "signatures of different shapes");
    if a.cells.is_empty() {
        return 1.0;
    }
    let same = a.cells.iter().zip(&b.cells).filter(|(x, y)| x == y).count();
    same as f64 / a.cells.len() as f64
}

/// An m × n matrix of multiply-shift hash functions over pairs, plus the
/// polynomial hash that bins signature rows.
#[derive(Debug, Clone)]
pub struct MinHashScheme {
    m: usize,
    n: usize,
    mul: Vec<u128>,
    add: Vec<u128>,
    lsh_base: u64,
    lsh_seed: u64,
}

impl MinHashScheme {
    pub fn new(m: usize, n: usize, seed: u64) -> Result<Self, SummarizerError> {
        if m == 0 || n == 0 {
            return Err(SummarizerError::InvalidParameter(format!(
                "MinHash scheme must be at least 1 x 1, got {m} x {n}"
            )));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mul = (0..m * n).map(|_| rng.gen::<u128>() | 1).collect();
        let add = (0..m * n).map(|_| rng.gen::<u128>()).collect();
        Ok(Self {
            m,
            n,
            mul,
            add,
            lsh_base: rng.gen::<u64>() | 1,
            lsh_seed: rng.gen(),
        })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// M[cell](pair): the high 64 bits of a·x + c mod 2¹²⁸.
    pub fn hash(&self, cell: usize, pair: VicinityPair) -> u64 {
        let x = ((pair.0 .0 as u128) << 64) | pair.1 .0 as u128;
        let h = (self.mul[cell].wrapping_mul(x).wrapping_add(self.add[cell]) >> 64) as u64;
        h.min(INFINITY - 1)
    }

    pub fn signature<'a>(&self, vicinity: impl IntoIterator<Item = &'a VicinityPair>) -> Signature {
        let mut cells = vec![INFINITY; self.m * self.n];
        for pair in vicinity {
            for (cell, slot) in cells.iter_mut().enumerate() {
                *slot = (*slot).min(self.hash(cell, *pair));
            }
        }
        Signature { n: self.n, cells }
    }

    pub fn bucket_signature(&self, s: &Summary, b: ResourceId) -> Signature {
        self.signature(vicinity(s, b).iter())
    }

    /// Bin key of one signature row.
    pub fn lsh(&self, row: &[u64]) -> u64 {
        let mut h = self.lsh_seed;
        for &v in row {
            h = h.wrapping_mul(self.lsh_base).wrapping_add(v);
        }
        splitmix(h)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
