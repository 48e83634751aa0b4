//! Brute-force ground truth: enumerate or sample the possible worlds of a
//! summary and evaluate queries on each of them.

use std::collections::BTreeMap;
use std::ops::Range;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::query::{cardinality, Query};
use crate::rdf::{Triple, TripleSet};
use crate::summary::{binomial, Summary};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("summary has {worlds} possible worlds, more than the cap of {cap}")]
    CapExceeded { worlds: BigUint, cap: u64 },
    #[error("summary is inconsistent and has no possible worlds")]
    Inconsistent,
}

pub const DEFAULT_WORLD_CAP: u64 = 1_000_000;

/// One summary triple h with its preimage μ⁻¹(h) laid out as a
/// mixed-radix index space over the three member lists.
#[derive(Debug, Clone)]
struct Slot {
    members: [Vec<crate::rdf::ResourceId>; 3],
    size: u64,
    weight: u64,
    /// C(size, weight)
    choices: u64,
}

impl Slot {
    fn triple(&self, index: u64) -> Triple {
        let n1 = self.members[1].len() as u64;
        let n2 = self.members[2].len() as u64;
        let o = index % n2;
        let p = (index / n2) % n1;
        let s = index / (n1 * n2);
        Triple::new(
            self.members[0][s as usize],
            self.members[1][p as usize],
            self.members[2][o as usize],
        )
    }
}

/// The worlds ⟦S⟧ of a summary with at most `u64::MAX` worlds, addressable
/// by rank.
#[derive(Debug, Clone)]
pub struct WorldSpace {
    slots: Vec<Slot>,
    total: u64,
}

impl WorldSpace {
    /// Fails when S is inconsistent or has more than `cap` worlds.
    pub fn new(s: &Summary, cap: u64) -> Result<Self, OracleError> {
        if !s.is_consistent() {
            return Err(OracleError::Inconsistent);
        }
        let worlds = s.count_worlds();
        if worlds > BigUint::from(cap) {
            return Err(OracleError::CapExceeded { worlds, cap });
        }
        let slots = s
            .iter_weighted()
            .map(|(h, w)| {
                let members = h.resources().map(|b| s.members(b).to_vec());
                let size = s.triple_size(&h) as u64;
                Slot {
                    members,
                    size,
                    weight: w,
                    choices: binomial(size as u128, w as u128)
                        .to_u64()
                        .expect("bounded by the world cap"),
                }
            })
            .collect();
        Ok(Self {
            slots,
            total: worlds.to_u64().expect("bounded by the world cap"),
        })
    }

    /// |⟦S⟧|
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// The world of the given rank.
    pub fn world(&self, rank: u64) -> TripleSet {
        let mut cursors = self.cursors(rank);
        self.materialise(&mut cursors)
    }

    /// Worlds with ranks in `range`, in rank order.
    pub fn iter_range(&self, range: Range<u64>) -> WorldIterator<'_> {
        let end = range.end.min(self.total);
        let start = range.start.min(end);
        WorldIterator {
            space: self,
            cursors: self.cursors(start),
            remaining: end - start,
        }
    }

    pub fn iter(&self) -> WorldIterator<'_> {
        self.iter_range(0..self.total)
    }

    /// Per-slot combinations for a global rank; the last slot varies fastest.
    fn cursors(&self, mut rank: u64) -> Vec<Vec<u64>> {
        let mut out = vec![Vec::new(); self.slots.len()];
        for (i, slot) in self.slots.iter().enumerate().rev() {
            let local = rank % slot.choices.max(1);
            rank /= slot.choices.max(1);
            out[i] = unrank_combination(slot.size, slot.weight, local);
        }
        out
    }

    fn materialise(&self, cursors: &mut [Vec<u64>]) -> TripleSet {
        TripleSet::new(
            self.slots
                .iter()
                .zip(cursors.iter())
                .flat_map(|(slot, comb)| comb.iter().map(move |&i| slot.triple(i))),
        )
    }
}

/// Streams worlds by stepping each slot's combination like an odometer.
pub struct WorldIterator<'a> {
    space: &'a WorldSpace,
    cursors: Vec<Vec<u64>>,
    remaining: u64,
}

impl Iterator for WorldIterator<'_> {
    type Item = TripleSet;

    fn next(&mut self) -> Option<TripleSet> {
        if self.remaining == 0 {
            return None;
        }
        let world = self.space.materialise(&mut self.cursors);
        self.remaining -= 1;
        if self.remaining > 0 {
            for (slot, comb) in self.space.slots.iter().zip(self.cursors.iter_mut()).rev() {
                if next_combination(comb, slot.size) {
                    break;
                }
                *comb = (0..slot.weight).collect();
            }
        }
        Some(world)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}

/// The `rank`-th k-subset of 0..n in lexicographic order.
fn unrank_combination(n: u64, k: u64, mut rank: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(k as usize);
    let mut next = 0u64;
    for remaining in (1..=k).rev() {
        loop {
            // subsets starting with `next` among what is left
            let with = binomial((n - next - 1) as u128, (remaining - 1) as u128)
                .to_u64()
                .expect("bounded");
            if rank < with {
                break;
            }
            rank -= with;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances a k-subset of 0..n to its lexicographic successor.
fn next_combination(comb: &mut [u64], n: u64) -> bool {
    let k = comb.len();
    for i in (0..k).rev() {
        if comb[i] < n - (k - i) as u64 {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Every world of ⟦S⟧, once each.
pub fn enumerate_worlds(s: &Summary, cap: u64) -> Result<Vec<TripleSet>, OracleError> {
    Ok(WorldSpace::new(s, cap)?.iter().collect())
}

/// A uniformly random world: for each h, a uniform w(h)-subset of μ⁻¹(h).
pub fn sample_world<R: Rng + ?Sized>(s: &Summary, rng: &mut R) -> Result<TripleSet, OracleError> {
    if !s.is_consistent() {
        return Err(OracleError::Inconsistent);
    }
    let mut triples = Vec::with_capacity(s.total_weight() as usize);
    for (h, w) in s.iter_weighted() {
        let members = h.resources().map(|b| s.members(b));
        let (n1, n2) = (members[1].len() as u128, members[2].len() as u128);
        let size = s.triple_size(&h);
        for i in floyd_sample(rng, size, w as u128) {
            let (o, p, s_) = (i % n2, (i / n2) % n1, i / (n1 * n2));
            triples.push(Triple::new(
                members[0][s_ as usize],
                members[1][p as usize],
                members[2][o as usize],
            ));
        }
    }
    Ok(TripleSet::new(triples))
}

/// A uniform k-subset of 0..n (Floyd's algorithm).
fn floyd_sample<R: Rng + ?Sized>(rng: &mut R, n: u128, k: u128) -> Vec<u128> {
    let mut chosen = std::collections::BTreeSet::new();
    for j in n - k..n {
        let t = rng.gen_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    chosen.into_iter().collect()
}

/// How many worlds give each cardinality of q.
pub fn cardinality_distribution(
    q: &Query,
    s: &Summary,
    cap: u64,
) -> Result<BTreeMap<u64, u64>, OracleError> {
    let space = WorldSpace::new(s, cap)?;
    const CHUNK: u64 = 256;
    let chunks: Vec<Range<u64>> = (0..space.len().div_ceil(CHUNK))
        .map(|i| i * CHUNK..((i + 1) * CHUNK).min(space.len()))
        .collect();
    let partials: Vec<BTreeMap<u64, u64>> = chunks
        .into_par_iter()
        .map(|range| {
            let mut hist = BTreeMap::new();
            for world in space.iter_range(range) {
                *hist.entry(cardinality(q, &world)).or_insert(0) += 1;
            }
            hist
        })
        .collect();
    let mut out = BTreeMap::new();
    for part in partials {
        for (n, c) in part {
            *out.entry(n).or_insert(0) += c;
        }
    }
    Ok(out)
}

/// E[q] and D[q]² straight from the definition.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub worlds: u64,
    pub expectation: BigRational,
    pub variance: BigRational,
    pub distribution: BTreeMap<u64, u64>,
}

impl Moments {
    pub fn from_distribution(distribution: BTreeMap<u64, u64>) -> Self {
        let worlds: u64 = distribution.values().sum();
        let total = BigInt::from(worlds);
        let mut sum = BigInt::zero();
        let mut sum_sq = BigInt::zero();
        for (&n, &c) in &distribution {
            sum += BigInt::from(n) * BigInt::from(c);
            sum_sq += BigInt::from(n) * BigInt::from(n) * BigInt::from(c);
        }
        let (expectation, variance) = if worlds == 0 {
            (BigRational::zero(), BigRational::zero())
        } else {
            let e = BigRational::new(sum, total.clone());
            let v = BigRational::new(sum_sq, total) - &e * &e;
            (e, v)
        };
        Self {
            worlds,
            expectation,
            variance,
            distribution,
        }
    }

    /// Fraction of worlds whose cardinality N has q-error ≥ ε against
    /// `estimate`, computed exactly.
    pub fn tail_fraction(&self, estimate: &BigRational, eps: &BigRational) -> BigRational {
        let hits: u64 = self
            .distribution
            .iter()
            .filter(|(&n, _)| qerror_at_least(n, estimate, eps))
            .map(|(_, &c)| c)
            .sum();
        BigRational::new(BigInt::from(hits), BigInt::from(self.worlds.max(1)))
    }
}

/// max(N′/E′, E′/N′) ≥ ε with N′ = max(N,1) and E′ = max(E,1), exactly.
pub fn qerror_at_least(n: u64, e: &BigRational, eps: &BigRational) -> bool {
    let one = BigRational::from_integer(1.into());
    let n = BigRational::from_integer(BigInt::from(n.max(1)));
    let e = if *e < one { one } else { e.clone() };
    n >= eps * &e || e >= eps * &n
}

pub fn exact_moments(q: &Query, s: &Summary, cap: u64) -> Result<Moments, OracleError> {
    Ok(Moments::from_distribution(cardinality_distribution(q, s, cap)?))
}

/// Σ_G |ans(q,G)| / |⟦S⟧|
pub fn exact_expectation(q: &Query, s: &Summary, cap: u64) -> Result<BigRational, OracleError> {
    Ok(exact_moments(q, s, cap)?.expectation)
}

/// Σ_G (|ans(q,G)| − E)² / |⟦S⟧|
pub fn exact_variance(q: &Query, s: &Summary, cap: u64) -> Result<BigRational, OracleError> {
    Ok(exact_moments(q, s, cap)?.variance)
}
