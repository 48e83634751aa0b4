//! Iterative bucket merging guided by MinHash signatures, with type merging
//! when bucket merging stalls.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::rdf::{RdfGraph, ResourceId};
use crate::summary::{summarize_graph, BucketMapping, Summary};

use super::minhash::{approx_jaccard, MinHashScheme, Signature, VicinityIndex};
use super::types::{self_mapped, ResourceType};
use super::SummarizerError;

/// A type during refinement: the out/in vectors become fractional once types
/// are merged, and the type carries the buckets currently of that type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeProfile {
    pub class_type: BTreeSet<ResourceId>,
    pub partition: u32,
    pub outgoing: Vec<BigRational>,
    pub incoming: Vec<BigRational>,
    pub buckets: BTreeSet<ResourceId>,
    approx: (Vec<f64>, Vec<f64>),
}

fn to_f64s(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

impl TypeProfile {
    pub fn new(t: &ResourceType, buckets: BTreeSet<ResourceId>) -> Self {
        let rat = |v: &[u32]| -> Vec<BigRational> {
            v.iter()
                .map(|&x| BigRational::from_integer(BigInt::from(x)))
                .collect()
        };
        Self::from_parts(
            t.class_type.clone(),
            t.partition,
            rat(&t.outgoing),
            rat(&t.incoming),
            buckets,
        )
    }

    pub fn from_parts(
        class_type: BTreeSet<ResourceId>,
        partition: u32,
        outgoing: Vec<BigRational>,
        incoming: Vec<BigRational>,
        buckets: BTreeSet<ResourceId>,
    ) -> Self {
        let approx = (to_f64s(&outgoing), to_f64s(&incoming));
        Self {
            class_type,
            partition,
            outgoing,
            incoming,
            buckets,
            approx,
        }
    }

    /// Types can only be similar when class and partition types coincide.
    pub fn comparable(&self, other: &Self) -> bool {
        self.class_type == other.class_type && self.partition == other.partition
    }

    /// Average of the generalised Jaccard indexes of the out and in vectors,
    /// each normalised by the vector length so the result lies in [0, 1].
    pub fn similarity(&self, other: &Self) -> Option<f64> {
        if !self.comparable(other) {
            return None;
        }
        let gj = |a: &[f64], b: &[f64]| {
            if a.is_empty() {
                return 1.0;
            }
            let sum: f64 = a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let hi = x.max(*y);
                    if hi == 0.0 {
                        1.0
                    } else {
                        x.min(*y) / hi
                    }
                })
                .sum();
            sum / a.len() as f64
        };
        Some(0.5 * (gj(&self.approx.0, &other.approx.0) + gj(&self.approx.1, &other.approx.1)))
    }

    /// [`TypeProfile::similarity`] in exact arithmetic.
    pub fn similarity_exact(&self, other: &Self) -> Option<BigRational> {
        if !self.comparable(other) {
            return None;
        }
        let gj = |a: &[BigRational], b: &[BigRational]| {
            if a.is_empty() {
                return BigRational::one();
            }
            let mut sum = BigRational::zero();
            for (x, y) in a.iter().zip(b) {
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                sum += if hi.is_zero() {
                    BigRational::one()
                } else {
                    lo / hi
                };
            }
            sum / BigRational::from_integer(BigInt::from(a.len()))
        };
        let half = BigRational::new(1.into(), 2.into());
        Some(half * (gj(&self.outgoing, &other.outgoing) + gj(&self.incoming, &other.incoming)))
    }

    /// Element-wise averaged vectors and the union of the bucket sets.
    pub fn merge(&self, other: &Self) -> Self {
        let two = BigRational::from_integer(2.into());
        let avg = |a: &[BigRational], b: &[BigRational]| -> Vec<BigRational> {
            a.iter().zip(b).map(|(x, y)| (x + y) / &two).collect()
        };
        Self::from_parts(
            self.class_type.clone(),
            self.partition,
            avg(&self.outgoing, &other.outgoing),
            avg(&self.incoming, &other.incoming),
            self.buckets.union(&other.buckets).copied().collect(),
        )
    }
}

/// Pairs sampled per type merge.
pub const TYPE_MERGE_SAMPLES: usize = 500;
/// Minimum similarity for merging two types.
pub const TYPE_MERGE_THRESHOLD: f64 = 0.5;
/// Fraction by which one round of type merging tries to shrink the type set.
pub const TYPE_MERGE_REDUCTION: f64 = 0.2;

/// Merges similar types until the live type count has dropped by 20% or no
/// sampled pair reaches 50% similarity. Returns how many merges happened.
/// Merged types keep the lower slot; the other slot becomes `None`.
pub fn merge_similar_types<R: Rng + ?Sized>(
    types: &mut [Option<TypeProfile>],
    rng: &mut R,
) -> usize {
    let live = types.iter().filter(|t| t.is_some()).count();
    let wanted = ((live as f64) * TYPE_MERGE_REDUCTION).ceil() as usize;
    let mut group_of: HashMap<(&BTreeSet<ResourceId>, u32), usize> = HashMap::new();
    let mut group: Vec<usize> = vec![usize::MAX; types.len()];
    for (i, t) in types.iter().enumerate() {
        if let Some(t) = t {
            let next = group_of.len();
            group[i] = *group_of.entry((&t.class_type, t.partition)).or_insert(next);
        }
    }
    let group_count = group_of.len();
    drop(group_of);

    let mut merged = 0;
    while merged < wanted {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); group_count];
        for (i, t) in types.iter().enumerate() {
            if t.is_some() {
                members[group[i]].push(i);
            }
        }
        members.retain(|m| m.len() >= 2);
        let pair_counts: Vec<usize> = members.iter().map(|m| m.len() * (m.len() - 1) / 2).collect();
        let total: usize = pair_counts.iter().sum();
        if total == 0 {
            break;
        }
        let candidates: Vec<(usize, usize)> = if total <= TYPE_MERGE_SAMPLES {
            members
                .iter()
                .flat_map(|m| {
                    (0..m.len()).flat_map(move |a| (a + 1..m.len()).map(move |b| (m[a], m[b])))
                })
                .collect()
        } else {
            (0..TYPE_MERGE_SAMPLES)
                .map(|_| {
                    let mut pick = rng.gen_range(0..total);
                    let mut g = 0;
                    while pick >= pair_counts[g] {
                        pick -= pair_counts[g];
                        g += 1;
                    }
                    let m = &members[g];
                    let a = rng.gen_range(0..m.len());
                    let mut b = rng.gen_range(0..m.len() - 1);
                    if b >= a {
                        b += 1;
                    }
                    (m[a.min(b)], m[a.max(b)])
                })
                .collect()
        };
        let mut best: Option<(f64, usize, usize)> = None;
        for (a, b) in candidates {
            let (Some(ta), Some(tb)) = (&types[a], &types[b]) else {
                continue;
            };
            let sim = ta.similarity(tb).unwrap_or(0.0);
            if best.map_or(true, |(s, _, _)| sim > s) {
                best = Some((sim, a, b));
            }
        }
        match best {
            Some((sim, a, b)) if sim >= TYPE_MERGE_THRESHOLD => {
                let other = types[b].take().expect("live type");
                let kept = types[a].as_ref().expect("live type").merge(&other);
                types[a] = Some(kept);
                merged += 1;
            }
            _ => break,
        }
    }
    merged
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefineConfig {
    pub m: usize,
    pub n: usize,
    pub target: usize,
    pub seed: u64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            m: 20,
            n: 2,
            target: 30_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationStats {
    /// 0 describes the trivial summary before any merge.
    pub iteration: usize,
    pub summary_size: usize,
    pub bucket_count: usize,
    pub type_count: usize,
    pub bucket_merges: usize,
    pub type_merges: usize,
}

/// One scheduled bucket merge, kept so the quality of LSH bins can be
/// inspected afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeRecord {
    pub iteration: usize,
    pub from: ResourceId,
    pub into: ResourceId,
    pub row: usize,
    /// Ĵ between the two signatures when the merge was scheduled.
    pub approx_jaccard: f64,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub summary: Summary,
    /// |H| ≤ target
    pub achieved: bool,
    pub iterations: Vec<IterationStats>,
    pub merges: Vec<MergeRecord>,
}

/// Starts from the trivial summary of `g` and merges buckets of equal type
/// that share an LSH bin until |H| ≤ target. When a round shrinks H by at
/// most 1% of the remaining excess, similar types are merged; if none are,
/// the current summary is returned with `achieved` false.
pub fn minhash_refine(
    g: &RdfGraph,
    types: &BTreeMap<ResourceId, ResourceType>,
    config: &RefineConfig,
) -> Result<RefineOutcome, SummarizerError> {
    if config.target == 0 {
        return Err(SummarizerError::InvalidParameter("target must be at least 1".into()));
    }
    let scheme = MinHashScheme::new(config.m, config.n, config.seed)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed ^ 0x7970_6573);
    let mut s = summarize_graph(g, BucketMapping::identity(g))?;

    let fixed = self_mapped(g);
    let mut grouped: BTreeMap<&ResourceType, BTreeSet<ResourceId>> = BTreeMap::new();
    for r in g.resources() {
        if fixed.contains(&r) {
            continue;
        }
        let t = types
            .get(&r)
            .ok_or_else(|| SummarizerError::MissingType(g.dictionary().render(r)))?;
        grouped.entry(t).or_default().insert(r);
    }
    let mut profiles: Vec<(ResourceId, TypeProfile)> = grouped
        .into_iter()
        .map(|(t, b)| (*b.first().expect("nonempty"), TypeProfile::new(t, b)))
        .collect();
    profiles.sort_by_key(|(first, _)| *first);
    let mut profiles: Vec<Option<TypeProfile>> = profiles.into_iter().map(|(_, p)| Some(p)).collect();

    let live_types = |p: &[Option<TypeProfile>]| p.iter().filter(|t| t.is_some()).count();
    let mut iterations = vec![IterationStats {
        iteration: 0,
        summary_size: s.len(),
        bucket_count: s.bucket_count(),
        type_count: live_types(&profiles),
        bucket_merges: 0,
        type_merges: 0,
    }];
    let mut merges = Vec::new();
    let mut iteration = 0;
    while s.len() > config.target {
        iteration += 1;
        let index = VicinityIndex::new(&s);
        let mut redirect: HashMap<ResourceId, ResourceId> = HashMap::new();
        for profile in profiles.iter_mut().flatten() {
            if profile.buckets.len() < 2 {
                continue;
            }
            let members: Vec<ResourceId> = profile.buckets.iter().copied().collect();
            let signatures: Vec<Signature> = members
                .par_iter()
                .map(|b| scheme.signature(index.get(*b)))
                .collect();
            let mut alive = vec![true; members.len()];
            for row in 0..scheme.rows() {
                let mut bins: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
                for (k, sig) in signatures.iter().enumerate() {
                    if alive[k] {
                        bins.entry(scheme.lsh(sig.row(row))).or_default().push(k);
                    }
                }
                for bin in bins.values().filter(|bin| bin.len() >= 2) {
                    // members are sorted, so the first is the smallest id
                    let into = bin[0];
                    for &from in &bin[1..] {
                        alive[from] = false;
                        profile.buckets.remove(&members[from]);
                        redirect.insert(members[from], members[into]);
                        merges.push(MergeRecord {
                            iteration,
                            from: members[from],
                            into: members[into],
                            row,
                            approx_jaccard: approx_jaccard(&signatures[from], &signatures[into]),
                        });
                    }
                }
            }
        }
        // a designated bucket may itself be merged in a later row
        let resolved: HashMap<ResourceId, ResourceId> = redirect
            .keys()
            .map(|&from| {
                let mut to = redirect[&from];
                while let Some(&next) = redirect.get(&to) {
                    to = next;
                }
                (from, to)
            })
            .collect();
        let before = s.len();
        s.redirect(&resolved);
        let after = s.len();
        let mut stats = IterationStats {
            iteration,
            summary_size: after,
            bucket_count: s.bucket_count(),
            type_count: live_types(&profiles),
            bucket_merges: resolved.len(),
            type_merges: 0,
        };
        let stalled = ((before - after) as f64) <= (after as f64 - config.target as f64) * 0.01;
        if stalled {
            stats.type_merges = merge_similar_types(&mut profiles, &mut rng);
            stats.type_count = live_types(&profiles);
            iterations.push(stats);
            if stats.type_merges == 0 {
                break;
            }
        } else {
            iterations.push(stats);
        }
    }
    Ok(RefineOutcome {
        achieved: s.len() <= config.target,
        summary: s,
        iterations,
        merges,
    })
}
