use std::collections::HashMap;
use std::sync::Mutex;

use crate::query::{Atom, Query, Term};

use super::EstimateError;

/// Union-find over the terms of a query, where terms are indexed in the fixed
/// total order (resources first). Each class is rooted at its least member,
/// so the root is the ≤-least term of the class.
#[derive(Debug, Clone)]
struct TermForest {
    parent: Vec<u32>,
    resources: u32,
}

impl TermForest {
    fn new(terms: usize, resources: usize) -> Self {
        Self {
            parent: (0..terms as u32).collect(),
            resources: resources as u32,
        }
    }

    fn find(&mut self, mut i: u32) -> u32 {
        while self.parent[i as usize] != i {
            let up = self.parent[self.parent[i as usize] as usize];
            self.parent[i as usize] = up;
            i = up;
        }
        i
    }

    /// Joins two classes; false if that would connect two distinct resources.
    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        if ra < self.resources && rb < self.resources {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        true
    }
}

/// Atoms of a query with their terms replaced by indexes into the term order.
#[derive(Debug, Clone)]
struct IndexedAtoms {
    terms: Vec<Term>,
    resources: usize,
    atoms: Vec<[u32; 3]>,
}

impl IndexedAtoms {
    fn new(atoms: &[Atom]) -> Self {
        let mut terms: Vec<Term> = atoms.iter().flat_map(|a| a.terms).collect();
        terms.sort_unstable();
        terms.dedup();
        let resources = terms.iter().filter(|t| !t.is_variable()).count();
        let pos = |t: &Term| terms.binary_search(t).expect("term present") as u32;
        let indexed = atoms.iter().map(|a| a.terms.map(|t| pos(&t))).collect();
        Self {
            terms,
            resources,
            atoms: indexed,
        }
    }

    fn forest(&self) -> TermForest {
        TermForest::new(self.terms.len(), self.resources)
    }

    /// Equates two atoms position by position.
    fn unify(&self, forest: &mut TermForest, a: usize, b: usize) -> bool {
        (0..3).all(|k| forest.union(self.atoms[a][k], self.atoms[b][k]))
    }

    fn forest_for(&self, labels: &[u8]) -> TermForest {
        let mut forest = self.forest();
        let mut first: Vec<Option<usize>> = vec![None; labels.len()];
        for (i, &l) in labels.iter().enumerate() {
            match first[l as usize] {
                Some(f) => {
                    let ok = self.unify(&mut forest, f, i);
                    debug_assert!(ok);
                }
                None => first[l as usize] = Some(i),
            }
        }
        forest
    }
}

/// A unifiable partition of a query's atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// Block label of each atom, numbered by first occurrence.
    labels: Vec<u8>,
    block_count: usize,
    /// ρ_P(x) for each variable x of the query.
    unifier: Vec<Term>,
}

impl Partition {
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    /// Blocks as lists of atom indexes, in label order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.block_count];
        for (i, &l) in self.labels.iter().enumerate() {
            blocks[l as usize].push(i);
        }
        blocks
    }

    /// ρ_P(x): the least term of x's class in the term graph.
    pub fn unifier(&self) -> &[Term] {
        &self.unifier
    }

    /// P ≼ P′: every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        let mut image: Vec<Option<u8>> = vec![None; self.block_count];
        for (&mine, &theirs) in self.labels.iter().zip(&other.labels) {
            match image[mine as usize] {
                Some(t) if t != theirs => return false,
                Some(_) => {}
                None => image[mine as usize] = Some(theirs),
            }
        }
        true
    }

    pub fn is_discrete(&self) -> bool {
        self.block_count == self.labels.len()
    }
}

/// All unifiable partitions of a query, ordered by ≼, with the coefficients K.
#[derive(Debug)]
pub struct PartitionBase {
    atoms: Vec<Atom>,
    partitions: Vec<Partition>,
    index: HashMap<Vec<u8>, usize>,
    /// For each P, every P′ with P ≼ P′ (P itself first) and K(P, P′).
    above: Vec<Vec<(usize, i64)>>,
    memo: Mutex<HashMap<(usize, usize), i64>>,
}

impl PartitionBase {
    /// Enumerates the unifiable partitions of `q`, refusing queries with more
    /// than `atom_cap` atoms or bases with more than `partition_cap` members.
    pub fn new(q: &Query, atom_cap: usize, partition_cap: usize) -> Result<Self, EstimateError> {
        let atoms = q.atoms().to_vec();
        if atoms.len() > atom_cap || atoms.len() > u8::MAX as usize {
            return Err(EstimateError::AtomCap {
                atoms: atoms.len(),
                cap: atom_cap,
            });
        }
        let indexed = IndexedAtoms::new(&atoms);
        let mut labelings = Vec::new();
        let mut labels = Vec::with_capacity(atoms.len());
        let mut firsts = Vec::new();
        enumerate(
            &indexed,
            &mut labels,
            &mut firsts,
            indexed.forest(),
            &mut labelings,
            partition_cap,
        )?;

        let mut partitions: Vec<Partition> = labelings
            .into_iter()
            .map(|labels| {
                let mut forest = indexed.forest_for(&labels);
                let unifier = (0..q.var_count())
                    .map(|v| {
                        let idx = indexed
                            .terms
                            .binary_search(&Term::Variable(crate::query::VarId(v as u32)))
                            .expect("variable occurs");
                        indexed.terms[forest.find(idx as u32) as usize]
                    })
                    .collect();
                let block_count = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
                Partition {
                    labels,
                    block_count,
                    unifier,
                }
            })
            .collect();
        partitions.sort_by(|a, b| {
            b.block_count
                .cmp(&a.block_count)
                .then_with(|| a.labels.cmp(&b.labels))
        });
        let index: HashMap<Vec<u8>, usize> = partitions
            .iter()
            .enumerate()
            .map(|(i, p)| (p.labels.clone(), i))
            .collect();

        let mut above = Vec::with_capacity(partitions.len());
        let mut pairs = 0usize;
        for p in &partitions {
            let list = coarsenings(&indexed, p, &index);
            pairs += list.len();
            if pairs > partition_cap.saturating_mul(64) {
                return Err(EstimateError::PartitionCap { cap: partition_cap });
            }
            above.push(list);
        }
        Ok(Self {
            atoms,
            partitions,
            index,
            above,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn partition(&self, i: usize) -> &Partition {
        &self.partitions[i]
    }

    /// Index of the partition with the given block labels, if it is unifiable.
    /// Labels need not be normalised.
    pub fn find(&self, labels: &[u8]) -> Option<usize> {
        self.index.get(&normalise(labels)).copied()
    }

    /// P′ with P ≼ P′, paired with K(P, P′); P itself comes first.
    pub fn above(&self, p: usize) -> &[(usize, i64)] {
        &self.above[p]
    }

    /// P ≼ P′
    pub fn precedes(&self, p: usize, p2: usize) -> bool {
        self.partitions[p].refines(&self.partitions[p2])
    }

    /// K(P, P′) by the recursion K(P,P) = 1 and
    /// K(P,P′) = −Σ_{P ≺ P″ ≼ P′} K(P″,P′), memoised.
    pub fn kappa(&self, p: usize, p2: usize) -> Result<i64, EstimateError> {
        if !self.precedes(p, p2) {
            return Err(EstimateError::NotRefinement);
        }
        Ok(self.kappa_rec(p, p2))
    }

    fn kappa_rec(&self, p: usize, p2: usize) -> i64 {
        if p == p2 {
            return 1;
        }
        if let Some(&k) = self.memo.lock().expect("memo").get(&(p, p2)) {
            return k;
        }
        let mut sum = 0i64;
        for &(mid, _) in &self.above[p][1..] {
            if self.precedes(mid, p2) {
                sum += self.kappa_rec(mid, p2);
            }
        }
        self.memo.lock().expect("memo").insert((p, p2), -sum);
        -sum
    }

    /// K(P, P′) as the number of even-length minus odd-length ≺-chains from P
    /// to P′. Exponential; intended as a reference.
    pub fn kappa_by_chains(&self, p: usize, p2: usize) -> Result<i64, EstimateError> {
        if !self.precedes(p, p2) {
            return Err(EstimateError::NotRefinement);
        }
        // chains[d] = number of chains from `from` to p2 with d steps
        fn walk(base: &PartitionBase, from: usize, to: usize, depth: usize, counts: &mut Vec<i64>) {
            if from == to {
                if counts.len() <= depth {
                    counts.resize(depth + 1, 0);
                }
                counts[depth] += 1;
                return;
            }
            for &(mid, _) in &base.above[from][1..] {
                if base.precedes(mid, to) {
                    walk(base, mid, to, depth + 1, counts);
                }
            }
        }
        let mut counts = Vec::new();
        walk(self, p, p2, 0, &mut counts);
        Ok(counts
            .iter()
            .enumerate()
            .map(|(d, c)| if d % 2 == 0 { *c } else { -*c })
            .sum())
    }
}

fn normalise(labels: &[u8]) -> Vec<u8> {
    let mut map: HashMap<u8, u8> = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len() as u8;
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Assigns atoms to blocks one at a time, never extending a partial partition
/// whose term graph already joins two distinct resources.
fn enumerate(
    indexed: &IndexedAtoms,
    labels: &mut Vec<u8>,
    firsts: &mut Vec<usize>,
    forest: TermForest,
    out: &mut Vec<Vec<u8>>,
    cap: usize,
) -> Result<(), EstimateError> {
    let i = labels.len();
    if i == indexed.atoms.len() {
        if out.len() >= cap {
            return Err(EstimateError::PartitionCap { cap });
        }
        out.push(labels.clone());
        return Ok(());
    }
    for block in 0..firsts.len() {
        let mut f = forest.clone();
        if indexed.unify(&mut f, firsts[block], i) {
            labels.push(block as u8);
            enumerate(indexed, labels, firsts, f, out, cap)?;
            labels.pop();
        }
    }
    labels.push(firsts.len() as u8);
    firsts.push(i);
    enumerate(indexed, labels, firsts, forest, out, cap)?;
    firsts.pop();
    labels.pop();
    Ok(())
}

/// Every unifiable coarsening P′ of `p` with K(P, P′). Since refining a
/// unifiable partition keeps it unifiable, the interval [P, P′] is a full
/// interval of the partition lattice, and K is its Möbius function:
/// the product over blocks of P′ of (−1)^(m−1)·(m−1)!, where m counts the
/// blocks of P merged into it.
fn coarsenings(
    indexed: &IndexedAtoms,
    p: &Partition,
    index: &HashMap<Vec<u8>, usize>,
) -> Vec<(usize, i64)> {
    let blocks = p.blocks();
    let forest = indexed.forest_for(&p.labels);
    let mut out = Vec::new();
    let mut group_of = Vec::with_capacity(blocks.len());
    let mut group_firsts: Vec<usize> = Vec::new();
    let mut group_sizes: Vec<usize> = Vec::new();
    fn rec(
        indexed: &IndexedAtoms,
        p: &Partition,
        blocks: &[Vec<usize>],
        index: &HashMap<Vec<u8>, usize>,
        forest: TermForest,
        group_of: &mut Vec<u8>,
        group_firsts: &mut Vec<usize>,
        group_sizes: &mut Vec<usize>,
        out: &mut Vec<(usize, i64)>,
    ) {
        let b = group_of.len();
        if b == blocks.len() {
            let labels: Vec<u8> = p.labels.iter().map(|&l| group_of[l as usize]).collect();
            let idx = *index.get(&labels).expect("coarsening of a unifiable partition");
            let kappa = group_sizes
                .iter()
                .map(|&m| {
                    let f: i64 = (1..m as i64).product();
                    if m % 2 == 0 {
                        -f
                    } else {
                        f
                    }
                })
                .product();
            out.push((idx, kappa));
            return;
        }
        let atom = blocks[b][0];
        for g in 0..group_firsts.len() {
            let mut f = forest.clone();
            if indexed.unify(&mut f, group_firsts[g], atom) {
                group_of.push(g as u8);
                group_sizes[g] += 1;
                rec(indexed, p, blocks, index, f, group_of, group_firsts, group_sizes, out);
                group_sizes[g] -= 1;
                group_of.pop();
            }
        }
        group_of.push(group_firsts.len() as u8);
        group_firsts.push(atom);
        group_sizes.push(1);
        rec(indexed, p, blocks, index, forest, group_of, group_firsts, group_sizes, out);
        group_sizes.pop();
        group_firsts.pop();
        group_of.pop();
    }
    rec(
        indexed,
        p,
        &blocks,
        index,
        forest,
        &mut group_of,
        &mut group_firsts,
        &mut group_sizes,
        &mut out,
    );
    // the last coarsening produced keeps every block apart, which is P itself
    debug_assert_eq!(out.last().map(|x| x.1), Some(1));
    let own = out.pop().expect("P itself");
    out.sort_unstable();
    out.insert(0, own);
    out
}
