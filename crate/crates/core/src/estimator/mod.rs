//! Expectation and variance of a query's cardinality over the possible worlds
//! of a summary, and the q-error bound derived from them.

mod partition;
mod scalar;

use std::collections::HashMap;
use std::fmt;
use std::ops::ControlFlow;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::query::{Answer, Atom, Evaluator, Query, Term};
use crate::rdf::{ResourceId, Triple};
use crate::summary::{Summary, SummaryError};

pub use partition::{Partition, PartitionBase};
pub use scalar::{falling_factorial, falling_ratio, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimateError {
    #[error("summary is inconsistent (some weight exceeds its triple size)")]
    Inconsistent,
    #[error("resource {0} is outside the domain of the summarisation function")]
    OutsideDomain(String),
    #[error("general path intractable: {atoms} atoms exceed the cap of {cap}")]
    AtomCap { atoms: usize, cap: usize },
    #[error("general path intractable: partition base exceeds the cap of {cap}")]
    PartitionCap { cap: usize },
    #[error("more than {cap} answers over the summary graph")]
    AnswerCap { cap: u64 },
    #[error("query is not unification-free under the summary")]
    NotUnificationFree,
    #[error("partition does not refine the other")]
    NotRefinement,
    #[error("variance intractable: {0}")]
    VarianceIntractable(Box<EstimateError>),
    #[error("{0}")]
    Summary(String),
    #[error("bound inapplicable: E[q] = {0} < 1")]
    BoundInapplicable(f64),
    #[error("epsilon must exceed 1, got {0}")]
    InvalidEpsilon(f64),
    #[error("variance came out negative ({0}) beyond rounding tolerance")]
    NegativeVariance(f64),
}

impl From<SummaryError> for EstimateError {
    fn from(e: SummaryError) -> Self {
        match e {
            SummaryError::OutsideDomain(r) => EstimateError::OutsideDomain(r),
            other => EstimateError::Summary(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorConfig {
    /// Largest query handled by the general formula.
    pub atom_cap: usize,
    /// Largest partition base handled by the general formula.
    pub partition_cap: usize,
    /// Abort when μ(q) has more answers than this over H.
    pub answer_cap: u64,
    /// Fan the per-answer sum out over threads.
    pub parallel: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            atom_cap: 12,
            partition_cap: 100_000,
            answer_cap: 50_000_000,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Path {
    General,
    UnificationFree,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Path::General => "general",
            Path::UnificationFree => "unification-free",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<S> {
    pub expectation: S,
    /// |ans(μ(q), H)|
    pub answers_over_h: u64,
    pub path: Path,
}

/// Answers this many τ per work unit; fixed so float sums do not depend on
/// the thread count.
const CHUNK: usize = 4096;

/// Estimator bound to one consistent summary.
pub struct Estimator<'s> {
    summary: &'s Summary,
    config: EstimatorConfig,
}

impl<'s> Estimator<'s> {
    pub fn new(summary: &'s Summary, config: EstimatorConfig) -> Result<Self, EstimateError> {
        if !summary.is_consistent() {
            return Err(EstimateError::Inconsistent);
        }
        Ok(Self { summary, config })
    }

    pub fn summary(&self) -> &Summary {
        self.summary
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    /// μ applied atom by atom, keeping one entry per atom of q.
    fn mapped_atoms(&self, q: &Query) -> Result<Vec<Atom>, EstimateError> {
        self.summary.check_domain(q)?;
        Ok(q.atoms()
            .iter()
            .map(|a| a.map_resources(|r| self.summary.mu(r).expect("checked")))
            .collect())
    }

    /// True iff no two distinct atoms of q become unifiable once μ is applied.
    pub fn is_unification_free(&self, q: &Query) -> Result<bool, EstimateError> {
        let mapped = self.mapped_atoms(q)?;
        for i in 0..mapped.len() {
            for j in i + 1..mapped.len() {
                if unifiable(&mapped[i], &mapped[j]) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// ans(μ(q), H), subject to the answer cap.
    fn answers_over_h(&self, q: &Query) -> Result<(Query, Vec<Answer>), EstimateError> {
        let mapped = self.summary.map_query(q)?;
        debug_assert_eq!(mapped.var_count(), q.var_count());
        let ev = Evaluator::new(&mapped, self.summary.graph());
        let cap = self.config.answer_cap;
        let mut out = Vec::new();
        let flow = ev.for_each(|a| {
            if out.len() as u64 >= cap {
                return ControlFlow::Break(());
            }
            out.push(a.to_vec());
            ControlFlow::Continue(())
        });
        if flow.is_break() {
            return Err(EstimateError::AnswerCap { cap });
        }
        Ok((mapped, out))
    }

    /// E[q], through the product formula when q is unification-free under μ
    /// and through the partition-base formula otherwise.
    pub fn expectation<S: Scalar>(&self, q: &Query) -> Result<Estimate<S>, EstimateError> {
        if self.is_unification_free(q)? {
            self.expectation_fast(q)
        } else {
            self.expectation_general(q)
        }
    }

    /// E[q] = Σ_τ ∏_x size(τ(x)) · ∏_{a∈q} w(τ(μ(a))) / size(τ(μ(a))).
    /// Only valid for unification-free queries.
    pub fn expectation_fast<S: Scalar>(&self, q: &Query) -> Result<Estimate<S>, EstimateError> {
        if !self.is_unification_free(q)? {
            return Err(EstimateError::NotUnificationFree);
        }
        let (_, answers) = self.answers_over_h(q)?;
        let mapped = self.mapped_atoms(q)?;
        let s = self.summary;
        let contribution = |tau: &Answer| -> S {
            let mut acc = S::one();
            for &b in tau {
                acc = acc * S::from_u128(s.size(b) as u128);
            }
            for a in &mapped {
                let h = a.instantiate(tau);
                let w = s.weight(&h).expect("answer over H") as u128;
                acc = acc * S::ratio(w, s.triple_size(&h));
            }
            acc
        };
        Ok(Estimate {
            expectation: self.fold(&answers, contribution),
            answers_over_h: answers.len() as u64,
            path: Path::UnificationFree,
        })
    }

    /// E[q] by summing, per answer τ of μ(q) over H, the partition-base terms
    /// F(τ,P) · Σ_{P ≼ P′} K(P,P′) · C(τ,P′) over the partitions satisfied by τ.
    pub fn expectation_general<S: Scalar>(&self, q: &Query) -> Result<Estimate<S>, EstimateError> {
        self.summary.check_domain(q)?;
        let base = PartitionBase::new(q, self.config.atom_cap, self.config.partition_cap)?;
        let (_, answers) = self.answers_over_h(q)?;
        let bound = BoundBase::new(&base, self.summary);
        let expectation = self.fold(&answers, |tau| bound.contribution::<S>(tau));
        Ok(Estimate {
            expectation,
            answers_over_h: answers.len() as u64,
            path: Path::General,
        })
    }

    fn fold<S: Scalar>(&self, answers: &[Answer], f: impl Fn(&Answer) -> S + Sync) -> S {
        let chunk_sum = |chunk: &[Answer]| chunk.iter().fold(S::zero(), |acc, t| acc + f(t));
        let partials: Vec<S> = if self.config.parallel && answers.len() > CHUNK {
            answers.par_chunks(CHUNK).map(chunk_sum).collect()
        } else {
            answers.chunks(CHUNK).map(chunk_sum).collect()
        };
        partials.into_iter().fold(S::zero(), |acc, x| acc + x)
    }

    /// D[q]² = E[q ∪ ρ(q)] − E[q]², with ρ renaming every variable apart.
    /// Float results within 1e-6·E[q]² below zero are clamped to 0.
    pub fn variance<S: Scalar>(&self, q: &Query) -> Result<S, EstimateError> {
        Ok(self.variance_detail::<S>(q)?.0)
    }

    /// Variance together with E[q] and the unclamped difference.
    pub fn variance_detail<S: Scalar>(&self, q: &Query) -> Result<(S, S, S), EstimateError> {
        let e: S = self.expectation(q)?.expectation;
        let doubled = q.union_with_renamed_copy();
        let e2: S = self
            .expectation(&doubled)
            .map_err(|err| match err {
                EstimateError::AtomCap { .. }
                | EstimateError::PartitionCap { .. }
                | EstimateError::AnswerCap { .. } => {
                    EstimateError::VarianceIntractable(Box::new(err))
                }
                other => other,
            })?
            .expectation;
        let raw = e2 - e.clone() * e.clone();
        if raw >= S::zero() {
            return Ok((raw.clone(), e, raw));
        }
        let tolerance = 1e-6 * e.to_f64() * e.to_f64();
        if !S::EXACT && -raw.to_f64() <= tolerance {
            return Ok((S::zero(), e, raw));
        }
        Err(EstimateError::NegativeVariance(raw.to_f64()))
    }

    /// Upper bound on P(q-error ≥ ε) for the estimate E[q].
    pub fn qerror_bound(&self, q: &Query, eps: f64) -> Result<f64, EstimateError> {
        if eps.is_nan() || eps <= 1.0 {
            return Err(EstimateError::InvalidEpsilon(eps));
        }
        let e: f64 = self.expectation(q)?.expectation;
        if e < 1.0 {
            return Err(EstimateError::BoundInapplicable(e));
        }
        let var: f64 = self.variance(q)?;
        qerror_bound(e, var, eps)
    }
}

/// min(1, (ε·D / ((ε−1)·E))²), with the numerator reduced to D when ε ≥ E.
pub fn qerror_bound(expectation: f64, variance: f64, eps: f64) -> Result<f64, EstimateError> {
    if eps.is_nan() || eps <= 1.0 {
        return Err(EstimateError::InvalidEpsilon(eps));
    }
    if expectation.is_nan() || expectation < 1.0 {
        return Err(EstimateError::BoundInapplicable(expectation));
    }
    let scale = if eps >= expectation { 1.0 } else { eps * eps };
    let bound = scale * variance / ((eps - 1.0) * (eps - 1.0) * expectation * expectation);
    Ok(bound.clamp(0.0, 1.0))
}

/// Exact counterpart of [`qerror_bound`].
pub fn qerror_bound_exact(
    expectation: &BigRational,
    variance: &BigRational,
    eps: &BigRational,
) -> Result<BigRational, EstimateError> {
    let one = BigRational::one();
    if *eps <= one {
        return Err(EstimateError::InvalidEpsilon(Scalar::to_f64(eps)));
    }
    if *expectation < one {
        return Err(EstimateError::BoundInapplicable(Scalar::to_f64(expectation)));
    }
    let scale = if eps >= expectation {
        one.clone()
    } else {
        eps * eps
    };
    let gap = eps - &one;
    let bound = scale * variance / (&gap * &gap * expectation * expectation);
    Ok(if bound > one {
        one
    } else if bound.is_negative() {
        BigRational::zero()
    } else {
        bound
    })
}

/// Two atoms are unifiable when equating them position by position never
/// equates two distinct resources.
pub fn unifiable(a: &Atom, b: &Atom) -> bool {
    let mut classes: Vec<Vec<Term>> = Vec::new();
    let class_of = |classes: &Vec<Vec<Term>>, t: &Term| classes.iter().position(|c| c.contains(t));
    for k in 0..3 {
        let (x, y) = (a.terms[k], b.terms[k]);
        let merged = match (class_of(&classes, &x), class_of(&classes, &y)) {
            (Some(i), Some(j)) if i == j => continue,
            (Some(i), Some(j)) => {
                let (lo, hi) = (i.min(j), i.max(j));
                let moved = classes.remove(hi);
                classes[lo].extend(moved);
                lo
            }
            (Some(i), None) => {
                classes[i].push(y);
                i
            }
            (None, Some(j)) => {
                classes[j].push(x);
                j
            }
            (None, None) => {
                classes.push(if x == y { vec![x] } else { vec![x, y] });
                classes.len() - 1
            }
        };
        if classes[merged].iter().filter(|t| !t.is_variable()).count() > 1 {
            return false;
        }
    }
    true
}

/// Target of a variable under ρ_P, with resources already mapped by μ.
#[derive(Debug, Clone, Copy)]
enum Target {
    Var(usize),
    Bucket(ResourceId),
}

/// A partition prepared for evaluation against one summary.
struct BoundPartition {
    /// (x, ρ_P(x)) for every x not mapped to itself.
    constraints: Vec<(usize, Target)>,
    /// vrng(ρ_P)
    representatives: Vec<usize>,
    /// μ of one atom per block.
    block_atoms: Vec<Atom>,
}

struct BoundBase<'a> {
    base: &'a PartitionBase,
    summary: &'a Summary,
    partitions: Vec<BoundPartition>,
}

impl<'a> BoundBase<'a> {
    fn new(base: &'a PartitionBase, summary: &'a Summary) -> Self {
        let atoms = base.atoms();
        let partitions = base
            .partitions()
            .iter()
            .map(|p| {
                let mut constraints = Vec::new();
                let mut representatives = Vec::new();
                for (x, t) in p.unifier().iter().enumerate() {
                    match *t {
                        Term::Variable(y) if y.index() == x => representatives.push(x),
                        Term::Variable(y) => constraints.push((x, Target::Var(y.index()))),
                        Term::Resource(r) => constraints
                            .push((x, Target::Bucket(summary.mu(r).expect("checked domain")))),
                    }
                }
                let block_atoms = p
                    .blocks()
                    .iter()
                    .map(|b| atoms[b[0]].map_resources(|r| summary.mu(r).expect("checked domain")))
                    .collect();
                BoundPartition {
                    constraints,
                    representatives,
                    block_atoms,
                }
            })
            .collect();
        Self {
            base,
            summary,
            partitions,
        }
    }

    /// Whether P is in B_τ.
    fn satisfied(&self, p: usize, tau: &[ResourceId]) -> bool {
        self.partitions[p].constraints.iter().all(|&(x, t)| match t {
            Target::Var(y) => tau[x] == tau[y],
            Target::Bucket(b) => tau[x] == b,
        })
    }

    /// C(τ,P) = ∏_{x ∈ vrng(ρ_P)} size(τ(x)), or None on overflow.
    fn coeff_c(&self, p: usize, tau: &[ResourceId]) -> Option<i128> {
        self.partitions[p]
            .representatives
            .iter()
            .try_fold(1i128, |acc, &x| acc.checked_mul(self.summary.size(tau[x]) as i128))
    }

    fn coeff_c_scalar<S: Scalar>(&self, p: usize, tau: &[ResourceId]) -> S {
        self.partitions[p]
            .representatives
            .iter()
            .fold(S::one(), |acc, &x| acc * S::from_u128(self.summary.size(tau[x]) as u128))
    }

    /// F(τ,P) = ∏_h (w(h))_n / (size(h))_n with n the number of blocks mapped
    /// onto h; zero when some n exceeds w(h).
    fn factor_f<S: Scalar>(&self, p: usize, tau: &[ResourceId]) -> S {
        let mut counts: Vec<(Triple, u128)> = Vec::new();
        for a in &self.partitions[p].block_atoms {
            let h = a.instantiate(tau);
            match counts.iter_mut().find(|(t, _)| *t == h) {
                Some((_, n)) => *n += 1,
                None => counts.push((h, 1)),
            }
        }
        let mut acc = S::one();
        for (h, n) in counts {
            let w = self.summary.weight(&h).expect("answer over H") as u128;
            if n > w {
                return S::zero();
            }
            acc = acc * falling_ratio::<S>(w, self.summary.triple_size(&h), n);
        }
        acc
    }

    /// Σ_{P′ ∈ B_τ, P ≼ P′} K(P,P′)·C(τ,P′) for each P ∈ B_τ.
    fn expansion_counts<S: Scalar>(&self, tau: &[ResourceId]) -> Vec<(usize, S)> {
        let n = self.partitions.len();
        let satisfied: Vec<bool> = (0..n).map(|p| self.satisfied(p, tau)).collect();
        let mut c: HashMap<usize, Option<i128>> = HashMap::new();
        let mut out = Vec::new();
        for p in (0..n).filter(|&p| satisfied[p]) {
            let mut exact = Some(0i128);
            for &(p2, k) in self.base.above(p) {
                if !satisfied[p2] {
                    continue;
                }
                let cp = *c.entry(p2).or_insert_with(|| self.coeff_c(p2, tau));
                exact = exact
                    .zip(cp)
                    .and_then(|(acc, cp)| cp.checked_mul(k as i128).and_then(|t| acc.checked_add(t)));
            }
            let value = match exact {
                Some(v) => S::from_i128(v),
                None => self.base.above(p).iter().filter(|(p2, _)| satisfied[*p2]).fold(
                    S::zero(),
                    |acc, &(p2, k)| acc + S::from_i128(k as i128) * self.coeff_c_scalar::<S>(p2, tau),
                ),
            };
            out.push((p, value));
        }
        out
    }

    fn contribution<S: Scalar>(&self, tau: &Answer) -> S {
        let mut total = S::zero();
        for (p, count) in self.expansion_counts::<S>(tau) {
            if count.is_zero() {
                continue;
            }
            let f: S = self.factor_f(p, tau);
            if !f.is_zero() {
                total = total + f * count;
            }
        }
        total
    }
}

/// Per-answer quantities of the general formula, exposed for inspection.
pub struct AnswerTerms {
    /// Indexes into the partition base of the partitions τ satisfies.
    pub satisfied: Vec<usize>,
    /// (P, C(τ,P)) for P ∈ B_τ.
    pub coeff_c: Vec<(usize, BigRational)>,
    /// (P, F(τ,P)) for P ∈ B_τ.
    pub factor_f: Vec<(usize, BigRational)>,
    /// (P, Σ_{P ≼ P′} K(P,P′)·C(τ,P′)) for P ∈ B_τ.
    pub expansions: Vec<(usize, BigRational)>,
    /// The whole contribution of τ.
    pub contribution: BigRational,
}

/// B_τ, C, F and the expansion counts for one answer τ of μ(q) over H.
pub fn answer_terms(base: &PartitionBase, summary: &Summary, tau: &[ResourceId]) -> AnswerTerms {
    let bound = BoundBase::new(base, summary);
    let satisfied: Vec<usize> = (0..base.len()).filter(|&p| bound.satisfied(p, tau)).collect();
    AnswerTerms {
        coeff_c: satisfied
            .iter()
            .map(|&p| (p, bound.coeff_c_scalar(p, tau)))
            .collect(),
        factor_f: satisfied.iter().map(|&p| (p, bound.factor_f(p, tau))).collect(),
        expansions: bound.expansion_counts(tau),
        contribution: bound.contribution(&tau.to_vec()),
        satisfied,
    }
}

/// E[q] in floating point with default settings.
pub fn expectation(q: &Query, s: &Summary) -> Result<Estimate<f64>, EstimateError> {
    Estimator::new(s, EstimatorConfig::default())?.expectation(q)
}

/// E[q] as an exact rational with default settings.
pub fn expectation_exact(q: &Query, s: &Summary) -> Result<Estimate<BigRational>, EstimateError> {
    Estimator::new(s, EstimatorConfig::default())?.expectation(q)
}
