use std::ops::{ControlFlow, Range};

use super::{Atom, Query, Term};
use crate::rdf::{ResourceId, TripleSet};

/// A total assignment of the query's variables, indexed by [`super::VarId`].
pub type Answer = Vec<ResourceId>;

/// Left-deep index nested-loop evaluation of a query over a triple set.
///
/// The join order is fixed up front: repeatedly take the atom with the most
/// bound positions, breaking ties by the index count of its constant prefix
/// and then by input order.
pub struct Evaluator<'a> {
    plan: Vec<Atom>,
    triples: &'a TripleSet,
    var_count: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(query: &Query, triples: &'a TripleSet) -> Self {
        let mut remaining: Vec<(usize, Atom, usize)> = query
            .atoms()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let constants = a.terms.map(|t| t.as_resource());
                (i, *a, triples.count(constants))
            })
            .collect();
        let mut bound = vec![false; query.var_count()];
        let mut plan = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let bound_positions = |a: &Atom| {
                a.terms
                    .iter()
                    .filter(|t| match t {
                        Term::Resource(_) => true,
                        Term::Variable(v) => bound[v.index()],
                    })
                    .count()
            };
            let best = remaining
                .iter()
                .enumerate()
                .min_by_key(|(_, (i, a, n))| (std::cmp::Reverse(bound_positions(a)), *n, *i))
                .map(|(pos, _)| pos)
                .expect("non-empty");
            let (_, atom, _) = remaining.remove(best);
            for v in atom.variables() {
                bound[v.index()] = true;
            }
            plan.push(atom);
        }
        Self {
            plan,
            triples,
            var_count: query.var_count(),
        }
    }

    /// Number of matches of the first atom in the join order; the unit in which
    /// work can be split with [`Evaluator::for_each_in_range`].
    pub fn first_atom_len(&self) -> usize {
        match self.plan.first() {
            Some(a) => self.triples.count(a.terms.map(|t| t.as_resource())),
            None => 1,
        }
    }

    /// Streams every answer. The callback may stop the stream early.
    pub fn for_each<F>(&self, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(&[ResourceId]) -> ControlFlow<()>,
    {
        self.for_each_in_range(0..self.first_atom_len(), &mut f)
    }

    /// Streams the answers whose first-atom match lies in `range`. Disjoint
    /// ranges yield disjoint answer sets whose union is the full answer set.
    pub fn for_each_in_range<F>(&self, range: Range<usize>, f: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[ResourceId]) -> ControlFlow<()>,
    {
        let mut binding: Vec<Option<ResourceId>> = vec![None; self.var_count];
        let mut answer: Vec<ResourceId> = vec![ResourceId(0); self.var_count];
        if self.plan.is_empty() {
            if range.start == 0 && !range.is_empty() {
                return f(&answer);
            }
            return ControlFlow::Continue(());
        }
        self.search(0, Some(range), &mut binding, &mut answer, f)
    }

    fn search<F>(
        &self,
        depth: usize,
        range: Option<Range<usize>>,
        binding: &mut Vec<Option<ResourceId>>,
        answer: &mut Vec<ResourceId>,
        f: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[ResourceId]) -> ControlFlow<()>,
    {
        if depth == self.plan.len() {
            for (slot, b) in answer.iter_mut().zip(binding.iter()) {
                *slot = b.expect("all variables bound");
            }
            return f(answer);
        }
        let atom = &self.plan[depth];
        let pattern = atom.terms.map(|t| match t {
            Term::Resource(r) => Some(r),
            Term::Variable(v) => binding[v.index()],
        });
        let (skip, take) = match range {
            Some(r) => (r.start, r.len()),
            None => (0, usize::MAX),
        };
        for triple in self.triples.matches(pattern).skip(skip).take(take) {
            let values = triple.resources();
            let mut newly_bound = [None; 3];
            let mut ok = true;
            for (k, t) in atom.terms.iter().enumerate() {
                if let Term::Variable(v) = t {
                    match binding[v.index()] {
                        Some(existing) => {
                            if existing != values[k] {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            binding[v.index()] = Some(values[k]);
                            newly_bound[k] = Some(*v);
                        }
                    }
                }
            }
            let flow = if ok {
                self.search(depth + 1, None, binding, answer, f)
            } else {
                ControlFlow::Continue(())
            };
            for v in newly_bound.into_iter().flatten() {
                binding[v.index()] = None;
            }
            flow?;
        }
        ControlFlow::Continue(())
    }

    pub fn count(&self) -> u64 {
        let mut n = 0u64;
        let _ = self.for_each(|_| {
            n += 1;
            ControlFlow::Continue(())
        });
        n
    }

    pub fn answers(&self) -> Vec<Answer> {
        let mut out = Vec::new();
        let _ = self.for_each(|a| {
            out.push(a.to_vec());
            ControlFlow::Continue(())
        });
        out
    }
}

/// |ans(q, G)|
pub fn cardinality(query: &Query, triples: &TripleSet) -> u64 {
    Evaluator::new(query, triples).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{Substitution, VarId};
    use crate::rdf::Triple;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn r(i: u32) -> ResourceId {
        ResourceId(i)
    }

    fn naive(query: &Query, g: &TripleSet) -> BTreeSet<Vec<ResourceId>> {
        let res: Vec<ResourceId> = g.resources().into_iter().collect();
        let n = query.var_count();
        let mut out = BTreeSet::new();
        if n > 0 && res.is_empty() {
            return out;
        }
        let total = res.len().pow(n as u32);
        for mut code in 0..total {
            let mut answer = Vec::with_capacity(n);
            for _ in 0..n {
                answer.push(res[code % res.len()]);
                code /= res.len();
            }
            let sub = Substitution::from_answer(&answer);
            let all_in = sub.apply(query.atoms()).iter().all(|a| {
                let [s, p, o] = a.terms.map(|t| t.as_resource().unwrap());
                g.contains(&Triple::new(s, p, o))
            });
            if all_in {
                out.insert(answer);
            }
        }
        out
    }

    fn term_strategy(vars: u32, res: u32) -> impl Strategy<Value = Term> {
        prop_oneof![
            (0..vars).prop_map(|v| Term::Variable(VarId(v))),
            (0..res).prop_map(|r| Term::Resource(ResourceId(r))),
        ]
    }

    proptest! {
        #[test]
        fn matches_generate_and_test(
            triples in proptest::collection::vec((0u32..6, 0u32..3, 0u32..6), 0..20),
            atoms in proptest::collection::vec(
                (term_strategy(3, 6), term_strategy(3, 3), term_strategy(3, 6)), 0..4),
        ) {
            let g = TripleSet::new(triples.into_iter().map(|(s, p, o)| Triple::new(r(s), r(p), r(o))));
            let atoms: Vec<Atom> = atoms.into_iter().map(|(s, p, o)| Atom::new(s, p, o)).collect();
            let q = Query::new(atoms, vec!["x".into(), "y".into(), "z".into()]);
            let ev = Evaluator::new(&q, &g);
            let got: Vec<Answer> = ev.answers();
            let set: BTreeSet<Answer> = got.iter().cloned().collect();
            prop_assert_eq!(set.len(), got.len(), "duplicate answers");
            prop_assert_eq!(set, naive(&q, &g));

            // splitting the first atom's range partitions the answers
            let len = ev.first_atom_len();
            let mid = len / 2;
            let mut split = Vec::new();
            for range in [0..mid, mid..len] {
                let _ = ev.for_each_in_range(range, &mut |a: &[ResourceId]| {
                    split.push(a.to_vec());
                    ControlFlow::Continue(())
                });
            }
            split.sort();
            let mut all = got.clone();
            all.sort();
            prop_assert_eq!(split, all);
        }

        #[test]
        fn count_invariant_under_reordering(
            triples in proptest::collection::vec((0u32..5, 0u32..2, 0u32..5), 0..15),
            atoms in proptest::collection::vec(
                (term_strategy(3, 5), term_strategy(3, 2), term_strategy(3, 5)), 1..4),
        ) {
            let g = TripleSet::new(triples.into_iter().map(|(s, p, o)| Triple::new(r(s), r(p), r(o))));
            let atoms: Vec<Atom> = atoms.into_iter().map(|(s, p, o)| Atom::new(s, p, o)).collect();
            let names = vec!["x".to_string(), "y".into(), "z".into()];
            let q1 = Query::new(atoms.clone(), names.clone());
            let mut rev = atoms;
            rev.reverse();
            let q2 = Query::new(rev, names);
            prop_assert_eq!(cardinality(&q1, &g), cardinality(&q2, &g));
        }
    }

    #[test]
    fn empty_query_has_one_empty_answer() {
        let g = TripleSet::new([Triple::new(r(0), r(1), r(2))]);
        assert_eq!(Evaluator::new(&Query::empty(), &g).answers(), vec![Vec::<ResourceId>::new()]);
        assert_eq!(cardinality(&Query::empty(), &TripleSet::default()), 1);
    }

    #[test]
    fn ground_atoms() {
        let g = TripleSet::new([Triple::new(r(0), r(1), r(2))]);
        let present = Query::new(vec![Atom::ground(Triple::new(r(0), r(1), r(2)))], vec![]);
        let absent = Query::new(vec![Atom::ground(Triple::new(r(2), r(1), r(0)))], vec![]);
        assert_eq!(cardinality(&present, &g), 1);
        assert_eq!(cardinality(&absent, &g), 0);
    }

    #[test]
    fn predicate_scan_counts_edges() {
        let g = TripleSet::new([
            Triple::new(r(0), r(1), r(2)),
            Triple::new(r(2), r(1), r(3)),
            Triple::new(r(2), r(4), r(3)),
        ]);
        let x = Term::Variable(VarId(0));
        let y = Term::Variable(VarId(1));
        let q = Query::new(
            vec![Atom::new(x, Term::Resource(r(1)), y)],
            vec!["x".into(), "y".into()],
        );
        assert_eq!(cardinality(&q, &g), 2);
    }
}
