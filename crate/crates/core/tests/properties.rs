use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sumcard::estimator::{qerror_bound_exact, Estimator, EstimatorConfig};
use sumcard::oracle::{exact_moments, WorldSpace};
use sumcard::query::{cardinality, Atom, Query};
use sumcard::rdf::parse_ntriples_str;
use sumcard::summarizer::{compute_types, typed_summary, HistogramSpec, PartitionAssignment};
use sumcard::summary::Summary;
use sumcard::synth::{random_graph, random_query, random_summary, QueryShape, SummaryShape};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_case(seed: u64) -> (Summary, Query) {
    let mut r = rng(seed);
    let shape = SummaryShape {
        max_worlds: 1_000,
        ..SummaryShape::default()
    };
    let s = random_summary(&mut r, &shape);
    let q = random_query(&mut r, &s, &QueryShape::default());
    (s, q)
}

fn config() -> EstimatorConfig {
    EstimatorConfig {
        parallel: false,
        ..EstimatorConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_world_is_represented(seed in any::<u64>()) {
        let (s, _) = small_case(seed);
        let space = WorldSpace::new(&s, 1_000).unwrap();
        let worlds: Vec<_> = space.iter().collect();
        prop_assert_eq!(s.count_worlds(), (worlds.len() as u64).into());
        for w in &worlds {
            prop_assert!(s.represents(w));
        }
        let mut distinct: Vec<Vec<_>> = worlds.iter().map(|w| w.iter().collect()).collect();
        distinct.sort();
        distinct.dedup();
        prop_assert_eq!(distinct.len(), worlds.len());
    }

    #[test]
    fn estimator_matches_enumeration(seed in any::<u64>()) {
        let (s, q) = small_case(seed);
        let est = Estimator::new(&s, config()).unwrap();
        let m = exact_moments(&q, &s, 1_000).unwrap();
        let e: BigRational = est.expectation(&q).unwrap().expectation;
        let v: BigRational = est.variance(&q).unwrap();
        prop_assert_eq!(&e, &m.expectation);
        prop_assert_eq!(&v, &m.variance);
        prop_assert!(!v.is_negative());
        let f: f64 = est.expectation(&q).unwrap().expectation;
        let ef = num_traits::ToPrimitive::to_f64(&e).unwrap();
        prop_assert!((f - ef).abs() <= 1e-9 * ef.max(1.0));
    }

    #[test]
    fn expectation_ignores_atom_order(seed in any::<u64>()) {
        let (s, q) = small_case(seed);
        let mut atoms: Vec<Atom> = q.atoms().to_vec();
        atoms.shuffle(&mut rng(seed ^ 1));
        let shuffled = Query::new(atoms, q.var_names().to_vec());
        let est = Estimator::new(&s, config()).unwrap();
        let a: BigRational = est.expectation(&q).unwrap().expectation;
        let b: BigRational = est.expectation(&shuffled).unwrap().expectation;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bound_is_a_probability(seed in any::<u64>(), eps in 2i64..200) {
        let (s, q) = small_case(seed);
        let est = Estimator::new(&s, config()).unwrap();
        let e: BigRational = est.expectation(&q).unwrap().expectation;
        prop_assume!(e >= BigRational::one());
        let v: BigRational = est.variance(&q).unwrap();
        let b = qerror_bound_exact(&e, &v, &BigRational::from_integer(BigInt::from(eps))).unwrap();
        prop_assert!(b >= BigRational::zero() && b <= BigRational::one());
    }

    #[test]
    fn sumrdf_round_trips(seed in any::<u64>()) {
        let (s, _) = small_case(seed);
        let text = s.to_sumrdf();
        let back = Summary::from_sumrdf(&text).unwrap();
        prop_assert_eq!(back.to_sumrdf(), text);
        prop_assert!(back.same_up_to_bucket_names(&s));
        prop_assert_eq!(back.count_worlds(), s.count_worlds());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ntriples_round_trip(seed in any::<u64>(), resources in 1usize..60, triples in 1usize..300) {
        let g = random_graph(&mut rng(seed), resources, triples);
        let text = g.to_ntriples();
        let back = parse_ntriples_str(&text).unwrap();
        prop_assert_eq!(back.len(), g.len());
        let lines = |t: &str| t.lines().map(str::to_owned).collect::<std::collections::BTreeSet<_>>();
        prop_assert_eq!(lines(&back.to_ntriples()), lines(&text));
    }

    #[test]
    fn typed_summaries_represent_their_input(seed in any::<u64>(), resources in 1usize..80, triples in 1usize..400) {
        let g = random_graph(&mut rng(seed), resources, triples);
        let types = compute_types(&g, &HistogramSpec::default(), &PartitionAssignment::single());
        let s = typed_summary(&g, &types).unwrap();
        prop_assert!(s.represents(g.triples()));
        prop_assert!(s.is_consistent());
        prop_assert!(s.len() <= g.len());
    }

    #[test]
    fn ground_queries_on_the_identity_summary_are_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 20, 60);
        let s = sumcard::summary::summarize_graph(&g, sumcard::summary::BucketMapping::identity(&g)).unwrap();
        let q = random_query(&mut r, &s, &QueryShape::default());
        let n = cardinality(&q, g.triples());
        let est = Estimator::new(&s, config()).unwrap();
        let e: BigRational = est.expectation(&q).unwrap().expectation;
        prop_assert_eq!(e, BigRational::from_integer(BigInt::from(n)));
        let v: BigRational = est.variance(&q).unwrap();
        prop_assert!(v.is_zero());
    }
}
