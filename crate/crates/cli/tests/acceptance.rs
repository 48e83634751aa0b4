//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line;
//! run with `cargo test --test acceptance -- --nocapture` to see them.

use std::collections::HashMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use clap::Parser;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sumcard::estimator::{
    answer_terms, falling_factorial, qerror_bound_exact, EstimateError, Estimator,
    EstimatorConfig, PartitionBase,
};
use sumcard::fixtures::{example_query, example_summary, Q1, Q2, Q3};
use sumcard::oracle::{exact_moments, Moments, WorldSpace};
use sumcard::query::Query;
use sumcard::rdf::{Node, ResourceId};
use sumcard::summarizer::{
    compute_types, minhash_refine, summarize, typed_summary, HistogramSpec, MinHashScheme,
    PartitionAssignment, RefineConfig, SinglePartition, SummarizerConfig, VicinityPair,
};
use sumcard::summary::{binomial, summarize_graph, BucketMapping, Summary};
use sumcard::synth::{
    random_graph, random_query, random_summary, two_community_graph, university_graph,
    university_queries, QueryShape, SummaryShape, UniversityScale,
};
use sumcard_cli::{run, run_bench, BenchOptions, Cli};

fn report(n: u32, ok: bool, detail: impl AsRef<str>) {
    println!(
        "criterion {n}: {} {}",
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn exact_config() -> EstimatorConfig {
    EstimatorConfig {
        parallel: false,
        ..EstimatorConfig::default()
    }
}

// ---------------------------------------------------------------------------
// 1

#[test]
fn criterion_1_worked_example() {
    let start = Instant::now();
    let s = example_summary();
    let est = Estimator::new(&s, exact_config()).unwrap();
    let e = |text: &str| -> BigRational { est.expectation(&example_query(text, &s)).unwrap().expectation };
    let (e1, e2, e3) = (e(Q1), e(Q2), e(Q3));

    let q3 = example_query(Q3, &s);
    let base = PartitionBase::new(&q3, 12, 1000).unwrap();
    let p1 = base.find(&[0, 1]).unwrap();
    let p2 = base.find(&[0, 0]).unwrap();
    let b4 = s.dictionary().lookup(&Node::iri("b4")).unwrap();
    let terms = answer_terms(&base, &s, &[b4, b4]);
    let c: HashMap<usize, BigRational> = terms.coeff_c.into_iter().collect();
    let f: HashMap<usize, BigRational> = terms.factor_f.into_iter().collect();

    // E[q3] by brute force over all represented graphs
    let oracle_q3 = exact_moments(&q3, &s, 1_000_000).unwrap().expectation;
    let elapsed = start.elapsed();

    let intermediates = f[&p1] == rat(1, 6) && c[&p1] == rat(4, 1) && c[&p2] == rat(2, 1);
    let asserted = e1 == rat(1, 4) && e2 == rat(7, 2) && intermediates && e3 == oracle_q3;
    let literal_q3 = e3 == rat(10, 3);
    report(
        1,
        asserted && literal_q3 && elapsed < Duration::from_secs(1),
        format!(
            "E[q1]={e1} E[q2]={e2} E[q3]={e3} (expected 10/3; brute-force oracle gives {oracle_q3}) \
             F(t3,P1)={} C(t3,P1)={} C(t3,P2)={} time={elapsed:?}",
            f[&p1], c[&p1], c[&p2]
        ),
    );
    if !literal_q3 {
        println!(
            "criterion 1: note: the reference value 10/3 credits the weight-1 answer x,y -> b2 \
             with 2 x 1/2, but w/size for <b3 owns b2> is 1/4, giving 1/2 and a total of 17/6; \
             see `criterion_1_literal_q3` (ignored, red)"
        );
    }
    assert_eq!(e1, rat(1, 4));
    assert_eq!(e2, rat(7, 2));
    assert!(intermediates);
    assert_eq!(e3, oracle_q3);
    assert!(elapsed < Duration::from_secs(1), "{elapsed:?}");
}

/// The reference value for E[q3] as stated. Kept red: every world-enumeration
/// check gives 17/6. Run with `--ignored` to see it fail.
#[test]
#[ignore = "reference value 10/3 contradicts brute-force enumeration (17/6)"]
fn criterion_1_literal_q3() {
    let s = example_summary();
    let est = Estimator::new(&s, exact_config()).unwrap();
    let e3: BigRational = est.expectation(&example_query(Q3, &s)).unwrap().expectation;
    assert_eq!(e3, rat(10, 3));
}

// ---------------------------------------------------------------------------
// shared randomized suite for 2-5

struct Case {
    summary: Summary,
    query: Query,
    moments: Moments,
    expectation: Result<BigRational, EstimateError>,
    variance: Result<BigRational, EstimateError>,
    unification_free: bool,
    fast: Result<BigRational, EstimateError>,
    general: Result<BigRational, EstimateError>,
}

const SUITE_CASES: usize = 1000;

fn suite() -> &'static (Vec<Case>, Duration) {
    static SUITE: OnceLock<(Vec<Case>, Duration)> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let cases = (0..SUITE_CASES as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE + i);
                let summary = random_summary(&mut rng, &SummaryShape::default());
                let query = random_query(&mut rng, &summary, &QueryShape::default());
                let est = Estimator::new(&summary, exact_config()).unwrap();
                let moments = exact_moments(&query, &summary, 5_000).unwrap();
                let unification_free = est.is_unification_free(&query).unwrap();
                Case {
                    expectation: est.expectation(&query).map(|e| e.expectation),
                    variance: est.variance(&query),
                    fast: est.expectation_fast(&query).map(|e| e.expectation),
                    general: est.expectation_general(&query).map(|e| e.expectation),
                    unification_free,
                    moments,
                    summary,
                    query,
                }
            })
            .collect();
        (cases, start.elapsed())
    })
}

#[test]
fn criterion_2_oracle_equivalence() {
    let (cases, elapsed) = suite();
    let mut mismatches = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        let ok = matches!(&c.expectation, Ok(e) if *e == c.moments.expectation)
            && matches!(&c.variance, Ok(v) if *v == c.moments.variance);
        if !ok {
            mismatches.push(i);
        }
    }
    let unifiable = cases.iter().filter(|c| !c.unification_free).count();
    let ground = cases.iter().filter(|c| c.query.is_ground()).count();
    let ok = mismatches.is_empty() && unifiable > 0 && ground > 0 && *elapsed < Duration::from_secs(300);
    report(
        2,
        ok,
        format!(
            "{} cases ({unifiable} mu-unifiable, {ground} ground), {} mismatches, time={elapsed:?}",
            cases.len(),
            mismatches.len()
        ),
    );
    assert!(mismatches.is_empty(), "mismatching cases: {mismatches:?}");
    assert!(unifiable > 0 && ground > 0);
    assert!(*elapsed < Duration::from_secs(300));
}

#[test]
fn criterion_3_path_agreement() {
    let (cases, _) = suite();
    let mut bad = Vec::new();
    let mut free = 0;
    for (i, c) in cases.iter().enumerate() {
        let ok = if c.unification_free {
            free += 1;
            matches!((&c.fast, &c.general), (Ok(a), Ok(b)) if a == b)
        } else {
            matches!(c.fast, Err(EstimateError::NotUnificationFree))
        };
        if !ok {
            bad.push(i);
        }
    }
    report(
        3,
        bad.is_empty(),
        format!(
            "{free} unification-free queries agree, {} unifiable rejected by the fast path, {} failures",
            cases.len() - free,
            bad.len()
        ),
    );
    assert!(bad.is_empty(), "{bad:?}");
}

#[test]
fn criterion_4_counting_identities() {
    let (cases, _) = suite();
    let mut worlds_ok = true;
    for c in cases {
        let space = WorldSpace::new(&c.summary, 5_000).unwrap();
        let enumerated = space.iter().count() as u64;
        worlds_ok &= c.summary.count_worlds() == enumerated.into() && c.moments.worlds == enumerated;
    }

    let mut kappa_pairs = 0usize;
    let mut kappa_ok = true;
    for c in cases.iter().filter(|c| c.query.len() <= 4) {
        let base = PartitionBase::new(&c.query, 12, 100_000).unwrap();
        for p in 0..base.len() {
            for p2 in 0..base.len() {
                if base.precedes(p, p2) {
                    kappa_pairs += 1;
                    kappa_ok &= base.kappa(p, p2).unwrap() == base.kappa_by_chains(p, p2).unwrap();
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut ff_ok = true;
    for _ in 0..1000 {
        let n: u128 = rng.gen_range(1..=30);
        let m: u128 = rng.gen_range(0..=n);
        let k: u128 = rng.gen_range(0..=m);
        let lhs = BigRational::new(
            BigInt::from(binomial(n - k, m - k)),
            BigInt::from(binomial(n, m)),
        );
        let rhs = falling_factorial::<BigRational>(m, k) / falling_factorial::<BigRational>(n, k);
        ff_ok &= lhs == rhs;
    }
    let ok = worlds_ok && kappa_ok && ff_ok;
    report(
        4,
        ok,
        format!(
            "count_worlds=enumeration on {} summaries: {worlds_ok}; kappa on {kappa_pairs} pairs: {kappa_ok}; \
             falling-factorial identity x1000: {ff_ok}",
            cases.len()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_5_bound_validity() {
    let start = Instant::now();
    let (cases, _) = suite();
    let one = BigRational::one();
    let mut checked = 0usize;
    let mut violations = 0usize;
    for c in cases {
        let (Ok(e), Ok(v)) = (&c.expectation, &c.variance) else { continue };
        if *e < one {
            continue;
        }
        for eps in [2, 10, 100] {
            let eps = rat(eps, 1);
            let bound = qerror_bound_exact(e, v, &eps).unwrap();
            checked += 1;
            if c.moments.tail_fraction(e, &eps) > bound {
                violations += 1;
            }
        }
    }

    // Monte-Carlo on instances too large to enumerate
    let shape = SummaryShape {
        max_triples: 10,
        max_bucket_size: 6,
        max_buckets: 6,
        max_worlds: u64::MAX,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut mc = Vec::new();
    while mc.len() < 20 {
        let s = random_summary(&mut rng, &shape);
        if s.count_worlds() <= 100_000u64.into() {
            continue;
        }
        let q = random_query(&mut rng, &s, &QueryShape::default());
        let est = Estimator::new(&s, exact_config()).unwrap();
        let Ok(e) = est.expectation::<f64>(&q) else { continue };
        if e.expectation < 1.0 || est.variance::<f64>(&q).is_err() {
            continue;
        }
        mc.push((s, q, rng.gen::<u64>()));
    }
    let mc_results: Vec<bool> = mc
        .par_iter()
        .flat_map(|(s, q, seed)| {
            [2.0, 10.0]
                .into_par_iter()
                .map(|eps| {
                    sumcard_cli::validate_bound(s, q, eps, 10_000, *seed, exact_config())
                        .unwrap()
                        .passed()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mc_failed = mc_results.iter().filter(|p| !**p).count();
    let elapsed = start.elapsed();
    let ok = checked >= 100 && violations == 0 && mc_failed == 0 && elapsed < Duration::from_secs(300);
    report(
        5,
        ok,
        format!(
            "{checked} exact (summary, query, eps) checks with E>=1, {violations} violations; \
             {} Monte-Carlo checks x10000 samples, {mc_failed} outside slack; time={elapsed:?}",
            mc_results.len()
        ),
    );
    assert!(checked >= 100, "only {checked} checks with E >= 1");
    assert_eq!(violations, 0);
    assert_eq!(mc_failed, 0);
}

// ---------------------------------------------------------------------------
// 6

fn non_increasing(sizes: &[usize]) -> bool {
    sizes.windows(2).all(|w| w[1] <= w[0])
}

#[test]
fn criterion_6_summarizer() {
    let start = Instant::now();
    let results: Vec<(bool, bool, bool)> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(600 + i);
            let resources = rng.gen_range(5..=400);
            let triples = rng.gen_range(1..=5_000);
            let g = random_graph(&mut rng, resources, triples);
            let types = compute_types(&g, &HistogramSpec::default(), &PartitionAssignment::single());
            let typed = typed_summary(&g, &types).unwrap();
            let config = RefineConfig {
                target: (typed.len() / 3).max(1),
                seed: i,
                ..RefineConfig::default()
            };
            let refined = minhash_refine(&g, &types, &config).unwrap();
            let sizes: Vec<usize> = refined.iterations.iter().map(|s| s.summary_size).collect();
            (
                typed.represents(g.triples()),
                refined.summary.represents(g.triples()),
                non_increasing(&sizes) && sizes.last() == Some(&refined.summary.len()),
            )
        })
        .collect();
    let all_typed = results.iter().all(|r| r.0);
    let all_refined = results.iter().all(|r| r.1);
    let all_monotone = results.iter().all(|r| r.2);

    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let g = two_community_graph(&mut rng, 100, 2_800, 0.02);
    let types = compute_types(&g, &HistogramSpec::default(), &PartitionAssignment::single());
    let typed = typed_summary(&g, &types).unwrap();
    let config = RefineConfig {
        target: 50,
        ..RefineConfig::default()
    };
    let refinement = minhash_refine(&g, &types, &config).unwrap();
    let sizes: Vec<usize> = refinement.iterations.iter().map(|s| s.summary_size).collect();
    let community_ok = refinement.summary.represents(g.triples())
        && non_increasing(&sizes)
        && refinement.achieved == (refinement.summary.len() <= 50);
    let elapsed = start.elapsed();
    let ok = all_typed && all_refined && all_monotone && community_ok && elapsed < Duration::from_secs(120);
    report(
        6,
        ok,
        format!(
            "50 random graphs: typed represent {all_typed}, refined represent {all_refined}, |H| non-increasing {all_monotone}; \
             two-community graph ({} triples, typed |H|={}, T=50): refined |H|={} achieved={} after {} iterations; time={elapsed:?}",
            g.len(),
            typed.len(),
            refinement.summary.len(),
            refinement.achieved,
            sizes.len().saturating_sub(1)
        ),
    );
    assert!(all_typed && all_refined && all_monotone && community_ok);
    assert!(elapsed < Duration::from_secs(120));
}

// ---------------------------------------------------------------------------
// 7

#[test]
fn criterion_7_minhash_fidelity() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let pair = |rng: &mut ChaCha8Rng| -> VicinityPair {
        (ResourceId(rng.gen()), ResourceId(rng.gen()))
    };
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for i in 0..500u64 {
        let shared = rng.gen_range(0..=50usize);
        let mut pool: Vec<VicinityPair> = Vec::new();
        while pool.len() < 100 - shared {
            let p = pair(&mut rng);
            if !pool.contains(&p) {
                pool.push(p);
            }
        }
        pool.shuffle(&mut rng);
        let a: Vec<VicinityPair> = pool[..50].to_vec();
        let mut b: Vec<VicinityPair> = a[..shared].to_vec();
        b.extend_from_slice(&pool[50..]);
        assert_eq!(b.len(), 50);
        let j = shared as f64 / (100 - shared) as f64;
        let scheme = MinHashScheme::new(20, 2, i).unwrap();
        let approx = sumcard::summarizer::approx_jaccard(&scheme.signature(&a), &scheme.signature(&b));
        let err = (approx - j).abs();
        worst = worst.max(err);
        if err <= 0.25 {
            within += 1;
        }
    }
    let share = within as f64 / 500.0;
    report(
        7,
        share >= 0.95,
        format!("|J^-J| <= 0.25 on {within}/500 pairs (m=20, n=2), worst {worst:.3}"),
    );
    assert!(share >= 0.95);
}

// ---------------------------------------------------------------------------
// 8

fn cli(args: &[&str]) {
    let parsed = Cli::try_parse_from(std::iter::once("sumcard").chain(args.iter().copied())).unwrap();
    run(&parsed, &mut std::io::sink()).unwrap();
}

#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let scale = UniversityScale {
        universities: 1,
        departments: 3,
    };
    let g = university_graph(&mut ChaCha8Rng::seed_from_u64(8), scale);
    std::fs::write(p("g.nt"), g.to_ntriples()).unwrap();
    std::fs::create_dir(p("queries")).unwrap();
    for (id, text) in university_queries() {
        std::fs::write(dir.path().join("queries").join(format!("{id}.cq")), text).unwrap();
    }
    for run_id in ["a", "b"] {
        for (mode, target) in [("typed", "100000"), ("refined", "10")] {
            let summary = p(&format!("{mode}-{run_id}.sumrdf"));
            cli(&[
                "--seed", "8", "summarize", "--input", &p("g.nt"), "--output", &summary, "--target", target,
                "--partitioner", "label-propagation", "--partitions", "4",
            ]);
            cli(&[
                "bench", "--input", &p("g.nt"), "--summary", &summary, "--queries-dir", &p("queries"),
                "--output", &p(&format!("{mode}-{run_id}.csv")),
            ]);
        }
    }
    let ok = ["typed.sumrdf", "refined.sumrdf", "typed.csv", "refined.csv"]
        .iter()
        .all(|n| {
            let (stem, ext) = n.split_once('.').unwrap();
            let (a, b) = (format!("{stem}-a.{ext}"), format!("{stem}-b.{ext}"));
            std::fs::read(p(&a)).unwrap() == std::fs::read(p(&b)).unwrap()
        });
    report(
        8,
        ok,
        format!("typed and refined summaries and bench CSVs byte-identical across two seeded runs ({} triples)", g.len()),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 9

#[test]
fn criterion_9_university_benchmark() {
    println!(
        "criterion 9: note: the large-corpus results (100M-triple datasets, their reduction factors and \
         build times, q-error distributions against other systems) need the full benchmark corpora and \
         those systems; they are out of scope here. The synthetic university benchmark below stands in."
    );
    let g = university_graph(&mut ChaCha8Rng::seed_from_u64(9), UniversityScale::default());
    let queries = university_queries();
    let outcome = summarize(&g, &SinglePartition, &SummarizerConfig::default()).unwrap();
    let report_s = run_bench(&g, &outcome.summary, &queries, &BenchOptions::default()).unwrap();
    let agg = report_s.aggregates().unwrap();

    let identity = summarize_graph(&g, BucketMapping::identity(&g)).unwrap();
    let report_id = run_bench(&g, &identity, &queries, &BenchOptions::default()).unwrap();
    let identity_exact = report_id.failures() == 0
        && report_id.rows.iter().all(|r| r.qerror == Some(1.0));

    let ok = g.len() <= 100_000
        && queries.len() == 20
        && report_s.failures() == 0
        && agg.median <= 5.0
        && identity_exact;
    report(
        9,
        ok,
        format!(
            "{} triples, summary {} triples; 20 queries: median q-error {:.3} (min {:.3}, avg {:.3}, max {:.3}), \
             {} failed; identity-summary control all 1.0: {identity_exact}",
            g.len(),
            outcome.summary.len(),
            agg.median,
            agg.min,
            agg.avg,
            agg.max,
            report_s.failures()
        ),
    );
    for r in &report_s.rows {
        println!(
            "criterion 9:   {} exact={:?} estimate={:?} qerror={:?}",
            r.query_id, r.exact, r.estimate, r.qerror
        );
    }
    assert!(g.len() <= 100_000);
    assert_eq!(report_s.failures(), 0);
    assert!(identity_exact);
    assert!(agg.median <= 5.0, "median q-error {}", agg.median);
}
