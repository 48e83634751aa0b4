use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sumcard::fixtures::{example_graph, example_summary, Q1, Q2, Q3};
use sumcard::summary::{summarize_graph, BucketMapping};
use sumcard_cli::BenchReport;

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        ws.write("g.nt", &example_graph().to_ntriples());
        ws.write("s.sumrdf", &example_summary().to_sumrdf());
        std::fs::create_dir(ws.path("queries")).unwrap();
        for (name, text) in [("q1", Q1), ("q2", Q2), ("q3", Q3)] {
            ws.write(&format!("{name}.cq"), text);
            ws.write(&format!("queries/{name}.cq"), text);
        }
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) {
        std::fs::write(self.path(name), text).unwrap();
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_sumcard"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn estimate_on_the_example() {
    let ws = Workspace::new();
    let out = ws.run(&["estimate", "--summary", "s.sumrdf", "--query", "q2.cq"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("E=3.5 path=unification-free"), "{}", stdout(&out));

    let out = ws.run(&["estimate", "--summary", "s.sumrdf", "--query", "q1.cq", "--variance", "--exact-mode"]);
    assert_eq!(stdout(&out).trim(), "E=1/4 path=unification-free answers_over_h=1 Var=3/16");

    let out = ws.run(&["estimate", "--summary", "s.sumrdf", "--query", "q3.cq", "--exact-mode"]);
    assert!(stdout(&out).starts_with("E=17/6 path=general"), "{}", stdout(&out));

    let out = ws.run(&["estimate", "--summary", "s.sumrdf", "--query", "q2.cq", "--bound", "10"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains(" bound="));
}

#[test]
fn exact_counts() {
    let ws = Workspace::new();
    let out = ws.run(&["exact", "--input", "g.nt", "--query", "q2.cq"]);
    assert_eq!(code(&out), 0);
    let n: u64 = stdout(&out).trim().parse().unwrap();
    let g = example_graph();
    let q = sumcard::query::Query::parse(Q2, g.dictionary()).unwrap();
    assert_eq!(n, sumcard::query::cardinality(&q, g.triples()));
}

#[test]
fn exit_codes() {
    let ws = Workspace::new();
    ws.write("broken.nt", "<a> <b> .\n");
    ws.write("inconsistent.sumrdf", "SUMRDF 1\nC 1 0 1\nB <a> 1\nT <a> <a> <a> 2\n");
    ws.write("a.cq", "<a> <a> <a> .\n");
    ws.write("outside.cq", "<nobody> <owns> ?x .\n");
    ws.write("bad.toml", "colour = 3\n");

    let cases: [(&[&str], i32); 9] = [
        (&["exact", "--input", "missing.nt", "--query", "q1.cq"], 1),
        (&["estimate", "--summary", "s.sumrdf"], 2),
        (&["estimate", "--summary", "s.sumrdf", "--query", "q2.cq", "--bound", "1"], 2),
        (&["summarize", "--input", "g.nt", "--target", "0"], 2),
        (&["exact", "--input", "broken.nt", "--query", "q1.cq"], 3),
        (&["--config", "bad.toml", "exact", "--input", "g.nt", "--query", "q1.cq"], 3),
        (&["estimate", "--summary", "inconsistent.sumrdf", "--query", "a.cq"], 4),
        (&["estimate", "--summary", "s.sumrdf", "--query", "outside.cq"], 5),
        (&["estimate", "--summary", "s.sumrdf", "--query", "q1.cq", "--bound", "2"], 7),
    ];
    for (args, expected) in cases {
        let out = ws.run(args);
        assert_eq!(code(&out), expected, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = ws.run(&["estimate", "--summary", "s.sumrdf", "--query", "q1.cq", "--atom-cap", "0"]);
    assert_eq!(code(&out), 0, "fast path ignores the atom cap");
    let out = ws.run(&["estimate", "--summary", "s.sumrdf", "--query", "q3.cq", "--atom-cap", "1"]);
    assert_eq!(code(&out), 6);
}

#[test]
fn bench_csv_round_trips() {
    let ws = Workspace::new();
    let out = ws.run(&[
        "bench", "--input", "g.nt", "--summary", "s.sumrdf", "--queries-dir", "queries", "--output", "b.csv",
        "--plot-data", "plot.csv",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(ws.path("b.csv")).unwrap();
    assert!(text.starts_with("query_id,query,exact,estimate,qerror,variance,bound_10,bound_100,bound_1000,path,error\n"));
    assert!(text.contains("# queries=3 failed=0\n"));
    assert!(text.contains("# qerror_min="));

    let report = BenchReport::read_csv(text.as_bytes()).unwrap();
    let ids: Vec<&str> = report.rows.iter().map(|r| r.query_id.as_str()).collect();
    assert_eq!(ids, ["q1", "q2", "q3"]);
    assert_eq!(report.rows[1].estimate, Some(3.5));
    assert_eq!(report.rows[2].path.as_deref(), Some("general"));
    assert_eq!(report.rows[0].query, Q1.trim());
    assert_eq!(report.to_csv(), text);

    let plot = std::fs::read_to_string(ws.path("plot.csv")).unwrap();
    let total: usize = plot
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 3);
}

#[test]
fn identity_summary_is_exact() {
    let ws = Workspace::new();
    let g = example_graph();
    let identity = summarize_graph(&g, BucketMapping::identity(&g)).unwrap();
    ws.write("id.sumrdf", &identity.to_sumrdf());
    let out = ws.run(&["bench", "--input", "g.nt", "--summary", "id.sumrdf", "--queries-dir", "queries"]);
    assert_eq!(code(&out), 0);
    let report = BenchReport::read_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert!(report.rows.iter().all(|r| r.qerror == Some(1.0)), "{report:?}");
}

#[test]
fn summarize_is_deterministic_and_represents_its_input() {
    let ws = Workspace::new();
    let run = |ws: &Workspace| {
        ws.run(&["--seed", "3", "summarize", "--input", "g.nt", "--target", "2", "--partitioner", "label-propagation"])
    };
    let (a, b) = (run(&ws), run(&ws));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stderr).contains("seed=3"));

    let s = sumcard::summary::Summary::from_sumrdf(&stdout(&a)).unwrap();
    let g = sumcard::rdf::parse_ntriples_str(&std::fs::read_to_string(ws.path("g.nt")).unwrap()).unwrap();
    let ids: Vec<_> = g
        .iter()
        .map(|t| {
            t.map(|r| {
                s.dictionary()
                    .lookup(g.dictionary().node(r).unwrap())
                    .expect("every resource is in the summary dictionary")
            })
        })
        .collect();
    assert!(s.represents(&sumcard::rdf::TripleSet::new(ids)));
}

#[test]
fn summarize_reads_settings() {
    let ws = Workspace::new();
    ws.write("c.toml", "seed = 5\ntarget = 100\nhistogram_buckets = \"auto\"\n");
    let out = ws.run(&["--config", "c.toml", "summarize", "--input", "g.nt", "--output", "out.sumrdf"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("seed=5"), "{}", stdout(&out));
    assert!(Path::new(&ws.path("out.sumrdf")).exists());
}

#[test]
fn validate_bound_on_the_example() {
    let ws = Workspace::new();
    let out = ws.run(&[
        "--seed", "1", "validate-bound", "--summary", "s.sumrdf", "--query", "q2.cq", "--bound", "2", "--samples", "2000",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("result=pass"));
}
