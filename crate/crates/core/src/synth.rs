//! Seeded synthetic inputs: small random summaries and queries, community
//! graphs, and a university-domain benchmark graph with its query set.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::query::{Atom, Query, Term, VarId};
use crate::rdf::SyntaxError;
use crate::rdf::{Dictionary, Node, RdfGraph, ResourceId, Triple, TripleSet, RDF_TYPE};
use crate::summary::Summary;

/// Accumulates triples over a growing dictionary.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    dictionary: Dictionary,
    triples: Vec<Triple>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn id(&mut self, node: Node) -> ResourceId {
        self.dictionary.intern(node)
    }

    pub fn iri(&mut self, iri: &str) -> ResourceId {
        self.id(Node::iri(iri))
    }

    pub fn add(&mut self, s: ResourceId, p: ResourceId, o: ResourceId) {
        self.triples.push(Triple::new(s, p, o));
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn build(self) -> RdfGraph {
        RdfGraph::new(Arc::new(self.dictionary), TripleSet::new(self.triples))
    }
}

/// Shape limits for [`random_summary`].
#[derive(Debug, Clone, Copy)]
pub struct SummaryShape {
    pub max_triples: usize,
    pub max_bucket_size: usize,
    pub max_buckets: usize,
    pub max_worlds: u64,
}

impl Default for SummaryShape {
    fn default() -> Self {
        Self {
            max_triples: 6,
            max_bucket_size: 3,
            max_buckets: 5,
            max_worlds: 5_000,
        }
    }
}

/// A consistent summary within `shape`. Resources are `<r0>`, `<r1>`, …;
/// buckets are `<B0>`, … except that a singleton bucket is sometimes named
/// after its only member.
pub fn random_summary<R: Rng + ?Sized>(rng: &mut R, shape: &SummaryShape) -> Summary {
    loop {
        let mut d = Dictionary::new();
        let bucket_count = rng.gen_range(1..=shape.max_buckets);
        let mut mu = HashMap::new();
        let mut buckets = Vec::with_capacity(bucket_count);
        let mut next_resource = 0;
        for b in 0..bucket_count {
            let size = rng.gen_range(1..=shape.max_bucket_size);
            let members: Vec<ResourceId> = (0..size)
                .map(|_| {
                    next_resource += 1;
                    d.intern(Node::iri(format!("r{}", next_resource - 1)))
                })
                .collect();
            let name = if size == 1 && rng.gen_bool(0.5) {
                members[0]
            } else {
                d.intern(Node::iri(format!("B{b}")))
            };
            for m in members {
                mu.insert(m, name);
            }
            buckets.push((name, size as u64));
        }
        let triple_count = rng.gen_range(1..=shape.max_triples);
        let mut weights: HashMap<Triple, u64> = HashMap::new();
        for _ in 0..triple_count {
            let [s, p, o] = [0; 3].map(|_| buckets[rng.gen_range(0..buckets.len())]);
            let size = s.1 * p.1 * o.1;
            weights.insert(Triple::new(s.0, p.0, o.0), rng.gen_range(1..=size));
        }
        let s = Summary::new(Arc::new(d), mu, weights).expect("well formed");
        if s.is_consistent() && s.count_worlds() <= shape.max_worlds.into() {
            return s;
        }
    }
}

/// Shape limits for [`random_query`].
#[derive(Debug, Clone, Copy)]
pub struct QueryShape {
    pub max_atoms: usize,
    pub max_vars: usize,
    /// Probability of planting atoms whose images share one summary triple.
    pub unifiable_bias: f64,
    pub var_probability: f64,
}

impl Default for QueryShape {
    fn default() -> Self {
        Self {
            max_atoms: 4,
            max_vars: 3,
            unifiable_bias: 0.5,
            var_probability: 0.5,
        }
    }
}

/// A query over dom(μ) of `s`. With probability `unifiable_bias`, two or more
/// atoms are drawn from the preimage of the same summary triple so that their
/// images unify.
pub fn random_query<R: Rng + ?Sized>(rng: &mut R, s: &Summary, shape: &QueryShape) -> Query {
    let domain: Vec<(ResourceId, ResourceId)> = s.mapping();
    let h: Vec<Triple> = s.graph().iter().collect();
    let atom_count = rng.gen_range(1..=shape.max_atoms);
    let var_count = rng.gen_range(0..=shape.max_vars);
    let term = |rng: &mut R, bucket: Option<ResourceId>| -> Term {
        if var_count > 0 && rng.gen_bool(shape.var_probability) {
            return Term::Variable(VarId(rng.gen_range(0..var_count) as u32));
        }
        match bucket {
            Some(b) => {
                let m = s.members(b);
                Term::Resource(m[rng.gen_range(0..m.len())])
            }
            None => Term::Resource(domain[rng.gen_range(0..domain.len())].0),
        }
    };
    let mut atoms = Vec::with_capacity(atom_count);
    let planted = if !h.is_empty() && atom_count >= 2 && rng.gen_bool(shape.unifiable_bias) {
        rng.gen_range(2..=atom_count)
    } else {
        0
    };
    if planted > 0 {
        let target = h[rng.gen_range(0..h.len())];
        for _ in 0..planted {
            let [a, b, c] = target.resources().map(|x| term(rng, Some(x)));
            atoms.push(Atom::new(a, b, c));
        }
    }
    while atoms.len() < atom_count {
        // mostly follow summary triples so answers are not always empty
        let hint = if !h.is_empty() && rng.gen_bool(0.7) {
            Some(h[rng.gen_range(0..h.len())].resources())
        } else {
            None
        };
        let [a, b, c] = [0, 1, 2].map(|i| term(rng, hint.map(|t| t[i])));
        atoms.push(Atom::new(a, b, c));
    }
    let names = (0..var_count).map(|i| format!("v{i}")).collect();
    Query::new(atoms, names)
}

/// Two communities of `per_group` resources of one class; `edges` random
/// `<p>` edges, all but a `bridge` fraction inside a community.
pub fn two_community_graph<R: Rng + ?Sized>(
    rng: &mut R,
    per_group: usize,
    edges: usize,
    bridge: f64,
) -> RdfGraph {
    let mut b = GraphBuilder::new();
    let ty = b.iri(RDF_TYPE);
    let class = b.iri("urn:ex:Node");
    let p = b.iri("urn:ex:p");
    let groups: Vec<Vec<ResourceId>> = (0..2)
        .map(|g| {
            (0..per_group)
                .map(|i| b.iri(&format!("urn:ex:g{g}n{i}")))
                .collect()
        })
        .collect();
    for r in groups.iter().flatten() {
        b.add(*r, ty, class);
    }
    let mut seen = BTreeSet::new();
    while seen.len() < edges {
        let g = rng.gen_range(0..2);
        let other = if rng.gen_bool(bridge) { 1 - g } else { g };
        let s = *groups[g].choose(rng).expect("nonempty");
        let o = *groups[other].choose(rng).expect("nonempty");
        if s != o && seen.insert((s, o)) {
            b.add(s, p, o);
        }
    }
    b.build()
}

/// A random graph for summarizer tests: a few classes and predicates,
/// literals included.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, resources: usize, triples: usize) -> RdfGraph {
    let mut b = GraphBuilder::new();
    let ty = b.iri(RDF_TYPE);
    let classes: Vec<ResourceId> = (0..rng.gen_range(1..=4))
        .map(|i| b.iri(&format!("urn:ex:C{i}")))
        .collect();
    let preds: Vec<ResourceId> = (0..rng.gen_range(1..=5))
        .map(|i| b.iri(&format!("urn:ex:p{i}")))
        .collect();
    let nodes: Vec<ResourceId> = (0..resources.max(1))
        .map(|i| b.iri(&format!("urn:ex:r{i}")))
        .collect();
    let mut seen = BTreeSet::new();
    let mut attempts = 0;
    while seen.len() < triples && attempts < triples * 20 {
        attempts += 1;
        let s = *nodes.choose(rng).expect("nonempty");
        let t = match rng.gen_range(0..10) {
            0 => Triple::new(s, ty, *classes.choose(rng).expect("nonempty")),
            1 => {
                let lit = if rng.gen_bool(0.5) {
                    Node::string_literal(format!("v{}", rng.gen_range(0..20)))
                } else {
                    Node::typed_literal(
                        rng.gen_range(0..20).to_string(),
                        "http://www.w3.org/2001/XMLSchema#integer",
                    )
                };
                let o = b.id(lit);
                Triple::new(s, *preds.choose(rng).expect("nonempty"), o)
            }
            _ => Triple::new(
                s,
                *preds.choose(rng).expect("nonempty"),
                *nodes.choose(rng).expect("nonempty"),
            ),
        };
        if seen.insert(t) {
            b.add(t.s, t.p, t.o);
        }
    }
    b.build()
}

const UB: &str = "http://lubm.example.org/univ-bench#";

fn ub(name: &str) -> String {
    format!("{UB}{name}")
}

fn univ(u: usize) -> String {
    format!("http://www.University{u}.edu")
}

fn dept(u: usize, d: usize) -> String {
    format!("http://www.Department{d}.University{u}.edu")
}

#[derive(Debug, Clone, Copy)]
pub struct UniversityScale {
    pub universities: usize,
    pub departments: usize,
}

impl Default for UniversityScale {
    fn default() -> Self {
        Self {
            universities: 3,
            departments: 8,
        }
    }
}

/// A university-domain graph in the style of the LUBM benchmark: departments
/// with faculty, students, courses, research groups and publications.
pub fn university_graph<R: Rng + ?Sized>(rng: &mut R, scale: UniversityScale) -> RdfGraph {
    let mut b = GraphBuilder::new();
    let ty = b.iri(RDF_TYPE);
    let p = |b: &mut GraphBuilder, n: &str| b.iri(&ub(n));
    let (sub_org, works_for, member_of, teacher_of, takes, advisor, author, head_of) = (
        p(&mut b, "subOrganizationOf"),
        p(&mut b, "worksFor"),
        p(&mut b, "memberOf"),
        p(&mut b, "teacherOf"),
        p(&mut b, "takesCourse"),
        p(&mut b, "advisor"),
        p(&mut b, "publicationAuthor"),
        p(&mut b, "headOf"),
    );
    let (ug_degree, doc_degree, ta_of, name, email) = (
        p(&mut b, "undergraduateDegreeFrom"),
        p(&mut b, "doctoralDegreeFrom"),
        p(&mut b, "teachingAssistantOf"),
        p(&mut b, "name"),
        p(&mut b, "emailAddress"),
    );
    let class = |b: &mut GraphBuilder, n: &str| b.iri(&ub(n));
    let c_univ = class(&mut b, "University");
    let c_dept = class(&mut b, "Department");
    let c_group = class(&mut b, "ResearchGroup");
    let c_faculty = [
        class(&mut b, "FullProfessor"),
        class(&mut b, "AssociateProfessor"),
        class(&mut b, "AssistantProfessor"),
        class(&mut b, "Lecturer"),
    ];
    let faculty_counts = [(3, 5), (4, 6), (3, 5), (2, 4)];
    let faculty_names = ["FullProfessor", "AssociateProfessor", "AssistantProfessor", "Lecturer"];
    let c_course = class(&mut b, "Course");
    let c_gcourse = class(&mut b, "GraduateCourse");
    let c_ug = class(&mut b, "UndergraduateStudent");
    let c_grad = class(&mut b, "GraduateStudent");
    let c_pub = class(&mut b, "Publication");

    let universities: Vec<ResourceId> =
        (0..scale.universities).map(|u| b.iri(&univ(u))).collect();
    for &u in &universities {
        b.add(u, ty, c_univ);
    }
    let literal = |b: &mut GraphBuilder, text: String| b.id(Node::string_literal(text));

    for u in 0..scale.universities {
        for d in 0..scale.departments {
            let base = dept(u, d);
            let dep = b.iri(&base);
            b.add(dep, ty, c_dept);
            b.add(dep, sub_org, universities[u]);
            for g in 0..rng.gen_range(3..=6) {
                let grp = b.iri(&format!("{base}/ResearchGroup{g}"));
                b.add(grp, ty, c_group);
                b.add(grp, sub_org, dep);
            }

            let mut courses = Vec::new();
            let mut grad_courses = Vec::new();
            let mut faculty = Vec::new();
            for (k, (&c, &(lo, hi))) in c_faculty.iter().zip(&faculty_counts).enumerate() {
                for i in 0..rng.gen_range(lo..=hi) {
                    let iri = format!("{base}/{}{i}", faculty_names[k]);
                    let f = b.iri(&iri);
                    b.add(f, ty, c);
                    b.add(f, works_for, dep);
                    let n = literal(&mut b, format!("{}{i}", faculty_names[k]));
                    b.add(f, name, n);
                    let e = literal(&mut b, format!("{}{i}@Department{d}.University{u}.edu", faculty_names[k]));
                    b.add(f, email, e);
                    let ug = universities[rng.gen_range(0..universities.len())];
                    b.add(f, ug_degree, ug);
                    if k < 3 {
                        let doc = universities[rng.gen_range(0..universities.len())];
                        b.add(f, doc_degree, doc);
                    }
                    for _ in 0..rng.gen_range(1..=2) {
                        let idx = courses.len();
                        let course = b.iri(&format!("{base}/Course{idx}"));
                        b.add(course, ty, c_course);
                        let cn = literal(&mut b, format!("Course{idx}"));
                        b.add(course, name, cn);
                        b.add(f, teacher_of, course);
                        courses.push(course);
                    }
                    if k < 3 {
                        for _ in 0..rng.gen_range(1..=2) {
                            let idx = grad_courses.len();
                            let course = b.iri(&format!("{base}/GraduateCourse{idx}"));
                            b.add(course, ty, c_gcourse);
                            let cn = literal(&mut b, format!("GraduateCourse{idx}"));
                            b.add(course, name, cn);
                            b.add(f, teacher_of, course);
                            grad_courses.push(course);
                        }
                    }
                    for j in 0..rng.gen_range(3..=8) {
                        let pb = b.iri(&format!("{iri}/Publication{j}"));
                        b.add(pb, ty, c_pub);
                        let pn = literal(&mut b, format!("Publication{j}"));
                        b.add(pb, name, pn);
                        b.add(pb, author, f);
                    }
                    faculty.push((k, f));
                }
            }
            let head = faculty[0].1;
            b.add(head, head_of, dep);
            let professors: Vec<ResourceId> =
                faculty.iter().filter(|(k, _)| *k < 3).map(|(_, f)| *f).collect();

            for i in 0..rng.gen_range(40..=80) {
                let s = b.iri(&format!("{base}/UndergraduateStudent{i}"));
                b.add(s, ty, c_ug);
                b.add(s, member_of, dep);
                let n = literal(&mut b, format!("UndergraduateStudent{i}"));
                b.add(s, name, n);
                let k = rng.gen_range(2..=4);
                for c in courses.choose_multiple(rng, k) {
                    b.add(s, takes, *c);
                }
                if rng.gen_bool(0.2) {
                    b.add(s, advisor, *professors.choose(rng).expect("professors"));
                }
            }
            for i in 0..rng.gen_range(15..=25) {
                let s = b.iri(&format!("{base}/GraduateStudent{i}"));
                b.add(s, ty, c_grad);
                b.add(s, member_of, dep);
                let n = literal(&mut b, format!("GraduateStudent{i}"));
                b.add(s, name, n);
                let ug = universities[rng.gen_range(0..universities.len())];
                b.add(s, ug_degree, ug);
                let k = rng.gen_range(1..=3);
                for c in grad_courses.choose_multiple(rng, k) {
                    b.add(s, takes, *c);
                }
                // the department head always advises someone
                let adv = if i == 0 { professors[0] } else { *professors.choose(rng).expect("professors") };
                b.add(s, advisor, adv);
                if rng.gen_bool(0.3) {
                    b.add(s, ta_of, *courses.choose(rng).expect("courses"));
                }
            }
        }
    }
    b.build()
}

/// Twenty star and chain queries over [`university_graph`] (ids `Q01`…`Q20`).
pub fn university_queries() -> Vec<(String, String)> {
    let t = format!("<{RDF_TYPE}>");
    let u = |n: &str| format!("<{}>", ub(n));
    let d0 = format!("<{}>", dept(0, 0));
    let u0 = format!("<{}>", univ(0));
    let u1 = format!("<{}>", univ(1));
    let texts = [
        format!("?x {t} {} .\n?x {} <{}/GraduateCourse0> .\n", u("GraduateStudent"), u("takesCourse"), dept(0, 0)),
        format!("?x {t} {} .\n?x {} ?d .\n?d {} {u0} .\n", u("UndergraduateStudent"), u("memberOf"), u("subOrganizationOf")),
        format!("?p {t} {} .\n?p {} <{}/AssistantProfessor0> .\n", u("Publication"), u("publicationAuthor"), dept(0, 0)),
        format!("?x {} {d0} .\n?x {t} {} .\n?x {} ?n .\n?x {} ?e .\n", u("worksFor"), u("FullProfessor"), u("name"), u("emailAddress")),
        format!("?x {} {d0} .\n?x {t} {} .\n", u("memberOf"), u("UndergraduateStudent")),
        format!("?x {t} {} .\n?x {} ?y .\n?y {} ?d .\n", u("GraduateStudent"), u("advisor"), u("worksFor")),
        format!("?x {} ?c .\n?y {} ?c .\n?y {t} {} .\n", u("takesCourse"), u("teacherOf"), u("AssociateProfessor")),
        format!("?x {t} {} .\n?x {} ?d .\n?x {} ?c .\n", u("GraduateStudent"), u("memberOf"), u("takesCourse")),
        format!("?g {t} {} .\n?g {} ?d .\n?d {} {u0} .\n", u("ResearchGroup"), u("subOrganizationOf"), u("subOrganizationOf")),
        format!("?x {} ?d .\n?x {} ?n .\n", u("headOf"), u("name")),
        format!("?x {} {u1} .\n?x {} ?d .\n", u("doctoralDegreeFrom"), u("worksFor")),
        format!("?x {} ?y .\n?y {} ?c .\n?c {t} {} .\n", u("advisor"), u("teacherOf"), u("GraduateCourse")),
        format!("?x {} ?c .\n?c {t} {} .\n", u("teachingAssistantOf"), u("Course")),
        format!("?x {t} {} .\n", u("UndergraduateStudent")),
        format!("?p {} ?a .\n?a {t} {} .\n?a {} ?d .\n", u("publicationAuthor"), u("FullProfessor"), u("worksFor")),
        format!("?x {} ?c .\n?c {} ?n .\n", u("takesCourse"), u("name")),
        format!("?x {t} {} .\n?x {} ?c .\n?x {} ?e .\n", u("Lecturer"), u("teacherOf"), u("emailAddress")),
        format!("?x {} <{}/FullProfessor0> .\n", u("advisor"), dept(0, 0)),
        format!("?x {} ?u .\n?u {t} {} .\n?x {t} {} .\n", u("undergraduateDegreeFrom"), u("University"), u("GraduateStudent")),
        format!("?x {} ?d .\n?d {} ?u .\n?u {t} {} .\n", u("memberOf"), u("subOrganizationOf"), u("University")),
    ];
    texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| (format!("Q{:02}", i + 1), text))
        .collect()
}

/// Parses [`university_queries`] against `dictionary`.
pub fn parse_university_queries(dictionary: &Dictionary) -> Result<Vec<(String, Query)>, SyntaxError> {
    university_queries()
        .into_iter()
        .map(|(id, text)| Query::parse(&text, dictionary).map(|q| (id, q)))
        .collect()
}
