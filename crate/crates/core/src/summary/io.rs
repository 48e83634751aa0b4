//! The line-based `SUMRDF` summary format.
//!
//! ```text
//! SUMRDF 1
//! C <buckets> <mappings> <triples>
//! B <bucket> <size>
//! M <resource> <bucket>
//! T <s> <p> <o> <weight>
//! ```
//!
//! Terms are written in N-Triples syntax and each group is sorted, so equal
//! summaries serialise to equal bytes. μ entries mapping a resource to the
//! bucket with the same name are implicit.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::sync::Arc;

use super::{Summary, SummaryError};
use crate::rdf::lexer::Lexer;
use crate::rdf::{Dictionary, ResourceId, Triple};

const HEADER: &str = "SUMRDF 1";

impl Summary {
    pub fn save<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        sink.write_all(self.to_sumrdf().as_bytes())
    }

    pub fn to_sumrdf(&self) -> String {
        let d = &self.dictionary;
        let mut buckets: Vec<String> = self
            .members
            .iter()
            .map(|(&b, m)| format!("B {} {}", d.render(b), m.len()))
            .collect();
        let mut mappings: Vec<String> = self
            .mu
            .iter()
            .filter(|(r, b)| r != b)
            .map(|(&r, &b)| format!("M {} {}", d.render(r), d.render(b)))
            .collect();
        let mut triples: Vec<String> = self
            .iter_weighted()
            .map(|(t, w)| {
                format!(
                    "T {} {} {} {}",
                    d.render(t.s),
                    d.render(t.p),
                    d.render(t.o),
                    w
                )
            })
            .collect();
        buckets.sort_unstable();
        mappings.sort_unstable();
        triples.sort_unstable();
        let mut out = format!(
            "{HEADER}\nC {} {} {}\n",
            buckets.len(),
            mappings.len(),
            triples.len()
        );
        for line in buckets.iter().chain(&mappings).chain(&triples) {
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn load<R: BufRead>(source: R) -> Result<Summary, SummaryError> {
        let mut lines = source.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => return Err(SummaryError::Version(String::new())),
        };
        if header.trim_end() != HEADER {
            return Err(SummaryError::Version(header));
        }
        let (counts_line, counts) = match lines.next() {
            Some((idx, line)) => (idx + 1, parse_counts(&line?, idx + 1)?),
            None => return Err(truncated(2)),
        };

        let mut dictionary = Dictionary::new();
        let mut sizes: BTreeMap<ResourceId, u64> = BTreeMap::new();
        let mut mu: HashMap<ResourceId, ResourceId> = HashMap::new();
        let mut weights: Vec<(Triple, u64)> = Vec::new();
        let mut seen = [0usize; 3];
        let mut last_line = counts_line;
        for (idx, line) in lines {
            let line = line?;
            let line_no = idx + 1;
            last_line = line_no;
            let mut lx = Lexer::new(&line, line_no);
            if lx.at_end() {
                continue;
            }
            let format_err = |message: &str| SummaryError::Format {
                line: line_no,
                message: message.to_string(),
            };
            match lx.word()? {
                "B" => {
                    let b = dictionary.intern(lx.node()?);
                    let size = number(&mut lx, "bucket size")?;
                    if size == 0 {
                        return Err(format_err("bucket size must be positive"));
                    }
                    if sizes.insert(b, size).is_some() {
                        return Err(format_err("duplicate bucket"));
                    }
                    seen[0] += 1;
                }
                "M" => {
                    let r = dictionary.intern(lx.node()?);
                    let node = lx.node()?;
                    let b = dictionary
                        .lookup(&node)
                        .filter(|b| sizes.contains_key(b))
                        .ok_or_else(|| SummaryError::UnknownBucket(node.to_string()))?;
                    if mu.insert(r, b).is_some() {
                        return Err(format_err("resource mapped twice"));
                    }
                    seen[1] += 1;
                }
                "T" => {
                    let mut ids = [ResourceId(0); 3];
                    for slot in ids.iter_mut() {
                        let node = lx.node()?;
                        *slot = dictionary
                            .lookup(&node)
                            .filter(|b| sizes.contains_key(b))
                            .ok_or_else(|| SummaryError::UnknownBucket(node.to_string()))?;
                    }
                    let w = number(&mut lx, "weight")?;
                    let t = Triple::new(ids[0], ids[1], ids[2]);
                    if w == 0 {
                        return Err(SummaryError::ZeroWeight(line[2..].to_string()));
                    }
                    weights.push((t, w));
                    seen[2] += 1;
                }
                other => return Err(format_err(&format!("unknown record type {other:?}"))),
            }
            lx.expect_end()?;
        }
        if seen != counts {
            return Err(truncated(last_line));
        }

        // Whatever the M lines leave of a bucket's size is the bucket's own name.
        let mut explicit: HashMap<ResourceId, u64> = HashMap::new();
        for b in mu.values() {
            *explicit.entry(*b).or_insert(0) += 1;
        }
        for (&b, &size) in &sizes {
            let listed = explicit.get(&b).copied().unwrap_or(0);
            match size.checked_sub(listed) {
                Some(0) => {}
                Some(1) if !mu.contains_key(&b) => {
                    mu.insert(b, b);
                }
                _ => {
                    return Err(SummaryError::Format {
                        line: counts_line,
                        message: format!(
                            "bucket {} declares size {size} but has {listed} mapped resources",
                            dictionary.render(b)
                        ),
                    })
                }
            }
        }
        let mut distinct = weights.iter().map(|(t, _)| *t).collect::<Vec<_>>();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() != weights.len() {
            return Err(SummaryError::Format {
                line: counts_line,
                message: "duplicate summary triple".into(),
            });
        }
        Summary::new(Arc::new(dictionary), mu, weights)
    }

    pub fn from_sumrdf(text: &str) -> Result<Summary, SummaryError> {
        Summary::load(text.as_bytes())
    }
}

fn truncated(line: usize) -> SummaryError {
    SummaryError::Format {
        line,
        message: "record counts do not match the header (truncated file?)".into(),
    }
}

fn number(lx: &mut Lexer<'_>, what: &str) -> Result<u64, SummaryError> {
    let w = lx.word()?;
    w.parse()
        .map_err(|_| lx.error(format!("invalid {what} {w:?}")).into())
}

fn parse_counts(line: &str, line_no: usize) -> Result<[usize; 3], SummaryError> {
    let mut lx = Lexer::new(line, line_no);
    if lx.word()? != "C" {
        return Err(SummaryError::Format {
            line: line_no,
            message: "expected record counts".into(),
        });
    }
    let mut counts = [0usize; 3];
    for c in counts.iter_mut() {
        *c = number(&mut lx, "count")? as usize;
    }
    lx.expect_end()?;
    Ok(counts)
}
