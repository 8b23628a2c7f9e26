use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use super::{content_lines, open, parse_f64, QueryId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
}

/// Ranked documents retrieved for one query, in canonical order:
/// score descending, ties broken by ascending doc id, ranks `1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunList {
    pub query_id: QueryId,
    pub tag: String,
    entries: Vec<RunEntry>,
}

pub(crate) fn canonical_order(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(&b.0))
}

impl RunList {
    /// Builds a canonical run from `(doc_id, score)` pairs in any order.
    pub fn from_scored(
        query_id: QueryId,
        tag: impl Into<String>,
        mut docs: Vec<(String, f64)>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(docs.len());
        for (d, s) in &docs {
            if !seen.insert(d.as_str()) {
                return Err(Error::Input(format!("duplicate document {d} in run for {query_id}")));
            }
            if !s.is_finite() {
                return Err(Error::Input(format!("non-finite score for {d} in run for {query_id}")));
            }
        }
        docs.sort_by(canonical_order);
        let entries = docs
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| RunEntry {
                doc_id,
                rank: i + 1,
                score,
            })
            .collect();
        Ok(Self {
            query_id,
            tag: tag.into(),
            entries,
        })
    }

    /// Builds a run from documents already in rank order (first = rank 1).
    /// Scores are synthesized as `n - i` so that the canonical order is the
    /// given order.
    pub fn from_ranked(query_id: QueryId, tag: impl Into<String>, docs: Vec<String>) -> Result<Self> {
        let n = docs.len();
        let scored = docs
            .into_iter()
            .enumerate()
            .map(|(i, d)| (d, (n - i) as f64))
            .collect();
        Self::from_scored(query_id, tag, scored)
    }

    pub fn entries(&self) -> &[RunEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }
}

struct PendingRun {
    tag: String,
    // (doc, input rank, score) in file order
    rows: Vec<(String, usize, f64)>,
    docs: HashSet<String>,
}

/// Parses a TREC run (`qid Q0 docid rank score tag`). One run per query in
/// order of first appearance; the rank column is advisory and entries are
/// re-ranked from scores. Queries whose input ranks disagree with the
/// canonical order are logged as repaired.
pub fn parse_runs<R: BufRead>(reader: R, origin: &str) -> Result<Vec<RunList>> {
    let mut order: Vec<QueryId> = Vec::new();
    let mut pending: HashMap<QueryId, PendingRun> = HashMap::new();
    for item in content_lines(reader, origin) {
        let (ln, line) = item?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(Error::format(
                origin,
                ln,
                format!("expected 6 whitespace-separated fields, got {}", f.len()),
            ));
        }
        let q = QueryId::new(f[0]).map_err(|e| Error::format(origin, ln, e.to_string()))?;
        let rank: usize = f[3]
            .parse()
            .map_err(|_| Error::format(origin, ln, format!("rank {:?} is not a positive integer", f[3])))?;
        let score = parse_f64(origin, ln, f[4], "score")?;
        let run = pending.entry(q.clone()).or_insert_with(|| {
            order.push(q.clone());
            PendingRun {
                tag: f[5].to_string(),
                rows: Vec::new(),
                docs: HashSet::new(),
            }
        });
        if !run.docs.insert(f[2].to_string()) {
            return Err(Error::format(
                origin,
                ln,
                format!("duplicate document {} for query {q}", f[2]),
            ));
        }
        run.rows.push((f[2].to_string(), rank, score));
    }

    let mut runs = Vec::with_capacity(order.len());
    for q in order {
        let p = pending.remove(&q).expect("pending run for every ordered query");
        let mut by_input_rank: Vec<(usize, &str)> =
            p.rows.iter().map(|(d, r, _)| (*r, d.as_str())).collect();
        by_input_rank.sort_by_key(|(r, _)| *r);
        let run = RunList::from_scored(
            q.clone(),
            p.tag.clone(),
            p.rows.iter().map(|(d, _, s)| (d.clone(), *s)).collect(),
        )?;
        let consistent = by_input_rank
            .iter()
            .zip(run.entries())
            .all(|((r, d), e)| *r == e.rank && *d == e.doc_id);
        if !consistent {
            log::warn!("{origin}: run for query {q} re-ranked from scores");
        }
        runs.push(run);
    }
    Ok(runs)
}

pub fn load_runs(path: impl AsRef<Path>) -> Result<Vec<RunList>> {
    let path = path.as_ref();
    parse_runs(open(path)?, &path.display().to_string())
}

pub fn write_runs<'a, W: Write>(
    mut w: W,
    runs: impl IntoIterator<Item = &'a RunList>,
) -> std::io::Result<()> {
    for run in runs {
        for e in run.entries() {
            writeln!(w, "{} Q0 {} {} {} {}", run.query_id, e.doc_id, e.rank, e.score, run.tag)?;
        }
    }
    Ok(())
}
