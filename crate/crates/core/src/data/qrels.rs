use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use super::{content_lines, open, QueryId};
use crate::error::{Error, Result};

/// Graded relevance judgments. Grades may be negative; a document is
/// relevant iff its grade is strictly positive.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Qrels {
    queries: Vec<QueryId>,
    judgments: HashMap<QueryId, HashMap<String, i32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a judgment; judging the same pair twice is an error.
    pub fn insert(&mut self, query: QueryId, doc: impl Into<String>, grade: i32) -> Result<()> {
        let doc = doc.into();
        if !self.judgments.contains_key(&query) {
            self.queries.push(query.clone());
        }
        let docs = self.judgments.entry(query.clone()).or_default();
        if docs.insert(doc.clone(), grade).is_some() {
            return Err(Error::Input(format!("duplicate judgment ({query}, {doc})")));
        }
        Ok(())
    }

    /// Queries in order of first appearance.
    pub fn queries(&self) -> &[QueryId] {
        &self.queries
    }

    pub fn grade(&self, query: &str, doc: &str) -> Option<i32> {
        self.judgments.get(query)?.get(doc).copied()
    }

    pub fn is_relevant(&self, query: &str, doc: &str) -> bool {
        self.grade(query, doc).is_some_and(|g| g > 0)
    }

    pub fn judged(&self, query: &str) -> impl Iterator<Item = (&str, i32)> {
        self.judgments
            .get(query)
            .into_iter()
            .flat_map(|m| m.iter().map(|(d, g)| (d.as_str(), *g)))
    }

    pub fn num_relevant(&self, query: &str) -> usize {
        self.judged(query).filter(|(_, g)| *g > 0).count()
    }

    /// Positive grades for the query, highest first.
    pub fn ideal_grades(&self, query: &str) -> Vec<i32> {
        let mut g: Vec<i32> = self.judged(query).map(|(_, g)| g).filter(|g| *g > 0).collect();
        g.sort_unstable_by(|a, b| b.cmp(a));
        g
    }
}

/// Parses TREC qrels (`qid 0 docid grade`).
pub fn parse_qrels<R: BufRead>(reader: R, origin: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for item in content_lines(reader, origin) {
        let (ln, line) = item?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::format(
                origin,
                ln,
                format!("expected 4 whitespace-separated fields, got {}", f.len()),
            ));
        }
        let q = QueryId::new(f[0]).map_err(|e| Error::format(origin, ln, e.to_string()))?;
        let grade: i32 = f[3]
            .parse()
            .map_err(|_| Error::format(origin, ln, format!("grade {:?} is not an integer", f[3])))?;
        qrels
            .insert(q, f[2], grade)
            .map_err(|e| Error::format(origin, ln, e.to_string()))?;
    }
    Ok(qrels)
}

pub fn load_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    parse_qrels(open(path)?, &path.display().to_string())
}
