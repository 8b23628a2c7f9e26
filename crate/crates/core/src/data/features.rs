use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use super::{content_lines, open, parse_f64, QueryId};
use crate::error::{Error, Result};

/// One query-document feature value (e.g. the BM25 score of a retrieved
/// document).
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRecord {
    pub query_id: QueryId,
    pub doc_id: String,
    pub feature_name: String,
    pub value: f64,
}

/// Parses `query_id<TAB>doc_id<TAB>feature_name<TAB>value`. File order is
/// preserved; it is taken as the reference run's document order.
pub fn parse_features<R: BufRead>(reader: R, origin: &str) -> Result<Vec<FeatureRecord>> {
    let mut seen: HashSet<(QueryId, String, String)> = HashSet::new();
    let mut out = Vec::new();
    for item in content_lines(reader, origin) {
        let (ln, line) = item?;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::format(
                origin,
                ln,
                format!("expected 4 tab-separated fields, got {}", f.len()),
            ));
        }
        let q = QueryId::new(f[0]).map_err(|e| Error::format(origin, ln, e.to_string()))?;
        if f[1].is_empty() || f[2].is_empty() {
            return Err(Error::format(origin, ln, "empty doc id or feature name"));
        }
        let value = parse_f64(origin, ln, f[3], "feature value")?;
        if !seen.insert((q.clone(), f[1].to_string(), f[2].to_string())) {
            return Err(Error::format(
                origin,
                ln,
                format!("duplicate feature ({q}, {}, {})", f[1], f[2]),
            ));
        }
        out.push(FeatureRecord {
            query_id: q,
            doc_id: f[1].to_string(),
            feature_name: f[2].to_string(),
            value,
        });
    }
    Ok(out)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Vec<FeatureRecord>> {
    let path = path.as_ref();
    parse_features(open(path)?, &path.display().to_string())
}

pub fn write_features<'a, W: Write>(
    mut w: W,
    records: impl IntoIterator<Item = &'a FeatureRecord>,
) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{}\t{}\t{}\t{}", r.query_id, r.doc_id, r.feature_name, r.value)?;
    }
    Ok(())
}

/// Groups records per query, queries in order of first appearance.
pub fn group_by_query(records: &[FeatureRecord]) -> Vec<(QueryId, Vec<&FeatureRecord>)> {
    let mut index: HashMap<&QueryId, usize> = HashMap::new();
    let mut groups: Vec<(QueryId, Vec<&FeatureRecord>)> = Vec::new();
    for r in records {
        let i = *index.entry(&r.query_id).or_insert_with(|| {
            groups.push((r.query_id.clone(), Vec::new()));
            groups.len() - 1
        });
        groups[i].1.push(r);
    }
    groups
}
