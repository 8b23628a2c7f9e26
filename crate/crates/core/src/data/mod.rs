//! Domain types and the line-oriented file formats they are read from and
//! written to.

mod descriptor;
mod features;
mod ids;
mod matrix;
mod qrels;
mod runs;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

pub use descriptor::{load_descriptors, parse_descriptors, write_descriptors, ConfigurationDescriptor};
pub use features::{group_by_query, load_features, parse_features, write_features, FeatureRecord};
pub use ids::{ConfigurationId, QueryId};
pub use matrix::{AccessPhase, EffectivenessMatrix, ScoreSource};
pub use qrels::{load_qrels, parse_qrels, Qrels};
pub use runs::{load_runs, parse_runs, write_runs, RunEntry, RunList};
pub(crate) use runs::canonical_order as runs_canonical_order;

use crate::error::{Error, Result};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Iterates non-blank, non-`#` lines as `(1-based line number, line)`.
pub(crate) fn content_lines<'a, R: BufRead + 'a>(
    reader: R,
    origin: &'a str,
) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Err(e) => Some(Err(Error::io(origin, e))),
            Ok(line) => {
                let trimmed = line.trim_end_matches(['\r', '\n']);
                if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                    None
                } else {
                    Some(Ok((i + 1, trimmed.to_string())))
                }
            }
        })
}

pub(crate) fn parse_f64(origin: &str, line: usize, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::format(origin, line, format!("{what} {field:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::format(origin, line, format!("{what} {field:?} is not finite")));
    }
    Ok(v)
}
