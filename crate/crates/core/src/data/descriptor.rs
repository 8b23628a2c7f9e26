use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{content_lines, open, ConfigurationId};
use crate::error::{Error, Result};

/// Component and hyperparameter settings of a configuration: the retrieval
/// model plus an optional query-expansion model with its three parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationDescriptor {
    pub config_id: ConfigurationId,
    pub retrieval_model: String,
    pub qe_model: String,
    pub qe_docs: Option<u32>,
    pub qe_terms: Option<u32>,
    pub qe_min_docs: Option<u32>,
}

pub const NO_EXPANSION: &str = "No";

impl ConfigurationDescriptor {
    pub fn validate(&self) -> Result<()> {
        if self.retrieval_model.is_empty() || self.qe_model.is_empty() {
            return Err(Error::Input(format!("{}: empty component name", self.config_id)));
        }
        let params = [self.qe_docs, self.qe_terms, self.qe_min_docs];
        if self.qe_model == NO_EXPANSION {
            if params.iter().any(Option::is_some) {
                return Err(Error::Input(format!(
                    "{}: expansion parameters given without an expansion model",
                    self.config_id
                )));
            }
        } else if params.iter().any(|p| !matches!(p, Some(v) if *v > 0)) {
            return Err(Error::Input(format!(
                "{}: expansion model {} needs positive docs, terms and min-docs",
                self.config_id, self.qe_model
            )));
        }
        Ok(())
    }

    pub fn uses_expansion(&self) -> bool {
        self.qe_model != NO_EXPANSION
    }
}

fn opt_u32(origin: &str, ln: usize, field: &str) -> Result<Option<u32>> {
    if field == "-" {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::format(origin, ln, format!("{field:?} is not a positive integer or '-'")))
}

/// Parses `config_id<TAB>retrieval_model<TAB>qe_model<TAB>qe_docs<TAB>qe_terms<TAB>qe_min_docs`
/// with `-` for absent values.
pub fn parse_descriptors<R: BufRead>(reader: R, origin: &str) -> Result<Vec<ConfigurationDescriptor>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for item in content_lines(reader, origin) {
        let (ln, line) = item?;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(Error::format(
                origin,
                ln,
                format!("expected 6 tab-separated fields, got {}", f.len()),
            ));
        }
        let d = ConfigurationDescriptor {
            config_id: ConfigurationId::new(f[0]).map_err(|e| Error::format(origin, ln, e.to_string()))?,
            retrieval_model: f[1].to_string(),
            qe_model: f[2].to_string(),
            qe_docs: opt_u32(origin, ln, f[3])?,
            qe_terms: opt_u32(origin, ln, f[4])?,
            qe_min_docs: opt_u32(origin, ln, f[5])?,
        };
        d.validate().map_err(|e| Error::format(origin, ln, e.to_string()))?;
        if !ids.insert(d.config_id.clone()) {
            return Err(Error::format(origin, ln, format!("duplicate configuration {}", d.config_id)));
        }
        out.push(d);
    }
    Ok(out)
}

pub fn load_descriptors(path: impl AsRef<Path>) -> Result<Vec<ConfigurationDescriptor>> {
    let path = path.as_ref();
    parse_descriptors(open(path)?, &path.display().to_string())
}

pub fn write_descriptors<'a, W: Write>(
    mut w: W,
    descriptors: impl IntoIterator<Item = &'a ConfigurationDescriptor>,
) -> std::io::Result<()> {
    let show = |v: Option<u32>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
    for d in descriptors {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            d.config_id,
            d.retrieval_model,
            d.qe_model,
            show(d.qe_docs),
            show(d.qe_terms),
            show(d.qe_min_docs)
        )?;
    }
    Ok(())
}
