use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::{open, parse_f64, ConfigurationId, QueryId};
use crate::error::{contract, Error, Result};

/// Which part of a cross-validation cell is currently reading scores.
///
/// Experiment drivers announce phases through [`ScoreSource::enter_phase`] so
/// that instrumented sources can audit which cells each phase touched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccessPhase {
    Idle,
    Training { fold: usize },
    Scoring { fold: usize },
}

/// Read access to per-(configuration, query) effectiveness scores.
pub trait ScoreSource: Sync {
    fn configs(&self) -> &[ConfigurationId];
    fn queries(&self) -> &[QueryId];
    fn config_position(&self, id: &str) -> Option<usize>;
    fn query_position(&self, id: &str) -> Option<usize>;
    /// Score at the given positions. Panics when out of bounds.
    fn score_at(&self, config: usize, query: usize) -> f64;
    fn metric_name(&self) -> &str;

    fn enter_phase(&self, _phase: AccessPhase) {}

    fn resolve_config(&self, id: &str) -> Result<usize> {
        self.config_position(id)
            .ok_or_else(|| contract!("configuration {id} is not in the matrix"))
    }

    fn resolve_query(&self, id: &str) -> Result<usize> {
        self.query_position(id)
            .ok_or_else(|| contract!("query {id} is not in the matrix"))
    }

    fn score(&self, config: &str, query: &str) -> Result<f64> {
        Ok(self.score_at(self.resolve_config(config)?, self.resolve_query(query)?))
    }
}

/// Dense configuration × query matrix of effectiveness values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectivenessMatrix {
    configs: Vec<ConfigurationId>,
    queries: Vec<QueryId>,
    config_pos: HashMap<ConfigurationId, usize>,
    query_pos: HashMap<QueryId, usize>,
    // row-major: configs × queries
    scores: Vec<f64>,
    metric_name: String,
}

fn position_map<T: Clone + Eq + std::hash::Hash + std::fmt::Display>(
    ids: &[T],
    what: &str,
) -> Result<HashMap<T, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), i).is_some() {
            return Err(Error::Input(format!("duplicate {what} {id}")));
        }
    }
    Ok(map)
}

fn check_range(score: f64) -> bool {
    (0.0..=1.0).contains(&score)
}

impl EffectivenessMatrix {
    /// Builds a matrix from one row of scores per configuration.
    pub fn from_rows(
        metric_name: impl Into<String>,
        configs: Vec<ConfigurationId>,
        queries: Vec<QueryId>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if configs.is_empty() || queries.is_empty() {
            return Err(Error::Input("matrix has no cells".into()));
        }
        if rows.len() != configs.len() {
            return Err(Error::Input(format!(
                "{} rows for {} configurations",
                rows.len(),
                configs.len()
            )));
        }
        let mut scores = Vec::with_capacity(configs.len() * queries.len());
        for (c, row) in configs.iter().zip(&rows) {
            if row.len() != queries.len() {
                return Err(Error::Input(format!(
                    "row {c} has {} cells, expected {}",
                    row.len(),
                    queries.len()
                )));
            }
            for (q, &s) in queries.iter().zip(row) {
                if !check_range(s) {
                    return Err(Error::Input(format!("score {s} for ({c}, {q}) outside [0,1]")));
                }
            }
            scores.extend_from_slice(row);
        }
        Ok(Self {
            config_pos: position_map(&configs, "configuration")?,
            query_pos: position_map(&queries, "query")?,
            configs,
            queries,
            scores,
            metric_name: metric_name.into(),
        })
    }

    pub fn row(&self, config: usize) -> &[f64] {
        let n = self.queries.len();
        &self.scores[config * n..(config + 1) * n]
    }

    /// Sub-matrix over the given configurations and queries, in the order given.
    pub fn restrict(&self, configs: &[ConfigurationId], queries: &[QueryId]) -> Result<Self> {
        let cpos = configs
            .iter()
            .map(|c| self.resolve_config(c.as_str()))
            .collect::<Result<Vec<_>>>()?;
        let qpos = queries
            .iter()
            .map(|q| self.resolve_query(q.as_str()))
            .collect::<Result<Vec<_>>>()?;
        let rows = cpos
            .iter()
            .map(|&c| qpos.iter().map(|&q| self.score_at(c, q)).collect())
            .collect();
        Self::from_rows(self.metric_name.clone(), configs.to_vec(), queries.to_vec(), rows)
    }

    /// Applies `f` to every cell; the result must stay in `[0, 1]`.
    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let rows = (0..self.configs.len())
            .map(|c| self.row(c).iter().map(|&s| f(s)).collect())
            .collect();
        Self::from_rows(
            self.metric_name.clone(),
            self.configs.clone(),
            self.queries.clone(),
            rows,
        )
    }

    /// Parses the long-format TSV `config_id<TAB>query_id<TAB>score`.
    ///
    /// Row and column order follow first appearance. A leading
    /// `# metric: <name>` comment sets the metric name.
    pub fn parse_tsv<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut configs = Vec::new();
        let mut queries = Vec::new();
        let mut config_pos: HashMap<ConfigurationId, usize> = HashMap::new();
        let mut query_pos: HashMap<QueryId, usize> = HashMap::new();
        let mut cells: HashMap<(usize, usize), f64> = HashMap::new();
        let mut metric_name = String::from("unknown");

        for (i, line) in reader.lines().enumerate() {
            let ln = i + 1;
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.trim_end_matches('\r');
            let t = line.trim();
            if let Some(name) = t.strip_prefix("# metric:") {
                metric_name = name.trim().to_string();
                continue;
            }
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::format(
                    origin,
                    ln,
                    format!("expected 3 tab-separated fields, got {}", fields.len()),
                ));
            }
            let c = ConfigurationId::new(fields[0]).map_err(|e| Error::format(origin, ln, e.to_string()))?;
            let q = QueryId::new(fields[1]).map_err(|e| Error::format(origin, ln, e.to_string()))?;
            let s = parse_f64(origin, ln, fields[2], "score")?;
            if !check_range(s) {
                return Err(Error::format(origin, ln, format!("score {s} outside [0,1]")));
            }
            let ci = *config_pos.entry(c.clone()).or_insert_with(|| {
                configs.push(c.clone());
                configs.len() - 1
            });
            let qi = *query_pos.entry(q.clone()).or_insert_with(|| {
                queries.push(q.clone());
                queries.len() - 1
            });
            if cells.insert((ci, qi), s).is_some() {
                return Err(Error::format(origin, ln, format!("duplicate cell ({c}, {q})")));
            }
        }
        if cells.is_empty() {
            return Err(Error::Input(format!("{origin}: no cells")));
        }
        let mut missing = Vec::new();
        let mut scores = Vec::with_capacity(configs.len() * queries.len());
        for (ci, c) in configs.iter().enumerate() {
            for (qi, q) in queries.iter().enumerate() {
                match cells.get(&(ci, qi)) {
                    Some(&s) => scores.push(s),
                    None => missing.push(format!("({c}, {q})")),
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::Input(format!(
                "{origin}: missing cells {}",
                missing.join(", ")
            )));
        }
        Ok(Self {
            configs,
            queries,
            config_pos,
            query_pos,
            scores,
            metric_name,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_tsv(open(path)?, &path.display().to_string())
    }

    /// Canonical form: metric header, then config-major cells.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# metric: {}", self.metric_name)?;
        for (ci, c) in self.configs.iter().enumerate() {
            for (q, s) in self.queries.iter().zip(self.row(ci)) {
                writeln!(w, "{c}\t{q}\t{s}")?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

impl ScoreSource for EffectivenessMatrix {
    fn configs(&self) -> &[ConfigurationId] {
        &self.configs
    }

    fn queries(&self) -> &[QueryId] {
        &self.queries
    }

    fn config_position(&self, id: &str) -> Option<usize> {
        self.config_pos.get(id).copied()
    }

    fn query_position(&self, id: &str) -> Option<usize> {
        self.query_pos.get(id).copied()
    }

    fn score_at(&self, config: usize, query: usize) -> f64 {
        self.scores[config * self.queries.len() + query]
    }

    fn metric_name(&self) -> &str {
        &self.metric_name
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "\
# metric: ap
c1\tq1\t0.4\nc1\tq2\t0.6\nc1\tq3\t0.4\nc1\tq4\t0.9\nc1\tq5\t0.6\nc1\tq6\t0.6\nc1\tq7\t0.5
c2\tq1\t0.6\nc2\tq2\t0.7\nc2\tq3\t0.5\nc2\tq4\t0.2\nc2\tq5\t0.8\nc2\tq6\t0.7\nc2\tq7\t0.6
c3\tq1\t0.4\nc3\tq2\t0.5\nc3\tq3\t0.6\nc3\tq4\t0.2\nc3\tq5\t0.5\nc3\tq6\t0.6\nc3\tq7\t0.5
";

    fn parse(s: &str) -> Result<EffectivenessMatrix> {
        EffectivenessMatrix::parse_tsv(s.as_bytes(), "test")
    }

    #[test]
    fn toy_file_loads_dense() {
        let m = parse(TOY).unwrap();
        assert_eq!(m.configs().len(), 3);
        assert_eq!(m.queries().len(), 7);
        assert_eq!(m.metric_name(), "ap");
        assert_eq!(m.score("c1", "q4").unwrap(), 0.9);
        assert_eq!(m.score("c3", "q3").unwrap(), 0.6);
    }

    #[test]
    fn empty_file_is_an_error() {
        let err = parse("").unwrap_err();
        assert!(err.to_string().contains("no cells"), "{err}");
        assert!(parse("# only a comment\n").is_err());
    }

    #[test]
    fn out_of_range_score_names_line() {
        let err = parse("c1\tq1\t0.5\nc1\tq2\t1.2\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_cell_lists_gap() {
        let err = parse("c1\tq1\t0.5\nc2\tq2\t0.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(c1, q2)") && msg.contains("(c2, q1)"), "{msg}");
    }

    #[test]
    fn duplicate_cell_is_an_error() {
        assert!(parse("c1\tq1\t0.5\nc1\tq1\t0.5\n").is_err());
    }

    #[test]
    fn canonical_round_trip_is_byte_exact() {
        let m = parse(TOY).unwrap();
        let mut out = Vec::new();
        m.write_tsv(&mut out).unwrap();
        let again = parse(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(again, m);
        let mut out2 = Vec::new();
        again.write_tsv(&mut out2).unwrap();
        assert_eq!(out, out2);
    }

    #[test]
    fn restrict_keeps_requested_order() {
        let m = parse(TOY).unwrap();
        let cs = vec![ConfigurationId::new("c3").unwrap(), ConfigurationId::new("c1").unwrap()];
        let qs = vec![QueryId::new("q4").unwrap()];
        let sub = m.restrict(&cs, &qs).unwrap();
        assert_eq!(sub.row(0), &[0.2]);
        assert_eq!(sub.row(1), &[0.9]);
    }
}
