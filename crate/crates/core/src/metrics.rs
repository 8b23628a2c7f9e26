//! Per-query effectiveness measures computed from a run and its judgments.
//!
//! Relevance is binary (`grade > 0`) everywhere except nDCG, which uses the
//! exponential gain `2^grade - 1` and a `log2(rank + 1)` discount. Queries
//! without any relevant judgment score 0 and log a warning so that matrices
//! stay dense.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::{ConfigurationId, EffectivenessMatrix, QueryId, Qrels, RunList};
use crate::error::{Error, Result};

/// RBP evaluation depth used when none is given: the run length, capped.
pub const DEFAULT_RBP_DEPTH_CAP: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricSpec {
    PrecisionAt(usize),
    AveragePrecision,
    NdcgAt(usize),
    ReciprocalRank,
    Rbp { persistence: f64, depth: Option<usize> },
}

impl MetricSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MetricSpec::PrecisionAt(0) | MetricSpec::NdcgAt(0) => {
                Err(Error::Input("cut-off k must be at least 1".into()))
            }
            MetricSpec::Rbp { persistence, depth } => {
                check_persistence(persistence)?;
                if depth == Some(0) {
                    return Err(Error::Input("RBP depth must be at least 1".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Evaluates the metric; for RBP the residual is returned alongside.
    pub fn evaluate(&self, run: &RunList, qrels: &Qrels) -> Result<MetricValue> {
        let value = match *self {
            MetricSpec::PrecisionAt(k) => precision_at_k(run, qrels, k),
            MetricSpec::AveragePrecision => average_precision(run, qrels),
            MetricSpec::NdcgAt(k) => ndcg_at_k(run, qrels, k),
            MetricSpec::ReciprocalRank => reciprocal_rank(run, qrels),
            MetricSpec::Rbp { persistence, depth } => {
                let r = rbp(run, qrels, persistence, depth)?;
                return Ok(MetricValue {
                    value: r.base,
                    residual: Some(r.residual),
                });
            }
        };
        Ok(MetricValue {
            value,
            residual: None,
        })
    }

    /// Human-readable note on the variant used, written into matrix headers.
    pub fn variant_note(&self) -> &'static str {
        match self {
            MetricSpec::NdcgAt(_) => "gain=2^grade-1 discount=log2(rank+1) relevant=grade>0",
            MetricSpec::Rbp { .. } => "binary relevance grade>0; residual in side report",
            _ => "binary relevance grade>0",
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::PrecisionAt(k) => write!(f, "p@{k}"),
            MetricSpec::AveragePrecision => f.write_str("ap"),
            MetricSpec::NdcgAt(k) => write!(f, "ndcg@{k}"),
            MetricSpec::ReciprocalRank => f.write_str("rr"),
            MetricSpec::Rbp {
                persistence,
                depth: Some(d),
            } => write!(f, "rbp:{persistence}:{d}"),
            MetricSpec::Rbp { persistence, .. } => write!(f, "rbp:{persistence}"),
        }
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    /// Grammar: `p@K`, `ap`, `ndcg@K`, `rr`, `rbp:P[:DEPTH]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("unrecognised metric spec {s:?}"));
        let s_lower = s.to_ascii_lowercase();
        let spec = if let Some(k) = s_lower.strip_prefix("p@") {
            MetricSpec::PrecisionAt(k.parse().map_err(|_| bad())?)
        } else if let Some(k) = s_lower.strip_prefix("ndcg@") {
            MetricSpec::NdcgAt(k.parse().map_err(|_| bad())?)
        } else if s_lower == "ap" {
            MetricSpec::AveragePrecision
        } else if s_lower == "rr" {
            MetricSpec::ReciprocalRank
        } else if let Some(rest) = s_lower.strip_prefix("rbp:") {
            let mut parts = rest.split(':');
            let persistence: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let depth = match parts.next() {
                Some(d) => Some(d.parse().map_err(|_| bad())?),
                None => None,
            };
            if parts.next().is_some() {
                return Err(bad());
            }
            MetricSpec::Rbp { persistence, depth }
        } else {
            return Err(bad());
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub residual: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RbpScore {
    pub base: f64,
    pub residual: f64,
}

fn check_persistence(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("RBP persistence {p} outside (0,1)")))
    }
}

fn warn_no_relevant(metric: &str, query: &QueryId) {
    log::warn!("{metric}: query {query} has no relevant judgments; scoring 0");
}

/// Fraction of the top `k` positions holding a relevant document; positions
/// past the end of the run count as non-relevant.
pub fn precision_at_k(run: &RunList, qrels: &Qrels, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let q = run.query_id.as_str();
    let hits = run.doc_ids().take(k).filter(|d| qrels.is_relevant(q, d)).count();
    hits as f64 / k as f64
}

pub fn average_precision(run: &RunList, qrels: &Qrels) -> f64 {
    let q = run.query_id.as_str();
    let total = qrels.num_relevant(q);
    if total == 0 {
        warn_no_relevant("ap", &run.query_id);
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in run.doc_ids().enumerate() {
        if qrels.is_relevant(q, d) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total as f64
}

fn gain(grade: i32) -> f64 {
    if grade > 0 {
        2f64.powi(grade) - 1.0
    } else {
        0.0
    }
}

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

pub fn ndcg_at_k(run: &RunList, qrels: &Qrels, k: usize) -> f64 {
    let q = run.query_id.as_str();
    let ideal: f64 = qrels
        .ideal_grades(q)
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| gain(g) * discount(i + 1))
        .sum();
    if ideal <= 0.0 {
        warn_no_relevant("ndcg", &run.query_id);
        return 0.0;
    }
    let dcg: f64 = run
        .doc_ids()
        .take(k)
        .enumerate()
        .map(|(i, d)| gain(qrels.grade(q, d).unwrap_or(0)) * discount(i + 1))
        .sum();
    dcg / ideal
}

pub fn reciprocal_rank(run: &RunList, qrels: &Qrels) -> f64 {
    let q = run.query_id.as_str();
    run.doc_ids()
        .position(|d| qrels.is_relevant(q, d))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Rank-biased precision with its residual.
///
/// The residual is the most the score could rise if every unjudged document
/// within the depth, every empty position within the depth, and everything
/// beyond the depth were relevant. `base + residual <= 1` always holds.
pub fn rbp(run: &RunList, qrels: &Qrels, persistence: f64, depth: Option<usize>) -> Result<RbpScore> {
    check_persistence(persistence)?;
    let p = persistence;
    let d = match depth {
        Some(0) => return Err(Error::Input("RBP depth must be at least 1".into())),
        Some(d) => d,
        None => run.len().min(DEFAULT_RBP_DEPTH_CAP),
    };
    let q = run.query_id.as_str();
    let mut base = 0.0;
    let mut unknown = 0.0;
    let mut weight = 1.0;
    for i in 0..d {
        match run.entries().get(i) {
            Some(e) => match qrels.grade(q, &e.doc_id) {
                Some(g) if g > 0 => base += weight,
                Some(_) => {}
                None => unknown += weight,
            },
            None => unknown += weight,
        }
        weight *= p;
    }
    Ok(RbpScore {
        base: (1.0 - p) * base,
        residual: (1.0 - p) * unknown + p.powi(d as i32),
    })
}

/// Matrix plus, for RBP, one residual per cell in the matrix's cell order.
#[derive(Clone, Debug)]
pub struct MatrixBuild {
    pub matrix: EffectivenessMatrix,
    pub residuals: Option<Vec<(ConfigurationId, QueryId, f64)>>,
}

/// Scores every configuration's run on every judged query.
///
/// Queries come from the judgments in order of first appearance; runs for
/// unjudged queries are ignored. A configuration missing a run for a judged
/// query is an error.
pub fn build_matrix(
    runs: &[(ConfigurationId, Vec<RunList>)],
    qrels: &Qrels,
    spec: MetricSpec,
) -> Result<MatrixBuild> {
    spec.validate()?;
    let queries: Vec<QueryId> = qrels.queries().to_vec();
    if runs.is_empty() || queries.is_empty() {
        return Err(Error::Input("matrix has no cells".into()));
    }
    let rows: Vec<Result<Vec<MetricValue>>> = runs
        .par_iter()
        .map(|(config, config_runs)| {
            queries
                .iter()
                .map(|q| {
                    let run = config_runs
                        .iter()
                        .find(|r| r.query_id == *q)
                        .ok_or_else(|| {
                            Error::Input(format!("configuration {config} has no run for query {q}"))
                        })?;
                    spec.evaluate(run, qrels)
                })
                .collect()
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let residuals = matches!(spec, MetricSpec::Rbp { .. }).then(|| {
        runs.iter()
            .zip(&rows)
            .flat_map(|((c, _), row)| {
                queries
                    .iter()
                    .zip(row)
                    .map(|(q, v)| (c.clone(), q.clone(), v.residual.unwrap_or(0.0)))
            })
            .collect()
    });
    let matrix = EffectivenessMatrix::from_rows(
        spec.to_string(),
        runs.iter().map(|(c, _)| c.clone()).collect(),
        queries,
        rows.into_iter()
            .map(|r| r.into_iter().map(|v| v.value).collect())
            .collect(),
    )?;
    Ok(MatrixBuild { matrix, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qid(s: &str) -> QueryId {
        QueryId::new(s).unwrap()
    }

    fn run(docs: &[&str]) -> RunList {
        RunList::from_ranked(qid("q"), "t", docs.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn qrels(judged: &[(&str, i32)]) -> Qrels {
        let mut q = Qrels::new();
        for (d, g) in judged {
            q.insert(qid("q"), *d, *g).unwrap();
        }
        q
    }

    const EPS: f64 = 1e-12;

    #[test]
    fn precision_cases() {
        let docs: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
        let r = RunList::from_ranked(qid("q"), "t", docs.clone()).unwrap();
        let all: Vec<(&str, i32)> = docs.iter().map(|d| (d.as_str(), 1)).collect();
        assert_eq!(precision_at_k(&r, &qrels(&all), 10), 1.0);
        let seven: Vec<(&str, i32)> = docs.iter().take(7).map(|d| (d.as_str(), 1)).collect();
        assert!((precision_at_k(&r, &qrels(&seven), 10) - 0.7).abs() < EPS);
        let short = run(&["a", "b", "c", "d", "e"]);
        assert!((precision_at_k(&short, &qrels(&[("a", 1), ("c", 2)]), 10) - 0.2).abs() < EPS);
    }

    #[test]
    fn average_precision_cases() {
        let r = run(&["a", "x", "b"]);
        let ap = average_precision(&r, &qrels(&[("a", 1), ("b", 1)]));
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < EPS);
        assert_eq!(average_precision(&run(&["a", "b"]), &qrels(&[("a", 1), ("b", 3)])), 1.0);
        assert_eq!(average_precision(&run(&["x"]), &qrels(&[("a", 1)])), 0.0);
        assert_eq!(average_precision(&run(&["x"]), &qrels(&[("x", 0)])), 0.0);
    }

    #[test]
    fn ndcg_cases() {
        let q = qrels(&[("a", 1), ("b", 1)]);
        let v = ndcg_at_k(&run(&["x", "a", "b"]), &q, 3);
        let expected = (1.0 / 3f64.log2() + 1.0 / 4f64.log2()) / (1.0 + 1.0 / 3f64.log2());
        assert!((v - expected).abs() < EPS);
        assert!((v - 0.6934).abs() < 1e-4);
        let graded = qrels(&[("a", 3), ("b", 1), ("c", 2)]);
        assert!((ndcg_at_k(&run(&["a", "c", "b"]), &graded, 10) - 1.0).abs() < EPS);
        assert_eq!(ndcg_at_k(&run(&["a"]), &qrels(&[("a", 1)]), 1), 1.0);
        assert_eq!(ndcg_at_k(&run(&["a"]), &qrels(&[("a", -1)]), 5), 0.0);
    }

    #[test]
    fn reciprocal_rank_cases() {
        let q = qrels(&[("r", 1)]);
        assert_eq!(reciprocal_rank(&run(&["r"]), &q), 1.0);
        assert_eq!(reciprocal_rank(&run(&["a", "b", "c", "r"]), &q), 0.25);
        assert_eq!(reciprocal_rank(&run(&["a"]), &q), 0.0);
    }

    #[test]
    fn rbp_cases() {
        let r = rbp(&run(&["a", "b"]), &qrels(&[("a", 1), ("b", 1)]), 0.5, Some(2)).unwrap();
        assert_eq!(r, RbpScore { base: 0.75, residual: 0.25 });

        let docs: Vec<&str> = vec!["a", "u1", "u2", "u3", "u4", "u5", "u6", "u7", "u8", "u9"];
        let r = rbp(&run(&docs), &qrels(&[("a", 1)]), 0.5, Some(10)).unwrap();
        assert_eq!(r, RbpScore { base: 0.5, residual: 0.5 });

        let r = rbp(&run(&[]), &qrels(&[("a", 1)]), 0.5, Some(10)).unwrap();
        assert_eq!(r, RbpScore { base: 0.0, residual: 1.0 });

        assert!(rbp(&run(&["a"]), &qrels(&[]), 1.0, None).is_err());
        assert!(rbp(&run(&["a"]), &qrels(&[]), 0.0, None).is_err());
    }

    #[test]
    fn rbp_fully_judged_residual_is_tail_mass() {
        let r = rbp(&run(&["a", "b", "c", "d"]), &qrels(&[("a", 0), ("b", 1), ("c", 0), ("d", 2)]), 0.8, Some(3))
            .unwrap();
        assert_eq!(r.residual, 0.8f64.powi(3));
    }

    #[test]
    fn spec_grammar() {
        assert_eq!("p@10".parse::<MetricSpec>().unwrap(), MetricSpec::PrecisionAt(10));
        assert_eq!("ndcg@10".parse::<MetricSpec>().unwrap(), MetricSpec::NdcgAt(10));
        assert_eq!("ap".parse::<MetricSpec>().unwrap(), MetricSpec::AveragePrecision);
        assert_eq!("rr".parse::<MetricSpec>().unwrap(), MetricSpec::ReciprocalRank);
        assert_eq!(
            "rbp:0.5:1000".parse::<MetricSpec>().unwrap(),
            MetricSpec::Rbp { persistence: 0.5, depth: Some(1000) }
        );
        for bad in ["p@0", "rbp:1.5", "rbp:0.5:0", "map", "rbp:0.5:10:2"] {
            assert!(bad.parse::<MetricSpec>().is_err(), "{bad}");
        }
        for s in ["p@10", "ap", "ndcg@5", "rr", "rbp:0.8:100", "rbp:0.95"] {
            assert_eq!(s.parse::<MetricSpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn build_matrix_cases() {
        let docs: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
        let r = RunList::from_ranked(qid("q"), "t", docs.clone()).unwrap();
        let seven: Vec<(&str, i32)> = docs.iter().take(7).map(|d| (d.as_str(), 1)).collect();
        let q = qrels(&seven);
        let c = ConfigurationId::new("c").unwrap();
        let built = build_matrix(&[(c.clone(), vec![r.clone()])], &q, MetricSpec::PrecisionAt(10)).unwrap();
        assert!((built.matrix.row(0)[0] - 0.7).abs() < EPS);
        assert!(built.residuals.is_none());

        let rbp_spec = MetricSpec::Rbp { persistence: 0.5, depth: Some(10) };
        let built = build_matrix(&[(c.clone(), vec![r])], &q, rbp_spec).unwrap();
        assert_eq!(built.residuals.unwrap().len(), 1);

        let mut q2 = q.clone();
        q2.insert(qid("other"), "z", 1).unwrap();
        let err = build_matrix(&[(c, vec![])], &q2, MetricSpec::AveragePrecision).unwrap_err();
        assert!(err.to_string().contains("no run"));
    }
}
