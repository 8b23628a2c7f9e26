//! Reference systems: single best configuration, random pools, per-query
//! oracles, score fusion and two-configuration selective query expansion.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ConfigurationDescriptor, ConfigurationId, QueryId, RunList, ScoreSource};
use crate::error::{contract, Error, Result};

fn mean_score<M: ScoreSource + ?Sized>(matrix: &M, config: usize, queries: &[usize]) -> f64 {
    queries.iter().map(|&q| matrix.score_at(config, q)).sum::<f64>() / queries.len() as f64
}

fn resolve_queries<M: ScoreSource + ?Sized>(matrix: &M, queries: &[QueryId]) -> Result<Vec<usize>> {
    if queries.is_empty() {
        return Err(contract!("no queries"));
    }
    queries.iter().map(|q| matrix.resolve_query(q.as_str())).collect()
}

/// Candidate with the highest mean over `queries`; ties go to the smallest id.
pub fn best_trained<M: ScoreSource + ?Sized>(
    matrix: &M,
    queries: &[QueryId],
    candidates: &[ConfigurationId],
) -> Result<ConfigurationId> {
    let qs = resolve_queries(matrix, queries)?;
    let mut best: Option<(f64, &ConfigurationId)> = None;
    for id in candidates {
        let m = mean_score(matrix, matrix.resolve_config(id.as_str())?, &qs);
        best = match best {
            Some((bm, bid)) if bm > m || (bm == m && bid <= id) => Some((bm, bid)),
            _ => Some((m, id)),
        };
    }
    best.map(|(_, id)| id.clone())
        .ok_or_else(|| contract!("no candidate configurations"))
}

/// `k` distinct configurations drawn uniformly without replacement,
/// returned sorted by id. The draw depends only on the set of ids in
/// `pool`, `k` and `seed`.
pub fn random_k(pool: &[ConfigurationId], k: usize, seed: u64) -> Result<Vec<ConfigurationId>> {
    if k > pool.len() {
        return Err(contract!("cannot draw {k} configurations from a pool of {}", pool.len()));
    }
    let mut sorted = pool.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != pool.len() {
        return Err(contract!("pool contains duplicate configurations"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<ConfigurationId> = sample(&mut rng, sorted.len(), k)
        .into_iter()
        .map(|i| sorted[i].clone())
        .collect();
    picked.sort();
    Ok(picked)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    /// `(query, best configuration, its score)` in query order.
    pub per_query: Vec<(QueryId, ConfigurationId, f64)>,
    pub mean: f64,
}

/// Per-query best configuration within `set` (ties to the smallest id) and
/// the mean of the per-query maxima.
pub fn oracle<M: ScoreSource + ?Sized>(
    matrix: &M,
    set: &[ConfigurationId],
    queries: &[QueryId],
) -> Result<OracleResult> {
    if set.is_empty() {
        return Err(contract!("oracle over an empty configuration set"));
    }
    let cs = set
        .iter()
        .map(|c| matrix.resolve_config(c.as_str()))
        .collect::<Result<Vec<_>>>()?;
    let qs = resolve_queries(matrix, queries)?;
    let mut per_query = Vec::with_capacity(qs.len());
    for (q, &qi) in queries.iter().zip(&qs) {
        let mut best: Option<(f64, &ConfigurationId)> = None;
        for (id, &ci) in set.iter().zip(&cs) {
            let s = matrix.score_at(ci, qi);
            best = match best {
                Some((bs, bid)) if bs > s || (bs == s && bid <= id) => Some((bs, bid)),
                _ => Some((s, id)),
            };
        }
        let (s, id) = best.expect("non-empty set");
        per_query.push((q.clone(), id.clone(), s));
    }
    let mean = per_query.iter().map(|(_, _, s)| s).sum::<f64>() / per_query.len() as f64;
    Ok(OracleResult { per_query, mean })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    MinMax,
    None,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(Normalization::MinMax),
            "none" => Ok(Normalization::None),
            _ => Err(Error::Input(format!("normalization must be minmax or none, got {s:?}"))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::MinMax => "minmax",
            Normalization::None => "none",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusedRun {
    pub query_id: QueryId,
    /// `(doc_id, fused score)`, score descending then doc id ascending.
    pub entries: Vec<(String, f64)>,
    pub sources: Vec<String>,
    pub normalization: Normalization,
}

impl FusedRun {
    pub fn to_run_list(&self, tag: &str) -> Result<RunList> {
        RunList::from_scored(self.query_id.clone(), tag, self.entries.clone())
    }
}

/// CombSUM: the fused score of a document is the sum of its (optionally
/// min-max normalized) scores over the runs that retrieved it. Under min-max
/// a run whose scores are all equal maps every document to 1.
pub fn comb_sum(runs: &[RunList], normalization: Normalization) -> Result<FusedRun> {
    let first = runs.first().ok_or_else(|| contract!("fusion needs at least one run"))?;
    if let Some(r) = runs.iter().find(|r| r.query_id != first.query_id) {
        return Err(contract!(
            "cannot fuse runs for different queries ({} and {})",
            first.query_id,
            r.query_id
        ));
    }
    let mut fused: HashMap<&str, f64> = HashMap::new();
    for run in runs {
        let (lo, hi) = run
            .entries()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.score), hi.max(e.score)));
        let degenerate = normalization == Normalization::MinMax && !run.is_empty() && hi == lo;
        if degenerate {
            log::warn!(
                "run {} for query {} has a single score value; normalizing all to 1",
                run.tag,
                run.query_id
            );
        }
        for e in run.entries() {
            let s = match normalization {
                Normalization::None => e.score,
                Normalization::MinMax if degenerate => 1.0,
                Normalization::MinMax => (e.score - lo) / (hi - lo),
            };
            *fused.entry(&e.doc_id).or_insert(0.0) += s;
        }
    }
    let mut entries: Vec<(String, f64)> = fused.into_iter().map(|(d, s)| (d.to_string(), s)).collect();
    entries.sort_by(crate::data::runs_canonical_order);
    Ok(FusedRun {
        query_id: first.query_id.clone(),
        entries,
        sources: runs.iter().map(|r| r.tag.clone()).collect(),
        normalization,
    })
}

/// Best-trained configuration and its query-expansion counterpart.
///
/// The counterpart is the best configuration sharing the retrieval model
/// with expansion toggled; if none exists, the best configuration of the
/// opposite expansion class overall.
pub fn trained_sqe<M: ScoreSource + ?Sized>(
    descriptors: &[ConfigurationDescriptor],
    matrix: &M,
    queries: &[QueryId],
) -> Result<(ConfigurationId, ConfigurationId)> {
    let by_id: HashMap<&str, &ConfigurationDescriptor> =
        descriptors.iter().map(|d| (d.config_id.as_str(), d)).collect();
    let described = matrix
        .configs()
        .iter()
        .map(|c| {
            by_id
                .get(c.as_str())
                .copied()
                .ok_or_else(|| contract!("no descriptor for configuration {c}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<ConfigurationId> = described.iter().map(|d| d.config_id.clone()).collect();
    let best_id = best_trained(matrix, queries, &all)?;
    let best = by_id[best_id.as_str()];
    let opposite: Vec<&ConfigurationDescriptor> = described
        .iter()
        .copied()
        .filter(|d| d.uses_expansion() != best.uses_expansion())
        .collect();
    if opposite.is_empty() {
        return Err(contract!(
            "selective query expansion needs configurations both with and without expansion"
        ));
    }
    let same_model: Vec<ConfigurationId> = opposite
        .iter()
        .filter(|d| d.retrieval_model == best.retrieval_model)
        .map(|d| d.config_id.clone())
        .collect();
    let candidates = if same_model.is_empty() {
        opposite.iter().map(|d| d.config_id.clone()).collect()
    } else {
        same_model
    };
    let counterpart = best_trained(matrix, queries, &candidates)?;
    log::info!("sqe pair: {best_id} / {counterpart}");
    Ok((best_id, counterpart))
}
