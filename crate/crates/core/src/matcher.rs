//! Per-query configuration assignment by nearest training query.
//!
//! Each training query is mapped to the pool member that scored best on it.
//! A new query is represented by aggregated document features and receives
//! the configuration of the most cosine-similar training query.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{group_by_query, ConfigurationId, FeatureRecord, QueryId, ScoreSource};
use crate::error::{contract, Error, Result};

/// Default number of top documents aggregated per query.
pub const DEFAULT_DEPTH: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    Mean,
    /// Population standard deviation.
    Std,
    Max,
}

impl Aggregator {
    pub const ALL: [Aggregator; 3] = [Aggregator::Mean, Aggregator::Std, Aggregator::Max];

    fn suffix(self) -> &'static str {
        match self {
            Aggregator::Mean => "mean",
            Aggregator::Std => "std",
            Aggregator::Max => "max",
        }
    }

    fn apply(self, values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        match self {
            Aggregator::Mean => mean,
            Aggregator::Std => (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt(),
            Aggregator::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryFeatureVector {
    pub query_id: QueryId,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl QueryFeatureVector {
    pub fn new(query_id: QueryId, names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Input(format!(
                "{query_id}: {} names for {} values",
                names.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("{query_id}: non-finite feature value {v}")));
        }
        Ok(Self {
            query_id,
            names,
            values,
        })
    }
}

/// Summarizes one query's document features.
///
/// Documents are taken in the order they appear in `records` (the reference
/// run's order) and truncated to `depth`; fewer documents are aggregated as
/// they are. Feature names are sorted, and each yields one value per
/// aggregator, named `<feature>.<aggregator>`.
pub fn aggregate_features(
    query_id: &QueryId,
    records: &[&FeatureRecord],
    depth: usize,
    aggregators: &[Aggregator],
) -> Result<QueryFeatureVector> {
    if depth == 0 {
        return Err(contract!("aggregation depth must be at least 1"));
    }
    let mut docs: Vec<&str> = Vec::new();
    let mut per_doc: HashMap<&str, HashMap<&str, f64>> = HashMap::new();
    for r in records.iter().filter(|r| r.query_id == *query_id) {
        let entry = per_doc.entry(&r.doc_id).or_insert_with(|| {
            docs.push(&r.doc_id);
            HashMap::new()
        });
        entry.insert(&r.feature_name, r.value);
    }
    if docs.is_empty() {
        return Err(Error::Input(format!("no feature records for query {query_id}")));
    }
    docs.truncate(depth);
    let mut features: Vec<&str> = per_doc
        .values()
        .flat_map(|m| m.keys().copied())
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    features.sort_unstable();

    let mut names = Vec::with_capacity(features.len() * aggregators.len());
    let mut values = Vec::with_capacity(names.capacity());
    for f in features {
        let column = docs
            .iter()
            .map(|d| {
                per_doc[d].get(f).copied().ok_or_else(|| {
                    Error::Input(format!("query {query_id}: document {d} lacks feature {f}"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        for a in aggregators {
            names.push(format!("{f}.{}", a.suffix()));
            values.push(a.apply(&column));
        }
    }
    QueryFeatureVector::new(query_id.clone(), names, values)
}

/// Aggregates every query in `records`; all queries must share one schema.
pub fn aggregate_all(records: &[FeatureRecord], depth: usize) -> Result<Vec<QueryFeatureVector>> {
    let vectors = group_by_query(records)
        .into_iter()
        .map(|(q, recs)| aggregate_features(&q, &recs, depth, &Aggregator::ALL))
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = vectors.first() {
        if let Some(v) = vectors.iter().find(|v| v.names != first.names) {
            return Err(Error::Input(format!(
                "query {} has a different feature set than query {}",
                v.query_id, first.query_id
            )));
        }
    }
    Ok(vectors)
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn cosine_values(u: &[f64], v: &[f64]) -> f64 {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        log::warn!("cosine with a zero vector; similarity 0");
        return 0.0;
    }
    (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0)
}

/// Cosine similarity; a zero-norm operand gives 0.
pub fn cosine(u: &QueryFeatureVector, v: &QueryFeatureVector) -> Result<f64> {
    if u.names != v.names {
        return Err(contract!(
            "feature schemas of {} and {} differ",
            u.query_id,
            v.query_id
        ));
    }
    Ok(cosine_values(&u.values, &v.values))
}

/// Training query → best pool configuration on that query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryConfigIndex {
    pub metric: String,
    pub pool: Vec<ConfigurationId>,
    pub entries: BTreeMap<QueryId, ConfigurationId>,
}

impl QueryConfigIndex {
    pub fn get(&self, query: &str) -> Option<&ConfigurationId> {
        self.entries.get(query)
    }
}

/// Maps each query to the pool member maximizing its score; ties go to the
/// smallest id.
pub fn build_best_config_index<M: ScoreSource + ?Sized>(
    matrix: &M,
    queries: &[QueryId],
    pool: &[ConfigurationId],
) -> Result<QueryConfigIndex> {
    if pool.is_empty() {
        return Err(contract!("selected pool is empty"));
    }
    let cpos = pool
        .iter()
        .map(|c| matrix.resolve_config(c.as_str()))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = BTreeMap::new();
    for q in queries {
        let qi = matrix.resolve_query(q.as_str())?;
        let mut best: Option<(f64, &ConfigurationId)> = None;
        for (&ci, id) in cpos.iter().zip(pool) {
            let s = matrix.score_at(ci, qi);
            best = match best {
                Some((bs, bid)) if bs > s || (bs == s && bid <= id) => Some((bs, bid)),
                _ => Some((s, id)),
            };
        }
        entries.insert(q.clone(), best.expect("non-empty pool").1.clone());
    }
    Ok(QueryConfigIndex {
        metric: matrix.metric_name().to_string(),
        pool: pool.to_vec(),
        entries,
    })
}

/// Per-dimension standardization fitted on training vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(vectors: &[&[f64]]) -> Self {
        let dim = vectors.first().map_or(0, |v| v.len());
        let n = vectors.len() as f64;
        let means: Vec<f64> = (0..dim)
            .map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n)
            .collect();
        let sds = (0..dim)
            .map(|j| {
                let sd = (vectors.iter().map(|v| (v[j] - means[j]).powi(2)).sum::<f64>() / n).sqrt();
                // constant dimension: centre only
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, sds }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingVector {
    pub query_id: QueryId,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainOptions {
    pub zscore: bool,
    pub depth: usize,
    /// Tag of the run the features were computed from.
    pub reference: String,
}

/// Everything needed to assign a configuration to an unseen query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema: Vec<String>,
    pub depth: usize,
    pub reference: String,
    pub standardizer: Option<Standardizer>,
    /// Sorted by query id; standardized when a standardizer is present.
    pub training: Vec<TrainingVector>,
    pub index: QueryConfigIndex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub query_id: QueryId,
    pub config_id: ConfigurationId,
    pub matched_query: QueryId,
    pub similarity: f64,
}

impl TrainedModel {
    /// Builds the index on `queries` and stores their feature vectors.
    pub fn train<M: ScoreSource + ?Sized>(
        matrix: &M,
        queries: &[QueryId],
        pool: &[ConfigurationId],
        vectors: &[QueryFeatureVector],
        options: &TrainOptions,
    ) -> Result<Self> {
        if queries.is_empty() {
            return Err(contract!("no training queries"));
        }
        let index = build_best_config_index(matrix, queries, pool)?;
        let by_query: HashMap<&QueryId, &QueryFeatureVector> =
            vectors.iter().map(|v| (&v.query_id, v)).collect();
        let mut chosen: Vec<&QueryFeatureVector> = queries
            .iter()
            .map(|q| {
                by_query
                    .get(q)
                    .copied()
                    .ok_or_else(|| contract!("no features for training query {q}"))
            })
            .collect::<Result<_>>()?;
        chosen.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        let schema = chosen[0].names.clone();
        if let Some(v) = chosen.iter().find(|v| v.names != schema) {
            return Err(contract!("training query {} has a different feature schema", v.query_id));
        }
        let standardizer = options.zscore.then(|| {
            let raw: Vec<&[f64]> = chosen.iter().map(|v| v.values.as_slice()).collect();
            Standardizer::fit(&raw)
        });
        let training = chosen
            .iter()
            .map(|v| TrainingVector {
                query_id: v.query_id.clone(),
                values: match &standardizer {
                    Some(s) => s.apply(&v.values),
                    None => v.values.clone(),
                },
            })
            .collect();
        Ok(Self {
            schema,
            depth: if options.depth == 0 { DEFAULT_DEPTH } else { options.depth },
            reference: options.reference.clone(),
            standardizer,
            training,
            index,
        })
    }

    /// Configuration of the most similar training query; cosine ties go to
    /// the smallest query id.
    pub fn best_match(&self, test: &QueryFeatureVector) -> Result<Assignment> {
        if test.names != self.schema {
            return Err(contract!("query {} does not match the model's feature schema", test.query_id));
        }
        if self.training.is_empty() {
            return Err(contract!("model has no training queries"));
        }
        let values = match &self.standardizer {
            Some(s) => s.apply(&test.values),
            None => test.values.clone(),
        };
        let mut best: Option<(f64, &QueryId)> = None;
        for t in &self.training {
            let sim = cosine_values(&values, &t.values);
            best = match best {
                Some((bs, bq)) if bs > sim || (bs == sim && bq <= &t.query_id) => Some((bs, bq)),
                _ => Some((sim, &t.query_id)),
            };
        }
        let (similarity, matched) = best.expect("non-empty training set");
        let config_id = self
            .index
            .get(matched.as_str())
            .ok_or_else(|| Error::Input(format!("model index lacks training query {matched}")))?
            .clone();
        Ok(Assignment {
            query_id: test.query_id.clone(),
            config_id,
            matched_query: matched.clone(),
            similarity,
        })
    }

    pub fn match_all(&self, tests: &[QueryFeatureVector]) -> Result<Vec<Assignment>> {
        tests.par_iter().map(|t| self.best_match(t)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.training {
            if t.values.len() != self.schema.len() {
                return Err(Error::Input(format!("training vector {} has wrong dimension", t.query_id)));
            }
            if self.index.get(t.query_id.as_str()).is_none() {
                return Err(Error::Input(format!("training query {} missing from index", t.query_id)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// `test_query_id<TAB>config_id<TAB>matched_train_query<TAB>similarity`
pub fn write_assignments<W: std::io::Write>(mut w: W, assignments: &[Assignment]) -> std::io::Result<()> {
    for a in assignments {
        writeln!(w, "{}\t{}\t{}\t{}", a.query_id, a.config_id, a.matched_query, a.similarity)?;
    }
    Ok(())
}
