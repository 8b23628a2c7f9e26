//! Cross-validated comparison of configuration-selection methods.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::folds::{FoldPair, FoldPlan};
use super::stats::{bonferroni, mean, paired_t_test, sample_sd};
use crate::baselines::{best_trained, oracle, random_k, trained_sqe};
use crate::data::{AccessPhase, ConfigurationDescriptor, ConfigurationId, QueryId, ScoreSource};
use crate::error::{contract, Error, Result};
use crate::matcher::{QueryFeatureVector, TrainOptions, TrainedModel};
use crate::selection::{select_configurations, Objective, RiskParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Single configuration with the best training mean.
    BestTrained,
    /// Effectiveness-risk pool plus cosine matching.
    ERiskCosine,
    /// Query-count-risk pool plus cosine matching.
    NRiskCosine,
    /// Random pool of the same size plus cosine matching.
    RandomKCosine,
    /// Best-trained configuration and its expansion counterpart, cosine matching.
    SqeCosine,
    /// Per-query best over the risk-selected pool (objective from the params).
    OracleK,
    /// Per-query best over the random pool.
    OracleRandomK,
    /// Per-query best over every configuration.
    Oracle,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::BestTrained,
        Method::ERiskCosine,
        Method::NRiskCosine,
        Method::RandomKCosine,
        Method::SqeCosine,
        Method::OracleK,
        Method::OracleRandomK,
        Method::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::BestTrained => "best_trained",
            Method::ERiskCosine => "erisk_cosine",
            Method::NRiskCosine => "nrisk_cosine",
            Method::RandomKCosine => "randomk_cosine",
            Method::SqeCosine => "sqe_cosine",
            Method::OracleK => "oracle_k",
            Method::OracleRandomK => "oracle_random_k",
            Method::Oracle => "oracle",
        }
    }

    pub fn needs_features(self) -> bool {
        matches!(
            self,
            Method::ERiskCosine | Method::NRiskCosine | Method::RandomKCosine | Method::SqeCosine
        )
    }

    pub fn is_oracle(self) -> bool {
        matches!(self, Method::OracleK | Method::OracleRandomK | Method::Oracle)
    }

    pub fn parse_list(csv: &str) -> Result<Vec<Method>> {
        csv.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Input(format!("unknown method {s:?}; expected one of {}", known.join(", ")))
            })
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentParams {
    pub k: usize,
    /// Objective of the pool behind `oracle_k`.
    pub objective: Objective,
    pub beta: f64,
    /// Reference for the first selection step; the fold's best-trained
    /// configuration when absent.
    pub baseline: Option<ConfigurationId>,
    /// Seeds the random pools (one per fold).
    pub seed: u64,
    pub zscore: bool,
    /// Methods every other method is t-tested against.
    pub references: Vec<Method>,
    /// Method that improved/degraded counts are measured against.
    pub count_reference: Method,
    pub alpha: f64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            k: 20,
            objective: Objective::Effectiveness,
            beta: 0.0,
            baseline: None,
            seed: 42,
            zscore: false,
            references: vec![Method::BestTrained],
            count_reference: Method::BestTrained,
            alpha: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Test-fold means in fold-plan order.
    pub measurements: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    /// Mean over the two folds of the first draw.
    pub first_split_mean: f64,
    /// One score per draw for every query.
    pub per_query: BTreeMap<QueryId, Vec<f64>>,
}

impl MethodSummary {
    pub fn per_query_means(&self) -> BTreeMap<&QueryId, f64> {
        self.per_query.iter().map(|(q, v)| (q, mean(v))).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Significance {
    pub method: Method,
    pub reference: Method,
    pub t: f64,
    pub p: f64,
    pub p_bonferroni: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct QueryCounts {
    pub method: Method,
    pub reference: Method,
    pub improved: usize,
    pub degraded: usize,
    pub unchanged: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub metric: String,
    pub k: usize,
    pub objective: Objective,
    pub beta: f64,
    pub seed: u64,
    pub draws: usize,
    pub folds: usize,
    /// Sorted by method, independent of the order methods were requested in.
    pub methods: Vec<MethodSummary>,
    pub significance: Vec<Significance>,
    pub counts: Vec<QueryCounts>,
}

impl ExperimentReport {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Pools {
    best: ConfigurationId,
    risk: HashMap<Objective, Vec<ConfigurationId>>,
    random: Option<Vec<ConfigurationId>>,
    sqe: Option<Vec<ConfigurationId>>,
}

fn risk_objective(m: Method, params: &ExperimentParams) -> Option<Objective> {
    match m {
        Method::ERiskCosine => Some(Objective::Effectiveness),
        Method::NRiskCosine => Some(Objective::QueryCount),
        Method::OracleK => Some(params.objective),
        _ => None,
    }
}

fn train_pools<M: ScoreSource + ?Sized>(
    matrix: &M,
    pair: &FoldPair,
    fold: usize,
    methods: &[Method],
    descriptors: Option<&[ConfigurationDescriptor]>,
    params: &ExperimentParams,
) -> Result<Pools> {
    let all = matrix.configs();
    let best = best_trained(matrix, &pair.train, all)?;
    let baseline = params.baseline.clone().unwrap_or_else(|| best.clone());
    let mut risk = HashMap::new();
    for obj in methods.iter().filter_map(|&m| risk_objective(m, params)) {
        if risk.contains_key(&obj) {
            continue;
        }
        let rp = RiskParams::new(obj, params.beta, params.k, baseline.clone());
        let pool = select_configurations(matrix, &pair.train, all, &rp)?;
        risk.insert(obj, pool.config_ids());
    }
    let random = methods
        .iter()
        .any(|m| matches!(m, Method::RandomKCosine | Method::OracleRandomK))
        .then(|| random_k(all, params.k, fold_seed(params.seed, fold)))
        .transpose()?;
    let sqe = if methods.contains(&Method::SqeCosine) {
        let ds = descriptors.ok_or_else(|| contract!("sqe_cosine needs configuration descriptors"))?;
        let (a, b) = trained_sqe(ds, matrix, &pair.train)?;
        Some(vec![a, b])
    } else {
        None
    };
    Ok(Pools {
        best,
        risk,
        random,
        sqe,
    })
}

type FoldScores = Vec<(Method, Vec<(QueryId, f64)>)>;

struct Inputs<'a, M: ?Sized> {
    matrix: &'a M,
    methods: &'a [Method],
    features: Option<&'a [QueryFeatureVector]>,
    by_query: Option<HashMap<&'a QueryId, &'a QueryFeatureVector>>,
    descriptors: Option<&'a [ConfigurationDescriptor]>,
    params: &'a ExperimentParams,
}

fn run_fold<M: ScoreSource + ?Sized>(inputs: &Inputs<'_, M>, fold: usize, pair: &FoldPair) -> Result<FoldScores> {
    let Inputs {
        matrix,
        methods,
        features: feature_list,
        ref by_query,
        descriptors,
        params,
    } = *inputs;
    matrix.enter_phase(AccessPhase::Training { fold });
    let pools = train_pools(matrix, pair, fold, methods, descriptors, params)?;

    // configuration chosen per test query, for non-oracle methods
    let mut assigned: Vec<(Method, Vec<ConfigurationId>)> = Vec::new();
    for &m in methods.iter().filter(|m| !m.is_oracle()) {
        let pool = match m {
            Method::BestTrained => {
                assigned.push((m, vec![pools.best.clone(); pair.test.len()]));
                continue;
            }
            Method::ERiskCosine => &pools.risk[&Objective::Effectiveness],
            Method::NRiskCosine => &pools.risk[&Objective::QueryCount],
            Method::RandomKCosine => pools.random.as_ref().expect("random pool trained"),
            Method::SqeCosine => pools.sqe.as_ref().expect("sqe pool trained"),
            _ => unreachable!("oracles filtered"),
        };
        let vectors = feature_list.ok_or_else(|| contract!("{m} needs query features"))?;
        let model = TrainedModel::train(
            matrix,
            &pair.train,
            pool,
            vectors,
            &TrainOptions {
                zscore: params.zscore,
                ..TrainOptions::default()
            },
        )?;
        let by_query = by_query.as_ref().expect("features indexed with list");
        let configs = pair
            .test
            .iter()
            .map(|q| {
                let v = by_query
                    .get(q)
                    .ok_or_else(|| contract!("no features for test query {q}"))?;
                Ok(model.best_match(v)?.config_id)
            })
            .collect::<Result<Vec<_>>>()?;
        assigned.push((m, configs));
    }

    matrix.enter_phase(AccessPhase::Scoring { fold });
    let mut out: FoldScores = Vec::with_capacity(methods.len());
    for (m, configs) in assigned {
        let scores = pair
            .test
            .iter()
            .zip(&configs)
            .map(|(q, c)| Ok((q.clone(), matrix.score(c.as_str(), q.as_str())?)))
            .collect::<Result<Vec<_>>>()?;
        out.push((m, scores));
    }
    for &m in methods.iter().filter(|m| m.is_oracle()) {
        let set: &[ConfigurationId] = match m {
            Method::Oracle => matrix.configs(),
            Method::OracleK => &pools.risk[&params.objective],
            Method::OracleRandomK => pools.random.as_ref().expect("random pool trained"),
            _ => unreachable!(),
        };
        let o = oracle(matrix, set, &pair.test)?;
        out.push((m, o.per_query.into_iter().map(|(q, _, s)| (q, s)).collect()));
    }
    matrix.enter_phase(AccessPhase::Idle);
    Ok(out)
}

/// Runs every method on every fold of `plan` and summarizes the test scores.
///
/// Training (best-trained choice, pool selection, index construction) reads
/// only training-query cells; test cells are read afterwards for scoring.
pub fn run_experiment<M: ScoreSource + ?Sized>(
    matrix: &M,
    features: Option<&[QueryFeatureVector]>,
    descriptors: Option<&[ConfigurationDescriptor]>,
    methods: &[Method],
    plan: &FoldPlan,
    params: &ExperimentParams,
) -> Result<ExperimentReport> {
    let methods: Vec<Method> = methods.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if methods.is_empty() {
        return Err(contract!("no methods requested"));
    }
    if let Some(m) = methods.iter().find(|m| m.needs_features()) {
        if features.is_none() {
            return Err(contract!("method {m} needs query features"));
        }
    }
    if params.k == 0 || params.k > matrix.configs().len() {
        return Err(contract!(
            "k = {} must be between 1 and the number of configurations ({})",
            params.k,
            matrix.configs().len()
        ));
    }
    let inputs = Inputs {
        matrix,
        methods: &methods,
        features,
        by_query: features.map(|fs| fs.iter().map(|v| (&v.query_id, v)).collect()),
        descriptors,
        params,
    };

    let folds: Vec<FoldScores> = plan
        .pairs
        .par_iter()
        .enumerate()
        .map(|(i, pair)| run_fold(&inputs, i, pair))
        .collect::<Result<_>>()?;

    let first_draw: Vec<usize> = plan.first_split().map(|(i, _)| i).collect();
    let mut summaries = Vec::with_capacity(methods.len());
    for (mi, &m) in methods.iter().enumerate() {
        let mut measurements = Vec::with_capacity(folds.len());
        let mut per_query: BTreeMap<QueryId, Vec<f64>> = BTreeMap::new();
        for fold in &folds {
            let (fm, scores) = &fold[mi];
            debug_assert_eq!(*fm, m);
            let values: Vec<f64> = scores.iter().map(|(_, s)| *s).collect();
            measurements.push(mean(&values));
            for (q, s) in scores {
                per_query.entry(q.clone()).or_default().push(*s);
            }
        }
        let first: Vec<f64> = first_draw.iter().map(|&i| measurements[i]).collect();
        summaries.push(MethodSummary {
            method: m,
            mean: mean(&measurements),
            sd: sample_sd(&measurements),
            first_split_mean: mean(&first),
            measurements,
            per_query,
        });
    }
    let (significance, counts) = compare(&summaries, params)?;
    Ok(ExperimentReport {
        metric: matrix.metric_name().to_string(),
        k: params.k,
        objective: params.objective,
        beta: params.beta,
        seed: plan.seed,
        draws: plan.draws,
        folds: plan.pairs.len(),
        methods: summaries,
        significance,
        counts,
    })
}

fn compare(summaries: &[MethodSummary], params: &ExperimentParams) -> Result<(Vec<Significance>, Vec<QueryCounts>)> {
    let find = |m: Method| summaries.iter().find(|s| s.method == m);
    let paired = |a: &MethodSummary, b: &MethodSummary| -> (Vec<f64>, Vec<f64>) {
        let am = a.per_query_means();
        let bm = b.per_query_means();
        am.iter().filter_map(|(q, x)| bm.get(q).map(|y| (*x, *y))).unzip()
    };

    let mut significance = Vec::new();
    let mut refs: Vec<Method> = params.references.clone();
    refs.sort();
    refs.dedup();
    for r in refs {
        let Some(rs) = find(r) else { continue };
        let others: Vec<&MethodSummary> = summaries.iter().filter(|s| s.method != r).collect();
        for s in &others {
            let (a, b) = paired(s, rs);
            if a.len() < 2 {
                continue;
            }
            let t = paired_t_test(&a, &b)?;
            let pb = bonferroni(t.p, others.len());
            significance.push(Significance {
                method: s.method,
                reference: r,
                t: t.t,
                p: t.p,
                p_bonferroni: pb,
                significant: pb < params.alpha,
            });
        }
    }

    let mut counts = Vec::new();
    if let Some(rs) = find(params.count_reference) {
        for s in summaries.iter().filter(|s| s.method != rs.method) {
            let (a, b) = paired(s, rs);
            let improved = a.iter().zip(&b).filter(|(x, y)| x > y).count();
            let degraded = a.iter().zip(&b).filter(|(x, y)| x < y).count();
            counts.push(QueryCounts {
                method: s.method,
                reference: rs.method,
                improved,
                degraded,
                unchanged: a.len() - improved - degraded,
            });
        }
    }
    Ok((significance, counts))
}
