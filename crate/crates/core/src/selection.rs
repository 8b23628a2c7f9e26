//! Risk-sensitive greedy construction of a small configuration pool.
//!
//! At each step every remaining candidate is compared with the per-query
//! envelope (best score) of the configurations selected so far. Risk is what
//! the meta-system loses on queries where the candidate is worse than the
//! envelope, reward is what it gains where the candidate is better, and the
//! candidate maximizing `reward - (1 + beta) * risk` is added. Two objectives
//! are supported:
//!
//! * [`Objective::Effectiveness`]: risk and reward are mean score differences.
//! * [`Objective::QueryCount`]: risk and reward are the fractions of queries
//!   strictly degraded or improved. Ties count for neither.
//!
//! The first step uses `{baseline}` as the reference set. Argmax ties are
//! broken by the lexicographically smallest configuration id.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ConfigurationId, QueryId, ScoreSource};
use crate::error::{contract, Error, Result};

/// Candidate pools at least this large are scored in parallel.
const PARALLEL_POOL: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    #[serde(rename = "E")]
    Effectiveness,
    #[serde(rename = "N")]
    QueryCount,
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" | "E" => Ok(Objective::Effectiveness),
            "n" | "N" => Ok(Objective::QueryCount),
            _ => Err(Error::Input(format!("objective must be e or n, got {s:?}"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Effectiveness => "E",
            Objective::QueryCount => "N",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiskParams {
    pub objective: Objective,
    /// Extra weight on risk; 0 weighs risk and reward equally.
    pub beta: f64,
    pub k: usize,
    pub baseline: ConfigurationId,
}

impl RiskParams {
    pub fn new(objective: Objective, beta: f64, k: usize, baseline: ConfigurationId) -> Self {
        Self {
            objective,
            beta,
            k,
            baseline,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainBreakdown {
    pub config_id: ConfigurationId,
    pub risk: f64,
    pub reward: f64,
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub config_id: ConfigurationId,
    pub risk: f64,
    pub reward: f64,
    pub gain: f64,
    /// Mean over training queries of the envelope including this step.
    pub envelope_mean_after: f64,
}

/// Ordered output of the greedy selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedPool {
    pub objective: Objective,
    pub beta: f64,
    pub baseline: ConfigurationId,
    #[serde(default)]
    pub metric: String,
    pub steps: Vec<SelectionStep>,
}

impl SelectedPool {
    pub fn config_ids(&self) -> Vec<ConfigurationId> {
        self.steps.iter().map(|s| s.config_id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks distinct ids and a non-decreasing envelope mean.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.steps {
            if !seen.insert(&s.config_id) {
                return Err(Error::Input(format!("pool lists {} twice", s.config_id)));
            }
        }
        if self
            .steps
            .windows(2)
            .any(|w| w[1].envelope_mean_after < w[0].envelope_mean_after)
        {
            return Err(Error::Input("pool envelope mean decreases".into()));
        }
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(Error::Input(format!("negative beta {}", self.beta)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let pool: Self = serde_json::from_str(text)?;
        pool.validate()?;
        Ok(pool)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Risk, reward and gain over a fixed training query set.
pub struct RiskEvaluator<'a, M: ScoreSource + ?Sized> {
    matrix: &'a M,
    queries: Vec<usize>,
}

impl<'a, M: ScoreSource + ?Sized> RiskEvaluator<'a, M> {
    pub fn new(matrix: &'a M, queries: &[QueryId]) -> Result<Self> {
        if queries.is_empty() {
            return Err(contract!("no training queries"));
        }
        let queries = queries
            .iter()
            .map(|q| matrix.resolve_query(q.as_str()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { matrix, queries })
    }

    fn positions(&self, set: &[ConfigurationId]) -> Result<Vec<usize>> {
        if set.is_empty() {
            return Err(contract!("reference set is empty"));
        }
        set.iter()
            .map(|c| self.matrix.resolve_config(c.as_str()))
            .collect()
    }

    fn envelope_at(&self, set: &[usize]) -> Vec<f64> {
        self.queries
            .iter()
            .map(|&q| {
                set.iter()
                    .map(|&c| self.matrix.score_at(c, q))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    /// Best score on `query` over `set`.
    pub fn envelope(&self, set: &[ConfigurationId], query: &QueryId) -> Result<f64> {
        let set = self.positions(set)?;
        let q = self.matrix.resolve_query(query.as_str())?;
        Ok(set
            .iter()
            .map(|&c| self.matrix.score_at(c, q))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Mean envelope over the training queries.
    pub fn envelope_mean(&self, set: &[ConfigurationId]) -> Result<f64> {
        let env = self.envelope_at(&self.positions(set)?);
        Ok(env.iter().sum::<f64>() / env.len() as f64)
    }

    fn breakdown(&self, candidate: usize, envelope: &[f64], objective: Objective, beta: f64) -> GainBreakdown {
        let n = self.queries.len() as f64;
        let (mut risk, mut reward) = (0.0, 0.0);
        for (&q, &env) in self.queries.iter().zip(envelope) {
            let p = self.matrix.score_at(candidate, q);
            match objective {
                Objective::Effectiveness => {
                    risk += (env - p).max(0.0);
                    reward += (p - env).max(0.0);
                }
                Objective::QueryCount => {
                    if env - p > 0.0 {
                        risk += 1.0;
                    }
                    if p - env > 0.0 {
                        reward += 1.0;
                    }
                }
            }
        }
        let (risk, reward) = (risk / n, reward / n);
        GainBreakdown {
            config_id: self.matrix.configs()[candidate].clone(),
            risk,
            reward,
            gain: reward - (1.0 + beta) * risk,
        }
    }

    fn gain_of(
        &self,
        candidate: &ConfigurationId,
        set: &[ConfigurationId],
        objective: Objective,
        beta: f64,
    ) -> Result<GainBreakdown> {
        let env = self.envelope_at(&self.positions(set)?);
        let c = self.matrix.resolve_config(candidate.as_str())?;
        Ok(self.breakdown(c, &env, objective, beta))
    }

    pub fn e_risk(&self, candidate: &ConfigurationId, set: &[ConfigurationId]) -> Result<f64> {
        Ok(self.gain_of(candidate, set, Objective::Effectiveness, 0.0)?.risk)
    }

    pub fn e_reward(&self, candidate: &ConfigurationId, set: &[ConfigurationId]) -> Result<f64> {
        Ok(self.gain_of(candidate, set, Objective::Effectiveness, 0.0)?.reward)
    }

    pub fn n_risk(&self, candidate: &ConfigurationId, set: &[ConfigurationId]) -> Result<f64> {
        Ok(self.gain_of(candidate, set, Objective::QueryCount, 0.0)?.risk)
    }

    pub fn n_reward(&self, candidate: &ConfigurationId, set: &[ConfigurationId]) -> Result<f64> {
        Ok(self.gain_of(candidate, set, Objective::QueryCount, 0.0)?.reward)
    }

    /// `reward - (1 + beta) * risk` for the chosen objective.
    pub fn gain(
        &self,
        candidate: &ConfigurationId,
        set: &[ConfigurationId],
        objective: Objective,
        beta: f64,
    ) -> Result<GainBreakdown> {
        self.gain_of(candidate, set, objective, beta)
    }

    /// The pool member with the highest gain against `set`; ties go to the
    /// smallest id.
    pub fn best_candidate(
        &self,
        pool: &[ConfigurationId],
        set: &[ConfigurationId],
        objective: Objective,
        beta: f64,
    ) -> Result<GainBreakdown> {
        if pool.is_empty() {
            return Err(contract!("candidate pool is empty"));
        }
        let env = self.envelope_at(&self.positions(set)?);
        let pool = pool
            .iter()
            .map(|c| self.matrix.resolve_config(c.as_str()))
            .collect::<Result<Vec<_>>>()?;
        let score = |&c: &usize| self.breakdown(c, &env, objective, beta);
        let best = if pool.len() >= PARALLEL_POOL {
            pool.par_iter().map(score).reduce_with(better)
        } else {
            pool.iter().map(score).reduce(better)
        };
        Ok(best.expect("non-empty pool"))
    }
}

// Associative and commutative, so any reduction order gives the same winner.
fn better(a: GainBreakdown, b: GainBreakdown) -> GainBreakdown {
    if b.gain > a.gain || (b.gain == a.gain && b.config_id < a.config_id) {
        b
    } else {
        a
    }
}

/// Greedily selects `params.k` configurations from `pool`.
pub fn select_configurations<M: ScoreSource + ?Sized>(
    matrix: &M,
    queries: &[QueryId],
    pool: &[ConfigurationId],
    params: &RiskParams,
) -> Result<SelectedPool> {
    if params.k == 0 {
        return Err(contract!("k must be at least 1"));
    }
    if params.k > pool.len() {
        return Err(contract!(
            "k = {} exceeds the pool size {}",
            params.k,
            pool.len()
        ));
    }
    if params.beta.is_nan() || params.beta < 0.0 {
        return Err(contract!("beta must be non-negative, got {}", params.beta));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = pool.iter().find(|c| !seen.insert(*c)) {
        return Err(contract!("configuration {dup} appears twice in the pool"));
    }
    matrix
        .config_position(params.baseline.as_str())
        .ok_or_else(|| contract!("baseline {} is not in the matrix", params.baseline))?;

    let eval = RiskEvaluator::new(matrix, queries)?;
    let mut remaining: Vec<ConfigurationId> = pool.to_vec();
    let mut selected: Vec<ConfigurationId> = Vec::with_capacity(params.k);
    let mut steps = Vec::with_capacity(params.k);
    let baseline = [params.baseline.clone()];

    while selected.len() < params.k {
        let reference: &[ConfigurationId] = if selected.is_empty() { &baseline } else { &selected };
        let best = eval.best_candidate(&remaining, reference, params.objective, params.beta)?;
        remaining.retain(|c| *c != best.config_id);
        selected.push(best.config_id.clone());
        steps.push(SelectionStep {
            envelope_mean_after: eval.envelope_mean(&selected)?,
            config_id: best.config_id,
            risk: best.risk,
            reward: best.reward,
            gain: best.gain,
        });
    }
    Ok(SelectedPool {
        objective: params.objective,
        beta: params.beta,
        baseline: params.baseline.clone(),
        metric: matrix.metric_name().to_string(),
        steps,
    })
}
