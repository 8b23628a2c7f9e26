#![allow(dead_code, clippy::needless_range_loop)]

pub mod cli;
pub mod tracing;

use proptest::prelude::*;
use sqp_core::data::{ConfigurationId, EffectivenessMatrix, QueryId, Qrels, RunList};

pub fn cid(s: &str) -> ConfigurationId {
    ConfigurationId::new(s).unwrap()
}

pub fn qid(s: &str) -> QueryId {
    QueryId::new(s).unwrap()
}

pub fn config_ids(n: usize) -> Vec<ConfigurationId> {
    (0..n).map(|i| cid(&format!("c{i}"))).collect()
}

pub fn query_ids(n: usize) -> Vec<QueryId> {
    (0..n).map(|i| qid(&format!("q{i}"))).collect()
}

pub fn matrix(rows: Vec<Vec<f64>>) -> EffectivenessMatrix {
    let nq = rows[0].len();
    EffectivenessMatrix::from_rows("test", config_ids(rows.len()), query_ids(nq), rows).unwrap()
}

/// Scores on a coarse grid so that ties are frequent.
pub fn grid_rows(max_c: usize, max_q: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_c, 1..=max_q).prop_flat_map(|(nc, nq)| {
        prop::collection::vec(prop::collection::vec((0u8..=10).prop_map(|v| v as f64 / 10.0), nq), nc)
    })
}

/// Scores anywhere in [0, 1].
pub fn real_rows(max_c: usize, max_q: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_c, 1..=max_q).prop_flat_map(|(nc, nq)| {
        prop::collection::vec(prop::collection::vec(0.0f64..=1.0, nq), nc)
    })
}

/// Definition-level greedy selection on plain rows, written without any of
/// the library's helpers. Returns `(chosen index, risk, reward, gain)` per step.
pub fn brute_greedy(
    rows: &[Vec<f64>],
    baseline: usize,
    k: usize,
    query_count: bool,
    beta: f64,
) -> Vec<(usize, f64, f64, f64)> {
    let nq = rows[0].len();
    let mut chosen: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for _ in 0..k {
        let reference: Vec<usize> = if chosen.is_empty() { vec![baseline] } else { chosen.clone() };
        let mut best: Option<(usize, f64, f64, f64)> = None;
        // candidate ids c0..cN sort the same as their indices while N <= 10
        for c in 0..rows.len() {
            if chosen.contains(&c) {
                continue;
            }
            let mut risk = 0.0;
            let mut reward = 0.0;
            for q in 0..nq {
                let mut env = f64::NEG_INFINITY;
                for &s in &reference {
                    if rows[s][q] > env {
                        env = rows[s][q];
                    }
                }
                let p = rows[c][q];
                if query_count {
                    risk += if p < env { 1.0 } else { 0.0 };
                    reward += if p > env { 1.0 } else { 0.0 };
                } else {
                    risk += if env > p { env - p } else { 0.0 };
                    reward += if p > env { p - env } else { 0.0 };
                }
            }
            risk /= nq as f64;
            reward /= nq as f64;
            let gain = reward - (1.0 + beta) * risk;
            if best.is_none_or(|b| gain > b.3) {
                best = Some((c, risk, reward, gain));
            }
        }
        let b = best.unwrap();
        chosen.push(b.0);
        out.push(b);
    }
    out
}

/// Builds a run over `docs` in the given order with descending scores.
pub fn ranked(q: &str, docs: &[String]) -> RunList {
    RunList::from_ranked(qid(q), "t", docs.to_vec()).unwrap()
}

pub fn qrels_from(q: &str, judged: &[(String, i32)]) -> Qrels {
    let mut qr = Qrels::new();
    for (d, g) in judged {
        qr.insert(qid(q), d.clone(), *g).unwrap();
    }
    qr
}

/// Term-by-term metric definitions over `grades[i]` = judgment of the doc at
/// rank i+1 (`None` = unjudged) and the full judged grade list of the query.
pub mod brute {
    pub fn rel(g: Option<i32>) -> bool {
        matches!(g, Some(g) if g > 0)
    }

    pub fn precision(grades: &[Option<i32>], k: usize) -> f64 {
        let mut hits = 0.0;
        for i in 0..k {
            if i < grades.len() && rel(grades[i]) {
                hits += 1.0;
            }
        }
        hits / k as f64
    }

    pub fn ap(grades: &[Option<i32>], all: &[i32]) -> f64 {
        let r = all.iter().filter(|&&g| g > 0).count();
        if r == 0 {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..grades.len() {
            if rel(grades[i]) {
                // precision at rank i+1
                let mut hits = 0.0;
                for j in 0..=i {
                    if rel(grades[j]) {
                        hits += 1.0;
                    }
                }
                total += hits / (i + 1) as f64;
            }
        }
        total / r as f64
    }

    pub fn ndcg(grades: &[Option<i32>], all: &[i32], k: usize) -> f64 {
        let g = |x: i32| if x > 0 { 2f64.powi(x) - 1.0 } else { 0.0 };
        let mut dcg = 0.0;
        for i in 0..k.min(grades.len()) {
            dcg += g(grades[i].unwrap_or(0)) / ((i + 2) as f64).log2();
        }
        let mut ideal: Vec<i32> = all.to_vec();
        ideal.sort_by(|a, b| b.cmp(a));
        let mut idcg = 0.0;
        for i in 0..k.min(ideal.len()) {
            idcg += g(ideal[i]) / ((i + 2) as f64).log2();
        }
        if idcg == 0.0 {
            0.0
        } else {
            dcg / idcg
        }
    }

    pub fn rr(grades: &[Option<i32>]) -> f64 {
        for i in 0..grades.len() {
            if rel(grades[i]) {
                return 1.0 / (i + 1) as f64;
            }
        }
        0.0
    }

    /// `(base, residual)` with evaluation depth `d`.
    pub fn rbp(grades: &[Option<i32>], p: f64, d: usize) -> (f64, f64) {
        let mut base = 0.0;
        let mut unknown = 0.0;
        for i in 0..d {
            let w = (1.0 - p) * p.powi(i as i32);
            match grades.get(i) {
                Some(Some(g)) if *g > 0 => base += w,
                Some(Some(_)) => {}
                _ => unknown += w,
            }
        }
        (base, unknown + p.powi(d as i32))
    }
}

/// A random query: up to 5 retrieved docs drawn from a 7-doc universe with
/// optional judgments, plus judged docs that were not retrieved.
#[derive(Clone, Debug)]
pub struct MetricCase {
    pub retrieved: Vec<String>,
    /// Grade per universe doc (`None` = unjudged).
    pub judgments: Vec<Option<i32>>,
}

impl MetricCase {
    pub fn grades(&self) -> Vec<Option<i32>> {
        self.retrieved
            .iter()
            .map(|d| self.judgments[d[1..].parse::<usize>().unwrap()])
            .collect()
    }

    pub fn all_judged(&self) -> Vec<i32> {
        self.judgments.iter().flatten().copied().collect()
    }

    pub fn qrels(&self) -> Qrels {
        let judged: Vec<(String, i32)> = self
            .judgments
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.map(|g| (format!("d{i}"), g)))
            .collect();
        qrels_from("q", &judged)
    }

    pub fn run(&self) -> RunList {
        ranked("q", &self.retrieved)
    }
}

pub fn metric_case() -> impl Strategy<Value = MetricCase> {
    let judgments = prop::collection::vec(prop::option::weighted(0.8, 0i32..=3), 7);
    let retrieved = Just((0..7).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_flat_map(|perm| (0usize..=5).prop_map(move |n| perm[..n].to_vec()));
    (retrieved, judgments).prop_map(|(r, j)| MetricCase {
        retrieved: r.into_iter().map(|i| format!("d{i}")).collect(),
        judgments: j,
    })
}
