use std::collections::{HashMap, HashSet};
use std::sync::Mutex;
use std::thread::ThreadId;

use sqp_core::data::{AccessPhase, ConfigurationId, EffectivenessMatrix, QueryId, ScoreSource};
use sqp_core::harness::FoldPlan;

/// Records every cell read together with the phase its thread announced.
pub struct Tracing<'a> {
    pub inner: &'a EffectivenessMatrix,
    phases: Mutex<HashMap<ThreadId, AccessPhase>>,
    pub reads: Mutex<Vec<(AccessPhase, usize)>>,
}

impl<'a> Tracing<'a> {
    pub fn new(inner: &'a EffectivenessMatrix) -> Self {
        Self {
            inner,
            phases: Mutex::new(HashMap::new()),
            reads: Mutex::new(Vec::new()),
        }
    }

    fn phase(&self) -> AccessPhase {
        let id = std::thread::current().id();
        *self.phases.lock().unwrap().get(&id).unwrap_or(&AccessPhase::Idle)
    }
}

impl ScoreSource for Tracing<'_> {
    fn configs(&self) -> &[ConfigurationId] {
        self.inner.configs()
    }
    fn queries(&self) -> &[QueryId] {
        self.inner.queries()
    }
    fn config_position(&self, id: &str) -> Option<usize> {
        self.inner.config_position(id)
    }
    fn query_position(&self, id: &str) -> Option<usize> {
        self.inner.query_position(id)
    }
    fn score_at(&self, config: usize, query: usize) -> f64 {
        self.reads.lock().unwrap().push((self.phase(), query));
        self.inner.score_at(config, query)
    }
    fn metric_name(&self) -> &str {
        self.inner.metric_name()
    }
    fn enter_phase(&self, phase: AccessPhase) {
        self.phases.lock().unwrap().insert(std::thread::current().id(), phase);
    }
}

/// Returns one message per read that touched a cell its phase must not see.
pub fn violations(trace: &Tracing, plan: &FoldPlan) -> Vec<String> {
    let pos = |qs: &[QueryId]| -> HashSet<usize> {
        qs.iter().map(|q| trace.inner.query_position(q.as_str()).unwrap()).collect()
    };
    let train: Vec<HashSet<usize>> = plan.pairs.iter().map(|p| pos(&p.train)).collect();
    let test: Vec<HashSet<usize>> = plan.pairs.iter().map(|p| pos(&p.test)).collect();
    trace
        .reads
        .lock()
        .unwrap()
        .iter()
        .filter_map(|&(phase, q)| match phase {
            AccessPhase::Training { fold } if !train[fold].contains(&q) => {
                Some(format!("fold {fold}: training read test query #{q}"))
            }
            AccessPhase::Scoring { fold } if !test[fold].contains(&q) => {
                Some(format!("fold {fold}: scoring read training query #{q}"))
            }
            AccessPhase::Idle => Some(format!("read of query #{q} outside any phase")),
            _ => None,
        })
        .collect()
}

