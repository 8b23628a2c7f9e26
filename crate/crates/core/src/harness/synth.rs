//! Synthetic effectiveness landscapes with planted query clusters.
//!
//! Every cluster owns `configs_per_cluster` configurations:
//!
//! * `spec-<j>` scores `base + gap` on cluster `j` and `base` elsewhere;
//! * `part-<j>-<m>` scores `base + gap/2` on cluster `j` and `base` elsewhere;
//! * `gen`, which takes the last slot of the last cluster (or is added when
//!   clusters have a single slot), scores `base + gap/2` everywhere.
//!
//! Every score gets Gaussian noise (sd `noise_sd`) and is clipped to `[0, 1]`.
//! Each query has one pseudo-document `d0` whose features `f<i>` are the
//! one-hot centroid of its cluster plus Gaussian jitter with the same sd.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{ConfigurationDescriptor, ConfigurationId, EffectivenessMatrix, FeatureRecord, QueryId};
use crate::error::{contract, Result};

const RETRIEVAL_MODELS: [&str; 21] = [
    "BB2", "BM25", "DFRee", "DirichletLM", "HiemstraLM", "InB2", "InL2", "JsKLs", "PL2", "DFI0", "XSqrAM",
    "DLH13", "DLH", "DPH", "IFB2", "TFIDF", "InexpB2", "DFRBM25", "LGD", "LemurTFIDF", "InexpC2",
];
const QE_MODELS: [&str; 6] = ["KL", "Bo1", "Bo2", "KLCorrect", "Information", "KLComplete"];
const QE_DOCS: [u32; 6] = [2, 5, 10, 20, 50, 100];
const QE_TERMS: [u32; 5] = [2, 5, 10, 15, 20];
const QE_MIN_DOCS: [u32; 5] = [2, 5, 10, 20, 50];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_clusters: usize,
    pub configs_per_cluster: usize,
    pub queries_per_cluster: usize,
    pub base_effectiveness: f64,
    pub planted_gap: f64,
    pub noise_sd: f64,
    /// At least `n_clusters`; extra dimensions carry jitter only.
    pub feature_dim: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_clusters: 4,
            configs_per_cluster: 3,
            queries_per_cluster: 10,
            base_effectiveness: 0.4,
            planted_gap: 0.3,
            noise_sd: 0.02,
            feature_dim: 4,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 || self.configs_per_cluster == 0 || self.queries_per_cluster == 0 {
            return Err(contract!("cluster, configuration and query counts must be at least 1"));
        }
        if self.feature_dim < self.n_clusters {
            return Err(contract!(
                "feature_dim {} is smaller than n_clusters {}",
                self.feature_dim,
                self.n_clusters
            ));
        }
        let (b, g, s) = (self.base_effectiveness, self.planted_gap, self.noise_sd);
        if !(b >= 0.0 && g >= 0.0 && s >= 0.0) {
            return Err(contract!("base, gap and noise must be non-negative"));
        }
        if b + g + 3.0 * s > 1.0 {
            return Err(contract!("base + gap + 3*noise = {} exceeds 1", b + g + 3.0 * s));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthRole {
    Specialist { cluster: usize },
    Partial { cluster: usize },
    Generalist,
}

#[derive(Clone, Debug)]
pub struct SynthData {
    pub matrix: EffectivenessMatrix,
    pub features: Vec<FeatureRecord>,
    pub descriptors: Vec<ConfigurationDescriptor>,
    pub roles: Vec<(ConfigurationId, SynthRole)>,
    /// Planted cluster of each query, in matrix order.
    pub clusters: Vec<(QueryId, usize)>,
}

fn id<T: std::str::FromStr>(s: String) -> T
where
    T::Err: std::fmt::Debug,
{
    s.parse().expect("generated ids are valid tokens")
}

fn roles(spec: &SynthSpec) -> Vec<(ConfigurationId, SynthRole)> {
    let mut out = Vec::new();
    for j in 0..spec.n_clusters {
        for m in 0..spec.configs_per_cluster {
            let last_slot = j + 1 == spec.n_clusters && m + 1 == spec.configs_per_cluster;
            let role = match m {
                0 => SynthRole::Specialist { cluster: j },
                _ if last_slot => SynthRole::Generalist,
                _ => SynthRole::Partial { cluster: j },
            };
            let name = match role {
                SynthRole::Specialist { .. } => format!("spec-{j}"),
                SynthRole::Partial { .. } => format!("part-{j}-{m}"),
                SynthRole::Generalist => "gen".to_string(),
            };
            out.push((id(name), role));
        }
    }
    if spec.configs_per_cluster == 1 {
        out.push((id("gen".to_string()), SynthRole::Generalist));
    }
    out
}

fn descriptor(i: usize, config_id: ConfigurationId) -> ConfigurationDescriptor {
    let retrieval_model = RETRIEVAL_MODELS[(i / 2) % RETRIEVAL_MODELS.len()].to_string();
    if i.is_multiple_of(2) {
        ConfigurationDescriptor {
            config_id,
            retrieval_model,
            qe_model: "No".into(),
            qe_docs: None,
            qe_terms: None,
            qe_min_docs: None,
        }
    } else {
        ConfigurationDescriptor {
            config_id,
            retrieval_model,
            qe_model: QE_MODELS[i % QE_MODELS.len()].into(),
            qe_docs: Some(QE_DOCS[i % QE_DOCS.len()]),
            qe_terms: Some(QE_TERMS[i % QE_TERMS.len()]),
            qe_min_docs: Some(QE_MIN_DOCS[i % QE_MIN_DOCS.len()]),
        }
    }
}

pub fn synth_generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let jitter = |rng: &mut ChaCha8Rng| -> f64 {
        if spec.noise_sd == 0.0 {
            0.0
        } else {
            Normal::new(0.0, spec.noise_sd).expect("finite sd").sample(rng)
        }
    };

    let clusters: Vec<(QueryId, usize)> = (0..spec.n_clusters)
        .flat_map(|j| (0..spec.queries_per_cluster).map(move |i| (id(format!("q{j}-{i:03}")), j)))
        .collect();
    let roles = roles(spec);
    let (b, g) = (spec.base_effectiveness, spec.planted_gap);

    let mut rows = Vec::with_capacity(roles.len());
    for (_, role) in &roles {
        let row = clusters
            .iter()
            .map(|&(_, cluster)| {
                let target = match *role {
                    SynthRole::Specialist { cluster: c } if c == cluster => b + g,
                    SynthRole::Partial { cluster: c } if c == cluster => b + g / 2.0,
                    SynthRole::Generalist => b + g / 2.0,
                    _ => b,
                };
                (target + jitter(&mut rng)).clamp(0.0, 1.0)
            })
            .collect::<Vec<f64>>();
        rows.push(row);
    }
    let matrix = EffectivenessMatrix::from_rows(
        "synthetic",
        roles.iter().map(|(c, _)| c.clone()).collect(),
        clusters.iter().map(|(q, _)| q.clone()).collect(),
        rows,
    )?;

    let mut features = Vec::with_capacity(clusters.len() * spec.feature_dim);
    for (q, cluster) in &clusters {
        for f in 0..spec.feature_dim {
            let centroid = if f == *cluster { 1.0 } else { 0.0 };
            features.push(FeatureRecord {
                query_id: q.clone(),
                doc_id: "d0".into(),
                feature_name: format!("f{f:02}"),
                value: centroid + jitter(&mut rng),
            });
        }
    }
    let descriptors = roles
        .iter()
        .enumerate()
        .map(|(i, (c, _))| descriptor(i, c.clone()))
        .collect();
    Ok(SynthData {
        matrix,
        features,
        descriptors,
        roles,
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{best_trained, oracle};
    use crate::data::ScoreSource;
    use crate::selection::{select_configurations, Objective, RiskParams};

    fn spec(noise: f64) -> SynthSpec {
        SynthSpec {
            noise_sd: noise,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn shape_and_determinism() {
        let d = synth_generate(&spec(0.02)).unwrap();
        assert_eq!(d.matrix.configs().len(), 12);
        assert_eq!(d.matrix.queries().len(), 40);
        assert_eq!(d.features.len(), 40 * 4);
        let again = synth_generate(&spec(0.02)).unwrap();
        assert_eq!(d.matrix, again.matrix);
        assert_eq!(d.features, again.features);
        for desc in &d.descriptors {
            desc.validate().unwrap();
        }
    }

    #[test]
    fn noiseless_closed_forms() {
        let s = spec(0.0);
        let d = synth_generate(&s).unwrap();
        let m = &d.matrix;
        let o = oracle(m, m.configs(), m.queries()).unwrap();
        assert!((o.mean - (s.base_effectiveness + s.planted_gap)).abs() < 1e-12);
        let best = best_trained(m, m.queries(), m.configs()).unwrap();
        assert_eq!(best.as_str(), "gen");
        let row = m.row(m.resolve_config("gen").unwrap());
        let gen_mean = row.iter().sum::<f64>() / row.len() as f64;
        assert!((gen_mean - (s.base_effectiveness + s.planted_gap / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_selects_specialist_first() {
        let s = SynthSpec {
            n_clusters: 1,
            feature_dim: 1,
            ..spec(0.0)
        };
        let d = synth_generate(&s).unwrap();
        let m = &d.matrix;
        let best = best_trained(m, m.queries(), m.configs()).unwrap();
        let pool = select_configurations(m, m.queries(), m.configs(), &RiskParams::new(Objective::Effectiveness, 0.0, 1, best))
            .unwrap();
        assert_eq!(pool.steps[0].config_id.as_str(), "spec-0");
    }

    #[test]
    fn invalid_specs() {
        assert!(synth_generate(&SynthSpec { planted_gap: 0.6, ..spec(0.02) }).is_err());
        assert!(synth_generate(&SynthSpec { n_clusters: 0, ..spec(0.02) }).is_err());
        assert!(synth_generate(&SynthSpec { feature_dim: 2, ..spec(0.02) }).is_err());
    }
}
