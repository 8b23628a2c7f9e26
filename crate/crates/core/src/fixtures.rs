//! Small worked example used by tests and documentation.

use crate::data::{ConfigurationId, EffectivenessMatrix, QueryId};

/// Three configurations over seven queries: `c2` has the best mean, `c1` is
/// far better on `q4`, and `c3` is slightly better on `q3`.
pub fn toy_matrix() -> EffectivenessMatrix {
    let configs = ["c1", "c2", "c3"].map(|s| ConfigurationId::new(s).expect("valid id"));
    let queries = (1..=7).map(|i| QueryId::new(format!("q{i}")).expect("valid id"));
    EffectivenessMatrix::from_rows(
        "toy",
        configs.to_vec(),
        queries.collect(),
        vec![
            vec![0.4, 0.6, 0.4, 0.9, 0.6, 0.6, 0.5],
            vec![0.6, 0.7, 0.5, 0.2, 0.8, 0.7, 0.6],
            vec![0.4, 0.5, 0.6, 0.2, 0.5, 0.6, 0.5],
        ],
    )
    .expect("toy matrix is valid")
}
