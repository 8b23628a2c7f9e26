use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::QueryId;
use crate::error::{contract, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldPair {
    pub draw: usize,
    /// 0: first half trains; 1: second half trains.
    pub direction: usize,
    pub train: Vec<QueryId>,
    pub test: Vec<QueryId>,
}

/// Two-fold cross-validation repeated over several random draws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub draws: usize,
    pub pairs: Vec<FoldPair>,
}

impl FoldPlan {
    /// Pairs of the first draw.
    pub fn first_split(&self) -> impl Iterator<Item = (usize, &FoldPair)> {
        self.pairs.iter().enumerate().filter(|(_, p)| p.draw == 0)
    }
}

/// Shuffles `queries` once per draw and splits them into halves; the first
/// half gets the extra query when the count is odd.
///
/// Draw `i` shuffles with a ChaCha8 generator seeded by `seed` on stream `i`
/// (Fisher-Yates via `SliceRandom::shuffle`), so a plan depends only on the
/// query order, the number of draws and the seed.
pub fn split_folds(queries: &[QueryId], draws: usize, seed: u64) -> Result<FoldPlan> {
    if queries.len() < 2 {
        return Err(contract!("cross-validation needs at least 2 queries, got {}", queries.len()));
    }
    if draws == 0 {
        return Err(contract!("at least one draw is required"));
    }
    let mut pairs = Vec::with_capacity(2 * draws);
    for draw in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(draw as u64);
        let mut shuffled = queries.to_vec();
        shuffled.shuffle(&mut rng);
        let half = shuffled.len().div_ceil(2);
        let (a, b) = shuffled.split_at(half);
        pairs.push(FoldPair {
            draw,
            direction: 0,
            train: a.to_vec(),
            test: b.to_vec(),
        });
        pairs.push(FoldPair {
            draw,
            direction: 1,
            train: b.to_vec(),
            test: a.to_vec(),
        });
    }
    Ok(FoldPlan { seed, draws, pairs })
}
