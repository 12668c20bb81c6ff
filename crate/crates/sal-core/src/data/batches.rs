//! Mini-batch index plans with per-epoch reshuffling.

use rand::seq::SliceRandom;

use crate::rng;
use crate::{Error, Result};

/// Shuffled batch index lists for one epoch. The permutation is drawn from
/// the `(shuffle_seed, epoch)` stream, so different epochs shuffle
/// differently while identical runs reproduce exactly. The last batch may be
/// short.
pub fn batch_plan(m: usize, batch_size: usize, shuffle_seed: u64, epoch: u64) -> Result<Vec<Vec<usize>>> {
    if m == 0 {
        return Err(Error::Data("cannot batch an empty dataset".into()));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch size must be >= 1".into()));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng::stream_indexed(shuffle_seed, "epoch-shuffle", epoch));
    Ok(order.chunks(batch_size).map(|c| c.to_vec()).collect())
}
