use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use super::{Dataset, Sample};
use crate::seed;
use crate::{Error, Result};

/// One run's client dataset and target.
#[derive(Clone, Debug, PartialEq)]
pub struct RunDraw {
    /// t
    pub member: bool,
    pub training_set: Dataset,
    pub target: Sample,
}

/// Draws N distinct samples uniformly from `source`, then a target
/// uniformly from inside the draw (`member`) or from the rest of `source`.
pub fn sample_run(source: &Dataset, n: usize, member: bool, seed: u64) -> Result<RunDraw> {
    let available = source.len();
    if n == 0 || n >= available {
        return Err(Error::PoolTooSmall { requested: n, available });
    }
    let mut rng = seed::rng(seed);
    let picked = index::sample(&mut rng, available, n).into_vec();
    let samples = source.samples();
    let target = if member {
        picked[rng.gen_range(0..n)]
    } else {
        let mut inside = alloc::vec![false; available];
        for &i in &picked {
            inside[i] = true;
        }
        let rest: Vec<usize> = (0..available).filter(|&i| !inside[i]).collect();
        rest[rng.gen_range(0..rest.len())]
    };
    let training = picked.iter().map(|&i| samples[i].clone()).collect();
    Ok(RunDraw {
        member,
        training_set: source.with_samples(training),
        target: samples[target].clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dataset, Split};

    fn pool(n: usize) -> Dataset {
        synth_dataset(n, 3, &[1, 2, 2], 11).unwrap()
    }

    fn ids(d: &Dataset) -> Vec<usize> {
        d.samples().iter().map(|s| s.source_id).collect()
    }

    #[test]
    fn membership_holds_over_many_draws() {
        let src = pool(40);
        for seed in 0..1000u64 {
            let member = seed % 2 == 0;
            let draw = sample_run(&src, 8, member, seed).unwrap();
            let set = ids(&draw.training_set);
            assert_eq!(set.len(), 8);
            let mut sorted = set.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 8);
            assert_eq!(set.contains(&draw.target.source_id), member, "seed {seed}");
            assert_eq!(draw.training_set.split(), Split::Synthetic);
        }
    }

    #[test]
    fn same_seed_same_draw() {
        let src = pool(20);
        assert_eq!(sample_run(&src, 5, false, 9).unwrap(), sample_run(&src, 5, false, 9).unwrap());
        assert_ne!(ids(&sample_run(&src, 5, false, 9).unwrap().training_set), ids(&sample_run(&src, 5, false, 10).unwrap().training_set));
    }

    #[test]
    fn inclusion_frequency_is_one_half() {
        // N = 2 of 4 items: each item is included with probability 2/4.
        let src = pool(4);
        let mut counts = [0usize; 4];
        let draws = 10_000;
        for seed in 0..draws {
            for id in ids(&sample_run(&src, 2, true, seed as u64).unwrap().training_set) {
                counts[id] += 1;
            }
        }
        for c in counts {
            let f = c as f64 / draws as f64;
            assert!((f - 0.5).abs() <= 0.02, "{counts:?}");
        }
    }

    #[test]
    fn pool_must_exceed_n() {
        let src = pool(4);
        assert_eq!(sample_run(&src, 4, true, 0).unwrap_err(), Error::PoolTooSmall { requested: 4, available: 4 });
        assert!(sample_run(&src, 0, true, 0).is_err());
    }
}
