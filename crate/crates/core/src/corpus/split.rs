use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ParallelCorpus;
use crate::error::{Error, Result};

/// Sizes of the held-out splits and the seed used to draw them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_valid: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            n_valid: 1000,
            n_test: 2000,
            seed: 7,
        }
    }
}

/// Positions (into the input corpus) of each split, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPositions {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// Draw validation and test positions for a corpus of `n` pairs.
///
/// The draw is a partial Fisher-Yates shuffle driven by ChaCha8 seeded with
/// `spec.seed`: for `i` in `0..n_valid + n_test`, swap position `i` with a
/// uniform position in `i..n`. The first `n_valid` drawn positions form the
/// validation set, the next `n_test` the test set.
pub fn split_positions(n: usize, spec: &SplitSpec) -> Result<SplitPositions> {
    let held_out = spec.n_valid + spec.n_test;
    if n == 0 || held_out >= n {
        return Err(Error::InvalidArgument(format!(
            "split of {} valid + {} test does not fit a corpus of {n} pairs",
            spec.n_valid, spec.n_test
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in 0..held_out {
        let j = rng.random_range(i as u64..n as u64) as usize;
        perm.swap(i, j);
    }
    let mut valid = perm[..spec.n_valid].to_vec();
    let mut test = perm[spec.n_valid..held_out].to_vec();
    let mut train = perm[held_out..].to_vec();
    valid.sort_unstable();
    test.sort_unstable();
    train.sort_unstable();
    Ok(SplitPositions { train, valid, test })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: ParallelCorpus,
    pub valid: ParallelCorpus,
    pub test: ParallelCorpus,
}

impl Splits {
    pub fn manifest(&self, spec: &SplitSpec) -> SplitManifest {
        SplitManifest {
            seed: spec.seed,
            n_train: self.train.len(),
            n_valid: self.valid.len(),
            n_test: self.test.len(),
            train_ids: self.train.ids(),
            valid_ids: self.valid.ids(),
            test_ids: self.test.ids(),
        }
    }
}

/// Partition a corpus into train, validation and test sets.
pub fn make_splits(corpus: &ParallelCorpus, spec: &SplitSpec) -> Result<Splits> {
    let pos = split_positions(corpus.len(), spec)?;
    Ok(Splits {
        train: corpus.select(&pos.train),
        valid: corpus.select(&pos.valid),
        test: corpus.select(&pos.test),
    })
}

/// JSON record of a split: seed, sizes and sentence ids of each part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub train_ids: Vec<u64>,
    pub valid_ids: Vec<u64>,
    pub test_ids: Vec<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn toy(n: usize) -> ParallelCorpus {
        let lines: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        ParallelCorpus::from_lines("xx", "en", &lines, &lines).unwrap()
    }

    #[test]
    fn partition_sizes_and_disjointness() {
        let c = toy(500);
        let spec = SplitSpec {
            n_valid: 40,
            n_test: 60,
            seed: 3,
        };
        let s = make_splits(&c, &spec).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (400, 40, 60));
        let mut all = HashSet::new();
        for id in s.train.ids().into_iter().chain(s.valid.ids()).chain(s.test.ids()) {
            assert!(all.insert(id));
        }
        assert_eq!(all.len(), 500);
    }

    #[test]
    fn deterministic() {
        let c = toy(300);
        let spec = SplitSpec {
            n_valid: 10,
            n_test: 20,
            seed: 11,
        };
        assert_eq!(make_splits(&c, &spec).unwrap(), make_splits(&c, &spec).unwrap());
        let other = SplitSpec { seed: 12, ..spec };
        assert_ne!(
            make_splits(&c, &spec).unwrap().test.ids(),
            make_splits(&c, &other).unwrap().test.ids()
        );
    }

    #[test]
    fn zero_held_out_keeps_everything() {
        let c = toy(25);
        let s = make_splits(
            &c,
            &SplitSpec {
                n_valid: 0,
                n_test: 0,
                seed: 99,
            },
        )
        .unwrap();
        assert_eq!(s.train, c);
        assert!(s.valid.is_empty() && s.test.is_empty());
    }

    #[test]
    fn too_large() {
        let c = toy(30);
        assert!(make_splits(
            &c,
            &SplitSpec {
                n_valid: 10,
                n_test: 20,
                seed: 1
            }
        )
        .is_err());
        assert!(make_splits(
            &toy(0),
            &SplitSpec {
                n_valid: 0,
                n_test: 0,
                seed: 1
            }
        )
        .is_err());
    }

    #[test]
    fn manifest_json_roundtrip() {
        let c = toy(50);
        let spec = SplitSpec {
            n_valid: 5,
            n_test: 5,
            seed: 2,
        };
        let m = make_splits(&c, &spec).unwrap().manifest(&spec);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<SplitManifest>(&json).unwrap(), m);
    }
}
