use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classify::{Rhythm, N_CLASSES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Folds {
    /// Test indices of each fold, ascending.
    pub folds: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl Folds {
    /// Indices of every fold except `i`.
    pub fn train_indices(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        v.sort_unstable();
        v
    }
}

/// Stratified k-fold partition.
///
/// Each class is shuffled with a seeded generator and dealt round-robin, the
/// deal continuing where the previous class stopped so fold sizes stay
/// within one of each other overall as well as per class. A class with
/// fewer than `k` members cannot appear in every fold; it is dealt the same
/// way and a warning is recorded.
pub fn kfold(labels: &[Rhythm], k: usize, seed: u64) -> Result<Folds> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::Config(format!(
            "cannot split {} examples into {k} folds",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut warnings = Vec::new();
    let mut next = 0;
    for c in 0..N_CLASSES {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].index() == c).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            warnings.push(format!(
                "class {} has {} members, fewer than {k} folds; not stratified",
                Rhythm::from_index(c),
                members.len()
            ));
        }
        members.shuffle(&mut rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(Folds { folds, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(counts: [usize; 4]) -> Vec<Rhythm> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat(Rhythm::from_index(c)).take(n))
            .collect()
    }

    #[test]
    fn hundred_into_five() {
        let f = kfold(&labels([40, 30, 20, 10]), 5, 1).unwrap();
        assert!(f.folds.iter().all(|f| f.len() == 20));
        assert!(f.warnings.is_empty());
    }

    #[test]
    fn deterministic_for_seed() {
        let l = labels([13, 7, 9, 4]);
        assert_eq!(kfold(&l, 3, 42).unwrap(), kfold(&l, 3, 42).unwrap());
        assert_ne!(kfold(&l, 3, 42).unwrap(), kfold(&l, 3, 43).unwrap());
    }

    #[test]
    fn small_class_warns_but_proceeds() {
        let f = kfold(&labels([20, 3, 0, 0]), 5, 0).unwrap();
        assert_eq!(f.warnings.len(), 1);
        assert_eq!(f.folds.iter().map(Vec::len).sum::<usize>(), 23);
    }

    #[test]
    fn per_class_balance() {
        let l = labels([17, 11, 9, 23]);
        let f = kfold(&l, 4, 9).unwrap();
        for c in Rhythm::ALL {
            let sizes: Vec<usize> = f
                .folds
                .iter()
                .map(|fold| fold.iter().filter(|&&i| l[i] == c).count())
                .collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn bad_k() {
        assert!(kfold(&labels([3, 0, 0, 0]), 1, 0).is_err());
        assert!(kfold(&labels([3, 0, 0, 0]), 4, 0).is_err());
    }
}
