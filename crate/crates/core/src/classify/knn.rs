use serde::{Deserialize, Serialize};

use crate::classify::N_CLASSES;

/// k-nearest-neighbour vote over stored, already-normalized exemplars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub exemplars: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Knn {
    /// Vote fractions among the `k` closest exemplars (Euclidean distance,
    /// ties broken by exemplar order). The winning class is the one with the
    /// most votes; a tie goes to the class whose member is nearest.
    pub fn vote(&self, x: &[f64]) -> ([f64; N_CLASSES], usize) {
        let mut dist: Vec<(f64, usize)> = self
            .exemplars
            .iter()
            .enumerate()
            .map(|(i, e)| (e.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        let k = self.k.min(dist.len());
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut votes = [0usize; N_CLASSES];
        for &(_, i) in &dist[..k] {
            votes[self.labels[i]] += 1;
        }
        let top = *votes.iter().max().unwrap_or(&0);
        let winner = dist[..k]
            .iter()
            .map(|&(_, i)| self.labels[i])
            .find(|&c| votes[c] == top)
            .unwrap_or(0);

        let mut scores = [0.0; N_CLASSES];
        for (s, v) in scores.iter_mut().zip(votes) {
            *s = v as f64 / k as f64;
        }
        (scores, winner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(k: usize) -> Knn {
        Knn {
            k,
            exemplars: vec![vec![0.0], vec![1.0], vec![2.0], vec![10.0], vec![11.0]],
            labels: vec![0, 0, 1, 3, 3],
        }
    }

    #[test]
    fn exact_match_with_k1() {
        let (scores, label) = model(1).vote(&[2.0]);
        assert_eq!(label, 1);
        assert_eq!(scores, [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn majority_of_three() {
        let (scores, label) = model(3).vote(&[1.4]);
        assert_eq!(label, 0);
        assert!((scores[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn k_larger_than_training_set() {
        // 2-2-1 split: the tie goes to the class of the nearest exemplar
        let (scores, label) = model(7).vote(&[10.5]);
        assert_eq!(label, 3);
        assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
