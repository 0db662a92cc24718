//! Lloyd's k-means with k-means++ seeding and best-of-n restarts.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sq_euclidean;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

const MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every update step of the winning restart.
    pub inertia_history: Vec<f64>,
    /// Index of the winning restart.
    pub restart: usize,
}

/// Runs `n_init` seeded restarts and keeps the one with the lowest inertia
/// (ties go to the lower restart index). Clustering distance is always Euclidean.
pub fn fit_kmeans(x: &[Vec<f64>], k: usize, n_init: usize, seed: u64) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    if k > x.len() {
        return Err(Error::Argument(format!("k = {k} exceeds the {} available points", x.len())));
    }
    if n_init == 0 {
        return Err(Error::Argument("n_init must be at least 1".into()));
    }
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::Validation("rows have inconsistent dimensions".into()));
    }
    let runs: Vec<KMeansFit> = (0..n_init)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, restart));
            let mut fit = lloyd(x, plus_plus_init(x, k, &mut rng));
            fit.restart = restart;
            fit
        })
        .collect();
    Ok(runs
        .into_iter()
        .min_by(|a, b| a.inertia.total_cmp(&b.inertia).then(a.restart.cmp(&b.restart)))
        .expect("n_init >= 1"))
}

pub fn restart_seed(seed: u64, restart: usize) -> u64 {
    derive_seed(seed, &format!("kmeans-restart-{restart}"))
}

fn plus_plus_init(x: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut centroids = vec![x[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = x.iter().map(|p| sq_euclidean(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // every point already coincides with a centroid
            Err(_) => rng.gen_range(0..n),
        };
        centroids.push(x[next].clone());
        let c = centroids.last().expect("just pushed");
        for (d, p) in d2.iter_mut().zip(x) {
            *d = d.min(sq_euclidean(p, c));
        }
    }
    centroids
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_euclidean(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn lloyd(x: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> KMeansFit {
    let k = centroids.len();
    let dim = x[0].len();
    let mut labels = vec![usize::MAX; x.len()];
    let mut history: Vec<f64> = Vec::new();

    for _ in 0..MAX_ITER {
        let mut changed = false;
        let mut dists = vec![0.0; x.len()];
        for (i, p) in x.iter().enumerate() {
            let (j, d) = nearest(p, &centroids);
            if labels[i] != j {
                labels[i] = j;
                changed = true;
            }
            dists[i] = d;
        }

        // re-seed empty clusters from the point farthest from its centroid
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let far = (0..x.len())
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                .expect("k <= n guarantees a donor cluster");
            counts[labels[far]] -= 1;
            counts[j] = 1;
            labels[far] = j;
            dists[far] = 0.0;
            centroids[j] = x[far].clone();
            changed = true;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &l) in x.iter().zip(&labels) {
            sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for (c, (s, &n)) in centroids.iter_mut().zip(sums.iter().zip(&counts)) {
            *c = s.iter().map(|v| v / n as f64).collect();
        }
        let inertia: f64 = x
            .iter()
            .zip(&labels)
            .map(|(p, &l)| sq_euclidean(p, &centroids[l]))
            .sum();
        if let Some(prev) = history.last() {
            debug_assert!(inertia <= prev + 1e-9 * prev.max(1.0), "inertia increased");
        }
        history.push(inertia);
        if !changed {
            break;
        }
    }

    KMeansFit {
        inertia: *history.last().expect("at least one iteration"),
        centroids,
        labels,
        inertia_history: history,
        restart: 0,
    }
}
