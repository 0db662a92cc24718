//! HDBSCAN*: mutual-reachability minimum spanning tree, condensed cluster
//! tree and excess-of-mass cluster selection.
//!
//! The root of the condensed tree is a selection candidate, so a single dense
//! group yields one cluster rather than none.

use serde::{Deserialize, Serialize};

use super::euclidean;
use crate::error::{Error, Result};

/// One node of the condensed tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedCluster {
    pub parent: Option<usize>,
    /// λ = 1 / distance at which the cluster appears.
    pub birth_lambda: f64,
    pub size: usize,
    pub stability: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdbscanFit {
    /// Selected cluster index per point, `None` for noise.
    pub labels: Vec<Option<usize>>,
    /// Membership strength per point, 0 for noise.
    pub probabilities: Vec<f64>,
    /// Exemplar point indices per selected cluster.
    pub exemplars: Vec<Vec<usize>>,
    pub tree: Vec<CondensedCluster>,
}

impl HdbscanFit {
    pub fn n_clusters(&self) -> usize {
        self.exemplars.len()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Single-linkage merge: children are point indices (< n) or merge nodes (n + i).
struct Merge {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

fn lambda_of(distance: f64) -> f64 {
    1.0 / distance.max(f64::MIN_POSITIVE)
}

pub fn core_distances(x: &[Vec<f64>], min_samples: usize) -> Vec<f64> {
    let n = x.len();
    let k = min_samples.clamp(1, n);
    x.iter()
        .map(|p| {
            let mut d: Vec<f64> = x.iter().map(|q| euclidean(p, q)).collect();
            d.select_nth_unstable_by(k - 1, f64::total_cmp);
            d[k - 1]
        })
        .collect()
}

/// Prim's algorithm on the dense mutual-reachability graph.
fn mst(x: &[Vec<f64>], core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = x.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = euclidean(&x[current], &x[j]).max(core[current]).max(core[j]);
            if d < best[j] {
                best[j] = d;
                from[j] = current;
            }
        }
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
            .expect("a vertex remains outside the tree");
        in_tree[next] = true;
        edges.push((from[next], next, best[next]));
        current = next;
    }
    edges
}

fn single_linkage(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Vec<Merge> {
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut uf = UnionFind::new(2 * n);
    let mut merges = Vec::with_capacity(n - 1);
    for (a, b, distance) in edges {
        let (ra, rb) = (uf.find(a), uf.find(b));
        let node = n + merges.len();
        let size = uf.size[ra] + uf.size[rb];
        uf.parent[ra] = node;
        uf.parent[rb] = node;
        uf.size[node] = size;
        merges.push(Merge {
            left: ra,
            right: rb,
            distance,
            size,
        });
    }
    merges
}

/// Condensed tree: clusters, the points falling out of each, and child links.
struct Condensed {
    clusters: Vec<CondensedCluster>,
    /// (point, cluster it falls out of, λ)
    points: Vec<(usize, usize, f64)>,
    /// Child clusters of each cluster.
    children: Vec<Vec<usize>>,
}

fn condense(n: usize, merges: &[Merge], min_cluster_size: usize) -> Condensed {
    let size_of = |node: usize| if node < n { 1 } else { merges[node - n].size };
    let mut clusters = vec![CondensedCluster {
        parent: None,
        birth_lambda: 0.0,
        size: n,
        stability: 0.0,
        selected: false,
    }];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut points = Vec::with_capacity(n);

    fn leaves(node: usize, n: usize, merges: &[Merge], out: &mut Vec<usize>) {
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if v < n {
                out.push(v);
            } else {
                stack.push(merges[v - n].left);
                stack.push(merges[v - n].right);
            }
        }
    }

    if n == 1 {
        points.push((0, 0, f64::INFINITY));
        return Condensed { clusters, points, children };
    }

    // (single-linkage node, condensed cluster it belongs to)
    let mut stack = vec![(n + merges.len() - 1, 0usize)];
    while let Some((node, cluster)) = stack.pop() {
        let m = &merges[node - n];
        let lambda = lambda_of(m.distance);
        let (l, r) = (m.left, m.right);
        let (ls, rs) = (size_of(l), size_of(r));
        match (ls >= min_cluster_size, rs >= min_cluster_size) {
            (true, true) => {
                for child in [l, r] {
                    let id = clusters.len();
                    clusters.push(CondensedCluster {
                        parent: Some(cluster),
                        birth_lambda: lambda,
                        size: size_of(child),
                        stability: 0.0,
                        selected: false,
                    });
                    children.push(Vec::new());
                    children[cluster].push(id);
                    if child < n {
                        points.push((child, id, lambda));
                    } else {
                        stack.push((child, id));
                    }
                }
            }
            (big_l, big_r) => {
                for (child, big) in [(l, big_l), (r, big_r)] {
                    if big {
                        stack.push((child, cluster));
                    } else {
                        let mut pts = Vec::new();
                        leaves(child, n, merges, &mut pts);
                        points.extend(pts.into_iter().map(|p| (p, cluster, lambda)));
                    }
                }
            }
        }
    }
    Condensed { clusters, points, children }
}

fn compute_stability(c: &mut Condensed) {
    for &(_, cluster, lambda) in &c.points {
        let birth = c.clusters[cluster].birth_lambda;
        c.clusters[cluster].stability += lambda - birth;
    }
    for id in 1..c.clusters.len() {
        let parent = c.clusters[id].parent.expect("non-root has parent");
        let contrib = (c.clusters[id].birth_lambda - c.clusters[parent].birth_lambda) * c.clusters[id].size as f64;
        c.clusters[parent].stability += contrib;
    }
}

/// Excess-of-mass selection, bottom-up. Children always have larger ids than parents.
fn select(c: &mut Condensed) {
    let m = c.clusters.len();
    let mut subtree = vec![0.0; m];
    for id in (0..m).rev() {
        let child_sum: f64 = c.children[id].iter().map(|&ch| subtree[ch]).sum();
        let own = c.clusters[id].stability;
        if c.children[id].is_empty() || own >= child_sum {
            c.clusters[id].selected = true;
            subtree[id] = own;
            let mut stack = c.children[id].clone();
            while let Some(d) = stack.pop() {
                c.clusters[d].selected = false;
                stack.extend(c.children[d].iter().copied());
            }
        } else {
            subtree[id] = child_sum;
        }
    }
}

pub fn fit_hdbscan(x: &[Vec<f64>], min_cluster_size: usize, min_samples: Option<usize>) -> Result<HdbscanFit> {
    if min_cluster_size < 2 {
        return Err(Error::Argument(format!(
            "min_cluster_size must be at least 2, got {min_cluster_size}"
        )));
    }
    let n = x.len();
    if n == 0 {
        return Err(Error::Argument("cannot cluster an empty point set".into()));
    }
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::Validation("rows have inconsistent dimensions".into()));
    }
    if n < min_cluster_size {
        return Ok(HdbscanFit {
            labels: vec![None; n],
            probabilities: vec![0.0; n],
            exemplars: Vec::new(),
            tree: Vec::new(),
        });
    }

    let core = core_distances(x, min_samples.unwrap_or(min_cluster_size));
    let merges = if n > 1 { single_linkage(n, mst(x, &core)) } else { Vec::new() };
    let mut condensed = condense(n, &merges, min_cluster_size);
    compute_stability(&mut condensed);
    select(&mut condensed);

    let m = condensed.clusters.len();
    // map each condensed cluster to its selected ancestor (or itself)
    let mut owner: Vec<Option<usize>> = vec![None; m];
    for id in 0..m {
        owner[id] = if condensed.clusters[id].selected {
            Some(id)
        } else {
            condensed.clusters[id].parent.and_then(|p| owner[p])
        };
    }
    let selected: Vec<usize> = (0..m).filter(|&id| condensed.clusters[id].selected).collect();
    let label_of = |id: usize| selected.iter().position(|&s| s == id);

    // largest λ among each cluster's direct children (points and sub-clusters)
    let mut death = vec![0.0f64; m];
    for &(_, cluster, lambda) in &condensed.points {
        death[cluster] = death[cluster].max(lambda);
    }
    for id in 1..m {
        let p = condensed.clusters[id].parent.expect("non-root");
        death[p] = death[p].max(condensed.clusters[id].birth_lambda);
    }

    let mut labels = vec![None; n];
    let mut probabilities = vec![0.0; n];
    let mut point_lambda = vec![0.0; n];
    let mut leaf_of = vec![0usize; n];
    for &(p, cluster, lambda) in &condensed.points {
        point_lambda[p] = lambda;
        leaf_of[p] = cluster;
        if let Some(sel) = owner[cluster] {
            labels[p] = label_of(sel);
            let max_lambda = death[sel];
            probabilities[p] = if max_lambda.is_finite() && max_lambda > 0.0 {
                lambda.min(max_lambda) / max_lambda
            } else {
                1.0
            };
        }
    }

    // exemplars: points with the largest λ inside each leaf of a selected cluster
    let mut exemplars = vec![Vec::new(); selected.len()];
    for id in 0..m {
        let Some(sel) = owner[id] else { continue };
        if !condensed.children[id].is_empty() {
            continue;
        }
        let leaf_max = condensed
            .points
            .iter()
            .filter(|(_, c, _)| *c == id)
            .map(|(_, _, l)| *l)
            .fold(0.0f64, f64::max);
        let label = label_of(sel).expect("owner is selected");
        exemplars[label].extend(
            (0..n).filter(|&p| leaf_of[p] == id && point_lambda[p] >= leaf_max * (1.0 - 1e-12)),
        );
    }
    for (label, ex) in exemplars.iter_mut().enumerate() {
        ex.sort_unstable();
        for &p in ex.iter() {
            debug_assert_eq!(labels[p], Some(label));
            probabilities[p] = 1.0;
        }
    }

    let tree = condensed.clusters;
    Ok(HdbscanFit {
        labels,
        probabilities,
        exemplars,
        tree,
    })
}


#[cfg(test)]
mod tests {
    use super::tests_support::blobs_with_stragglers;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn two_blobs_and_stragglers() {
        for seed in 0..5 {
            let x = blobs_with_stragglers(seed);
            let fit = fit_hdbscan(&x, 10, None).unwrap();
            assert_eq!(fit.n_clusters(), 2, "seed {seed}");
            for i in 40..43 {
                assert_eq!(fit.labels[i], None);
                assert_eq!(fit.probabilities[i], 0.0);
            }
            let a = fit.labels[0].unwrap();
            let b = fit.labels[20].unwrap();
            assert_ne!(a, b);
            assert!(fit.labels[..20].iter().all(|l| *l == Some(a)));
            assert!(fit.labels[20..40].iter().all(|l| *l == Some(b)));
        }
    }

    #[test]
    fn single_blob_is_one_cluster_without_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let x: Vec<Vec<f64>> = (0..30).map(|_| vec![noise.sample(&mut rng), noise.sample(&mut rng)]).collect();
        let fit = fit_hdbscan(&x, 5, None).unwrap();
        assert_eq!(fit.n_clusters(), 1);
        assert!(fit.labels.iter().all(|l| *l == Some(0)));
    }

    #[test]
    fn uniform_points_never_give_two_large_clusters() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let fit = fit_hdbscan(&x, 25, None).unwrap();
            assert!(fit.n_clusters() <= 1);
        }
    }

    #[test]
    fn probabilities_and_exemplars() {
        let x = blobs_with_stragglers(3);
        let fit = fit_hdbscan(&x, 10, Some(5)).unwrap();
        for (p, l) in fit.probabilities.iter().zip(&fit.labels) {
            match l {
                Some(_) => assert!(*p > 0.0 && *p <= 1.0),
                None => assert_eq!(*p, 0.0),
            }
        }
        for (label, ex) in fit.exemplars.iter().enumerate() {
            assert!(!ex.is_empty());
            for &p in ex {
                assert_eq!(fit.labels[p], Some(label));
                assert!((fit.probabilities[p] - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn too_few_points_is_all_noise() {
        let fit = fit_hdbscan(&[vec![0.0], vec![1.0]], 5, None).unwrap();
        assert_eq!(fit.n_clusters(), 0);
        assert!(fit_hdbscan(&[vec![0.0]], 1, None).is_err());
    }

    #[test]
    fn core_distance_counts_self() {
        let x = vec![vec![0.0], vec![1.0], vec![3.0]];
        assert_eq!(core_distances(&x, 1), vec![0.0, 0.0, 0.0]);
        assert_eq!(core_distances(&x, 2), vec![1.0, 1.0, 2.0]);
    }
}
