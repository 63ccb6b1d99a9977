//! Lloyd's k-means with seeded k-means++ initialization.
//!
//! Runs until the assignment fixpoint or 300 iterations. Empty clusters are
//! repaired by reseeding with the point farthest from its assigned centroid,
//! which keeps the within-cluster SSE non-increasing across iterations.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num::Scalar;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone)]
pub struct KmeansResult<F> {
    /// Cluster index per input vector.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<F>>,
    /// Within-cluster SSE after each iteration's update step.
    pub sse_history: Vec<F>,
    pub iterations: usize,
}

impl<F: Scalar> KmeansResult<F> {
    /// Member indices per cluster, in input order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let k = self.centroids.len();
        let mut out = vec![Vec::new(); k];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

pub(crate) fn squared_distance<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut s = F::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        s = s + d * d;
    }
    s
}

pub(crate) fn mean_of<F: Scalar>(vectors: &[Vec<F>], members: &[usize]) -> Vec<F> {
    let dim = vectors[members[0]].len();
    let mut m = vec![F::zero(); dim];
    for &i in members {
        for (acc, v) in m.iter_mut().zip(&vectors[i]) {
            *acc = *acc + *v;
        }
    }
    let n = F::of_usize(members.len());
    for acc in &mut m {
        *acc = *acc / n;
    }
    m
}

fn nearest<F: Scalar>(centroids: &[Vec<F>], v: &[F]) -> (usize, F) {
    let mut best = 0;
    let mut best_d = squared_distance(&centroids[0], v);
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = squared_distance(c, v);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    (best, best_d)
}

fn plus_plus_init<F: Scalar>(vectors: &[Vec<F>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<F>> {
    let n = vectors.len();
    let mut centroids: Vec<Vec<F>> = Vec::with_capacity(k);
    centroids.push(vectors[rng.gen_range(0..n)].clone());
    let mut d2: Vec<F> = vectors
        .iter()
        .map(|v| squared_distance(v, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: F = d2.iter().copied().sum();
        let idx = if total > F::zero() {
            let u = F::of_f64(rng.gen::<f64>()) * total;
            let mut acc = F::zero();
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc = acc + w;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining points coincide with chosen centroids.
            rng.gen_range(0..n)
        };
        centroids.push(vectors[idx].clone());
        for (i, v) in vectors.iter().enumerate() {
            let d = squared_distance(v, centroids.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

/// Cluster `vectors` into `k` groups. Deterministic given `seed`.
pub fn kmeans<F: Scalar>(vectors: &[Vec<F>], k: usize, seed: u64) -> Result<KmeansResult<F>> {
    let n = vectors.len();
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    if k > n {
        return Err(Error::validation(format!(
            "k = {k} exceeds the number of vectors ({n})"
        )));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::validation("vectors must share one dimension"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(vectors, k, &mut rng);
    let mut assignments = vec![usize::MAX; n];
    let mut sse_history = Vec::new();
    let mut iterations = 0;

    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let mut next: Vec<usize> = Vec::with_capacity(n);
        let mut sizes = vec![0usize; k];
        for v in vectors {
            let (j, _) = nearest(&centroids, v);
            sizes[j] += 1;
            next.push(j);
        }
        // Reseed each empty cluster with the point farthest from its
        // assigned centroid (stealing only from clusters with >= 2 members).
        for j in 0..k {
            if sizes[j] > 0 {
                continue;
            }
            let mut far: Option<(usize, F)> = None;
            for (i, v) in vectors.iter().enumerate() {
                if sizes[next[i]] < 2 {
                    continue;
                }
                let d = squared_distance(v, &centroids[next[i]]);
                if far.map_or(true, |(_, fd)| d > fd) {
                    far = Some((i, d));
                }
            }
            if let Some((i, _)) = far {
                sizes[next[i]] -= 1;
                next[i] = j;
                sizes[j] = 1;
                centroids[j] = vectors[i].clone();
            }
        }

        let converged = next == assignments;
        assignments = next;
        for (j, c) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignments[i] == j).collect();
            if !members.is_empty() {
                *c = mean_of(vectors, &members);
            }
        }
        let sse: F = (0..n)
            .map(|i| squared_distance(&vectors[i], &centroids[assignments[i]]))
            .sum();
        sse_history.push(sse);
        if converged {
            break;
        }
    }

    Ok(KmeansResult {
        assignments,
        centroids,
        sse_history,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn separates_two_obvious_groups() {
        let v = one_d(&[0.0, 0.1, 0.9, 1.0]);
        let r = kmeans(&v, 2, 7).unwrap();
        assert_eq!(r.assignments[0], r.assignments[1]);
        assert_eq!(r.assignments[2], r.assignments[3]);
        assert_ne!(r.assignments[0], r.assignments[2]);
    }

    #[test]
    fn k_one_groups_everything() {
        let v = one_d(&[1.0, 2.0, 5.0]);
        let r = kmeans(&v, 1, 0).unwrap();
        assert!(r.assignments.iter().all(|&a| a == 0));
        assert!((r.centroids[0][0] - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let v = one_d(&[1.0, 2.0, 5.0, 9.0]);
        let r = kmeans(&v, 4, 3).unwrap();
        let mut seen: Vec<usize> = r.assignments.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 4);
        assert!((r.sse_history.last().copied().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn k_larger_than_n_is_error() {
        let v = one_d(&[1.0]);
        assert!(kmeans(&v, 2, 0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let v: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 7) as f64, (i % 3) as f64, i as f64 * 0.01])
            .collect();
        let a = kmeans(&v, 4, 99).unwrap();
        let b = kmeans(&v, 4, 99).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centroids, b.centroids);
    }

    #[test]
    fn sse_non_increasing() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let n = rng.gen_range(5..40);
            let d = rng.gen_range(1..6);
            let v: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect())
                .collect();
            let k = rng.gen_range(1..=n.min(6));
            let r = kmeans(&v, k, trial).unwrap();
            for w in r.sse_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "SSE increased: {:?}", w);
            }
        }
    }

    #[test]
    fn duplicate_points_keep_all_clusters_nonempty() {
        let v = one_d(&[1.0, 1.0, 1.0, 5.0]);
        let r = kmeans(&v, 2, 11).unwrap();
        let clusters = r.clusters();
        assert!(clusters.iter().all(|c| !c.is_empty()));
    }
}
