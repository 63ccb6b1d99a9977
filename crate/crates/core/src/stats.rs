//! Rank statistics: the Kruskal-Wallis H test with average ranks for ties,
//! a chi-square tail for large samples, and an exact permutation tail for
//! small pooled samples.

use itertools::Itertools;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Average ranks (1-based) of `values`, ties sharing their mean rank.
pub fn average_ranks<F: Scalar>(values: &[F]) -> Vec<F> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![F::zero(); n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Tied block [i, j): mean of ranks i+1 ..= j.
        let mean_rank = F::of_f64((i + 1 + j) as f64 / 2.0);
        for &idx in &order[i..j] {
            ranks[idx] = mean_rank;
        }
        i = j;
    }
    ranks
}

/// The classical Kruskal-Wallis H statistic over `groups`, ties sharing
/// average ranks. No tie-variance adjustment is applied: the sparse content
/// features this gate runs on are dominated by zero ties, and the plain
/// statistic keeps the test conservative there. Identical pooled values
/// yield exactly 0, and H is never negative.
pub fn kruskal_wallis_h<F: Scalar>(groups: &[&[F]]) -> Result<F> {
    if groups.len() < 2 {
        return Err(Error::validation("kruskal_wallis_h needs at least 2 groups"));
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(Error::validation("kruskal_wallis_h groups must be non-empty"));
    }
    let pooled: Vec<F> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let ranks = average_ranks(&pooled);
    Ok(h_from_ranks(&ranks, groups.iter().map(|g| g.len())))
}

/// H from precomputed pooled ranks and group sizes (groups are consecutive
/// blocks of the pooled sequence).
fn h_from_ranks<F: Scalar>(ranks: &[F], sizes: impl Iterator<Item = usize>) -> F {
    let n = ranks.len();
    let nf = F::of_usize(n);
    let mut offset = 0usize;
    let mut sum = F::zero();
    for size in sizes {
        let r: F = ranks[offset..offset + size].iter().copied().sum();
        sum = sum + r * r / F::of_usize(size);
        offset += size;
    }
    let h = F::of_f64(12.0) / (nf * (nf + F::one())) * sum - F::of_f64(3.0) * (nf + F::one());
    h.max(F::zero())
}

/// Upper-tail probability of a chi-square with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).expect("df > 0").sf(x)
}

/// Exact permutation tail for a two-group Kruskal-Wallis test: the fraction
/// of group-1 index choices whose H reaches the observed one. Intended for
/// pooled samples of at most ~12 values.
pub fn exact_permutation_p<F: Scalar>(group1: &[F], group2: &[F]) -> Result<f64> {
    if group1.is_empty() || group2.is_empty() {
        return Err(Error::validation("permutation test groups must be non-empty"));
    }
    let pooled: Vec<F> = group1.iter().chain(group2).copied().collect();
    let n = pooled.len();
    let n1 = group1.len();
    let ranks = average_ranks(&pooled);
    let observed = h_from_ranks(&ranks, [n1, n - n1].into_iter());
    let tol = F::of_f64(1e-12);

    let mut hits = 0usize;
    let mut total = 0usize;
    for combo in (0..n).combinations(n1) {
        let mut in1 = vec![false; n];
        for &i in &combo {
            in1[i] = true;
        }
        let mut perm_ranks: Vec<F> = Vec::with_capacity(n);
        for (i, &r) in ranks.iter().enumerate() {
            if in1[i] {
                perm_ranks.push(r);
            }
        }
        for (i, &r) in ranks.iter().enumerate() {
            if !in1[i] {
                perm_ranks.push(r);
            }
        }
        let h = h_from_ranks(&perm_ranks, [n1, n - n1].into_iter());
        if h + tol >= observed {
            hits += 1;
        }
        total += 1;
    }
    Ok(hits as f64 / total as f64)
}
