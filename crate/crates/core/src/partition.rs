//! Deterministic partitions of weighted index lists.
//!
//! Three constructions back every balancing step of the multiplication
//! pipeline. Each takes natural weights `w_0..w_{n-1}` summing to `W` with
//! per-item bound `w` and produces index sets whose per-part bounds are
//! stated below; the bounds are re-checked directly in tests.

/// Partition `[n]` into `k` equal-size sets, each of weight at most
/// `W/k + w`. Pads with zero-weight dummies when `k` does not divide `n`,
/// so real parts may come out one short.
///
/// Construction: sort indices by weight descending (ties by index) and deal
/// them round-robin. Part sums then differ by at most the largest weight.
pub fn partition_even(weights: &[u64], k: usize) -> Vec<Vec<usize>> {
    assert!(k >= 1);
    let n = weights.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(weights[i]), i));
    let mut parts = vec![Vec::new(); k];
    for (pos, &idx) in order.iter().enumerate() {
        parts[pos % k].push(idx);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    parts
}

/// Partition `[n]` into at most `k` sets of consecutive indices, each of
/// weight at most `W/k + w`: sweep left to right, closing a part as soon as
/// its weight reaches `W/k`.
pub fn partition_consecutive(weights: &[u64], k: usize) -> Vec<Vec<usize>> {
    assert!(k >= 1);
    let total: u64 = weights.iter().sum();
    let mut parts = Vec::new();
    let mut current = Vec::new();
    let mut sum: u64 = 0;
    for (i, &w) in weights.iter().enumerate() {
        current.push(i);
        sum += w;
        // close once k * sum >= W (exact integer comparison)
        if total > 0 && (k as u64).saturating_mul(sum) >= total && parts.len() + 1 < k {
            parts.push(std::mem::take(&mut current));
            sum = 0;
        }
    }
    if !current.is_empty() {
        parts.push(current);
    }
    parts
}

/// Fencepost ends (inclusive last index per part), padded to exactly `k`.
fn fenceposts(parts: &[Vec<usize>], k: usize, n: usize) -> Vec<usize> {
    let mut ends: Vec<usize> = parts.iter().map(|p| *p.last().unwrap()).collect();
    while ends.len() < k {
        ends.push(n - 1);
    }
    ends
}

/// Partition `[n]` into at most `k` consecutive sets meeting both doubled
/// bounds `2(W/k + w)` and `2(U/k + u)`: partition for each weight sequence
/// separately, merge the fenceposts in order, and keep every other one.
pub fn partition_consecutive_2(
    weights_a: &[u64],
    weights_b: &[u64],
    k: usize,
) -> Vec<Vec<usize>> {
    assert_eq!(weights_a.len(), weights_b.len());
    assert!(k >= 1);
    let n = weights_a.len();
    if n == 0 {
        return Vec::new();
    }
    let pa = partition_consecutive(weights_a, k);
    let pb = partition_consecutive(weights_b, k);
    let mut ends = fenceposts(&pa, k, n);
    ends.extend(fenceposts(&pb, k, n));
    ends.sort_unstable();
    let mut parts = Vec::new();
    let mut start = 0usize;
    for j in 0..k {
        let end = ends[2 * j + 1];
        if end >= start {
            parts.push((start..=end).collect::<Vec<usize>>());
            start = end + 1;
        }
    }
    if start < n {
        // the 2k-th fencepost is always n-1, so this never triggers
        parts.push((start..n).collect());
    }
    parts
}

/// Exact per-part bound of the single-sequence lemmas: `W/k + w`, computed
/// without rounding as a (numerator, denominator) comparison helper.
pub fn within_bound(part_sum: u64, total: u64, k: usize, max_w: u64) -> bool {
    // part_sum <= W/k + w  <=>  k * part_sum <= W + k * w
    (k as u64) * part_sum <= total + (k as u64) * max_w
}

pub fn within_double_bound(part_sum: u64, total: u64, k: usize, max_w: u64) -> bool {
    // part_sum <= 2(W/k + w)
    (k as u64) * part_sum <= 2 * (total + (k as u64) * max_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::SplitMix64;

    fn check_even(weights: &[u64], k: usize) {
        let parts = partition_even(weights, k);
        let total: u64 = weights.iter().sum();
        let max_w = weights.iter().copied().max().unwrap_or(0);
        let target = weights.len().div_ceil(k);
        assert_eq!(parts.len(), k);
        let mut seen = vec![false; weights.len()];
        for p in &parts {
            assert!(p.len() <= target, "equal size up to padding");
            let sum: u64 = p.iter().map(|&i| weights[i]).sum();
            assert!(
                within_bound(sum, total, k, max_w),
                "part sum {sum} exceeds W/k + w for W={total} k={k} w={max_w}"
            );
            for &i in p {
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s), "partition covers [n]");
    }

    #[test]
    fn even_examples() {
        check_even(&[0; 8], 2);
        // weights [4,1,1,1,1,0,0,0], k=2, W=8, w=4: both parts <= 8
        check_even(&[4, 1, 1, 1, 1, 0, 0, 0], 2);
        // all equal to w, k=n: singletons
        let parts = partition_even(&[7; 6], 6);
        assert!(parts.iter().all(|p| p.len() == 1));
        check_even(&[7; 6], 6);
    }

    fn check_consecutive(weights: &[u64], k: usize) {
        let parts = partition_consecutive(weights, k);
        let total: u64 = weights.iter().sum();
        let max_w = weights.iter().copied().max().unwrap_or(0);
        assert!(parts.len() <= k);
        let mut next = 0usize;
        for p in &parts {
            for &i in p {
                assert_eq!(i, next, "consecutive indices");
                next += 1;
            }
            let sum: u64 = p.iter().map(|&i| weights[i]).sum();
            assert!(within_bound(sum, total, k, max_w));
        }
        assert_eq!(next, weights.len());
    }

    #[test]
    fn consecutive_examples() {
        let parts = partition_consecutive(&[1; 8], 4);
        assert_eq!(parts.len(), 4);
        assert!(parts.iter().all(|p| p.len() == 2));
        check_consecutive(&[1; 8], 4);
        check_consecutive(&[5, 0, 0, 5], 2);
        let single = partition_consecutive(&[3, 1, 4, 1], 1);
        assert_eq!(single, vec![vec![0, 1, 2, 3]]);
    }

    fn check_consecutive_2(wa: &[u64], wb: &[u64], k: usize) {
        let parts = partition_consecutive_2(wa, wb, k);
        let (ta, tb): (u64, u64) = (wa.iter().sum(), wb.iter().sum());
        let (ma, mb) = (
            wa.iter().copied().max().unwrap_or(0),
            wb.iter().copied().max().unwrap_or(0),
        );
        assert!(parts.len() <= k);
        let mut next = 0usize;
        for p in &parts {
            for &i in p {
                assert_eq!(i, next);
                next += 1;
            }
            let sa: u64 = p.iter().map(|&i| wa[i]).sum();
            let sb: u64 = p.iter().map(|&i| wb[i]).sum();
            assert!(within_double_bound(sa, ta, k, ma), "a-bound");
            assert!(within_double_bound(sb, tb, k, mb), "b-bound");
        }
        assert_eq!(next, wa.len());
    }

    #[test]
    fn consecutive_2_examples() {
        let w = [3, 1, 4, 1, 5, 9, 2, 6];
        check_consecutive_2(&w, &w, 3);
        check_consecutive_2(&w, &[0; 8], 3);
        let mut rng = SplitMix64::new(11);
        let wa: Vec<u64> = (0..16).map(|_| rng.below(10)).collect();
        let wb: Vec<u64> = (0..16).map(|_| rng.below(10)).collect();
        check_consecutive_2(&wa, &wb, 4);
    }

    #[test]
    fn random_vectors_meet_bounds() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..200 {
            let n = rng.range(1, 64) as usize;
            let k = rng.range(1, 8) as usize;
            let weights: Vec<u64> = (0..n).map(|_| rng.below(20)).collect();
            check_even(&weights, k);
            check_consecutive(&weights, k);
            let wb: Vec<u64> = (0..n).map(|_| rng.below(20)).collect();
            check_consecutive_2(&weights, &wb, k);
        }
    }
}
