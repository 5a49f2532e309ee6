//! Contiguous splitting of a weighted sequence into parts.
//!
//! All functions return `parts + 1` boundaries `b` with `b[0] = 0` and
//! `b[parts] = len`; part `k` covers `b[k]..b[k + 1]`.

/// Splits `len` items into `parts` runs whose lengths differ by at most one.
/// The first `len % parts` runs are the longer ones.
pub fn split_even(len: usize, parts: usize) -> Vec<usize> {
    assert!(parts >= 1, "split into zero parts");
    let (base, extra) = (len / parts, len % parts);
    let mut bounds = Vec::with_capacity(parts + 1);
    bounds.push(0);
    let mut at = 0;
    for k in 0..parts {
        at += base + usize::from(k < extra);
        bounds.push(at);
    }
    bounds
}

fn prefix_sums(weights: &[u64]) -> Vec<u64> {
    let mut prefix = Vec::with_capacity(weights.len() + 1);
    prefix.push(0);
    let mut acc = 0;
    for &w in weights {
        acc += w;
        prefix.push(acc);
    }
    prefix
}

/// For every start `i`, the fewest parts (each weighing at most `limit`)
/// needed to cover `i..len`, found by greedy maximal packing.
fn min_parts_from(prefix: &[u64], limit: u64) -> Vec<usize> {
    let n = prefix.len() - 1;
    let mut next = vec![n; n + 1];
    let mut j = 0;
    for (i, slot) in next.iter_mut().enumerate().take(n) {
        j = j.max(i + 1);
        while j < n && prefix[j + 1] - prefix[i] <= limit {
            j += 1;
        }
        *slot = j;
    }
    let mut parts = vec![0; n + 1];
    for i in (0..n).rev() {
        parts[i] = 1 + parts[next[i]];
    }
    parts
}

/// Smallest achievable maximum part weight over contiguous splits into
/// exactly `parts` non-empty runs.
pub fn min_max_load(weights: &[u64], parts: usize) -> u64 {
    assert!(parts >= 1 && parts <= weights.len(), "need 1 <= parts <= items");
    let prefix = prefix_sums(weights);
    let total = prefix[weights.len()];
    let heaviest = weights.iter().copied().max().unwrap_or(0);
    let mut lo = heaviest.max(total.div_ceil(parts as u64));
    let mut hi = total.max(lo);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if min_parts_from(&prefix, mid)[0] <= parts {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Contiguous split into exactly `parts` non-empty runs minimising the
/// heaviest run. Among optimal splits, returns the one whose boundaries are
/// lexicographically smallest (earliest boundary wins ties).
pub fn split_min_max(weights: &[u64], parts: usize) -> Vec<usize> {
    let n = weights.len();
    let limit = min_max_load(weights, parts);
    let prefix = prefix_sums(weights);
    let need = min_parts_from(&prefix, limit);

    let mut bounds = Vec::with_capacity(parts + 1);
    bounds.push(0);
    let mut start = 0;
    for k in 0..parts - 1 {
        let remaining = parts - k - 1;
        let mut b = start + 1;
        // Feasible: the run fits under the limit, and what is left can be
        // covered by `remaining` non-empty runs under the limit.
        while !(prefix[b] - prefix[start] <= limit && need[b] <= remaining && n - b >= remaining) {
            b += 1;
            debug_assert!(b <= n - remaining, "no feasible boundary");
        }
        bounds.push(b);
        start = b;
    }
    bounds.push(n);
    bounds
}

/// Left-to-right scan that cuts after position `j` once the running weight
/// reaches `k * total / parts`, for `k = 1..parts`. Cuts may coincide (empty
/// runs) when one item outweighs a whole share.
pub fn split_greedy_cuts(weights: &[u64], parts: usize) -> Vec<usize> {
    assert!(parts >= 1, "split into zero parts");
    let n = weights.len();
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return split_even(n, parts);
    }
    let mut bounds = Vec::with_capacity(parts + 1);
    bounds.push(0);
    let mut running = 0u64;
    let mut pos = 0;
    for k in 1..parts as u64 {
        // running * parts >= k * total, in exact integer arithmetic
        while pos < n && (running as u128) * (parts as u128) < (k as u128) * (total as u128) {
            running += weights[pos];
            pos += 1;
        }
        bounds.push(pos);
    }
    bounds.push(n);
    bounds
}

/// Heaviest run under a given set of boundaries.
pub fn max_load(weights: &[u64], bounds: &[usize]) -> u64 {
    bounds
        .windows(2)
        .map(|w| weights[w[0]..w[1]].iter().sum::<u64>())
        .max()
        .unwrap_or(0)
}
