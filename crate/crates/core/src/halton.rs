//! Deterministic low-discrepancy points.

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131,
];

/// Radical inverse of `k` in the base of the `dim`-th prime. `halton(0, d) == 0`.
pub fn halton(mut k: u64, dim: usize) -> f64 {
    let b = PRIMES[dim % PRIMES.len()];
    // wrap dimensions past the table with a shifted index so columns differ
    k += (dim / PRIMES.len()) as u64 * 7919;
    let mut f = 1.0;
    let mut r = 0.0;
    while k > 0 {
        f /= b as f64;
        r += f * (k % b) as f64;
        k /= b;
    }
    r
}

/// Point `k` of the Halton sequence mapped into `[lo, hi]^dim`, skipping
/// the origin so every coordinate is strictly inside.
pub fn halton_point(k: u64, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..dim).map(|d| lo + (hi - lo) * halton(k + 1, d)).collect()
}
