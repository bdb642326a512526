//! Shared fixtures for the benchmarks.

use latcosine::{SpaceParams, WeightSpec};

/// Primes used by the fast-engine scaling benchmark.
pub const SCALING_PRIMES: [u64; 4] = [1009, 4001, 16001, 65003];

/// `gamma_j = j^{-2}` at smoothness `alpha`.
pub fn power_law(alpha: f64, d: usize) -> SpaceParams {
    SpaceParams::from_spec(alpha, WeightSpec::PowerLaw { c: 1.0, eta: 2.0 }, d).expect("valid fixture")
}

#[cfg(test)]
mod tests {
    use latcosine::cbc::is_prime;

    use super::*;

    #[test]
    fn scaling_sizes_are_prime() {
        assert!(SCALING_PRIMES.iter().all(|&n| is_prime(n)));
        assert_eq!(power_law(1.0, 3).dim(), 3);
    }
}
