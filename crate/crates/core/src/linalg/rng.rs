//! Tiny deterministic generator for start vectors and test fields.
//!
//! SplitMix64: stateless-simple, well distributed, and identical on every
//! platform, which keeps eigensolves and reports byte-reproducible.

use crate::scalar::{real, Real};

/// Advances the SplitMix64 state and returns the next 64 random bits.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in `[-1, 1)`.
pub fn symmetric_unit<T: Real>(state: &mut u64) -> T {
    let u = (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64;
    real::<T>(2.0 * u - 1.0)
}

/// Deterministic unit vector of length `n` seeded by `seed`.
pub fn unit_vector<T: Real>(n: usize, seed: u64) -> Vec<T> {
    let mut state = seed;
    let mut v: Vec<T> = (0..n).map(|_| symmetric_unit(&mut state)).collect();
    let nrm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if nrm > T::zero() {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_normalized() {
        let a = unit_vector::<f64>(257, 0x5EED);
        let b = unit_vector::<f64>(257, 0x5EED);
        assert_eq!(a, b);
        let nrm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((nrm - 1.0).abs() < 1e-14);
        let c = unit_vector::<f64>(257, 0x5EED + 1);
        assert_ne!(a, c);
    }
}
