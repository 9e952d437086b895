use sha2::{Digest, Sha256};

use crate::symexpr::BoxBounds;

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut n: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while n > 0 {
        out += (n % b) as f64 * inv;
        n /= b;
        inv /= base as f64;
    }
    out
}

/// First eight bytes of a SHA-256 digest as a seed.
pub fn seed_from_bytes(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn shift(seed: u64, axis: usize) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((axis as u64).to_le_bytes());
    let d = h.finalize();
    let v = u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"));
    (v >> 11) as f64 / (1u64 << 53) as f64
}

/// `n` points of a Cranley–Patterson shifted Halton sequence in `bounds`.
/// Points never touch the box boundary.
pub fn sample_box(bounds: &BoxBounds, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let q = bounds.len();
    assert!(q <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    let shifts: Vec<f64> = (0..q).map(|i| shift(seed, i)).collect();
    (1..=n as u64)
        .map(|k| {
            (0..q)
                .map(|i| {
                    let u = (radical_inverse(k, PRIMES[i]) + shifts[i]).fract();
                    let u = u.clamp(1e-6, 1.0 - 1e-6);
                    let (a, b) = bounds[i];
                    a + (b - a) * u
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_inside() {
        let b = vec![(-2.0, 2.0), (0.0, 1.0)];
        let p = sample_box(&b, 25, 7);
        assert_eq!(p, sample_box(&b, 25, 7));
        assert_ne!(p, sample_box(&b, 25, 8));
        for x in &p {
            assert!(x[0] > -2.0 && x[0] < 2.0 && x[1] > 0.0 && x[1] < 1.0);
        }
    }

    #[test]
    fn halton_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }
}
