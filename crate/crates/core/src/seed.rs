//! Stable seed derivation. Every random stream in a suite is keyed by the
//! master seed plus the coordinates of the run it belongs to.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Seed for the stream identified by `parts` under `master`.
pub fn derive(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |h, &p| {
        splitmix64(h ^ splitmix64(p.wrapping_add(0x632b_e59b_d9b4_e019)))
    })
}

/// Like [`derive`], keyed by string coordinates.
pub fn derive_str(master: u64, parts: &[&str]) -> u64 {
    let hashed: Vec<u64> = parts.iter().map(|p| fnv1a(p)).collect();
    derive(master, &hashed)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn order_matters() {
        assert_ne!(derive(1, &[2, 3]), derive(1, &[3, 2]));
        assert_ne!(derive_str(1, &["a", "bc"]), derive_str(1, &["ab", "c"]));
    }

    #[test]
    fn no_collisions_on_a_grid() {
        let mut seen = HashSet::new();
        for a in 0..40 {
            for b in 0..40 {
                for c in 0..40 {
                    assert!(seen.insert(derive(7, &[a, b, c])));
                }
            }
        }
    }
}
