use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 avalanche step.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a root seed and a path of indices (trial,
/// anchor, kind, ...). Distinct paths give independent streams, so trials
/// can run in any order, or in parallel, with identical results.
pub fn child_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(seed ^ 0x243f_6a88_85a3_08d3);
    for &part in path {
        state = splitmix64(state ^ splitmix64(part.wrapping_add(0x1357_9bdf_2468_ace1)));
    }
    state
}

/// Counter-based RNG for one (seed, path) slot.
pub fn trial_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(seed, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn child_seeds_are_reproducible_and_distinct() {
        assert_eq!(child_seed(7, &[1, 2, 3]), child_seed(7, &[1, 2, 3]));
        assert_ne!(child_seed(7, &[1, 2, 3]), child_seed(7, &[1, 2, 4]));
        assert_ne!(child_seed(7, &[1, 2, 3]), child_seed(8, &[1, 2, 3]));
        // Path structure matters, not just the XOR of parts.
        assert_ne!(child_seed(7, &[1, 2]), child_seed(7, &[2, 1]));
    }

    #[test]
    fn streams_do_not_collide_across_trials() {
        let mut seen = std::collections::HashSet::new();
        for trial in 0..1000u64 {
            for anchor in 0..4u64 {
                assert!(seen.insert(child_seed(42, &[trial, anchor])));
            }
        }
    }

    #[test]
    fn rng_draws_match_for_equal_paths() {
        let a: f64 = trial_rng(3, &[9, 9]).random();
        let b: f64 = trial_rng(3, &[9, 9]).random();
        assert_eq!(a, b);
    }
}
