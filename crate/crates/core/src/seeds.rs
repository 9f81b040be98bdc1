//! Deterministic derivation of per-stream random seeds.
//!
//! Every random stream in a run (workload per episode, one per agent,
//! evaluation seeds) is derived from the master seed and a stream tag, so
//! streams stay independent and reproducible regardless of call order.

/// Stream tag for per-episode workload generation.
pub const STREAM_WORKLOAD: u64 = 0x01;
/// Stream tag for per-agent networks and exploration.
pub const STREAM_AGENT: u64 = 0x02;
/// Stream tag for evaluation episodes.
pub const STREAM_EVAL: u64 = 0x03;

/// Mixes `root` and `tag` into a child seed.
///
/// Uses the splitmix64 finalizer, whose output is a bijection of its input,
/// so distinct tags under one root never collide.
pub fn derive_seed(root: u64, tag: u64) -> u64 {
    mix(root ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable() {
        assert_eq!(derive_seed(7, STREAM_WORKLOAD), derive_seed(7, STREAM_WORKLOAD));
        assert_ne!(derive_seed(7, STREAM_WORKLOAD), derive_seed(7, STREAM_AGENT));
        assert_ne!(derive_seed(7, STREAM_WORKLOAD), derive_seed(8, STREAM_WORKLOAD));
    }

    #[test]
    fn nested_derivation_spreads() {
        let mut seen = std::collections::HashSet::new();
        for root in 0..16u64 {
            for episode in 0..64u64 {
                seen.insert(derive_seed(derive_seed(root, STREAM_WORKLOAD), episode));
            }
        }
        assert_eq!(seen.len(), 16 * 64);
    }
}
