//! Test-only support: seeded generators for models and relation strings,
//! and brute-force oracles the optimized implementations are checked
//! against. Nothing here is used by the library itself.

pub mod gen;
pub mod oracle;
pub mod replay;

pub use gen::{perturb, random_model, random_relation_string, GenConfig};
pub use oracle::{
    dot_problems, enumerate_redundant_relationships, matching_objective, optimal_matching_objective, MatchObjective,
};

use rand::rngs::StdRng;
use rand::SeedableRng;

/// Deterministic RNG for a named test and case index.
pub fn rng_for(label: &str, case: u64) -> StdRng {
    let mut seed = 0xcbf2_9ce4_8422_2325u64;
    for b in label.bytes() {
        seed = (seed ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
    }
    StdRng::seed_from_u64(seed ^ case.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}
