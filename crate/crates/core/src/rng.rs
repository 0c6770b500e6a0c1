//! Seeded random source shared by every solver.
//!
//! All randomness (initial points, random-MEB subsets, sampled furthest-point
//! searches, Monte-Carlo distance estimates) is drawn from ChaCha8 seeded
//! through `SeedableRng::seed_from_u64`, so a `(data, config, seed)` triple
//! fixes the whole trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SolverRng = ChaCha8Rng;

pub fn solver_rng(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}
