//! Deterministic sub-seed derivation.
//!
//! Everything in this crate draws randomness from one master seed. Distinct
//! consumers (tree bootstraps, sampling rounds, noise draws, repetitions)
//! derive their own seed from `(master, purpose, counter)` so that adding a
//! consumer or reordering work never shifts anyone else's stream, and
//! parallel execution sees exactly the same seeds as sequential execution.

/// Purpose tags keep independent seed streams from colliding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Latin-hypercube draws (init and per-round exploration).
    Sampling,
    /// Region sampling around one incumbent.
    Region,
    /// Bootstrap resampling for one tree of a forest.
    Tree,
    /// Noise stream for one target execution.
    Execution,
    /// One repetition of a repeated measurement.
    Repetition,
    /// Random choice of subset members (e.g. which explored configs join
    /// the incumbent pool candidates).
    Selection,
    /// Synthetic decoy surface construction.
    Decoy,
    /// Surrogate model training (per-refit master seed).
    Model,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Sampling => 0x5359,
            Purpose::Region => 0x5247,
            Purpose::Tree => 0x5452,
            Purpose::Execution => 0x4558,
            Purpose::Repetition => 0x5250,
            Purpose::Selection => 0x534c,
            Purpose::Decoy => 0x4443,
            Purpose::Model => 0x4d4c,
        }
    }
}

/// SplitMix64 finalizer; full-period mixing of a 64-bit state.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive the seed for `(purpose, counter)` under `master`.
pub fn sub_seed(master: u64, purpose: Purpose, counter: u64) -> u64 {
    // Two mixing rounds so that (master, tag, counter) triples that differ
    // in one component land far apart.
    mix(mix(master ^ purpose.tag().rotate_left(32)).wrapping_add(counter))
}
