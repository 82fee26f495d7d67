//! Seeded random streams.
//!
//! Everything random derives from one 64-bit seed. Each consumer gets its
//! own ChaCha stream, selected by a purpose tag and a task index, so results
//! do not depend on how tasks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    WarmStart = 1,
    Noise = 2,
    Features = 3,
    WindFit = 4,
    FeatureCheck = 5,
    Envelope = 6,
    Prior = 7,
}

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) ^ index);
    rng
}

/// Worker count for parallel sweeps: `ARMPC_THREADS` if set, otherwise the
/// rayon default.
pub fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("ARMPC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        builder = builder.num_threads(n);
    }
    builder.build().expect("thread pool")
}
