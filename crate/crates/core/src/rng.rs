//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, experiment, task, replica)`. The first
//! three words are mixed into a ChaCha key and the replica index selects the
//! ChaCha stream, so every replica draws from an independent sequence and
//! adding replicas never shifts existing ones. There is no global RNG state.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub experiment: u64,
    pub task: u64,
    pub replica: u64,
}

impl StreamId {
    pub fn new(seed: u64, experiment: u64, task: u64, replica: u64) -> Self {
        Self {
            seed,
            experiment,
            task,
            replica,
        }
    }

    /// Same experiment and task, different replica.
    pub fn with_replica(self, replica: u64) -> Self {
        Self { replica, ..self }
    }

    pub fn with_task(self, task: u64) -> Self {
        Self { task, ..self }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    id: StreamId,
    inner: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(id: StreamId) -> Self {
        let mut state = id.seed;
        let mut key = [0u8; 32];
        let words = [
            splitmix64(&mut state),
            splitmix64(&mut state) ^ id.experiment.rotate_left(17),
            splitmix64(&mut state) ^ id.task.rotate_left(41),
            splitmix64(&mut state),
        ];
        // one more mixing round so that nearby (experiment, task) pairs diverge
        let mut mix = words[1] ^ words[2];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&(w ^ splitmix64(&mut mix)).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(id.replica);
        Self { id, inner }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(StreamId::new(seed, 0, 0, 0))
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}
