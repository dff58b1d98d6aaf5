//! Deterministic random streams derived from one root seed.
//!
//! Each consumer (state initialisation, arm parameters, one stream per agent
//! for play) gets its own ChaCha8 stream keyed by `(root seed, purpose)` and
//! indexed by the agent number, so adding agents never shifts the draws of
//! existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a derived stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    InitialState = 1,
    ArmThetas = 2,
    Play = 3,
    AgentBetas = 4,
    SolverStart = 5,
    Analysis = 6,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStreams {
    root: u64,
}

impl SeedStreams {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Stream `index` for the given purpose.
    pub fn stream(&self, purpose: Purpose, index: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.root ^ splitmix64(purpose as u64)));
        rng.set_stream(index);
        rng
    }

    /// One play stream per agent.
    pub fn agent_streams(&self, num_agents: usize) -> Vec<StreamRng> {
        (0..num_agents as u64)
            .map(|i| self.stream(Purpose::Play, i))
            .collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
