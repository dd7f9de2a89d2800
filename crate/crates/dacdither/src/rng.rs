//! Counter-based random streams.
//!
//! Every random draw in the toolkit comes from a ChaCha8 stream keyed by
//! `(master_seed, trial index, antenna index, role)`. Streams never depend on
//! execution order, so Monte Carlo results are bit-identical at any worker
//! count, and dither streams on different antennas are independent by
//! construction.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Signal,
    Dither,
}

impl StreamRole {
    fn tag(self) -> u8 {
        match self {
            StreamRole::Signal => 0,
            StreamRole::Dither => 1,
        }
    }
}

/// Factory for per-(trial, antenna, role) streams under one master seed.
#[derive(Debug, Clone, Copy)]
pub struct RngSpace {
    master_seed: u64,
}

impl RngSpace {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Independent stream for the given key.
    pub fn stream(&self, trial: u64, antenna: u64, role: StreamRole) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&self.master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&trial.to_le_bytes());
        seed[16..24].copy_from_slice(&antenna.to_le_bytes());
        seed[24] = role.tag();
        ChaCha8Rng::from_seed(seed)
    }
}
