//! Seeded random substreams.
//!
//! Every random draw in a simulation comes from a ChaCha8 generator keyed by
//! the master seed. The 64-bit ChaCha stream id selects an independent
//! substream and is packed as
//!
//! ```text
//!   bits 63..32  trial index
//!   bits 31..24  purpose tag (see [`Purpose`])
//!   bits 23..16  cell number (1-based; 1 in single-cell runs)
//!   bits 15..0   user index (0-based)
//! ```
//!
//! The layout is part of the reproducibility contract: changing it changes
//! every generated number.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    /// Channel taps of the link from a base station to a user.
    Channel = 1,
    /// User position inside the serving cell.
    Placement = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub trial: u32,
    pub cell: u8,
    pub user: u16,
}

impl StreamId {
    pub fn new(trial: u32, cell: u8, user: u16) -> Self {
        Self { trial, cell, user }
    }

    fn packed(self, purpose: Purpose) -> u64 {
        (u64::from(self.trial) << 32)
            | (u64::from(purpose as u8) << 24)
            | (u64::from(self.cell) << 16)
            | u64::from(self.user)
    }
}

pub fn substream(master_seed: u64, id: StreamId, purpose: Purpose) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(id.packed(purpose));
    rng
}
