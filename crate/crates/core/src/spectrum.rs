//! Live band state: PU occupancy evolving under its chain, plus sensing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::OccupancyChain;
use crate::negotiation::PuDisposition;

pub type BandId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumBand {
    pub id: BandId,
    chain: OccupancyChain,
    pu_used: u32,
    pub disposition: PuDisposition,
}

impl SpectrumBand {
    pub fn new(id: BandId, chain: OccupancyChain, pu_used: u32, disposition: PuDisposition) -> Result<Self> {
        if pu_used > chain.capacity() {
            return Err(Error::InvalidParameter {
                name: "initial_occupancy",
                reason: format!("{pu_used} exceeds capacity {}", chain.capacity()),
            });
        }
        Ok(SpectrumBand {
            id,
            chain,
            pu_used,
            disposition,
        })
    }

    pub fn capacity(&self) -> u32 {
        self.chain.capacity()
    }

    pub fn chain(&self) -> &OccupancyChain {
        &self.chain
    }

    pub fn pu_used(&self) -> u32 {
        self.pu_used
    }

    pub fn free(&self) -> u32 {
        self.capacity() - self.pu_used
    }

    /// Advances occupancy by one chain step. Consumes exactly one draw.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let u: f64 = rng.gen();
        let up = self.chain.up(self.pu_used);
        let down = self.chain.down(self.pu_used);
        if u < up {
            self.pu_used += 1;
        } else if u < up + down {
            self.pu_used -= 1;
        }
    }

    /// Noise-free snapshot of the band at `step`.
    pub fn sense(&self, step: u64) -> SensingReport {
        SensingReport {
            band_id: self.id,
            capacity: self.capacity(),
            pu_used: self.pu_used,
            free: self.free(),
            step,
        }
    }

    /// The PU gives up `g` of the channels it is using.
    pub fn grant_channels(&mut self, g: u32) -> Result<()> {
        if g > self.pu_used {
            return Err(Error::GrantExceedsUsage {
                requested: g,
                in_use: self.pu_used,
            });
        }
        self.pu_used -= g;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensingReport {
    pub band_id: BandId,
    pub capacity: u32,
    pub pu_used: u32,
    pub free: u32,
    pub step: u64,
}
