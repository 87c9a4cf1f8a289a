//! Transmit-power minimization for rate-splitting downlinks that share the
//! air with backscatter tags and a full-duplex sensing receiver.
#![no_std]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod ao;
pub mod beampattern;
pub mod benchmarks;
pub mod channel;
pub mod conic;
pub mod numerics;
pub mod system;
