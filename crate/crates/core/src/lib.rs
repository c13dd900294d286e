//! Degrees-of-freedom bounds and linear interference-alignment design for
//! MIMO cellular networks with `G` cells, `K` users per cell, `M` antennas
//! per user and `N` antennas per base station.
//!
//! The crate is organised bottom-up:
//!
//! * [`network`]: network configurations and seeded generic channels.
//! * [`numerics`]: tolerance-controlled rank, nullspace and complement
//!   routines on dense complex matrices.
//! * [`bounds`]: closed-form DoF formulas and bounds in exact rationals.
//! * [`verify`]: rank-based alignment checks and receive-filter design.
//! * [`structured`]: packing-ratio beamformer construction for two-cell
//!   networks with two or three users per cell.
//! * [`usap`]: the random-coefficient linear-system design with a
//!   randomized polynomial identity test.
//! * [`sweep`]: feasibility sweeps, boundary extraction and bound curves.
//! * [`dump`]: JSON exchange formats for channels and beamformers.

pub mod bounds;
pub mod dump;
pub mod network;
pub mod numerics;
pub mod structured;
pub mod sweep;
pub mod usap;
pub mod verify;

pub use faer::c64;

/// Dense complex matrix used throughout the crate.
pub type CMat = faer::Mat<c64>;

/// Exact rational used for every DoF quantity.
pub type Rational = num_rational::Rational64;

pub use bounds::DofValue;
pub use network::{ChannelSet, DofDemand, NetworkConfig};
pub use numerics::TolerancePolicy;
pub use verify::{AlignmentReport, BeamformerSet};
