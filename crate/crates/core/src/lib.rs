//! Arrival-time and post-selected detection statistics for a particle
//! tunneling through a one-dimensional square barrier.
//!
//! The crate provides, in ascending order of assembly:
//!
//! * [`scattering`] — exact square-barrier amplitudes and eigenfunctions,
//!   plus a transfer-matrix oracle for piecewise-constant potentials;
//! * [`wavepacket`] — initial states and time evolution, both by momentum
//!   quadrature over exact eigenfunctions and by the narrow-band
//!   saddle-point approximation;
//! * [`probabilities`] — arrival-time densities, post-selected two-detector
//!   densities and integrated detection/non-detection probabilities in the
//!   ideal-detector limit;
//! * [`quasiclassical`] — interior phase functions, the dimensionless S(D)
//!   relation, its monotone inversion into a path x(tau), phase time and the
//!   opaque-barrier velocity asymptotics;
//! * [`wkb`] — the semiclassical counterparts, including the demonstration
//!   that the WKB path relation is not invertible.
//!
//! All operations are pure functions of value inputs and safe to call
//! concurrently. Units fix hbar = 1 throughout.

pub mod error;
pub mod numerics;
pub mod probabilities;
pub mod quasiclassical;
pub mod scattering;
pub mod wavepacket;
pub mod wkb;

pub use error::{Convergence, CoreError, Result, Warning};
pub use scattering::{BarrierParams, PiecewisePotential, ScatteringAmplitudes, Segment};
pub use wavepacket::{Envelope, MomentumGrid, WavePacketSpec};
