//! Zero-error intercept-resend attacks on coherent-one-way QKD.
//!
//! The crate computes how far an honest COW link can reach before an
//! eavesdropper running unambiguous state discrimination (USD) and a
//! block-wise resend strategy can reproduce every statistic Bob monitors.
//! Three countermeasures are modelled: coincidence monitoring, decoy
//! detection-rate monitoring and a four-state variant of the protocol.
//!
//! Modules are layered bottom-up:
//! - [`optim`]: dense LP, small SDP, bisection and 1-D maximization kernels
//! - [`params`]: experiment constants, loss channel and honest statistics
//! - [`fock`]: Fock-basis receiver simulator and closed-form pulse statistics
//! - [`usd`]: three-state, tunable and four-state USD measurements
//! - [`attack`]: block combinatorics, attack gains and the two optimizers
//! - [`bounds`]: crossing points, reach and the upper-bound rate curves

pub mod attack;
pub mod bounds;
mod error;
pub mod fock;
pub mod optim;
pub mod params;
pub mod usd;

pub use error::{Error, Result};
