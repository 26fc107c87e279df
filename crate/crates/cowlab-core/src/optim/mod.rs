//! Numerical kernels shared by the attack and bound computations.

mod lp;
mod scalar;
mod sdp;

pub use lp::{solve_lp, LinearProgram, LpSolution, Sense};
pub use scalar::{find_root, maximize_1d, Root};
pub use sdp::{solve_sdp, SdpConstraint, SdpProblem, SdpSettings, SdpSolution};
