//! Ground states of Kirchhoff-type nonlocal elliptic equations.
//!
//! The library computes positive radial ground states of the local equation
//! `-Δu + m·u = f(u)` by shooting (with an independent finite-difference
//! Newton solver as a cross-check), lifts them to ground states of the
//! nonlocal equation `-M(‖∇u‖₂²)Δu + m·u = f(u)` through an explicit
//! dilation, and verifies the identities this construction rests on:
//! Pohozaev identities, least-energy formulas, the critical-existence
//! margins in dimensions two and three, truncation inertness, and the
//! small-`ε` concentration/decay behaviour of the semiclassical problem
//! `-ε²M(ε^{2-N}‖∇v‖₂²)Δv + V(x)v = f(v)` for radial potential wells.

// Validation guards are written `!(x > 0.0)` on purpose: the negation is
// what routes NaN parameters into the error paths.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod functionals;
pub mod groundstate;
pub mod kirchhoff_coeff;
pub mod moser2d;
pub mod nonlinearity;
pub mod radial_numerics;
pub mod rescaling;
pub mod semiclassical;

mod fdsolve;
mod ode;
mod quad;

pub use functionals::EnergyReport;
pub use groundstate::{GroundState, LocalProblem, ShootConfig, ShotOutcome};
pub use kirchhoff_coeff::{CoeffReport, KirchhoffCoeff};
pub use moser2d::{MoserProfile, MoserScan};
pub use nonlinearity::{GrowthReport, NonlinearitySpec};
pub use radial_numerics::{GridSpec, NormBundle, RadialProfile};
pub use rescaling::LiftResult;
pub use semiclassical::{PotentialSpec, SemiclassicalResult};
