//! Frames, dressing deformations, cut-offs and residuals of the standard,
//! strict and combined hierarchies.

pub mod akns;
mod deformation;
mod frame;
mod residual;
mod sample;

pub use akns::{akns_reduce, AknsReport, Pde};
pub use deformation::{commuting_exp, exp_witness, Deformation, HierarchyKind, Target, Witness};
pub use frame::{CommutativeFrame, FrameKind};
pub use residual::{lax_residual_with, zc_residual_with};
pub use sample::symbolic_dressing;
