//! Matrix-free solvers for the all-at-once saddle-point system of a
//! Crank–Nicolson discretized parabolic optimal control problem.
//!
//! The Crank–Nicolson KKT system is symmetrized by a block-diagonal scaling,
//! which leaves an SPD Schur complement `K = τI + ηGGᵀ`. Two preconditioners
//! are provided for it:
//!
//! * [`MscPreconditioner`]: `P = RRᵀ`, applied by block forward/backward
//!   substitution over time (sequential in time).
//! * [`PinTPreconditioner`]: `P_α = R_αR_αᵀ`, where `R_α` replaces the dense
//!   lower-triangular Toeplitz time factor by a block α-circulant one. Its
//!   inverse is applied with FFTs along time and `N` independent complex
//!   shifted spatial solves, so the dominant work is parallel across time.
//!
//! [`pcg_solve`] drives both, and [`dense`] builds every operator as a dense
//! matrix for desk-scale verification of the spectral bounds.
//!
//! The crate is `no_std` + `alloc` with default features disabled. The `std`
//! feature adds wall-clock timing to solve reports, `parallel` fans the
//! per-frequency and per-trace work out over rayon.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dense;
mod error;
pub mod fft;
pub mod kkt;
mod math;
mod par;
pub mod pcg;
pub mod precond;
pub mod spatial;
pub mod temporal;

pub use error::{Error, Result};
pub use kkt::{
    scale_rhs, unscale_solution, ControlProblem, DiscreteRhs, Recovered, Reference, SchurOperator,
    SpaceTimeVector,
};
pub use pcg::{convergence_bound_check, pcg_solve, LinearOperator, PcgOptions, SolveReport};
pub use precond::{FactorOrder, IdentityPreconditioner, MscPreconditioner, PinTPreconditioner};
pub use spatial::{Coefficient, SpatialGrid, SpatialOperator};
pub use temporal::{
    alpha_circulant_eigs, alpha_invertibility_check, b2_inv_symbol, b_symbol, choose_alpha,
    AlphaCirculantFactor, TemporalSymbol, ToeplitzApplier,
};

pub use num_complex::Complex64;
