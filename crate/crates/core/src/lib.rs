//! Thermal initialization fidelity of qubit registers.
//!
//! A register whose qubits are prepared in a Gibbs state at `x = βΔE` instead of the
//! ground state has fidelity `(1 + e^{-x})^{-N}` with the ideal all-ground register,
//! and no noiseless circuit can improve on it. This crate provides:
//!
//! - dense complex linear algebra ([`linalg`]) and register states ([`states`]);
//! - unitary, Kraus, depolarizing and random channels ([`channels`], [`random`]);
//! - Uhlmann / overlap fidelities, the scaling law and the initialization +
//!   preparation bounds ([`fidelity`]);
//! - an exact and a Monte-Carlo model of repeated conditional reset ([`resetsim`]);
//! - least-squares estimation of `x` and the effective temperature from
//!   fidelity-versus-size data ([`fitkit`]);
//! - randomized verification suites over all of the above ([`suites`]).
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! it to `f64`, which every tolerance in the suites assumes.

// NaN-rejecting checks are written as `!(a <= b)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod fidelity;
pub mod fitkit;
pub mod linalg;
pub mod random;
pub mod resetsim;
pub mod rng;
pub mod scalar;
pub mod states;
pub mod suites;

pub use error::{Error, Result};
pub use fitkit::{FitResult, ScalingDataset};
pub use resetsim::{ResetParams, ResetTrace};
pub use scalar::Real;

pub type C64 = num_complex::Complex<f64>;
pub type ComplexMatrix = linalg::Matrix<f64>;
pub type ComplexMatrix32 = linalg::Matrix<f32>;
pub type DensityMatrix = states::DensityMatrix<f64>;
pub type DensityMatrix32 = states::DensityMatrix<f32>;
pub type ThermalQubit = states::ThermalQubit<f64>;
pub type ProductDiagonalState = states::ProductDiagonalState<f64>;
pub type UnitaryOp = channels::UnitaryOp<f64>;
pub type KrausChannel = channels::KrausChannel<f64>;
pub type DepolarizingChannel = channels::DepolarizingChannel<f64>;
