//! Discrete moduli of curve and surface families on weighted graphs.
//!
//! The crate models a planar metric measure space as a [`MeasureGraph`] and
//! computes
//!
//! * `Mod_p` of the curves joining two node sets and `Mod_q` of the cuts
//!   separating them ([`modsolve`]), by constraint generation over shortest
//!   path and minimum cut oracles ([`families`]);
//! * condenser potentials and capacities ([`potential`]);
//! * the curve/surface duality product ([`duality`]);
//! * modulus distortion and metric dilatation of planar maps ([`qcheck`]).
//!
//! All numerics are generic over [`Real`]; the `*64` / `*32` aliases below fix
//! the scalar.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod duality;
pub mod error;
pub mod families;
pub mod mmspace;
pub mod modsolve;
pub mod potential;
pub mod presets;
pub mod qcheck;
mod scalar;

pub use error::{Error, Result};
pub use families::{Condenser, Constraint, ConstraintKind, DensityField};
pub use mmspace::{MeasureGraph, NodeSet};
pub use modsolve::{ModulusProblem, ModulusResult, Status};
pub use potential::Potential;
pub use scalar::Real;

pub type MeasureGraph64 = MeasureGraph<f64>;
pub type MeasureGraph32 = MeasureGraph<f32>;
pub type DensityField64 = DensityField<f64>;
pub type DensityField32 = DensityField<f32>;
pub type ModulusResult64 = ModulusResult<f64>;
pub type ModulusResult32 = ModulusResult<f32>;
pub type Potential64 = Potential<f64>;
pub type DualityReport64 = duality::DualityReport<f64>;
