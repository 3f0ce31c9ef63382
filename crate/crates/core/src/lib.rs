//! Numerical models for precision sphere-plane Casimir force experiments
//! between dissimilar metals.
//!
//! The crate is `no_std` and needs only `alloc`. It covers the whole
//! analysis chain of a dynamic torsional-oscillator measurement:
//!
//! * [`materials`]: dielectric functions on the imaginary frequency axis,
//!   from tabulated absorption data spliced onto a Drude tail.
//! * [`lifshitz`]: zero-temperature Lifshitz pressure between half-spaces,
//!   sphere-plane force and force gradient, ideal-metal closed forms.
//! * [`roughness`]: separation distributions from height maps and the
//!   roughness-averaged pressure and force.
//! * [`electrostatics`]: the exact sphere-plane electrostatic series and the
//!   calibration fit for `k`, `V0`, `R` and `delta0`.
//! * [`oscillator`]: spring constant, separation bookkeeping, resonance shift
//!   under a force gradient, and synthetic measurement sweeps.
//! * [`yukawa`]: Yukawa-type force between layered bodies and `alpha(lambda)`
//!   exclusion limits.
//!
//! Sign conventions: attractive Casimir forces and pressures are negative;
//! force gradients `dF/dz` are positive when an attractive force weakens
//! with distance; electrostatic and Yukawa forces are reported as
//! attraction magnitudes.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod constants;
pub mod electrostatics;
mod error;
pub mod interp;
pub mod lifshitz;
pub mod lsq;
pub mod materials;
pub mod oscillator;
pub mod quadrature;
pub mod roughness;
pub mod yukawa;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
