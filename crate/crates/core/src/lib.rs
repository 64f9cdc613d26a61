//! Arbitrary-order globally hyperbolic moment closure for the special
//! relativistic Boltzmann equation with the Anderson–Witting relaxation model.

pub mod analysis;
pub mod basis;
pub mod dd;
pub mod error;
pub mod frame_kinematics;
pub mod harmonics;
pub mod moment_assembly;
pub mod orthopoly;
pub mod quadrature;
pub mod quasi1d;
pub mod special_functions;

pub use error::{Error, Result};
