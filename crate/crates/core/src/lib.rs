//! Thermal workbench for pouch-cell cold plates.
//!
//! The crate couples a parametric cooling-channel geometry generator with a
//! conservative finite-difference solver for the steady-state plate heat
//! equation, and trains convolutional surrogates on the resulting
//! mask/temperature pairs. Two training objectives are provided: a purely
//! data-driven MSE fit and a physics-informed composite loss whose PDE and
//! boundary terms reuse the solver's exact stencil.
//!
//! Module map:
//! - [`grid`]: grid spec, scalar fields, channel masks, physical constants
//! - [`geometry`]: parametric channel families and seeded config sampling
//! - [`fdm`]: flux-form discretization and preconditioned CG solver
//! - [`nn`]: from-scratch tensors, conv/dense layers, backprop, Adam
//! - [`loss`]: standardization, data / PDE-residual / boundary losses
//! - [`pipeline`]: dataset generation, training loops, evaluation, comparison
//! - [`io`]: binary dataset/model files, CSV and PPM exports

pub mod fdm;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod loss;
pub mod nn;
pub mod pipeline;
