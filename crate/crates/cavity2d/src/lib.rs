//! Time-harmonic electromagnetic scattering (TM polarization) from an empty,
//! arbitrarily shaped cavity embedded in a perfectly conducting half space.
//!
//! The scattered field is represented by single- and double-layer potentials
//! on an artificial dome over the cavity together with a non-physical double
//! layer on the ground strips and the cavity wall. The resulting boundary
//! integral system is of the second kind, discretized with a high-order
//! Nyström method on graded panel meshes, and solved either densely or with
//! a hierarchical off-diagonal low-rank (HODLR) direct factorization built
//! from adaptive cross approximation.
//!
//! Pipeline, bottom to top:
//!
//! * [`specfun`] — Bessel/Hankel functions and the free-space / half-space
//!   layer-potential kernels with their normal derivatives.
//! * [`geometry`] — piecewise-smooth scene construction (cavity presets,
//!   ground strips, artificial dome), validation and point classification.
//! * [`quadrature`] — panel meshes with dyadic corner refinement and
//!   log-singular panel quadrature blocks.
//! * [`assembly`] — the scaled Nyström system as an entry generator plus
//!   right-hand sides.
//! * [`hodlr`] — ACA compression and the recursive Sherman–Morrison–Woodbury
//!   factorization with multi-RHS solves.
//! * [`scattering`] — end-to-end drivers: density solves, field evaluation,
//!   far field, backscatter RCS, point-source validation.
//! * [`config`] / [`cli`] — batch front end used by the `cavity2d` binary.
//!
//! See the crate examples for runnable entry points into each capability.

pub mod assembly;
pub mod cli;
pub mod config;
pub mod geometry;
pub mod hodlr;
pub mod point;
pub mod quadrature;
pub mod scattering;
pub mod specfun;

pub use point::Point2;
pub use specfun::{Cplx, WaveContext};
