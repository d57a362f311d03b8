//! Spinning vortex solitons of the 2D focusing nonlinear Schrödinger equation
//! `i u_t + Δu + |u|^{p-1}u = 0`.
//!
//! The crate computes the radial profile `φ_{ω,m}` of
//! `e^{i(mθ+ωt)}φ(r)`, compares it with the shifted 1D soliton it approaches
//! as the spin `m` grows, and studies the linearization in the azimuthal
//! sectors `e^{i(m±j)θ}`, where a long-wave transversal instability appears.

pub mod asymptotics;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod profile;
pub mod soliton;
pub mod spectral;

pub use error::{Result, VortexError};
