//! Finite-difference time-domain simulation of vocal-tract tubes.
//!
//! The crate rasterises a 1D area function onto a staggered grid, marches the
//! linear acoustic equations in time (plain 2D or with the tube depth folded
//! into the update, "2.5D"), and turns the pressure recorded near the lips
//! into a transfer function and formant estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod excitation;
pub mod solver;
pub mod analysis;
pub mod experiment;
