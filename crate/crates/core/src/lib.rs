//! Numerical toolkit for homogeneous Hormander vector fields.
//!
//! The crate is organised bottom-up:
//! * [`hvf`] polynomial vector fields, dilations, Lie closure and rank;
//! * [`geometry`] control distance, balls, covers and cutoffs;
//! * [`lift`] the lifting to a homogeneous group and fundamental solutions;
//! * [`kernels`] singular and smoothed kernels, the representation formula;
//! * [`analysis`] maximal functions, sharp functions and oscillation estimates;
//! * [`estimates`] grid derivatives, Sobolev norms and a-priori ratios;
//! * [`cli`] configuration, experiment orchestration and report files.

pub mod error;
pub mod hvf;
pub mod jet;
pub mod kernels;

pub use error::{Error, Result};
pub mod analysis;
pub mod bump;
pub mod cli;
pub mod estimates;
pub mod geometry;
pub mod grid;
pub mod lift;
pub mod quad;
pub mod stats;
pub mod testfn;
