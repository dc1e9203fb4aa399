//! Poisson approximation toolkit for stretched spatial point processes.
//!
//! A point process on `R^D = R^{D1} x R^{D2}` is squeezed through the linear
//! map that stretches the first block of coordinates and compresses the
//! second. For large stretch parameters the transformed process looks like a
//! Poisson process; this crate computes explicit upper bounds on how far it
//! can be from one (in the `d2`, total-variation and bounded-Wasserstein
//! senses), simulates process classes that satisfy the required regularity /
//! orderliness / mixing conditions, and estimates the same distances
//! empirically so the bounds can be checked against simulation at desk scale.
//!
//! Module map:
//! * [`geometry`] — the coordinate transform, windows and discretization grid;
//! * [`metrics`] — exact pattern metrics (`d0`, `d1`) and empirical
//!   estimators of `d2`, `dTV`, `dBW`;
//! * [`models`] — samplers with machine-checkable condition certificates;
//! * [`stein`] — local Stein-type bounds for indicator sums and indicator
//!   point processes, with enumeration oracles;
//! * [`bounds`] — assembly of the explicit distance bounds, parameter
//!   optimization and rate exponents;
//! * [`density`] — kernel density estimation at the origin and its error
//!   bounds;
//! * [`lrdtest`] — a nearest-neighbour test for long range dependence
//!   calibrated against the Poisson null.

pub mod bounds;
pub mod density;
pub mod geometry;
pub mod lrdtest;
pub mod metrics;
pub mod models;
pub mod numeric;
pub mod rng;
pub mod stein;

mod assignment;

pub use assignment::solve_assignment;
