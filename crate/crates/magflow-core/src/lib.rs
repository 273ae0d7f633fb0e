//! Numerical laboratory for magnetic flows on closed hyperbolic surfaces.
//!
//! The surface is the genus-2 octagon quotient of the Poincaré disk, with an
//! optional group-invariant conformal perturbation of the metric and an
//! arbitrary smooth magnetic density. On its unit tangent bundle the crate
//! provides:
//!
//! - the frame fields `X`, `H`, `V` and the magnetic generator
//!   `X_lambda = X + lambda F V`, with a fixed-step integrator and
//!   conservation checks ([`flow`]);
//! - the Anosov splitting via the linearized flow, Riccati slopes and
//!   dichotomy-rate fits ([`splitting`]);
//! - adapted charts, the longitudinal return-time cocycle, its additivity
//!   and periodic-orbit obstruction, a contact-form criterion and Zygmund /
//!   Lipschitz regularity scans ([`cocycle`]);
//! - a discretized unit tangent bundle with vertical Fourier modes, the
//!   raising/lowering operators and their operator identities ([`fourier`]);
//! - closed-orbit search, orbit integrals, one-form machinery and a sparse
//!   least-squares transport solver for `X_lambda(g) = f`, together with the
//!   end-to-end rigidity experiments ([`cohomology`]).

pub mod cocycle;
pub mod cohomology;
pub mod error;
pub mod flow;
pub mod fourier;
pub mod geom;
pub mod grid;
pub mod report;
pub mod splitting;

pub use error::{MagError, Result};
pub use geom::{DiskPoint, FuchsianGroup, MobiusMap, SurfaceConfig, SurfaceModel};
