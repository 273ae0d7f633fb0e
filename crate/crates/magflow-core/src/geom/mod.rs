//! Hyperbolic base geometry: disk model, Möbius maps, the octagon group,
//! bump fields and surface models.

pub mod bump;
pub mod disk;
pub mod mobius;
pub mod octagon;
pub mod surface;

pub use bump::{BumpSpec, Jet2};
pub use disk::{hyperbolic_distance, DiskPoint};
pub use mobius::MobiusMap;
pub use octagon::{FuchsianGroup, GroupWord, Letter};
pub use surface::{Christoffel, ScalarFieldSpec, SurfaceConfig, SurfaceDiagnostics, SurfaceModel};
