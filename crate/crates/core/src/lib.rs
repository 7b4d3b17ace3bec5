//! Transient synchronization stability of a grid-forming VSG operating
//! alongside a synchronous generator.

pub mod controller;
pub mod eac;
pub mod error;
pub mod index;
pub mod model;
pub mod region;
pub mod sim;

pub use eac::{classify_first_swing, Classification, EacResult, SwingDirection};
pub use error::{Error, Result};
pub use index::{equilibria, stability_index, Equilibria};
pub use model::{reduce, BaseQuantities, LoadParams, RelativeSwingModel, SgParams, VsgParams};
pub use sim::{simulate_full, simulate_reduced, FaultScenario, StageParams, SyncState, Trajectory};
pub use controller::{design, BindingConstraint, DesignInput, DesignOutput};
pub use region::{classify_grid, trace_boundary, GridSpec, RegionBoundary, RegionGrid, RegionLabel};
