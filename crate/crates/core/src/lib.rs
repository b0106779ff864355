//! Linear control systems on `G = SE(2) × S¹`.
//!
//! Bottom-up: [`algebra`] (brackets, derivations, automorphisms), [`group`]
//! (group law, exp/log, automorphisms, cover), [`fields`] (linear and
//! left-invariant fields, flows), [`larc`] (rank condition and control-set
//! classifier), [`dynamics`] (exact and RK4 propagation), [`reachability`]
//! (Monte-Carlo occupancy grids) and [`verify`] (named property suites).

pub mod algebra;
pub mod complex;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod group;
pub mod larc;
pub mod linalg;
pub mod reachability;
pub mod sampling;
pub mod verify;

pub use algebra::{AlgebraAutomorphism, AlgebraElement, CommutingMatrix, DerivationMatrix, Sign};
pub use dynamics::{ControlInput, Propagator, Segment, Trajectory};
pub use error::{LcsError, Result};
pub use fields::{InvariantField, LinearField};
pub use group::{CoverElement, GroupAutomorphism, GroupElement, GroupLaw};
pub use larc::{Category, ControlSystem, Verdict};
pub use reachability::{Direction, OccupancyGrid, ReachConfig, Window};
