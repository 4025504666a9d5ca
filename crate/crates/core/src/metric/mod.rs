//! Finite metric spaces, Cayley balls, coset spaces and set-map families.

pub mod family;
pub mod group;
pub mod quotient;
pub mod space;

pub use family::{Component, SetMapFamily};
pub use group::{cayley_ball, Elem, GroupBall, GroupModel, GroupSpec};
pub use quotient::{quotient_space, CosetSpace, Subgroup, SubgroupSpec};
pub use space::{FiniteMetricSpace, MetricCheck, SpaceJson};
