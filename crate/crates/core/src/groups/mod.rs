//! Group actions on finite spaces: orbits and stabilizers, the `T_k`
//! profile, families of quotient maps, and the extension pipeline.

mod action;
mod families;
mod orbits;
mod pipeline;
mod tk;

pub use action::{ActFn, ActionSpec, GroupAction};
pub use families::{action_to_se_family, finite_quotient_exact_cert, transport_coset_certs};
pub use orbits::{orbit_decomposition, OrbitData};
pub use pipeline::{extension_pipeline, Degenerate, Pipeline};
pub use tk::{compute_tk, displacement_constant, DisplacementConstant, TkProfile, Translator};
