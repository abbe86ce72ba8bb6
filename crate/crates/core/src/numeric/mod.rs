//! Shared numerical kernel: deterministic random streams, special functions,
//! scalar and simplex optimizers, quadrature nodes and the halfspace
//! projection engine.

pub mod dykstra;
pub mod linalg;
pub mod neldermead;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod special;

pub use dykstra::{dykstra_project, HalfspaceSet, Projection};
pub use neldermead::{nelder_mead_min, NelderMeadResult};
pub use rng::{normal_sample, RngStream};
pub use roots::{golden_section_extremum, solve_scalar_root, Sense};
pub use special::{chi_square_cdf, erf, erfc, normal_cdf};
