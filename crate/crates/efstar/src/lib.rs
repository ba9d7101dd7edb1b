//! Static perfect-fluid stars with linear equation of state p = k^2 rho,
//! their generalized Eddington-Finkelstein form, annular velocity
//! perturbations of the initial data, and machine verification of the
//! no-trapped-surface and dv-a sign-pattern properties.
//!
//! The crate is organized along the pipeline:
//!
//! - [`fluid`]: equation-of-state data, deficit angle, singular coefficient
//! - [`tov`]: outward integration of the static structure equations
//! - [`asymptotics`]: tail fits (a-limit, b-growth exponent, density tail)
//! - [`ef`]: transformation to (a, b, M, V) and the integral-constraint check
//! - [`perturb`]: the (r*, delta, h)-perturbed initial data and dv-a grids
//! - [`theorem`]: threshold/band constants and clause-by-clause verification
//! - [`sweep`], [`fits`]: parameter sweeps, bisection, scaling-exponent fits
//! - [`oracle`]: independent reference computations used by tests
//! - [`io`], [`svg`], [`config`]: file formats, plots, CLI configuration

pub mod asymptotics;
pub mod config;
pub mod ef;
pub mod error;
pub mod fits;
pub mod fluid;
pub mod grid;
pub mod io;
pub mod oracle;
pub mod perturb;
pub mod quad;
pub mod svg;
pub mod sweep;
pub mod theorem;
pub mod tov;

pub use asymptotics::{fit_asymptotics, AsymptoticsReport};
pub use ef::{static_constraint_residual, EfStaticFields, KernelForm};
pub use error::{Error, Result};
pub use fluid::{deficit_angle, singular_density_coefficient, FluidModel};
pub use grid::{GridSpec, RadialGrid};
pub use perturb::{build_initial_data, check_no_trapped, InitialDataSet, Perturbation};
pub use theorem::{theorem_constants, verify_theorem, TheoremConstants, TheoremReport};
pub use tov::{solve_static, StaticProfile};
