//! Construction and verification of time-like surfaces with zero mean
//! curvature vector in 4-dimensional neutral and Lorentzian space forms.
//!
//! The crate builds complete fundamental data (conformal factor, second
//! fundamental form coefficients, normal connection) from five explicit
//! recipes, checks the Gauss–Codazzi–Ricci system and its frame-matrix
//! formulation, integrates the moving frame to an explicit immersion, and
//! classifies each surface by curvature, normal flatness, the causal type
//! of its paracomplex quartic form, and its twistor-lift derivatives.
//!
//! Modules follow the pipeline order:
//!
//! - [`paracomplex`]: split-complex scalars and causal classification
//! - [`expr`]: the expression language for user-supplied functions
//! - [`field`]: grids, scalar fields, finite differences
//! - [`invariants`]: derived quantities, residuals, classification
//! - [`pde`]: Liouville closed forms and Goursat solvers
//! - [`constructors`]: the five data builders
//! - [`frame`]: moving-frame integration and immersion export
//! - [`config`] / [`pipeline`]: batch front door used by the CLI

pub mod config;
pub mod constructors;
pub mod expr;
pub mod field;
pub mod frame;
pub mod invariants;
pub mod paracomplex;
pub mod pde;
pub mod pipeline;

pub use expr::Expr;
pub use field::{Grid, ScalarField};
pub use invariants::{AmbientSpec, Family, FundamentalData};
pub use paracomplex::{CausalClass, Paracomplex};
