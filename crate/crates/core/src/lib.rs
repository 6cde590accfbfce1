//! Multiscale analysis on finite metric measure spaces.
//!
//! A finite weighted point cloud is treated as quadrature for a doubling
//! metric measure space. On top of it this crate builds nested nets, dyadic
//! cube systems (deterministic and randomized), Monte Carlo splines, an
//! orthonormal basis of regular wavelets, and the H¹ toolkit: atoms,
//! molecules, wavelet square-function norms, the coefficient-to-molecule
//! decomposition, maximal functions and random-sign experiments.
//!
//! The crate is `no_std` + `alloc`. Enable the `parallel` feature to run the
//! Monte Carlo loops on rayon; results are bit-identical to the sequential
//! path.
#![no_std]
#![forbid(unsafe_code)]
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

mod error;
pub mod hardy;
pub mod lattice;
pub mod linalg;
mod par;
pub mod rng;
pub mod space;
pub mod splines;
pub mod wavelets;

pub use error::{Error, Result};
pub use lattice::{
    assign_parents, build_cubes, build_nets, sample_random_system, separated_sum_check,
    verify_cube_axioms, CubeAxiomReport, DyadicSystem, NetHierarchy, ParentMap, ParentMode,
    SeparatedSumReport,
};
pub use space::{doubling_profile, MetricMeasureSpace, PointId, SpaceProfile};
pub use splines::{
    estimate_splines, refinement_coefficients, verify_spline_regularity, SplineSystem,
};
pub use wavelets::{analyze, build_wavelets, synthesize, CoefficientField, WaveletBasis};
