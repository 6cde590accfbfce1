//! The H¹ toolkit: atoms and molecules, wavelet square-function norms, the
//! coefficient-to-molecule decomposition, dyadic and ball maximal functions,
//! and random-sign experiments.

mod atoms;
mod decompose;
mod maximal;
mod norms;
mod signs;

pub use atoms::{
    make_atom, random_atom, validate_atom, validate_molecule, Atom, AtomReport, Ball,
    MoleculeReport,
};
pub use decompose::{decompose, measured_c2, AtomicDecomposition, Piece};
pub use maximal::{
    dyadic_maximal, hl_maximal, level_set_structure, maximal_comparison, maximal_domination_check,
    weak_type_check, DominationReport, LevelSetReport, MaximalComparison, WeakTypeReport,
};
pub use norms::{norm_iii, norm_iv, norm_v, phi, NormTriple};
pub use signs::{
    cz_kernel_check, khintchine_check, random_sign_synthesis, random_signs, sign_uniform_bound,
    square_function_vs_signs, CzReport, KhintchineReport, SignReport,
};

/// Relative rounding allowance when a computed norm is compared with a bound
/// it saturates by construction.
pub const ROUNDING: f64 = 1e-12;
/// Absolute tolerance on vanishing integrals.
pub const MEAN_TOL: f64 = 1e-10;
