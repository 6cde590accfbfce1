use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::lattice::DyadicSystem;
use crate::space::MetricMeasureSpace;
use crate::wavelets::WaveletBasis;

/// The three square-function norms of one coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormTriple {
    /// `‖(Σ |a|² |ψ|²)^{1/2}‖_{L¹}`.
    pub iii: f64,
    /// `‖(Σ |a|² χ_Q / μ(Q))^{1/2}‖_{L¹}`.
    pub iv: f64,
    /// `‖(Σ |a|² χ_W / μ(Q))^{1/2}‖_{L¹}`.
    pub v: f64,
}

impl NormTriple {
    pub fn new(
        space: &MetricMeasureSpace,
        basis: &WaveletBasis,
        cubes: &DyadicSystem,
        a: &[f64],
    ) -> Self {
        Self {
            iii: norm_iii(space, basis, a),
            iv: norm_iv(space, basis, cubes, a),
            v: norm_v(space, basis, a),
        }
    }
}

fn l1_of_root(space: &MetricMeasureSpace, squares: &[f64]) -> f64 {
    squares
        .iter()
        .zip(space.weights())
        .map(|(s, w)| w * s.sqrt())
        .sum()
}

/// Wavelet coefficients only; the coarse part is not part of any of the norms.
pub fn norm_iii(space: &MetricMeasureSpace, basis: &WaveletBasis, a: &[f64]) -> f64 {
    let mut sq = vec![0.0; space.len()];
    for (i, &c) in a.iter().enumerate() {
        if c != 0.0 {
            for (s, v) in sq.iter_mut().zip(basis.wavelet(i)) {
                *s += c * c * v * v;
            }
        }
    }
    l1_of_root(space, &sq)
}

pub fn norm_iv(
    space: &MetricMeasureSpace,
    basis: &WaveletBasis,
    cubes: &DyadicSystem,
    a: &[f64],
) -> f64 {
    let mut sq = vec![0.0; space.len()];
    for (w, &c) in basis.index().iter().zip(a) {
        if c != 0.0 {
            for &x in cubes.members(w.k, w.alpha) {
                sq[x] += c * c / w.cube_mass;
            }
        }
    }
    l1_of_root(space, &sq)
}

/// `φ = (Σ |a|² χ_W / μ(Q))^{1/2}` pointwise. Each point's sum is scaled by
/// its largest term so that tiny coefficients do not underflow to zero.
pub fn phi(space: &MetricMeasureSpace, basis: &WaveletBasis, a: &[f64]) -> Vec<f64> {
    let terms = || {
        basis
            .index()
            .iter()
            .zip(a)
            .enumerate()
            .filter(|(_, (_, &c))| c != 0.0)
            .map(|(i, (w, &c))| (i, c.abs() / w.cube_mass.sqrt()))
    };
    let mut top = vec![0.0f64; space.len()];
    for (i, t) in terms() {
        for &x in basis.core(i) {
            top[x] = top[x].max(t);
        }
    }
    let mut sq = vec![0.0; space.len()];
    for (i, t) in terms() {
        for &x in basis.core(i) {
            let r = t / top[x];
            sq[x] += r * r;
        }
    }
    sq.iter()
        .zip(&top)
        .map(|(s, m)| if *m > 0.0 { m * s.sqrt() } else { 0.0 })
        .collect()
}

pub fn norm_v(space: &MetricMeasureSpace, basis: &WaveletBasis, a: &[f64]) -> f64 {
    space.integrate(&phi(space, basis, a))
}
