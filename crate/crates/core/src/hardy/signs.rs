use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng as _;

use super::norms::{norm_iii, norm_v};
use crate::error::{Error, Result};
use crate::linalg::linear_fit;
use crate::rng;
use crate::space::MetricMeasureSpace;
use crate::wavelets::{analyze, synthesize_wavelets, WaveletBasis};

/// Bin width in `ln(d(x,x')/d(x,y))` for the kernel smoothness envelope.
const SMOOTH_BIN: f64 = 0.5;

/// Rademacher signs.
pub fn random_signs(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::from_seed(seed);
    (0..len)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// `T_ε f = Σ ε a ψ` over the wavelet part.
pub fn random_sign_synthesis(basis: &WaveletBasis, a: &[f64], signs: &[f64]) -> Result<Vec<f64>> {
    if a.len() != signs.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: signs.len(),
        });
    }
    let signed: Vec<f64> = a.iter().zip(signs).map(|(c, e)| c * e).collect();
    synthesize_wavelets(basis, &signed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KhintchineReport {
    pub q: f64,
    pub trials: usize,
    /// `(E|Σ λ ω|^q)^{1/q} / ‖λ‖₂` per vector.
    pub ratios: Vec<f64>,
    /// Fitted lower and upper constants.
    pub a_q: f64,
    pub b_q: f64,
}

pub fn khintchine_check(
    vectors: &[Vec<f64>],
    q: f64,
    trials: usize,
    seed: u64,
) -> KhintchineReport {
    let ratios: Vec<f64> = vectors
        .iter()
        .enumerate()
        .map(|(v, lambda)| {
            let mut rng = rng::from_seed(rng::derive(seed, v as u64));
            let norm = lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
            let mut acc = 0.0;
            for _ in 0..trials {
                let s: f64 = lambda
                    .iter()
                    .map(|l| if rng.gen::<bool>() { *l } else { -*l })
                    .sum();
                acc += s.abs().powf(q);
            }
            if norm > 0.0 {
                (acc / trials as f64).powf(1.0 / q) / norm
            } else {
                0.0
            }
        })
        .collect();
    KhintchineReport {
        q,
        trials,
        a_q: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        b_q: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignReport {
    /// `‖(Σ |a|² |ψ|²)^{1/2}‖_{L¹}`.
    pub square: f64,
    /// Largest and mean `‖T_ε f‖_{L¹}` over the draws.
    pub sign_max: f64,
    pub sign_mean: f64,
    /// Largest `|‖T_ε f‖₂ − ‖a‖₂|` over the draws.
    pub isometry: f64,
    pub trials: usize,
}

impl SignReport {
    /// `square / sign_max`.
    pub fn ratio(&self) -> f64 {
        self.square / self.sign_max
    }

    /// The square function is at most the sampled sign maximum.
    pub fn holds_unit(&self) -> bool {
        self.square <= self.sign_max
    }

    /// The square function is at most `√2` times the sampled sign mean, the
    /// bound given by the sharp `L¹` Khintchine constant.
    pub fn holds_sharp(&self) -> bool {
        self.square <= core::f64::consts::SQRT_2 * self.sign_mean
    }
}

pub fn square_function_vs_signs(
    space: &MetricMeasureSpace,
    basis: &WaveletBasis,
    a: &[f64],
    trials: usize,
    seed: u64,
) -> Result<SignReport> {
    let energy = a.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut sign_max: f64 = 0.0;
    let mut total = 0.0;
    let mut isometry: f64 = 0.0;
    for t in 0..trials {
        let eps = random_signs(a.len(), rng::derive(seed, t as u64));
        let g = random_sign_synthesis(basis, a, &eps)?;
        let l1 = space.lq_norm(&g, 1.0);
        sign_max = sign_max.max(l1);
        total += l1;
        isometry = isometry.max((space.lq_norm(&g, 2.0) - energy).abs());
    }
    Ok(SignReport {
        square: norm_iii(space, basis, a),
        sign_max,
        sign_mean: total / trials.max(1) as f64,
        isometry,
        trials,
    })
}

/// `max_ε norm_v(analyze(T_ε f)) / norm_v(a)` over sampled sign patterns.
pub fn sign_uniform_bound(
    space: &MetricMeasureSpace,
    basis: &WaveletBasis,
    a: &[f64],
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let base = norm_v(space, basis, a);
    if base == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let g = random_sign_synthesis(
            basis,
            a,
            &random_signs(a.len(), rng::derive(seed, t as u64)),
        )?;
        worst = worst.max(norm_v(space, basis, &analyze(basis, &g)?.wavelet) / base);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CzReport {
    /// Wavelets of levels `≤ cutoff` enter the kernel.
    pub cutoff: i32,
    /// `sup_{x≠y} |K(x,y)| V(x,y)`.
    pub size: f64,
    /// Envelope `|K(x,y) − K(x',y)| V(x,y) ≤ C (d(x,x')/d(x,y))^η`.
    pub smooth_c: f64,
    pub smooth_eta: Option<f64>,
    pub samples: usize,
}

/// Size and smoothness of `K(x,y) = Σ ε ψ(x) ψ(y)` over levels `≤ cutoff`,
/// with `V(x,y) = V(x, d(x,y))`.
pub fn cz_kernel_check(
    space: &MetricMeasureSpace,
    basis: &WaveletBasis,
    signs: &[f64],
    cutoff: i32,
    samples: usize,
    seed: u64,
) -> Result<CzReport> {
    if signs.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: signs.len(),
        });
    }
    let n = space.len();
    let chosen: Vec<usize> = (0..basis.len())
        .filter(|&i| basis.index()[i].k <= cutoff)
        .collect();
    let psi = DMatrix::from_fn(chosen.len(), n, |r, x| basis.wavelet(chosen[r])[x]);
    let mut scaled = psi.clone();
    for (r, &i) in chosen.iter().enumerate() {
        scaled.row_mut(r).scale_mut(signs[i]);
    }
    let kernel = psi.transpose() * scaled;
    let vol = |x: usize, y: usize| space.volume_unchecked(x, space.dist(x, y));

    let mut size: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            if x != y {
                size = size.max(kernel[(x, y)].abs() * vol(x, y));
            }
        }
    }

    let mut rng = rng::from_seed(seed);
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(samples);
    let mut attempts = 0;
    while points.len() < samples && attempts < 20 * samples && n > 2 {
        attempts += 1;
        let x = rng.gen_range(0..n);
        let y = rng.gen_range(0..n);
        if x == y {
            continue;
        }
        let d = space.dist(x, y);
        let close = space.sorted_from(x).partition_point(|&e| e <= d / 2.0);
        if close < 2 {
            continue;
        }
        let xp = space.order_from(x)[rng.gen_range(1..close)] as usize;
        let diff = (kernel[(x, y)] - kernel[(xp, y)]).abs() * vol(x, y);
        if diff > 0.0 {
            points.push(((space.dist(x, xp) / d).ln(), diff));
        }
    }

    let smooth_eta = envelope_slope(&points);
    let eta = smooth_eta.unwrap_or(0.0);
    let smooth_c = points
        .iter()
        .fold(0.0, |c: f64, &(u, p)| c.max(p * (-eta * u).exp()));
    Ok(CzReport {
        cutoff,
        size,
        smooth_c,
        smooth_eta,
        samples: points.len(),
    })
}

/// Slope of the per-bin maxima of `ln p` against `u`.
fn envelope_slope(points: &[(f64, f64)]) -> Option<f64> {
    let mut bins: Vec<(i64, f64)> = Vec::new();
    for &(u, p) in points {
        let b = (u / SMOOTH_BIN).floor() as i64;
        match bins.iter_mut().find(|e| e.0 == b) {
            Some(e) => e.1 = e.1.max(p),
            None => bins.push((b, p)),
        }
    }
    let xs: Vec<f64> = bins
        .iter()
        .map(|e| (e.0 as f64 + 0.5) * SMOOTH_BIN)
        .collect();
    let ys: Vec<f64> = bins.iter().map(|e| e.1.ln()).collect();
    linear_fit(&xs, &ys).map(|(slope, _)| slope)
}
