//! Orthonormal wavelets built from the refinable splines.
//!
//! For each level `k` the new splines `ŝ^{k+1}_β / √μ^{k+1}_β` with
//! `β ∈ G_k` are projected onto the orthogonal complement of `V_k` and then
//! orthonormalized symmetrically with the inverse square root of their Gram
//! matrix. An orthonormal basis of the coarsest space completes the system.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::lattice::DyadicSystem;
use crate::linalg::{self, InvSqrtMethod};
use crate::par;
use crate::rng;
use crate::space::{MetricMeasureSpace, PointId};
use crate::splines::{self, SplineSystem};

/// Relative eigenvalue floor below which a Gram matrix counts as singular.
pub const SINGULAR_RATIO: f64 = 1e-10;
/// Default tolerance for inverse square roots.
pub const INV_SQRT_TOL: f64 = 1e-10;
/// Largest `j` tried in the core-radius search `ε₀ = 2^{-j}`.
pub const MAX_CORE_EXPONENT: u32 = 30;
/// `|ψ|·√μ(Q)` at or below this is treated as vanishing.
pub const LOWER_FLOOR: f64 = 1e-10;
/// Values below this fraction of the largest profile value are numerical zeros.
pub const NUMERICAL_ZERO: f64 = 1e-13;

/// Where a wavelet sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletIndex {
    pub k: i32,
    /// Label of the parent cube `Q^k_α`.
    pub alpha: usize,
    /// Position of the new net point in `net(k + 1)`.
    pub beta: usize,
    /// `y^k_β = x^{k+1}_β`.
    pub center: PointId,
    /// `μ(Q^k_α)`.
    pub cube_mass: f64,
    /// `μ^{k+1}_β = V(y^k_β, δ^{k+1})`.
    pub mu_center: f64,
    /// `V(y^k_β, δ^k)`.
    pub volume_scale: f64,
}

/// Spectral data of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub k: i32,
    /// Range of this level's wavelets in the flat index.
    pub start: usize,
    pub count: usize,
    /// Spectrum of the projected Gram matrix.
    pub min_eig: f64,
    pub max_eig: f64,
    /// `max |M̃ − Y W Yᵀ|`: how far the projected Gram is from the unprojected one.
    pub discrepancy: f64,
    /// Ill-conditioned level left out of the basis.
    pub excluded: bool,
}

/// Lower-bound search outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport {
    pub eps0: f64,
    pub j: u32,
    /// `min |ψ(x)|·√μ(Q^k_α)` over all core balls.
    pub c_lower: f64,
    /// Range of `V(y, ε₀δ^k)/μ(Q^k_α)`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `min |ψ(y)|·√μ^{k+1}_β` at the centers.
    pub c_center: f64,
    /// `max μ(Q^k_α)/μ(W^k_{α,β})`.
    pub c2: f64,
    /// `c_lower` for every tried `j` (with `None` where containment fails).
    pub trace: Vec<(u32, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    delta: f64,
    k_min: i32,
    k_max: i32,
    weights: Vec<f64>,
    coarse: Vec<Vec<f64>>,
    rows: Vec<Vec<f64>>,
    index: Vec<WaveletIndex>,
    levels: Vec<LevelReport>,
    grams: Vec<DMatrix<f64>>,
    core: Vec<Vec<PointId>>,
    lower: Option<LowerBoundReport>,
}

impl WaveletBasis {
    /// Assembles a basis from stored values (used when loading from disk).
    pub fn from_parts(
        delta: f64,
        k_min: i32,
        k_max: i32,
        weights: Vec<f64>,
        coarse: Vec<Vec<f64>>,
        rows: Vec<Vec<f64>>,
        index: Vec<WaveletIndex>,
        levels: Vec<LevelReport>,
    ) -> Result<Self> {
        let n = weights.len();
        if rows.len() != index.len() {
            return Err(Error::DimensionMismatch {
                expected: index.len(),
                got: rows.len(),
            });
        }
        if let Some(r) = coarse.iter().chain(&rows).find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
        Ok(Self {
            delta,
            k_min,
            k_max,
            weights,
            coarse,
            rows,
            index,
            levels,
            grams: Vec::new(),
            core: Vec::new(),
            lower: None,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    pub fn n_points(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of wavelets.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn scale(&self, k: i32) -> f64 {
        self.delta.powi(k)
    }

    /// Orthonormal basis of the coarsest spline space.
    pub fn coarse(&self) -> &[Vec<f64>] {
        &self.coarse
    }

    pub fn wavelet(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn wavelets(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn index(&self) -> &[WaveletIndex] {
        &self.index
    }

    pub fn levels(&self) -> &[LevelReport] {
        &self.levels
    }

    /// Projected Gram matrix `M̃` of each level (empty for loaded bases).
    pub fn grams(&self) -> &[DMatrix<f64>] {
        &self.grams
    }

    /// Restores the projected Gram matrices of a loaded basis, one per level.
    pub fn set_grams(&mut self, grams: Vec<DMatrix<f64>>) -> Result<()> {
        if grams.len() != self.levels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.levels.len(),
                got: grams.len(),
            });
        }
        self.grams = grams;
        Ok(())
    }

    /// Runs the lower-bound search and attaches its core balls.
    pub fn attach_lower_bound(
        &mut self,
        space: &MetricMeasureSpace,
        cubes: &DyadicSystem,
    ) -> Result<()> {
        let report = verify_lower_bound(space, self, cubes)?;
        self.attach_core(space, report.eps0);
        self.lower = Some(report);
        Ok(())
    }

    /// Whether some level was left out.
    pub fn flagged(&self) -> bool {
        self.levels.iter().any(|l| l.excluded)
    }

    /// `ε₀` from the lower-bound search.
    pub fn eps0(&self) -> Option<f64> {
        self.lower.as_ref().map(|l| l.eps0)
    }

    pub fn lower_bound(&self) -> Option<&LowerBoundReport> {
        self.lower.as_ref()
    }

    /// Points of the core ball `W^k_{α,β}` of wavelet `i`.
    pub fn core(&self, i: usize) -> &[PointId] {
        &self.core[i]
    }

    /// Replaces the core balls, e.g. to shrink them in experiments.
    pub fn set_core(&mut self, core: Vec<Vec<PointId>>) -> Result<()> {
        if core.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.len(),
                got: core.len(),
            });
        }
        self.core = core;
        Ok(())
    }

    /// Attaches core balls `B(y^k_β, ε₀ δ^k)`.
    pub fn attach_core(&mut self, space: &MetricMeasureSpace, eps0: f64) {
        self.core = self
            .index
            .iter()
            .map(|w| space.ball(w.center, eps0 * self.scale(w.k)).collect())
            .collect();
    }

    fn weighted_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| x * y * w)
            .sum()
    }
}

/// Coefficients in a [`WaveletBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    /// Coefficients against the coarse functions.
    pub coarse: Vec<f64>,
    /// Coefficients against the wavelets, in flat-index order.
    pub wavelet: Vec<f64>,
}

impl CoefficientField {
    pub fn zeros(basis: &WaveletBasis) -> Self {
        Self {
            coarse: vec![0.0; basis.coarse.len()],
            wavelet: vec![0.0; basis.len()],
        }
    }

    /// `Σ |c|²` over wavelet and coarse terms.
    pub fn energy(&self) -> f64 {
        self.coarse.iter().chain(&self.wavelet).map(|c| c * c).sum()
    }

    /// `Σ |c|²` over the coarse terms only.
    pub fn coarse_energy(&self) -> f64 {
        self.coarse.iter().map(|c| c * c).sum()
    }

    /// Flat indices with nonzero wavelet coefficients.
    pub fn support(&self) -> Vec<usize> {
        (0..self.wavelet.len())
            .filter(|&i| self.wavelet[i] != 0.0)
            .collect()
    }
}

/// Gram matrix of the level-`k` splines, normalized by `√(μ_α μ_β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramData {
    pub k: i32,
    pub matrix: DMatrix<f64>,
    pub min_eig: f64,
    pub max_eig: f64,
    pub singular: bool,
}

pub fn gram(space: &MetricMeasureSpace, splines: &SplineSystem, k: i32) -> GramData {
    let v = normalized_rows(splines.values(k), splines.mu(k));
    let matrix = linalg::weighted_gram(&v, space.weights());
    spectral(k, matrix)
}

fn spectral(k: i32, matrix: DMatrix<f64>) -> GramData {
    let (min_eig, max_eig) = linalg::spectral_range(&matrix);
    let singular = !(min_eig > SINGULAR_RATIO * max_eig);
    GramData {
        k,
        matrix,
        min_eig,
        max_eig,
        singular,
    }
}

fn normalized_rows(values: &DMatrix<f64>, mu: &[f64]) -> DMatrix<f64> {
    let mut v = values.clone();
    for (a, &m) in mu.iter().enumerate() {
        v.row_mut(a).scale_mut(1.0 / m.sqrt());
    }
    v
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| linalg::row_vec(m, i)).collect()
}

struct LevelOutput {
    report: LevelReport,
    gram: DMatrix<f64>,
    rows: DMatrix<f64>,
    index: Vec<WaveletIndex>,
}

/// Builds the wavelet basis and attaches the core balls found by
/// [`verify_lower_bound`].
///
/// The finest net must be the whole cloud. Levels whose projected Gram matrix
/// is numerically singular are reported and left out.
pub fn build_wavelets(
    space: &MetricMeasureSpace,
    splines: &SplineSystem,
    cubes: &DyadicSystem,
) -> Result<WaveletBasis> {
    let n = space.len();
    let finest = splines.centers(splines.k_max()).len();
    if finest != n {
        return Err(Error::IncompleteFinestLevel {
            net: finest,
            points: n,
        });
    }
    if cubes.k_min() != splines.k_min() || cubes.k_max() != splines.k_max() {
        return Err(Error::InvalidParameter(
            "cube system and splines cover different levels".into(),
        ));
    }
    let refinements = splines::refinement_coefficients(space, splines)?;
    let nested = splines::nested_closure(splines, &refinements);
    let w = space.weights();

    let coarse_v = normalized_rows(&nested[0], splines.mu(splines.k_min()));
    let coarse_gram = linalg::weighted_gram(&coarse_v, w);
    let mut coarse = linalg::inv_sqrt(&coarse_gram, InvSqrtMethod::Eig, INV_SQRT_TOL)? * &coarse_v;
    fix_signs(&mut coarse);

    let transitions: Vec<i32> = (splines.k_min()..splines.k_max()).collect();
    let outputs = par::map_indexed(transitions.len(), |i| -> Result<LevelOutput> {
        let k = transitions[i];
        let fine_centers = splines.centers(k + 1);
        let coarse_centers = splines.centers(k);
        let new: Vec<usize> = (0..fine_centers.len())
            .filter(|&b| coarse_centers.binary_search(&fine_centers[b]).is_err())
            .collect();
        let mu_fine = splines.mu(k + 1);
        let v = normalized_rows(&nested[i], splines.mu(k));
        let y = DMatrix::from_fn(new.len(), n, |r, x| {
            nested[i + 1][(new[r], x)] / mu_fine[new[r]].sqrt()
        });
        let gram_v = linalg::weighted_gram(&v, w);
        let cross = linalg::scale_columns(&v, w) * y.transpose();
        let coef = linalg::spd_solve(&gram_v, &cross)?;
        let qy = &y - coef.transpose() * &v;
        let m_tilde = linalg::weighted_gram(&qy, w);
        let unprojected = linalg::weighted_gram(&y, w);
        let discrepancy = (&m_tilde - &unprojected)
            .iter()
            .fold(0.0, |m: f64, v| m.max(v.abs()));
        let data = spectral(k, m_tilde);
        let excluded = new.is_empty() || data.singular;
        let rows = if excluded && !new.is_empty() {
            DMatrix::zeros(0, n)
        } else {
            let mut psi = linalg::inv_sqrt(&data.matrix, InvSqrtMethod::Eig, INV_SQRT_TOL)? * &qy;
            fix_signs(&mut psi);
            psi
        };
        let index = if excluded && !new.is_empty() {
            Vec::new()
        } else {
            new.iter()
                .map(|&b| {
                    let center = fine_centers[b];
                    let alpha = cubes.parent(k, b);
                    WaveletIndex {
                        k,
                        alpha,
                        beta: b,
                        center,
                        cube_mass: cubes.mass(k, alpha),
                        mu_center: mu_fine[b],
                        volume_scale: space.volume_unchecked(center, splines.scale(k)),
                    }
                })
                .collect()
        };
        let report = LevelReport {
            k,
            start: 0,
            count: index.len(),
            min_eig: data.min_eig,
            max_eig: data.max_eig,
            discrepancy,
            excluded: excluded && !new.is_empty(),
        };
        Ok(LevelOutput {
            report,
            gram: data.matrix,
            rows,
            index,
        })
    });

    let mut rows = Vec::new();
    let mut index = Vec::new();
    let mut levels = Vec::new();
    let mut grams = Vec::new();
    for out in outputs {
        let mut out = out?;
        out.report.start = index.len();
        rows.extend(rows_of(&out.rows));
        index.extend(out.index);
        levels.push(out.report);
        grams.push(out.gram);
    }
    let mut basis = WaveletBasis {
        delta: splines.delta(),
        k_min: splines.k_min(),
        k_max: splines.k_max(),
        weights: w.to_vec(),
        coarse: rows_of(&coarse),
        rows,
        index,
        levels,
        grams,
        core: Vec::new(),
        lower: None,
    };
    if !basis.is_empty() {
        let report = verify_lower_bound(space, &basis, cubes)?;
        basis.attach_core(space, report.eps0);
        basis.lower = Some(report);
    }
    Ok(basis)
}

fn fix_signs(m: &mut DMatrix<f64>) {
    for i in 0..m.nrows() {
        let scale = m.row(i).iter().fold(0.0, |a: f64, v| a.max(v.abs()));
        let first = m.row(i).iter().copied().find(|v| v.abs() > 1e-12 * scale);
        if matches!(first, Some(v) if v < 0.0) {
            m.row_mut(i).neg_mut();
        }
    }
}

/// Weighted inner products with every basis function.
pub fn analyze(basis: &WaveletBasis, f: &[f64]) -> Result<CoefficientField> {
    if f.len() != basis.n_points() {
        return Err(Error::DimensionMismatch {
            expected: basis.n_points(),
            got: f.len(),
        });
    }
    let coarse = basis
        .coarse
        .iter()
        .map(|c| basis.weighted_dot(c, f))
        .collect();
    let wavelet = par::map_indexed(basis.len(), |i| basis.weighted_dot(&basis.rows[i], f));
    Ok(CoefficientField { coarse, wavelet })
}

/// `Σ c ψ` including the coarse terms.
pub fn synthesize(basis: &WaveletBasis, coeffs: &CoefficientField) -> Result<Vec<f64>> {
    if coeffs.wavelet.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: coeffs.wavelet.len(),
        });
    }
    if coeffs.coarse.len() != basis.coarse.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.coarse.len(),
            got: coeffs.coarse.len(),
        });
    }
    let mut out = vec![0.0; basis.n_points()];
    for (c, row) in coeffs
        .coarse
        .iter()
        .zip(&basis.coarse)
        .chain(coeffs.wavelet.iter().zip(&basis.rows))
    {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(row) {
                *o += c * v;
            }
        }
    }
    Ok(out)
}

/// `Σ c ψ` over the wavelet terms only.
pub fn synthesize_wavelets(basis: &WaveletBasis, coefficients: &[f64]) -> Result<Vec<f64>> {
    let field = CoefficientField {
        coarse: vec![0.0; basis.coarse.len()],
        wavelet: coefficients.to_vec(),
    };
    synthesize(basis, &field)
}

/// Exactness diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactnessReport {
    /// `max |⟨φ_i, φ_j⟩ − δ_ij|` over wavelets and coarse functions.
    pub orthonormality: f64,
    /// `max_ψ |∫ ψ dμ|`.
    pub cancellation: f64,
    /// `max |⟨ψ^k, v⟩|` over wavelets at level `k` and unit-normalized
    /// nested splines `v` of level `k`.
    pub cross_level: f64,
    /// `Σ_k |G_k| + dim V_{k_min}`.
    pub dimension: usize,
    pub points: usize,
}

pub fn exactness(
    space: &MetricMeasureSpace,
    splines: &SplineSystem,
    basis: &WaveletBasis,
) -> Result<ExactnessReport> {
    let all: Vec<&Vec<f64>> = basis.coarse.iter().chain(&basis.rows).collect();
    let m = all.len();
    let worst_rows = par::map_indexed(m, |i| {
        let mut worst: f64 = 0.0;
        for j in i..m {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((basis.weighted_dot(all[i], all[j]) - want).abs());
        }
        worst
    });
    let orthonormality = worst_rows.into_iter().fold(0.0, f64::max);
    let cancellation = basis
        .rows
        .iter()
        .map(|r| space.integrate(r).abs())
        .fold(0.0, f64::max);
    let refinements = splines::refinement_coefficients(space, splines)?;
    let nested = splines::nested_closure(splines, &refinements);
    let mut cross_level: f64 = 0.0;
    for level in &basis.levels {
        let v = &nested[splines.level_index(level.k)];
        let vrows = rows_of(v);
        for i in level.start..level.start + level.count {
            for vr in &vrows {
                let norm = basis.weighted_dot(vr, vr).sqrt();
                cross_level =
                    cross_level.max((basis.weighted_dot(&basis.rows[i], vr) / norm).abs());
            }
        }
    }
    Ok(ExactnessReport {
        orthonormality,
        cancellation,
        cross_level,
        dimension: basis.len() + basis.coarse.len(),
        points: space.len(),
    })
}

/// Largest search exponent for which containment and positivity hold.
pub fn verify_lower_bound(
    space: &MetricMeasureSpace,
    basis: &WaveletBasis,
    cubes: &DyadicSystem,
) -> Result<LowerBoundReport> {
    let mut trace = Vec::new();
    let mut found: Option<(u32, f64)> = None;
    for j in 0..=MAX_CORE_EXPONENT {
        let eps = 0.5f64.powi(j as i32);
        let c = core_minimum(space, basis, cubes, eps);
        trace.push((j, c));
        if found.is_none() {
            if let Some(c) = c {
                if c > LOWER_FLOOR {
                    found = Some((j, c));
                }
            }
        }
    }
    let (j, c_lower) = found.ok_or(Error::NoCoreRadius {
        max_j: MAX_CORE_EXPONENT,
    })?;
    let eps0 = 0.5f64.powi(j as i32);
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max: f64 = 0.0;
    let mut c_center = f64::INFINITY;
    let mut c2: f64 = 0.0;
    for (i, w) in basis.index.iter().enumerate() {
        let core = space.volume_unchecked(w.center, eps0 * basis.scale(w.k));
        let ratio = core / w.cube_mass;
        ratio_min = ratio_min.min(ratio);
        ratio_max = ratio_max.max(ratio);
        c2 = c2.max(w.cube_mass / core);
        c_center = c_center.min(basis.rows[i][w.center].abs() * w.mu_center.sqrt());
    }
    Ok(LowerBoundReport {
        eps0,
        j,
        c_lower,
        ratio_min,
        ratio_max,
        c_center,
        c2,
        trace,
    })
}

/// `min |ψ|·√μ(Q)` over all core balls of radius `eps·δ^k`, or `None` if some
/// core ball leaves its cube.
fn core_minimum(
    space: &MetricMeasureSpace,
    basis: &WaveletBasis,
    cubes: &DyadicSystem,
    eps: f64,
) -> Option<f64> {
    let mut worst = f64::INFINITY;
    for (i, w) in basis.index.iter().enumerate() {
        let norm = w.cube_mass.sqrt();
        for x in space.ball(w.center, eps * basis.scale(w.k)) {
            if cubes.cube_of(w.k, x) != w.alpha {
                return None;
            }
            worst = worst.min(basis.rows[i][x].abs() * norm);
        }
    }
    Some(worst)
}

/// Hölder fit of the wavelets of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderLevel {
    pub k: i32,
    pub pairs: usize,
    pub eta_est: Option<f64>,
    pub c_est: Option<f64>,
}

impl DecayReport {
    /// Smallest fitted Hölder exponent over levels with enough pairs.
    pub fn eta_min(&self) -> Option<f64> {
        self.holder
            .iter()
            .filter(|h| h.pairs >= splines::MIN_REGULARITY_PAIRS)
            .filter_map(|h| h.eta_est)
            .reduce(f64::min)
    }
}

/// Exponential envelope of the normalized wavelet profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub c_fit: f64,
    pub nu_fit: f64,
    /// Samples above the envelope times 1.05.
    pub violations: usize,
    pub samples: usize,
    /// Largest profile value at a wavelet's own center.
    pub center_max: f64,
    /// Per-level difference-quotient fits over pairs with `d ≤ δ^k`.
    pub holder: Vec<HolderLevel>,
}

pub const DECAY_BIN: f64 = 0.5;
pub const ENVELOPE_SLACK: f64 = 1.05;

/// Fits `|ψ(x)|·√V(y, δ^k) ≤ C e^{-ν d(y, x)/δ^k}`.
///
/// `ν` is minus the slope of a least-squares line through the logarithm of
/// the largest profile value in each distance bin; `C` is then the smallest
/// constant dominating every sample. Values below a relative floor are
/// numerical zeros and take no part.
pub fn verify_decay(space: &MetricMeasureSpace, basis: &WaveletBasis) -> DecayReport {
    let profile = |i: usize, x: PointId| -> (f64, f64) {
        let w = &basis.index[i];
        let t = space.dist(w.center, x) / basis.scale(w.k);
        (t, basis.rows[i][x].abs() * w.volume_scale.sqrt())
    };
    let n = space.len();
    let mut global_max: f64 = 0.0;
    let mut center_max: f64 = 0.0;
    for i in 0..basis.len() {
        for x in 0..n {
            global_max = global_max.max(profile(i, x).1);
        }
        center_max = center_max.max(profile(i, basis.index[i].center).1);
    }
    let floor = NUMERICAL_ZERO * global_max;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut samples = 0;
    for i in 0..basis.len() {
        for x in 0..n {
            let (t, p) = profile(i, x);
            if p <= floor {
                continue;
            }
            samples += 1;
            let b = (t / DECAY_BIN) as usize;
            if bins.len() <= b {
                bins.resize(b + 1, (0.0, 0.0));
            }
            if p > bins[b].1 {
                bins[b] = (t, p);
            }
        }
    }
    let pts: Vec<(f64, f64)> = bins.into_iter().filter(|b| b.1 > 0.0).collect();
    let xs: Vec<f64> = pts.iter().map(|b| b.0).collect();
    let ys: Vec<f64> = pts.iter().map(|b| b.1.ln()).collect();
    let nu_fit = linalg::linear_fit(&xs, &ys).map_or(0.0, |(slope, _)| -slope);
    let mut c_fit: f64 = 0.0;
    for i in 0..basis.len() {
        for x in 0..n {
            let (t, p) = profile(i, x);
            if p > floor {
                c_fit = c_fit.max(p * (nu_fit * t).exp());
            }
        }
    }
    let mut violations = 0;
    for i in 0..basis.len() {
        for x in 0..n {
            let (t, p) = profile(i, x);
            if p > floor && p > ENVELOPE_SLACK * c_fit * (-nu_fit * t).exp() {
                violations += 1;
            }
        }
    }
    let holder = basis
        .levels
        .iter()
        .filter(|l| l.count > 0)
        .map(|l| {
            let (eta_est, c_est, pairs) =
                holder_fit(space, basis, l.start..l.start + l.count, floor);
            HolderLevel {
                k: l.k,
                pairs,
                eta_est,
                c_est,
            }
        })
        .collect();
    DecayReport {
        c_fit,
        nu_fit,
        violations,
        samples,
        center_max,
        holder,
    }
}

/// Streaming regression of `log(|ψ(x) − ψ(x')|·√V(y, δ^k))` on
/// `log(d(x, x')/δ^k)` over pairs with `0 < d ≤ δ^k`.
fn holder_fit(
    space: &MetricMeasureSpace,
    basis: &WaveletBasis,
    range: core::ops::Range<usize>,
    floor: f64,
) -> (Option<f64>, Option<f64>, usize) {
    let visit = |i: usize, f: &mut dyn FnMut(f64, f64)| {
        let w = &basis.index[i];
        let scale = basis.scale(w.k);
        let norm = w.volume_scale.sqrt();
        let row = &basis.rows[i];
        for x in 0..space.len() {
            let order = space.order_from(x);
            let sorted = space.sorted_from(x);
            for (&y, &d) in order.iter().zip(sorted).skip(1) {
                if d > scale {
                    break;
                }
                let y = y as usize;
                if y < x {
                    continue;
                }
                let q = (row[x] - row[y]).abs() * norm;
                if q > floor {
                    f(d / scale, q);
                }
            }
        }
    };
    let sums = par::map_indexed(range.len(), |i| {
        let mut s = [0.0f64; 5];
        visit(range.start + i, &mut |t, q| {
            let (a, b) = (t.ln(), q.ln());
            s[0] += 1.0;
            s[1] += a;
            s[2] += b;
            s[3] += a * a;
            s[4] += a * b;
        });
        s
    });
    let mut s = [0.0f64; 5];
    for part in &sums {
        for (a, b) in s.iter_mut().zip(part) {
            *a += b;
        }
    }
    let count = s[0] as usize;
    let denom = s[0] * s[3] - s[1] * s[1];
    if count < 2 || denom <= 0.0 {
        return (None, None, count);
    }
    let eta = (s[0] * s[4] - s[1] * s[2]) / denom;
    let cs = par::map_indexed(range.len(), |i| {
        let mut c: f64 = 0.0;
        visit(range.start + i, &mut |t, q| c = c.max(q * t.powf(-eta)));
        c
    });
    (Some(eta), Some(cs.into_iter().fold(0.0, f64::max)), count)
}

/// Worst disagreement between the eigendecomposition and the binomial series
/// on each level's projected Gram matrix.
pub fn neumann_cross_check(basis: &WaveletBasis, tol: f64) -> Result<Vec<(i32, f64)>> {
    let mut out = Vec::new();
    for (level, g) in basis.levels.iter().zip(&basis.grams) {
        if g.nrows() == 0 {
            continue;
        }
        let a = linalg::inv_sqrt(g, InvSqrtMethod::Eig, tol)?;
        let b = linalg::inv_sqrt(g, InvSqrtMethod::Neumann, tol)?;
        let diff = (&a - &b).iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        out.push((level.k, diff));
    }
    Ok(out)
}

/// Riesz ratios `‖Σ λ_α s^k_α‖ / (Σ |λ_α|² ν^k_α)^{1/2}` for random `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszReport {
    pub k: i32,
    pub r_min: f64,
    pub r_max: f64,
}

pub fn riesz_bounds(
    space: &MetricMeasureSpace,
    splines: &SplineSystem,
    trials: usize,
    seed: u64,
) -> Vec<RieszReport> {
    let mut out = Vec::new();
    for k in splines.k_min()..=splines.k_max() {
        let v = splines.values(k);
        let nu = splines.nu(k);
        let mut rng = rng::from_seed(rng::derive(seed, splines.level_index(k) as u64));
        let mut r_min = f64::INFINITY;
        let mut r_max: f64 = 0.0;
        for _ in 0..trials {
            let lambda: Vec<f64> = (0..v.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f: Vec<f64> = (0..space.len())
                .map(|x| (0..v.nrows()).map(|a| lambda[a] * v[(a, x)]).sum())
                .collect();
            let num = space.lq_norm(&f, 2.0);
            let den = lambda
                .iter()
                .zip(nu)
                .map(|(l, n)| l * l * n)
                .sum::<f64>()
                .sqrt();
            if den > 0.0 {
                let r = num / den;
                r_min = r_min.min(r);
                r_max = r_max.max(r);
            }
        }
        out.push(RieszReport { k, r_min, r_max });
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::lattice::{assign_parents, auto_range, build_cubes, build_nets, ParentMode};
    use crate::splines::estimate_splines;

    pub(crate) fn grid_basis(
        n: usize,
        samples: usize,
    ) -> (MetricMeasureSpace, SplineSystem, DyadicSystem, WaveletBasis) {
        let coords = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        let s = MetricMeasureSpace::from_coords(coords, vec![1.0 / n as f64; n]).unwrap();
        let (k0, k1) = auto_range(&s, 0.25).unwrap();
        let nets = build_nets(&s, 0.25, k0, k1, false).unwrap();
        let parents = assign_parents(&s, &nets, ParentMode::Nearest, 0).unwrap();
        let cubes = build_cubes(&s, &nets, &parents).unwrap();
        let sp = estimate_splines(&s, &nets, samples, 7).unwrap();
        let basis = build_wavelets(&s, &sp, &cubes).unwrap();
        (s, sp, cubes, basis)
    }

    #[test]
    fn grid_basis_is_orthonormal_and_complete() {
        let (s, sp, _, basis) = grid_basis(256, 128);
        let ex = exactness(&s, &sp, &basis).unwrap();
        assert!(ex.orthonormality <= 1e-8, "{ex:?}");
        assert!(ex.cancellation <= 1e-8);
        assert!(ex.cross_level <= 1e-8);
        assert_eq!(ex.dimension, ex.points);
        assert!(!basis.flagged());
        assert_eq!(basis.coarse().len(), 1);
    }

    #[test]
    fn round_trip_and_plancherel() {
        let (s, _, _, basis) = grid_basis(256, 64);
        let mut rng = rng::from_seed(3);
        let f: Vec<f64> = (0..s.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = analyze(&basis, &f).unwrap();
        let g = synthesize(&basis, &c).unwrap();
        let err = f
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8);
        let norm2 = s.inner(&f, &f);
        assert!((c.energy() - norm2).abs() <= 1e-8);
    }

    #[test]
    fn constants_have_only_coarse_coefficients() {
        let (s, _, _, basis) = grid_basis(128, 64);
        let c = analyze(&basis, &vec![2.5; s.len()]).unwrap();
        assert!(c.wavelet.iter().all(|v| v.abs() < 1e-10));
        assert!((c.coarse[0].abs() - 2.5).abs() < 1e-10);
    }

    #[test]
    fn wavelet_analyzes_to_one_hot() {
        let (_, _, _, basis) = grid_basis(128, 64);
        let i = basis.len() / 2;
        let c = analyze(&basis, basis.wavelet(i)).unwrap();
        for (j, v) in c.wavelet.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-10);
        }
    }

    #[test]
    fn indicator_spline_gram_is_diagonal_mass() {
        let (s, _, _, _) = grid_basis(64, 1);
        let (k0, k1) = auto_range(&s, 0.25).unwrap();
        let nets = build_nets(&s, 0.25, k0, k1, false).unwrap();
        let sp = estimate_splines(&s, &nets, 1, 0).unwrap();
        let sys = crate::lattice::sample_random_system(&s, &nets, rng::derive(0, 0)).unwrap();
        for k in nets.levels() {
            let g = gram(&s, &sp, k);
            for a in 0..g.matrix.nrows() {
                let mass = sys.mass(k, a);
                assert!((g.matrix[(a, a)] - mass / sp.mu(k)[a]).abs() < 1e-12);
                for b in 0..g.matrix.ncols() {
                    if a != b {
                        assert_eq!(g.matrix[(a, b)], 0.0);
                    }
                }
            }
            assert!(g.min_eig > 0.0);
        }
    }

    #[test]
    fn lower_bound_and_decay() {
        let (s, _, cubes, basis) = grid_basis(256, 128);
        let lb = basis.lower_bound().unwrap();
        assert!(lb.c_lower > 0.0 && lb.c_center > 0.0);
        assert!(lb.eps0 >= 0.5f64.powi(6), "{lb:?}");
        // shrinking the core ball can only raise the minimum
        let mut prev = 0.0;
        for &(_, c) in &lb.trace {
            if let Some(c) = c {
                assert!(c >= prev);
                prev = c;
            }
        }
        for (i, w) in basis.index().iter().enumerate() {
            for &x in basis.core(i) {
                assert_eq!(cubes.cube_of(w.k, x), w.alpha);
            }
        }
        let d = verify_decay(&s, &basis);
        assert!(d.nu_fit > 0.0, "{d:?}");
        assert_eq!(d.violations, 0);
        assert!(d.center_max <= d.c_fit);
        assert!(d.eta_min().unwrap() > 0.0, "{:?}", d.holder);
    }

    #[test]
    fn neumann_matches_eig_on_projected_grams() {
        let (_, _, _, basis) = grid_basis(64, 64);
        for (k, diff) in neumann_cross_check(&basis, 1e-10).unwrap() {
            assert!(diff <= 1e-7, "level {k}: {diff}");
        }
    }

    #[test]
    fn riesz_ratios_are_bounded() {
        let (s, sp, _, _) = grid_basis(128, 64);
        for r in riesz_bounds(&s, &sp, 20, 1) {
            assert!(r.r_min > 0.0 && r.r_max.is_finite() && r.r_min <= r.r_max);
        }
    }
}
