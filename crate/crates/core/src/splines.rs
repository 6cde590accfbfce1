//! Monte Carlo splines `s^k_α(x) = P(x ∈ Q^k_α)` over random cube systems.
//!
//! Every draw shares one random parent chain across all levels, and the
//! estimator accumulates integer membership counts, so estimates are exact
//! rationals `count / R` independent of the order in which draws are merged.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lattice::{CandidateTable, NetHierarchy};
use crate::linalg;
use crate::par;
use crate::rng;
use crate::space::{MetricMeasureSpace, PointId};

/// Strict-mode bounds on the spline support radii, in units of `δ^k`.
pub const SPLINE_INNER: f64 = 1.0 / 8.0;
pub const SPLINE_OUTER: f64 = 8.0;

/// Draws per accumulation block.
const BLOCK: usize = 16;

/// Spline values at every level.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSystem {
    delta: f64,
    k_min: i32,
    strict: bool,
    samples: usize,
    seed: u64,
    centers: Vec<Vec<PointId>>,
    /// Row `α`, column `x`.
    values: Vec<DMatrix<f64>>,
    mu: Vec<Vec<f64>>,
    nu: Vec<Vec<f64>>,
}

impl SplineSystem {
    /// Builds a system from explicit values (one `|A_k| × N` matrix per level).
    pub fn from_values(
        space: &MetricMeasureSpace,
        nets: &NetHierarchy,
        samples: usize,
        seed: u64,
        values: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if values.len() != nets.num_levels() {
            return Err(Error::DimensionMismatch {
                expected: nets.num_levels(),
                got: values.len(),
            });
        }
        let mut centers = Vec::new();
        let mut mu = Vec::new();
        let mut nu = Vec::new();
        for (i, k) in nets.levels().enumerate() {
            let net = nets.net(k);
            let v = &values[i];
            if v.nrows() != net.len() || v.ncols() != space.len() {
                return Err(Error::DimensionMismatch {
                    expected: net.len() * space.len(),
                    got: v.len(),
                });
            }
            let scale = nets.scale(k);
            mu.push(
                net.iter()
                    .map(|&c| space.volume_unchecked(c, scale))
                    .collect(),
            );
            nu.push(
                (0..net.len())
                    .map(|a| (0..space.len()).map(|x| v[(a, x)] * space.weight(x)).sum())
                    .collect(),
            );
            centers.push(net.to_vec());
        }
        Ok(Self {
            delta: nets.delta(),
            k_min: nets.k_min(),
            strict: nets.strict(),
            samples,
            seed,
            centers,
            values,
            mu,
            nu,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_min + self.values.len() as i32 - 1
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_levels(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn level_index(&self, k: i32) -> usize {
        debug_assert!(
            k >= self.k_min && k <= self.k_max(),
            "level {k} out of range"
        );
        (k - self.k_min) as usize
    }

    pub fn scale(&self, k: i32) -> f64 {
        self.delta.powi(k)
    }

    pub fn centers(&self, k: i32) -> &[PointId] {
        &self.centers[self.level_index(k)]
    }

    /// `|A_k| × N` matrix of `s^k_α(x)`.
    pub fn values(&self, k: i32) -> &DMatrix<f64> {
        &self.values[self.level_index(k)]
    }

    #[inline]
    pub fn value(&self, k: i32, alpha: usize, x: PointId) -> f64 {
        self.values[self.level_index(k)][(alpha, x)]
    }

    /// `μ^k_α = V(x^k_α, δ^k)`.
    pub fn mu(&self, k: i32) -> &[f64] {
        &self.mu[self.level_index(k)]
    }

    /// `ν^k_α = ∫ s^k_α dμ`.
    pub fn nu(&self, k: i32) -> &[f64] {
        &self.nu[self.level_index(k)]
    }
}

/// Estimates every spline from `samples` random cube systems. Draw `r` uses
/// seed [`rng::derive`]`(seed, r)`, so it coincides with
/// `sample_random_system(space, nets, rng::derive(seed, r))`.
pub fn estimate_splines(
    space: &MetricMeasureSpace,
    nets: &NetHierarchy,
    samples: usize,
    seed: u64,
) -> Result<SplineSystem> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "at least one Monte Carlo sample is needed".into(),
        ));
    }
    let n = space.len();
    let table = CandidateTable::new(space, nets)?;
    let sizes: Vec<usize> = nets.levels().map(|k| nets.net(k).len()).collect();
    let blocks = samples.div_ceil(BLOCK);
    let partial = par::map_indexed(blocks, |b| {
        let mut counts: Vec<Vec<u32>> = sizes.iter().map(|&m| vec![0u32; m * n]).collect();
        for r in (b * BLOCK)..((b + 1) * BLOCK).min(samples) {
            let labels = table.random_assignment(rng::derive(seed, r as u64));
            for (level, row) in labels.iter().enumerate() {
                let c = &mut counts[level];
                for (x, &a) in row.iter().enumerate() {
                    c[a as usize * n + x] += 1;
                }
            }
        }
        counts
    });
    let mut totals: Vec<Vec<u32>> = sizes.iter().map(|&m| vec![0u32; m * n]).collect();
    for counts in &partial {
        for (t, c) in totals.iter_mut().zip(counts) {
            for (a, b) in t.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    let r = samples as f64;
    let values = totals
        .iter()
        .zip(&sizes)
        .map(|(c, &m)| DMatrix::from_fn(m, n, |a, x| c[a * n + x] as f64 / r))
        .collect();
    SplineSystem::from_values(space, nets, samples, seed, values)
}

/// Refinement data for the transition `k → k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub k: i32,
    /// `|A_k| × |A_{k+1}|` matrix of `p^k_{αβ}`.
    pub p: DMatrix<f64>,
    /// `‖s^k_α − Σ_β p^k_{αβ} s^{k+1}_β‖_∞`, worst over `α`.
    pub residual: f64,
    /// Whether the level-`k + 1` splines interpolate at their net points.
    pub interpolating: bool,
    /// Set when the coefficients came from the least-squares fallback.
    pub least_squares: bool,
    /// Largest `|T_{k+1}(α)| = #{β : p^k_{αβ} ≠ 0}`.
    pub max_support: usize,
    /// `Σ_α |T_{k+1}(α)|`.
    pub total_support: usize,
}

/// Largest deviation from `s^k_α(x^k_β) = δ_{αβ}` at level `k`.
pub fn interpolation_error(splines: &SplineSystem, k: i32) -> f64 {
    let v = splines.values(k);
    let centers = splines.centers(k);
    let mut worst: f64 = 0.0;
    for a in 0..centers.len() {
        for (b, &c) in centers.iter().enumerate() {
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((v[(a, c)] - want).abs());
        }
    }
    worst
}

/// `p^k_{αβ} = s^k_α(x^{k+1}_β)` for every transition, with residuals.
///
/// If the finer splines fail to interpolate, the coefficients are instead the
/// weighted least-squares fit of `s^k_α` by the level-`k + 1` splines and the
/// transition is flagged.
pub fn refinement_coefficients(
    space: &MetricMeasureSpace,
    splines: &SplineSystem,
) -> Result<Vec<Refinement>> {
    let mut out = Vec::new();
    for k in splines.k_min()..splines.k_max() {
        let coarse = splines.values(k);
        let fine = splines.values(k + 1);
        let fine_centers = splines.centers(k + 1);
        let interpolating = interpolation_error(splines, k + 1) == 0.0;
        let p = if interpolating {
            DMatrix::from_fn(coarse.nrows(), fine_centers.len(), |a, b| {
                coarse[(a, fine_centers[b])]
            })
        } else {
            let gram = linalg::weighted_gram(fine, space.weights());
            let rhs = linalg::scale_columns(fine, space.weights()) * coarse.transpose();
            linalg::spd_solve(&gram, &rhs)?.transpose()
        };
        let residual = (&p * fine - coarse)
            .iter()
            .fold(0.0, |m: f64, v| m.max(v.abs()));
        let mut max_support = 0;
        let mut total_support = 0;
        for a in 0..p.nrows() {
            let s = p.row(a).iter().filter(|v| **v != 0.0).count();
            max_support = max_support.max(s);
            total_support += s;
        }
        out.push(Refinement {
            k,
            p,
            residual,
            interpolating,
            least_squares: !interpolating,
            max_support,
            total_support,
        });
    }
    Ok(out)
}

/// Refinable closure of the splines: the finest level is kept and each coarser
/// level is rebuilt as `ŝ^k = P^k ŝ^{k+1}`. The result spans nested spaces and
/// keeps partition of unity and interpolation.
pub fn nested_closure(splines: &SplineSystem, refinements: &[Refinement]) -> Vec<DMatrix<f64>> {
    let levels = splines.num_levels();
    let mut out: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); levels];
    out[levels - 1] = splines.values(splines.k_max()).clone();
    for i in (0..levels - 1).rev() {
        out[i] = &refinements[i].p * &out[i + 1];
    }
    out
}

/// Partition-of-unity deviation `max_x |Σ_α s^k_α(x) − 1|` at level `k`.
pub fn partition_error(splines: &SplineSystem, k: i32) -> f64 {
    let v = splines.values(k);
    (0..v.ncols())
        .map(|x| (v.column(x).sum() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Measured support radii of one level, in units of `δ^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportReport {
    pub k: i32,
    /// `min_α` of the largest `r` with `s^k_α = 1` on `B(x^k_α, r δ^k)`;
    /// `None` when every spline is identically 1.
    pub r_in: Option<f64>,
    /// `max_α` of `max{d(x^k_α, x)/δ^k : s^k_α(x) > 0}`.
    pub r_out: f64,
    /// `V(x, r_in δ^k) ≤ ν^k_α ≤ μ(closed ball of radius r_out δ^k)` per `α`.
    pub nu_bracketed: bool,
    /// `0 ≤ s ≤ 1` everywhere.
    pub bounded: bool,
}

pub fn support_report(space: &MetricMeasureSpace, splines: &SplineSystem, k: i32) -> SupportReport {
    let v = splines.values(k);
    let scale = splines.scale(k);
    let mut r_in: Option<f64> = None;
    let mut r_out: f64 = 0.0;
    let mut nu_bracketed = true;
    let bounded = v.iter().all(|&s| (0.0..=1.0).contains(&s));
    for (a, &c) in splines.centers(k).iter().enumerate() {
        let mut inner = f64::INFINITY;
        let mut outer: f64 = 0.0;
        for x in 0..space.len() {
            let d = space.dist(c, x) / scale;
            if v[(a, x)] < 1.0 {
                inner = inner.min(d);
            }
            if v[(a, x)] > 0.0 {
                outer = outer.max(d);
            }
        }
        if inner.is_finite() {
            r_in = Some(r_in.map_or(inner, |r| r.min(inner)));
        }
        r_out = r_out.max(outer);
        let lo = space.volume_unchecked(c, inner.min(f64::MAX) * scale);
        let hi = space.closed_volume(c, outer * scale);
        let nu = splines.nu(k)[a];
        let slack = 1e-12 * space.total_mass();
        if nu < lo - slack || nu > hi + slack {
            nu_bracketed = false;
        }
    }
    SupportReport {
        k,
        r_in,
        r_out,
        nu_bracketed,
        bounded,
    }
}

impl SupportReport {
    /// Strict-mode sandwich `1/8`–`8`.
    pub fn strict_sandwich(&self) -> bool {
        self.r_in.is_none_or(|r| r >= SPLINE_INNER) && self.r_out < SPLINE_OUTER
    }
}

/// Hölder fit of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityLevel {
    pub k: i32,
    /// Pairs with `0 < d < δ^k` and `Δs ≠ 0`.
    pub pairs: usize,
    pub eta_est: Option<f64>,
    pub c_est: Option<f64>,
}

impl RegularityLevel {
    /// Enough pairs to make the fit meaningful.
    pub fn assessed(&self) -> bool {
        self.pairs >= MIN_REGULARITY_PAIRS
    }

    /// A fitted exponent at most this small is treated as a jump.
    pub fn regular(&self) -> bool {
        self.eta_est.is_some_and(|e| e > NON_REGULAR_ETA)
    }
}

pub const MIN_REGULARITY_PAIRS: usize = 50;
pub const NON_REGULAR_ETA: f64 = 0.05;

/// Regression of `log|s^k_α(x) − s^k_α(y)|` on `log(d(x, y)/δ^k)` over pairs
/// closer than `δ^k`; `C_est = max |Δs| (δ^k/d)^η`.
pub fn verify_spline_regularity(
    space: &MetricMeasureSpace,
    splines: &SplineSystem,
) -> Vec<RegularityLevel> {
    let levels: Vec<i32> = (splines.k_min()..=splines.k_max()).collect();
    par::map_indexed(levels.len(), |i| {
        let k = levels[i];
        let pairs = difference_pairs(
            space,
            splines.values(k),
            splines.centers(k).len(),
            splines.scale(k),
        );
        let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
        let fit = linalg::linear_fit(&xs, &ys);
        let eta_est = fit.map(|(slope, _)| slope);
        let c_est = eta_est.map(|eta| {
            pairs
                .iter()
                .map(|&(t, ds)| ds * t.powf(-eta))
                .fold(0.0, f64::max)
        });
        RegularityLevel {
            k,
            pairs: pairs.len(),
            eta_est,
            c_est,
        }
    })
}

/// `(d/δ^k, |Δs|)` over all rows and unordered pairs with `0 < d < δ^k` and
/// `Δs ≠ 0`.
pub(crate) fn difference_pairs(
    space: &MetricMeasureSpace,
    values: &DMatrix<f64>,
    rows: usize,
    scale: f64,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for a in 0..rows {
        let row: Vec<f64> = values.row(a).iter().copied().collect();
        for x in 0..space.len() {
            if row[x] == 0.0 {
                continue;
            }
            for y in space.ball(x, scale) {
                if y == x || (row[y] != 0.0 && y < x) {
                    continue;
                }
                let ds = (row[x] - row[y]).abs();
                if ds > 0.0 {
                    out.push((space.dist(x, y) / scale, ds));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{auto_range, build_nets, sample_random_system};

    fn grid(n: usize) -> MetricMeasureSpace {
        let coords = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        MetricMeasureSpace::from_coords(coords, vec![1.0 / n as f64; n]).unwrap()
    }

    fn setup(n: usize) -> (MetricMeasureSpace, NetHierarchy) {
        let s = grid(n);
        let (k0, k1) = auto_range(&s, 0.25).unwrap();
        let nets = build_nets(&s, 0.25, k0, k1, false).unwrap();
        (s, nets)
    }

    #[test]
    fn single_point_is_constant_one() {
        let s = MetricMeasureSpace::from_coords(vec![vec![0.0]], vec![1.0]).unwrap();
        let nets = build_nets(&s, 0.25, 0, 2, false).unwrap();
        let sp = estimate_splines(&s, &nets, 3, 0).unwrap();
        for k in 0..=2 {
            assert_eq!(sp.value(k, 0, 0), 1.0);
        }
    }

    #[test]
    fn one_draw_gives_indicators() {
        let (s, nets) = setup(128);
        let sp = estimate_splines(&s, &nets, 1, 4).unwrap();
        let sys = sample_random_system(&s, &nets, rng::derive(4, 0)).unwrap();
        for k in nets.levels() {
            assert_eq!(partition_error(&sp, k), 0.0);
            for x in 0..s.len() {
                for a in 0..nets.net(k).len() {
                    let want = if sys.cube_of(k, x) == a { 1.0 } else { 0.0 };
                    assert_eq!(sp.value(k, a, x), want);
                }
            }
        }
        for r in refinement_coefficients(&s, &sp).unwrap() {
            assert!(r.p.iter().all(|&v| v == 0.0 || v == 1.0));
            assert_eq!(r.residual, 0.0);
            let fine = nets.net(r.k + 1);
            for (b, &c) in fine.iter().enumerate() {
                let a = sys.cube_of(r.k, c);
                assert_eq!(r.p[(a, b)], 1.0);
            }
        }
        let reg = verify_spline_regularity(&s, &sp);
        assert!(reg.iter().filter(|l| l.assessed()).all(|l| !l.regular()));
    }

    /// Estimates are the frequency table of the same draws.
    #[test]
    fn matches_frequency_table() {
        let (s, nets) = setup(256);
        let r = 400;
        let sp = estimate_splines(&s, &nets, r, 11).unwrap();
        let mut freq: Vec<Vec<Vec<u32>>> = nets
            .levels()
            .map(|k| vec![vec![0; s.len()]; nets.net(k).len()])
            .collect();
        for i in 0..r {
            let sys = sample_random_system(&s, &nets, rng::derive(11, i as u64)).unwrap();
            for (li, k) in nets.levels().enumerate() {
                for x in 0..s.len() {
                    freq[li][sys.cube_of(k, x)][x] += 1;
                }
            }
        }
        for (li, k) in nets.levels().enumerate() {
            for a in 0..nets.net(k).len() {
                for x in 0..s.len() {
                    assert_eq!(sp.value(k, a, x), freq[li][a][x] as f64 / r as f64);
                }
            }
        }
    }

    #[test]
    fn identities_on_grid() {
        let (s, nets) = setup(1024);
        let r = 256;
        let sp = estimate_splines(&s, &nets, r, 1).unwrap();
        for k in nets.levels() {
            assert!(partition_error(&sp, k) <= 1e-12);
            assert_eq!(interpolation_error(&sp, k), 0.0);
            let sup = support_report(&s, &sp, k);
            assert!(sup.bounded && sup.nu_bracketed, "{sup:?}");
        }
        let refs = refinement_coefficients(&s, &sp).unwrap();
        for rf in &refs {
            assert!(rf.interpolating && !rf.least_squares);
            assert!(
                rf.residual <= 2.0 / (r as f64).sqrt(),
                "k = {}: {}",
                rf.k,
                rf.residual
            );
            assert!(rf.p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            for (a, &c) in nets.net(rf.k).iter().enumerate() {
                let b = nets.position(rf.k + 1, c).unwrap();
                assert_eq!(rf.p[(a, b)], 1.0);
            }
        }
        let nested = nested_closure(&sp, &refs);
        for (i, k) in nets.levels().enumerate() {
            let v = &nested[i];
            for x in 0..s.len() {
                assert!((v.column(x).sum() - 1.0).abs() < 1e-12);
            }
            for (a, &c) in nets.net(k).iter().enumerate() {
                for b in 0..v.nrows() {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((v[(b, c)] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn regularity_on_grid() {
        let (s, nets) = setup(1024);
        let sp = estimate_splines(&s, &nets, 400, 3).unwrap();
        let reg = verify_spline_regularity(&s, &sp);
        for l in &reg {
            if l.assessed() {
                let eta = l.eta_est.unwrap();
                assert!(eta > 0.3, "level {}: η = {eta}", l.k);
                assert!(l.c_est.unwrap().is_finite());
            }
        }
        assert!(reg.iter().any(|l| l.assessed()));
    }

    #[test]
    fn seeds_are_reproducible() {
        let (s, nets) = setup(128);
        let a = estimate_splines(&s, &nets, 40, 5).unwrap();
        assert_eq!(a, estimate_splines(&s, &nets, 40, 5).unwrap());
        assert_ne!(a, estimate_splines(&s, &nets, 40, 6).unwrap());
    }
}
