//! Finite metric measure spaces: distances, quadrature weights, ball volumes
//! and an empirical profile of the doubling geometry.
//!
//! Balls are open everywhere: `B(x, r) = { y : d(x, y) < r }`.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::{par, rng};

/// Index of a cloud point.
pub type PointId = usize;

/// Relative tolerance used when checking a distance matrix for symmetry.
const SYMMETRY_TOL: f64 = 1e-12;
/// Absolute slack allowed in the triangle inequality.
pub const TRIANGLE_TOL: f64 = 1e-9;
/// Exhaustive triangle check up to this many points; random triples above.
const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 300;
const RANDOM_TRIANGLE_SAMPLES: usize = 1_000_000;

/// A finite cloud with a metric and positive point masses.
///
/// Immutable after construction. Besides the dense distance matrix it keeps,
/// for every center, the other points sorted by distance together with
/// cumulative masses, so ball volumes are a binary search.
#[derive(Debug, Clone)]
pub struct MetricMeasureSpace {
    n: usize,
    coords: Option<Vec<Vec<f64>>>,
    dist: Vec<f64>,
    weights: Vec<f64>,
    total_mass: f64,
    diameter: f64,
    min_separation: f64,
    order: Vec<u32>,
    sorted_dist: Vec<f64>,
    rank: Vec<u32>,
    cum_mass: Vec<f64>,
}

impl MetricMeasureSpace {
    /// Builds a space from a row-major `n × n` distance matrix.
    pub fn from_distance_matrix(dist: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if dist.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: dist.len(),
            });
        }
        Self::build(None, dist, weights)
    }

    /// Euclidean distances between coordinate vectors.
    pub fn from_coords(coords: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        let dim = coords[0].len();
        if let Some(bad) = coords.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let rows = par::map_indexed(n, |i| {
            (0..n)
                .map(|j| {
                    coords[i]
                        .iter()
                        .zip(&coords[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect::<Vec<_>>()
        });
        let dist = rows.concat();
        Self::build(Some(coords), dist, weights)
    }

    /// Shortest-path metric of a connected graph with positive edge lengths.
    pub fn from_graph(edges: &[(usize, usize, f64)], weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(u, v, len) in edges {
            if u >= n {
                return Err(Error::UnknownPoint(u));
            }
            if v >= n {
                return Err(Error::UnknownPoint(v));
            }
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::InvalidDistance {
                    i: u,
                    j: v,
                    reason: "edge length must be positive",
                });
            }
            adj[u].push((v, len));
            adj[v].push((u, len));
        }
        let rows = par::map_indexed(n, |s| dijkstra(&adj, s));
        for row in &rows {
            if let Some(j) = row.iter().position(|d| !d.is_finite()) {
                return Err(Error::Disconnected(j));
            }
        }
        // Shortest paths are symmetric in exact arithmetic; force it bitwise.
        let mut dist = rows.concat();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist[i * n + j].min(dist[j * n + i]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::build(None, dist, weights)
    }

    /// The snowflake `d^eps` of this space, `eps ∈ (0, 1]`.
    pub fn snowflake(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "snowflake exponent {eps} not in (0, 1]"
            )));
        }
        let dist = self.dist.iter().map(|d| d.powf(eps)).collect();
        Self::build(self.coords.clone(), dist, self.weights.clone())
    }

    fn build(coords: Option<Vec<Vec<f64>>>, mut dist: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        for (point, &weight) in weights.iter().enumerate() {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::NonPositiveWeight { point, weight });
            }
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::InvalidDistance {
                    i,
                    j: i,
                    reason: "nonzero diagonal",
                });
            }
            for j in (i + 1)..n {
                let (a, b) = (dist[i * n + j], dist[j * n + i]);
                if !a.is_finite() || !b.is_finite() || a < 0.0 || b < 0.0 {
                    return Err(Error::InvalidDistance {
                        i,
                        j,
                        reason: "negative or non-finite",
                    });
                }
                if (a - b).abs() > SYMMETRY_TOL * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::Asymmetric { i, j });
                }
                if a == 0.0 {
                    return Err(Error::InvalidDistance {
                        i,
                        j,
                        reason: "distinct points at distance zero",
                    });
                }
                let m = 0.5 * (a + b);
                dist[i * n + j] = m;
                dist[j * n + i] = m;
            }
        }
        check_triangle(n, &dist)?;

        let total_mass = weights.iter().sum();
        let mut diameter: f64 = 0.0;
        let mut min_separation = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist[i * n + j];
                diameter = diameter.max(d);
                min_separation = min_separation.min(d);
            }
        }
        if n == 1 {
            min_separation = 0.0;
        }

        let per_center = par::map_indexed(n, |c| {
            let row = &dist[c * n..(c + 1) * n];
            let mut ord: Vec<u32> = (0..n as u32).collect();
            ord.sort_by(|&a, &b| {
                row[a as usize]
                    .partial_cmp(&row[b as usize])
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
            let sorted: Vec<f64> = ord.iter().map(|&p| row[p as usize]).collect();
            let mut cum = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            cum.push(0.0);
            for &p in &ord {
                acc += weights[p as usize];
                cum.push(acc);
            }
            (ord, sorted, cum)
        });
        let mut order = Vec::with_capacity(n * n);
        let mut sorted_dist = Vec::with_capacity(n * n);
        let mut cum_mass = Vec::with_capacity(n * (n + 1));
        let mut rank = vec![0u32; n * n];
        for (c, (ord, sorted, cum)) in per_center.into_iter().enumerate() {
            for (pos, &p) in ord.iter().enumerate() {
                rank[c * n + p as usize] = pos as u32;
            }
            order.extend(ord);
            sorted_dist.extend(sorted);
            cum_mass.extend(cum);
        }

        Ok(Self {
            n,
            coords,
            dist,
            weights,
            total_mass,
            diameter,
            min_separation,
            order,
            sorted_dist,
            rank,
            cum_mass,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    #[inline]
    pub fn dist(&self, i: PointId, j: PointId) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Distances from `i` to every point, indexed by point id.
    pub fn dist_row(&self, i: PointId) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    /// Row-major distance matrix.
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    #[inline]
    pub fn weight(&self, i: PointId) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Smallest distance between distinct points (0 for a single point).
    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    /// `V(center, r) = μ(B(center, r))`.
    pub fn volume(&self, center: PointId, r: f64) -> Result<f64> {
        if center >= self.n {
            return Err(Error::UnknownPoint(center));
        }
        if !(r >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative radius {r}")));
        }
        Ok(self.volume_unchecked(center, r))
    }

    #[inline]
    pub(crate) fn volume_unchecked(&self, center: PointId, r: f64) -> f64 {
        self.cum_mass[center * (self.n + 1) + self.ball_len(center, r)]
    }

    /// Mass of the closed ball `{ y : d(center, y) ≤ r }`.
    pub fn closed_volume(&self, center: PointId, r: f64) -> f64 {
        let sorted = self.sorted_from(center);
        let len = sorted.partition_point(|&d| d <= r);
        self.cum_mass[center * (self.n + 1) + len]
    }

    /// Number of points in the open ball.
    #[inline]
    pub fn ball_len(&self, center: PointId, r: f64) -> usize {
        self.sorted_from(center).partition_point(|&d| d < r)
    }

    /// Points of the open ball, nearest first (ties by id).
    pub fn ball(&self, center: PointId, r: f64) -> impl Iterator<Item = PointId> + '_ {
        let len = self.ball_len(center, r);
        self.order_from(center)[..len].iter().map(|&p| p as usize)
    }

    /// All points sorted by distance from `center`, ties by id.
    pub fn order_from(&self, center: PointId) -> &[u32] {
        &self.order[center * self.n..(center + 1) * self.n]
    }

    /// Distances matching [`Self::order_from`].
    pub fn sorted_from(&self, center: PointId) -> &[f64] {
        &self.sorted_dist[center * self.n..(center + 1) * self.n]
    }

    /// Position of `point` in the distance order of `center`.
    #[inline]
    pub fn rank(&self, center: PointId, point: PointId) -> usize {
        self.rank[center * self.n + point] as usize
    }

    /// Mass of the first `len` points in the distance order of `center`.
    #[inline]
    pub fn prefix_mass(&self, center: PointId, len: usize) -> f64 {
        self.cum_mass[center * (self.n + 1) + len]
    }

    /// Weighted integral `∫ f dμ`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// `‖f‖_{L^q}` for `q ∈ [1, ∞]`.
    pub fn lq_norm(&self, f: &[f64], q: f64) -> f64 {
        if q.is_infinite() {
            return f.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        }
        let s: f64 = f
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * v.abs().powf(q))
            .sum();
        s.powf(1.0 / q)
    }

    /// `(f, g)` in `L²(μ)`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    #[derive(PartialEq)]
    struct Item(f64, usize);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Item {
        fn cmp(&self, other: &Self) -> Ordering {
            self.0
                .partial_cmp(&other.0)
                .unwrap_or(Ordering::Equal)
                .then(self.1.cmp(&other.1))
        }
    }

    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse(Item(0.0, source)));
    while let Some(Reverse(Item(d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, len) in &adj[u] {
            let nd = d + len;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse(Item(nd, v)));
            }
        }
    }
    dist
}

fn check_triangle(n: usize, dist: &[f64]) -> Result<()> {
    let check = |i: usize, j: usize, k: usize| -> Result<()> {
        let excess = dist[i * n + k] - dist[i * n + j] - dist[j * n + k];
        if excess > TRIANGLE_TOL {
            Err(Error::TriangleViolation { i, j, k, excess })
        } else {
            Ok(())
        }
    };
    if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    check(i, j, k)?;
                }
            }
        }
    } else {
        let mut rng = rng::from_seed(0x7472_6961_6e67_6c65);
        for _ in 0..RANDOM_TRIANGLE_SAMPLES {
            check(
                rng.gen_range(0..n),
                rng.gen_range(0..n),
                rng.gen_range(0..n),
            )?;
        }
    }
    Ok(())
}

/// Empirical doubling geometry of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceProfile {
    /// `max V(x, 2r) / V(x, r)` over sampled balls.
    pub c_dbl: f64,
    /// `log2 c_dbl`.
    pub n: f64,
    /// Smallest exponent `m` with `V(x, λr) ≤ c_dbl λ^m V(x, r)` on the
    /// sampled triples. An upper envelope of the true infimal exponent, never
    /// a claim of equality.
    pub n0_est: f64,
    /// Largest greedy cover of a sampled ball by half-radius balls.
    pub big_n0_est: f64,
    /// `log2 big_n0_est`.
    pub g0_est: f64,
    /// Radius range that was sampled.
    pub r_range: (f64, f64),
    pub samples: usize,
}

/// Largest dilation factor sampled by [`doubling_profile`].
pub const PROFILE_MAX_DILATION: f64 = 16.0;

/// One sampled ball `(x, r)` with a dilation `λ ∈ [1, PROFILE_MAX_DILATION]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSample {
    pub center: PointId,
    pub radius: f64,
    pub dilation: f64,
}

/// Radius range used for profiling: from 8 minimal separations (below that
/// the ratios only see lattice effects) to half the diameter.
pub fn profile_radius_range(space: &MetricMeasureSpace) -> (f64, f64) {
    let hi = 0.5 * space.diameter();
    let lo = (8.0 * space.min_separation()).min(hi);
    (lo, hi)
}

/// Seeded ball samples in the profile's radius range.
pub fn sample_balls(space: &MetricMeasureSpace, count: usize, seed: u64) -> Vec<BallSample> {
    let (lo, hi) = profile_radius_range(space);
    let mut rng = rng::from_seed(seed);
    (0..count)
        .map(|_| {
            let center = rng.gen_range(0..space.len());
            let u: f64 = rng.gen();
            let v: f64 = rng.gen();
            BallSample {
                center,
                radius: lo * (hi / lo).powf(u),
                dilation: PROFILE_MAX_DILATION.powf(v),
            }
        })
        .collect()
}

/// Profiles the doubling behaviour on `sample_count` seeded balls.
///
/// For each sample `(x, r, λ)` the whole dyadic chain `r, 2r, …, 2^{j+1} r`
/// with `2^j ≤ λ < 2^{j+1}` enters `c_dbl`, so every sampled triple obeys
/// `V(x, λr) ≤ c_dbl λ^n V(x, r)` and `n0_est ≤ n` holds exactly.
pub fn doubling_profile(
    space: &MetricMeasureSpace,
    sample_count: usize,
    seed: u64,
) -> SpaceProfile {
    let sample_count = sample_count.max(1);
    let r_range = profile_radius_range(space);
    if space.len() == 1 || space.diameter() == 0.0 {
        return SpaceProfile {
            c_dbl: 1.0,
            n: 0.0,
            n0_est: 0.0,
            big_n0_est: 1.0,
            g0_est: 0.0,
            r_range,
            samples: sample_count,
        };
    }
    let samples = sample_balls(space, sample_count, seed);
    let mut c_dbl: f64 = 1.0;
    for s in &samples {
        let steps = s.dilation.log2().floor() as i32 + 1;
        let mut r = s.radius;
        let mut v = space.volume_unchecked(s.center, r);
        for _ in 0..steps {
            let v2 = space.volume_unchecked(s.center, 2.0 * r);
            c_dbl = c_dbl.max(v2 / v);
            r *= 2.0;
            v = v2;
        }
    }
    let n = c_dbl.log2();
    let mut n0_est: f64 = 0.0;
    for s in &samples {
        if s.dilation <= 1.0 {
            continue;
        }
        let ratio = space.volume_unchecked(s.center, s.dilation * s.radius)
            / (c_dbl * space.volume_unchecked(s.center, s.radius));
        n0_est = n0_est.max(ratio.ln() / s.dilation.ln());
    }
    let mut big_n0: usize = 1;
    for s in &samples {
        big_n0 = big_n0.max(greedy_half_cover(space, s.center, s.radius));
    }
    let big_n0_est = big_n0 as f64;
    SpaceProfile {
        c_dbl,
        n,
        n0_est,
        big_n0_est,
        g0_est: big_n0_est.log2(),
        r_range,
        samples: sample_count,
    }
}

/// Size of a maximal `r/2`-separated subset of `B(x, r)`, which is a cover
/// of the ball by open `r/2`-balls.
fn greedy_half_cover(space: &MetricMeasureSpace, center: PointId, r: f64) -> usize {
    let mut chosen: Vec<PointId> = Vec::new();
    for p in space.ball(center, r) {
        if chosen.iter().all(|&c| space.dist(c, p) >= 0.5 * r) {
            chosen.push(p);
        }
    }
    chosen.len()
}
