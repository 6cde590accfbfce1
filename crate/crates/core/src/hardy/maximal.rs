use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::lattice::DyadicSystem;
use crate::space::{MetricMeasureSpace, PointId};
use crate::wavelets::WaveletBasis;

/// `M^dy f(x) = max_k` of the average of `|f|` over the level-`k` cube of `x`.
pub fn dyadic_maximal(space: &MetricMeasureSpace, cubes: &DyadicSystem, f: &[f64]) -> Vec<f64> {
    let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let mut m = vec![0.0f64; space.len()];
    for k in cubes.k_min()..=cubes.k_max() {
        for (mx, avg) in m.iter_mut().zip(cubes.cube_average(space, k, &abs)) {
            *mx = mx.max(avg);
        }
    }
    m
}

/// Length of the smallest open ball around `c` containing the point at
/// position `rank` of `c`'s distance order.
fn group_end(sorted: &[f64], rank: usize) -> usize {
    let d = sorted[rank];
    rank + sorted[rank..].partition_point(|&e| e <= d)
}

/// Uncentered ball maximal function `sup_{B ∋ x} μ(B)^{-1} ∫_B |f|`, exact:
/// every open ball is a prefix of some center's distance order ending at a
/// change of distance.
pub fn hl_maximal(space: &MetricMeasureSpace, f: &[f64]) -> Vec<f64> {
    let n = space.len();
    let mut m = vec![0.0f64; n];
    let mut suffix = vec![0.0f64; n + 1];
    for c in 0..n {
        let order = space.order_from(c);
        let sorted = space.sorted_from(c);
        let mut acc = 0.0;
        let mut avg = vec![0.0; n + 1];
        for (l, &p) in order.iter().enumerate() {
            acc += space.weight(p as usize) * f[p as usize].abs();
            avg[l + 1] = acc / space.prefix_mass(c, l + 1);
        }
        suffix[n] = avg[n];
        for l in (1..n).rev() {
            let valid = sorted[l - 1] < sorted[l];
            suffix[l] = if valid {
                suffix[l + 1].max(avg[l])
            } else {
                suffix[l + 1]
            };
        }
        for (x, mx) in m.iter_mut().enumerate() {
            *mx = mx.max(suffix[space.rank(c, x) + 1]);
        }
    }
    m
}

/// Pointwise comparison of the dyadic and ball maximal functions.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximalComparison {
    /// `max M^dy f / M f` and where it is attained.
    pub ratio: f64,
    pub argmax: PointId,
    /// Points where `M^dy f > M f`.
    pub exceed: Vec<PointId>,
}

/// Reports both directions without assuming either.
pub fn maximal_comparison(
    space: &MetricMeasureSpace,
    cubes: &DyadicSystem,
    f: &[f64],
) -> MaximalComparison {
    let dy = dyadic_maximal(space, cubes, f);
    let hl = hl_maximal(space, f);
    let mut ratio = 0.0;
    let mut argmax = 0;
    let mut exceed = Vec::new();
    for x in 0..space.len() {
        if hl[x] > 0.0 && dy[x] / hl[x] > ratio {
            ratio = dy[x] / hl[x];
            argmax = x;
        }
        if dy[x] > hl[x] * (1.0 + 1e-12) {
            exceed.push(x);
        }
    }
    MaximalComparison {
        ratio,
        argmax,
        exceed,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakTypeReport {
    /// `λ μ{M^dy f > λ} / ‖f‖₁` per threshold.
    pub ratios: Vec<(f64, f64)>,
    pub worst: f64,
}

impl WeakTypeReport {
    /// Weak type (1,1) with constant 1.
    pub fn passed(&self) -> bool {
        self.worst <= 1.0
    }
}

pub fn weak_type_check(
    space: &MetricMeasureSpace,
    cubes: &DyadicSystem,
    f: &[f64],
    lambdas: &[f64],
) -> WeakTypeReport {
    let m = dyadic_maximal(space, cubes, f);
    let l1 = space.lq_norm(f, 1.0);
    let ratios: Vec<(f64, f64)> = lambdas
        .iter()
        .map(|&l| {
            let mass: f64 = (0..space.len())
                .filter(|&x| m[x] > l)
                .map(|x| space.weight(x))
                .sum();
            (l, if l1 > 0.0 { l * mass / l1 } else { 0.0 })
        })
        .collect();
    let worst = ratios.iter().fold(0.0, |w: f64, r| w.max(r.1));
    WeakTypeReport { ratios, worst }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetReport {
    pub lambda: f64,
    /// Maximal cubes with `|f|`-average above `λ`, as `(level, label)`.
    pub cubes: Vec<(i32, usize)>,
    pub disjoint: bool,
    /// The union of the maximal cubes is exactly `{M^dy f > λ}`.
    pub exact: bool,
}

impl LevelSetReport {
    pub fn passed(&self) -> bool {
        self.disjoint && self.exact
    }
}

pub fn level_set_structure(
    space: &MetricMeasureSpace,
    cubes: &DyadicSystem,
    f: &[f64],
    lambda: f64,
) -> LevelSetReport {
    let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let n = space.len();
    let mut covered = vec![0u32; n];
    let mut taken = vec![false; n];
    let mut chosen = Vec::new();
    for k in cubes.k_min()..=cubes.k_max() {
        let avg = cubes.cube_average(space, k, &abs);
        let mut newly = Vec::new();
        for a in 0..cubes.centers(k).len() {
            let members = cubes.members(k, a);
            let Some(&first) = members.first() else {
                continue;
            };
            if avg[first] > lambda && !taken[first] {
                newly.push(a);
                for &x in members {
                    covered[x] += 1;
                }
            }
        }
        for a in newly {
            chosen.push((k, a));
            for &x in cubes.members(k, a) {
                taken[x] = true;
            }
        }
    }
    let m = dyadic_maximal(space, cubes, f);
    LevelSetReport {
        lambda,
        cubes: chosen,
        disjoint: covered.iter().all(|&c| c <= 1),
        exact: (0..n).all(|x| (covered[x] == 1) == (m[x] > lambda)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub s: f64,
    /// `min over wavelets and x ∈ Q of [M(χ_W)(x)]^{1/s}`.
    pub constant: f64,
    /// Wavelet and point attaining the minimum.
    pub worst: Option<(usize, PointId)>,
    pub empty_cores: usize,
}

/// Checks `χ_Q ≤ C [M(χ_W^s)]^{1/s}` for every wavelet and reports the best
/// `1/C`. An empty core ball gives constant 0.
pub fn maximal_domination_check(
    space: &MetricMeasureSpace,
    basis: &WaveletBasis,
    cubes: &DyadicSystem,
    s: f64,
) -> DominationReport {
    let n = space.len();
    let mut constant = f64::INFINITY;
    let mut worst = None;
    let mut empty_cores = 0;
    for (i, w) in basis.index().iter().enumerate() {
        let core = basis.core(i);
        let cube = cubes.members(w.k, w.alpha);
        if core.is_empty() {
            empty_cores += 1;
            constant = 0.0;
            worst = cube.first().map(|&x| (i, x));
            continue;
        }
        let mut best = vec![0.0f64; cube.len()];
        for c in 0..n {
            let sorted = space.sorted_from(c);
            let mut ranks: Vec<usize> = core.iter().map(|&x| space.rank(c, x)).collect();
            ranks.sort_unstable();
            // W-mass of every prefix ending at a W point's group
            let mut cum = Vec::with_capacity(ranks.len());
            let mut acc = 0.0;
            for &r in &ranks {
                acc += space.weight(space.order_from(c)[r] as usize);
                cum.push(acc);
            }
            let ends: Vec<usize> = ranks.iter().map(|&r| group_end(sorted, r)).collect();
            let mut suffix = vec![0.0f64; ranks.len() + 1];
            for t in (0..ranks.len()).rev() {
                // all W points in the group are inside the prefix
                let inside = ranks.partition_point(|&r| r < ends[t]);
                let ratio = cum[inside - 1] / space.prefix_mass(c, ends[t]);
                suffix[t] = suffix[t + 1].max(ratio);
            }
            for (b, &x) in best.iter_mut().zip(cube) {
                let l0 = group_end(sorted, space.rank(c, x));
                let inside = ranks.partition_point(|&r| r < l0);
                let base = if inside > 0 {
                    cum[inside - 1] / space.prefix_mass(c, l0)
                } else {
                    0.0
                };
                *b = b.max(base).max(suffix[inside]);
            }
        }
        for (&b, &x) in best.iter().zip(cube) {
            let v = b.powf(1.0 / s);
            if v < constant {
                constant = v;
                worst = Some((i, x));
            }
        }
    }
    DominationReport {
        s,
        constant: if constant.is_finite() { constant } else { 0.0 },
        worst,
        empty_cores,
    }
}
