//! Nested separated nets and dyadic cube systems.
//!
//! Level `k` works at scale `δ^k`; larger `k` is finer. A net point keeps its
//! point id across levels, and cube labels are positions into the sorted net
//! of their level. Cubes are built bottom-up: every cloud point is attached to
//! a finest-level net point and inherits the parent chain above it, so the
//! levels are nested partitions by construction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;
use crate::space::{MetricMeasureSpace, PointId};

const NONE: u32 = u32::MAX;

/// Largest scale base accepted in strict mode.
pub const STRICT_DELTA_MAX: f64 = 1.0 / 96.0;
/// Inner sandwich radius (in units of `δ^k`) and forced-closest threshold.
pub const INNER_RADIUS: f64 = 1.0 / 3.0;
/// Outer sandwich radius (in units of `δ^k`).
pub const OUTER_RADIUS: f64 = 4.0;

/// Maximal `δ^k`-separated nets for `k_min ≤ k ≤ k_max`, nested upwards.
#[derive(Debug, Clone, PartialEq)]
pub struct NetHierarchy {
    delta: f64,
    k_min: i32,
    k_max: i32,
    anchor: i32,
    strict: bool,
    n_points: usize,
    levels: Vec<Vec<PointId>>,
    position: Vec<Vec<u32>>,
}

impl NetHierarchy {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    /// Level at which the greedy selection started.
    pub fn anchor(&self) -> i32 {
        self.anchor
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }

    #[inline]
    pub fn level_index(&self, k: i32) -> usize {
        debug_assert!(k >= self.k_min && k <= self.k_max, "level {k} out of range");
        (k - self.k_min) as usize
    }

    /// `δ^k`.
    #[inline]
    pub fn scale(&self, k: i32) -> f64 {
        self.delta.powi(k)
    }

    /// Net point ids at level `k`, ascending.
    pub fn net(&self, k: i32) -> &[PointId] {
        &self.levels[self.level_index(k)]
    }

    /// Position of `point` in `net(k)`, if it is a net point there.
    pub fn position(&self, k: i32, point: PointId) -> Option<usize> {
        match self.position[self.level_index(k)][point] {
            NONE => None,
            p => Some(p as usize),
        }
    }

    /// `G_k = A_{k+1} ∖ A_k` as positions in `net(k + 1)`.
    pub fn new_points(&self, k: i32) -> Vec<usize> {
        self.net(k + 1)
            .iter()
            .enumerate()
            .filter(|(_, &p)| self.position(k, p).is_none())
            .map(|(i, _)| i)
            .collect()
    }

    /// Whether the finest net is the whole cloud.
    pub fn is_complete(&self) -> bool {
        self.net(self.k_max).len() == self.n_points
    }
}

/// Scale range `(k_min, k_max)` chosen from the geometry: the coarsest level
/// holds a single net point (`δ^{k_min} > diam`) and the finest is the first
/// one at which every point is a net point (`δ^{k_max} ≤` minimal separation).
pub fn auto_range(space: &MetricMeasureSpace, delta: f64) -> Result<(i32, i32)> {
    check_delta(delta)?;
    let diam = space.diameter();
    if space.len() == 1 || diam == 0.0 {
        return Ok((0, 0));
    }
    // largest k with δ^k > diam
    let mut k_min = 0;
    if delta.powi(k_min) > diam {
        while delta.powi(k_min + 1) > diam {
            k_min += 1;
        }
    } else {
        while delta.powi(k_min) <= diam {
            k_min -= 1;
        }
    }
    let sep = space.min_separation();
    let mut k_max = k_min;
    while delta.powi(k_max) > sep {
        k_max += 1;
    }
    Ok((k_min, k_max))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "scale base δ = {delta} not in (0, 1)"
        )))
    }
}

/// Greedy nested nets.
///
/// At the anchor level (0, clamped into the range) points are taken in
/// descending weight order, ties by id. Finer levels extend the net above them
/// in the same order; coarser levels are maximal separated subsets of the net
/// below them.
pub fn build_nets(
    space: &MetricMeasureSpace,
    delta: f64,
    k_min: i32,
    k_max: i32,
    strict: bool,
) -> Result<NetHierarchy> {
    check_delta(delta)?;
    if space.is_empty() {
        return Err(Error::EmptySpace);
    }
    if k_min > k_max {
        return Err(Error::InvalidParameter(format!(
            "k_min {k_min} > k_max {k_max}"
        )));
    }
    if strict && delta > STRICT_DELTA_MAX {
        return Err(Error::InvalidParameter(format!(
            "strict mode needs δ ≤ 1/96, got {delta}"
        )));
    }
    let n = space.len();
    let mut priority: Vec<PointId> = (0..n).collect();
    priority.sort_by(|&a, &b| {
        space
            .weight(b)
            .partial_cmp(&space.weight(a))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let rank_of = {
        let mut r = vec![0usize; n];
        for (i, &p) in priority.iter().enumerate() {
            r[p] = i;
        }
        r
    };

    let anchor = 0.clamp(k_min, k_max);
    let count = (k_max - k_min + 1) as usize;
    let mut levels: Vec<Vec<PointId>> = vec![Vec::new(); count];

    let extend = |seed: &[PointId], candidates: &[PointId], sep: f64| -> Vec<PointId> {
        let mut chosen: Vec<PointId> = seed.to_vec();
        for &p in candidates {
            if chosen.contains(&p) {
                continue;
            }
            if chosen.iter().all(|&c| space.dist(c, p) >= sep) {
                chosen.push(p);
            }
        }
        chosen
    };

    let ai = (anchor - k_min) as usize;
    levels[ai] = extend(&[], &priority, delta.powi(anchor));
    for k in (anchor + 1)..=k_max {
        let i = (k - k_min) as usize;
        levels[i] = extend(&levels[i - 1], &priority, delta.powi(k));
    }
    for k in (k_min..anchor).rev() {
        let i = (k - k_min) as usize;
        let mut finer = levels[i + 1].clone();
        finer.sort_by_key(|&p| rank_of[p]);
        levels[i] = extend(&[], &finer, delta.powi(k));
    }

    let mut position = Vec::with_capacity(count);
    for net in &mut levels {
        net.sort_unstable();
        let mut pos = vec![NONE; n];
        for (i, &p) in net.iter().enumerate() {
            pos[p] = i as u32;
        }
        position.push(pos);
    }
    Ok(NetHierarchy {
        delta,
        k_min,
        k_max,
        anchor,
        strict,
        n_points: n,
        levels,
        position,
    })
}

/// How a net point picks its parent one level up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParentMode {
    /// Closest eligible parent, ties by smallest id.
    Nearest,
    /// Uniform among eligible parents, with the forced-closest rule.
    Random,
}

/// Parent of every `(k + 1, β)` as a position in `net(k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParentMap {
    up: Vec<Vec<u32>>,
}

impl ParentMap {
    /// Parent position at level `k` of position `beta` at level `k + 1`;
    /// `transition` is `k - k_min`.
    #[inline]
    pub fn parent(&self, transition: usize, beta: usize) -> usize {
        self.up[transition][beta] as usize
    }

    /// Raw parent table for the transition `k → k + 1`.
    pub fn transition(&self, transition: usize) -> &[u32] {
        &self.up[transition]
    }

    pub fn from_tables(up: Vec<Vec<u32>>) -> Self {
        Self { up }
    }
}

/// Candidate parents of one net point.
#[derive(Debug, Clone)]
struct Candidates {
    eligible: Vec<u32>,
    forced: Option<u32>,
    nearest: u32,
}

/// Eligible parents per transition and eligible finest-level cubes per cloud
/// point. Computed once and shared by all random draws.
#[derive(Debug, Clone)]
pub struct CandidateTable {
    transitions: Vec<Vec<Candidates>>,
    finest: Vec<Candidates>,
}

fn candidates_for(
    space: &MetricMeasureSpace,
    point: PointId,
    net: &[PointId],
    scale: f64,
    own: Option<usize>,
) -> Option<Candidates> {
    if let Some(p) = own {
        return Some(Candidates {
            eligible: vec![p as u32],
            forced: Some(p as u32),
            nearest: p as u32,
        });
    }
    let mut eligible = Vec::new();
    let mut forced = None;
    let mut nearest: Option<(f64, u32)> = None;
    for (a, &x) in net.iter().enumerate() {
        let d = space.dist(point, x);
        if d < 2.0 * scale {
            eligible.push(a as u32);
            if d < INNER_RADIUS * scale {
                forced = Some(a as u32);
            }
            if nearest.is_none_or(|(best, _)| d < best) {
                nearest = Some((d, a as u32));
            }
        }
    }
    nearest.map(|(_, a)| Candidates {
        eligible,
        forced,
        nearest: a,
    })
}

impl CandidateTable {
    pub fn new(space: &MetricMeasureSpace, nets: &NetHierarchy) -> Result<Self> {
        let mut transitions = Vec::new();
        for k in nets.k_min()..nets.k_max() {
            let coarse = nets.net(k);
            let scale = nets.scale(k);
            let mut row = Vec::with_capacity(nets.net(k + 1).len());
            for &b in nets.net(k + 1) {
                let c = candidates_for(space, b, coarse, scale, nets.position(k, b)).ok_or(
                    Error::NoEligibleParent {
                        level: k + 1,
                        point: b,
                    },
                )?;
                row.push(c);
            }
            transitions.push(row);
        }
        let k = nets.k_max();
        let finest_net = nets.net(k);
        let scale = nets.scale(k);
        let mut finest = Vec::with_capacity(space.len());
        for x in 0..space.len() {
            let c = candidates_for(space, x, finest_net, scale, nets.position(k, x))
                .ok_or(Error::NoEligibleParent { level: k, point: x })?;
            finest.push(c);
        }
        Ok(Self {
            transitions,
            finest,
        })
    }

    fn pick(c: &Candidates, mode: ParentMode, rng: &mut rng::Rng) -> u32 {
        match mode {
            ParentMode::Nearest => c.nearest,
            ParentMode::Random => match c.forced {
                Some(f) => f,
                None => c.eligible[rng.gen_range(0..c.eligible.len())],
            },
        }
    }

    fn parents(&self, mode: ParentMode, rng: &mut rng::Rng) -> ParentMap {
        let up = self
            .transitions
            .iter()
            .map(|row| row.iter().map(|c| Self::pick(c, mode, rng)).collect())
            .collect();
        ParentMap { up }
    }

    fn finest(&self, mode: ParentMode, rng: &mut rng::Rng) -> Vec<u32> {
        self.finest
            .iter()
            .map(|c| Self::pick(c, mode, rng))
            .collect()
    }

    /// Cube labels of one random draw, level by level (index `k - k_min`).
    pub fn random_assignment(&self, seed: u64) -> Vec<Vec<u32>> {
        let mut rng = rng::from_seed(seed);
        let parents = self.parents(ParentMode::Random, &mut rng);
        let finest = self.finest(ParentMode::Random, &mut rng);
        propagate(&parents, finest)
    }
}

fn propagate(parents: &ParentMap, finest: Vec<u32>) -> Vec<Vec<u32>> {
    let mut levels = vec![finest];
    for t in (0..parents.up.len()).rev() {
        let below = levels.last().expect("nonempty");
        let up = &parents.up[t];
        let row = below.iter().map(|&b| up[b as usize]).collect();
        levels.push(row);
    }
    levels.reverse();
    levels
}

/// Assigns a parent to every net point below the coarsest level.
///
/// A point that persists from level `k` is its own parent. Otherwise the
/// parent is a level-`k` net point within `2δ^k`; in random mode one within
/// `δ^k/3` is forced.
pub fn assign_parents(
    space: &MetricMeasureSpace,
    nets: &NetHierarchy,
    mode: ParentMode,
    seed: u64,
) -> Result<ParentMap> {
    let table = CandidateTable::new(space, nets)?;
    let mut rng = rng::from_seed(seed);
    Ok(table.parents(mode, &mut rng))
}

/// How a cube system was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Deterministic,
    Random { seed: u64 },
}

/// A nested family of partitions `{Q^k_α}` of the cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicSystem {
    delta: f64,
    k_min: i32,
    k_max: i32,
    strict: bool,
    kind: SystemKind,
    centers: Vec<Vec<PointId>>,
    cube_of: Vec<Vec<u32>>,
    parents: ParentMap,
    masses: Vec<Vec<f64>>,
    members: Vec<Vec<Vec<PointId>>>,
    children: Vec<Vec<Vec<u32>>>,
}

impl DyadicSystem {
    /// Assembles a system from raw tables (used when loading from disk).
    pub fn from_parts(
        space: &MetricMeasureSpace,
        delta: f64,
        k_min: i32,
        strict: bool,
        kind: SystemKind,
        centers: Vec<Vec<PointId>>,
        cube_of: Vec<Vec<u32>>,
        parents: ParentMap,
    ) -> Result<Self> {
        let levels = centers.len();
        if levels == 0 || cube_of.len() != levels || parents.up.len() + 1 != levels {
            return Err(Error::InvalidParameter("inconsistent level counts".into()));
        }
        for (i, row) in cube_of.iter().enumerate() {
            if row.len() != space.len() {
                return Err(Error::DimensionMismatch {
                    expected: space.len(),
                    got: row.len(),
                });
            }
            if row.iter().any(|&a| a as usize >= centers[i].len()) {
                return Err(Error::InvalidParameter(format!(
                    "cube label out of range at level index {i}"
                )));
            }
        }
        for (t, up) in parents.up.iter().enumerate() {
            if up.len() != centers[t + 1].len()
                || up.iter().any(|&a| a as usize >= centers[t].len())
            {
                return Err(Error::InvalidParameter(format!(
                    "bad parent table at transition {t}"
                )));
            }
        }
        let k_max = k_min + levels as i32 - 1;
        let mut masses = Vec::with_capacity(levels);
        let mut members = Vec::with_capacity(levels);
        for (i, row) in cube_of.iter().enumerate() {
            let mut m = vec![0.0; centers[i].len()];
            let mut mem = vec![Vec::new(); centers[i].len()];
            for (x, &a) in row.iter().enumerate() {
                m[a as usize] += space.weight(x);
                mem[a as usize].push(x);
            }
            masses.push(m);
            members.push(mem);
        }
        let mut children = Vec::with_capacity(levels - 1);
        for (t, up) in parents.up.iter().enumerate() {
            let mut ch = vec![Vec::new(); centers[t].len()];
            for (b, &a) in up.iter().enumerate() {
                ch[a as usize].push(b as u32);
            }
            children.push(ch);
        }
        Ok(Self {
            delta,
            k_min,
            k_max,
            strict,
            kind,
            centers,
            cube_of,
            parents,
            masses,
            members,
            children,
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

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn num_levels(&self) -> usize {
        self.centers.len()
    }

    #[inline]
    pub fn level_index(&self, k: i32) -> usize {
        debug_assert!(k >= self.k_min && k <= self.k_max, "level {k} out of range");
        (k - self.k_min) as usize
    }

    #[inline]
    pub fn scale(&self, k: i32) -> f64 {
        self.delta.powi(k)
    }

    /// Center ids `x^k_α`, indexed by cube label.
    pub fn centers(&self, k: i32) -> &[PointId] {
        &self.centers[self.level_index(k)]
    }

    /// Label of the level-`k` cube containing `x`.
    #[inline]
    pub fn cube_of(&self, k: i32, x: PointId) -> usize {
        self.cube_of[self.level_index(k)][x] as usize
    }

    /// Per-point cube labels at level `k`.
    pub fn labels(&self, k: i32) -> &[u32] {
        &self.cube_of[self.level_index(k)]
    }

    pub fn parents(&self) -> &ParentMap {
        &self.parents
    }

    /// Parent label at level `k` of the level-`k + 1` cube `beta`.
    #[inline]
    pub fn parent(&self, k: i32, beta: usize) -> usize {
        self.parents.parent(self.level_index(k), beta)
    }

    /// `μ(Q^k_α)`.
    #[inline]
    pub fn mass(&self, k: i32, alpha: usize) -> f64 {
        self.masses[self.level_index(k)][alpha]
    }

    /// Points of `Q^k_α`, ascending.
    pub fn members(&self, k: i32, alpha: usize) -> &[PointId] {
        &self.members[self.level_index(k)][alpha]
    }

    /// `L(k, α)` as labels at level `k + 1`.
    pub fn children(&self, k: i32, alpha: usize) -> &[u32] {
        &self.children[self.level_index(k)][alpha]
    }

    /// Label at level `to ≤ from` of the ancestor of cube `(from, label)`.
    pub fn ancestor(&self, from: i32, mut label: usize, to: i32) -> usize {
        let mut k = from;
        while k > to {
            label = self.parent(k - 1, label);
            k -= 1;
        }
        label
    }

    /// Whether `Q^j_β ⊆ Q^k_α`.
    pub fn cube_contains(&self, k: i32, alpha: usize, j: i32, beta: usize) -> bool {
        j >= k && self.ancestor(j, beta, k) == alpha
    }

    /// Average of `f` over the level-`k` cube of each point.
    pub fn cube_average(&self, space: &MetricMeasureSpace, k: i32, f: &[f64]) -> Vec<f64> {
        let i = self.level_index(k);
        let mut sums = vec![0.0; self.centers[i].len()];
        for (x, &a) in self.cube_of[i].iter().enumerate() {
            sums[a as usize] += space.weight(x) * f[x];
        }
        self.cube_of[i]
            .iter()
            .map(|&a| sums[a as usize] / self.masses[i][a as usize])
            .collect()
    }
}

fn assemble(
    space: &MetricMeasureSpace,
    nets: &NetHierarchy,
    kind: SystemKind,
    parents: ParentMap,
    finest: Vec<u32>,
) -> DyadicSystem {
    let cube_of = propagate(&parents, finest);
    DyadicSystem::from_parts(
        space,
        nets.delta(),
        nets.k_min(),
        nets.strict(),
        kind,
        nets.levels.clone(),
        cube_of,
        parents,
    )
    .expect("tables built from a valid hierarchy")
}

/// Deterministic cube system: every point joins its nearest finest-level net
/// point (ties by id) and coarser cubes follow the parent map.
pub fn build_cubes(
    space: &MetricMeasureSpace,
    nets: &NetHierarchy,
    parents: &ParentMap,
) -> Result<DyadicSystem> {
    if parents.up.len() + 1 != nets.num_levels() {
        return Err(Error::InvalidParameter(
            "parent map does not match the hierarchy".into(),
        ));
    }
    let table = CandidateTable::new(space, nets)?;
    let mut rng = rng::from_seed(0);
    let finest = table.finest(ParentMode::Nearest, &mut rng);
    Ok(assemble(
        space,
        nets,
        SystemKind::Deterministic,
        parents.clone(),
        finest,
    ))
}

/// One draw of the randomized cube system. Parents and the finest-level
/// assignment are uniform among eligible net points; a net point closer than
/// `δ^k/3` is forced.
pub fn sample_random_system(
    space: &MetricMeasureSpace,
    nets: &NetHierarchy,
    seed: u64,
) -> Result<DyadicSystem> {
    let table = CandidateTable::new(space, nets)?;
    let mut rng = rng::from_seed(seed);
    let parents = table.parents(ParentMode::Random, &mut rng);
    let finest = table.finest(ParentMode::Random, &mut rng);
    Ok(assemble(
        space,
        nets,
        SystemKind::Random { seed },
        parents,
        finest,
    ))
}

/// Outcome of [`verify_cube_axioms`]. Radii are in units of `δ^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeAxiomReport {
    /// Cubes of finer levels lie inside exactly one cube of each coarser level.
    pub nested: bool,
    /// Each level is a partition with total mass equal to `μ(X)`.
    pub partition: bool,
    /// `Q^ℓ_β ⊆ Q^k_α` implies `B(x^ℓ_β, 4δ^ℓ) ⊆ B(x^k_α, 4δ^k)`.
    pub ball_nesting: bool,
    /// Every cube is the union of its children.
    pub children_union: bool,
    /// Parents lie within `2δ^k` of their children.
    pub parent_proximity: bool,
    /// Every center lies in its own cube.
    pub centers_inside: bool,
    /// Worst (smallest) inner radius over cubes that are not the whole space.
    pub inner_ratio: Option<f64>,
    /// Worst (largest) `max_{y ∈ Q} d(x, y) / δ^k`; containment in the open
    /// ball of radius `4δ^k` means `outer_ratio < 4`.
    pub outer_ratio: Option<f64>,
    /// Sandwich `1/3`–`4` verdict; only asserted in strict mode.
    pub sandwich: Option<bool>,
    pub min_children: usize,
    pub max_children: usize,
}

impl CubeAxiomReport {
    /// All exact axioms (and the sandwich in strict mode) hold.
    pub fn passed(&self) -> bool {
        self.nested
            && self.partition
            && self.ball_nesting
            && self.children_union
            && self.parent_proximity
            && self.centers_inside
            && self.sandwich.unwrap_or(true)
    }
}

pub fn verify_cube_axioms(space: &MetricMeasureSpace, system: &DyadicSystem) -> CubeAxiomReport {
    let n = space.len();
    let mut nested = true;
    let mut partition = true;
    let mut ball_nesting = true;
    let mut children_union = true;
    let mut parent_proximity = true;
    let mut centers_inside = true;
    let mut inner: Option<f64> = None;
    let mut outer: Option<f64> = None;
    let mut min_children = usize::MAX;
    let mut max_children = 0;

    for k in system.k_min()..=system.k_max() {
        let i = system.level_index(k);
        let scale = system.scale(k);
        let labels = system.labels(k);
        let total: f64 = system.masses[i].iter().sum();
        if (total - space.total_mass()).abs() > 1e-12 * space.total_mass() || labels.len() != n {
            partition = false;
        }
        for (a, &c) in system.centers(k).iter().enumerate() {
            if labels[c] as usize != a {
                centers_inside = false;
            }
            let members = system.members(k, a);
            if members.len() < n {
                // smallest distance from the center to a point outside the cube
                let outside = (0..n)
                    .filter(|&y| labels[y] as usize != a)
                    .map(|y| space.dist(c, y))
                    .fold(f64::INFINITY, f64::min);
                let r = outside / scale;
                inner = Some(inner.map_or(r, |v: f64| v.min(r)));
            }
            let far = members
                .iter()
                .map(|&y| space.dist(c, y))
                .fold(0.0, f64::max)
                / scale;
            if !members.is_empty() {
                outer = Some(outer.map_or(far, |v: f64| v.max(far)));
            }
        }
        if k == system.k_max() {
            continue;
        }
        let fine = system.labels(k + 1);
        for x in 0..n {
            if system.parent(k, fine[x] as usize) != labels[x] as usize {
                nested = false;
            }
        }
        let finer_centers = system.centers(k + 1);
        let mut union_mass = vec![0.0; system.centers(k).len()];
        for (b, &cb) in finer_centers.iter().enumerate() {
            let a = system.parent(k, b);
            let ca = system.centers(k)[a];
            union_mass[a] += system.mass(k + 1, b);
            if !(space.dist(cb, ca) < 2.0 * scale) {
                parent_proximity = false;
            }
            let r_fine = OUTER_RADIUS * system.scale(k + 1);
            let r_coarse = OUTER_RADIUS * scale;
            if space
                .ball(cb, r_fine)
                .any(|y| !(space.dist(ca, y) < r_coarse))
            {
                ball_nesting = false;
            }
        }
        for (a, ch) in system.children[i].iter().enumerate() {
            min_children = min_children.min(ch.len());
            max_children = max_children.max(ch.len());
            let m = system.mass(k, a);
            if (union_mass[a] - m).abs() > 1e-12 * m.max(f64::MIN_POSITIVE) {
                children_union = false;
            }
        }
    }
    if min_children == usize::MAX {
        min_children = 0;
    }
    let sandwich = system
        .strict()
        .then(|| inner.is_none_or(|r| r >= INNER_RADIUS) && outer.is_none_or(|r| r < OUTER_RADIUS));
    CubeAxiomReport {
        nested,
        partition,
        ball_nesting,
        children_union,
        parent_proximity,
        centers_inside,
        inner_ratio: inner,
        outer_ratio: outer,
        sandwich,
        min_children,
        max_children,
    }
}

/// Sup of `e^{ε d(a,Ξ)/2} Σ_{b∈Ξ} e^{-ε d(a,b)}` over cloud points `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatedSumReport {
    pub sup: f64,
    pub argmax: PointId,
}

/// Evaluates the separated-set sum with `Ξ` the level-`k` net rescaled to
/// unit separation.
pub fn separated_sum_check(
    space: &MetricMeasureSpace,
    nets: &NetHierarchy,
    k: i32,
    eps: f64,
) -> Result<SeparatedSumReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ε = {eps} must be positive"
        )));
    }
    if k < nets.k_min() || k > nets.k_max() {
        return Err(Error::InvalidParameter(format!(
            "level {k} outside the hierarchy"
        )));
    }
    let scale = nets.scale(k);
    let net = nets.net(k);
    let mut best = SeparatedSumReport {
        sup: f64::NEG_INFINITY,
        argmax: 0,
    };
    for a in 0..space.len() {
        let to_net = net
            .iter()
            .map(|&b| space.dist(a, b) / scale)
            .fold(f64::INFINITY, f64::min);
        let sum: f64 = net
            .iter()
            .map(|&b| (-eps * space.dist(a, b) / scale).exp())
            .sum();
        let value = (0.5 * eps * to_net).exp() * sum;
        if value > best.sup {
            best = SeparatedSumReport {
                sup: value,
                argmax: a,
            };
        }
    }
    Ok(best)
}
