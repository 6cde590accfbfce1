use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng as _;

use super::{MEAN_TOL, ROUNDING};
use crate::error::{Error, Result};
use crate::rng;
use crate::space::{MetricMeasureSpace, PointId};

/// Open ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: PointId,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub values: Vec<f64>,
    pub ball: Ball,
    pub q: f64,
}

/// Random `(1, q)`-atom on `ball`: uniform values, mean removed on the ball,
/// scaled so that `‖a‖_q = μ(B)^{1/q − 1}`.
pub fn make_atom(space: &MetricMeasureSpace, ball: Ball, q: f64, seed: u64) -> Result<Atom> {
    if !(q > 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "atom exponent q = {q} must exceed 1"
        )));
    }
    let members: Vec<PointId> = space.ball(ball.center, ball.radius).collect();
    if members.len() < 2 {
        return Err(Error::BallTooSmall {
            needed: 2,
            found: members.len(),
        });
    }
    let mut rng = rng::from_seed(seed);
    let mut values = vec![0.0; space.len()];
    loop {
        for &x in &members {
            values[x] = rng.gen_range(-1.0..1.0);
        }
        let mass: f64 = members.iter().map(|&x| space.weight(x)).sum();
        let mean = members
            .iter()
            .map(|&x| space.weight(x) * values[x])
            .sum::<f64>()
            / mass;
        for &x in &members {
            values[x] -= mean;
        }
        let norm = space.lq_norm(&values, q);
        if norm > 0.0 {
            let target = mass.powf(1.0 / q - 1.0);
            for v in values.iter_mut() {
                *v *= target / norm;
            }
            return Ok(Atom { values, ball, q });
        }
    }
}

/// Atom on a random ball whose radius is log-uniform between a few point
/// spacings and half the diameter.
pub fn random_atom(space: &MetricMeasureSpace, q: f64, seed: u64) -> Result<Atom> {
    if space.len() < 2 {
        return Err(Error::BallTooSmall {
            needed: 2,
            found: space.len(),
        });
    }
    let mut rng = rng::from_seed(rng::derive(seed, u64::MAX));
    let center = rng.gen_range(0..space.len());
    let lo = (4.0 * space.min_separation()).min(space.diameter() / 2.0);
    let hi = space.diameter() / 2.0;
    let mut radius = (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp();
    while space.ball_len(center, radius) < 2 {
        radius *= 2.0;
    }
    make_atom(space, Ball { center, radius }, q, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomReport {
    pub support: bool,
    pub size: bool,
    pub cancellation: bool,
    pub norm: f64,
    pub bound: f64,
    pub mean: f64,
}

impl AtomReport {
    pub fn passed(&self) -> bool {
        self.support && self.size && self.cancellation
    }
}

pub fn validate_atom(space: &MetricMeasureSpace, f: &[f64], ball: Ball, q: f64) -> AtomReport {
    let support = (0..space.len()).all(|x| f[x] == 0.0 || space.dist(ball.center, x) < ball.radius);
    let mass = space.volume_unchecked(ball.center, ball.radius);
    let bound = mass.powf(1.0 / q - 1.0);
    let norm = space.lq_norm(f, q);
    let mean = space.integrate(f);
    AtomReport {
        support,
        size: mass > 0.0 && norm <= bound * (1.0 + ROUNDING),
        cancellation: mean.abs() <= MEAN_TOL,
        norm,
        bound,
        mean,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeReport {
    pub m1: bool,
    /// Annulus bounds against the supplied sequence (`true` if none given).
    pub m2: bool,
    pub m3: bool,
    /// Smallest `η_k` for which the annulus bound holds, `k = 1, 2, …` until
    /// the annuli cover the space.
    pub eta_measured: Vec<f64>,
    /// `Σ k η_k` of the measured sequence.
    pub weighted_sum: f64,
    pub norm: f64,
    pub bound: f64,
    pub mean: f64,
}

impl MoleculeReport {
    pub fn passed(&self) -> bool {
        self.m1 && self.m2 && self.m3 && self.weighted_sum.is_finite()
    }
}

/// Checks the molecule conditions for `f` centered at `ball`.
pub fn validate_molecule(
    space: &MetricMeasureSpace,
    f: &[f64],
    ball: Ball,
    q: f64,
    eta: Option<&[f64]>,
) -> MoleculeReport {
    let mass = space.volume_unchecked(ball.center, ball.radius);
    let bound = mass.powf(1.0 / q - 1.0);
    let norm = space.lq_norm(f, q);
    let mean = space.integrate(f);
    let far = space
        .sorted_from(ball.center)
        .last()
        .copied()
        .unwrap_or(0.0);
    let mut eta_measured = Vec::new();
    let mut k = 1;
    while (1u64 << (k - 1)) as f64 * ball.radius <= far {
        let inner = (1u64 << (k - 1)) as f64 * ball.radius;
        let outer = (1u64 << k) as f64 * ball.radius;
        let piece: Vec<f64> = (0..space.len())
            .map(|x| {
                let d = space.dist(ball.center, x);
                if d >= inner && d < outer {
                    f[x]
                } else {
                    0.0
                }
            })
            .collect();
        let scale = 2f64.powf(k as f64 * (1.0 / q - 1.0)) * bound;
        eta_measured.push(space.lq_norm(&piece, q) / scale);
        k += 1;
    }
    let weighted_sum = eta_measured
        .iter()
        .enumerate()
        .map(|(i, e)| (i + 1) as f64 * e)
        .sum();
    let m2 = match eta {
        None => true,
        Some(seq) => eta_measured
            .iter()
            .enumerate()
            .all(|(i, &m)| m <= seq.get(i).copied().unwrap_or(0.0) * (1.0 + ROUNDING) || m == 0.0),
    };
    MoleculeReport {
        m1: norm <= bound * (1.0 + ROUNDING),
        m2,
        m3: mean.abs() <= MEAN_TOL,
        eta_measured,
        weighted_sum,
        norm,
        bound,
        mean,
    }
}
