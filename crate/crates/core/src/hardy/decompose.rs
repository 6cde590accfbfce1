use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use super::norms::phi;
use crate::error::{Error, Result};
use crate::lattice::DyadicSystem;
use crate::space::{MetricMeasureSpace, PointId};
use crate::wavelets::WaveletBasis;

/// Molecule balls have radius `MOLECULE_RADIUS · δ^k` around the cube center.
pub const MOLECULE_RADIUS: f64 = 8.0;

/// One molecule `λ Ã` of the decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    /// Level `k` of the threshold `2^k`.
    pub threshold: i32,
    /// The maximal cube `Q^j_θ` grouping the piece.
    pub cube_level: i32,
    pub cube: usize,
    pub center: PointId,
    pub radius: f64,
    /// Flat wavelet indices in the piece.
    pub indices: Vec<usize>,
    pub lambda: f64,
    /// `Ã = A / λ` where `A = Σ a ψ` over the piece.
    pub molecule: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicDecomposition {
    pub pieces: Vec<Piece>,
    /// `C₂` used in the selection rule.
    pub c2: f64,
    /// Threshold levels scanned (inclusive).
    pub k_range: (i32, i32),
    /// `μ(Ω_k)` per scanned level.
    pub omega_mass: Vec<(i32, f64)>,
    /// `‖φ‖_{L¹}`.
    pub phi_l1: f64,
    pub lambda_sum: f64,
    /// Nonzero coefficients that fell in no piece.
    pub unassigned: Vec<usize>,
    /// `max |Σ λ Ã − Σ a ψ|`.
    pub reconstruction_error: f64,
}

impl AtomicDecomposition {
    /// `Σ λ / ‖φ‖_{L¹}`.
    pub fn ratio(&self) -> f64 {
        if self.phi_l1 > 0.0 {
            self.lambda_sum / self.phi_l1
        } else {
            0.0
        }
    }
}

/// `max μ(Q)/μ(W)` over the core balls attached to `basis`.
pub fn measured_c2(space: &MetricMeasureSpace, basis: &WaveletBasis) -> f64 {
    let mut c2: f64 = 1.0;
    for (i, w) in basis.index().iter().enumerate() {
        let core: f64 = basis.core(i).iter().map(|&x| space.weight(x)).sum();
        c2 = c2.max(if core > 0.0 {
            w.cube_mass / core
        } else {
            f64::INFINITY
        });
    }
    c2
}

/// Largest integer `k` with `2^k < v`, for `v > 0`.
fn level_below(v: f64) -> i32 {
    let mut k = v.log2().floor() as i32;
    while 2f64.powi(k) >= v {
        k -= 1;
    }
    while 2f64.powi(k + 1) < v {
        k += 1;
    }
    k
}

/// Splits `Σ a ψ` into molecules grouped under maximal dyadic cubes of the
/// level sets `Ω_k = {φ > 2^k}`.
pub fn decompose(
    space: &MetricMeasureSpace,
    basis: &WaveletBasis,
    cubes: &DyadicSystem,
    a: &[f64],
) -> Result<AtomicDecomposition> {
    if a.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: a.len(),
        });
    }
    let c2 = measured_c2(space, basis);
    if !c2.is_finite() {
        return Err(Error::InvalidParameter("a core ball is empty".into()));
    }
    let phi_vals = phi(space, basis, a);
    let phi_l1 = space.integrate(&phi_vals);
    let active: Vec<usize> = (0..a.len()).filter(|&i| a[i] != 0.0).collect();
    let index = basis.index();
    let empty = AtomicDecomposition {
        pieces: Vec::new(),
        c2,
        k_range: (0, -1),
        omega_mass: Vec::new(),
        phi_l1,
        lambda_sum: 0.0,
        unassigned: Vec::new(),
        reconstruction_error: 0.0,
    };
    if active.is_empty() {
        return Ok(empty);
    }
    let phi_max = phi_vals.iter().fold(0.0, |m: f64, v| m.max(*v));
    let k_high = level_below(phi_max);
    let k_low = active
        .iter()
        .map(|&i| level_below(a[i].abs() / index[i].cube_mass.sqrt()))
        .min()
        .unwrap_or(k_high)
        .min(k_high);

    // top[i] = largest k with i ∈ C_k
    let mut top: Vec<Option<i32>> = vec![None; a.len()];
    let mut omega_mass = Vec::new();
    for k in k_low..=k_high {
        let t = 2f64.powi(k);
        let omega: Vec<bool> = phi_vals.iter().map(|&v| v > t).collect();
        omega_mass.push((
            k,
            (0..space.len())
                .filter(|&x| omega[x])
                .map(|x| space.weight(x))
                .sum(),
        ));
        for &i in &active {
            let w = &index[i];
            let inside: f64 = cubes
                .members(w.k, w.alpha)
                .iter()
                .filter(|&&x| omega[x])
                .map(|&x| space.weight(x))
                .sum();
            if inside > w.cube_mass / (2.0 * c2) {
                top[i] = Some(k);
            }
        }
    }

    let mut pieces = Vec::new();
    for k in k_low..=k_high {
        let in_c: BTreeSet<(i32, usize)> = active
            .iter()
            .filter(|&&i| top[i].is_some_and(|t| t >= k))
            .map(|&i| (index[i].k, index[i].alpha))
            .collect();
        let mut groups: BTreeMap<(i32, usize), Vec<usize>> = BTreeMap::new();
        for &i in active.iter().filter(|&&i| top[i] == Some(k)) {
            let w = &index[i];
            let maximal = (cubes.k_min()..=w.k)
                .map(|j| (j, cubes.ancestor(w.k, w.alpha, j)))
                .find(|c| in_c.contains(c))
                .expect("a cube of C_k lies in itself");
            groups.entry(maximal).or_default().push(i);
        }
        for ((j, theta), indices) in groups {
            let center = cubes.centers(j)[theta];
            let radius = MOLECULE_RADIUS * cubes.scale(j);
            let mut values = vec![0.0; space.len()];
            let scale = indices.iter().fold(0.0, |m: f64, &i| m.max(a[i].abs()));
            let mut energy = 0.0;
            for &i in &indices {
                energy += (a[i] / scale) * (a[i] / scale);
                for (v, p) in values.iter_mut().zip(basis.wavelet(i)) {
                    *v += a[i] * p;
                }
            }
            let lambda = space.volume_unchecked(center, radius).sqrt() * scale * energy.sqrt();
            values.iter_mut().for_each(|v| *v /= lambda);
            pieces.push(Piece {
                threshold: k,
                cube_level: j,
                cube: theta,
                center,
                radius,
                indices,
                lambda,
                molecule: values,
            });
        }
    }

    let mut target = vec![0.0; space.len()];
    for &i in &active {
        for (v, p) in target.iter_mut().zip(basis.wavelet(i)) {
            *v += a[i] * p;
        }
    }
    for p in &pieces {
        for (v, m) in target.iter_mut().zip(&p.molecule) {
            *v -= p.lambda * m;
        }
    }
    let reconstruction_error = target.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(AtomicDecomposition {
        lambda_sum: pieces.iter().map(|p| p.lambda).sum(),
        pieces,
        k_range: (k_low, k_high),
        omega_mass,
        unassigned: active
            .iter()
            .copied()
            .filter(|&i| top[i].is_none())
            .collect(),
        reconstruction_error,
        ..empty
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::atoms::{random_atom, validate_molecule, Ball};
    use crate::wavelets::{analyze, tests::grid_basis};

    #[test]
    fn level_below_is_strict() {
        assert_eq!(level_below(4.0), 1);
        assert_eq!(level_below(4.5), 2);
        assert_eq!(level_below(0.25), -3);
        assert_eq!(level_below(0.3), -2);
    }

    #[test]
    fn zero_vector() {
        let (s, _, cubes, basis) = grid_basis(64, 32);
        let d = decompose(&s, &basis, &cubes, &vec![0.0; basis.len()]).unwrap();
        assert!(d.pieces.is_empty() && d.lambda_sum == 0.0);
    }

    #[test]
    fn one_coefficient_is_one_piece() {
        let (s, _, cubes, basis) = grid_basis(128, 64);
        let i = basis.len() / 3;
        let mut a = vec![0.0; basis.len()];
        a[i] = -0.7;
        let d = decompose(&s, &basis, &cubes, &a).unwrap();
        assert_eq!(d.pieces.len(), 1);
        let p = &d.pieces[0];
        assert_eq!(p.indices, vec![i]);
        let expected = s.volume(p.center, p.radius).unwrap().sqrt() * 0.7;
        assert!((p.lambda - expected).abs() < 1e-14);
        for (m, v) in p.molecule.iter().zip(basis.wavelet(i)) {
            assert!((p.lambda * m + 0.7 * v).abs() < 1e-14);
        }
    }

    #[test]
    fn atoms_decompose_into_molecules() {
        let (s, _, cubes, basis) = grid_basis(256, 64);
        for seed in 0..10 {
            let atom = random_atom(&s, 2.0, seed).unwrap();
            let c = analyze(&basis, &atom.values).unwrap();
            let d = decompose(&s, &basis, &cubes, &c.wavelet).unwrap();
            assert!(d.unassigned.is_empty());
            assert!(d.reconstruction_error < 1e-10);
            let mut seen: Vec<usize> = d
                .pieces
                .iter()
                .flat_map(|p| p.indices.iter().copied())
                .collect();
            seen.sort_unstable();
            assert_eq!(seen, c.support());
            for p in &d.pieces {
                let r = validate_molecule(
                    &s,
                    &p.molecule,
                    Ball {
                        center: p.center,
                        radius: p.radius,
                    },
                    2.0,
                    None,
                );
                assert!(r.m1 && r.m3, "{r:?}");
                assert!(p.lambda > 0.0);
            }
            assert!(d.ratio() > 0.0 && d.ratio().is_finite());
        }
    }

    #[test]
    fn tiny_coefficients_are_assigned() {
        let (s, _, cubes, basis) = grid_basis(128, 32);
        let mut a = vec![0.0; basis.len()];
        a[basis.len() - 1] = 1e-200;
        a[basis.len() - 2] = -3e-190;
        a[0] = 1.0;
        let d = decompose(&s, &basis, &cubes, &a).unwrap();
        assert!(d.unassigned.is_empty());
        assert!(d
            .pieces
            .iter()
            .all(|p| p.lambda > 0.0 && p.lambda.is_finite()));
        assert!(d
            .pieces
            .iter()
            .all(|p| p.molecule.iter().all(|v| v.is_finite())));
        assert!(d.reconstruction_error < 1e-12);
    }
}
