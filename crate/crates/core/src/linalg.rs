//! Dense symmetric linear algebra: spectra, inverse square roots and
//! Gram-matrix solves.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Iteration cap for the binomial series.
pub const NEUMANN_MAX_TERMS: usize = 200_000;

/// Strategy for `M^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvSqrtMethod {
    /// Symmetric eigendecomposition.
    Eig,
    /// Binomial series of `(I - A)^{-1/2}` with `A = I - M / (2‖M‖)`.
    Neumann,
}

/// Coefficients `p_n` of `(1 - t)^{-1/2} = Σ p_n t^n` for `n < count`.
pub fn neumann_coefficients(count: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(count);
    let mut c = 1.0;
    for n in 0..count {
        if n > 0 {
            c *= (2 * n - 1) as f64 / (2 * n) as f64;
        }
        p.push(c);
    }
    p
}

/// Symmetrizes in place by averaging with the transpose.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Extreme eigenvalues `(min, max)` of a symmetric matrix.
pub fn spectral_range(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let ev = eig.eigenvalues;
    (ev.min(), ev.max())
}

/// Spectral norm of a symmetric matrix by power iteration.
pub fn power_norm(m: &DMatrix<f64>, max_iter: usize, tol: f64) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    // deterministic start with all coordinates distinct
    let mut v = DVector::from_iterator(
        n,
        (0..n).map(|i| 1.0 + (i as f64 * 0.618_033_988_75).fract()),
    );
    let norm = v.norm();
    v /= norm;
    let mut est = 0.0;
    for _ in 0..max_iter {
        let w = m * &v;
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w / next;
        if (next - est).abs() <= tol * next {
            est = next;
            break;
        }
        est = next;
    }
    est
}

/// Largest absolute entry of `S M S - I`.
pub fn whitening_error(s: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    let r = s * m * s;
    let mut worst: f64 = 0.0;
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((r[(i, j)] - target).abs());
        }
    }
    worst
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    Ok(())
}

/// `M^{-1/2}` of a symmetric positive definite matrix.
///
/// Both methods return a symmetric matrix. The series is truncated once a
/// term, and the geometric bound on everything after it, are below `tol / 10`.
pub fn inv_sqrt(m: &DMatrix<f64>, method: InvSqrtMethod, tol: f64) -> Result<DMatrix<f64>> {
    check_square(m)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "tolerance {tol} must be positive"
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    match method {
        InvSqrtMethod::Eig => {
            let eig = SymmetricEigen::new(m.clone());
            let min = eig.eigenvalues.min();
            if !(min > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    min_eigenvalue: min,
                });
            }
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
            let mut s = &eig.eigenvectors * d * eig.eigenvectors.transpose();
            symmetrize(&mut s);
            Ok(s)
        }
        InvSqrtMethod::Neumann => neumann_inv_sqrt(m, tol),
    }
}

fn neumann_inv_sqrt(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: spectral_range(m).0,
        });
    }
    let c = 2.0 * power_norm(m, 10_000, 1e-12);
    let a = DMatrix::identity(n, n) - m / c;
    // A is symmetric with spectrum in [1/2, 1), so ‖p_n A^n‖ = p_n ‖A‖^n.
    let rho = power_norm(&a, 10_000, 1e-14).min(1.0 - f64::EPSILON);
    let mut terms = 1;
    let mut p = 1.0;
    loop {
        let term = p * rho.powi(terms as i32 - 1);
        if term < tol / 10.0 && term * rho / (1.0 - rho) < tol / 10.0 {
            break;
        }
        if terms >= NEUMANN_MAX_TERMS {
            return Err(Error::NeumannDiverged {
                iterations: NEUMANN_MAX_TERMS,
            });
        }
        p *= (2 * terms - 1) as f64 / (2 * terms) as f64;
        terms += 1;
    }
    // The power estimate of ‖A‖ is from below; lengthen the series until the
    // result actually whitens M.
    loop {
        let mut s = binomial_series(&a, terms) / c.sqrt();
        symmetrize(&mut s);
        if whitening_error(&s, m) <= tol {
            return Ok(s);
        }
        if terms >= NEUMANN_MAX_TERMS {
            return Err(Error::NeumannDiverged {
                iterations: NEUMANN_MAX_TERMS,
            });
        }
        terms = (terms + terms / 2).min(NEUMANN_MAX_TERMS);
    }
}

/// `Σ_{n<terms} p_n A^n`, evaluated in blocks of `s ≈ √terms` powers so that
/// only about `2√terms` matrix products are needed.
fn binomial_series(a: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let p = neumann_coefficients(terms);
    let s = (terms as f64).sqrt().ceil().max(1.0) as usize;
    let mut powers = vec![DMatrix::identity(n, n)];
    for i in 1..=s {
        let next = &powers[i - 1] * a;
        powers.push(next);
    }
    let blocks = terms.div_ceil(s);
    let block = |j: usize| {
        let mut b = DMatrix::zeros(n, n);
        for i in 0..s {
            if let Some(&coef) = p.get(j * s + i) {
                b += &powers[i] * coef;
            }
        }
        b
    };
    let mut acc = block(blocks - 1);
    for j in (0..blocks - 1).rev() {
        acc = &acc * &powers[s] + block(j);
    }
    acc
}

/// Solves `G X = B` for symmetric positive definite `G`.
pub fn spd_solve(g: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(g)?;
    match g.clone().cholesky() {
        Some(ch) => Ok(ch.solve(b)),
        None => Err(Error::NotPositiveDefinite {
            min_eigenvalue: spectral_range(g).0,
        }),
    }
}

/// Weighted Gram matrix `R W Rᵀ` of the rows of `rows`.
pub fn weighted_gram(rows: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let scaled = scale_columns(rows, weights);
    let mut g = &scaled * rows.transpose();
    symmetrize(&mut g);
    g
}

/// `R diag(w)`.
pub fn scale_columns(rows: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let mut out = rows.clone();
    for (j, &w) in weights.iter().enumerate() {
        out.column_mut(j).scale_mut(w);
    }
    out
}

/// Flips every row so that its first entry with magnitude above `eps` is
/// positive.
pub fn fix_row_signs(rows: &mut DMatrix<f64>, eps: f64) {
    for i in 0..rows.nrows() {
        let first = (0..rows.ncols())
            .map(|j| rows[(i, j)])
            .find(|v| v.abs() > eps);
        if matches!(first, Some(v) if v < 0.0) {
            rows.row_mut(i).neg_mut();
        }
    }
}

/// Ordinary least squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Row `i` of a dense matrix as a vector.
pub fn row_vec(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

/// Zero-filled matrix with `rows × cols` entries; shorthand used by callers
/// that assemble row by row.
pub fn zeros(rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_vec(rows, cols, vec![0.0; rows * cols])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng};

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut m = &b * b.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5;
        symmetrize(&mut m);
        m
    }

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `C(2n, n) / 4^n` from an exact Pascal row.
    fn binomial_series(n: usize) -> f64 {
        let mut row: Vec<u128> = vec![1];
        for _ in 0..2 * n {
            let mut next = vec![1u128; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        row[n] as f64 / 4f64.powi(n as i32)
    }

    #[test]
    fn coefficients_match_binomials() {
        let p = neumann_coefficients(65);
        for (n, &v) in p.iter().enumerate() {
            let exact = binomial_series(n);
            assert!((v - exact).abs() <= 1e-12 * exact.max(1.0), "n = {n}");
            assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn identity_and_diagonal() {
        for method in [InvSqrtMethod::Eig, InvSqrtMethod::Neumann] {
            let i3 = DMatrix::<f64>::identity(3, 3);
            assert!(max_abs_diff(&inv_sqrt(&i3, method, 1e-12).unwrap(), &i3) < 1e-12);
            let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
            let s = inv_sqrt(&d, method, 1e-12).unwrap();
            let want = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0]));
            assert!(max_abs_diff(&s, &want) < 1e-11, "{method:?}: {s}");
        }
    }

    #[test]
    fn methods_agree_on_random_spd() {
        for seed in 0..5 {
            let m = random_spd(8, seed);
            let a = inv_sqrt(&m, InvSqrtMethod::Eig, 1e-10).unwrap();
            let b = inv_sqrt(&m, InvSqrtMethod::Neumann, 1e-10).unwrap();
            assert!(max_abs_diff(&a, &b) <= 1e-7);
            assert!(whitening_error(&a, &m) < 1e-10);
            assert!(whitening_error(&b, &m) < 1e-9);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            inv_sqrt(&m, InvSqrtMethod::Eig, 1e-10),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            inv_sqrt(&m, InvSqrtMethod::Neumann, 1e-10),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn power_norm_matches_spectrum() {
        let m = random_spd(12, 7);
        let (_, max) = spectral_range(&m);
        assert!((power_norm(&m, 10_000, 1e-14) - max).abs() < 1e-8 * max);
    }

    #[test]
    fn fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let (s, b) = linear_fit(&x, &y).unwrap();
        assert!((s + 0.5).abs() < 1e-12 && (b - 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn eig_inverse_sqrt_whitens(seed in 0u64..1000, n in 1usize..10) {
            let m = random_spd(n, seed);
            let s = inv_sqrt(&m, InvSqrtMethod::Eig, 1e-10).unwrap();
            prop_assert!(whitening_error(&s, &m) < 1e-9);
            prop_assert!(max_abs_diff(&s, &s.transpose()) == 0.0);
        }
    }
}
