//! The verification suite: every registered check, run on one model.

use anyhow::Result;
use homwave_core::hardy::{
    cz_kernel_check, decompose, khintchine_check, level_set_structure, maximal_comparison,
    maximal_domination_check, random_atom, random_signs, sign_uniform_bound,
    square_function_vs_signs, validate_atom, validate_molecule, weak_type_check, Ball,
    KhintchineReport, NormTriple,
};
use homwave_core::lattice::separated_sum_check;
use homwave_core::linalg::neumann_coefficients;
use homwave_core::splines::{
    interpolation_error, partition_error, support_report, verify_spline_regularity,
};
use homwave_core::wavelets::{
    exactness, neumann_cross_check, riesz_bounds, synthesize, verify_decay,
};
use homwave_core::{
    analyze, doubling_profile, refinement_coefficients, rng, sample_random_system,
    verify_cube_axioms, MetricMeasureSpace,
};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::model::Model;
use crate::report::{Meta, Recorder, Report};

/// Smallest core radius exponent accepted: `ε₀ ≥ 2^{-6}`.
pub const MIN_EPS0: f64 = 1.0 / 64.0;
/// Accepted range of `V(y, ε₀δ^k)/μ(Q)`.
pub const CORE_RATIO_RANGE: (f64, f64) = (1e-3, 1.0);
/// Largest accepted `max/min` of an empirical constant over a test family.
pub const BAND_SPREAD: f64 = 100.0;
/// Re-runs with another seed must agree within these factors.
pub const BAND_STABILITY: f64 = 1.5;
pub const KHINTCHINE_STABILITY: f64 = 1.3;
/// Longest random coefficient vector in the Khintchine experiment.
pub const KHINTCHINE_MAX_LEN: usize = 64;
/// Atoms used per sign experiment.
pub const SIGN_ATOMS: usize = 5;
/// Sign draws per atom in the sign-uniform bound.
pub const UNIFORM_TRIALS: usize = 20;

/// `[min, max]` of an empirical constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub min: f64,
    pub max: f64,
}

impl Band {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        values.into_iter().fold(
            Self {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |b, v| Self {
                min: b.min.min(v),
                max: b.max.max(v),
            },
        )
    }

    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

/// `max(a/b, b/a)`.
pub fn factor(a: f64, b: f64) -> f64 {
    (a / b).max(b / a)
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomStats {
    pub count: usize,
    pub valid: usize,
    /// Largest `‖a‖_q / μ(B)^{1/q−1}`.
    pub max_norm_ratio: f64,
    pub max_mean: f64,
}

pub fn atom_checks(space: &MetricMeasureSpace, count: usize, seed: u64) -> Result<AtomStats> {
    let rows: Vec<(bool, f64, f64)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let a = random_atom(space, 2.0, rng::derive(seed, i as u64))?;
            let r = validate_atom(space, &a.values, a.ball, 2.0);
            Ok((r.passed(), r.norm / r.bound, r.mean.abs()))
        })
        .collect::<Result<_>>()?;
    Ok(AtomStats {
        count,
        valid: rows.iter().filter(|r| r.0).count(),
        max_norm_ratio: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        max_mean: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MoleculeStats {
    pub count: usize,
    pub valid: usize,
    /// Largest measured `Σ k η_k`.
    pub max_weighted_sum: f64,
    pub max_norm_ratio: f64,
}

/// `ψ / √V(y, δ^k)` on the ball `B(y, δ^k)` for randomly chosen wavelets.
pub fn molecule_checks(model: &Model, count: usize, seed: u64) -> MoleculeStats {
    let basis = &model.basis;
    let mut rng = rng::from_seed(seed);
    let chosen = sample(&mut rng, basis.len(), count.min(basis.len())).into_vec();
    let rows: Vec<(bool, f64, f64)> = chosen
        .par_iter()
        .map(|&i| {
            let w = basis.index()[i];
            let m: Vec<f64> = basis
                .wavelet(i)
                .iter()
                .map(|v| v / w.volume_scale.sqrt())
                .collect();
            let ball = Ball {
                center: w.center,
                radius: basis.scale(w.k),
            };
            let r = validate_molecule(&model.space, &m, ball, 2.0, None);
            (r.passed(), r.weighted_sum, r.norm / r.bound)
        })
        .collect();
    MoleculeStats {
        count: chosen.len(),
        valid: rows.iter().filter(|r| r.0).count(),
        max_weighted_sum: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        max_norm_ratio: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    }
}

/// Heavy-tailed random function: `±u^5` plus a spike.
pub fn test_function(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::from_seed(seed);
    let mut f: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            if rng.gen::<bool>() {
                u.powi(5)
            } else {
                -u.powi(5)
            }
        })
        .collect();
    let spike = rng.gen_range(0..n);
    f[spike] += 10.0;
    f
}

/// `count` log-spaced thresholds from `10^{-3} max|f|` to `max|f|`.
pub fn thresholds(f: &[f64], count: usize) -> Vec<f64> {
    let top = f.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let lo = 1e-3 * top;
    (0..count)
        .map(|i| lo * (top / lo).powf(i as f64 / (count.max(2) - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakStats {
    pub functions: usize,
    pub lambdas: usize,
    /// Largest `λ μ{M^dy f > λ} / ‖f‖₁`.
    pub worst: f64,
    pub level_sets_exact: bool,
    pub level_sets_disjoint: bool,
    /// Largest `M^dy f / M f` over the same functions.
    pub dyadic_over_ball: f64,
    /// Points with `M^dy f > M f`, summed over functions.
    pub exceed: usize,
}

pub fn weak_type_checks(model: &Model, functions: usize, lambdas: usize, seed: u64) -> WeakStats {
    let rows: Vec<(f64, bool, bool, f64, usize)> = (0..functions)
        .into_par_iter()
        .map(|i| {
            let f = test_function(model.space.len(), rng::derive(seed, i as u64));
            let ls = thresholds(&f, lambdas);
            let weak = weak_type_check(&model.space, &model.cubes, &f, &ls);
            let (mut exact, mut disjoint) = (true, true);
            for &l in &ls {
                let r = level_set_structure(&model.space, &model.cubes, &f, l);
                exact &= r.exact;
                disjoint &= r.disjoint;
            }
            let cmp = maximal_comparison(&model.space, &model.cubes, &f);
            (weak.worst, exact, disjoint, cmp.ratio, cmp.exceed.len())
        })
        .collect();
    WeakStats {
        functions,
        lambdas,
        worst: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        level_sets_exact: rows.iter().all(|r| r.1),
        level_sets_disjoint: rows.iter().all(|r| r.2),
        dyadic_over_ball: rows.iter().map(|r| r.3).fold(0.0, f64::max),
        exceed: rows.iter().map(|r| r.4).sum(),
    }
}

/// Wavelet coefficients of random `(1,2)`-atoms, with their coarse energy.
pub fn atom_coefficients(model: &Model, count: usize, seed: u64) -> Result<Vec<(Vec<f64>, f64)>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let a = random_atom(&model.space, 2.0, rng::derive(seed, i as u64))?;
            let c = analyze(&model.basis, &a.values)?;
            Ok((c.wavelet.clone(), c.coarse_energy()))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct NormBands {
    pub count: usize,
    pub iii_over_v: Band,
    pub iv_over_v: Band,
    pub max_coarse_energy: f64,
}

pub fn norm_bands(model: &Model, count: usize, seed: u64) -> Result<NormBands> {
    let coeffs = atom_coefficients(model, count, seed)?;
    let norms: Vec<NormTriple> = coeffs
        .par_iter()
        .map(|(c, _)| NormTriple::new(&model.space, &model.basis, &model.cubes, c))
        .collect();
    Ok(NormBands {
        count,
        iii_over_v: Band::of(norms.iter().map(|n| n.iii / n.v)),
        iv_over_v: Band::of(norms.iter().map(|n| n.iv / n.v)),
        max_coarse_energy: coeffs.iter().map(|c| c.1).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionStats {
    pub runs: usize,
    /// Every run's pieces partition the nonzero coefficients.
    pub partition: bool,
    pub max_resynthesis: f64,
    /// `Σ λ / ‖φ‖_{L¹}` over runs.
    pub constant: Band,
    pub c2: f64,
    pub max_pieces: usize,
    /// Largest `‖Ã‖₂ μ(B)^{1/2}` over all molecules.
    pub molecule_norm: f64,
    pub max_molecule_mean: f64,
}

pub fn decomposition_checks(model: &Model, runs: usize, seed: u64) -> Result<DecompositionStats> {
    let coeffs = atom_coefficients(model, runs, seed)?;
    let rows: Vec<(bool, f64, f64, f64, usize, f64, f64)> = coeffs
        .par_iter()
        .map(|(c, _)| {
            let d = decompose(&model.space, &model.basis, &model.cubes, c)?;
            let mut seen: Vec<usize> = d
                .pieces
                .iter()
                .flat_map(|p| p.indices.iter().copied())
                .collect();
            seen.sort_unstable();
            let support: Vec<usize> = (0..c.len()).filter(|&i| c[i] != 0.0).collect();
            let mut norm: f64 = 0.0;
            let mut mean: f64 = 0.0;
            for p in &d.pieces {
                let r = validate_molecule(
                    &model.space,
                    &p.molecule,
                    Ball {
                        center: p.center,
                        radius: p.radius,
                    },
                    2.0,
                    None,
                );
                norm = norm.max(r.norm / r.bound);
                mean = mean.max(r.mean.abs());
            }
            Ok((
                seen == support,
                d.reconstruction_error,
                d.ratio(),
                d.c2,
                d.pieces.len(),
                norm,
                mean,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(DecompositionStats {
        runs,
        partition: rows.iter().all(|r| r.0),
        max_resynthesis: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        constant: Band::of(rows.iter().map(|r| r.2)),
        c2: rows.first().map_or(1.0, |r| r.3),
        max_pieces: rows.iter().map(|r| r.4).max().unwrap_or(0),
        molecule_norm: rows.iter().map(|r| r.5).fold(0.0, f64::max),
        max_molecule_mean: rows.iter().map(|r| r.6).fold(0.0, f64::max),
    })
}

/// Random vectors of length `1..=64` with uniform entries in `[-1, 1]`.
pub fn khintchine_vectors(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::from_seed(seed);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=KHINTCHINE_MAX_LEN);
            (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct KhintchineStats {
    pub q1: KhintchineSummary,
    pub q4: KhintchineSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct KhintchineSummary {
    pub q: f64,
    pub a_q: f64,
    pub b_q: f64,
}

impl From<KhintchineReport> for KhintchineSummary {
    fn from(r: KhintchineReport) -> Self {
        Self {
            q: r.q,
            a_q: r.a_q,
            b_q: r.b_q,
        }
    }
}

pub fn khintchine_run(vectors: usize, trials: usize, seed: u64) -> KhintchineStats {
    let v = khintchine_vectors(vectors, seed);
    KhintchineStats {
        q1: khintchine_check(&v, 1.0, trials, rng::derive(seed, 1)).into(),
        q4: khintchine_check(&v, 4.0, trials, rng::derive(seed, 4)).into(),
    }
}

/// Worst factor between the fitted constants of two runs.
pub fn khintchine_stability(a: &KhintchineStats, b: &KhintchineStats) -> f64 {
    [
        factor(a.q1.a_q, b.q1.a_q),
        factor(a.q1.b_q, b.q1.b_q),
        factor(a.q4.a_q, b.q4.a_q),
        factor(a.q4.b_q, b.q4.b_q),
    ]
    .into_iter()
    .fold(1.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct SignStats {
    pub atoms: usize,
    pub trials: usize,
    pub max_isometry: f64,
    /// Largest `‖(Σ|a|²|ψ|²)^{1/2}‖₁ / max_ε ‖T_ε f‖₁`.
    pub max_ratio: f64,
    /// Atoms where the square function stays below the sampled maximum.
    pub unit_holds: usize,
    /// Atoms where it stays below `√2` times the sampled mean.
    pub sharp_holds: usize,
    /// `max_ε norm_v(T_ε f) / norm_v(f)`.
    pub uniform: Band,
}

pub fn sign_checks(model: &Model, atoms: usize, trials: usize, seed: u64) -> Result<SignStats> {
    let coeffs = atom_coefficients(model, atoms, seed)?;
    let rows: Vec<(f64, f64, bool, bool, f64)> = coeffs
        .par_iter()
        .enumerate()
        .map(|(i, (c, _))| {
            let s = rng::derive(seed, 1000 + i as u64);
            let r = square_function_vs_signs(&model.space, &model.basis, c, trials, s)?;
            let u = sign_uniform_bound(&model.space, &model.basis, c, UNIFORM_TRIALS, s)?;
            Ok((r.isometry, r.ratio(), r.holds_unit(), r.holds_sharp(), u))
        })
        .collect::<Result<_>>()?;
    Ok(SignStats {
        atoms,
        trials,
        max_isometry: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        max_ratio: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        unit_holds: rows.iter().filter(|r| r.2).count(),
        sharp_holds: rows.iter().filter(|r| r.3).count(),
        uniform: Band::of(rows.iter().map(|r| r.4)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CzStats {
    pub draws: usize,
    /// Size constant over sign draws at the full truncation.
    pub size: Band,
    pub smooth_c: Band,
    pub smooth_eta: Band,
    /// Size constant per truncation level for the first draw.
    pub by_cutoff: Vec<(i32, f64)>,
    pub finite: bool,
}

pub fn cz_checks(model: &Model, draws: usize, samples: usize, seed: u64) -> Result<CzStats> {
    let basis = &model.basis;
    let reports = (0..draws)
        .map(|d| {
            let signs = random_signs(basis.len(), rng::derive(seed, d as u64));
            cz_kernel_check(
                &model.space,
                basis,
                &signs,
                basis.k_max(),
                samples,
                rng::derive(seed, 500 + d as u64),
            )
        })
        .collect::<homwave_core::Result<Vec<_>>>()?;
    let signs = random_signs(basis.len(), rng::derive(seed, 0));
    let mut by_cutoff = Vec::new();
    for k in basis.k_min()..basis.k_max() {
        if basis.index().iter().any(|w| w.k <= k) {
            by_cutoff.push((
                k,
                cz_kernel_check(&model.space, basis, &signs, k, 0, seed)?.size,
            ));
        }
    }
    let finite = reports.iter().all(|r| {
        r.size.is_finite() && r.smooth_c.is_finite() && r.smooth_eta.is_some_and(f64::is_finite)
    }) && by_cutoff.iter().all(|c| c.1.is_finite());
    Ok(CzStats {
        draws,
        size: Band::of(reports.iter().map(|r| r.size)),
        smooth_c: Band::of(reports.iter().map(|r| r.smooth_c)),
        smooth_eta: Band::of(reports.iter().filter_map(|r| r.smooth_eta)),
        by_cutoff,
        finite,
    })
}

/// `C(2n, n) / 4^n` from an exact Pascal row.
pub fn central_binomial_ratio(n: usize) -> f64 {
    let mut row = vec![1u128];
    for _ in 0..2 * n {
        let mut next = vec![1u128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row[n] as f64 / 4f64.powi(n as i32)
}

/// Largest relative error of the series coefficients for `n ≤ 64`.
pub fn coefficient_error() -> f64 {
    neumann_coefficients(65)
        .iter()
        .enumerate()
        .map(|(n, p)| ((p - central_binomial_ratio(n)) / central_binomial_ratio(n)).abs())
        .fold(0.0, f64::max)
}

/// Runs every registered check.
pub fn verify(model: &Model, cfg: &RunConfig) -> Result<Report> {
    let space = &model.space;
    let nets = &model.nets;
    let cubes = &model.cubes;
    let sp = &model.splines;
    let basis = &model.basis;
    let tol = &cfg.tolerances;
    let ex = &cfg.experiments;
    let seed = cfg.seeds.experiments;
    let mut rec = Recorder::new(Meta {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        space: cfg.space_name(),
        points: space.len(),
    });

    let profile = doubling_profile(space, ex.doubling_samples, seed);
    rec.record(
        "space.doubling",
        true,
        json!({
            "c_dbl": profile.c_dbl, "n": profile.n, "n0_est": profile.n0_est,
            "big_n0_est": profile.big_n0_est, "g0_est": profile.g0_est, "samples": profile.samples,
        }),
    );

    // nets
    let mut separated = true;
    let mut nested = true;
    let mut cover: f64 = 0.0;
    for k in nets.levels() {
        let net = nets.net(k);
        let scale = nets.scale(k);
        for (i, &a) in net.iter().enumerate() {
            for &b in &net[i + 1..] {
                separated &= space.dist(a, b) >= scale;
            }
        }
        if k < nets.k_max() {
            nested &= net.iter().all(|&p| nets.position(k + 1, p).is_some());
        }
        for x in 0..space.len() {
            let d = net
                .iter()
                .map(|&p| space.dist(x, p))
                .fold(f64::INFINITY, f64::min);
            cover = cover.max(d / scale);
        }
    }
    rec.record(
        "lattice.nets",
        separated && nested && cover < 2.0 && nets.is_complete(),
        json!({
            "k_min": nets.k_min(), "k_max": nets.k_max(), "separated": separated, "nested": nested,
            "covering_ratio": cover, "finest_complete": nets.is_complete(),
            "sizes": nets.levels().map(|k| nets.net(k).len()).collect::<Vec<_>>(),
        }),
    );

    let axioms = verify_cube_axioms(space, cubes);
    rec.record(
        "lattice.cubes",
        axioms.passed(),
        json!({
            "nested": axioms.nested, "partition": axioms.partition, "ball_nesting": axioms.ball_nesting,
            "children_union": axioms.children_union, "parent_proximity": axioms.parent_proximity,
            "centers_inside": axioms.centers_inside, "sandwich": axioms.sandwich,
            "min_children": axioms.min_children, "max_children": axioms.max_children,
        }),
    );
    rec.record(
        "lattice.sandwich",
        true,
        json!({ "inner_ratio": axioms.inner_ratio, "outer_ratio": axioms.outer_ratio, "strict": cfg.strict_delta }),
    );
    match sample_random_system(space, nets, cfg.seeds.lattice) {
        Ok(random) => {
            let r = verify_cube_axioms(space, &random);
            rec.record(
                "lattice.random_cubes",
                r.passed(),
                json!({ "seed": cfg.seeds.lattice, "inner_ratio": r.inner_ratio, "outer_ratio": r.outer_ratio }),
            );
        }
        Err(e) => rec.error("lattice.random_cubes", &e.into()),
    }
    {
        let f = test_function(space.len(), rng::derive(seed, 77));
        let k = cubes.k_max();
        let singletons = (0..cubes.centers(k).len()).all(|a| cubes.members(k, a).len() == 1);
        let avg = cubes.cube_average(space, k, &f);
        let err = avg
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        rec.record(
            "lattice.lebesgue",
            singletons && err <= 4.0 * f64::EPSILON,
            json!({ "singletons": singletons, "max_relative_error": err }),
        );
    }
    {
        let sums: Vec<(i32, f64, usize)> = nets
            .levels()
            .filter_map(|k| {
                separated_sum_check(space, nets, k, 1.0)
                    .ok()
                    .map(|r| (k, r.sup, r.argmax))
            })
            .collect();
        rec.record(
            "lattice.separated_sum",
            true,
            json!({ "eps": 1.0, "levels": sums.iter().map(|s| json!({"k": s.0, "sup": s.1, "argmax": s.2})).collect::<Vec<_>>() }),
        );
    }

    // splines
    let levels: Vec<i32> = (sp.k_min()..=sp.k_max()).collect();
    let part = levels
        .iter()
        .map(|&k| partition_error(sp, k))
        .fold(0.0, f64::max);
    rec.record(
        "splines.partition",
        part <= tol.partition,
        json!({ "max_deviation": part }),
    );
    let interp = levels
        .iter()
        .map(|&k| interpolation_error(sp, k))
        .fold(0.0, f64::max);
    rec.record(
        "splines.interpolation",
        interp == 0.0,
        json!({ "max_deviation": interp }),
    );
    match refinement_coefficients(space, sp) {
        Ok(refs) => {
            let bound = 2.0 / (sp.samples() as f64).sqrt();
            let worst = refs.iter().map(|r| r.residual).fold(0.0, f64::max);
            rec.record(
                "splines.refinement",
                worst <= bound && refs.iter().all(|r| r.interpolating && !r.least_squares),
                json!({
                    "max_residual": worst, "bound": bound,
                    "levels": refs.iter().map(|r| json!({
                        "k": r.k, "residual": r.residual, "max_support": r.max_support, "total_support": r.total_support,
                    })).collect::<Vec<_>>(),
                }),
            );
        }
        Err(e) => rec.error("splines.refinement", &e.into()),
    }
    let supports: Vec<_> = levels
        .iter()
        .map(|&k| support_report(space, sp, k))
        .collect();
    rec.record(
        "splines.support",
        true,
        json!({ "levels": supports.iter().map(|s| json!({
            "k": s.k, "r_in": s.r_in, "r_out": s.r_out, "nu_bracketed": s.nu_bracketed, "bounded": s.bounded,
        })).collect::<Vec<_>>() }),
    );
    let reg = verify_spline_regularity(space, sp);
    rec.record(
        "splines.regularity",
        true,
        json!({ "levels": reg.iter().map(|r| json!({"k": r.k, "pairs": r.pairs, "eta": r.eta_est, "c": r.c_est})).collect::<Vec<_>>() }),
    );
    let riesz = riesz_bounds(space, sp, ex.riesz_trials, seed);
    rec.record(
        "splines.riesz",
        true,
        json!({ "levels": riesz.iter().map(|r| json!({"k": r.k, "r_min": r.r_min, "r_max": r.r_max})).collect::<Vec<_>>() }),
    );

    // wavelets
    match exactness(space, sp, basis) {
        Ok(e) => {
            rec.record(
                "wavelets.orthonormality",
                e.orthonormality <= tol.exact,
                json!({ "max_deviation": e.orthonormality }),
            );
            rec.record(
                "wavelets.cancellation",
                e.cancellation <= tol.exact,
                json!({ "max_integral": e.cancellation }),
            );
            rec.record(
                "wavelets.cross_level",
                e.cross_level <= tol.exact,
                json!({ "max_inner": e.cross_level }),
            );
            rec.record(
                "wavelets.dimension",
                e.dimension == e.points,
                json!({ "dimension": e.dimension, "points": e.points, "wavelets": basis.len(), "coarse": basis.coarse().len() }),
            );
        }
        Err(e) => {
            let e = anyhow::Error::new(e);
            for name in [
                "wavelets.orthonormality",
                "wavelets.cancellation",
                "wavelets.cross_level",
                "wavelets.dimension",
            ] {
                rec.error(name, &e);
            }
        }
    }
    {
        let f = test_function(space.len(), rng::derive(seed, 78));
        let res: Result<(f64, f64)> = (|| {
            let c = analyze(basis, &f)?;
            let g = synthesize(basis, &c)?;
            let round = f
                .iter()
                .zip(&g)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let planch = (c.energy() - space.inner(&f, &f)).abs();
            Ok((round, planch))
        })();
        match res {
            Ok((round, planch)) => rec.record(
                "wavelets.reconstruction",
                round <= tol.exact && planch <= tol.exact,
                json!({ "round_trip": round, "plancherel": planch }),
            ),
            Err(e) => rec.error("wavelets.reconstruction", &e),
        }
    }
    {
        let coef = coefficient_error();
        let agreement = if ex.neumann {
            Some(neumann_cross_check(basis, tol.inv_sqrt))
        } else {
            None
        };
        match agreement {
            Some(Err(e)) => rec.error("wavelets.inv_sqrt", &e.into()),
            other => {
                let levels = other.map(|r| r.expect("errors handled above"));
                let worst = levels
                    .as_ref()
                    .map(|l| l.iter().map(|x| x.1).fold(0.0, f64::max));
                rec.record(
                    "wavelets.inv_sqrt",
                    coef <= tol.coefficients && worst.is_none_or(|w| w <= tol.agreement),
                    json!({
                        "coefficient_error": coef, "max_disagreement": worst,
                        "levels": levels.unwrap_or_default().iter().map(|x| json!({"k": x.0, "disagreement": x.1})).collect::<Vec<_>>(),
                    }),
                );
            }
        }
    }
    rec.record(
        "wavelets.gram_spectrum",
        true,
        json!({ "levels": basis.levels().iter().map(|l| json!({
            "k": l.k, "count": l.count, "min_eig": l.min_eig, "max_eig": l.max_eig,
            "discrepancy": l.discrepancy, "excluded": l.excluded,
        })).collect::<Vec<_>>(), "flagged": basis.flagged() }),
    );
    match basis.lower_bound() {
        Some(lb) => rec.record(
            "wavelets.lower_bound",
            lb.eps0 >= MIN_EPS0
                && lb.c_lower > 0.0
                && lb.c_center > 0.0
                && lb.ratio_min >= CORE_RATIO_RANGE.0
                && lb.ratio_max <= CORE_RATIO_RANGE.1,
            json!({
                "eps0": lb.eps0, "j": lb.j, "c_lower": lb.c_lower, "c_center": lb.c_center,
                "ratio_min": lb.ratio_min, "ratio_max": lb.ratio_max, "c2": lb.c2,
                "trace": lb.trace.iter().take_while(|t| t.0 <= lb.j + 4).map(|t| json!({"j": t.0, "c": t.1})).collect::<Vec<_>>(),
            }),
        ),
        None => rec.record("wavelets.lower_bound", false, json!({ "error": "no core radius" })),
    }
    let decay = verify_decay(space, basis);
    rec.record(
        "wavelets.decay",
        decay.nu_fit > 0.0 && decay.violations == 0,
        json!({ "nu": decay.nu_fit, "c": decay.c_fit, "violations": decay.violations, "samples": decay.samples, "center_max": decay.center_max }),
    );
    rec.record(
        "wavelets.holder",
        true,
        json!({ "eta_min": decay.eta_min(), "levels": decay.holder.iter().map(|h| json!({"k": h.k, "pairs": h.pairs, "eta": h.eta_est, "c": h.c_est})).collect::<Vec<_>>() }),
    );

    // hardy
    match atom_checks(space, ex.atoms, rng::derive(seed, 1)) {
        Ok(a) => rec.record("hardy.atoms", a.valid == a.count, serde_json::to_value(&a)?),
        Err(e) => rec.error("hardy.atoms", &e),
    }
    let m = molecule_checks(model, ex.molecules, rng::derive(seed, 2));
    rec.record(
        "hardy.molecules",
        m.valid == m.count && m.max_weighted_sum.is_finite(),
        serde_json::to_value(&m)?,
    );
    let w = weak_type_checks(
        model,
        ex.weak_functions,
        ex.weak_lambdas,
        rng::derive(seed, 3),
    );
    rec.record(
        "hardy.weak_type",
        w.worst <= 1.0,
        json!({ "worst": w.worst, "functions": w.functions, "lambdas": w.lambdas }),
    );
    rec.record(
        "hardy.level_sets",
        w.level_sets_exact && w.level_sets_disjoint,
        json!({ "exact": w.level_sets_exact, "disjoint": w.level_sets_disjoint }),
    );
    rec.record(
        "hardy.maximal_comparison",
        true,
        json!({ "dyadic_over_ball": w.dyadic_over_ball, "exceed_points": w.exceed }),
    );
    {
        let d1 = maximal_domination_check(space, basis, cubes, 1.0);
        let dh = maximal_domination_check(space, basis, cubes, 0.5);
        rec.record(
            "hardy.maximal_domination",
            d1.constant > 0.0 && dh.constant > 0.0,
            json!({ "s1": d1.constant, "s_half": dh.constant, "empty_cores": d1.empty_cores }),
        );
    }
    let bands = norm_bands(model, ex.atoms, rng::derive(seed, 4))
        .and_then(|a| Ok((a, norm_bands(model, ex.atoms, rng::derive(seed, 5))?)));
    match bands {
        Ok((a, b)) => {
            let stable = [
                factor(a.iii_over_v.min, b.iii_over_v.min),
                factor(a.iii_over_v.max, b.iii_over_v.max),
                factor(a.iv_over_v.min, b.iv_over_v.min),
                factor(a.iv_over_v.max, b.iv_over_v.max),
            ]
            .into_iter()
            .fold(1.0, f64::max);
            rec.record(
                "hardy.norm_bands",
                a.iii_over_v.spread() <= BAND_SPREAD
                    && a.iv_over_v.spread() <= BAND_SPREAD
                    && stable <= BAND_STABILITY,
                json!({ "first": a, "second": b, "stability": stable }),
            );
        }
        Err(e) => rec.error("hardy.norm_bands", &e),
    }
    match decomposition_checks(model, ex.decompositions, rng::derive(seed, 6)) {
        Ok(d) => rec.record(
            "hardy.decomposition",
            d.partition && d.max_resynthesis <= tol.exact && d.constant.spread() <= BAND_SPREAD,
            serde_json::to_value(&d)?,
        ),
        Err(e) => rec.error("hardy.decomposition", &e),
    }
    {
        let a = khintchine_run(
            ex.khintchine_vectors,
            ex.khintchine_trials,
            rng::derive(seed, 7),
        );
        let b = khintchine_run(
            ex.khintchine_vectors,
            ex.khintchine_trials,
            rng::derive(seed, 8),
        );
        let stable = khintchine_stability(&a, &b);
        let positive = [a.q1.a_q, a.q4.a_q, b.q1.a_q, b.q4.a_q]
            .iter()
            .all(|&v| v > 0.0);
        rec.record(
            "hardy.khintchine",
            positive && stable <= KHINTCHINE_STABILITY,
            json!({ "first": a, "second": b, "stability": stable }),
        );
    }
    match sign_checks(model, SIGN_ATOMS, ex.sign_trials, rng::derive(seed, 9)) {
        Ok(s) => {
            rec.record(
                "hardy.sign_isometry",
                s.max_isometry <= tol.isometry,
                json!({ "max_deviation": s.max_isometry }),
            );
            rec.record(
                "hardy.square_vs_signs",
                s.sharp_holds == s.atoms,
                json!({
                    "atoms": s.atoms, "trials": s.trials, "max_ratio": s.max_ratio,
                    "unit_constant_holds": s.unit_holds, "sqrt2_holds": s.sharp_holds,
                    "note": "sampled maximum underestimates the supremum over all sign patterns",
                }),
            );
            rec.record(
                "hardy.sign_uniform",
                (s.uniform.max - 1.0).abs() <= tol.exact
                    && (s.uniform.min - 1.0).abs() <= tol.exact,
                json!({ "band": s.uniform }),
            );
        }
        Err(e) => {
            for name in [
                "hardy.sign_isometry",
                "hardy.square_vs_signs",
                "hardy.sign_uniform",
            ] {
                rec.error(name, &e);
            }
        }
    }
    match cz_checks(model, ex.cz_draws, ex.cz_samples, rng::derive(seed, 10)) {
        Ok(c) => rec.record("hardy.cz_kernel", c.finite, serde_json::to_value(&c)?),
        Err(e) => rec.error("hardy.cz_kernel", &e),
    }
    rec.finish()
}
