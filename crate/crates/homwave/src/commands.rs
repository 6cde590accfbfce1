//! The `homwave` subcommands. Each reads a resolved [`RunConfig`] and writes
//! into `cfg.out`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use homwave_core::hardy::{decompose, NormTriple};
use homwave_core::{analyze, estimate_splines};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SpaceSource};
use crate::io::{read_function, read_json, write_f64_le, write_json};
use crate::model::{load_space, nets_for, save_splines, Model, BASIS_HEADER};
use crate::reference::Reference;
use crate::report::Report;
use crate::suite;

pub const REPORT_FILE: &str = "report.json";
pub const CHECKS_FILE: &str = "checks.csv";
pub const TIMINGS_FILE: &str = "timings.json";
pub const ANALYSIS_FILE: &str = "analysis.json";
pub const DECOMPOSITION_FILE: &str = "decomposition.json";
pub const MOLECULES_HEADER: &str = "molecules.json";
pub const MOLECULES_VALUES: &str = "molecules.bin";

/// Command-line values that replace config fields when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub reference: Option<Reference>,
    pub delta: Option<f64>,
    pub strict_delta: bool,
    pub samples: Option<usize>,
    /// Replaces all three seeds.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Config file (or defaults) with `overrides` applied, validated.
pub fn resolve(config: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(r) = overrides.reference {
        cfg.space = SpaceSource::Reference { reference: r };
    }
    if let Some(d) = overrides.delta {
        cfg.delta = d;
    }
    if overrides.strict_delta {
        cfg.strict_delta = true;
    }
    if let Some(r) = overrides.samples {
        cfg.samples = r;
    }
    if let Some(s) = overrides.seed {
        cfg.seeds.lattice = s;
        cfg.seeds.splines = s;
        cfg.seeds.experiments = s;
    }
    if let Some(o) = &overrides.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Wall-clock seconds per phase. Kept out of the report so that reports are
/// reproducible byte for byte.
#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub phases: Vec<(String, f64)>,
}

impl Timings {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let v = f()?;
        self.phases
            .push((name.to_string(), start.elapsed().as_secs_f64()));
        Ok(v)
    }
}

pub fn cmd_build(cfg: &RunConfig) -> Result<Model> {
    let model = Model::build(cfg)?;
    model.save(&cfg.out)?;
    Ok(model)
}

fn load_model(cfg: &RunConfig) -> Result<Model> {
    if !cfg.out.join(BASIS_HEADER).exists() {
        bail!(
            "no artifacts in {}: run `homwave build` with the same config first",
            cfg.out.display()
        );
    }
    Model::load(cfg, &cfg.out)
        .with_context(|| format!("loading artifacts from {}", cfg.out.display()))
}

/// Runs the suite on the built artifacts; writes the report, its CSV table
/// and a timing file.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Report> {
    let mut timings = Timings::default();
    let model = timings.time("load", || load_model(cfg))?;
    let report = timings.time("verify", || suite::verify(&model, cfg))?;
    write_json(&cfg.out.join(REPORT_FILE), &report)?;
    report.write_csv(&cfg.out.join(CHECKS_FILE))?;
    write_json(&cfg.out.join(TIMINGS_FILE), &timings)?;
    Ok(report)
}

/// Rereads a stored report and refreshes its CSV table.
pub fn cmd_report(cfg: &RunConfig) -> Result<Report> {
    let report: Report = read_json(&cfg.out.join(REPORT_FILE))?;
    report.write_csv(&cfg.out.join(CHECKS_FILE))?;
    Ok(report)
}

/// Estimates the splines alone.
pub fn cmd_splines(cfg: &RunConfig) -> Result<()> {
    let space = load_space(cfg)?;
    let nets = nets_for(&space, cfg)?;
    let sp = estimate_splines(&space, &nets, cfg.samples, cfg.seeds.splines)
        .context("splines: estimation")?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    save_splines(&sp, &cfg.out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub norm_iii: f64,
    pub norm_iv: f64,
    pub norm_v: f64,
    pub coarse_energy: f64,
    pub l1: f64,
    pub l2: f64,
}

pub fn analyze_values(model: &Model, f: &[f64]) -> Result<Analysis> {
    let c = analyze(&model.basis, f)?;
    let n = NormTriple::new(&model.space, &model.basis, &model.cubes, &c.wavelet);
    Ok(Analysis {
        norm_iii: n.iii,
        norm_iv: n.iv,
        norm_v: n.v,
        coarse_energy: c.coarse_energy(),
        l1: model.space.lq_norm(f, 1.0),
        l2: model.space.lq_norm(f, 2.0),
    })
}

pub fn cmd_analyze(cfg: &RunConfig, function: &Path) -> Result<Analysis> {
    let model = load_model(cfg)?;
    let f = read_function(function, model.space.len())?;
    let a = analyze_values(&model, &f)?;
    write_json(&cfg.out.join(ANALYSIS_FILE), &a)?;
    Ok(a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallEntry {
    pub center: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceEntry {
    pub lambda: f64,
    pub ball: BallEntry,
    pub indices: Vec<usize>,
    pub threshold: i32,
    pub cube_level: i32,
    pub cube: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub c2: f64,
    pub lambda_sum: f64,
    pub phi_l1: f64,
    pub reconstruction_error: f64,
    pub coarse_energy: f64,
    pub pieces: Vec<PieceEntry>,
}

/// Sidecar header of the molecule table: `rows` molecules of `cols` values,
/// row-major, little-endian `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub rows: usize,
    pub cols: usize,
    pub file: String,
}

/// Decomposes the wavelet part of a function into molecules.
pub fn cmd_decompose(cfg: &RunConfig, function: &Path) -> Result<DecompositionFile> {
    let model = load_model(cfg)?;
    let f = read_function(function, model.space.len())?;
    let c = analyze(&model.basis, &f)?;
    let d = decompose(&model.space, &model.basis, &model.cubes, &c.wavelet)?;
    let file = DecompositionFile {
        c2: d.c2,
        lambda_sum: d.lambda_sum,
        phi_l1: d.phi_l1,
        reconstruction_error: d.reconstruction_error,
        coarse_energy: c.coarse_energy(),
        pieces: d
            .pieces
            .iter()
            .map(|p| PieceEntry {
                lambda: p.lambda,
                ball: BallEntry {
                    center: p.center,
                    radius: p.radius,
                },
                indices: p.indices.clone(),
                threshold: p.threshold,
                cube_level: p.cube_level,
                cube: p.cube,
            })
            .collect(),
    };
    let values: Vec<f64> = d
        .pieces
        .iter()
        .flat_map(|p| p.molecule.iter().copied())
        .collect();
    write_json(&cfg.out.join(DECOMPOSITION_FILE), &file)?;
    write_f64_le(&cfg.out.join(MOLECULES_VALUES), &values)?;
    write_json(
        &cfg.out.join(MOLECULES_HEADER),
        &MatrixHeader {
            rows: d.pieces.len(),
            cols: model.space.len(),
            file: MOLECULES_VALUES.into(),
        },
    )?;
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(
            &path,
            r#"{"delta": 0.2, "samples": 64, "seeds": {"lattice": 5}}"#,
        )
        .unwrap();
        let cfg = resolve(Some(&path), &Overrides::default()).unwrap();
        assert_eq!(
            (cfg.delta, cfg.samples, cfg.seeds.lattice, cfg.seeds.splines),
            (0.2, 64, 5, 7)
        );
        let o = Overrides {
            reference: Some(Reference::Graph),
            delta: Some(0.01),
            strict_delta: true,
            samples: Some(8),
            seed: Some(11),
            out: Some("elsewhere".into()),
        };
        let cfg = resolve(Some(&path), &o).unwrap();
        assert_eq!(
            cfg.space,
            SpaceSource::Reference {
                reference: Reference::Graph
            }
        );
        assert!(cfg.strict_delta && cfg.delta == 0.01 && cfg.samples == 8);
        assert_eq!(
            [cfg.seeds.lattice, cfg.seeds.splines, cfg.seeds.experiments],
            [11; 3]
        );
        assert_eq!(cfg.out, PathBuf::from("elsewhere"));
    }

    #[test]
    fn invalid_overrides_are_rejected() {
        let strict = Overrides {
            strict_delta: true,
            ..Overrides::default()
        };
        assert!(resolve(None, &strict).is_err());
        let zero = Overrides {
            samples: Some(0),
            ..Overrides::default()
        };
        assert!(resolve(None, &zero).is_err());
    }
}
