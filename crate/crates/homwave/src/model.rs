//! The full construction for one space, and its on-disk artifacts.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use homwave_core::lattice::{auto_range, ParentMap, SystemKind};
use homwave_core::wavelets::{LevelReport, WaveletIndex};
use homwave_core::{
    assign_parents, build_cubes, build_nets, build_wavelets, estimate_splines, DyadicSystem,
    MetricMeasureSpace, NetHierarchy, ParentMode, SplineSystem, WaveletBasis,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SpaceSource};
use crate::io::{read_f64_le, read_json, write_f64_le, write_json};

pub const NETS_FILE: &str = "nets.json";
pub const CUBES_FILE: &str = "cubes.json";
pub const SPLINES_HEADER: &str = "splines.json";
pub const SPLINES_VALUES: &str = "splines.bin";
pub const BASIS_HEADER: &str = "basis.json";
pub const BASIS_VALUES: &str = "basis.bin";
pub const GRAMS_VALUES: &str = "grams.bin";

pub struct Model {
    pub space: MetricMeasureSpace,
    pub nets: NetHierarchy,
    pub cubes: DyadicSystem,
    pub splines: SplineSystem,
    pub basis: WaveletBasis,
}

pub fn load_space(cfg: &RunConfig) -> Result<MetricMeasureSpace> {
    match &cfg.space {
        SpaceSource::Reference { reference } => reference
            .build()
            .with_context(|| format!("building reference space {}", reference.name())),
        SpaceSource::File {
            path,
            format,
            weights,
        } => crate::io::load_space(path, *format, weights.as_deref()),
    }
}

pub fn nets_for(space: &MetricMeasureSpace, cfg: &RunConfig) -> Result<NetHierarchy> {
    let (k_min, k_max) = match (cfg.k_min, cfg.k_max) {
        (Some(a), Some(b)) => (a, b),
        _ => auto_range(space, cfg.delta).context("lattice: choosing the scale range")?,
    };
    build_nets(space, cfg.delta, k_min, k_max, cfg.strict_delta).context("lattice: building nets")
}

impl Model {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let space = load_space(cfg)?;
        Self::build_on(space, cfg)
    }

    pub fn build_on(space: MetricMeasureSpace, cfg: &RunConfig) -> Result<Self> {
        let nets = nets_for(&space, cfg)?;
        let parents = assign_parents(&space, &nets, ParentMode::Nearest, cfg.seeds.lattice)
            .context("lattice: parents")?;
        let cubes = build_cubes(&space, &nets, &parents).context("lattice: cubes")?;
        let splines = estimate_splines(&space, &nets, cfg.samples, cfg.seeds.splines)
            .context("splines: estimation")?;
        let basis = build_wavelets(&space, &splines, &cubes).context("wavelets: construction")?;
        Ok(Self {
            space,
            nets,
            cubes,
            splines,
            basis,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_json(&dir.join(NETS_FILE), &NetsFile::new(&self.nets))?;
        write_json(&dir.join(CUBES_FILE), &CubesFile::new(&self.cubes))?;
        save_splines(&self.splines, dir)?;
        save_basis(&self.basis, dir)
    }

    /// Rebuilds the space and nets from `cfg` and reads everything else from `dir`.
    pub fn load(cfg: &RunConfig, dir: &Path) -> Result<Self> {
        let space = load_space(cfg)?;
        let nets = nets_for(&space, cfg)?;
        let cubes: CubesFile = read_json(&dir.join(CUBES_FILE))?;
        let cubes = cubes.into_system(&space)?;
        let splines = load_splines(&space, &nets, dir)?;
        let mut basis = load_basis(&space, dir)?;
        if !basis.is_empty() {
            basis
                .attach_lower_bound(&space, &cubes)
                .context("wavelets: lower-bound search")?;
        }
        Ok(Self {
            space,
            nets,
            cubes,
            splines,
            basis,
        })
    }
}

#[derive(Serialize, Deserialize)]
pub struct NetsFile {
    pub delta: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub strict: bool,
    pub levels: Vec<NetLevel>,
}

#[derive(Serialize, Deserialize)]
pub struct NetLevel {
    pub k: i32,
    pub points: Vec<usize>,
}

impl NetsFile {
    pub fn new(nets: &NetHierarchy) -> Self {
        Self {
            delta: nets.delta(),
            k_min: nets.k_min(),
            k_max: nets.k_max(),
            strict: nets.strict(),
            levels: nets
                .levels()
                .map(|k| NetLevel {
                    k,
                    points: nets.net(k).to_vec(),
                })
                .collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct CubesFile {
    pub delta: f64,
    pub strict: bool,
    /// `null` for the deterministic system, else the draw seed.
    pub seed: Option<u64>,
    pub levels: Vec<CubeLevel>,
}

#[derive(Serialize, Deserialize)]
pub struct CubeLevel {
    pub k: i32,
    /// Net point of each cube label.
    pub alphas: Vec<usize>,
    /// Cube label of each cloud point.
    pub cube_of: Vec<u32>,
    /// Label at level `k − 1` of each cube's parent (empty at the coarsest level).
    pub parent: Vec<u32>,
}

impl CubesFile {
    pub fn new(cubes: &DyadicSystem) -> Self {
        let levels = (cubes.k_min()..=cubes.k_max())
            .map(|k| CubeLevel {
                k,
                alphas: cubes.centers(k).to_vec(),
                cube_of: cubes.labels(k).to_vec(),
                parent: if k == cubes.k_min() {
                    Vec::new()
                } else {
                    (0..cubes.centers(k).len())
                        .map(|b| cubes.parent(k - 1, b) as u32)
                        .collect()
                },
            })
            .collect();
        let seed = match cubes.kind() {
            SystemKind::Deterministic => None,
            SystemKind::Random { seed } => Some(seed),
        };
        Self {
            delta: cubes.delta(),
            strict: cubes.strict(),
            seed,
            levels,
        }
    }

    pub fn into_system(self, space: &MetricMeasureSpace) -> Result<DyadicSystem> {
        let Some(first) = self.levels.first() else {
            bail!("cube file has no levels")
        };
        let k_min = first.k;
        let kind = self
            .seed
            .map_or(SystemKind::Deterministic, |seed| SystemKind::Random {
                seed,
            });
        let up = self
            .levels
            .iter()
            .skip(1)
            .map(|l| l.parent.clone())
            .collect();
        let (centers, cube_of) = self
            .levels
            .into_iter()
            .map(|l| (l.alphas, l.cube_of))
            .unzip();
        DyadicSystem::from_parts(
            space,
            self.delta,
            k_min,
            self.strict,
            kind,
            centers,
            cube_of,
            ParentMap::from_tables(up),
        )
        .context("lattice: reading cubes")
    }
}

#[derive(Serialize, Deserialize)]
struct SplinesFile {
    samples: usize,
    seed: u64,
    byte_order: String,
    levels: Vec<MatrixBlock>,
}

/// Row-major `rows × cols` block starting at value `offset` of the binary file.
#[derive(Serialize, Deserialize)]
struct MatrixBlock {
    k: i32,
    rows: usize,
    cols: usize,
    offset: usize,
}

const LITTLE_ENDIAN: &str = "little-endian f64, row-major";

fn push_matrix(values: &mut Vec<f64>, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        values.extend(m.row(r).iter());
    }
}

fn take_matrix(values: &[f64], b: &MatrixBlock) -> Result<DMatrix<f64>> {
    let end = b.offset + b.rows * b.cols;
    if end > values.len() {
        bail!("value table too short for level {}", b.k);
    }
    Ok(DMatrix::from_row_slice(
        b.rows,
        b.cols,
        &values[b.offset..end],
    ))
}

pub fn save_splines(sp: &SplineSystem, dir: &Path) -> Result<()> {
    let mut values = Vec::new();
    let mut levels = Vec::new();
    for k in sp.k_min()..=sp.k_max() {
        let m = sp.values(k);
        levels.push(MatrixBlock {
            k,
            rows: m.nrows(),
            cols: m.ncols(),
            offset: values.len(),
        });
        push_matrix(&mut values, m);
    }
    let header = SplinesFile {
        samples: sp.samples(),
        seed: sp.seed(),
        byte_order: LITTLE_ENDIAN.into(),
        levels,
    };
    write_json(&dir.join(SPLINES_HEADER), &header)?;
    write_f64_le(&dir.join(SPLINES_VALUES), &values)
}

fn load_splines(
    space: &MetricMeasureSpace,
    nets: &NetHierarchy,
    dir: &Path,
) -> Result<SplineSystem> {
    let header: SplinesFile = read_json(&dir.join(SPLINES_HEADER))?;
    let values = read_f64_le(&dir.join(SPLINES_VALUES))?;
    let mats = header
        .levels
        .iter()
        .map(|b| take_matrix(&values, b))
        .collect::<Result<Vec<_>>>()?;
    SplineSystem::from_values(space, nets, header.samples, header.seed, mats)
        .context("splines: reading values")
}

#[derive(Serialize, Deserialize)]
pub struct BasisFile {
    pub delta: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub n_points: usize,
    pub eps0: Option<f64>,
    pub byte_order: String,
    /// Rows of the value table: coarse functions first, then wavelets.
    pub coarse: usize,
    pub levels: Vec<LevelEntry>,
    pub wavelets: Vec<WaveletEntry>,
}

#[derive(Serialize, Deserialize)]
pub struct LevelEntry {
    pub k: i32,
    pub start: usize,
    pub count: usize,
    pub scale: f64,
    pub min_eig: f64,
    pub max_eig: f64,
    pub discrepancy: f64,
    pub excluded: bool,
    /// Projected Gram block in the Gram table.
    pub gram_offset: usize,
    pub gram_size: usize,
}

#[derive(Serialize, Deserialize)]
pub struct WaveletEntry {
    pub k: i32,
    pub alpha: usize,
    pub beta: usize,
    pub center: usize,
    pub cube_mass: f64,
    pub mu_center: f64,
    pub volume_scale: f64,
}

fn save_basis(basis: &WaveletBasis, dir: &Path) -> Result<()> {
    let mut grams = Vec::new();
    let mut levels = Vec::new();
    for (i, l) in basis.levels().iter().enumerate() {
        let g = basis.grams().get(i);
        let size = g.map_or(0, |g| g.nrows());
        levels.push(LevelEntry {
            k: l.k,
            start: l.start,
            count: l.count,
            scale: basis.scale(l.k),
            min_eig: l.min_eig,
            max_eig: l.max_eig,
            discrepancy: l.discrepancy,
            excluded: l.excluded,
            gram_offset: grams.len(),
            gram_size: size,
        });
        if let Some(g) = g {
            push_matrix(&mut grams, g);
        }
    }
    let wavelets = basis
        .index()
        .iter()
        .map(|w| WaveletEntry {
            k: w.k,
            alpha: w.alpha,
            beta: w.beta,
            center: w.center,
            cube_mass: w.cube_mass,
            mu_center: w.mu_center,
            volume_scale: w.volume_scale,
        })
        .collect();
    let header = BasisFile {
        delta: basis.delta(),
        k_min: basis.k_min(),
        k_max: basis.k_max(),
        n_points: basis.n_points(),
        eps0: basis.eps0(),
        byte_order: LITTLE_ENDIAN.into(),
        coarse: basis.coarse().len(),
        levels,
        wavelets,
    };
    let values: Vec<f64> = basis
        .coarse()
        .iter()
        .chain(basis.wavelets())
        .flatten()
        .copied()
        .collect();
    write_json(&dir.join(BASIS_HEADER), &header)?;
    write_f64_le(&dir.join(BASIS_VALUES), &values)?;
    write_f64_le(&dir.join(GRAMS_VALUES), &grams)
}

pub fn load_basis(space: &MetricMeasureSpace, dir: &Path) -> Result<WaveletBasis> {
    let h: BasisFile = read_json(&dir.join(BASIS_HEADER))?;
    let values = read_f64_le(&dir.join(BASIS_VALUES))?;
    let n = h.n_points;
    if n != space.len() {
        bail!("basis has {n} points, space has {}", space.len());
    }
    if values.len() != (h.coarse + h.wavelets.len()) * n {
        bail!(
            "basis value table has {} entries, expected {}",
            values.len(),
            (h.coarse + h.wavelets.len()) * n
        );
    }
    let mut rows = values.chunks_exact(n.max(1)).map(<[f64]>::to_vec);
    let coarse: Vec<Vec<f64>> = rows.by_ref().take(h.coarse).collect();
    let wavelet_rows: Vec<Vec<f64>> = rows.collect();
    let index = h
        .wavelets
        .iter()
        .map(|w| WaveletIndex {
            k: w.k,
            alpha: w.alpha,
            beta: w.beta,
            center: w.center,
            cube_mass: w.cube_mass,
            mu_center: w.mu_center,
            volume_scale: w.volume_scale,
        })
        .collect();
    let levels = h
        .levels
        .iter()
        .map(|l| LevelReport {
            k: l.k,
            start: l.start,
            count: l.count,
            min_eig: l.min_eig,
            max_eig: l.max_eig,
            discrepancy: l.discrepancy,
            excluded: l.excluded,
        })
        .collect();
    let mut basis = WaveletBasis::from_parts(
        h.delta,
        h.k_min,
        h.k_max,
        space.weights().to_vec(),
        coarse,
        wavelet_rows,
        index,
        levels,
    )
    .context("wavelets: reading basis")?;
    let gram_values = read_f64_le(&dir.join(GRAMS_VALUES))?;
    let grams = h
        .levels
        .iter()
        .map(|l| {
            take_matrix(
                &gram_values,
                &MatrixBlock {
                    k: l.k,
                    rows: l.gram_size,
                    cols: l.gram_size,
                    offset: l.gram_offset,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    basis.set_grams(grams)?;
    Ok(basis)
}
