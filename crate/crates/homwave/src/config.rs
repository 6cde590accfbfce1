//! Run configuration: a single JSON file, every field optional.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io::SpaceFormat;
use crate::reference::Reference;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum SpaceSource {
    Reference {
        reference: Reference,
    },
    File {
        path: PathBuf,
        format: SpaceFormat,
        /// Node weight CSV for the graph format.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<PathBuf>,
    },
}

impl Default for SpaceSource {
    fn default() -> Self {
        Self::Reference {
            reference: Reference::Grid1d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub lattice: u64,
    pub splines: u64,
    pub experiments: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            lattice: 1,
            splines: 7,
            experiments: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Orthonormality, cancellation, cross-level, reconstruction, resynthesis.
    pub exact: f64,
    /// Spline partition of unity.
    pub partition: f64,
    /// Whitening target of the inverse square root.
    pub inv_sqrt: f64,
    /// Eigendecomposition vs. series disagreement.
    pub agreement: f64,
    /// Binomial coefficients vs. exact values.
    pub coefficients: f64,
    /// `T_ε` isometry.
    pub isometry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact: 1e-8,
            partition: 1e-12,
            inv_sqrt: 1e-10,
            agreement: 1e-7,
            coefficients: 1e-12,
            isometry: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiments {
    pub atoms: usize,
    pub molecules: usize,
    pub decompositions: usize,
    pub weak_functions: usize,
    pub weak_lambdas: usize,
    pub khintchine_vectors: usize,
    pub khintchine_trials: usize,
    pub sign_trials: usize,
    pub cz_draws: usize,
    pub cz_samples: usize,
    pub riesz_trials: usize,
    pub doubling_samples: usize,
    /// Run the series inverse square root on every level (slow on large levels).
    pub neumann: bool,
}

impl Default for Experiments {
    fn default() -> Self {
        Self {
            atoms: 100,
            molecules: 100,
            decompositions: 50,
            weak_functions: 20,
            weak_lambdas: 20,
            khintchine_vectors: 50,
            khintchine_trials: 2000,
            sign_trials: 200,
            cz_draws: 10,
            cz_samples: 20_000,
            riesz_trials: 20,
            doubling_samples: 2000,
            neumann: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceSource,
    pub delta: f64,
    /// Scale range; both `None` selects it from the diameter and separation.
    pub k_min: Option<i32>,
    pub k_max: Option<i32>,
    pub strict_delta: bool,
    pub samples: usize,
    pub seeds: Seeds,
    pub tolerances: Tolerances,
    pub experiments: Experiments,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            space: SpaceSource::default(),
            delta: 0.25,
            k_min: None,
            k_max: None,
            strict_delta: false,
            samples: 256,
            seeds: Seeds::default(),
            tolerances: Tolerances::default(),
            experiments: Experiments::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Reads a config file; relative space paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if let SpaceSource::File {
            path: p, weights, ..
        } = &mut cfg.space
        {
            let base = path.parent().unwrap_or(Path::new("."));
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if let Some(w) = weights {
                if w.is_relative() {
                    *w = base.join(&*w);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            bail!("delta = {} must lie in (0, 1)", self.delta);
        }
        if self.strict_delta && self.delta > homwave_core::lattice::STRICT_DELTA_MAX {
            bail!("strict mode needs delta <= 1/96, got {}", self.delta);
        }
        if self.k_min.is_some() != self.k_max.is_some() {
            bail!("k_min and k_max must be given together");
        }
        if self.samples == 0 {
            bail!("samples must be at least 1");
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("exact", t.exact),
            ("partition", t.partition),
            ("inv_sqrt", t.inv_sqrt),
            ("agreement", t.agreement),
            ("coefficients", t.coefficients),
            ("isometry", t.isometry),
        ] {
            if v.is_nan() || v <= 0.0 {
                bail!("tolerance {name} must be positive, got {v}");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn space_name(&self) -> String {
        match &self.space {
            SpaceSource::Reference { reference } => reference.name().to_string(),
            SpaceSource::File { path, .. } => path.display().to_string(),
        }
    }
}
