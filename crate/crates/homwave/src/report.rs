//! Check records and the fixed registry of checks.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Pass-class checks are exact statements and decide the exit status;
/// info-class checks carry fitted constants only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Pass,
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

pub struct Entry {
    pub name: &'static str,
    /// Stable identifier of the property being checked.
    pub anchor: &'static str,
    pub class: Class,
}

const fn pass(name: &'static str, anchor: &'static str) -> Entry {
    Entry {
        name,
        anchor,
        class: Class::Pass,
    }
}

const fn info(name: &'static str, anchor: &'static str) -> Entry {
    Entry {
        name,
        anchor,
        class: Class::Info,
    }
}

pub const REGISTRY: &[Entry] = &[
    info("space.doubling", "doubling-profile"),
    pass("lattice.nets", "nets/separation-covering-nesting"),
    pass("lattice.cubes", "cubes/nesting-partition-proximity"),
    info("lattice.sandwich", "cubes/ball-sandwich"),
    pass("lattice.random_cubes", "cubes/random-draw-axioms"),
    pass("lattice.lebesgue", "cubes/finest-averages"),
    info("lattice.separated_sum", "nets/separated-exponential-sum"),
    pass("splines.partition", "splines/partition-of-unity"),
    pass("splines.interpolation", "splines/interpolation"),
    pass("splines.refinement", "splines/refinement-residual"),
    info("splines.support", "splines/support-sandwich"),
    info("splines.regularity", "splines/holder-fit"),
    info("splines.riesz", "splines/riesz-bounds"),
    pass("wavelets.orthonormality", "wavelets/orthonormality"),
    pass("wavelets.cancellation", "wavelets/cancellation"),
    pass(
        "wavelets.cross_level",
        "wavelets/orthogonal-to-coarser-space",
    ),
    pass("wavelets.reconstruction", "wavelets/plancherel-round-trip"),
    pass("wavelets.dimension", "wavelets/dimension-count"),
    pass("wavelets.inv_sqrt", "wavelets/inverse-square-root"),
    info("wavelets.gram_spectrum", "wavelets/projected-gram-spectrum"),
    pass("wavelets.lower_bound", "wavelets/core-lower-bound"),
    pass("wavelets.decay", "wavelets/exponential-decay"),
    info("wavelets.holder", "wavelets/holder-fit"),
    pass("hardy.atoms", "hardy/atoms"),
    pass("hardy.molecules", "hardy/wavelet-molecules"),
    pass("hardy.weak_type", "hardy/dyadic-maximal-weak-type"),
    pass("hardy.level_sets", "hardy/dyadic-maximal-level-sets"),
    info("hardy.maximal_comparison", "hardy/dyadic-vs-ball-maximal"),
    pass(
        "hardy.maximal_domination",
        "hardy/cube-dominated-by-core-maximal",
    ),
    pass("hardy.norm_bands", "hardy/square-function-norm-bands"),
    pass("hardy.decomposition", "hardy/molecular-decomposition"),
    pass("hardy.khintchine", "hardy/khintchine"),
    pass("hardy.sign_isometry", "hardy/sign-flip-isometry"),
    pass("hardy.square_vs_signs", "hardy/square-function-vs-signs"),
    pass("hardy.sign_uniform", "hardy/sign-uniform-bound"),
    pass("hardy.cz_kernel", "hardy/sign-kernel-size-smoothness"),
];

pub fn entry(name: &str) -> Option<&'static Entry> {
    REGISTRY.iter().find(|e| e.name == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub anchor: String,
    pub class: Class,
    pub status: Status,
    pub values: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub config_hash: String,
    pub space: String,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: Meta,
    pub checks: Vec<Check>,
}

/// Collects checks; [`Recorder::finish`] insists on exactly one record per
/// registry entry, in registry order.
pub struct Recorder {
    meta: Meta,
    checks: BTreeMap<&'static str, Check>,
}

impl Recorder {
    pub fn new(meta: Meta) -> Self {
        Self {
            meta,
            checks: BTreeMap::new(),
        }
    }

    /// `ok` is ignored for info-class checks.
    pub fn record(&mut self, name: &str, ok: bool, values: Value) {
        let e = entry(name).unwrap_or_else(|| panic!("check {name} is not registered"));
        let status = match e.class {
            Class::Info => Status::Info,
            Class::Pass if ok => Status::Pass,
            Class::Pass => Status::Fail,
        };
        let values = match values {
            Value::Object(m) => m.into_iter().collect(),
            other => BTreeMap::from([("value".to_string(), other)]),
        };
        let check = Check {
            name: e.name.into(),
            anchor: e.anchor.into(),
            class: e.class,
            status,
            values,
        };
        if self.checks.insert(e.name, check).is_some() {
            panic!("check {name} recorded twice");
        }
    }

    /// Records a failure for a check whose computation errored.
    pub fn error(&mut self, name: &str, err: &anyhow::Error) {
        self.record(
            name,
            false,
            serde_json::json!({ "error": format!("{err:#}") }),
        );
    }

    pub fn finish(mut self) -> Result<Report> {
        let mut checks = Vec::with_capacity(REGISTRY.len());
        for e in REGISTRY {
            match self.checks.remove(e.name) {
                Some(c) => checks.push(c),
                None => bail!("check {} was not run", e.name),
            }
        }
        Ok(Report {
            meta: self.meta,
            checks,
        })
    }
}

impl Report {
    /// No pass-class check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// One row per check: name, anchor, status, then `key=value` pairs.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["name", "anchor", "class", "status", "values"])?;
        for c in &self.checks {
            let values: Vec<String> = c
                .values
                .iter()
                .filter(|(_, v)| !v.is_array() && !v.is_object())
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            w.write_record([
                c.name.as_str(),
                c.anchor.as_str(),
                as_str(c.class),
                status_str(c.status),
                values.join(";").as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Human-readable summary, one line per check.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "space {} ({} points), config {}\n",
            self.meta.space,
            self.meta.points,
            &self.meta.config_hash[..12.min(self.meta.config_hash.len())]
        );
        for c in &self.checks {
            s.push_str(&format!(
                "{:<5} {:<28} {}\n",
                status_str(c.status),
                c.name,
                c.anchor
            ));
        }
        let failed = self.failures().len();
        s.push_str(&format!(
            "{} checks, {} failed\n",
            self.checks.len(),
            failed
        ));
        s
    }
}

fn as_str(c: Class) -> &'static str {
    match c {
        Class::Pass => "pass",
        Class::Info => "info",
    }
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Info => "info",
    }
}
