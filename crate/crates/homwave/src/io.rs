//! Input formats for spaces and functions, and little-endian value tables.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use homwave_core::MetricMeasureSpace;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SpaceFormat {
    /// CSV `id,x1,…,xD,weight`.
    Coords,
    /// JSON `{"weights": [...], "dist": [[...], ...]}`.
    Matrix,
    /// CSV edge list `u,v,length` plus a node weight CSV `id,weight`.
    Graph,
}

#[derive(Deserialize)]
struct MatrixFile {
    weights: Vec<f64>,
    dist: Vec<Vec<f64>>,
}

pub fn load_space(
    path: &Path,
    format: SpaceFormat,
    weights: Option<&Path>,
) -> Result<MetricMeasureSpace> {
    let ctx = || format!("loading space {}", path.display());
    match format {
        SpaceFormat::Coords => {
            let (coords, w) = read_coords(path).with_context(ctx)?;
            MetricMeasureSpace::from_coords(coords, w)
                .map_err(anyhow::Error::new)
                .with_context(ctx)
        }
        SpaceFormat::Matrix => {
            let text = fs::read_to_string(path).with_context(ctx)?;
            let m: MatrixFile = serde_json::from_str(&text).with_context(ctx)?;
            let n = m.weights.len();
            if let Some((i, row)) = m.dist.iter().enumerate().find(|(_, r)| r.len() != n) {
                bail!(
                    "{}: row {i} has {} entries, expected {n}",
                    path.display(),
                    row.len()
                );
            }
            if m.dist.len() != n {
                bail!("{}: {} rows for {n} weights", path.display(), m.dist.len());
            }
            MetricMeasureSpace::from_distance_matrix(m.dist.concat(), m.weights)
                .map_err(anyhow::Error::new)
                .with_context(ctx)
        }
        SpaceFormat::Graph => {
            let wpath = weights.ok_or_else(|| anyhow!("graph format needs a node weight file"))?;
            let w = read_weights(wpath)
                .with_context(|| format!("loading weights {}", wpath.display()))?;
            let edges = read_edges(path).with_context(ctx)?;
            MetricMeasureSpace::from_graph(&edges, w)
                .map_err(anyhow::Error::new)
                .with_context(ctx)
        }
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?)
}

fn field(record: &csv::StringRecord, i: usize, line: u64) -> Result<f64> {
    let raw = record
        .get(i)
        .ok_or_else(|| anyhow!("line {line}: missing column {}", i + 1))?;
    raw.parse()
        .map_err(|_| anyhow!("line {line}: '{raw}' is not a number"))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn read_coords(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    let width = header.len();
    if width < 2 || &header[0] != "id" || &header[width - 1] != "weight" {
        bail!("header must be id,x1,...,xD,weight");
    }
    let mut ids = std::collections::BTreeSet::new();
    let (mut coords, mut weights) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != width {
            bail!("line {line}: {} columns, expected {width}", rec.len());
        }
        if !ids.insert(rec[0].to_string()) {
            bail!("line {line}: duplicate id {}", &rec[0]);
        }
        coords.push(
            (1..width - 1)
                .map(|i| field(&rec, i, line))
                .collect::<Result<Vec<_>>>()?,
        );
        weights.push(field(&rec, width - 1, line)?);
    }
    Ok((coords, weights))
}

fn read_weights(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = reader(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let id = field(&rec, 0, line)?;
        if id.fract() != 0.0 || id < 0.0 {
            bail!("line {line}: node id must be a nonnegative integer");
        }
        rows.push((id as usize, field(&rec, 1, line)?));
    }
    rows.sort_by_key(|r| r.0);
    for (i, r) in rows.iter().enumerate() {
        if r.0 != i {
            bail!("node ids must be 0..{} without gaps", rows.len());
        }
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}

fn read_edges(path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    let mut rdr = reader(path)?;
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let u = field(&rec, 0, line)?;
        let v = field(&rec, 1, line)?;
        if u.fract() != 0.0 || v.fract() != 0.0 || u < 0.0 || v < 0.0 {
            bail!("line {line}: node ids must be nonnegative integers");
        }
        edges.push((u as usize, v as usize, field(&rec, 2, line)?));
    }
    Ok(edges)
}

/// One real per nonempty line; `#` starts a comment.
pub fn read_function(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        values.push(
            t.parse::<f64>()
                .map_err(|_| anyhow!("{}:{}: '{t}' is not a number", path.display(), i + 1))?,
        );
    }
    if values.len() != expected {
        bail!(
            "{}: {} values for a space of {expected} points",
            path.display(),
            values.len()
        );
    }
    Ok(values)
}

pub fn write_function(path: &Path, values: &[f64]) -> Result<()> {
    let mut s = String::new();
    for v in values {
        s.push_str(&format!("{v:e}\n"));
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

pub fn write_f64_le(path: &Path, values: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn read_f64_le(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() % 8 != 0 {
        bail!(
            "{}: length {} is not a multiple of 8",
            path.display(),
            bytes.len()
        );
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tmp(name: &str, text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        (dir, p)
    }

    #[test]
    fn coords_file() {
        let (_d, p) = tmp("c.csv", "id,x1,weight\n0,0,0.5\n1,1,0.5\n");
        let s = load_space(&p, SpaceFormat::Coords, None).unwrap();
        assert_eq!(s.dist(0, 1), 1.0);
        assert_eq!(s.total_mass(), 1.0);
        let (_d, p) = tmp("one.csv", "id,x1,x2,weight\n7,0.5,0.5,1\n");
        let s = load_space(&p, SpaceFormat::Coords, None).unwrap();
        assert_eq!((s.len(), s.diameter(), s.total_mass()), (1, 0.0, 1.0));
    }

    #[test]
    fn bad_inputs() {
        let (_d, p) = tmp("c.csv", "id,x1,weight\n0,0,0.5\n1,abc,0.5\n");
        let e = format!(
            "{:#}",
            load_space(&p, SpaceFormat::Coords, None).unwrap_err()
        );
        assert!(e.contains("line 3"), "{e}");
        let (_d, p) = tmp("c.csv", "id,x1,weight\n0,0,0.5\n1,1,0\n");
        assert!(load_space(&p, SpaceFormat::Coords, None).is_err());
        let (_d, p) = tmp(
            "m.json",
            r#"{"weights":[1,1,1],"dist":[[0,1,3],[1,0,1],[3,1,0]]}"#,
        );
        let e = format!(
            "{:#}",
            load_space(&p, SpaceFormat::Matrix, None).unwrap_err()
        );
        assert!(e.to_lowercase().contains("triangle"), "{e}");
        let (_d, p) = tmp("m.json", r#"{"weights":[1,1],"dist":[[0,1],[2,0]]}"#);
        assert!(load_space(&p, SpaceFormat::Matrix, None).is_err());
        let missing = Path::new("/nonexistent/space.csv");
        let e = format!(
            "{:#}",
            load_space(missing, SpaceFormat::Coords, None).unwrap_err()
        );
        assert!(e.contains("/nonexistent/space.csv"));
    }

    #[test]
    fn graph_file() {
        let dir = tempfile::tempdir().unwrap();
        let e = dir.path().join("e.csv");
        let w = dir.path().join("w.csv");
        fs::write(&e, "u,v,length\n0,1,1\n1,2,2\n").unwrap();
        fs::write(&w, "id,weight\n2,1\n0,1\n1,1\n").unwrap();
        let s = load_space(&e, SpaceFormat::Graph, Some(&w)).unwrap();
        assert_eq!(s.dist(0, 2), 3.0);
        assert!(load_space(&e, SpaceFormat::Graph, None).is_err());
    }

    #[test]
    fn function_file() {
        let (_d, p) = tmp("f.txt", "1.5\n# note\n\n-2e-3\n");
        assert_eq!(read_function(&p, 2).unwrap(), vec![1.5, -2e-3]);
        assert!(read_function(&p, 3).is_err());
        let (_d, p) = tmp("f.txt", "1\nx\n");
        let e = format!("{:#}", read_function(&p, 2).unwrap_err());
        assert!(e.contains(":2:"), "{e}");
    }

    proptest! {
        #[test]
        fn binary_round_trip(v in proptest::collection::vec(proptest::num::f64::ANY, 0..64)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("v.bin");
            write_f64_le(&p, &v).unwrap();
            let back = read_f64_le(&p).unwrap();
            prop_assert_eq!(back.len(), v.len());
            for (a, b) in back.iter().zip(&v) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn function_text_round_trip(v in proptest::collection::vec(-1e300f64..1e300, 1..32)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("f.txt");
            write_function(&p, &v).unwrap();
            prop_assert_eq!(read_function(&p, v.len()).unwrap(), v);
        }
    }
}
