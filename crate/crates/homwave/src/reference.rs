//! The four reference spaces used by the acceptance suite.

use homwave_core::{rng, MetricMeasureSpace};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// 1024 equally spaced points in `[0, 1)`, weights `1/1024`.
    Grid1d,
    /// 32 × 32 grid in `[0, 1)²`, weights `1/1024`.
    Grid2d,
    /// `Grid1d` with distances raised to the power 0.7.
    Snowflake,
    /// 500 uniform points in the unit square joined when closer than a
    /// connectivity radius, with shortest-path distances.
    Graph,
}

pub const GRID_1D: usize = 1024;
pub const GRID_2D_SIDE: usize = 32;
pub const SNOWFLAKE_EXPONENT: f64 = 0.7;
pub const GRAPH_NODES: usize = 500;
const GRAPH_SEED: u64 = 0x9e0;

impl Reference {
    pub const ALL: [Reference; 4] = [Self::Grid1d, Self::Grid2d, Self::Snowflake, Self::Graph];

    pub fn name(self) -> &'static str {
        match self {
            Self::Grid1d => "grid1d",
            Self::Grid2d => "grid2d",
            Self::Snowflake => "snowflake",
            Self::Graph => "graph",
        }
    }

    pub fn build(self) -> homwave_core::Result<MetricMeasureSpace> {
        match self {
            Self::Grid1d => grid_1d(GRID_1D),
            Self::Grid2d => grid_2d(GRID_2D_SIDE),
            Self::Snowflake => grid_1d(GRID_1D)?.snowflake(SNOWFLAKE_EXPONENT),
            Self::Graph => geometric_graph(GRAPH_NODES, GRAPH_SEED),
        }
    }
}

pub fn grid_1d(n: usize) -> homwave_core::Result<MetricMeasureSpace> {
    let coords = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
    MetricMeasureSpace::from_coords(coords, vec![1.0 / n as f64; n])
}

pub fn grid_2d(side: usize) -> homwave_core::Result<MetricMeasureSpace> {
    let n = side * side;
    let coords = (0..n)
        .map(|i| {
            vec![
                (i / side) as f64 / side as f64,
                (i % side) as f64 / side as f64,
            ]
        })
        .collect();
    MetricMeasureSpace::from_coords(coords, vec![1.0 / n as f64; n])
}

/// Random geometric graph on `n` uniform points of the unit square. The
/// radius starts at the connectivity threshold `√(2 ln n / (π n))` and grows
/// by 10% until the graph is connected.
pub fn geometric_graph(n: usize, seed: u64) -> homwave_core::Result<MetricMeasureSpace> {
    let mut rng = rng::from_seed(seed);
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen(), rng.gen()]).collect();
    let dist = |a: usize, b: usize| {
        ((pts[a][0] - pts[b][0]).powi(2) + (pts[a][1] - pts[b][1]).powi(2)).sqrt()
    };
    let mut radius = (2.0 * (n as f64).ln() / (std::f64::consts::PI * n as f64)).sqrt();
    loop {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let d = dist(a, b);
                if d < radius {
                    edges.push((a, b, d));
                }
            }
        }
        match MetricMeasureSpace::from_graph(&edges, vec![1.0 / n as f64; n]) {
            Err(homwave_core::Error::Disconnected(_)) => radius *= 1.1,
            other => return other,
        }
    }
}
