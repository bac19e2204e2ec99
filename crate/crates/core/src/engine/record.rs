use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::lattice::{Configuration, ProcessKind};

/// Observables of one run sampled at user-listed macroscopic times.
///
/// Death counters are kept both as raw integers (for exact ledgers) and
/// rescaled by `1/N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub kind: ProcessKind,
    pub n: u32,
    pub seed: u64,
    pub sample_times: Vec<f64>,
    /// `(test function id, <pi^N, G> at each sample time)`, in the native
    /// coordinates of the process.
    pub pairings: Vec<(String, Vec<f64>)>,
    /// Block centres in the fixed frame and their signed densities per time.
    pub block_centers: Vec<f64>,
    pub block_density: Vec<Vec<f64>>,
    /// The same in the boundary frame.
    pub frame_block_centers: Vec<f64>,
    pub frame_block_density: Vec<Vec<f64>>,
    pub d_plus: Vec<f64>,
    pub d_minus: Vec<f64>,
    /// `b(sigma_t) / N`.
    pub b_path: Vec<f64>,
    pub deaths_plus: Vec<u64>,
    pub deaths_minus: Vec<u64>,
    pub particles: Vec<u64>,
    pub initial_particles: u64,
    /// Largest deviation of the outermost block densities from their initial
    /// values; large values mean the window is too small for the horizon.
    pub edge_deviation: f64,
    pub events: u64,
    #[serde(skip)]
    pub final_state: Option<Configuration>,
}

impl TrajectoryRecord {
    /// Rows `time,observable,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,observable,value\n");
        for (k, &t) in self.sample_times.iter().enumerate() {
            for (id, vals) in &self.pairings {
                let _ = writeln!(s, "{t},pairing:{id},{}", vals[k]);
            }
            let _ = writeln!(s, "{t},d_plus,{}", self.d_plus[k]);
            let _ = writeln!(s, "{t},d_minus,{}", self.d_minus[k]);
            let _ = writeln!(s, "{t},b,{}", self.b_path[k]);
            let _ = writeln!(s, "{t},particles,{}", self.particles[k]);
        }
        s
    }

    /// Rows `time,block_center,density` in the fixed frame.
    pub fn blocks_csv(&self) -> String {
        blocks_csv(&self.sample_times, &self.block_centers, &self.block_density)
    }

    pub fn frame_blocks_csv(&self) -> String {
        blocks_csv(&self.sample_times, &self.frame_block_centers, &self.frame_block_density)
    }
}

pub(crate) fn blocks_csv(times: &[f64], centers: &[f64], density: &[Vec<f64>]) -> String {
    let mut s = String::from("time,block_center,density\n");
    for (t, row) in times.iter().zip(density) {
        for (c, v) in centers.iter().zip(row) {
            let _ = writeln!(s, "{t},{c},{v}");
        }
    }
    s
}
