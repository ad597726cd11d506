//! Monte Carlo RMSE evaluation of the DOA estimators.
//!
//! Every run draws its snapshots from a seed derived only from the master
//! seed and the run index ([`run_seed`]). Cells of a sweep that differ in SNR,
//! distance or algorithm therefore see the same source and noise samples,
//! which keeps comparisons between cells paired and makes the output
//! independent of how rayon schedules the work.

mod assign;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

pub use assign::{assign_targets, rmse, Assignment, MAX_ASSIGN_TARGETS};

use crate::array::{ArrayGeometry, Direction};
use crate::doa::{
    estimate_doa_partial, synthesize_snapshots, Algorithm, SearchConfig, TargetSet,
    DEFAULT_SNAPSHOTS,
};
use crate::linkbudget::{scaled_snr_db, through_wall_snr_db, WallMaterial};
use crate::{Error, Result};

/// Monte Carlo runs per cell when not specified.
pub const DEFAULT_RUNS: usize = 100;

/// One simulated operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub geom: ArrayGeometry,
    pub targets: TargetSet,
    /// Per-element SNR at the reference distance (dB).
    pub snr_nominal_db: f64,
    pub d0: f64,
    pub distance: f64,
    pub p_exponent: f64,
    pub n_snapshots: usize,
    pub algorithm: Algorithm,
    pub material: Option<WallMaterial>,
    pub search: SearchConfig,
}

impl Scenario {
    /// Default scene at `distance` with reference distance 1 m and `p = 2`.
    pub fn new(geom: ArrayGeometry, algorithm: Algorithm, snr_nominal_db: f64, distance: f64) -> Self {
        Self {
            geom,
            targets: TargetSet::default(),
            snr_nominal_db,
            d0: 1.0,
            distance,
            p_exponent: 2.0,
            n_snapshots: DEFAULT_SNAPSHOTS,
            algorithm,
            material: None,
            search: SearchConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::domain(format!("distance must be > 0, got {}", self.distance)));
        }
        if !(0.0..=4.0).contains(&self.p_exponent) {
            return Err(Error::Config(format!(
                "scaling exponent must lie in [0, 4], got {}",
                self.p_exponent
            )));
        }
        if self.n_snapshots == 0 {
            return Err(Error::domain("n_snapshots must be >= 1"));
        }
        if self.targets.len() >= self.geom.len() {
            return Err(Error::domain(format!(
                "{} targets need more than {} array elements",
                self.targets.len(),
                self.geom.len()
            )));
        }
        if self.snr_nominal_db.is_nan() {
            return Err(Error::domain("nominal SNR is NaN"));
        }
        if let Some(m) = &self.material {
            m.validate()?;
        }
        self.search.validate()
    }

    /// Per-element SNR fed to the snapshot model: the nominal value moved to
    /// `distance` by the scaling law, minus any wall penalty.
    pub fn effective_snr_db(&self) -> Result<f64> {
        let snr = scaled_snr_db(self.snr_nominal_db, self.d0, self.distance, self.p_exponent)?;
        Ok(match &self.material {
            Some(m) => through_wall_snr_db(snr, m),
            None => snr,
        })
    }
}

/// Counter-based seed for run `index`: the SplitMix64 finaliser applied to
/// `master + (index + 1) * golden_gamma`.
pub fn run_seed(master_seed: u64, index: usize) -> u64 {
    let mut z = master_seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub index: usize,
    pub seed: u64,
    /// Estimates in truth order after assignment; padded when degenerate.
    pub estimates: Vec<Direction>,
    /// Summed squared error of the assigned estimates (deg^2).
    pub squared_error: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub rmse_deg: f64,
    pub degenerate_runs: usize,
    pub m_runs: usize,
    pub master_seed: u64,
    pub effective_snr_db: f64,
    pub runs: Vec<RunOutcome>,
}

fn run_once(sc: &Scenario, snr_db: f64, truth: &[Direction], index: usize, seed: u64) -> Result<RunOutcome> {
    let x = synthesize_snapshots(&sc.geom, &sc.targets, snr_db, sc.n_snapshots, seed)?;
    let mut est = estimate_doa_partial(&x, &sc.geom, truth.len(), sc.algorithm, &sc.search)?;
    let degenerate = est.len() < truth.len();
    // missing peaks are scored against the far corner of the search grid
    let corner = Direction {
        theta: sc.search.limit_deg,
        phi: sc.search.limit_deg,
    };
    est.resize(truth.len(), corner);
    let a = assign_targets(&est, truth)?;
    Ok(RunOutcome {
        index,
        seed,
        estimates: a.perm.iter().map(|&j| est[j]).collect(),
        squared_error: a.cost,
        degenerate,
    })
}

/// `m_runs` independent trials of `sc`, aggregated into one RMSE.
pub fn run_monte_carlo(sc: &Scenario, m_runs: usize, master_seed: u64) -> Result<MonteCarloResult> {
    if m_runs == 0 {
        return Err(Error::domain("m_runs must be >= 1"));
    }
    sc.validate()?;
    let snr_db = sc.effective_snr_db()?;
    let truth = sc.targets.directions();
    let runs = (0..m_runs)
        .into_par_iter()
        .map(|i| run_once(sc, snr_db, &truth, i, run_seed(master_seed, i)))
        .collect::<Result<Vec<_>>>()?;
    // summed in run order so the result does not depend on scheduling
    let total: f64 = runs.iter().map(|r| r.squared_error).sum();
    Ok(MonteCarloResult {
        rmse_deg: (total / (m_runs * truth.len()) as f64).sqrt(),
        degenerate_runs: runs.iter().filter(|r| r.degenerate).count(),
        m_runs,
        master_seed,
        effective_snr_db: snr_db,
        runs,
    })
}

/// Axes of a sweep; the cross product is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxes {
    pub arrays: Vec<ArrayGeometry>,
    pub algorithms: Vec<Algorithm>,
    pub snr_db: Vec<f64>,
    pub distances: Vec<f64>,
}

impl SweepAxes {
    /// SNR 0 to 30 dB in 5 dB steps, distance 1 to 10 m in 1 m steps.
    pub fn standard(arrays: Vec<ArrayGeometry>, algorithms: Vec<Algorithm>) -> Self {
        Self {
            arrays,
            algorithms,
            snr_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            distances: (1..=10).map(f64::from).collect(),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.arrays.len() * self.algorithms.len() * self.snr_db.len() * self.distances.len()
    }

    fn validate(&self) -> Result<()> {
        if self.n_cells() == 0 {
            return Err(Error::domain("every sweep axis needs at least one value"));
        }
        Ok(())
    }

    /// Cells in file order: array, algorithm, SNR, distance (last varies fastest).
    fn cells(&self) -> Vec<(usize, usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.n_cells());
        for a in 0..self.arrays.len() {
            for g in 0..self.algorithms.len() {
                for s in 0..self.snr_db.len() {
                    for d in 0..self.distances.len() {
                        out.push((a, g, s, d));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub array: String,
    pub algorithm: Algorithm,
    pub snr_db: f64,
    pub distance_m: f64,
    pub effective_snr_db: f64,
    pub rmse_deg: f64,
    pub degenerate_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axes: SweepAxes,
    /// One entry per cell in the order of [`SweepResult::rmse`] indices.
    pub cells: Vec<SweepCell>,
    pub m_runs: usize,
    pub master_seed: u64,
    /// Wall-clock time of the whole sweep (s); informational.
    #[serde(skip)]
    pub wall_clock_s: f64,
}

impl SweepResult {
    fn index(&self, array: usize, algorithm: usize, snr: usize, distance: usize) -> usize {
        let ax = &self.axes;
        ((array * ax.algorithms.len() + algorithm) * ax.snr_db.len() + snr) * ax.distances.len() + distance
    }

    /// RMSE of one cell addressed by axis indices.
    pub fn rmse(&self, array: usize, algorithm: usize, snr: usize, distance: usize) -> f64 {
        self.cells[self.index(array, algorithm, snr, distance)].rmse_deg
    }

    pub fn cell(&self, array: usize, algorithm: usize, snr: usize, distance: usize) -> &SweepCell {
        &self.cells[self.index(array, algorithm, snr, distance)]
    }
}

/// Evaluates every cell of `axes`, taking the remaining scenario fields from `base`.
pub fn sweep(base: &Scenario, axes: &SweepAxes, m_runs: usize, master_seed: u64) -> Result<SweepResult> {
    axes.validate()?;
    let start = Instant::now();
    let cells = axes
        .cells()
        .into_par_iter()
        .map(|(a, g, s, d)| {
            let sc = Scenario {
                geom: axes.arrays[a],
                algorithm: axes.algorithms[g],
                snr_nominal_db: axes.snr_db[s],
                distance: axes.distances[d],
                ..base.clone()
            };
            let mc = run_monte_carlo(&sc, m_runs, master_seed)?;
            Ok(SweepCell {
                array: sc.geom.label(),
                algorithm: sc.algorithm,
                snr_db: sc.snr_nominal_db,
                distance_m: sc.distance,
                effective_snr_db: mc.effective_snr_db,
                rmse_deg: mc.rmse_deg,
                degenerate_runs: mc.degenerate_runs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axes: axes.clone(),
        cells,
        m_runs,
        master_seed,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}
