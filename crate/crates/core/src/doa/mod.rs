//! 2D direction-of-arrival estimation.
//!
//! Pipeline: [`synthesize_snapshots`] → [`sample_covariance`] →
//! [`music_spectrum`] or [`mvdr_spectrum`] → [`find_peaks`] with a fine
//! refinement around each coarse peak. [`estimate_doa`] runs the whole chain.
//!
//! The number of targets `K` is always an input; no model-order estimation is
//! attempted.

mod covariance;
mod peaks;
mod snapshots;
mod spectrum;

use serde::Serialize;

pub use covariance::{hermitian_residual, sample_covariance, Covariance, HERMITIAN_TOLERANCE};
pub use peaks::{find_peaks, local_maxima, refine_peak, search_peaks, Peak, SearchConfig};
pub use snapshots::{
    synthesize_snapshots, SnapshotMatrix, Target, TargetSet, DEFAULT_TARGETS,
};
pub use spectrum::{
    music_spectrum, mvdr_spectrum, Algorithm, MusicSpectrum, MvdrSpectrum, SpatialSpectrum,
    SpectrumModel, MUSIC_FLOOR, MVDR_LOADING,
};

use crate::array::{ArrayGeometry, Direction};
use crate::{Error, Result};

/// Snapshots per estimate when not specified (one per chirp of a 100-chirp frame).
pub const DEFAULT_SNAPSHOTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoaEstimate {
    /// Refined peak directions, strongest first.
    pub directions: Vec<Direction>,
    pub algorithm: Algorithm,
}

/// Refined peaks for up to `k` targets; fewer are returned when the coarse
/// spectrum has fewer than `k` strict local maxima.
pub fn estimate_doa_partial(
    x: &SnapshotMatrix,
    geom: &ArrayGeometry,
    k: usize,
    algorithm: Algorithm,
    search: &SearchConfig,
) -> Result<Vec<Direction>> {
    if x.n_elements() != geom.len() {
        return Err(Error::shape(format!(
            "snapshots have {} rows but the array has {} elements",
            x.n_elements(),
            geom.len()
        )));
    }
    if k == 0 {
        return Err(Error::domain("K must be >= 1"));
    }
    let r = sample_covariance(x);
    let model = SpectrumModel::build(algorithm, &r, geom, k)?;
    Ok(search_peaks(&model, k, search)?
        .into_iter()
        .map(|p| p.direction)
        .collect())
}

/// Full estimator; fails with [`Error::DegenerateSpectrum`] if fewer than `k`
/// peaks exist.
pub fn estimate_doa(
    x: &SnapshotMatrix,
    geom: &ArrayGeometry,
    k: usize,
    algorithm: Algorithm,
    search: &SearchConfig,
) -> Result<DoaEstimate> {
    let directions = estimate_doa_partial(x, geom, k, algorithm, search)?;
    if directions.len() < k {
        return Err(Error::DegenerateSpectrum {
            found: directions.len(),
            requested: k,
        });
    }
    Ok(DoaEstimate {
        directions,
        algorithm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::wavelength;

    fn geom(nx: usize, ny: usize) -> ArrayGeometry {
        ArrayGeometry::half_wave(nx, ny, wavelength(140e9)).unwrap()
    }

    fn sorted(mut d: Vec<Direction>) -> Vec<(f64, f64)> {
        d.sort_by(|a, b| a.theta.total_cmp(&b.theta));
        d.into_iter().map(|d| (d.theta, d.phi)).collect()
    }

    #[test]
    fn noiseless_three_targets_both_algorithms() {
        let g = geom(8, 8);
        let ts = TargetSet::default();
        let x = synthesize_snapshots(&g, &ts, f64::INFINITY, 100, 1).unwrap();
        let search = SearchConfig::default();
        for alg in [Algorithm::Music, Algorithm::Mvdr] {
            let est = estimate_doa(&x, &g, 3, alg, &search).unwrap();
            let got = sorted(est.directions);
            let want = sorted(ts.directions());
            for (a, b) in got.iter().zip(&want) {
                assert!(
                    (a.0 - b.0).abs() <= 0.05 + 1e-9 && (a.1 - b.1).abs() <= 0.05 + 1e-9,
                    "{alg}: {got:?} vs {want:?}"
                );
            }
        }
    }

    #[test]
    fn off_grid_single_target_refined() {
        let g = geom(8, 8);
        let ts = TargetSet::from_angles(&[(17.33, -41.71)]).unwrap();
        let x = synthesize_snapshots(&g, &ts, f64::INFINITY, 10, 3).unwrap();
        let est = estimate_doa(&x, &g, 1, Algorithm::Music, &SearchConfig::default()).unwrap();
        let d = est.directions[0];
        assert!((d.theta - 17.33).abs() <= 0.05 && (d.phi + 41.71).abs() <= 0.05, "{d:?}");
    }

    #[test]
    fn deterministic_output() {
        let g = geom(4, 4);
        let x = synthesize_snapshots(&g, &TargetSet::default(), 5.0, 100, 77).unwrap();
        let s = SearchConfig::default();
        let a = estimate_doa_partial(&x, &g, 3, Algorithm::Mvdr, &s).unwrap();
        let b = estimate_doa_partial(&x, &g, 3, Algorithm::Mvdr, &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shape_mismatch() {
        let x = synthesize_snapshots(&geom(2, 2), &TargetSet::default(), 5.0, 10, 1).unwrap();
        let r = estimate_doa(&x, &geom(4, 4), 3, Algorithm::Music, &SearchConfig::default());
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn music_high_snr_peaks_within_one_cell() {
        let g = geom(8, 8);
        let ts = TargetSet::default();
        let search = SearchConfig::default();
        let coarse = search.coarse_grid().unwrap();
        let mut hits = 0;
        for seed in 0..100 {
            let x = synthesize_snapshots(&g, &ts, 20.0, 100, seed).unwrap();
            let model = SpectrumModel::build(Algorithm::Music, &sample_covariance(&x), &g, 3).unwrap();
            let peaks = find_peaks(&model.evaluate(&coarse), 3).unwrap();
            let ok = ts.directions().iter().all(|t| {
                peaks.iter().any(|p| {
                    (p.direction.theta - t.theta).abs() <= 1.0
                        && (p.direction.phi - t.phi).abs() <= 1.0
                })
            });
            hits += ok as usize;
        }
        assert!(hits >= 95, "{hits}/100");
    }
}
