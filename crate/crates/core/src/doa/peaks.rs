use serde::{Deserialize, Serialize};

use super::{SpatialSpectrum, SpectrumModel};
use crate::array::{AngleGrid, AngularMap, Direction};
use crate::{Error, Result};

/// Two-stage grid search: a coarse sweep of the whole field of view, then a
/// fine sweep in a window around each coarse peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Field-of-view limit; both angles span `[-limit, limit]` (deg).
    pub limit_deg: f64,
    pub coarse_step_deg: f64,
    pub fine_step_deg: f64,
    /// Half-width of the refinement window (deg).
    pub fine_half_width_deg: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            limit_deg: 60.0,
            coarse_step_deg: 1.0,
            fine_step_deg: 0.05,
            fine_half_width_deg: 1.0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.limit_deg) && self.limit_deg <= 90.0) {
            return Err(Error::Config(format!(
                "search limit must be in (0, 90] deg, got {}",
                self.limit_deg
            )));
        }
        if !pos(self.coarse_step_deg) || !pos(self.fine_step_deg) || !pos(self.fine_half_width_deg)
        {
            return Err(Error::Config("search steps and window must be > 0".into()));
        }
        Ok(())
    }

    pub fn coarse_grid(&self) -> Result<AngleGrid> {
        self.validate()?;
        AngleGrid::uniform(-self.limit_deg, self.limit_deg, self.coarse_step_deg)
    }

    /// Fine axis centred on `center`, clipped to the field of view.
    fn fine_axis(&self, center: f64) -> Vec<f64> {
        let half = (self.fine_half_width_deg / self.fine_step_deg + 1e-9).floor() as i64;
        (-half..=half)
            .map(|i| center + i as f64 * self.fine_step_deg)
            .filter(|a| a.abs() <= self.limit_deg + 1e-12)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub direction: Direction,
    pub value: f64,
}

/// Every strict local maximum (8-neighbourhood; edge cells compare against the
/// neighbours that exist), by descending value, ties by `(theta, phi)`.
pub fn local_maxima(spec: &SpatialSpectrum) -> Vec<Peak> {
    let (rows, cols) = (spec.rows(), spec.cols());
    let mut peaks = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = spec.at(r, c);
            let mut is_peak = true;
            'scan: for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= rows as i64 || nc >= cols as i64 {
                        continue;
                    }
                    if spec.at(nr as usize, nc as usize) >= v {
                        is_peak = false;
                        break 'scan;
                    }
                }
            }
            if is_peak {
                peaks.push(Peak {
                    direction: spec.grid.direction(r, c),
                    value: v,
                });
            }
        }
    }
    peaks.sort_by(|a, b| {
        b.value
            .total_cmp(&a.value)
            .then(a.direction.theta.total_cmp(&b.direction.theta))
            .then(a.direction.phi.total_cmp(&b.direction.phi))
    });
    peaks
}

/// The `k` highest strict local maxima of a sampled spectrum.
pub fn find_peaks(spec: &SpatialSpectrum, k: usize) -> Result<Vec<Peak>> {
    let mut peaks = local_maxima(spec);
    if peaks.len() < k {
        return Err(Error::DegenerateSpectrum {
            found: peaks.len(),
            requested: k,
        });
    }
    peaks.truncate(k);
    Ok(peaks)
}

/// Fine-grid argmax of `model` in the window around `coarse`.
pub fn refine_peak(model: &SpectrumModel, coarse: Direction, search: &SearchConfig) -> Peak {
    let grid = AngleGrid {
        theta: search.fine_axis(coarse.theta),
        phi: search.fine_axis(coarse.phi),
    };
    let map = AngularMap::evaluate(&grid, |d| model.eval(d));
    let (r, c, value) = map.argmax();
    Peak {
        direction: grid.direction(r, c),
        value,
    }
}

/// Coarse sweep plus refinement; returns at most `k` refined peaks, strongest first.
pub fn search_peaks(model: &SpectrumModel, k: usize, search: &SearchConfig) -> Result<Vec<Peak>> {
    let coarse = model.evaluate(&search.coarse_grid()?);
    let mut peaks = local_maxima(&coarse);
    peaks.truncate(k);
    Ok(peaks
        .into_iter()
        .map(|p| refine_peak(model, p.direction, search))
        .collect())
}
