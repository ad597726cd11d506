//! Uniform 2D virtual arrays: steering vectors, array factor and resolution.
//!
//! Element `(m, n)` (x index `m`, y index `n`, both zero based) is stored at
//! flat index `n * nx + m`. Every covariance matrix and steering vector in
//! the crate uses this ordering.
//!
//! For a plane wave from elevation `theta` and azimuth `phi` the per-element
//! phase progression is
//!
//! ```text
//! psi_x = 2*pi/lambda * dx * sin(theta) * cos(phi)
//! psi_y = 2*pi/lambda * dy * sin(theta) * sin(phi)
//! a[n*nx + m] = exp(j*(m*psi_x + n*psi_y))
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::units::linear_to_db;
use crate::{Error, Result};

/// Largest magnitude accepted for either angle (front hemisphere).
pub const MAX_ANGLE_DEG: f64 = 90.0;

/// Look direction in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    /// Elevation (deg).
    pub theta: f64,
    /// Azimuth (deg).
    pub phi: f64,
}

impl Direction {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let d = Self { theta, phi };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |a: f64| a.is_finite() && a.abs() <= MAX_ANGLE_DEG;
        if ok(self.theta) && ok(self.phi) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "direction (theta={}, phi={}) outside +/-{MAX_ANGLE_DEG} deg",
                self.theta, self.phi
            )))
        }
    }

    /// Squared angular distance in deg^2, summed over both axes.
    pub fn squared_error(&self, other: &Direction) -> f64 {
        let dt = self.theta - other.theta;
        let dp = self.phi - other.phi;
        dt * dt + dp * dp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArrayGeometry {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, wavelength: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::domain(format!("array needs nx, ny >= 1, got {nx}x{ny}")));
        }
        for (name, v) in [("dx", dx), ("dy", dy), ("wavelength", wavelength)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            wavelength,
        })
    }

    /// Half-wavelength spaced `nx` x `ny` grid.
    pub fn half_wave(nx: usize, ny: usize, wavelength: f64) -> Result<Self> {
        Self::new(nx, ny, wavelength / 2.0, wavelength / 2.0, wavelength)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Label such as `8x8`.
    pub fn label(&self) -> String {
        format!("{}x{}", self.nx, self.ny)
    }

    fn phase_steps(&self, dir: Direction) -> (f64, f64) {
        let beta = 2.0 * PI / self.wavelength;
        let (t, p) = (dir.theta.to_radians(), dir.phi.to_radians());
        let st = t.sin();
        (beta * self.dx * st * p.cos(), beta * self.dy * st * p.sin())
    }

    /// Writes `scale * a(dir)` into `out` without validating `dir`.
    pub(crate) fn steering_into(&self, dir: Direction, scale: f64, out: &mut [Complex64]) {
        debug_assert_eq!(out.len(), self.len());
        let (psi_x, psi_y) = self.phase_steps(dir);
        let (first, rest) = out.split_at_mut(self.nx);
        for (m, v) in first.iter_mut().enumerate() {
            *v = Complex64::from_polar(scale, m as f64 * psi_x);
        }
        for (n, row) in rest.chunks_exact_mut(self.nx).enumerate() {
            let shift = Complex64::cis((n + 1) as f64 * psi_y);
            for (v, x) in row.iter_mut().zip(first.iter()) {
                *v = x * shift;
            }
        }
    }
}

/// Steering vector `a(theta, phi)` of length `nx * ny`.
pub fn steering_vector(geom: &ArrayGeometry, dir: Direction) -> Result<Vec<Complex64>> {
    dir.validate()?;
    let mut out = vec![Complex64::new(0.0, 0.0); geom.len()];
    geom.steering_into(dir, 1.0, &mut out);
    Ok(out)
}

/// Array factor `sum_i w_i * a_i(dir)`; all-ones weights when `weights` is `None`.
pub fn array_factor(
    geom: &ArrayGeometry,
    dir: Direction,
    weights: Option<&[Complex64]>,
) -> Result<Complex64> {
    let a = steering_vector(geom, dir)?;
    match weights {
        None => Ok(a.iter().sum()),
        Some(w) if w.len() == a.len() => Ok(a.iter().zip(w).map(|(a, w)| a * w).sum()),
        Some(w) => Err(Error::shape(format!(
            "weight vector has length {}, array has {} elements",
            w.len(),
            a.len()
        ))),
    }
}

/// Rectangular (theta, phi) evaluation grid in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl AngleGrid {
    pub fn new(theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let g = Self { theta, phi };
        g.validate()?;
        Ok(g)
    }

    /// Inclusive uniform grid `[start, stop]` with `step` on both axes.
    pub fn uniform(start: f64, stop: f64, step: f64) -> Result<Self> {
        let axis = linspace_step(start, stop, step)?;
        Self::new(axis.clone(), axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.is_empty() || self.phi.is_empty() {
            return Err(Error::shape("angle grid axes must be nonempty"));
        }
        let bad = self
            .theta
            .iter()
            .chain(&self.phi)
            .any(|a| !a.is_finite() || a.abs() > MAX_ANGLE_DEG);
        if bad {
            return Err(Error::domain(format!(
                "grid angles must lie within +/-{MAX_ANGLE_DEG} deg"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn direction(&self, row: usize, col: usize) -> Direction {
        Direction {
            theta: self.theta[row],
            phi: self.phi[col],
        }
    }
}

/// Inclusive axis `start, start+step, ..., stop` built by index to avoid drift.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::domain(format!(
            "invalid axis [{start}, {stop}] step {step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

/// Real-valued map over an [`AngleGrid`], stored row-major with theta as rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngularMap {
    pub grid: AngleGrid,
    pub values: Vec<f64>,
}

impl AngularMap {
    pub fn rows(&self) -> usize {
        self.grid.theta.len()
    }

    pub fn cols(&self) -> usize {
        self.grid.phi.len()
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols() + col]
    }

    /// Evaluates `f` on every grid cell; rows are filled independently.
    pub fn evaluate<F>(grid: &AngleGrid, f: F) -> Self
    where
        F: Fn(Direction) -> f64 + Sync,
    {
        let cols = grid.phi.len();
        let mut values = vec![0.0; grid.len()];
        values
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(row, out)| {
                for (col, v) in out.iter_mut().enumerate() {
                    *v = f(grid.direction(row, col));
                }
            });
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Largest value and its cell; ties resolve to the first cell in row-major order.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let (idx, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
        (idx / self.cols(), idx % self.cols(), v)
    }

    pub fn max(&self) -> f64 {
        self.argmax().2
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// |AF| over a theta x phi grid.
pub fn array_factor_map(
    geom: &ArrayGeometry,
    theta_grid: &[f64],
    phi_grid: &[f64],
) -> Result<AngularMap> {
    let grid = AngleGrid::new(theta_grid.to_vec(), phi_grid.to_vec())?;
    let n = geom.len();
    Ok(AngularMap::evaluate(&grid, |dir| {
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        geom.steering_into(dir, 1.0, &mut a);
        a.iter().sum::<Complex64>().norm()
    }))
}

/// Null-to-null angular resolution `(d_phi, d_theta)` in degrees for elements
/// limited to `|phi| < phi_max`, `|theta| < theta_max`.
pub fn angular_resolution(geom: &ArrayGeometry, phi_max: f64, theta_max: f64) -> Result<(f64, f64)> {
    for (name, a) in [("phi_max", phi_max), ("theta_max", theta_max)] {
        if !(a >= 0.0 && a < 90.0) {
            return Err(Error::domain(format!("{name} must lie in [0, 90) deg, got {a}")));
        }
    }
    let d_phi = 2.0 / (geom.nx() as f64 * phi_max.to_radians().cos());
    let d_theta = 2.0 / (geom.ny() as f64 * theta_max.to_radians().cos());
    Ok((d_phi.to_degrees(), d_theta.to_degrees()))
}

/// SNR improvement of an `n_tx` x `n_rx` MIMO array under optimal combining (dB).
pub fn mimo_snr_gain_db(n_tx: usize, n_rx: usize) -> Result<f64> {
    if n_tx == 0 || n_rx == 0 {
        return Err(Error::domain("TX and RX counts must be >= 1"));
    }
    Ok(linear_to_db((n_tx * n_rx) as f64))
}

/// How TX/RX pairs are arranged on the virtual grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VirtualLayout {
    /// `sqrt(N) x sqrt(N)`; requires `n_tx * n_rx` to be a perfect square.
    Square,
    /// TX index along x, RX index along y.
    TxByRx,
    /// Explicit `nx x ny` tiling.
    Rect { nx: usize, ny: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MimoSpec {
    pub n_tx: usize,
    pub n_rx: usize,
    pub layout: VirtualLayout,
}

/// Virtual array of a MIMO configuration, half-wave spaced.
pub fn virtual_array(spec: &MimoSpec, wavelength: f64) -> Result<ArrayGeometry> {
    if spec.n_tx == 0 || spec.n_rx == 0 {
        return Err(Error::Config("TX and RX counts must be >= 1".into()));
    }
    let n = spec.n_tx * spec.n_rx;
    let (nx, ny) = match spec.layout {
        VirtualLayout::Square => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return Err(Error::Config(format!(
                    "{} TX x {} RX = {n} virtual elements is not a square grid",
                    spec.n_tx, spec.n_rx
                )));
            }
            (side, side)
        }
        VirtualLayout::TxByRx => (spec.n_tx, spec.n_rx),
        VirtualLayout::Rect { nx, ny } => {
            if nx * ny != n {
                return Err(Error::Config(format!(
                    "{nx}x{ny} grid cannot hold {n} virtual elements"
                )));
            }
            (nx, ny)
        }
    };
    ArrayGeometry::half_wave(nx, ny, wavelength)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::wavelength;
    use proptest::prelude::*;

    fn lambda() -> f64 {
        wavelength(140e9)
    }

    fn dir(theta: f64, phi: f64) -> Direction {
        Direction::new(theta, phi).unwrap()
    }

    #[test]
    fn broadside_is_all_ones() {
        let g = ArrayGeometry::half_wave(4, 3, lambda()).unwrap();
        for phi in [-60.0, 0.0, 37.0] {
            let a = steering_vector(&g, dir(0.0, phi)).unwrap();
            assert!(a.iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        }
    }

    #[test]
    fn endfire_two_element() {
        let g = ArrayGeometry::half_wave(2, 1, lambda()).unwrap();
        let a = steering_vector(&g, dir(90.0, 0.0)).unwrap();
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((a[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!(array_factor(&g, dir(90.0, 0.0), None).unwrap().norm() < 1e-12);
    }

    #[test]
    fn element_ordering_is_row_major_in_y() {
        let g = ArrayGeometry::half_wave(3, 2, lambda()).unwrap();
        let d = dir(30.0, 90.0);
        let a = steering_vector(&g, d).unwrap();
        // phi = 90 puts all phase progression on the y axis
        for m in 0..3 {
            assert!((a[m] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let psi_y = PI * 0.5;
        assert!((a[3] - Complex64::cis(psi_y)).norm() < 1e-12);
    }

    #[test]
    fn direction_bounds() {
        assert!(Direction::new(90.0, -90.0).is_ok());
        assert!(Direction::new(90.1, 0.0).is_err());
        assert!(steering_vector(
            &ArrayGeometry::half_wave(2, 2, lambda()).unwrap(),
            Direction { theta: 0.0, phi: 120.0 }
        )
        .is_err());
    }

    #[test]
    fn broadside_array_factor() {
        let g8 = ArrayGeometry::half_wave(8, 8, lambda()).unwrap();
        let g2 = ArrayGeometry::half_wave(2, 2, lambda()).unwrap();
        assert!((array_factor(&g8, dir(0.0, 0.0), None).unwrap().norm() - 64.0).abs() < 1e-12);
        assert!((array_factor(&g2, dir(0.0, 0.0), None).unwrap().norm() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn weight_length_checked() {
        let g = ArrayGeometry::half_wave(2, 2, lambda()).unwrap();
        let w = vec![Complex64::new(1.0, 0.0); 3];
        assert!(matches!(
            array_factor(&g, dir(0.0, 0.0), Some(&w)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn map_peaks_at_broadside() {
        let g = ArrayGeometry::half_wave(8, 8, lambda()).unwrap();
        let axis = linspace_step(-90.0, 90.0, 5.0).unwrap();
        let m = array_factor_map(&g, &axis, &axis).unwrap();
        assert!((m.max() - 64.0).abs() < 1e-9);
        let (r, _, _) = m.argmax();
        assert_eq!(m.grid.theta[r], 0.0);
        assert!(m.values.iter().all(|&v| v <= 64.0 + 1e-9));
    }

    #[test]
    fn map_symmetric_in_phi() {
        let g = ArrayGeometry::half_wave(4, 4, lambda()).unwrap();
        let axis = linspace_step(-60.0, 60.0, 3.0).unwrap();
        let m = array_factor_map(&g, &axis, &axis).unwrap();
        let c = m.cols();
        for r in 0..m.rows() {
            for k in 0..c {
                assert!((m.at(r, k) - m.at(r, c - 1 - k)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_grid_rejected() {
        let g = ArrayGeometry::half_wave(2, 2, lambda()).unwrap();
        assert!(matches!(
            array_factor_map(&g, &[], &[0.0]),
            Err(Error::Shape(_))
        ));
    }

    /// Half-power width along theta at phi = 0, found by scanning a fine cut.
    fn half_power_width(n: usize) -> f64 {
        let g = ArrayGeometry::half_wave(n, n, lambda()).unwrap();
        let peak = (n * n) as f64;
        let mut t = 0.0;
        while array_factor(&g, dir(t, 0.0), None).unwrap().norm() > peak / 2f64.sqrt() {
            t += 0.01;
        }
        2.0 * t
    }

    #[test]
    fn larger_arrays_have_narrower_beams() {
        let w2 = half_power_width(2);
        let w4 = half_power_width(4);
        let w8 = half_power_width(8);
        assert!(w2 > w4 && w4 > w8, "{w2} {w4} {w8}");
    }

    #[test]
    fn angular_resolution_examples() {
        let g25 = ArrayGeometry::half_wave(25, 25, lambda()).unwrap();
        let (dphi, dtheta) = angular_resolution(&g25, 22.5, 22.5).unwrap();
        assert!((dphi - 4.96).abs() < 0.01, "{dphi}");
        assert!((dtheta - dphi).abs() < 1e-12);

        let g2 = ArrayGeometry::half_wave(2, 2, lambda()).unwrap();
        let (dphi, _) = angular_resolution(&g2, 0.0, 0.0).unwrap();
        assert!((dphi - 1f64.to_degrees()).abs() < 1e-12);

        let g4 = ArrayGeometry::half_wave(4, 2, lambda()).unwrap();
        let (dphi4, _) = angular_resolution(&g4, 10.0, 10.0).unwrap();
        let (dphi2, _) = angular_resolution(&g2, 10.0, 10.0).unwrap();
        assert!((dphi2 / dphi4 - 2.0).abs() < 1e-12);

        assert!(angular_resolution(&g2, 90.0, 0.0).is_err());
        assert!(angular_resolution(&g2, 0.0, 95.0).is_err());
    }

    #[test]
    fn mimo_gain_examples() {
        assert!((mimo_snr_gain_db(8, 8).unwrap() - 18.06).abs() < 0.01);
        assert!((mimo_snr_gain_db(4, 4).unwrap() - 12.04).abs() < 0.01);
        assert_eq!(mimo_snr_gain_db(1, 1).unwrap(), 0.0);
        assert!(mimo_snr_gain_db(0, 4).is_err());
    }

    #[test]
    fn virtual_array_layouts() {
        let sq = |t, r| MimoSpec {
            n_tx: t,
            n_rx: r,
            layout: VirtualLayout::Square,
        };
        let g = virtual_array(&sq(8, 8), lambda()).unwrap();
        assert_eq!((g.nx(), g.ny()), (8, 8));
        assert!((g.dx() - 1.0714e-3).abs() < 1e-6);
        assert_eq!(virtual_array(&sq(4, 4), lambda()).unwrap().len(), 16);
        assert_eq!(virtual_array(&sq(2, 2), lambda()).unwrap().label(), "2x2");
        assert!(matches!(
            virtual_array(&sq(2, 4), lambda()),
            Err(Error::Config(_))
        ));
        let rect = MimoSpec {
            n_tx: 8,
            n_rx: 8,
            layout: VirtualLayout::Rect { nx: 16, ny: 4 },
        };
        assert_eq!(virtual_array(&rect, lambda()).unwrap().label(), "16x4");
        let bad = MimoSpec {
            layout: VirtualLayout::Rect { nx: 16, ny: 5 },
            ..rect
        };
        assert!(virtual_array(&bad, lambda()).is_err());
    }

    proptest! {
        #[test]
        fn steering_unit_modulus_and_af_agreement(
            nx in 1usize..9, ny in 1usize..9,
            theta in -90.0f64..90.0, phi in -90.0f64..90.0,
        ) {
            let g = ArrayGeometry::half_wave(nx, ny, lambda()).unwrap();
            let d = dir(theta, phi);
            let a = steering_vector(&g, d).unwrap();
            prop_assert!(a.iter().all(|c| (c.norm() - 1.0).abs() < 1e-12));
            let ones = vec![Complex64::new(1.0, 0.0); g.len()];
            let af = array_factor(&g, d, Some(&ones)).unwrap();
            let inner: Complex64 = a.iter().sum();
            prop_assert!((af - inner).norm() < 1e-12);
            prop_assert!(af.norm() <= g.len() as f64 + 1e-9);
        }

        #[test]
        fn mimo_gain_is_additive(a in 1usize..200, b in 1usize..200) {
            let lhs = mimo_snr_gain_db(a * b, 1).unwrap();
            let rhs = mimo_snr_gain_db(a, 1).unwrap() + mimo_snr_gain_db(b, 1).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
