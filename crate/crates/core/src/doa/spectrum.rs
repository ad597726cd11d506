use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Covariance;
use crate::array::{AngleGrid, AngularMap, ArrayGeometry, Direction};
use crate::{Error, Result};

/// Spatial spectrum `P(theta, phi)` sampled on a grid.
pub type SpatialSpectrum = AngularMap;

/// Floor on the MUSIC denominator, keeps the spectrum finite at exact nulls.
pub const MUSIC_FLOOR: f64 = 1e-12;

/// MVDR diagonal loading as a fraction of `trace(R) / N`.
pub const MVDR_LOADING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Music,
    Mvdr,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Music => "music",
            Algorithm::Mvdr => "mvdr",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "music" => Ok(Algorithm::Music),
            "mvdr" => Ok(Algorithm::Mvdr),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

fn check_dims(r: &Covariance, geom: &ArrayGeometry) -> Result<()> {
    if r.dim() != geom.len() {
        return Err(Error::shape(format!(
            "covariance is {0}x{0} but the array has {1} elements",
            r.dim(),
            geom.len()
        )));
    }
    Ok(())
}

/// MUSIC pseudo-spectrum `1 / (a^H En En^H a)` for unit-norm `a`.
///
/// With orthonormal eigenvectors `En En^H = I - Es Es^H`, so the projection is
/// computed from whichever subspace is smaller.
#[derive(Debug, Clone)]
pub struct MusicSpectrum {
    geom: ArrayGeometry,
    /// Conjugated basis vectors, each of length N.
    basis: Vec<Vec<Complex64>>,
    complement: bool,
}

impl MusicSpectrum {
    pub fn new(r: &Covariance, geom: &ArrayGeometry, n_targets: usize) -> Result<Self> {
        check_dims(r, geom)?;
        let n = r.dim();
        if n_targets == 0 || n_targets >= n {
            return Err(Error::domain(format!(
                "MUSIC needs 1 <= K < N, got K={n_targets}, N={n}"
            )));
        }
        let (_, vecs) = r.eigen();
        let noise_dim = n - n_targets;
        let complement = n_targets < noise_dim;
        let cols: Vec<usize> = if complement {
            (noise_dim..n).collect()
        } else {
            (0..noise_dim).collect()
        };
        let basis = cols
            .into_iter()
            .map(|c| vecs.column(c).iter().map(|v| v.conj()).collect())
            .collect();
        Ok(Self {
            geom: *geom,
            basis,
            complement,
        })
    }

    pub fn eval(&self, dir: Direction) -> f64 {
        let n = self.geom.len();
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        self.geom.steering_into(dir, 1.0 / (n as f64).sqrt(), &mut a);
        let proj: f64 = self
            .basis
            .iter()
            .map(|b| {
                b.iter()
                    .zip(&a)
                    .map(|(b, a)| b * a)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum();
        let denom = if self.complement { 1.0 - proj } else { proj };
        1.0 / denom.max(MUSIC_FLOOR)
    }
}

/// MVDR (Capon) spectrum `1 / (a^H R^-1 a)` for unit-norm `a`, with
/// diagonal loading [`MVDR_LOADING`] `* trace(R) / N`.
#[derive(Debug, Clone)]
pub struct MvdrSpectrum {
    geom: ArrayGeometry,
    /// Lower Cholesky factor of the loaded covariance, row-major.
    lower: Vec<Complex64>,
}

impl MvdrSpectrum {
    pub fn new(r: &Covariance, geom: &ArrayGeometry) -> Result<Self> {
        check_dims(r, geom)?;
        let n = r.dim();
        let load = MVDR_LOADING * r.trace() / n as f64;
        let mut m = r.matrix().clone();
        for i in 0..n {
            m[(i, i)] += Complex64::new(load, 0.0);
        }
        let not_pd = || Error::Numerical("covariance is not positive definite after loading".into());
        let l = Cholesky::new(m).ok_or_else(not_pd)?.l();
        // the complex factorization takes complex square roots instead of failing
        if (0..n).any(|i| !(l[(i, i)].re > 0.0) || l[(i, i)].im.abs() > 1e-12 * l[(i, i)].re) {
            return Err(not_pd());
        }
        let lower = (0..n * n).map(|idx| l[(idx / n, idx % n)]).collect();
        Ok(Self { geom: *geom, lower })
    }

    /// `1 / ||L^-1 a||^2`, equal to `1 / (a^H R^-1 a)`.
    pub fn eval(&self, dir: Direction) -> f64 {
        let n = self.geom.len();
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        self.geom.steering_into(dir, 1.0 / (n as f64).sqrt(), &mut y);
        let mut quad = 0.0;
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let mut acc = y[i];
            for (l, v) in row.iter().zip(&y[..i]) {
                acc -= l * v;
            }
            acc /= self.lower[i * n + i];
            y[i] = acc;
            quad += acc.norm_sqr();
        }
        1.0 / quad
    }
}

/// Either spectrum behind one interface.
#[derive(Debug, Clone)]
pub enum SpectrumModel {
    Music(MusicSpectrum),
    Mvdr(MvdrSpectrum),
}

impl SpectrumModel {
    pub fn build(
        algorithm: Algorithm,
        r: &Covariance,
        geom: &ArrayGeometry,
        n_targets: usize,
    ) -> Result<Self> {
        Ok(match algorithm {
            Algorithm::Music => SpectrumModel::Music(MusicSpectrum::new(r, geom, n_targets)?),
            Algorithm::Mvdr => SpectrumModel::Mvdr(MvdrSpectrum::new(r, geom)?),
        })
    }

    pub fn eval(&self, dir: Direction) -> f64 {
        match self {
            SpectrumModel::Music(m) => m.eval(dir),
            SpectrumModel::Mvdr(m) => m.eval(dir),
        }
    }

    pub fn evaluate(&self, grid: &AngleGrid) -> SpatialSpectrum {
        AngularMap::evaluate(grid, |d| self.eval(d))
    }
}

pub fn music_spectrum(
    r: &Covariance,
    geom: &ArrayGeometry,
    n_targets: usize,
    grid: &AngleGrid,
) -> Result<SpatialSpectrum> {
    grid.validate()?;
    Ok(SpectrumModel::Music(MusicSpectrum::new(r, geom, n_targets)?).evaluate(grid))
}

pub fn mvdr_spectrum(
    r: &Covariance,
    geom: &ArrayGeometry,
    grid: &AngleGrid,
) -> Result<SpatialSpectrum> {
    grid.validate()?;
    Ok(SpectrumModel::Mvdr(MvdrSpectrum::new(r, geom)?).evaluate(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering_vector;
    use crate::doa::{sample_covariance, synthesize_snapshots, TargetSet};
    use crate::units::wavelength;
    use nalgebra::DMatrix;

    fn geom(nx: usize, ny: usize) -> ArrayGeometry {
        ArrayGeometry::half_wave(nx, ny, wavelength(140e9)).unwrap()
    }

    fn coarse() -> AngleGrid {
        AngleGrid::uniform(-60.0, 60.0, 2.0).unwrap()
    }

    /// Brute-force MUSIC denominator from the full noise subspace.
    fn music_direct(r: &Covariance, g: &ArrayGeometry, k: usize, d: Direction) -> f64 {
        let (_, vecs) = r.eigen();
        let n = g.len();
        let a: Vec<Complex64> = steering_vector(g, d)
            .unwrap()
            .into_iter()
            .map(|v| v / (n as f64).sqrt())
            .collect();
        let mut s = 0.0;
        for c in 0..n - k {
            let p: Complex64 = (0..n).map(|i| vecs[(i, c)].conj() * a[i]).sum();
            s += p.norm_sqr();
        }
        1.0 / s.max(MUSIC_FLOOR)
    }

    /// a^H R^-1 a through an explicit inverse.
    fn mvdr_direct(r: &Covariance, g: &ArrayGeometry, d: Direction) -> f64 {
        let n = g.len();
        let load = MVDR_LOADING * r.trace() / n as f64;
        let m = r.matrix() + DMatrix::<Complex64>::identity(n, n) * Complex64::new(load, 0.0);
        let inv = m.try_inverse().unwrap();
        let a = nalgebra::DVector::from_vec(steering_vector(g, d).unwrap())
            / Complex64::new((n as f64).sqrt(), 0.0);
        1.0 / (a.adjoint() * inv * &a)[(0, 0)].re
    }

    #[test]
    fn subspace_shortcut_matches_full_noise_projection() {
        let g = geom(4, 4);
        let x = synthesize_snapshots(&g, &TargetSet::default(), 5.0, 60, 9).unwrap();
        let r = sample_covariance(&x);
        let music = MusicSpectrum::new(&r, &g, 3).unwrap();
        let mvdr = MvdrSpectrum::new(&r, &g).unwrap();
        for (t, p) in [(0.0, 0.0), (12.5, -33.0), (-47.0, 58.0)] {
            let d = Direction::new(t, p).unwrap();
            let (a, b) = (music.eval(d), music_direct(&r, &g, 3, d));
            assert!(((a - b) / b).abs() < 1e-8, "{a} vs {b}");
            let (a, b) = (mvdr.eval(d), mvdr_direct(&r, &g, d));
            assert!(((a - b) / b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn small_arrays_use_noise_subspace_directly() {
        let g = geom(2, 2);
        let x = synthesize_snapshots(&g, &TargetSet::default(), 20.0, 100, 1).unwrap();
        let r = sample_covariance(&x);
        let music = MusicSpectrum::new(&r, &g, 3).unwrap();
        assert!(!music.complement);
        let d = Direction::new(10.0, 20.0).unwrap();
        let (a, b) = (music.eval(d), music_direct(&r, &g, 3, d));
        assert!(((a - b) / b).abs() < 1e-10);
    }

    #[test]
    fn music_flat_for_identity() {
        let g = geom(4, 4);
        let s = music_spectrum(&Covariance::identity(16), &g, 3, &coarse()).unwrap();
        assert!(s.max() / s.min() <= 1.0 + 1e-6);
    }

    #[test]
    fn mvdr_flat_for_identity() {
        let g = geom(4, 4);
        let s = mvdr_spectrum(&Covariance::identity(16), &g, &coarse()).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-5));
    }

    #[test]
    fn noiseless_single_target_peaks_on_grid() {
        let g = geom(8, 8);
        let ts = TargetSet::from_angles(&[(24.0, -36.0)]).unwrap();
        let x = synthesize_snapshots(&g, &ts, f64::INFINITY, 20, 4).unwrap();
        let r = sample_covariance(&x);
        let grid = coarse();
        for spec in [
            music_spectrum(&r, &g, 1, &grid).unwrap(),
            mvdr_spectrum(&r, &g, &grid).unwrap(),
        ] {
            let (row, col, _) = spec.argmax();
            assert_eq!((grid.theta[row], grid.phi[col]), (24.0, -36.0));
        }
    }

    #[test]
    fn spectra_positive_and_scale_invariant_argmax() {
        let g = geom(4, 4);
        let x = synthesize_snapshots(&g, &TargetSet::default(), 0.0, 100, 21).unwrap();
        let r = sample_covariance(&x);
        let grid = coarse();
        for alg in [Algorithm::Music, Algorithm::Mvdr] {
            let base = SpectrumModel::build(alg, &r, &g, 3).unwrap().evaluate(&grid);
            assert!(base.values.iter().all(|v| v.is_finite() && *v > 0.0));
            for c in [1e-3, 7.5, 1e4] {
                let scaled = SpectrumModel::build(alg, &r.scaled(c), &g, 3)
                    .unwrap()
                    .evaluate(&grid);
                assert_eq!(scaled.argmax().0, base.argmax().0);
                assert_eq!(scaled.argmax().1, base.argmax().1);
            }
        }
    }

    #[test]
    fn mvdr_scales_with_covariance() {
        let g = geom(2, 2);
        let x = synthesize_snapshots(&g, &TargetSet::default(), 10.0, 100, 8).unwrap();
        let r = sample_covariance(&x);
        let d = Direction::new(5.0, 5.0).unwrap();
        let a = MvdrSpectrum::new(&r, &g).unwrap().eval(d);
        let b = MvdrSpectrum::new(&r.scaled(3.0), &g).unwrap().eval(d);
        assert!((b / a - 3.0).abs() < 1e-9);
    }

    #[test]
    fn argument_errors() {
        let g = geom(2, 2);
        let r = Covariance::identity(4);
        assert!(matches!(MusicSpectrum::new(&r, &g, 4), Err(Error::Domain(_))));
        assert!(matches!(MusicSpectrum::new(&r, &g, 0), Err(Error::Domain(_))));
        assert!(matches!(
            MusicSpectrum::new(&Covariance::identity(9), &g, 1),
            Err(Error::Shape(_))
        ));
        let neg = Covariance::new(-DMatrix::<Complex64>::identity(4, 4)).unwrap();
        assert!(matches!(MvdrSpectrum::new(&neg, &g), Err(Error::Numerical(_))));
        assert!("MUSIC".parse::<Algorithm>().is_ok());
        assert!("capon".parse::<Algorithm>().is_err());
    }
}
