use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayGeometry, Direction};
use crate::units::db_to_linear;
use crate::{Error, Result};

/// One point reflector as seen by the array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub direction: Direction,
    /// Complex scale applied to the source waveform.
    #[serde(default = "unit_amplitude")]
    pub amplitude: Complex64,
}

fn unit_amplitude() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl Target {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        Ok(Self {
            direction: Direction::new(theta, phi)?,
            amplitude: unit_amplitude(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Target>", into = "Vec<Target>")]
pub struct TargetSet {
    targets: Vec<Target>,
}

/// Default scene: three equal-amplitude reflectors as `(theta, phi)` in degrees.
pub const DEFAULT_TARGETS: [(f64, f64); 3] = [(-20.0, -30.0), (5.0, 10.0), (25.0, 40.0)];

impl TargetSet {
    pub fn new(targets: Vec<Target>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Config("target set must hold at least one target".into()));
        }
        for t in &targets {
            t.direction.validate()?;
        }
        for (i, a) in targets.iter().enumerate() {
            if targets[i + 1..].iter().any(|b| b.direction == a.direction) {
                return Err(Error::Config(format!(
                    "duplicate target direction (theta={}, phi={})",
                    a.direction.theta, a.direction.phi
                )));
            }
        }
        Ok(Self { targets })
    }

    /// Equal unit amplitudes at the given `(theta, phi)` pairs.
    pub fn from_angles(angles: &[(f64, f64)]) -> Result<Self> {
        let targets = angles
            .iter()
            .map(|&(t, p)| Target::new(t, p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(targets)
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.targets.iter().map(|t| t.direction).collect()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

impl Default for TargetSet {
    fn default() -> Self {
        Self::from_angles(&DEFAULT_TARGETS).expect("default targets are valid")
    }
}

impl TryFrom<Vec<Target>> for TargetSet {
    type Error = Error;

    fn try_from(v: Vec<Target>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TargetSet> for Vec<Target> {
    fn from(t: TargetSet) -> Self {
        t.targets
    }
}

/// Array snapshots: one row per element, one column per time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<Complex64>,
    snr_db: f64,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<Complex64>, snr_db: f64) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::shape("snapshot matrix must be nonempty"));
        }
        Ok(Self { data, snr_db })
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn n_elements(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_snapshots(&self) -> usize {
        self.data.ncols()
    }
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws `x[k] = A s[k] + n[k]` for `n_snapshots` time samples.
///
/// Sources are independent circular complex Gaussians with power
/// `|amplitude|^2 * 10^(snr_db/10)`; the noise has unit variance per element.
/// `snr_db = +inf` produces noiseless data with unit-power sources.
///
/// The random stream is drawn in a fixed order (all source samples, then all
/// noise samples) so that equal seeds give common random numbers across SNRs.
pub fn synthesize_snapshots(
    geom: &ArrayGeometry,
    targets: &TargetSet,
    snr_db: f64,
    n_snapshots: usize,
    seed: u64,
) -> Result<SnapshotMatrix> {
    if n_snapshots == 0 {
        return Err(Error::domain("n_snapshots must be >= 1"));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::domain(format!("invalid SNR {snr_db} dB")));
    }
    let noiseless = snr_db == f64::INFINITY;
    let signal_scale = if noiseless {
        1.0
    } else {
        db_to_linear(snr_db).sqrt()
    };

    let n = geom.len();
    let k = targets.len();
    let mut steering = vec![Complex64::new(0.0, 0.0); n * k];
    for (i, t) in targets.targets().iter().enumerate() {
        geom.steering_into(t.direction, 1.0, &mut steering[i * n..(i + 1) * n]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources: Vec<Complex64> = (0..n_snapshots * k)
        .map(|idx| {
            let amp = targets.targets()[idx % k].amplitude;
            complex_normal(&mut rng) * amp * signal_scale
        })
        .collect();

    let mut data = DMatrix::from_fn(n, n_snapshots, |row, col| {
        (0..k)
            .map(|i| steering[i * n + row] * sources[col * k + i])
            .sum::<Complex64>()
    });
    // noise is always drawn, column by column, to keep the stream aligned
    for col in 0..n_snapshots {
        for row in 0..n {
            let w = complex_normal(&mut rng);
            if !noiseless {
                data[(row, col)] += w;
            }
        }
    }
    SnapshotMatrix::new(data, snr_db)
}
