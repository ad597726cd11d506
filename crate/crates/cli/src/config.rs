//! TOML run configuration.
//!
//! Every section and key is optional; missing values take the defaults below.
//! Unknown keys are rejected. Command-line flags are applied on top of the
//! parsed file (flag > file > default) before validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use dradar::array::ArrayGeometry;
use dradar::doa::{Algorithm, SearchConfig, TargetSet, DEFAULT_SNAPSHOTS, DEFAULT_TARGETS};
use dradar::eval::DEFAULT_RUNS;
use dradar::linkbudget::{LinkBudgetParams, MaterialDb, WallMaterial};
use dradar::power::{LoNetworkParams, TxRxPowerParams};
use dradar::units::{db_to_linear, dbm_to_watts, wavelength};

/// Invalid configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Array size written as `NXxNY`, e.g. `8x8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArraySize {
    pub nx: usize,
    pub ny: usize,
}

impl ArraySize {
    pub fn geometry(&self, carrier_hz: f64) -> dradar::Result<ArrayGeometry> {
        ArrayGeometry::half_wave(self.nx, self.ny, wavelength(carrier_hz))
    }
}

impl FromStr for ArraySize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .trim()
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("array size '{s}' is not of the form NxM"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("array size '{s}' needs positive integers"))
        };
        Ok(Self {
            nx: parse(a)?,
            ny: parse(b)?,
        })
    }
}

impl fmt::Display for ArraySize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.nx, self.ny)
    }
}

impl Serialize for ArraySize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ArraySize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Radar front end and target, in engineering units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarConfig {
    pub carrier_hz: f64,
    pub gain_tx_db: f64,
    pub gain_rx_db: f64,
    pub rcs_m2: f64,
    pub t_meas_s: f64,
    pub temperature_k: f64,
    pub noise_figure_db: f64,
    pub d0_m: f64,
    pub p_exponent: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 140e9,
            gain_tx_db: 10.0,
            gain_rx_db: 10.0,
            rcs_m2: 0.01,
            t_meas_s: 1e-3,
            temperature_k: 290.0,
            noise_figure_db: 10.0,
            d0_m: 1.0,
            p_exponent: 2.0,
        }
    }
}

impl RadarConfig {
    pub fn link_params(&self) -> LinkBudgetParams {
        LinkBudgetParams {
            p_tx: 1e-3,
            g_tx: db_to_linear(self.gain_tx_db),
            g_rx: db_to_linear(self.gain_rx_db),
            wavelength: wavelength(self.carrier_hz),
            rcs: self.rcs_m2,
            t_meas: self.t_meas_s,
            temperature: self.temperature_k,
            noise_factor: db_to_linear(self.noise_figure_db),
            d0: self.d0_m,
            p_exponent: self.p_exponent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneratePolicy {
    /// Score degenerate runs with clamped estimates and keep going.
    #[default]
    Penalize,
    /// Stop with exit code 4 on the first cell containing a degenerate run.
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoaConfig {
    pub arrays: Vec<ArraySize>,
    pub algorithms: Vec<Algorithm>,
    pub snr_db: Vec<f64>,
    pub distances_m: Vec<f64>,
    pub runs: usize,
    pub snapshots: usize,
    /// `[theta, phi]` pairs in degrees, equal unit amplitudes.
    pub targets: Vec<[f64; 2]>,
    /// Optional wall between array and targets.
    pub material: Option<String>,
    pub on_degenerate: DegeneratePolicy,
    pub search: SearchConfig,
}

impl Default for DoaConfig {
    fn default() -> Self {
        Self {
            arrays: vec![ArraySize { nx: 8, ny: 8 }],
            algorithms: vec![Algorithm::Music, Algorithm::Mvdr],
            snr_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            distances_m: (1..=10).map(f64::from).collect(),
            runs: DEFAULT_RUNS,
            snapshots: DEFAULT_SNAPSHOTS,
            targets: DEFAULT_TARGETS.iter().map(|&(t, p)| [t, p]).collect(),
            material: None,
            on_degenerate: DegeneratePolicy::Penalize,
            search: SearchConfig::default(),
        }
    }
}

impl DoaConfig {
    pub fn target_set(&self) -> dradar::Result<TargetSet> {
        let pairs: Vec<(f64, f64)> = self.targets.iter().map(|t| (t[0], t[1])).collect();
        TargetSet::from_angles(&pairs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// System (post-combining) SNR targets (dB).
    pub snr_db: Vec<f64>,
    pub distances_m: Vec<f64>,
    pub n_tx: usize,
    pub n_rx: usize,
    /// Materials evaluated besides free space.
    pub materials: Vec<String>,
    /// User-defined materials added to the built-in table.
    pub extra_materials: Vec<WallMaterial>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            snr_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            distances_m: (1..=10).map(f64::from).collect(),
            n_tx: 8,
            n_rx: 8,
            materials: MaterialDb::builtin()
                .materials()
                .iter()
                .map(|m| m.name.clone())
                .collect(),
            extra_materials: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    /// Total virtual element counts; each is split as `sqrt(N)` TX by `sqrt(N)` RX.
    pub elements: Vec<usize>,
    pub p_ref_dbm: f64,
    pub path_loss_db: f64,
    pub divider_loss_db: f64,
    pub lo_target_tx_dbm: f64,
    pub lo_target_rx_dbm: f64,
    /// LO amplifier power gain efficiency (1/mW).
    pub gamma_tx_per_mw: f64,
    pub gamma_rx_per_mw: f64,
    pub p_mult_mw: f64,
    pub lo_min_dbm: Option<f64>,
    pub lo_max_dbm: Option<f64>,
    pub p_tx_element_dbm: f64,
    pub eta_tx: f64,
    pub alpha: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            elements: vec![4, 16, 64, 256, 1024],
            p_ref_dbm: 0.0,
            path_loss_db: 2.0,
            divider_loss_db: 1.0,
            lo_target_tx_dbm: 10.0,
            lo_target_rx_dbm: 10.0,
            gamma_tx_per_mw: 0.4,
            gamma_rx_per_mw: 0.4,
            p_mult_mw: 50.0,
            lo_min_dbm: None,
            lo_max_dbm: None,
            p_tx_element_dbm: 10.0,
            eta_tx: 0.1,
            alpha: 0.75,
        }
    }
}

impl PowerConfig {
    pub fn lo_params(&self) -> LoNetworkParams {
        LoNetworkParams {
            p_ref: dbm_to_watts(self.p_ref_dbm),
            l_p: db_to_linear(-self.path_loss_db),
            l_d: db_to_linear(-self.divider_loss_db),
            target_lo_tx: dbm_to_watts(self.lo_target_tx_dbm),
            target_lo_rx: dbm_to_watts(self.lo_target_rx_dbm),
            gamma_tx: self.gamma_tx_per_mw * 1e3,
            gamma_rx: self.gamma_rx_per_mw * 1e3,
            p_mult: self.p_mult_mw * 1e-3,
            lo_min: self.lo_min_dbm.map_or(0.0, dbm_to_watts),
            lo_max: self.lo_max_dbm.map_or(f64::INFINITY, dbm_to_watts),
        }
    }

    pub fn txrx_params(&self, n_tx: usize, n_rx: usize) -> TxRxPowerParams {
        TxRxPowerParams {
            n_tx,
            n_rx,
            p_tx_element: dbm_to_watts(self.p_tx_element_dbm),
            eta_tx: self.eta_tx,
            alpha: self.alpha,
            d_ref: 1.0,
        }
    }
}

/// Inclusive `start..=stop` with fixed `step` (deg).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayFactorConfig {
    pub arrays: Vec<ArraySize>,
    pub theta: AxisRange,
    pub phi: AxisRange,
}

impl Default for ArrayFactorConfig {
    fn default() -> Self {
        let full = AxisRange {
            start: -90.0,
            stop: 90.0,
            step: 1.0,
        };
        Self {
            arrays: vec![ArraySize { nx: 8, ny: 8 }],
            theta: full,
            phi: full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChirpDemoConfig {
    pub f0_hz: f64,
    pub bandwidth_hz: f64,
    pub chirp_duration_s: f64,
    pub chirps_per_frame: usize,
    /// Sets the sample rate to four times the IF of a target at this range.
    pub max_range_m: f64,
    pub ranges_m: Vec<f64>,
}

impl Default for ChirpDemoConfig {
    fn default() -> Self {
        Self {
            f0_hz: 140e9,
            bandwidth_hz: 10e9,
            chirp_duration_s: 10e-6,
            chirps_per_frame: 100,
            max_range_m: 10.0,
            ranges_m: vec![1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub radar: RadarConfig,
    pub doa: DoaConfig,
    pub link: LinkConfig,
    pub power: PowerConfig,
    pub array_factor: ArrayFactorConfig,
    pub chirp: ChirpDemoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            radar: RadarConfig::default(),
            doa: DoaConfig::default(),
            link: LinkConfig::default(),
            power: PowerConfig::default(),
            array_factor: ArrayFactorConfig::default(),
            chirp: ChirpDemoConfig::default(),
        }
    }
}

/// Values given on the command line; `None` leaves the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub array: Option<ArraySize>,
    pub algorithm: Option<Algorithm>,
    pub material: Option<String>,
    pub p_exponent: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| bad(format!("invalid configuration: {e}")))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(|e| bad(format!("{e:#}")))?;
        Self::from_toml(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(r) = o.runs {
            self.doa.runs = r;
        }
        if let Some(a) = o.array {
            self.doa.arrays = vec![a];
            self.array_factor.arrays = vec![a];
        }
        if let Some(alg) = o.algorithm {
            self.doa.algorithms = vec![alg];
        }
        if let Some(m) = &o.material {
            self.doa.material = Some(m.clone());
            self.link.materials = vec![m.clone()];
        }
        if let Some(p) = o.p_exponent {
            self.radar.p_exponent = p;
        }
    }

    /// Material table with the user extensions applied.
    pub fn material_db(&self) -> anyhow::Result<MaterialDb> {
        let mut db = MaterialDb::builtin();
        db.extend(self.link.extra_materials.iter().cloned())
            .map_err(|e| bad(e.to_string()))?;
        Ok(db)
    }

    /// Checks every section against the library invariants.
    pub fn validate(&self) -> anyhow::Result<()> {
        let cfg = |r: dradar::Result<()>| r.map_err(|e| bad(e.to_string()));
        let r = &self.radar;
        if !(r.carrier_hz > 0.0 && r.carrier_hz.is_finite()) {
            return Err(bad(format!("radar.carrier_hz must be > 0, got {}", r.carrier_hz)));
        }
        cfg(r.link_params().validate())?;

        let d = &self.doa;
        nonempty("doa.arrays", d.arrays.len())?;
        nonempty("doa.algorithms", d.algorithms.len())?;
        nonempty("doa.snr_db", d.snr_db.len())?;
        nonempty("doa.distances_m", d.distances_m.len())?;
        finite("doa.snr_db", &d.snr_db)?;
        positive("doa.distances_m", &d.distances_m)?;
        if d.runs == 0 {
            return Err(bad("doa.runs must be >= 1"));
        }
        if d.snapshots == 0 {
            return Err(bad("doa.snapshots must be >= 1"));
        }
        let targets = d.target_set().map_err(|e| bad(format!("doa.targets: {e}")))?;
        if targets.len() > dradar::eval::MAX_ASSIGN_TARGETS {
            return Err(bad(format!(
                "doa.targets holds {} targets; at most {} are supported",
                targets.len(),
                dradar::eval::MAX_ASSIGN_TARGETS
            )));
        }
        for a in &d.arrays {
            if targets.len() >= a.nx * a.ny {
                return Err(bad(format!(
                    "doa.arrays: {a} has too few elements for {} targets",
                    targets.len()
                )));
            }
        }
        cfg(d.search.validate())?;
        let db = self.material_db()?;
        if let Some(m) = &d.material {
            db.get(m).map_err(|e| bad(format!("doa.material: {e}")))?;
        }

        let l = &self.link;
        nonempty("link.snr_db", l.snr_db.len())?;
        nonempty("link.distances_m", l.distances_m.len())?;
        finite("link.snr_db", &l.snr_db)?;
        positive("link.distances_m", &l.distances_m)?;
        if l.n_tx == 0 || l.n_rx == 0 {
            return Err(bad("link.n_tx and link.n_rx must be >= 1"));
        }
        for m in &l.materials {
            db.get(m).map_err(|e| bad(format!("link.materials: {e}")))?;
        }

        let p = &self.power;
        nonempty("power.elements", p.elements.len())?;
        cfg(p.lo_params().validate())?;
        cfg(p.txrx_params(1, 1).validate())?;

        let af = &self.array_factor;
        nonempty("array_factor.arrays", af.arrays.len())?;
        for (name, ax) in [("array_factor.theta", af.theta), ("array_factor.phi", af.phi)] {
            if !(ax.step > 0.0) || !(ax.start <= ax.stop) || ax.start < -90.0 || ax.stop > 90.0 {
                return Err(bad(format!(
                    "{name} must satisfy -90 <= start <= stop <= 90 and step > 0"
                )));
            }
        }

        let c = &self.chirp;
        if let Some(r) = c.ranges_m.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(bad(format!("chirp.ranges_m values must be >= 0, got {r}")));
        }
        if c.ranges_m.iter().any(|&r| r > c.max_range_m) {
            return Err(bad("chirp.ranges_m must not exceed chirp.max_range_m"));
        }
        Ok(())
    }
}

fn nonempty(name: &str, len: usize) -> anyhow::Result<()> {
    if len == 0 {
        return Err(bad(format!("{name} must not be empty")));
    }
    Ok(())
}

fn finite(name: &str, v: &[f64]) -> anyhow::Result<()> {
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(bad(format!("{name} holds a non-finite value {x}")));
    }
    Ok(())
}

fn positive(name: &str, v: &[f64]) -> anyhow::Result<()> {
    if let Some(x) = v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(bad(format!("{name} values must be > 0, got {x}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
        assert_eq!(RunConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml("[doa]\nsnr = [1.0]\n").unwrap_err();
        let msg = err.to_string();
        assert!(err.downcast_ref::<ConfigError>().is_some());
        assert!(msg.contains("snr"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn array_size_parsing() {
        assert_eq!("16x4".parse::<ArraySize>().unwrap(), ArraySize { nx: 16, ny: 4 });
        assert_eq!(" 2X2 ".parse::<ArraySize>().unwrap().to_string(), "2x2");
        assert!("8".parse::<ArraySize>().is_err());
        assert!("0x4".parse::<ArraySize>().is_err());
        let c = RunConfig::from_toml("[doa]\narrays = [\"4x2\"]\n").unwrap();
        assert_eq!(c.doa.arrays, vec![ArraySize { nx: 4, ny: 2 }]);
    }

    #[test]
    fn flags_override_file() {
        let mut c = RunConfig::from_toml("seed = 5\n[doa]\nruns = 7\n").unwrap();
        c.apply(&Overrides {
            seed: Some(9),
            array: Some(ArraySize { nx: 2, ny: 2 }),
            algorithm: Some(Algorithm::Mvdr),
            material: Some("drywall".into()),
            ..Default::default()
        });
        assert_eq!((c.seed, c.doa.runs), (9, 7));
        assert_eq!(c.doa.algorithms, vec![Algorithm::Mvdr]);
        assert_eq!(c.link.materials, vec!["drywall".to_string()]);
        c.validate().unwrap();
    }

    #[test]
    fn validation_failures() {
        let cases = [
            "[doa]\nruns = 0\n",
            "[doa]\ndistances_m = [0.0]\n",
            "[doa]\ntargets = [[0.0, 0.0], [0.0, 0.0]]\n",
            "[doa]\narrays = [\"1x2\"]\n",
            "[doa]\nmaterial = \"brick\"\n",
            "[link]\nmaterials = [\"brick\"]\n",
            "[radar]\np_exponent = 5.0\n",
            "[power]\neta_tx = 2.0\n",
            "[array_factor]\ntheta = { start = 10.0, stop = 0.0, step = 1.0 }\n",
            "[chirp]\nranges_m = [20.0]\n",
        ];
        for text in cases {
            let c = RunConfig::from_toml(text).unwrap();
            let err = c.validate().unwrap_err();
            assert!(err.downcast_ref::<ConfigError>().is_some(), "{text}: {err}");
        }
    }

    #[test]
    fn extra_materials_are_selectable() {
        let text = "[link]\nmaterials = [\"Brick\"]\nextra_materials = [{ name = \"Brick\", thickness_cm = 10.0, loss_db = 40.0 }]\n";
        let c = RunConfig::from_toml(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.material_db().unwrap().get("brick").unwrap().loss_db, 40.0);
    }
}
