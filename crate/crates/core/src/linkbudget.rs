//! Radar-equation link budget with distance scaling of SNR and TX power.
//!
//! The RX SNR and TX power are both allowed to vary with distance:
//!
//! ```text
//! SNR(d)  = SNR(d0)  * (d0/d)^p
//! P_TX(d) = P_TX(d0) * (d/d0)^(4-p)
//! ```
//!
//! `p = 0` holds SNR constant (TX power grows as d^4), `p = 4` holds TX power
//! constant (SNR falls as d^-4).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::array::mimo_snr_gain_db;
use crate::units::{db_to_linear, linear_to_db, wavelength, BOLTZMANN, T0_KELVIN};
use crate::{Error, Result};

/// Carrier used for the default parameter set (Hz).
pub const DEFAULT_CARRIER_HZ: f64 = 140e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudgetParams {
    /// TX output power per element (W).
    pub p_tx: f64,
    /// TX antenna gain (linear).
    pub g_tx: f64,
    /// RX antenna gain (linear).
    pub g_rx: f64,
    pub wavelength: f64,
    /// Radar cross section (m^2).
    pub rcs: f64,
    /// Coherent measurement time (s).
    pub t_meas: f64,
    /// Noise temperature (K).
    pub temperature: f64,
    /// RX noise factor (linear).
    pub noise_factor: f64,
    /// Reference distance of the scaling law (m).
    pub d0: f64,
    pub p_exponent: f64,
}

impl Default for LinkBudgetParams {
    /// Indoor gesture-sensing setup: 10 dB antennas, 140 GHz, 100 cm^2 RCS,
    /// 100 chirps of 10 us, 10 dB noise figure, p = 2.
    fn default() -> Self {
        Self {
            p_tx: 1e-3,
            g_tx: db_to_linear(10.0),
            g_rx: db_to_linear(10.0),
            wavelength: wavelength(DEFAULT_CARRIER_HZ),
            rcs: 0.01,
            t_meas: 1e-3,
            temperature: T0_KELVIN,
            noise_factor: db_to_linear(10.0),
            d0: 1.0,
            p_exponent: 2.0,
        }
    }
}

impl LinkBudgetParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("p_tx", self.p_tx),
            ("g_tx", self.g_tx),
            ("g_rx", self.g_rx),
            ("wavelength", self.wavelength),
            ("rcs", self.rcs),
            ("t_meas", self.t_meas),
            ("temperature", self.temperature),
            ("noise_factor", self.noise_factor),
            ("d0", self.d0),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        check_exponent(self.p_exponent)
    }

    /// `G_TX G_RX lambda^2 sigma T_meas / ((4 pi)^3 k T F)`: SNR per watt at 1 m.
    fn snr_per_watt_at_1m(&self) -> f64 {
        self.g_tx * self.g_rx * self.wavelength.powi(2) * self.rcs * self.t_meas
            / ((4.0 * PI).powi(3) * BOLTZMANN * self.temperature * self.noise_factor)
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(0.0..=4.0).contains(&p) {
        return Err(Error::Config(format!("scaling exponent must lie in [0, 4], got {p}")));
    }
    Ok(())
}

fn check_distance(name: &str, d: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::domain(format!("{name} must be > 0, got {d}")));
    }
    Ok(())
}

/// Free-space radar-equation SNR (linear) for a target at `d` metres.
pub fn rx_snr(params: &LinkBudgetParams, d: f64) -> Result<f64> {
    check_distance("distance", d)?;
    Ok(params.p_tx * params.snr_per_watt_at_1m() / d.powi(4))
}

/// SNR at `d` given `snr0_db` at `d0` under exponent `p` (dB).
pub fn scaled_snr_db(snr0_db: f64, d0: f64, d: f64, p: f64) -> Result<f64> {
    check_distance("d0", d0)?;
    check_distance("distance", d)?;
    Ok(snr0_db + 10.0 * p * (d0 / d).log10())
}

/// TX power at `d` given `p0_dbm` at `d0` under exponent `p` (dBm).
pub fn scaled_tx_power_db(p0_dbm: f64, d0: f64, d: f64, p: f64) -> Result<f64> {
    check_distance("d0", d0)?;
    check_distance("distance", d)?;
    Ok(p0_dbm + 10.0 * (4.0 - p) * (d / d0).log10())
}

/// TX power (W) needed at distance `d` when the scaling law is anchored at an
/// SNR of `snr_target_db_at_d0` (per element) at `params.d0`.
pub fn required_tx_power(params: &LinkBudgetParams, snr_target_db_at_d0: f64, d: f64) -> Result<f64> {
    check_distance("distance", d)?;
    check_distance("d0", params.d0)?;
    let p = params.p_exponent;
    Ok(db_to_linear(snr_target_db_at_d0) * params.d0.powf(p) * d.powf(4.0 - p)
        / params.snr_per_watt_at_1m())
}

/// Per-element SNR at `params.d0` that yields a post-combining (MIMO) SNR of
/// `system_snr_db` at distance `d`.
pub fn element_snr_at_d0(
    params: &LinkBudgetParams,
    system_snr_db: f64,
    d: f64,
    n_tx: usize,
    n_rx: usize,
) -> Result<f64> {
    let element_snr_at_d = system_snr_db - mimo_snr_gain_db(n_tx, n_rx)?;
    // invert SNR(d) = SNR(d0) (d0/d)^p
    scaled_snr_db(element_snr_at_d, d, params.d0, params.p_exponent)
}

/// Per-element TX power (W) for a MIMO array to reach `system_snr_db` after
/// combining at distance `d`.
pub fn required_tx_power_for_system_snr(
    params: &LinkBudgetParams,
    system_snr_db: f64,
    d: f64,
    n_tx: usize,
    n_rx: usize,
) -> Result<f64> {
    let snr0 = element_snr_at_d0(params, system_snr_db, d, n_tx, n_rx)?;
    required_tx_power(params, snr0, d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallMaterial {
    pub name: String,
    pub thickness_cm: f64,
    /// One-way penetration loss at 140 GHz (dB).
    pub loss_db: f64,
}

impl WallMaterial {
    pub fn new(name: impl Into<String>, thickness_cm: f64, loss_db: f64) -> Result<Self> {
        let m = Self {
            name: name.into(),
            thickness_cm,
            loss_db,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("material name must be nonempty".into()));
        }
        if !(self.loss_db >= 0.0 && self.loss_db.is_finite()) {
            return Err(Error::Config(format!(
                "material '{}' loss must be >= 0 dB, got {}",
                self.name, self.loss_db
            )));
        }
        if !(self.thickness_cm >= 0.0 && self.thickness_cm.is_finite()) {
            return Err(Error::Config(format!(
                "material '{}' thickness must be >= 0 cm",
                self.name
            )));
        }
        Ok(())
    }

    /// Round-trip SNR penalty (dB): the wall is crossed twice.
    pub fn round_trip_loss_db(&self) -> f64 {
        2.0 * self.loss_db
    }
}

/// SNR after a wall crossed on the way out and back.
pub fn through_wall_snr_db(snr_db: f64, material: &WallMaterial) -> f64 {
    snr_db - material.round_trip_loss_db()
}

/// Named wall materials; starts from the 140 GHz indoor measurements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaterialDb {
    materials: Vec<WallMaterial>,
}

impl MaterialDb {
    pub fn builtin() -> Self {
        let m = |name: &str, thickness_cm, loss_db| WallMaterial {
            name: name.to_string(),
            thickness_cm,
            loss_db,
        };
        Self {
            materials: vec![
                m("Clear Glass", 0.6, 8.6),
                m("Drywall", 14.5, 15.0),
                m("Wood Door", 3.5, 25.5),
            ],
        }
    }

    /// Adds user materials; names are compared case-insensitively.
    pub fn extend(&mut self, extra: impl IntoIterator<Item = WallMaterial>) -> Result<()> {
        for m in extra {
            m.validate()?;
            if self.find(&m.name).is_some() {
                return Err(Error::Config(format!("duplicate material '{}'", m.name)));
            }
            self.materials.push(m);
        }
        Ok(())
    }

    fn find(&self, name: &str) -> Option<&WallMaterial> {
        let key = name.trim();
        self.materials
            .iter()
            .find(|m| m.name.eq_ignore_ascii_case(key))
    }

    pub fn get(&self, name: &str) -> Result<&WallMaterial> {
        self.find(name)
            .ok_or_else(|| Error::NotFound(format!("material '{name}'")))
    }

    pub fn materials(&self) -> &[WallMaterial] {
        &self.materials
    }
}

pub fn material_db() -> MaterialDb {
    MaterialDb::builtin()
}

/// Convenience: SNR in dB from the radar equation.
pub fn rx_snr_db(params: &LinkBudgetParams, d: f64) -> Result<f64> {
    rx_snr(params, d).map(linear_to_db)
}
