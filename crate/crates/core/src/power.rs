//! LO distribution network and DC power budget of the TX, RX and LO sections.
//!
//! The LO is split over a binary tree from one shared frequency multiplier.
//! Every branch has path loss `l_p` and carries one amplifier of gain `G`;
//! the dividers add a total loss `l_d`. For `n` leaves the power reaching
//! each leaf is
//!
//! ```text
//! P_LO = l_d * (G * l_p)^log2(n) / n * P_REF
//! ```
//!
//! and the tree holds `2n - 1` amplifiers. An amplifier of gain `G` and power
//! gain efficiency `gamma` draws `G / gamma` watts.

use serde::{Deserialize, Serialize};

use crate::units::{db_to_linear, is_power_of_two, linear_to_db};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoNetworkParams {
    /// Reference power after the frequency multiplier (W).
    pub p_ref: f64,
    /// Per-branch path loss, linear in (0, 1].
    pub l_p: f64,
    /// Divider loss, linear in (0, 1].
    pub l_d: f64,
    /// Required LO power at each TX (W).
    pub target_lo_tx: f64,
    /// Required LO power at each RX (W).
    pub target_lo_rx: f64,
    /// TX-side amplifier power gain efficiency (1/W).
    pub gamma_tx: f64,
    /// RX-side amplifier power gain efficiency (1/W).
    pub gamma_rx: f64,
    /// Frequency multiplier DC power (W).
    pub p_mult: f64,
    /// Acceptable LO power window (W); advisory only.
    pub lo_min: f64,
    pub lo_max: f64,
}

impl Default for LoNetworkParams {
    /// 10 dB reference-to-LO gain, 2 dB path loss, 1 dB divider loss,
    /// gamma = 0.4 per mW and a 50 mW multiplier.
    fn default() -> Self {
        Self {
            p_ref: 1e-3,
            l_p: db_to_linear(-2.0),
            l_d: db_to_linear(-1.0),
            target_lo_tx: 10e-3,
            target_lo_rx: 10e-3,
            gamma_tx: 400.0,
            gamma_rx: 400.0,
            p_mult: 50e-3,
            lo_min: 0.0,
            lo_max: f64::INFINITY,
        }
    }
}

impl LoNetworkParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("l_p", self.l_p), ("l_d", self.l_d)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        for (name, v) in [
            ("p_ref", self.p_ref),
            ("target_lo_tx", self.target_lo_tx),
            ("target_lo_rx", self.target_lo_rx),
            ("gamma_tx", self.gamma_tx),
            ("gamma_rx", self.gamma_rx),
        ] {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.p_mult >= 0.0 && self.p_mult.is_finite()) {
            return Err(Error::Config(format!("p_mult must be >= 0, got {}", self.p_mult)));
        }
        if !(self.lo_min <= self.lo_max) {
            return Err(Error::Config(format!(
                "LO window is empty: min {} > max {}",
                self.lo_min, self.lo_max
            )));
        }
        Ok(())
    }
}

fn tree_depth(n: usize) -> Result<f64> {
    if n < 2 || !is_power_of_two(n) {
        return Err(Error::Structure(format!(
            "LO tree needs a power-of-two leaf count >= 2, got {n}"
        )));
    }
    Ok(n.trailing_zeros() as f64)
}

/// LO power reaching each of `n` leaves for amplifier gain `gain`.
pub fn lo_power_delivered(p_ref: f64, n: usize, gain: f64, l_p: f64, l_d: f64) -> Result<f64> {
    let depth = tree_depth(n)?;
    Ok(l_d * (gain * l_p).powf(depth) / n as f64 * p_ref)
}

/// Amplifier gain that delivers `p_lo_target` to each of `n` leaves.
pub fn required_lo_gain(p_lo_target: f64, p_ref: f64, n: usize, l_p: f64, l_d: f64) -> Result<f64> {
    let depth = tree_depth(n)?;
    Ok((n as f64 / l_d * p_lo_target / p_ref).powf(1.0 / depth) / l_p)
}

/// Amplifiers in a tree with `n` leaves: `1 + 2 + ... + n = 2n - 1`.
pub fn lo_amp_count(n: usize) -> Result<usize> {
    if !is_power_of_two(n) {
        return Err(Error::Structure(format!(
            "LO tree needs a power-of-two leaf count, got {n}"
        )));
    }
    Ok(2 * n - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoWindowCheck {
    pub pass: bool,
    /// Distance to the nearest bound (dB); negative when a bound is violated.
    pub margin_db: f64,
}

pub fn check_lo_window(p_lo: f64, lo_min: f64, lo_max: f64) -> Result<LoWindowCheck> {
    if !(lo_min <= lo_max) {
        return Err(Error::domain(format!(
            "LO window is empty: min {lo_min} > max {lo_max}"
        )));
    }
    let below = linear_to_db(p_lo / lo_min);
    let above = linear_to_db(lo_max / p_lo);
    if p_lo < lo_min {
        Ok(LoWindowCheck {
            pass: false,
            margin_db: below,
        })
    } else if p_lo > lo_max {
        Ok(LoWindowCheck {
            pass: false,
            margin_db: above,
        })
    } else {
        Ok(LoWindowCheck {
            pass: true,
            margin_db: below.min(above),
        })
    }
}

/// Maximum available gain of a stage with unilateral gain `u`.
pub fn max_gain_from_u(u: f64) -> Result<f64> {
    if !(u >= 1.0) {
        return Err(Error::domain(format!("unilateral gain must be >= 1, got {u}")));
    }
    Ok((u.sqrt() + (u - 1.0).sqrt()).powi(2))
}

/// Full LO-network bookkeeping for one TX/RX split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoBreakdown {
    pub gain_tx: f64,
    pub gain_rx: f64,
    pub amps_tx: usize,
    pub amps_rx: usize,
    /// LO power delivered at each TX / RX with the computed gains (W).
    pub p_lo_tx: f64,
    pub p_lo_rx: f64,
    pub window_tx: LoWindowCheck,
    pub window_rx: LoWindowCheck,
    /// Amplifier plus multiplier DC power (W).
    pub p_dc: f64,
}

pub fn lo_breakdown(net: &LoNetworkParams, n_tx: usize, n_rx: usize) -> Result<LoBreakdown> {
    net.validate()?;
    let gain_tx = required_lo_gain(net.target_lo_tx, net.p_ref, n_tx, net.l_p, net.l_d)?;
    let gain_rx = required_lo_gain(net.target_lo_rx, net.p_ref, n_rx, net.l_p, net.l_d)?;
    let amps_tx = lo_amp_count(n_tx)?;
    let amps_rx = lo_amp_count(n_rx)?;
    let p_lo_tx = lo_power_delivered(net.p_ref, n_tx, gain_tx, net.l_p, net.l_d)?;
    let p_lo_rx = lo_power_delivered(net.p_ref, n_rx, gain_rx, net.l_p, net.l_d)?;
    let p_dc = amps_tx as f64 * gain_tx / net.gamma_tx
        + amps_rx as f64 * gain_rx / net.gamma_rx
        + net.p_mult;
    Ok(LoBreakdown {
        gain_tx,
        gain_rx,
        amps_tx,
        amps_rx,
        p_lo_tx,
        p_lo_rx,
        window_tx: check_lo_window(p_lo_tx, net.lo_min, net.lo_max)?,
        window_rx: check_lo_window(p_lo_rx, net.lo_min, net.lo_max)?,
        p_dc,
    })
}

/// DC power of the LO amplifiers plus the shared multiplier (W).
pub fn lo_dc_power(net: &LoNetworkParams, n_tx: usize, n_rx: usize) -> Result<f64> {
    lo_breakdown(net, n_tx, n_rx).map(|b| b.p_dc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxRxPowerParams {
    pub n_tx: usize,
    pub n_rx: usize,
    /// TX output power per element at `d_ref` (W).
    pub p_tx_element: f64,
    /// TX (PA) efficiency in (0, 1].
    pub eta_tx: f64,
    /// Per-element RX-to-TX DC power ratio.
    pub alpha: f64,
    /// Distance at which the RX power is anchored (m).
    pub d_ref: f64,
}

impl Default for TxRxPowerParams {
    fn default() -> Self {
        Self {
            n_tx: 8,
            n_rx: 8,
            p_tx_element: 10e-3,
            eta_tx: 0.1,
            alpha: 0.75,
            d_ref: 1.0,
        }
    }
}

impl TxRxPowerParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::Config("TX and RX counts must be >= 1".into()));
        }
        if !(self.eta_tx > 0.0 && self.eta_tx <= 1.0) {
            return Err(Error::Config(format!("eta_tx must lie in (0, 1], got {}", self.eta_tx)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.p_tx_element >= 0.0 && self.p_tx_element.is_finite()) {
            return Err(Error::Config("p_tx_element must be >= 0".into()));
        }
        if !(self.d_ref > 0.0) {
            return Err(Error::Config("d_ref must be > 0".into()));
        }
        Ok(())
    }
}

/// `n_tx * P_TX(d) / eta` (W).
pub fn tx_dc_power(p: &TxRxPowerParams, p_tx_element_at_d: f64) -> f64 {
    p.n_tx as f64 * p_tx_element_at_d / p.eta_tx
}

/// RX DC power: `alpha` times the per-TX DC power at the reference distance,
/// for each of the `n_rx` receivers (W).
pub fn rx_dc_power(p: &TxRxPowerParams, p_dc_tx_at_dref: f64) -> f64 {
    p.n_rx as f64 * p.alpha * p_dc_tx_at_dref / p.n_tx as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBudget {
    pub p_dc_tx: f64,
    pub p_dc_rx: f64,
    pub p_dc_lo: f64,
    pub total: f64,
}

impl PowerBudget {
    pub fn from_components(p_dc_tx: f64, p_dc_rx: f64, p_dc_lo: f64) -> Result<Self> {
        if [p_dc_tx, p_dc_rx, p_dc_lo].iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::domain("power components must be >= 0"));
        }
        Ok(Self {
            p_dc_tx,
            p_dc_rx,
            p_dc_lo,
            total: p_dc_tx + p_dc_rx + p_dc_lo,
        })
    }
}

/// Full DC budget with the TX driven at `p_tx_element_at_d` per element.
pub fn total_power_budget(
    txrx: &TxRxPowerParams,
    net: &LoNetworkParams,
    p_tx_element_at_d: f64,
) -> Result<PowerBudget> {
    txrx.validate()?;
    let tx = tx_dc_power(txrx, p_tx_element_at_d);
    let rx = rx_dc_power(txrx, tx_dc_power(txrx, txrx.p_tx_element));
    let lo = lo_dc_power(net, txrx.n_tx, txrx.n_rx)?;
    PowerBudget::from_components(tx, rx, lo)
}
