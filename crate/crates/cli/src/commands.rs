use std::fmt;

use serde::Serialize;

use dradar::array::{array_factor_map, linspace_step};
use dradar::doa::Algorithm;
use dradar::eval::{sweep, Scenario, SweepAxes, SweepResult};
use dradar::linkbudget::required_tx_power_for_system_snr;
use dradar::power::{lo_breakdown, total_power_budget};
use dradar::units::{linear_to_db, watts_to_dbm};
use dradar::waveform::{
    dechirp, estimate_ranges, if_spectrum, range_resolution, rx_echo, tx_chirp, ChirpConfig,
    ComplexSampleSeries, IfSpectrum,
};
use dradar::Error;

use crate::config::{DegeneratePolicy, RunConfig};

/// A sweep cell had degenerate runs under the abort policy; exit code 4.
#[derive(Debug)]
pub struct DegenerateAbort(pub String);

impl fmt::Display for DegenerateAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DegenerateAbort {}

pub const DOA_COLUMNS: [&str; 8] = [
    "array",
    "algorithm",
    "snr_db",
    "distance_m",
    "rmse_deg",
    "degenerate_runs",
    "m_runs",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoaRow {
    pub array: String,
    pub algorithm: Algorithm,
    pub snr_db: f64,
    pub distance_m: f64,
    pub rmse_deg: f64,
    pub degenerate_runs: usize,
    pub m_runs: usize,
    pub seed: u64,
}

pub fn doa_sweep(cfg: &RunConfig) -> anyhow::Result<(SweepResult, Vec<DoaRow>)> {
    let d = &cfg.doa;
    let arrays = d
        .arrays
        .iter()
        .map(|a| a.geometry(cfg.radar.carrier_hz))
        .collect::<dradar::Result<Vec<_>>>()?;
    let material = match &d.material {
        Some(name) => Some(cfg.material_db()?.get(name)?.clone()),
        None => None,
    };
    let base = Scenario {
        targets: d.target_set()?,
        d0: cfg.radar.d0_m,
        p_exponent: cfg.radar.p_exponent,
        n_snapshots: d.snapshots,
        material,
        search: d.search,
        ..Scenario::new(arrays[0], d.algorithms[0], d.snr_db[0], d.distances_m[0])
    };
    let axes = SweepAxes {
        arrays,
        algorithms: d.algorithms.clone(),
        snr_db: d.snr_db.clone(),
        distances: d.distances_m.clone(),
    };
    let result = sweep(&base, &axes, d.runs, cfg.seed)?;
    if d.on_degenerate == DegeneratePolicy::Abort {
        if let Some(c) = result.cells.iter().find(|c| c.degenerate_runs > 0) {
            return Err(DegenerateAbort(format!(
                "{} runs with too few spectral peaks at array {}, {}, {} dB, {} m",
                c.degenerate_runs, c.array, c.algorithm, c.snr_db, c.distance_m
            ))
            .into());
        }
    }
    let rows = result
        .cells
        .iter()
        .map(|c| DoaRow {
            array: c.array.clone(),
            algorithm: c.algorithm,
            snr_db: c.snr_db,
            distance_m: c.distance_m,
            rmse_deg: c.rmse_deg,
            degenerate_runs: c.degenerate_runs,
            m_runs: result.m_runs,
            seed: result.master_seed,
        })
        .collect();
    Ok((result, rows))
}

pub const LINK_COLUMNS: [&str; 6] = [
    "material",
    "wall_loss_db",
    "snr_db",
    "distance_m",
    "p_tx_w",
    "p_tx_dbm",
];

pub const FREE_SPACE: &str = "Free Space";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkRow {
    pub material: String,
    /// Round-trip wall penalty (dB).
    pub wall_loss_db: f64,
    /// System SNR target after MIMO combining (dB).
    pub snr_db: f64,
    pub distance_m: f64,
    pub p_tx_w: f64,
    pub p_tx_dbm: f64,
}

/// Required per-element TX power over SNR x distance, free space first,
/// then each selected material in config order.
pub fn link_budget(cfg: &RunConfig) -> anyhow::Result<Vec<LinkRow>> {
    let params = cfg.radar.link_params();
    params.validate()?;
    let l = &cfg.link;
    let db = cfg.material_db()?;
    let mut scenes = vec![(FREE_SPACE.to_string(), 0.0)];
    for name in &l.materials {
        let m = db.get(name)?;
        scenes.push((m.name.clone(), m.round_trip_loss_db()));
    }
    let mut rows = Vec::new();
    for (name, loss) in &scenes {
        for &snr in &l.snr_db {
            for &d in &l.distances_m {
                // the wall costs `loss` dB of SNR, recovered with TX power
                let p = required_tx_power_for_system_snr(&params, snr + loss, d, l.n_tx, l.n_rx)?;
                rows.push(LinkRow {
                    material: name.clone(),
                    wall_loss_db: *loss,
                    snr_db: snr,
                    distance_m: d,
                    p_tx_w: p,
                    p_tx_dbm: watts_to_dbm(p),
                });
            }
        }
    }
    Ok(rows)
}

pub const POWER_COLUMNS: [&str; 14] = [
    "n_elements",
    "n_tx",
    "n_rx",
    "lo_gain_tx_db",
    "lo_gain_rx_db",
    "lo_amps_tx",
    "lo_amps_rx",
    "lo_window_tx_pass",
    "lo_window_rx_pass",
    "p_dc_tx_mw",
    "p_dc_rx_mw",
    "p_lo_amp_mw",
    "p_dc_lo_mw",
    "total_mw",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub n_elements: usize,
    pub n_tx: usize,
    pub n_rx: usize,
    pub lo_gain_tx_db: f64,
    pub lo_gain_rx_db: f64,
    pub lo_amps_tx: usize,
    pub lo_amps_rx: usize,
    pub lo_window_tx_pass: bool,
    pub lo_window_rx_pass: bool,
    pub p_dc_tx_mw: f64,
    pub p_dc_rx_mw: f64,
    /// LO amplifiers only, without the multiplier.
    pub p_lo_amp_mw: f64,
    pub p_dc_lo_mw: f64,
    pub total_mw: f64,
}

/// DC power of TX, RX and LO for each configured element count.
pub fn power_budget(cfg: &RunConfig) -> anyhow::Result<Vec<PowerRow>> {
    let p = &cfg.power;
    let net = p.lo_params();
    let mut rows = Vec::new();
    for &n in &p.elements {
        let side = (n as f64).sqrt().round() as usize;
        if side * side != n {
            return Err(Error::Structure(format!(
                "{n} elements cannot be split into equal TX and RX counts"
            ))
            .into());
        }
        let txrx = p.txrx_params(side, side);
        let lo = lo_breakdown(&net, side, side)?;
        let b = total_power_budget(&txrx, &net, txrx.p_tx_element)?;
        rows.push(PowerRow {
            n_elements: n,
            n_tx: side,
            n_rx: side,
            lo_gain_tx_db: linear_to_db(lo.gain_tx),
            lo_gain_rx_db: linear_to_db(lo.gain_rx),
            lo_amps_tx: lo.amps_tx,
            lo_amps_rx: lo.amps_rx,
            lo_window_tx_pass: lo.window_tx.pass,
            lo_window_rx_pass: lo.window_rx.pass,
            p_dc_tx_mw: b.p_dc_tx * 1e3,
            p_dc_rx_mw: b.p_dc_rx * 1e3,
            p_lo_amp_mw: (b.p_dc_lo - net.p_mult) * 1e3,
            p_dc_lo_mw: b.p_dc_lo * 1e3,
            total_mw: b.total * 1e3,
        });
    }
    Ok(rows)
}

pub const AF_COLUMNS: [&str; 3] = ["theta_deg", "phi_deg", "af_mag"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AfRow {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub af_mag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AfSummary {
    pub array: String,
    pub theta_points: usize,
    pub phi_points: usize,
    pub max: f64,
    pub max_theta_deg: f64,
    pub max_phi_deg: f64,
    pub min: f64,
}

/// Dense |AF| grid per configured array.
pub fn array_factor(cfg: &RunConfig) -> anyhow::Result<Vec<(AfSummary, Vec<AfRow>)>> {
    let af = &cfg.array_factor;
    let theta = linspace_step(af.theta.start, af.theta.stop, af.theta.step)?;
    let phi = linspace_step(af.phi.start, af.phi.stop, af.phi.step)?;
    af.arrays
        .iter()
        .map(|a| {
            let geom = a.geometry(cfg.radar.carrier_hz)?;
            let map = array_factor_map(&geom, &theta, &phi)?;
            let (r, c, max) = map.argmax();
            let best = map.grid.direction(r, c);
            let mut rows = Vec::with_capacity(theta.len() * phi.len());
            for (i, &t) in theta.iter().enumerate() {
                for (j, &p) in phi.iter().enumerate() {
                    rows.push(AfRow {
                        theta_deg: t,
                        phi_deg: p,
                        af_mag: map.at(i, j),
                    });
                }
            }
            let summary = AfSummary {
                array: geom.label(),
                theta_points: theta.len(),
                phi_points: phi.len(),
                max,
                max_theta_deg: best.theta,
                max_phi_deg: best.phi,
                min: map.min(),
            };
            Ok((summary, rows))
        })
        .collect()
}

pub const CHIRP_TARGET_COLUMNS: [&str; 4] = [
    "true_range_m",
    "estimated_range_m",
    "error_m",
    "within_resolution",
];
pub const CHIRP_SPECTRUM_COLUMNS: [&str; 3] = ["frequency_hz", "range_m", "magnitude"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeRow {
    pub true_range_m: f64,
    pub estimated_range_m: f64,
    pub error_m: f64,
    pub within_resolution: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub frequency_hz: f64,
    pub range_m: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChirpReport {
    pub bandwidth_hz: f64,
    pub slope_hz_per_s: f64,
    pub sample_rate_hz: f64,
    pub samples_per_chirp: usize,
    pub range_resolution_m: f64,
    pub max_unambiguous_range_m: f64,
    pub targets: Vec<RangeRow>,
    #[serde(skip)]
    pub spectrum: Vec<SpectrumRow>,
}

/// Synthesises one chirp with echoes from every configured range, dechirps it
/// and estimates the ranges back from the IF spectrum.
pub fn chirp_demo(cfg: &RunConfig) -> anyhow::Result<ChirpReport> {
    let c = &cfg.chirp;
    let chirp = ChirpConfig::for_max_range(
        c.f0_hz,
        c.bandwidth_hz,
        c.chirp_duration_s,
        c.chirps_per_frame,
        c.max_range_m,
    )?;
    let n = chirp.samples_per_chirp();
    let resolution = range_resolution(c.bandwidth_hz)?;
    let mut targets = Vec::new();
    let mut spectrum = Vec::new();
    if !c.ranges_m.is_empty() {
        let tx = tx_chirp(&chirp, n)?;
        let mut rx: Option<ComplexSampleSeries> = None;
        for &r in &c.ranges_m {
            let echo = rx_echo(&chirp, r, 1.0, n)?;
            rx = Some(match rx {
                Some(acc) => acc.superpose(&echo)?,
                None => echo,
            });
        }
        let if_series = dechirp(&tx, &rx.expect("at least one range"))?;
        let spec: IfSpectrum = if_spectrum(&if_series)?;
        let mut estimates = estimate_ranges(&if_series, &chirp, c.ranges_m.len())?;
        estimates.sort_by(f64::total_cmp);
        let mut truth = c.ranges_m.clone();
        truth.sort_by(f64::total_cmp);
        targets = truth
            .iter()
            .zip(&estimates)
            .map(|(&t, &e)| RangeRow {
                true_range_m: t,
                estimated_range_m: e,
                error_m: e - t,
                within_resolution: (e - t).abs() <= resolution,
            })
            .collect();
        spectrum = spec
            .frequencies
            .iter()
            .zip(&spec.magnitudes)
            .map(|(&f, &m)| SpectrumRow {
                frequency_hz: f,
                range_m: dradar::waveform::range_from_if(&chirp, f),
                magnitude: m,
            })
            .collect();
    }
    Ok(ChirpReport {
        bandwidth_hz: c.bandwidth_hz,
        slope_hz_per_s: chirp.slope(),
        sample_rate_hz: chirp.sample_rate(),
        samples_per_chirp: n,
        range_resolution_m: resolution,
        max_unambiguous_range_m: chirp.max_unambiguous_range(),
        targets,
        spectrum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ArraySize;

    #[test]
    fn link_cell_and_wall_offsets() {
        let mut cfg = RunConfig::default();
        cfg.link.snr_db = vec![10.0];
        cfg.link.distances_m = vec![5.0];
        let rows = link_budget(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].material, FREE_SPACE);
        assert!((rows[0].p_tx_dbm + 27.72).abs() < 0.01, "{}", rows[0].p_tx_dbm);
        let wood = rows.iter().find(|r| r.material == "Wood Door").unwrap();
        assert!((wood.p_tx_dbm - rows[0].p_tx_dbm - 51.0).abs() < 1e-9);
        cfg.link.materials.clear();
        assert_eq!(link_budget(&cfg).unwrap().len(), 1);
    }

    #[test]
    fn power_rows() {
        let mut cfg = RunConfig::default();
        cfg.power.elements = vec![64];
        let rows = power_budget(&cfg).unwrap();
        assert!((rows[0].p_dc_lo_mw - 603.0).abs() < 0.5, "{:?}", rows[0]);
        assert!((rows[0].p_dc_tx_mw - 800.0).abs() < 1e-9);
        assert!((rows[0].p_dc_rx_mw - 600.0).abs() < 1e-9);
        assert_eq!((rows[0].lo_amps_tx, rows[0].lo_amps_rx), (15, 15));
        cfg.power.elements = vec![36];
        let err = power_budget(&cfg).unwrap_err();
        assert!(matches!(err.downcast_ref::<Error>(), Some(Error::Structure(_))));
        cfg.power.elements = vec![8];
        assert!(power_budget(&cfg).is_err());
    }

    #[test]
    fn doubling_gamma_halves_amplifier_power() {
        let mut cfg = RunConfig::default();
        let base = power_budget(&cfg).unwrap();
        cfg.power.gamma_tx_per_mw *= 2.0;
        cfg.power.gamma_rx_per_mw *= 2.0;
        let fast = power_budget(&cfg).unwrap();
        for (a, b) in base.iter().zip(&fast) {
            assert!((b.p_lo_amp_mw - a.p_lo_amp_mw / 2.0).abs() < 1e-9 * a.p_lo_amp_mw);
        }
    }

    #[test]
    fn array_factor_peaks() {
        let mut cfg = RunConfig::default();
        cfg.array_factor.arrays = vec![ArraySize { nx: 8, ny: 8 }, ArraySize { nx: 2, ny: 2 }];
        let out = array_factor(&cfg).unwrap();
        assert!((out[0].0.max - 64.0).abs() < 1e-9);
        assert!((out[1].0.max - 4.0).abs() < 1e-12);
        assert_eq!(out[0].1.len(), 181 * 181);
        cfg.array_factor.theta.start = 5.0;
        let out = array_factor(&cfg).unwrap();
        assert!(out[0].0.max < 64.0);
    }

    #[test]
    fn chirp_demo_cases() {
        let mut cfg = RunConfig::default();
        let rep = chirp_demo(&cfg).unwrap();
        assert!((rep.range_resolution_m - 0.015).abs() < 1e-15);
        assert!(rep.targets[0].error_m.abs() <= 0.015);
        cfg.chirp.bandwidth_hz = 60e9;
        assert!((chirp_demo(&cfg).unwrap().range_resolution_m - 0.0025).abs() < 1e-15);
        cfg.chirp.ranges_m.clear();
        let rep = chirp_demo(&cfg).unwrap();
        assert!(rep.targets.is_empty() && rep.spectrum.is_empty());
        cfg.chirp.ranges_m = vec![2.0, 6.5];
        cfg.chirp.bandwidth_hz = 10e9;
        let rep = chirp_demo(&cfg).unwrap();
        assert_eq!(rep.targets.len(), 2);
        assert!(rep.targets.iter().all(|t| t.within_resolution), "{:?}", rep.targets);
    }

    #[test]
    fn small_doa_sweep_rows() {
        let mut cfg = RunConfig::default();
        cfg.doa.arrays = vec![ArraySize { nx: 2, ny: 2 }];
        cfg.doa.algorithms = vec![Algorithm::Mvdr];
        cfg.doa.runs = 3;
        let (_, rows) = doa_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 70);
        assert_eq!((rows[0].snr_db, rows[0].distance_m), (0.0, 1.0));
        assert_eq!((rows[69].snr_db, rows[69].distance_m), (30.0, 10.0));
        assert!(rows.iter().all(|r| r.m_runs == 3 && r.seed == 1));
    }
}
