//! Run configuration in laboratory units, derived-parameter reports and the
//! JSON/CSV artifact writers.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::atomic::{range_for_ratio, Axis, GeometryConfig, Laser, LaserAxis, SpeciesTable};
use crate::error::{Error, Result};
use crate::experiments::{
    coupling_strengths, BudgetOptions, BudgetReport, ProtocolRow, SweepRow, SweepVariable,
};
use crate::grape::{OptimizerOptions, ScanPoint};
use crate::hamiltonian::{GateModel, KineticSign, NoiseConfig};
use crate::operators::MotionalConfig;
use crate::units::{khz, mhz, to_hz, to_khz, to_mhz, to_um, uk, um};

fn default_noise() -> NoiseConfig {
    NoiseConfig {
        vdw: true,
        vdw_motion_1z: true,
        exchange_motion_1z: true,
        exchange_motion_2z: true,
        exchange_motion_2x: true,
        exchange_motion_2y: true,
        recoil_detuning: true,
        recoil_coupling: true,
        decay: true,
        detuning_compensation: false,
    }
}

fn default_protocol_ratios() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.3, 1.0, 2.1, 5.0, 10.0, 20.0, 50.0]
}

/// Everything a CLI run needs. Frequencies are 2π × (MHz or kHz), distances
/// µm and temperatures µK; conversion to SI happens in [`RunConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub species: String,
    pub n: u32,
    pub omega_max_mhz: f64,
    /// Ω_max/J; give either this or `r_um`.
    pub ratio: Option<f64>,
    pub r_um: Option<f64>,
    pub omega_x_khz: f64,
    pub omega_y_khz: f64,
    pub omega_z_khz: f64,
    pub t_temp_uk: f64,
    pub laser_axis: LaserAxis,
    pub noise: NoiseConfig,
    pub optimizer: OptimizerOptions,
    pub budget: BudgetOptions,
    /// Ratio grid of the `protocols` command.
    pub protocol_ratios: Vec<f64>,
    /// Follow the time-optimal search with vdW-robust re-optimization.
    pub robust_vdw: bool,
    pub out_dir: PathBuf,
    /// Seed of every randomized start; overrides `optimizer.seed`.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            species: "Rb87".into(),
            n: 100,
            omega_max_mhz: 10.0,
            ratio: Some(2.1),
            r_um: None,
            omega_x_khz: 20.0,
            omega_y_khz: 100.0,
            omega_z_khz: 100.0,
            t_temp_uk: 1.0,
            laser_axis: LaserAxis::Z,
            noise: default_noise(),
            optimizer: OptimizerOptions::default(),
            budget: BudgetOptions::default(),
            protocol_ratios: default_protocol_ratios(),
            robust_vdw: false,
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn positive(name: &str, v: f64, unit: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be positive, got {v} {unit}"
        )))
    }
}

/// A configuration turned into a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    /// Motion-free model carrying the configured noise flags.
    pub model: GateModel,
    pub ratio: f64,
    /// Interatomic distance, m.
    pub r: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        match (self.ratio, self.r_um) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either ratio or r_um, not both".into()))
            }
            (None, None) => return Err(Error::Config("one of ratio or r_um is required".into())),
            (Some(r), None) => positive("ratio", r, "(Omega_max/J)")?,
            (None, Some(r)) => positive("r_um", r, "um")?,
        }
        if self.species.is_empty() {
            return Err(Error::Config("species must not be empty".into()));
        }
        positive("omega_max_mhz", self.omega_max_mhz, "2pi*MHz")?;
        positive("omega_x_khz", self.omega_x_khz, "2pi*kHz")?;
        positive("omega_y_khz", self.omega_y_khz, "2pi*kHz")?;
        positive("omega_z_khz", self.omega_z_khz, "2pi*kHz")?;
        if !(self.t_temp_uk.is_finite() && self.t_temp_uk >= 0.0) {
            return Err(Error::Config(format!(
                "t_temp_uk must be non-negative, got {} uK",
                self.t_temp_uk
            )));
        }
        for &r in &self.protocol_ratios {
            positive("protocol ratio", r, "(Omega_max/J)")?;
        }
        let b = &self.budget;
        if b.min_cutoff < 2 || b.max_cutoff < b.min_cutoff {
            return Err(Error::Config(format!(
                "budget cutoffs need 2 <= min_cutoff <= max_cutoff, got {} and {}",
                b.min_cutoff, b.max_cutoff
            )));
        }
        self.optimizer_options().validate()
    }

    pub fn optimizer_options(&self) -> OptimizerOptions {
        OptimizerOptions {
            seed: self.seed,
            ..self.optimizer.clone()
        }
    }

    pub fn resolve(&self, table: &SpeciesTable) -> Result<Resolved> {
        self.validate()?;
        let data = table.pair_data(&self.species, self.n)?;
        let omega_max = mhz(self.omega_max_mhz);
        let r = match (self.ratio, self.r_um) {
            (Some(ratio), _) => range_for_ratio(omega_max, ratio, &data)?,
            (_, Some(r_um)) => um(r_um),
            _ => unreachable!("checked by validate"),
        };
        let model = GateModel {
            data,
            geom: GeometryConfig {
                r,
                omega_x: khz(self.omega_x_khz),
                omega_y: khz(self.omega_y_khz),
                omega_z: khz(self.omega_z_khz),
                t_temp: uk(self.t_temp_uk),
                laser_axis: self.laser_axis,
            },
            omega_max,
            noise: self.noise,
            motion: MotionalConfig::none(),
            kinetic_sign: KineticSign::Standard,
        };
        model.data.validate()?;
        model.geom.validate()?;
        Ok(Resolved {
            ratio: model.ratio(),
            r,
            model,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::parse("config", e))
    }

    /// Accepts a bare configuration or an [`Echo`] written by a previous run.
    /// A file that sets `r_um` without `ratio` drops the default ratio.
    pub fn from_json(text: &str) -> Result<Self> {
        let fail = |e: serde_json::Error| Error::parse("config", e);
        let mut v: serde_json::Value = serde_json::from_str(text).map_err(fail)?;
        if v.get("config").is_some() && v.get("derived").is_some() {
            v = v["config"].take();
        }
        if let Some(obj) = v.as_object_mut() {
            if obj.contains_key("r_um") && !obj.contains_key("ratio") {
                obj.insert("ratio".into(), serde_json::Value::Null);
            }
        }
        serde_json::from_value(v).map_err(fail)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }
}

/// Quantities that follow from a configuration, in laboratory units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedParameters {
    pub ratio: f64,
    pub r_um: f64,
    pub j_2pi_mhz: f64,
    pub omega_max_2pi_mhz: f64,
    pub v00_2pi_mhz: f64,
    pub v01_2pi_mhz: f64,
    pub v11_2pi_mhz: f64,
    /// Lamb–Dicke parameters of the laser driving |0⟩ ↔ |r0⟩ along x, y, z.
    pub eta0: [f64; 3],
    pub eta1: [f64; 3],
    pub recoil_detuning0_2pi_hz: f64,
    pub recoil_detuning1_2pi_hz: f64,
    /// Fock cutoffs the budget uses along x, y, z.
    pub cutoffs: [usize; 3],
    /// Analytic noise magnitudes, 2π × Hz.
    pub couplings_2pi_hz: Vec<(String, f64)>,
}

impl DerivedParameters {
    pub fn new(model: &GateModel, budget: &BudgetOptions) -> Result<Self> {
        let d = &model.data;
        let g = &model.geom;
        let v = d.vdw_strengths(g.r)?;
        let axes = [Axis::X, Axis::Y, Axis::Z];
        let eta = |laser| -> Result<[f64; 3]> {
            Ok([
                d.lamb_dicke(g.omega_x, laser)?,
                d.lamb_dicke(g.omega_y, laser)?,
                d.lamb_dicke(g.omega_z, laser)?,
            ])
        };
        let c = coupling_strengths(model)?;
        Ok(Self {
            ratio: model.ratio(),
            r_um: to_um(g.r),
            j_2pi_mhz: to_mhz(model.exchange_coupling()),
            omega_max_2pi_mhz: to_mhz(model.omega_max),
            v00_2pi_mhz: to_mhz(v.v00),
            v01_2pi_mhz: to_mhz(v.v01),
            v11_2pi_mhz: to_mhz(v.v11),
            eta0: eta(Laser::Zero)?,
            eta1: eta(Laser::One)?,
            recoil_detuning0_2pi_hz: to_hz(d.recoil_detuning(Laser::Zero)),
            recoil_detuning1_2pi_hz: to_hz(d.recoil_detuning(Laser::One)),
            cutoffs: axes.map(|a| budget.cutoff_for(g.trap_frequency(a), g.t_temp)),
            couplings_2pi_hz: c
                .rows()
                .iter()
                .map(|(k, v)| (k.to_string(), to_hz(*v)))
                .collect(),
        })
    }
}

/// The configuration a run used plus what it derived from it. Loading an
/// echo with [`RunConfig::from_json`] gives back the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Echo {
    pub config: RunConfig,
    pub derived: DerivedParameters,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// CSV with `#`-prefixed comment lines (units, provenance) before the header.
pub fn write_csv(
    path: &Path,
    comments: &[String],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = Vec::new();
    for c in comments {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let fail = |e: csv::Error| Error::parse(path.display().to_string(), e);
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(r).map_err(fail)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Best cost at every duration tried by the time-optimal search.
pub fn write_scan_csv(path: &Path, ratio: f64, scan: &[ScanPoint]) -> Result<()> {
    let mut points = scan.to_vec();
    points.sort_by(|a, b| a.duration.total_cmp(&b.duration));
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                num(p.duration),
                p.steps.to_string(),
                num(p.cost),
                p.starts_run.to_string(),
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            format!("Omega_max/J = {ratio}"),
            "duration_T_omega: T*Omega_max (dimensionless); cost: 1-F without noise".into(),
        ],
        &["duration_T_omega", "steps", "cost", "starts"],
        &rows,
    )
}

pub fn write_budget_csv(path: &Path, report: &BudgetReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.channel.id().to_string(),
                opt(r.infidelity),
                opt(r.excess),
                opt(r.analytic_coupling_2pi_hz),
                r.dim.to_string(),
                r.additive.to_string(),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            format!("pulse {} ({:?}), design-noise infidelity {}", report.pulse_id, report.kind, report.baseline_infidelity),
            "infidelity: 1-F with the channel and the design noise; excess: infidelity minus the no_noise row".into(),
            "analytic_coupling: 2pi*Hz; dim: largest Hilbert-space dimension simulated".into(),
        ],
        &["channel", "infidelity", "excess", "analytic_coupling_2pi_hz", "dim", "additive", "error"],
        &rows,
    )
}

pub fn write_sweep_csv(path: &Path, variable: SweepVariable, rows: &[SweepRow]) -> Result<()> {
    let name = serde_json::to_value(variable)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.value),
                r.variant.clone(),
                opt(r.infidelity),
                opt(r.duration_t_omega),
                opt(r.duration_ns),
                num(r.r_um),
                r.additive.to_string(),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            format!("{name} in {}", variable.unit()),
            "infidelity: 1-F with all configured noise; duration_t_omega: T*Omega_max; duration_ns: ns; r_um: um".into(),
        ],
        &[&name, "variant", "infidelity", "duration_t_omega", "duration_ns", "r_um", "additive", "error"],
        &body,
    )
}

pub fn write_protocols_csv(path: &Path, rows: &[ProtocolRow]) -> Result<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.ratio),
                num(r.pi_j_pi_duration),
                opt(r.pi_j_pi_infidelity),
                opt(r.magic_time),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            "ratio: Omega_max/J; durations in units of 1/Omega_max".into(),
            "pi_j_pi_infidelity: 1-F of the pi-wait-pi sequence; magic_time: first complete |01>->|10> transfer of a constant pulse, empty when none".into(),
        ],
        &["ratio", "pi_j_pi_duration", "pi_j_pi_infidelity", "magic_time", "error"],
        &body,
    )
}

/// Trap frequencies of a config in kHz, for display.
pub fn trap_khz(g: &GeometryConfig) -> [f64; 3] {
    [to_khz(g.omega_x), to_khz(g.omega_y), to_khz(g.omega_z)]
}
