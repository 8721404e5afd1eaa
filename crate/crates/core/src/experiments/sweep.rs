//! One-parameter scans of the all-noise infidelity.

use serde::{Deserialize, Serialize};

use super::budget::{noisy_infidelity, BudgetOptions, PulseKind};
use crate::atomic::{GeometryConfig, LaserAxis, SpeciesTable, N_RANGE};
use crate::error::{Error, Result};
use crate::grape::{find_time_optimal, robustify_vdw, OptimizerOptions, PulseSchedule};
use crate::hamiltonian::{GateModel, NoiseConfig};
use crate::units::{khz, to_um, uk};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Ω_max/J, dimensionless.
    Ratio,
    /// Principal quantum number.
    N,
    /// Temperature, µK.
    TTemp,
    /// Radial trap frequency ω_z/2π in kHz (ω_y = ω_z, ω_x = ω_z/5).
    OmegaZ,
}

impl SweepVariable {
    pub fn unit(self) -> &'static str {
        match self {
            SweepVariable::Ratio | SweepVariable::N => "1",
            SweepVariable::TTemp => "uK",
            SweepVariable::OmegaZ => "2pi*kHz",
        }
    }

    /// Whether every grid point needs its own pulse.
    fn reoptimizes(self) -> bool {
        matches!(self, SweepVariable::Ratio | SweepVariable::N)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseSource {
    TimeOptimal,
    #[default]
    Robust,
}

impl PulseSource {
    pub fn kind(self) -> PulseKind {
        match self {
            PulseSource::TimeOptimal => PulseKind::TimeOptimal,
            PulseSource::Robust => PulseKind::VdwRobust,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    #[serde(default)]
    pub source: PulseSource,
    /// Laser orientations to evaluate; defaults to both for the ω_z scan and
    /// to the model's own orientation otherwise.
    #[serde(default)]
    pub laser_axes: Option<Vec<LaserAxis>>,
    /// Also emit the variant without any recoil term; defaults to true for
    /// the ω_z scan.
    #[serde(default)]
    pub no_recoil: Option<bool>,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, values: Vec<f64>) -> Self {
        Self {
            variable,
            values,
            source: PulseSource::Robust,
            laser_axes: None,
            no_recoil: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(
                "sweep grid must be strictly increasing".into(),
            ));
        }
        for &v in &self.values {
            let ok = match self.variable {
                SweepVariable::Ratio => v > 0.0 && v <= 10.0,
                SweepVariable::N => {
                    v.fract() == 0.0 && v >= N_RANGE.0 as f64 && v <= N_RANGE.1 as f64
                }
                SweepVariable::TTemp => v.is_finite() && v >= 0.0,
                SweepVariable::OmegaZ => v.is_finite() && v > 0.0,
            };
            if !ok {
                return Err(Error::Config(format!(
                    "sweep value {v} is out of range for {:?} ({})",
                    self.variable,
                    self.variable.unit()
                )));
            }
        }
        Ok(())
    }

    fn axes(&self, base: LaserAxis) -> Vec<LaserAxis> {
        match (&self.laser_axes, self.variable) {
            (Some(a), _) => a.clone(),
            (None, SweepVariable::OmegaZ) => vec![LaserAxis::Z, LaserAxis::X],
            (None, _) => vec![base],
        }
    }

    fn with_no_recoil(&self) -> bool {
        self.no_recoil
            .unwrap_or(self.variable == SweepVariable::OmegaZ)
    }
}

/// Everything a sweep holds fixed.
#[derive(Debug, Clone)]
pub struct SweepContext {
    /// Operating point; its noise flags define the "all noise" evaluation.
    pub base: GateModel,
    pub species: String,
    pub table: SpeciesTable,
    pub optimizer: OptimizerOptions,
    pub budget: BudgetOptions,
    /// Pulse used when the grid does not require re-optimization; found at
    /// the operating point when absent.
    pub pulse: Option<PulseSchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// `laser_z`, `laser_x` or `no_recoil`.
    pub variant: String,
    pub infidelity: Option<f64>,
    pub duration_t_omega: Option<f64>,
    pub duration_ns: Option<f64>,
    pub r_um: f64,
    pub additive: bool,
    pub error: Option<String>,
}

fn synthesize(
    model: &GateModel,
    source: PulseSource,
    opts: &OptimizerOptions,
) -> Result<PulseSchedule> {
    let ratio = model.ratio();
    let clean = model.clone().with_noise(NoiseConfig::none());
    let to = find_time_optimal(ratio, &clean, opts)?;
    match source {
        PulseSource::TimeOptimal => Ok(to.report.pulse),
        PulseSource::Robust => {
            let r = robustify_vdw(
                &to.report.pulse,
                &clean.with_noise(NoiseConfig::vdw_only()),
                opts,
            )?;
            Ok(r.report.pulse)
        }
    }
}

fn point_model(ctx: &SweepContext, var: SweepVariable, v: f64) -> Result<GateModel> {
    let base = &ctx.base;
    let mut m = base.clone();
    match var {
        SweepVariable::Ratio => {
            let mut f = GateModel::from_ratio(base.data, base.omega_max, v)?;
            f.geom = GeometryConfig {
                r: f.geom.r,
                ..base.geom
            };
            f.noise = base.noise;
            m = f;
        }
        SweepVariable::N => {
            let n = v as u32;
            let data = ctx.table.pair_data(&ctx.species, n)?;
            // Ω_max ∝ n^{-3/2} at fixed Ω_max/J
            let omega = base.omega_max * (n as f64 / base.data.n as f64).powf(-1.5);
            let mut f = GateModel::from_ratio(data, omega, base.ratio())?;
            f.geom = GeometryConfig {
                r: f.geom.r,
                ..base.geom
            };
            f.noise = base.noise;
            m = f;
        }
        SweepVariable::TTemp => m.geom.t_temp = uk(v),
        SweepVariable::OmegaZ => {
            m.geom.omega_z = khz(v);
            m.geom.omega_y = khz(v);
            m.geom.omega_x = khz(v / 5.0);
        }
    }
    m.data.validate()?;
    m.geom.validate()?;
    Ok(m)
}

fn variants(spec: &SweepSpec, base: &GateModel) -> Vec<(String, NoiseConfig, LaserAxis)> {
    let mut out: Vec<(String, NoiseConfig, LaserAxis)> = spec
        .axes(base.geom.laser_axis)
        .into_iter()
        .map(|a| (format!("laser_{}", a.axis()), base.noise, a))
        .collect();
    if spec.with_no_recoil() {
        let n = NoiseConfig {
            recoil_detuning: false,
            recoil_coupling: false,
            ..base.noise
        };
        out.push(("no_recoil".into(), n, base.geom.laser_axis));
    }
    out
}

/// Evaluate the all-noise infidelity at every grid value. Points that fail
/// produce rows carrying the error and the sweep continues.
pub fn sweep(spec: &SweepSpec, ctx: &SweepContext) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    ctx.optimizer.validate()?;
    let kind = spec.source.kind();
    let fixed = if spec.variable.reoptimizes() {
        None
    } else {
        Some(match &ctx.pulse {
            Some(p) => p.clone(),
            None => synthesize(&ctx.base, spec.source, &ctx.optimizer)?,
        })
    };
    let mut rows = Vec::new();
    for &v in &spec.values {
        let model = match point_model(ctx, spec.variable, v) {
            Ok(m) => m,
            Err(e) => {
                rows.push(failed(v, "-", f64::NAN, &e));
                continue;
            }
        };
        let r_um = to_um(model.geom.r);
        let pulse = match &fixed {
            Some(p) => p.clone(),
            None => match synthesize(&model, spec.source, &ctx.optimizer) {
                Ok(p) => p,
                Err(e) => {
                    log::warn!("sweep point {v}: {e}");
                    rows.push(failed(v, "-", r_um, &e));
                    continue;
                }
            },
        };
        for (name, noise, axis) in variants(spec, &model) {
            let mut m = model.clone();
            m.noise = noise;
            m.geom.laser_axis = axis;
            let row = match noisy_infidelity(&pulse, &m, kind.baseline(), &ctx.budget) {
                Ok(e) => SweepRow {
                    value: v,
                    variant: name,
                    infidelity: Some(e.infidelity),
                    duration_t_omega: Some(pulse.duration),
                    duration_ns: Some(pulse.duration / model.omega_max * 1e9),
                    r_um,
                    additive: e.additive,
                    error: None,
                },
                Err(e) => failed(v, &name, r_um, &e),
            };
            log::info!(
                "sweep {:?} = {v}: {} -> {:?}",
                spec.variable,
                row.variant,
                row.infidelity
            );
            rows.push(row);
        }
    }
    Ok(rows)
}

fn failed(value: f64, variant: &str, r_um: f64, e: &Error) -> SweepRow {
    SweepRow {
        value,
        variant: variant.to_string(),
        infidelity: None,
        duration_t_omega: None,
        duration_ns: None,
        r_um,
        additive: false,
        error: Some(e.to_string()),
    }
}
