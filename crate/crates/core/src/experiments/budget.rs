//! Per-channel error budget of a fixed pulse.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analytic::{coupling_strengths, CouplingStrengths};
use crate::atomic::{Axis, LaserAxis};
use crate::error::{Error, Result};
use crate::fidelity::{
    bell_fidelity, optimize_rotation, thermal_fidelity, thermal_fidelity_at, ThermalOptions,
};
use crate::grape::PulseSchedule;
use crate::hamiltonian::{GateModel, NoiseConfig};
use crate::operators::MotionalConfig;
use crate::propagator::internal_finals;
use crate::units::{to_hz, HBAR, KB};

/// What the pulse was optimized against. Every row of a budget includes the
/// pulse's design noise, and excesses are taken relative to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    #[default]
    TimeOptimal,
    VdwRobust,
}

impl PulseKind {
    pub fn baseline(self) -> NoiseConfig {
        match self {
            PulseKind::TimeOptimal => NoiseConfig::none(),
            PulseKind::VdwRobust => NoiseConfig::vdw_only(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    NoNoise,
    Vdw,
    Decay,
    /// First-order z fluctuations of both J and the vdW shifts.
    ZMotion,
    ExchangeMotion1z,
    ExchangeMotion2x,
    ExchangeMotion2y,
    ExchangeMotion2z,
    VdwMotion1z,
    RecoilDetuning,
    RecoilDetuningCompensated,
    RecoilCouplingX,
    RecoilCouplingZ,
    All,
}

impl Channel {
    pub const ALL: [Channel; 14] = [
        Channel::NoNoise,
        Channel::Vdw,
        Channel::Decay,
        Channel::ZMotion,
        Channel::ExchangeMotion1z,
        Channel::ExchangeMotion2x,
        Channel::ExchangeMotion2y,
        Channel::ExchangeMotion2z,
        Channel::VdwMotion1z,
        Channel::RecoilDetuning,
        Channel::RecoilDetuningCompensated,
        Channel::RecoilCouplingX,
        Channel::RecoilCouplingZ,
        Channel::All,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Channel::NoNoise => "no_noise",
            Channel::Vdw => "vdw",
            Channel::Decay => "decay",
            Channel::ZMotion => "z_motion",
            Channel::ExchangeMotion1z => "exchange_motion_1z",
            Channel::ExchangeMotion2x => "exchange_motion_2x",
            Channel::ExchangeMotion2y => "exchange_motion_2y",
            Channel::ExchangeMotion2z => "exchange_motion_2z",
            Channel::VdwMotion1z => "vdw_motion_1z",
            Channel::RecoilDetuning => "recoil_detuning",
            Channel::RecoilDetuningCompensated => "recoil_detuning_compensated",
            Channel::RecoilCouplingX => "recoil_coupling_x",
            Channel::RecoilCouplingZ => "recoil_coupling_z",
            Channel::All => "all",
        }
    }

    /// Rows implied by a set of enabled noise flags, in table order.
    pub fn selected(noise: &NoiseConfig) -> Vec<Channel> {
        Channel::ALL
            .into_iter()
            .filter(|c| match c {
                Channel::NoNoise => true,
                Channel::Vdw => noise.vdw,
                Channel::Decay => noise.decay,
                Channel::ZMotion => noise.exchange_motion_1z && noise.vdw_motion_1z,
                Channel::ExchangeMotion1z => noise.exchange_motion_1z,
                Channel::ExchangeMotion2x => noise.exchange_motion_2x,
                Channel::ExchangeMotion2y => noise.exchange_motion_2y,
                Channel::ExchangeMotion2z => noise.exchange_motion_2z,
                Channel::VdwMotion1z => noise.vdw_motion_1z,
                Channel::RecoilDetuning | Channel::RecoilDetuningCompensated => {
                    noise.recoil_detuning
                }
                Channel::RecoilCouplingX | Channel::RecoilCouplingZ => noise.recoil_coupling,
                Channel::All => !noise.is_noiseless(),
            })
            .collect()
    }

    /// Noise flags switched on by this row and the laser axis it uses;
    /// `All` takes both from the configuration.
    fn noise(self, config: &NoiseConfig, axis: LaserAxis) -> (NoiseConfig, LaserAxis) {
        let none = NoiseConfig::none();
        let n = match self {
            Channel::NoNoise => none,
            Channel::Vdw => NoiseConfig { vdw: true, ..none },
            Channel::Decay => NoiseConfig {
                decay: true,
                ..none
            },
            Channel::ZMotion => NoiseConfig {
                exchange_motion_1z: true,
                vdw_motion_1z: true,
                ..none
            },
            Channel::ExchangeMotion1z => NoiseConfig {
                exchange_motion_1z: true,
                ..none
            },
            Channel::ExchangeMotion2x => NoiseConfig {
                exchange_motion_2x: true,
                ..none
            },
            Channel::ExchangeMotion2y => NoiseConfig {
                exchange_motion_2y: true,
                ..none
            },
            Channel::ExchangeMotion2z => NoiseConfig {
                exchange_motion_2z: true,
                ..none
            },
            Channel::VdwMotion1z => NoiseConfig {
                vdw_motion_1z: true,
                ..none
            },
            Channel::RecoilDetuning => NoiseConfig {
                recoil_detuning: true,
                ..none
            },
            Channel::RecoilDetuningCompensated => NoiseConfig {
                recoil_detuning: true,
                detuning_compensation: true,
                ..none
            },
            Channel::RecoilCouplingX | Channel::RecoilCouplingZ => NoiseConfig {
                recoil_coupling: true,
                ..none
            },
            Channel::All => *config,
        };
        let axis = match self {
            Channel::RecoilCouplingX => LaserAxis::X,
            Channel::RecoilCouplingZ => LaserAxis::Z,
            _ => axis,
        };
        (n, axis)
    }

    fn coupling(self, c: &CouplingStrengths) -> Option<f64> {
        match self {
            Channel::NoNoise => Some(0.0),
            Channel::Vdw => Some(c.vdw),
            Channel::Decay => Some(c.decay),
            Channel::ZMotion => Some(c.exchange_motion_1z + c.vdw_motion_1z),
            Channel::ExchangeMotion1z => Some(c.exchange_motion_1z),
            Channel::ExchangeMotion2x => Some(c.exchange_motion_2x),
            Channel::ExchangeMotion2y => Some(c.exchange_motion_2y),
            Channel::ExchangeMotion2z => Some(c.exchange_motion_2z),
            Channel::VdwMotion1z => Some(c.vdw_motion_1z),
            Channel::RecoilDetuning | Channel::RecoilDetuningCompensated => Some(c.recoil_detuning),
            Channel::RecoilCouplingX => Some(c.recoil_coupling_x),
            Channel::RecoilCouplingZ => Some(c.recoil_coupling_z),
            Channel::All => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetOptions {
    /// Smallest Fock cutoff of any motional mode.
    pub min_cutoff: usize,
    pub max_cutoff: usize,
    pub thermal: ThermalOptions,
    /// Re-optimize the final rotation for every row instead of keeping the
    /// pulse's own angles.
    pub reoptimize_rotation: bool,
    /// Rows to compute; `None` derives them from the model's noise flags.
    pub channels: Option<Vec<Channel>>,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        Self {
            min_cutoff: 6,
            max_cutoff: 10,
            thermal: ThermalOptions::default(),
            reoptimize_rotation: false,
            channels: None,
        }
    }
}

impl BudgetOptions {
    /// Cutoff leaving at most 10⁻³ of a mode's thermal weight above it.
    pub fn cutoff_for(&self, omega: f64, t_temp: f64) -> usize {
        let m = if t_temp > 0.0 {
            (1e3f64.ln() * KB * t_temp / (HBAR * omega)).ceil() as usize
        } else {
            1
        };
        m.clamp(self.min_cutoff, self.max_cutoff.max(self.min_cutoff))
    }
}

/// 1 − F of a pulse under one noise configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyEvaluation {
    pub infidelity: f64,
    /// Largest Hilbert-space dimension simulated.
    pub dim: usize,
    /// Whether the value was composed from separately simulated axis groups.
    pub additive: bool,
}

fn fidelity(pulse: &PulseSchedule, m: &GateModel, opts: &BudgetOptions) -> Result<f64> {
    match (m.motion.is_empty(), opts.reoptimize_rotation) {
        (true, false) => bell_fidelity(&internal_finals(m, pulse)?, pulse.rotation),
        (true, true) => Ok(optimize_rotation(&internal_finals(m, pulse)?)?.1),
        (false, false) => thermal_fidelity_at(m, pulse, pulse.rotation, opts.thermal.weight_floor),
        (false, true) => Ok(thermal_fidelity(m, pulse, &opts.thermal)?.fidelity),
    }
}

fn simulate(
    pulse: &PulseSchedule,
    model: &GateModel,
    opts: &BudgetOptions,
) -> Result<(f64, usize)> {
    let axes = model.noise.motional_axes(model.geom.laser_axis.axis());
    let mut m = model.clone();
    let (geom, t) = (m.geom, m.geom.t_temp);
    m.motion = m.motion_for_axes(&axes, |a| opts.cutoff_for(geom.trap_frequency(a), t));
    m.validate()?;
    Ok((1.0 - fidelity(pulse, &m, opts)?, m.dim()))
}

/// Split the enabled flags into groups that need at most one motional axis:
/// everything on z (plus all internal terms) and one group per other axis.
fn axis_groups(noise: &NoiseConfig, laser: LaserAxis) -> Vec<NoiseConfig> {
    let recoil_x = noise.recoil_coupling && laser.axis() == Axis::X;
    let primary = NoiseConfig {
        exchange_motion_2x: false,
        exchange_motion_2y: false,
        recoil_coupling: noise.recoil_coupling && !recoil_x,
        ..*noise
    };
    let mut groups = vec![primary];
    if noise.exchange_motion_2x || recoil_x {
        groups.push(NoiseConfig {
            exchange_motion_2x: noise.exchange_motion_2x,
            recoil_coupling: recoil_x,
            ..NoiseConfig::none()
        });
    }
    if noise.exchange_motion_2y {
        groups.push(NoiseConfig {
            exchange_motion_2y: true,
            ..NoiseConfig::none()
        });
    }
    groups
}

/// 1 − F of `pulse` under `model.noise` (laser along `model.geom.laser_axis`).
/// Configurations needing modes on more than one axis are approximated by
/// adding the excess infidelity of each extra axis group, simulated on top
/// of `baseline`, to the infidelity of the z group.
pub fn noisy_infidelity(
    pulse: &PulseSchedule,
    model: &GateModel,
    baseline: NoiseConfig,
    opts: &BudgetOptions,
) -> Result<NoisyEvaluation> {
    let noise = model.noise.merge(baseline);
    let mut groups = axis_groups(&noise, model.geom.laser_axis);
    let with = |n: NoiseConfig| {
        let mut m = model.clone();
        m.noise = n;
        m
    };
    // a lone off-axis group needs no composition
    if groups.len() == 2 && groups[0].merge(baseline) == baseline {
        groups.remove(0);
        groups[0] = groups[0].merge(baseline);
    }
    let (primary, mut dim) = simulate(pulse, &with(groups[0]), opts)?;
    if groups.len() == 1 {
        return Ok(NoisyEvaluation {
            infidelity: primary,
            dim,
            additive: false,
        });
    }
    let (base, _) = simulate(pulse, &with(baseline), opts)?;
    let mut total = primary;
    for g in &groups[1..] {
        let (v, d) = simulate(pulse, &with(g.merge(baseline)), opts)?;
        total += v - base;
        dim = dim.max(d);
    }
    Ok(NoisyEvaluation {
        infidelity: total,
        dim,
        additive: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub channel: Channel,
    /// 1 − F with the pulse's design noise plus this channel.
    pub infidelity: Option<f64>,
    /// `infidelity` minus the design-noise infidelity.
    pub excess: Option<f64>,
    /// Analytic coupling strength divided by 2π, Hz.
    pub analytic_coupling_2pi_hz: Option<f64>,
    pub dim: usize,
    pub additive: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub pulse_id: String,
    pub kind: PulseKind,
    /// 1 − F under the design noise alone (the `no_noise` row).
    pub baseline_infidelity: f64,
    pub rows: Vec<BudgetRow>,
    pub model: GateModel,
}

impl BudgetReport {
    pub fn row(&self, channel: Channel) -> Option<&BudgetRow> {
        self.rows.iter().find(|r| r.channel == channel)
    }
}

/// Evaluate `pulse` once per noise channel enabled in `model.noise`, plus the
/// design-noise (`no_noise`) row and the `all` row. Motional channels use the
/// thermal mixed-state fidelity with only the modes they act on. A failing
/// row records its error; the report is still produced.
pub fn error_budget(
    pulse: &PulseSchedule,
    model: &GateModel,
    kind: PulseKind,
    pulse_id: &str,
    opts: &BudgetOptions,
) -> Result<BudgetReport> {
    pulse.validate()?;
    let ratio = model.ratio();
    if ((pulse.ratio - ratio) / ratio).abs() > 1e-3 {
        return Err(Error::Config(format!(
            "pulse was made for Omega_max/J = {}, model has {ratio:.6}",
            pulse.ratio
        )));
    }
    let baseline = kind.baseline();
    let mut clean = model.clone();
    clean.noise = baseline;
    clean.motion = MotionalConfig::none();
    clean.validate()?;
    let base_inf = 1.0 - fidelity(pulse, &clean, opts)?;
    let couplings = coupling_strengths(model)?;
    let channels = opts
        .channels
        .clone()
        .unwrap_or_else(|| Channel::selected(&model.noise));
    let rows = channels
        .par_iter()
        .map(|&c| {
            let (noise, axis) = c.noise(&model.noise, model.geom.laser_axis);
            let mut m = model.clone();
            m.noise = noise;
            m.geom.laser_axis = axis;
            m.motion = MotionalConfig::none();
            let coupling = c.coupling(&couplings).map(to_hz);
            match noisy_infidelity(pulse, &m, baseline, opts) {
                Ok(e) => BudgetRow {
                    channel: c,
                    infidelity: Some(e.infidelity),
                    excess: Some(e.infidelity - base_inf),
                    analytic_coupling_2pi_hz: coupling,
                    dim: e.dim,
                    additive: e.additive,
                    error: None,
                },
                Err(err) => {
                    log::warn!("budget row {} failed: {err}", c.id());
                    BudgetRow {
                        channel: c,
                        infidelity: None,
                        excess: None,
                        analytic_coupling_2pi_hz: coupling,
                        dim: 0,
                        additive: false,
                        error: Some(err.to_string()),
                    }
                }
            }
        })
        .collect();
    Ok(BudgetReport {
        pulse_id: pulse_id.to_string(),
        kind,
        baseline_infidelity: base_inf,
        rows,
        model: model.clone(),
    })
}
