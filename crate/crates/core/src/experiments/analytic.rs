//! Closed-form magnitudes of the noise terms, from thermal standard
//! deviations of the relative displacement and of the momentum.

use serde::{Deserialize, Serialize};

use crate::atomic::{Axis, Laser};
use crate::error::{Error, Result};
use crate::hamiltonian::GateModel;
use crate::units::{thermal_coth, HBAR};

/// Coupling strength of every budgeted noise term, in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingStrengths {
    /// Largest vdW shift max |V_ij|.
    pub vdw: f64,
    /// Γ_0 + Γ_1.
    pub decay: f64,
    pub exchange_motion_1z: f64,
    pub exchange_motion_2x: f64,
    pub exchange_motion_2y: f64,
    pub exchange_motion_2z: f64,
    pub vdw_motion_1z: f64,
    /// Largest single-photon recoil shift.
    pub recoil_detuning: f64,
    pub recoil_coupling_x: f64,
    pub recoil_coupling_z: f64,
}

impl CouplingStrengths {
    /// (id, value) pairs in budget order.
    pub fn rows(&self) -> [(&'static str, f64); 10] {
        [
            ("vdw", self.vdw),
            ("decay", self.decay),
            ("exchange_motion_1z", self.exchange_motion_1z),
            ("exchange_motion_2x", self.exchange_motion_2x),
            ("exchange_motion_2y", self.exchange_motion_2y),
            ("exchange_motion_2z", self.exchange_motion_2z),
            ("vdw_motion_1z", self.vdw_motion_1z),
            ("recoil_detuning", self.recoil_detuning),
            ("recoil_coupling_x", self.recoil_coupling_x),
            ("recoil_coupling_z", self.recoil_coupling_z),
        ]
    }
}

/// Thermal variance of `ℓ_A − ℓ_B` for two independent oscillators:
/// `2·(ħ/2mω)·coth(ħω/2k_BT)`.
pub fn relative_variance(model: &GateModel, axis: Axis) -> f64 {
    let w = model.geom.trap_frequency(axis);
    2.0 * HBAR / (2.0 * model.data.mass * w) * thermal_coth(w, model.geom.t_temp)
}

/// Momentum-kick coupling `(2π/λ)·√(ħω coth(ħω/2k_BT)/m)` along `axis`,
/// for the shorter of the two wavelengths.
pub fn recoil_coupling(model: &GateModel, axis: Axis) -> f64 {
    let w = model.geom.trap_frequency(axis);
    let lambda = model.data.lambda0.min(model.data.lambda1);
    let v = (HBAR * w * thermal_coth(w, model.geom.t_temp) / model.data.mass).sqrt();
    2.0 * std::f64::consts::PI / lambda * v
}

pub fn coupling_strengths(model: &GateModel) -> Result<CouplingStrengths> {
    model.data.validate()?;
    model.geom.validate()?;
    let r = model.geom.r;
    let j = model.exchange_coupling();
    let v = model.data.vdw_strengths(r)?;
    let vmax = v.v00.abs().max(v.v01.abs()).max(v.v11.abs());
    let var_z = relative_variance(model, Axis::Z);
    let sq = std::f64::consts::SQRT_2;
    let out = CouplingStrengths {
        vdw: vmax,
        decay: model.data.gamma0 + model.data.gamma1,
        exchange_motion_1z: j * 3.0 * var_z.sqrt() / r,
        exchange_motion_2x: j * 3.0 * sq * relative_variance(model, Axis::X) / (r * r),
        exchange_motion_2y: j * 3.0 * sq * relative_variance(model, Axis::Y) / (r * r),
        exchange_motion_2z: j * 6.0 * sq * var_z / (r * r),
        vdw_motion_1z: vmax * 6.0 * var_z.sqrt() / r,
        recoil_detuning: model
            .data
            .recoil_detuning(Laser::Zero)
            .max(model.data.recoil_detuning(Laser::One)),
        recoil_coupling_x: recoil_coupling(model, Axis::X),
        recoil_coupling_z: recoil_coupling(model, Axis::Z),
    };
    if out.rows().iter().any(|(_, x)| !x.is_finite()) {
        return Err(Error::Numeric("non-finite coupling strength".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recapture {
    /// Relative displacement gained from the dipolar force, m.
    pub displacement: f64,
    /// Ground-state extent `√(ħ/2mω_z)`, m.
    pub z_osc: f64,
}

/// Displacement `Δz = (3/2)·ħC3·T²/(mR⁴)` after a pulse of `duration`
/// seconds, compared with the trap ground-state extent.
pub fn recapture_displacement(model: &GateModel, duration: f64) -> Result<Recapture> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Domain(format!(
            "pulse duration must be positive, got {duration} s"
        )));
    }
    let m = model.data.mass;
    let r = model.geom.r;
    Ok(Recapture {
        displacement: 1.5 * HBAR * model.data.c3.abs() * duration * duration / (m * r.powi(4)),
        z_osc: (HBAR / (2.0 * m * model.geom.omega_z)).sqrt(),
    })
}
