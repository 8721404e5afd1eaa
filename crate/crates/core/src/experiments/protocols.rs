//! Square-pulse baselines: the π–wait–π sequence and the constant-drive
//! transfer |01⟩ → |10⟩.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{optimize_rotation, RotationAngles};
use crate::hamiltonian::{assemble, GateModel, NoiseConfig};
use crate::linalg::{eigh, is_hermitian, CMat, CVec, C64};
use crate::operators::COMPUTATIONAL;
use crate::propagator::step_propagator;

/// `T·Ω_max = π(4 + Ω_max/J)/2`: two π pulses and a wait of `π/2J`.
pub fn pi_j_pi_duration(ratio: f64) -> Result<f64> {
    if !(ratio.is_finite() && ratio >= 0.0) {
        return Err(Error::Domain(format!(
            "Omega_max/J must be non-negative, got {ratio}"
        )));
    }
    Ok(PI * (4.0 + ratio) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiJPiResult {
    pub ratio: f64,
    /// T·Ω_max.
    pub duration: f64,
    pub fidelity: f64,
    pub angles: RotationAngles,
}

fn check_internal(model: &GateModel) -> Result<()> {
    if !model.motion.is_empty() {
        return Err(Error::Config(
            "square-pulse protocols run on the internal-only model".into(),
        ));
    }
    let extra = NoiseConfig {
        decay: false,
        detuning_compensation: false,
        ..model.noise
    };
    if !extra.is_noiseless() {
        return Err(Error::Config(
            "square-pulse protocols support decay as the only noise channel".into(),
        ));
    }
    Ok(())
}

/// π pulse, free evolution under `J` for `π/2J`, π pulse; `J` acts
/// throughout. Scored with the Bell-state fidelity at the best rotation.
pub fn simulate_pi_j_pi(model: &GateModel) -> Result<PiJPiResult> {
    check_internal(model)?;
    let omega = model.omega_max;
    if !(omega > 0.0) {
        return Err(Error::Domain("the pi pulses need Omega_max > 0".into()));
    }
    let j = model.exchange_coupling();
    let pulse = step_propagator(&assemble(model, 0.0)?, PI / omega)?;
    let mut free = model.clone();
    free.omega_max = 0.0;
    let wait = step_propagator(&assemble(&free, 0.0)?, PI / (2.0 * j))?;
    let u = &pulse * &wait * &pulse;
    let finals: Vec<CVec> = COMPUTATIONAL
        .iter()
        .map(|&i| u.column(i).into_owned())
        .collect();
    let (angles, fidelity) = optimize_rotation(&finals)?;
    let ratio = model.ratio();
    Ok(PiJPiResult {
        ratio,
        duration: pi_j_pi_duration(ratio)?,
        fidelity,
        angles,
    })
}

/// Population of |10⟩ after a constant drive (φ ≡ 0) of length `T·Ω_max`
/// for every entry of `times`, starting from |01⟩.
pub fn constant_pulse_scan(model: &GateModel, times: &[f64]) -> Result<Vec<f64>> {
    check_internal(model)?;
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain("scan times must be non-negative".into()));
    }
    let h = assemble(model, 0.0)?;
    let from = COMPUTATIONAL[1];
    let to = COMPUTATIONAL[2];
    let omega = model.omega_max;
    if is_hermitian(&h, 1e-14) {
        let (vals, q) = eigh(&h);
        // ψ(t)_to = Σ_k Q[to,k] e^{−iλ_k t} conj(Q[from,k])
        let c: Vec<C64> = (0..h.nrows())
            .map(|k| q[(to, k)] * q[(from, k)].conj())
            .collect();
        Ok(times
            .iter()
            .map(|&t| {
                let s: C64 = c
                    .iter()
                    .zip(vals.iter())
                    .map(|(ck, &l)| ck * C64::from_polar(1.0, -l * t / omega))
                    .sum();
                s.norm_sqr()
            })
            .collect())
    } else {
        times
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    return Ok(0.0);
                }
                let u: CMat = step_propagator(&h, t / omega)?;
                Ok(u[(to, from)].norm_sqr())
            })
            .collect()
    }
}

/// Earliest local maximum of the constant-drive transfer whose height
/// exceeds `threshold`, searched on `(0, horizon]` in units of 1/Ω_max.
pub fn find_magic_time_with(
    model: &GateModel,
    horizon: f64,
    threshold: f64,
) -> Result<Option<f64>> {
    const DT: f64 = 0.01;
    let n = (horizon / DT).ceil() as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * DT).collect();
    let pop = constant_pulse_scan(model, &times)?;
    let f = |t: f64| constant_pulse_scan(model, &[t]).map(|v| v[0]);
    for k in 1..n {
        if pop[k] >= pop[k - 1] && pop[k] >= pop[k + 1] && pop[k] > threshold - 1e-3 {
            // golden-section refinement of the bracketed peak
            let (mut a, mut b) = (times[k - 1], times[k + 1]);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (f(c)?, f(d)?);
            for _ in 0..60 {
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = f(c)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = f(d)?;
                }
            }
            let t = 0.5 * (a + b);
            if f(t)? > threshold {
                return Ok(Some(t));
            }
        }
    }
    Ok(None)
}

/// First complete-transfer ("magic") duration of a constant pulse: the
/// earliest local maximum of the |01⟩ → |10⟩ population above 0.999.
/// `None` when no peak within `50 + 20·J/Ω_max` reaches it.
pub fn find_magic_time(model: &GateModel) -> Result<Option<f64>> {
    let horizon = 50.0 + 20.0 / model.ratio();
    find_magic_time_with(model, horizon, 0.999)
}

/// Both baselines at one ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRow {
    pub ratio: f64,
    pub pi_j_pi_duration: f64,
    pub pi_j_pi_infidelity: Option<f64>,
    /// First complete-transfer duration of a constant pulse, T·Ω_max.
    pub magic_time: Option<f64>,
    pub error: Option<String>,
}

/// πJπ and constant-pulse results over a ratio grid, with the distance
/// re-chosen for every ratio.
pub fn protocol_table(template: &GateModel, ratios: &[f64]) -> Result<Vec<ProtocolRow>> {
    ratios
        .iter()
        .map(|&ratio| {
            let duration = pi_j_pi_duration(ratio)?;
            let run = || -> Result<(f64, Option<f64>)> {
                let r = crate::atomic::range_for_ratio(template.omega_max, ratio, &template.data)?;
                let mut m = template.clone();
                m.geom.r = r;
                let p = simulate_pi_j_pi(&m)?;
                let clean = m.clone().with_noise(NoiseConfig::none());
                Ok((1.0 - p.fidelity, find_magic_time(&clean)?))
            };
            Ok(match run() {
                Ok((inf, magic)) => ProtocolRow {
                    ratio,
                    pi_j_pi_duration: duration,
                    pi_j_pi_infidelity: Some(inf),
                    magic_time: magic,
                    error: None,
                },
                Err(e) => ProtocolRow {
                    ratio,
                    pi_j_pi_duration: duration,
                    pi_j_pi_infidelity: None,
                    magic_time: None,
                    error: Some(e.to_string()),
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::SpeciesTable;
    use crate::units::mhz;

    fn model(ratio: f64) -> GateModel {
        let d = SpeciesTable::bundled().pair_data("Rb87", 100).unwrap();
        GateModel::from_ratio(d, mhz(10.0), ratio).unwrap()
    }

    #[test]
    fn duration_formula() {
        assert!((pi_j_pi_duration(0.0).unwrap() - 2.0 * PI).abs() < 1e-15);
        assert!((pi_j_pi_duration(2.0).unwrap() - 3.0 * PI).abs() < 1e-15);
        assert!(pi_j_pi_duration(-1.0).is_err());
    }

    #[test]
    fn scan_starts_empty_and_matches_propagation() {
        let m = model(0.5);
        let p = constant_pulse_scan(&m, &[0.0, 3.7]).unwrap();
        assert!(p[0].abs() < 1e-28);
        let u = step_propagator(&assemble(&m, 0.0).unwrap(), 3.7 / m.omega_max).unwrap();
        assert!((p[1] - u[(COMPUTATIONAL[2], COMPUTATIONAL[1])].norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn decay_lowers_pi_j_pi_fidelity() {
        let m = model(20.0);
        let clean = simulate_pi_j_pi(&m).unwrap().fidelity;
        let lossy = simulate_pi_j_pi(&m.clone().with_noise(NoiseConfig {
            decay: true,
            ..NoiseConfig::none()
        }))
        .unwrap()
        .fidelity;
        assert!(lossy < clean);
    }

    #[test]
    fn motion_or_vdw_is_rejected() {
        let m = model(2.0).with_noise(NoiseConfig::vdw_only());
        assert!(matches!(simulate_pi_j_pi(&m), Err(Error::Config(_))));
    }
}
