use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::RotationAngles;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseMeta {
    pub species: String,
    pub n: u32,
    #[serde(rename = "R_um")]
    pub r_um: f64,
}

/// Piecewise-constant laser phase with constant amplitude `Ω_max`, plus the
/// final single-qubit rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    /// Ω_max/J the pulse was synthesized for.
    pub ratio: f64,
    #[serde(rename = "omega_max_rad_s")]
    pub omega_max: f64,
    /// Dimensionless duration T·Ω_max.
    #[serde(rename = "duration_T_omega")]
    pub duration: f64,
    /// φ^k in radians, one per step.
    #[serde(rename = "steps")]
    pub phases: Vec<f64>,
    pub rotation: RotationAngles,
    #[serde(default)]
    pub meta: PulseMeta,
}

impl PulseSchedule {
    pub fn new(ratio: f64, omega_max: f64, duration: f64, phases: Vec<f64>) -> Self {
        Self {
            ratio,
            omega_max,
            duration,
            phases,
            rotation: RotationAngles::default(),
            meta: PulseMeta::default(),
        }
    }

    pub fn constant(ratio: f64, omega_max: f64, duration: f64, steps: usize, phase: f64) -> Self {
        Self::new(ratio, omega_max, duration, vec![phase; steps])
    }

    pub fn steps(&self) -> usize {
        self.phases.len()
    }

    /// Physical step length for a drive of strength `omega_max` (rad/s).
    pub fn dt(&self, omega_max: f64) -> f64 {
        self.duration / omega_max / self.phases.len() as f64
    }

    /// Duration in seconds at the pulse's own Ω_max.
    pub fn duration_seconds(&self) -> f64 {
        self.duration / self.omega_max
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::Domain("pulse needs at least one step".into()));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::Domain(format!(
                "pulse duration T*Omega_max must be positive, got {}",
                self.duration
            )));
        }
        if !(self.ratio.is_finite() && self.ratio > 0.0) {
            return Err(Error::Domain(format!(
                "pulse ratio Omega_max/J must be positive, got {}",
                self.ratio
            )));
        }
        if !(self.omega_max.is_finite() && self.omega_max > 0.0) {
            return Err(Error::Domain(format!(
                "pulse Omega_max must be positive, got {} rad/s",
                self.omega_max
            )));
        }
        let r = self.rotation;
        if !self
            .phases
            .iter()
            .chain(&[r.theta, r.varphi, r.lambda])
            .all(|v| v.is_finite())
        {
            return Err(Error::Domain(
                "pulse contains non-finite phases or angles".into(),
            ));
        }
        Ok(())
    }

    /// Same phase profile sampled onto `steps` steps of a pulse of length
    /// `duration`, read off at the relative midpoint of every new step.
    pub fn resampled(&self, duration: f64, steps: usize) -> Self {
        let n = self.phases.len();
        let phases = (0..steps)
            .map(|k| {
                let t = (k as f64 + 0.5) / steps as f64;
                self.phases[((t * n as f64) as usize).min(n - 1)]
            })
            .collect();
        Self {
            duration,
            phases,
            ..self.clone()
        }
    }

    /// Optimizer parameter vector `[φ^0 … φ^{N−1}, θ, φ, λ]`.
    pub fn to_params(&self) -> Vec<f64> {
        let mut x = self.phases.clone();
        x.extend(self.rotation.to_array());
        x
    }

    pub fn with_params(&self, x: &[f64]) -> Self {
        let n = x.len() - 3;
        Self {
            phases: x[..n].to_vec(),
            rotation: RotationAngles::from_slice(&x[n..]),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::parse("pulse", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| Error::parse("pulse", e))?;
        p.validate().map_err(|e| Error::parse("pulse", e))?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PulseSchedule {
        let mut p = PulseSchedule::new(
            2.1,
            62_831_853.071_795_86,
            11.95,
            vec![0.1, -std::f64::consts::PI, 1e-300, 2.0 / 3.0],
        );
        p.rotation = RotationAngles::new(0.1 + 0.2, -1.0 / 7.0, 5e-17);
        p.meta = PulseMeta {
            species: "Rb87".into(),
            n: 100,
            r_um: 19.753,
        };
        p
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let p = sample();
        let back = PulseSchedule::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
        for (a, b) in back.phases.iter().zip(&p.phases) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn file_names_follow_the_documented_layout() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        for key in [
            "ratio",
            "omega_max_rad_s",
            "duration_T_omega",
            "steps",
            "rotation",
            "meta",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["rotation"].get("varphi").is_some());
        assert!(v["meta"].get("R_um").is_some());
    }

    #[test]
    fn invalid_pulses_are_parse_errors() {
        assert!(matches!(
            PulseSchedule::from_json("{"),
            Err(Error::Parse { .. })
        ));
        let mut p = sample();
        p.phases.clear();
        let text = serde_json::to_string(&p).unwrap();
        assert!(matches!(
            PulseSchedule::from_json(&text),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn resampling_keeps_profile() {
        let p = PulseSchedule::new(1.0, 1.0, 10.0, vec![1.0, 2.0]);
        let r = p.resampled(12.0, 4);
        assert_eq!(r.phases, vec![1.0, 1.0, 2.0, 2.0]);
        assert_eq!(r.duration, 12.0);
        assert_eq!(p.resampled(10.0, 2), p);
    }

    #[test]
    fn params_round_trip() {
        let p = sample();
        assert_eq!(p.with_params(&p.to_params()), p);
        assert!((p.dt(p.omega_max) * 4.0 * p.omega_max - 11.95).abs() < 1e-12);
    }
}
