//! GRAPE over piecewise-constant laser phases with BFGS, the time-optimal
//! duration search and vdW-robust re-optimization.

mod cost;
mod pulse;
mod search;

pub use cost::{cost, gradient, GrapeProblem};
pub use pulse::{PulseMeta, PulseSchedule};
pub use search::{
    find_time_optimal, initial_guess, minimize, robustify_vdw, steps_for, OptimizationReport,
    RobustResult, ScanPoint, TimeOptimalResult,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    /// BFGS iterations per start.
    pub max_iterations: usize,
    pub gradient_mode: GradientMode,
    pub fd_epsilon: f64,
    /// A start stops once its cost reaches this value.
    pub tolerance: f64,
    /// Independent starts per duration.
    pub restarts: usize,
    /// Starts per duration during the coarse part of the duration scan.
    pub coarse_restarts: usize,
    pub seed: u64,
    /// Steps per unit of T·Ω_max.
    pub steps_per_unit: f64,
    /// Upper bound on the exchange phase JΔt accumulated in one step; only
    /// binding for small Ω_max/J.
    pub max_exchange_phase: f64,
    /// A duration counts as feasible below this cost.
    pub eps_zero: f64,
    /// Target cost of the vdW-robust pulse.
    pub eps_robust: f64,
    /// Resolution of the duration search, in units of T·Ω_max.
    pub t_resolution: f64,
    pub t_coarse_step: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Final cost to polish feasible pulses to.
    pub polish_tolerance: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 3000,
            gradient_mode: GradientMode::Analytic,
            fd_epsilon: 1e-6,
            tolerance: 1e-6,
            restarts: 20,
            coarse_restarts: 5,
            seed: 0,
            steps_per_unit: 10.0,
            max_exchange_phase: 0.3,
            eps_zero: 1e-5,
            eps_robust: 2e-4,
            t_resolution: 0.05,
            t_coarse_step: 1.0,
            t_min: 7.0,
            t_max: 30.0,
            polish_tolerance: 1e-8,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            ("fd_epsilon", self.fd_epsilon),
            ("tolerance", self.tolerance),
            ("steps_per_unit", self.steps_per_unit),
            ("max_exchange_phase", self.max_exchange_phase),
            ("eps_zero", self.eps_zero),
            ("eps_robust", self.eps_robust),
            ("t_resolution", self.t_resolution),
            ("t_coarse_step", self.t_coarse_step),
            ("t_min", self.t_min),
            ("t_max", self.t_max),
            ("polish_tolerance", self.polish_tolerance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::Config(format!(
                    "optimizer option {name} must be positive, got {v}"
                )));
            }
        }
        if self.max_iterations == 0 || self.restarts == 0 || self.coarse_restarts == 0 {
            return Err(crate::Error::Config(
                "max_iterations, restarts and coarse_restarts must be at least 1".into(),
            ));
        }
        if self.t_max < self.t_min {
            return Err(crate::Error::Config(format!(
                "t_max ({}) is below t_min ({})",
                self.t_max, self.t_min
            )));
        }
        Ok(())
    }
}
