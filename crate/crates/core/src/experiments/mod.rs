//! Protocol baselines, error budgets, closed-form noise estimates and
//! parameter sweeps built on the simulator.

mod analytic;
mod budget;
mod protocols;
mod sweep;

pub use analytic::{
    coupling_strengths, recapture_displacement, recoil_coupling, relative_variance,
    CouplingStrengths, Recapture,
};
pub use budget::{
    error_budget, noisy_infidelity, BudgetOptions, BudgetReport, BudgetRow, Channel,
    NoisyEvaluation, PulseKind,
};
pub use protocols::{
    constant_pulse_scan, find_magic_time, find_magic_time_with, pi_j_pi_duration, protocol_table,
    simulate_pi_j_pi, PiJPiResult, ProtocolRow,
};
pub use sweep::{sweep, PulseSource, SweepContext, SweepRow, SweepSpec, SweepVariable};
