use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GrapeProblem, OptimizerOptions, PulseSchedule};
use crate::error::{Error, Result};
use crate::fidelity::{optimize_rotation_projected, RotationAngles};
use crate::hamiltonian::GateModel;
use crate::linalg::ZERO;
use crate::operators::COMPUTATIONAL;
use crate::optim::{bfgs, BfgsOptions, BfgsResult, BfgsStatus};

/// Starts are run in fixed-size parallel batches and the search stops after
/// the first batch that reaches the target, so results do not depend on the
/// number of worker threads.
const BATCH: usize = 4;
const STALL_WINDOW: usize = 200;
const STALL_REL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    /// Final 1 − F.
    pub cost: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub pulse: PulseSchedule,
    /// Cost at every accepted iterate of the winning start.
    pub history: Vec<f64>,
    pub status: BfgsStatus,
    pub best_start: usize,
    pub starts_run: usize,
}

impl OptimizationReport {
    pub fn line_search_failed(&self) -> bool {
        self.status == BfgsStatus::LineSearchFailed
    }
}

/// One point of a duration scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub duration: f64,
    pub steps: usize,
    pub cost: f64,
    pub starts_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeOptimalResult {
    /// Shortest feasible T·Ω_max found.
    pub duration: f64,
    pub report: OptimizationReport,
    pub scan: Vec<ScanPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustResult {
    pub duration: f64,
    pub report: OptimizationReport,
    pub attempts: Vec<ScanPoint>,
}

/// Step count for a pulse of length `duration` (units of 1/Ω_max):
/// `steps_per_unit` per unit, raised when needed so that the exchange phase
/// `JΔt` per step stays below `max_exchange_phase`.
pub fn steps_for(duration: f64, ratio: f64, opts: &OptimizerOptions) -> usize {
    let base = (duration * opts.steps_per_unit).round();
    let exchange = (duration / (ratio * opts.max_exchange_phase)).ceil();
    (base.max(exchange) as usize).max(1)
}

fn start_rng(seed: u64, index: usize, salt: u64) -> ChaCha8Rng {
    let mix = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((index as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(salt);
    ChaCha8Rng::seed_from_u64(mix)
}

/// Smooth random profile `Σ_{k≤5} c_k sin(πkt/T) + d_k cos(πkt/T)` rescaled
/// to peak magnitude `amplitude`.
fn smooth_random(steps: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let c: Vec<(f64, f64)> = (0..5)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let raw: Vec<f64> = (0..steps)
        .map(|j| {
            let t = (j as f64 + 0.5) / steps as f64;
            c.iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let w = PI * (k + 1) as f64 * t;
                    a * w.sin() + b * w.cos()
                })
                .sum()
        })
        .collect();
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    raw.iter().map(|v| v * amplitude / peak).collect()
}

fn best_rotation(problem: &GrapeProblem, phases: &[f64]) -> RotationAngles {
    let fin = problem.finals(phases);
    let mut p = [[ZERO; 4]; 4];
    for q in 0..4 {
        for c in 0..4 {
            p[q][c] = fin[q][COMPUTATIONAL[c]];
        }
    }
    optimize_rotation_projected(&p).0
}

fn with_rotation(problem: &GrapeProblem, phases: Vec<f64>) -> Vec<f64> {
    let r = best_rotation(problem, &phases);
    let mut x = phases;
    x.extend(r.to_array());
    x
}

/// Random smooth phase pulse with peak |φ| ≤ π and its best final rotation.
pub fn initial_guess(
    model: &GateModel,
    duration: f64,
    steps: usize,
    seed: u64,
    index: usize,
) -> Result<PulseSchedule> {
    let problem = GrapeProblem::new(model, duration, steps)?;
    let mut rng = start_rng(seed, index, 0);
    let amp = PI * rng.gen_range(0.3..1.0);
    let x = with_rotation(&problem, smooth_random(steps, amp, &mut rng));
    Ok(PulseSchedule::new(model.ratio(), model.omega_max, duration, Vec::new()).with_params(&x))
}

fn bfgs_options(opts: &OptimizerOptions, target: f64) -> BfgsOptions {
    BfgsOptions {
        max_iterations: opts.max_iterations,
        f_target: target,
        g_tol: 1e-12,
        stall_window: STALL_WINDOW,
        stall_rel: STALL_REL,
    }
}

fn run_start(
    problem: &GrapeProblem,
    x0: &[f64],
    opts: &OptimizerOptions,
    target: f64,
) -> BfgsResult {
    let mode = opts.gradient_mode;
    let eps = opts.fd_epsilon;
    bfgs(
        |x, g| problem.evaluate(x, g, mode, eps),
        x0,
        &bfgs_options(opts, target),
    )
}

/// Run up to `count` starts produced by `start(i)`; best result kept, ties
/// broken by start index.
fn multi_start<F>(
    problem: &GrapeProblem,
    template: &PulseSchedule,
    count: usize,
    opts: &OptimizerOptions,
    target: f64,
    start: F,
) -> Result<OptimizationReport>
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    let mut best: Option<(usize, BfgsResult)> = None;
    let mut run = 0;
    while run < count {
        let end = (run + BATCH).min(count);
        let results: Vec<(usize, BfgsResult)> = (run..end)
            .into_par_iter()
            .map(|i| (i, run_start(problem, &start(i), opts, target)))
            .collect();
        for (i, r) in results {
            if !r.f.is_finite() {
                continue;
            }
            let better = match &best {
                None => true,
                Some((_, b)) => r.f < b.f,
            };
            if better {
                best = Some((i, r));
            }
        }
        run = end;
        if best.as_ref().is_some_and(|(_, b)| b.f <= target) {
            break;
        }
    }
    let (index, r) = best
        .ok_or_else(|| Error::Numeric("every optimizer start produced a non-finite cost".into()))?;
    log::debug!(
        "T*Omega = {:.3}: best start {index} of {run}, cost {:.3e} after {} iterations ({:?})",
        template.duration,
        r.f,
        r.iterations,
        r.status
    );
    Ok(OptimizationReport {
        cost: r.f,
        iterations: r.iterations,
        evaluations: r.evaluations,
        pulse: template.with_params(&r.x),
        history: r.history,
        status: r.status,
        best_start: index,
        starts_run: run,
    })
}

/// Quasi-Newton descent from `pulse0` plus `restarts − 1` random smooth
/// starts; the best result is kept.
pub fn minimize(
    pulse0: &PulseSchedule,
    model: &GateModel,
    opts: &OptimizerOptions,
) -> Result<OptimizationReport> {
    opts.validate()?;
    pulse0.validate()?;
    let problem = GrapeProblem::new(model, pulse0.duration, pulse0.steps())?;
    let x0 = pulse0.to_params();
    let steps = pulse0.steps();
    multi_start(&problem, pulse0, opts.restarts, opts, opts.tolerance, |i| {
        if i == 0 {
            x0.clone()
        } else {
            let mut rng = start_rng(opts.seed, i, 0);
            let amp = PI * rng.gen_range(0.3..1.0);
            with_rotation(&problem, smooth_random(steps, amp, &mut rng))
        }
    })
}

/// Optimize at one duration: random starts, optionally preceded by a warm
/// start resampled from an earlier pulse.
fn optimize_at(
    model: &GateModel,
    duration: f64,
    starts: usize,
    warm: Option<&PulseSchedule>,
    opts: &OptimizerOptions,
    target: f64,
) -> Result<OptimizationReport> {
    let steps = steps_for(duration, model.ratio(), opts);
    let problem = GrapeProblem::new(model, duration, steps)?;
    let template = PulseSchedule::new(model.ratio(), model.omega_max, duration, vec![0.0; steps]);
    let warm_x = warm.map(|w| w.resampled(duration, steps).to_params());
    let salt = (duration / opts.t_resolution).round() as u64;
    multi_start(&problem, &template, starts, opts, target, |i| {
        match (&warm_x, i) {
            (Some(x), 0) => x.clone(),
            _ => {
                let mut rng = start_rng(opts.seed, i, salt);
                let amp = PI * rng.gen_range(0.3..1.0);
                with_rotation(&problem, smooth_random(steps, amp, &mut rng))
            }
        }
    })
}

/// Nearest multiple of `res`, cleaned of binary rounding noise.
fn snap(t: f64, res: f64) -> f64 {
    ((t / res).round() * res * 1e9).round() / 1e9
}

/// Shortest duration whose optimized cost falls below `eps_zero`: a coarse
/// upward scan from `t_min`, then bisection down to `t_resolution`.
pub fn find_time_optimal(
    ratio: f64,
    model: &GateModel,
    opts: &OptimizerOptions,
) -> Result<TimeOptimalResult> {
    opts.validate()?;
    if !(ratio > 0.0 && ratio <= 10.0) {
        return Err(Error::Domain(format!(
            "Omega_max/J must lie in (0, 10], got {ratio}"
        )));
    }
    if ((model.ratio() - ratio) / ratio).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "model has Omega_max/J = {}, requested {ratio}",
            model.ratio()
        )));
    }
    let target = opts.tolerance.min(opts.eps_zero);
    let mut scan = Vec::new();
    let record = |scan: &mut Vec<ScanPoint>, t: f64, r: &OptimizationReport| {
        log::info!("ratio {ratio}: T*Omega = {t:.2}, cost {:.3e}", r.cost);
        scan.push(ScanPoint {
            duration: t,
            steps: r.pulse.steps(),
            cost: r.cost,
            starts_run: r.starts_run,
        });
    };

    let mut lo: Option<f64> = None;
    let mut hi: Option<(f64, OptimizationReport)> = None;
    let mut warm: Option<PulseSchedule> = None;
    let mut t = opts.t_min;
    while t <= opts.t_max + 1e-9 {
        let r = optimize_at(model, t, opts.coarse_restarts, warm.as_ref(), opts, target)?;
        record(&mut scan, t, &r);
        if r.cost < opts.eps_zero {
            hi = Some((t, r));
            break;
        }
        lo = Some(t);
        warm = Some(r.pulse);
        t = snap(t + opts.t_coarse_step, opts.t_resolution);
    }
    let Some(mut hi) = hi else {
        let best = scan.iter().map(|p| p.cost).fold(f64::INFINITY, f64::min);
        return Err(Error::Optimizer(format!(
            "no duration up to T*Omega = {} reached cost {:.1e} (best {best:.3e})",
            opts.t_max, opts.eps_zero
        )));
    };
    // The coarse scan used few starts, so its infeasible points are only
    // tentative: confirm the lower bracket with the full start count,
    // walking down while the warm-started search still succeeds.
    let mut l = lo.unwrap_or_else(|| snap(hi.0 - opts.t_coarse_step, opts.t_resolution));
    let lo = loop {
        if l < opts.t_resolution {
            break 0.0;
        }
        let r = optimize_at(model, l, opts.restarts, Some(&hi.1.pulse), opts, target)?;
        record(&mut scan, l, &r);
        if r.cost < opts.eps_zero {
            hi = (l, r);
            l = snap(l - opts.t_coarse_step, opts.t_resolution);
        } else {
            break l;
        }
    };
    let mut lo = lo;
    while hi.0 - lo > opts.t_resolution * 1.001 {
        let mut mid = snap(0.5 * (lo + hi.0), opts.t_resolution);
        if mid >= hi.0 - 1e-9 {
            mid = snap(hi.0 - opts.t_resolution, opts.t_resolution);
        }
        if mid <= lo + 1e-9 {
            mid = snap(lo + opts.t_resolution, opts.t_resolution);
        }
        let r = optimize_at(model, mid, opts.restarts, Some(&hi.1.pulse), opts, target)?;
        record(&mut scan, mid, &r);
        if r.cost < opts.eps_zero {
            hi = (mid, r);
        } else {
            lo = mid;
        }
    }
    let (t_star, mut report) = hi;
    if report.cost > opts.polish_tolerance {
        let polish = OptimizerOptions {
            tolerance: opts.polish_tolerance,
            restarts: 1,
            ..opts.clone()
        };
        let p = minimize(&report.pulse, model, &polish)?;
        if p.cost < report.cost {
            report = OptimizationReport {
                starts_run: report.starts_run,
                best_start: report.best_start,
                ..p
            };
        }
    }
    report.pulse.duration = t_star;
    scan.sort_by(|a, b| a.duration.total_cmp(&b.duration));
    Ok(TimeOptimalResult {
        duration: t_star,
        report,
        scan,
    })
}

/// Re-optimize a time-optimal pulse with vdW shifts in the cost, lengthening
/// it in steps of `t_resolution` until the cost reaches `eps_robust`.
pub fn robustify_vdw(
    pulse_to: &PulseSchedule,
    model: &GateModel,
    opts: &OptimizerOptions,
) -> Result<RobustResult> {
    opts.validate()?;
    pulse_to.validate()?;
    if !model.noise.vdw {
        return Err(Error::Config(
            "robustify_vdw needs a model with vdW shifts enabled".into(),
        ));
    }
    let mut attempts = Vec::new();
    let mut warm = pulse_to.clone();
    let mut t = pulse_to.duration;
    let mut k = 0u64;
    while t <= opts.t_max + 1e-9 {
        let steps = steps_for(t, model.ratio(), opts);
        let problem = GrapeProblem::new(model, t, steps)?;
        let template = PulseSchedule::new(model.ratio(), model.omega_max, t, vec![0.0; steps]);
        let base = warm.resampled(t, steps).to_params();
        let r = multi_start(
            &problem,
            &template,
            opts.restarts,
            opts,
            opts.eps_robust,
            |i| {
                if i == 0 {
                    return base.clone();
                }
                // perturbations of growing size around the warm start
                let mut rng = start_rng(opts.seed, i, 0x5eed_0000 + k);
                let amp = 0.5 * PI * i as f64 / opts.restarts as f64;
                let kick = smooth_random(steps, amp, &mut rng);
                let phases: Vec<f64> = base[..steps]
                    .iter()
                    .zip(&kick)
                    .map(|(a, b)| a + b)
                    .collect();
                with_rotation(&problem, phases)
            },
        )?;
        log::info!("robust search: T*Omega = {t:.2}, cost {:.3e}", r.cost);
        attempts.push(ScanPoint {
            duration: t,
            steps,
            cost: r.cost,
            starts_run: r.starts_run,
        });
        if r.cost <= opts.eps_robust {
            return Ok(RobustResult {
                duration: t,
                report: r,
                attempts,
            });
        }
        if r.cost < 1.0 {
            warm = r.pulse;
        }
        t = snap(t + opts.t_resolution, opts.t_resolution);
        k += 1;
    }
    Err(Error::Optimizer(format!(
        "no vdW-robust pulse with cost <= {:.1e} up to T*Omega = {}",
        opts.eps_robust, opts.t_max
    )))
}
