//! Checks shared by the property suite and the acceptance target. Every
//! function returns the measured discrepancy so callers pick the tolerance.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rydgate::atomic::{Axis, LaserAxis, SpeciesTable};
use rydgate::fidelity::{
    bell_fidelity, boltzmann_weights, iswap_target_state, uhlmann_fidelity, RotationAngles,
};
use rydgate::grape::{cost, gradient, GradientMode, OptimizerOptions, PulseSchedule};
use rydgate::hamiltonian::{assemble, drive_term, GateModel, NoiseConfig};
use rydgate::linalg::{eigh, expm_hermitian, matmul, rel_diff, CMat, CVec, C64};
use rydgate::operators::{
    atom_op, embed_motional, lift, on_atom, partial_trace_motional, position_local, Atom, Level,
    ProductSpace, INTERNAL_DIM,
};
use rydgate::propagator::{
    basis_state, computational_inputs, evolve, internal_finals, GaugePropagator,
};
use rydgate::units::mhz;

pub fn model(ratio: f64) -> GateModel {
    let data = SpeciesTable::bundled().pair_data("Rb87", 100).unwrap();
    GateModel::from_ratio(data, mhz(10.0), ratio).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_pulse(model: &GateModel, duration: f64, steps: usize, seed: u64) -> PulseSchedule {
    let mut r = rng(seed);
    let mut p = PulseSchedule::new(
        model.ratio(),
        model.omega_max,
        duration,
        (0..steps).map(|_| r.gen_range(-3.2..3.2)).collect(),
    );
    p.rotation = RotationAngles::new(
        r.gen_range(-3.0..3.0),
        r.gen_range(-3.0..3.0),
        r.gen_range(-3.0..3.0),
    );
    p
}

/// Model with both atoms' modes along `axes`, each truncated at `cutoff`.
pub fn with_modes(model: &GateModel, axes: &[Axis], cutoff: usize) -> GateModel {
    let motion = model.motion_for_axes(axes, |_| cutoff);
    model.clone().with_motion(motion)
}

/// `‖P†P − I‖_F` of one step propagator.
pub fn unitarity_error(model: &GateModel, dt: f64, phase: f64) -> f64 {
    let p = GaugePropagator::new(model, dt).unwrap().step(phase);
    let n = p.nrows();
    rel_diff(&(p.adjoint() * &p), &CMat::identity(n, n))
}

/// Largest increase of any input's norm between consecutive steps.
pub fn worst_norm_increase(model: &GateModel, pulse: &PulseSchedule) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    let mut prev = [1.0; 4];
    for k in 1..=pulse.steps() {
        let mut partial = pulse.clone();
        partial.phases.truncate(k);
        partial.duration = pulse.duration * k as f64 / pulse.steps() as f64;
        let r = evolve(model, &partial, &computational_inputs(model)).unwrap();
        for (p, &s) in prev.iter_mut().zip(&r.survival_norms) {
            worst = worst.max(s - *p);
            *p = s;
        }
    }
    worst
}

fn random_state(dim: usize, r: &mut ChaCha8Rng) -> CVec {
    let v = CVec::from_fn(dim, |_, _| {
        C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
    });
    let n = v.norm();
    v / C64::new(n, 0.0)
}

fn random_density(dim: usize, rank: usize, r: &mut ChaCha8Rng) -> CMat {
    let mut rho = CMat::zeros(dim, dim);
    let mut total = 0.0;
    for _ in 0..rank {
        let w: f64 = r.gen_range(0.05..1.0);
        let v = random_state(dim, r);
        rho += &v * v.adjoint() * C64::new(w, 0.0);
        total += w;
    }
    rho / C64::new(total, 0.0)
}

/// (|tr ρ_int − tr ρ|, smallest eigenvalue of ρ_int) for a random density
/// matrix on the internal space times `modes` modes of cutoff `cutoff`.
pub fn partial_trace_check(modes: usize, cutoff: usize, rank: usize, seed: u64) -> (f64, f64) {
    let axes = [Axis::Z, Axis::X, Axis::Y];
    let axes: Vec<Axis> = axes.into_iter().take(modes.div_ceil(2)).collect();
    let m = with_modes(&model(2.1), &axes, cutoff);
    let space = ProductSpace::new(&m.motion);
    let mut r = rng(seed);
    let rho = random_density(space.dim(), rank, &mut r);
    let red = partial_trace_motional(&rho, &space).unwrap();
    let tr: C64 = (0..space.dim()).map(|i| rho[(i, i)]).sum();
    let tr_red: C64 = (0..INTERNAL_DIM).map(|i| red[(i, i)]).sum();
    let (vals, _) = eigh(&red);
    ((tr - tr_red).norm(), vals.min())
}

/// |F_Uhlmann(|ψ⟩⟨ψ|, σ) − ⟨ψ|σ|ψ⟩| for random ψ and σ of the given rank.
pub fn uhlmann_pure_error(dim: usize, rank: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let psi = random_state(dim, &mut r);
    let sigma = random_density(dim, rank, &mut r);
    let rho = &psi * psi.adjoint();
    let f = uhlmann_fidelity(&rho, &sigma).unwrap();
    let overlap = (psi.adjoint() * &sigma * &psi)[(0, 0)].re;
    (f - overlap).abs()
}

/// Relative distance between the analytic and central-difference gradients.
pub fn gradient_error(model: &GateModel, pulse: &PulseSchedule) -> f64 {
    let a = gradient(pulse, model, &OptimizerOptions::default()).unwrap();
    let fd = gradient(
        pulse,
        model,
        &OptimizerOptions {
            gradient_mode: GradientMode::FiniteDifference,
            ..OptimizerOptions::default()
        },
    )
    .unwrap();
    let diff: f64 = a
        .iter()
        .zip(&fd)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = fd.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}

/// Drive with the photon kick written as a displacement `e^{iη(a+a†)}` on
/// every de-excitation `|j⟩⟨r_j|` along the laser axis, at phase 0.
fn displaced_drive(m: &GateModel) -> CMat {
    let axis = m.geom.laser_axis.axis();
    let mut h = CMat::zeros(m.dim(), m.dim());
    let half = C64::new(0.5 * m.omega_max, 0.0);
    for atom in Atom::BOTH {
        let k = m.motion.require(atom, axis).unwrap();
        let mode = m.motion.modes[k];
        let x = embed_motional(
            &position_local(mode.cutoff, m.data.mass, mode.omega),
            &m.motion,
            k,
        )
        .unwrap();
        for j in 0..2 {
            let kj = 2.0 * std::f64::consts::PI
                / m.data.wavelength(if j == 0 {
                    rydgate::atomic::Laser::Zero
                } else {
                    rydgate::atomic::Laser::One
                });
            // exp(−i(−k x)·1) = e^{ikx}
            let kick = expm_hermitian(&(&x * C64::new(-kj, 0.0)), 1.0);
            let g = if j == 0 { Level::Zero } else { Level::One };
            let down = lift(&on_atom(&atom_op(g, Level::rydberg(j)), atom), &kick);
            h += (&down + down.adjoint()) * half;
        }
    }
    h
}

/// Largest difference of internal-level populations between the frame with
/// recoil detuning and momentum coupling and the frame where the kick sits
/// in the drive, for both atoms' modes along the laser axis at `cutoff`.
pub fn recoil_frame_error(laser: LaserAxis, cutoff: usize, pulse: &PulseSchedule) -> f64 {
    let mut base = model(pulse.ratio);
    base.geom.laser_axis = laser;
    let axis = laser.axis();
    let transformed = with_modes(&base, &[axis], cutoff).with_noise(NoiseConfig {
        recoil_detuning: true,
        recoil_coupling: true,
        ..NoiseConfig::none()
    });
    let lab = with_modes(&base, &[axis], cutoff);
    let h0 = assemble(&lab, 0.0).unwrap() - drive_term(&lab, 0.0) + displaced_drive(&lab);
    let dt = pulse.dt(lab.omega_max);
    let e = expm_hermitian(&h0, dt);
    let number = lab.rydberg_number();
    let inputs = computational_inputs(&lab);
    let mut psi = CMat::zeros(lab.dim(), 4);
    for (k, input) in inputs.iter().enumerate() {
        psi.set_column(k, &basis_state(&lab, input).unwrap());
    }
    for &phi in &pulse.phases {
        let d: Vec<C64> = number
            .iter()
            .map(|&n| C64::from_polar(1.0, -phi * n))
            .collect();
        for (a, mut row) in psi.row_iter_mut().enumerate() {
            row *= d[a].conj();
        }
        psi = matmul(&e, &psi);
        for (a, mut row) in psi.row_iter_mut().enumerate() {
            row *= d[a];
        }
    }
    let r = evolve(&transformed, pulse, &inputs).unwrap();
    let md = lab.motion.dim();
    let mut worst: f64 = 0.0;
    for q in 0..4 {
        for i in 0..INTERNAL_DIM {
            let pop =
                |v: &dyn Fn(usize) -> C64| (0..md).map(|mu| v(i * md + mu).norm_sqr()).sum::<f64>();
            let a = pop(&|k| psi[(k, q)]);
            let b = pop(&|k| r.final_states[q][k]);
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

pub fn boltzmann_error(omegas: &[f64], t_temp: f64, cutoffs: &[usize]) -> f64 {
    let w = boltzmann_weights(omegas, t_temp, cutoffs).unwrap();
    let bad = w.iter().any(|&v| !(0.0..=1.0).contains(&v));
    if bad {
        return f64::INFINITY;
    }
    (w.iter().sum::<f64>() - 1.0).abs()
}

/// `1 − F` of the exact target outputs at the given rotation.
pub fn exact_iswap_infidelity(angles: RotationAngles) -> f64 {
    let finals: Vec<CVec> = (0..4).map(|q| iswap_target_state(angles, q)).collect();
    1.0 - bell_fidelity(&finals, angles).unwrap()
}

/// Change of F when every final state picks up the same phase.
pub fn global_phase_change(model: &GateModel, pulse: &PulseSchedule, phase: f64) -> f64 {
    let finals = internal_finals(model, pulse).unwrap();
    let f = bell_fidelity(&finals, pulse.rotation).unwrap();
    let c = C64::from_polar(1.0, phase);
    let shifted: Vec<CVec> = finals.iter().map(|v| v * c).collect();
    (bell_fidelity(&shifted, pulse.rotation).unwrap() - f).abs()
}

/// Cost of a pulse against its model, for convenience.
pub fn infidelity(model: &GateModel, pulse: &PulseSchedule) -> f64 {
    cost(pulse, model).unwrap()
}
