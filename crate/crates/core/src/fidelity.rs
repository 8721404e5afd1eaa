//! Bell-state fidelity with a free final single-qubit rotation, the
//! thermal mixed-state fidelity, and their building blocks.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grape::PulseSchedule;
use crate::hamiltonian::GateModel;
use crate::linalg::{eigh, matmul, CMat, CVec, C64, I, ONE, ZERO};
use crate::operators::{COMPUTATIONAL, INTERNAL_DIM};
use crate::optim::{bfgs, numeric_gradient, BfgsOptions};
use crate::propagator::{evolve_columns, GaugePropagator};
use crate::units::{HBAR, KB};

pub type Mat2 = Matrix2<C64>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RotationAngles {
    pub theta: f64,
    pub varphi: f64,
    pub lambda: f64,
}

impl RotationAngles {
    pub fn new(theta: f64, varphi: f64, lambda: f64) -> Self {
        Self {
            theta,
            varphi,
            lambda,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.theta, self.varphi, self.lambda]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self::new(x[0], x[1], x[2])
    }
}

/// `e^{i(φ+λ)/2} R_z(φ) R_y(θ) R_z(λ)`.
pub fn su2_rotation(a: RotationAngles) -> Mat2 {
    let (s, c) = (0.5 * a.theta).sin_cos();
    let el = C64::from_polar(1.0, a.lambda);
    let ep = C64::from_polar(1.0, a.varphi);
    Mat2::new(ONE * c, -el * s, ep * s, ep * el * c)
}

/// Partial derivatives of [`su2_rotation`] with respect to (θ, φ, λ).
pub fn su2_rotation_grad(a: RotationAngles) -> [Mat2; 3] {
    let (s, c) = (0.5 * a.theta).sin_cos();
    let el = C64::from_polar(1.0, a.lambda);
    let ep = C64::from_polar(1.0, a.varphi);
    [
        Mat2::new(
            ONE * (-0.5 * s),
            -el * (0.5 * c),
            ep * (0.5 * c),
            ep * el * (-0.5 * s),
        ),
        Mat2::new(ZERO, ZERO, I * ep * s, I * ep * el * c),
        Mat2::new(ZERO, -I * el * s, ZERO, I * ep * el * c),
    ]
}

/// Amplitudes of `U_iSWAP|q⟩` on the computational basis (00, 01, 10, 11).
fn iswap_column(q: usize) -> [C64; 4] {
    let mut v = [ZERO; 4];
    match q {
        0 => v[0] = ONE,
        1 => v[2] = I,
        2 => v[1] = I,
        _ => v[3] = ONE,
    }
    v
}

/// `(ra ⊗ rb) U_iSWAP |q⟩` restricted to the computational basis.
fn targets_with(ra: &Mat2, rb: &Mat2) -> [[C64; 4]; 4] {
    let mut out = [[ZERO; 4]; 4];
    for (q, t) in out.iter_mut().enumerate() {
        let u = iswap_column(q);
        for (c, tc) in t.iter_mut().enumerate() {
            let (a, b) = (c / 2, c % 2);
            let mut s = ZERO;
            for (k, &uk) in u.iter().enumerate() {
                if uk != ZERO {
                    s += ra[(a, k / 2)] * rb[(b, k % 2)] * uk;
                }
            }
            *tc = s;
        }
    }
    out
}

/// Target states `τ_q = (R⊗R) U_iSWAP |q⟩` (computational components).
pub fn iswap_targets(a: RotationAngles) -> [[C64; 4]; 4] {
    let r = su2_rotation(a);
    targets_with(&r, &r)
}

/// Derivatives of the targets with respect to (θ, φ, λ).
pub fn iswap_target_grads(a: RotationAngles) -> [[[C64; 4]; 4]; 3] {
    let r = su2_rotation(a);
    let dr = su2_rotation_grad(a);
    let mut out = [[[ZERO; 4]; 4]; 3];
    for k in 0..3 {
        let left = targets_with(&dr[k], &r);
        let right = targets_with(&r, &dr[k]);
        for q in 0..4 {
            for c in 0..4 {
                out[k][q][c] = left[q][c] + right[q][c];
            }
        }
    }
    out
}

/// Target `τ_q` as a 16-dimensional internal state.
pub fn iswap_target_state(a: RotationAngles, q: usize) -> CVec {
    let t = iswap_targets(a);
    let mut v = CVec::zeros(INTERNAL_DIM);
    for (c, &idx) in COMPUTATIONAL.iter().enumerate() {
        v[idx] = t[q][c];
    }
    v
}

/// Computational-basis projections `P[q][c] = ⟨c|ψ_q⟩` of four final states.
pub fn computational_projections(finals: &[CVec]) -> Result<[[C64; 4]; 4]> {
    if finals.len() != 4 {
        return Err(Error::Dimension(format!(
            "need 4 final states, got {}",
            finals.len()
        )));
    }
    let mut p = [[ZERO; 4]; 4];
    for (q, psi) in finals.iter().enumerate() {
        if psi.len() != INTERNAL_DIM {
            return Err(Error::Dimension(format!(
                "final state {q} has dimension {}, expected {INTERNAL_DIM}",
                psi.len()
            )));
        }
        for (c, &idx) in COMPUTATIONAL.iter().enumerate() {
            p[q][c] = psi[idx];
        }
    }
    Ok(p)
}

/// `S = Σ_q ⟨ψ_q|τ_q⟩`.
pub fn overlap_sum(p: &[[C64; 4]; 4], targets: &[[C64; 4]; 4]) -> C64 {
    let mut s = ZERO;
    for q in 0..4 {
        for c in 0..4 {
            s += p[q][c].conj() * targets[q][c];
        }
    }
    s
}

/// `F = |Σ_q ⟨ψ_q| R⊗R U_iSWAP |q⟩|² / 16`. Lost norm is not renormalized.
pub fn bell_fidelity(finals: &[CVec], angles: RotationAngles) -> Result<f64> {
    let p = computational_projections(finals)?;
    Ok(overlap_sum(&p, &iswap_targets(angles)).norm_sqr() / 16.0)
}

fn fidelity_and_grad(p: &[[C64; 4]; 4], a: RotationAngles) -> (f64, [f64; 3]) {
    let s = overlap_sum(p, &iswap_targets(a));
    let grads = iswap_target_grads(a);
    let mut g = [0.0; 3];
    for k in 0..3 {
        let ds = overlap_sum(p, &grads[k]);
        g[k] = 2.0 * (s.conj() * ds).re / 16.0;
    }
    (s.norm_sqr() / 16.0, g)
}

/// Maximize the Bell fidelity over the final rotation, starting BFGS from a
/// coarse grid of angles.
pub fn optimize_rotation_projected(p: &[[C64; 4]; 4]) -> (RotationAngles, f64) {
    let opts = BfgsOptions {
        max_iterations: 200,
        g_tol: 1e-13,
        ..BfgsOptions::default()
    };
    let grid = [0.0, 0.5 * PI, PI, 1.5 * PI];
    let mut best = (
        RotationAngles::default(),
        fidelity_and_grad(p, RotationAngles::default()).0,
    );
    for &t in &grid {
        for &ph in &grid {
            for &l in &grid[..2] {
                let r = bfgs(
                    |x, g| {
                        let (f, gr) = fidelity_and_grad(p, RotationAngles::from_slice(x));
                        for k in 0..3 {
                            g[k] = -gr[k];
                        }
                        -f
                    },
                    &[t, ph, l],
                    &opts,
                );
                if -r.f > best.1 {
                    best = (RotationAngles::from_slice(&r.x), -r.f);
                }
            }
        }
    }
    best
}

pub fn optimize_rotation(finals: &[CVec]) -> Result<(RotationAngles, f64)> {
    Ok(optimize_rotation_projected(&computational_projections(
        finals,
    )?))
}

/// Truncated Boltzmann distribution of a single mode, normalized over
/// `0..cutoff`.
pub fn mode_weights(omega: f64, t_temp: f64, cutoff: usize) -> Vec<f64> {
    let mut w = vec![0.0; cutoff.max(1)];
    if t_temp <= 0.0 {
        w[0] = 1.0;
        return w;
    }
    let x = HBAR * omega / (KB * t_temp);
    for (k, v) in w.iter_mut().enumerate() {
        *v = (-x * k as f64).exp();
    }
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= z);
    w
}

/// Joint thermal weights `b_m` over the row-major multi-index of the modes.
pub fn boltzmann_weights(omegas: &[f64], t_temp: f64, cutoffs: &[usize]) -> Result<Vec<f64>> {
    if omegas.len() != cutoffs.len() {
        return Err(Error::Dimension(format!(
            "{} frequencies for {} cutoffs",
            omegas.len(),
            cutoffs.len()
        )));
    }
    if !(t_temp >= 0.0) {
        return Err(Error::Domain(format!(
            "temperature must be non-negative, got {t_temp} K"
        )));
    }
    let mut joint = vec![1.0];
    for (&w, &m) in omegas.iter().zip(cutoffs) {
        let single = mode_weights(w, t_temp, m);
        joint = joint
            .iter()
            .flat_map(|&a| single.iter().map(move |&b| a * b))
            .collect();
    }
    Ok(joint)
}

/// Hermitian square root with eigenvalues clipped at zero. Fails on
/// eigenvalues below −1e-10.
/// Eigenvalues below this are rounding noise; their square roots (~1e-8)
/// would otherwise dominate the error for rank-deficient inputs.
fn noise_floor(vals: &[f64]) -> f64 {
    let top = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    64.0 * f64::EPSILON * top.max(f64::MIN_POSITIVE)
}

fn psd_sqrt(rho: &CMat) -> Result<CMat> {
    let (vals, q) = eigh(rho);
    if vals.iter().any(|&v| v < -1e-10) {
        return Err(Error::Domain(format!(
            "density matrix has negative eigenvalue {:.3e}",
            vals.min()
        )));
    }
    let floor = noise_floor(vals.as_slice());
    let d: Vec<C64> = vals
        .iter()
        .map(|&v| C64::new(if v > floor { v.sqrt() } else { 0.0 }, 0.0))
        .collect();
    Ok(crate::linalg::from_eigen(&q, &d))
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
pub fn uhlmann_fidelity(rho: &CMat, sigma: &CMat) -> Result<f64> {
    if rho.shape() != sigma.shape() || !rho.is_square() {
        return Err(Error::Dimension("density matrices differ in shape".into()));
    }
    let sr = psd_sqrt(rho)?;
    psd_sqrt(sigma)?;
    let m = matmul(&matmul(&sr, sigma), &sr);
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let (vals, _) = eigh(&m);
    let floor = noise_floor(vals.as_slice());
    let tr: f64 = vals.iter().filter(|&&v| v > floor).map(|&v| v.sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalOptions {
    /// Motional inputs whose thermal weight is below this are skipped and the
    /// remaining weights renormalized.
    pub weight_floor: f64,
    /// Refine the rotation angles directly on F′.
    pub refine_rotation: bool,
}

impl Default for ThermalOptions {
    fn default() -> Self {
        Self {
            weight_floor: 1e-9,
            refine_rotation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalReport {
    pub fidelity: f64,
    pub angles: RotationAngles,
    /// Motional inputs actually propagated.
    pub motional_inputs: usize,
    /// Thermal weight carried by the propagated inputs before renormalization.
    pub weight_kept: f64,
}

/// Per-input data needed to evaluate F′ for any rotation: the
/// computational amplitudes `A[c][μ]` of the final state.
struct ThermalFinals {
    weights: Vec<f64>,
    /// finals[m][q] = 4 × M_tot amplitudes, row c = computational index.
    finals: Vec<[Vec<[C64; 4]>; 4]>,
    /// Overlap with the input motional state, used for the starting angles.
    diagonal: [[C64; 4]; 4],
}

impl ThermalFinals {
    fn value(&self, a: RotationAngles) -> f64 {
        let t = iswap_targets(a);
        let mut total = 0.0;
        for (w, per_q) in self.weights.iter().zip(&self.finals) {
            let mut sum = ZERO;
            for q in 0..4 {
                let mut fid = 0.0;
                let mut ov = ZERO;
                for amp in &per_q[q] {
                    let mut v = ZERO;
                    for c in 0..4 {
                        v += t[q][c].conj() * amp[c];
                    }
                    fid += v.norm_sqr();
                    ov += v;
                }
                let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
                sum += phase * fid.sqrt();
            }
            total += w * sum.norm_sqr() / 16.0;
        }
        total
    }
}

fn thermal_finals(
    model: &GateModel,
    pulse: &PulseSchedule,
    opts: &ThermalOptions,
) -> Result<(ThermalFinals, usize, f64)> {
    let motion = &model.motion;
    let omegas: Vec<f64> = motion.modes.iter().map(|m| m.omega).collect();
    let weights = boltzmann_weights(&omegas, model.geom.t_temp, &motion.dims())?;
    let kept: Vec<usize> = (0..weights.len())
        .filter(|&m| weights[m] >= opts.weight_floor)
        .collect();
    let weight_kept: f64 = kept.iter().map(|&m| weights[m]).sum();
    let mt = motion.dim();
    let dim = model.dim();
    let mut psi0 = CMat::zeros(dim, 4 * kept.len());
    for (k, &m) in kept.iter().enumerate() {
        for (q, &idx) in COMPUTATIONAL.iter().enumerate() {
            psi0[(idx * mt + m, 4 * k + q)] = ONE;
        }
    }
    let dt = pulse.dt(model.omega_max);
    let prop = GaugePropagator::new(model, dt)?;
    let out = evolve_columns(&prop, &pulse.phases, psi0)?;
    let mut finals = Vec::with_capacity(kept.len());
    let mut diagonal = [[ZERO; 4]; 4];
    for (k, &m) in kept.iter().enumerate() {
        let per_q: [Vec<[C64; 4]>; 4] = std::array::from_fn(|q| {
            let col = out.column(4 * k + q);
            (0..mt)
                .map(|mu| std::array::from_fn(|c| col[COMPUTATIONAL[c] * mt + mu]))
                .collect()
        });
        if k == 0 {
            for q in 0..4 {
                diagonal[q] = per_q[q][m];
            }
        }
        finals.push(per_q);
    }
    let w: Vec<f64> = kept.iter().map(|&m| weights[m] / weight_kept).collect();
    Ok((
        ThermalFinals {
            weights: w,
            finals,
            diagonal,
        },
        kept.len(),
        weight_kept,
    ))
}

/// Mixed-state gate fidelity
/// `F′ = Σ_m b_m/16 |Σ_q √ℱ(ρ_qm, τ_q) e^{iφ_qm}|²` over thermally occupied
/// motional inputs. With a pure target the Uhlmann fidelity reduces to
/// `⟨τ_q|ρ_qm|τ_q⟩`, and `φ_qm` is the phase of the overlap with `τ_q`
/// tensored with the uniform motional superposition.
pub fn thermal_fidelity(
    model: &GateModel,
    pulse: &PulseSchedule,
    opts: &ThermalOptions,
) -> Result<ThermalReport> {
    let (tf, used, weight_kept) = thermal_finals(model, pulse, opts)?;
    let (mut angles, _) = optimize_rotation_projected(&tf.diagonal);
    let mut fidelity = tf.value(angles);
    if opts.refine_rotation {
        let r = bfgs(
            |x, g| {
                let grad = numeric_gradient(|y| -tf.value(RotationAngles::from_slice(y)), x, 1e-6);
                g.copy_from_slice(&grad);
                -tf.value(RotationAngles::from_slice(x))
            },
            &angles.to_array(),
            &BfgsOptions {
                max_iterations: 100,
                g_tol: 1e-11,
                ..BfgsOptions::default()
            },
        );
        if -r.f > fidelity {
            fidelity = -r.f;
            angles = RotationAngles::from_slice(&r.x);
        }
    }
    Ok(ThermalReport {
        fidelity,
        angles,
        motional_inputs: used,
        weight_kept,
    })
}

/// F′ at fixed angles (no rotation search).
pub fn thermal_fidelity_at(
    model: &GateModel,
    pulse: &PulseSchedule,
    angles: RotationAngles,
    weight_floor: f64,
) -> Result<f64> {
    let opts = ThermalOptions {
        weight_floor,
        refine_rotation: false,
    };
    let (tf, _, _) = thermal_finals(model, pulse, &opts)?;
    Ok(tf.value(angles))
}
