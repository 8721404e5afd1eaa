//! Cost `1 − F` of a phase pulse on the internal-only model and its exact
//! gradient.
//!
//! With `ψ^{(k)}` the forward states after step k, `λ^{(k)} = P_{k+1}†…P_N† τ`
//! the back-propagated targets and `a_k = Σ_q ⟨ψ_q^{(k)}|N λ_q^{(k)}⟩`,
//! the overlap `S = Σ_q ⟨ψ_q^{(N)}|τ_q⟩` has `∂S/∂φ_k = i(a_k − a_{k−1})`.

use crate::error::{Error, Result};
use crate::fidelity::{iswap_target_grads, iswap_targets, RotationAngles};
use crate::grape::{GradientMode, OptimizerOptions, PulseSchedule};
use crate::hamiltonian::GateModel;
use crate::linalg::{C64, ONE, ZERO};
use crate::operators::{rydberg_count, COMPUTATIONAL, INTERNAL_DIM};
use crate::propagator::GaugePropagator;

const D: usize = INTERNAL_DIM;
type State = [C64; D];

/// Precomputed single-step data for a fixed model and step length.
#[derive(Debug, Clone)]
pub struct GrapeProblem {
    /// exp(−iH(0)Δt), row-major.
    e: [[C64; D]; D],
    number: [usize; D],
    steps: usize,
}

#[inline]
fn factors(phase: f64) -> [C64; 3] {
    [
        ONE,
        C64::from_polar(1.0, -phase),
        C64::from_polar(1.0, -2.0 * phase),
    ]
}

impl GrapeProblem {
    /// The model must be motion-free; any enabled internal noise (vdW,
    /// decay, recoil shift) is part of the cost.
    pub fn new(model: &GateModel, duration: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(duration > 0.0) {
            return Err(Error::Domain(format!(
                "need positive duration and step count, got T*Omega = {duration}, N = {steps}"
            )));
        }
        Self::from_step(model, duration / model.omega_max / steps as f64, steps)
    }

    /// Problem with an explicit physical step length `dt` (s).
    pub fn from_step(model: &GateModel, dt: f64, steps: usize) -> Result<Self> {
        if !model.motion.is_empty() {
            return Err(Error::Config(
                "GRAPE runs on the internal-only model".into(),
            ));
        }
        let prop = GaugePropagator::new(model, dt)?;
        let base = prop.base();
        let mut e = [[ZERO; D]; D];
        for (a, row) in e.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = base[(a, b)];
            }
        }
        Ok(Self {
            e,
            number: std::array::from_fn(rydberg_count),
            steps,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn n_params(&self) -> usize {
        self.steps + 3
    }

    /// `ψ ← D E D† ψ`.
    #[inline]
    fn forward(&self, f: &[C64; 3], psi: &State) -> State {
        let mut tmp = [ZERO; D];
        for b in 0..D {
            tmp[b] = psi[b] * f[self.number[b]].conj();
        }
        let mut out = [ZERO; D];
        for a in 0..D {
            let row = &self.e[a];
            let mut s = ZERO;
            for b in 0..D {
                s += row[b] * tmp[b];
            }
            out[a] = s * f[self.number[a]];
        }
        out
    }

    /// `λ ← D E† D† λ`.
    #[inline]
    fn backward(&self, f: &[C64; 3], lam: &State) -> State {
        let mut tmp = [ZERO; D];
        for a in 0..D {
            tmp[a] = lam[a] * f[self.number[a]].conj();
        }
        let mut out = [ZERO; D];
        for (a, row) in self.e.iter().enumerate() {
            let t = tmp[a];
            if t == ZERO {
                continue;
            }
            for b in 0..D {
                out[b] += row[b].conj() * t;
            }
        }
        for b in 0..D {
            out[b] *= f[self.number[b]];
        }
        out
    }

    fn initial() -> [State; 4] {
        std::array::from_fn(|q| {
            let mut s = [ZERO; D];
            s[COMPUTATIONAL[q]] = ONE;
            s
        })
    }

    /// Final states of the four computational inputs.
    pub fn finals(&self, phases: &[f64]) -> [State; 4] {
        let mut psi = Self::initial();
        for &phi in phases {
            let f = factors(phi);
            for s in psi.iter_mut() {
                *s = self.forward(&f, s);
            }
        }
        psi
    }

    fn overlap(psi: &[State; 4], t: &[[C64; 4]; 4]) -> C64 {
        let mut s = ZERO;
        for q in 0..4 {
            for c in 0..4 {
                s += psi[q][COMPUTATIONAL[c]].conj() * t[q][c];
            }
        }
        s
    }

    /// `1 − F` at parameters `[φ^0 … φ^{N−1}, θ, φ, λ]`.
    pub fn cost(&self, x: &[f64]) -> f64 {
        let n = self.steps;
        let psi = self.finals(&x[..n]);
        let s = Self::overlap(&psi, &iswap_targets(RotationAngles::from_slice(&x[n..])));
        1.0 - s.norm_sqr() / 16.0
    }

    /// Cost and exact gradient.
    pub fn cost_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
        let n = self.steps;
        let angles = RotationAngles::from_slice(&x[n..]);
        let mut traj: Vec<[State; 4]> = Vec::with_capacity(n + 1);
        traj.push(Self::initial());
        for k in 0..n {
            let f = factors(x[k]);
            let prev = &traj[k];
            let next: [State; 4] = std::array::from_fn(|q| self.forward(&f, &prev[q]));
            traj.push(next);
        }
        let targets = iswap_targets(angles);
        let fin = &traj[n];
        let s = Self::overlap(fin, &targets);
        let tgrads = iswap_target_grads(angles);
        for k in 0..3 {
            let ds = Self::overlap(fin, &tgrads[k]);
            g[n + k] = -(s.conj() * ds).re / 8.0;
        }

        let mut lam: [State; 4] = std::array::from_fn(|q| {
            let mut v = [ZERO; D];
            for c in 0..4 {
                v[COMPUTATIONAL[c]] = targets[q][c];
            }
            v
        });
        let a_of = |psi: &[State; 4], lam: &[State; 4]| -> C64 {
            let mut a = ZERO;
            for q in 0..4 {
                for i in 0..D {
                    let m = self.number[i];
                    if m != 0 {
                        a += psi[q][i].conj() * lam[q][i] * m as f64;
                    }
                }
            }
            a
        };
        let mut a_next = a_of(&traj[n], &lam);
        for k in (0..n).rev() {
            let f = factors(x[k]);
            for l in lam.iter_mut() {
                *l = self.backward(&f, l);
            }
            let a_prev = a_of(&traj[k], &lam);
            let ds = C64::new(0.0, 1.0) * (a_next - a_prev);
            g[k] = -(s.conj() * ds).re / 8.0;
            a_next = a_prev;
        }
        1.0 - s.norm_sqr() / 16.0
    }

    /// Cost and central-difference gradient.
    pub fn cost_grad_fd(&self, x: &[f64], g: &mut [f64], eps: f64) -> f64 {
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            let v = xp[i];
            xp[i] = v + eps;
            let fp = self.cost(&xp);
            xp[i] = v - eps;
            let fm = self.cost(&xp);
            xp[i] = v;
            g[i] = (fp - fm) / (2.0 * eps);
        }
        self.cost(x)
    }

    pub fn evaluate(&self, x: &[f64], g: &mut [f64], mode: GradientMode, eps: f64) -> f64 {
        match mode {
            GradientMode::Analytic => self.cost_grad(x, g),
            GradientMode::FiniteDifference => self.cost_grad_fd(x, g, eps),
        }
    }
}

/// `1 − F` of a pulse on a motion-free model at the pulse's rotation.
pub fn cost(pulse: &PulseSchedule, model: &GateModel) -> Result<f64> {
    pulse.validate()?;
    let p = GrapeProblem::new(model, pulse.duration, pulse.steps())?;
    Ok(p.cost(&pulse.to_params()))
}

/// Gradient of the cost over `[φ^0 … φ^{N−1}, θ, φ, λ]`.
pub fn gradient(
    pulse: &PulseSchedule,
    model: &GateModel,
    options: &OptimizerOptions,
) -> Result<Vec<f64>> {
    pulse.validate()?;
    let p = GrapeProblem::new(model, pulse.duration, pulse.steps())?;
    let x = pulse.to_params();
    let mut g = vec![0.0; x.len()];
    p.evaluate(&x, &mut g, options.gradient_mode, options.fd_epsilon);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::SpeciesTable;
    use crate::fidelity::bell_fidelity;
    use crate::hamiltonian::NoiseConfig;
    use crate::linalg::CVec;
    use crate::propagator::internal_finals;
    use crate::units::mhz;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(noise: NoiseConfig) -> GateModel {
        let data = SpeciesTable::bundled().pair_data("Rb87", 100).unwrap();
        GateModel::from_ratio(data, mhz(10.0), 2.1)
            .unwrap()
            .with_noise(noise)
    }

    fn random_pulse(n: usize, rng: &mut ChaCha8Rng) -> PulseSchedule {
        let mut p = PulseSchedule::new(
            2.1,
            mhz(10.0),
            11.95,
            (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        );
        p.rotation = RotationAngles::new(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        );
        p
    }

    #[test]
    fn kernel_matches_generic_propagation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = model(NoiseConfig {
            vdw: true,
            decay: true,
            ..NoiseConfig::none()
        });
        let p = random_pulse(37, &mut rng);
        let finals = internal_finals(&m, &p).unwrap();
        let f = bell_fidelity(&finals, p.rotation).unwrap();
        assert!((cost(&p, &m).unwrap() - (1.0 - f)).abs() < 1e-13);
        let kernel = GrapeProblem::new(&m, p.duration, p.steps())
            .unwrap()
            .finals(&p.phases);
        for q in 0..4 {
            let v = CVec::from_row_slice(&kernel[q]);
            assert!((v - &finals[q]).norm() < 1e-13);
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for noise in [
            NoiseConfig::none(),
            NoiseConfig {
                vdw: true,
                decay: true,
                ..NoiseConfig::none()
            },
        ] {
            let m = model(noise);
            let p = random_pulse(40, &mut rng);
            let a = gradient(&p, &m, &OptimizerOptions::default()).unwrap();
            let fd_opts = OptimizerOptions {
                gradient_mode: GradientMode::FiniteDifference,
                ..OptimizerOptions::default()
            };
            let fd = gradient(&p, &m, &fd_opts).unwrap();
            let diff: f64 = a
                .iter()
                .zip(&fd)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            let norm: f64 = fd.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(diff / norm < 1e-6, "relative error {}", diff / norm);
        }
    }

    #[test]
    fn gradient_vanishes_without_drive() {
        let mut m = model(NoiseConfig::vdw_only());
        m.omega_max = 0.0;
        let p = GrapeProblem::from_step(&m, 1e-8, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..13).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut g = vec![0.0; 13];
        p.cost_grad(&x, &mut g);
        assert!(g[..10].iter().all(|v| *v == 0.0));
    }
}
