//! Piecewise-constant time evolution.
//!
//! Every term except the drive commutes with the Rydberg number `N`, so the
//! step Hamiltonian at phase φ is `D H(0) D†` with `D = e^{−iφN}` and the
//! step propagator is `D E D†` with `E = exp(−iH(0)Δt)` computed once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grape::PulseSchedule;
use crate::hamiltonian::{assemble, GateModel};
use crate::linalg::{
    expm, expm_hermitian, gemm, is_finite, is_hermitian, CMat, CVec, C64, I, ONE, ZERO,
};
use crate::operators::COMPUTATIONAL;

/// `exp(−iHΔt)`; eigendecomposition when `H` is Hermitian, Padé otherwise.
pub fn step_propagator(h: &CMat, dt: f64) -> Result<CMat> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!(
            "time step must be positive, got {dt} s"
        )));
    }
    if !is_finite(h) {
        return Err(Error::Numeric("Hamiltonian has non-finite entries".into()));
    }
    if is_hermitian(h, 1e-14) {
        Ok(expm_hermitian(h, dt))
    } else {
        expm(&(h * (-I * dt)))
    }
}

/// Step propagator factory for one model and one step length.
#[derive(Debug, Clone)]
pub struct GaugePropagator {
    e: CMat,
    number: Vec<usize>,
}

impl GaugePropagator {
    pub fn new(model: &GateModel, dt: f64) -> Result<Self> {
        let h0 = assemble(model, 0.0)?;
        Ok(Self {
            e: step_propagator(&h0, dt)?,
            number: model.rydberg_number().iter().map(|&n| n as usize).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.e.nrows()
    }

    /// `exp(−iH(0)Δt)`.
    pub fn base(&self) -> &CMat {
        &self.e
    }

    pub fn number(&self) -> &[usize] {
        &self.number
    }

    /// Step propagator at phase `phase`.
    pub fn step(&self, phase: f64) -> CMat {
        let f = phase_factors(phase);
        let n = self.dim();
        let mut p = self.e.clone();
        for b in 0..n {
            for a in 0..n {
                let d = self.number[a] as isize - self.number[b] as isize;
                if d != 0 {
                    p[(a, b)] *= if d > 0 {
                        f[d as usize]
                    } else {
                        f[(-d) as usize].conj()
                    };
                }
            }
        }
        p
    }

    /// `ψ ← D E D† ψ` for every column of `psi`.
    pub fn apply(&self, phase: f64, psi: &mut CMat, scratch: &mut CMat) {
        let f = phase_factors(phase);
        scale_rows(psi, &self.number, &f, true);
        gemm(ONE, &self.e, psi, ZERO, scratch);
        std::mem::swap(psi, scratch);
        scale_rows(psi, &self.number, &f, false);
    }
}

/// `e^{−iφk}` for k = 0, 1, 2.
fn phase_factors(phase: f64) -> [C64; 3] {
    [
        ONE,
        C64::from_polar(1.0, -phase),
        C64::from_polar(1.0, -2.0 * phase),
    ]
}

fn scale_rows(psi: &mut CMat, number: &[usize], f: &[C64; 3], conj: bool) {
    for mut col in psi.column_iter_mut() {
        for (a, z) in col.iter_mut().enumerate() {
            let n = number[a];
            if n != 0 {
                *z *= if conj { f[n].conj() } else { f[n] };
            }
        }
    }
}

/// Apply the whole phase sequence to the columns of `psi0`.
pub fn evolve_columns(prop: &GaugePropagator, phases: &[f64], psi0: CMat) -> Result<CMat> {
    if psi0.nrows() != prop.dim() {
        return Err(Error::Dimension(format!(
            "initial states have dimension {}, model has {}",
            psi0.nrows(),
            prop.dim()
        )));
    }
    let mut psi = psi0;
    let mut scratch = CMat::zeros(psi.nrows(), psi.ncols());
    for &phi in phases {
        prop.apply(phi, &mut psi, &mut scratch);
    }
    Ok(psi)
}

/// Reference evolution that assembles and exponentiates the Hamiltonian of
/// every step separately. Used to check the gauge shortcut.
pub fn evolve_direct(model: &GateModel, phases: &[f64], dt: f64, psi0: CMat) -> Result<CMat> {
    let mut psi = psi0;
    for &phi in phases {
        let p = step_propagator(&assemble(model, phi)?, dt)?;
        psi = &p * psi;
    }
    Ok(psi)
}

/// A computational input `|q⟩` with motional Fock occupations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionInput {
    pub q: usize,
    pub motional: Vec<usize>,
}

impl EvolutionInput {
    pub fn ground(q: usize, modes: usize) -> Self {
        Self {
            q,
            motional: vec![0; modes],
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub inputs: Vec<EvolutionInput>,
    pub final_states: Vec<CVec>,
    pub survival_norms: Vec<f64>,
}

impl EvolutionResult {
    pub fn get(&self, q: usize, motional: &[usize]) -> Option<&CVec> {
        self.inputs
            .iter()
            .position(|i| i.q == q && i.motional == motional)
            .map(|k| &self.final_states[k])
    }
}

/// The four computational inputs with every motional mode in its ground state.
pub fn computational_inputs(model: &GateModel) -> Vec<EvolutionInput> {
    (0..4)
        .map(|q| EvolutionInput::ground(q, model.motion.modes.len()))
        .collect()
}

pub fn basis_state(model: &GateModel, input: &EvolutionInput) -> Result<CVec> {
    if input.q >= 4 {
        return Err(Error::Dimension(format!(
            "computational index {} >= 4",
            input.q
        )));
    }
    let motion = &model.motion;
    if input.motional.len() != motion.modes.len()
        || input
            .motional
            .iter()
            .zip(&motion.modes)
            .any(|(&o, m)| o >= m.cutoff)
    {
        return Err(Error::Dimension(format!(
            "motional occupations {:?} do not fit the active modes",
            input.motional
        )));
    }
    let mut v = CVec::zeros(model.dim());
    v[COMPUTATIONAL[input.q] * motion.dim() + motion.index_of(&input.motional)] = ONE;
    Ok(v)
}

/// Evolve every input under the pulse's phase sequence.
pub fn evolve(
    model: &GateModel,
    pulse: &PulseSchedule,
    inputs: &[EvolutionInput],
) -> Result<EvolutionResult> {
    if pulse.phases.is_empty() {
        return Err(Error::Domain("pulse has no steps".into()));
    }
    let dim = model.dim();
    let mut psi0 = CMat::zeros(dim, inputs.len());
    for (k, input) in inputs.iter().enumerate() {
        psi0.set_column(k, &basis_state(model, input)?);
    }
    let prop = GaugePropagator::new(model, pulse.dt(model.omega_max))?;
    let out = evolve_columns(&prop, &pulse.phases, psi0)?;
    let final_states: Vec<CVec> = out.column_iter().map(|c| c.into_owned()).collect();
    let survival_norms = final_states.iter().map(|v| v.norm_squared()).collect();
    Ok(EvolutionResult {
        inputs: inputs.to_vec(),
        final_states,
        survival_norms,
    })
}

/// Final internal states of the four computational inputs of a
/// motion-free model.
pub fn internal_finals(model: &GateModel, pulse: &PulseSchedule) -> Result<Vec<CVec>> {
    if !model.motion.is_empty() {
        return Err(Error::Config(
            "internal_finals needs a motion-free model".into(),
        ));
    }
    Ok(evolve(model, pulse, &computational_inputs(model))?.final_states)
}
