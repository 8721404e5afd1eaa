//! Drive, exchange, van der Waals, recoil, kinetic and decay terms of the
//! two-atom Hamiltonian, in angular-frequency units (H/ħ, rad/s).

use serde::{Deserialize, Serialize};

use crate::atomic::{Axis, GeometryConfig, Laser, RydbergPairData, VdwStrengths};
use crate::error::{Error, Result};
use crate::linalg::{is_finite, matmul, CMat, C64, ONE, ZERO};
use crate::operators::{
    atom_op, embed_motional, internal_index, lift, lift_internal, momentum_local, on_atom,
    position_local, rydberg_count, Atom, Level, Mode, MotionalConfig, ProductSpace, INTERNAL_DIM,
};

/// Independent switches for every budgeted noise channel. All false is the
/// bare gate model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub vdw: bool,
    pub vdw_motion_1z: bool,
    pub exchange_motion_1z: bool,
    pub exchange_motion_2z: bool,
    pub exchange_motion_2x: bool,
    pub exchange_motion_2y: bool,
    pub recoil_detuning: bool,
    pub recoil_coupling: bool,
    pub decay: bool,
    /// Offset the laser frequencies so that the recoil shift is cancelled.
    pub detuning_compensation: bool,
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn vdw_only() -> Self {
        Self {
            vdw: true,
            ..Self::default()
        }
    }

    pub fn is_noiseless(&self) -> bool {
        !(self.vdw
            || self.vdw_motion_1z
            || self.exchange_motion_1z
            || self.exchange_motion_2z
            || self.exchange_motion_2x
            || self.exchange_motion_2y
            || self.recoil_detuning
            || self.recoil_coupling
            || self.decay)
    }

    /// Union of two flag sets.
    pub fn merge(self, o: Self) -> Self {
        Self {
            vdw: self.vdw || o.vdw,
            vdw_motion_1z: self.vdw_motion_1z || o.vdw_motion_1z,
            exchange_motion_1z: self.exchange_motion_1z || o.exchange_motion_1z,
            exchange_motion_2z: self.exchange_motion_2z || o.exchange_motion_2z,
            exchange_motion_2x: self.exchange_motion_2x || o.exchange_motion_2x,
            exchange_motion_2y: self.exchange_motion_2y || o.exchange_motion_2y,
            recoil_detuning: self.recoil_detuning || o.recoil_detuning,
            recoil_coupling: self.recoil_coupling || o.recoil_coupling,
            decay: self.decay || o.decay,
            detuning_compensation: self.detuning_compensation || o.detuning_compensation,
        }
    }

    /// Motional axes (per atom pair) that the enabled terms act on, given the
    /// recoil direction.
    pub fn motional_axes(&self, recoil_axis: Axis) -> Vec<Axis> {
        let mut axes = Vec::new();
        let mut add = |a: Axis| {
            if !axes.contains(&a) {
                axes.push(a);
            }
        };
        if self.vdw_motion_1z || self.exchange_motion_1z || self.exchange_motion_2z {
            add(Axis::Z);
        }
        if self.exchange_motion_2x {
            add(Axis::X);
        }
        if self.exchange_motion_2y {
            add(Axis::Y);
        }
        if self.recoil_coupling {
            add(recoil_axis);
        }
        axes.sort();
        axes
    }
}

/// Sign of the free-particle kinetic term. `Standard` is `+p²/2m`;
/// `Flipped` exists for sensitivity checks only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KineticSign {
    #[default]
    Standard,
    Flipped,
}

impl KineticSign {
    pub fn value(self) -> f64 {
        match self {
            KineticSign::Standard => 1.0,
            KineticSign::Flipped => -1.0,
        }
    }
}

/// A fully resolved physical scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateModel {
    pub data: RydbergPairData,
    pub geom: GeometryConfig,
    /// Ω_max, rad/s.
    pub omega_max: f64,
    pub noise: NoiseConfig,
    pub motion: MotionalConfig,
    #[serde(default)]
    pub kinetic_sign: KineticSign,
}

impl GateModel {
    /// Noiseless, motion-free model at the reference geometry with the
    /// distance chosen so that `Ω_max/J = ratio`.
    pub fn from_ratio(data: RydbergPairData, omega_max: f64, ratio: f64) -> Result<Self> {
        let r = crate::atomic::range_for_ratio(omega_max, ratio, &data)?;
        let model = Self {
            data,
            geom: GeometryConfig::reference(r),
            omega_max,
            noise: NoiseConfig::none(),
            motion: MotionalConfig::none(),
            kinetic_sign: KineticSign::Standard,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_noise(mut self, noise: NoiseConfig) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_motion(mut self, motion: MotionalConfig) -> Self {
        self.motion = motion;
        self
    }

    /// Both atoms' modes along `axes`, at the trap frequencies of `geom`.
    pub fn motion_for_axes(&self, axes: &[Axis], cutoff: impl Fn(Axis) -> usize) -> MotionalConfig {
        let mut modes = Vec::new();
        for &axis in axes {
            for atom in Atom::BOTH {
                modes.push(Mode {
                    atom,
                    axis,
                    cutoff: cutoff(axis),
                    omega: self.geom.trap_frequency(axis),
                });
            }
        }
        MotionalConfig { modes }
    }

    pub fn exchange_coupling(&self) -> f64 {
        self.data.c3.abs() / self.geom.r.powi(3)
    }

    /// Ω_max/J.
    pub fn ratio(&self) -> f64 {
        self.omega_max / self.exchange_coupling()
    }

    pub fn space(&self) -> ProductSpace {
        ProductSpace::new(&self.motion)
    }

    pub fn dim(&self) -> usize {
        INTERNAL_DIM * self.motion.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.geom.validate()?;
        self.motion.validate()?;
        if !(self.omega_max.is_finite() && self.omega_max >= 0.0) {
            return Err(Error::Domain(format!(
                "Omega_max must be non-negative, got {} rad/s",
                self.omega_max
            )));
        }
        let n = self.noise;
        let need = |flag: bool, axis: Axis, what: &str| -> Result<()> {
            if flag {
                for atom in Atom::BOTH {
                    if self.motion.find(atom, axis).is_none() {
                        return Err(Error::Config(format!(
                            "{what} needs motional mode {atom}{axis}"
                        )));
                    }
                }
            }
            Ok(())
        };
        need(n.exchange_motion_1z, Axis::Z, "exchange_motion_1z")?;
        need(n.vdw_motion_1z, Axis::Z, "vdw_motion_1z")?;
        need(n.exchange_motion_2z, Axis::Z, "exchange_motion_2z")?;
        need(n.exchange_motion_2x, Axis::X, "exchange_motion_2x")?;
        need(n.exchange_motion_2y, Axis::Y, "exchange_motion_2y")?;
        need(
            n.recoil_coupling,
            self.geom.laser_axis.axis(),
            "recoil_coupling",
        )?;
        Ok(())
    }

    /// `ℓ_A − ℓ_B` on the motional space.
    fn relative_coordinate(&self, axis: Axis) -> Result<CMat> {
        let mut out = CMat::zeros(self.motion.dim(), self.motion.dim());
        for (atom, sign) in [(Atom::A, 1.0), (Atom::B, -1.0)] {
            let k = self.motion.require(atom, axis)?;
            let mode = self.motion.modes[k];
            let x = position_local(mode.cutoff, self.data.mass, mode.omega);
            out += embed_motional(&x, &self.motion, k)? * C64::new(sign, 0.0);
        }
        Ok(out)
    }

    /// Number of Rydberg excitations of every full-space basis state.
    pub fn rydberg_number(&self) -> Vec<f64> {
        rydberg_number_diag(&self.motion)
    }
}

pub fn rydberg_number_diag(motion: &MotionalConfig) -> Vec<f64> {
    let m = motion.dim();
    (0..INTERNAL_DIM * m)
        .map(|a| rydberg_count(a / m) as f64)
        .collect()
}

fn laser(j: usize) -> Laser {
    if j == 0 {
        Laser::Zero
    } else {
        Laser::One
    }
}

/// Internal-space drive `Σ_{j,α} (Ω/2)(e^{iφ}|j⟩⟨r_j|_α + h.c.)`.
pub fn drive_internal(omega: f64, phase: f64) -> CMat {
    let c = C64::from_polar(0.5 * omega, phase);
    let mut h = CMat::zeros(INTERNAL_DIM, INTERNAL_DIM);
    for atom in Atom::BOTH {
        for j in 0..2 {
            let g = if j == 0 { Level::Zero } else { Level::One };
            let down = on_atom(&atom_op(g, Level::rydberg(j)), atom);
            h += &down * c + down.adjoint() * c.conj();
        }
    }
    h
}

/// `|r0 r1⟩⟨r1 r0| + h.c.`
pub fn exchange_internal() -> CMat {
    let mut x = CMat::zeros(INTERNAL_DIM, INTERNAL_DIM);
    let a = internal_index(Level::R0, Level::R1);
    let b = internal_index(Level::R1, Level::R0);
    x[(a, b)] = ONE;
    x[(b, a)] = ONE;
    x
}

/// `Σ_ij V_ij |r_i r_j⟩⟨r_i r_j|`.
pub fn vdw_internal(v: &VdwStrengths) -> CMat {
    let mut h = CMat::zeros(INTERNAL_DIM, INTERNAL_DIM);
    for i in 0..2 {
        for j in 0..2 {
            let k = internal_index(Level::rydberg(i), Level::rydberg(j));
            h[(k, k)] = C64::new(v.pair(i, j), 0.0);
        }
    }
    h
}

/// `|r_j⟩⟨r_j|` of one atom on the internal space.
fn rydberg_level_projector(atom: Atom, j: usize) -> CMat {
    let r = Level::rydberg(j);
    on_atom(&atom_op(r, r), atom)
}

pub fn drive_term(model: &GateModel, phase: f64) -> CMat {
    lift_internal(&drive_internal(model.omega_max, phase), &model.motion)
}

/// Exchange coupling including the enabled distance-fluctuation corrections
/// `J[1 − 3Δz/R + 6Δz²/R² − 3Δx²/R² − 3Δy²/R²]`.
pub fn exchange_term(model: &GateModel) -> Result<CMat> {
    let j = model.exchange_coupling();
    let r = model.geom.r;
    let md = model.motion.dim();
    let mut factor = CMat::identity(md, md);
    let n = model.noise;
    if n.exchange_motion_1z || n.exchange_motion_2z {
        let dz = model.relative_coordinate(Axis::Z)?;
        if n.exchange_motion_1z {
            factor += &dz * C64::new(-3.0 / r, 0.0);
        }
        if n.exchange_motion_2z {
            factor += matmul(&dz, &dz) * C64::new(6.0 / (r * r), 0.0);
        }
    }
    for (flag, axis) in [
        (n.exchange_motion_2x, Axis::X),
        (n.exchange_motion_2y, Axis::Y),
    ] {
        if flag {
            let d = model.relative_coordinate(axis)?;
            factor += matmul(&d, &d) * C64::new(-3.0 / (r * r), 0.0);
        }
    }
    Ok(lift(&(exchange_internal() * C64::new(j, 0.0)), &factor))
}

/// vdW shifts (when `vdw`) and their first-order z correction
/// `−6V·Δz/R` (when `vdw_motion_1z`). Zero when neither flag is set.
pub fn vdw_term(model: &GateModel) -> Result<CMat> {
    let v = vdw_internal(&model.data.vdw_strengths(model.geom.r)?);
    let md = model.motion.dim();
    let mut factor = CMat::zeros(md, md);
    if model.noise.vdw {
        factor += CMat::identity(md, md);
    }
    if model.noise.vdw_motion_1z {
        factor += model.relative_coordinate(Axis::Z)? * C64::new(-6.0 / model.geom.r, 0.0);
    }
    Ok(lift(&v, &factor))
}

/// Photon-recoil terms in the frame co-moving with the photon kick:
/// a detuning `s·Δ_j` on every |r_j⟩ and the coupling `−s(k_j/m)|r_j⟩⟨r_j|p`
/// along the laser axis, with `s` the kinetic sign.
pub fn recoil_terms(model: &GateModel) -> Result<CMat> {
    let s = model.kinetic_sign.value();
    let n = model.noise;
    let md = model.motion.dim();
    let dim = INTERNAL_DIM * md;
    let mut h = CMat::zeros(dim, dim);
    if n.recoil_detuning && !n.detuning_compensation {
        let mut d = CMat::zeros(INTERNAL_DIM, INTERNAL_DIM);
        for atom in Atom::BOTH {
            for j in 0..2 {
                d += rydberg_level_projector(atom, j)
                    * C64::new(s * model.data.recoil_detuning(laser(j)), 0.0);
            }
        }
        h += lift_internal(&d, &model.motion);
    }
    if n.recoil_coupling {
        let axis = model.geom.laser_axis.axis();
        for atom in Atom::BOTH {
            let k = model.motion.require(atom, axis)?;
            let mode = model.motion.modes[k];
            let p = embed_motional(
                &momentum_local(mode.cutoff, model.data.mass, mode.omega),
                &model.motion,
                k,
            )?;
            let mut proj = CMat::zeros(INTERNAL_DIM, INTERNAL_DIM);
            for j in 0..2 {
                let kj = 2.0 * std::f64::consts::PI / model.data.wavelength(laser(j));
                proj += rydberg_level_projector(atom, j) * C64::new(-s * kj / model.data.mass, 0.0);
            }
            h += lift(&proj, &p);
        }
    }
    Ok(h)
}

/// `s·Σ p²/2m` over all active modes, divided by ħ.
pub fn kinetic_term(model: &GateModel) -> Result<CMat> {
    let s = model.kinetic_sign.value();
    let md = model.motion.dim();
    let mut k = CMat::zeros(md, md);
    for (idx, mode) in model.motion.modes.iter().enumerate() {
        let p = momentum_local(mode.cutoff, model.data.mass, mode.omega);
        let e = matmul(&p, &p) * C64::new(s / (2.0 * model.data.mass * crate::units::HBAR), 0.0);
        k += embed_motional(&e, &model.motion, idx)?;
    }
    Ok(lift(&CMat::identity(INTERNAL_DIM, INTERNAL_DIM), &k))
}

/// `−(i/2) Σ_{j,α} Γ_j |r_j⟩⟨r_j|_α`.
pub fn decay_term(model: &GateModel) -> CMat {
    let mut d = CMat::zeros(INTERNAL_DIM, INTERNAL_DIM);
    for atom in Atom::BOTH {
        for j in 0..2 {
            d += rydberg_level_projector(atom, j)
                * C64::new(0.0, -0.5 * model.data.decay_rate(laser(j)));
        }
    }
    lift_internal(&d, &model.motion)
}

/// Sum of every enabled term at control phase `phase`.
pub fn assemble(model: &GateModel, phase: f64) -> Result<CMat> {
    model.validate()?;
    let mut h = drive_term(model, phase);
    h += exchange_term(model)?;
    if model.noise.vdw || model.noise.vdw_motion_1z {
        h += vdw_term(model)?;
    }
    if !model.motion.is_empty() {
        h += kinetic_term(model)?;
        h += recoil_terms(model)?;
    } else if model.noise.recoil_detuning {
        h += recoil_terms(model)?;
    }
    if model.noise.decay {
        h += decay_term(model);
    }
    if !is_finite(&h) {
        return Err(Error::Numeric(
            "assembled Hamiltonian has non-finite entries".into(),
        ));
    }
    Ok(h)
}

/// Block-diagonal check used by tests: every term except the drive commutes
/// with the Rydberg number, so `H(φ) = D H(0) D†` with `D = e^{−iφN}`.
pub fn gauge_rotate(h0: &CMat, number: &[f64], phase: f64) -> CMat {
    let n = h0.nrows();
    let mut h = h0.clone();
    for b in 0..n {
        for a in 0..n {
            if h[(a, b)] != ZERO {
                h[(a, b)] *= C64::from_polar(1.0, -phase * (number[a] - number[b]));
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::SpeciesTable;
    use crate::linalg::{is_hermitian, rel_diff};
    use crate::units::{mhz, to_hz};

    fn model() -> GateModel {
        let data = SpeciesTable::bundled().pair_data("Rb87", 100).unwrap();
        GateModel::from_ratio(data, mhz(10.0), 2.1).unwrap()
    }

    fn z_model(noise: NoiseConfig, m: usize) -> GateModel {
        let base = model();
        let motion = base.motion_for_axes(&noise.motional_axes(Axis::Z), |_| m);
        base.with_noise(noise).with_motion(motion)
    }

    #[test]
    fn drive_matrix_element() {
        let h = drive_term(&model(), 0.0);
        let g = internal_index(Level::Zero, Level::Zero);
        let r = internal_index(Level::R0, Level::Zero);
        assert!((h[(g, r)] - C64::new(mhz(10.0) / 2.0, 0.0)).norm() < 1e-6);
        assert!(is_hermitian(&h, 1e-15));
    }

    #[test]
    fn drive_phase_is_a_gauge_transformation() {
        let m = model();
        let h0 = drive_term(&m, 0.0);
        let h1 = drive_term(&m, std::f64::consts::FRAC_PI_2);
        // explicit conjugation by e^{i(π/2)N}
        let n = m.rydberg_number();
        let u = CMat::from_diagonal(&crate::linalg::CVec::from_iterator(
            16,
            n.iter()
                .map(|&k| C64::from_polar(1.0, std::f64::consts::FRAC_PI_2 * k)),
        ));
        let conj = u.adjoint() * &h0 * &u;
        assert!(rel_diff(&conj, &h1) < 1e-14);
        assert!(rel_diff(&gauge_rotate(&h0, &n, 0.3), &drive_term(&m, 0.3)) < 1e-14);
    }

    #[test]
    fn exchange_spectrum() {
        let m = model();
        let h = exchange_term(&m).unwrap();
        let j = m.exchange_coupling();
        let a = internal_index(Level::R0, Level::R1);
        let b = internal_index(Level::R1, Level::R0);
        assert_eq!(h[(a, b)].re, j);
        let (vals, _) = crate::linalg::eigh(&h);
        assert!((vals[0] + j).abs() < 1e-6 * j);
        assert!((vals[15] - j).abs() < 1e-6 * j);
        assert_eq!(vals.iter().filter(|v| v.abs() < 1e-9 * j).count(), 14);
    }

    #[test]
    fn vdw_diagonal() {
        let m = model().with_noise(NoiseConfig::vdw_only());
        let h = vdw_term(&m).unwrap();
        let k = internal_index(Level::R0, Level::R0);
        let v00 = m.data.c6_00 / m.geom.r.powi(6);
        assert_eq!(h[(k, k)].re, v00);
        assert!((to_hz(v00) / 9.6e5 - 1.0).abs() < 0.03);
        let k01 = internal_index(Level::R0, Level::R1);
        let k10 = internal_index(Level::R1, Level::R0);
        assert_eq!(h[(k01, k01)], h[(k10, k10)]);
    }

    #[test]
    fn decay_elements() {
        let m = model();
        let h = decay_term(&m);
        let k = internal_index(Level::R0, Level::Zero);
        assert_eq!(h[(k, k)], C64::new(0.0, -0.5 * m.data.gamma0));
        let k = internal_index(Level::R0, Level::R1);
        assert!((h[(k, k)] - C64::new(0.0, -0.5 * (m.data.gamma0 + m.data.gamma1))).norm() < 1e-12);
        assert!((to_hz(m.data.gamma0 + m.data.gamma1) - 1320.0).abs() < 1.0);
    }

    #[test]
    fn noiseless_assembly_is_hermitian_and_conserves_parity_blocks() {
        let m = model();
        let h = assemble(&m, 0.7).unwrap();
        assert!(is_hermitian(&h, 1e-13));
        let n = m.rydberg_number();
        for a in 0..16 {
            for b in 0..16 {
                if h[(a, b)].norm() > 0.0 && a != b {
                    let dn = (n[a] - n[b]).abs();
                    // drive changes N by one; exchange preserves it
                    assert!(dn == 1.0 || (n[a] == 2.0 && n[b] == 2.0));
                }
            }
        }
    }

    #[test]
    fn zero_coupling_gives_independent_rabi_problems() {
        let mut m = model();
        m.data.c3 = 1e-300;
        let h = assemble(&m, 0.0).unwrap();
        let single = {
            let mut s = CMat::zeros(4, 4);
            s[(0, 2)] = C64::new(m.omega_max / 2.0, 0.0);
            s[(2, 0)] = s[(0, 2)];
            s[(1, 3)] = s[(0, 2)];
            s[(3, 1)] = s[(0, 2)];
            s
        };
        let expect = on_atom(&single, Atom::A) + on_atom(&single, Atom::B);
        assert!(rel_diff(&h, &expect) < 1e-12);
    }

    #[test]
    fn decay_spectrum_lies_in_lower_half_plane() {
        let m = model().with_noise(NoiseConfig {
            decay: true,
            ..NoiseConfig::none()
        });
        let h = assemble(&m, 0.2).unwrap();
        assert!(!is_hermitian(&h, 1e-13));
        // the anti-Hermitian part is negative semidefinite
        let skew = (&h - h.adjoint()) * C64::new(0.0, -0.5);
        let (vals, _) = crate::linalg::eigh(&skew);
        assert!(vals.iter().all(|&v| v <= 1e-9));
        assert!(vals[0] < 0.0);
    }

    #[test]
    fn motion_terms_need_their_modes() {
        let noise = NoiseConfig {
            exchange_motion_1z: true,
            ..NoiseConfig::none()
        };
        let bare = model().with_noise(noise);
        assert!(matches!(assemble(&bare, 0.0), Err(Error::Config(_))));
        let noise = NoiseConfig {
            recoil_coupling: true,
            ..NoiseConfig::none()
        };
        let wrong_axis = {
            let m = model();
            let motion = m.motion_for_axes(&[Axis::X], |_| 3);
            m.with_noise(noise).with_motion(motion)
        };
        assert!(matches!(wrong_axis.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn every_motional_hamiltonian_without_decay_is_hermitian() {
        let noise = NoiseConfig {
            vdw: true,
            vdw_motion_1z: true,
            exchange_motion_1z: true,
            exchange_motion_2z: true,
            exchange_motion_2x: true,
            exchange_motion_2y: true,
            recoil_detuning: true,
            recoil_coupling: true,
            decay: false,
            detuning_compensation: false,
        };
        let m = z_model(noise, 2);
        assert_eq!(m.dim(), 16 * 64);
        let h = assemble(&m, 1.1).unwrap();
        assert!(is_hermitian(&h, 1e-13));
        // every non-drive term commutes with the Rydberg number
        let h0 = assemble(&m, 0.0).unwrap();
        assert!(rel_diff(&gauge_rotate(&h0, &m.rydberg_number(), 1.1), &h) < 1e-13);
    }

    #[test]
    fn compensation_removes_detuning() {
        let noise = NoiseConfig {
            recoil_detuning: true,
            detuning_compensation: true,
            ..NoiseConfig::none()
        };
        let m = z_model(noise, 3);
        assert!(crate::linalg::frobenius(&recoil_terms(&m).unwrap()) == 0.0);
    }

    #[test]
    fn kinetic_energy_moments() {
        let noise = NoiseConfig {
            exchange_motion_1z: true,
            ..NoiseConfig::none()
        };
        let m = z_model(noise, 3);
        let k = kinetic_term(&m).unwrap();
        let w = m.geom.omega_z;
        // ground state of both modes: ħω/4 each
        assert!((k[(0, 0)].re / (0.5 * w) - 1.0).abs() < 1e-12);
        // one quantum in the second mode (index 1): ħω/4 + 3ħω/4
        assert!((k[(1, 1)].re / w - 1.0).abs() < 1e-12);
        assert!(is_hermitian(&k, 1e-14));
    }
}
