//! Two-atom internal basis, truncated motional Fock modes and the operators
//! acting on their tensor product.
//!
//! Factor ordering is fixed: atom A internal (4), atom B internal (4), then
//! the motional modes in `MotionalConfig` order. The full index of
//! `|a b; m_1 … m_k⟩` is therefore `(4a + b)·M_tot + μ(m)` with `μ` the
//! row-major multi-index over the modes.

use serde::{Deserialize, Serialize};

use crate::atomic::Axis;
use crate::error::{Error, Result};
use crate::linalg::{kron, CMat, C64, ONE, ZERO};
use crate::units::HBAR;

pub const INTERNAL_DIM: usize = 16;
pub const ATOM_DIM: usize = 4;

/// Internal indices of |00⟩, |01⟩, |10⟩, |11⟩.
pub const COMPUTATIONAL: [usize; 4] = [0, 1, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    A,
    B,
}

impl Atom {
    pub const BOTH: [Atom; 2] = [Atom::A, Atom::B];
}

impl std::fmt::Display for Atom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Atom::A => "A",
            Atom::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Zero,
    One,
    R0,
    R1,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Zero, Level::One, Level::R0, Level::R1];

    pub fn index(self) -> usize {
        match self {
            Level::Zero => 0,
            Level::One => 1,
            Level::R0 => 2,
            Level::R1 => 3,
        }
    }

    pub fn is_rydberg(self) -> bool {
        matches!(self, Level::R0 | Level::R1)
    }

    /// The Rydberg partner |r_j⟩ of qubit level |j⟩.
    pub fn rydberg(j: usize) -> Level {
        if j == 0 {
            Level::R0
        } else {
            Level::R1
        }
    }
}

pub fn internal_index(a: Level, b: Level) -> usize {
    ATOM_DIM * a.index() + b.index()
}

/// Number of Rydberg excitations (0, 1 or 2) in internal basis state `k`.
pub fn rydberg_count(k: usize) -> usize {
    usize::from(k / ATOM_DIM >= 2) + usize::from(k % ATOM_DIM >= 2)
}

/// `|to⟩⟨from|` on a single atom.
pub fn atom_op(to: Level, from: Level) -> CMat {
    let mut m = CMat::zeros(ATOM_DIM, ATOM_DIM);
    m[(to.index(), from.index())] = ONE;
    m
}

/// A single-atom operator lifted to the 16-dimensional internal space.
pub fn on_atom(op: &CMat, atom: Atom) -> CMat {
    let id = CMat::identity(ATOM_DIM, ATOM_DIM);
    match atom {
        Atom::A => kron(op, &id),
        Atom::B => kron(&id, op),
    }
}

/// One harmonic mode of one atom along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub atom: Atom,
    pub axis: Axis,
    pub cutoff: usize,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionalConfig {
    pub modes: Vec<Mode>,
}

impl MotionalConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        let cfg = Self { modes };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.modes.iter().enumerate() {
            if m.cutoff < 1 {
                return Err(Error::Config(format!(
                    "mode {}{} has cutoff {}, need >= 1",
                    m.atom, m.axis, m.cutoff
                )));
            }
            if !(m.omega.is_finite() && m.omega > 0.0) {
                return Err(Error::Config(format!(
                    "mode {}{} frequency must be positive, got {} rad/s",
                    m.atom, m.axis, m.omega
                )));
            }
            if self.modes[..i]
                .iter()
                .any(|o| o.atom == m.atom && o.axis == m.axis)
            {
                return Err(Error::Config(format!(
                    "mode {}{} listed twice",
                    m.atom, m.axis
                )));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.cutoff).collect()
    }

    /// Π M_i (1 when no mode is active).
    pub fn dim(&self) -> usize {
        self.modes.iter().map(|m| m.cutoff).product()
    }

    pub fn find(&self, atom: Atom, axis: Axis) -> Option<usize> {
        self.modes
            .iter()
            .position(|m| m.atom == atom && m.axis == axis)
    }

    pub fn require(&self, atom: Atom, axis: Axis) -> Result<usize> {
        self.find(atom, axis)
            .ok_or_else(|| Error::Config(format!("motional mode {atom}{axis} is not active")))
    }

    /// Decompose a row-major motional index into per-mode occupations.
    pub fn occupations(&self, mut mu: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes.len()];
        for (k, m) in self.modes.iter().enumerate().rev() {
            occ[k] = mu % m.cutoff;
            mu /= m.cutoff;
        }
        occ
    }

    pub fn index_of(&self, occ: &[usize]) -> usize {
        occ.iter()
            .zip(&self.modes)
            .fold(0, |acc, (&o, m)| acc * m.cutoff + o)
    }
}

/// Factor dimensions of the internal × motional product space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductSpace {
    factors: Vec<usize>,
}

impl ProductSpace {
    pub fn new(motion: &MotionalConfig) -> Self {
        let mut factors = vec![ATOM_DIM, ATOM_DIM];
        factors.extend(motion.dims());
        Self { factors }
    }

    pub fn internal_only() -> Self {
        Self {
            factors: vec![ATOM_DIM, ATOM_DIM],
        }
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn motional_dim(&self) -> usize {
        self.factors[2..].iter().product()
    }

    pub fn has_motion(&self) -> bool {
        self.factors.len() > 2
    }

    /// Slot of a motional mode (`0` and `1` are the two atoms).
    pub fn mode_slot(mode_index: usize) -> usize {
        2 + mode_index
    }
}

/// `I ⊗ … ⊗ local ⊗ … ⊗ I` with `local` on factor `slot`.
pub fn embed(local: &CMat, space: &ProductSpace, slot: usize) -> Result<CMat> {
    let f = space.factors();
    if slot >= f.len() {
        return Err(Error::Dimension(format!(
            "slot {slot} out of range for {} factors",
            f.len()
        )));
    }
    let d = f[slot];
    if local.shape() != (d, d) {
        return Err(Error::Dimension(format!(
            "operator is {}x{} but slot {slot} has dimension {d}",
            local.nrows(),
            local.ncols()
        )));
    }
    let left: usize = f[..slot].iter().product();
    let right: usize = f[slot + 1..].iter().product();
    let n = left * d * right;
    let mut out = CMat::zeros(n, n);
    for j in 0..d {
        for i in 0..d {
            let v = local[(i, j)];
            if v == ZERO {
                continue;
            }
            for l in 0..left {
                let row0 = (l * d + i) * right;
                let col0 = (l * d + j) * right;
                for r in 0..right {
                    out[(row0 + r, col0 + r)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Operator on the motional space alone (no internal factors).
pub fn embed_motional(local: &CMat, motion: &MotionalConfig, mode_index: usize) -> Result<CMat> {
    let space = ProductSpace {
        factors: motion.dims(),
    };
    embed(local, &space, mode_index)
}

/// `internal ⊗ motional` on the full space.
pub fn lift(internal: &CMat, motional: &CMat) -> CMat {
    kron(internal, motional)
}

/// `internal ⊗ I_motion`.
pub fn lift_internal(internal: &CMat, motion: &MotionalConfig) -> CMat {
    let m = motion.dim();
    if m == 1 {
        return internal.clone();
    }
    kron(internal, &CMat::identity(m, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Lower,
    Raise,
}

/// Truncated annihilation (`Lower`) or creation operator at cutoff `m`.
pub fn ladder_local(m: usize, which: Ladder) -> CMat {
    let mut a = CMat::zeros(m, m);
    for k in 1..m {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    match which {
        Ladder::Lower => a,
        Ladder::Raise => a.transpose(),
    }
}

/// Ladder operator of an active mode, on the motional space.
pub fn ladder(motion: &MotionalConfig, atom: Atom, axis: Axis, which: Ladder) -> Result<CMat> {
    let k = motion.require(atom, axis)?;
    embed_motional(&ladder_local(motion.modes[k].cutoff, which), motion, k)
}

/// Single-mode `x = √(ħ/2mω)(a + a†)`, in m.
pub fn position_local(m: usize, mass: f64, omega: f64) -> CMat {
    let s = (HBAR / (2.0 * mass * omega)).sqrt();
    (ladder_local(m, Ladder::Lower) + ladder_local(m, Ladder::Raise)) * C64::new(s, 0.0)
}

/// Single-mode `p = i√(mħω/2)(a† − a)`, in kg·m/s.
pub fn momentum_local(m: usize, mass: f64, omega: f64) -> CMat {
    let s = (mass * HBAR * omega / 2.0).sqrt();
    (ladder_local(m, Ladder::Raise) - ladder_local(m, Ladder::Lower)) * C64::new(0.0, s)
}

pub fn position(motion: &MotionalConfig, atom: Atom, axis: Axis, mass: f64) -> Result<CMat> {
    let k = motion.require(atom, axis)?;
    let mode = motion.modes[k];
    embed_motional(&position_local(mode.cutoff, mass, mode.omega), motion, k)
}

pub fn momentum(motion: &MotionalConfig, atom: Atom, axis: Axis, mass: f64) -> Result<CMat> {
    let k = motion.require(atom, axis)?;
    let mode = motion.modes[k];
    embed_motional(&momentum_local(mode.cutoff, mass, mode.omega), motion, k)
}

/// Σ_j |r_j⟩⟨r_j| of one atom on the 16-dimensional internal space.
pub fn rydberg_projector_internal(atom: Atom) -> CMat {
    let p = atom_op(Level::R0, Level::R0) + atom_op(Level::R1, Level::R1);
    on_atom(&p, atom)
}

/// Σ_j |r_j⟩⟨r_j| of one atom on the full space.
pub fn rydberg_projector(motion: &MotionalConfig, atom: Atom) -> CMat {
    lift_internal(&rydberg_projector_internal(atom), motion)
}

/// Reduce a density matrix on the full space to the 16-dimensional internal
/// space by tracing out every motional mode.
pub fn partial_trace_motional(rho: &CMat, space: &ProductSpace) -> Result<CMat> {
    if !space.has_motion() {
        return Err(Error::Dimension(
            "partial trace over motion needs at least one motional mode".into(),
        ));
    }
    let n = space.dim();
    if rho.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "density matrix is {}x{}, space has dimension {n}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let m = space.motional_dim();
    let mut out = CMat::zeros(INTERNAL_DIM, INTERNAL_DIM);
    for j in 0..INTERNAL_DIM {
        for i in 0..INTERNAL_DIM {
            let mut s = ZERO;
            for mu in 0..m {
                s += rho[(i * m + mu, j * m + mu)];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul, rel_diff};
    use crate::units::{khz, MASS_RB87};

    fn mode(atom: Atom, axis: Axis, cutoff: usize) -> Mode {
        Mode {
            atom,
            axis,
            cutoff,
            omega: khz(100.0),
        }
    }

    #[test]
    fn basis_ordering() {
        assert_eq!(internal_index(Level::Zero, Level::One), 1);
        assert_eq!(internal_index(Level::One, Level::Zero), 4);
        assert_eq!(internal_index(Level::R1, Level::R0), 14);
        assert_eq!(rydberg_count(internal_index(Level::R0, Level::One)), 1);
        assert_eq!(rydberg_count(internal_index(Level::R1, Level::R0)), 2);
        for q in COMPUTATIONAL {
            assert_eq!(rydberg_count(q), 0);
        }
    }

    #[test]
    fn embed_identity_is_identity() {
        let motion = MotionalConfig::new(vec![mode(Atom::A, Axis::Z, 3)]).unwrap();
        let space = ProductSpace::new(&motion);
        for slot in 0..3 {
            let d = space.factors()[slot];
            let e = embed(&CMat::identity(d, d), &space, slot).unwrap();
            assert_eq!(e, CMat::identity(48, 48));
        }
    }

    #[test]
    fn embed_checks_dimensions() {
        let space = ProductSpace::internal_only();
        assert!(matches!(
            embed(&CMat::identity(3, 3), &space, 0),
            Err(Error::Dimension(_))
        ));
        assert!(embed(&CMat::identity(4, 4), &space, 2).is_err());
    }

    #[test]
    fn excitation_on_atom_a_hits_only_r0_1() {
        let space = ProductSpace::internal_only();
        let op = embed(&atom_op(Level::R0, Level::Zero), &space, 0).unwrap();
        let src = internal_index(Level::Zero, Level::One);
        for row in 0..16 {
            let expect = if row == internal_index(Level::R0, Level::One) {
                ONE
            } else {
                ZERO
            };
            assert_eq!(op[(row, src)], expect);
        }
    }

    #[test]
    fn ladder_operators() {
        let a = ladder_local(2, Ladder::Lower);
        assert_eq!(a[(0, 1)], ONE);
        assert_eq!(a[(1, 0)], ZERO);
        let m = 6;
        let a = ladder_local(m, Ladder::Lower);
        let ad = ladder_local(m, Ladder::Raise);
        let num = matmul(&ad, &a);
        for k in 0..m {
            assert!((num[(k, k)].re - k as f64).abs() < 1e-14);
        }
        // [a, a†] = I − M|M−1⟩⟨M−1|
        let comm = matmul(&a, &ad) - matmul(&ad, &a);
        let mut expect = CMat::identity(m, m);
        expect[(m - 1, m - 1)] = C64::new(1.0 - m as f64, 0.0);
        assert!(rel_diff(&comm, &expect) < 1e-14);
    }

    #[test]
    fn ground_state_position_variance() {
        let omega = khz(100.0);
        let x = position_local(5, MASS_RB87, omega);
        let x2 = matmul(&x, &x);
        let expect = HBAR / (2.0 * MASS_RB87 * omega);
        assert!((x2[(0, 0)].re / expect - 1.0).abs() < 1e-12);
        // ≈ (24 nm)²
        assert!((expect.sqrt() * 1e9 - 24.1).abs() < 0.1);
    }

    #[test]
    fn inactive_mode_is_rejected() {
        let motion = MotionalConfig::new(vec![mode(Atom::A, Axis::Z, 3)]).unwrap();
        assert!(ladder(&motion, Atom::B, Axis::Z, Ladder::Lower).is_err());
        assert!(ladder(&motion, Atom::A, Axis::X, Ladder::Raise).is_err());
        assert!(MotionalConfig::new(vec![mode(Atom::A, Axis::Z, 0)]).is_err());
        assert!(
            MotionalConfig::new(vec![mode(Atom::A, Axis::Z, 2), mode(Atom::A, Axis::Z, 3)])
                .is_err()
        );
    }

    #[test]
    fn rydberg_projector_action_and_trace() {
        let motion = MotionalConfig::new(vec![mode(Atom::B, Axis::Z, 3)]).unwrap();
        let p = rydberg_projector(&motion, Atom::A);
        let m = motion.dim();
        let ground = internal_index(Level::Zero, Level::Zero) * m;
        assert!(p.column(ground).iter().all(|z| *z == ZERO));
        let r01 = internal_index(Level::R0, Level::One) * m + 2;
        assert_eq!(p[(r01, r01)], ONE);
        let tr: C64 = p.diagonal().iter().sum();
        assert_eq!(tr.re, 2.0 * (48.0 / 4.0));
    }

    #[test]
    fn occupation_index_round_trip() {
        let motion = MotionalConfig::new(vec![
            mode(Atom::A, Axis::Z, 3),
            mode(Atom::B, Axis::Z, 4),
            mode(Atom::A, Axis::X, 2),
        ])
        .unwrap();
        for mu in 0..motion.dim() {
            assert_eq!(motion.index_of(&motion.occupations(mu)), mu);
        }
        assert_eq!(motion.occupations(1 * 8 + 3 * 2 + 1), vec![1, 3, 1]);
    }

    #[test]
    fn partial_trace_of_entangled_pair() {
        // (|00⟩|0⟩ + |01⟩|1⟩)/√2 on internal ⊗ one qubit-sized mode
        let motion = MotionalConfig::new(vec![mode(Atom::A, Axis::Z, 2)]).unwrap();
        let space = ProductSpace::new(&motion);
        let mut psi = crate::linalg::CVec::zeros(32);
        let s = C64::new(0.5f64.sqrt(), 0.0);
        psi[0] = s;
        psi[2 + 1] = s;
        let rho = &psi * psi.adjoint();
        let red = partial_trace_motional(&rho, &space).unwrap();
        assert!((red[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((red[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(red[(0, 1)].norm() < 1e-15);
        assert!(
            partial_trace_motional(&CMat::identity(16, 16), &ProductSpace::internal_only())
                .is_err()
        );
    }
}
