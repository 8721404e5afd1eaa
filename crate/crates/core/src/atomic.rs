//! Species constants, power-law scaling in the principal quantum number,
//! and the closed-form geometric and recoil parameters derived from them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{self, HBAR};

/// Environment variable that overrides the bundled species table.
pub const DATA_ENV: &str = "RYDGATE_DATA";

const BUNDLED_SPECIES: &str = include_str!("../data/species.json");

/// Lower and upper principal quantum numbers accepted by [`RydbergPairData::scale_to_n`].
pub const N_RANGE: (u32, u32) = (30, 150);

/// Atomic constants for a Rydberg pair at principal quantum number `n`.
///
/// Coefficients and rates are stored as magnitudes in SI units: C3 in
/// rad/s·m³, C6 in rad/s·m⁶, decay rates in rad/s, mass in kg and
/// wavelengths in m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RydbergPairData {
    pub n: u32,
    pub c3: f64,
    pub c6_00: f64,
    pub c6_01: f64,
    pub c6_11: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub mass: f64,
    pub lambda0: f64,
    pub lambda1: f64,
}

/// One of the two excitation lasers, driving |j⟩ ↔ |r_j⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Laser {
    Zero,
    One,
}

/// Cartesian trap axes. `z` is the interatomic (quantization) axis and `x`
/// the axial tweezer direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Propagation direction of the excitation lasers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaserAxis {
    X,
    Z,
}

impl LaserAxis {
    pub fn axis(self) -> Axis {
        match self {
            LaserAxis::X => Axis::X,
            LaserAxis::Z => Axis::Z,
        }
    }
}

impl std::str::FromStr for LaserAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(LaserAxis::X),
            "z" => Ok(LaserAxis::Z),
            other => Err(Error::Config(format!(
                "laser axis must be `x` or `z`, got `{other}`"
            ))),
        }
    }
}

/// Van der Waals shifts of the doubly excited pair states, rad/s.
/// `V_10 = V_01`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VdwStrengths {
    pub v00: f64,
    pub v01: f64,
    pub v11: f64,
}

impl VdwStrengths {
    /// Shift of |r_i r_j⟩.
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.v00,
            (1, 1) => self.v11,
            _ => self.v01,
        }
    }
}

fn check_distance(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "interatomic distance must be positive, got {r} m"
        )))
    }
}

impl RydbergPairData {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("C3", self.c3),
            ("C6_00", self.c6_00),
            ("C6_01", self.c6_01),
            ("C6_11", self.c6_11),
            ("Gamma0", self.gamma0),
            ("Gamma1", self.gamma1),
            ("mass", self.mass),
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.n < N_RANGE.0 {
            return Err(Error::Domain(format!(
                "principal quantum number must be >= {}, got {}",
                N_RANGE.0, self.n
            )));
        }
        Ok(())
    }

    /// Resonant exchange coupling `J = C3/R³` on the interatomic axis (rad/s).
    pub fn dipole_coupling(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.c3.abs() / r.powi(3))
    }

    /// Pair-state vdW shifts `V_ij = C6_ij/R⁶` (rad/s).
    pub fn vdw_strengths(&self, r: f64) -> Result<VdwStrengths> {
        check_distance(r)?;
        let r6 = r.powi(6);
        Ok(VdwStrengths {
            v00: self.c6_00 / r6,
            v01: self.c6_01 / r6,
            v11: self.c6_11 / r6,
        })
    }

    /// Rescale to another principal quantum number with the asymptotic
    /// laws C3 ∼ n⁴, C6 ∼ n¹¹, Γ ∼ n⁻³. Mass and wavelengths carry over.
    pub fn scale_to_n(&self, n_target: u32) -> Result<Self> {
        if !(N_RANGE.0..=N_RANGE.1).contains(&n_target) {
            return Err(Error::Domain(format!(
                "n must lie in [{}, {}], got {n_target}",
                N_RANGE.0, N_RANGE.1
            )));
        }
        if n_target == self.n {
            return Ok(*self);
        }
        let s = n_target as f64 / self.n as f64;
        let s4 = s.powi(4);
        let s11 = s.powi(11);
        let s3 = s.powi(3);
        Ok(Self {
            n: n_target,
            c3: self.c3 * s4,
            c6_00: self.c6_00 * s11,
            c6_01: self.c6_01 * s11,
            c6_11: self.c6_11 * s11,
            gamma0: self.gamma0 / s3,
            gamma1: self.gamma1 / s3,
            ..*self
        })
    }

    pub fn wavelength(&self, laser: Laser) -> f64 {
        match laser {
            Laser::Zero => self.lambda0,
            Laser::One => self.lambda1,
        }
    }

    pub fn decay_rate(&self, laser: Laser) -> f64 {
        match laser {
            Laser::Zero => self.gamma0,
            Laser::One => self.gamma1,
        }
    }

    /// Lamb–Dicke parameter `η_j = (2π/λ_j)·√(ħ/(2mω))`.
    pub fn lamb_dicke(&self, omega_trap: f64, laser: Laser) -> Result<f64> {
        if !(omega_trap.is_finite() && omega_trap > 0.0) {
            return Err(Error::Domain(format!(
                "trap frequency must be positive, got {omega_trap} rad/s"
            )));
        }
        let k = 2.0 * PI / self.wavelength(laser);
        Ok(k * (HBAR / (2.0 * self.mass * omega_trap)).sqrt())
    }

    /// Single-photon recoil shift `2π²ħ/(mλ_j²)` (rad/s).
    pub fn recoil_detuning(&self, laser: Laser) -> f64 {
        let lambda = self.wavelength(laser);
        2.0 * PI * PI * HBAR / (self.mass * lambda * lambda)
    }
}

/// Distance at which `Ω_max/J` equals `ratio`: `R = (C3·ratio/Ω_max)^{1/3}`.
pub fn range_for_ratio(omega_max: f64, ratio: f64, data: &RydbergPairData) -> Result<f64> {
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(Error::Domain(format!(
            "Rabi frequency must be positive, got {omega_max} rad/s"
        )));
    }
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::Domain(format!(
            "Omega_max/J must be positive, got {ratio}"
        )));
    }
    Ok((data.c3.abs() * ratio / omega_max).cbrt())
}

/// Trap, temperature and laser geometry. Distances in m, frequencies in rad/s,
/// temperature in K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub r: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
    pub t_temp: f64,
    pub laser_axis: LaserAxis,
}

impl GeometryConfig {
    /// The operating point used throughout the error budget: ω_z/2π = ω_y/2π =
    /// 100 kHz, ω_x = ω_z/5, 1 µK, lasers along z.
    pub fn reference(r: f64) -> Self {
        Self {
            r,
            omega_x: units::khz(20.0),
            omega_y: units::khz(100.0),
            omega_z: units::khz(100.0),
            t_temp: units::uk(1.0),
            laser_axis: LaserAxis::Z,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_distance(self.r)?;
        for (name, w) in [
            ("omega_x", self.omega_x),
            ("omega_y", self.omega_y),
            ("omega_z", self.omega_z),
        ] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be positive, got {w} rad/s"
                )));
            }
        }
        if !(self.t_temp.is_finite() && self.t_temp >= 0.0) {
            return Err(Error::Domain(format!(
                "temperature must be non-negative, got {} K",
                self.t_temp
            )));
        }
        Ok(())
    }

    pub fn trap_frequency(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.omega_x,
            Axis::Y => self.omega_y,
            Axis::Z => self.omega_z,
        }
    }
}

/// A species-table row in laboratory units (all frequencies divided by 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeciesEntry {
    #[serde(rename = "C3_GHz_um3")]
    pub c3_ghz_um3: f64,
    #[serde(rename = "C6_00_GHz_um6")]
    pub c6_00_ghz_um6: f64,
    #[serde(rename = "C6_01_GHz_um6")]
    pub c6_01_ghz_um6: f64,
    #[serde(rename = "C6_11_GHz_um6")]
    pub c6_11_ghz_um6: f64,
    #[serde(rename = "Gamma0_kHz")]
    pub gamma0_khz: f64,
    #[serde(rename = "Gamma1_kHz")]
    pub gamma1_khz: f64,
    pub mass_kg: f64,
    pub lambda0_nm: f64,
    pub lambda1_nm: f64,
}

impl SpeciesEntry {
    pub fn to_pair_data(&self, n: u32) -> RydbergPairData {
        // GHz·µm³ → rad/s·m³ and GHz·µm⁶ → rad/s·m⁶
        let ghz = units::mhz(1e3);
        RydbergPairData {
            n,
            c3: self.c3_ghz_um3 * ghz * 1e-18,
            c6_00: self.c6_00_ghz_um6 * ghz * 1e-36,
            c6_01: self.c6_01_ghz_um6 * ghz * 1e-36,
            c6_11: self.c6_11_ghz_um6 * ghz * 1e-36,
            gamma0: units::khz(self.gamma0_khz),
            gamma1: units::khz(self.gamma1_khz),
            mass: self.mass_kg,
            lambda0: units::nm(self.lambda0_nm),
            lambda1: units::nm(self.lambda1_nm),
        }
    }

    pub fn from_pair_data(data: &RydbergPairData) -> Self {
        let ghz = units::mhz(1e3);
        Self {
            c3_ghz_um3: data.c3 / ghz * 1e18,
            c6_00_ghz_um6: data.c6_00 / ghz * 1e36,
            c6_01_ghz_um6: data.c6_01 / ghz * 1e36,
            c6_11_ghz_um6: data.c6_11 / ghz * 1e36,
            gamma0_khz: units::to_khz(data.gamma0),
            gamma1_khz: units::to_khz(data.gamma1),
            mass_kg: data.mass,
            lambda0_nm: data.lambda0 * 1e9,
            lambda1_nm: data.lambda1 * 1e9,
        }
    }
}

/// Species table: species name → principal quantum number → constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpeciesTable(pub BTreeMap<String, BTreeMap<String, SpeciesEntry>>);

impl SpeciesTable {
    /// The in-repo ⁸⁷Rb table (n = 50, 75, 100).
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_SPECIES).expect("bundled species table is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self =
            serde_json::from_str(text).map_err(|e| Error::parse("species table", e))?;
        for (species, rows) in &table.0 {
            for key in rows.keys() {
                key.parse::<u32>().map_err(|_| {
                    Error::parse(
                        "species table",
                        format!("{species}: `{key}` is not a principal quantum number"),
                    )
                })?;
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// The table named by `RYDGATE_DATA`, or the bundled one when unset.
    pub fn from_env_or_bundled() -> Result<Self> {
        match std::env::var_os(DATA_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::bundled()),
        }
    }

    pub fn tabulated(&self, species: &str) -> Result<Vec<u32>> {
        let rows = self
            .0
            .get(species)
            .ok_or_else(|| Error::Config(format!("unknown species `{species}`")))?;
        let mut ns: Vec<u32> = rows.keys().filter_map(|k| k.parse().ok()).collect();
        ns.sort_unstable();
        Ok(ns)
    }

    /// Constants at `n`: the tabulated row when present, otherwise power-law
    /// scaled from the nearest tabulated `n`.
    pub fn pair_data(&self, species: &str, n: u32) -> Result<RydbergPairData> {
        let ns = self.tabulated(species)?;
        let rows = &self.0[species];
        if let Some(entry) = rows.get(&n.to_string()) {
            let data = entry.to_pair_data(n);
            data.validate()?;
            return Ok(data);
        }
        let nearest = ns
            .iter()
            .copied()
            .min_by_key(|&m| (m as i64 - n as i64).abs())
            .ok_or_else(|| Error::Config(format!("species `{species}` has no rows")))?;
        let base = rows[&nearest.to_string()].to_pair_data(nearest);
        base.validate()?;
        base.scale_to_n(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{khz, mhz, to_hz, to_mhz, um};

    fn rb(n: u32) -> RydbergPairData {
        SpeciesTable::bundled().pair_data("Rb87", n).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn exchange_coupling_matches_tabulated_values() {
        assert!(rel(to_mhz(rb(100).dipole_coupling(um(20.0)).unwrap()), 4.58) < 2e-3);
        assert!(rel(to_mhz(rb(50).dipole_coupling(um(10.0)).unwrap()), 2.05) < 1e-3);
    }

    #[test]
    fn exchange_coupling_is_linear_in_c3() {
        let d = rb(75);
        let doubled = RydbergPairData {
            c3: 2.0 * d.c3,
            ..d
        };
        let r = um(13.0);
        assert_eq!(
            doubled.dipole_coupling(r).unwrap(),
            2.0 * d.dipole_coupling(r).unwrap()
        );
    }

    #[test]
    fn non_positive_distance_is_rejected() {
        let d = rb(100);
        assert!(matches!(d.dipole_coupling(0.0), Err(Error::Domain(_))));
        assert!(matches!(d.vdw_strengths(-1e-6), Err(Error::Domain(_))));
    }

    #[test]
    fn vdw_ratios_match_tabulated_values() {
        let d = rb(100);
        let r = um(20.0);
        let v = d.vdw_strengths(r).unwrap();
        assert!(rel(v.v00 / d.dipole_coupling(r).unwrap(), 0.19) < 0.02);
        let d = rb(75);
        let r = um(30.0);
        let v = d.vdw_strengths(r).unwrap();
        assert!(rel(v.v11 / d.dipole_coupling(r).unwrap(), 4.6e-4) < 0.02);
    }

    #[test]
    fn vdw_falls_as_sixth_power() {
        let d = rb(100);
        let a = d.vdw_strengths(um(7.0)).unwrap();
        let b = d.vdw_strengths(um(14.0)).unwrap();
        for (x, y) in [(a.v00, b.v00), (a.v01, b.v01), (a.v11, b.v11)] {
            assert!(rel(x / y, 64.0) < 1e-14);
        }
    }

    #[test]
    fn power_law_scaling() {
        let base = rb(50);
        let up = base.scale_to_n(100).unwrap();
        assert!(rel(up.c3, 16.0 * base.c3) < 1e-14);
        // the asymptotic law undershoots the tabulated 36.7 GHz µm³
        let c3_ghz = to_mhz(up.c3 * 1e18) / 1e3;
        assert!(rel(c3_ghz, 32.8) < 1e-3);
        assert!(rel(c3_ghz, 36.7) < 0.15);
        assert_eq!(base.scale_to_n(50).unwrap(), base);
        let two_step = base.scale_to_n(75).unwrap().scale_to_n(100).unwrap();
        assert!(rel(two_step.c6_00, up.c6_00) < 1e-14);
        assert!(rel(two_step.gamma1, up.gamma1) < 1e-14);
        assert!(base.scale_to_n(29).is_err());
        assert!(base.scale_to_n(151).is_err());
    }

    #[test]
    fn untabulated_n_scales_from_nearest_row() {
        let t = SpeciesTable::bundled();
        let d90 = t.pair_data("Rb87", 90).unwrap();
        let expect = rb(100).scale_to_n(90).unwrap();
        assert_eq!(d90, expect);
        assert!(t.pair_data("Cs133", 100).is_err());
    }

    #[test]
    fn range_round_trips_with_coupling() {
        let d = rb(100);
        let omega = mhz(10.0);
        let r = range_for_ratio(omega, 2.1, &d).unwrap();
        assert!(rel(r * 1e6, 19.7) < 0.01, "R = {} µm", r * 1e6);
        let j = d.dipole_coupling(r).unwrap();
        assert!(rel(j * 2.1, omega) < 1e-12);
        let r8 = range_for_ratio(omega, 16.8, &d).unwrap();
        assert!(rel(r8, 2.0 * r) < 1e-14);
    }

    #[test]
    fn lamb_dicke_parameter() {
        let d = rb(100);
        let eta = d.lamb_dicke(khz(100.0), Laser::Zero).unwrap();
        assert!((eta - 0.51).abs() < 0.005, "eta = {eta}");
        let eta4 = d.lamb_dicke(khz(400.0), Laser::Zero).unwrap();
        assert!(rel(eta4, eta / 2.0) < 1e-14);
        let long = RydbergPairData {
            lambda0: 2.0 * d.lambda0,
            ..d
        };
        assert!(rel(long.lamb_dicke(khz(100.0), Laser::Zero).unwrap(), eta / 2.0) < 1e-14);
        assert!(d.lamb_dicke(0.0, Laser::One).is_err());
    }

    #[test]
    fn recoil_shift() {
        let d = rb(100);
        assert!(rel(to_hz(d.recoil_detuning(Laser::Zero)), 2.6e4) < 0.01);
        let d780 = RydbergPairData {
            lambda0: 780e-9,
            ..d
        };
        let f = to_hz(d780.recoil_detuning(Laser::Zero));
        assert!(rel(f, 3.77e3) < 0.01, "{f}");
        let long = RydbergPairData {
            lambda1: 2.0 * d.lambda1,
            ..d
        };
        assert!(
            rel(
                long.recoil_detuning(Laser::One),
                d.recoil_detuning(Laser::One) / 4.0
            ) < 1e-14
        );
    }

    #[test]
    fn species_entry_round_trip() {
        let d = rb(75);
        let e = SpeciesEntry::from_pair_data(&d);
        let back = e.to_pair_data(75);
        assert!(rel(back.c6_11, d.c6_11) < 1e-14);
        assert!(rel(back.gamma0, d.gamma0) < 1e-14);
    }

    #[test]
    fn malformed_tables_are_parse_errors() {
        assert!(matches!(
            SpeciesTable::from_json("{\"Rb87\": {\"abc\": {}}}"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            SpeciesTable::from_json("not json"),
            Err(Error::Parse { .. })
        ));
    }
}
