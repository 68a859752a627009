//! Molecules, gratings and the molecule-light interaction parameters.
//!
//! The standing light wave imprints the eikonal phase `φ(x) = φ₀ sin²(πx/d)`
//! and a position-dependent mean number of absorbed photons
//! `n̄(x) = n₀ sin²(πx/d)`. Together with the Talbot parameter `ξ = L/L_T`
//! these three numbers are all the closed-form theory needs.

use std::f64::consts::PI;

use crate::constants::{a3_to_m3, amu_to_kg, C, H, HBAR};
use crate::error::{Error, Result};

fn require_positive(what: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be positive and finite, got {value}")))
    }
}

fn require_nonnegative(what: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be nonnegative and finite, got {value}")))
    }
}

/// A molecular species. All fields are SI.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Real part of the optical polarizability at the laser frequency, volume
    /// convention (m³). `α_SI = 4πε₀ · alpha_opt`.
    pub alpha_opt: f64,
    /// Absorption cross section at the laser frequency (m²).
    pub sigma_abs: f64,
}

impl Molecule {
    pub fn new(name: impl Into<String>, mass: f64, alpha_opt: f64, sigma_abs: f64) -> Result<Self> {
        require_positive("mass", mass)?;
        require_nonnegative("alpha_opt", alpha_opt)?;
        require_nonnegative("sigma_abs", sigma_abs)?;
        Ok(Self { name: name.into(), mass, alpha_opt, sigma_abs })
    }

    /// Build from laboratory units: mass in amu, polarizability in Å³,
    /// cross section in m².
    pub fn from_lab_units(name: impl Into<String>, mass_amu: f64, alpha_a3: f64, sigma_abs_m2: f64) -> Result<Self> {
        Self::new(name, amu_to_kg(mass_amu), a3_to_m3(alpha_a3), sigma_abs_m2)
    }

    pub fn with_parameters(&self, alpha_opt: f64, sigma_abs: f64) -> Result<Self> {
        Self::new(self.name.clone(), self.mass, alpha_opt, sigma_abs)
    }
}

/// Retro-reflected Gaussian laser beam forming the optical phase grating.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserGrating {
    /// m
    pub wavelength: f64,
    /// W
    pub power: f64,
    /// Vertical waist (m). Enters only through φ₀ and n₀.
    pub waist_y: f64,
    /// Waist along the molecular beam (m); the effective grating thickness.
    pub waist_z: f64,
}

impl LaserGrating {
    pub fn new(wavelength: f64, power: f64, waist_y: f64, waist_z: f64) -> Result<Self> {
        require_positive("wavelength", wavelength)?;
        require_nonnegative("power", power)?;
        require_positive("waist_y", waist_y)?;
        require_positive("waist_z", waist_z)?;
        Ok(Self { wavelength, power, waist_y, waist_z })
    }

    /// Grating period of the standing wave, half the laser wavelength.
    pub fn period(&self) -> f64 {
        self.wavelength / 2.0
    }

    pub fn with_power(&self, power: f64) -> Self {
        Self { power, ..self.clone() }
    }

    /// Time-averaged standing-wave intensity (W/m²) at `(x, y, z)`.
    pub fn intensity(&self, x: f64, y: f64, z: f64) -> f64 {
        let d = self.period();
        8.0 * self.power / (PI * self.waist_y * self.waist_z)
            * (-2.0 * y * y / (self.waist_y * self.waist_y) - 2.0 * z * z / (self.waist_z * self.waist_z)).exp()
            * (PI * x / d).sin().powi(2)
    }
}

/// A material (absorptive) slit grating.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialGrating {
    /// m
    pub period: f64,
    /// Slit width over period.
    pub open_fraction: f64,
    /// Wall thickness along the beam (m); only the yaw tolerance uses it.
    pub wall_thickness: f64,
}

impl MaterialGrating {
    pub fn new(period: f64, open_fraction: f64, wall_thickness: f64) -> Result<Self> {
        require_positive("grating period", period)?;
        if !(open_fraction > 0.0 && open_fraction < 1.0) {
            return Err(Error::domain(format!("open fraction must lie in (0, 1), got {open_fraction}")));
        }
        require_nonnegative("wall thickness", wall_thickness)?;
        Ok(Self { period, open_fraction, wall_thickness })
    }

    pub fn slit_width(&self) -> f64 {
        self.open_fraction * self.period
    }
}

/// Three-grating geometry with equal grating separations `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferometer {
    /// Grating separation G1-G2 = G2-G3 (m).
    pub separation: f64,
    /// Source slit to G1 (m).
    pub source_distance: f64,
    /// G3 to detector slit (m).
    pub detector_distance: f64,
    /// Height of the first (source) slit (m).
    pub source_slit_height: f64,
    /// Height of the detector slit (m).
    pub detector_slit_height: f64,
    /// Number of illuminated grating openings.
    pub illuminated_slits: u32,
    pub g1: MaterialGrating,
    pub g3: MaterialGrating,
    pub laser: LaserGrating,
}

impl Interferometer {
    pub fn validate(&self) -> Result<()> {
        require_positive("grating separation", self.separation)?;
        require_positive("source distance", self.source_distance)?;
        require_positive("detector distance", self.detector_distance)?;
        require_positive("source slit height", self.source_slit_height)?;
        require_positive("detector slit height", self.detector_slit_height)?;
        if self.illuminated_slits == 0 {
            return Err(Error::domain("at least one grating opening must be illuminated"));
        }
        let d = self.laser.period();
        for (name, g) in [("G1", &self.g1), ("G3", &self.g3)] {
            if ((g.period - d) / d).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "{name} period {} m differs from the light grating period {d} m",
                    g.period
                )));
            }
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.laser.period()
    }

    pub fn with_power(&self, power: f64) -> Self {
        Self { laser: self.laser.with_power(power), ..self.clone() }
    }

    pub fn with_waist_y(&self, waist_y: f64) -> Self {
        Self { laser: LaserGrating { waist_y, ..self.laser.clone() }, ..self.clone() }
    }

    /// Interaction parameters for a molecule crossing at speed `v_z`.
    pub fn interaction(&self, molecule: &Molecule, v_z: f64) -> Result<InteractionParams> {
        InteractionParams::new(
            phase_amplitude(molecule, &self.laser, v_z)?,
            absorption_amplitude(molecule, &self.laser, v_z)?,
            self.separation / talbot_length(molecule, v_z, self.period())?,
        )
    }
}

/// `(φ₀, n₀, ξ)`: maximal eikonal phase, maximal mean absorbed photon number,
/// and the Talbot parameter `L/L_T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionParams {
    pub phi0: f64,
    pub n0: f64,
    pub xi: f64,
}

impl InteractionParams {
    pub fn new(phi0: f64, n0: f64, xi: f64) -> Result<Self> {
        require_nonnegative("phi0", phi0)?;
        require_nonnegative("n0", n0)?;
        require_positive("Talbot parameter", xi)?;
        Ok(Self { phi0, n0, xi })
    }
}

/// `λ_dB = h / (m v_z)`.
pub fn de_broglie_wavelength(molecule: &Molecule, v_z: f64) -> Result<f64> {
    require_positive("velocity", v_z)?;
    Ok(H / (molecule.mass * v_z))
}

/// `L_T = d² / λ_dB = d² m v_z / h`. The classical description uses the same
/// length, so the quantum and classical curves share the abscissa.
pub fn talbot_length(molecule: &Molecule, v_z: f64, period: f64) -> Result<f64> {
    require_positive("grating period", period)?;
    Ok(period * period / de_broglie_wavelength(molecule, v_z)?)
}

/// `φ₀ = 8√(2π) α P / (ħ c w_y v_z)`.
pub fn phase_amplitude(molecule: &Molecule, laser: &LaserGrating, v_z: f64) -> Result<f64> {
    require_positive("velocity", v_z)?;
    require_positive("waist_y", laser.waist_y)?;
    Ok(8.0 * (2.0 * PI).sqrt() * molecule.alpha_opt * laser.power / (HBAR * C * laser.waist_y * v_z))
}

/// `n₀ = 8/√(2π) · σ λ_L P / (h c w_y v_z)`.
pub fn absorption_amplitude(molecule: &Molecule, laser: &LaserGrating, v_z: f64) -> Result<f64> {
    require_positive("velocity", v_z)?;
    require_positive("waist_y", laser.waist_y)?;
    Ok(8.0 / (2.0 * PI).sqrt() * molecule.sigma_abs * laser.wavelength * laser.power
        / (H * C * laser.waist_y * v_z))
}

/// `φ(x) = φ₀ sin²(πx/d)`.
pub fn eikonal_phase(x: f64, phi0: f64, period: f64) -> f64 {
    phi0 * (PI * x / period).sin().powi(2)
}

/// Classical transverse momentum kick `Q(x) = (πħ/d) φ₀ sin(2πx/d)`.
///
/// Equals `ħ dφ/dx`: the dipole potential is attractive, so molecules are
/// pushed towards the antinodes where the phase is largest.
pub fn classical_kick(x: f64, phi0: f64, period: f64) -> f64 {
    PI * HBAR / period * phi0 * (2.0 * PI * x / period).sin()
}

/// Measured species from the fullerene power scans, with the best-fit optical
/// parameters as central values.
pub mod presets {
    use super::{Interferometer, LaserGrating, MaterialGrating, Molecule};
    use crate::constants::{MM, NM, UM};

    pub const C60_MEAN_VELOCITY: f64 = 202.0;
    pub const C60_REL_FWHM: f64 = 0.27;
    pub const C70_MEAN_VELOCITY: f64 = 194.0;
    pub const C70_REL_FWHM: f64 = 0.25;

    pub fn c60() -> Molecule {
        Molecule::from_lab_units("C60", 720.0, 87.1, 2.8e-22).expect("valid preset")
    }

    pub fn c70() -> Molecule {
        Molecule::from_lab_units("C70", 840.0, 114.2, 24.9e-22).expect("valid preset")
    }

    /// The 532 nm interferometer: L = 105 mm, 266 nm gratings with 42% open
    /// fraction, 900 µm vertical laser waist and 20 µm waist along the beam.
    pub fn interferometer(power: f64) -> Interferometer {
        let d = 266.0 * NM;
        let g = MaterialGrating::new(d, 0.42, 190.0 * NM).expect("valid preset");
        Interferometer {
            separation: 105.0 * MM,
            source_distance: 1500.0 * MM,
            detector_distance: 250.0 * MM,
            source_slit_height: 150.0 * UM,
            detector_slit_height: 200.0 * UM,
            illuminated_slits: 4000,
            g1: g.clone(),
            g3: g,
            laser: LaserGrating::new(532.0 * NM, power, 900.0 * UM, 20.0 * UM).expect("valid preset"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{MM, NM, UM};
    use approx::assert_relative_eq;

    fn laser(power: f64) -> LaserGrating {
        LaserGrating::new(532.0 * NM, power, 900.0 * UM, 20.0 * UM).unwrap()
    }

    #[test]
    fn de_broglie_c60() {
        let c60 = Molecule::from_lab_units("C60", 720.0, 87.1, 2.8e-22).unwrap();
        // h / (720 · 1.66053906660e-27 kg · 97 m/s)
        let expect = 6.626_070_15e-34 / (720.0 * 1.660_539_066_60e-27 * 97.0);
        let got = de_broglie_wavelength(&c60, 97.0).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-14);
        assert_relative_eq!(got, 5.714e-12, max_relative = 1e-3);
    }

    #[test]
    fn de_broglie_scales_inversely_with_mass() {
        let a = Molecule::from_lab_units("a", 500.0, 0.0, 0.0).unwrap();
        let b = Molecule::from_lab_units("b", 1000.0, 0.0, 0.0).unwrap();
        let la = de_broglie_wavelength(&a, 150.0).unwrap();
        let lb = de_broglie_wavelength(&b, 150.0).unwrap();
        assert_relative_eq!(la / lb, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn nonpositive_velocity_is_domain_error() {
        let c60 = presets::c60();
        assert!(matches!(de_broglie_wavelength(&c60, 0.0), Err(Error::Domain(_))));
        assert!(matches!(de_broglie_wavelength(&c60, -3.0), Err(Error::Domain(_))));
        assert!(phase_amplitude(&c60, &laser(1.0), 0.0).is_err());
        assert!(absorption_amplitude(&c60, &laser(1.0), -1.0).is_err());
    }

    #[test]
    fn talbot_length_anchor_and_scaling() {
        let c60 = presets::c60();
        let lt = talbot_length(&c60, 97.0, 266.0 * NM).unwrap();
        assert_relative_eq!(lt, 1.238e-2, max_relative = 1e-2);
        assert_relative_eq!(105.0 * MM / lt, 8.5, max_relative = 1e-2);
        let lt2 = talbot_length(&c60, 97.0, 532.0 * NM).unwrap();
        assert_relative_eq!(lt2 / lt, 4.0, max_relative = 1e-14);
    }

    #[test]
    fn talbot_length_c70_hand_evaluation() {
        let c70 = presets::c70();
        let d = 266e-9;
        let expect = d * d * 840.0 * 1.660_539_066_60e-27 * 194.0 / 6.626_070_15e-34;
        assert_relative_eq!(talbot_length(&c70, 194.0, d).unwrap(), expect, max_relative = 1e-14);
    }

    #[test]
    fn phase_amplitude_example() {
        let m = Molecule::from_lab_units("m", 720.0, 87.1, 0.0).unwrap();
        let expect = 8.0 * (2.0 * PI).sqrt() * 87.1e-30 * 1.0 / (1.054_571_817e-34 * 299_792_458.0 * 900e-6 * 100.0);
        let got = phase_amplitude(&m, &laser(1.0), 100.0).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-9);
        assert_relative_eq!(got, 0.614, max_relative = 2e-3);
        assert_eq!(phase_amplitude(&m, &laser(0.0), 100.0).unwrap(), 0.0);
        let slow = phase_amplitude(&m, &laser(1.0), 200.0).unwrap();
        assert_relative_eq!(slow, got / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn absorption_amplitude_example() {
        let m = Molecule::from_lab_units("m", 720.0, 87.1, 2.8e-22).unwrap();
        let got = absorption_amplitude(&m, &laser(1.0), 100.0).unwrap();
        let expect = 8.0 / (2.0 * PI).sqrt() * 2.8e-22 * 532e-9 / (6.626_070_15e-34 * 299_792_458.0 * 900e-6 * 100.0);
        assert_relative_eq!(got, expect, max_relative = 1e-12);
        assert_relative_eq!(got, 0.0266, max_relative = 5e-3);
        let dark = m.with_parameters(m.alpha_opt, 0.0).unwrap();
        assert_eq!(absorption_amplitude(&dark, &laser(1.0), 100.0).unwrap(), 0.0);
    }

    #[test]
    fn absorption_to_phase_ratio_is_intrinsic() {
        let m = presets::c70();
        let ratio = |p: f64, wy: f64, v: f64| {
            let l = LaserGrating::new(532e-9, p, wy, 20e-6).unwrap();
            absorption_amplitude(&m, &l, v).unwrap() / phase_amplitude(&m, &l, v).unwrap()
        };
        let r0 = ratio(1.0, 900e-6, 100.0);
        assert_relative_eq!(ratio(7.0, 500e-6, 250.0), r0, max_relative = 1e-13);
        assert_relative_eq!(ratio(0.01, 2e-3, 30.0), r0, max_relative = 1e-13);
    }

    #[test]
    fn interaction_parameters_scale_linearly() {
        let m = presets::c60();
        let p1 = phase_amplitude(&m, &laser(1.3), 150.0).unwrap();
        let p2 = phase_amplitude(&m, &laser(2.6), 150.0).unwrap();
        let n1 = absorption_amplitude(&m, &laser(1.3), 150.0).unwrap();
        let n2 = absorption_amplitude(&m, &laser(2.6), 150.0).unwrap();
        assert_relative_eq!(p2, 2.0 * p1, max_relative = 1e-12);
        assert_relative_eq!(n2, 2.0 * n1, max_relative = 1e-12);
        let wide = LaserGrating::new(532e-9, 1.3, 1800e-6, 20e-6).unwrap();
        assert_relative_eq!(phase_amplitude(&m, &wide, 150.0).unwrap(), p1 / 2.0, max_relative = 1e-12);
        assert!(phase_amplitude(&m, &laser(1e4), 1.0).unwrap().is_finite());
    }

    #[test]
    fn eikonal_phase_shape() {
        let d = 266e-9;
        assert_eq!(eikonal_phase(0.0, 3.0, d), 0.0);
        assert_relative_eq!(eikonal_phase(d / 2.0, 3.0, d), 3.0, max_relative = 1e-15);
        for i in 0..50 {
            let x = -d + i as f64 * d / 17.0;
            assert!((eikonal_phase(x + d, 3.0, d) - eikonal_phase(x, 3.0, d)).abs() < 1e-12);
        }
    }

    #[test]
    fn classical_kick_is_scaled_phase_gradient() {
        let d = 266e-9;
        let phi0 = 4.2;
        let h = d * 1e-6;
        let qmax = PI * HBAR / d * phi0;
        assert_eq!(classical_kick(0.0, phi0, d), 0.0);
        assert_relative_eq!(classical_kick(d / 4.0, phi0, d), qmax, max_relative = 1e-14);
        let mut mean = 0.0;
        for i in 0..1000 {
            let x = i as f64 * d / 1000.0;
            let fd = HBAR * (eikonal_phase(x + h, phi0, d) - eikonal_phase(x - h, phi0, d)) / (2.0 * h);
            let q = classical_kick(x, phi0, d);
            assert!((fd - q).abs() <= 1e-6 * qmax, "x = {x}");
            mean += q / 1000.0;
        }
        assert!(mean.abs() < 1e-12 * qmax);
    }

    #[test]
    fn interferometer_rejects_period_mismatch() {
        let laser = laser(1.0);
        let good = MaterialGrating::new(266e-9, 0.42, 190e-9).unwrap();
        let bad = MaterialGrating::new(266.3e-9, 0.42, 190e-9).unwrap();
        let mut ifm = Interferometer {
            separation: 0.105,
            source_distance: 1.5,
            detector_distance: 0.25,
            source_slit_height: 150e-6,
            detector_slit_height: 200e-6,
            illuminated_slits: 4000,
            g1: good.clone(),
            g3: good,
            laser,
        };
        assert!(ifm.validate().is_ok());
        ifm.g3 = bad;
        assert!(matches!(ifm.validate(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn open_fraction_bounds() {
        assert!(MaterialGrating::new(266e-9, 0.0, 0.0).is_err());
        assert!(MaterialGrating::new(266e-9, 1.0, 0.0).is_err());
        assert!(MaterialGrating::new(266e-9, 0.5, 0.0).is_ok());
    }

    #[test]
    fn laser_period_is_half_wavelength() {
        assert_eq!(laser(1.0).period(), 266e-9);
        // Line integral of the intensity over z at the antinode reproduces the
        // 8P/(√(2π) w_y) prefactor behind φ₀ and n₀.
        let l = laser(2.0);
        let n = 4000;
        let span = 8.0 * l.waist_z;
        let dz = 2.0 * span / n as f64;
        let integral: f64 = (0..=n).map(|i| l.intensity(l.period() / 2.0, 0.0, -span + i as f64 * dz) * dz).sum();
        assert_relative_eq!(integral, 8.0 * l.power / ((2.0 * PI).sqrt() * l.waist_y), max_relative = 1e-9);
        let m = presets::c60();
        let v = 120.0;
        let phi0 = 2.0 * PI * m.alpha_opt / C * integral / (v * HBAR);
        assert_relative_eq!(phi0, phase_amplitude(&m, &l, v).unwrap(), max_relative = 1e-9);
    }
}
