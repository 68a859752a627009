//! Strict INI-style run configuration: `[section]` headers, `key = value`
//! lines, `#` or `;` comments. Units are part of the key names. Unknown
//! sections or keys and duplicates are errors; every missing required key is
//! reported in a single message.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use kdtli::alignment::AlignmentState;
use kdtli::constants::{MM, MRAD, NM, UM};
use kdtli::pattern::{VelocityDistribution, DEFAULT_ELL_MAX, DEFAULT_VELOCITY_NODES};
use kdtli::physics::{Interferometer, LaserGrating, MaterialGrating, Molecule};

enum Kind {
    Text,
    Real,
    Count,
}

/// `(section, key, required, kind)`
const SCHEMA: &[(&str, &str, bool, Kind)] = &[
    ("molecule", "name", true, Kind::Text),
    ("molecule", "mass_amu", true, Kind::Real),
    ("molecule", "alpha_A3", true, Kind::Real),
    ("molecule", "sigma_abs_m2", true, Kind::Real),
    ("laser", "wavelength_nm", true, Kind::Real),
    ("laser", "waist_y_um", true, Kind::Real),
    ("laser", "waist_z_um", false, Kind::Real),
    ("geometry", "L_mm", true, Kind::Real),
    ("geometry", "L0_mm", true, Kind::Real),
    ("geometry", "L3_mm", true, Kind::Real),
    ("geometry", "f1", true, Kind::Real),
    ("geometry", "f3", true, Kind::Real),
    ("geometry", "hs_um", true, Kind::Real),
    ("geometry", "hd_um", true, Kind::Real),
    ("geometry", "N_slits", true, Kind::Count),
    ("geometry", "wall_b_nm", true, Kind::Real),
    ("beam", "v_mean_mps", true, Kind::Real),
    ("beam", "dv_over_v_fwhm", true, Kind::Real),
    ("numerics", "ell_max", false, Kind::Count),
    ("numerics", "velocity_nodes", false, Kind::Count),
    ("numerics", "seed", false, Kind::Count),
    ("alignment", "roll_g1_mrad", false, Kind::Real),
    ("alignment", "roll_g3_mrad", false, Kind::Real),
    ("alignment", "pitch_mrad", false, Kind::Real),
    ("alignment", "yaw_g1_mrad", false, Kind::Real),
    ("alignment", "yaw_g2_mrad", false, Kind::Real),
    ("alignment", "yaw_g3_mrad", false, Kind::Real),
    ("alignment", "delta_L_um", false, Kind::Real),
    ("alignment", "beam_height_um", false, Kind::Real),
    ("alignment", "period_g1_nm", false, Kind::Real),
    ("alignment", "period_g2_nm", false, Kind::Real),
    ("alignment", "period_g3_nm", false, Kind::Real),
];

const DEFAULT_WAIST_Z_UM: f64 = 20.0;

#[derive(Debug, Clone, Default)]
struct Values {
    /// `(section, key) -> (value, line)`
    entries: BTreeMap<(String, String), (String, usize)>,
}

impl Values {
    fn text(&self, section: &str, key: &str) -> Option<&str> {
        self.entries.get(&(section.into(), key.into())).map(|(v, _)| v.as_str())
    }

    fn real(&self, section: &str, key: &str) -> Result<Option<f64>> {
        let Some((v, line)) = self.entries.get(&(section.into(), key.into())) else {
            return Ok(None);
        };
        let x: f64 = v.parse().map_err(|_| anyhow!("line {line}: [{section}] {key}: expected a number, got {v:?}"))?;
        if !x.is_finite() {
            bail!("line {line}: [{section}] {key}: value must be finite");
        }
        Ok(Some(x))
    }

    fn count(&self, section: &str, key: &str) -> Result<Option<u64>> {
        let Some((v, line)) = self.entries.get(&(section.into(), key.into())) else {
            return Ok(None);
        };
        v.parse()
            .map(Some)
            .map_err(|_| anyhow!("line {line}: [{section}] {key}: expected a nonnegative integer, got {v:?}"))
    }
}

fn parse(text: &str) -> Result<Values> {
    let mut values = Values::default();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| anyhow!("line {line_no}: unterminated section header"))?
                .trim();
            if !SCHEMA.iter().any(|(s, ..)| *s == name) {
                bail!("line {line_no}: unknown section [{name}]");
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {line_no}: expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let section = section
            .as_deref()
            .ok_or_else(|| anyhow!("line {line_no}: key {key:?} appears before any section"))?;
        if !SCHEMA.iter().any(|(s, k, ..)| *s == section && *k == key) {
            bail!("line {line_no}: unknown key {key:?} in [{section}]");
        }
        if value.is_empty() {
            bail!("line {line_no}: [{section}] {key} has no value");
        }
        let slot = (section.to_string(), key.to_string());
        if let Some((_, first)) = values.entries.get(&slot) {
            bail!("line {line_no}: [{section}] {key} already set on line {first}");
        }
        values.entries.insert(slot, (value.to_string(), line_no));
    }
    let missing: Vec<String> = SCHEMA
        .iter()
        .filter(|(s, k, required, _)| *required && values.text(s, k).is_none())
        .map(|(s, k, ..)| format!("[{s}] {k}"))
        .collect();
    if !missing.is_empty() {
        bail!("missing required keys: {}", missing.join(", "));
    }
    // Type-check everything up front so later accessors cannot fail on syntax.
    for (s, k, _, kind) in SCHEMA {
        match kind {
            Kind::Real => {
                values.real(s, k)?;
            }
            Kind::Count => {
                values.count(s, k)?;
            }
            Kind::Text => {}
        }
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSection {
    /// rad
    pub roll_g1: Option<f64>,
    pub roll_g3: Option<f64>,
    pub pitch: Option<f64>,
    pub yaw: [Option<f64>; 3],
    /// m
    pub delta_l: Option<f64>,
    pub beam_height: Option<f64>,
    pub periods: [Option<f64>; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub molecule: Molecule,
    pub wavelength: f64,
    pub waist_y: f64,
    pub waist_z: f64,
    pub separation: f64,
    pub source_distance: f64,
    pub detector_distance: f64,
    pub f1: f64,
    pub f3: f64,
    pub source_slit_height: f64,
    pub detector_slit_height: f64,
    pub slits: u32,
    pub wall_thickness: f64,
    pub mean_v: f64,
    pub rel_fwhm: f64,
    pub ell_max: usize,
    pub velocity_nodes: usize,
    pub seed: u64,
    pub alignment: AlignmentSection,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let v = parse(text)?;
        // Required keys are present and typed after `parse`.
        let req = |s: &str, k: &str| -> f64 { v.real(s, k).ok().flatten().expect("checked by parse") };
        let opt = |s: &str, k: &str| -> Option<f64> { v.real(s, k).ok().flatten() };
        let count = |s: &str, k: &str| -> Option<u64> { v.count(s, k).ok().flatten() };

        let molecule = Molecule::from_lab_units(
            v.text("molecule", "name").expect("checked by parse"),
            req("molecule", "mass_amu"),
            req("molecule", "alpha_A3"),
            req("molecule", "sigma_abs_m2"),
        )?;
        let slits = count("geometry", "N_slits").expect("checked by parse");
        let slits = u32::try_from(slits).map_err(|_| anyhow!("[geometry] N_slits is too large"))?;
        let ell_max = count("numerics", "ell_max").unwrap_or(DEFAULT_ELL_MAX as u64) as usize;
        if ell_max == 0 {
            bail!("[numerics] ell_max must be at least 1");
        }
        let mrad = |k: &str| opt("alignment", k).map(|x| x * MRAD);
        let config = Self {
            molecule,
            wavelength: req("laser", "wavelength_nm") * NM,
            waist_y: req("laser", "waist_y_um") * UM,
            waist_z: opt("laser", "waist_z_um").unwrap_or(DEFAULT_WAIST_Z_UM) * UM,
            separation: req("geometry", "L_mm") * MM,
            source_distance: req("geometry", "L0_mm") * MM,
            detector_distance: req("geometry", "L3_mm") * MM,
            f1: req("geometry", "f1"),
            f3: req("geometry", "f3"),
            source_slit_height: req("geometry", "hs_um") * UM,
            detector_slit_height: req("geometry", "hd_um") * UM,
            slits,
            wall_thickness: req("geometry", "wall_b_nm") * NM,
            mean_v: req("beam", "v_mean_mps"),
            rel_fwhm: req("beam", "dv_over_v_fwhm"),
            ell_max,
            velocity_nodes: count("numerics", "velocity_nodes").unwrap_or(DEFAULT_VELOCITY_NODES as u64) as usize,
            seed: count("numerics", "seed").unwrap_or(0),
            alignment: AlignmentSection {
                roll_g1: mrad("roll_g1_mrad"),
                roll_g3: mrad("roll_g3_mrad"),
                pitch: mrad("pitch_mrad"),
                yaw: [mrad("yaw_g1_mrad"), mrad("yaw_g2_mrad"), mrad("yaw_g3_mrad")],
                delta_l: opt("alignment", "delta_L_um").map(|x| x * UM),
                beam_height: opt("alignment", "beam_height_um").map(|x| x * UM),
                periods: ["period_g1_nm", "period_g2_nm", "period_g3_nm"].map(|k| opt("alignment", k).map(|x| x * NM)),
            },
        };
        // Surface geometry and distribution errors at load time.
        config.interferometer(0.0)?;
        config.velocities()?;
        Ok(config)
    }

    pub fn interferometer(&self, power: f64) -> Result<Interferometer> {
        let period = self.wavelength / 2.0;
        let ifm = Interferometer {
            separation: self.separation,
            source_distance: self.source_distance,
            detector_distance: self.detector_distance,
            source_slit_height: self.source_slit_height,
            detector_slit_height: self.detector_slit_height,
            illuminated_slits: self.slits,
            g1: MaterialGrating::new(period, self.f1, self.wall_thickness)?,
            g3: MaterialGrating::new(period, self.f3, self.wall_thickness)?,
            laser: LaserGrating::new(self.wavelength, power, self.waist_y, self.waist_z)?,
        };
        ifm.validate()?;
        Ok(ifm)
    }

    pub fn velocities(&self) -> Result<VelocityDistribution> {
        Ok(VelocityDistribution::with_nodes(self.mean_v, self.rel_fwhm, self.velocity_nodes)?)
    }

    /// Measured state with unset entries at their aligned values.
    pub fn alignment_state(&self) -> Result<AlignmentState> {
        let ifm = self.interferometer(0.0)?;
        let nominal = AlignmentState::nominal(&ifm);
        let a = &self.alignment;
        let mut periods = nominal.periods;
        for (p, given) in periods.iter_mut().zip(a.periods) {
            *p = given.unwrap_or(*p);
        }
        let mut yaw = nominal.yaw;
        for (y, given) in yaw.iter_mut().zip(a.yaw) {
            *y = given.unwrap_or(*y);
        }
        Ok(AlignmentState {
            roll_g1: a.roll_g1.unwrap_or(nominal.roll_g1),
            roll_g3: a.roll_g3.unwrap_or(nominal.roll_g3),
            pitch: a.pitch.unwrap_or(nominal.pitch),
            yaw,
            length_imbalance: a.delta_l.unwrap_or(nominal.length_imbalance),
            beam_height: a.beam_height.unwrap_or(nominal.beam_height),
            periods,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const EXAMPLE: &str = "\
[molecule]
name = C60
mass_amu = 720
alpha_A3 = 87.1
sigma_abs_m2 = 2.8e-22

[laser]
wavelength_nm = 532
waist_y_um = 900

[geometry]
L_mm = 105
L0_mm = 1500
L3_mm = 250
f1 = 0.42
f3 = 0.42
hs_um = 150
hd_um = 200
N_slits = 4000
wall_b_nm = 190

[beam]
v_mean_mps = 202
dv_over_v_fwhm = 0.27
";

    #[test]
    fn example_matches_preset_geometry() {
        let c = RunConfig::parse_str(EXAMPLE).unwrap();
        let ifm = c.interferometer(1.0).unwrap();
        assert_eq!(ifm, kdtli::physics::presets::interferometer(1.0));
        assert_eq!(c.ell_max, DEFAULT_ELL_MAX);
        assert_eq!(c.seed, 0);
        assert!((c.waist_z - 20e-6).abs() < 1e-18);
    }

    #[test]
    fn missing_keys_are_listed_together() {
        let text = EXAMPLE.replace("f3 = 0.42\n", "").replace("v_mean_mps = 202\n", "");
        let err = RunConfig::parse_str(&text).unwrap_err().to_string();
        assert!(err.contains("[geometry] f3") && err.contains("[beam] v_mean_mps"), "{err}");
    }

    #[test]
    fn typos_and_duplicates_are_rejected() {
        let typo = EXAMPLE.replace("hd_um", "hd_mm");
        let err = RunConfig::parse_str(&typo).unwrap_err().to_string();
        assert!(err.contains("line 18") && err.contains("hd_mm"), "{err}");
        let dup = format!("{EXAMPLE}[beam]\nv_mean_mps = 1\n");
        assert!(RunConfig::parse_str(&dup).unwrap_err().to_string().contains("already set"));
        let section = format!("{EXAMPLE}[extra]\n");
        assert!(RunConfig::parse_str(&section).is_err());
        let bad = EXAMPLE.replace("f1 = 0.42", "f1 = 1.5");
        assert!(RunConfig::parse_str(&bad).is_err());
        let nan = EXAMPLE.replace("L_mm = 105", "L_mm = nan");
        assert!(RunConfig::parse_str(&nan).is_err());
    }

    #[test]
    fn alignment_defaults_are_nominal() {
        let c = RunConfig::parse_str(EXAMPLE).unwrap();
        let ifm = c.interferometer(0.0).unwrap();
        assert_eq!(c.alignment_state().unwrap(), AlignmentState::nominal(&ifm));
        let with = format!("{EXAMPLE}[alignment]\ndelta_L_um = 50\nyaw_g2_mrad = 0.5\n");
        let s = RunConfig::parse_str(&with).unwrap().alignment_state().unwrap();
        assert!((s.length_imbalance - 50e-6).abs() < 1e-18);
        assert!((s.yaw[1] - 0.5e-3).abs() < 1e-18);
    }
}
