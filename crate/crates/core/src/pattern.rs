//! Fringe signals behind the third grating, sinusoidal visibilities and
//! velocity averaging.
//!
//! The detected signal as a function of the G3 shift `x_s` is
//!
//! ```text
//! S(x_s) = Σ_ℓ A1_ℓ A3_ℓ B̂_{2ℓ}(ℓξ) e^{2πiℓ x_s/d},   A_ℓ = f sinc(ℓπf)
//! ```
//!
//! with the unnormalized `sinc(x) = sin(x)/x`. The classical signal replaces
//! `B̂` by `Ĉ`. Visibility is the contrast of the first harmonic,
//! `2|S_1/S_0|`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coefficients::{self, Motion};
use crate::error::{Error, Result};
use crate::physics::{Interferometer, InteractionParams, Molecule};

pub const DEFAULT_ELL_MAX: usize = 8;
pub const DEFAULT_VELOCITY_NODES: usize = 64;
pub const MIN_VELOCITY_NODES: usize = 32;

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;
const TRUNCATION_SIGMAS: f64 = 4.0;
const MAX_NEGATIVE_MASS: f64 = 1e-6;

/// `sin(x)/x`, not π-normalized.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Fourier coefficient `A_ℓ = f sinc(ℓπf)` of a material grating.
pub fn grating_coefficient(ell: i32, f: f64) -> f64 {
    f * sinc(ell as f64 * PI * f)
}

/// Fourier coefficients `S_0, …, S_ℓmax` of a real, `d`-periodic signal.
#[derive(Debug, Clone, PartialEq)]
pub struct FringePattern {
    coeffs: Vec<Complex64>,
    period: f64,
}

impl FringePattern {
    pub fn from_coefficients(coeffs: Vec<Complex64>, period: f64) -> Result<Self> {
        let s0 = coeffs.first().ok_or_else(|| Error::invalid("fringe pattern needs S_0"))?;
        if !(s0.re > 0.0 && s0.im.abs() <= 1e-12 * s0.re) {
            return Err(Error::invalid(format!("S_0 must be real and positive, got {s0}")));
        }
        if !(period > 0.0) {
            return Err(Error::domain(format!("fringe period must be positive, got {period}")));
        }
        Ok(Self { coeffs, period })
    }

    /// Monochromatic pattern for given interaction parameters and open
    /// fractions of the first and third grating.
    pub fn monochromatic(
        params: &InteractionParams,
        f1: f64,
        f3: f64,
        ell_max: usize,
        motion: Motion,
        period: f64,
    ) -> Self {
        let coeffs = (0..=ell_max as i32)
            .map(|ell| {
                let a = grating_coefficient(ell, f1) * grating_coefficient(ell, f3);
                let c = coefficients::hat_coefficient(2 * ell, motion, ell as f64 * params.xi, params.phi0, params.n0);
                Complex64::new(a * c, 0.0)
            })
            .collect();
        Self { coeffs, period }
    }

    pub fn ell_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// `S_ℓ` for any integer `ℓ`, using `S_{-ℓ} = conj(S_ℓ)`; zero beyond `ℓ_max`.
    pub fn coefficient(&self, ell: i32) -> Complex64 {
        match self.coeffs.get(ell.unsigned_abs() as usize) {
            Some(c) if ell < 0 => c.conj(),
            Some(c) => *c,
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn sample(&self, x_s: f64) -> f64 {
        let k = 2.0 * PI * x_s / self.period;
        let mut s = self.coeffs[0].re;
        for (ell, c) in self.coeffs.iter().enumerate().skip(1) {
            s += 2.0 * (c * Complex64::from_polar(1.0, k * ell as f64)).re;
        }
        s
    }

    pub fn visibility(&self) -> f64 {
        if self.coeffs.len() < 2 {
            return 0.0;
        }
        2.0 * self.coeffs[1].norm() / self.coeffs[0].re
    }
}

/// Quantum signal at shift `x_s` (same units as `period`), equal open fractions.
pub fn signal_qm(x_s: f64, period: f64, params: &InteractionParams, f: f64, ell_max: usize) -> f64 {
    FringePattern::monochromatic(params, f, f, ell_max, Motion::Quantum, period).sample(x_s)
}

/// Classical (moiré) signal at shift `x_s`, equal open fractions.
pub fn signal_cl(x_s: f64, period: f64, params: &InteractionParams, f: f64, ell_max: usize) -> f64 {
    FringePattern::monochromatic(params, f, f, ell_max, Motion::Classical, period).sample(x_s)
}

/// `2 sinc(πf1) sinc(πf3) |B̂_2(ξ)|` or its classical counterpart.
pub fn visibility(motion: Motion, xi: f64, phi0: f64, n0: f64, f1: f64, f3: f64) -> f64 {
    2.0 * sinc(PI * f1) * sinc(PI * f3) * coefficients::hat_coefficient(2, motion, xi, phi0, n0).abs()
}

pub fn visibility_qm(xi: f64, phi0: f64, n0: f64, f: f64) -> f64 {
    visibility(Motion::Quantum, xi, phi0, n0, f, f)
}

pub fn visibility_cl(xi: f64, phi0: f64, n0: f64, f: f64) -> f64 {
    visibility(Motion::Classical, xi, phi0, n0, f, f)
}

/// Pure absorption grating: `2 sinc²(πf) e^{-ζ} I_2(ζ)`, `ζ = n₀ sin²(πξ/2)`.
pub fn visibility_abs_only(xi: f64, n0: f64, f: f64) -> f64 {
    let zeta = n0 * (0.5 * PI * xi).sin().powi(2);
    2.0 * sinc(PI * f).powi(2) * crate::bessel::i_scaled(2, zeta)
}

/// Golden-section maximum of [`visibility_abs_only`] over `n₀ ∈ [0, 20]` at
/// `ξ = 1`. Returns `(n₀*, V*)`.
pub fn maximize_abs_only(f: f64) -> (f64, f64) {
    let objective = |n0: f64| visibility_abs_only(1.0, n0, f);
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0_f64, 20.0_f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    let n0 = 0.5 * (a + b);
    (n0, objective(n0))
}

/// Gaussian longitudinal velocity distribution, truncated at ±4σ and
/// discretized with a trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityDistribution {
    pub mean_v: f64,
    pub rel_fwhm: f64,
    nodes: usize,
}

impl VelocityDistribution {
    pub fn new(mean_v: f64, rel_fwhm: f64) -> Result<Self> {
        Self::with_nodes(mean_v, rel_fwhm, DEFAULT_VELOCITY_NODES)
    }

    pub fn with_nodes(mean_v: f64, rel_fwhm: f64, nodes: usize) -> Result<Self> {
        if !(mean_v.is_finite() && mean_v > 0.0) {
            return Err(Error::domain(format!("mean velocity must be positive, got {mean_v}")));
        }
        if !(0.0..1.0).contains(&rel_fwhm) {
            return Err(Error::domain(format!("relative FWHM must lie in [0, 1), got {rel_fwhm}")));
        }
        if nodes < MIN_VELOCITY_NODES {
            return Err(Error::invalid(format!(
                "velocity quadrature needs at least {MIN_VELOCITY_NODES} nodes, got {nodes}"
            )));
        }
        let dist = Self { mean_v, rel_fwhm, nodes };
        let below = dist.mass_below_zero();
        if below >= MAX_NEGATIVE_MASS {
            return Err(Error::invalid(format!(
                "velocity distribution puts {below:.2e} of its mass at v <= 0 (relative FWHM {rel_fwhm} too wide)"
            )));
        }
        Ok(dist)
    }

    /// A sharp velocity.
    pub fn monochromatic(mean_v: f64) -> Result<Self> {
        Self::new(mean_v, 0.0)
    }

    pub fn sigma(&self) -> f64 {
        self.rel_fwhm * self.mean_v / FWHM_PER_SIGMA
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// Gaussian mass at `v ≤ 0` before truncation.
    pub fn mass_below_zero(&self) -> f64 {
        let sigma = self.sigma();
        if sigma == 0.0 {
            return 0.0;
        }
        0.5 * libm::erfc(self.mean_v / (sigma * std::f64::consts::SQRT_2))
    }

    /// `(v, weight)` pairs; weights sum to one. A zero spread gives the single
    /// node `(mean_v, 1)`.
    pub fn quadrature(&self) -> Vec<(f64, f64)> {
        let sigma = self.sigma();
        if sigma == 0.0 {
            return vec![(self.mean_v, 1.0)];
        }
        let lo = self.mean_v - TRUNCATION_SIGMAS * sigma;
        let h = 2.0 * TRUNCATION_SIGMAS * sigma / (self.nodes - 1) as f64;
        let mut nodes: Vec<(f64, f64)> = (0..self.nodes)
            .map(|i| {
                let v = lo + i as f64 * h;
                let z = (v - self.mean_v) / sigma;
                let edge = if i == 0 || i + 1 == self.nodes { 0.5 } else { 1.0 };
                (v, edge * (-0.5 * z * z).exp())
            })
            .collect();
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        for n in &mut nodes {
            n.1 /= total;
        }
        nodes
    }
}

/// Velocity-averaged visibility `2|⟨S_1(v)⟩|/S_0` at laser power `power`.
/// `S_0` does not depend on the velocity, so the sign of `B̂_2` matters in
/// the average.
pub fn velocity_averaged_visibility(
    dist: &VelocityDistribution,
    molecule: &Molecule,
    interferometer: &Interferometer,
    power: f64,
    motion: Motion,
) -> Result<f64> {
    let setup = interferometer.with_power(power);
    let mut first = 0.0;
    for (v, w) in dist.quadrature() {
        let p = setup.interaction(molecule, v)?;
        first += w * coefficients::hat_coefficient(2, motion, p.xi, p.phi0, p.n0);
    }
    let (f1, f3) = (setup.g1.open_fraction, setup.g3.open_fraction);
    Ok(2.0 * sinc(PI * f1) * sinc(PI * f3) * first.abs())
}

/// Velocity-averaged fringe pattern: every harmonic averaged over the
/// distribution.
pub fn velocity_averaged_pattern(
    dist: &VelocityDistribution,
    molecule: &Molecule,
    interferometer: &Interferometer,
    ell_max: usize,
    motion: Motion,
) -> Result<FringePattern> {
    let (f1, f3) = (interferometer.g1.open_fraction, interferometer.g3.open_fraction);
    let d = interferometer.period();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); ell_max + 1];
    for (v, w) in dist.quadrature() {
        let p = interferometer.interaction(molecule, v)?;
        let mono = FringePattern::monochromatic(&p, f1, f3, ell_max, motion, d);
        for (acc, c) in coeffs.iter_mut().zip(mono.coefficients()) {
            *acc += w * c;
        }
    }
    FringePattern::from_coefficients(coeffs, d)
}

/// One row of a laser-power scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    /// W
    pub power: f64,
    pub visibility_qm: f64,
    pub visibility_cl: f64,
}

/// Velocity-averaged quantum and classical visibilities at each power.
pub fn power_scan(
    molecule: &Molecule,
    interferometer: &Interferometer,
    dist: &VelocityDistribution,
    powers: &[f64],
) -> Result<Vec<ScanPoint>> {
    if let Some(p) = powers.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::domain(format!("laser power must be nonnegative, got {p}")));
    }
    if powers.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("laser powers must be sorted in ascending order"));
    }
    interferometer.validate()?;
    powers
        .par_iter()
        .map(|&power| {
            Ok(ScanPoint {
                power,
                visibility_qm: velocity_averaged_visibility(dist, molecule, interferometer, power, Motion::Quantum)?,
                visibility_cl: velocity_averaged_visibility(dist, molecule, interferometer, power, Motion::Classical)?,
            })
        })
        .collect()
}
