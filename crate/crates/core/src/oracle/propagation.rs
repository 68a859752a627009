//! End-to-end propagation through the three gratings in the momentum basis.
//!
//! A molecule leaves a point `x₀` in the first grating with a flat transverse
//! momentum distribution, flies a distance `L`, crosses the light grating and
//! flies another `L`. The light grating acts on the density matrix as
//!
//! ```text
//! ρ(x₁, x₂) → ρ(x₁, x₂) · e^{i[φ(x₁) - φ(x₂)]} · exp{-n̄(x̄)[1 - cos(π(x₁-x₂)/d)]}
//! ```
//!
//! with `x̄` the midpoint: coherent phase imprint plus a Poisson number of
//! `±p_d/2` photon kicks. The kernel is expanded as
//! `Σ M_ab e^{iπ(a x₁ - b x₂)/d}` on a `2d`-periodic grid, so `a`, `b` count
//! photon momenta. Free flight turns the pair `(a, b)` into a density
//! harmonic of wave number `π(a-b)/(2d)` with phase `-πξ(a²-b²)/8`. The
//! source average over `x₀` and the final G3 mask are exact slit integrals.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pattern::FringePattern;
use crate::physics::{eikonal_phase, InteractionParams};

pub const MIN_POINTS_PER_PERIOD: usize = 64;
pub const CONVERGENCE_SHIFT: f64 = 1e-6;
const MAX_POINTS_PER_PERIOD: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropagationGrid {
    /// Kernel samples per grating period; the momentum cutoff is half of
    /// this in photon units.
    pub points_per_period: usize,
    /// Periods of G1 averaged over for the incoherent source.
    pub source_periods: u32,
    pub ell_max: usize,
}

impl Default for PropagationGrid {
    fn default() -> Self {
        Self { points_per_period: MIN_POINTS_PER_PERIOD, source_periods: 4, ell_max: 3 }
    }
}

impl PropagationGrid {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_period < MIN_POINTS_PER_PERIOD {
            return Err(Error::invalid(format!(
                "propagation grid needs at least {MIN_POINTS_PER_PERIOD} points per period"
            )));
        }
        if self.source_periods == 0 || !self.source_periods.is_multiple_of(4) {
            return Err(Error::invalid("source average must span a multiple of four periods"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    /// Signal harmonics behind G3, normalized to `S_0 = A1_0 A3_0`.
    pub pattern: FringePattern,
    /// Largest off-resonant harmonic relative to `S_0`.
    pub off_resonant: f64,
    /// Largest change of any harmonic (relative to `S_0`) on the last
    /// resolution doubling.
    pub shift: f64,
    pub points_per_period: usize,
}

/// Propagate with open fractions `f1` (G1) and `f3` (G3), doubling the
/// kernel resolution until the harmonics move by less than
/// [`CONVERGENCE_SHIFT`].
pub fn propagate_end_to_end(
    grid: &PropagationGrid,
    params: &InteractionParams,
    f1: f64,
    f3: f64,
) -> Result<Propagation> {
    grid.validate()?;
    for f in [f1, f3] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::domain(format!("open fraction must lie in (0, 1), got {f}")));
        }
    }
    let mut ppp = grid.points_per_period;
    let mut prev = propagate_fixed(ppp, grid, params, f1, f3);
    loop {
        let next_ppp = 2 * ppp;
        let next = propagate_fixed(next_ppp, grid, params, f1, f3);
        let s0 = next.0[0].re;
        let shift = prev.0.iter().zip(&next.0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / s0;
        if shift < CONVERGENCE_SHIFT {
            return Ok(Propagation {
                pattern: FringePattern::from_coefficients(next.0, 1.0)?,
                off_resonant: next.1,
                shift,
                points_per_period: next_ppp,
            });
        }
        if next_ppp >= MAX_POINTS_PER_PERIOD {
            return Err(Error::NotConverged { what: "propagation kernel resolution".into(), residual: shift });
        }
        ppp = next_ppp;
        prev = next;
    }
}

/// Harmonics `S_0..S_ℓmax` and the off-resonant maximum at one resolution.
fn propagate_fixed(
    ppp: usize,
    grid: &PropagationGrid,
    params: &InteractionParams,
    f1: f64,
    f3: f64,
) -> (Vec<Complex64>, f64) {
    let kernel = KernelSpectrum::new(ppp, params);
    let xi = params.xi;
    // Σ_b M_{b+D, b} e^{-iπξ((b+D)² - b²)/8}
    let flight_sum = |diff: i64| -> Complex64 {
        let half = kernel.half;
        let mut s = Complex64::new(0.0, 0.0);
        for b in -half..half {
            let a = b + diff;
            if a < -half || a >= half {
                continue;
            }
            let phase = -PI * xi * ((a * a - b * b) as f64) / 8.0;
            s += kernel.coefficient(a, b) * Complex64::from_polar(1.0, phase);
        }
        s
    };

    let mut harmonics = Vec::with_capacity(grid.ell_max + 1);
    for ell in 0..=grid.ell_max as i64 {
        let kappa = 2.0 * PI * ell as f64;
        let source = slit_average(kappa, f1, grid.source_periods);
        let detector = slit_average(kappa, f3, 1);
        harmonics.push(source * detector * flight_sum(4 * ell));
    }
    let s0 = harmonics[0].re;
    let mut off: f64 = 0.0;
    for ell in 0..=grid.ell_max as i64 {
        for r in 1..4 {
            let diff = 4 * ell + r;
            let kappa = PI * diff as f64 / 2.0;
            let amplitude = slit_average(kappa, f1, grid.source_periods) * flight_sum(diff);
            off = off.max(amplitude.norm() / s0);
        }
    }
    (harmonics, off)
}

/// `(1/P) ∫_0^{P} T(x) e^{iκx} dx` for a unit-period binary mask with slits
/// of width `f` centred on the integers, over `P` periods.
fn slit_average(kappa: f64, f: f64, periods: u32) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..periods {
        let (lo, hi) = (j as f64 - 0.5 * f, j as f64 + 0.5 * f);
        total += if kappa == 0.0 {
            Complex64::new(hi - lo, 0.0)
        } else {
            (Complex64::from_polar(1.0, kappa * hi) - Complex64::from_polar(1.0, kappa * lo)) / Complex64::new(0.0, kappa)
        };
    }
    total / periods as f64
}

/// Two-dimensional Fourier coefficients of the grating kernel on `[0, 2d)²`,
/// for the diagonals needed by the flight sums.
struct KernelSpectrum {
    half: i64,
    n: usize,
    /// `G[i₁][b] = (1/N) Σ_{i₂} M(x₁, x₂) e^{iπ b x₂/d}`
    partial: Vec<Complex64>,
    twiddle: Vec<Complex64>,
}

impl KernelSpectrum {
    fn new(ppp: usize, params: &InteractionParams) -> Self {
        let n = 2 * ppp;
        let xs: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 / n as f64).collect();
        let phase: Vec<Complex64> = xs.iter().map(|&x| Complex64::from_polar(1.0, eikonal_phase(x, params.phi0, 1.0))).collect();
        // e^{2πi k/N}; e^{iπ b x_i} = twiddle[(b·i) mod N]
        let twiddle: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect();
        let half = (n / 2) as i64;
        let mut partial = vec![Complex64::new(0.0, 0.0); n * n];
        let mut row = vec![Complex64::new(0.0, 0.0); n];
        for i1 in 0..n {
            for i2 in 0..n {
                let mid = 0.5 * (xs[i1] + xs[i2]);
                let nbar = params.n0 * (PI * mid).sin().powi(2);
                let damp = (-nbar * (1.0 - (PI * (xs[i1] - xs[i2])).cos())).exp();
                row[i2] = phase[i1] * phase[i2].conj() * damp;
            }
            for (bi, b) in (-half..half).enumerate() {
                let bm = b.rem_euclid(n as i64) as usize;
                let mut s = Complex64::new(0.0, 0.0);
                for (i2, m) in row.iter().enumerate() {
                    s += m * twiddle[(bm * i2) % n];
                }
                partial[i1 * n + bi] = s / n as f64;
            }
        }
        Self { half, n, partial, twiddle }
    }

    /// `M_ab = (1/N) Σ_{i₁} G[i₁][b] e^{-iπ a x₁/d}`.
    fn coefficient(&self, a: i64, b: i64) -> Complex64 {
        let n = self.n;
        let bi = (b + self.half) as usize;
        let am = a.rem_euclid(n as i64) as usize;
        let mut s = Complex64::new(0.0, 0.0);
        for i1 in 0..n {
            s += self.partial[i1 * n + bi] * self.twiddle[(am * i1) % n].conj();
        }
        s / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern;

    #[test]
    fn slit_average_gives_grating_coefficients() {
        for ell in 0..5 {
            let a = slit_average(2.0 * PI * ell as f64, 0.42, 4);
            assert!((a.re - pattern::grating_coefficient(ell, 0.42)).abs() < 1e-14);
            assert!(a.im.abs() < 1e-14);
        }
    }

    #[test]
    fn free_beam_is_uniform() {
        let p = InteractionParams::new(0.0, 0.0, 1.5).unwrap();
        let out = propagate_end_to_end(&PropagationGrid::default(), &p, 0.42, 0.42).unwrap();
        assert!((out.pattern.coefficient(0).re - 0.42 * 0.42).abs() < 1e-14);
        for ell in 1..=3 {
            assert!(out.pattern.coefficient(ell).norm() < 1e-14);
        }
    }

    #[test]
    fn matches_closed_form_visibility() {
        let p = InteractionParams::new(3.0, 0.3, 1.5).unwrap();
        let out = propagate_end_to_end(&PropagationGrid::default(), &p, 0.42, 0.42).unwrap();
        let v = pattern::visibility_qm(1.5, 3.0, 0.3, 0.42);
        assert!((out.pattern.visibility() - v).abs() < 1e-3 * v, "{} vs {v}", out.pattern.visibility());
        assert!(out.off_resonant < 1e-6);
        assert!(out.shift < CONVERGENCE_SHIFT);
    }

    #[test]
    fn grid_validation() {
        let bad = PropagationGrid { points_per_period: 32, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = PropagationGrid { source_periods: 3, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
