//! Truncated direct sums built only from quadrature coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::quadrature::{quad_b_orders, quad_c_orders, quad_chi_orders};
use crate::coefficients::Motion;
use crate::error::{Error, Result};

/// Default truncation `|j| ≤ 60` of the coherent sum.
pub const SUM_B_JMAX: i32 = 60;
/// Truncation `|n| ≤ 80` of the absorption convolution.
pub const CONV_NMAX: i32 = 80;
/// Largest tolerated imaginary part of a coefficient that must be real.
pub const IMAG_TOL: f64 = 1e-12;

/// Tabulated `b_j` for `|j| ≤ reach`.
pub struct FourierTable {
    reach: i32,
    values: Vec<Complex64>,
}

impl FourierTable {
    pub fn new(phi0: f64, reach: i32) -> Result<Self> {
        Ok(Self { reach, values: quad_b_orders(-reach..=reach, phi0)? })
    }

    pub fn get(&self, j: i32) -> Complex64 {
        if j.abs() > self.reach {
            return Complex64::new(0.0, 0.0);
        }
        self.values[(j + self.reach) as usize]
    }

    /// `B_m(ξ) = Σ_{|j|≤jmax} b_j b*_{j-m} e^{-2πi(j-m/2)ξ}`.
    pub fn sum_b(&self, m: i32, xi: f64, jmax: i32) -> Complex64 {
        (-jmax..=jmax)
            .map(|j| {
                let phase = -2.0 * PI * (j as f64 - 0.5 * m as f64) * xi;
                self.get(j) * self.get(j - m).conj() * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }
}

/// Coherent Talbot-Lau coefficient from its defining sum. The result is
/// complex; its imaginary part is a consistency diagnostic.
pub fn sum_b(m: i32, xi: f64, phi0: f64, jmax: i32) -> Result<Complex64> {
    let table = FourierTable::new(phi0, jmax + m.abs())?;
    Ok(table.sum_b(m, xi, jmax))
}

/// `Σ_{|n|≤80} X_n(ξ) χ_{m-n}(ξ/2)` with `X = B` (sum over quadrature `b_j`)
/// or `X = C` (quadrature), and quadrature `χ`.
pub fn conv_hat(m: i32, xi: f64, phi0: f64, n0: f64, motion: Motion) -> Result<f64> {
    let table = match motion {
        Motion::Quantum => Some(FourierTable::new(phi0, SUM_B_JMAX + CONV_NMAX)?),
        Motion::Classical => None,
    };
    conv_hat_with(m, xi, phi0, n0, motion, table.as_ref())
}

/// As [`conv_hat`], reusing a table of `b_j` for `|j| ≤ 140` when given.
pub fn conv_hat_with(
    m: i32,
    xi: f64,
    phi0: f64,
    n0: f64,
    motion: Motion,
    table: Option<&FourierTable>,
) -> Result<f64> {
    let dispersive: Vec<Complex64> = match motion {
        Motion::Quantum => {
            let owned;
            let table = match table {
                Some(t) => t,
                None => {
                    owned = FourierTable::new(phi0, SUM_B_JMAX + CONV_NMAX)?;
                    &owned
                }
            };
            (-CONV_NMAX..=CONV_NMAX).map(|n| table.sum_b(n, xi, SUM_B_JMAX)).collect()
        }
        Motion::Classical => quad_c_orders(-CONV_NMAX..=CONV_NMAX, xi, phi0)?,
    };
    // χ_{m-n} for n = -80..=80 is the reversed range m+80 ..= m-80.
    let chis = quad_chi_orders(m - CONV_NMAX..=m + CONV_NMAX, 0.5 * xi, n0)?;
    let total: Complex64 = dispersive
        .iter()
        .enumerate()
        .map(|(i, x)| x * chis[chis.len() - 1 - i])
        .sum();
    if total.im.abs() > IMAG_TOL {
        return Err(Error::NotConverged { what: format!("{} convolution is not real", motion.label()), residual: total.im.abs() });
    }
    Ok(total.re)
}
