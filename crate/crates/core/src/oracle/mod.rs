//! Independent brute-force evaluations of every closed form, and the
//! verification suite that compares them.

pub mod monte_carlo;
pub mod propagation;
pub mod quadrature;
pub mod sums;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::coefficients::{self, Motion};
use crate::error::Result;
use crate::physics::InteractionParams;
use crate::{bessel, pattern};

pub use monte_carlo::{compare_with_closed_form, mc_prob_k, Histogram, DEFAULT_SEED};
pub use propagation::{propagate_end_to_end, Propagation, PropagationGrid};
pub use quadrature::{quad_b, quad_c, quad_chi, QuadratureSpec, Rule};
pub use sums::{conv_hat, sum_b};

pub const TOL_B: f64 = 1e-10;
pub const TOL_TALBOT_LAU: f64 = 1e-9;
pub const TOL_CLASSICAL: f64 = 1e-9;
pub const TOL_CHI: f64 = 1e-10;
pub const TOL_HAT: f64 = 1e-8;
pub const TOL_GRAF: f64 = 1e-10;
pub const TOL_BESSEL: f64 = 1e-12;
pub const TOL_NORMALIZATION: f64 = 1e-12;
pub const TOL_MC_SIGMAS: f64 = 3.0;
pub const TOL_PROPAGATION: f64 = 1e-3;
pub const TOL_OFF_RESONANT: f64 = 1e-6;

pub const GRAF_SAMPLES: usize = 20;
pub const MC_NBARS: [f64; 3] = [0.5, 2.0, 4.65];
pub const PROPAGATION_POINTS: [(f64, f64, f64); 2] = [(3.0, 0.3, 1.5), (5.0, 1.0, 8.5)];
pub const HAT_PHI0: [f64; 4] = [1.0, 3.0, 5.0, 7.0];
pub const HAT_N0_RATIOS: [f64; 3] = [0.0, 0.3, 0.5];

/// One comparison: the largest discrepancy over a grid against its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub points: usize,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_error.is_finite() && self.max_error < self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Grid `ξ_i` evenly spaced over `[0.05, 12]`.
pub fn xi_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| 0.05 + (12.0 - 0.05) * i as f64 / (points - 1) as f64).collect()
}

/// Largest error over `items`; an oracle failure counts as infinite error.
fn max_over<T: Sync, F>(items: &[T], f: F) -> f64
where
    F: Fn(&T) -> Result<f64> + Sync,
{
    items
        .par_iter()
        .map(|x| f(x).unwrap_or(f64::INFINITY))
        .reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

fn check(name: &str, tolerance: f64, points: usize, max_error: f64) -> Check {
    Check { name: name.into(), max_error, tolerance, points }
}

pub fn check_bessel() -> Vec<Check> {
    let xs = [0.3, 1.0, 2.5, 7.0, 15.0, 40.0, 100.0, 264.0];
    let j = max_over(&xs, |&x| {
        let q = quadrature::quad_bessel_j(0..=20, x)?;
        Ok((0..=20).map(|n| (q[n as usize] - bessel::j(n, x)).abs()).fold(0.0, f64::max))
    });
    let i = max_over(&xs, |&x| {
        let q = quadrature::quad_bessel_i_scaled(0..=20, x)?;
        Ok((0..=20).map(|n| (q[n as usize] - bessel::i_scaled(n, x)).abs()).fold(0.0, f64::max))
    });
    vec![
        check("bessel_j", TOL_BESSEL, xs.len() * 21, j),
        check("bessel_i_scaled", TOL_BESSEL, xs.len() * 21, i),
    ]
}

pub fn check_fourier_b() -> Vec<Check> {
    let phis = [0.0, 1.0, 3.0, 5.0, 7.0, 10.0];
    let err = max_over(&phis, |&phi0| {
        let q = quadrature::quad_b_orders(-15..=15, phi0)?;
        Ok((-15..=15)
            .zip(&q)
            .map(|(j, b)| (b - coefficients::fourier_b(j, phi0)).norm())
            .fold(0.0, f64::max))
    });
    let parseval = max_over(&phis, |&phi0| {
        let q = quadrature::quad_b_orders(-60..=60, phi0)?;
        Ok((q.iter().map(|b| b.norm_sqr()).sum::<f64>() - 1.0).abs())
    });
    vec![
        check("fourier_b", TOL_B, phis.len() * 31, err),
        check("fourier_b_parseval", TOL_B, phis.len(), parseval),
    ]
}

pub fn check_talbot_lau(fast: bool) -> Vec<Check> {
    let xis = xi_grid(if fast { 8 } else { 25 });
    let mut grid = Vec::new();
    for &phi0 in &HAT_PHI0 {
        for &xi in &xis {
            grid.push((phi0, xi));
        }
    }
    let orders = 0..=4;
    let (b_err, imag) = grid
        .par_iter()
        .map(|&(phi0, xi)| {
            let table = match sums::FourierTable::new(phi0, sums::SUM_B_JMAX + 4) {
                Ok(t) => t,
                Err(_) => return (f64::INFINITY, f64::INFINITY),
            };
            let mut worst = (0.0_f64, 0.0_f64);
            for m in orders.clone() {
                let s = table.sum_b(m, xi, sums::SUM_B_JMAX);
                worst.0 = worst.0.max((s.re - coefficients::talbot_lau_b(m, xi, phi0)).abs());
                worst.1 = worst.1.max(s.im.abs());
            }
            worst
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let c_err = max_over(&grid, |&(phi0, xi)| {
        let q = quadrature::quad_c_orders(0..=4, xi, phi0)?;
        Ok((0..=4).zip(&q).map(|(m, c)| (c.re - coefficients::classical_c(m, xi, phi0)).abs()).fold(0.0, f64::max))
    });
    let n = grid.len() * 5;
    vec![
        check("talbot_lau_b", TOL_TALBOT_LAU, n, b_err),
        check("talbot_lau_b_imag", sums::IMAG_TOL, n, imag),
        check("classical_c", TOL_CLASSICAL, n, c_err),
    ]
}

pub fn check_chi(fast: bool) -> Check {
    let xis = xi_grid(if fast { 8 } else { 25 });
    let mut grid = Vec::new();
    for &n0 in &[0.5, 2.0, 4.65, 10.0] {
        for &xi in &xis {
            grid.push((n0, xi));
        }
    }
    let err = max_over(&grid, |&(n0, xi)| {
        let q = quadrature::quad_chi_orders(-6..=6, xi, n0)?;
        Ok((-6..=6).zip(&q).map(|(m, c)| (c.re - coefficients::chi(m, xi, n0)).abs()).fold(0.0, f64::max))
    });
    check("chi", TOL_CHI, grid.len() * 13, err)
}

/// `B̂_m` and `Ĉ_m` against the convolution oracle on
/// `φ₀ × n₀/φ₀ × ξ`.
pub fn check_hat(fast: bool) -> Vec<Check> {
    let xis = xi_grid(if fast { 10 } else { 100 });
    let orders: &[i32] = if fast { &[2] } else { &[0, 2, 4] };
    let mut grid = Vec::new();
    for &phi0 in &HAT_PHI0 {
        for &ratio in &HAT_N0_RATIOS {
            for &xi in &xis {
                grid.push((phi0, ratio * phi0, xi));
            }
        }
    }
    let tables: Vec<sums::FourierTable> = HAT_PHI0
        .par_iter()
        .map(|&phi0| sums::FourierTable::new(phi0, sums::SUM_B_JMAX + sums::CONV_NMAX).expect("b_j quadrature converges"))
        .collect();
    let table_for = |phi0: f64| HAT_PHI0.iter().position(|&p| p == phi0).map(|i| &tables[i]);
    let quantum = max_over(&grid, |&(phi0, n0, xi)| {
        let mut worst: f64 = 0.0;
        for &m in orders {
            let oracle = sums::conv_hat_with(m, xi, phi0, n0, Motion::Quantum, table_for(phi0))?;
            worst = worst.max((oracle - coefficients::b_hat(m, xi, phi0, n0)).abs());
        }
        Ok(worst)
    });
    let classical = max_over(&grid, |&(phi0, n0, xi)| {
        let mut worst: f64 = 0.0;
        for &m in orders {
            let oracle = sums::conv_hat_with(m, xi, phi0, n0, Motion::Classical, None)?;
            worst = worst.max((oracle - coefficients::c_hat(m, xi, phi0, n0)).abs());
        }
        Ok(worst)
    });
    let n = grid.len() * orders.len();
    vec![check("b_hat", TOL_HAT, n, quantum), check("c_hat", TOL_HAT, n, classical)]
}

/// Seeded random `(u, v, n)` with `|u|, |v| ≤ 8`, kept away from the
/// excluded lines `u = ±v`.
pub fn graf_samples(count: usize, seed: u64) -> Vec<(f64, f64, i32)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u: f64 = rng.random_range(-8.0..=8.0);
        let v: f64 = rng.random_range(-8.0..=8.0);
        let n: i32 = rng.random_range(-4..=4);
        if (u - v).abs() > 0.5 && (u + v).abs() > 0.5 {
            out.push((u, v, n));
        }
    }
    out
}

pub fn check_graf(seed: u64) -> Check {
    let samples = graf_samples(GRAF_SAMPLES, seed);
    let err = max_over(&samples, |&(u, v, n)| coefficients::graf_mixed_theorem_check(u, v, n));
    check("graf_mixed_theorem", TOL_GRAF, samples.len(), err)
}

pub fn check_prob_normalization() -> Check {
    let nbars: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
    let err = max_over(&nbars, |&nbar| {
        Ok(((-80..=80).map(|k| coefficients::prob_k(k, nbar)).sum::<f64>() - 1.0).abs())
    });
    check("prob_k_normalization", TOL_NORMALIZATION, nbars.len(), err)
}

/// Largest z-score of Monte Carlo histograms against `e^{-n̄} I_k(n̄)`.
pub fn check_monte_carlo(samples: u64, seed: u64) -> Check {
    let z = max_over(&MC_NBARS, |&nbar| {
        let h = mc_prob_k(nbar, samples, seed)?;
        let c = compare_with_closed_form(&h);
        Ok(c.max_z.max(c.mean_z))
    });
    check("monte_carlo_prob_k", TOL_MC_SIGMAS, MC_NBARS.len(), z)
}

/// Relative visibility error and off-resonant leakage of the propagation
/// oracle at [`PROPAGATION_POINTS`].
pub fn check_propagation(points: &[(f64, f64, f64)]) -> Vec<Check> {
    let grid = PropagationGrid::default();
    let results: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .map(|&(phi0, n0, xi)| {
            let params = InteractionParams::new(phi0, n0, xi)?;
            let out = propagate_end_to_end(&grid, &params, 0.42, 0.42)?;
            let closed = pattern::visibility_qm(xi, phi0, n0, 0.42);
            Ok(((out.pattern.visibility() - closed).abs() / closed, out.off_resonant))
        })
        .collect();
    let rel = results.iter().map(|r| r.as_ref().map_or(f64::INFINITY, |x| x.0)).fold(0.0, f64::max);
    let off = results.iter().map(|r| r.as_ref().map_or(f64::INFINITY, |x| x.1)).fold(0.0, f64::max);
    vec![
        check("propagation_visibility", TOL_PROPAGATION, points.len(), rel),
        check("propagation_off_resonant", TOL_OFF_RESONANT, points.len(), off),
    ]
}

/// Run every oracle comparison. `fast` shrinks the parameter grids and runs
/// one propagation point.
pub fn verify_all(fast: bool) -> Report {
    let mut checks = Vec::new();
    checks.extend(check_bessel());
    checks.extend(check_fourier_b());
    checks.extend(check_talbot_lau(fast));
    checks.push(check_chi(fast));
    checks.extend(check_hat(fast));
    checks.push(check_graf(DEFAULT_SEED));
    checks.push(check_prob_normalization());
    checks.push(check_monte_carlo(monte_carlo::DEFAULT_SAMPLES, DEFAULT_SEED));
    let points: &[(f64, f64, f64)] = if fast { &PROPAGATION_POINTS[..1] } else { &PROPAGATION_POINTS };
    checks.extend(check_propagation(points));
    Report { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graf_samples_are_deterministic_and_admissible() {
        let a = graf_samples(20, 1);
        assert_eq!(a, graf_samples(20, 1));
        assert!(a.iter().all(|&(u, v, n)| u.abs() <= 8.0 && v.abs() <= 8.0 && (-4..=4).contains(&n)));
    }

    #[test]
    fn failed_oracle_counts_as_failure() {
        let c = check("x", 1.0, 1, f64::INFINITY);
        assert!(!c.passed());
        let c = check("x", 1.0, 1, f64::NAN);
        assert!(!c.passed());
    }

    #[test]
    fn xi_grid_spans_range() {
        let g = xi_grid(100);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.05);
        assert!((g[99] - 12.0).abs() < 1e-12);
    }
}
