//! Weighted least-squares extraction of the optical polarizability and the
//! absorption cross section from visibility-versus-power scans.
//!
//! Parameters are fitted as `q_α = ln(α/u_α)` and `q_σ = ln(σ/u_σ + ε)`, so
//! both stay positive while `σ` may approach zero. The unit pair
//! `(u_α, u_σ)` only rescales the search space.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::coefficients::Motion;
use crate::constants::ANGSTROM3;
use crate::error::{Error, Result};
use crate::pattern::{velocity_averaged_visibility, VelocityDistribution};
use crate::physics::{Interferometer, Molecule};

const LOG_EPS: f64 = 1e-30;
const MAX_LOG_STEP: f64 = 5.0;
/// `Δχ²` of a one-sided 95% profile bound.
pub const PROFILE_DELTA_CHI2: f64 = 2.71;
/// Floor on synthetic point uncertainties.
pub const MIN_SIGMA_V: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint {
    /// W
    pub power: f64,
    pub visibility: f64,
    /// One standard deviation of `visibility`.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerScanDataset {
    pub label: String,
    pub points: Vec<DataPoint>,
}

impl PowerScanDataset {
    pub fn new(label: impl Into<String>, points: Vec<DataPoint>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::invalid(format!("a power scan needs at least 4 points, got {}", points.len())));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.power.is_finite() && p.power >= 0.0) {
                return Err(Error::invalid(format!("point {i}: power must be nonnegative, got {}", p.power)));
            }
            if !p.visibility.is_finite() {
                return Err(Error::invalid(format!("point {i}: visibility must be finite")));
            }
            if !(p.sigma.is_finite() && p.sigma > 0.0) {
                return Err(Error::invalid(format!("point {i}: sigma_v must be positive, got {}", p.sigma)));
            }
        }
        let mut powers: Vec<f64> = points.iter().map(|p| p.power).collect();
        powers.sort_by(f64::total_cmp);
        if powers.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("powers in a scan must be distinct"));
        }
        Ok(Self { label: label.into(), points })
    }

    pub fn powers(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.power).collect()
    }
}

/// Everything the model needs besides the two fitted parameters.
#[derive(Debug, Clone)]
pub struct FitSetup {
    /// Mass and name; the optical parameters are replaced during the fit.
    pub molecule: Molecule,
    pub interferometer: Interferometer,
    pub velocities: VelocityDistribution,
    pub motion: Motion,
}

impl FitSetup {
    /// Velocity-averaged visibility at `power` for trial parameters.
    pub fn model(&self, alpha: f64, sigma: f64, power: f64) -> Result<f64> {
        let m = self.molecule.with_parameters(alpha, sigma)?;
        velocity_averaged_visibility(&self.velocities, &m, &self.interferometer, power, self.motion)
    }

    pub fn with_motion(&self, motion: Motion) -> Self {
        Self { motion, ..self.clone() }
    }

    /// Cross section for which `n0 = φ0` at polarizability `alpha`; the ratio
    /// is independent of power and velocity.
    pub fn balanced_sigma(&self, alpha: f64) -> Result<f64> {
        let m = self.molecule.with_parameters(alpha, 1.0)?;
        let p = self.interferometer.with_power(1.0).interaction(&m, self.velocities.mean_v)?;
        Ok(p.phi0 / p.n0)
    }
}

/// Scale of each parameter in the search space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterUnits {
    /// m³
    pub alpha: f64,
    /// m²
    pub sigma: f64,
}

impl ParameterUnits {
    pub const SI: Self = Self { alpha: 1.0, sigma: 1.0 };
    pub const LAB: Self = Self { alpha: ANGSTROM3, sigma: 1e-22 };
}

impl Default for ParameterUnits {
    fn default() -> Self {
        Self::LAB
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// On the largest log-parameter step, i.e. relative to the parameter.
    pub step_tol: f64,
    /// On the largest `|Jᵀr|_k / (|J_k| |r|)`.
    pub gradient_tol: f64,
    /// Central-difference step in log space.
    pub fd_step: f64,
    pub units: ParameterUnits,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 200, step_tol: 1e-10, gradient_tol: 1e-8, fd_step: 1e-6, units: ParameterUnits::LAB }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub motion: Motion,
    /// m³
    pub alpha: f64,
    /// m²
    pub sigma_abs: f64,
    /// Standard errors from the covariance diagonal (m³, m²).
    pub alpha_err: f64,
    pub sigma_err: f64,
    /// Covariance of `(α, σ)` in SI units.
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
    /// `χ²` after every accepted step, starting with the initial guess.
    pub history: Vec<f64>,
    pub converged: bool,
    /// `σ` hit the lower boundary of the search space.
    pub at_boundary: bool,
    /// One-sided 95% profile bound on `σ` (m²), reported when `σ` is
    /// consistent with zero.
    pub sigma_upper_bound: Option<f64>,
}

impl FitResult {
    pub fn chi2_per_dof(&self) -> f64 {
        if self.dof == 0 {
            return f64::NAN;
        }
        self.chi2 / self.dof as f64
    }

    pub fn alpha_a3(&self) -> f64 {
        self.alpha / ANGSTROM3
    }

    /// Fails with the best point when the optimizer did not converge.
    pub fn require_converged(&self) -> Result<&Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                what: format!(
                    "{} fit after {} iterations (best alpha {:.6e} m^3, sigma {:.6e} m^2)",
                    self.motion.label(),
                    self.iterations,
                    self.alpha,
                    self.sigma_abs
                ),
                residual: self.chi2,
            })
        }
    }
}

fn to_log(alpha: f64, sigma: f64, u: &ParameterUnits) -> [f64; 2] {
    [(alpha / u.alpha).ln(), (sigma / u.sigma + LOG_EPS).ln()]
}

fn from_log(q: &[f64], u: &ParameterUnits) -> (f64, f64) {
    let alpha = q[0].exp() * u.alpha;
    let sigma = ((q[1].exp() - LOG_EPS) * u.sigma).max(0.0);
    (alpha, sigma)
}

fn residuals(setup: &FitSetup, data: &PowerScanDataset, alpha: f64, sigma: f64) -> Result<Vec<f64>> {
    data.points
        .iter()
        .map(|p| Ok((p.visibility - setup.model(alpha, sigma, p.power)?) / p.sigma))
        .collect()
}

/// Weighted least-squares fit of `(α, σ_abs)` from `initial` (SI units).
/// Returns a result with `converged = false` and the best point found when
/// the iteration limit is reached.
pub fn fit(data: &PowerScanDataset, setup: &FitSetup, initial: (f64, f64), options: &FitOptions) -> Result<FitResult> {
    let (a0, s0) = initial;
    if !(a0.is_finite() && a0 > 0.0 && s0.is_finite() && s0 > 0.0) {
        return Err(Error::invalid(format!("initial guess must be positive, got alpha {a0}, sigma {s0}")));
    }
    if data.points.len() <= 2 {
        return Err(Error::invalid("need more data points than parameters"));
    }
    let u = options.units;
    let f = |q: &[f64]| {
        let (a, s) = from_log(q, &u);
        residuals(setup, data, a, s)
    };
    let out = levenberg_marquardt(&f, &to_log(a0, s0, &u), options)?;
    let (alpha, sigma_abs) = from_log(&out.q, &u);

    // dp/dq = (α, σ + ε u_σ)
    let scale = [alpha, out.q[1].exp() * u.sigma];
    let jtj = normal_matrix(&out.jacobian, 2);
    let inv = invert2(&jtj);
    let mut covariance = [[f64::INFINITY; 2]; 2];
    if let Some(inv) = inv {
        for i in 0..2 {
            for j in 0..2 {
                covariance[i][j] = scale[i] * inv[i][j] * scale[j];
            }
        }
    }
    let at_boundary = sigma_abs <= 1e-12 * u.sigma;
    let mut result = FitResult {
        motion: setup.motion,
        alpha,
        sigma_abs,
        alpha_err: covariance[0][0].max(0.0).sqrt(),
        sigma_err: covariance[1][1].max(0.0).sqrt(),
        covariance,
        chi2: out.cost,
        dof: data.points.len() - 2,
        iterations: out.iterations,
        history: out.history,
        converged: out.converged,
        at_boundary,
        sigma_upper_bound: None,
    };
    if result.converged && (at_boundary || result.sigma_abs - 1.96 * result.sigma_err <= 0.0) {
        result.sigma_upper_bound = Some(profile_upper_bound(data, setup, &result, options)?);
    }
    Ok(result)
}

/// Smallest `σ > σ̂` with `min_α χ²(α, σ) - χ²_min = 2.71`.
pub fn profile_upper_bound(
    data: &PowerScanDataset,
    setup: &FitSetup,
    best: &FitResult,
    options: &FitOptions,
) -> Result<f64> {
    let u = options.units;
    // Δχ²(σ) - 2.71 with α re-minimized, and the minimizing α.
    let profile = |sigma: f64, alpha_start: f64| -> Result<(f64, f64)> {
        let f = |q: &[f64]| residuals(setup, data, q[0].exp() * u.alpha, sigma);
        let out = levenberg_marquardt(&f, &[(alpha_start / u.alpha).ln()], options)?;
        Ok((out.cost - best.chi2 - PROFILE_DELTA_CHI2, out.q[0].exp() * u.alpha))
    };
    let mut scale = best.sigma_abs.max(best.sigma_err);
    if !(scale.is_finite() && scale > 0.0) {
        // Singular covariance at the boundary: start where absorption is as
        // strong as the phase modulation.
        scale = 1e-3 * setup.balanced_sigma(best.alpha)?;
    }
    let (mut lo, mut g_lo) = (best.sigma_abs, -PROFILE_DELTA_CHI2);
    let mut hi = 2.0 * scale;
    let mut alpha = best.alpha;
    let mut doublings = 0;
    let mut g_hi = loop {
        let (g, a) = profile(hi, alpha)?;
        if g > 0.0 {
            break g;
        }
        (lo, g_lo, alpha) = (hi, g, a);
        hi *= 2.0;
        doublings += 1;
        if doublings > 80 {
            return Err(Error::NotConverged { what: "sigma profile never reaches delta chi2 = 2.71".into(), residual: g });
        }
    };
    // Illinois false position on the bracket.
    let mut side = 0;
    for _ in 0..200 {
        if hi - lo <= 1e-8 * hi {
            break;
        }
        let mut mid = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        let (g, a) = profile(mid, alpha)?;
        if g == 0.0 {
            return Ok(mid);
        }
        if g > 0.0 {
            (hi, g_hi) = (mid, g);
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        } else {
            (lo, g_lo, alpha) = (mid, g, a);
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        }
        if g.abs() < 1e-9 {
            return Ok(mid);
        }
    }
    Ok(0.5 * (lo + hi))
}

struct LmOutcome {
    q: Vec<f64>,
    cost: f64,
    /// Row-major `n_res × n_par` Jacobian at `q`.
    jacobian: Vec<f64>,
    iterations: usize,
    history: Vec<f64>,
    converged: bool,
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn jacobian<F>(f: &F, q: &[f64], n_res: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = q.len();
    let mut jac = vec![0.0; n_res * n];
    for k in 0..n {
        let mut plus = q.to_vec();
        let mut minus = q.to_vec();
        plus[k] += h;
        minus[k] -= h;
        let rp = f(&plus)?;
        let rm = f(&minus)?;
        for i in 0..n_res {
            jac[i * n + k] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn normal_matrix(jac: &[f64], n: usize) -> Vec<Vec<f64>> {
    let rows = jac.len() / n;
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..rows {
        for k in 0..n {
            for l in 0..n {
                a[k][l] += jac[i * n + k] * jac[i * n + l];
            }
        }
    }
    a
}

fn invert2(a: &[Vec<f64>]) -> Option<[[f64; 2]; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if !(det.is_finite() && det.abs() > 0.0) {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

/// Solve `a x = b` for a small dense system by Gaussian elimination with
/// partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

fn levenberg_marquardt<F>(f: &F, q0: &[f64], options: &FitOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = q0.len();
    let mut q = q0.to_vec();
    let mut r = f(&q)?;
    let n_res = r.len();
    let mut cost = cost_of(&r);
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut jac = jacobian(f, &q, n_res, options.fd_step)?;

    for iteration in 1..=options.max_iterations {
        let a = normal_matrix(&jac, n);
        let g: Vec<f64> = (0..n).map(|k| (0..n_res).map(|i| jac[i * n + k] * r[i]).sum()).collect();
        let r_norm = cost.sqrt();
        let scaled_gradient = (0..n)
            .map(|k| {
                let col = a[k][k].sqrt();
                if col == 0.0 || r_norm == 0.0 {
                    0.0
                } else {
                    g[k].abs() / (col * r_norm)
                }
            })
            .fold(0.0, f64::max);
        if cost == 0.0 || scaled_gradient < options.gradient_tol {
            return Ok(LmOutcome { q, cost, jacobian: jac, iterations: iteration - 1, history, converged: true });
        }

        loop {
            let mut damped = a.clone();
            for k in 0..n {
                damped[k][k] += lambda * a[k][k].max(1e-300);
            }
            let step = solve(damped, g.iter().map(|x| -x).collect());
            let step = match step {
                Some(s) if s.iter().all(|x| x.is_finite()) => s,
                _ => {
                    lambda *= 10.0;
                    if lambda > 1e30 {
                        return Ok(LmOutcome { q, cost, jacobian: jac, iterations: iteration, history, converged: false });
                    }
                    continue;
                }
            };
            let mut step_size = step.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            // Log-space trust cap: one step changes a parameter by at most e^5.
            let shrink = if step_size > MAX_LOG_STEP { MAX_LOG_STEP / step_size } else { 1.0 };
            step_size *= shrink;
            let trial: Vec<f64> = q.iter().zip(&step).map(|(a, b)| a + shrink * b).collect();
            // A trial the model cannot evaluate counts as a rejected step.
            let trial_cost = match f(&trial) {
                Ok(tr) => {
                    let c = cost_of(&tr);
                    if c.is_finite() { Some((tr, c)) } else { None }
                }
                Err(_) => None,
            };
            if let Some((trial_r, trial_cost)) = trial_cost.filter(|(_, c)| *c < cost) {
                q = trial;
                r = trial_r;
                cost = trial_cost;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-15);
                jac = jacobian(f, &q, n_res, options.fd_step)?;
                if step_size < options.step_tol {
                    return Ok(LmOutcome { q, cost, jacobian: jac, iterations: iteration, history, converged: true });
                }
                break;
            }
            // No decrease even for a vanishing step: the minimum is resolved
            // to floating-point precision.
            if step_size < options.step_tol {
                return Ok(LmOutcome { q, cost, jacobian: jac, iterations: iteration, history, converged: true });
            }
            lambda *= 10.0;
            if lambda > 1e30 {
                return Ok(LmOutcome { q, cost, jacobian: jac, iterations: iteration, history, converged: false });
            }
        }
    }
    Ok(LmOutcome { q, cost, jacobian: jac, iterations: options.max_iterations, history, converged: false })
}

/// Parameter ranges over the corner re-fits.
#[derive(Debug, Clone, PartialEq)]
pub struct SystematicBand {
    /// m³
    pub alpha: (f64, f64),
    /// m²
    pub sigma_abs: (f64, f64),
    pub corners: Vec<FitResult>,
    /// Every corner fit converged.
    pub all_converged: bool,
}

/// Re-fit with all powers scaled by `1 ± power_err` and the vertical laser
/// waist scaled by `1 ± waist_err`, starting from `result`.
pub fn systematic_band(
    data: &PowerScanDataset,
    setup: &FitSetup,
    result: &FitResult,
    power_err: f64,
    waist_err: f64,
    options: &FitOptions,
) -> Result<SystematicBand> {
    if !(0.0..1.0).contains(&power_err) || !(0.0..1.0).contains(&waist_err) {
        return Err(Error::invalid("relative systematic errors must lie in [0, 1)"));
    }
    let corners = [(1.0 + power_err, 1.0 + waist_err), (1.0 + power_err, 1.0 - waist_err), (1.0 - power_err, 1.0 + waist_err), (1.0 - power_err, 1.0 - waist_err)];
    let fits: Vec<FitResult> = corners
        .par_iter()
        .map(|&(ps, ws)| {
            let points = data.points.iter().map(|p| DataPoint { power: p.power * ps, ..*p }).collect();
            let shifted = PowerScanDataset { label: data.label.clone(), points };
            let corner_setup = FitSetup {
                interferometer: setup.interferometer.with_waist_y(setup.interferometer.laser.waist_y * ws),
                ..setup.clone()
            };
            fit(&shifted, &corner_setup, (result.alpha, result.sigma_abs.max(1e-3 * result.sigma_err).max(f64::MIN_POSITIVE)), options)
        })
        .collect::<Result<_>>()?;
    let span = |get: fn(&FitResult) -> f64| {
        fits.iter().map(get).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    Ok(SystematicBand {
        alpha: span(|f| f.alpha),
        sigma_abs: span(|f| f.sigma_abs),
        all_converged: fits.iter().all(|f| f.converged),
        corners: fits,
    })
}

/// Synthetic scan from the quantum model with relative Gaussian noise.
/// Each point gets `sigma_v = max(noise·V, 1e-4)`; draws outside `[0, 1]`
/// are redrawn.
pub fn synthesize(
    molecule: &Molecule,
    interferometer: &Interferometer,
    velocities: &VelocityDistribution,
    powers: &[f64],
    noise: f64,
    seed: u64,
) -> Result<PowerScanDataset> {
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::invalid(format!("noise level must be nonnegative, got {noise}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(powers.len());
    for &power in powers {
        let truth = velocity_averaged_visibility(velocities, molecule, interferometer, power, Motion::Quantum)?;
        let sigma = (noise * truth).max(MIN_SIGMA_V);
        let visibility = if noise == 0.0 {
            truth
        } else {
            loop {
                let z: f64 = StandardNormal.sample(&mut rng);
                let v = truth + noise * truth * z;
                if (0.0..=1.0).contains(&v) {
                    break v;
                }
            }
        };
        points.push(DataPoint { power, visibility, sigma });
    }
    PowerScanDataset::new(molecule.name.clone(), points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::power_scan;
    use crate::physics::presets;

    fn c60_setup(motion: Motion) -> FitSetup {
        FitSetup {
            molecule: presets::c60(),
            interferometer: presets::interferometer(1.0),
            velocities: VelocityDistribution::new(presets::C60_MEAN_VELOCITY, presets::C60_REL_FWHM).unwrap(),
            motion,
        }
    }

    fn powers() -> Vec<f64> {
        (1..=12).map(|i| 100.0 * i as f64 / 12.0).collect()
    }

    fn guess() -> (f64, f64) {
        (88.9 * ANGSTROM3, 1.4e-22)
    }

    #[test]
    fn dataset_validation() {
        let p = |power, sigma| DataPoint { power, visibility: 0.1, sigma };
        assert!(PowerScanDataset::new("x", vec![p(1.0, 0.01); 3]).is_err());
        assert!(PowerScanDataset::new("x", vec![p(1.0, 0.01), p(2.0, 0.01), p(3.0, 0.01), p(3.0, 0.01)]).is_err());
        assert!(PowerScanDataset::new("x", vec![p(1.0, 0.01), p(2.0, 0.0), p(3.0, 0.01), p(4.0, 0.01)]).is_err());
        assert!(PowerScanDataset::new("x", vec![p(1.0, 0.01), p(2.0, 0.01), p(3.0, 0.01), p(4.0, 0.01)]).is_ok());
    }

    #[test]
    fn linear_solver() {
        let x = solve(vec![vec![0.0, 2.0], vec![3.0, 1.0]], vec![4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn noise_free_data_is_recovered_exactly() {
        let setup = c60_setup(Motion::Quantum);
        let data = synthesize(&setup.molecule, &setup.interferometer, &setup.velocities, &powers(), 0.0, 1).unwrap();
        let r = fit(&data, &setup, guess(), &FitOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.chi2_per_dof() < 1e-10, "{}", r.chi2_per_dof());
        assert!((r.alpha / setup.molecule.alpha_opt - 1.0).abs() < 1e-6);
        assert!((r.sigma_abs / setup.molecule.sigma_abs - 1.0).abs() < 1e-6);
        assert!(r.history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn zero_noise_matches_power_scan() {
        let setup = c60_setup(Motion::Quantum);
        let data = synthesize(&setup.molecule, &setup.interferometer, &setup.velocities, &powers(), 0.0, 3).unwrap();
        let scan = power_scan(&setup.molecule, &setup.interferometer, &setup.velocities, &powers()).unwrap();
        for (p, s) in data.points.iter().zip(&scan) {
            assert_eq!(p.visibility, s.visibility_qm);
        }
    }

    #[test]
    fn synthesis_is_seeded() {
        let setup = c60_setup(Motion::Quantum);
        let a = synthesize(&setup.molecule, &setup.interferometer, &setup.velocities, &powers(), 0.02, 9).unwrap();
        let b = synthesize(&setup.molecule, &setup.interferometer, &setup.velocities, &powers(), 0.02, 9).unwrap();
        let c = synthesize(&setup.molecule, &setup.interferometer, &setup.velocities, &powers(), 0.02, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.points.iter().all(|p| (0.0..=1.0).contains(&p.visibility)));
    }

    #[test]
    fn noisy_fit_objective_decreases_and_covariance_is_psd() {
        let setup = c60_setup(Motion::Quantum);
        let data = synthesize(&setup.molecule, &setup.interferometer, &setup.velocities, &powers(), 0.02, 4).unwrap();
        let r = fit(&data, &setup, guess(), &FitOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.history.windows(2).all(|w| w[1] < w[0]));
        let c = r.covariance;
        assert!((c[0][1] - c[1][0]).abs() <= 1e-12 * (c[0][0] * c[1][1]).sqrt());
        assert!(c[0][0] > 0.0 && c[1][1] > 0.0 && c[0][0] * c[1][1] - c[0][1] * c[1][0] >= 0.0);
        assert_eq!(r.alpha_err, c[0][0].sqrt());
        assert!(r.sigma_upper_bound.is_none());
    }

    #[test]
    fn fit_is_unit_and_order_invariant() {
        let setup = c60_setup(Motion::Quantum);
        let data = synthesize(&setup.molecule, &setup.interferometer, &setup.velocities, &powers(), 0.02, 5).unwrap();
        let lab = fit(&data, &setup, guess(), &FitOptions::default()).unwrap();
        let si = fit(&data, &setup, guess(), &FitOptions { units: ParameterUnits::SI, ..Default::default() }).unwrap();
        assert!((lab.alpha / si.alpha - 1.0).abs() < 1e-8);
        assert!((lab.sigma_abs / si.sigma_abs - 1.0).abs() < 1e-8);
        let mut reversed = data.clone();
        reversed.points.reverse();
        let rev = fit(&reversed, &setup, guess(), &FitOptions::default()).unwrap();
        assert!((lab.alpha / rev.alpha - 1.0).abs() < 1e-8);
        assert!((lab.sigma_abs / rev.sigma_abs - 1.0).abs() < 1e-8);
    }

    #[test]
    fn negligible_absorption_gives_upper_bound() {
        let setup = c60_setup(Motion::Quantum);
        let mol = setup.molecule.with_parameters(setup.molecule.alpha_opt, 1e-26).unwrap();
        let data = synthesize(&mol, &setup.interferometer, &setup.velocities, &powers(), 0.02, 6).unwrap();
        let r = fit(&data, &setup, guess(), &FitOptions::default()).unwrap();
        let ub = r.sigma_upper_bound.expect("sigma consistent with zero");
        assert!(ub > r.sigma_abs);
        assert!(ub < 1e-22, "{ub}");
    }

    #[test]
    fn band_follows_power_over_waist_scaling() {
        let setup = c60_setup(Motion::Quantum);
        let data = synthesize(&setup.molecule, &setup.interferometer, &setup.velocities, &powers(), 0.0, 1).unwrap();
        let opts = FitOptions::default();
        let r = fit(&data, &setup, guess(), &opts).unwrap();
        let band = systematic_band(&data, &setup, &r, 0.05, 0.10, &opts).unwrap();
        assert!(band.all_converged);
        let (lo, hi) = (0.9 / 1.05, 1.1 / 0.95);
        assert!((band.alpha.0 / r.alpha - lo).abs() < 1e-6);
        assert!((band.alpha.1 / r.alpha - hi).abs() < 1e-6);
        assert!((band.sigma_abs.0 / r.sigma_abs - lo).abs() < 1e-6);
        assert!((band.sigma_abs.1 / r.sigma_abs - hi).abs() < 1e-6);
        let zero = systematic_band(&data, &setup, &r, 0.0, 0.0, &opts).unwrap();
        assert!((zero.alpha.1 - zero.alpha.0).abs() < 1e-8 * r.alpha);
        assert!((zero.sigma_abs.1 - zero.sigma_abs.0).abs() < 1e-8 * r.sigma_abs);
    }

    #[test]
    fn classical_model_misfits_quantum_data() {
        let setup = c60_setup(Motion::Quantum);
        let data = synthesize(&setup.molecule, &setup.interferometer, &setup.velocities, &powers(), 0.02, 7).unwrap();
        let r = fit(&data, &setup.with_motion(Motion::Classical), guess(), &FitOptions::default()).unwrap();
        assert!(r.chi2_per_dof() > 10.0, "{}", r.chi2_per_dof());
    }
}
