//! Fourier coefficients of periodic integrands by direct quadrature, and the
//! quadrature oracles for `b_j`, `C_m`, `χ_m` and the Bessel functions.
//!
//! Every coefficient is `c_n = ∫_{-1/2}^{1/2} g(t) e^{-2πint} dt` with `t = x/d`.
//! The gated entry points double the node count until the largest change
//! over all requested orders drops below [`CONVERGENCE_TOL`].

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::constants::H;
use crate::error::{Error, Result};
use crate::physics::{classical_kick, eikonal_phase};

pub const MIN_NODES: usize = 64;
pub const CONVERGENCE_TOL: f64 = 1e-10;
const MAX_NODES: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// Equispaced rectangle rule on the period; spectrally accurate for
    /// smooth periodic integrands.
    Trapezoid,
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub rule: Rule,
}

impl QuadratureSpec {
    pub fn new(nodes: usize, rule: Rule) -> Result<Self> {
        if nodes < MIN_NODES {
            return Err(Error::invalid(format!("quadrature needs at least {MIN_NODES} nodes, got {nodes}")));
        }
        Ok(Self { nodes, rule })
    }

    pub fn trapezoid(nodes: usize) -> Result<Self> {
        Self::new(nodes, Rule::Trapezoid)
    }

    pub fn doubled(&self) -> Self {
        Self { nodes: 2 * self.nodes, rule: self.rule }
    }

    /// Nodes and weights on `[-1/2, 1/2]`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        match self.rule {
            Rule::Trapezoid => {
                let w = 1.0 / self.nodes as f64;
                (0..self.nodes).map(|i| (-0.5 + i as f64 * w, w)).collect()
            }
            Rule::GaussLegendre => gauss_legendre(self.nodes).into_iter().map(|(x, w)| (0.5 * x, 0.5 * w)).collect(),
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    out
}

/// Smallest power-of-two node count that resolves an integrand of the given
/// Fourier bandwidth together with orders up to `max_order`.
pub fn nodes_for(bandwidth: f64, max_order: i32) -> usize {
    let need = 2.0 * (bandwidth.abs() + max_order.unsigned_abs() as f64 + 40.0);
    (need.ceil() as usize).next_power_of_two().max(MIN_NODES)
}

/// Coefficients for every order in `orders` with a fixed rule.
pub fn fourier_coefficients_with<G>(spec: &QuadratureSpec, g: G, orders: RangeInclusive<i32>) -> Vec<Complex64>
where
    G: Fn(f64) -> Complex64,
{
    let points = spec.points();
    let start = *orders.start() as f64;
    let mut acc: Vec<Complex64> = points
        .iter()
        .map(|&(t, w)| w * g(t) * Complex64::from_polar(1.0, -2.0 * PI * start * t))
        .collect();
    let step: Vec<Complex64> = points.iter().map(|&(t, _)| Complex64::from_polar(1.0, -2.0 * PI * t)).collect();
    let mut out = Vec::with_capacity(orders.clone().count());
    for _ in orders {
        out.push(acc.iter().sum());
        for (a, s) in acc.iter_mut().zip(&step) {
            *a *= s;
        }
    }
    out
}

/// Convergence-gated coefficients: trapezoid rule starting from
/// [`nodes_for`], doubled until two successive results agree to
/// [`CONVERGENCE_TOL`].
pub fn fourier_coefficients<G>(g: G, orders: RangeInclusive<i32>, bandwidth: f64) -> Result<Vec<Complex64>>
where
    G: Fn(f64) -> Complex64,
{
    let max_order = orders.start().abs().max(orders.end().abs());
    let spec = QuadratureSpec { nodes: nodes_for(bandwidth, max_order), rule: Rule::Trapezoid };
    gated(&spec, &g, orders)
}

pub fn gated<G>(spec: &QuadratureSpec, g: &G, orders: RangeInclusive<i32>) -> Result<Vec<Complex64>>
where
    G: Fn(f64) -> Complex64,
{
    let mut spec = *spec;
    let mut prev = fourier_coefficients_with(&spec, g, orders.clone());
    loop {
        let next_spec = spec.doubled();
        let next = fourier_coefficients_with(&next_spec, g, orders.clone());
        let change = prev.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if change < CONVERGENCE_TOL {
            return Ok(next);
        }
        if next_spec.nodes >= MAX_NODES {
            return Err(Error::NotConverged { what: "quadrature node doubling".into(), residual: change });
        }
        spec = next_spec;
        prev = next;
    }
}

/// `b_j` for `j ∈ orders`: Fourier coefficients of `exp(iφ(x))`.
pub fn quad_b_orders(orders: RangeInclusive<i32>, phi0: f64) -> Result<Vec<Complex64>> {
    fourier_coefficients(|t| Complex64::from_polar(1.0, eikonal_phase(t, phi0, 1.0)), orders, phi0)
}

pub fn quad_b(j: i32, phi0: f64) -> Result<Complex64> {
    Ok(quad_b_orders(j..=j, phi0)?[0])
}

pub fn quad_b_with(spec: &QuadratureSpec, j: i32, phi0: f64) -> Complex64 {
    fourier_coefficients_with(spec, |t| Complex64::from_polar(1.0, eikonal_phase(t, phi0, 1.0)), j..=j)[0]
}

/// `C_m` for `m ∈ orders`: Fourier coefficients of
/// `exp(-2πi ξ Q(x)/p_d)` with the classical kick `Q`.
pub fn quad_c_orders(orders: RangeInclusive<i32>, xi: f64, phi0: f64) -> Result<Vec<Complex64>> {
    // Work with a unit period: Q/p_d is scale free.
    let d = 1.0;
    let p_d = H / d;
    let g = |t: f64| Complex64::from_polar(1.0, -2.0 * PI * xi * classical_kick(t * d, phi0, d) / p_d);
    fourier_coefficients(g, orders, PI * phi0 * xi)
}

pub fn quad_c(m: i32, xi: f64, phi0: f64) -> Result<f64> {
    Ok(quad_c_orders(m..=m, xi, phi0)?[0].re)
}

/// `χ_m` for `m ∈ orders`: Fourier coefficients of the characteristic
/// function `X(ξ; x) = exp{-n̄(x)[1 - cos 2πξ]}`, `n̄(x) = n₀ sin²(πx/d)`.
pub fn quad_chi_orders(orders: RangeInclusive<i32>, xi: f64, n0: f64) -> Result<Vec<Complex64>> {
    let damp = 1.0 - (2.0 * PI * xi).cos();
    let g = |t: f64| {
        let nbar = n0 * (PI * t).sin().powi(2);
        Complex64::new((-nbar * damp).exp(), 0.0)
    };
    fourier_coefficients(g, orders, n0 * damp)
}

pub fn quad_chi(m: i32, xi: f64, n0: f64) -> Result<f64> {
    Ok(quad_chi_orders(m..=m, xi, n0)?[0].re)
}

/// `J_n(x) = ∫ e^{i(x sin 2πt - 2πnt)} dt` for `n ∈ orders`.
pub fn quad_bessel_j(orders: RangeInclusive<i32>, x: f64) -> Result<Vec<f64>> {
    let g = |t: f64| Complex64::from_polar(1.0, x * (2.0 * PI * t).sin());
    Ok(fourier_coefficients(g, orders, x)?.into_iter().map(|c| c.re).collect())
}

/// `e^{-x} I_n(x) = ∫ e^{x(cos 2πt - 1)} e^{-2πint} dt` for `x ≥ 0`.
pub fn quad_bessel_i_scaled(orders: RangeInclusive<i32>, x: f64) -> Result<Vec<f64>> {
    let g = |t: f64| Complex64::new((x * ((2.0 * PI * t).cos() - 1.0)).exp(), 0.0);
    Ok(fourier_coefficients(g, orders, x)?.into_iter().map(|c| c.re).collect())
}
