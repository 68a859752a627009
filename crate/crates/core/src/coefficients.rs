//! Fourier, Talbot-Lau and characteristic coefficients of the sinusoidal
//! light grating, in closed form.
//!
//! Notation: `ξ` is the Talbot parameter, `φ₀` the maximal eikonal phase and
//! `n₀` the maximal mean number of absorbed photons.
//!
//! | coefficient | closed form |
//! |---|---|
//! | `b_j` | `(-i)^j e^{iφ₀/2} J_j(φ₀/2)` |
//! | `B_m(ξ)` | `J_m(-φ₀ sin πξ)` |
//! | `C_m(ξ)` | `J_m(-πφ₀ξ)` |
//! | `χ_m(ξ)` | `e^{-n₀ sin²πξ} I_m(n₀ sin²πξ)` |
//! | `B̂_m(ξ)` | `Σ_n B_n(ξ) χ_{m-n}(ξ/2)` |
//! | `Ĉ_m(ξ)` | `Σ_n C_n(ξ) χ_{m-n}(ξ/2)` |
//!
//! The absorption-dressed coefficients `B̂_m`, `Ĉ_m` are summed with the mixed
//! Graf addition theorem for even `m`; odd orders and the degenerate line
//! `|ζ_coh| = ζ_abs` fall back to the convolution sum.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bessel;
use crate::error::{Error, Result};

/// Terms below this magnitude count as negligible for truncated sums.
pub const TERM_FLOOR: f64 = 1e-14;
/// Consecutive negligible terms required before a sum is truncated.
pub const TAIL_RUN: usize = 5;
/// Hard cap on the index range of any truncated sum.
pub const MAX_TERMS: usize = 200;

const DEGENERATE_REL: f64 = 1e-6;

/// How the molecules move between the gratings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Motion {
    /// Matter-wave (Wigner function) propagation.
    Quantum,
    /// Classical point particles; produces only moiré-type fringes.
    Classical,
}

impl Motion {
    pub fn label(self) -> &'static str {
        match self {
            Motion::Quantum => "quantum",
            Motion::Classical => "classical",
        }
    }
}

/// The three arguments of the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaTriple {
    /// `φ₀ sin(πξ)`, the coherent diffraction strength.
    pub zeta_coh: f64,
    /// `n₀ sin²(πξ/2)`, the incoherent absorption strength.
    pub zeta_abs: f64,
    /// `φ₀ πξ`, the classical lensing strength.
    pub zeta_cl: f64,
}

impl ZetaTriple {
    pub fn new(xi: f64, phi0: f64, n0: f64) -> Self {
        Self {
            zeta_coh: phi0 * (PI * xi).sin(),
            zeta_abs: n0 * (0.5 * PI * xi).sin().powi(2),
            zeta_cl: phi0 * PI * xi,
        }
    }

    pub fn dispersive(&self, motion: Motion) -> f64 {
        match motion {
            Motion::Quantum => self.zeta_coh,
            Motion::Classical => self.zeta_cl,
        }
    }
}

/// A validated coefficient evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientRequest {
    pub order: i32,
    pub xi: f64,
    pub phi0: f64,
    pub n0: f64,
}

impl CoefficientRequest {
    pub fn new(order: i32, xi: f64, phi0: f64, n0: f64) -> Result<Self> {
        if !xi.is_finite() {
            return Err(Error::domain(format!("Talbot parameter must be finite, got {xi}")));
        }
        if !(phi0.is_finite() && phi0 >= 0.0) {
            return Err(Error::domain(format!("phi0 must be nonnegative, got {phi0}")));
        }
        if !(n0.is_finite() && n0 >= 0.0) {
            return Err(Error::domain(format!("n0 must be nonnegative, got {n0}")));
        }
        Ok(Self { order, xi, phi0, n0 })
    }

    pub fn b_hat(&self) -> f64 {
        b_hat(self.order, self.xi, self.phi0, self.n0)
    }

    pub fn c_hat(&self) -> f64 {
        c_hat(self.order, self.xi, self.phi0, self.n0)
    }

    pub fn zetas(&self) -> ZetaTriple {
        ZetaTriple::new(self.xi, self.phi0, self.n0)
    }
}

/// Fourier coefficient `b_j` of the grating transmission `exp(iφ(x))`.
pub fn fourier_b(j: i32, phi0: f64) -> Complex64 {
    let minus_i_pow = match j.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    minus_i_pow * Complex64::from_polar(1.0, 0.5 * phi0) * bessel::j(j, 0.5 * phi0)
}

/// Coherent Talbot-Lau coefficient `B_m(ξ) = J_m(-φ₀ sin πξ)`.
pub fn talbot_lau_b(m: i32, xi: f64, phi0: f64) -> f64 {
    bessel::j(m, -phi0 * (PI * xi).sin())
}

/// Classical coefficient `C_m(ξ) = J_m(-πφ₀ξ)`; not periodic in `ξ`.
pub fn classical_c(m: i32, xi: f64, phi0: f64) -> f64 {
    bessel::j(m, -PI * phi0 * xi)
}

/// Probability of a net transfer of `k` photon momenta after exactly `n`
/// absorptions: a balanced random walk of `n` unit steps.
pub fn prob_k_given_n(k: i64, n: u32) -> f64 {
    let n = n as i64;
    if k.abs() > n || (n + k) % 2 != 0 {
        return 0.0;
    }
    let r = (n + k) / 2;
    let r = r.min(n - r);
    let mut log_p = -(n as f64) * std::f64::consts::LN_2;
    for i in 1..=r {
        log_p += ((n - r + i) as f64 / i as f64).ln();
    }
    log_p.exp()
}

/// Probability of a net transfer of `k` photon momenta when the number of
/// absorptions is Poisson distributed with mean `nbar`: `e^{-n̄} I_k(n̄)`.
pub fn prob_k(k: i32, nbar: f64) -> f64 {
    debug_assert!(nbar >= 0.0);
    bessel::i_scaled(k, nbar)
}

/// Characteristic coefficient `χ_m(ξ)`.
pub fn chi(m: i32, xi: f64, n0: f64) -> f64 {
    debug_assert!(n0 >= 0.0);
    bessel::i_scaled(m, n0 * (PI * xi).sin().powi(2))
}

/// Absorption-dressed quantum coefficient `B̂_m(ξ)`.
pub fn b_hat(m: i32, xi: f64, phi0: f64, n0: f64) -> f64 {
    hat_coefficient(m, Motion::Quantum, xi, phi0, n0)
}

/// Absorption-dressed classical coefficient `Ĉ_m(ξ)`.
pub fn c_hat(m: i32, xi: f64, phi0: f64, n0: f64) -> f64 {
    hat_coefficient(m, Motion::Classical, xi, phi0, n0)
}

pub fn hat_coefficient(m: i32, motion: Motion, xi: f64, phi0: f64, n0: f64) -> f64 {
    debug_assert!(phi0 >= 0.0 && n0 >= 0.0);
    let z = ZetaTriple::new(xi, phi0, n0);
    hat_from_zetas(m, z.dispersive(motion), z.zeta_abs)
}

/// `Σ_n J_n(-ζ_d) e^{-ζ_a} I_{m-n}(ζ_a)` for a dispersive strength `ζ_d`
/// (`ζ_coh` or `ζ_cl`) and absorption strength `ζ_a ≥ 0`.
pub fn hat_from_zetas(m: i32, zeta_disp: f64, zeta_abs: f64) -> f64 {
    let degenerate = (zeta_disp.abs() - zeta_abs).abs() < DEGENERATE_REL * (zeta_disp.abs() + zeta_abs + 1.0);
    if m % 2 != 0 || degenerate {
        hat_by_convolution(m, zeta_disp, zeta_abs)
    } else {
        hat_closed_even(m, zeta_disp, zeta_abs)
    }
}

/// Closed form for even `m = 2ℓ`:
/// `e^{-ζ_a} ((ζ_d-ζ_a)/(ζ_d+ζ_a))^ℓ J_m(√(ζ_d²-ζ_a²))`, continued through
/// `J_m(iw) = (-1)^ℓ I_m(w)` when `|ζ_d| < ζ_a`. For even order the sign
/// factor inside `J_m` drops out and `ℓ` is an integer power, so both
/// branches are real.
fn hat_closed_even(m: i32, zeta_disp: f64, zeta_abs: f64) -> f64 {
    let half = m / 2;
    let diff = zeta_disp - zeta_abs;
    let sum = zeta_disp + zeta_abs;
    let disc = diff * sum;
    let ratio = (diff / sum).powi(half);
    if disc >= 0.0 {
        (-zeta_abs).exp() * ratio * bessel::j(m, disc.sqrt())
    } else {
        let w = (-disc).sqrt();
        let sign = if half % 2 == 0 { 1.0 } else { -1.0 };
        (w - zeta_abs).exp() * ratio * sign * bessel::i_scaled(m, w)
    }
}

/// Direct convolution over orders, truncated once [`TAIL_RUN`] consecutive
/// terms fall below [`TERM_FLOOR`] on each side of the centre `n = m`.
pub fn hat_by_convolution(m: i32, zeta_disp: f64, zeta_abs: f64) -> f64 {
    let reach = m.unsigned_abs() as usize + MAX_TERMS + 1;
    let js = bessel::j_orders(reach, zeta_disp.abs());
    let is = bessel::i_scaled_orders(MAX_TERMS + 1, zeta_abs);
    // J_n(-ζ_d) from tabulated J_{|n|}(|ζ_d|).
    let j_at = |n: i64| -> f64 {
        let mut v = js[n.unsigned_abs() as usize];
        let odd = n.rem_euclid(2) == 1;
        // J_n(-|z|) = (-1)^n J_n(|z|); J_{-n} = (-1)^n J_n.
        if odd && zeta_disp >= 0.0 {
            v = -v;
        }
        if odd && n < 0 {
            v = -v;
        }
        v
    };

    let m = m as i64;
    let mut total = j_at(m) * is[0];
    for direction in [1_i64, -1] {
        let mut quiet = 0;
        for t in 1..=MAX_TERMS as i64 {
            let n = m + direction * t;
            let term = j_at(n) * is[t as usize];
            total += term;
            if term.abs() < TERM_FLOOR {
                quiet += 1;
                if quiet >= TAIL_RUN {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
    }
    total
}

/// Residual `|LHS - RHS|` of the mixed addition theorem
///
/// ```text
/// ((v-u)/(v+u))^{n/2} J_n(-sgn(u+v) √(v²-u²)) = Σ_k I_{k+n}(u) J_k(v)
/// ```
///
/// with the right-hand side truncated at `|k| ≤ 80`. The left side is
/// evaluated on the principal branch, with `√(v²-u²) = i√(u²-v²)` and
/// `J_n(iw) = i^n I_n(w)` when `|v| < |u|`; `sgn(0) = +1`.
pub fn graf_mixed_theorem_check(u: f64, v: f64, n: i32) -> Result<f64> {
    if !(u.is_finite() && v.is_finite()) {
        return Err(Error::domain("Graf check needs finite arguments"));
    }
    if u == v || u + v == 0.0 {
        return Err(Error::domain(format!("degenerate Graf arguments u = {u}, v = {v}")));
    }
    let lhs = graf_lhs(u, v, n);
    let mut rhs = 0.0;
    for k in -80..=80 {
        rhs += bessel::i(k + n, u) * bessel::j(k, v);
    }
    Ok((lhs - Complex64::new(rhs, 0.0)).norm())
}

fn graf_lhs(u: f64, v: f64, n: i32) -> Complex64 {
    let sgn = if u + v >= 0.0 { 1.0 } else { -1.0 };
    let ratio = Complex64::new((v - u) / (v + u), 0.0).powf(0.5 * n as f64);
    let disc = v * v - u * u;
    let bessel_part = if disc >= 0.0 {
        Complex64::new(bessel::j(n, -sgn * disc.sqrt()), 0.0)
    } else {
        // J_n(-sgn·i·w) = (-sgn)^n i^n I_n(w)
        let w = (-disc).sqrt();
        let i_pow = Complex64::new(0.0, 1.0).powi(n);
        let s = if n.rem_euclid(2) == 0 { 1.0 } else { -sgn };
        i_pow * s * bessel::i(n, w)
    };
    ratio * bessel_part
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn b_is_kronecker_without_phase() {
        for j in -5..=5 {
            let b = fourier_b(j, 0.0);
            let expect = if j == 0 { 1.0 } else { 0.0 };
            assert_eq!(b, Complex64::new(expect, 0.0));
        }
    }

    #[test]
    fn b_parseval() {
        let total: f64 = (-40..=40).map(|j| fourier_b(j, 5.0).norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn talbot_lau_b_examples() {
        for xi in [0.0, 1.0, 2.0, -3.0, 7.0] {
            for m in -3..=3 {
                let expect = if m == 0 { 1.0 } else { 0.0 };
                assert!((talbot_lau_b(m, xi, 4.0) - expect).abs() < 1e-14);
            }
        }
        assert_relative_eq!(talbot_lau_b(2, 0.5, 3.0), 0.486_091_260_585_891, max_relative = 1e-13);
    }

    #[test]
    fn classical_c_limits() {
        for m in -3..=3 {
            let expect = if m == 0 { 1.0 } else { 0.0 };
            assert_eq!(classical_c(m, 0.0, 5.0), expect);
        }
        for m in -4..=4 {
            assert!((talbot_lau_b(m, 0.01, 5.0) - classical_c(m, 0.01, 5.0)).abs() <= 1e-4);
        }
        assert!((classical_c(2, 0.5, 5.0) - classical_c(2, 1.5, 5.0)).abs() > 1e-3);
    }

    #[test]
    fn random_walk_distribution() {
        assert_eq!(prob_k_given_n(0, 0), 1.0);
        assert_eq!(prob_k_given_n(1, 0), 0.0);
        assert_relative_eq!(prob_k_given_n(0, 2), 0.5, max_relative = 1e-15);
        assert_relative_eq!(prob_k_given_n(2, 2), 0.25, max_relative = 1e-15);
        assert_relative_eq!(prob_k_given_n(-2, 2), 0.25, max_relative = 1e-15);
        assert_eq!(prob_k_given_n(1, 2), 0.0);
        assert_eq!(prob_k_given_n(-1, 2), 0.0);
        for n in 0..=30 {
            let total: f64 = (-31..=31).map(|k| prob_k_given_n(k, n)).sum();
            assert!((total - 1.0).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn poisson_walk_matches_mixture_of_walks() {
        // Prob(k; n̄) = Σ_n Prob(k|n) Poisson(n; n̄)
        let nbar = 2.3_f64;
        for k in -6..=6 {
            let mut mix = 0.0;
            let mut poisson = (-nbar).exp();
            for n in 0..120_u32 {
                if n > 0 {
                    poisson *= nbar / n as f64;
                }
                mix += prob_k_given_n(k as i64, n) * poisson;
            }
            assert_relative_eq!(prob_k(k, nbar), mix, max_relative = 1e-12);
        }
    }

    #[test]
    fn prob_k_normalized_and_symmetric() {
        assert_eq!(prob_k(0, 0.0), 1.0);
        assert_eq!(prob_k(3, 0.0), 0.0);
        for nbar in [0.1, 1.0, 5.0, 10.0] {
            let total: f64 = (-60..=60).map(|k| prob_k(k, nbar)).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for k in 1..8 {
                assert_eq!(prob_k(k, nbar), prob_k(-k, nbar));
            }
        }
    }

    #[test]
    fn chi_properties() {
        for m in -3..=3 {
            assert_eq!(chi(m, 0.37, 0.0), if m == 0 { 1.0 } else { 0.0 });
        }
        let total: f64 = (-60..=60).map(|m| chi(m, 0.5, 4.65)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(chi(2, 0.3, 2.0) > 0.0);
        assert_eq!(chi(2, 0.3, 2.0), chi(-2, 0.3, 2.0));
    }

    #[test]
    fn hat_reductions() {
        for &xi in &[0.2, 0.5, 1.3, 8.5] {
            for m in [-4, -2, 0, 2, 4] {
                assert_relative_eq!(b_hat(m, xi, 3.0, 0.0), talbot_lau_b(m, xi, 3.0), epsilon = 1e-14);
                assert_relative_eq!(c_hat(m, xi, 3.0, 0.0), classical_c(m, xi, 3.0), epsilon = 1e-14);
                let za = 2.0 * (0.5 * PI * xi).sin().powi(2);
                let expect = bessel::i_scaled(m, za);
                assert_relative_eq!(b_hat(m, xi, 0.0, 2.0), expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn quantum_zeros_at_integer_talbot_parameter() {
        for phi0 in [1.0, 3.0, 5.0, 7.0] {
            for xi in [1.0, 2.0, 3.0] {
                assert!(b_hat(2, xi, phi0, 0.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn periodicity() {
        for &xi in &[0.13, 0.5, 0.77, 2.4] {
            assert_relative_eq!(talbot_lau_b(2, xi + 2.0, 3.0), talbot_lau_b(2, xi, 3.0), epsilon = 1e-13);
            assert_relative_eq!(talbot_lau_b(3, xi + 1.0, 3.0), -talbot_lau_b(3, xi, 3.0), epsilon = 1e-13);
            assert_relative_eq!(b_hat(2, xi + 1.0, 3.0, 0.0), b_hat(2, xi, 3.0, 0.0), epsilon = 1e-13);
            assert_relative_eq!(b_hat(2, xi + 2.0, 3.0, 1.5), b_hat(2, xi, 3.0, 1.5), epsilon = 1e-13);
        }
    }

    #[test]
    fn classical_and_quantum_agree_for_small_xi() {
        assert!((c_hat(2, 0.01, 5.0, 2.5) - b_hat(2, 0.01, 5.0, 2.5)).abs() < 1e-4);
    }

    #[test]
    fn degenerate_line_uses_convolution() {
        // ζ_coh = ζ_abs exactly: 0/0-structured prefactor in the closed form.
        let xi = 0.5_f64;
        let phi0 = 2.0;
        let n0 = phi0 * (PI * xi).sin() / (0.5 * PI * xi).sin().powi(2);
        let z = ZetaTriple::new(xi, phi0, n0);
        assert!((z.zeta_coh - z.zeta_abs).abs() < 1e-12);
        let v = b_hat(2, xi, phi0, n0);
        assert!(v.is_finite());
        assert_relative_eq!(v, hat_by_convolution(2, z.zeta_coh, z.zeta_abs), epsilon = 1e-15);
        // Closed form just off the line agrees with the value on it.
        let near = hat_closed_even(2, z.zeta_coh * (1.0 + 1e-4), z.zeta_abs);
        assert!((near - v).abs() < 1e-6);
    }

    #[test]
    fn graf_examples() {
        assert!(graf_mixed_theorem_check(0.0, 3.0, 2).unwrap() < 1e-12);
        assert!(graf_mixed_theorem_check(1.0, 3.0, 2).unwrap() < 1e-10);
        assert!(graf_mixed_theorem_check(3.0, 1.0, 2).unwrap() < 1e-10);
        assert!(graf_mixed_theorem_check(-2.5, 1.0, 3).unwrap() < 1e-10);
        assert!(graf_mixed_theorem_check(2.0, 2.0, 2).is_err());
        assert!(graf_mixed_theorem_check(2.0, -2.0, 2).is_err());
    }

    #[test]
    fn negative_phase_rejected_by_request() {
        assert!(CoefficientRequest::new(2, 0.5, -1.0, 0.0).is_err());
        assert!(CoefficientRequest::new(2, 0.5, 1.0, -0.1).is_err());
        let r = CoefficientRequest::new(2, 0.5, 3.0, 0.3).unwrap();
        assert_eq!(r.b_hat(), b_hat(2, 0.5, 3.0, 0.3));
        let z = r.zetas();
        assert!(z.zeta_coh.abs() <= 3.0 && z.zeta_abs >= 0.0);
    }

    proptest! {
        #[test]
        fn closed_form_matches_convolution(
            zd in -30.0f64..30.0,
            za in 0.0f64..15.0,
            half in -4i32..=4,
        ) {
            let m = 2 * half;
            let closed = hat_closed_even(m, zd, za);
            let conv = hat_by_convolution(m, zd, za);
            let rel_gap = (zd.abs() - za).abs() / (zd.abs() + za + 1.0);
            prop_assume!(rel_gap > 1e-3);
            prop_assert!((closed - conv).abs() < 1e-10, "closed {closed} conv {conv}");
        }

        #[test]
        fn characteristic_coefficients_normalize(xi in -3.0f64..3.0, n0 in 0.0f64..10.0) {
            let total: f64 = (-80..=80).map(|m| chi(m, xi, n0)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
