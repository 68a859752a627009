//! Integer-order Bessel functions of real argument.
//!
//! `J_n(x)` and the exponentially scaled modified function `e^{-|x|} I_n(x)`
//! are evaluated with a convergent power series for `|x| <= 1` and with
//! Miller's backward recurrence otherwise. The recurrence is normalized with
//! the Neumann sums
//!
//! ```text
//! J_0(x) + 2 Σ_{k≥1} J_{2k}(x) = 1,        I_0(x) + 2 Σ_{k≥1} I_k(x) = e^x,
//! ```
//!
//! which keeps it accurate for arguments far beyond the order (the Talbot-Lau
//! coefficients need `|x|` up to a few hundred).
//!
//! Negative orders and arguments follow `J_{-n} = (-1)^n J_n`,
//! `J_n(-x) = (-1)^n J_n(x)`, `I_{-n} = I_n` and `I_n(-x) = (-1)^n I_n(x)`.

const SERIES_LIMIT: f64 = 1.0;
/// Above this argument `J_0`, `J_1` come from the Hankel expansion and higher
/// orders from upward recurrence, which is stable for `n < x`.
const J_ASYMPTOTIC: f64 = 2e4;
const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

#[inline]
fn parity(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bessel function of the first kind `J_n(x)`.
pub fn j(n: i32, x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    let order = n.unsigned_abs() as usize;
    let value = j_orders(order, x.abs())[order];
    let mut sign = 1.0;
    if n < 0 {
        sign *= parity(n as i64);
    }
    if x < 0.0 {
        sign *= parity(n as i64);
    }
    sign * value
}

/// Exponentially scaled modified Bessel function `e^{-|x|} I_n(x)`.
pub fn i_scaled(n: i32, x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    let order = n.unsigned_abs() as usize;
    let value = i_scaled_orders(order, x.abs())[order];
    if x < 0.0 {
        parity(n as i64) * value
    } else {
        value
    }
}

/// Modified Bessel function `I_n(x)`. Overflows to infinity for `|x| ≳ 700`;
/// prefer [`i_scaled`] in products with decaying exponentials.
pub fn i(n: i32, x: f64) -> f64 {
    i_scaled(n, x) * x.abs().exp()
}

/// `[J_0(x), …, J_nmax(x)]` for `x >= 0`.
pub fn j_orders(nmax: usize, x: f64) -> Vec<f64> {
    debug_assert!(x >= 0.0, "j_orders expects a nonnegative argument");
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x <= SERIES_LIMIT {
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = series(n, x, -1.0);
        }
        return out;
    }
    if x >= J_ASYMPTOTIC && (nmax as f64) < x {
        out[0] = hankel_j(0, x);
        if nmax >= 1 {
            out[1] = hankel_j(1, x);
        }
        for n in 1..nmax {
            out[n + 1] = (2.0 * n as f64 / x) * out[n] - out[n - 1];
        }
        return out;
    }

    let top = (nmax as f64).max(x);
    let mut start = (top + 40.0 + 12.0 * x.cbrt()).ceil() as usize;
    start += start % 2;

    let mut above = 0.0_f64;
    let mut current = 1e-30_f64;
    let mut norm = 0.0_f64;
    for k in (1..=start).rev() {
        let below = (2.0 * k as f64 / x) * current - above;
        above = current;
        current = below;
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = current;
        }
        if idx > 0 && idx % 2 == 0 {
            norm += 2.0 * current;
        }
        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            above *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in out.iter_mut().skip(idx) {
                *v *= RESCALE_BY;
            }
        }
    }
    norm += current;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// `[e^{-x} I_0(x), …, e^{-x} I_nmax(x)]` for `x >= 0`.
pub fn i_scaled_orders(nmax: usize, x: f64) -> Vec<f64> {
    debug_assert!(x >= 0.0, "i_scaled_orders expects a nonnegative argument");
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x <= SERIES_LIMIT {
        let damp = (-x).exp();
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = damp * series(n, x, 1.0);
        }
        return out;
    }
    if x > 100.0 * ((nmax + 1) as f64).powi(2) {
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = asymptotic_i_scaled(n, x);
        }
        return out;
    }

    let start = nmax + 30 + (10.0 * x.sqrt()).ceil() as usize;
    let mut above = 0.0_f64;
    let mut current = 1e-30_f64;
    let mut norm = 0.0_f64;
    for k in (1..=start).rev() {
        let below = (2.0 * k as f64 / x) * current + above;
        above = current;
        current = below;
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = current;
        }
        if idx > 0 {
            norm += 2.0 * current;
        }
        if current > RESCALE_ABOVE {
            current *= RESCALE_BY;
            above *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in out.iter_mut().skip(idx) {
                *v *= RESCALE_BY;
            }
        }
    }
    norm += current;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Hankel expansion `J_n(x) ≈ √(2/πx) [P cos χ - Q sin χ]`,
/// `χ = x - nπ/2 - π/4`, for `x ≫ n²`.
fn hankel_j(n: usize, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let z = 8.0 * x;
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0;
    for k in 1..12 {
        term *= (mu - ((2 * k - 1) * (2 * k - 1)) as f64) / (k as f64 * z);
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (n as f64 / 2.0 + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `e^{-x} I_n(x) ≈ (2πx)^{-1/2} Σ_k (-1)^k a_k(n) / x^k` for `x ≫ n²`.
fn asymptotic_i_scaled(n: usize, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..30 {
        term *= -(mu - ((2 * k - 1) * (2 * k - 1)) as f64) / (k as f64 * 8.0 * x);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Ascending series `Σ_k (sign·x²/4)^k (x/2)^n / (k! (n+k)!)`; `sign = -1`
/// gives `J_n`, `sign = +1` gives `I_n`.
fn series(n: usize, x: f64, sign: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=n {
        term *= half / i as f64;
        if term == 0.0 {
            return 0.0;
        }
    }
    let q = sign * half * half;
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}
