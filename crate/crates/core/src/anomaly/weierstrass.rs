//! Real slice of the Weierstrass function with invariants `g₂ = 4d²`,
//! `g₃ = 0`, i.e. `℘′² = 4℘(℘ − d)(℘ + d)`.
//!
//! Evaluation uses the Laurent series at the pole for `|z| ≤ τ₊/4` and the
//! duplication formula to walk back out to `x`. No reduction modulo the
//! period is performed, so periodicity is a genuine property of the output.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Highest power of `z` kept in the Laurent series.
pub const LAURENT_MAX_POWER: usize = 14;

/// The series is used for `|z| ≤ SERIES_RADIUS · τ₊`. At `τ₊/2` the
/// truncation error is about `1e−10`, which duplication amplifies; a quarter
/// period keeps it below `1e−15`.
pub const SERIES_RADIUS: f64 = 0.25;

/// Distance (relative to `τ₊`) below which a point counts as a pole.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// Coefficients `c_k` of `℘(z) = z⁻² + Σ_{k≥2} c_k z^{2k−2}` for
/// `g₂ = 4d²`, `g₃ = 0`, up to `z^max_power`.
pub fn laurent_coefficients(d: f64, max_power: usize) -> Vec<f64> {
    let kmax = max_power / 2 + 1;
    let mut c = vec![0.0; kmax + 1];
    if kmax >= 2 {
        c[2] = 4.0 * d * d / 20.0;
    }
    for k in 4..=kmax {
        let s: f64 = (2..=k - 2).map(|m| c[m] * c[k - m]).sum();
        c[k] = 3.0 / (((2 * k + 1) * (k - 3)) as f64) * s;
    }
    c
}

fn laurent(z: f64, coeffs: &[f64]) -> (f64, f64) {
    let z2 = z * z;
    let mut p = 1.0 / z2;
    let mut dp = -2.0 / (z2 * z);
    for (k, c) in coeffs.iter().enumerate().skip(2) {
        if *c == 0.0 {
            continue;
        }
        let e = (2 * k - 2) as i32;
        p += c * z.powi(e);
        dp += c * e as f64 * z.powi(e - 1);
    }
    (p, dp)
}

/// `(℘(2z), ℘′(2z))` from `(℘(z), ℘′(z))`.
fn duplicate(p: f64, q: f64, d: f64) -> (f64, f64) {
    let g2 = 4.0 * d * d;
    let r = 6.0 * p * p - g2 / 2.0;
    let q2 = q * q;
    let p2 = -2.0 * p + r * r / (4.0 * q2);
    let dp2 = -q + 3.0 * p * r / q - r * r * r / (4.0 * q2 * q);
    (p2, dp2)
}

/// `(℘(x), ℘′(x))` on the real line.
pub fn weierstrass_p(x: f64, d: f64) -> Result<(f64, f64)> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::BadParams(format!("d must be positive, got {d}")));
    }
    if !x.is_finite() {
        return Err(Error::BadParams(format!("non-finite argument {x}")));
    }
    let tau = unit_half_period() / d.sqrt();
    let period = 2.0 * tau;
    let nearest = (x / period).round() * period;
    if (x - nearest).abs() <= POLE_TOLERANCE * tau {
        return Err(Error::AtPole(x));
    }
    let mut n = 0;
    let mut z = x;
    while z.abs() > SERIES_RADIUS * tau {
        z /= 2.0;
        n += 1;
    }
    let coeffs = laurent_coefficients(d, LAURENT_MAX_POWER);
    let (mut p, mut q) = laurent(z, &coeffs);
    for _ in 0..n {
        (p, q) = duplicate(p, q, d);
    }
    Ok((p, q))
}

/// `℘″ = 6℘² − 2d²` and `℘‴ = 12℘℘′`.
pub fn higher_derivatives(p: f64, dp: f64, d: f64) -> (f64, f64) {
    (6.0 * p * p - 2.0 * d * d, 12.0 * p * dp)
}

/// Residual of the defining equation, scaled by `1 + |℘|³`.
pub fn ode_relative_residual(p: f64, dp: f64, d: f64) -> f64 {
    (dp * dp - 4.0 * p * p * p + 4.0 * d * d * p).abs() / (1.0 + p.abs().powi(3))
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature on a finite interval with smooth integrand.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `∫_u^∞ dv / √(4v³ − 4d²v)` for `u ≥ d`: with `v = u + s²` and
/// `s = t/(1 − t)` the integrand is smooth on `[0, 1]`.
pub fn inverse_integral(u: f64, d: f64) -> f64 {
    let f = |t: f64| {
        if t >= 1.0 {
            return 1.0;
        }
        let s = t / (1.0 - t);
        let v = u + s * s;
        // 4v(v−d)(v+d) = 4 v (u − d + s²)(v + d); the s factor of dv = 2s ds
        // cancels against √(v − d) only when u = d
        let vm = u - d + s * s;
        let jac = 1.0 / ((1.0 - t) * (1.0 - t));
        if u == d {
            jac / (v * (v + d)).sqrt()
        } else {
            2.0 * s * jac / (4.0 * v * vm * (v + d)).sqrt()
        }
    };
    integrate(&f, 0.0, 1.0, 1e-14)
}

/// Real half-period `τ₊ = ∫_d^∞ du / √(4u³ − 4d²u)`.
pub fn half_period(d: f64) -> f64 {
    inverse_integral(d, d)
}

/// `τ₊` for `d = 1`, computed once; other values follow from the scaling
/// `℘(z; 4d², 0) = d ℘(√d z; 4, 0)`.
fn unit_half_period() -> f64 {
    static TAU: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *TAU.get_or_init(|| half_period(1.0))
}

/// Arithmetic–geometric mean.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a.abs() {
            break;
        }
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
    }
    a
}

/// `τ₊ = K(1/√2) / √(2d)` with `K(1/√2) = π / (2 AGM(1, 1/√2))`.
pub fn half_period_agm(d: f64) -> f64 {
    let k = PI / (2.0 * agm(1.0, std::f64::consts::FRAC_1_SQRT_2));
    k / (2.0 * d).sqrt()
}
