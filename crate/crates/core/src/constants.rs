//! Analytic constants: Φ, Γ, and the truncated Euler products C_r, A_r,
//! h_r(z), H(r, z) and λ_ℓ(y), each reported with a truncation-tail bound.
//!
//! Every product here has per-prime factors of the shape
//!
//! ```text
//!     f_p = (1 + a / (p − b)) · (1 − 1/p)^a
//! ```
//!
//! for a complex exponent `a` and a real shift `b`. Products are evaluated as
//! a compensated sum of `log f_p` in ascending prime order and exponentiated
//! once at the end.
//!
//! Tail bound: for `p > P` with `P > 2(|a| + |b|)`,
//! `|log f_p| <= c / p²` where
//!
//! ```text
//!     c = |a|² / (2 (1 − ρ)(1 − β)²) + |a||b| / (1 − β) + |a| / (2 (1 − 1/P)),
//!     ρ = |a| / (P − |b|),   β = |b| / P,
//! ```
//!
//! and `Σ_{p>P} 1/p² <= κ(P) / (P log P)` with `κ(P) = 1 + 2.5524 / log P`,
//! which follows by partial summation from `x/log x <= π(x) <= x/log x ·
//! (1 + 1.2762/log x)` (valid for `x >= 17`).

use num_complex::Complex64;
use thiserror::Error;

use crate::primes::{factorize, with_primes};
use crate::summation::ComplexSum;

/// Euler–Mascheroni constant, 0.577215664901532860606512090082 (30 digits).
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;
pub const EULER_GAMMA_DIGITS: &str = "0.577215664901532860606512090082";

/// Default truncation prime for every product.
pub const DEFAULT_TRUNCATION: u64 = 10_000_000;
pub const MIN_TRUNCATION: u64 = 100;
/// Default radius `R` bounding `|z|` and `r`.
pub const DEFAULT_RADIUS: f64 = 4.0;
/// Inputs closer than this to a pole of λ_ℓ are rejected.
pub const POLE_EXCLUSION: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstantsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("truncation prime P = {0} is below the minimum 100")]
    TruncationTooSmall(u64),
    #[error("factor vanishes at p = {p}")]
    Singularity { p: u64 },
    #[error("y = {y} lies within 1e-6 of the pole at p = {p}")]
    Pole { p: u64, y: Complex64 },
}

/// `r = (k − 1) / log₂ x` with `log₂ x = ln ln x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RParameter {
    pub k: u32,
    pub x: f64,
    pub r: f64,
}

impl RParameter {
    /// Requires `x > e` so that `ln ln x > 0`.
    pub fn new(k: u32, x: f64) -> Result<Self, ConstantsError> {
        if k == 0 {
            return Err(ConstantsError::Domain("k must be at least 1".into()));
        }
        let ll = loglog(x);
        if !(ll > 0.0) {
            return Err(ConstantsError::Domain(format!("ln ln x must be positive, x = {x}")));
        }
        Ok(Self {
            k,
            x,
            r: f64::from(k - 1) / ll,
        })
    }
}

/// `ln ln x`, the iterated logarithm written log₂ x in this field.
pub fn loglog(x: f64) -> f64 {
    x.ln().ln()
}

/// A truncated Euler product together with its tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerProductResult<T> {
    pub value: T,
    pub truncation_prime: u64,
    /// Bound on `|log(full product) − log(truncated product)|`.
    pub tail_bound: f64,
}

/// Standard normal CDF Φ(y).
pub fn normal_cdf(y: f64) -> f64 {
    0.5 * libm::erfc(-y / std::f64::consts::SQRT_2)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(z) by the Lanczos approximation (g = 7, 9 terms) with reflection.
pub fn gamma(z: Complex64) -> Complex64 {
    if let Some(f) = small_factorial(z) {
        return Complex64::new(f, 0.0);
    }
    if z.re < 0.5 {
        let pi = std::f64::consts::PI;
        return pi / ((pi * z).sin() * gamma(1.0 - z));
    }
    lanczos(z)
}

/// 1/Γ(z), entire: exactly zero at the non-positive integers.
pub fn recip_gamma(z: Complex64) -> Complex64 {
    if let Some(f) = small_factorial(z) {
        return Complex64::new(1.0 / f, 0.0);
    }
    if z.re < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi * z).sin() * lanczos(1.0 - z) / pi;
    }
    1.0 / lanczos(z)
}

/// Γ(n) = (n−1)! exactly for integer `1 <= n <= 20`.
fn small_factorial(z: Complex64) -> Option<f64> {
    if z.im != 0.0 || z.re.fract() != 0.0 || !(1.0..=20.0).contains(&z.re) {
        return None;
    }
    Some((1..z.re as u64).product::<u64>() as f64)
}

fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * acc
}

pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}

/// `log(1 + u)` accurate for small `|u|`.
fn ln_1p(u: Complex64) -> Complex64 {
    if u.norm() < 1e-4 {
        // alternating series, truncation below 1e-20 relative
        let u2 = u * u;
        u - u2 / 2.0 + u2 * u / 3.0 - u2 * u2 / 4.0 + u2 * u2 * u / 5.0
    } else {
        (1.0 + u).ln()
    }
}

/// Outcome of summing `log f_p` over `p <= P`.
struct LogProduct {
    log: Complex64,
    /// First prime whose factor is exactly zero, if any.
    zero_at: Option<u64>,
}

fn log_product(a: Complex64, shift: f64, p_max: u64) -> LogProduct {
    with_primes(p_max, |primes| {
        let mut acc = ComplexSum::new();
        let mut zero_at = None;
        for &p in primes {
            let pf = p as f64;
            let u = a / (pf - shift);
            if zero_at.is_none() && u == Complex64::new(-1.0, 0.0) {
                zero_at = Some(p);
                continue;
            }
            acc.add(ln_1p(u) + a * (-1.0 / pf).ln_1p());
        }
        LogProduct {
            log: acc.value(),
            zero_at,
        }
    })
}

/// The `c / p²` tail bound described in the module docs.
pub fn tail_bound(a: Complex64, shift: f64, p_max: u64) -> f64 {
    let abs_a = a.norm();
    let abs_b = shift.abs();
    let p = p_max as f64;
    if p_max < 17 || p <= 2.0 * (abs_a + abs_b) {
        return f64::INFINITY;
    }
    let rho = abs_a / (p - abs_b);
    let beta = abs_b / p;
    let c = abs_a * abs_a / (2.0 * (1.0 - rho) * (1.0 - beta).powi(2))
        + abs_a * abs_b / (1.0 - beta)
        + abs_a / (2.0 * (1.0 - 1.0 / p));
    let kappa = 1.0 + 2.5524 / p.ln();
    c * kappa / (p * p.ln())
}

fn check_truncation(p_max: u64) -> Result<(), ConstantsError> {
    if p_max < MIN_TRUNCATION {
        Err(ConstantsError::TruncationTooSmall(p_max))
    } else {
        Ok(())
    }
}

fn check_r(r: f64) -> Result<(), ConstantsError> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(ConstantsError::Domain(format!("r must be finite and >= 0, got {r}")));
    }
    Ok(())
}

fn check_z(z: Complex64) -> Result<(), ConstantsError> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(ConstantsError::Domain(format!("z must be finite, got {z}")));
    }
    Ok(())
}

/// `C_r = Γ(r+1)^{-1} ∏_p (1 + r/(p−1)) (1 − 1/p)^r`.
pub fn compute_c_r(r: f64, p_max: u64) -> Result<EulerProductResult<f64>, ConstantsError> {
    check_r(r)?;
    check_truncation(p_max)?;
    let a = Complex64::new(r, 0.0);
    let lp = log_product(a, 1.0, p_max);
    Ok(EulerProductResult {
        value: lp.log.re.exp() / gamma_real(r + 1.0),
        truncation_prime: p_max,
        tail_bound: tail_bound(a, 1.0, p_max),
    })
}

/// `A_r = Γ(r+1)^{-1} ∏_p (1 + (r+1)/(p−1)) (1 − 1/p)^{r+1}`.
pub fn compute_a_r(r: f64, p_max: u64) -> Result<EulerProductResult<f64>, ConstantsError> {
    check_r(r)?;
    check_truncation(p_max)?;
    let a = Complex64::new(r + 1.0, 0.0);
    let lp = log_product(a, 1.0, p_max);
    Ok(EulerProductResult {
        value: lp.log.re.exp() / gamma_real(r + 1.0),
        truncation_prime: p_max,
        tail_bound: tail_bound(a, 1.0, p_max),
    })
}

/// `h_r(z) = e^{γ(2z−2)} ∏_p (1 + (2z−1)/(p−1+r)) (1 − 1/p)^{2z−1}`.
pub fn compute_h_r(r: f64, z: Complex64, p_max: u64) -> Result<EulerProductResult<Complex64>, ConstantsError> {
    check_r(r)?;
    check_z(z)?;
    check_truncation(p_max)?;
    let a = 2.0 * z - 1.0;
    let shift = 1.0 - r;
    let lp = log_product(a, shift, p_max);
    if let Some(p) = lp.zero_at {
        return Err(ConstantsError::Singularity { p });
    }
    Ok(EulerProductResult {
        value: (EULER_GAMMA * (2.0 * z - 2.0) + lp.log).exp(),
        truncation_prime: p_max,
        tail_bound: tail_bound(a, shift, p_max),
    })
}

/// `H(r, z) = e^{γ(2z−2)} ∏_p (1 + (2z−2)/(p+r)) (1 − 1/p)^{2z−2}`.
///
/// Entire in `z`; a vanishing factor makes the value exactly zero.
pub fn compute_h(r: f64, z: Complex64, p_max: u64) -> Result<EulerProductResult<Complex64>, ConstantsError> {
    check_r(r)?;
    check_z(z)?;
    check_truncation(p_max)?;
    let a = 2.0 * z - 2.0;
    let shift = -r;
    let lp = log_product(a, shift, p_max);
    let value = if lp.zero_at.is_some() {
        Complex64::new(0.0, 0.0)
    } else {
        (EULER_GAMMA * a + lp.log).exp()
    };
    Ok(EulerProductResult {
        value,
        truncation_prime: p_max,
        tail_bound: tail_bound(a, shift, p_max),
    })
}

/// `λ_ℓ(y) = Γ(y+1)^{-1} ∏_p (1 + y/(p−1)) (1 − 1/p)^y ∏_{p|ℓ} (1 + y/(p−1))^{-1}`.
///
/// The correction runs over the distinct primes of `ℓ` (trial division).
pub fn compute_lambda_ell(ell: u64, y: Complex64, p_max: u64) -> Result<EulerProductResult<Complex64>, ConstantsError> {
    if ell == 0 {
        return Err(ConstantsError::Domain("ell must be at least 1".into()));
    }
    check_z(y)?;
    check_truncation(p_max)?;
    let mut correction = Complex64::new(1.0, 0.0);
    for (p, _) in factorize(ell) {
        let factor = 1.0 + y / (p as f64 - 1.0);
        if factor.norm() < POLE_EXCLUSION {
            return Err(ConstantsError::Pole { p, y });
        }
        correction *= factor;
    }
    let lp = log_product(y, 1.0, p_max);
    let body = if lp.zero_at.is_some() {
        Complex64::new(0.0, 0.0)
    } else {
        lp.log.exp()
    };
    Ok(EulerProductResult {
        value: recip_gamma(y + 1.0) * body / correction,
        truncation_prime: p_max,
        tail_bound: tail_bound(y, 1.0, p_max),
    })
}

/// Central-difference step for [`lambda_second_derivative`].
pub const LAMBDA_FD_STEP: f64 = 1e-4;

/// `log λ_ℓ(r + h) − log λ_ℓ(r)` summed prime by prime.
///
/// Each per-prime increment is `log(1 + h/(p−1+r)) + h log(1 − 1/p)`,
/// evaluated with `ln_1p`, so the increment keeps full relative precision
/// even though it is tiny next to `log λ_ℓ(r)` itself.
fn lambda_log_increment(ell: u64, r: f64, h: f64, p_max: u64) -> f64 {
    let body = with_primes(p_max, |primes| {
        let mut acc = crate::summation::NeumaierSum::new();
        for &p in primes {
            let pf = p as f64;
            acc.add((h / (pf - 1.0 + r)).ln_1p() + h * (-1.0 / pf).ln_1p());
        }
        acc.value()
    });
    let correction: f64 = factorize(ell)
        .iter()
        .map(|&(p, _)| (h / (p as f64 - 1.0 + r)).ln_1p())
        .sum();
    let gamma_shift = libm::lgamma(r + h + 1.0) - libm::lgamma(r + 1.0);
    body - correction - gamma_shift
}

/// `λ_ℓ''(r)` along the real axis, `r > −1`.
///
/// Central second differences `D(h) = (λ(r+h) − 2λ(r) + λ(r−h)) / h²` at
/// `h = 1e-4` and `h/2`, combined by Richardson extrapolation
/// `(4 D(h/2) − D(h)) / 3`. The differences are formed as
/// `λ(r) (expm1(Δ₊) + expm1(Δ₋)) / h²` from log-increments, which avoids
/// cancelling two nearly equal products. Fails when the two raw estimates
/// disagree by more than 1e-5 relative.
pub fn lambda_second_derivative(ell: u64, r: f64, p_max: u64) -> Result<f64, ConstantsError> {
    if !r.is_finite() {
        return Err(ConstantsError::Domain(format!("r must be finite, got {r}")));
    }
    let h = LAMBDA_FD_STEP;
    // every factor 1 + y/(p−1) must stay clear of zero on [r − h, r + h]
    if r - h <= -1.0 + POLE_EXCLUSION {
        return Err(ConstantsError::Pole {
            p: 2,
            y: Complex64::new(r, 0.0),
        });
    }
    let center = compute_lambda_ell(ell, Complex64::new(r, 0.0), p_max)?.value.re;
    let second = |step: f64| {
        let up = lambda_log_increment(ell, r, step, p_max);
        let down = lambda_log_increment(ell, r, -step, p_max);
        center * (up.exp_m1() + down.exp_m1()) / (step * step)
    };
    let coarse = second(h);
    let fine = second(h / 2.0);
    let scale = fine.abs().max(center.abs()).max(1e-300);
    if (coarse - fine).abs() > 1e-5 * scale {
        return Err(ConstantsError::Domain(format!(
            "finite differences unstable at r = {r}: {coarse} vs {fine}"
        )));
    }
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P_SMALL: u64 = 100_000;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for y in [0.1, 0.7, 1.3, 2.5, 5.0] {
            assert!((normal_cdf(y) + normal_cdf(-y) - 1.0).abs() < 1e-15);
        }
        assert!(normal_cdf(-8.0) < 1e-14);
        assert!(normal_cdf(8.0) > 1.0 - 1e-14);
    }

    #[test]
    fn gamma_known_values() {
        assert!((gamma_real(1.0) - 1.0).abs() < 1e-14);
        assert!((gamma_real(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma_real(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!((gamma_real(1.5) - 0.886_226_925_452_758).abs() < 1e-14);
        assert_eq!(recip_gamma(c(0.0, 0.0)).norm(), 0.0);
        assert!(recip_gamma(c(-2.0, 0.0)).norm() < 1e-14);
        // Γ(1 + i) from tables
        let g = gamma(c(1.0, 1.0));
        assert!((g - c(0.498_015_668_118_356, -0.154_949_828_301_811)).norm() < 1e-13);
    }

    #[test]
    fn trivial_product_values() {
        assert_eq!(compute_c_r(0.0, P_SMALL).unwrap().value, 1.0);
        assert!((compute_a_r(0.0, P_SMALL).unwrap().value - 1.0).abs() < 1e-12);
        let h = compute_h_r(0.3, c(0.5, 0.0), P_SMALL).unwrap().value;
        assert!((h - c((-EULER_GAMMA).exp(), 0.0)).norm() < 1e-15);
        let big_h = compute_h(1.7, c(1.0, 0.0), P_SMALL).unwrap().value;
        assert_eq!(big_h, c(1.0, 0.0));
    }

    #[test]
    fn big_h_vanishes_at_origin() {
        let v = compute_h(0.0, c(0.0, 0.0), P_SMALL).unwrap();
        assert_eq!(v.value, c(0.0, 0.0));
        assert!(compute_h(0.1, c(0.0, 0.0), P_SMALL).unwrap().value.norm() > 0.0);
    }

    #[test]
    fn lambda_relations() {
        assert_eq!(compute_lambda_ell(1, c(0.0, 0.0), P_SMALL).unwrap().value, c(1.0, 0.0));
        assert_eq!(
            compute_lambda_ell(360, c(0.0, 0.0), P_SMALL).unwrap().value,
            c(1.0, 0.0)
        );
        let l1 = compute_lambda_ell(1, c(1.0, 0.0), P_SMALL).unwrap().value;
        let l6 = compute_lambda_ell(6, c(1.0, 0.0), P_SMALL).unwrap().value;
        assert!((l6 - l1 / (2.0 * 1.5)).norm() < 1e-15);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(compute_c_r(-0.1, P_SMALL), Err(ConstantsError::Domain(_))));
        assert!(matches!(compute_a_r(-1.0, P_SMALL), Err(ConstantsError::Domain(_))));
        assert!(matches!(
            compute_c_r(1.0, 50),
            Err(ConstantsError::TruncationTooSmall(50))
        ));
        // y = -1 puts the p = 2 correction factor 1 + y at zero
        assert!(matches!(
            compute_lambda_ell(2, c(-1.0, 0.0), P_SMALL),
            Err(ConstantsError::Pole { p: 2, .. })
        ));
        // h_r factor 1 + (2z−1)/(p−1+r) vanishes at p = 2, r = 0, z = 0
        assert!(matches!(
            compute_h_r(0.0, c(0.0, 0.0), P_SMALL),
            Err(ConstantsError::Singularity { p: 2 })
        ));
        assert!(RParameter::new(2, 2.0).is_err());
        assert!(RParameter::new(0, 1e6).is_err());
    }

    #[test]
    fn r_parameter() {
        let rp = RParameter::new(1, 1e8).unwrap();
        assert_eq!(rp.r, 0.0);
        let rp = RParameter::new(3, 1e8).unwrap();
        assert!((rp.r - 2.0 / (1e8f64).ln().ln()).abs() < 1e-15);
    }

    #[test]
    fn tail_bound_decreases_and_meets_target() {
        let a = c(7.0, 0.0);
        let b1 = tail_bound(a, 3.0, 1_000);
        let b2 = tail_bound(a, 3.0, 10_000);
        assert!(b2 < b1);
        // worst corners of |z| <= 4, r <= 4
        for z in [c(4.0, 0.0), c(-4.0, 0.0), c(0.0, 4.0)] {
            for r in [0.0, 4.0] {
                assert!(tail_bound(2.0 * z - 1.0, 1.0 - r, DEFAULT_TRUNCATION) < 1e-6);
                assert!(tail_bound(2.0 * z - 2.0, -r, DEFAULT_TRUNCATION) < 1e-6);
            }
        }
        assert!(tail_bound(c(5.0, 0.0), 1.0, DEFAULT_TRUNCATION) < 1e-6);
        assert_eq!(tail_bound(c(100.0, 0.0), 0.0, 150), f64::INFINITY);
    }

    #[test]
    fn second_derivative_is_stable() {
        let d = lambda_second_derivative(1, 0.0, P_SMALL).unwrap();
        assert!(d.is_finite());
    }
}
