//! The generating-function layer.
//!
//! `F_k(z) = Σ_{n ∈ E_k(x)} 2^{ω(n−1)} z^{ω(n−1, w)}` is a polynomial in
//! `z` whose ℓ-th coefficient is the weighted count `S_{k,ℓ}(x, w)`. This
//! module evaluates it directly over the sieve table, recovers the
//! coefficients by inverse DFT over the roots of unity (the Cauchy integral
//! on `|z| = 1` is exact for a polynomial), and forms the normalized
//! characteristic function used for the Berry–Esseen comparison.
//!
//! It also houses the multiplicative functions `g_z` and `f_z` whose
//! convolution structure underlies `F_k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::primes::{factorize, is_prime};
use crate::sieve::OmegaTable;
use crate::summation::ComplexSum;

/// Largest argument accepted by the divisor-sum checks.
pub const CONVOLUTION_RANGE: u64 = 1_000_000;
/// Largest argument accepted by `f_z` (trial-division factorization).
pub const FACTOR_RANGE: u64 = 1_000_000_000_000;

/// Fixed chunk length for table scans. Partial sums are merged in chunk
/// order, so the result is independent of the worker count.
const SCAN_CHUNK: usize = 1 << 16;
/// Row length of the precomputed weight grid; ω never exceeds 11 below 2^40.
const MAX_OMEGA: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenFunError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("argument {n} exceeds the supported range {limit}")]
    Overflow { n: u64, limit: u64 },
    #[error("x = {x} beyond table range {x_max}")]
    Range { x: u64, x_max: u64 },
    #[error("domain error: {0}")]
    Domain(String),
}

/// Parameters of the multiplicative function `g_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GzSpec {
    pub w: u64,
    pub z: Complex64,
}

impl GzSpec {
    pub fn new(w: u64, z: Complex64) -> Self {
        Self { w, z }
    }
}

/// `g_z(p^α)`: `2(z−1)`, `1−2z` at `α = 1, 2` for `p <= w`; `0`, `−1` for
/// `p > w`; zero for `α > 2`.
pub fn g_z_value(p: u64, alpha: u32, spec: &GzSpec) -> Result<Complex64, GenFunError> {
    if !is_prime(p) {
        return Err(GenFunError::NotPrime(p));
    }
    Ok(g_prime_power(p, alpha, spec))
}

fn g_prime_power(p: u64, alpha: u32, spec: &GzSpec) -> Complex64 {
    let z = spec.z;
    match (alpha, p <= spec.w) {
        (0, _) => Complex64::new(1.0, 0.0),
        (1, true) => 2.0 * (z - 1.0),
        (2, true) => 1.0 - 2.0 * z,
        (1, false) => Complex64::new(0.0, 0.0),
        (2, false) => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 0.0),
    }
}

/// Value of a multiplicative function on the prime-power factorization.
fn multiplicative_at(factors: &[(u64, u32)], mut local: impl FnMut(u64, u32) -> Complex64) -> Complex64 {
    factors
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &(p, e)| acc * local(p, e))
}

/// Divisors of `∏ p^e` with their exponent vectors.
fn divisors_with_exponents(factors: &[(u64, u32)]) -> Vec<(u64, Vec<u32>)> {
    let mut out = vec![(1u64, vec![0u32; factors.len()])];
    for (i, &(p, e)) in factors.iter().enumerate() {
        let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
        for (d, exps) in &out {
            let mut pk = 1u64;
            for j in 0..=e {
                let mut ex = exps.clone();
                ex[i] = j;
                next.push((d * pk, ex));
                pk *= p;
            }
        }
        out = next;
    }
    out
}

/// Both sides of `(g_z ∗ τ)(n) = 2^{ω(n)} z^{ω(n, w)}` for `1 <= n <= 10^6`.
///
/// The left side is an explicit divisor sum `Σ_{q|n} g_z(q) τ(n/q)`.
pub fn convolution_check(n: u64, spec: &GzSpec) -> Result<(Complex64, Complex64), GenFunError> {
    convolution_check_with(n, spec, g_prime_power)
}

/// [`convolution_check`] with a caller-supplied `g_z` on prime powers.
pub fn convolution_check_with(
    n: u64,
    spec: &GzSpec,
    g: impl Fn(u64, u32, &GzSpec) -> Complex64,
) -> Result<(Complex64, Complex64), GenFunError> {
    if n == 0 || n > CONVOLUTION_RANGE {
        return Err(GenFunError::Overflow {
            n,
            limit: CONVOLUTION_RANGE,
        });
    }
    let factors = factorize(n);
    let mut lhs = ComplexSum::new();
    for (_, exps) in divisors_with_exponents(&factors) {
        let gq = factors
            .iter()
            .zip(&exps)
            .fold(Complex64::new(1.0, 0.0), |acc, (&(p, _), &j)| acc * g(p, j, spec));
        // τ(n/q) = ∏ (e − j + 1)
        let tau: u64 = factors
            .iter()
            .zip(&exps)
            .map(|(&(_, e), &j)| u64::from(e - j + 1))
            .product();
        lhs.add(gq * tau as f64);
    }
    let omega = factors.len() as i32;
    let omega_small = factors.iter().filter(|&&(p, _)| p <= spec.w).count() as i32;
    let rhs = 2f64.powi(omega) * spec.z.powi(omega_small);
    Ok((lhs.value(), rhs))
}

/// `f_z(p^e)` from the prime-power closed forms, `e >= 1`:
/// odd `e = 2α+1` gives `(2z−2)/(p^α(p−1))` for `p <= w` and `0` otherwise;
/// even `e = 2α+2` gives `1/(p^α(p−1)) + (1−2z)/(p^{α+1}(p−1))` for `p <= w`
/// and `1/(p^α(p−1)) − 1/(p^{α+1}(p−1))` otherwise.
pub fn f_z_prime_power(p: u64, e: u32, spec: &GzSpec) -> Complex64 {
    let z = spec.z;
    let pf = p as f64;
    if e == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let alpha = ((e - 1) / 2) as i32;
    let pa = pf.powi(alpha);
    let small = p <= spec.w;
    if e % 2 == 1 {
        if small {
            (2.0 * z - 2.0) / (pa * (pf - 1.0))
        } else {
            Complex64::new(0.0, 0.0)
        }
    } else {
        let first = 1.0 / (pa * (pf - 1.0));
        let second = if small {
            1.0 - 2.0 * z
        } else {
            Complex64::new(-1.0, 0.0)
        };
        first + second / (pa * pf * (pf - 1.0))
    }
}

/// `f_z(ℓ) = Σ_{d²q = ℓ} g_z(q) / φ(dq)` via the prime-power closed forms
/// and multiplicativity.
pub fn f_z_value(ell: u64, spec: &GzSpec) -> Result<Complex64, GenFunError> {
    check_factor_range(ell)?;
    Ok(multiplicative_at(&factorize(ell), |p, e| f_z_prime_power(p, e, spec)))
}

/// `f_z(ℓ)` by direct enumeration of the decompositions `ℓ = d² q`.
pub fn f_z_direct(ell: u64, spec: &GzSpec) -> Result<Complex64, GenFunError> {
    check_factor_range(ell)?;
    let factors = factorize(ell);
    let mut acc = ComplexSum::new();
    for (_, exps) in divisors_with_exponents(&factors) {
        // only perfect-square divisors s² contribute
        if exps.iter().any(|&j| j % 2 == 1) {
            continue;
        }
        let s_exps: Vec<u32> = exps.iter().map(|&j| j / 2).collect();
        let q_exps: Vec<u32> = factors.iter().zip(&exps).map(|(&(_, e), &j)| e - j).collect();
        let gq = factors
            .iter()
            .zip(&q_exps)
            .fold(Complex64::new(1.0, 0.0), |acc, (&(p, _), &j)| {
                acc * g_prime_power(p, j, spec)
            });
        // φ(s q) from the exponents of s·q
        let phi: f64 = factors
            .iter()
            .zip(s_exps.iter().zip(&q_exps))
            .map(|(&(p, _), (&a, &b))| {
                let e = a + b;
                if e == 0 {
                    1.0
                } else {
                    (p as f64 - 1.0) * (p as f64).powi(e as i32 - 1)
                }
            })
            .product();
        acc.add(gq / phi);
    }
    Ok(acc.value())
}

fn check_factor_range(ell: u64) -> Result<(), GenFunError> {
    if ell == 0 || ell > FACTOR_RANGE {
        return Err(GenFunError::Overflow {
            n: ell,
            limit: FACTOR_RANGE,
        });
    }
    Ok(())
}

/// One evaluation of `F_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenFunValue {
    pub z: Complex64,
    pub value: Complex64,
    /// `S_k(x) = F_k(1)`, exact integer sum converted to `f64`.
    pub normalizer: f64,
    /// Largest ω(n−1, w) over `n ∈ E_k(x)`: the polynomial degree.
    pub degree: usize,
    pub k: u32,
    pub x: u64,
    pub w: u64,
}

/// Evaluates `F_k(z)` for every `z` in `zs` in one pass over the table.
///
/// Uses `0⁰ = 1`, so `F_k(0) = S_{k,0}(x, w)`.
pub fn eval_f_k_batch(table: &OmegaTable, k: u32, x: u64, zs: &[Complex64]) -> Result<Vec<GenFunValue>, GenFunError> {
    if x > table.x_max() {
        return Err(GenFunError::Range {
            x,
            x_max: table.x_max(),
        });
    }
    // weights[j][a * MAX_OMEGA + b] = 2^a z_j^b
    let weights: Vec<Vec<Complex64>> = zs
        .iter()
        .map(|&z| {
            let mut grid = vec![Complex64::new(0.0, 0.0); MAX_OMEGA * MAX_OMEGA];
            for a in 0..MAX_OMEGA {
                let mut zb = Complex64::new(1.0, 0.0);
                for b in 0..MAX_OMEGA {
                    grid[a * MAX_OMEGA + b] = zb * 2f64.powi(a as i32);
                    zb *= z;
                }
            }
            grid
        })
        .collect();

    let omega = table.omega_slice();
    let small = table.omega_small_slice();
    let upper = x as usize;
    let starts: Vec<usize> = if upper >= 2 {
        (2..=upper).step_by(SCAN_CHUNK).collect()
    } else {
        Vec::new()
    };
    let scan = |&start: &usize| -> ChunkPartial {
        let end = (start + SCAN_CHUNK).min(upper + 1);
        let mut part = ChunkPartial::new(zs.len());
        for n in start..end {
            if u32::from(omega[n]) != k {
                continue;
            }
            let a = omega[n - 1] as usize;
            let b = small[n - 1] as usize;
            part.mass += 1u128 << a;
            part.degree = part.degree.max(b);
            let idx = a * MAX_OMEGA + b;
            for (acc, grid) in part.sums.iter_mut().zip(&weights) {
                acc.add(grid[idx]);
            }
        }
        part
    };

    #[cfg(feature = "parallel")]
    let partials: Vec<ChunkPartial> = {
        use rayon::prelude::*;
        starts.par_iter().map(scan).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<ChunkPartial> = starts.iter().map(scan).collect();

    let mut total = ChunkPartial::new(zs.len());
    for part in &partials {
        total.mass += part.mass;
        total.degree = total.degree.max(part.degree);
        for (acc, p) in total.sums.iter_mut().zip(&part.sums) {
            acc.merge(p);
        }
    }
    Ok(zs
        .iter()
        .zip(&total.sums)
        .map(|(&z, acc)| GenFunValue {
            z,
            value: acc.value(),
            normalizer: total.mass as f64,
            degree: total.degree,
            k,
            x,
            w: table.w(),
        })
        .collect())
}

struct ChunkPartial {
    sums: Vec<ComplexSum>,
    mass: u128,
    degree: usize,
}

impl ChunkPartial {
    fn new(points: usize) -> Self {
        Self {
            sums: vec![ComplexSum::new(); points],
            mass: 0,
            degree: 0,
        }
    }
}

pub fn eval_f_k(table: &OmegaTable, k: u32, x: u64, z: Complex64) -> Result<GenFunValue, GenFunError> {
    Ok(eval_f_k_batch(table, k, x, &[z])?[0])
}

/// Coefficients `S_{k,0..=L}(x, w)` of `F_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub coefficients: Vec<f64>,
    pub degree: usize,
}

impl CoefficientVector {
    pub fn total(&self) -> f64 {
        self.coefficients
            .iter()
            .copied()
            .collect::<crate::summation::NeumaierSum>()
            .value()
    }
}

/// Recovers the coefficients of `F_k` by the Cauchy integral on `|z| = 1`,
/// which for a degree-`L` polynomial is exactly an inverse DFT of size
/// `L + 1`: `c_ℓ = (L+1)^{-1} Σ_j F_k(ζ_j) ζ_j^{−ℓ}`.
pub fn extract_coefficients(table: &OmegaTable, k: u32, x: u64) -> Result<CoefficientVector, GenFunError> {
    let degree = eval_f_k(table, k, x, Complex64::new(1.0, 0.0))?.degree;
    let size = degree + 1;
    let roots: Vec<Complex64> = (0..size)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / size as f64))
        .collect();
    let values = eval_f_k_batch(table, k, x, &roots)?;
    let coefficients = (0..size)
        .map(|ell| {
            let mut acc = ComplexSum::new();
            for (j, v) in values.iter().enumerate() {
                // ζ_j^{−ℓ} with the exponent reduced mod size
                let idx = (j * ell) % size;
                acc.add(v.value * roots[idx].conj());
            }
            acc.value().re / size as f64
        })
        .collect();
    Ok(CoefficientVector { coefficients, degree })
}

/// One point of the normalized characteristic function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPoint {
    pub t: f64,
    /// `ψ(t) = e^{−it√T} F_k(e^{it/√T}) / S_k(x)`.
    pub psi: Complex64,
    /// `|ψ(t) − e^{−t²/2}|`.
    pub gaussian_gap: f64,
}

/// `ψ(t)` on `t_grid` with `T = 2 ln ln w` taken from the table's `w`.
pub fn characteristic_profile(
    table: &OmegaTable,
    k: u32,
    x: u64,
    t_grid: &[f64],
) -> Result<Vec<CharPoint>, GenFunError> {
    let big_t = 2.0 * (table.w() as f64).ln().ln();
    if !(big_t > 0.0) {
        return Err(GenFunError::Domain(format!(
            "T = 2 ln ln w must be positive, w = {}",
            table.w()
        )));
    }
    let root_t = big_t.sqrt();
    let zs: Vec<Complex64> = t_grid.iter().map(|&t| Complex64::from_polar(1.0, t / root_t)).collect();
    let values = eval_f_k_batch(table, k, x, &zs)?;
    Ok(t_grid
        .iter()
        .zip(values)
        .map(|(&t, v)| {
            let psi = if v.normalizer > 0.0 {
                Complex64::from_polar(1.0, -t * root_t) * v.value / v.normalizer
            } else {
                Complex64::new(0.0, 0.0)
            };
            CharPoint {
                t,
                psi,
                gaussian_gap: (psi - (-t * t / 2.0).exp()).norm(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::{build_omega_table, SieveConfig};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn g_values() {
        let spec = GzSpec::new(10, c(1.7, 0.3));
        assert_eq!(g_z_value(7, 1, &spec).unwrap(), 2.0 * (spec.z - 1.0));
        assert_eq!(g_z_value(7, 2, &spec).unwrap(), 1.0 - 2.0 * spec.z);
        assert_eq!(g_z_value(11, 1, &spec).unwrap(), c(0.0, 0.0));
        assert_eq!(g_z_value(11, 2, &spec).unwrap(), c(-1.0, 0.0));
        assert_eq!(g_z_value(3, 3, &spec).unwrap(), c(0.0, 0.0));
        assert_eq!(g_z_value(13, 5, &spec).unwrap(), c(0.0, 0.0));
        assert_eq!(g_z_value(9, 1, &spec), Err(GenFunError::NotPrime(9)));
    }

    #[test]
    fn convolution_small_cases() {
        let spec = GzSpec::new(10, c(0.4, -1.1));
        assert_eq!(convolution_check(1, &spec).unwrap(), (c(1.0, 0.0), c(1.0, 0.0)));
        let (l, r) = convolution_check(7, &spec).unwrap();
        assert!((l - 2.0 * spec.z).norm() < 1e-15 && (r - 2.0 * spec.z).norm() < 1e-15);
        for p in [2, 3, 5] {
            for z in [c(0.0, 0.0), c(0.0, 1.0), c(1.7, 0.0)] {
                let (l, r) = convolution_check(p * p, &GzSpec::new(10, z)).unwrap();
                assert!((l - r).norm() < 1e-12);
                assert!((r - 2.0 * z).norm() < 1e-12);
            }
        }
        assert!(matches!(
            convolution_check(CONVOLUTION_RANGE + 1, &spec),
            Err(GenFunError::Overflow { .. })
        ));
    }

    #[test]
    fn f_small_cases() {
        let spec = GzSpec::new(10, c(0.3, 0.8));
        assert_eq!(f_z_value(1, &spec).unwrap(), c(1.0, 0.0));
        let v = f_z_value(7, &spec).unwrap();
        assert!((v - 2.0 * (spec.z - 1.0) / 6.0).norm() < 1e-15);
        let v = f_z_direct(121, &spec).unwrap();
        assert!((v - c(1.0 / 11.0, 0.0)).norm() < 1e-15);
        assert!((f_z_value(121, &spec).unwrap() - v).norm() < 1e-15);
        assert!(f_z_value(0, &spec).is_err());
    }

    #[test]
    fn f_k_brute_force_small() {
        let t = build_omega_table(&SieveConfig::new(10, 2)).unwrap();
        let v = eval_f_k(&t, 1, 10, c(1.0, 0.0)).unwrap();
        assert_eq!(v.value, c(15.0, 0.0));
        assert_eq!(v.normalizer, 15.0);
        for z in [c(0.0, 0.0), c(2.5, -1.0), c(-3.0, 0.5)] {
            let v = eval_f_k(&t, 1, 10, z).unwrap();
            assert!((v.value - (5.0 + 10.0 * z)).norm() < 1e-12, "{z}");
        }
        let cv = extract_coefficients(&t, 1, 10).unwrap();
        assert_eq!(cv.degree, 1);
        assert!((cv.coefficients[0] - 5.0).abs() < 1e-12);
        assert!((cv.coefficients[1] - 10.0).abs() < 1e-12);
        assert!(eval_f_k(&t, 1, 11, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn characteristic_symmetry() {
        let t = build_omega_table(&SieveConfig::new(20_000, 97)).unwrap();
        let grid = [-1.5, -0.5, 0.0, 0.5, 1.5];
        let prof = characteristic_profile(&t, 2, 20_000, &grid).unwrap();
        assert!((prof[2].psi - c(1.0, 0.0)).norm() < 1e-14);
        for i in 0..2 {
            assert!((prof[i].psi - prof[4 - i].psi.conj()).norm() < 1e-12);
        }
        for p in &prof {
            assert!(p.psi.norm() <= 1.0 + 1e-12);
        }
        let t2 = build_omega_table(&SieveConfig::new(100, 2)).unwrap();
        assert!(matches!(
            characteristic_profile(&t2, 2, 100, &grid),
            Err(GenFunError::Domain(_))
        ));
    }
}
