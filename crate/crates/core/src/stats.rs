//! Weighted statistics of ω(n−1) over E_k(x) and their predicted values.
//!
//! Every statistic is a function of one integer histogram: for each `k`,
//! the number of `n ∈ [2, x]` with `ω(n) = k`, `ω(n−1) = a` and
//! `ω(n−1, w) = b`. [`ShiftProfile`] builds it in a single pass; the free
//! functions with table arguments build it on demand.
//!
//! Logarithms are natural and iterated: `log₂ x = ln ln x`,
//! `log₃ x = ln ln ln x`.

use num_complex::Complex64;

use crate::constants::{compute_a_r, compute_h, loglog, normal_cdf, ConstantsError, RParameter};
use crate::sieve::OmegaTable;
use crate::summation::NeumaierSum;

/// Histogram side; ω stays below 12 for every n below 2^40.
pub const OMEGA_SLOTS: usize = 16;
const PROFILE_CHUNK: usize = 1 << 18;

type Grid = [[u64; OMEGA_SLOTS]; OMEGA_SLOTS];

/// `ln ln ln x`.
pub fn logloglog(x: f64) -> f64 {
    loglog(x).ln()
}

/// `log₃ x / √(log₂ x)`, the error scale of the Gaussian laws. `NaN` when
/// `x <= e^e`.
pub fn gaussian_error_scale(x: f64) -> f64 {
    let ll = loglog(x);
    if ll > 1.0 {
        ll.ln() / ll.sqrt()
    } else {
        f64::NAN
    }
}

/// `w = exp(ln x / (ln ln x)²)`, rounded down and kept at least 2.
pub fn paper_rule_w(x: u64) -> u64 {
    let xf = x as f64;
    let ll = loglog(xf);
    let w = (xf.ln() / (ll * ll)).exp().floor();
    (w as u64).clamp(2, x)
}

/// `w = exp((ln ln x)²)`, rounded down and kept in `[2, x]`.
pub fn squared_loglog_w(x: u64) -> u64 {
    let ll = loglog(x as f64);
    ((ll * ll).exp().floor() as u64).clamp(2, x)
}

/// Threshold `center + y · scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec {
    pub center: f64,
    pub scale: f64,
    pub y: f64,
}

impl ThresholdSpec {
    /// Weighted regime: center `2 ln ln x`, scale `√(2 ln ln x)`.
    pub fn weighted(x: f64, y: f64) -> Self {
        let c = 2.0 * loglog(x);
        Self {
            center: c,
            scale: c.sqrt(),
            y,
        }
    }

    /// Unweighted regime: center `ln ln x`, scale `√(ln ln x)`.
    pub fn unweighted(x: f64, y: f64) -> Self {
        let c = loglog(x);
        Self {
            center: c,
            scale: c.sqrt(),
            y,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.center + self.y * self.scale
    }

    /// `value <= threshold`, ties pass.
    pub fn admits(&self, value: u32) -> bool {
        f64::from(value) <= self.threshold()
    }
}

/// Which count of the shifted argument a thresholded statistic uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftCount {
    /// ω(n−1): the statistic `S_k(x, y)`.
    #[default]
    All,
    /// ω(n−1, w): the truncated statistic `S̃_k(x, y)`.
    Small,
}

/// Empirical value paired with its prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub statistic: String,
    pub x: u64,
    pub k: u32,
    pub w: u64,
    /// `y`, `ℓ` or `m` depending on the statistic.
    pub param: f64,
    pub empirical: f64,
    pub theoretical: f64,
    pub relative_deviation: f64,
    pub error_scale: f64,
}

impl PredictionReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        statistic: impl Into<String>,
        x: u64,
        k: u32,
        w: u64,
        param: f64,
        empirical: f64,
        theoretical: f64,
        error_scale: f64,
    ) -> Self {
        Self {
            statistic: statistic.into(),
            x,
            k,
            w,
            param,
            empirical,
            theoretical,
            relative_deviation: relative_deviation(empirical, theoretical),
            error_scale,
        }
    }
}

pub fn relative_deviation(empirical: f64, theoretical: f64) -> f64 {
    (empirical - theoretical).abs() / theoretical.abs().max(1e-30)
}

/// Integer histogram of (ω(n), ω(n−1), ω(n−1, w)) over `n ∈ [2, x]`, plus
/// the plain ω(n) histogram for the classical baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftProfile {
    x: u64,
    w: u64,
    by_k: Vec<Grid>,
    omega_counts: [u64; OMEGA_SLOTS],
}

impl ShiftProfile {
    /// One pass over `[2, x]`. Panics if `x` is outside `[2, x_max]`.
    pub fn build(table: &OmegaTable, x: u64) -> Self {
        assert!(
            (2..=table.x_max()).contains(&x),
            "x = {x} outside [2, {}]",
            table.x_max()
        );
        let omega = table.omega_slice();
        let small = table.omega_small_slice();
        let upper = x as usize;
        let starts: Vec<usize> = (2..=upper).step_by(PROFILE_CHUNK).collect();
        let scan = |&start: &usize| -> (Vec<Grid>, [u64; OMEGA_SLOTS]) {
            let end = (start + PROFILE_CHUNK).min(upper + 1);
            let mut grids = vec![[[0u64; OMEGA_SLOTS]; OMEGA_SLOTS]; OMEGA_SLOTS];
            let mut plain = [0u64; OMEGA_SLOTS];
            for n in start..end {
                let k = omega[n] as usize;
                grids[k][omega[n - 1] as usize][small[n - 1] as usize] += 1;
                plain[k] += 1;
            }
            (grids, plain)
        };

        #[cfg(feature = "parallel")]
        let partials: Vec<_> = {
            use rayon::prelude::*;
            starts.par_iter().map(scan).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let partials: Vec<_> = starts.iter().map(scan).collect();

        let mut by_k = vec![[[0u64; OMEGA_SLOTS]; OMEGA_SLOTS]; OMEGA_SLOTS];
        let mut omega_counts = [0u64; OMEGA_SLOTS];
        for (grids, plain) in partials {
            for (acc, g) in by_k.iter_mut().zip(&grids) {
                for (row_acc, row) in acc.iter_mut().zip(g) {
                    for (c_acc, c) in row_acc.iter_mut().zip(row) {
                        *c_acc += c;
                    }
                }
            }
            for (c_acc, c) in omega_counts.iter_mut().zip(&plain) {
                *c_acc += c;
            }
        }
        Self {
            x,
            w: table.w(),
            by_k,
            omega_counts,
        }
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn w(&self) -> u64 {
        self.w
    }

    fn grid(&self, k: u32) -> Option<&Grid> {
        self.by_k.get(k as usize)
    }

    /// `#{n ∈ E_k(x) : ω(n−1) = a}` for each `a`.
    pub fn count_by_shift(&self, k: u32) -> [u64; OMEGA_SLOTS] {
        let mut out = [0u64; OMEGA_SLOTS];
        if let Some(g) = self.grid(k) {
            for (a, row) in g.iter().enumerate() {
                out[a] = row.iter().sum();
            }
        }
        out
    }

    /// `#{n ∈ E_k(x) : ω(n−1, w) = b}` for each `b`.
    pub fn count_by_small_shift(&self, k: u32) -> [u64; OMEGA_SLOTS] {
        let mut out = [0u64; OMEGA_SLOTS];
        if let Some(g) = self.grid(k) {
            for row in g {
                for (b, &c) in row.iter().enumerate() {
                    out[b] += c;
                }
            }
        }
        out
    }

    /// Weighted mass `Σ 2^{ω(n−1)}` grouped by ω(n−1).
    pub fn weighted_by_shift(&self, k: u32) -> [u128; OMEGA_SLOTS] {
        let counts = self.count_by_shift(k);
        std::array::from_fn(|a| u128::from(counts[a]) << a)
    }

    pub fn pi_k(&self, k: u32) -> u64 {
        self.count_by_shift(k).iter().sum()
    }

    /// `S_k(x) = Σ_{n ∈ E_k(x)} 2^{ω(n−1)}`.
    pub fn s_k(&self, k: u32) -> u128 {
        self.weighted_by_shift(k).iter().sum()
    }

    /// `S_k(x, y)`, or `S̃_k(x, y)` with [`ShiftCount::Small`].
    pub fn s_k_y(&self, k: u32, y: f64, count: ShiftCount) -> u128 {
        let th = ThresholdSpec::weighted(self.x as f64, y);
        let Some(g) = self.grid(k) else { return 0 };
        let mut total = 0u128;
        for (a, row) in g.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                let v = match count {
                    ShiftCount::All => a,
                    ShiftCount::Small => b,
                };
                if th.admits(v as u32) {
                    total += u128::from(c) << a;
                }
            }
        }
        total
    }

    /// `S_{k,ℓ}(x, w) = Σ 2^{ω(n−1)} 1_{ω(n−1, w) = ℓ}`.
    pub fn s_k_ell(&self, k: u32, ell: usize) -> u128 {
        let Some(g) = self.grid(k) else { return 0 };
        if ell >= OMEGA_SLOTS {
            return 0;
        }
        g.iter().enumerate().map(|(a, row)| u128::from(row[ell]) << a).sum()
    }

    /// `Σ_{n ∈ E_k(x)} 2^{ω(n−1)} ω(n−1)^j` for `j = 0..=m`, exact.
    pub fn weighted_power_sums(&self, k: u32, m: u32) -> Vec<u128> {
        let weights = self.weighted_by_shift(k);
        (0..=m)
            .map(|j| weights.iter().enumerate().map(|(a, &wt)| wt * (a as u128).pow(j)).sum())
            .collect()
    }

    /// Normalized weighted moment
    /// `S_k(x)^{-1} Σ 2^{ω(n−1)} ((ω(n−1) − 2 ln ln x) / √(2 ln ln x))^m`.
    pub fn weighted_moment(&self, k: u32, m: u32) -> f64 {
        let th = ThresholdSpec::weighted(self.x as f64, 0.0);
        let weights = self.weighted_by_shift(k);
        let total = self.s_k(k);
        if total == 0 {
            return f64::NAN;
        }
        if m == 0 {
            return 1.0;
        }
        let acc: NeumaierSum = weights
            .iter()
            .enumerate()
            .map(|(a, &wt)| wt as f64 * ((a as f64 - th.center) / th.scale).powi(m as i32))
            .collect();
        acc.value() / total as f64
    }

    /// Weighted mean of ω(n−1) over E_k(x).
    pub fn weighted_mean(&self, k: u32) -> f64 {
        let sums = self.weighted_power_sums(k, 1);
        sums[1] as f64 / sums[0] as f64
    }

    /// Kolmogorov distance between the weighted law of
    /// `(ω(n−1) − 2 ln ln x)/√(2 ln ln x)` and Φ.
    pub fn ks_distance(&self, k: u32) -> f64 {
        let th = ThresholdSpec::weighted(self.x as f64, 0.0);
        let weights: Vec<f64> = self.weighted_by_shift(k).iter().map(|&w| w as f64).collect();
        ks_distance_from_histogram(&weights, th.center, th.scale)
    }

    /// `D_k(x) = Σ 2^{ω(n−1)} 1_{ω(n−1) − ω(n−1, w) > C ln ln ln x}`.
    pub fn d_k(&self, k: u32, c: f64) -> u128 {
        let limit = c * logloglog(self.x as f64);
        let Some(g) = self.grid(k) else { return 0 };
        let mut total = 0u128;
        for (a, row) in g.iter().enumerate() {
            for (b, &cnt) in row.iter().enumerate().take(a + 1) {
                if (a - b) as f64 > limit {
                    total += u128::from(cnt) << a;
                }
            }
        }
        total
    }

    /// `π_k(x, y) = #{n ∈ E_k(x) : ω(n−1) <= ln ln x + y √(ln ln x)}`.
    pub fn pi_k_y(&self, k: u32, y: f64) -> u64 {
        let th = ThresholdSpec::unweighted(self.x as f64, y);
        self.count_by_shift(k)
            .iter()
            .enumerate()
            .filter(|&(a, _)| th.admits(a as u32))
            .map(|(_, &c)| c)
            .sum()
    }

    /// `#{2 <= n <= x : ω(n) <= ln ln x + y √(ln ln x)}`.
    pub fn classical_count(&self, y: f64) -> u64 {
        let th = ThresholdSpec::unweighted(self.x as f64, y);
        self.omega_counts
            .iter()
            .enumerate()
            .filter(|&(a, _)| th.admits(a as u32))
            .map(|(_, &c)| c)
            .sum()
    }

    /// `#{2 <= n <= x : ω(n) = k}` summed over every k: always `x − 1`.
    pub fn population(&self) -> u64 {
        self.omega_counts.iter().sum()
    }
}

/// Kolmogorov distance `sup_y |F(y) − Φ(y)|` for a weighted histogram on
/// the integers, standardized by `(a − center) / scale`.
///
/// The supremum is attained at a jump point, either at the jump or just
/// before it, so both one-sided values are checked.
pub fn ks_distance_from_histogram(weights: &[f64], center: f64, scale: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return f64::NAN;
    }
    let mut cumulative = NeumaierSum::new();
    let mut sup = 0.0f64;
    for (a, &wt) in weights.iter().enumerate() {
        if wt == 0.0 {
            continue;
        }
        let y = (a as f64 - center) / scale;
        let phi = normal_cdf(y);
        let before = cumulative.value() / total;
        cumulative.add(wt);
        let after = cumulative.value() / total;
        sup = sup.max((before - phi).abs()).max((after - phi).abs());
    }
    sup.min(1.0)
}

/// `S_k(x)` predicted by `x (ln ln x)^{k−1} / (k−1)! · A_r`.
pub fn s_k_theoretical(k: u32, x: f64, p_max: u64) -> Result<f64, ConstantsError> {
    let rp = RParameter::new(k, x)?;
    let a_r = compute_a_r(rp.r, p_max)?.value;
    let ll = loglog(x);
    let log_fact: f64 = (1..k).map(|i| f64::from(i).ln()).sum();
    Ok(x * (f64::from(k - 1) * ll.ln() - log_fact).exp() * a_r)
}

/// Predicted `S_{k,ℓ}(x, w) = S_k (2 ln ln w)^ℓ / (ℓ! (ln w)²) · H(r, ℓ / ln ln w)`.
pub fn theorem2_prediction(s_k: f64, k: u32, x: f64, ell: u32, w: f64, p_max: u64) -> Result<f64, ConstantsError> {
    if !(w >= 3.0) || w > x {
        return Err(ConstantsError::Domain(format!("w must lie in [3, x], got {w}")));
    }
    let rp = RParameter::new(k, x)?;
    let llw = loglog(w);
    let h = compute_h(rp.r, Complex64::new(f64::from(ell) / llw, 0.0), p_max)?
        .value
        .re;
    let log_fact: f64 = (1..=ell).map(|i| f64::from(i).ln()).sum();
    let poisson = (f64::from(ell) * (2.0 * llw).ln() - log_fact - 2.0 * w.ln().ln()).exp();
    Ok(s_k * poisson * h)
}

/// `S_k(x)` over the table.
pub fn s_k(table: &OmegaTable, k: u32, x: u64) -> u128 {
    ShiftProfile::build(table, x).s_k(k)
}

pub fn s_k_y(table: &OmegaTable, k: u32, x: u64, y: f64, count: ShiftCount) -> u128 {
    ShiftProfile::build(table, x).s_k_y(k, y, count)
}

pub fn s_k_ell(table: &OmegaTable, k: u32, x: u64, ell: usize) -> u128 {
    ShiftProfile::build(table, x).s_k_ell(k, ell)
}

pub fn weighted_moment(table: &OmegaTable, k: u32, x: u64, m: u32) -> f64 {
    ShiftProfile::build(table, x).weighted_moment(k, m)
}

pub fn ks_distance(table: &OmegaTable, k: u32, x: u64) -> f64 {
    ShiftProfile::build(table, x).ks_distance(k)
}

/// Ratio `D_k(x) / S_k(x)` with the table's `w`.
pub fn d_k_diagnostic(table: &OmegaTable, k: u32, x: u64, c: f64) -> f64 {
    let p = ShiftProfile::build(table, x);
    p.d_k(k, c) as f64 / p.s_k(k) as f64
}

/// Unweighted comparisons against Φ(y).
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    /// `π_k(x, y) / π_k(x)`.
    pub shifted: PredictionReport,
    /// `#{n <= x : ω(n) <= ln ln x + y √(ln ln x)} / (x − 1)`.
    pub classical: PredictionReport,
}

pub fn unweighted_baseline(table: &OmegaTable, k: u32, x: u64, y: f64) -> BaselineReport {
    ShiftProfile::build(table, x).unweighted_baseline(k, y)
}

impl ShiftProfile {
    pub fn unweighted_baseline(&self, k: u32, y: f64) -> BaselineReport {
        let xf = self.x as f64;
        let phi = normal_cdf(y);
        let pik = self.pi_k(k);
        let shifted = if pik == 0 {
            f64::NAN
        } else {
            self.pi_k_y(k, y) as f64 / pik as f64
        };
        let classical = self.classical_count(y) as f64 / self.population() as f64;
        let ll = loglog(xf);
        BaselineReport {
            shifted: PredictionReport::new(
                "Goudout.pi_k_y",
                self.x,
                k,
                self.w,
                y,
                shifted,
                phi,
                gaussian_error_scale(xf),
            ),
            classical: PredictionReport::new(
                "ErdosKac.omega_y",
                self.x,
                0,
                self.w,
                y,
                classical,
                phi,
                if ll > 0.0 { 1.0 / ll.sqrt() } else { f64::NAN },
            ),
        }
    }
}
