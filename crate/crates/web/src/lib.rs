//! Browser bindings: three interactive computations returning JSON.
//!
//! The plain functions ([`shift_histogram`], [`small_factor_profile`],
//! [`constant_curves`]) do the work and are tested natively; the
//! `wasm_bindgen` wrappers only serialize.

use omega_shift::constants::{compute_a_r, compute_c_r, loglog, normal_cdf, RParameter};
use omega_shift::stats::{gaussian_error_scale, theorem2_prediction, OMEGA_SLOTS};
use omega_shift::{build_omega_table, ShiftProfile, SieveConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest x the page will sieve (two bytes of table per integer).
pub const MAX_X: u64 = 20_000_000;
/// Truncation prime for constants computed in the browser.
pub const BROWSER_TRUNCATION: u64 = 1_000_000;

#[derive(Debug, Serialize)]
pub struct Histogram {
    pub x: u64,
    pub k: u32,
    pub w: u64,
    pub center: f64,
    pub scale: f64,
    /// Weighted share of each value of ω(n−1).
    pub weighted: Vec<f64>,
    /// Gaussian mass of `[a − 1/2, a + 1/2]` after standardization.
    pub gaussian: Vec<f64>,
    pub ks_distance: f64,
    pub mean: f64,
    pub moments: Vec<f64>,
    pub error_scale: f64,
}

#[derive(Debug, Serialize)]
pub struct Profile {
    pub x: u64,
    pub k: u32,
    pub w: u64,
    pub r: f64,
    pub direct: Vec<f64>,
    pub predicted: Vec<f64>,
    pub pearson: f64,
}

#[derive(Debug, Serialize)]
pub struct Curves {
    pub r: Vec<f64>,
    pub a_r: Vec<f64>,
    pub c_r: Vec<f64>,
    pub tail_bound: f64,
}

fn checked_profile(x: u64, w: u64) -> Result<ShiftProfile, String> {
    if !(16..=MAX_X).contains(&x) {
        return Err(format!("x must lie in [16, {MAX_X}]"));
    }
    let table = build_omega_table(&SieveConfig::new(x, w.clamp(2, x))).map_err(|e| e.to_string())?;
    Ok(ShiftProfile::build(&table, x))
}

pub fn shift_histogram(x: u64, k: u32, w: u64) -> Result<Histogram, String> {
    let p = checked_profile(x, w)?;
    let s = p.s_k(k);
    if s == 0 {
        return Err(format!("no integer up to {x} has exactly {k} prime factors"));
    }
    let center = 2.0 * loglog(x as f64);
    let scale = center.sqrt();
    let weighted = p.weighted_by_shift(k).iter().map(|&c| c as f64 / s as f64).collect();
    let gaussian = (0..OMEGA_SLOTS)
        .map(|a| {
            let y = |t: f64| (t - center) / scale;
            normal_cdf(y(a as f64 + 0.5)) - normal_cdf(y(a as f64 - 0.5))
        })
        .collect();
    Ok(Histogram {
        x,
        k,
        w: p.w(),
        center,
        scale,
        weighted,
        gaussian,
        ks_distance: p.ks_distance(k),
        mean: p.weighted_mean(k),
        moments: (1..=4).map(|m| p.weighted_moment(k, m)).collect(),
        error_scale: gaussian_error_scale(x as f64),
    })
}

pub fn small_factor_profile(x: u64, k: u32, w: u64) -> Result<Profile, String> {
    if w < 3 || w > x {
        return Err("w must lie in [3, x]".into());
    }
    let p = checked_profile(x, w)?;
    let s = p.s_k(k) as f64;
    let r = RParameter::new(k, x as f64).map_err(|e| e.to_string())?.r;
    let ell_max = (3.0 * loglog(w as f64)).floor().max(1.0) as u32;
    let direct: Vec<f64> = (0..=ell_max).map(|l| p.s_k_ell(k, l as usize) as f64).collect();
    let predicted = (0..=ell_max)
        .map(|l| theorem2_prediction(s, k, x as f64, l, w as f64, BROWSER_TRUNCATION).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let pearson = pearson(&direct, &predicted);
    Ok(Profile {
        x,
        k,
        w,
        r,
        direct,
        predicted,
        pearson,
    })
}

pub fn constant_curves(r_max: f64, steps: u32) -> Result<Curves, String> {
    if !(r_max > 0.0 && r_max <= 8.0) || steps == 0 || steps > 400 {
        return Err("need 0 < r_max <= 8 and 1 <= steps <= 400".into());
    }
    let mut out = Curves {
        r: Vec::new(),
        a_r: Vec::new(),
        c_r: Vec::new(),
        tail_bound: 0.0,
    };
    for i in 0..=steps {
        let r = r_max * f64::from(i) / f64::from(steps);
        let a = compute_a_r(r, BROWSER_TRUNCATION).map_err(|e| e.to_string())?;
        let c = compute_c_r(r, BROWSER_TRUNCATION).map_err(|e| e.to_string())?;
        out.tail_bound = out.tail_bound.max(a.tail_bound).max(c.tail_bound);
        out.r.push(r);
        out.a_r.push(a.value);
        out.c_r.push(c.value);
    }
    Ok(out)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = shiftHistogram)]
pub fn shift_histogram_js(x: f64, k: u32, w: f64) -> Result<String, JsValue> {
    to_js(shift_histogram(x as u64, k, w as u64))
}

#[wasm_bindgen(js_name = smallFactorProfile)]
pub fn small_factor_profile_js(x: f64, k: u32, w: f64) -> Result<String, JsValue> {
    to_js(small_factor_profile(x as u64, k, w as u64))
}

#[wasm_bindgen(js_name = constantCurves)]
pub fn constant_curves_js(r_max: f64, steps: u32) -> Result<String, JsValue> {
    to_js(constant_curves(r_max, steps))
}
