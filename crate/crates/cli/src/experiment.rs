//! Runs a configured experiment and writes one CSV and one JSON report per x.

use std::path::{Path, PathBuf};
use std::time::Instant;

use omega_shift::constants::{loglog, normal_cdf, ConstantsError};
use omega_shift::stats::{gaussian_error_scale, s_k_theoretical, theorem2_prediction, PredictionReport, ShiftCount};
use omega_shift::{build_omega_table, OmegaTable, ShiftProfile, SieveConfig, SieveError};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::{self, ReportMetadata, ReportRow, LOG_CONVENTION, R_DEFINITION_NOTE};

/// Thread-count override; takes precedence over the config's `threads`.
pub const THREADS_ENV: &str = "OMEGA_SHIFT_THREADS";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("sieve: {0}")]
    Sieve(#[from] SieveError),
    #[error("constants: {0}")]
    Constants(#[from] ConstantsError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

/// Outcome for one x.
#[derive(Debug, Clone)]
pub struct XReport {
    pub x: u64,
    pub w: u64,
    pub rows: Vec<ReportRow>,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

/// Thread count from the environment override, else `configured`; 0 means
/// the runtime default.
pub fn resolve_threads(configured: usize) -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(configured)
}

pub fn cache_file(dir: &Path, x: u64, w: u64) -> PathBuf {
    dir.join(format!("omega_x{x}_w{w}.bin"))
}

/// Loads the table from `cache_dir` when present, otherwise sieves it and,
/// if a cache directory is given, stores it there.
pub fn load_or_build(x: u64, w: u64, cache_dir: Option<&Path>) -> Result<OmegaTable, SieveError> {
    let Some(dir) = cache_dir else {
        return build_omega_table(&SieveConfig::new(x, w));
    };
    let path = cache_file(dir, x, w);
    if path.exists() {
        return OmegaTable::read_cache(&path, x, w);
    }
    let table = build_omega_table(&SieveConfig::new(x, w))?;
    std::fs::create_dir_all(dir)?;
    table.write_cache(&path)?;
    Ok(table)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<XReport>, ExperimentError> {
    config.validate()?;
    let threads = resolve_threads(config.threads);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(|| run_inner(config))
}

fn run_inner(config: &ExperimentConfig) -> Result<Vec<XReport>, ExperimentError> {
    std::fs::create_dir_all(&config.output_dir)?;
    let hash = config.hash();
    let mut out = Vec::with_capacity(config.x_list.len());
    for &x in &config.x_list {
        let w = config.w_rule.resolve(x);
        let start = Instant::now();
        let table = load_or_build(x, w, config.cache_dir.as_deref())?;
        let profile = ShiftProfile::build(&table, x);
        drop(table);
        let setup_ms = start.elapsed().as_secs_f64() * 1e3;

        let rows = rows_for_x(config, &profile, setup_ms)?;
        let (csv_path, json_path) = report::report_paths(&config.output_dir, x);
        let metadata = ReportMetadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: hash.clone(),
            r_definition: R_DEFINITION_NOTE.to_string(),
            log_convention: LOG_CONVENTION.to_string(),
            x,
            w,
            w_rule: config.w_rule.to_string(),
            truncation_prime: config.truncation_prime,
        };
        report::write_csv(&csv_path, &rows)?;
        report::write_json(&json_path, &metadata, &rows)?;
        out.push(XReport {
            x,
            w,
            rows,
            csv_path,
            json_path,
        });
    }
    Ok(out)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64() * 1e3)
}

/// All rows for one x, in a fixed order: per k the Thm1 grid and the
/// enabled optional statistics, then baselines, then the summary.
pub fn rows_for_x(
    config: &ExperimentConfig,
    profile: &ShiftProfile,
    setup_ms: f64,
) -> Result<Vec<ReportRow>, ExperimentError> {
    let (x, w) = (profile.x(), profile.w());
    let xf = x as f64;
    let scale = gaussian_error_scale(xf);
    let p = config.truncation_prime;
    let mut rows = Vec::new();
    let mut worst_gap = 0.0f64;

    for &k in &config.k_list {
        let s_k = profile.s_k(k);
        for &y in &config.y_grid {
            let (frac, ms) = timed(|| ratio(profile.s_k_y(k, y, ShiftCount::All), s_k));
            let rep = PredictionReport::new("Thm1.S_k_y", x, k, w, y, frac, normal_cdf(y), scale);
            if frac.is_finite() {
                worst_gap = worst_gap.max((rep.empirical - rep.theoretical).abs());
            }
            rows.push(ReportRow::from_prediction(rep, ms));
        }
        if config.totals {
            let (theory, ms) = timed(|| s_k_theoretical(k, xf, p));
            let rep = PredictionReport::new("Thm1.S_k", x, k, w, f64::NAN, s_k as f64, theory?, 1.0 / loglog(xf));
            rows.push(ReportRow::from_prediction(rep, ms));
        }
        if config.ks {
            let (d, ms) = timed(|| profile.ks_distance(k));
            rows.push(ReportRow::from_prediction(
                PredictionReport::new("Thm1.ks_distance", x, k, w, f64::NAN, d, 0.0, scale),
                ms,
            ));
        }
        for &m in &config.moments {
            let (mom, ms) = timed(|| profile.weighted_moment(k, m));
            let rep = PredictionReport::new(
                format!("Remark1-m{m}"),
                x,
                k,
                w,
                f64::from(m),
                mom,
                gaussian_moment(m),
                scale,
            );
            rows.push(ReportRow::from_prediction(rep, ms));
        }
        if let Some(ell_max) = config.ell_max {
            let llw = loglog(w as f64);
            for ell in 0..=ell_max {
                let ((emp, theory), ms) = timed(|| {
                    let emp = profile.s_k_ell(k, ell as usize) as f64;
                    // outside 3 <= w <= x the prediction is undefined
                    let theory = theorem2_prediction(s_k as f64, k, xf, ell, w as f64, p).unwrap_or(f64::NAN);
                    (emp, theory)
                });
                let err = if llw > 0.0 { 1.0 / llw } else { f64::NAN };
                let rep = PredictionReport::new("Thm2.S_k_ell", x, k, w, f64::from(ell), emp, theory, err);
                rows.push(ReportRow::from_prediction(rep, ms));
            }
        }
        if let Some(c) = config.d_k_c {
            let (frac, ms) = timed(|| ratio(profile.d_k(k, c), s_k));
            let rep = PredictionReport::new("Sec3.2.D_k", x, k, w, c, frac, 0.0, 1.0 / loglog(xf));
            rows.push(ReportRow::from_prediction(rep, ms));
        }
        if config.baseline {
            for &y in &config.y_grid {
                let (b, ms) = timed(|| profile.unweighted_baseline(k, y));
                rows.push(ReportRow::from_prediction(b.shifted, ms));
            }
        }
    }
    if config.baseline {
        for &y in &config.y_grid {
            let (b, ms) = timed(|| profile.unweighted_baseline(1, y));
            rows.push(ReportRow::from_prediction(b.classical, ms));
        }
    }

    // worst grid gap |S_k(x,y)/S_k(x) − Φ(y)| against the error scale
    let summary = PredictionReport::new("Summary", x, 0, w, config.y_grid.len() as f64, worst_gap, scale, scale);
    rows.push(ReportRow::from_prediction(summary, setup_ms));
    Ok(rows)
}

fn ratio(num: u128, den: u128) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// Limit of the m-th standardized moment: `(2i)!/(2^i i!)` for m = 2i, 0 for odd m.
pub fn gaussian_moment(m: u32) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    (1..m).step_by(2).map(f64::from).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        assert_eq!(gaussian_moment(0), 1.0);
        assert_eq!(gaussian_moment(2), 1.0);
        assert_eq!(gaussian_moment(4), 3.0);
        assert_eq!(gaussian_moment(6), 15.0);
        assert_eq!(gaussian_moment(5), 0.0);
    }

    #[test]
    fn minimal_config_rows() {
        let cfg = ExperimentConfig::new(vec![10_000], vec![2], vec![-1.0, 0.0, 1.0], "unused");
        let t = build_omega_table(&SieveConfig::new(10_000, cfg.w_rule.resolve(10_000))).unwrap();
        let rows = rows_for_x(&cfg, &ShiftProfile::build(&t, 10_000), 0.0).unwrap();
        let names: Vec<&str> = rows.iter().map(|r| r.statistic.as_str()).collect();
        assert_eq!(names, ["Thm1.S_k_y", "Thm1.S_k_y", "Thm1.S_k_y", "Summary"]);
        assert!(rows[..3].windows(2).all(|p| p[0].empirical <= p[1].empirical));
    }
}
