use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use omega_shift::constants::{compute_a_r, compute_c_r, compute_h, compute_h_r, DEFAULT_TRUNCATION};
use omega_shift::{build_omega_table, Complex64, SieveConfig};
use omega_shift_cli::config::parse_int;
use omega_shift_cli::experiment::{cache_file, resolve_threads};
use omega_shift_cli::verify::{verify_suite_with, FaultInjection, Level};
use omega_shift_cli::{run_experiment, ExperimentConfig, THREADS_ENV};

#[derive(Parser)]
#[command(
    name = "omega-shift",
    version,
    about = "Weighted distribution of ω(n−1) over integers with k prime factors"
)]
struct Cli {
    /// Worker threads (0 = all cores). Overridden by OMEGA_SHIFT_THREADS.
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sieve ω(n) and ω(n, w) up to N, optionally writing the binary cache.
    Sieve {
        #[arg(long, value_parser = parse_int)]
        x: u64,
        #[arg(long, value_parser = parse_int)]
        w: u64,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        segment_length: Option<usize>,
    },
    /// Run an experiment config and write CSV/JSON reports.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the self-check suite.
    Verify {
        #[arg(long, default_value = "fast")]
        level: Level,
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Print A_r, C_r, h_r(z) and H(r, z) with tail bounds.
    Constants {
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        z: Complex64,
        #[arg(long = "P", value_parser = parse_int, default_value_t = DEFAULT_TRUNCATION)]
        p: u64,
    },
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    Ok(Complex64::new(num(re)?, num(im)?))
}

/// Peak resident set size in kB, from /proc (Linux only).
fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = resolve_threads(cli.threads);
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match command {
        Command::Sieve {
            x,
            w,
            cache,
            segment_length,
        } => {
            let mut cfg = SieveConfig::new(x, w);
            if let Some(len) = segment_length {
                cfg = cfg.with_segment_length(len);
            }
            let start = Instant::now();
            let table = build_omega_table(&cfg)?;
            let elapsed = start.elapsed().as_secs_f64();
            println!("x = {x}, w = {w}");
            println!("sieve_seconds = {elapsed:.3}");
            for k in 0..=table.max_omega(x) {
                println!("pi_{k} = {}", table.pi_k(u32::from(k), x));
            }
            if let Some(dir) = cache {
                std::fs::create_dir_all(&dir)?;
                let path = cache_file(&dir, x, w);
                table.write_cache(&path)?;
                println!("cache = {}", path.display());
            }
            if let Some(kb) = peak_rss_kb() {
                println!("peak_rss_kb = {kb}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            for rep in run_experiment(&cfg)? {
                println!(
                    "x = {}, w = {}: {} rows -> {}, {}",
                    rep.x,
                    rep.w,
                    rep.rows.len(),
                    rep.csv_path.display(),
                    rep.json_path.display()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { level, inject_fault } => {
            let faults = match inject_fault.as_deref() {
                None => FaultInjection::default(),
                Some("flip-g-square") => FaultInjection {
                    flip_g_square_sign: true,
                },
                Some(other) => return Err(format!("unknown fault `{other}`").into()),
            };
            let summary = verify_suite_with(level, faults);
            println!("{summary}");
            Ok(if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Constants { r, z, p } => {
            let a = compute_a_r(r, p)?;
            let c = compute_c_r(r, p)?;
            println!("r = {r}, z = {z}, P = {p}");
            println!("A_r    = {:.15e}  (tail bound {:.3e})", a.value, a.tail_bound);
            println!("C_r    = {:.15e}  (tail bound {:.3e})", c.value, c.tail_bound);
            match compute_h_r(r, z, p) {
                Ok(h) => println!("h_r(z) = {:.15e}  (tail bound {:.3e})", h.value, h.tail_bound),
                Err(e) => println!("h_r(z) undefined: {e}"),
            }
            let big = compute_h(r, z, p)?;
            println!("H(r,z) = {:.15e}  (tail bound {:.3e})", big.value, big.tail_bound);
            Ok(ExitCode::SUCCESS)
        }
    }
}
