//! Segmented additive sieve for ω(n) and ω(n, w).
//!
//! Each segment `[lo, hi)` is swept by the primes `p <= √x_max`. Every hit
//! bumps the distinct-prime counter and multiplies a per-entry cofactor by
//! `p` (once more for every higher power of `p` dividing the entry). After
//! the sweep an entry whose cofactor differs from `n` has exactly one prime
//! factor above `√x_max`, namely `n / cofactor`; it is small iff
//! `n <= w * cofactor`, which needs no division.
//!
//! Segments are disjoint slices of the output table, so the result does not
//! depend on the segment length or on how segments are scheduled.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::primes::{isqrt, primes_up_to};

/// Largest `x_max` the table layout is designed for.
pub const DESIGN_CEILING: u64 = 1 << 40;
pub const DEFAULT_SEGMENT_LENGTH: usize = 1 << 22;
pub const MIN_SEGMENT_LENGTH: usize = 1 << 10;

const CACHE_MAGIC: &[u8; 8] = b"OMEGATBL";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SieveError {
    #[error("x_max = {x_max} exceeds the design ceiling 2^40")]
    Capacity { x_max: u64 },
    #[error("invalid sieve configuration: {0}")]
    InvalidConfig(String),
    #[error("cache header mismatch: file has (x_max = {found_x}, w = {found_w}), requested (x_max = {want_x}, w = {want_w})")]
    CacheMismatch {
        found_x: u64,
        found_w: u64,
        want_x: u64,
        want_w: u64,
    },
    #[error("malformed cache file: {0}")]
    BadCache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    pub x_max: u64,
    /// Threshold for "small" primes in ω(n, w).
    pub w: u64,
    pub segment_length: usize,
}

impl SieveConfig {
    pub fn new(x_max: u64, w: u64) -> Self {
        Self {
            x_max,
            w,
            segment_length: DEFAULT_SEGMENT_LENGTH,
        }
    }

    pub fn with_segment_length(mut self, segment_length: usize) -> Self {
        self.segment_length = segment_length;
        self
    }

    pub fn validate(&self) -> Result<(), SieveError> {
        if self.x_max > DESIGN_CEILING {
            return Err(SieveError::Capacity { x_max: self.x_max });
        }
        if self.x_max < 3 {
            return Err(SieveError::InvalidConfig(format!(
                "x_max must be at least 3, got {}",
                self.x_max
            )));
        }
        if self.w < 2 || self.w > self.x_max {
            return Err(SieveError::InvalidConfig(format!(
                "w must lie in [2, x_max = {}], got {}",
                self.x_max, self.w
            )));
        }
        if !self.segment_length.is_power_of_two() || self.segment_length < MIN_SEGMENT_LENGTH {
            return Err(SieveError::InvalidConfig(format!(
                "segment_length must be a power of two >= 2^10, got {}",
                self.segment_length
            )));
        }
        Ok(())
    }
}

/// ω(n) and ω(n, w) for every `1 <= n <= x_max`, one byte each.
///
/// Index 0 is unused and holds zeros. Immutable once built.
#[derive(Clone, PartialEq, Eq)]
pub struct OmegaTable {
    x_max: u64,
    w: u64,
    omega: Vec<u8>,
    omega_small: Vec<u8>,
}

impl std::fmt::Debug for OmegaTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OmegaTable")
            .field("x_max", &self.x_max)
            .field("w", &self.w)
            .finish_non_exhaustive()
    }
}

impl OmegaTable {
    pub fn x_max(&self) -> u64 {
        self.x_max
    }

    pub fn w(&self) -> u64 {
        self.w
    }

    /// ω(n). Panics if `n > x_max`.
    #[inline]
    pub fn omega(&self, n: u64) -> u8 {
        self.omega[n as usize]
    }

    /// ω(n, w). Panics if `n > x_max`.
    #[inline]
    pub fn omega_small(&self, n: u64) -> u8 {
        self.omega_small[n as usize]
    }

    /// Raw ω values indexed by `n` (index 0 unused).
    pub fn omega_slice(&self) -> &[u8] {
        &self.omega
    }

    pub fn omega_small_slice(&self) -> &[u8] {
        &self.omega_small
    }

    /// Members of E_k(x) = {2 <= n <= x : ω(n) = k} in increasing order.
    ///
    /// Panics if `x > x_max`.
    pub fn enumerate_e_k(&self, k: u32, x: u64) -> impl Iterator<Item = u64> + '_ {
        assert!(x <= self.x_max, "x = {x} beyond table range {}", self.x_max);
        let hi = x.max(1) as usize;
        self.omega[2.min(hi + 1)..=hi]
            .iter()
            .enumerate()
            .filter(move |&(_, &om)| u32::from(om) == k)
            .map(|(i, _)| i as u64 + 2)
    }

    /// π_k(x) under the `n ∈ [2, x]` convention.
    pub fn pi_k(&self, k: u32, x: u64) -> u64 {
        self.enumerate_e_k(k, x).count() as u64
    }

    /// Largest ω(n) over `n <= x`.
    pub fn max_omega(&self, x: u64) -> u8 {
        self.omega[..=x as usize].iter().copied().max().unwrap_or(0)
    }

    /// Assembles a table from raw per-`n` counts (index 0 included).
    ///
    /// Used for synthetic fixtures; the invariants are checked.
    pub fn from_raw(x_max: u64, w: u64, omega: Vec<u8>, omega_small: Vec<u8>) -> Result<Self, SieveError> {
        let len = x_max as usize + 1;
        if omega.len() != len || omega_small.len() != len {
            return Err(SieveError::InvalidConfig(format!(
                "expected {len} entries per table, got {} and {}",
                omega.len(),
                omega_small.len()
            )));
        }
        if omega.iter().zip(&omega_small).any(|(a, b)| b > a) {
            return Err(SieveError::InvalidConfig("omega_small exceeds omega".into()));
        }
        Ok(Self {
            x_max,
            w,
            omega,
            omega_small,
        })
    }

    /// Writes the cache file atomically (temporary file, then rename).
    ///
    /// Layout, little-endian: `b"OMEGATBL"`, `u32` version, `u64` x_max,
    /// `u64` w, then ω(n) for `n = 1..=x_max`, then ω(n, w) likewise.
    pub fn write_cache(&self, path: &Path) -> Result<(), SieveError> {
        let tmp = path.with_extension("tmp");
        {
            let mut out = BufWriter::new(File::create(&tmp)?);
            out.write_all(CACHE_MAGIC)?;
            out.write_all(&CACHE_VERSION.to_le_bytes())?;
            out.write_all(&self.x_max.to_le_bytes())?;
            out.write_all(&self.w.to_le_bytes())?;
            out.write_all(&self.omega[1..])?;
            out.write_all(&self.omega_small[1..])?;
            out.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Reads a cache file, insisting that its header matches `(x_max, w)`.
    pub fn read_cache(path: &Path, x_max: u64, w: u64) -> Result<Self, SieveError> {
        let mut input = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(SieveError::BadCache("bad magic".into()));
        }
        let mut word = [0u8; 4];
        input.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != CACHE_VERSION {
            return Err(SieveError::BadCache(format!("unsupported version {version}")));
        }
        let mut quad = [0u8; 8];
        input.read_exact(&mut quad)?;
        let found_x = u64::from_le_bytes(quad);
        input.read_exact(&mut quad)?;
        let found_w = u64::from_le_bytes(quad);
        if found_x != x_max || found_w != w {
            return Err(SieveError::CacheMismatch {
                found_x,
                found_w,
                want_x: x_max,
                want_w: w,
            });
        }
        let len = x_max as usize;
        let mut omega = vec![0u8; len + 1];
        let mut omega_small = vec![0u8; len + 1];
        input.read_exact(&mut omega[1..])?;
        input.read_exact(&mut omega_small[1..])?;
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(SieveError::BadCache("trailing bytes".into()));
        }
        Self::from_raw(x_max, w, omega, omega_small)
    }
}

/// Builds the table for `config`. Deterministic for any segment length and
/// any number of worker threads.
pub fn build_omega_table(config: &SieveConfig) -> Result<OmegaTable, SieveError> {
    config.validate()?;
    let len = usize::try_from(config.x_max + 1).map_err(|_| SieveError::Capacity { x_max: config.x_max })?;
    let base_primes = primes_up_to(isqrt(config.x_max));
    let mut omega = vec![0u8; len];
    let mut omega_small = vec![0u8; len];
    let seg = config.segment_length;
    let job = |(index, (om, sm)): (usize, (&mut [u8], &mut [u8]))| {
        let lo = (index * seg) as u64;
        sieve_segment(lo, om, sm, &base_primes, config.w);
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        omega
            .par_chunks_mut(seg)
            .zip(omega_small.par_chunks_mut(seg))
            .enumerate()
            .for_each(job);
    }
    #[cfg(not(feature = "parallel"))]
    {
        omega
            .chunks_mut(seg)
            .zip(omega_small.chunks_mut(seg))
            .enumerate()
            .for_each(job);
    }

    Ok(OmegaTable {
        x_max: config.x_max,
        w: config.w,
        omega,
        omega_small,
    })
}

/// Fills `omega[i]`, `small[i]` for `n = lo + i`.
fn sieve_segment(lo: u64, omega: &mut [u8], small: &mut [u8], base_primes: &[u64], w: u64) {
    let len = omega.len();
    let hi = lo + len as u64;
    let mut cofactor = vec![1u64; len];

    for &p in base_primes {
        if p >= hi {
            break;
        }
        let is_small = p <= w;
        let mut m = first_multiple(lo.max(1), p);
        while m < hi {
            let i = (m - lo) as usize;
            omega[i] += 1;
            small[i] += u8::from(is_small);
            cofactor[i] *= p;
            m += p;
        }
        // one extra factor of p for each higher power dividing the entry
        let mut pk = p;
        while let Some(next) = pk.checked_mul(p).filter(|&q| q < hi) {
            pk = next;
            let mut m = first_multiple(lo.max(1), pk);
            while m < hi {
                cofactor[(m - lo) as usize] *= p;
                m += pk;
            }
        }
    }

    for (i, &cof) in cofactor.iter().enumerate() {
        let n = lo + i as u64;
        if n >= 2 && cof != n {
            omega[i] += 1;
            if n <= w.saturating_mul(cof) {
                small[i] += 1;
            }
        }
    }
}

#[inline]
fn first_multiple(lo: u64, p: u64) -> u64 {
    lo.div_ceil(p) * p
}
