//! Helpers for the `acceptance` test target.

use std::path::PathBuf;

/// The `omega-shift` binary built alongside the test executables
/// (`target/<profile>/omega-shift`).
pub fn cli_binary() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let bin = dir.join(format!("omega-shift{}", std::env::consts::EXE_SUFFIX));
    bin.exists().then_some(bin)
}

/// (ω(n), ω(n, w)) by trial division.
pub fn naive_omega(mut n: u64, w: u64) -> (u32, u32) {
    let (mut all, mut small) = (0, 0);
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            all += 1;
            small += u32::from(d <= w);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        all += 1;
        small += u32::from(n <= w);
    }
    (all, small)
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}
