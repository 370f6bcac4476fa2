//! Exact rational shares and their fixed-precision CSV rendering.

use num::rational::Ratio;
use num::{Signed, Zero};

/// Exact share value. Counts fit comfortably in i64 at corpus scale.
pub type Share = Ratio<i64>;

pub fn share(numerator: u64, denominator: u64) -> Share {
    Ratio::new(numerator as i64, denominator as i64)
}

pub fn share_to_f64(s: Share) -> f64 {
    *s.numer() as f64 / *s.denom() as f64
}

/// Render a share with 6 decimal places, round half to even, computed on the
/// exact rational so goldens are stable.
pub fn format_share(s: Share) -> String {
    const SCALE: i128 = 1_000_000;
    let negative = s.is_negative();
    let abs = s.abs();
    let n = *abs.numer() as i128 * SCALE;
    let d = *abs.denom() as i128;
    let mut q = n / d;
    let rem = n % d;
    // round half to even on the exact remainder
    let twice = rem * 2;
    if twice > d || (twice == d && q % 2 == 1) {
        q += 1;
    }
    let sign = if negative && q != 0 { "-" } else { "" };
    format!("{sign}{}.{:06}", q / SCALE, q % SCALE)
}

/// True when the rational is exactly zero.
pub fn is_zero(s: Share) -> bool {
    s.is_zero()
}
