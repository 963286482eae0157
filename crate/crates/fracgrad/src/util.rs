//! Deterministic numeric helpers: fixed-shape summation, stable text
//! formatting for floating-point values, and a small hash for cache keys.

use rayon::prelude::*;

/// Pairwise (cascade) summation with a shape that depends only on the slice
/// length. Same input, same result, on every run and platform that rounds
/// f64 identically; error grows like O(log n) rather than O(n).
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if v.len() <= LEAF {
        let mut acc = 0.0;
        for &x in v {
            acc += x;
        }
        return acc;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Evaluates `f(0), …, f(n−1)` in parallel, then reduces with
/// [`pairwise_sum`]. The reduction shape is fixed by `n` alone, so the result
/// is independent of the number of worker threads.
pub fn par_map_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let parts: Vec<f64> = (0..n).into_par_iter().map(f).collect();
    pairwise_sum(&parts)
}

/// Formats `x` with 12 significant digits, trailing zeros stripped — the
/// shortest stable form used in every text output of the suite (CSV fields,
/// raster headers, summaries). Fixed notation is used for exponents in
/// [−4, 12), scientific otherwise, mirroring the familiar printf `%g` rules.
pub fn fmt_g(x: f64) -> String {
    const P: i32 = 12;
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let epos = sci.find('e').expect("scientific format always has an exponent");
    let exp: i32 = sci[epos + 1..].parse().expect("exponent is an integer");
    if exp >= -4 && exp < P {
        let prec = (P - 1 - exp).max(0) as usize;
        strip_fraction(&format!("{:.*}", prec, x))
    } else {
        let mantissa = strip_fraction(&sci[..epos]);
        format!("{}e{}{:02}", mantissa, if exp < 0 { "-" } else { "+" }, exp.abs())
    }
}

/// Removes trailing zeros after a decimal point, and the point itself if
/// nothing remains behind it.
fn strip_fraction(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0');
    t.trim_end_matches('.').to_string()
}

/// FNV-1a 64-bit hash, used to derive kernel-cache file names from table
/// parameters. Stable across runs and platforms.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}
