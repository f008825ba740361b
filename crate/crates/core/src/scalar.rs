use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the engine: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless widening (or identity) to `f64`.
    fn to_f64_lossless(self) -> f64;

    /// Nearest representable value.
    fn from_f64_lossy(v: f64) -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v
    }
}

/// Sums `f(lo..hi)` in f64 by recursive halving, so the rounding pattern only
/// depends on the length of the range.
pub(crate) fn pairwise_sum<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
    const BLOCK: usize = 8;
    if hi - lo <= BLOCK {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f)
    }
}

/// Formats `x` with `digits` significant digits in plain decimal notation.
///
/// Non-finite values print as `inf`, `-inf` or `nan`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return format!("{:.*}", digits.saturating_sub(1), 0.0);
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let exp: i64 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (digits as i64 - 1 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}
