//! Scalar helpers: exact mod-1 arithmetic, binomials, unit phases.

use num_complex::Complex64;
use std::f64::consts::TAU;

pub type C64 = Complex64;

/// Reduce to [0, 1).
pub fn frac(t: f64) -> f64 {
    let r = t - t.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed distance to the nearest integer, in [-1/2, 1/2).
pub fn wrap_half(t: f64) -> f64 {
    let r = frac(t + 0.5) - 0.5;
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// `‖t‖`, the distance to the nearest integer.
pub fn dist_z(t: f64) -> f64 {
    let r = frac(t);
    r.min(1.0 - r)
}

/// `e(t) = exp(2πit)`, with t reduced mod 1 first.
pub fn e(t: f64) -> C64 {
    let t = frac(t);
    C64::from_polar(1.0, TAU * t)
}

/// Fractional part of `n * x`.
///
/// x is split as m·2^e with integer mantissa m, so the product modulo one is
/// formed exactly in 128-bit wrapping arithmetic and rounded once.
pub fn frac_mul(n: i128, x: f64) -> f64 {
    if n == 0 || x == 0.0 || !x.is_finite() {
        return 0.0;
    }
    let bits = x.abs().to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mant = bits & ((1u64 << 52) - 1);
    let (m, ex) = if exp == 0 {
        (mant, -1074)
    } else {
        (mant | (1u64 << 52), exp - 1075)
    };
    if ex >= 0 {
        return 0.0;
    }
    let n = if x < 0.0 { n.wrapping_neg() } else { n };
    let s = (-ex) as u32;
    if s >= 128 {
        return frac(n as f64 * x.abs());
    }
    let mask = (1u128 << s) - 1;
    let prod = (n as u128).wrapping_mul(m as u128) & mask;
    frac(prod as f64 * 2f64.powi(-(s as i32)))
}

/// Generalized binomial C(n, j) for any integer n, `None` on i128 overflow.
pub fn binom(n: i128, j: u32) -> Option<i128> {
    let mut c: i128 = 1;
    for i in 0..j as i128 {
        c = c.checked_mul(n - i)? / (i + 1);
    }
    Some(c)
}

/// frac(C(n, j) * x), falling back to floating point when the binomial
/// overflows i128 (precision degrades gracefully in that regime).
pub fn frac_binom_mul(n: i128, j: u32, x: f64) -> f64 {
    match binom(n, j) {
        Some(c) => frac_mul(c, x),
        None => {
            let mut c = 1.0f64;
            for i in 0..j {
                c *= (n as f64 - i as f64) / (i as f64 + 1.0);
            }
            frac(c * x)
        }
    }
}

/// Kahan-compensated sum of complex terms.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: C64,
    comp: C64,
}

impl KahanSum {
    pub fn add(&mut self, v: C64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> C64 {
        self.sum
    }
}

/// ρ = (1 − |α|²)^{1/2}, computed as sqrt((1−|α|)(1+|α|)).
pub fn rho(alpha: C64) -> f64 {
    let r = alpha.norm();
    ((1.0 - r) * (1.0 + r)).max(0.0).sqrt()
}

/// Parse a frequency: a decimal or the token `sqrt2` (√2 − 1).
pub fn parse_frequency(s: &str) -> Option<f64> {
    match s.trim() {
        "sqrt2" => Some(std::f64::consts::SQRT_2 - 1.0),
        t => t.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_mul_matches_small_products() {
        assert_eq!(frac_mul(3, 0.25), 0.75);
        assert_eq!(frac_mul(-1, 0.25), 0.75);
        assert_eq!(frac_mul(4, 0.25), 0.0);
        let w = std::f64::consts::SQRT_2 - 1.0;
        for n in [1i128, 7, 1000, -55] {
            let direct = frac(n as f64 * w);
            assert!((frac_mul(n, w) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn frac_mul_huge_multiplier_is_exact() {
        // 2^60 * 2^-3 is an integer; 3 * 2^60 * 2^-63 = 0.375
        assert_eq!(frac_mul(1i128 << 60, 0.125), 0.0);
        assert_eq!(frac_mul(3i128 << 60, 2f64.powi(-63)), 0.375);
    }

    #[test]
    fn generalized_binomials() {
        assert_eq!(binom(5, 2), Some(10));
        assert_eq!(binom(-1, 3), Some(-1));
        assert_eq!(binom(-3, 2), Some(6));
        assert_eq!(binom(2, 3), Some(0));
        assert_eq!(binom(i128::MAX / 2, 3), None);
    }

    #[test]
    fn wrap_and_distance() {
        assert_eq!(wrap_half(0.75), -0.25);
        assert_eq!(dist_z(0.9), 0.09999999999999998);
        assert_eq!(frac(-0.25), 0.75);
        assert!((e(0.25) - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn kahan_sums_ones() {
        let mut k = KahanSum::default();
        for _ in 0..1000 {
            k.add(C64::new(0.1, 0.0));
        }
        assert!((k.value().re - 100.0).abs() < 1e-12);
    }
}
