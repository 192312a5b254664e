//! Weyl sums, Selberg majorants of boxes, box-visit counts for the
//! two-dimensional skew-shift and Diophantine constants.

use crate::coeffs::{skew_orbit, SkewShiftParams, TorusPoint};
use crate::error::{invalid, Result};
use crate::num::{dist_z, e, frac, frac_mul, KahanSum, C64};
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Σ_{ℓ=1}^{L} e(ℓω).
pub fn weyl_linear(omega: f64, l: u64) -> Result<C64> {
    if l == 0 {
        return invalid("Weyl sums need L ≥ 1");
    }
    let mut s = KahanSum::default();
    for j in 1..=l {
        s.add(e(frac_mul(j as i128, omega)));
    }
    Ok(s.value())
}

/// Σ_{ℓ=1}^{L} e(tℓ + ωℓ²).
pub fn weyl_quadratic(t: f64, omega: f64, l: u64) -> Result<C64> {
    if l == 0 {
        return invalid("Weyl sums need L ≥ 1");
    }
    let mut s = KahanSum::default();
    for j in 1..=l as i128 {
        s.add(e(frac_mul(j, t) + frac_mul(j * j, omega)));
    }
    Ok(s.value())
}

/// max_t |Σ_{ℓ=1}^{L} e(tℓ + ωℓ²)| over the grid t = j/M, M the first power
/// of two ≥ `oversample`·L, by one FFT.
pub fn weyl_quadratic_sup(omega: f64, l: u64, oversample: usize) -> Result<f64> {
    if l == 0 || oversample == 0 {
        return invalid("need L ≥ 1 and oversample ≥ 1");
    }
    let m = (oversample as u64 * (l + 1)).next_power_of_two() as usize;
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for j in 1..=l as i128 {
        buf[j as usize % m] += e(frac_mul(j * j, omega));
    }
    let fft = FftPlanner::new().plan_fft(m, FftDirection::Inverse);
    fft.process(&mut buf);
    Ok(buf.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("need at least two matching points");
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Box {‖x − cx‖ ≤ ε, ‖y − cy‖ ≤ δ} on 𝕋².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub eps: f64,
    pub delta: f64,
    pub centre: (f64, f64),
}

impl BoxSpec {
    /// Centred at the origin. Half-widths of ½ cover the whole circle.
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        Self::centred(eps, delta, (0.0, 0.0))
    }

    pub fn centred(eps: f64, delta: f64, centre: (f64, f64)) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.5 && delta > 0.0 && delta <= 0.5) {
            return invalid("box half-widths must lie in (0, 1/2]");
        }
        Ok(BoxSpec { eps, delta, centre: (frac(centre.0), frac(centre.1)) })
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        dist_z(x - self.centre.0) <= self.eps && dist_z(y - self.centre.1) <= self.delta
    }
}

/// Selberg majorant of the arc [c − h, c + h] with degree K: Fourier
/// coefficients ŝ(m), |m| ≤ K, with ŝ(0) = 2h + 1/(K+1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selberg1D {
    pub degree: usize,
    /// ŝ(−K), …, ŝ(K).
    pub coeffs: Vec<C64>,
}

fn vaaler_weight(u: f64) -> f64 {
    PI * u * (1.0 - u) / (PI * u).tan() + u
}

impl Selberg1D {
    pub fn new(centre: f64, half_width: f64, degree: usize) -> Self {
        let k = degree as i64;
        let kp1 = (degree + 1) as f64;
        let (a, b) = (centre - half_width, centre + half_width);
        let coeffs = (-k..=k)
            .map(|m| {
                let fejer = (1.0 - m.abs() as f64 / kp1) / (2.0 * kp1);
                let ea = e(-(m as f64) * a);
                let eb = e(-(m as f64) * b);
                if m == 0 {
                    C64::new(b - a + 1.0 / kp1, 0.0)
                } else {
                    // Vaaler coefficient of the sawtooth approximation at frequency −m
                    let j = -m;
                    let v = -vaaler_weight(j.abs() as f64 / kp1) / (C64::new(0.0, 2.0 * PI * j as f64));
                    v * (ea - eb) + (ea + eb) * fejer
                }
            })
            .collect();
        Selberg1D { degree, coeffs }
    }

    pub fn coeff(&self, m: i64) -> C64 {
        let k = self.degree as i64;
        if m.abs() > k {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(m + k) as usize]
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.degree as i64;
        let mut s = self.coeff(0).re;
        for m in 1..=k {
            s += 2.0 * (self.coeff(m) * e(frac_mul(m as i128, x))).re;
        }
        s
    }
}

/// Tensor product P(x, y) = S_x(x) S_y(y) ≥ χ_B.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelbergMajorant {
    pub spec: BoxSpec,
    pub x: Selberg1D,
    pub y: Selberg1D,
}

impl SelbergMajorant {
    pub fn coeff(&self, j: i64, k: i64) -> C64 {
        self.x.coeff(j) * self.y.coeff(k)
    }

    pub fn mean(&self) -> f64 {
        self.coeff(0, 0).re
    }

    pub fn max_abs_coeff(&self) -> f64 {
        let (kx, ky) = (self.x.degree as i64, self.y.degree as i64);
        let mx = (-kx..=kx).map(|j| self.x.coeff(j).norm()).fold(0.0, f64::max);
        let my = (-ky..=ky).map(|j| self.y.coeff(j).norm()).fold(0.0, f64::max);
        mx * my
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.x.eval(x) * self.y.eval(y)
    }

    /// Values on the n×n grid (i/n, j/n), row i for x.
    pub fn eval_grid(&self, n: usize) -> Vec<Vec<f64>> {
        let sx: Vec<f64> = (0..n).map(|i| self.x.eval(i as f64 / n as f64)).collect();
        let sy: Vec<f64> = (0..n).map(|j| self.y.eval(j as f64 / n as f64)).collect();
        sx.iter().map(|a| sy.iter().map(|b| a * b).collect()).collect()
    }
}

/// Smallest degree K with 2h + 1/(K+1) ≤ √5·h, so that the product mean
/// stays within 5εδ.
pub fn selberg_degree(half_width: f64) -> usize {
    let k1 = (1.0 / ((5f64.sqrt() - 2.0) * half_width)).ceil() as usize;
    k1.max(1) - 1
}

/// Majorant with all coefficients bounded by 5εδ.
pub fn selberg_majorant(b: &BoxSpec) -> SelbergMajorant {
    selberg_majorant_with_degree(b, selberg_degree(b.eps), selberg_degree(b.delta))
}

pub fn selberg_majorant_with_degree(b: &BoxSpec, kx: usize, ky: usize) -> SelbergMajorant {
    SelbergMajorant {
        spec: *b,
        x: Selberg1D::new(b.centre.0, b.eps, kx),
        y: Selberg1D::new(b.centre.1, b.delta, ky),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxVisits {
    pub count: u64,
    pub best_offset: u64,
}

/// Minimal over offsets ℓ₀ < N of #{0 ≤ ℓ ≤ ⌊L/N⌋ : T^{ℓN+ℓ₀}(x, y) ∈ B}.
pub fn box_visits(p: &SkewShiftParams, start: &TorusPoint, b: &BoxSpec, l: u64, stride: u64) -> Result<BoxVisits> {
    if p.k != 2 {
        return invalid("box visits are defined for the two-dimensional skew-shift");
    }
    if l == 0 || stride == 0 {
        return invalid("need L ≥ 1 and N ≥ 1");
    }
    let mut best: Option<BoxVisits> = None;
    for off in 0..stride {
        let mut count = 0u64;
        for j in 0..=l / stride {
            let pt = skew_orbit(p, start, (j * stride + off) as i64)?;
            if b.contains(pt.coords()[0], pt.coords()[1]) {
                count += 1;
            }
        }
        if best.map_or(true, |v| count < v.count) {
            best = Some(BoxVisits { count, best_offset: off });
        }
    }
    Ok(best.unwrap())
}

/// Visit flags of T^ℓ(x, y), ℓ = 0..=L.
pub fn visit_flags(p: &SkewShiftParams, start: &TorusPoint, b: &BoxSpec, l: u64) -> Result<Vec<bool>> {
    (0..=l)
        .map(|j| {
            let pt = skew_orbit(p, start, j as i64)?;
            Ok(b.contains(pt.coords()[0], pt.coords()[1]))
        })
        .collect()
}

/// Continued-fraction denominators of the exact binary value of ω, up to qmax.
pub fn convergent_denominators(omega: f64, qmax: u64) -> Result<Vec<u64>> {
    let (num, den) = exact_ratio(frac(omega))?;
    let mut out = vec![1u64];
    let (mut a, mut b) = (den, num);
    let (mut q_prev, mut q) = (0u128, 1u128);
    while b != 0 {
        let t = a / b;
        let r = a % b;
        let q_next = t * q + q_prev;
        if q_next > qmax as u128 {
            break;
        }
        q_prev = q;
        q = q_next;
        out.push(q as u64);
        a = b;
        b = r;
    }
    out.dedup();
    Ok(out)
}

/// ω = num / den with den a power of two.
fn exact_ratio(omega: f64) -> Result<(u128, u128)> {
    if omega == 0.0 {
        return Ok((0, 1));
    }
    let bits = omega.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let (mant, e2) = if exp == 0 { (bits & ((1 << 52) - 1), -1074) } else { ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075) };
    if e2 >= 0 {
        return Ok((0, 1));
    }
    let shift = (-e2) as u32;
    let tz = mant.trailing_zeros().min(shift);
    let shift = shift - tz;
    if shift > 120 {
        return invalid("frequency too small for an exact continued fraction");
    }
    Ok(((mant >> tz) as u128, 1u128 << shift))
}

/// min over q ≤ qmax of q^τ‖qω‖, returned with the minimizing q.
pub fn diophantine_constant(omega: f64, tau: f64, qmax: u64) -> Result<(f64, u64)> {
    if qmax == 0 {
        return invalid("qmax must be ≥ 1");
    }
    let (num, den) = exact_ratio(frac(omega))?;
    let mut best = (f64::INFINITY, 1u64);
    for q in convergent_denominators(omega, qmax)? {
        let r = (q as u128 * num) % den;
        let d = r.min(den - r) as f64 / den as f64;
        let v = (q as f64).powf(tau) * d;
        if v < best.0 {
            best = (v, q);
        }
    }
    Ok(best)
}
