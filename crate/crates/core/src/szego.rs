//! Szegő recursion, para-orthogonal and Aleksandrov polynomials, and the
//! characteristic polynomials Φ^{[a,b]}_{β,γ}(z) = det(z − E^{[a,b]}_{β,γ}).

use crate::cmv::{BoundaryCondition, CMVRestriction};
use crate::coeffs::VerblunskySource;
use crate::error::{invalid, Error, Result};
use crate::linalg::{poly_mul, poly_reverse, poly_sub};
use crate::num::{rho, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub const DEFAULT_CHAR_POLY_CAP: usize = 512;

/// (Φ, Φ*) as ascending coefficient vectors. The normalized polynomial is
/// φ = e^{−log_scale} Φ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyPair {
    pub phi: Vec<C64>,
    pub phi_star: Vec<C64>,
    pub degree: usize,
    pub log_scale: f64,
}

impl PolyPair {
    fn from_phi(phi: Vec<C64>, log_scale: f64) -> Self {
        let degree = phi.len() - 1;
        let phi_star = poly_reverse(&phi, degree);
        PolyPair { phi, phi_star, degree, log_scale }
    }

    pub fn normalized_phi(&self) -> Vec<C64> {
        let s = (-self.log_scale).exp();
        self.phi.iter().map(|c| c * s).collect()
    }

    /// Largest deviation of phi_star from the reversal of phi.
    pub fn reversal_defect(&self) -> f64 {
        poly_sub(&poly_reverse(&self.phi, self.degree), &self.phi_star)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

fn check_unimodular(beta: C64) -> Result<()> {
    if (beta.norm() - 1.0).abs() > 1e-14 {
        return invalid(format!("|beta| = {} is not 1", beta.norm()));
    }
    Ok(())
}

fn recurse(alphas: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let mut phi = vec![C64::new(1.0, 0.0)];
    let mut star = vec![C64::new(1.0, 0.0)];
    for &al in alphas {
        let mut zphi = vec![C64::new(0.0, 0.0)];
        zphi.extend_from_slice(&phi);
        let mut star_ext = star.clone();
        star_ext.push(C64::new(0.0, 0.0));
        let next: Vec<C64> = zphi.iter().zip(&star_ext).map(|(p, s)| p - al.conj() * s).collect();
        let next_star: Vec<C64> = star_ext.iter().zip(&zphi).map(|(s, p)| s - al * p).collect();
        phi = next;
        star = next_star;
    }
    (phi, star)
}

/// (Φ_n, Φ_n*) from α_0, …, α_{n−1}; log_scale = Σ log ρ_j.
pub fn szego_recurse(src: &VerblunskySource, n: usize) -> Result<PolyPair> {
    let alphas = src.alphas(0, n as i64 - 1)?;
    let (phi, phi_star) = recurse(&alphas);
    let log_scale = alphas.iter().map(|a| rho(*a).ln()).sum();
    Ok(PolyPair { phi, phi_star, degree: n, log_scale })
}

/// Φ_n(z; β) = zΦ_{n−1}(z) − β̄ Φ*_{n−1}(z).
pub fn paraorthogonal(src: &VerblunskySource, n: usize, beta: C64) -> Result<Vec<C64>> {
    check_unimodular(beta)?;
    if n == 0 {
        return invalid("paraorthogonal polynomials start at degree 1");
    }
    let prev = szego_recurse(src, n - 1)?;
    let mut zphi = vec![C64::new(0.0, 0.0)];
    zphi.extend_from_slice(&prev.phi);
    let scaled: Vec<C64> = prev.phi_star.iter().map(|c| beta.conj() * c).collect();
    Ok(poly_sub(&zphi, &scaled))
}

/// Szegő recursion over the rotated coefficients βα_j.
pub fn aleksandrov_poly(src: &VerblunskySource, n: usize, beta: C64) -> Result<PolyPair> {
    check_unimodular(beta)?;
    let alphas: Vec<C64> = src.alphas(0, n as i64 - 1)?.into_iter().map(|a| beta * a).collect();
    let (phi, phi_star) = recurse(&alphas);
    let log_scale = alphas.iter().map(|a| rho(*a).ln()).sum();
    Ok(PolyPair { phi, phi_star, degree: n, log_scale })
}

/// Σ log ρ over the coefficients of [a−1, b] that are not fixed slots.
pub fn window_log_rho(r: &CMVRestriction) -> f64 {
    let lo = if r.left.is_fixed() { r.a } else { r.a - 1 };
    let hi = if r.right.is_fixed() { r.b - 1 } else { r.b };
    (lo..=hi).map(|n| rho(r.alpha(n)).ln()).sum()
}

/// det(z − E^{[a,b]}_{β,γ}) as a coefficient vector.
///
/// Writes L_w = L_u D with L_u unitary (a free 1×1 corner of L replaced by
/// 1 and moved into D), so det(z − E) = det(L_u)·det(zL_u* − DM), and the
/// second determinant is a continuant of a tridiagonal matrix whose entries
/// are linear in z.
pub fn char_poly(r: &CMVRestriction, normalized: bool) -> Result<PolyPair> {
    char_poly_capped(r, normalized, DEFAULT_CHAR_POLY_CAP)
}

pub fn char_poly_capped(r: &CMVRestriction, normalized: bool, cap: usize) -> Result<PolyPair> {
    let n = r.len();
    if n > cap {
        return Err(Error::ResourceLimit { what: "characteristic polynomial", size: n, cap });
    }
    let mut l = r.factor_l();
    let m = r.factor_m();
    let one = C64::new(1.0, 0.0);
    let mut d = vec![one; n];
    if (r.a - 1).rem_euclid(2) == 0 && r.left == BoundaryCondition::Free {
        d[0] = l.diag[0];
        l.diag[0] = one;
    }
    if r.b.rem_euclid(2) == 0 && r.right == BoundaryCondition::Free {
        d[n - 1] = l.diag[n - 1];
        l.diag[n - 1] = one;
    }
    let mut det_l = one;
    let mut mm = r.a - 1;
    if mm.rem_euclid(2) != 0 {
        mm += 1;
    }
    while mm <= r.b {
        if mm >= r.a && mm < r.b {
            det_l = -det_l;
        } else {
            let pos = if mm < r.a { 0 } else { n - 1 };
            det_l *= l.diag[pos];
        }
        mm += 2;
    }
    let diag: Vec<[C64; 2]> = (0..n).map(|j| [-d[j] * m.diag[j], l.diag[j].conj()]).collect();
    let upper: Vec<[C64; 2]> =
        (0..n - 1).map(|j| [-d[j] * m.upper[j], l.lower[j].conj()]).collect();
    let lower: Vec<[C64; 2]> =
        (0..n - 1).map(|j| [-d[j + 1] * m.lower[j], l.upper[j].conj()]).collect();
    let mut prev2 = vec![one];
    let mut prev = diag[0].to_vec();
    for j in 1..n {
        let t1 = poly_mul(&diag[j], &prev);
        let off = poly_mul(&lower[j - 1], &upper[j - 1]);
        let t2 = poly_mul(&off, &prev2);
        let next = poly_sub(&t1, &t2);
        prev2 = std::mem::replace(&mut prev, next);
    }
    prev.truncate(n + 1);
    let phi: Vec<C64> = prev.iter().map(|c| c * det_l).collect();
    let log_scale = if normalized { window_log_rho(r) } else { 0.0 };
    Ok(PolyPair::from_phi(phi, log_scale))
}

/// Lifted argument F(t) of z·Φ_{N−1}(z)/Φ*_{N−1}(z) at z = e(t), and F′(t).
/// F increases by 2πN as t runs over [0, 1].
fn lifted_phase(c: &[C64], t: f64) -> (f64, f64) {
    let th = TAU * t;
    let one = C64::new(1.0, 0.0);
    let (mut psi, mut d) = (0.0, 0.0);
    for &al in c {
        let phi = psi + th;
        let w = C64::from_polar(1.0, phi);
        let den = one - al * w;
        psi = phi + (one - al.conj() * w.conj()).arg() - den.arg();
        d = (1.0 - al.norm_sqr()) / den.norm_sqr() * (d + TAU);
    }
    (psi + th, d + TAU)
}

/// Eigenvalue angles (turns, unsorted) of a fixed/fixed restriction from the
/// zeros of its para-orthogonal polynomial, with the largest a-posteriori
/// step size of the root solve in turns.
///
/// Rotating every slot by −conj(α̃_{a−1}) is a diagonal similarity, after
/// which the window is a standard para-orthogonal problem. Its zeros solve
/// F(t) ≡ arg(conj c_{N−1}) (mod 2π) for the monotone lifted phase F.
pub fn paraorthogonal_zero_angles(r: &CMVRestriction) -> Result<(Vec<f64>, f64)> {
    if !r.both_fixed() {
        return invalid("para-orthogonal zeros need fixed boundary conditions on both sides");
    }
    let lam = -r.effective_alphas[0].conj();
    let c: Vec<C64> = r.effective_alphas[1..].iter().map(|a| lam * a).collect();
    let n = c.len();
    let (inner, last) = c.split_at(n - 1);
    let target = last[0].conj().arg();
    let samples = 4 * n;
    let grid: Vec<f64> = (0..=samples).map(|i| lifted_phase(inner, i as f64 / samples as f64).0).collect();
    let f0 = grid[0];
    let first = ((f0 - target) / TAU).floor() as i64 + 1;
    let roots: Vec<Result<(f64, f64)>> = (0..n as i64)
        .into_par_iter()
        .map(|j| {
            let level = target + TAU * (first + j) as f64;
            let i = grid.partition_point(|&g| g < level).clamp(1, samples);
            let (mut lo, mut hi) = ((i - 1) as f64 / samples as f64, i as f64 / samples as f64);
            let mut t = 0.5 * (lo + hi);
            let mut step = hi - lo;
            for _ in 0..100 {
                let (f, df) = lifted_phase(inner, t);
                let g = f - level;
                if g < 0.0 {
                    lo = t;
                } else {
                    hi = t;
                }
                let newton = t - g / df;
                let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                step = (next - t).abs();
                t = next;
                if step <= 4.0 * f64::EPSILON || hi - lo <= 4.0 * f64::EPSILON {
                    break;
                }
            }
            if !t.is_finite() {
                return Err(Error::Numeric("para-orthogonal root solve diverged".into()));
            }
            Ok((t, step))
        })
        .collect();
    let mut angles = Vec::with_capacity(n);
    let mut worst = 0.0f64;
    for rt in roots {
        let (t, step) = rt?;
        angles.push(t);
        worst = worst.max(step);
    }
    Ok((angles, worst))
}
