//! Transfer matrices A_z(α), their products and Lyapunov exponents.

use crate::coeffs::{SkewShiftParams, TorusPoint, VerblunskySource};
use crate::error::{invalid, Result};
use crate::linalg::{
    mat2_apply, mat2_det, mat2_diag, mat2_frobenius, mat2_identity, mat2_max_abs, mat2_mul,
    mat2_scale, mat2_transpose, Mat2,
};
use crate::num::{rho, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Product of transfer matrices; the true value is `mat · e^{log_scale}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferProduct {
    pub mat: Mat2,
    pub log_scale: f64,
    pub steps: usize,
}

impl TransferProduct {
    pub fn identity() -> Self {
        TransferProduct { mat: mat2_identity(), log_scale: 0.0, steps: 0 }
    }

    fn renormalize(&mut self) {
        let s = mat2_max_abs(&self.mat);
        if s > 0.0 && s.is_finite() {
            self.mat = mat2_scale(&self.mat, 1.0 / s);
            self.log_scale += s.ln();
        }
    }

    /// Left-multiply by one more factor.
    pub fn push(&mut self, a: &Mat2) {
        self.mat = mat2_mul(a, &self.mat);
        self.steps += 1;
        self.renormalize();
    }

    /// `later · self`.
    pub fn then(&self, later: &TransferProduct) -> TransferProduct {
        let mut out = TransferProduct {
            mat: mat2_mul(&later.mat, &self.mat),
            log_scale: self.log_scale + later.log_scale,
            steps: self.steps + later.steps,
        };
        out.renormalize();
        out
    }

    /// Unscaled matrix (may overflow for long products).
    pub fn value(&self) -> Mat2 {
        mat2_scale(&self.mat, self.log_scale.exp())
    }

    /// log of the Frobenius norm of the product.
    pub fn log_norm(&self) -> f64 {
        mat2_frobenius(&self.mat).ln() + self.log_scale
    }

    /// log |det| of the product.
    pub fn log_abs_det(&self) -> f64 {
        mat2_det(&self.mat).norm().ln() + 2.0 * self.log_scale
    }

    /// Product applied to v, returned as (mantissa, log scale).
    pub fn apply(&self, v: [C64; 2]) -> ([C64; 2], f64) {
        (mat2_apply(&self.mat, v), self.log_scale)
    }
}

/// A_z(α) = ρ^{−1} [[z, −ᾱ], [−αz, 1]].
pub fn one_step(alpha: C64, z: C64) -> Result<Mat2> {
    if !(alpha.norm() < 1.0) {
        return invalid(format!("|alpha| = {} must be < 1", alpha.norm()));
    }
    let r = 1.0 / rho(alpha);
    Ok([
        [z * r, -alpha.conj() * r],
        [-alpha * z * r, C64::new(r, 0.0)],
    ])
}

/// T^{[a,b]}(z) = A_z(α_b)⋯A_z(α_a); b = a − 1 gives the identity.
pub fn forward_product(src: &VerblunskySource, a: i64, b: i64, z: C64) -> Result<TransferProduct> {
    if b < a - 1 {
        return invalid(format!("window [{a}, {b}] is reversed"));
    }
    let mut t = TransferProduct::identity();
    for n in a..=b {
        t.push(&one_step(src.alpha_at(n)?, z)?);
    }
    Ok(t)
}

/// T_{−n}(z) = diag(z^{−2}, 1) (T^{[−n,−1]}(z))ᵗ diag(z², 1).
pub fn backward_product(src: &VerblunskySource, n: usize, z: C64) -> Result<TransferProduct> {
    if z == C64::new(0.0, 0.0) {
        return invalid("backward transfer product needs z ≠ 0");
    }
    let one = C64::new(1.0, 0.0);
    let t = forward_product(src, -(n as i64), -1, z)?;
    let z2 = z * z;
    let mat = mat2_mul(&mat2_diag(one / z2, one), &mat2_mul(&mat2_transpose(&t.mat), &mat2_diag(z2, one)));
    let mut out = TransferProduct { mat, log_scale: t.log_scale, steps: n };
    out.renormalize();
    Ok(out)
}

/// A complex number stored as mantissa · e^{log}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mantissa: C64,
    pub log: f64,
}

impl Scaled {
    pub fn one() -> Self {
        Scaled { mantissa: C64::new(1.0, 0.0), log: 0.0 }
    }

    pub fn log_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log
    }

    pub fn value(&self) -> C64 {
        self.mantissa * self.log.exp()
    }
}

/// φ^{[a,b]}_{β,•}(z): first component of T^{[a,b]}(1, β̄)ᵗ. Empty windows give 1.
pub fn phi_fixed_free(src: &VerblunskySource, a: i64, b: i64, beta: C64, z: C64) -> Result<Scaled> {
    if b < a {
        return Ok(Scaled::one());
    }
    let (v, log) = forward_product(src, a, b, z)?.apply([C64::new(1.0, 0.0), beta.conj()]);
    Ok(Scaled { mantissa: v[0], log })
}

/// φ^{[a,b]}_{•,γ}(z): first component of diag(−1/z, 1)(T^{[a−1,b−1]})ᵗ(−z, γ̄)ᵗ.
pub fn phi_free_fixed(src: &VerblunskySource, a: i64, b: i64, gamma: C64, z: C64) -> Result<Scaled> {
    if b < a {
        return Ok(Scaled::one());
    }
    let t = forward_product(src, a - 1, b - 1, z)?;
    let v = mat2_apply(&mat2_transpose(&t.mat), [-z, gamma.conj()]);
    Ok(Scaled { mantissa: -v[0] / z, log: t.log_scale })
}

/// φ^{[a,b]}_{β,γ}(z) = z v_0 − γ̄ v_1 with v = T^{[a,b−1]}(1, β̄)ᵗ.
pub fn phi_fixed_fixed(
    src: &VerblunskySource,
    a: i64,
    b: i64,
    beta: C64,
    gamma: C64,
    z: C64,
) -> Result<Scaled> {
    let (v, log) = forward_product(src, a, b - 1, z)?.apply([C64::new(1.0, 0.0), beta.conj()]);
    Ok(Scaled { mantissa: z * v[0] - gamma.conj() * v[1], log })
}

/// Deterministic lattice of `count` points on 𝕋^k: a product lattice with
/// cell midpoints when count is a perfect k-th power, otherwise a Kronecker
/// sequence with square-root-of-prime strides.
pub fn torus_grid(k: usize, count: usize) -> Result<Vec<TorusPoint>> {
    if count == 0 {
        return invalid("grid needs at least one point");
    }
    let m = (count as f64).powf(1.0 / k as f64).round() as usize;
    if m.checked_pow(k as u32) == Some(count) {
        return (0..count)
            .map(|mut i| {
                let mut c = Vec::with_capacity(k);
                for _ in 0..k {
                    c.push(((i % m) as f64 + 0.5) / m as f64);
                    i /= m;
                }
                TorusPoint::new(c)
            })
            .collect();
    }
    const PRIMES: [f64; 8] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
    (0..count)
        .map(|i| TorusPoint::new((0..k).map(|j| (i as f64 + 0.5) * PRIMES[j].sqrt()).collect()))
        .collect()
}

/// Grid average of (1/n) log‖T_{x;n}(z)‖_F over the given start points.
pub fn lyapunov_estimate(
    params: &SkewShiftParams,
    grid: &[TorusPoint],
    z: C64,
    n: usize,
) -> Result<f64> {
    if n == 0 || grid.is_empty() {
        return invalid("lyapunov_estimate needs n ≥ 1 and a nonempty grid");
    }
    let per_point: Vec<Result<f64>> = grid
        .par_iter()
        .map(|x| {
            let src = VerblunskySource::skew_shift(params.clone(), x.clone())?;
            Ok(forward_product(&src, 0, n as i64 - 1, z)?.log_norm() / n as f64)
        })
        .collect();
    let mut sum = 0.0;
    for v in per_point {
        sum += v?;
    }
    Ok(sum / grid.len() as f64)
}

/// (1/m) log‖T_m(z)‖_F for m = 1, …, n along a single orbit.
pub fn lyapunov_pointwise(src: &VerblunskySource, z: C64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("lyapunov_pointwise needs n ≥ 1");
    }
    let mut t = TransferProduct::identity();
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        t.push(&one_step(src.alpha_at(m as i64)?, z)?);
        out.push(t.log_norm() / (m + 1) as f64);
    }
    Ok(out)
}

/// −½ log(1 − |λ|²).
pub fn skew_shift_lyapunov(lambda: C64) -> f64 {
    -0.5 * (1.0 - lambda.norm_sqr()).ln()
}

/// CSV trace `m,estimate`.
pub fn trace_to_csv(trace: &[f64]) -> String {
    let mut s = String::from("m,estimate\n");
    for (i, v) in trace.iter().enumerate() {
        s.push_str(&format!("{},{:?}\n", i + 1, v));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmv::{build_restriction, BoundaryCondition};
    use crate::linalg::poly_eval;
    use crate::num::e;
    use crate::szego::char_poly;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close2(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn one_step_examples() {
        let z = c(0.3, -0.7);
        let a = one_step(c(0.0, 0.0), z).unwrap();
        assert!(close2(&a, &mat2_diag(z, c(1.0, 0.0)), 0.0));
        let a = one_step(c(0.6, 0.0), c(1.0, 0.0)).unwrap();
        let expect = [[c(1.25, 0.0), c(-0.75, 0.0)], [c(-0.75, 0.0), c(1.25, 0.0)]];
        assert!(close2(&a, &expect, 1e-15));
        for s in 0..20 {
            let al = 0.9 * e(s as f64 * 0.137) * (s as f64 / 20.0);
            let z = e(s as f64 * 0.31) * (0.5 + s as f64 / 10.0);
            assert!((mat2_det(&one_step(al, z).unwrap()) - z).norm() < 1e-14 * z.norm().max(1.0));
        }
        assert!(one_step(c(1.0, 0.0), z).is_err());
    }

    #[test]
    fn conjugation_identity() {
        for s in 0..10 {
            let al = 0.8 * e(0.21 * s as f64);
            let z = e(0.07 * s as f64) * 1.3;
            let one = c(1.0, 0.0);
            let lhs = mat2_mul(
                &mat2_mul(&mat2_diag(-one / z, one), &mat2_transpose(&one_step(-al.conj(), z).unwrap())),
                &mat2_diag(-z, one),
            );
            assert!(close2(&lhs, &one_step(al, z).unwrap(), 1e-14));
        }
    }

    #[test]
    fn cocycle_and_determinant() {
        let src = VerblunskySource::random(1, -5, 400, 0.9).unwrap();
        let z = e(0.3);
        let t1 = forward_product(&src, -5, 100, z).unwrap();
        let t2 = forward_product(&src, 101, 390, z).unwrap();
        let whole = forward_product(&src, -5, 390, z).unwrap();
        let joined = t1.then(&t2);
        assert!((joined.log_scale - whole.log_scale).abs() < 1e-9 * whole.log_scale.abs().max(1.0) + 1.0);
        let scale = (joined.log_scale - whole.log_scale).exp();
        for (x, y) in joined.mat.iter().flatten().zip(whole.mat.iter().flatten()) {
            assert!((x * scale - y).norm() < 1e-9);
        }
        // |det A_z(α)| = |z| = 1; long products are nearly rank one, so check a short one
        assert!(forward_product(&src, 0, 12, z).unwrap().log_abs_det().abs() < 1e-12);
        let single = forward_product(&src, 3, 3, z).unwrap();
        assert!(close2(&single.value(), &one_step(src.alpha_at(3).unwrap(), z).unwrap(), 1e-14));
        assert!(forward_product(&src, 3, 1, z).is_err());
    }

    #[test]
    fn transfer_identities_against_char_poly() {
        let src = VerblunskySource::random(2, -10, 80, 0.9).unwrap();
        let beta = e(0.23);
        let gamma = e(0.61);
        let fb = BoundaryCondition::fixed(beta).unwrap();
        let fg = BoundaryCondition::fixed(gamma).unwrap();
        for (a, b) in [(-3i64, 5i64), (0, 0), (1, 30), (4, 63)] {
            for z in [e(0.1), c(0.4, 0.3), c(1.5, -0.2)] {
                let r = build_restriction(&src, a, b, fb, BoundaryCondition::Free).unwrap();
                let p = char_poly(&r, true).unwrap();
                let expect = poly_eval(&p.normalized_phi(), z);
                let got = phi_fixed_free(&src, a, b, beta, z).unwrap();
                assert!(rel(got.value(), expect) < 1e-9, "bullet [{a},{b}] z={z}");
                let (v, log) = forward_product(&src, a, b, z).unwrap().apply([c(1.0, 0.0), beta.conj()]);
                let star = poly_eval(&crate::linalg::poly_reverse(&p.normalized_phi(), p.degree), z);
                assert!(rel(v[1] * log.exp(), beta.conj() * star) < 1e-9);

                let r = build_restriction(&src, a, b, fb, fg).unwrap();
                let p = char_poly(&r, true).unwrap();
                let got = phi_fixed_fixed(&src, a, b, beta, gamma, z).unwrap();
                assert!(rel(got.value(), poly_eval(&p.normalized_phi(), z)) < 1e-9);

                let r = build_restriction(&src, a, b, BoundaryCondition::Free, fg).unwrap();
                let p = char_poly(&r, true).unwrap();
                let got = phi_free_fixed(&src, a, b, gamma, z).unwrap();
                assert!(rel(got.value(), poly_eval(&p.normalized_phi(), z)) < 1e-9);
            }
        }
    }

    #[test]
    fn backward_product_reflected_window() {
        let src = VerblunskySource::random(3, -40, 50, 0.9).unwrap();
        let z = c(0.7, 0.5);
        let id = backward_product(&src, 0, z).unwrap();
        assert!(close2(&id.value(), &mat2_identity(), 1e-15));
        assert!(backward_product(&src, 3, c(0.0, 0.0)).is_err());
        let gamma = e(0.42);
        for n in [1usize, 5, 30] {
            // D2 T_{−n} (−1/z, γ̄) gives φ of window [−n+1, 0], free left, right slot γ
            let t = backward_product(&src, n, z).unwrap();
            let (v, log) = t.apply([-c(1.0, 0.0) / z, gamma.conj()]);
            let got = -z * v[0] * log.exp();
            let r = build_restriction(&src, 1 - n as i64, 0, BoundaryCondition::Free, BoundaryCondition::fixed(gamma).unwrap()).unwrap();
            let p = char_poly(&r, true).unwrap();
            assert!(rel(got, poly_eval(&p.normalized_phi(), z)) < 1e-9, "n={n}");
        }
    }

    #[test]
    fn grids() {
        let g = torus_grid(2, 64).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g[0].coords(), &[0.0625, 0.0625]);
        assert_eq!(torus_grid(3, 10).unwrap().len(), 10);
    }

    #[test]
    fn zero_coefficients_have_zero_exponent() {
        let src = VerblunskySource::constant(c(0.0, 0.0)).unwrap();
        let tr = lyapunov_pointwise(&src, e(0.3), 5000).unwrap();
        assert!(tr.last().unwrap().abs() <= 1e-3);
    }

    #[test]
    fn constant_coefficients_in_band_stay_bounded() {
        // for constant α = λ the spectrum of the free problem is the arc
        // |arg z| ≥ 2 arcsin|λ|; inside it transfer matrices stay bounded
        let src = VerblunskySource::constant(c(0.3, 0.0)).unwrap();
        let tr = lyapunov_pointwise(&src, e(0.5), 2000).unwrap();
        let norms: Vec<f64> = tr.iter().enumerate().map(|(m, v)| v * (m + 1) as f64).collect();
        assert!(norms.iter().all(|v| *v < 3.0));
    }

    #[test]
    fn pointwise_lyapunov_skew_shift() {
        let lam = c(0.5, 0.0);
        let (p, _) = SkewShiftParams::monomial(2, std::f64::consts::SQRT_2 - 1.0, lam).unwrap();
        let src = VerblunskySource::skew_shift(p, TorusPoint::new(vec![0.3141, 0.2718]).unwrap()).unwrap();
        let tr = lyapunov_pointwise(&src, e(0.37), 100_000).unwrap();
        let target = skew_shift_lyapunov(lam);
        assert!((tr.last().unwrap() - target).abs() <= 0.05 * target);
        assert!(trace_to_csv(&tr[..2]).starts_with("m,estimate\n1,"));
    }
}
