//! Small dense helpers: 2×2 matrices, polynomials, eigen-solves and a
//! pivoted tridiagonal LU.

use crate::error::{Error, Result};
use crate::num::C64;
use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

pub type Mat2 = [[C64; 2]; 2];

pub fn mat2_identity() -> Mat2 {
    let o = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    [[o, z], [z, o]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat2_transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn mat2_det(a: &Mat2) -> C64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat2_apply(a: &Mat2, v: [C64; 2]) -> [C64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

pub fn mat2_frobenius(a: &Mat2) -> f64 {
    a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn mat2_max_abs(a: &Mat2) -> f64 {
    a.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn mat2_scale(a: &Mat2, s: f64) -> Mat2 {
    let mut c = *a;
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    c
}

pub fn mat2_diag(d0: C64, d1: C64) -> Mat2 {
    let z = C64::new(0.0, 0.0);
    [[d0, z], [z, d1]]
}

/// Evaluate a polynomial given by ascending coefficients.
pub fn poly_eval(p: &[C64], z: C64) -> C64 {
    p.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn poly_mul(p: &[C64], q: &[C64]) -> Vec<C64> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut r = vec![C64::new(0.0, 0.0); p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            r[i + j] += a * b;
        }
    }
    r
}

pub fn poly_sub(p: &[C64], q: &[C64]) -> Vec<C64> {
    let n = p.len().max(q.len());
    (0..n)
        .map(|i| {
            p.get(i).copied().unwrap_or_default() - q.get(i).copied().unwrap_or_default()
        })
        .collect()
}

/// Reversed polynomial of formal degree n: z^n·conj(p(1/z̄)).
pub fn poly_reverse(p: &[C64], n: usize) -> Vec<C64> {
    (0..=n)
        .map(|i| p.get(n - i).map(|c| c.conj()).unwrap_or_default())
        .collect()
}

/// Largest coefficient difference relative to the largest coefficient of `q`.
pub fn poly_rel_err(p: &[C64], q: &[C64]) -> f64 {
    let scale = q.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    poly_sub(p, q).iter().map(|c| c.norm()).fold(0.0, f64::max) / scale
}

/// Roots of a polynomial via the eigenvalues of its companion matrix.
pub fn poly_roots(p: &[C64]) -> Result<Vec<C64>> {
    let mut deg = p.len();
    while deg > 0 && p[deg - 1] == C64::new(0.0, 0.0) {
        deg -= 1;
    }
    if deg == 0 {
        return Err(Error::InvalidArgument("zero polynomial has no roots".into()));
    }
    let n = deg - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = p[n];
    let comp = Mat::<C64>::from_fn(n, n, |i, j| {
        if i == 0 {
            -p[n - 1 - j] / lead
        } else if i == j + 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    eigenvalues(&comp)
}

/// Dense matrix from a closure, column-major storage.
pub fn dense_from_fn(n: usize, f: impl FnMut(usize, usize) -> C64) -> Mat<C64> {
    Mat::<C64>::from_fn(n, n, f)
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(m: &Mat<C64>) -> Result<Vec<C64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.eigenvalues()
        .map_err(|e| Error::Numeric(format!("eigensolver failed: {e:?}")))
}

/// Eigenvalues with unit-norm eigenvectors (one per column).
pub fn eigen(m: &Mat<C64>) -> Result<(Vec<C64>, Mat<C64>)> {
    let evd = m
        .eigen()
        .map_err(|e| Error::Numeric(format!("eigensolver failed: {e:?}")))?;
    let n = m.nrows();
    let s = evd.S();
    let vals: Vec<C64> = (0..n).map(|i| s[i]).collect();
    let u = evd.U();
    let mut vecs = Mat::<C64>::from_fn(n, n, |i, j| u[(i, j)]);
    for j in 0..n {
        let nrm = (0..n).map(|i| vecs[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            for i in 0..n {
                vecs[(i, j)] /= nrm;
            }
        }
    }
    Ok((vals, vecs))
}

pub fn determinant(m: &Mat<C64>) -> C64 {
    if m.nrows() == 0 {
        return C64::new(1.0, 0.0);
    }
    m.determinant()
}

/// Dense inverse via LU with partial pivoting.
pub fn inverse(m: &Mat<C64>) -> Mat<C64> {
    m.partial_piv_lu().inverse()
}

/// LU factorization of a tridiagonal matrix with partial pivoting
/// (row interchanges create a second superdiagonal).
#[derive(Clone, Debug)]
pub struct TriLu {
    dl: Vec<C64>,
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    swapped: Vec<bool>,
}

impl TriLu {
    /// `lower[i]` = A(i+1,i), `diag[i]` = A(i,i), `upper[i]` = A(i,i+1).
    pub fn factor(lower: &[C64], diag: &[C64], upper: &[C64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::InvalidArgument("tridiagonal shape mismatch".into()));
        }
        let mut dl = lower.to_vec();
        let mut d = diag.to_vec();
        let mut du = upper.to_vec();
        let mut du2 = vec![C64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i] != C64::new(0.0, 0.0) {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d.iter().any(|x| *x == C64::new(0.0, 0.0) || !x.is_finite()) {
            return Err(Error::Singular { condition: f64::INFINITY });
        }
        Ok(TriLu { dl, d, du, du2, swapped })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [C64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] = b[i + 1] - self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    /// Column ℓ of the inverse.
    pub fn inverse_column(&self, l: usize) -> Vec<C64> {
        let mut b = vec![C64::new(0.0, 0.0); self.dim()];
        b[l] = C64::new(1.0, 0.0);
        self.solve(&mut b);
        b
    }

    /// Hager's estimate of ‖A⁻¹‖₁ for a complex-symmetric A (Aᵗ = A), so
    /// that A^H solves reduce to conjugated A solves.
    pub fn inverse_norm1_estimate_symmetric(&self) -> f64 {
        let n = self.dim();
        let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve(&mut y);
            let new_est: f64 = y.iter().map(|v| v.norm()).sum();
            let xi: Vec<C64> = y
                .iter()
                .map(|v| {
                    let r = v.norm();
                    if r > 0.0 {
                        (v / r).conj()
                    } else {
                        C64::new(1.0, 0.0)
                    }
                })
                .collect();
            let mut w = xi;
            self.solve(&mut w);
            let w: Vec<C64> = w.iter().map(|v| v.conj()).collect();
            let (jmax, wmax) = w
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.norm()))
                .fold((0, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            let wx: f64 = w.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if new_est <= est || wmax <= wx {
                est = est.max(new_est);
                break;
            }
            est = new_est;
            x = vec![C64::new(0.0, 0.0); n];
            x[jmax] = C64::new(1.0, 0.0);
        }
        est
    }
}

/// 1-norm of a tridiagonal matrix.
pub fn tridiag_norm1(lower: &[C64], diag: &[C64], upper: &[C64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|j| {
            let mut s = diag[j].norm();
            if j > 0 {
                s += upper[j - 1].norm();
            }
            if j + 1 < n {
                s += lower[j].norm();
            }
            s
        })
        .fold(0.0, f64::max)
}
