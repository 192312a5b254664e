//! Finite restrictions of the extended CMV operator 𝓔 = 𝓛𝓜, their factor
//! pair and the tridiagonal pencil z𝓛* − 𝓜.
//!
//! Θ_n = [[ᾱ_n, ρ_n], [ρ_n, −α_n]] acts on coordinates {n, n+1}; 𝓛 collects
//! the even n and 𝓜 the odd n. A window [a, b] keeps the coefficients
//! α_{a−1}, …, α_b; the two outer ones are the boundary slots.
//!
//! Worked 4×4 example, window [0, 3], left fixed(β), right fixed(γ):
//! slots α̃_{−1} = −β̄ and α̃_3 = γ, so
//!
//! ```text
//!   L = Θ_0 ⊕ Θ_2                       on {0,1}, {2,3}
//!   M = [−α̃_{−1}] ⊕ Θ_1 ⊕ [conj α̃_3]   on {0}, {1,2}, {3}
//!     = [β̄] ⊕ Θ_1 ⊕ [γ̄]
//! ```
//!
//! With β = 1 the left corner of M is 1 and E^{[0,n−1]}_{1,•} is the usual
//! CMV truncation.

use crate::coeffs::VerblunskySource;
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::num::{e, rho, C64};
use faer::Mat;

pub const DEFAULT_DENSE_CAP: usize = 8192;
const UNIMODULAR_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryCondition {
    Free,
    Fixed(C64),
}

impl BoundaryCondition {
    pub fn fixed(beta: C64) -> Result<Self> {
        if (beta.norm() - 1.0).abs() > UNIMODULAR_TOL {
            return invalid(format!("boundary value {beta} is not unimodular"));
        }
        Ok(BoundaryCondition::Fixed(beta))
    }

    /// Left boundary whose slot α̃_{a−1} equals `slot` (β = −conj(slot)).
    pub fn left_with_slot(slot: C64) -> Result<Self> {
        Self::fixed(-slot.conj())
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, BoundaryCondition::Fixed(_))
    }

    pub fn value(&self) -> Option<C64> {
        match self {
            BoundaryCondition::Fixed(v) => Some(*v),
            BoundaryCondition::Free => None,
        }
    }
}

/// 2×2 block Θ(α).
pub fn theta_block(alpha: C64) -> Result<[[C64; 2]; 2]> {
    if alpha.norm() > 1.0 + UNIMODULAR_TOL {
        return invalid(format!("|alpha| = {} exceeds 1", alpha.norm()));
    }
    let r = C64::new(rho(alpha), 0.0);
    Ok([[alpha.conj(), r], [r, -alpha]])
}

/// Block-diagonal factor stored by its three diagonals (window-local).
#[derive(Clone, Debug, PartialEq)]
pub struct BlockFactor {
    pub diag: Vec<C64>,
    /// (i, i+1) entries.
    pub upper: Vec<C64>,
    /// (i+1, i) entries.
    pub lower: Vec<C64>,
}

impl BlockFactor {
    fn zeros(n: usize) -> Self {
        let z = C64::new(0.0, 0.0);
        BlockFactor { diag: vec![z; n], upper: vec![z; n - 1], lower: vec![z; n - 1] }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.upper[i]
        } else if i == j + 1 {
            self.lower[j]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        linalg::dense_from_fn(self.diag.len(), |i, j| self.get(i, j))
    }
}

/// E^{[a,b]}_{β,γ} with its effective coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct CMVRestriction {
    pub a: i64,
    pub b: i64,
    pub src: VerblunskySource,
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    /// α̃_{a−1}, …, α̃_b.
    pub effective_alphas: Vec<C64>,
}

pub fn build_restriction(
    src: &VerblunskySource,
    a: i64,
    b: i64,
    left: BoundaryCondition,
    right: BoundaryCondition,
) -> Result<CMVRestriction> {
    if a > b {
        return invalid(format!("empty window [{a}, {b}]"));
    }
    let mut eff = Vec::with_capacity((b - a + 2) as usize);
    eff.push(match left {
        BoundaryCondition::Fixed(beta) => -beta.conj(),
        BoundaryCondition::Free => src.alpha_at(a - 1)?,
    });
    for n in a..b {
        eff.push(src.alpha_at(n)?);
    }
    eff.push(match right {
        BoundaryCondition::Fixed(gamma) => gamma,
        BoundaryCondition::Free => src.alpha_at(b)?,
    });
    Ok(CMVRestriction { a, b, src: src.clone(), left, right, effective_alphas: eff })
}

impl CMVRestriction {
    pub fn len(&self) -> usize {
        (self.b - self.a + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// α̃_n for n ∈ [a−1, b].
    pub fn alpha(&self, n: i64) -> C64 {
        self.effective_alphas[(n - self.a + 1) as usize]
    }

    pub fn both_fixed(&self) -> bool {
        self.left.is_fixed() && self.right.is_fixed()
    }

    fn factor(&self, parity: i64) -> BlockFactor {
        let n = self.len();
        let mut f = BlockFactor::zeros(n);
        for m in (self.a - 1)..=self.b {
            if m.rem_euclid(2) != parity {
                continue;
            }
            let al = self.alpha(m);
            let th = [[al.conj(), C64::new(rho(al), 0.0)], [C64::new(rho(al), 0.0), -al]];
            let lo = m - self.a;
            for (di, row) in th.iter().enumerate() {
                for (dj, &v) in row.iter().enumerate() {
                    let (i, j) = (lo + di as i64, lo + dj as i64);
                    if i < 0 || j < 0 || i >= n as i64 || j >= n as i64 {
                        continue;
                    }
                    let (i, j) = (i as usize, j as usize);
                    if i == j {
                        f.diag[i] = v;
                    } else if j == i + 1 {
                        f.upper[i] = v;
                    } else {
                        f.lower[j] = v;
                    }
                }
            }
        }
        f
    }

    /// Window factor 𝓛 (blocks Θ_n with n even).
    pub fn factor_l(&self) -> BlockFactor {
        self.factor(0)
    }

    /// Window factor 𝓜 (blocks Θ_n with n odd).
    pub fn factor_m(&self) -> BlockFactor {
        self.factor(1)
    }
}

/// Dense E^{[a,b]} = L_w M_w, capped at `DEFAULT_DENSE_CAP`.
pub fn dense_matrix(r: &CMVRestriction) -> Result<Mat<C64>> {
    dense_matrix_capped(r, DEFAULT_DENSE_CAP)
}

pub fn dense_matrix_capped(r: &CMVRestriction, cap: usize) -> Result<Mat<C64>> {
    let n = r.len();
    if n > cap {
        return Err(Error::ResourceLimit { what: "dense CMV matrix", size: n, cap });
    }
    let l = r.factor_l();
    let m = r.factor_m();
    let mut out = Mat::<C64>::zeros(n, n);
    for i in 0..n {
        for k in i.saturating_sub(1)..(i + 2).min(n) {
            let lik = l.get(i, k);
            if lik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in k.saturating_sub(1)..(k + 2).min(n) {
                out[(i, j)] += lik * m.get(k, j);
            }
        }
    }
    Ok(out)
}

/// Tridiagonal pencil A = z𝓛* − 𝓜 of a window.
#[derive(Clone, Debug, PartialEq)]
pub struct Pencil {
    pub a: i64,
    pub z: C64,
    pub diag: Vec<C64>,
    /// A_{j,j+1}.
    pub upper: Vec<C64>,
    /// A_{j+1,j}.
    pub lower: Vec<C64>,
}

impl Pencil {
    pub fn to_dense(&self) -> Mat<C64> {
        let n = self.diag.len();
        linalg::dense_from_fn(n, |i, j| {
            if i == j {
                self.diag[i]
            } else if j == i + 1 {
                self.upper[i]
            } else if i == j + 1 {
                self.lower[j]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Entry at absolute indices (j, k); zero outside the band.
    pub fn entry(&self, j: i64, k: i64) -> C64 {
        let (i, l) = ((j - self.a) as usize, (k - self.a) as usize);
        if i == l {
            self.diag[i]
        } else if l == i + 1 {
            self.upper[i]
        } else if i == l + 1 {
            self.lower[l]
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

pub fn pencil_at(r: &CMVRestriction, z: C64) -> Pencil {
    let l = r.factor_l();
    let m = r.factor_m();
    let n = r.len();
    let diag = (0..n).map(|j| z * l.diag[j].conj() - m.diag[j]).collect();
    let upper = (0..n - 1).map(|j| z * l.lower[j].conj() - m.upper[j]).collect();
    let lower = (0..n - 1).map(|j| z * l.upper[j].conj() - m.lower[j]).collect();
    Pencil { a: r.a, z, diag, upper, lower }
}

/// Gauge sequence u_{a−1}, …, u_b.
fn gauge_full(x: f64, y: f64, a: i64, b: i64, u_a: C64) -> Vec<C64> {
    let phase = |n: i64| e((n - 1) as f64 * x + y);
    let step = |n: i64| if n.rem_euclid(2) == 0 { phase(n).conj() } else { phase(n) };
    let mut u = Vec::with_capacity((b - a + 2) as usize);
    u.push(u_a / step(a));
    u.push(u_a);
    for n in (a + 1)..=b {
        let prev = *u.last().unwrap();
        u.push(prev * step(n));
    }
    u
}

/// (u_a, …, u_b) with u_n = u_{n−1} e(∓((n−1)x + y)) for n even / odd.
pub fn gauge_sequence(x: f64, y: f64, a: i64, b: i64, u_a: C64) -> Result<Vec<C64>> {
    if (u_a.norm() - 1.0).abs() > UNIMODULAR_TOL {
        return invalid("u_a must be unimodular");
    }
    if a > b {
        return invalid("empty window");
    }
    Ok(gauge_full(x, y, a, b, u_a)[1..].to_vec())
}

/// Restriction of the rotated family α̃_n = e(nx + y) α_n with every
/// effective slot, boundary slots included, rotated the same way.
pub fn rotate_restriction(r: &CMVRestriction, x: f64, y: f64) -> Result<CMVRestriction> {
    let src = r.src.clone().rotated(x).aleksandrov(y);
    let rot = |n: i64| e(n as f64 * x + y);
    let left = match r.left {
        BoundaryCondition::Fixed(beta) => BoundaryCondition::Fixed(rot(r.a - 1).conj() * beta),
        BoundaryCondition::Free => BoundaryCondition::Free,
    };
    let right = match r.right {
        BoundaryCondition::Fixed(g) => BoundaryCondition::Fixed(rot(r.b) * g),
        BoundaryCondition::Free => BoundaryCondition::Free,
    };
    build_restriction(&src, r.a, r.b, left, right)
}

/// Max-norm residual of (z̃L̃* − M̃)U − V(zL* − M) with z̃ = e(−x)z.
pub fn verify_gauge(r: &CMVRestriction, x: f64, y: f64, z: C64) -> Result<f64> {
    let rr = rotate_restriction(r, x, y)?;
    let a0 = pencil_at(r, z);
    let a1 = pencil_at(&rr, e(-x) * z);
    let u = gauge_full(x, y, r.a, r.b, C64::new(1.0, 0.0));
    let n = r.len();
    let uu = |j: usize| u[j + 1];
    let vv = |j: usize| {
        let abs = r.a + j as i64;
        if abs.rem_euclid(2) == 0 {
            u[j]
        } else {
            u[j] * e(-x)
        }
    };
    let mut res: f64 = 0.0;
    for j in 0..n {
        res = res.max((a1.diag[j] * uu(j) - vv(j) * a0.diag[j]).norm());
        if j + 1 < n {
            res = res.max((a1.upper[j] * uu(j + 1) - vv(j) * a0.upper[j]).norm());
            res = res.max((a1.lower[j] * uu(j) - vv(j + 1) * a0.lower[j]).norm());
        }
    }
    Ok(res)
}

/// CSV dump, one row per matrix row, re/im interleaved.
pub fn matrix_to_csv(m: &Mat<C64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .flat_map(|j| [format!("{:?}", m[(i, j)].re), format!("{:?}", m[(i, j)].im)])
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Column-major little-endian dump: u64 rows, u64 cols, then (re, im) f64 pairs.
pub fn matrix_to_binary(m: &Mat<C64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 16 * m.nrows() * m.ncols());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            out.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
    }
    out
}

pub fn matrix_from_binary(bytes: &[u8]) -> Result<Mat<C64>> {
    let rd = |i: usize| -> Result<[u8; 8]> {
        bytes
            .get(i..i + 8)
            .and_then(|s| s.try_into().ok())
            .ok_or_else(|| Error::InvalidArgument("truncated matrix dump".into()))
    };
    let rows = u64::from_le_bytes(rd(0)?) as usize;
    let cols = u64::from_le_bytes(rd(8)?) as usize;
    if bytes.len() != 16 + 16 * rows * cols {
        return invalid("matrix dump has the wrong length");
    }
    let mut m = Mat::<C64>::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            let off = 16 + 16 * (j * rows + i);
            m[(i, j)] = C64::new(f64::from_le_bytes(rd(off)?), f64::from_le_bytes(rd(off + 8)?));
        }
    }
    Ok(m)
}

/// max |(M*M − I)_{ij}|.
pub fn unitarity_defect(m: &Mat<C64>) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..n {
                s += m[(k, i)].conj() * m[(k, j)];
            }
            if i == j {
                s -= 1.0;
            }
            d = d.max(s.norm());
        }
    }
    d
}
