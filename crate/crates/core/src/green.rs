//! Green's functions G(z; k, ℓ) = ⟨δ_k, (z𝓛* − 𝓜)⁻¹ δ_ℓ⟩ of finite windows.

use crate::cmv::{build_restriction, pencil_at, BoundaryCondition, CMVRestriction, Pencil};
use crate::coeffs::VerblunskySource;
use crate::error::{invalid, Error, Result};
use crate::linalg::{tridiag_norm1, TriLu};
use crate::num::C64;
use crate::transfer::{phi_fixed_fixed, phi_fixed_free, phi_free_fixed};
use serde::{Deserialize, Serialize};

/// Condition estimates above this mark a result as untrusted.
pub const UNTRUSTED_CONDITION: f64 = 1e12;
/// Condition estimates above this are treated as singular.
pub const SINGULAR_CONDITION: f64 = 1.0 / f64::EPSILON;

#[derive(Clone, Copy, Debug)]
pub struct GreenQuery<'a> {
    pub restriction: &'a CMVRestriction,
    pub z: C64,
    pub k: i64,
    pub l: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    pub value: C64,
    /// Estimate of the 1-norm condition number of the pencil.
    pub condition: f64,
    pub trusted: bool,
}

/// Factored pencil of a window, reusable for several columns.
pub struct GreenSolver {
    pub pencil: Pencil,
    lu: TriLu,
    pub condition: f64,
}

impl GreenSolver {
    pub fn new(r: &CMVRestriction, z: C64) -> Result<Self> {
        let pencil = pencil_at(r, z);
        let lu = if pencil.diag.len() == 1 {
            if pencil.diag[0] == C64::new(0.0, 0.0) {
                return Err(Error::Singular { condition: f64::INFINITY });
            }
            TriLu::factor(&[], &pencil.diag, &[])?
        } else {
            TriLu::factor(&pencil.lower, &pencil.diag, &pencil.upper)?
        };
        let condition = tridiag_norm1(&pencil.lower, &pencil.diag, &pencil.upper)
            * lu.inverse_norm1_estimate_symmetric();
        if !condition.is_finite() || condition > SINGULAR_CONDITION {
            return Err(Error::Singular { condition });
        }
        Ok(GreenSolver { pencil, lu, condition })
    }

    /// G(·, ℓ) over the window, indexed from a.
    pub fn column(&self, l: i64) -> Vec<C64> {
        self.lu.inverse_column((l - self.pencil.a) as usize)
    }

    pub fn trusted(&self) -> bool {
        self.condition <= UNTRUSTED_CONDITION
    }
}

fn check_index(r: &CMVRestriction, i: i64) -> Result<()> {
    if i < r.a || i > r.b {
        return invalid(format!("index {i} outside window [{}, {}]", r.a, r.b));
    }
    Ok(())
}

/// ⟨δ_k, A⁻¹ δ_ℓ⟩ by a pivoted tridiagonal solve.
pub fn green_direct(q: &GreenQuery) -> Result<GreenValue> {
    check_index(q.restriction, q.k)?;
    check_index(q.restriction, q.l)?;
    let s = GreenSolver::new(q.restriction, q.z)?;
    let col = s.column(q.l);
    Ok(GreenValue {
        value: col[(q.k - q.restriction.a) as usize],
        condition: s.condition,
        trusted: s.trusted(),
    })
}

/// |G(k, ℓ)| = |φ^{[a,k−1]}_{β,•} φ^{[ℓ+1,b]}_{•,γ} / φ^{[a,b]}_{β,γ}| for
/// k ≤ ℓ (the pencil is symmetric, so the order of k, ℓ is irrelevant).
///
/// φ is normalized by the ρ's of the non-slot coefficients of each window,
/// which makes the ratio free of extra ρ factors. Requires fixed boundaries
/// and |z| = 1.
pub fn green_abs_poly(q: &GreenQuery) -> Result<f64> {
    let r = q.restriction;
    check_index(r, q.k)?;
    check_index(r, q.l)?;
    let (Some(beta), Some(gamma)) = (r.left.value(), r.right.value()) else {
        return invalid("polynomial Green's function needs fixed boundaries");
    };
    if (q.z.norm() - 1.0).abs() > 1e-12 {
        return invalid("polynomial Green's function is exact only for |z| = 1");
    }
    let (k, l) = if q.k <= q.l { (q.k, q.l) } else { (q.l, q.k) };
    let left = phi_fixed_free(&r.src, r.a, k - 1, beta, q.z)?;
    let right = phi_free_fixed(&r.src, l + 1, r.b, gamma, q.z)?;
    let whole = phi_fixed_fixed(&r.src, r.a, r.b, beta, gamma, q.z)?;
    if whole.mantissa == C64::new(0.0, 0.0) {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    Ok((left.log_abs() + right.log_abs() - whole.log_abs()).exp())
}

/// Values of ψ at a, a+1, b−1, b.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryValues {
    pub psi_a: C64,
    pub psi_a1: C64,
    pub psi_bm1: C64,
    pub psi_b: C64,
}

/// ψ(n) for a < n < b from ψ near the edges, where ψ solves (z𝓛* − 𝓜)ψ = 0
/// on the line: ψ(n) = G(n,a) r_a + G(n,b) r_b with
/// r_a = A_w(a,a)ψ(a) + A(a,a+1)ψ(a+1) and r_b = A_w(b,b)ψ(b) + A(b,b−1)ψ(b−1).
pub fn reconstruct_interior(r: &CMVRestriction, z: C64, bv: &BoundaryValues) -> Result<Vec<C64>> {
    if r.b < r.a + 1 {
        return invalid("reconstruction needs a window of length at least 2");
    }
    let s = GreenSolver::new(r, z)?;
    let p = &s.pencil;
    let n = r.len();
    let ra = p.diag[0] * bv.psi_a + p.upper[0] * bv.psi_a1;
    let rb = p.diag[n - 1] * bv.psi_b + p.lower[n - 2] * bv.psi_bm1;
    let ga = s.column(r.a);
    let gb = s.column(r.b);
    Ok((1..n - 1).map(|i| ga[i] * ra + gb[i] * rb).collect())
}

/// A solution of the full-line equation (z𝓛* − 𝓜)ψ = 0 on [a, b] from
/// initial values ψ(a−1), ψ(a), using the whole-line pencil entries.
pub fn line_solution(src: &VerblunskySource, z: C64, a: i64, b: i64, init: [C64; 2]) -> Result<Vec<C64>> {
    if b < a + 1 {
        return invalid("need b > a");
    }
    let full = build_restriction(src, a - 1, b + 1, BoundaryCondition::Free, BoundaryCondition::Free)?;
    let p = pencil_at(&full, z);
    let mut psi = vec![init[0], init[1]];
    for m in a..b {
        let j = m - (a - 1);
        let nm1 = psi[psi.len() - 2];
        let n0 = psi[psi.len() - 1];
        let (lo, di, up) = (p.lower[(j - 1) as usize], p.diag[j as usize], p.upper[j as usize]);
        psi.push(-(lo * nm1 + di * n0) / up);
    }
    Ok(psi[1..].to_vec())
}

/// One row of a decay scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub k: i64,
    pub beta: C64,
    pub gamma: C64,
    pub max_abs_g: f64,
    pub pass: bool,
    /// Whether |G(ℓ, k±M)| ≤ e^{−m|ℓ−(k±M)|} held with m = rate.
    pub exp_pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub records: Vec<DecayRecord>,
    /// Centres whose whole ±C·M neighbourhood passes.
    pub k_minus: Option<i64>,
    pub k_plus: Option<i64>,
}

impl DecayReport {
    pub fn passing(&self) -> impl Iterator<Item = &DecayRecord> {
        self.records.iter().filter(|r| r.pass)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DecayOptions {
    pub beta0: C64,
    pub gamma0: C64,
    /// Lock slot phases to the displaced coefficients α_{k−M−1}, α_{k+M}.
    pub phase_locked: bool,
    /// Decay rate m for the exponential check, e.g. half the Lyapunov exponent.
    pub rate: Option<f64>,
}

impl Default for DecayOptions {
    fn default() -> Self {
        let one = C64::new(1.0, 0.0);
        DecayOptions { beta0: one, gamma0: one, phase_locked: true, rate: None }
    }
}

fn unit_phase(a: C64) -> C64 {
    if a.norm() > 0.0 {
        a / a.norm()
    } else {
        C64::new(1.0, 0.0)
    }
}

fn scan_one(src: &VerblunskySource, z: C64, k: i64, m: i64, opts: &DecayOptions) -> Result<DecayRecord> {
    let (a, b) = (k - m, k + m);
    let lphase = if opts.phase_locked { unit_phase(src.alpha_at(a - 1)?) } else { C64::new(1.0, 0.0) };
    let rphase = if opts.phase_locked { unit_phase(src.alpha_at(b)?) } else { C64::new(1.0, 0.0) };
    let mut best: Option<DecayRecord> = None;
    for sb in [1.0, -1.0] {
        for sg in [1.0, -1.0] {
            let left = BoundaryCondition::left_with_slot(unit_phase(opts.beta0 * lphase * sb))?;
            let right = BoundaryCondition::fixed(unit_phase(opts.gamma0 * rphase * sg))?;
            let r = build_restriction(src, a, b, left, right)?;
            let solver = match GreenSolver::new(&r, z) {
                Ok(s) => s,
                Err(Error::Singular { .. }) => continue,
                Err(e) => return Err(e),
            };
            let ca = solver.column(a);
            let cb = solver.column(b);
            let mut worst: f64 = 0.0;
            let mut exp_ok = true;
            for l in (k - m / 2)..=(k + m / 2) {
                let i = (l - a) as usize;
                worst = worst.max(ca[i].norm()).max(cb[i].norm());
                if let Some(rate) = opts.rate {
                    exp_ok &= ca[i].norm() <= (-rate * (l - a) as f64).exp();
                    exp_ok &= cb[i].norm() <= (-rate * (b - l) as f64).exp();
                }
            }
            let rec = DecayRecord {
                k,
                beta: left.value().unwrap(),
                gamma: right.value().unwrap(),
                max_abs_g: worst,
                pass: worst <= 1.0 / m as f64,
                exp_pass: opts.rate.map(|_| exp_ok),
            };
            if best.as_ref().map_or(true, |b| rec.max_abs_g < b.max_abs_g) {
                best = Some(rec);
            }
        }
    }
    best.ok_or(Error::Singular { condition: f64::INFINITY })
}

/// Scan k ∈ [L/3, 2L/3] and its mirror for windows [k−M, k+M] on which
/// |G(ℓ, k±M)| ≤ 1/M for |k−ℓ| ≤ M/2 under one of the four boundary sign
/// choices (±β₀, ±γ₀).
pub fn decay_scan(
    src: &VerblunskySource,
    z: C64,
    big_l: i64,
    m: i64,
    c: i64,
    opts: &DecayOptions,
) -> Result<DecayReport> {
    if m < 2 || big_l < 3 || c < 0 {
        return invalid("decay_scan needs M ≥ 2, L ≥ 3, C ≥ 0");
    }
    let lo = (big_l + 2) / 3;
    let hi = 2 * big_l / 3;
    let ranges = [(-hi, -lo), (lo, hi)];
    let mut records = Vec::new();
    let mut centres = [None, None];
    for (side, &(r0, r1)) in ranges.iter().enumerate() {
        let recs: Vec<DecayRecord> =
            (r0..=r1).map(|k| scan_one(src, z, k, m, opts)).collect::<Result<_>>()?;
        let span = c * m;
        for (i, rec) in recs.iter().enumerate() {
            let k = rec.k;
            let lo_i = (k - span).max(r0) - r0;
            let hi_i = (k + span).min(r1) - r0;
            if (lo_i..=hi_i).all(|j| recs[j as usize].pass) && recs[i].pass {
                centres[side] = Some(k);
                break;
            }
        }
        records.extend(recs);
    }
    Ok(DecayReport { records, k_minus: centres[0], k_plus: centres[1] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmv::dense_matrix;
    use crate::linalg::{eigen, eigenvalues, inverse};
    use crate::num::e;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn fixed(t: f64) -> BoundaryCondition {
        BoundaryCondition::fixed(e(t)).unwrap()
    }

    #[test]
    fn one_point_window_is_reciprocal() {
        let src = VerblunskySource::random(1, -1, 3, 0.8).unwrap();
        let r = build_restriction(&src, 0, 0, fixed(0.1), fixed(0.3)).unwrap();
        let z = c(0.2, 0.5);
        let g = green_direct(&GreenQuery { restriction: &r, z, k: 0, l: 0 }).unwrap();
        assert!((g.value - 1.0 / pencil_at(&r, z).diag[0]).norm() < 1e-15);
        assert!(g.trusted);
    }

    #[test]
    fn matches_dense_inverse_and_is_symmetric() {
        let src = VerblunskySource::random(2, -3, 12, 0.9).unwrap();
        let r = build_restriction(&src, -2, 5, fixed(0.7), BoundaryCondition::Free).unwrap();
        let z = c(-0.3, 0.8);
        let inv = inverse(&pencil_at(&r, z).to_dense());
        for k in -2..=5 {
            for l in -2..=5 {
                let g = green_direct(&GreenQuery { restriction: &r, z, k, l }).unwrap();
                assert!((g.value - inv[((k + 2) as usize, (l + 2) as usize)]).norm() < 1e-11);
                let gt = green_direct(&GreenQuery { restriction: &r, z, k: l, l: k }).unwrap();
                assert!((g.value - gt.value).norm() < 1e-11);
            }
        }
        assert!(green_direct(&GreenQuery { restriction: &r, z, k: 9, l: 0 }).is_err());
    }

    #[test]
    fn eigenvalue_is_singular() {
        // α ≡ 0 with fixed boundaries: E is a permutation-like unitary whose
        // eigenvalues make a pivot vanish exactly
        let zero = VerblunskySource::constant(c(0.0, 0.0)).unwrap();
        let r = build_restriction(&zero, 0, 1, fixed(0.0), fixed(0.0)).unwrap();
        let z = c(1.0, 0.0);
        let ev = eigenvalues(&dense_matrix(&r).unwrap()).unwrap();
        assert!(ev.iter().any(|v| (v - z).norm() < 1e-14));
        let res = green_direct(&GreenQuery { restriction: &r, z, k: 0, l: 1 });
        assert!(matches!(res, Err(Error::Singular { .. })));
        // a random window at a numerically computed eigenvalue
        let src = VerblunskySource::random(3, -1, 20, 0.8).unwrap();
        let r = build_restriction(&src, 0, 15, fixed(0.2), fixed(0.4)).unwrap();
        let ev = eigenvalues(&dense_matrix(&r).unwrap()).unwrap();
        match green_direct(&GreenQuery { restriction: &r, z: ev[3], k: 2, l: 9 }) {
            Err(Error::Singular { .. }) => {}
            Ok(g) => assert!(!g.trusted, "condition {}", g.condition),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn polynomial_route_agrees() {
        for seed in 0..20u64 {
            let len = 2 + (seed as usize * 7) % 40;
            let a = seed as i64 - 10;
            let b = a + len as i64 - 1;
            let src = VerblunskySource::random(seed, a - 1, len + 2, 0.9).unwrap();
            let r = build_restriction(&src, a, b, fixed(0.1 * seed as f64), fixed(0.37)).unwrap();
            let z = e(0.05 + 0.091 * seed as f64);
            for (k, l) in [(a, a), (a, b), (b, b), (a + len as i64 / 3, b - len as i64 / 4)] {
                let d = green_direct(&GreenQuery { restriction: &r, z, k, l }).unwrap();
                let p = green_abs_poly(&GreenQuery { restriction: &r, z, k, l }).unwrap();
                assert!((d.value.norm() - p).abs() <= 1e-9 * p, "seed {seed} ({k},{l})");
            }
        }
    }

    #[test]
    fn polynomial_route_zero_coefficients() {
        // α ≡ 0: φ's are monomials up to slot terms; compare with the dense inverse
        let zero = VerblunskySource::constant(c(0.0, 0.0)).unwrap();
        let r = build_restriction(&zero, 0, 5, fixed(0.0), fixed(0.5)).unwrap();
        let z = e(0.13);
        let inv = inverse(&pencil_at(&r, z).to_dense());
        for k in 0..6 {
            for l in k..6 {
                let p = green_abs_poly(&GreenQuery { restriction: &r, z, k, l }).unwrap();
                assert!((inv[(k as usize, l as usize)].norm() - p).abs() < 1e-12);
            }
        }
        let free = build_restriction(&zero, 0, 5, BoundaryCondition::Free, fixed(0.5)).unwrap();
        assert!(green_abs_poly(&GreenQuery { restriction: &free, z, k: 0, l: 1 }).is_err());
        assert!(green_abs_poly(&GreenQuery { restriction: &r, z: c(0.5, 0.0), k: 0, l: 1 }).is_err());
    }

    #[test]
    fn reconstruction_of_line_solutions() {
        let src = VerblunskySource::random(4, -20, 80, 0.9).unwrap();
        let z = e(0.31);
        let (a, b) = (0i64, 30i64);
        let psi = line_solution(&src, z, a - 3, b + 3, [c(1.0, 0.0), c(0.3, -0.2)]).unwrap();
        let at = |n: i64| psi[(n - (a - 3)) as usize];
        for (left, right) in [
            (fixed(0.2), fixed(0.6)),
            (BoundaryCondition::Free, fixed(0.1)),
            (BoundaryCondition::Free, BoundaryCondition::Free),
        ] {
            let r = build_restriction(&src, a, b, left, right).unwrap();
            let bv = BoundaryValues { psi_a: at(a), psi_a1: at(a + 1), psi_bm1: at(b - 1), psi_b: at(b) };
            let rec = reconstruct_interior(&r, z, &bv).unwrap();
            let scale = psi.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (i, v) in rec.iter().enumerate() {
                assert!((v - at(a + 1 + i as i64)).norm() <= 1e-10 * scale);
            }
        }
        let r = build_restriction(&src, a, b, fixed(0.2), fixed(0.6)).unwrap();
        let zero = C64::new(0.0, 0.0);
        let bv = BoundaryValues { psi_a: zero, psi_a1: zero, psi_bm1: zero, psi_b: zero };
        assert!(reconstruct_interior(&r, z, &bv).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn reconstruction_of_eigenvector() {
        let src = VerblunskySource::random(5, -1, 60, 0.9).unwrap();
        let big = build_restriction(&src, 0, 49, fixed(0.3), fixed(0.8)).unwrap();
        let (vals, vecs) = eigen(&dense_matrix(&big).unwrap()).unwrap();
        let (z, col) = (vals[7], 7);
        let (a, b) = (10i64, 35i64);
        let r = build_restriction(&src, a, b, BoundaryCondition::Free, BoundaryCondition::Free).unwrap();
        let psi = |n: i64| vecs[(n as usize, col)];
        let bv = BoundaryValues { psi_a: psi(a), psi_a1: psi(a + 1), psi_bm1: psi(b - 1), psi_b: psi(b) };
        match reconstruct_interior(&r, z, &bv) {
            Ok(rec) => {
                for (i, v) in rec.iter().enumerate() {
                    assert!((v - psi(a + 1 + i as i64)).norm() <= 1e-8);
                }
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn decay_scan_finds_windows_at_strong_coupling() {
        let src = VerblunskySource::monomial(2, std::f64::consts::SQRT_2 - 1.0, c(0.9, 0.0)).unwrap();
        let opts = DecayOptions { rate: Some(0.4), ..Default::default() };
        let rep = decay_scan(&src, e(0.123), 300, 20, 1, &opts).unwrap();
        assert_eq!(rep.records.len(), 2 * (200 - 100 + 1));
        assert!(rep.passing().count() > rep.records.len() / 2);
        assert!(rep.k_minus.is_some() && rep.k_plus.is_some());
        assert!(decay_scan(&src, e(0.1), 300, 1, 1, &opts).is_err());
    }

    #[test]
    fn weak_coupling_decays_slowly() {
        let src = VerblunskySource::monomial(2, std::f64::consts::SQRT_2 - 1.0, c(0.02, 0.0)).unwrap();
        let rep = decay_scan(&src, e(0.123), 60, 6, 1, &DecayOptions::default()).unwrap();
        assert!(rep.passing().count() < rep.records.len() / 2);
    }
}
