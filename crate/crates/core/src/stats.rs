//! Eigenvalue angles, gap statistics, Laplace functionals, comparison with
//! rotation sequences, Wegner averages and quasimodes.

use crate::cmv::{build_restriction, dense_matrix, dense_matrix_capped, BoundaryCondition, CMVRestriction};
use crate::coeffs::{SkewShiftParams, TorusPoint, VerblunskySource};
use crate::error::{invalid, Error, Result};
use crate::green::{decay_scan, DecayOptions};
use crate::linalg::{eigen, eigenvalues};
use crate::szego::paraorthogonal_zero_angles;
use crate::num::{dist_z, e, frac, frac_mul, wrap_half, KahanSum, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

const DEDUP_TOL: f64 = 1e-12;
pub const UNIMODULARITY_TOL: f64 = 1e-8;
const ROOT_TOL: f64 = 1e-12;

/// Sorted, deduplicated points of [0, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSet {
    angles: Vec<f64>,
}

impl AngleSet {
    pub fn new(mut angles: Vec<f64>) -> Result<Self> {
        if angles.iter().any(|t| !t.is_finite()) {
            return invalid("angles must be finite");
        }
        for t in angles.iter_mut() {
            *t = frac(*t);
        }
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|b, a| *b - *a <= DEDUP_TOL);
        if angles.len() > 1 && angles[0] + 1.0 - angles[angles.len() - 1] <= DEDUP_TOL {
            angles.pop();
        }
        Ok(AngleSet { angles })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Every angle moved by `t` (mod 1).
    pub fn shifted(&self, t: f64) -> AngleSet {
        AngleSet::new(self.angles.iter().map(|a| a + t).collect()).expect("finite angles")
    }

    pub fn max_gap(&self) -> f64 {
        match gap_vector(self) {
            Ok(g) => g.gaps.iter().cloned().fold(0.0, f64::max),
            Err(_) => 1.0,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,angle\n");
        for (i, a) in self.angles.iter().enumerate() {
            s.push_str(&format!("{i},{a:?}\n"));
        }
        s
    }
}

/// Eigenvalue arguments of a fixed/fixed restriction, from the zeros of its
/// para-orthogonal polynomial, with the largest root-solve step in turns.
pub fn spectrum_angles(r: &CMVRestriction) -> Result<(AngleSet, f64)> {
    let (angles, residual) = paraorthogonal_zero_angles(r)?;
    if !(residual <= ROOT_TOL) {
        return Err(Error::Numeric(format!("eigenvalue angles unresolved to {residual:e}")));
    }
    Ok((AngleSet::new(angles)?, residual))
}

/// Eigenvalue arguments from the dense eigensolver, with max | |λ| − 1 |.
pub fn spectrum_angles_dense(r: &CMVRestriction) -> Result<(AngleSet, f64)> {
    if !r.both_fixed() {
        return invalid("spectrum_angles needs fixed boundary conditions on both sides");
    }
    let ev = eigenvalues(&dense_matrix(r)?)?;
    let residual = ev.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max);
    if !(residual <= UNIMODULARITY_TOL) {
        return Err(Error::Numeric(format!("eigenvalues off the unit circle by {residual:e}")));
    }
    let angles = AngleSet::new(ev.iter().map(|v| v.arg() / TAU).collect())?;
    Ok((angles, residual))
}

/// Gaps g_j = θ_{j+1} − θ_j with the wrap gap θ_1 + 1 − θ_N last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapVector {
    pub gaps: Vec<f64>,
    /// N·g_j.
    pub normalized: Vec<f64>,
}

pub fn gap_vector(a: &AngleSet) -> Result<GapVector> {
    let t = a.angles();
    let n = t.len();
    if n < 2 {
        return invalid("gap statistics need at least two angles");
    }
    let mut gaps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(t[0] + 1.0 - t[n - 1]);
    let normalized = gaps.iter().map(|g| g * n as f64).collect();
    Ok(GapVector { gaps, normalized })
}

impl GapVector {
    /// (bin start, count) of the normalized gaps for bins of the given width,
    /// from 0 up to the largest gap.
    pub fn histogram(&self, width: f64) -> Vec<(f64, usize)> {
        let max = self.normalized.iter().cloned().fold(0.0, f64::max);
        let bins = ((max / width).floor() as usize) + 1;
        let mut counts = vec![0usize; bins];
        for g in &self.normalized {
            counts[((g / width).floor() as usize).min(bins - 1)] += 1;
        }
        counts.into_iter().enumerate().map(|(i, c)| (i as f64 * width, c)).collect()
    }

    /// Fraction of gaps in the `top` most populated bins.
    pub fn top_bins_mass(&self, width: f64, top: usize) -> f64 {
        let mut c: Vec<usize> = self.histogram(width).into_iter().map(|(_, c)| c).collect();
        c.sort_unstable_by(|a, b| b.cmp(a));
        c.iter().take(top).sum::<usize>() as f64 / self.normalized.len() as f64
    }

    /// Kolmogorov–Smirnov distance of the normalized gaps to Exp(1).
    pub fn ks_exp1(&self) -> f64 {
        let mut g = self.normalized.clone();
        g.sort_by(f64::total_cmp);
        let n = g.len() as f64;
        g.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = 1.0 - (-x).exp();
                ((i + 1) as f64 / n - f).max(f - i as f64 / n)
            })
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,gap,normalized\n");
        for (i, (g, n)) in self.gaps.iter().zip(&self.normalized).enumerate() {
            s.push_str(&format!("{i},{g:?},{n:?}\n"));
        }
        s
    }
}

/// {nη mod 1} for n = 1..=N.
pub fn rotation_angles(eta: f64, n: usize) -> Result<AngleSet> {
    if n == 0 {
        return invalid("rotation_angles needs N ≥ 1");
    }
    AngleSet::new((1..=n).map(|j| frac_mul(j as i128, eta)).collect())
}

/// Smallest max circular distance between two equal-size angle multisets
/// over the cyclic alignments of their sorted orders.
pub fn multiset_distance(a: &AngleSet, b: &AngleSet) -> Result<f64> {
    let (x, y) = (a.angles(), b.angles());
    if x.len() != y.len() {
        return invalid("angle sets differ in size");
    }
    let n = x.len();
    if n == 0 {
        return Ok(0.0);
    }
    let nearest = (0..n).min_by(|&i, &j| dist_z(y[i] - x[0]).total_cmp(&dist_z(y[j] - x[0]))).unwrap();
    let mut best = f64::INFINITY;
    for d in -2i64..=2 {
        let s = (nearest as i64 + d).rem_euclid(n as i64) as usize;
        let m = (0..n).map(|i| dist_z(x[i] - y[(i + s) % n])).fold(0.0, f64::max);
        best = best.min(m);
    }
    Ok(best)
}

/// Test function with support radius `radius` and quadrature resolution.
#[derive(Clone)]
pub struct LaplaceSpec {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub radius: f64,
    /// θ-grid points per mean gap.
    pub resolution: usize,
    name: String,
}

impl fmt::Debug for LaplaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaplaceSpec({}, radius {}, R {})", self.name, self.radius, self.resolution)
    }
}

impl LaplaceSpec {
    pub fn new(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        radius: f64,
        resolution: usize,
    ) -> Result<Self> {
        if !(radius >= 0.0) || resolution == 0 {
            return invalid("support radius must be ≥ 0 and resolution ≥ 1");
        }
        Ok(LaplaceSpec { f: Arc::new(f), radius, resolution, name: name.to_string() })
    }

    /// Hat function max(0, 1 − |t|), R = 32.
    pub fn hat() -> Self {
        Self::new("hat", |t: f64| (1.0 - t.abs()).max(0.0), 1.0, 32).unwrap()
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution.max(1);
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t.abs() > self.radius {
            0.0
        } else {
            (self.f)(t).max(0.0)
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// ∫_𝕋 exp(−Σ_n f(N·x_n(θ))) dθ with x_n(θ) = x_n − θ wrapped into [−½, ½),
/// by the periodic trapezoid rule on R·N nodes.
pub fn laplace_functional(points: &AngleSet, spec: &LaplaceSpec) -> f64 {
    let n = points.len();
    if n == 0 {
        return 1.0;
    }
    let m = spec.resolution * n;
    let nf = n as f64;
    let mut s = vec![0.0f64; m];
    // node j (θ = j/m) feels point x when |x − θ| ≤ radius/N (and ≤ ½)
    let reach = ((spec.radius / nf).min(0.5) * m as f64).ceil() as i64 + 1;
    for &x in points.angles() {
        let centre = (x * m as f64).round() as i64;
        let lo = (centre - reach).max(centre - m as i64 / 2);
        let hi = (centre + reach).min(lo + m as i64 - 1);
        for j in lo..=hi {
            let theta = j as f64 / m as f64;
            let v = spec.eval(nf * wrap_half(x - theta));
            if v != 0.0 {
                s[j.rem_euclid(m as i64) as usize] += v;
            }
        }
    }
    let mut acc = 0.0;
    let mut comp = 0.0;
    for v in s {
        let y = (-v).exp() - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    acc / m as f64
}

/// |𝔏_A(f) − 𝔏_B(f)|.
pub fn laplace_compare(a: &AngleSet, b: &AngleSet, spec: &LaplaceSpec) -> Result<f64> {
    if a.len() != b.len() {
        return invalid(format!("angle sets have sizes {} and {}", a.len(), b.len()));
    }
    Ok((laplace_functional(a, spec) - laplace_functional(b, spec)).abs())
}

/// Result of matching a spectrum against {ϑ − 2nω}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationMatch {
    pub vartheta: f64,
    pub matched_fraction: f64,
    pub tolerance_used: f64,
    /// For n = 1..=N, the index of the matched angle.
    pub assignment: Vec<Option<usize>>,
}

/// Indices of sorted `angles` within circular distance `tol` of `t`.
fn within(angles: &[f64], t: f64, tol: f64, out: &mut Vec<usize>) {
    let mut range = |lo: f64, hi: f64| {
        let i0 = angles.partition_point(|&a| a < lo);
        let i1 = angles.partition_point(|&a| a <= hi);
        out.extend(i0..i1);
    };
    if tol >= 0.5 {
        range(0.0, 1.0);
        return;
    }
    let (lo, hi) = (t - tol, t + tol);
    range(lo.max(0.0), hi.min(1.0));
    if lo < 0.0 {
        range(lo + 1.0, 1.0);
    }
    if hi >= 1.0 {
        range(0.0, hi - 1.0);
    }
}

fn greedy_match(angles: &[f64], refs: &[f64], vartheta: f64, tol: f64) -> Vec<Option<usize>> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    let mut idx = Vec::new();
    for (j, r) in refs.iter().enumerate() {
        let t = frac(vartheta + r);
        idx.clear();
        within(angles, t, tol, &mut idx);
        idx.sort_unstable();
        idx.dedup();
        cand.extend(idx.iter().map(|&i| (dist_z(angles[i] - t), j, i)).filter(|c| c.0 <= tol));
    }
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used = vec![false; angles.len()];
    let mut out = vec![None; refs.len()];
    for (_, j, i) in cand {
        if out[j].is_none() && !used[i] {
            out[j] = Some(i);
            used[i] = true;
        }
    }
    out
}

fn circular_mean(angles: &[f64], refs: &[f64], assign: &[Option<usize>]) -> Option<f64> {
    let mut acc = KahanSum::default();
    let mut any = false;
    for (j, a) in assign.iter().enumerate() {
        if let Some(i) = a {
            acc.add(e(angles[*i] - refs[j]));
            any = true;
        }
    }
    let v = acc.value();
    (any && v.norm() > 0.0).then(|| frac(v.arg() / TAU))
}

/// Estimate ϑ with θ ≈ ϑ − 2nω (n = 1..N) and the fraction of angles
/// matched within `tol` (default 10/N).
pub fn match_to_rotation(a: &AngleSet, omega: f64, tol: Option<f64>) -> Result<RotationMatch> {
    let n = a.len();
    if n < 2 {
        return invalid("match_to_rotation needs N ≥ 2");
    }
    let tol = tol.unwrap_or(10.0 / n as f64);
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let angles = a.angles();
    let refs: Vec<f64> = (1..=n).map(|j| frac_mul(-2 * j as i128, omega)).collect();
    // seed ϑ from the densest cell of pairwise differences; cells no wider than
    // tol keep near-periods of the rotation from outscoring the true offset
    let bins = ((1.0 / tol).ceil() as usize).clamp(10 * n, 64 * n);
    let mut hist = vec![0u32; bins];
    for &t in angles {
        for &r in &refs {
            hist[((frac(t - r) * bins as f64) as usize).min(bins - 1)] += 1;
        }
    }
    let score = |b: usize| hist[(b + bins - 1) % bins] + hist[b] + hist[(b + 1) % bins];
    let best = (0..bins).max_by(|&x, &y| score(x).cmp(&score(y)).then(y.cmp(&x))).unwrap();
    let mut vartheta = (best as f64 + 0.5) / bins as f64;
    let coarse = tol.max(10.0 / n as f64);
    let mut assign = greedy_match(angles, &refs, vartheta, coarse);
    // a mean would be pulled by unlocked outliers; recentre on the densest tol-window of residuals
    {
        let mut res: Vec<f64> = assign
            .iter()
            .enumerate()
            .filter_map(|(j, a)| a.map(|i| wrap_half(angles[i] - vartheta - refs[j])))
            .collect();
        res.sort_by(f64::total_cmp);
        let mut best = (0usize, 0usize);
        let mut hi = 0;
        for lo in 0..res.len() {
            while hi < res.len() && res[hi] - res[lo] <= 2.0 * tol {
                hi += 1;
            }
            if hi - lo > best.1 - best.0 {
                best = (lo, hi);
            }
        }
        if best.1 > best.0 {
            vartheta = frac(vartheta + res[(best.0 + best.1) / 2]);
        }
        assign = greedy_match(angles, &refs, vartheta, tol);
    }
    for _ in 0..3 {
        match circular_mean(angles, &refs, &assign) {
            Some(v) => vartheta = v,
            None => break,
        }
        assign = greedy_match(angles, &refs, vartheta, tol);
    }
    let matched = assign.iter().filter(|x| x.is_some()).count();
    Ok(RotationMatch {
        vartheta,
        matched_fraction: matched as f64 / n as f64,
        tolerance_used: tol,
        assignment: assign,
    })
}

fn unit_phase(a: C64) -> C64 {
    if a.norm() > 0.0 {
        a / a.norm()
    } else {
        C64::new(1.0, 0.0)
    }
}

/// Boundaries of E^{[0,n−1]} with slots β₀·α_{−1}/|α_{−1}| and γ₀·α_{n−1}/|α_{n−1}|.
pub fn phase_locked_restriction(
    src: &VerblunskySource,
    n: usize,
    beta0: C64,
    gamma0: C64,
) -> Result<CMVRestriction> {
    if n == 0 {
        return invalid("window length must be ≥ 1");
    }
    let b = n as i64 - 1;
    let left = BoundaryCondition::left_with_slot(unit_phase(beta0 * unit_phase(src.alpha_at(-1)?)))?;
    let right = BoundaryCondition::fixed(unit_phase(gamma0 * unit_phase(src.alpha_at(b)?)))?;
    build_restriction(src, 0, b, left, right)
}

fn in_arc(t: f64, arc: (f64, f64)) -> bool {
    let len = arc.1 - arc.0;
    if len >= 1.0 {
        return true;
    }
    frac(t - arc.0) <= len
}

/// (1/n) times the eigenvalue count of E^{[0,n−1]} in the closed arc
/// [θ₁, θ₂], averaged over `grid` shifts x_{k−1} → x_{k−1} + j/grid with
/// phase-locked boundaries.
#[allow(clippy::too_many_arguments)]
pub fn wegner_average(
    params: &SkewShiftParams,
    start: &TorusPoint,
    n: usize,
    arc: (f64, f64),
    grid: usize,
    beta0: C64,
    gamma0: C64,
) -> Result<f64> {
    let len = arc.1 - arc.0;
    if !(0.0..=1.0).contains(&len) {
        return invalid("arc must satisfy 0 ≤ θ2 − θ1 ≤ 1");
    }
    if params.k < 2 {
        return invalid("the Wegner average integrates over x_{k−1} and needs k ≥ 2");
    }
    if grid == 0 || n == 0 {
        return invalid("grid and n must be positive");
    }
    let counts: Vec<usize> = (0..grid)
        .into_par_iter()
        .map(|j| -> Result<usize> {
            let mut c = start.coords().to_vec();
            c[params.k - 2] += j as f64 / grid as f64;
            let src = VerblunskySource::skew_shift(params.clone(), TorusPoint::new(c)?)?;
            let r = phase_locked_restriction(&src, n, beta0, gamma0)?;
            let ev = eigenvalues(&dense_matrix(&r)?)?;
            Ok(ev.iter().filter(|v| in_arc(v.arg() / TAU, arc)).count())
        })
        .collect::<Result<_>>()?;
    let total: usize = counts.iter().sum();
    Ok(total as f64 / (grid * n) as f64)
}

#[derive(Clone, Copy, Debug)]
pub struct QuasimodeOptions {
    /// Half-width M of the decay-scan windows; default max(4, L/20).
    pub m: Option<i64>,
    pub c: i64,
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    pub window_cap: usize,
}

impl Default for QuasimodeOptions {
    fn default() -> Self {
        let one = BoundaryCondition::Fixed(C64::new(1.0, 0.0));
        QuasimodeOptions { m: None, c: 1, left: one, right: one, window_cap: 4001 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quasimode {
    pub z: C64,
    /// |ψ(0)|² of the chosen eigenvector.
    pub mass_at_origin: f64,
    pub k_minus: i64,
    pub k_plus: i64,
    /// ψ on [−L, L], zero outside [k−, k+], unit norm.
    pub psi: Vec<C64>,
    /// ‖(E − z)ψ‖ of the truncated vector.
    pub residual: f64,
    /// ‖(E − z)ψ‖ of the untruncated eigenvector.
    pub eigen_residual: f64,
    /// Whether k± came from decay_scan rather than the minimal-mass fallback.
    pub from_decay_scan: bool,
}

fn apply_minus_z(m: &faer::Mat<C64>, z: C64, v: &[C64]) -> Vec<C64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 3).min(n);
            (lo..hi).map(|j| m[(i, j)] * v[j]).sum::<C64>() - z * v[i]
        })
        .collect()
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvector of E^{[−L,L]} with the largest |ψ(0)|², truncated to
/// [k−, k+] where the Green's function decays, and renormalized.
pub fn quasimode(src: &VerblunskySource, big_l: i64, opts: &QuasimodeOptions) -> Result<Quasimode> {
    if big_l < 8 {
        return invalid("quasimode needs L ≥ 8");
    }
    let r = build_restriction(src, -big_l, big_l, opts.left, opts.right)?;
    let mat = dense_matrix_capped(&r, opts.window_cap)?;
    let (vals, vecs) = eigen(&mat)?;
    let n = r.len();
    let origin = big_l as usize;
    let col = (0..n)
        .max_by(|&i, &j| vecs[(origin, i)].norm_sqr().total_cmp(&vecs[(origin, j)].norm_sqr()))
        .unwrap();
    let z = vals[col];
    let full: Vec<C64> = (0..n).map(|i| vecs[(i, col)]).collect();
    let scale = norm2(&full);
    let full: Vec<C64> = full.iter().map(|v| v / scale).collect();
    let mass = full[origin].norm_sqr();
    assert!(mass >= 1.0 / n as f64 - 1e-12, "some eigenvector carries mass 1/(2L+1) at 0");
    let eigen_residual = norm2(&apply_minus_z(&mat, z, &full));

    let m = opts.m.unwrap_or((big_l / 20).max(4));
    let zu = z / z.norm();
    let scan = decay_scan(src, zu, big_l, m, opts.c, &DecayOptions::default());
    let local_mass = |k: i64| -> f64 {
        ((k - 2).max(-big_l)..=(k + 2).min(big_l)).map(|j| full[(j + big_l) as usize].norm_sqr()).sum()
    };
    let fallback = |lo: i64, hi: i64| -> i64 {
        (lo..=hi).min_by(|&a, &b| local_mass(a).total_cmp(&local_mass(b)).then(a.cmp(&b))).unwrap()
    };
    let (lo, hi) = ((big_l + 2) / 3, 2 * big_l / 3);
    let (k_minus, k_plus, from_scan) = match scan {
        Ok(rep) => match (rep.k_minus, rep.k_plus) {
            (Some(a), Some(b)) => (a, b, true),
            (a, b) => (a.unwrap_or_else(|| fallback(-hi, -lo)), b.unwrap_or_else(|| fallback(lo, hi)), false),
        },
        Err(_) => (fallback(-hi, -lo), fallback(lo, hi), false),
    };
    let mut psi = vec![C64::new(0.0, 0.0); n];
    for k in k_minus..=k_plus {
        let i = (k + big_l) as usize;
        psi[i] = full[i];
    }
    let s = norm2(&psi);
    if s == 0.0 {
        return Err(Error::Numeric("truncated quasimode vanished".into()));
    }
    for v in psi.iter_mut() {
        *v /= s;
    }
    let residual = norm2(&apply_minus_z(&mat, z, &psi));
    Ok(Quasimode {
        z,
        mass_at_origin: mass,
        k_minus,
        k_plus,
        psi,
        residual,
        eigen_residual,
        from_decay_scan: from_scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::szego::paraorthogonal;
    use crate::linalg::poly_roots;
    use std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn one() -> BoundaryCondition {
        BoundaryCondition::fixed(c(1.0, 0.0)).unwrap()
    }

    #[test]
    fn angle_set_sorts_and_dedups() {
        let a = AngleSet::new(vec![0.5, -0.25, 0.5 + 1e-13, 1.0, 0.1]).unwrap();
        assert_eq!(a.angles(), &[0.0, 0.1, 0.5, 0.75]);
        assert!(AngleSet::new(vec![f64::NAN]).is_err());
        let w = AngleSet::new(vec![1e-13, 1.0 - 1e-13]).unwrap();
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn zero_coefficients_give_equal_spacing() {
        let zero = VerblunskySource::constant(c(0.0, 0.0)).unwrap();
        let r = build_restriction(&zero, 0, 7, one(), one()).unwrap();
        let (a, res) = spectrum_angles(&r).unwrap();
        assert!(res < 1e-12);
        assert_eq!(a.len(), 8);
        let g = gap_vector(&a).unwrap();
        assert!(g.gaps.iter().all(|g| (g - 0.125).abs() < 1e-12));
        let free = build_restriction(&zero, 0, 7, BoundaryCondition::Free, one()).unwrap();
        assert!(spectrum_angles(&free).is_err());
    }

    #[test]
    fn angles_match_paraorthogonal_roots() {
        let src = VerblunskySource::random(3, -1, 300, 0.8).unwrap();
        for n in [5usize, 40, 64] {
            let beta = e(0.17);
            let r = build_restriction(&src, 0, n as i64 - 1, one(), BoundaryCondition::fixed(beta).unwrap())
                .unwrap();
            let (a, _) = spectrum_angles(&r).unwrap();
            let q = paraorthogonal(&src, n, beta).unwrap();
            let roots = AngleSet::new(poly_roots(&q).unwrap().iter().map(|z| z.arg() / TAU).collect()).unwrap();
            assert!(multiset_distance(&a, &roots).unwrap() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn root_solver_agrees_with_dense_eigensolver() {
        let rnd = VerblunskySource::random(11, -400, 800, 0.95).unwrap();
        let mono = VerblunskySource::monomial(3, SQRT_2 - 1.0, c(0.6, -0.3)).unwrap();
        for (src, a, n, tb, tg) in [
            (&rnd, 0i64, 1usize, 0.3, 0.8),
            (&rnd, -7, 2, 0.0, 0.5),
            (&rnd, 3, 57, 0.41, 0.13),
            (&rnd, -200, 300, 0.9, 0.27),
            (&mono, 5, 200, 0.0, 0.0),
            (&mono, -120, 301, 0.66, 0.05),
        ] {
            let left = BoundaryCondition::fixed(e(tb)).unwrap();
            let right = BoundaryCondition::fixed(e(tg)).unwrap();
            let r = build_restriction(src, a, a + n as i64 - 1, left, right).unwrap();
            let (fast, res) = spectrum_angles(&r).unwrap();
            let (dense, _) = spectrum_angles_dense(&r).unwrap();
            assert_eq!(fast.len(), dense.len());
            assert!(res < 1e-12);
            assert!(multiset_distance(&fast, &dense).unwrap() < 1e-10, "a={a} n={n}");
        }
    }

    #[test]
    fn rotation_covariance() {
        let src = VerblunskySource::monomial(2, SQRT_2 - 1.0, c(0.5, 0.0)).unwrap();
        let r = build_restriction(&src, 0, 127, one(), BoundaryCondition::fixed(e(0.3)).unwrap()).unwrap();
        let (base, _) = spectrum_angles(&r).unwrap();
        let x = 0.2137;
        let rot = crate::cmv::rotate_restriction(&r, x, 0.61).unwrap();
        let (moved, _) = spectrum_angles(&rot).unwrap();
        assert!(multiset_distance(&moved, &base.shifted(-x)).unwrap() < 1e-10);
    }

    #[test]
    fn gap_vector_basics() {
        let a = AngleSet::new((0..10).map(|i| i as f64 / 10.0).collect()).unwrap();
        let g = gap_vector(&a).unwrap();
        assert!(g.gaps.iter().all(|v| (v - 0.1).abs() < 1e-12));
        assert!(g.normalized.iter().all(|v| (v - 1.0).abs() < 1e-11));
        assert!(gap_vector(&AngleSet::new(vec![0.3]).unwrap()).is_err());
        let h = g.histogram(0.1);
        assert_eq!(h.iter().map(|b| b.1).sum::<usize>(), 10);
    }

    fn distinct(v: &[f64], tol: f64) -> usize {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s.dedup_by(|b, a| (*b - *a).abs() <= tol);
        s.len()
    }

    #[test]
    fn three_gaps_for_rotations() {
        let a = rotation_angles(0.25, 4).unwrap();
        assert_eq!(a.angles(), &[0.0, 0.25, 0.5, 0.75]);
        assert_eq!(rotation_angles(0.3, 1).unwrap().len(), 1);
        assert!(rotation_angles(0.3, 0).is_err());
        for (eta, n) in [(SQRT_2 - 1.0, 1000usize), (0.5 * (5f64.sqrt() - 1.0), 777), (std::f64::consts::PI, 2000)] {
            let g = gap_vector(&rotation_angles(eta, n).unwrap()).unwrap();
            assert!(distinct(&g.gaps, 1e-9) <= 3);
            assert!((g.gaps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn laplace_trivial_and_one_point() {
        let a = AngleSet::new(vec![0.1, 0.4, 0.7]).unwrap();
        let zero = LaplaceSpec::new("zero", |_| 0.0, 0.0, 32).unwrap();
        assert_eq!(laplace_functional(&a, &zero), 1.0);
        let one = AngleSet::new(vec![0.37]).unwrap();
        let exact = 2.0 * ((-0.5f64).exp() - (-1.0f64).exp());
        let v = laplace_functional(&one, &LaplaceSpec::hat().with_resolution(4096));
        assert!((v - exact).abs() < 1e-4);
        assert_eq!(laplace_compare(&a, &a, &LaplaceSpec::hat()).unwrap(), 0.0);
        assert!(laplace_compare(&a, &one, &LaplaceSpec::hat()).is_err());
    }

    #[test]
    fn laplace_perturbation_regimes() {
        let spec = LaplaceSpec::hat();
        let n = 1000;
        let b = rotation_angles(SQRT_2 - 1.0, n).unwrap();
        let shifted =
            AngleSet::new(b.angles().iter().enumerate().map(|(i, t)| t + 0.5 * (i % 3) as f64 / (n * n) as f64).collect())
                .unwrap();
        assert!(laplace_compare(&b, &shifted, &spec).unwrap() <= 0.05);
        let n = 10_000;
        let b = rotation_angles(SQRT_2 - 1.0, n).unwrap();
        let moved = AngleSet::new(
            b.angles().iter().enumerate().map(|(i, t)| if i % 100 == 0 { t + 0.37 } else { *t }).collect(),
        )
        .unwrap();
        assert_eq!(moved.len(), n);
        assert!(laplace_compare(&b, &moved, &spec).unwrap() <= 0.05);
    }

    #[test]
    fn laplace_refinement_stability() {
        let a = rotation_angles(SQRT_2 - 1.0, 2000).unwrap();
        let r32 = laplace_functional(&a, &LaplaceSpec::hat());
        let r64 = laplace_functional(&a, &LaplaceSpec::hat().with_resolution(64));
        assert!((r32 - r64).abs() <= 1e-3);
        assert!(r32 > 0.0 && r32 <= 1.0);
    }

    #[test]
    fn exact_rotation_is_fully_matched() {
        let omega = SQRT_2 - 1.0;
        let vt = 0.3141;
        let n = 500;
        let a = AngleSet::new((1..=n).map(|j| vt - frac_mul(2 * j as i128, omega)).collect()).unwrap();
        let m = match_to_rotation(&a, omega, None).unwrap();
        assert_eq!(m.matched_fraction, 1.0);
        assert!(dist_z(m.vartheta - vt) < 1e-10);
        assert_eq!(m.tolerance_used, 10.0 / n as f64);
        assert!(match_to_rotation(&AngleSet::new(vec![0.1]).unwrap(), omega, None).is_err());
    }

    #[test]
    fn tight_match_ignores_outliers() {
        let omega = SQRT_2 - 1.0;
        let vt = 0.7;
        let n = 1000;
        // every sixth point displaced by a few mean spacings in one direction
        let pts = (1..=n).map(|j| {
            let off = if j % 6 == 0 { 3.0e-3 } else { 1e-9 * (j % 7) as f64 };
            vt - frac_mul(2 * j as i128, omega) + off
        });
        let a = AngleSet::new(pts.collect()).unwrap();
        let tol = (n as f64).powf(-1.5);
        let m = match_to_rotation(&a, omega, Some(tol)).unwrap();
        assert!(dist_z(m.vartheta - vt) < 1e-8, "{}", m.vartheta);
        assert!(m.matched_fraction > 0.83, "{}", m.matched_fraction);
    }

    #[test]
    fn wegner_examples() {
        let (p, x) = SkewShiftParams::monomial(2, SQRT_2 - 1.0, c(0.5, 0.0)).unwrap();
        let one = c(1.0, 0.0);
        assert_eq!(wegner_average(&p, &x, 32, (0.1, 1.1), 16, one, one).unwrap(), 1.0);
        assert_eq!(wegner_average(&p, &x, 32, (0.3, 0.3), 16, one, one).unwrap(), 0.0);
        let v = wegner_average(&p, &x, 64, (0.1, 0.35), 256, one, e(0.2)).unwrap();
        assert!((v - 0.25).abs() <= 0.01, "{v}");
        assert!(wegner_average(&p, &x, 32, (0.5, 0.2), 16, one, one).is_err());
    }

    #[test]
    fn quasimode_at_strong_coupling() {
        let src = VerblunskySource::monomial(2, SQRT_2 - 1.0, c(0.9, 0.0)).unwrap();
        let q = quasimode(&src, 500, &QuasimodeOptions::default()).unwrap();
        assert!(q.mass_at_origin >= 1.0 / 1001.0);
        assert!(q.eigen_residual <= 1e-12);
        assert!(q.residual <= 1e-3, "{}", q.residual);
        assert!(q.k_minus < 0 && q.k_plus > 0);
        assert!((norm2(&q.psi) - 1.0).abs() < 1e-12);
        assert!(quasimode(&src, 4, &QuasimodeOptions::default()).is_err());
    }
}
