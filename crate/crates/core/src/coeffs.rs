//! Verblunsky coefficient sources and the skew-shift on the k-torus.

use crate::error::{invalid, Error, Result};
use crate::num::{self, e, frac, frac_binom_mul, frac_mul, C64};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

pub const MAX_TORUS_DIM: usize = 8;

/// Parameters of the k-dimensional skew-shift and coupling.
///
/// `omega` is the increment of the first coordinate: (Tx)_1 = x_1 + ω.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewShiftParams {
    pub k: usize,
    pub omega: f64,
    pub lambda: C64,
}

impl SkewShiftParams {
    pub fn new(k: usize, omega: f64, lambda: C64) -> Result<Self> {
        if k == 0 || k > MAX_TORUS_DIM {
            return invalid(format!("torus dimension k={k} must lie in 1..={MAX_TORUS_DIM}"));
        }
        if !omega.is_finite() {
            return invalid("omega must be finite");
        }
        let r = lambda.norm();
        if !(r > 0.0 && r < 1.0) {
            return invalid(format!("coupling |lambda|={r} must lie in (0,1)"));
        }
        Ok(SkewShiftParams { k, omega: frac(omega), lambda })
    }

    /// Parameters and start point realising α_n = λ e(freq · n^k).
    ///
    /// Uses n^k = Σ_j S(k,j) j! C(n,j): the increment is k!·freq and the
    /// start coordinate x_{k−j} carries S(k,j)·j!·freq.
    pub fn monomial(k: usize, freq: f64, lambda: C64) -> Result<(Self, TorusPoint)> {
        let probe = SkewShiftParams::new(k, 0.0, lambda)?;
        let weights = stirling_factorial_row(k);
        let omega = frac_mul(weights[k], freq);
        let mut coords = vec![0.0; k];
        for j in 1..k {
            coords[k - j - 1] = frac_mul(weights[j], freq);
        }
        Ok((SkewShiftParams { omega, ..probe }, TorusPoint::new(coords)?))
    }
}

/// S(k,j)·j! for j = 0..=k (number of surjections).
fn stirling_factorial_row(k: usize) -> Vec<i128> {
    let mut s = vec![vec![0i128; k + 1]; k + 1];
    s[0][0] = 1;
    for n in 1..=k {
        for j in 1..=n {
            s[n][j] = j as i128 * s[n - 1][j] + s[n - 1][j - 1];
        }
    }
    let mut fact = 1i128;
    (0..=k)
        .map(|j| {
            if j > 0 {
                fact *= j as i128;
            }
            s[k][j] * fact
        })
        .collect()
}

/// A point of the k-torus with coordinates in [0, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_TORUS_DIM {
            return invalid("torus point needs between 1 and 8 coordinates");
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return invalid("torus coordinates must be finite");
        }
        Ok(TorusPoint { coords: coords.into_iter().map(frac).collect() })
    }

    pub fn zero(k: usize) -> Self {
        TorusPoint { coords: vec![0.0; k.max(1)] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

fn check_dim(p: &SkewShiftParams, x: &TorusPoint) -> Result<()> {
    if p.k != x.dim() {
        return invalid(format!("point has {} coordinates, expected k={}", x.dim(), p.k));
    }
    Ok(())
}

/// One step of the skew-shift.
pub fn skew_step(p: &SkewShiftParams, x: &TorusPoint) -> Result<TorusPoint> {
    check_dim(p, x)?;
    let c = &x.coords;
    let mut out = Vec::with_capacity(p.k);
    out.push(frac(c[0] + p.omega));
    for l in 1..p.k {
        out.push(frac(c[l] + c[l - 1]));
    }
    Ok(TorusPoint { coords: out })
}

/// Coordinate ℓ (1-based) of T^n x from the binomial closed form
/// (T^n x)_ℓ = C(n,ℓ)ω + Σ_j C(n,ℓ−j) x_j, valid for every integer n.
fn orbit_coord(p: &SkewShiftParams, x: &[f64], n: i64, l: usize) -> f64 {
    let n = n as i128;
    let mut t = frac_binom_mul(n, l as u32, p.omega);
    for j in 1..=l {
        t += frac_binom_mul(n, (l - j) as u32, x[j - 1]);
    }
    frac(t)
}

/// T^n x by the closed form; negative n gives the inverse map.
pub fn skew_orbit(p: &SkewShiftParams, x: &TorusPoint, n: i64) -> Result<TorusPoint> {
    check_dim(p, x)?;
    let coords = (1..=p.k).map(|l| orbit_coord(p, &x.coords, n, l)).collect();
    Ok(TorusPoint { coords })
}

/// Generator of a coefficient sequence α_n ∈ 𝔻.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum VerblunskySource {
    /// α_n = λ e((T^n x)_k).
    SkewShift { params: SkewShiftParams, start: TorusPoint },
    /// α_n = e(ηn) α_n(base).
    Rotated { base: Box<VerblunskySource>, eta: f64 },
    /// α_n = e(phase) α_n(base).
    Aleksandrov { base: Box<VerblunskySource>, phase: f64 },
    Constant { alpha: C64 },
    /// values[i] is α_{offset+i}.
    Explicit { offset: i64, values: Vec<C64> },
}

impl VerblunskySource {
    pub fn skew_shift(params: SkewShiftParams, start: TorusPoint) -> Result<Self> {
        check_dim(&params, &start)?;
        Ok(VerblunskySource::SkewShift { params, start })
    }

    /// α_n = λ e(freq · n^k).
    pub fn monomial(k: usize, freq: f64, lambda: C64) -> Result<Self> {
        let (params, start) = SkewShiftParams::monomial(k, freq, lambda)?;
        Ok(VerblunskySource::SkewShift { params, start })
    }

    pub fn constant(alpha: C64) -> Result<Self> {
        if !(alpha.norm() < 1.0) {
            return invalid("constant coefficient must lie in the open unit disk");
        }
        Ok(VerblunskySource::Constant { alpha })
    }

    pub fn explicit(offset: i64, values: Vec<C64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("explicit source needs at least one value");
        }
        if let Some(v) = values.iter().find(|v| !(v.norm() < 1.0)) {
            return invalid(format!("explicit coefficient {v} outside the open unit disk"));
        }
        Ok(VerblunskySource::Explicit { offset, values })
    }

    /// Explicit source with coefficients uniform in the disk of radius `max_modulus`.
    pub fn random(seed: u64, offset: i64, len: usize, max_modulus: f64) -> Result<Self> {
        if !(max_modulus > 0.0 && max_modulus < 1.0) {
            return invalid("max_modulus must lie in (0,1)");
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let values = (0..len)
            .map(|_| {
                let r = max_modulus * rng.gen::<f64>().sqrt();
                r * e(rng.gen::<f64>())
            })
            .collect();
        Self::explicit(offset, values)
    }

    pub fn rotated(self, eta: f64) -> Self {
        VerblunskySource::Rotated { base: Box::new(self), eta }
    }

    pub fn aleksandrov(self, phase: f64) -> Self {
        VerblunskySource::Aleksandrov { base: Box::new(self), phase }
    }

    /// Inclusive index range, `None` when bi-infinite.
    pub fn domain(&self) -> Option<(i64, i64)> {
        match self {
            VerblunskySource::Explicit { offset, values } => {
                Some((*offset, offset + values.len() as i64 - 1))
            }
            VerblunskySource::Rotated { base, .. } | VerblunskySource::Aleksandrov { base, .. } => {
                base.domain()
            }
            _ => None,
        }
    }

    pub fn alpha_at(&self, n: i64) -> Result<C64> {
        match self {
            VerblunskySource::SkewShift { params, start } => {
                Ok(params.lambda * e(orbit_coord(params, &start.coords, n, params.k)))
            }
            VerblunskySource::Rotated { base, eta } => {
                Ok(e(frac_mul(n as i128, *eta)) * base.alpha_at(n)?)
            }
            VerblunskySource::Aleksandrov { base, phase } => Ok(e(*phase) * base.alpha_at(n)?),
            VerblunskySource::Constant { alpha } => Ok(*alpha),
            VerblunskySource::Explicit { offset, values } => {
                let i = n - offset;
                if i < 0 || i >= values.len() as i64 {
                    return Err(Error::OutOfRange {
                        index: n,
                        lo: *offset,
                        hi: offset + values.len() as i64 - 1,
                    });
                }
                Ok(values[i as usize])
            }
        }
    }

    pub fn rho_at(&self, n: i64) -> Result<f64> {
        Ok(num::rho(self.alpha_at(n)?))
    }

    /// α_a, …, α_b.
    pub fn alphas(&self, a: i64, b: i64) -> Result<Vec<C64>> {
        (a..=b).map(|n| self.alpha_at(n)).collect()
    }

    /// Key-value config block; floats use the shortest round-trip form.
    pub fn to_config(&self) -> String {
        let mut lines = Vec::new();
        self.write_config(&mut lines);
        lines.join("\n") + "\n"
    }

    fn write_config(&self, lines: &mut Vec<String>) {
        match self {
            VerblunskySource::SkewShift { params, start } => {
                lines.push("kind = skew_shift".into());
                lines.push(format!("k = {}", params.k));
                lines.push(format!("omega = {:?}", params.omega));
                lines.push(format!("lambda = {:?} {:?}", params.lambda.re, params.lambda.im));
                lines.push(format!("x = {}", join_floats(start.coords())));
            }
            VerblunskySource::Constant { alpha } => {
                lines.push("kind = constant".into());
                lines.push(format!("alpha = {:?} {:?}", alpha.re, alpha.im));
            }
            VerblunskySource::Explicit { offset, values } => {
                lines.push("kind = explicit".into());
                lines.push(format!("offset = {offset}"));
                let flat: Vec<f64> = values.iter().flat_map(|v| [v.re, v.im]).collect();
                lines.push(format!("values = {}", join_floats(&flat)));
            }
            VerblunskySource::Rotated { base, eta } => {
                base.write_config(lines);
                lines.push(format!("wrap = rotated {eta:?}"));
            }
            VerblunskySource::Aleksandrov { base, phase } => {
                base.write_config(lines);
                lines.push(format!("wrap = aleksandrov {phase:?}"));
            }
        }
    }

    /// Parse a key-value config block.
    ///
    /// Kinds: `skew_shift` (k, omega, lambda, x), `monomial` (k, omega,
    /// lambda; α_n = λe(ωn^k)), `constant` (alpha), `explicit` (offset,
    /// values). `wrap = rotated <eta>` and `wrap = aleksandrov <phase>` lines
    /// are applied in order. `omega` accepts the token `sqrt2`.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut fields: Vec<(String, String)> = Vec::new();
        let mut wraps: Vec<(String, f64)> = Vec::new();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("malformed config line `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "kind" => kind = Some(value.to_string()),
                "wrap" => {
                    let mut it = value.split_whitespace();
                    let w = it.next().unwrap_or("").to_string();
                    let v = parse_f64(it.next().unwrap_or(""), "wrap")?;
                    wraps.push((w, v));
                }
                _ => fields.push((key.to_string(), value.to_string())),
            }
        }
        let get = |k: &str| -> Result<&str> {
            fields
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::InvalidArgument(format!("config is missing `{k}`")))
        };
        let kind = kind.ok_or_else(|| Error::InvalidArgument("config is missing `kind`".into()))?;
        let mut src = match kind.as_str() {
            "skew_shift" | "monomial" => {
                let k: usize = get("k")?
                    .parse()
                    .map_err(|_| Error::InvalidArgument("k must be an integer".into()))?;
                let omega = num::parse_frequency(get("omega")?)
                    .ok_or_else(|| Error::InvalidArgument("bad omega".into()))?;
                let lambda = parse_complex(get("lambda")?, "lambda")?;
                if kind == "monomial" {
                    Self::monomial(k, omega, lambda)?
                } else {
                    let x = parse_floats(get("x")?, "x")?;
                    Self::skew_shift(SkewShiftParams::new(k, omega, lambda)?, TorusPoint::new(x)?)?
                }
            }
            "constant" => Self::constant(parse_complex(get("alpha")?, "alpha")?)?,
            "explicit" => {
                let offset: i64 = get("offset")?
                    .parse()
                    .map_err(|_| Error::InvalidArgument("offset must be an integer".into()))?;
                let flat = parse_floats(get("values")?, "values")?;
                if flat.len() % 2 != 0 {
                    return invalid("values must be re/im pairs");
                }
                let values = flat.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
                Self::explicit(offset, values)?
            }
            other => return invalid(format!("unknown source kind `{other}`")),
        };
        for (w, v) in wraps {
            src = match w.as_str() {
                "rotated" => src.rotated(v),
                "aleksandrov" => src.aleksandrov(v),
                other => return invalid(format!("unknown wrap `{other}`")),
            };
        }
        Ok(src)
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidArgument(format!("bad number `{s}` for {what}")))
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| parse_f64(t, what)).collect()
}

fn parse_complex(s: &str, what: &str) -> Result<C64> {
    let v = parse_floats(s, what)?;
    match v.as_slice() {
        [re] => Ok(C64::new(*re, 0.0)),
        [re, im] => Ok(C64::new(*re, *im)),
        _ => invalid(format!("{what} expects `re` or `re im`")),
    }
}
