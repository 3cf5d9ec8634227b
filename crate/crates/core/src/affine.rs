//! Diagonal iterated function systems φ_i(x) = diag(λ₁(i), λ₂(i))·x + a_i.
//!
//! All parameters are exact rationals. Floating-point copies are cached for
//! the sampling and entropy code; every decision that is discrete (stopping
//! times, regimes, the irrationality condition) goes through exact arithmetic.

use std::cmp::Ordering;

use num::bigint::BigUint;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, exponent_vector, format_q, log2_abs, parse_q, to_f64, Q};
use crate::symbolic::{BernoulliWeights, SymbolSeq, Word};

/// One map of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMap {
    pub lambda: [Q; 2],
    pub a: [Q; 2],
}

impl DiagonalMap {
    pub fn new(l1: Q, l2: Q, a: [Q; 2]) -> Result<Self> {
        for (j, l) in [&l1, &l2].into_iter().enumerate() {
            if l.is_zero() {
                return Err(Error::Validation { index: None, reason: format!("λ{} is zero", j + 1) });
            }
            if l.abs() >= Q::one() {
                return Err(Error::Validation {
                    index: None,
                    reason: format!("|λ{}| = {} is not a contraction", j + 1, format_q(&l.abs())),
                });
            }
        }
        Ok(Self { lambda: [l1, l2], a })
    }
}

/// JSON form: `{"maps":[{"l1":"1/2","l2":"1/3","a":["0","0"]}], "weights":["1/2","1/2"]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IfsSpec {
    pub maps: Vec<MapSpec>,
    pub weights: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapSpec {
    pub l1: String,
    pub l2: String,
    pub a: [String; 2],
}

impl IfsSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn build(&self) -> Result<DiagonalIFS> {
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, s)| parse_q(s).map_err(|e| e.at(i)))
            .collect::<Result<Vec<_>>>()?;
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let at = |e: Error| match e {
                    Error::Validation { reason, .. } => Error::Validation { index: Some(i), reason },
                    other => other.at(i),
                };
                let l1 = parse_q(&m.l1).map_err(at)?;
                let l2 = parse_q(&m.l2).map_err(at)?;
                let a = [parse_q(&m.a[0]).map_err(at)?, parse_q(&m.a[1]).map_err(at)?];
                DiagonalMap::new(l1, l2, a).map_err(at)
            })
            .collect::<Result<Vec<_>>>()?;
        DiagonalIFS::new(maps, BernoulliWeights::new(weights)?)
    }
}

/// |λ(w)| for a word, kept exactly either as a prime-exponent vector or as a
/// numerator/denominator pair when some entry is too large to factor.
#[derive(Debug, Clone, PartialEq)]
pub enum Magnitude {
    Exp(Vec<i64>),
    Big { num: BigUint, den: BigUint },
}

#[derive(Debug, Clone, PartialEq)]
struct Factored {
    primes: Vec<u64>,
    log2p: Vec<f64>,
    /// exps[i][axis] over `primes`.
    exps: Vec<[Vec<i64>; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalIFS {
    maps: Vec<DiagonalMap>,
    weights: BernoulliWeights,
    lf: Vec<[f64; 2]>,
    af: Vec<[f64; 2]>,
    logs: Vec<[f64; 2]>,
    factored: Option<Factored>,
    hull: [(Q, Q); 2],
}

/// Axis-aligned rectangle in floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    pub fn height(&self) -> f64 {
        self.hi[1] - self.lo[1]
    }

    pub fn contains_rect(&self, o: &Rect, tol: f64) -> bool {
        (0..2).all(|j| o.lo[j] >= self.lo[j] - tol && o.hi[j] <= self.hi[j] + tol)
    }
}

/// φ_w([−1,1]²) in exact arithmetic: centre φ_w(0) and half-sides |λ_j(w)|.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderRect {
    pub center: [Q; 2],
    pub half: [Q; 2],
}

impl CylinderRect {
    pub fn to_rect(&self) -> Rect {
        let c = [to_f64(&self.center[0]), to_f64(&self.center[1])];
        let h = [to_f64(&self.half[0]), to_f64(&self.half[1])];
        Rect { lo: [c[0] - h[0], c[1] - h[1]], hi: [c[0] + h[0], c[1] + h[1]] }
    }

    pub fn contains(&self, o: &CylinderRect) -> bool {
        (0..2).all(|j| {
            &o.center[j] - &o.half[j] >= &self.center[j] - &self.half[j]
                && &o.center[j] + &o.half[j] <= &self.center[j] + &self.half[j]
        })
    }
}

impl DiagonalIFS {
    pub fn new(maps: Vec<DiagonalMap>, weights: BernoulliWeights) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::Validation { index: None, reason: "no maps".into() });
        }
        if maps.len() != weights.len() {
            return Err(Error::Validation {
                index: None,
                reason: format!("{} maps but {} weights", maps.len(), weights.len()),
            });
        }
        let lf = maps.iter().map(|m| [to_f64(&m.lambda[0]), to_f64(&m.lambda[1])]).collect();
        let af = maps.iter().map(|m| [to_f64(&m.a[0]), to_f64(&m.a[1])]).collect();
        let logs = maps.iter().map(|m| [log2_abs(&m.lambda[0]), log2_abs(&m.lambda[1])]).collect();
        let factored = factor_system(&maps);
        let hull = [exact_hull(&maps, 0)?, exact_hull(&maps, 1)?];
        Ok(Self { maps, weights, lf, af, logs, factored, hull })
    }

    pub fn from_strs(maps: &[(&str, &str, [&str; 2])], weights: &[&str]) -> Result<Self> {
        IfsSpec {
            maps: maps
                .iter()
                .map(|(l1, l2, a)| MapSpec { l1: l1.to_string(), l2: l2.to_string(), a: [a[0].into(), a[1].into()] })
                .collect(),
            weights: weights.iter().map(|s| s.to_string()).collect(),
        }
        .build()
    }

    pub fn spec(&self) -> IfsSpec {
        IfsSpec {
            maps: self
                .maps
                .iter()
                .map(|m| MapSpec {
                    l1: format_q(&m.lambda[0]),
                    l2: format_q(&m.lambda[1]),
                    a: [format_q(&m.a[0]), format_q(&m.a[1])],
                })
                .collect(),
            weights: self.weights.p().iter().map(format_q).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[DiagonalMap] {
        &self.maps
    }

    pub fn weights(&self) -> &BernoulliWeights {
        &self.weights
    }

    pub fn lambda(&self, axis: usize, i: usize) -> &Q {
        &self.maps[i].lambda[axis]
    }

    pub fn lf(&self, i: usize) -> [f64; 2] {
        self.lf[i]
    }

    pub fn af(&self, i: usize) -> [f64; 2] {
        self.af[i]
    }

    /// log₂|λ_axis(i)|.
    pub fn log2_lambda(&self, axis: usize, i: usize) -> f64 {
        self.logs[i][axis]
    }

    /// Exact attractor hull on one axis.
    pub fn hull(&self, axis: usize) -> &(Q, Q) {
        &self.hull[axis]
    }

    pub fn hull_rect(&self) -> Rect {
        Rect {
            lo: [to_f64(&self.hull[0].0), to_f64(&self.hull[1].0)],
            hi: [to_f64(&self.hull[0].1), to_f64(&self.hull[1].1)],
        }
    }

    pub fn min_abs_lambda(&self, axis: usize) -> Q {
        self.maps.iter().map(|m| m.lambda[axis].abs()).min().expect("nonempty")
    }

    /// λ_axis(w), signed.
    pub fn lambda_word(&self, axis: usize, w: &Word) -> Q {
        w.symbols().iter().fold(Q::one(), |acc, &s| acc * &self.maps[s].lambda[axis])
    }

    /// Exact φ_w as (linear diagonal, translation).
    pub fn word_map(&self, w: &Word) -> ([Q; 2], [Q; 2]) {
        let mut lam = [Q::one(), Q::one()];
        let mut off = [Q::zero(), Q::zero()];
        for &s in w.symbols() {
            for j in 0..2 {
                off[j] += &lam[j] * &self.maps[s].a[j];
                lam[j] *= &self.maps[s].lambda[j];
            }
        }
        (lam, off)
    }

    /// Floating-point φ_w as (linear diagonal, translation).
    pub fn word_map_f64(&self, w: &[usize]) -> ([f64; 2], [f64; 2]) {
        let mut lam = [1.0, 1.0];
        let mut off = [0.0, 0.0];
        for &s in w {
            for j in 0..2 {
                off[j] += lam[j] * self.af[s][j];
                lam[j] *= self.lf[s][j];
            }
        }
        (lam, off)
    }

    /// Fixed point of φ_i.
    pub fn fixed_point(&self, i: usize) -> [f64; 2] {
        [self.af[i][0] / (1.0 - self.lf[i][0]), self.af[i][1] / (1.0 - self.lf[i][1])]
    }

    /// Π(𝚒) in floating point, accurate to about 2^{-60} times the hull size.
    pub fn project_seq(&self, s: &SymbolSeq) -> [f64; 2] {
        let mut lam = [1.0f64, 1.0];
        let mut off = [0.0f64, 0.0];
        for sym in s.iter() {
            if lam[0].abs() < 1e-18 && lam[1].abs() < 1e-18 {
                break;
            }
            for j in 0..2 {
                off[j] += lam[j] * self.af[sym][j];
                lam[j] *= self.lf[sym][j];
            }
        }
        off
    }

    pub fn mag_one(&self) -> Magnitude {
        match &self.factored {
            Some(f) => Magnitude::Exp(vec![0; f.primes.len()]),
            None => Magnitude::Big { num: BigUint::one(), den: BigUint::one() },
        }
    }

    /// m ← m·|λ_axis(sym)|.
    pub fn mag_mul(&self, m: &mut Magnitude, axis: usize, sym: usize) {
        match (m, &self.factored) {
            (Magnitude::Exp(e), Some(f)) => {
                for (x, d) in e.iter_mut().zip(&f.exps[sym][axis]) {
                    *x += d;
                }
            }
            (Magnitude::Big { num, den }, _) => {
                let l = &self.maps[sym].lambda[axis];
                *num *= l.numer().magnitude();
                *den *= l.denom().magnitude();
            }
            _ => unreachable!("magnitude representation does not match the system"),
        }
    }

    pub fn mag_log2(&self, m: &Magnitude) -> f64 {
        match (m, &self.factored) {
            (Magnitude::Exp(e), Some(f)) => e.iter().zip(&f.log2p).map(|(&x, l)| x as f64 * l).sum(),
            (Magnitude::Big { num, den }, _) => log2_abs(&rational::from_parts(num.clone(), den.clone())),
            _ => unreachable!("magnitude representation does not match the system"),
        }
    }

    pub fn mag_to_q(&self, m: &Magnitude) -> Q {
        match (m, &self.factored) {
            (Magnitude::Exp(e), Some(f)) => {
                let (n, d) = split_pow(&f.primes, e.iter().copied());
                rational::from_parts(n, d)
            }
            (Magnitude::Big { num, den }, _) => rational::from_parts(num.clone(), den.clone()),
            _ => unreachable!("magnitude representation does not match the system"),
        }
    }

    /// Exact comparison of `a` against `b·2^shift`.
    pub fn mag_cmp(&self, a: &Magnitude, b: &Magnitude, shift: i64) -> Ordering {
        match (a, b, &self.factored) {
            (Magnitude::Exp(ea), Magnitude::Exp(eb), Some(f)) => {
                let mut d: Vec<i64> = ea.iter().zip(eb).map(|(x, y)| x - y).collect();
                d[0] -= shift; // primes[0] == 2
                if d.iter().all(|&x| x == 0) {
                    return Ordering::Equal;
                }
                let approx: f64 = d.iter().zip(&f.log2p).map(|(&x, l)| x as f64 * l).sum();
                let scale: f64 = d.iter().zip(&f.log2p).map(|(&x, l)| (x as f64 * l).abs()).sum();
                if approx.abs() > 1e-9 * (1.0 + scale) {
                    return approx.partial_cmp(&0.0).expect("finite");
                }
                let (n, dd) = split_pow(&f.primes, d.iter().copied());
                n.cmp(&dd)
            }
            (Magnitude::Big { num: an, den: ad }, Magnitude::Big { num: bn, den: bd }, _) => {
                let mut lhs = an * bd;
                let mut rhs = bn * ad;
                if shift >= 0 {
                    rhs <<= shift as u64;
                } else {
                    lhs <<= (-shift) as u64;
                }
                lhs.cmp(&rhs)
            }
            _ => unreachable!("magnitude representation does not match the system"),
        }
    }

    /// Cylinder rectangle φ_w([−1,1]²).
    pub fn canonical_projection(&self, w: &Word) -> Result<CylinderRect> {
        w.check(self.len())?;
        let (lam, off) = self.word_map(w);
        Ok(CylinderRect { center: off, half: [lam[0].abs(), lam[1].abs()] })
    }

    /// φ_w(hull) in floating point, the tightest axis-aligned box containing Π([w]).
    pub fn cylinder_hull_f64(&self, w: &[usize]) -> Rect {
        let (lam, off) = self.word_map_f64(w);
        let h = self.hull_rect();
        let mut r = Rect { lo: [0.0; 2], hi: [0.0; 2] };
        for j in 0..2 {
            let a = off[j] + lam[j] * h.lo[j];
            let b = off[j] + lam[j] * h.hi[j];
            r.lo[j] = a.min(b);
            r.hi[j] = a.max(b);
        }
        r
    }

    /// Conjugates the system by x ↦ (x − c)/s per axis.
    pub fn conjugate(&self, center: [Q; 2], scale: [Q; 2]) -> Result<Self> {
        let maps = self
            .maps
            .iter()
            .map(|m| {
                let a = [0, 1].map(|j| (&m.a[j] + (&m.lambda[j] - Q::one()) * &center[j]) / &scale[j]);
                DiagonalMap::new(m.lambda[0].clone(), m.lambda[1].clone(), a)
            })
            .collect::<Result<Vec<_>>>()?;
        DiagonalIFS::new(maps, self.weights.clone())
    }
}

fn split_pow(primes: &[u64], e: impl Iterator<Item = i64>) -> (BigUint, BigUint) {
    let mut n = BigUint::one();
    let mut d = BigUint::one();
    for (&p, x) in primes.iter().zip(e) {
        match x.cmp(&0) {
            Ordering::Greater => n *= num::pow(BigUint::from(p), x as usize),
            Ordering::Less => d *= num::pow(BigUint::from(p), (-x) as usize),
            Ordering::Equal => {}
        }
    }
    (n, d)
}

fn factor_system(maps: &[DiagonalMap]) -> Option<Factored> {
    let mut raw = Vec::with_capacity(maps.len());
    for m in maps {
        let a = exponent_vector(&m.lambda[0]).ok()?;
        let b = exponent_vector(&m.lambda[1]).ok()?;
        raw.push([a, b]);
    }
    let mut primes: Vec<u64> = vec![2];
    for r in &raw {
        for v in r {
            for &p in v.keys() {
                if !primes.contains(&p) {
                    primes.push(p);
                }
            }
        }
    }
    primes[1..].sort_unstable();
    let log2p = primes.iter().map(|&p| (p as f64).log2()).collect();
    let exps = raw
        .iter()
        .map(|r| [0, 1].map(|ax| primes.iter().map(|p| *r[ax].get(p).unwrap_or(&0)).collect()))
        .collect();
    Some(Factored { primes, log2p, exps })
}

/// Exact convex hull [L, U] of the attractor of the one-dimensional system
/// x ↦ λ_i x + a_i, found by policy iteration on the active maps.
fn exact_hull(maps: &[DiagonalMap], axis: usize) -> Result<(Q, Q)> {
    let lam: Vec<&Q> = maps.iter().map(|m| &m.lambda[axis]).collect();
    let a: Vec<&Q> = maps.iter().map(|m| &m.a[axis]).collect();
    let image = |i: usize, lo: &Q, hi: &Q| -> (Q, Q) {
        let p = a[i] + lam[i] * lo;
        let q = a[i] + lam[i] * hi;
        if p <= q {
            (p, q)
        } else {
            (q, p)
        }
    };
    // Start from the policy that is optimal at the fixed point of map 0.
    let fp0 = a[0] / (Q::one() - lam[0]);
    let (mut lo, mut hi) = (fp0.clone(), fp0);
    for _ in 0..64 {
        let best_hi = (0..maps.len()).max_by(|&i, &j| image(i, &lo, &hi).1.cmp(&image(j, &lo, &hi).1)).unwrap();
        let best_lo = (0..maps.len()).min_by(|&i, &j| image(i, &lo, &hi).0.cmp(&image(j, &lo, &hi).0)).unwrap();
        let (u, l) = (best_hi, best_lo);
        let one = Q::one();
        let (nl, nu) = match (lam[u].is_positive(), lam[l].is_positive()) {
            (true, true) => (a[l] / (&one - lam[l]), a[u] / (&one - lam[u])),
            (true, false) => {
                let uu = a[u] / (&one - lam[u]);
                (a[l] + lam[l] * &uu, uu)
            }
            (false, true) => {
                let ll = a[l] / (&one - lam[l]);
                (ll.clone(), a[u] + lam[u] * &ll)
            }
            (false, false) => {
                let uu = (a[u] + lam[u] * a[l]) / (&one - lam[u] * lam[l]);
                (a[l] + lam[l] * &uu, uu)
            }
        };
        let ok = (0..maps.len()).all(|i| {
            let (p, q) = image(i, &nl, &nu);
            p >= nl && q <= nu
        });
        if ok && nl <= nu {
            return Ok((nl, nu));
        }
        // Grow towards the true hull before re-selecting the policy.
        let mut gl = nl.clone().min(lo.clone());
        let mut gu = nu.clone().max(hi.clone());
        for i in 0..maps.len() {
            let (p, q) = image(i, &gl, &gu);
            gl = gl.min(p);
            gu = gu.max(q);
        }
        lo = gl;
        hi = gu;
    }
    Err(Error::Validation { index: None, reason: format!("attractor hull on axis {axis} did not converge") })
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub maps: usize,
    pub contractive: bool,
    pub weights_normalized: bool,
    /// Exact attractor hull per axis as "p/q" strings: [[x_lo, x_hi], [y_lo, y_hi]].
    pub hull: [[String; 2]; 2],
    pub inside_unit_square: bool,
    /// Conjugation x ↦ (x − c)/s per axis that maps the hull into [−1,1]².
    pub normalization: Option<Normalization>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Normalization {
    pub center: [String; 2],
    pub scale: [String; 2],
}

/// Checks contractivity, weights and the attractor box; proposes a
/// normalization when the attractor leaves [−1,1]².
pub fn validate(spec: &IfsSpec) -> Result<ValidationReport> {
    let ifs = spec.build()?;
    let mut notes = Vec::new();
    if ifs.len() < 2 {
        notes.push("single-map system: the measure is a point mass".to_string());
    }
    let h = [ifs.hull(0).clone(), ifs.hull(1).clone()];
    let inside = h.iter().all(|(l, u)| *l >= Q::from_integer((-1).into()) && *u <= Q::one());
    let normalization = (!inside).then(|| {
        let (c, s) = normalizing_conjugation(&ifs);
        Normalization { center: [format_q(&c[0]), format_q(&c[1])], scale: [format_q(&s[0]), format_q(&s[1])] }
    });
    Ok(ValidationReport {
        maps: ifs.len(),
        contractive: true,
        weights_normalized: true,
        hull: [0, 1].map(|j| [format_q(&h[j].0), format_q(&h[j].1)]),
        inside_unit_square: inside,
        normalization,
        notes,
    })
}

/// Centre = hull midpoint, scale = least power of two ≥ the hull half-width.
pub fn normalizing_conjugation(ifs: &DiagonalIFS) -> ([Q; 2], [Q; 2]) {
    let two = Q::from_integer(2.into());
    let mut c = [Q::zero(), Q::zero()];
    let mut s = [Q::one(), Q::one()];
    for j in 0..2 {
        let (l, u) = ifs.hull(j);
        c[j] = (l + u) / &two;
        let half = (u - l) / &two;
        while s[j] < half {
            s[j] *= &two;
        }
    }
    (c, s)
}

/// Returns the system itself when its attractor lies in [−1,1]², and the
/// normalized conjugate otherwise.
pub fn normalized(ifs: &DiagonalIFS) -> Result<DiagonalIFS> {
    let inside = (0..2).all(|j| {
        let (l, u) = ifs.hull(j);
        *l >= Q::from_integer((-1).into()) && *u <= Q::one()
    });
    if inside {
        return Ok(ifs.clone());
    }
    let (c, s) = normalizing_conjugation(ifs);
    ifs.conjugate(c, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    XDominant,
    YDominant,
    Equal,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::XDominant => "X_DOMINANT",
            Regime::YDominant => "Y_DOMINANT",
            Regime::Equal => "EQUAL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovExponents {
    pub lambda1_mu: f64,
    pub lambda2_mu: f64,
    pub regime: Regime,
}

/// λ_j^μ = Σ p_i log₂|λ_j(i)|, with the regime decided exactly by comparing
/// Π|λ₁(i)|^{p_i D} and Π|λ₂(i)|^{p_i D}, D the common weight denominator.
pub fn lyapunov(ifs: &DiagonalIFS) -> LyapunovExponents {
    let p = ifs.weights().pf();
    let l = |ax: usize| (0..ifs.len()).map(|i| p[i] * ifs.log2_lambda(ax, i)).sum::<f64>();
    let (l1, l2) = (l(0), l(1));
    let d = ifs.weights().lcm_denominator();
    let powers: Vec<usize> = ifs
        .weights()
        .p()
        .iter()
        .map(|x| {
            let k = x * Q::from_integer(d.clone());
            num::ToPrimitive::to_usize(&k.to_integer()).expect("weight power fits usize")
        })
        .collect();
    let mut a = ifs.mag_one();
    let mut b = ifs.mag_one();
    let cmp = match &ifs.factored {
        Some(_) => {
            for (i, &k) in powers.iter().enumerate() {
                for _ in 0..k.min(1 << 20) {
                    ifs.mag_mul(&mut a, 0, i);
                    ifs.mag_mul(&mut b, 1, i);
                }
            }
            if powers.iter().all(|&k| k <= 1 << 20) {
                ifs.mag_cmp(&a, &b, 0)
            } else {
                l1.partial_cmp(&l2).expect("finite")
            }
        }
        None => {
            let diff = l1 - l2;
            if diff.abs() > 1e-9 {
                diff.partial_cmp(&0.0).expect("finite")
            } else {
                let mut lhs = (BigUint::one(), BigUint::one());
                let mut rhs = (BigUint::one(), BigUint::one());
                for (i, &k) in powers.iter().enumerate() {
                    let (n1, d1) = rational::abs_parts(ifs.lambda(0, i));
                    let (n2, d2) = rational::abs_parts(ifs.lambda(1, i));
                    lhs.0 *= num::pow(n1, k);
                    lhs.1 *= num::pow(d1, k);
                    rhs.0 *= num::pow(n2, k);
                    rhs.1 *= num::pow(d2, k);
                }
                (&lhs.0 * &rhs.1).cmp(&(&rhs.0 * &lhs.1))
            }
        }
    };
    let regime = match cmp {
        Ordering::Greater => Regime::XDominant,
        Ordering::Less => Regime::YDominant,
        Ordering::Equal => Regime::Equal,
    };
    LyapunovExponents { lambda1_mu: l1, lambda2_mu: l2, regime }
}

/// A pair of multiplicatively independent contraction ratios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    /// Axes (1-based, as in λ₁, λ₂) and map indices of the pair.
    pub s: usize,
    pub i: usize,
    pub t: usize,
    pub j: usize,
    pub lambda_si: String,
    pub lambda_tj: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Irrationality {
    Satisfied(Witness),
    Violated,
}

impl Irrationality {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, Irrationality::Satisfied(_))
    }
}

/// Decides whether log|λ_s(i)| / log|λ_t(j)| ∉ ℚ for some (s, t, i, j).
///
/// log a / log b is rational exactly when the prime-exponent vectors of a and b
/// are parallel, so the decision is exact. Entries that cannot be factored
/// within the budget give [`Error::Undecidable`].
pub fn irrationality_condition(ifs: &DiagonalIFS) -> Result<Irrationality> {
    let mut entries = Vec::new();
    for s in 0..2 {
        for i in 0..ifs.len() {
            entries.push((s, i, exponent_vector(ifs.lambda(s, i))?));
        }
    }
    for (x, (s, i, u)) in entries.iter().enumerate() {
        for (t, j, v) in &entries[x + 1..] {
            if !rational::parallel(u, v) {
                return Ok(Irrationality::Satisfied(Witness {
                    s: s + 1,
                    i: *i,
                    t: t + 1,
                    j: *j,
                    lambda_si: format_q(ifs.lambda(*s, *i)),
                    lambda_tj: format_q(ifs.lambda(*t, *j)),
                }));
            }
        }
    }
    Ok(Irrationality::Violated)
}

/// Entries k = 0..=n_max of log₂|λ₁(𝚒|_k)| − log₂|λ₂(𝚒|_k)|.
pub fn eccentricity_trace(s: &SymbolSeq, n_max: usize, ifs: &DiagonalIFS) -> Vec<f64> {
    let mut a = ifs.mag_one();
    let mut b = ifs.mag_one();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(0.0);
    for sym in s.iter().take(n_max) {
        ifs.mag_mul(&mut a, 0, sym);
        ifs.mag_mul(&mut b, 1, sym);
        let diff = match (&a, &b) {
            (Magnitude::Exp(ea), Magnitude::Exp(eb)) => {
                let d: Vec<i64> = ea.iter().zip(eb).map(|(x, y)| x - y).collect();
                let f = ifs.factored.as_ref().expect("exponent form");
                d.iter().zip(&f.log2p).map(|(&x, l)| x as f64 * l).sum()
            }
            _ => ifs.mag_log2(&a) - ifs.mag_log2(&b),
        };
        out.push(diff);
    }
    out
}

/// Fraction of entries k = 1..=n with |trace_k| ≤ m.
pub fn near_square_frequency(trace: &[f64], m: f64) -> f64 {
    let tail = &trace[1.min(trace.len())..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().filter(|x| x.abs() <= m).count() as f64 / tail.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn two_map() -> DiagonalIFS {
        DiagonalIFS::from_strs(&[("1/2", "1/3", ["-1/2", "-2/3"]), ("1/2", "1/3", ["0", "1/3"])], &["1/2", "1/2"])
            .unwrap()
    }

    #[test]
    fn validate_examples() {
        let r = validate(&two_map().spec()).unwrap();
        assert!(r.contractive && r.weights_normalized);
        // Oracle: fixed points of the extreme maps, x ∈ [-1, 0] and y ∈ [-1, 1/2].
        assert_eq!(r.hull, [["-1".to_string(), "0".to_string()], ["-1".to_string(), "1/2".to_string()]]);
        assert!(r.inside_unit_square);

        let bad = DiagonalIFS::from_strs(&[("1/2", "1/3", ["0", "0"]), ("1", "1/3", ["0", "0"])], &["1/2", "1/2"]);
        assert!(matches!(bad, Err(Error::Validation { index: Some(1), .. })));
        let badw = DiagonalIFS::from_strs(&[("1/2", "1/3", ["0", "0"]), ("1/2", "1/3", ["1", "0"])], &["1/2", "1/3"]);
        assert!(matches!(badw, Err(Error::Validation { .. })));
        let zero = DiagonalIFS::from_strs(&[("0", "1/3", ["0", "0"])], &["1"]);
        assert!(matches!(zero, Err(Error::Validation { index: Some(0), .. })));
    }

    #[test]
    fn normalization_maps_hull_into_unit_square() {
        let big = DiagonalIFS::from_strs(&[("1/2", "-1/3", ["0", "5"]), ("1/2", "1/2", ["7", "0"])], &["1/2", "1/2"])
            .unwrap();
        let r = validate(&big.spec()).unwrap();
        assert!(!r.inside_unit_square && r.normalization.is_some());
        let n = normalized(&big).unwrap();
        for j in 0..2 {
            let (l, u) = n.hull(j);
            assert!(*l >= q(-1, 1) && *u <= q(1, 1));
        }
    }

    #[test]
    fn hull_with_negative_ratios() {
        // x ↦ -x/2 + 1 and x ↦ x/2: hull found by brute-force iteration.
        let f = DiagonalIFS::from_strs(&[("-1/2", "1/2", ["1", "0"]), ("1/2", "1/2", ["0", "1/2"])], &["1/2", "1/2"])
            .unwrap();
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for _ in 0..200 {
            let c = [(-0.5 * lo + 1.0), (-0.5 * hi + 1.0), 0.5 * lo, 0.5 * hi];
            lo = c.iter().cloned().fold(f64::INFINITY, f64::min).min(lo);
            hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(hi);
        }
        let (l, u) = f.hull(0);
        assert!((to_f64(l) - lo).abs() < 1e-12 && (to_f64(u) - hi).abs() < 1e-12);
    }

    #[test]
    fn canonical_projection_examples() {
        let f = two_map();
        let e = f.canonical_projection(&Word::empty()).unwrap();
        assert_eq!(e.to_rect(), Rect { lo: [-1.0, -1.0], hi: [1.0, 1.0] });
        let one = DiagonalIFS::from_strs(&[("1/2", "1/2", ["0", "0"])], &["1"]).unwrap();
        let r = one.canonical_projection(&Word(vec![0])).unwrap().to_rect();
        assert_eq!(r, Rect { lo: [-0.5, -0.5], hi: [0.5, 0.5] });
        let c = f.canonical_projection(&Word(vec![0, 1])).unwrap();
        assert_eq!(c.half, [q(1, 4), q(1, 9)]);
    }

    #[test]
    fn lyapunov_examples() {
        let a = DiagonalIFS::from_strs(&[("1/2", "1/2", ["0", "0"]), ("1/2", "1/8", ["1/2", "0"])], &["1/2", "1/2"])
            .unwrap();
        let l = lyapunov(&a);
        assert!((l.lambda1_mu + 1.0).abs() < 1e-15);
        assert!((l.lambda2_mu + 2.0).abs() < 1e-15);
        assert_eq!(l.regime, Regime::XDominant);
        let b = DiagonalIFS::from_strs(
            &[("1/3", "1/2", ["0", "0"]), ("1/3", "1/2", ["1/3", "0"]), ("1/3", "1/2", ["2/3", "1/2"])],
            &["1/3", "1/3", "1/3"],
        )
        .unwrap();
        assert_eq!(lyapunov(&b).regime, Regime::YDominant);
        let eq = DiagonalIFS::from_strs(&[("1/2", "1/4", ["0", "0"]), ("1/4", "1/2", ["1/2", "1/2"])], &["1/2", "1/2"])
            .unwrap();
        assert_eq!(lyapunov(&eq).regime, Regime::Equal);
        // Unequal weights.
        let w = DiagonalIFS::from_strs(&[("1/4", "1/2", ["0", "0"]), ("1/2", "1/4", ["1/2", "0"])], &["1/3", "2/3"])
            .unwrap();
        // Oracle: (1/3)(-2) + (2/3)(-1) = -4/3 versus (1/3)(-1) + (2/3)(-2) = -5/3.
        assert_eq!(lyapunov(&w).regime, Regime::XDominant);
    }

    #[test]
    fn irrationality_examples() {
        let mk = |v: &[&str]| {
            let maps: Vec<(&str, &str, [&str; 2])> = v.iter().map(|&l| (l, l, ["0", "0"])).collect();
            let w = vec!["1/2"; 2];
            DiagonalIFS::from_strs(&maps[..2], &w).unwrap()
        };
        let sat = irrationality_condition(&mk(&["1/2", "1/3"])).unwrap();
        assert!(sat.is_satisfied());
        assert_eq!(irrationality_condition(&mk(&["1/2", "1/8"])).unwrap(), Irrationality::Violated);
        let p2 = DiagonalIFS::from_strs(&[("1/2", "1/4", ["0", "0"]), ("1/8", "1/2", ["1/2", "0"])], &["1/2", "1/2"])
            .unwrap();
        assert_eq!(irrationality_condition(&p2).unwrap(), Irrationality::Violated);
        assert_eq!(irrationality_condition(&mk(&["2/3", "4/9"])).unwrap(), Irrationality::Violated);
        let budget = DiagonalIFS::from_strs(
            &[("1/2", "1/18446744073709551557", ["0", "0"]), ("1/2", "1/2", ["1/2", "0"])],
            &["1/2", "1/2"],
        )
        .unwrap();
        assert!(matches!(irrationality_condition(&budget), Err(Error::Undecidable(_))));
    }

    #[test]
    fn eccentricity_examples() {
        let s = SymbolSeq::sampled(&BernoulliWeights::uniform(2), 3);
        let same = DiagonalIFS::from_strs(&[("1/2", "1/2", ["0", "0"]), ("1/3", "1/3", ["1/2", "0"])], &["1/2", "1/2"])
            .unwrap();
        assert!(eccentricity_trace(&s, 50, &same).iter().all(|&x| x == 0.0));
        let lin = DiagonalIFS::from_strs(&[("1/2", "1/4", ["0", "0"]), ("1/2", "1/4", ["1/2", "0"])], &["1/2", "1/2"])
            .unwrap();
        let t = eccentricity_trace(&s, 50, &lin);
        assert!(t.iter().enumerate().all(|(k, &x)| x == k as f64));
    }

    #[test]
    fn equal_lyapunov_near_square_frequency_decays() {
        let eq = DiagonalIFS::from_strs(&[("1/2", "1/4", ["0", "0"]), ("1/4", "1/2", ["1/2", "1/2"])], &["1/2", "1/2"])
            .unwrap();
        // Oracle: entries are ±1 steps of a simple random walk; P(|S_k| ≤ 3) ~ 7/sqrt(2πk).
        let freq = |n: usize| {
            (0..40u64)
                .map(|seed| {
                    let s = SymbolSeq::sampled(eq.weights(), seed);
                    near_square_frequency(&eccentricity_trace(&s, n, &eq), 3.0)
                })
                .sum::<f64>()
                / 40.0
        };
        let (short, long) = (freq(200), freq(20000));
        assert!(long < short && long < 0.1, "{short} {long}");
    }

    proptest! {
        #[test]
        fn lambda_multiplicative_and_nesting(u in proptest::collection::vec(0usize..2, 0..10),
                                             v in proptest::collection::vec(0usize..2, 0..10)) {
            let f = two_map();
            let (u, v) = (Word(u), Word(v));
            let uv = u.concat(&v);
            for ax in 0..2 {
                prop_assert_eq!(f.lambda_word(ax, &uv), f.lambda_word(ax, &u) * f.lambda_word(ax, &v));
            }
            let ru = f.canonical_projection(&u).unwrap();
            let ruv = f.canonical_projection(&uv).unwrap();
            prop_assert!(ru.contains(&ruv));
            let ratio = &ruv.half[0] / &ruv.half[1];
            let s = SymbolSeq::periodic(uv.0.clone(), vec![0]).unwrap();
            let tr = eccentricity_trace(&s, uv.len(), &f);
            prop_assert!((tr[uv.len()] - log2_abs(&ratio)).abs() < 1e-9);
        }

        #[test]
        fn witness_search_is_symmetric(a in 1i64..30, b in 1i64..30, c in 1i64..30, d in 1i64..30) {
            let lam = |x: i64| format!("1/{}", x + 1);
            let (la, lb, lc, ld) = (lam(a), lam(b), lam(c), lam(d));
            let f = DiagonalIFS::from_strs(&[(&la, &lb, ["0", "0"]), (&lc, &ld, ["1/2", "0"])], &["1/2", "1/2"]).unwrap();
            let g = DiagonalIFS::from_strs(&[(&lb, &la, ["0", "0"]), (&ld, &lc, ["1/2", "0"])], &["1/2", "1/2"]).unwrap();
            let h = DiagonalIFS::from_strs(&[(&lc, &ld, ["0", "0"]), (&la, &lb, ["1/2", "0"])], &["1/2", "1/2"]).unwrap();
            let r = irrationality_condition(&f).unwrap().is_satisfied();
            prop_assert_eq!(r, irrationality_condition(&g).unwrap().is_satisfied());
            prop_assert_eq!(r, irrationality_condition(&h).unwrap().is_satisfied());
        }
    }
}
