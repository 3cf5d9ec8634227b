//! Suspension semi-flows over the shift, the time-β maps, the skew product σ*
//! and the diagnostics built on them.
//!
//! Ergodicity cannot be decided from finitely many orbit segments. The
//! diagnostic reports an empirical spread statistic together with an exact
//! check of the algebraic obstruction at fixed points.

use std::collections::VecDeque;

use num::{BigInt, One};
use serde::Serialize;

use crate::affine::DiagonalIFS;
use crate::error::{Error, Result};
use crate::measures::rng;
use crate::rational::{format_q, pow2_exponent, Q};
use crate::symbolic::{cylinder_mass, Symbol, SymbolIter, SymbolSeq, Word};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Roof {
    /// −log₂|λ₁(𝚒|₁)|, the suspension W.
    NegLogLambda1,
    /// −log₂|λ₂(𝚒|₁)|, the suspension Z.
    NegLogLambda2,
}

impl Roof {
    pub fn axis(self) -> usize {
        match self {
            Roof::NegLogLambda1 => 0,
            Roof::NegLogLambda2 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suspension {
    ifs: DiagonalIFS,
    pub roof: Roof,
    heights: Vec<f64>,
}

impl Suspension {
    pub fn new(ifs: &DiagonalIFS, roof: Roof) -> Self {
        let heights = (0..ifs.len()).map(|i| -ifs.log2_lambda(roof.axis(), i)).collect();
        Self { ifs: ifs.clone(), roof, heights }
    }

    pub fn ifs(&self) -> &DiagonalIFS {
        &self.ifs
    }

    pub fn height(&self, sym: Symbol) -> f64 {
        self.heights[sym]
    }
}

/// (𝚒, t) with 0 ≤ t < roof(𝚒).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPoint {
    pub seq: SymbolSeq,
    pub t: f64,
}

/// 𝒯_s, returning the new point and the number of shifts applied.
pub fn flow_counting(p: &FlowPoint, s: f64, susp: &Suspension) -> Result<(FlowPoint, usize)> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("flow time must be finite and nonnegative, got {s}")));
    }
    let mut t = p.t + s;
    let mut shifts = 0usize;
    let mut it = p.seq.iter();
    for sym in it.by_ref() {
        let r = susp.height(sym);
        if t < r {
            break;
        }
        t -= r;
        shifts += 1;
    }
    Ok((FlowPoint { seq: p.seq.shift(shifts), t }, shifts))
}

pub fn flow(p: &FlowPoint, s: f64, susp: &Suspension) -> Result<FlowPoint> {
    Ok(flow_counting(p, s, susp)?.0)
}

/// Period of the periodic point (𝚒, 0): the roof summed over one period.
pub fn period_of(s: &SymbolSeq, susp: &Suspension) -> Result<f64> {
    let p = s.pure_period().ok_or(Error::NotPeriodic)?;
    Ok(p.iter().map(|&i| susp.height(i)).sum())
}

/// One step of σ*: (𝚓, (𝚔, t)) ↦ (σ𝚓, 𝒯_{−log₂|λ₁(𝚓|₁)|}(𝚔, t)) on the suspension Z.
pub fn skew_product_step(j: &SymbolSeq, p: &FlowPoint, susp_z: &Suspension) -> Result<(SymbolSeq, FlowPoint, usize)> {
    let j0 = j.symbol(0);
    let dt = -susp_z.ifs.log2_lambda(0, j0);
    let (q, shifts) = flow_counting(p, dt, susp_z)?;
    Ok((j.shift(1), q, shifts))
}

/// Exact check whether β·α is rational for every fixed-point period α, under
/// the two readings of the ergodicity criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalLock {
    /// β·α_i ∈ ℚ for every i.
    pub lock_hyp: bool,
    /// For every i some n ≤ 64 has 2nβα_i ∈ ℤ.
    pub lock_proof: bool,
    /// α_i = −log₂|λ(i)| when rational.
    pub periods: Vec<Option<String>>,
}

pub fn rational_lock(susp: &Suspension, beta: &Q) -> RationalLock {
    let ax = susp.roof.axis();
    let alphas: Vec<Option<Q>> = (0..susp.ifs.len())
        .map(|i| pow2_exponent(susp.ifs.lambda(ax, i)).map(|e| Q::from_integer(BigInt::from(-e))))
        .collect();
    let lock_hyp = alphas.iter().all(|a| a.is_some());
    let lock_proof = lock_hyp
        && alphas.iter().flatten().all(|a| {
            (1..=64).any(|n| (Q::from_integer(BigInt::from(2 * n)) * beta * a).denom().is_one())
        });
    RationalLock { lock_hyp, lock_proof, periods: alphas.iter().map(|a| a.as_ref().map(format_q)).collect() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub beta: String,
    pub trials: usize,
    pub horizon: usize,
    pub spread: f64,
    pub rational_lock: bool,
    pub lock_proof: bool,
}

impl DiagnosticReport {
    pub const CSV_HEADER: &'static str = "beta,trials,horizon,spread,rational_lock";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{:.9},{}", self.beta, self.trials, self.horizon, self.spread, self.rational_lock)
    }
}

/// A 𝒯_β orbit walker with a lookahead buffer of symbols.
struct Orbit<'a> {
    it: SymbolIter<'a>,
    buf: VecDeque<Symbol>,
    t: f64,
}

impl<'a> Orbit<'a> {
    fn new(seq: &'a SymbolSeq, t: f64) -> Self {
        Self { it: seq.iter(), buf: VecDeque::new(), t }
    }

    fn peek(&mut self, k: usize) -> Symbol {
        while self.buf.len() <= k {
            self.buf.push_back(self.it.next().expect("infinite sequence"));
        }
        self.buf[k]
    }

    fn skip(&mut self) {
        if self.buf.pop_front().is_none() {
            self.it.next();
        }
    }

    fn advance(&mut self, s: f64, susp: &Suspension) -> usize {
        self.t += s;
        let mut shifts = 0;
        loop {
            let r = susp.height(self.peek(0));
            if self.t < r {
                return shifts;
            }
            self.t -= r;
            self.buf.pop_front();
            shifts += 1;
        }
    }
}

/// Draws (𝚒, t) from the normalized (μ̄ × ℒ)_Z.
fn stationary_start(susp: &Suspension, seed: u64, trial: u64) -> (SymbolSeq, f64) {
    let hmax = susp.heights.iter().cloned().fold(0.0, f64::max);
    let mut r = rng(seed, 1_000 + trial);
    loop {
        let s = SymbolSeq::sampled(susp.ifs.weights(), r.gen());
        let h = susp.height(s.symbol(0));
        if r.gen::<f64>() * hmax < h {
            let t = r.gen::<f64>() * h;
            return (s, t);
        }
    }
}

const BANK_DEPTH: usize = 3;
const BANK_WINDOWS: usize = 4;

fn bump(u: f64, k: usize) -> f64 {
    let x = u * BANK_WINDOWS as f64 - k as f64;
    if (0.0..1.0).contains(&x) {
        (std::f64::consts::PI * x).sin().powi(2)
    } else {
        0.0
    }
}

/// Birkhoff averages along 𝒯_β orbits of cylinder indicators (depth ≤ 3)
/// times bumps in normalized time t/roof; `spread` is the largest deviation of
/// one orbit's average from the mean over orbits.
pub fn ergodicity_diagnostic(susp: &Suspension, beta: &Q, trials: usize, horizon: usize, seed: u64) -> Result<DiagnosticReport> {
    let b = crate::rational::to_f64(beta);
    if !(b > 0.0) {
        return Err(Error::Domain("β must be positive".into()));
    }
    let k = susp.ifs.len();
    let offsets: Vec<usize> = (0..=BANK_DEPTH).scan(0, |acc, d| {
        let o = *acc;
        *acc += k.pow(d as u32 + 1);
        Some(o)
    }).collect();
    let nfun = offsets[BANK_DEPTH] * BANK_WINDOWS;
    let mut avgs = vec![vec![0.0; nfun]; trials];
    for (trial, avg) in avgs.iter_mut().enumerate() {
        let (s, t0) = stationary_start(susp, seed, trial as u64);
        let mut o = Orbit::new(&s, t0);
        for _ in 0..horizon {
            o.advance(b, susp);
            let u = o.t / susp.height(o.peek(0));
            let mut code = 0usize;
            for d in 0..BANK_DEPTH {
                code = code * k + o.peek(d);
                let base = (offsets[d] + code) * BANK_WINDOWS;
                for w in 0..BANK_WINDOWS {
                    avg[base + w] += bump(u, w);
                }
            }
        }
        for v in avg.iter_mut() {
            *v /= horizon.max(1) as f64;
        }
    }
    let mut spread = 0.0f64;
    for f in 0..nfun {
        let mean = avgs.iter().map(|a| a[f]).sum::<f64>() / trials.max(1) as f64;
        for a in &avgs {
            spread = spread.max((a[f] - mean).abs());
        }
    }
    let lock = rational_lock(susp, beta);
    Ok(DiagnosticReport {
        beta: format_q(beta),
        trials,
        horizon,
        spread,
        rational_lock: lock.lock_hyp,
        lock_proof: lock.lock_proof,
    })
}

/// t_{nN}(𝚒) for n = 1..=m, computed in one pass.
pub fn stopping_times(s: &SymbolSeq, n_step: usize, m: usize, ifs: &DiagonalIFS) -> Result<Vec<usize>> {
    let one = ifs.mag_one();
    let mut mag = ifs.mag_one();
    let mut it = s.iter();
    let mut k = 0usize;
    let mut out = Vec::with_capacity(m);
    for n in 1..=m {
        let level = (n * n_step) as i64;
        while ifs.mag_cmp(&mag, &one, -level) == std::cmp::Ordering::Greater {
            let sym = it.next().expect("infinite sequence");
            ifs.mag_mul(&mut mag, 1, sym);
            k += 1;
            if k > crate::symbolic::MAX_DEPTH {
                return Err(Error::Domain("stopping time exceeded the depth cap".into()));
            }
        }
        out.push(k);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquidistTable {
    pub depth: usize,
    pub m: usize,
    pub words: Vec<Vec<Symbol>>,
    pub freq: Vec<f64>,
    pub mass: Vec<f64>,
    /// Total variation between the first-half and full-run frequencies.
    pub tv_gap: f64,
}

impl EquidistTable {
    pub const CSV_HEADER: &'static str = "word,freq,mass";

    pub fn csv_rows(&self) -> Vec<String> {
        self.words
            .iter()
            .zip(&self.freq)
            .zip(&self.mass)
            .map(|((w, f), m)| {
                let ws: Vec<String> = w.iter().map(|s| s.to_string()).collect();
                format!("{},{:.9},{:.9}", if ws.is_empty() { "-".into() } else { ws.join("") }, f, m)
            })
            .collect()
    }
}

/// Frequencies of the depth-`depth` cylinders visited by σ^{t_{nN}}𝚒, n ≤ m.
pub fn equidistribution_trace(s: &SymbolSeq, n_step: usize, depth: usize, m: usize, ifs: &DiagonalIFS) -> Result<EquidistTable> {
    if n_step == 0 {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    if m == 0 {
        return Err(Error::Domain("m must be at least 1".into()));
    }
    let k = ifs.len();
    let cells = k.checked_pow(depth as u32).filter(|&c| c <= 1 << 22).ok_or_else(|| Error::Domain("depth too large".into()))?;
    let times = stopping_times(s, n_step, m, ifs)?;
    let mut counts = vec![0u64; cells];
    let mut half = vec![0u64; cells];
    let mut o = Orbit::new(s, 0.0);
    let mut pos = 0usize;
    for (n, &t) in times.iter().enumerate() {
        while pos < t {
            o.skip();
            pos += 1;
        }
        let mut code = 0usize;
        for d in 0..depth {
            code = code * k + o.peek(d);
        }
        counts[code] += 1;
        if n < m / 2 {
            half[code] += 1;
        }
    }
    let hm = (m / 2).max(1) as f64;
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();
    let tv_gap = if m >= 2 {
        0.5 * half.iter().zip(&freq).map(|(&h, f)| (h as f64 / hm - f).abs()).sum::<f64>()
    } else {
        0.0
    };
    let mut words = Vec::with_capacity(cells);
    let mut mass = Vec::with_capacity(cells);
    for code in 0..cells {
        let mut w = vec![0; depth];
        let mut c = code;
        for d in (0..depth).rev() {
            w[d] = c % k;
            c /= k;
        }
        mass.push(crate::rational::to_f64(&cylinder_mass(&Word(w.clone()), ifs.weights())?));
        words.push(w);
    }
    Ok(EquidistTable { depth, m, words, freq, mass, tv_gap })
}

/// Empirical check that 𝒯_β preserves (μ̄ × ℒ)_Z: stationary samples and
/// their images are compared through the symbolic coordinate Σ i_k K^{−k−1}
/// and the normalized time, both in exact one-dimensional W1.
pub fn invariance_residual(susp: &Suspension, beta: f64, samples: usize, seed: u64) -> Result<[f64; 2]> {
    let k = susp.ifs.len() as f64;
    let mut before = (Vec::with_capacity(samples), Vec::with_capacity(samples));
    let mut after = (Vec::with_capacity(samples), Vec::with_capacity(samples));
    let coord = |o: &mut Orbit| -> f64 {
        let mut x = 0.0;
        let mut sc = 1.0 / k;
        for d in 0..20 {
            x += o.peek(d) as f64 * sc;
            sc /= k;
        }
        x
    };
    for i in 0..samples {
        let (s, t) = stationary_start(susp, seed, 1_000_000 + i as u64);
        let mut o = Orbit::new(&s, t);
        before.0.push(coord(&mut o));
        before.1.push(o.t / susp.height(o.peek(0)));
        o.advance(beta, susp);
        after.0.push(coord(&mut o));
        after.1.push(o.t / susp.height(o.peek(0)));
    }
    use crate::measures::{wasserstein1, SampleMeasure};
    Ok([
        wasserstein1(&SampleMeasure::new_1d(before.0), &SampleMeasure::new_1d(after.0))?,
        wasserstein1(&SampleMeasure::new_1d(before.1), &SampleMeasure::new_1d(after.1))?,
    ])
}
