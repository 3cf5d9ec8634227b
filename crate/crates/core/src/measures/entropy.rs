use serde::Serialize;

use crate::affine::DiagonalIFS;
use crate::error::{Error, Result};
use crate::rational::Q;
use crate::symbolic::{cylinder_mass, Word};

use super::SampleMeasure;

/// 𝒟_n in dimension 1 or 2: cells [k2^{-n}, (k+1)2^{-n}) and their products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicPartition {
    pub n: u32,
    pub dim: usize,
}

impl DyadicPartition {
    pub fn new(n: u32, dim: usize) -> Self {
        assert!(dim == 1 || dim == 2, "dimension must be 1 or 2");
        Self { n, dim }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntropyMethod {
    ExactCylinder,
    Sample,
}

impl std::fmt::Display for EntropyMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EntropyMethod::ExactCylinder => "EXACT_CYLINDER",
            EntropyMethod::Sample => "SAMPLE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyReport {
    pub n: u32,
    pub h_bits: f64,
    pub cells: usize,
    pub method: EntropyMethod,
}

impl EntropyReport {
    pub const CSV_HEADER: &'static str = "n,H_bits,cells,method";

    pub fn csv_row(&self) -> String {
        format!("{},{:.12},{},{}", self.n, self.h_bits, self.cells, self.method)
    }
}

/// Masses of occupied dyadic cells at one level, sorted by cell index.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub level: u32,
    pub dim: usize,
    pub cells: Vec<([i64; 2], f64)>,
}

fn plogp_sum(masses: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut total = 0.0;
    let mut s = 0.0;
    for m in masses {
        if m > 0.0 {
            total += m;
            s += m * m.log2();
        }
    }
    (total, s)
}

impl Histogram {
    pub fn from_cells(level: u32, dim: usize, mut cells: Vec<([i64; 2], f64)>) -> Self {
        cells.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<([i64; 2], f64)> = Vec::with_capacity(cells.len());
        for (k, m) in cells {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += m,
                _ => out.push((k, m)),
            }
        }
        out.retain(|c| c.1 > 0.0);
        Self { level, dim, cells: out }
    }

    /// Histogram of a point cloud translated by `t`.
    pub fn from_samples(m: &SampleMeasure, level: u32, t: [f64; 2]) -> Result<Self> {
        let s = (level as f64).exp2();
        let key = |v: f64, tj: f64| -> Result<i64> {
            let a = ((v + tj) * s).floor();
            if !a.is_finite() || a.abs() > 9.0e15 {
                return Err(Error::Domain(format!("coordinate {v} out of range at level {level}")));
            }
            Ok(a as i64)
        };
        match &m.ys {
            None => {
                let keys = m.xs.iter().map(|&x| key(x, t[0])).collect::<Result<Vec<_>>>()?;
                let (lo, hi) = keys.iter().fold((i64::MAX, i64::MIN), |(a, b), &k| (a.min(k), b.max(k)));
                if !keys.is_empty() && ((hi - lo) as u64) < (1 << 24).max(4 * keys.len() as u64) {
                    let mut dense = vec![0.0f64; (hi - lo + 1) as usize];
                    for (k, w) in keys.iter().zip(&m.w) {
                        dense[(k - lo) as usize] += w;
                    }
                    let cells = dense
                        .into_iter()
                        .enumerate()
                        .filter(|c| c.1 > 0.0)
                        .map(|(i, w)| ([lo + i as i64, 0], w))
                        .collect();
                    return Ok(Self { level, dim: 1, cells });
                }
                Ok(Self::from_cells(level, 1, keys.into_iter().zip(m.w.iter().copied()).map(|(k, w)| ([k, 0], w)).collect()))
            }
            Some(ys) => {
                let mut cells = Vec::with_capacity(m.len());
                for i in 0..m.len() {
                    cells.push(([key(m.xs[i], t[0])?, key(ys[i], t[1])?], m.w[i]));
                }
                Ok(Self::from_cells(level, 2, cells))
            }
        }
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().map(|c| c.1).sum()
    }

    /// −Σ m(E) log₂ m(E) after normalizing the total mass to one.
    pub fn entropy(&self) -> f64 {
        let (total, s) = plogp_sum(self.cells.iter().map(|c| c.1));
        if total <= 0.0 {
            return 0.0;
        }
        (total.log2() - s / total).max(0.0)
    }

    /// Aggregates to a coarser level; cell k at level n lies in cell ⌊k/2^{n−m}⌋.
    pub fn coarsen(&self, level: u32) -> Histogram {
        assert!(level <= self.level, "cannot refine a histogram");
        let sh = self.level - level;
        let cells = self.cells.iter().map(|(k, m)| ([k[0] >> sh, k[1] >> sh], *m)).collect();
        Histogram::from_cells(level, self.dim, cells)
    }

    /// H(m, 𝒟_fine | 𝒟_coarse) = Σ_C m(C) H(m_C, 𝒟_fine), computed cell by cell.
    pub fn conditional_entropy(&self, coarse: u32) -> f64 {
        assert!(coarse <= self.level, "coarse level exceeds fine level");
        let sh = self.level - coarse;
        let mut keyed: Vec<([i64; 2], f64)> =
            self.cells.iter().map(|(k, m)| ([k[0] >> sh, k[1] >> sh], *m)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        let total = self.total();
        if total <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut i = 0;
        while i < keyed.len() {
            let mut j = i;
            while j < keyed.len() && keyed[j].0 == keyed[i].0 {
                j += 1;
            }
            let (mc, s) = plogp_sum(keyed[i..j].iter().map(|c| c.1));
            if mc > 0.0 {
                acc += mc * (mc.log2() - s / mc);
            }
            i = j;
        }
        (acc / total).max(0.0)
    }

    /// Mixture Σ p_i h_i of normalized histograms on the same level.
    pub fn mix(parts: &[(f64, &Histogram)]) -> Result<Histogram> {
        let first = parts.first().ok_or_else(|| Error::Empty("mixture of nothing".into()))?.1;
        let mut cells = Vec::new();
        for (p, h) in parts {
            if h.level != first.level || h.dim != first.dim {
                return Err(Error::Domain("mixture components on different partitions".into()));
            }
            let t = h.total();
            cells.extend(h.cells.iter().map(|(k, m)| (*k, p * m / t)));
        }
        Ok(Histogram::from_cells(first.level, first.dim, cells))
    }
}

/// How a planar cylinder measure is read before partitioning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Plane,
    /// π_θ(x, y) = x + 2^θ y.
    Theta(f64),
    Axis(usize),
}

impl Projection {
    pub fn dim(&self) -> usize {
        match self {
            Projection::Plane => 2,
            _ => 1,
        }
    }
}

/// μ = Πμ̄ described by its cylinders. Histograms are computed by refining
/// cylinders until the image of each lies in one dyadic cell, or its sides are
/// at most 2^{-(n+g)}, in which case its mass goes to the cell of Π(w·0^∞).
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderMeasure {
    ifs: DiagonalIFS,
    pub projection: Projection,
    pub guard: u32,
    pub translation: [f64; 2],
}

/// Hard cap on explored cylinders for one histogram.
const NODE_BUDGET: u64 = 2_000_000_000;

impl CylinderMeasure {
    pub fn new(ifs: &DiagonalIFS) -> Self {
        Self { ifs: ifs.clone(), projection: Projection::Plane, guard: 3, translation: [0.0, 0.0] }
    }

    pub fn projected(ifs: &DiagonalIFS, projection: Projection) -> Self {
        Self { projection, ..Self::new(ifs) }
    }

    pub fn with_translation(mut self, t: [f64; 2]) -> Self {
        self.translation = t;
        self
    }

    pub fn ifs(&self) -> &DiagonalIFS {
        &self.ifs
    }

    pub fn mass(&self, w: &Word) -> Result<Q> {
        cylinder_mass(w, self.ifs.weights())
    }

    fn interval(&self, lo: [f64; 2], hi: [f64; 2], t: [f64; 2]) -> ([f64; 2], [f64; 2]) {
        let (lo, hi) = ([lo[0] + t[0], lo[1] + t[1]], [hi[0] + t[0], hi[1] + t[1]]);
        match self.projection {
            Projection::Plane => (lo, hi),
            Projection::Theta(th) => {
                let c = th.exp2();
                ([lo[0] + c * lo[1], 0.0], [hi[0] + c * hi[1], 0.0])
            }
            Projection::Axis(j) => ([lo[j], 0.0], [hi[j], 0.0]),
        }
    }

    fn histogram_at(&self, level: u32, extra: [f64; 2]) -> Result<Histogram> {
        let ifs = &self.ifs;
        let d = self.projection.dim();
        let s = (level as f64).exp2();
        let small = (-(self.guard as f64)).exp2();
        let t = [self.translation[0] + extra[0], self.translation[1] + extra[1]];
        let hull = ifs.hull_rect();
        let x0 = ifs.fixed_point(0);
        let pf = ifs.weights().pf();
        let k = ifs.len();
        let lf: Vec<[f64; 2]> = (0..k).map(|i| ifs.lf(i)).collect();
        let af: Vec<[f64; 2]> = (0..k).map(|i| ifs.af(i)).collect();
        let mut cells: Vec<([i64; 2], f64)> = Vec::new();
        let mut stack: Vec<([f64; 2], [f64; 2], f64)> = vec![([1.0, 1.0], [0.0, 0.0], 1.0)];
        let mut visited: u64 = 0;
        while let Some((lam, off, mass)) = stack.pop() {
            visited += 1;
            if visited > NODE_BUDGET {
                return Err(Error::Domain(format!("cylinder refinement budget exceeded at level {level}")));
            }
            let mut lo = [0.0; 2];
            let mut hi = [0.0; 2];
            for j in 0..2 {
                let a = off[j] + lam[j] * hull.lo[j];
                let b = off[j] + lam[j] * hull.hi[j];
                lo[j] = a.min(b);
                hi[j] = a.max(b);
            }
            let (plo, phi) = self.interval(lo, hi, t);
            let mut key = [0i64; 2];
            let mut contained = true;
            let mut tiny = true;
            for j in 0..d {
                let a = plo[j] * s;
                let b = phi[j] * s;
                let cl = a.floor();
                let ch = (b.ceil() - 1.0).max(cl);
                key[j] = cl as i64;
                contained &= cl == ch;
                tiny &= b - a <= small;
            }
            if contained {
                cells.push((key, mass));
                continue;
            }
            if tiny {
                let anchor = [off[0] + lam[0] * x0[0], off[1] + lam[1] * x0[1]];
                let (pa, _) = self.interval(anchor, anchor, t);
                for j in 0..d {
                    key[j] = (pa[j] * s).floor() as i64;
                }
                cells.push((key, mass));
                continue;
            }
            for i in 0..k {
                stack.push((
                    [lam[0] * lf[i][0], lam[1] * lf[i][1]],
                    [off[0] + lam[0] * af[i][0], off[1] + lam[1] * af[i][1]],
                    mass * pf[i],
                ));
            }
        }
        Ok(Histogram::from_cells(level, d, cells))
    }
}

/// Anything that can be binned into dyadic cells.
pub trait DyadicMeasure {
    fn dim(&self) -> usize;
    fn method(&self) -> EntropyMethod;
    fn histogram_translated(&self, level: u32, t: [f64; 2]) -> Result<Histogram>;

    fn histogram(&self, level: u32) -> Result<Histogram> {
        self.histogram_translated(level, [0.0, 0.0])
    }

    /// Entropies at every level in `levels`, read off one histogram at the
    /// finest level so that coarser levels are exact aggregations.
    fn profile(&self, levels: &[u32]) -> Result<Vec<EntropyReport>> {
        let top = *levels.iter().max().ok_or(Error::TooFewLevels(0))?;
        let h = self.histogram(top)?;
        Ok(levels
            .iter()
            .map(|&n| {
                let c = h.coarsen(n);
                EntropyReport { n, h_bits: c.entropy(), cells: c.cells.len(), method: self.method() }
            })
            .collect())
    }
}

impl DyadicMeasure for SampleMeasure {
    fn dim(&self) -> usize {
        SampleMeasure::dim(self)
    }

    fn method(&self) -> EntropyMethod {
        EntropyMethod::Sample
    }

    fn histogram_translated(&self, level: u32, t: [f64; 2]) -> Result<Histogram> {
        Histogram::from_samples(self, level, t)
    }
}

impl DyadicMeasure for CylinderMeasure {
    fn dim(&self) -> usize {
        self.projection.dim()
    }

    fn method(&self) -> EntropyMethod {
        EntropyMethod::ExactCylinder
    }

    fn histogram_translated(&self, level: u32, t: [f64; 2]) -> Result<Histogram> {
        self.histogram_at(level, t)
    }
}

/// H(m, 𝒟_n).
pub fn entropy<M: DyadicMeasure + ?Sized>(m: &M, part: DyadicPartition) -> Result<EntropyReport> {
    if part.dim != m.dim() {
        return Err(Error::DimensionMismatch { expected: part.dim, found: m.dim() });
    }
    let h = m.histogram(part.n)?;
    Ok(EntropyReport { n: part.n, h_bits: h.entropy(), cells: h.cells.len(), method: m.method() })
}

/// H(m, 𝒟_fine | 𝒟_coarse).
pub fn conditional_entropy<M: DyadicMeasure + ?Sized>(
    m: &M,
    fine: DyadicPartition,
    coarse: DyadicPartition,
) -> Result<f64> {
    if fine.n < coarse.n {
        return Err(Error::Domain(format!("fine level {} below coarse level {}", fine.n, coarse.n)));
    }
    for p in [fine, coarse] {
        if p.dim != m.dim() {
            return Err(Error::DimensionMismatch { expected: p.dim, found: m.dim() });
        }
    }
    Ok(m.histogram(fine.n)?.conditional_entropy(coarse.n))
}

/// Ĥ_n(m) = ∫₀¹ H_n(δ_x * m) dx, discretized with `points` translations
/// x = j 2^{-n}/points along the diagonal.
pub fn translation_averaged_entropy<M: DyadicMeasure + ?Sized>(m: &M, n: u32, points: usize) -> Result<f64> {
    let cell = (-(n as f64)).exp2();
    let mut acc = 0.0;
    for j in 0..points {
        let x = cell * j as f64 / points as f64;
        acc += m.histogram_translated(n, [x, x])?.entropy();
    }
    Ok(acc / points as f64)
}
