//! Measures at finite resolution.
//!
//! [`SampleMeasure`] is a weighted point cloud in one or two dimensions.
//! [`CylinderMeasure`] is the exact symbolic description of μ = Πμ̄ explored to
//! adaptive depth. Entropies are in bits throughout.

mod conditioned;
mod entropy;
mod transport;

pub use conditioned::{sample_conditioned, AxisWindow, Conditioned, ConditionedOptions};
pub use entropy::{
    conditional_entropy, entropy, translation_averaged_entropy, CylinderMeasure, DyadicMeasure, DyadicPartition,
    EntropyMethod, EntropyReport, Histogram, Projection,
};
pub use transport::{hungarian, lp_upper, wasserstein1, wasserstein1_with, W1Options};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::DiagonalIFS;
use crate::error::{Error, Result};

/// A seeded stream; `(seed, stream)` pairs give independent generators.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Weighted point cloud. One-dimensional clouds have `ys == None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeasure {
    pub xs: Vec<f64>,
    pub ys: Option<Vec<f64>>,
    pub w: Vec<f64>,
    pub seed: Option<u64>,
}

impl SampleMeasure {
    pub fn new_1d(xs: Vec<f64>) -> Self {
        let n = xs.len().max(1) as f64;
        let w = vec![1.0 / n; xs.len()];
        Self { xs, ys: None, w, seed: None }
    }

    pub fn new_2d(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len(), "coordinate vectors differ in length");
        let n = xs.len().max(1) as f64;
        let w = vec![1.0 / n; xs.len()];
        Self { xs, ys: Some(ys), w, seed: None }
    }

    pub fn with_weights(mut self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.xs.len() {
            return Err(Error::Domain("weight count differs from point count".into()));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::Domain("weights must be finite and nonnegative".into()));
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptyWindow { mass: 0.0 });
        }
        self.w = w.into_iter().map(|x| x / total).collect();
        Ok(self)
    }

    pub fn dirac(point: &[f64]) -> Self {
        match point {
            [x] => Self::new_1d(vec![*x]),
            [x, y] => Self::new_2d(vec![*x], vec![*y]),
            _ => panic!("dirac needs 1 or 2 coordinates"),
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        if self.ys.is_some() {
            2
        } else {
            1
        }
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        [self.xs[i], self.ys.as_ref().map_or(0.0, |y| y[i])]
    }

    pub fn translate(&self, t: [f64; 2]) -> Self {
        let mut out = self.clone();
        out.xs.iter_mut().for_each(|x| *x += t[0]);
        if let Some(ys) = out.ys.as_mut() {
            ys.iter_mut().for_each(|y| *y += t[1]);
        }
        out
    }

    /// Scales the y-coordinate by 2^θ.
    pub fn scale_y(&self, theta: f64) -> Result<Self> {
        let c = theta.exp2();
        let ys = self.ys.as_ref().ok_or(Error::DimensionMismatch { expected: 2, found: 1 })?;
        Ok(Self { xs: self.xs.clone(), ys: Some(ys.iter().map(|y| c * y).collect()), w: self.w.clone(), seed: self.seed })
    }

    /// `"x[,y],w"` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(if self.dim() == 2 { "x,y,w\n" } else { "x,w\n" });
        for i in 0..self.len() {
            match &self.ys {
                Some(ys) => s.push_str(&format!("{},{},{}\n", self.xs[i], ys[i], self.w[i])),
                None => s.push_str(&format!("{},{}\n", self.xs[i], self.w[i])),
            }
        }
        s
    }

    /// Equal-weight subsample of at most `k` points drawn by weight.
    pub fn subsample(&self, k: usize, seed: u64) -> Self {
        let uniform = self.w.iter().all(|&x| (x - self.w[0]).abs() <= 1e-15);
        if self.len() <= k && uniform {
            return self.clone();
        }
        let mut r = rng(seed, 0x5ab5);
        let idx: Vec<usize> = if uniform {
            let mut all: Vec<usize> = (0..self.len()).collect();
            for i in 0..k.min(all.len()) {
                let j = r.gen_range(i..all.len());
                all.swap(i, j);
            }
            all.truncate(k);
            all
        } else {
            let cdf = cumulative(&self.w);
            (0..k).map(|_| pick(&cdf, r.gen::<f64>())).collect()
        };
        let xs = idx.iter().map(|&i| self.xs[i]).collect();
        let mut out = match &self.ys {
            Some(ys) => Self::new_2d(xs, idx.iter().map(|&i| ys[i]).collect()),
            None => Self::new_1d(xs),
        };
        out.seed = Some(seed);
        out
    }
}

fn cumulative(w: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    w.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

fn pick(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().expect("nonempty");
    cdf.partition_point(|&c| c <= u * total).min(cdf.len() - 1)
}

/// Number of random symbols composed per sample so that the starting point is
/// forgotten to within 2^{-50}.
pub fn sample_depth(ifs: &DiagonalIFS) -> usize {
    let worst = (0..ifs.len())
        .flat_map(|i| [ifs.log2_lambda(0, i), ifs.log2_lambda(1, i)])
        .fold(f64::NEG_INFINITY, f64::max);
    ((50.0 / -worst).ceil() as usize).clamp(1, 4096)
}

/// Independent draws from μ: each point is φ_{w}(x₀) for a fresh random word
/// w of length [`sample_depth`], x₀ the fixed point of map 0.
pub fn sample(ifs: &DiagonalIFS, count: usize, seed: u64) -> Result<SampleMeasure> {
    if count == 0 {
        return Err(Error::Domain("sample count must be positive".into()));
    }
    let depth = sample_depth(ifs);
    let x0 = ifs.fixed_point(0);
    let wts = ifs.weights();
    let lf: Vec<[f64; 2]> = (0..ifs.len()).map(|i| ifs.lf(i)).collect();
    let af: Vec<[f64; 2]> = (0..ifs.len()).map(|i| ifs.af(i)).collect();
    let mut xs = Vec::with_capacity(count);
    let mut ys = Vec::with_capacity(count);
    let mut r = rng(seed, 1);
    let mut syms = vec![0usize; depth];
    for _ in 0..count {
        for s in syms.iter_mut() {
            *s = wts.symbol_for(r.next_u64());
        }
        let mut p = x0;
        for &s in syms.iter().rev() {
            p = [af[s][0] + lf[s][0] * p[0], af[s][1] + lf[s][1] * p[1]];
        }
        xs.push(p[0]);
        ys.push(p[1]);
    }
    let mut m = SampleMeasure::new_2d(xs, ys);
    m.seed = Some(seed);
    Ok(m)
}

/// π_θ(x, y) = x + 2^θ y.
pub fn project_theta(m: &SampleMeasure, theta: f64) -> Result<SampleMeasure> {
    let ys = m.ys.as_ref().ok_or(Error::DimensionMismatch { expected: 2, found: 1 })?;
    let c = theta.exp2();
    let xs = m.xs.iter().zip(ys).map(|(x, y)| x + c * y).collect();
    Ok(SampleMeasure { xs, ys: None, w: m.w.clone(), seed: m.seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        if i == 0 {
            Axis::X
        } else {
            Axis::Y
        }
    }
}

/// Coordinate projection. A one-dimensional input is returned unchanged for
/// `Axis::X`.
pub fn project_axis(m: &SampleMeasure, axis: Axis) -> Result<SampleMeasure> {
    let xs = match (axis, &m.ys) {
        (Axis::X, _) => m.xs.clone(),
        (Axis::Y, Some(ys)) => ys.clone(),
        (Axis::Y, None) => return Err(Error::DimensionMismatch { expected: 2, found: 1 }),
    };
    Ok(SampleMeasure { xs, ys: None, w: m.w.clone(), seed: m.seed })
}

/// Half-open box `[lo, hi)` per axis; one-dimensional windows ignore index 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Window {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { lo: [lo, f64::NEG_INFINITY], hi: [hi, f64::INFINITY] }
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self { lo, hi }
    }

    fn contains(&self, p: [f64; 2], dim: usize) -> bool {
        (0..dim).all(|j| p[j] >= self.lo[j] && p[j] < self.hi[j])
    }
}

/// μ_B = μ(B)^{-1} μ|_B, mapped affinely per axis onto [−1,1]^d.
pub fn restrict_rescale(m: &SampleMeasure, window: &Window) -> Result<SampleMeasure> {
    let d = m.dim();
    let keep: Vec<usize> = (0..m.len()).filter(|&i| m.w[i] > 0.0 && window.contains(m.point(i), d)).collect();
    let mass: f64 = keep.iter().map(|&i| m.w[i]).sum();
    if keep.is_empty() || mass <= 0.0 {
        return Err(Error::EmptyWindow { mass: 0.0 });
    }
    let map = |v: f64, j: usize| 2.0 * (v - window.lo[j]) / (window.hi[j] - window.lo[j]) - 1.0;
    let xs = keep.iter().map(|&i| map(m.xs[i], 0)).collect();
    let w = keep.iter().map(|&i| m.w[i] / mass).collect();
    let ys = m.ys.as_ref().map(|ys| keep.iter().map(|&i| map(ys[i], 1)).collect());
    Ok(SampleMeasure { xs, ys, w, seed: m.seed })
}

/// Independent coupling of two one-dimensional clouds by seeded resampling;
/// the result has min(|mx|, |my|) equally weighted points.
pub fn product(mx: &SampleMeasure, my: &SampleMeasure, seed: u64) -> Result<SampleMeasure> {
    if mx.is_empty() || my.is_empty() {
        return Err(Error::Empty("product of an empty measure".into()));
    }
    if mx.dim() != 1 || my.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: 2 });
    }
    let n = mx.len().min(my.len());
    let (cx, cy) = (cumulative(&mx.w), cumulative(&my.w));
    let mut r = rng(seed, 0x9d);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        xs.push(mx.xs[pick(&cx, r.gen::<f64>())]);
        ys.push(my.xs[pick(&cy, r.gen::<f64>())]);
    }
    let mut out = SampleMeasure::new_2d(xs, ys);
    out.seed = Some(seed);
    Ok(out)
}
