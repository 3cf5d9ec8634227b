//! Conditional measures of μ on vertical lines, approximated by conditioning
//! on columns of width 2^{1−L} around π_xΠ(𝚒).

use serde::Serialize;

use crate::affine::DiagonalIFS;
use crate::error::{Error, Result};
use crate::estimators::entropy_dimension;
use crate::measures::{
    sample, sample_conditioned, wasserstein1, AxisWindow, ConditionedOptions, CylinderMeasure, Projection,
    SampleMeasure,
};
use crate::rational::to_f64;
use crate::symbolic::{Symbol, SymbolSeq};

/// Fewest column points accepted by [`slice`].
pub const MIN_COLUMN_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SliceMeasure {
    pub base: SymbolSeq,
    pub level: u32,
    pub x0: f64,
    /// Raw y-coordinates of the retained points.
    pub ys: Vec<f64>,
    /// The same points mapped affinely from the hull's y-range onto [−1, 1].
    pub measure: SampleMeasure,
}

/// The affine map taking the hull's y-range onto [−1, 1].
pub fn y_rescale(ifs: &DiagonalIFS) -> impl Fn(f64) -> f64 {
    let (lo, hi) = ifs.hull(1);
    let (lo, hi) = (to_f64(lo), to_f64(hi));
    let w = if hi > lo { hi - lo } else { 1.0 };
    move |y| 2.0 * (y - lo) / w - 1.0
}

fn build(ifs: &DiagonalIFS, base: &SymbolSeq, level: u32, x0: f64, ys: Vec<f64>) -> SliceMeasure {
    let r = y_rescale(ifs);
    let measure = SampleMeasure::new_1d(ys.iter().map(|&y| r(y)).collect());
    SliceMeasure { base: base.clone(), level, x0, ys, measure }
}

/// μ_𝚒 from a pool: the y-coordinates of pool points with |x − π_xΠ(𝚒)| ≤ 2^{−L}.
pub fn slice(ifs: &DiagonalIFS, base: &SymbolSeq, level: u32, pool: &SampleMeasure) -> Result<SliceMeasure> {
    let pys = pool.ys.as_ref().ok_or(Error::DimensionMismatch { expected: 2, found: 1 })?;
    let x0 = ifs.project_seq(base)[0];
    let h = (-(level as f64)).exp2();
    let ys: Vec<f64> = pool.xs.iter().zip(pys).filter(|(x, _)| (*x - x0).abs() <= h).map(|(_, &y)| y).collect();
    if ys.len() < MIN_COLUMN_POINTS {
        return Err(Error::ThinColumn { count: ys.len() });
    }
    Ok(build(ifs, base, level, x0, ys))
}

/// μ_𝚒 sampled directly from μ conditioned on the column, for columns too
/// thin to populate from an iid pool.
pub fn slice_conditioned(ifs: &DiagonalIFS, base: &SymbolSeq, level: u32, count: usize, seed: u64) -> Result<SliceMeasure> {
    let x0 = ifs.project_seq(base)[0];
    let h = (-(level as f64)).exp2();
    let win = AxisWindow { lo: x0 - h, width: 2.0 * h };
    // One particle per requested point, so that the points do not share
    // ancestors in the symbols the column leaves free.
    let opts = ConditionedOptions { particles: count.max(ConditionedOptions::default().particles), ..Default::default() };
    let c = sample_conditioned(ifs, [Some(win), None], count, seed, opts)?;
    Ok(build(ifs, base, level, x0, c.points.iter().map(|p| p[1]).collect()))
}

/// W1 between conditioned slices at consecutive column levels, as `(L, W1(μ_𝚒^L, μ_𝚒^{L+1}))`.
pub fn cauchy_in_level(ifs: &DiagonalIFS, base: &SymbolSeq, levels: &[u32], count: usize, seed: u64) -> Result<Vec<(u32, f64)>> {
    let slices = levels
        .iter()
        .map(|&l| slice_conditioned(ifs, base, l, count, seed ^ l as u64))
        .collect::<Result<Vec<_>>>()?;
    slices.windows(2).map(|p| Ok((p[0].level, wasserstein1(&p[0].measure, &p[1].measure)?))).collect()
}

/// Checks Π(μ̄_𝚒)_{[i]} = φ_i(δ × μ_{σ𝚒}) with i = 𝚒₁: the part of the slice at 𝚒
/// inside φ_i's y-range, pulled back through φ_i, against the slice at σ𝚒.
/// Both columns are drawn from `pool`; at most `samples` points of each enter
/// the comparison.
pub fn dynamical_self_similarity_check(
    ifs: &DiagonalIFS,
    base: &SymbolSeq,
    level: u32,
    pool: &SampleMeasure,
    samples: usize,
) -> Result<f64> {
    let i: Symbol = base.symbol(0);
    let here = slice(ifs, base, level, pool)?;
    let next = slice(ifs, &base.shift(1), level, pool)?;
    let (hlo, hhi) = ifs.hull(1);
    let l = to_f64(ifs.lambda(1, i));
    let a = ifs.af(i)[1];
    let (e0, e1) = (a + l * to_f64(hlo), a + l * to_f64(hhi));
    let (lo, hi) = (e0.min(e1), e0.max(e1));
    let r = y_rescale(ifs);
    let pulled: Vec<f64> = here.ys.iter().filter(|&&y| y >= lo && y <= hi).map(|&y| r((y - a) / l)).collect();
    if pulled.is_empty() {
        return Err(Error::EmptyWindow { mass: 0.0 });
    }
    let cap = |v: SampleMeasure| if v.len() > samples { v.subsample(samples, 17) } else { v };
    wasserstein1(&cap(SampleMeasure::new_1d(pulled)), &cap(next.measure))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationRow {
    pub trial: usize,
    pub dim2d: f64,
    pub dimx: f64,
    pub dimslice: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    pub rows: Vec<ConservationRow>,
    pub dim2d: f64,
    pub dimx: f64,
    pub mean_slice: f64,
    /// |dim̂μ − dim̂π_xμ − mean dim̂μ_x|.
    pub defect: f64,
}

impl ConservationReport {
    pub const CSV_HEADER: &'static str = "trial,dim2d,dimx,dimslice,defect";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| format!("{},{:.6},{:.6},{:.6},{:.6}", r.trial, r.dim2d, r.dimx, r.dimslice, r.defect))
            .collect()
    }
}

/// Exact-method slopes for μ and π_xμ over levels [n−4, n]; sampled slopes
/// for `trials` conditioned slices at column level L with `samples` points
/// each, over levels [4, log₂(samples/100)].
pub fn dimension_conservation_check(
    ifs: &DiagonalIFS,
    trials: usize,
    level: u32,
    n: u32,
    samples: usize,
    seed: u64,
) -> Result<ConservationReport> {
    if n < 6 {
        return Err(Error::TooFewLevels(n as usize));
    }
    let lo = n - 4;
    let dim2d = entropy_dimension(&CylinderMeasure::new(ifs), lo, n)?.slope;
    let dimx = entropy_dimension(&CylinderMeasure::projected(ifs, Projection::Axis(0)), lo, n)?.slope;
    let top = ((samples as f64 / 100.0).log2().floor() as u32).min(n.max(6));
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let base = SymbolSeq::sampled(ifs.weights(), seed.wrapping_add(trial as u64));
        let s = slice_conditioned(ifs, &base, level, samples, seed ^ (0x9e37 + trial as u64))?;
        let dimslice = entropy_dimension(&s.measure, 4, top)?.slope;
        rows.push(ConservationRow { trial, dim2d, dimx, dimslice, defect: (dim2d - dimx - dimslice).abs() });
    }
    let mean_slice = rows.iter().map(|r| r.dimslice).sum::<f64>() / rows.len().max(1) as f64;
    Ok(ConservationReport { rows, dim2d, dimx, mean_slice, defect: (dim2d - dimx - mean_slice).abs() })
}

/// Reassembles ∫ δ_{π_xΠ(𝚒)} × μ_𝚒 dμ̄(𝚒): for each of `bases` sampled
/// sequences, `per_base` points of its slice placed on its vertical line.
pub fn reassemble(ifs: &DiagonalIFS, bases: usize, per_base: usize, level: u32, pool: &SampleMeasure, seed: u64) -> Result<SampleMeasure> {
    let mut xs = Vec::with_capacity(bases * per_base);
    let mut ys = Vec::with_capacity(bases * per_base);
    for b in 0..bases {
        let base = SymbolSeq::sampled(ifs.weights(), seed.wrapping_add(b as u64));
        let s = slice(ifs, &base, level, pool)?;
        let pick = SampleMeasure::new_1d(s.ys.clone()).subsample(per_base, seed ^ b as u64);
        for &y in &pick.xs {
            xs.push(s.x0);
            ys.push(y);
        }
    }
    Ok(SampleMeasure::new_2d(xs, ys))
}

/// A fresh pool of `count` points of μ.
pub fn pool(ifs: &DiagonalIFS, count: usize, seed: u64) -> Result<SampleMeasure> {
    sample(ifs, count, seed)
}
