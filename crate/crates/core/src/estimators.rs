//! Experiments: entropy dimension, local entropy averages, the product
//! structure of magnifications, uniform projection entropy and the verdict
//! table for the projection theorem.

use std::fmt;
use std::str::FromStr;

use num::Zero;
use serde::Serialize;

use crate::affine::{irrationality_condition, lyapunov, DiagonalIFS, Regime};
use crate::error::{Error, Result};
use crate::measures::{
    entropy, project_axis, project_theta, sample, sample_conditioned, wasserstein1_with, AxisWindow, Axis,
    ConditionedOptions, CylinderMeasure, DyadicMeasure, DyadicPartition, EntropyReport, Histogram, SampleMeasure,
    W1Options,
};
use crate::partitions::{approx_square, magnify_conditioned, strip_frame};
use crate::rational::Q;
use crate::slices::slice_conditioned;
use crate::symbolic::SymbolSeq;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub n_min: u32,
    pub n_max: u32,
    pub levels: Vec<EntropyReport>,
    /// Standard error of the slope.
    pub stderr: f64,
}

impl DimEstimate {
    pub const CSV_HEADER: &'static str = "n,H_bits,cells,method";

    /// Per-level `level,value` pairs for plotting.
    pub fn series(&self) -> Vec<(u32, f64)> {
        self.levels.iter().map(|r| (r.n, r.h_bits)).collect()
    }
}

/// Least-squares slope of H_n against n over [n_min, n_max].
///
/// For sample measures keep n_max ≤ log₂(samples/100).
pub fn entropy_dimension<M: DyadicMeasure + ?Sized>(m: &M, n_min: u32, n_max: u32) -> Result<DimEstimate> {
    if n_max < n_min || n_max - n_min + 1 < 3 {
        return Err(Error::TooFewLevels((n_max + 1).saturating_sub(n_min) as usize));
    }
    let levels: Vec<u32> = (n_min..=n_max).collect();
    let reports = m.profile(&levels)?;
    let k = reports.len() as f64;
    let mx = reports.iter().map(|r| r.n as f64).sum::<f64>() / k;
    let my = reports.iter().map(|r| r.h_bits).sum::<f64>() / k;
    let sxx: f64 = reports.iter().map(|r| (r.n as f64 - mx).powi(2)).sum();
    let sxy: f64 = reports.iter().map(|r| (r.n as f64 - mx) * (r.h_bits - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = reports.iter().map(|r| (r.h_bits - intercept - slope * r.n as f64).powi(2)).sum();
    let stderr = (rss / (k - 2.0) / sxx).sqrt();
    Ok(DimEstimate { slope, intercept, n_min, n_max, levels: reports, stderr })
}

/// Largest level the sample-size rule allows: 2^n cells with 100 points each.
pub fn sample_level_cap(samples: usize) -> u32 {
    (samples as f64 / 100.0).log2().floor().max(0.0) as u32
}

/// A projection direction: π_θ(x, y) = x + 2^θ y for finite θ, or one of the
/// coordinate axes. The axes are principal and never arise from a finite θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Theta(f64),
    X,
    Y,
}

impl Target {
    pub fn is_principal(self) -> bool {
        !matches!(self, Target::Theta(_))
    }

    pub fn apply(self, m: &SampleMeasure) -> Result<SampleMeasure> {
        match self {
            Target::Theta(t) => project_theta(m, t),
            Target::X => project_axis(m, Axis::X),
            Target::Y => project_axis(m, Axis::Y),
        }
    }
}

impl Target {
    /// As [`Target::apply`], with π_θ divided by max(1, 2^θ) so that it is
    /// 1-Lipschitz in each coordinate.
    pub fn apply_unit(self, m: &SampleMeasure) -> Result<SampleMeasure> {
        let mut p = self.apply(m)?;
        if let Target::Theta(t) = self {
            let c = 1.0 / t.exp2().max(1.0);
            p.xs.iter_mut().for_each(|x| *x *= c);
        }
        Ok(p)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Theta(t) => write!(f, "{t}"),
            Target::X => f.write_str("x"),
            Target::Y => f.write_str("y"),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" => Ok(Target::X),
            "y" => Ok(Target::Y),
            t => {
                let v: f64 = t.parse().map_err(|_| Error::Parse(format!("bad projection target {t:?}")))?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!("θ must be finite, got {t}")));
                }
                Ok(Target::Theta(v))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaOptions {
    /// Points per magnified square.
    pub samples: usize,
    pub conditioned: ConditionedOptions,
}

impl Default for LeaOptions {
    fn default() -> Self {
        Self { samples: 1 << 18, conditioned: ConditionedOptions { particles: 1 << 17, ..ConditionedOptions::default() } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LEAReport {
    pub target: String,
    pub big_n: u32,
    pub n: u32,
    pub trials: usize,
    pub average: f64,
    /// Mean over trials of (1/N)H_N(π S_{kN}Πμ̄_{E_{kN}(𝚒)}), k = 1..=n.
    pub components: Vec<f64>,
    pub regime: Regime,
    pub irrationality: bool,
}

impl LEAReport {
    pub const CSV_HEADER: &'static str = "theta,N,k,component";

    pub fn csv_rows(&self) -> Vec<String> {
        self.components
            .iter()
            .enumerate()
            .map(|(k, c)| format!("{},{},{},{:.6}", self.target, self.big_n, k + 1, c))
            .collect()
    }
}

/// Local entropy averages for several targets over the same magnified squares.
pub fn local_entropy_averages(
    ifs: &DiagonalIFS,
    targets: &[Target],
    big_n: u32,
    n: u32,
    trials: usize,
    seed: u64,
    opts: LeaOptions,
) -> Result<Vec<LEAReport>> {
    if big_n == 0 || n == 0 || trials == 0 {
        return Err(Error::Domain("N, n and trials must be positive".into()));
    }
    let irrational = irrationality_condition(ifs).map(|c| c.is_satisfied()).unwrap_or(false);
    let regime = lyapunov(ifs).regime;
    let zero = [Q::zero(), Q::zero()];
    let mut sums = vec![vec![0.0; n as usize]; targets.len()];
    for trial in 0..trials {
        let s = SymbolSeq::sampled(ifs.weights(), seed.wrapping_add(trial as u64));
        for k in 1..=n {
            let sq = approx_square(&s, k * big_n, ifs, &zero).map_err(|e| e.at(k as usize))?;
            let sub = seed ^ ((trial as u64) << 20) ^ k as u64;
            let mag = magnify_conditioned(&sq, ifs, opts.samples, sub, opts.conditioned).map_err(|e| e.at(k as usize))?;
            for (t, target) in targets.iter().enumerate() {
                let p = target.apply_unit(&mag.measure)?;
                sums[t][k as usize - 1] += entropy(&p, DyadicPartition::new(big_n, 1))?.h_bits / big_n as f64;
            }
        }
    }
    Ok(targets
        .iter()
        .zip(sums)
        .map(|(t, s)| {
            let components: Vec<f64> = s.iter().map(|v| v / trials as f64).collect();
            LEAReport {
                target: t.to_string(),
                big_n,
                n,
                trials,
                average: components.iter().sum::<f64>() / n as f64,
                components,
                regime,
                irrationality: irrational,
            }
        })
        .collect())
}

pub fn local_entropy_average(ifs: &DiagonalIFS, target: Target, big_n: u32, n: u32, trials: usize, seed: u64) -> Result<LEAReport> {
    Ok(local_entropy_averages(ifs, &[target], big_n, n, trials, seed, LeaOptions::default())?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductOptions {
    pub samples: usize,
    pub conditioned: ConditionedOptions,
}

impl Default for ProductOptions {
    fn default() -> Self {
        Self { samples: 2048, conditioned: ConditionedOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductRow {
    pub n: u32,
    pub trial: usize,
    pub w1: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductTable {
    pub big_n: u32,
    pub rows: Vec<ProductRow>,
    /// (n, median W1 over the trials that succeeded).
    pub medians: Vec<(u32, f64)>,
}

impl ProductTable {
    pub const CSV_HEADER: &'static str = "n,trial,w1,error";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{}",
                    r.n,
                    r.trial,
                    r.w1.map_or("NA".to_string(), |w| format!("{w:.6}")),
                    r.error.as_deref().unwrap_or("").replace(',', ";")
                )
            })
            .collect()
    }

    pub fn median(&self, n: u32) -> Option<f64> {
        self.medians.iter().find(|m| m.0 == n).map(|m| m.1)
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// One magnification against its matched product, both in the frame of
/// E_{nN}(𝚒). With a the tube axis and b the other, the product takes its
/// a-coordinates from μ on the tube strip and its b-coordinates from μ on a
/// thin a-column through Π(σ^k𝚒), k the length of the square's word. The
/// column is clipped to the b-window when there is one.
fn product_residual(ifs: &DiagonalIFS, s: &SymbolSeq, level: u32, seed: u64, opts: ProductOptions) -> Result<f64> {
    let sq = approx_square(s, level, ifs, &[Q::zero(), Q::zero()])?;
    let frame = strip_frame(&sq, ifs);
    let a = sq.tube.axis;
    let b = 1 - a;
    let wa = frame.windows[a].ok_or_else(|| Error::Domain("square has no tube window".into()))?;
    let mag = sample_conditioned(ifs, frame.windows, opts.samples, seed, opts.conditioned)?;
    let mut strip = [None, None];
    strip[a] = Some(wa);
    let first = sample_conditioned(ifs, strip, opts.samples, seed ^ 0xa5, opts.conditioned)?;
    let a0 = ifs.project_seq(&s.shift(sq.word.len()))[a];
    let h = (wa.width / 16.0).max(4e-13 * (1.0 + a0.abs()));
    let mut column = [None, None];
    column[a] = Some(AxisWindow { lo: a0 - h, width: 2.0 * h });
    column[b] = frame.windows[b];
    let second = sample_conditioned(ifs, column, opts.samples, seed ^ 0x5a, opts.conditioned)?;
    let image = |pts: &mut dyn Iterator<Item = [f64; 2]>| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.map(|p| {
            let q = frame.image(p);
            (q[0], q[1])
        }).unzip();
        SampleMeasure::new_2d(xs, ys)
    };
    let m = image(&mut mag.points.iter().copied());
    let p = image(&mut first.points.iter().zip(&second.points).map(|(u, v)| {
        let mut q = [0.0; 2];
        q[a] = u[a];
        q[b] = v[b];
        q
    }));
    wasserstein1_with(&m, &p, W1Options { max_points: opts.samples, seed })
}

/// W1 between S_{nN}Πμ̄_{E_{nN}(𝚒)} and its matched product for each n in
/// `n_list` and each trial. The tube axis of each square selects which
/// coordinate is conditioned, so dominant and equal regimes share one path.
pub fn product_structure_test(
    ifs: &DiagonalIFS,
    big_n: u32,
    n_list: &[u32],
    trials: usize,
    seed: u64,
    opts: ProductOptions,
) -> Result<ProductTable> {
    if big_n == 0 || n_list.is_empty() || trials == 0 {
        return Err(Error::Domain("N, the n list and trials must be nonempty".into()));
    }
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for &n in n_list {
        let mut ok = Vec::new();
        for trial in 0..trials {
            let s = SymbolSeq::sampled(ifs.weights(), seed.wrapping_add(trial as u64));
            let sub = seed ^ ((trial as u64) << 24) ^ n as u64;
            match product_residual(ifs, &s, n * big_n, sub, opts) {
                Ok(w) => {
                    ok.push(w);
                    rows.push(ProductRow { n, trial, w1: Some(w), error: None });
                }
                Err(e) => rows.push(ProductRow { n, trial, w1: None, error: Some(e.to_string()) }),
            }
        }
        if !ok.is_empty() {
            medians.push((n, median(&mut ok)));
        }
    }
    Ok(ProductTable { big_n, rows, medians })
}

/// 0, 2^{-step_bits}, …, M.
pub fn theta_grid(m: f64, step_bits: u32) -> Vec<f64> {
    let step = (-(step_bits as f64)).exp2();
    let k = (m / step).floor() as usize;
    (0..=k).map(|i| i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformityOptions {
    pub samples: usize,
    /// Column level of the slices.
    pub slice_level: u32,
}

impl Default for UniformityOptions {
    fn default() -> Self {
        Self { samples: 1 << 17, slice_level: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub big_n: u32,
    pub thetas: Vec<f64>,
    /// Per θ, the minimum over bases of (1/N)H_N(π_θ(π_xμ × μ_𝚒)).
    pub values: Vec<f64>,
    pub min: f64,
    pub argmin: f64,
    /// Largest |ΔH_N| in bits between adjacent grid points, over all bases.
    pub max_jump: f64,
}

impl UniformityReport {
    pub const CSV_HEADER: &'static str = "theta,H_over_N";

    pub fn csv_rows(&self) -> Vec<String> {
        self.thetas.iter().zip(&self.values).map(|(t, v)| format!("{t},{v:.6}")).collect()
    }
}

/// The minimum of (1/N)H_N(π_θ(π_xμ × μ_𝚒)) over the grid and over `bases`
/// sampled sequences. Grid steps must not exceed 2^{-N}.
pub fn uniform_projection_entropy(
    ifs: &DiagonalIFS,
    thetas: &[f64],
    big_n: u32,
    bases: usize,
    seed: u64,
    opts: UniformityOptions,
) -> Result<UniformityReport> {
    if thetas.is_empty() || bases == 0 {
        return Err(Error::Domain("empty θ grid or no bases".into()));
    }
    let step = (-(big_n as f64)).exp2();
    if thetas.windows(2).any(|w| w[1] - w[0] > step * (1.0 + 1e-12) || w[1] <= w[0]) {
        return Err(Error::Domain(format!("θ grid must increase in steps of at most 2^-{big_n}")));
    }
    let xs = project_axis(&sample(ifs, opts.samples, seed)?, Axis::X)?;
    let mut values = vec![f64::INFINITY; thetas.len()];
    let mut max_jump = 0.0f64;
    for b in 0..bases {
        let base = SymbolSeq::sampled(ifs.weights(), seed.wrapping_add(1 + b as u64));
        let sl = slice_conditioned(ifs, &base, opts.slice_level, opts.samples, seed ^ (0x51 + b as u64))?;
        let prod = crate::measures::product(&xs, &SampleMeasure::new_1d(sl.ys), seed ^ (0x77 + b as u64))?;
        let mut prev: Option<f64> = None;
        for (i, &t) in thetas.iter().enumerate() {
            let h = Histogram::from_samples(&project_theta(&prod, t)?, big_n, [0.0, 0.0])?.entropy();
            values[i] = values[i].min(h / big_n as f64);
            if let Some(p) = prev {
                max_jump = max_jump.max((h - p).abs());
            }
            prev = Some(h);
        }
    }
    let (i, &min) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    Ok(UniformityReport { big_n, thetas: thetas.to_vec(), min, argmin: thetas[i], values, max_jump })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
    ExpectedFailurePrincipal,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotApplicable => "NOT_APPLICABLE",
            Verdict::ExpectedFailurePrincipal => "EXPECTED_FAILURE_PRINCIPAL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaConfig {
    pub big_n: u32,
    pub n: u32,
    pub trials: usize,
    pub opts: LeaOptions,
}

impl Default for LeaConfig {
    fn default() -> Self {
        Self { big_n: 12, n: 6, trials: 4, opts: LeaOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    /// Exact-method level window for dim̂μ.
    pub mu_levels: (u32, u32),
    /// Direct samples of μ for dim̂π_θμ; levels run from 4 to the sample-size cap.
    pub proj_samples: usize,
    pub tolerance: f64,
    pub lea: Option<LeaConfig>,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { mu_levels: (6, 12), proj_samples: 1 << 20, tolerance: 0.1, lea: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictRow {
    pub target: String,
    pub dim_proj: f64,
    pub dim_mu: f64,
    pub min1: f64,
    pub defect: f64,
    pub lea_bound: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictTable {
    pub irrationality: bool,
    pub regime: Regime,
    pub rows: Vec<VerdictRow>,
}

impl VerdictTable {
    pub const CSV_HEADER: &'static str = "theta,dim_proj,dim_mu,min1,defect,lea_bound,verdict";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{:.6},{:.6},{:.6},{:.6},{},{}",
                    r.target,
                    r.dim_proj,
                    r.dim_mu,
                    r.min1,
                    r.defect,
                    r.lea_bound.map_or("NA".to_string(), |v| format!("{v:.6}")),
                    r.verdict
                )
            })
            .collect()
    }
}

/// Per target: dim̂ of the projection by direct sampling against
/// min{1, dim̂μ}, with the local entropy average as corroboration for finite θ.
pub fn verify_main_theorem(ifs: &DiagonalIFS, targets: &[Target], config: &VerifyConfig) -> Result<VerdictTable> {
    let irrational = irrationality_condition(ifs)?.is_satisfied();
    let regime = lyapunov(ifs).regime;
    let dim_mu = entropy_dimension(&CylinderMeasure::new(ifs), config.mu_levels.0, config.mu_levels.1)?.slope;
    let min1 = dim_mu.min(1.0);
    let pool = sample(ifs, config.proj_samples, config.seed)?;
    let top = sample_level_cap(config.proj_samples);
    let finite: Vec<Target> = targets.iter().copied().filter(|t| !t.is_principal()).collect();
    let leas = match config.lea {
        Some(l) if !finite.is_empty() => local_entropy_averages(ifs, &finite, l.big_n, l.n, l.trials, config.seed, l.opts)?,
        _ => Vec::new(),
    };
    let mut rows = Vec::with_capacity(targets.len());
    for t in targets {
        let dim_proj = entropy_dimension(&t.apply(&pool)?, 4, top)?.slope;
        let defect = (dim_proj - min1).abs();
        let lea_bound = leas.iter().find(|r| r.target == t.to_string()).map(|r| r.average);
        let verdict = if !irrational {
            Verdict::NotApplicable
        } else if defect <= config.tolerance {
            Verdict::Pass
        } else if t.is_principal() {
            Verdict::ExpectedFailurePrincipal
        } else {
            Verdict::Fail
        };
        rows.push(VerdictRow { target: t.to_string(), dim_proj, dim_mu, min1, defect, lea_bound, verdict });
    }
    Ok(VerdictTable { irrationality: irrational, regime, rows })
}
