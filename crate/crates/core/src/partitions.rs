//! Approximate squares E_n(𝚒), their interior families, magnifications, and
//! the θ-eccentric rectangles F_ℓ^θ.
//!
//! At level n the cylinder is the first prefix 𝚒|_k whose shorter side
//! min(|λ₁|, |λ₂|) drops to 2^{-n}. If that side is the width (|λ₂| ≥ |λ₁|,
//! ties included) the cylinder is cut by a horizontal dyadic tube of height
//! 2^{-n} (regime a), otherwise by a vertical one (regime b). The join with
//! E_{n−1} keeps every earlier tube; on the tube's own axis they are coarser,
//! so only the finest earlier tube on the other axis can clip.

use std::cmp::Ordering;
use std::fmt;

use num::{BigInt, One, Signed, Zero};

use crate::affine::DiagonalIFS;
use crate::error::{Error, Result};
use crate::measures::{sample_conditioned, AxisWindow, ConditionedOptions, SampleMeasure};
use crate::rational::{log2_abs, to_f64, Q};
use crate::symbolic::{stopping_time_kappa, stopping_time_tau, SymbolSeq, Word, MAX_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquareRegime {
    /// |λ₂(w)| ≥ |λ₁(w)|: width ≈ 2^{-n}, horizontal tube.
    A,
    /// |λ₁(w)| > |λ₂(w)|: height ≈ 2^{-n}, vertical tube.
    B,
}

impl SquareRegime {
    /// Axis along which the tube constrains points (1 = y for regime a).
    pub fn tube_axis(self) -> usize {
        match self {
            SquareRegime::A => 1,
            SquareRegime::B => 0,
        }
    }
}

impl fmt::Display for SquareRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SquareRegime::A => "a",
            SquareRegime::B => "b",
        })
    }
}

/// {z : z_axis + shift ∈ [index·2^{-level}, (index+1)·2^{-level})}.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    pub axis: usize,
    pub level: u32,
    pub index: BigInt,
    pub shift: Q,
}

impl Tube {
    pub fn width(&self) -> Q {
        Q::new(BigInt::one(), BigInt::one() << self.level as usize)
    }

    pub fn lo(&self) -> Q {
        Q::from_integer(self.index.clone()) * self.width() - &self.shift
    }

    pub fn hi(&self) -> Q {
        self.lo() + self.width()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxSquare {
    pub level: u32,
    pub regime: SquareRegime,
    pub word: Word,
    pub tube: Tube,
    /// Finest earlier tube on the other axis.
    pub clip: Option<Tube>,
}

/// Stopping index and regime for each level 1..=n.
pub fn square_regimes(s: &SymbolSeq, n: u32, ifs: &DiagonalIFS) -> Result<Vec<(usize, SquareRegime)>> {
    let one = ifs.mag_one();
    let mut m = [ifs.mag_one(), ifs.mag_one()];
    let mut it = s.iter();
    let mut k = 0usize;
    let mut out = Vec::with_capacity(n as usize);
    for level in 1..=n as i64 {
        while ifs.mag_cmp(&m[0], &one, -level) == Ordering::Greater && ifs.mag_cmp(&m[1], &one, -level) == Ordering::Greater
        {
            if k >= MAX_DEPTH {
                return Err(Error::Domain(format!("stopping time exceeded depth {MAX_DEPTH}")));
            }
            let sym = it.next().expect("infinite sequence");
            ifs.mag_mul(&mut m[0], 0, sym);
            ifs.mag_mul(&mut m[1], 1, sym);
            k += 1;
        }
        let r = match ifs.mag_cmp(&m[1], &m[0], 0) {
            Ordering::Less => SquareRegime::B,
            _ => SquareRegime::A,
        };
        out.push((k, r));
    }
    Ok(out)
}

fn floor_scaled(x: &Q, level: u32) -> BigInt {
    (x * Q::from_integer(BigInt::one() << level as usize)).floor().to_integer()
}

/// π_axis Π(s) exactly, for eventually periodic s.
fn exact_point(s: &SymbolSeq, axis: usize, ifs: &DiagonalIFS) -> Option<Q> {
    let SymbolSeq::Periodic { pre, period } = s else { return None };
    let (lp, op) = ifs.word_map(&Word(period.clone()));
    let fixed = &op[axis] / (Q::one() - &lp[axis]);
    let (l0, o0) = ifs.word_map(&Word(pre.clone()));
    Some(&o0[axis] + &l0[axis] * fixed)
}

/// Index of the level-`level` dyadic cell containing π_axis Π(s) + shift.
pub fn dyadic_index(s: &SymbolSeq, axis: usize, level: u32, shift: &Q, ifs: &DiagonalIFS) -> Result<BigInt> {
    if let Some(x) = exact_point(s, axis, ifs) {
        return Ok(floor_scaled(&(x + shift), level));
    }
    let (hlo, hhi) = ifs.hull(axis).clone();
    let wlog = log2_abs(&(&hhi - &hlo));
    let mut lam = Q::one();
    let mut off = Q::zero();
    let mut last = None;
    for (k, sym) in s.iter().enumerate() {
        let size = log2_abs(&lam) + wlog;
        if !(size > -(level as f64) - 2.0) {
            let a = &off + &lam * &hlo + shift;
            let b = &off + &lam * &hhi + shift;
            let (fa, fb) = (floor_scaled(&a, level), floor_scaled(&b, level));
            if fa == fb {
                return Ok(fa);
            }
            // Π(s) sits on a cell boundary to within 2^{-level-200}.
            if size < -(level as f64) - 200.0 {
                return Ok(fa.max(fb));
            }
            last = Some(fa);
        }
        if k >= MAX_DEPTH {
            break;
        }
        let map = &ifs.maps()[sym];
        off += &lam * &map.a[axis];
        lam *= &map.lambda[axis];
    }
    last.ok_or_else(|| Error::Domain("projection did not resolve".into()))
}

/// E_n(s) with dyadic grids shifted by `translation`.
pub fn approx_square(s: &SymbolSeq, n: u32, ifs: &DiagonalIFS, translation: &[Q; 2]) -> Result<ApproxSquare> {
    if n == 0 {
        return Err(Error::Domain("approximate squares start at level 1".into()));
    }
    let regs = square_regimes(s, n, ifs)?;
    let (k, regime) = regs[n as usize - 1];
    let axis = regime.tube_axis();
    let tube = Tube { axis, level: n, index: dyadic_index(s, axis, n, &translation[axis], ifs)?, shift: translation[axis].clone() };
    let clip = match regs[..n as usize - 1].iter().rposition(|r| r.1 != regime) {
        None => None,
        Some(m) => {
            let level = m as u32 + 1;
            let ax = 1 - axis;
            Some(Tube { axis: ax, level, index: dyadic_index(s, ax, level, &translation[ax], ifs)?, shift: translation[ax].clone() })
        }
    };
    Ok(ApproxSquare { level: n, regime, word: s.prefix(k), tube, clip })
}

fn closed_intersect(a: (Q, Q), b: (Q, Q)) -> Option<(Q, Q)> {
    let lo = if a.0 > b.0 { a.0 } else { b.0 };
    let hi = if a.1 < b.1 { a.1 } else { b.1 };
    (lo <= hi).then_some((lo, hi))
}

impl ApproxSquare {
    fn tubes(&self) -> impl Iterator<Item = &Tube> {
        std::iter::once(&self.tube).chain(self.clip.iter())
    }

    /// Constraint interval on `axis` from the tubes, closed.
    pub fn constraint(&self, axis: usize) -> Option<(Q, Q)> {
        self.tubes().find(|t| t.axis == axis).map(|t| (t.lo(), t.hi()))
    }

    /// Bounding box of Π(E_n): the cylinder hull cut by the tubes. `None` when
    /// the tubes miss the hull, which happens only on null sets.
    pub fn bounds(&self, ifs: &DiagonalIFS) -> Option<[(Q, Q); 2]> {
        let (lam, off) = ifs.word_map(&self.word);
        let mut out: [(Q, Q); 2] = [(Q::zero(), Q::zero()), (Q::zero(), Q::zero())];
        for j in 0..2 {
            let (hlo, hhi) = ifs.hull(j);
            let a = &off[j] + &lam[j] * hlo;
            let b = &off[j] + &lam[j] * hhi;
            let mut iv = if a <= b { (a, b) } else { (b, a) };
            if let Some(c) = self.constraint(j) {
                iv = closed_intersect(iv, c)?;
            }
            out[j] = iv;
        }
        Some(out)
    }

    pub fn sides(&self, ifs: &DiagonalIFS) -> [f64; 2] {
        match self.bounds(ifs) {
            Some(b) => [to_f64(&(&b[0].1 - &b[0].0)), to_f64(&(&b[1].1 - &b[1].0))],
            None => [0.0, 0.0],
        }
    }

    /// Whether the clipping tube cuts the cylinder hull.
    pub fn clipped(&self, ifs: &DiagonalIFS) -> bool {
        let Some(c) = &self.clip else { return false };
        let (lam, off) = ifs.word_map(&self.word);
        let (hlo, hhi) = ifs.hull(c.axis);
        let a = &off[c.axis] + &lam[c.axis] * hlo;
        let b = &off[c.axis] + &lam[c.axis] * hhi;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        lo < c.lo() || hi > c.hi()
    }

    pub const CSV_HEADER: &'static str = "n,regime,word_len,tube_lo,tube_hi,width,height";

    pub fn csv_row(&self, ifs: &DiagonalIFS) -> String {
        let s = self.sides(ifs);
        format!(
            "{},{},{},{:.17e},{:.17e},{:.17e},{:.17e}",
            self.level,
            self.regime,
            self.word.len(),
            to_f64(&self.tube.lo()),
            to_f64(&self.tube.hi()),
            s[0],
            s[1]
        )
    }
}

/// E_n^δ: maximal words v with [v] ⊆ E_n whose side along the tube axis has
/// just dropped to δ2^{-n}: |λ_j(v)| ≤ δ2^{-n} < |λ_j(v⁻)|. Containment is
/// tested on the closed hull image.
pub fn interior_family(sq: &ApproxSquare, delta: f64, ifs: &DiagonalIFS) -> Result<Vec<Word>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("δ must lie in (0, 1), got {delta}")));
    }
    let j = sq.tube.axis;
    let target = delta.log2() - sq.level as f64;
    let cons: [Option<(Q, Q)>; 2] = [sq.constraint(0), sq.constraint(1)];
    let (lam0, off0) = ifs.word_map(&sq.word);
    let mut out = Vec::new();
    let mut stack = vec![(sq.word.clone(), lam0, off0)];
    let mut visited = 0usize;
    while let Some((w, lam, off)) = stack.pop() {
        visited += 1;
        if visited > 5_000_000 {
            return Err(Error::Domain("interior family enumeration too large".into()));
        }
        let mut inside = true;
        let mut disjoint = false;
        for ax in 0..2 {
            let (hlo, hhi) = ifs.hull(ax);
            let a = &off[ax] + &lam[ax] * hlo;
            let b = &off[ax] + &lam[ax] * hhi;
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if let Some((cl, ch)) = &cons[ax] {
                inside &= &lo >= cl && &hi <= ch;
                disjoint |= &hi < cl || &lo > ch;
            }
        }
        if disjoint {
            continue;
        }
        if log2_abs(&lam[j]) <= target {
            if inside {
                out.push(w);
            }
            continue;
        }
        for (i, m) in ifs.maps().iter().enumerate().rev() {
            let mut o = off.clone();
            let mut l = lam.clone();
            for ax in 0..2 {
                o[ax] += &l[ax] * &m.a[ax];
                l[ax] *= &m.lambda[ax];
            }
            stack.push((w.push(i), l, o));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Affine bookkeeping between μ coordinates and the magnified frame.
///
/// A point x of μ lies in the strip φ_w^{-1}(tubes) iff each windowed
/// coordinate lies in its window; its image in S_nΠμ̄_{E_n} is
/// `slope·(x − lo) + intercept` per axis. On the tube axis the image is
/// 2^n(φ_w(x) − tube lo) ∈ [0, 1); on the other axis the origin is the low
/// edge of φ_w(hull).
#[derive(Debug, Clone, PartialEq)]
pub struct StripFrame {
    pub windows: [Option<AxisWindow>; 2],
    pub lo: [f64; 2],
    pub slope: [f64; 2],
    pub intercept: [f64; 2],
}

pub fn strip_frame(sq: &ApproxSquare, ifs: &DiagonalIFS) -> StripFrame {
    let (lam, off) = ifs.word_map(&sq.word);
    let scale = Q::from_integer(BigInt::one() << sq.level as usize);
    let mut f = StripFrame { windows: [None, None], lo: [0.0; 2], slope: [0.0; 2], intercept: [0.0; 2] };
    for j in 0..2 {
        let (hlo, hhi) = ifs.hull(j);
        let a = &off[j] + &lam[j] * hlo;
        let b = &off[j] + &lam[j] * hhi;
        let hull_lo = if a <= b { a } else { b };
        let reference = if j == sq.tube.axis { sq.tube.lo() } else { hull_lo };
        let lo_q = match sq.constraint(j) {
            Some((c, d)) => {
                let p = (&c - &off[j]) / &lam[j];
                let q = (&d - &off[j]) / &lam[j];
                let lo = if p <= q { p } else { q };
                let lo_f = to_f64(&lo);
                f.windows[j] = Some(AxisWindow { lo: lo_f, width: to_f64(&((d - c) / lam[j].abs())) });
                f.lo[j] = lo_f;
                Q::from_float(lo_f).expect("finite window")
            }
            None => Q::zero(),
        };
        f.slope[j] = to_f64(&(&scale * &lam[j]));
        f.intercept[j] = to_f64(&(&scale * (&off[j] + &lam[j] * &lo_q - reference)));
    }
    f
}

impl StripFrame {
    /// Image of a point given relative to `lo`.
    pub fn image(&self, rel: [f64; 2]) -> [f64; 2] {
        [self.slope[0] * rel[0] + self.intercept[0], self.slope[1] * rel[1] + self.intercept[1]]
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        (0..2).all(|j| self.windows[j].map_or(true, |w| x[j] >= w.lo && x[j] < w.lo + w.width))
    }
}

/// S_nΠμ̄_{E_n} as a point cloud, with μ(strip) estimated along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Magnified {
    pub measure: SampleMeasure,
    /// μ(φ_w^{-1}(tubes)), so that μ̄(E_n) = p(w)·strip_mass.
    pub strip_mass: f64,
    /// Rejection acceptance rate, when rejection was used.
    pub acceptance: Option<f64>,
}

/// Magnification by rejection from a pool of μ samples.
pub fn magnify(sq: &ApproxSquare, ifs: &DiagonalIFS, pool: &SampleMeasure, samples: usize) -> Result<Magnified> {
    if pool.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: pool.dim() });
    }
    let f = strip_frame(sq, ifs);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut hits = 0usize;
    for i in 0..pool.len() {
        let x = pool.point(i);
        if f.contains(x) {
            hits += 1;
            if xs.len() < samples {
                let p = f.image([x[0] - f.lo[0], x[1] - f.lo[1]]);
                xs.push(p[0]);
                ys.push(p[1]);
            }
        }
    }
    let acceptance = hits as f64 / pool.len().max(1) as f64;
    if acceptance < 1e-4 {
        return Err(Error::MassTooSmall {
            acceptance,
            detail: format!("level {} strip caught {hits} of {} pool points", sq.level, pool.len()),
        });
    }
    Ok(Magnified { measure: SampleMeasure::new_2d(xs, ys), strip_mass: acceptance, acceptance: Some(acceptance) })
}

/// Magnification through the conditioned particle sampler; works at depths
/// where the strip mass is far below any feasible rejection rate.
pub fn magnify_conditioned(
    sq: &ApproxSquare,
    ifs: &DiagonalIFS,
    samples: usize,
    seed: u64,
    opts: ConditionedOptions,
) -> Result<Magnified> {
    let f = strip_frame(sq, ifs);
    let c = sample_conditioned(ifs, f.windows, samples, seed, opts)?;
    let (xs, ys) = c.points.iter().map(|&p| {
        let q = f.image(p);
        (q[0], q[1])
    }).unzip();
    Ok(Magnified { measure: SampleMeasure::new_2d(xs, ys), strip_mass: c.mass, acceptance: None })
}

/// F_ℓ^θ(𝚓, 𝚔) = [𝚓|_ℓ] × [𝚔|_{τ_ℓ}].
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaRect {
    pub j_word: Word,
    pub k_word: Word,
    pub theta: f64,
}

pub fn theta_rect(j: &SymbolSeq, k: &SymbolSeq, theta: f64, ell: usize, ifs: &DiagonalIFS) -> Result<ThetaRect> {
    if !(theta >= 0.0) {
        return Err(Error::Domain(format!("θ must be nonnegative, got {theta}")));
    }
    let tau = stopping_time_tau(j, k, theta, ell, ifs)?;
    Ok(ThetaRect { j_word: j.prefix(ell), k_word: k.prefix(tau), theta })
}

impl ThetaRect {
    /// log₂ of height/width of Π̃(F), i.e. log₂|λ₂(𝚔|_τ)| − log₂|λ₁(𝚓|_ℓ)|.
    pub fn log2_eccentricity(&self, ifs: &DiagonalIFS) -> f64 {
        log2_abs(&ifs.lambda_word(1, &self.k_word)) - log2_abs(&ifs.lambda_word(0, &self.j_word))
    }
}

/// κ for use with θ-rectangles: the ℓ at which |λ₁(𝚓|_ℓ)| first drops to 2^{-level}.
pub fn theta_level(j: &SymbolSeq, level: u32, ifs: &DiagonalIFS) -> Result<usize> {
    stopping_time_kappa(j, level as i64, ifs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{rng, sample, wasserstein1_with, W1Options};
    use crate::rational::q;
    use proptest::prelude::*;
    use rand::Rng;

    fn zero() -> [Q; 2] {
        [Q::zero(), Q::zero()]
    }

    fn diagonal() -> DiagonalIFS {
        DiagonalIFS::from_strs(&[("1/2", "1/2", ["0", "0"]), ("1/2", "1/2", ["1/2", "1/2"])], &["1/2", "1/2"]).unwrap()
    }

    fn grid() -> DiagonalIFS {
        DiagonalIFS::from_strs(
            &[
                ("1/2", "1/2", ["0", "0"]),
                ("1/2", "1/2", ["1/2", "0"]),
                ("1/2", "1/2", ["0", "1/2"]),
                ("1/2", "1/2", ["1/2", "1/2"]),
            ],
            &["1/4", "1/4", "1/4", "1/4"],
        )
        .unwrap()
    }

    fn x_dominant() -> DiagonalIFS {
        DiagonalIFS::from_strs(
            &[("1/2", "1/3", ["0", "0"]), ("1/2", "1/3", ["1/2", "0"]), ("1/2", "1/3", ["0", "2/3"])],
            &["1/3", "1/3", "1/3"],
        )
        .unwrap()
    }

    fn y_dominant() -> DiagonalIFS {
        DiagonalIFS::from_strs(
            &[("1/3", "1/2", ["0", "0"]), ("1/3", "1/2", ["2/3", "0"]), ("1/3", "1/2", ["0", "1/2"])],
            &["1/3", "1/3", "1/3"],
        )
        .unwrap()
    }

    fn eqlyap() -> DiagonalIFS {
        DiagonalIFS::from_strs(
            &[("1/2", "1/4", ["0", "0"]), ("1/4", "1/2", ["1/2", "1/2"])],
            &["1/2", "1/2"],
        )
        .unwrap()
    }

    #[test]
    fn approx_square_examples() {
        let f = grid();
        let s = SymbolSeq::sampled(f.weights(), 4);
        for n in [1, 5, 12] {
            let sq = approx_square(&s, n, &f, &zero()).unwrap();
            assert_eq!(sq.regime, SquareRegime::A);
            assert_eq!(sq.word.len(), n as usize);
            assert!(sq.clip.is_none());
            let p = f.project_seq(&s);
            let (lo, hi) = (to_f64(&sq.tube.lo()), to_f64(&sq.tube.hi()));
            assert!(lo <= p[1] && p[1] < hi);
            assert_eq!(sq.sides(&f), [2f64.powi(-(n as i32)); 2]);
        }
        // λ₁ = 1/3 < λ₂ = 1/2: the width is the short side, the word stops on
        // λ₁ and the tube is horizontal.
        let f = y_dominant();
        let s = SymbolSeq::sampled(f.weights(), 5);
        for n in [3u32, 10, 20] {
            let sq = approx_square(&s, n, &f, &zero()).unwrap();
            assert_eq!(sq.regime, SquareRegime::A);
            assert_eq!(sq.tube.axis, 1);
            let oracle = (n as f64 / 3f64.log2()).ceil() as usize;
            assert_eq!(sq.word.len(), oracle);
        }
        // Mirror: tube on the x axis, word length t_n = n.
        let f = x_dominant();
        let s = SymbolSeq::sampled(f.weights(), 6);
        for n in [3u32, 10, 20] {
            let sq = approx_square(&s, n, &f, &zero()).unwrap();
            assert_eq!(sq.regime, SquareRegime::B);
            assert_eq!(sq.tube.axis, 0);
            assert_eq!(sq.word.len(), (n as f64 / 3f64.log2()).ceil() as usize);
        }
    }

    #[test]
    fn boundary_points_use_half_open_cells() {
        let f = grid();
        // Π(3^∞) = (1, 1) lies in the cell starting at 1.
        let s = SymbolSeq::constant(3);
        let sq = approx_square(&s, 4, &f, &zero()).unwrap();
        assert_eq!(sq.tube.index, BigInt::from(16));
        let s = SymbolSeq::constant(0);
        assert_eq!(approx_square(&s, 4, &f, &zero()).unwrap().tube.index, BigInt::from(0));
    }

    #[test]
    fn interior_family_examples() {
        let f = diagonal();
        let s = SymbolSeq::sampled(f.weights(), 2);
        for n in [1u32, 3, 6] {
            let sq = approx_square(&s, n, &f, &zero()).unwrap();
            let fam = interior_family(&sq, 0.25, &f).unwrap();
            let expected: Vec<Word> = (0..4).map(|c| sq.word.push(c >> 1).push(c & 1)).collect();
            assert_eq!(fam, expected);
        }
        // A tube that overlaps the cylinder in a sliver of width 2^{-6}.
        let f = DiagonalIFS::from_strs(&[("1/2", "1/4", ["0", "0"]), ("1/2", "1/4", ["1/2", "3/4"])], &["1/2", "1/2"])
            .unwrap();
        let s = SymbolSeq::constant(0);
        let t = [q(1, 4) - q(1, 64), Q::zero()];
        let sq = approx_square(&s, 2, &f, &t).unwrap();
        assert_eq!(sq.regime, SquareRegime::B);
        assert!((sq.sides(&f)[0] - 1.0 / 64.0).abs() < 1e-15);
        assert!(interior_family(&sq, 0.5, &f).unwrap().is_empty());
        assert!(!interior_family(&sq, 1.0 / 128.0, &f).unwrap().is_empty());
        assert!(interior_family(&sq, 1.5, &f).is_err());
    }

    #[test]
    fn interior_mass_is_most_of_the_square() {
        // Monte Carlo: P(𝚒 ∈ ∪E_n^δ(𝚒)) = E[μ̄(E_n^δ)/μ̄(E_n)].
        let f = x_dominant();
        let mut inside = 0;
        let trials = 200;
        for t in 0..trials {
            let s = SymbolSeq::sampled(f.weights(), 1000 + t);
            let sq = approx_square(&s, 8, &f, &zero()).unwrap();
            let fam = interior_family(&sq, 1.0 / 64.0, &f).unwrap();
            let hit = fam.iter().any(|w| s.prefix(w.len()) == *w);
            inside += hit as usize;
        }
        let frac = inside as f64 / trials as f64;
        assert!(frac >= 0.85, "{frac}");
    }

    #[test]
    fn magnify_examples() {
        // A 2×2 grid square is a scaled copy of the whole square.
        let f = grid();
        let s = SymbolSeq::sampled(f.weights(), 8);
        let sq = approx_square(&s, 3, &f, &zero()).unwrap();
        let pool = sample(&f, 400_000, 1).unwrap();
        let m = magnify(&sq, &f, &pool, 4096).unwrap();
        // The tube coincides with the cylinder's row, so the strip is everything.
        assert_eq!(m.strip_mass, 1.0);
        assert!(m.measure.xs.iter().chain(m.measure.ys.as_ref().unwrap()).all(|&v| (0.0..1.0).contains(&v)));
        // μ is Lebesgue on the unit square; its 64×64 midpoint grid is within 0.006 of it.
        let fresh = SampleMeasure::new_2d(
            (0..4096).map(|i| ((i % 64) as f64 + 0.5) / 64.0).collect(),
            (0..4096).map(|i| ((i / 64) as f64 + 0.5) / 64.0).collect(),
        );
        let d = wasserstein1_with(&m.measure, &fresh, W1Options { max_points: 4096, seed: 5 }).unwrap();
        assert!(d <= 0.02, "{d}");

        // Column support {0} × Cantor: magnifications are vertical segments.
        let f = DiagonalIFS::from_strs(&[("1/2", "1/3", ["0", "0"]), ("1/2", "1/3", ["0", "2/3"])], &["1/2", "1/2"])
            .unwrap();
        let s = SymbolSeq::sampled(f.weights(), 3);
        let sq = approx_square(&s, 2, &f, &zero()).unwrap();
        let pool = sample(&f, 100_000, 3).unwrap();
        let m = magnify(&sq, &f, &pool, 500).unwrap();
        assert!(m.measure.xs.iter().all(|&x| x == m.measure.xs[0]));

        assert_eq!(m.strip_mass, 1.0);

        let f = x_dominant();
        let pool = sample(&f, 100_000, 3).unwrap();
        let s = SymbolSeq::sampled(f.weights(), 9);
        let deep = approx_square(&s, 60, &f, &zero()).unwrap();
        assert!(matches!(magnify(&deep, &f, &pool, 10), Err(Error::MassTooSmall { .. })));
    }

    #[test]
    fn conditioned_magnification_matches_rejection() {
        let f = x_dominant();
        let s = SymbolSeq::sampled(f.weights(), 12);
        let sq = approx_square(&s, 4, &f, &zero()).unwrap();
        let pool = sample(&f, 400_000, 2).unwrap();
        let a = magnify(&sq, &f, &pool, 2000).unwrap();
        let b = magnify_conditioned(&sq, &f, 2000, 3, ConditionedOptions::default()).unwrap();
        assert!((a.strip_mass / b.strip_mass - 1.0).abs() < 0.15, "{} {}", a.strip_mass, b.strip_mass);
        let d = wasserstein1_with(&a.measure, &b.measure, W1Options { max_points: 800, seed: 1 }).unwrap();
        assert!(d < 0.08, "{d}");
        // Deep levels stay in the frame.
        let deep = approx_square(&s, 60, &f, &zero()).unwrap();
        let m = magnify_conditioned(&deep, &f, 500, 4, ConditionedOptions::default()).unwrap();
        let ys = m.measure.ys.as_ref().unwrap();
        assert!(m.measure.xs.iter().all(|&x| (-1e-6..1.0 + 1e-6).contains(&x)));
        assert!(ys.iter().all(|&y| (-1e-6..1.5).contains(&y)));
    }

    #[test]
    fn theta_rect_brackets() {
        let f = x_dominant();
        let j = SymbolSeq::sampled(f.weights(), 1);
        let k = SymbolSeq::sampled(f.weights(), 2);
        for (theta, ell) in [(0.0, 5), (1.0, 10), (2.5, 17)] {
            let r = theta_rect(&j, &k, theta, ell, &f).unwrap();
            assert_eq!(r.j_word.len(), ell);
            let e = r.log2_eccentricity(&f);
            assert!(e >= -theta - 1e-12 && e < -theta + 3f64.log2() + 1e-12, "{e}");
        }
        assert!(theta_rect(&j, &k, -1.0, 3, &f).is_err());
    }

    fn systems() -> Vec<DiagonalIFS> {
        vec![grid(), x_dominant(), y_dominant(), eqlyap()]
    }

    fn contains(outer: &Option<(Q, Q)>, inner: &Option<(Q, Q)>) -> bool {
        match (outer, inner) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(i)) => o.0 <= i.0 && i.1 <= o.1,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn squares_refine(sys in 0usize..4, seed in any::<u64>(), tx in 0u32..64, ty in 0u32..64) {
            let f = &systems()[sys];
            let s = SymbolSeq::sampled(f.weights(), seed);
            let t = [q(tx as i64, 64), q(ty as i64, 64)];
            let mut prev: Option<ApproxSquare> = None;
            for n in 1..=20 {
                let sq = approx_square(&s, n, f, &t).unwrap();
                if let Some(p) = &prev {
                    prop_assert!(p.word.is_prefix_of(&sq.word));
                    for ax in 0..2 {
                        prop_assert!(contains(&p.constraint(ax), &sq.constraint(ax)));
                    }
                }
                prev = Some(sq);
            }
        }

        #[test]
        fn square_geometry(sys in 0usize..4, seed in any::<u64>(), n in 1u32..24) {
            let f = &systems()[sys];
            let s = SymbolSeq::sampled(f.weights(), seed);
            let sq = approx_square(&s, n, f, &zero()).unwrap();
            let side = 2f64.powi(-(n as i32));
            let sides = sq.sides(f);
            prop_assert!(sides[0] <= side * (1.0 + 1e-12) && sides[1] <= side * (1.0 + 1e-12));
            let short = match sq.regime { SquareRegime::A => 0, SquareRegime::B => 1 };
            let l = to_f64(&ifs_abs(f, short, &sq.word));
            let minl = (0..f.len()).map(|i| to_f64(f.lambda(short, i)).abs()).fold(1.0, f64::min);
            prop_assert!(l <= side && l >= side * minl);
            let p = f.project_seq(&s);
            let b = sq.bounds(f).unwrap();
            for ax in 0..2 {
                prop_assert!(to_f64(&b[ax].0) <= p[ax] + 1e-12 && p[ax] <= to_f64(&b[ax].1) + 1e-12);
            }
        }

        #[test]
        fn theta_rect_eccentricity(seed in any::<u64>(), theta in 0.0f64..4.0, ell in 1usize..40) {
            let f = x_dominant();
            let mut r = rng(seed, 0);
            let j = SymbolSeq::sampled(f.weights(), r.gen());
            let k = SymbolSeq::sampled(f.weights(), r.gen());
            let rect = theta_rect(&j, &k, theta, ell, &f).unwrap();
            let e = rect.log2_eccentricity(&f);
            // τ is the last index with height ≥ 2^{-θ}·width.
            prop_assert!(e >= -theta - 1e-9);
            prop_assert!(e < -theta + 3f64.log2() + 1e-9);
        }
    }

    fn ifs_abs(f: &DiagonalIFS, axis: usize, w: &Word) -> Q {
        f.lambda_word(axis, w).abs()
    }

    #[test]
    fn mass_comparability() {
        // μ̄(E_{nN}(𝚒)) against μ̄(B^Π(𝚒, 2^{-(n−1)N}) ∩ [𝚒|_{t_{(n−1)N}}]) on a
        // shared symbolic sample, for n = 2..4 and N = 2.
        let f = x_dominant();
        let pool_n = 200_000;
        let len = 40;
        let pool: Vec<SymbolSeq> = (0..pool_n).map(|i| SymbolSeq::sampled(f.weights(), 50_000 + i)).collect();
        let words: Vec<Word> = pool.iter().map(|s| s.prefix(len)).collect();
        let points: Vec<[f64; 2]> = pool.iter().map(|s| f.project_seq(s)).collect();
        let nn = 2u32;
        let mut ratios = Vec::new();
        for trial in 0..30 {
            let s = SymbolSeq::sampled(f.weights(), trial);
            let p = f.project_seq(&s);
            for n in 2..=4u32 {
                let sq = approx_square(&s, n * nn, &f, &zero()).unwrap();
                let prev = approx_square(&s, (n - 1) * nn, &f, &zero()).unwrap();
                let r = 2f64.powi(-(((n - 1) * nn) as i32));
                let cons = [sq.constraint(0), sq.constraint(1)];
                let mut in_e = 0usize;
                let mut in_b = 0usize;
                for i in 0..pool_n as usize {
                    let w = &words[i];
                    if prev.word.is_prefix_of(w) && (points[i][0] - p[0]).abs() <= r && (points[i][1] - p[1]).abs() <= r {
                        in_b += 1;
                    }
                    if sq.word.is_prefix_of(w)
                        && (0..2).all(|ax| {
                            cons[ax].as_ref().map_or(true, |(lo, hi)| {
                                points[i][ax] >= to_f64(lo) && points[i][ax] < to_f64(hi)
                            })
                        })
                    {
                        in_e += 1;
                    }
                }
                if in_b > 0 {
                    ratios.push(in_e as f64 / in_b as f64);
                }
            }
        }
        ratios.sort_by(|a, b| a.total_cmp(b));
        // Empirical c: the 10% quantile stays bounded away from zero.
        let c = ratios[ratios.len() / 10];
        assert!(c > 0.005, "empirical c = {c}");
    }
}
