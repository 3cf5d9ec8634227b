//! Words, infinite symbol sequences, Bernoulli weights and stopping times.
//!
//! Symbols are indices `0..size`. Infinite sequences come in two flavours with
//! one prefix interface: a counter-based pseudo-random stream drawn from a
//! Bernoulli measure, and an exact eventually periodic description.
//!
//! Stopping times compare products of contraction ratios against powers of two
//! in exact arithmetic (see [`DiagonalIFS::mag_cmp`]). The contraction
//! ratios may be negative; every comparison uses absolute values.

use std::cmp::Ordering;
use std::sync::Arc;

use num::bigint::{BigInt, ToBigInt};
use num::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affine::DiagonalIFS;
use crate::error::{Error, Result};
use crate::rational::{to_f64, Q};

pub type Symbol = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::Domain(format!("alphabet needs at least 2 symbols, got {size}")));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// All words of length `n` in lexicographic order.
    pub fn words(&self, n: usize) -> impl Iterator<Item = Word> + '_ {
        let total = self.size.checked_pow(n as u32).expect("word count overflows usize");
        (0..total).map(move |mut idx| {
            let mut v = vec![0; n];
            for slot in v.iter_mut().rev() {
                *slot = idx % self.size;
                idx /= self.size;
            }
            Word(v)
        })
    }
}

/// A finite word over the alphabet; the empty word is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&self, s: Symbol) -> Word {
        let mut v = self.0.clone();
        v.push(s);
        Word(v)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn check(&self, size: usize) -> Result<()> {
        match self.0.iter().position(|&s| s >= size) {
            Some(k) => Err(Error::Domain(format!(
                "symbol {} at position {k} out of range for alphabet of size {size}",
                self.0[k]
            ))),
            None => Ok(()),
        }
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

/// Bernoulli weights, exact and strictly positive, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliWeights {
    p: Vec<Q>,
    pf: Vec<f64>,
    thresholds: Arc<Vec<u64>>,
}

impl BernoulliWeights {
    pub fn new(p: Vec<Q>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Validation { index: None, reason: "no weights".into() });
        }
        if let Some(i) = p.iter().position(|x| !x.is_positive()) {
            return Err(Error::Validation { index: Some(i), reason: "weight must be positive".into() });
        }
        let total: Q = p.iter().sum();
        if !total.is_one() {
            return Err(Error::Validation {
                index: None,
                reason: format!("weights sum to {total}, not 1"),
            });
        }
        let scale = Q::from_integer(BigInt::one() << 64u32);
        let mut acc = Q::zero();
        let mut thresholds = Vec::with_capacity(p.len() - 1);
        for x in &p[..p.len() - 1] {
            acc += x;
            let t = (&acc * &scale).floor().to_integer();
            thresholds.push(t.to_u64().unwrap_or(u64::MAX));
        }
        let pf = p.iter().map(to_f64).collect();
        Ok(Self { p, pf, thresholds: Arc::new(thresholds) })
    }

    pub fn uniform(k: usize) -> Self {
        Self::new(vec![Q::new(1.into(), (k as i64).into()); k]).expect("uniform weights are valid")
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn p(&self) -> &[Q] {
        &self.p
    }

    pub fn pf(&self) -> &[f64] {
        &self.pf
    }

    /// Maps a uniform 64-bit draw to a symbol.
    pub fn symbol_for(&self, u: u64) -> Symbol {
        sym_from(&self.thresholds, u)
    }

    pub fn lcm_denominator(&self) -> BigInt {
        self.p.iter().fold(BigInt::one(), |acc, x| num::integer::lcm(acc, x.denom().clone()))
    }
}

fn sym_from(thresholds: &[u64], u: u64) -> Symbol {
    thresholds.iter().take_while(|&&t| u >= t).count()
}

/// Mass of the cylinder `[w]` under the Bernoulli measure.
pub fn cylinder_mass(w: &Word, weights: &BernoulliWeights) -> Result<Q> {
    w.check(weights.len())?;
    Ok(w.0.iter().fold(Q::one(), |acc, &s| acc * &weights.p[s]))
}

/// An infinite sequence in Γ^ℕ.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSeq {
    /// Counter-based draw from a Bernoulli measure: symbol `n` is a function of
    /// `(seed, offset + n)` only.
    Sampled { thresholds: Arc<Vec<u64>>, size: usize, seed: u64, offset: u64 },
    /// `pre · period^∞`, kept in canonical form.
    Periodic { pre: Vec<Symbol>, period: Vec<Symbol> },
}

impl SymbolSeq {
    pub fn sampled(weights: &BernoulliWeights, seed: u64) -> Self {
        SymbolSeq::Sampled { thresholds: weights.thresholds.clone(), size: weights.len(), seed, offset: 0 }
    }

    pub fn periodic(pre: Vec<Symbol>, period: Vec<Symbol>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Domain("period word must be nonempty".into()));
        }
        let (pre, period) = canonical(pre, period);
        Ok(SymbolSeq::Periodic { pre, period })
    }

    pub fn constant(s: Symbol) -> Self {
        SymbolSeq::Periodic { pre: vec![], period: vec![s] }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, SymbolSeq::Periodic { .. })
    }

    /// The period word when the sequence is purely periodic.
    pub fn pure_period(&self) -> Option<&[Symbol]> {
        match self {
            SymbolSeq::Periodic { pre, period } if pre.is_empty() => Some(period),
            _ => None,
        }
    }

    pub fn symbol(&self, n: usize) -> Symbol {
        match self {
            SymbolSeq::Sampled { thresholds, seed, offset, .. } => {
                let mut rng = stream(*seed, *offset + n as u64);
                sym_from(thresholds, rng.next_u64())
            }
            SymbolSeq::Periodic { pre, period } => {
                if n < pre.len() {
                    pre[n]
                } else {
                    period[(n - pre.len()) % period.len()]
                }
            }
        }
    }

    pub fn iter(&self) -> SymbolIter<'_> {
        let rng = match self {
            SymbolSeq::Sampled { seed, offset, .. } => Some(stream(*seed, *offset)),
            SymbolSeq::Periodic { .. } => None,
        };
        SymbolIter { seq: self, pos: 0, rng }
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.iter().take(n).collect())
    }

    pub fn shift(&self, k: usize) -> SymbolSeq {
        match self {
            SymbolSeq::Sampled { thresholds, size, seed, offset } => SymbolSeq::Sampled {
                thresholds: thresholds.clone(),
                size: *size,
                seed: *seed,
                offset: offset + k as u64,
            },
            SymbolSeq::Periodic { pre, period } => {
                if k <= pre.len() {
                    let (a, b) = canonical(pre[k..].to_vec(), period.clone());
                    SymbolSeq::Periodic { pre: a, period: b }
                } else {
                    let r = (k - pre.len()) % period.len();
                    let mut p = period.clone();
                    p.rotate_left(r);
                    SymbolSeq::Periodic { pre: vec![], period: p }
                }
            }
        }
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * index as u128);
    rng
}

fn canonical(mut pre: Vec<Symbol>, mut period: Vec<Symbol>) -> (Vec<Symbol>, Vec<Symbol>) {
    let n = period.len();
    if let Some(d) = (1..=n).find(|&d| n % d == 0 && (d..n).all(|i| period[i] == period[i - d])) {
        period.truncate(d);
    }
    while let Some(&last) = pre.last() {
        if last != *period.last().expect("nonempty period") {
            break;
        }
        pre.pop();
        period.rotate_right(1);
    }
    (pre, period)
}

pub struct SymbolIter<'a> {
    seq: &'a SymbolSeq,
    pos: usize,
    rng: Option<ChaCha8Rng>,
}

impl Iterator for SymbolIter<'_> {
    type Item = Symbol;

    fn next(&mut self) -> Option<Symbol> {
        let s = match (self.seq, self.rng.as_mut()) {
            (SymbolSeq::Sampled { thresholds, .. }, Some(rng)) => sym_from(thresholds, rng.next_u64()),
            _ => self.seq.symbol(self.pos),
        };
        self.pos += 1;
        Some(s)
    }
}

/// Hard cap on the depth explored by stopping-time searches.
pub const MAX_DEPTH: usize = 1 << 22;

/// t_n = min{k : |λ₂(𝚒|_k)| ≤ 2^{-n}}.
pub fn stopping_time_t(s: &SymbolSeq, n: i64, ifs: &DiagonalIFS) -> Result<usize> {
    first_below(s, 1, n, ifs)
}

/// κ(𝚓, ℓ) = min{n : |λ₁(𝚓|_n)| ≤ 2^{-ℓ}}.
pub fn stopping_time_kappa(j: &SymbolSeq, ell: i64, ifs: &DiagonalIFS) -> Result<usize> {
    first_below(j, 0, ell, ifs)
}

/// Least k with |λ_axis(𝚒|_k)| ≤ 2^{-n}.
pub fn first_below(s: &SymbolSeq, axis: usize, n: i64, ifs: &DiagonalIFS) -> Result<usize> {
    if n < 0 {
        return Err(Error::Domain(format!("level must be nonnegative, got {n}")));
    }
    let one = ifs.mag_one();
    let mut m = ifs.mag_one();
    for (k, sym) in s.iter().enumerate() {
        if ifs.mag_cmp(&m, &one, -n) != Ordering::Greater {
            return Ok(k);
        }
        if k >= MAX_DEPTH {
            break;
        }
        ifs.mag_mul(&mut m, axis, sym);
    }
    Err(Error::Domain(format!("stopping time exceeded depth {MAX_DEPTH}")))
}

/// τ_ℓ = max{n : |λ₂(𝚔|_n)| ≥ 2^{-θ}|λ₁(𝚓|_ℓ)|}.
///
/// Exact when θ is an integer. For other θ the threshold 2^{-θ}|λ₁(𝚓|_ℓ)| is
/// irrational, so equality cannot occur and the comparison is made on log₂
/// values in floating point.
pub fn stopping_time_tau(j: &SymbolSeq, k: &SymbolSeq, theta: f64, ell: usize, ifs: &DiagonalIFS) -> Result<usize> {
    if !theta.is_finite() {
        return Err(Error::Domain("θ must be finite".into()));
    }
    let mut target = ifs.mag_one();
    for sym in j.iter().take(ell) {
        ifs.mag_mul(&mut target, 0, sym);
    }
    let int_theta = (theta.fract() == 0.0 && theta.abs() < 1e15).then_some(theta as i64);
    let target_log = ifs.mag_log2(&target) - theta;
    let mut m = ifs.mag_one();
    let mut last = 0usize;
    for (n, sym) in k.iter().enumerate() {
        let holds = match int_theta {
            Some(t) => ifs.mag_cmp(&m, &target, -t) != Ordering::Less,
            None => ifs.mag_log2(&m) >= target_log,
        };
        if !holds {
            return Ok(last);
        }
        last = n;
        if n >= MAX_DEPTH {
            break;
        }
        ifs.mag_mul(&mut m, 1, sym);
    }
    Err(Error::Domain(format!("stopping time exceeded depth {MAX_DEPTH}")))
}

/// Exact rational for an integer, used by callers building thresholds.
pub fn int_q(v: i64) -> Q {
    Q::from_integer(v.to_bigint().expect("i64 to BigInt"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{DiagonalIFS, DiagonalMap};
    use crate::rational::{parse_q, q};
    use proptest::prelude::*;

    fn w(v: &[usize]) -> Word {
        Word(v.to_vec())
    }

    fn ifs_lambda(l1: &[&str], l2: &[&str]) -> DiagonalIFS {
        let k = l1.len();
        let maps = (0..k)
            .map(|i| {
                DiagonalMap::new(parse_q(l1[i]).unwrap(), parse_q(l2[i]).unwrap(), [q(i as i64, 4 * k as i64), q(0, 1)])
                    .unwrap()
            })
            .collect();
        DiagonalIFS::new(maps, BernoulliWeights::uniform(k)).unwrap()
    }

    #[test]
    fn cylinder_mass_examples() {
        let half = BernoulliWeights::uniform(2);
        assert_eq!(cylinder_mass(&Word::empty(), &half).unwrap(), q(1, 1));
        assert_eq!(cylinder_mass(&w(&[0, 1]), &half).unwrap(), q(1, 4));
        let p = BernoulliWeights::new(vec![q(2, 3), q(1, 3)]).unwrap();
        assert_eq!(cylinder_mass(&w(&[0, 0, 1]), &p).unwrap(), q(4, 27));
        assert!(matches!(cylinder_mass(&w(&[2]), &p), Err(Error::Domain(_))));
    }

    #[test]
    fn weights_validation() {
        assert!(BernoulliWeights::new(vec![q(1, 2), q(1, 3)]).is_err());
        assert!(BernoulliWeights::new(vec![q(3, 2), q(-1, 2)]).is_err());
        assert!(Alphabet::new(1).is_err());
    }

    #[test]
    fn masses_sum_to_one_exhaustively() {
        let p = BernoulliWeights::new(vec![q(1, 2), q(1, 3), q(1, 6)]).unwrap();
        let a = Alphabet::new(3).unwrap();
        for n in 0..=8 {
            let total: Q = a.words(n).map(|x| cylinder_mass(&x, &p).unwrap()).sum();
            assert!(total.is_one(), "depth {n}");
        }
    }

    #[test]
    fn shift_examples() {
        let s = SymbolSeq::periodic(vec![], vec![0, 1]).unwrap();
        assert_eq!(s.shift(1), SymbolSeq::periodic(vec![], vec![1, 0]).unwrap());
        assert_eq!(s.shift(0), s);
        let t = SymbolSeq::periodic(vec![0], vec![1]).unwrap();
        assert_eq!(t.shift(3), SymbolSeq::constant(1));
        // Canonical form: (0,1,0,1)^∞ and 0·(1,0)^∞ are the same point.
        assert_eq!(SymbolSeq::periodic(vec![0], vec![1, 0]).unwrap(), s);
        assert_eq!(SymbolSeq::periodic(vec![], vec![0, 1, 0, 1]).unwrap(), s);
    }

    #[test]
    fn sampled_prefix_is_deterministic_and_random_access() {
        let p = BernoulliWeights::new(vec![q(1, 3), q(2, 3)]).unwrap();
        let s = SymbolSeq::sampled(&p, 42);
        let pre = s.prefix(200);
        assert_eq!(pre, SymbolSeq::sampled(&p, 42).prefix(200));
        for n in [0, 17, 199] {
            assert_eq!(s.symbol(n), pre.0[n]);
        }
        let ones = pre.0.iter().filter(|&&x| x == 1).count();
        assert!((100..170).contains(&ones), "{ones}");
    }

    #[test]
    fn t_examples() {
        let a = ifs_lambda(&["1/2", "1/2"], &["1/2", "1/2"]);
        let s = SymbolSeq::sampled(&BernoulliWeights::uniform(2), 1);
        assert_eq!(stopping_time_t(&s, 7, &a).unwrap(), 7);
        let b = ifs_lambda(&["1/2", "1/2"], &["1/4", "1/4"]);
        assert_eq!(stopping_time_t(&s, 7, &b).unwrap(), 4);
        let c = ifs_lambda(&["1/2", "1/2"], &["1/2", "1/8"]);
        let alt = SymbolSeq::periodic(vec![], vec![0, 1]).unwrap();
        assert_eq!(stopping_time_t(&alt, 4, &c).unwrap(), 2);
        assert!(stopping_time_t(&alt, -1, &c).is_err());
        assert_eq!(stopping_time_t(&alt, 0, &c).unwrap(), 0);
    }

    #[test]
    fn signs_are_ignored() {
        let a = ifs_lambda(&["-1/2", "1/2"], &["-1/4", "-1/4"]);
        let s = SymbolSeq::periodic(vec![], vec![0, 1]).unwrap();
        assert_eq!(stopping_time_t(&s, 7, &a).unwrap(), 4);
        assert_eq!(stopping_time_kappa(&s, 5, &a).unwrap(), 5);
    }

    #[test]
    fn tau_examples() {
        let s = SymbolSeq::constant(0);
        let a = ifs_lambda(&["1/4", "1/4"], &["1/2", "1/2"]);
        assert_eq!(stopping_time_tau(&s, &s, 0.0, 3, &a).unwrap(), 6);
        let b = ifs_lambda(&["1/2", "1/2"], &["1/2", "1/2"]);
        assert_eq!(stopping_time_tau(&s, &s, 1.0, 5, &b).unwrap(), 6);
        let c = ifs_lambda(&["1/3", "1/3"], &["1/2", "1/2"]);
        // Independent oracle: floor(2 + 4 log₂ 3).
        let expect = (2.0 + 4.0 * 3f64.log2()).floor() as usize;
        assert_eq!(expect, 8);
        assert_eq!(stopping_time_tau(&s, &s, 2.0, 4, &c).unwrap(), expect);
        // Non-integer θ goes through the log comparison.
        assert_eq!(stopping_time_tau(&s, &s, 2.5, 4, &c).unwrap(), (2.5 + 4.0 * 3f64.log2()).floor() as usize);
    }

    #[test]
    fn kappa_examples() {
        let s = SymbolSeq::constant(1);
        let a = ifs_lambda(&["1/4", "1/4"], &["1/2", "1/2"]);
        assert_eq!(stopping_time_kappa(&s, 5, &a).unwrap(), 3);
        let b = ifs_lambda(&["1/2", "1/2"], &["1/2", "1/2"]);
        assert_eq!(stopping_time_kappa(&s, 5, &b).unwrap(), 5);
        assert_eq!(stopping_time_kappa(&s, 0, &b).unwrap(), 0);
    }

    fn abs_prod(ifs: &DiagonalIFS, axis: usize, word: &Word) -> Q {
        word.0.iter().fold(Q::one(), |acc, &s| acc * ifs.lambda(axis, s).abs())
    }

    fn pow2(n: i64) -> Q {
        if n >= 0 {
            Q::from_integer(BigInt::one() << n as usize)
        } else {
            Q::new(BigInt::one(), BigInt::one() << (-n) as usize)
        }
    }

    proptest! {
        #[test]
        fn mass_is_multiplicative(u in proptest::collection::vec(0usize..3, 0..12),
                                  v in proptest::collection::vec(0usize..3, 0..12)) {
            let p = BernoulliWeights::new(vec![q(1, 2), q(1, 5), q(3, 10)]).unwrap();
            let (u, v) = (Word(u), Word(v));
            prop_assert_eq!(cylinder_mass(&u.concat(&v), &p).unwrap(),
                            cylinder_mass(&u, &p).unwrap() * cylinder_mass(&v, &p).unwrap());
        }

        #[test]
        fn shift_composes(pre in proptest::collection::vec(0usize..3, 0..6),
                          per in proptest::collection::vec(0usize..3, 1..6),
                          seed in any::<u64>(), a in 0usize..40, b in 0usize..40) {
            let s = SymbolSeq::periodic(pre, per).unwrap();
            prop_assert_eq!(s.shift(a).shift(b).prefix(64), s.shift(a + b).prefix(64));
            prop_assert_eq!(s.shift(a).prefix(64).0, s.prefix(a + 64).0[a..].to_vec());
            let r = SymbolSeq::sampled(&BernoulliWeights::uniform(3), seed);
            prop_assert_eq!(r.shift(a).shift(b).prefix(64), r.shift(a + b).prefix(64));
        }

        #[test]
        fn t_brackets(seed in any::<u64>(), n in 0i64..40, pick in 0usize..3) {
            let sets = [(["1/2", "1/3"], ["2/3", "1/5"]), (["1/2", "1/2"], ["1/2", "1/8"]), (["3/4", "1/3"], ["-1/2", "3/7"])];
            let (l1, l2) = sets[pick];
            let ifs = ifs_lambda(&l1, &l2);
            let s = SymbolSeq::sampled(&BernoulliWeights::uniform(2), seed);
            let t = stopping_time_t(&s, n, &ifs).unwrap();
            let lam = abs_prod(&ifs, 1, &s.prefix(t));
            let min2 = (0..2).map(|i| ifs.lambda(1, i).abs()).min().unwrap();
            prop_assert!(lam <= pow2(-n));
            prop_assert!(lam > pow2(-n) * min2);
            prop_assert!(stopping_time_t(&s, n + 1, &ifs).unwrap() >= t);
        }

        #[test]
        fn tau_and_kappa_bracket(sj in any::<u64>(), sk in any::<u64>(), ell in 1usize..25, th in 0i64..6, pick in 0usize..2) {
            let sets = [(["1/3", "1/2"], ["1/2", "2/5"]), (["1/2", "1/4"], ["1/3", "1/3"])];
            let (l1, l2) = sets[pick];
            let ifs = ifs_lambda(&l1, &l2);
            let wts = BernoulliWeights::uniform(2);
            let (j, k) = (SymbolSeq::sampled(&wts, sj), SymbolSeq::sampled(&wts, sk));
            let tau = stopping_time_tau(&j, &k, th as f64, ell, &ifs).unwrap();
            let target = pow2(-th) * abs_prod(&ifs, 0, &j.prefix(ell));
            prop_assert!(abs_prod(&ifs, 1, &k.prefix(tau)) >= target);
            prop_assert!(target > abs_prod(&ifs, 1, &k.prefix(tau + 1)));
            let kap = stopping_time_kappa(&j, ell as i64, &ifs).unwrap();
            prop_assert!(abs_prod(&ifs, 0, &j.prefix(kap)) <= pow2(-(ell as i64)));
            prop_assert!(kap == 0 || abs_prod(&ifs, 0, &j.prefix(kap - 1)) > pow2(-(ell as i64)));
        }
    }
}
