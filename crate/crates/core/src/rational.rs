//! Exact rational helpers: parsing, logarithms, prime-exponent vectors.

use std::collections::BTreeMap;

use num::bigint::{BigInt, BigUint, Sign};
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// Trial-division bound used by [`exponent_vector`].
pub const TRIAL_BOUND: u64 = 1_000_000;

/// Parses `"p/q"`, an integer, or a finite decimal such as `"-0.125"`, exactly.
pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not an exact rational: {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Q::new(p, q));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        if fp.is_empty() || !fp.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip_abs = ip.trim_start_matches(['-', '+']);
        let whole: BigInt = if ip_abs.is_empty() { BigInt::zero() } else { ip_abs.parse().map_err(|_| bad())? };
        let frac: BigInt = fp.parse().map_err(|_| bad())?;
        let scale = num::pow(BigInt::from(10u32), fp.len());
        let v = Q::new(whole * &scale + frac, scale);
        return Ok(if neg { -v } else { v });
    }
    let p: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(p))
}

pub fn q(p: i64, d: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(d))
}

pub fn to_f64(x: &Q) -> f64 {
    match x.to_f64() {
        Some(v) if v.is_finite() && (v != 0.0 || x.is_zero()) => v,
        _ => {
            let s = if x.is_negative() { -1.0 } else { 1.0 };
            s * log2_abs(x).exp2()
        }
    }
}

pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

fn log2_uint(n: &BigUint) -> f64 {
    let bits = n.bits();
    let shift = bits.saturating_sub(64);
    let top = (n >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).log2() + shift as f64
}

/// log₂|x| for nonzero x, accurate for numerators and denominators of any size.
pub fn log2_abs(x: &Q) -> f64 {
    log2_uint(x.numer().magnitude()) - log2_uint(x.denom().magnitude())
}

/// If |x| = 2^k exactly, returns k.
pub fn pow2_exponent(x: &Q) -> Option<i64> {
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();
    let is_pow2 = |v: &BigUint| v.count_ones() == 1;
    if !is_pow2(n) || !is_pow2(d) {
        return None;
    }
    Some(n.bits() as i64 - d.bits() as i64)
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// With no prime factor below the trial bound, v < 2^63 has at most three
/// prime factors; this resolves the prime-power cases p² and p³.
fn prime_root(v: u64) -> Option<(u64, i64)> {
    for k in [2u32, 3] {
        let r = (v as f64).powf(1.0 / k as f64).round() as u64;
        for c in r.saturating_sub(1)..=r + 1 {
            if c.checked_pow(k) == Some(v) && is_prime_u64(c) {
                return Some((c, k as i64));
            }
        }
    }
    None
}

fn factor_into(n: &BigUint, sign: i64, out: &mut BTreeMap<u64, i64>) -> Result<()> {
    let Some(mut v) = n.to_u64().filter(|&v| v <= 1u64 << 63) else {
        return Err(Error::Undecidable(format!("{n} exceeds the 2^63 factorization budget")));
    };
    let mut p = 2u64;
    while p <= TRIAL_BOUND && p * p <= v {
        while v % p == 0 {
            *out.entry(p).or_insert(0) += sign;
            v /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if v > 1 {
        if v <= TRIAL_BOUND * TRIAL_BOUND || is_prime_u64(v) {
            *out.entry(v).or_insert(0) += sign;
        } else if let Some((r, k)) = prime_root(v) {
            *out.entry(r).or_insert(0) += sign * k;
        } else {
            return Err(Error::Undecidable(format!(
                "cofactor {v} of {n} is composite with no factor below {TRIAL_BOUND}"
            )));
        }
    }
    Ok(())
}

/// Prime-exponent vector of |x|: |x| = Π p^{e_p}. Zero exponents are omitted.
pub fn exponent_vector(x: &Q) -> Result<BTreeMap<u64, i64>> {
    if x.is_zero() {
        return Err(Error::Domain("exponent vector of zero".into()));
    }
    let mut out = BTreeMap::new();
    factor_into(x.numer().magnitude(), 1, &mut out)?;
    factor_into(x.denom().magnitude(), -1, &mut out)?;
    out.retain(|_, e| *e != 0);
    Ok(out)
}

/// Whether two exponent vectors are parallel, i.e. `u^a = v^b` for some
/// integers (a, b) ≠ (0, 0). The zero vector is parallel to everything.
pub fn parallel(u: &BTreeMap<u64, i64>, v: &BTreeMap<u64, i64>) -> bool {
    let keys: std::collections::BTreeSet<u64> = u.keys().chain(v.keys()).copied().collect();
    let ks: Vec<u64> = keys.into_iter().collect();
    let get = |m: &BTreeMap<u64, i64>, k: u64| *m.get(&k).unwrap_or(&0) as i128;
    for a in 0..ks.len() {
        for b in (a + 1)..ks.len() {
            let det = get(u, ks[a]) * get(v, ks[b]) - get(u, ks[b]) * get(v, ks[a]);
            if det != 0 {
                return false;
            }
        }
    }
    true
}

/// |x| as (numerator, denominator) magnitudes.
pub fn abs_parts(x: &Q) -> (BigUint, BigUint) {
    (x.numer().magnitude().clone(), x.denom().magnitude().clone())
}

pub fn from_parts(n: BigUint, d: BigUint) -> Q {
    Q::new(BigInt::from_biguint(Sign::Plus, n), BigInt::from_biguint(Sign::Plus, d))
}
