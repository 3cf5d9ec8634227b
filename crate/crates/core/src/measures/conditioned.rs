//! Sampling μ conditioned on a thin window, where rejection from iid samples
//! would accept almost nothing. Particles descend the cylinder tree one symbol
//! at a time, choosing only among children whose cylinder meets the window and
//! carrying the children's total probability as a weight. Resampling happens
//! only when the effective sample size halves, which keeps early symbols
//! diverse. The mean weight estimates the window mass.

use rand::Rng;

use crate::affine::DiagonalIFS;
use crate::error::{Error, Result};

use super::{rng, sample_depth};

/// The window [lo, lo + width) on one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisWindow {
    pub lo: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedOptions {
    pub particles: usize,
    /// Conditioning stops once every windowed side is below width·2^{-stop_bits}.
    pub stop_bits: u32,
    pub max_depth: usize,
    /// Completion attempts allowed per requested point.
    pub attempts_per_point: usize,
}

impl Default for ConditionedOptions {
    fn default() -> Self {
        Self { particles: 4096, stop_bits: 12, max_depth: 4096, attempts_per_point: 1000 }
    }
}

/// Points of μ conditioned on the window. Windowed coordinates are offsets
/// from the window's `lo`; other coordinates are absolute.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditioned {
    pub points: Vec<[f64; 2]>,
    pub mass: f64,
    pub depth: usize,
}

#[derive(Clone, Copy)]
struct Particle {
    lam: [f64; 2],
    off: [f64; 2],
}

pub fn sample_conditioned(
    ifs: &DiagonalIFS,
    windows: [Option<AxisWindow>; 2],
    count: usize,
    seed: u64,
    opts: ConditionedOptions,
) -> Result<Conditioned> {
    for w in windows.iter().flatten() {
        if !(w.width > 0.0) || !w.lo.is_finite() {
            return Err(Error::Domain(format!("bad window {w:?}")));
        }
        if w.width < 1e-13 * (1.0 + w.lo.abs()) {
            return Err(Error::Domain(format!("window width {} below f64 resolution at {}", w.width, w.lo)));
        }
    }
    let hull = ifs.hull_rect();
    let k = ifs.len();
    let lf: Vec<[f64; 2]> = (0..k).map(|i| ifs.lf(i)).collect();
    let af: Vec<[f64; 2]> = (0..k).map(|i| ifs.af(i)).collect();
    let weights = ifs.weights();
    let lo = [windows[0].map_or(0.0, |w| w.lo), windows[1].map_or(0.0, |w| w.lo)];
    let mut r = rng(seed, 7);

    let hits = |p: &Particle| -> bool {
        (0..2).all(|j| match windows[j] {
            None => true,
            Some(w) => {
                let a = p.off[j] + p.lam[j] * hull.lo[j];
                let b = p.off[j] + p.lam[j] * hull.hi[j];
                a.min(b) < w.width && a.max(b) >= 0.0
            }
        })
    };
    let narrow = |p: &Particle| -> bool {
        (0..2).all(|j| match windows[j] {
            None => true,
            Some(w) => p.lam[j].abs() * (hull.hi[j] - hull.lo[j]) <= w.width * (-(opts.stop_bits as f64)).exp2(),
        })
    };

    let np = opts.particles.max(1);
    let root = Particle { lam: [1.0, 1.0], off: [-lo[0], -lo[1]] };
    if !hits(&root) {
        return Err(Error::EmptyWindow { mass: 0.0 });
    }
    let pf = weights.pf();
    let mut parts = vec![root; np];
    let mut wt = vec![1.0f64; np];
    let mut mass = 1.0f64;
    let mut depth = 0;
    let mut kids: Vec<(Particle, f64)> = Vec::with_capacity(k);
    while !parts.iter().zip(&wt).all(|(p, &w)| w == 0.0 || narrow(p)) {
        if depth >= opts.max_depth {
            return Err(Error::Domain(format!("conditioning did not resolve the window by depth {depth}")));
        }
        depth += 1;
        for (p, w) in parts.iter_mut().zip(wt.iter_mut()) {
            if *w == 0.0 {
                continue;
            }
            // Draw among the children that meet the window; the particle
            // carries their total probability as its weight increment.
            kids.clear();
            let mut total = 0.0;
            for i in 0..k {
                let c = Particle {
                    lam: [p.lam[0] * lf[i][0], p.lam[1] * lf[i][1]],
                    off: [p.off[0] + p.lam[0] * af[i][0], p.off[1] + p.lam[1] * af[i][1]],
                };
                if hits(&c) {
                    total += pf[i];
                    kids.push((c, total));
                }
            }
            if kids.is_empty() {
                *w = 0.0;
                continue;
            }
            let u = r.gen::<f64>() * total;
            let pick = kids.iter().position(|&(_, c)| u < c).unwrap_or(kids.len() - 1);
            *p = kids[pick].0;
            *w *= total;
        }
        let mean = wt.iter().sum::<f64>() / np as f64;
        if mean == 0.0 {
            return Err(Error::EmptyWindow { mass: 0.0 });
        }
        mass *= mean;
        wt.iter_mut().for_each(|w| *w /= mean);
        let ess = (np as f64).powi(2) / wt.iter().map(|w| w * w).sum::<f64>();
        if ess < 0.5 * np as f64 {
            let offset: f64 = r.gen();
            let mut cum = 0.0;
            let mut j = 0;
            let mut next = Vec::with_capacity(np);
            for (p, &w) in parts.iter().zip(&wt) {
                cum += w;
                while j < np && (j as f64 + offset) < cum {
                    next.push(*p);
                    j += 1;
                }
            }
            while next.len() < np {
                next.push(*next.last().expect("some particle survives"));
            }
            parts = next;
            wt = vec![1.0; np];
        }
    }

    let tail = sample_depth(ifs);
    let mut cdf = Vec::with_capacity(np);
    let mut acc = 0.0;
    for &w in &wt {
        acc += w;
        cdf.push(acc);
    }
    let inside = |x: &[f64; 2]| (0..2).all(|j| windows[j].map_or(true, |w| x[j] >= 0.0 && x[j] < w.width));
    let mut points = Vec::with_capacity(count);
    let mut tries = 0usize;
    let budget = opts.attempts_per_point.saturating_mul(count.max(1));
    while points.len() < count {
        if tries >= budget {
            return Err(Error::MassTooSmall {
                acceptance: points.len() as f64 / tries.max(1) as f64,
                detail: "conditioned completion rejected too often".into(),
            });
        }
        tries += 1;
        let u = r.gen::<f64>() * acc;
        let p = parts[cdf.partition_point(|&c| c <= u).min(np - 1)];
        let mut x = [0.0f64; 2];
        let mut scale = [1.0f64; 2];
        for _ in 0..tail {
            let i = weights.symbol_for(r.gen::<u64>());
            for j in 0..2 {
                x[j] += scale[j] * af[i][j];
                scale[j] *= lf[i][j];
            }
        }
        let y = [p.off[0] + p.lam[0] * x[0], p.off[1] + p.lam[1] * x[1]];
        if inside(&y) {
            points.push(y);
        }
    }
    mass *= count as f64 / tries.max(1) as f64;
    Ok(Conditioned { points, mass, depth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::sample;

    fn carpet() -> DiagonalIFS {
        DiagonalIFS::from_strs(
            &[("1/2", "1/3", ["0", "0"]), ("1/2", "1/3", ["1/2", "0"]), ("1/2", "1/3", ["0", "2/3"])],
            &["1/3", "1/3", "1/3"],
        )
        .unwrap()
    }

    #[test]
    fn mass_matches_rejection_on_a_wide_window() {
        let f = carpet();
        let win = AxisWindow { lo: 0.1, width: 0.3 };
        let c = sample_conditioned(&f, [None, Some(win)], 20_000, 3, ConditionedOptions::default()).unwrap();
        let s = sample(&f, 200_000, 4).unwrap();
        let ys = s.ys.as_ref().unwrap();
        let frac = ys.iter().filter(|&&y| y >= 0.1 && y < 0.4).count() as f64 / ys.len() as f64;
        assert!((c.mass - frac).abs() < 0.02, "{} vs {}", c.mass, frac);
        assert!(c.points.iter().all(|p| p[1] >= 0.0 && p[1] < 0.3));
        let mean_x_c = c.points.iter().map(|p| p[0]).sum::<f64>() / c.points.len() as f64;
        let sel: Vec<f64> = (0..s.len()).filter(|&i| ys[i] >= 0.1 && ys[i] < 0.4).map(|i| s.xs[i]).collect();
        let mean_x_r = sel.iter().sum::<f64>() / sel.len() as f64;
        assert!((mean_x_c - mean_x_r).abs() < 0.02);
    }

    #[test]
    fn thin_window_mass_is_cylinder_mass() {
        // y ∈ [0, 3^{-20}) is the cylinder 0/1 repeated on the y axis: mass (2/3)^20.
        let f = carpet();
        let win = AxisWindow { lo: 0.0, width: 3f64.powi(-20) * 0.999_999 };
        let c = sample_conditioned(&f, [None, Some(win)], 2000, 9, ConditionedOptions::default()).unwrap();
        let exact = (2.0f64 / 3.0).powi(20);
        assert!((c.mass / exact - 1.0).abs() < 0.15, "{} vs {}", c.mass, exact);
    }

    #[test]
    fn empty_window_is_reported() {
        let f = carpet();
        let win = AxisWindow { lo: 0.4, width: 0.2 };
        let e = sample_conditioned(&f, [None, Some(win)], 10, 1, ConditionedOptions::default());
        assert!(matches!(e, Err(Error::EmptyWindow { .. })));
    }
}
