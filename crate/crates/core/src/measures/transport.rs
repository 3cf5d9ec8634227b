use rand::Rng;

use crate::error::{Error, Result};

use super::{rng, SampleMeasure};

/// Options for the 2D solver, which matches equal-size subsamples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W1Options {
    pub max_points: usize,
    pub seed: u64,
}

impl Default for W1Options {
    fn default() -> Self {
        Self { max_points: 4096, seed: 0 }
    }
}

/// Minimum-cost perfect matching on a square cost matrix (row-major, n×n).
/// Returns (total cost, column assigned to each row).
pub fn hungarian(cost: &[f64], n: usize) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), n * n);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    let total = (0..n).map(|i| cost[i * n + assign[i]]).sum();
    (total, assign)
}

fn w1_1d(a: &[f64], wa: &[f64], b: &[f64], wb: &[f64]) -> f64 {
    let ta: f64 = wa.iter().sum();
    let tb: f64 = wb.iter().sum();
    let mut ev: Vec<(f64, f64)> = a
        .iter()
        .zip(wa)
        .map(|(&x, &w)| (x, w / ta))
        .chain(b.iter().zip(wb).map(|(&x, &w)| (x, -w / tb)))
        .collect();
    ev.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut cdf = 0.0;
    let mut acc = 0.0;
    for k in 0..ev.len() {
        cdf += ev[k].1;
        if k + 1 < ev.len() {
            acc += cdf.abs() * (ev[k + 1].0 - ev[k].0);
        }
    }
    acc
}

/// Draws `k` points: without replacement when weights are uniform, otherwise
/// proportionally to weight.
fn draw(m: &SampleMeasure, k: usize, seed: u64, stream: u64) -> Vec<[f64; 2]> {
    let n = m.len();
    let uniform = m.w.iter().all(|&w| w == m.w[0]);
    if uniform && k == n {
        return (0..n).map(|i| m.point(i)).collect();
    }
    let mut r = rng(seed, stream);
    if uniform && k <= n {
        let idx = rand::seq::index::sample(&mut r, n, k);
        return idx.iter().map(|i| m.point(i)).collect();
    }
    let total: f64 = m.w.iter().sum();
    let mut cum = Vec::with_capacity(n);
    let mut c = 0.0;
    for &w in &m.w {
        c += w / total;
        cum.push(c);
    }
    (0..k)
        .map(|_| {
            let u: f64 = r.gen::<f64>() * c;
            let i = cum.partition_point(|&x| x <= u).min(n - 1);
            m.point(i)
        })
        .collect()
}

/// W1 between two sample measures. Exact in 1D; in 2D an optimal matching of
/// equal-size subsamples of at most `opts.max_points` points.
pub fn wasserstein1_with(a: &SampleMeasure, b: &SampleMeasure, opts: W1Options) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    if a.len() == 0 || b.len() == 0 {
        return Err(Error::Empty("transport between empty measures".into()));
    }
    if a.dim() == 1 {
        return Ok(w1_1d(&a.xs, &a.w, &b.xs, &b.w));
    }
    let k = a.len().min(b.len()).min(opts.max_points.max(1));
    let pa = draw(a, k, opts.seed, 101);
    let pb = draw(b, k, opts.seed, 102);
    let mut cost = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            cost[i * k + j] = ((pa[i][0] - pb[j][0]).powi(2) + (pa[i][1] - pb[j][1]).powi(2)).sqrt();
        }
    }
    Ok(hungarian(&cost, k).0 / k as f64)
}

pub fn wasserstein1(a: &SampleMeasure, b: &SampleMeasure) -> Result<f64> {
    wasserstein1_with(a, b, W1Options::default())
}

/// Upper bound on the Lévy–Prokhorov distance, d_LP ≤ √W1, capped at 1.
pub fn lp_upper(w1: f64) -> f64 {
    w1.max(0.0).sqrt().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn transport_examples() {
        let a = SampleMeasure::new_1d(vec![0.1, 0.5, 0.9]);
        assert_eq!(wasserstein1(&a, &a).unwrap(), 0.0);
        let d0 = SampleMeasure::dirac(&[0.0]);
        let dt = SampleMeasure::dirac(&[0.3]);
        assert!((wasserstein1(&d0, &dt).unwrap() - 0.3).abs() < 1e-15);
        let n = 2000;
        let t = 0.25;
        let leb = SampleMeasure::new_1d((0..n).map(|i| (i as f64 + 0.5) / n as f64).collect());
        let sh = SampleMeasure::new_1d((0..n).map(|i| (i as f64 + 0.5) / n as f64 + t).collect());
        assert!((wasserstein1(&leb, &sh).unwrap() - t).abs() < 1e-9);
        let p = SampleMeasure::new_2d(vec![0.0], vec![0.0]);
        assert!(matches!(wasserstein1(&p, &d0), Err(Error::DimensionMismatch { .. })));
        assert!((lp_upper(0.04) - 0.2).abs() < 1e-15);
        assert_eq!(lp_upper(4.0), 1.0);
    }

    #[test]
    fn planar_matching_recovers_translation() {
        let xs: Vec<f64> = (0..100).map(|i| (i % 10) as f64 / 10.0).collect();
        let ys: Vec<f64> = (0..100).map(|i| (i / 10) as f64 / 10.0).collect();
        let a = SampleMeasure::new_2d(xs.clone(), ys.clone());
        let b = SampleMeasure::new_2d(xs.iter().map(|x| x + 0.03).collect(), ys.iter().map(|y| y + 0.04).collect());
        assert!((wasserstein1(&a, &b).unwrap() - 0.05).abs() < 1e-9);
    }

    #[test]
    fn hungarian_small() {
        let c = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (total, assign) = hungarian(&c, 3);
        assert_eq!(total, 5.0);
        assert_eq!(assign, vec![1, 0, 2]);
    }

    fn cloud(v: &[(f64, f64)]) -> SampleMeasure {
        SampleMeasure::new_2d(v.iter().map(|p| p.0).collect(), v.iter().map(|p| p.1).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn w1_is_a_metric_1d(
            a in prop::collection::vec(-1.0f64..1.0, 1..30),
            b in prop::collection::vec(-1.0f64..1.0, 1..30),
            c in prop::collection::vec(-1.0f64..1.0, 1..30),
        ) {
            let (a, b, c) = (SampleMeasure::new_1d(a), SampleMeasure::new_1d(b), SampleMeasure::new_1d(c));
            let ab = wasserstein1(&a, &b).unwrap();
            prop_assert!((ab - wasserstein1(&b, &a).unwrap()).abs() < 1e-9);
            prop_assert!(ab <= wasserstein1(&a, &c).unwrap() + wasserstein1(&c, &b).unwrap() + 1e-9);
        }

        #[test]
        fn w1_is_a_metric_2d(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
            c in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
        ) {
            let (a, b, c) = (cloud(&a), cloud(&b), cloud(&c));
            let ab = wasserstein1(&a, &b).unwrap();
            prop_assert!((ab - wasserstein1(&b, &a).unwrap()).abs() < 1e-9);
            prop_assert!(ab <= wasserstein1(&a, &c).unwrap() + wasserstein1(&c, &b).unwrap() + 1e-9);
        }
    }
}
