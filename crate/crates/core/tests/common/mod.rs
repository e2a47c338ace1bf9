//! Reference implementations shared by the integration tests. Each one is
//! written from the textbook definition and shares no code with the crate.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Straight-line moving-average decomposition: (trend, seasonal).
pub fn decompose_oracle(x: &[f64], p: usize) -> (Vec<Option<f64>>, Vec<f64>) {
    let n = x.len();
    let h = p / 2;
    let mut trend = vec![None; n];
    for i in h..n.saturating_sub(h) {
        let t = if p % 2 == 1 {
            x[i - h..=i + h].iter().sum::<f64>() / p as f64
        } else {
            let inner: f64 = x[i - h + 1..i + h].iter().sum();
            (0.5 * x[i - h] + inner + 0.5 * x[i + h]) / p as f64
        };
        trend[i] = Some(t);
    }
    let mut profile = vec![0.0; p];
    for (r, slot) in profile.iter_mut().enumerate() {
        let d: Vec<f64> = (r..n).step_by(p).filter_map(|i| trend[i].map(|t| x[i] - t)).collect();
        *slot = d.iter().sum::<f64>() / d.len() as f64;
    }
    let centre = profile.iter().sum::<f64>() / p as f64;
    let seasonal = (0..n).map(|i| profile[i % p] - centre).collect();
    (trend, seasonal)
}

/// `P(|T| < t)` for integer degrees of freedom, by the finite series in
/// `theta = atan(t / sqrt(nu))`.
pub fn t_abs_cdf(t: f64, nu: u32) -> f64 {
    let theta = (t / f64::from(nu).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    if nu % 2 == 1 {
        if nu == 1 {
            return 2.0 * theta / PI;
        }
        let (mut term, mut acc, mut k) = (c, c, 1);
        while 2 * k + 1 <= nu - 2 {
            term *= (2 * k) as f64 / (2 * k + 1) as f64 * c * c;
            acc += term;
            k += 1;
        }
        2.0 / PI * (theta + s * acc)
    } else {
        let (mut term, mut acc, mut k) = (1.0, 1.0, 1);
        while 2 * k <= nu - 2 {
            term *= (2 * k - 1) as f64 / (2 * k) as f64 * c * c;
            acc += term;
            k += 1;
        }
        s * acc
    }
}

pub fn t_upper_quantile(tail: f64, nu: u32) -> f64 {
    let target = 1.0 - 2.0 * tail;
    let (mut lo, mut hi) = (0.0_f64, 1e4_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_abs_cdf(mid, nu) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generalized ESD by brute force; returns sorted indices.
pub fn esd_reference(values: &[f64], k: usize, alpha: f64) -> Vec<usize> {
    let n = values.len();
    let mut live: Vec<usize> = (0..n).collect();
    let mut removed = Vec::new();
    let mut count = 0;
    for j in 1..=k {
        let m = live.len() as f64;
        let mean = live.iter().map(|&i| values[i]).sum::<f64>() / m;
        let sd = (live.iter().map(|&i| (values[i] - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
        let mut pos = 0;
        for q in 1..live.len() {
            if (values[live[q]] - mean).abs() > (values[live[pos]] - mean).abs() {
                pos = q;
            }
        }
        let r = (values[live[pos]] - mean).abs() / sd;
        let nu = (n - j - 1) as u32;
        let t = t_upper_quantile(alpha / (2.0 * (n - j + 1) as f64), nu);
        let lambda = (n - j) as f64 * t / ((f64::from(nu) + t * t) * (n - j + 1) as f64).sqrt();
        if r > lambda {
            count = j;
        }
        removed.push(live.remove(pos));
    }
    let mut out = removed[..count].to_vec();
    out.sort_unstable();
    out
}

/// Normal CDF via a composite Simpson integral of the density.
pub fn normal_cdf(z: f64) -> f64 {
    let steps = 20_000;
    let (a, b) = (0.0, z.abs());
    let h = (b - a) / steps as f64;
    let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    let mut acc = f(a) + f(b);
    for i in 1..steps {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let half = acc * h / 3.0;
    if z >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}
