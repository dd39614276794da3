//! Empirical distances to the standard Gaussian.
//!
//! The convex-set distance d_c cannot be computed; `convex_class_distance`
//! takes the supremum over a fixed finite subclass of convex sets instead,
//! which is a lower bound on d_c of the empirical law.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{param, Result};
use crate::report::{sig17, sig17_vec};

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Distribution function of χ²₂.
pub fn chi2_2_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-0.5 * x).exp_m1()
    }
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return param("no samples");
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return param("samples contain non-finite values");
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    Ok(xs)
}

/// sup_x |F_n(x) − F(x)| for a continuous reference F.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let xs = sorted_finite(samples)?;
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// KS distance of |W|² against χ²₂.
pub fn chi2_ks(points: &[[f64; 2]]) -> Result<f64> {
    let r2: Vec<f64> = points.iter().map(|p| p[0] * p[0] + p[1] * p[1]).collect();
    ks_distance(&r2, chi2_2_cdf)
}

/// The declared subclass: half-spaces {u_θ·x ≤ t}, centred balls {|x| ≤ r}
/// and lower-left orthants (−∞, a] × (−∞, b].
#[derive(Debug, Clone, Serialize)]
pub struct ConvexClass {
    pub directions: usize,
    #[serde(serialize_with = "sig17_vec")]
    pub offsets: Vec<f64>,
    #[serde(serialize_with = "sig17_vec")]
    pub radii: Vec<f64>,
    #[serde(serialize_with = "sig17_vec")]
    pub corners: Vec<f64>,
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
}

impl Default for ConvexClass {
    fn default() -> Self {
        Self {
            directions: 64,
            offsets: linspace(-4.0, 4.0, 41),
            radii: linspace(0.0, 4.0, 41),
            corners: linspace(-2.85, 2.85, 20),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceReport {
    pub samples: usize,
    #[serde(serialize_with = "sig17_vec")]
    pub ks_marginals: Vec<f64>,
    #[serde(serialize_with = "sig17")]
    pub chi2_ks: f64,
    /// max of the three parts below; a lower bound on d_c
    #[serde(serialize_with = "sig17")]
    pub convex_proxy: f64,
    #[serde(serialize_with = "sig17")]
    pub halfspace: f64,
    #[serde(serialize_with = "sig17")]
    pub ball: f64,
    #[serde(serialize_with = "sig17")]
    pub rectangle: f64,
    pub class: ConvexClass,
    pub note: &'static str,
}

/// Number of sorted values ≤ t.
fn count_le(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&x| x <= t)
}

pub fn convex_class_distance(points: &[[f64; 2]]) -> Result<DistanceReport> {
    if points.is_empty() {
        return param("no samples");
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return param("samples contain non-finite values");
    }
    let class = ConvexClass::default();
    let n = points.len() as f64;

    let mut halfspace = 0.0f64;
    for k in 0..class.directions {
        let th = 2.0 * PI * k as f64 / class.directions as f64;
        let (s, c) = th.sin_cos();
        let mut proj: Vec<f64> = points.iter().map(|p| c * p[0] + s * p[1]).collect();
        proj.sort_unstable_by(f64::total_cmp);
        for &t in &class.offsets {
            halfspace = halfspace.max((count_le(&proj, t) as f64 / n - normal_cdf(t)).abs());
        }
    }

    let mut r2: Vec<f64> = points.iter().map(|p| p[0] * p[0] + p[1] * p[1]).collect();
    r2.sort_unstable_by(f64::total_cmp);
    let ball =
        class.radii.iter().map(|&r| (count_le(&r2, r * r) as f64 / n - chi2_2_cdf(r * r)).abs()).fold(0.0, f64::max);

    // cell (a, b) counts points with x ≤ corners[a] and y ≤ corners[b]
    let m = class.corners.len();
    let mut grid = vec![0usize; m * m];
    for p in points {
        let a = class.corners.partition_point(|&c| c < p[0]);
        let b = class.corners.partition_point(|&c| c < p[1]);
        if a < m && b < m {
            grid[a * m + b] += 1;
        }
    }
    for a in 0..m {
        for b in 0..m {
            let mut v = grid[a * m + b];
            if a > 0 {
                v += grid[(a - 1) * m + b];
            }
            if b > 0 {
                v += grid[a * m + b - 1];
            }
            if a > 0 && b > 0 {
                v -= grid[(a - 1) * m + b - 1];
            }
            grid[a * m + b] = v;
        }
    }
    let mut rectangle = 0.0f64;
    for (a, &x) in class.corners.iter().enumerate() {
        for (b, &y) in class.corners.iter().enumerate() {
            rectangle = rectangle.max((grid[a * m + b] as f64 / n - normal_cdf(x) * normal_cdf(y)).abs());
        }
    }

    let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
    Ok(DistanceReport {
        samples: points.len(),
        ks_marginals: vec![ks_distance(&xs, normal_cdf)?, ks_distance(&ys, normal_cdf)?],
        chi2_ks: chi2_ks(points)?,
        convex_proxy: halfspace.max(ball).max(rectangle),
        halfspace,
        ball,
        rectangle,
        class,
        note: "convex_proxy is a supremum over a finite subclass of convex sets: a lower bound on d_c, not d_c",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn normals(k: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut r = crate::rng::from_seed(seed);
        let z = Normal::standard();
        (0..k).map(|_| [z.inverse_cdf(r.random()), z.inverse_cdf(r.random())]).collect()
    }

    #[test]
    fn point_mass_at_zero_is_half_away() {
        assert_eq!(ks_distance(&[0.0; 10], normal_cdf).unwrap(), 0.5);
        let r = convex_class_distance(&[[0.0, 0.0]; 10]).unwrap();
        assert_eq!(r.ks_marginals, vec![0.5, 0.5]);
        assert!(r.convex_proxy >= 0.5);
    }

    #[test]
    fn ks_small_cases() {
        // one sample at the median: F_n jumps 0 → 1 where F = 1/2
        assert!((ks_distance(&[0.0], normal_cdf).unwrap() - 0.5).abs() < 1e-15);
        let d = ks_distance(&[0.1, 0.9, 0.5], |x| x).unwrap();
        assert!((d - (1.0f64 / 3.0 - 0.1).max(0.5 - 1.0 / 3.0).max(0.9 - 2.0 / 3.0).max(1.0 - 0.9)).abs() < 1e-15);
        assert!(ks_distance(&[], normal_cdf).is_err());
        assert!(ks_distance(&[f64::NAN], normal_cdf).is_err());
    }

    #[test]
    fn gaussian_samples_are_close() {
        let pts = normals(100_000, 21);
        let r = convex_class_distance(&pts).unwrap();
        assert!(r.ks_marginals.iter().all(|&d| d <= 0.006), "{:?}", r.ks_marginals);
        assert!(r.chi2_ks <= 0.006);
        assert!(r.convex_proxy <= 0.01, "{}", r.convex_proxy);
    }

    #[test]
    fn proxy_dominates_axis_halfspaces() {
        let mut pts = normals(5_000, 3);
        pts.iter_mut().for_each(|p| p[0] = 0.7 * p[0] + 0.3);
        let r = convex_class_distance(&pts).unwrap();
        let offsets = ConvexClass::default().offsets;
        for c in 0..2 {
            let mut v: Vec<f64> = pts.iter().map(|p| p[c]).collect();
            v.sort_unstable_by(f64::total_cmp);
            let axis = offsets
                .iter()
                .map(|&t| (count_le(&v, t) as f64 / v.len() as f64 - normal_cdf(t)).abs())
                .fold(0.0, f64::max);
            assert!(r.convex_proxy >= axis);
        }
        assert!((0.0..=1.0).contains(&r.convex_proxy));
    }

    #[test]
    fn rectangle_counts_match_brute_force() {
        let pts = normals(700, 8);
        let r = convex_class_distance(&pts).unwrap();
        let corners = ConvexClass::default().corners;
        let mut worst = 0.0f64;
        for &a in &corners {
            for &b in &corners {
                let k = pts.iter().filter(|p| p[0] <= a && p[1] <= b).count();
                worst = worst.max((k as f64 / 700.0 - normal_cdf(a) * normal_cdf(b)).abs());
            }
        }
        assert!((worst - r.rectangle).abs() < 1e-15);
    }

    #[test]
    fn chi2_cdf_values() {
        assert_eq!(chi2_2_cdf(-1.0), 0.0);
        assert!((chi2_2_cdf(-2.0 * 0.05f64.ln()) - 0.95).abs() < 1e-15);
    }
}
