//! Homogeneity test for dense graphs.
//!
//! A graph is summarised by its edge count T₁ and 4-cycle count T₂. Under
//! G(n, p) the normalised edge count W₁ and the edge-corrected, normalised
//! 4-cycle count W₂ are uncorrelated with unit variance and jointly close to a
//! standard bivariate normal, so W₁² + W₂² is compared with the χ²₂ quantile.
//! The confidence set collects every p the graph is compatible with; the test
//! rejects homogeneity when that set is empty.

use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::graph::{count_edges, count_four_cycles, Graph};
use crate::numeric::{binom, Dd};
use crate::report::{sig17, sig17_pairs};

fn check_open_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return param(format!("p must lie strictly inside (0, 1), got {p}"));
    }
    Ok(())
}

fn check_closed_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return param(format!("p must lie in [0, 1], got {p}"));
    }
    Ok(())
}

/// σ₁² = C(n,2) p (1 − p), the variance of the edge count.
pub fn sigma1_sq(n: usize, p: f64) -> Result<f64> {
    check_closed_p(p)?;
    if n < 2 {
        return param(format!("sigma1 needs n >= 2, got {n}"));
    }
    Ok(binom(n as u64, 2) as f64 * p * (1.0 - p))
}

/// Both closed forms of σ₂², the variance of the corrected 4-cycle count:
///
/// 3·C(n,4)·(p⁴(1−4p³+3p⁴) + (4(n−4)+2)·p⁶(1−2p+p²))
///
/// n₍₄₎(n−3)(p⁶+p⁸−2p⁷)/2 + n₍₄₎(p⁴+p⁸−2p⁶)/8
///
/// evaluated in double-double arithmetic with exact integer coefficients.
pub fn sigma2_sq_forms(n: usize, p: f64) -> (f64, f64) {
    let n = n as u64;
    let one = Dd::from_f64(1.0);
    let pd = Dd::from_f64(p);
    let (p2, p3, p4) = (pd * pd, pd.powi(3), pd.powi(4));
    let (p6, p7, p8) = (p3 * p3, p4 * p3, p4 * p4);

    let c4 = Dd::from_u128(3 * binom(n, 4));
    let lin = Dd::from_u128((4 * (n - 4) + 2) as u128);
    let first = p4 * (one - p3.scale(4.0) + p4.scale(3.0)) + lin * p6 * (one - pd.scale(2.0) + p2);
    let form_a = c4 * first;

    let falling = (n as u128) * (n as u128 - 1) * (n as u128 - 2) * (n as u128 - 3);
    let t1 = Dd::from_u128(falling * (n as u128 - 3)) * (p6 + p8 - p7.scale(2.0));
    let t2 = Dd::from_u128(falling) * (p4 + p8 - p6.scale(2.0));
    let form_b = t1.scale(0.5) + t2.scale(0.125);
    (form_a.to_f64(), form_b.to_f64())
}

/// σ₂²; both closed forms are evaluated and must agree.
pub fn sigma2_sq(n: usize, p: f64) -> Result<f64> {
    check_closed_p(p)?;
    if n < 5 {
        return param(format!("sigma2 needs n >= 5, got {n}"));
    }
    let (a, b) = sigma2_sq_forms(n, p);
    let scale = a.abs().max(b.abs());
    if (a - b).abs() > 1e-9 * scale {
        return Err(Error::Consistency(format!("sigma2^2 forms disagree at n={n}, p={p}: {a} vs {b}")));
    }
    Ok(b)
}

/// W₁, W₂ and their ingredients for one graph at one p.
#[derive(Debug, Clone, Serialize)]
pub struct TestStatistics {
    pub n: usize,
    #[serde(serialize_with = "sig17")]
    pub p: f64,
    pub t1: u64,
    pub t2: u64,
    #[serde(serialize_with = "sig17")]
    pub sigma1_sq: f64,
    #[serde(serialize_with = "sig17")]
    pub sigma2_sq: f64,
    #[serde(serialize_with = "sig17")]
    pub w1: f64,
    #[serde(serialize_with = "sig17")]
    pub w2: f64,
}

impl TestStatistics {
    pub fn chi2(&self) -> f64 {
        self.w1 * self.w1 + self.w2 * self.w2
    }
}

/// The sufficient statistics (n, T₁, T₂) of a graph; evaluates W(p) for any p
/// without recounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphCounts {
    pub n: usize,
    pub t1: u64,
    pub t2: u64,
}

impl GraphCounts {
    pub fn of(g: &Graph) -> Result<Self> {
        if g.n() < 5 {
            return param(format!("the homogeneity statistics need n >= 5, got {}", g.n()));
        }
        Ok(Self { n: g.n(), t1: count_edges(g), t2: count_four_cycles(g) })
    }

    /// Numerators of W₁ and W₂: T₁ − C(n,2)p and T₂ − 2C(n−2,2)p³T₁ + 9C(n,4)p⁴.
    pub fn numerators(&self, p: f64) -> (f64, f64) {
        let n = self.n as u64;
        let pd = Dd::from_f64(p);
        let t1 = Dd::from_u128(self.t1 as u128);
        let x1 = t1 - Dd::from_u128(binom(n, 2)) * pd;
        let x2 = Dd::from_u128(self.t2 as u128) - Dd::from_u128(2 * binom(n - 2, 2)) * pd.powi(3) * t1
            + Dd::from_u128(9 * binom(n, 4)) * pd.powi(4);
        (x1.to_f64(), x2.to_f64())
    }

    pub fn stats(&self, p: f64) -> Result<TestStatistics> {
        check_open_p(p)?;
        let s1 = sigma1_sq(self.n, p)?;
        let s2 = sigma2_sq(self.n, p)?;
        let (x1, x2) = self.numerators(p);
        Ok(TestStatistics {
            n: self.n,
            p,
            t1: self.t1,
            t2: self.t2,
            sigma1_sq: s1,
            sigma2_sq: s2,
            w1: x1 / s1.sqrt(),
            w2: x2 / s2.sqrt(),
        })
    }

    /// S(p) = W₁(p)² + W₂(p)². `p` must lie in (0, 1).
    pub fn chi2_at(&self, p: f64) -> f64 {
        let (x1, x2) = self.numerators(p);
        let s1 = binom(self.n as u64, 2) as f64 * p * (1.0 - p);
        let (_, s2) = sigma2_sq_forms(self.n, p);
        x1 * x1 / s1 + x2 * x2 / s2
    }
}

pub fn w_stats(g: &Graph, p: f64) -> Result<TestStatistics> {
    check_open_p(p).map_err(|_| Error::Parameter(format!("degenerate variance: W needs 0 < p < 1, got {p}")))?;
    GraphCounts::of(g)?.stats(p)
}

/// q₁₋α of the χ² distribution with two degrees of freedom, −2 ln α.
pub fn chi2_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return param(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    Ok(-2.0 * alpha.ln())
}

/// Where the confidence set is searched for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchDomain {
    pub p_lo: f64,
    pub p_hi: f64,
    pub grid_step: f64,
}

impl Default for SearchDomain {
    fn default() -> Self {
        Self { p_lo: 0.01, p_hi: 0.99, grid_step: 1e-3 }
    }
}

/// Bisection tolerance for interval endpoints.
pub const ENDPOINT_TOL: f64 = 1e-8;

impl SearchDomain {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_lo > 0.0 && self.p_lo < self.p_hi && self.p_hi < 1.0) {
            return param(format!(
                "search domain must satisfy 0 < p_lo < p_hi < 1, got [{}, {}]",
                self.p_lo, self.p_hi
            ));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= self.p_hi - self.p_lo) {
            return param(format!("grid step {} does not fit the domain", self.grid_step));
        }
        Ok(())
    }

    /// Grid points p_lo, p_lo + h, ..., always ending exactly at p_hi.
    pub fn grid(&self) -> Vec<f64> {
        let steps = ((self.p_hi - self.p_lo) / self.grid_step + 1e-9).floor() as usize;
        let mut pts: Vec<f64> = (0..=steps).map(|k| self.p_lo + k as f64 * self.grid_step).collect();
        if let Some(last) = pts.last_mut() {
            if *last > self.p_hi {
                *last = self.p_hi;
            }
        }
        if self.p_hi - pts[pts.len() - 1] > 1e-12 {
            pts.push(self.p_hi);
        }
        pts
    }
}

/// C₁₋α: the p in the search domain with W₁² + W₂² ≤ q₁₋α, as closed intervals.
#[derive(Debug, Clone, Serialize)]
pub struct ConfidenceSet {
    #[serde(serialize_with = "sig17")]
    pub alpha: f64,
    #[serde(serialize_with = "sig17")]
    pub quantile: f64,
    pub domain: SearchDomain,
    #[serde(serialize_with = "sig17_pairs")]
    pub intervals: Vec<(f64, f64)>,
    /// Minimum of S over the grid.
    #[serde(serialize_with = "sig17")]
    pub statistic_min: f64,
    #[serde(serialize_with = "sig17")]
    pub argmin_p: f64,
}

impl ConfidenceSet {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, p: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= p && p <= b)
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

/// Shrinks [outside, inside] (in either order) onto the level crossing,
/// returning a point with S ≤ q within [`ENDPOINT_TOL`] of the crossing.
fn refine(counts: &GraphCounts, q: f64, mut outside: f64, mut inside: f64) -> f64 {
    while (outside - inside).abs() > ENDPOINT_TOL {
        let mid = 0.5 * (outside + inside);
        if counts.chi2_at(mid) <= q {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Grid scan of S(p) followed by bisection of every boundary crossing. An
/// interval narrower than the grid step can be missed.
pub fn confidence_set_from_counts(counts: &GraphCounts, alpha: f64, domain: SearchDomain) -> Result<ConfidenceSet> {
    domain.validate()?;
    let q = chi2_quantile(alpha)?;
    let grid = domain.grid();
    let values: Vec<f64> = grid.iter().map(|&p| counts.chi2_at(p)).collect();

    let (mut argmin, mut smin) = (0, f64::INFINITY);
    for (k, &s) in values.iter().enumerate() {
        if s < smin {
            smin = s;
            argmin = k;
        }
    }

    let mut intervals = Vec::new();
    let mut k = 0;
    while k < grid.len() {
        if values[k] > q {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < grid.len() && values[k + 1] <= q {
            k += 1;
        }
        let lo = if start == 0 { grid[0] } else { refine(counts, q, grid[start - 1], grid[start]) };
        let hi = if k + 1 == grid.len() { grid[k] } else { refine(counts, q, grid[k + 1], grid[k]) };
        intervals.push((lo, hi));
        k += 1;
    }

    Ok(ConfidenceSet { alpha, quantile: q, domain, intervals, statistic_min: smin, argmin_p: grid[argmin] })
}

pub fn confidence_set(g: &Graph, alpha: f64, domain: SearchDomain) -> Result<ConfidenceSet> {
    confidence_set_from_counts(&GraphCounts::of(g)?, alpha, domain)
}

/// Outcome of the conservative homogeneity test: reject iff the confidence set is empty.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TestDecision {
    pub reject: bool,
    #[serde(serialize_with = "sig17")]
    pub inf_stat: f64,
    #[serde(serialize_with = "sig17")]
    pub argmin_p: f64,
}

pub fn homogeneity_test(g: &Graph, alpha: f64, domain: SearchDomain) -> Result<TestDecision> {
    let set = confidence_set(g, alpha, domain)?;
    Ok(decision(&set))
}

pub fn decision(set: &ConfidenceSet) -> TestDecision {
    TestDecision { reject: set.is_empty(), inf_stat: set.statistic_min, argmin_p: set.argmin_p }
}

/// The report emitted by the `confset` and `test` commands.
#[derive(Debug, Clone, Serialize)]
pub struct ConfidenceReport {
    pub n: usize,
    #[serde(serialize_with = "sig17")]
    pub alpha: f64,
    #[serde(serialize_with = "crate::report::sig17_vec")]
    pub p_domain: Vec<f64>,
    #[serde(serialize_with = "sig17")]
    pub grid_step: f64,
    #[serde(serialize_with = "sig17_pairs")]
    pub intervals: Vec<(f64, f64)>,
    #[serde(serialize_with = "sig17")]
    pub statistic_min: f64,
    #[serde(serialize_with = "sig17")]
    pub argmin_p: f64,
    pub reject: bool,
}

impl ConfidenceReport {
    pub fn new(n: usize, set: &ConfidenceSet) -> Self {
        Self {
            n,
            alpha: set.alpha,
            p_domain: vec![set.domain.p_lo, set.domain.p_hi],
            grid_step: set.domain.grid_step,
            intervals: set.intervals.clone(),
            statistic_min: set.statistic_min,
            argmin_p: set.argmin_p,
            reject: set.is_empty(),
        }
    }
}

/// η for the 4-cycle a-b-c-d-a:
/// I_ab I_bc I_cd I_da − p³(I_ab + I_bc + I_cd + I_da) + 3p⁴.
#[inline]
pub fn eta_cycle(ind: impl Fn(usize, usize) -> f64, [a, b, c, d]: [usize; 4], p: f64) -> f64 {
    let (e1, e2, e3, e4) = (ind(a, b), ind(b, c), ind(c, d), ind(d, a));
    let p3 = p * p * p;
    e1 * e2 * e3 * e4 - p3 * (e1 + e2 + e3 + e4) + 3.0 * p3 * p
}

fn check_tuple(n: usize, t: [usize; 4]) -> Result<()> {
    if !(t[0] < t[1] && t[1] < t[2] && t[2] < t[3] && t[3] < n) {
        return param(format!("tuple {t:?} must be strictly increasing vertex ids below {n}"));
    }
    Ok(())
}

/// η_{ijkl} for an increasing tuple i < j < k < l.
pub fn eta_value(g: &Graph, t: [usize; 4], p: f64) -> Result<f64> {
    check_tuple(g.n(), t)?;
    check_open_p(p)?;
    Ok(eta_cycle(|u, v| g.indicator(u, v), t, p))
}

/// X₁ and X₂ of an increasing tuple (i, j, k, l): the centred sum of its six
/// edge indicators and the η sum over its three 4-cycles.
#[inline]
pub fn tuple_components(ind: impl Fn(usize, usize) -> f64, [i, j, k, l]: [usize; 4], p: f64) -> (f64, f64) {
    let x1 = ind(i, j) + ind(i, k) + ind(i, l) + ind(j, k) + ind(j, l) + ind(k, l) - 6.0 * p;
    let x2 = eta_cycle(&ind, [i, j, k, l], p) + eta_cycle(&ind, [i, j, l, k], p) + eta_cycle(&ind, [i, k, j, l], p);
    (x1, x2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TupleComponents {
    pub tuple: [usize; 4],
    pub x1: f64,
    pub x2: f64,
}

/// All increasing 4-tuples of `0..n` in lexicographic order.
pub fn increasing_tuples(n: usize) -> impl Iterator<Item = [usize; 4]> {
    (0..n).flat_map(move |i| {
        (i + 1..n).flat_map(move |j| (j + 1..n).flat_map(move |k| (k + 1..n).map(move |l| [i, j, k, l])))
    })
}

pub fn decomposition_components(g: &Graph, p: f64) -> Result<Vec<TupleComponents>> {
    check_open_p(p)?;
    if g.n() < 5 {
        return param(format!("decomposition needs n >= 5, got {}", g.n()));
    }
    Ok(increasing_tuples(g.n())
        .map(|t| {
            let (x1, x2) = tuple_components(|u, v| g.indicator(u, v), t, p);
            TupleComponents { tuple: t, x1, x2 }
        })
        .collect())
}

/// Factors turning tuple components into contributions to the standardised
/// W: 1/(C(n−2,2)σ₁) for X₁ (each edge lies in C(n−2,2) tuples) and 1/σ₂ for X₂.
pub fn component_scales(n: usize, p: f64) -> Result<(f64, f64)> {
    let s1 = sigma1_sq(n, p)?.sqrt();
    let s2 = sigma2_sq(n, p)?.sqrt();
    Ok((1.0 / (binom(n as u64 - 2, 2) as f64 * s1), 1.0 / s2))
}

/// W rebuilt as a sum of tuple components.
pub fn reconstruct_w(g: &Graph, p: f64) -> Result<(f64, f64)> {
    let (c1, c2) = component_scales(g.n(), p)?;
    let comps = decomposition_components(g, p)?;
    let (s1, s2) = comps.iter().fold((0.0, 0.0), |(a, b), c| (a + c.x1, b + c.x2));
    Ok((s1 * c1, s2 * c2))
}
