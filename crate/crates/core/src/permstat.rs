//! Doubly indexed permutation statistics W = Σ_{i<j} M_{π(i)π(j)} for
//! anti-symmetric weight matrices M, with descents and inversions as the
//! motivating special cases.
//!
//! Indices are 0-based in the API. One-line notation on the wire is 1-based.

use rand::Rng;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::rng::StreamRng;

/// A bijection of `0..n`, stored in one-line form: `map[i]` is the image of `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    /// The permutation i ↦ n−1−i.
    pub fn reversal(n: usize) -> Self {
        Self { map: (0..n).rev().collect() }
    }

    /// From 0-based images; fails unless they are exactly `0..n`.
    pub fn from_images(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return param(format!("{map:?} is not a permutation of 0..{n}"));
            }
        }
        Ok(Self { map })
    }

    /// From 1-based one-line notation, e.g. `[2, 1, 4, 3]`.
    pub fn from_one_line(values: &[usize]) -> Result<Self> {
        if values.contains(&0) {
            return param("one-line notation is 1-based; found 0");
        }
        Self::from_images(values.iter().map(|v| v - 1).collect())
    }

    /// Whitespace-separated 1-based one-line notation.
    pub fn parse(s: &str) -> Result<Self> {
        let values = s
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| Error::Parameter(format!("bad permutation entry '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_one_line(&values)
    }

    pub fn to_one_line(&self) -> Vec<usize> {
        self.map.iter().map(|v| v + 1).collect()
    }

    /// Uniform random permutation (Fisher–Yates).
    pub fn random(n: usize, rng: &mut StreamRng) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            map.swap(i, j);
        }
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Self { map: inv }
    }

    /// All n! permutations in lexicographic order.
    pub fn all(n: usize) -> Result<Vec<Self>> {
        if n > MAX_EXHAUSTIVE_N {
            return Err(Error::Size(format!("exhaustive enumeration is capped at n = {MAX_EXHAUSTIVE_N}")));
        }
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            out.push(Self { map: cur.clone() });
            // next lexicographic permutation
            let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
                return Ok(out);
            };
            let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
            cur.swap(i, j);
            cur[i + 1..].reverse();
        }
    }
}

impl std::fmt::Display for Permutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.map.iter().map(|v| (v + 1).to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Largest n for which n! enumeration is offered.
pub const MAX_EXHAUSTIVE_N: usize = 8;

/// Positions i with π(i) > π(i+1).
pub fn descents(pi: &Permutation) -> usize {
    pi.map.windows(2).filter(|w| w[0] > w[1]).count()
}

/// Pairs i < j with π(i) > π(j), counted with a Fenwick tree.
pub fn inversions(pi: &Permutation) -> u64 {
    let n = pi.len();
    let mut tree = vec![0u32; n + 1];
    let mut inv = 0u64;
    for (seen, &v) in pi.map.iter().enumerate() {
        // number of earlier values <= v
        let mut k = v + 1;
        let mut below = 0u64;
        while k > 0 {
            below += tree[k] as u64;
            k &= k - 1;
        }
        inv += seen as u64 - below;
        let mut k = v + 1;
        while k <= n {
            tree[k] += 1;
            k += k & k.wrapping_neg();
        }
    }
    inv
}

/// Anti-symmetric real matrix; only the strict upper triangle is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct StatMatrix {
    n: usize,
    upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Descent,
    Inversion,
}

impl StatMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, upper: vec![0.0; n * n.saturating_sub(1) / 2] }
    }

    /// M_{ij} = f(i, j) for i < j; the lower triangle follows by anti-symmetry.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let k = m.index(i, j);
                m.upper[k] = f(i, j);
            }
        }
        m
    }

    /// Entries −1 on the superdiagonal: W = 2·Des(π⁻¹) − (n−1).
    pub fn descent_unscaled(n: usize) -> Self {
        Self::from_upper_fn(n, |i, j| if j == i + 1 { -1.0 } else { 0.0 })
    }

    /// Entries −1 above the diagonal: W = 2·Inv(π⁻¹) − C(n,2).
    pub fn inversion_unscaled(n: usize) -> Self {
        Self::from_upper_fn(n, |_, _| -1.0)
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.upper.iter_mut().for_each(|x| *x *= c);
        self
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.upper[self.index(i, j)],
            Greater => -self.upper[self.index(j, i)],
            Equal => 0.0,
        }
    }

    /// β = max_i Σ_j |M_ij|.
    pub fn beta(&self) -> f64 {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j).abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// A_i = Σ_{j>i} M_ij.
    pub fn a(&self, i: usize) -> f64 {
        (i + 1..self.n).map(|j| self.get(i, j)).sum()
    }

    /// B_i = Σ_{j<i} M_ji.
    pub fn b(&self, i: usize) -> f64 {
        (0..i).map(|j| self.get(j, i)).sum()
    }
}

/// The scaled matrices that turn W into standardised descents (factor
/// √(3/(n+1))) or inversions (factor √(18/(n(n−1)(2n+5)))).
pub fn builtin_matrices(n: usize, kind: MatrixKind) -> Result<StatMatrix> {
    if n < 2 {
        return param(format!("built-in statistic matrices need n >= 2, got {n}"));
    }
    let nf = n as f64;
    Ok(match kind {
        MatrixKind::Descent => StatMatrix::descent_unscaled(n).scaled((3.0 / (nf + 1.0)).sqrt()),
        MatrixKind::Inversion => {
            StatMatrix::inversion_unscaled(n).scaled((18.0 / (nf * (nf - 1.0) * (2.0 * nf + 5.0))).sqrt())
        }
    })
}

fn check_size(m: &StatMatrix, n: usize) -> Result<()> {
    if m.n != n {
        return param(format!("matrix of size {} used with size {n}", m.n));
    }
    Ok(())
}

/// W = Σ_{i<j} M_{π(i)π(j)}.
pub fn perm_stat(m: &StatMatrix, pi: &Permutation) -> Result<f64> {
    check_size(m, pi.len())?;
    let n = pi.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = pi.map[i];
        for j in i + 1..n {
            s += m.get(a, pi.map[j]);
        }
    }
    Ok(s)
}

/// Cov(W_r, W_s) under a uniform permutation:
/// (1/3)(Σ_{i<j} M^r_ij M^s_ij + Σ_i (A^r_i − B^r_i)(A^s_i − B^s_i)).
pub fn cov_lemma2(mr: &StatMatrix, ms: &StatMatrix) -> Result<f64> {
    check_size(ms, mr.n)?;
    let pairs: f64 = mr.upper.iter().zip(&ms.upper).map(|(x, y)| x * y).sum();
    let margins: f64 = (0..mr.n).map(|i| (mr.a(i) - mr.b(i)) * (ms.a(i) - ms.b(i))).sum();
    Ok((pairs + margins) / 3.0)
}

/// π ∘ (i, i+1, …, n−1): the entry at position i moves to the end and the
/// entries after it shift left by one.
pub fn fulman_step(pi: &Permutation, i: usize) -> Result<Permutation> {
    let n = pi.len();
    if i >= n {
        return param(format!("position {i} out of range for n = {n}"));
    }
    let mut map = Vec::with_capacity(n);
    map.extend_from_slice(&pi.map[..i]);
    map.extend_from_slice(&pi.map[i + 1..]);
    map.push(pi.map[i]);
    Ok(Permutation { map })
}

/// Standardised (descents, inversions) of π.
pub fn standardized_descent_inversion(pi: &Permutation) -> Result<(f64, f64)> {
    let n = pi.len();
    if n < 2 {
        return param(format!("standardisation needs n >= 2, got {n}"));
    }
    let nf = n as f64;
    let w1 = (descents(pi) as f64 - (nf - 1.0) / 2.0) / ((nf + 1.0) / 12.0).sqrt();
    let w2 = (inversions(pi) as f64 - nf * (nf - 1.0) / 4.0) / (nf * (nf - 1.0) * (2.0 * nf + 5.0) / 72.0).sqrt();
    Ok((w1, w2))
}

/// The vector (W_1, …, W_d) for a list of matrices.
#[derive(Debug, Clone, Serialize)]
pub struct PermStatVector {
    #[serde(serialize_with = "crate::report::sig17_vec")]
    pub values: Vec<f64>,
    pub standardized: bool,
}

impl PermStatVector {
    pub fn evaluate(matrices: &[StatMatrix], pi: &Permutation) -> Result<Self> {
        let values = matrices.iter().map(|m| perm_stat(m, pi)).collect::<Result<Vec<_>>>()?;
        let standardized = matrices.iter().all(|m| cov_lemma2(m, m).is_ok_and(|v| (v - 1.0).abs() <= 1e-12));
        Ok(Self { values, standardized })
    }
}
