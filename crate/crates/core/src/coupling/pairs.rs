//! Couplings built from a pair (W, W′) with linear drift
//! E^W(W′ − W) = −ΛW: exchangeable pairs give the Stein coupling
//! (W, W′, ½Λ⁻¹(W′ − W)); equal-marginal pairs with scalar λ give
//! (W, W′, (W′ − W)/(2λ)), for which only the moment relations are checked.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{mat_vec, ConditionalMoments, Conditioner, CouplingKind, CouplingModel, CouplingSample};
use crate::error::{param, Error, Result};
use crate::permstat::{builtin_matrices, perm_stat, MatrixKind, Permutation, StatMatrix, MAX_EXHAUSTIVE_N};
use crate::rng::{self, StreamRng};

/// W for one outer state together with the law of W′ given that state.
#[derive(Debug, Clone)]
pub struct PairState {
    pub w: Vec<f64>,
    pub moves: Vec<(f64, Vec<f64>)>,
}

pub trait PairModel: Sync {
    fn dim(&self) -> usize;

    fn draw_state(&self, rng: &mut StreamRng) -> PairState;

    /// Every outer state with its probability, when finite.
    fn states(&self) -> Option<Vec<(f64, PairState)>> {
        None
    }

    fn sample_pair(&self, rng: &mut StreamRng) -> (Vec<f64>, Vec<f64>) {
        let mut st = self.draw_state(rng);
        let k = pick(rng, st.moves.iter().map(|m| m.0));
        (st.w, st.moves.swap_remove(k).1)
    }
}

fn pick(rng: &mut StreamRng, probs: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in probs.enumerate() {
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

/// A pair given by an explicit finite joint law of (W, W′).
pub struct FinitePair {
    d: usize,
    rows: Vec<(f64, Vec<f64>, Vec<f64>)>,
}

impl FinitePair {
    pub fn new(rows: Vec<(f64, Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let Some(d) = rows.first().map(|r| r.1.len()) else {
            return param("finite pair needs at least one atom");
        };
        if rows.iter().any(|r| r.1.len() != d || r.2.len() != d || !(r.0 >= 0.0)) {
            return param("finite pair atoms must share one dimension and carry nonnegative mass");
        }
        let total: f64 = rows.iter().map(|r| r.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return param(format!("finite pair probabilities sum to {total}"));
        }
        Ok(Self { d, rows })
    }

    fn grouped(&self) -> Vec<(f64, PairState)> {
        let mut order: Vec<Vec<u64>> = Vec::new();
        let mut groups: HashMap<Vec<u64>, (f64, PairState)> = HashMap::new();
        for (p, w, wp) in &self.rows {
            let key: Vec<u64> = w.iter().map(|x| x.to_bits()).collect();
            let e = groups.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (0.0, PairState { w: w.clone(), moves: Vec::new() })
            });
            e.0 += p;
            e.1.moves.push((*p, wp.clone()));
        }
        order
            .into_iter()
            .filter_map(|k| groups.remove(&k))
            .filter(|(mass, _)| *mass > 0.0)
            .map(|(mass, mut st)| {
                st.moves.iter_mut().for_each(|m| m.0 /= mass);
                (mass, st)
            })
            .collect()
    }
}

impl PairModel for FinitePair {
    fn dim(&self) -> usize {
        self.d
    }

    fn draw_state(&self, rng: &mut StreamRng) -> PairState {
        let states = self.grouped();
        let k = pick(rng, states.iter().map(|s| s.0));
        states.into_iter().nth(k).expect("non-empty").1
    }

    fn states(&self) -> Option<Vec<(f64, PairState)>> {
        Some(self.grouped())
    }

    fn sample_pair(&self, rng: &mut StreamRng) -> (Vec<f64>, Vec<f64>) {
        let k = pick(rng, self.rows.iter().map(|r| r.0));
        (self.rows[k].1.clone(), self.rows[k].2.clone())
    }
}

/// W = Σ ε_i for m fair signs; W′ flips one uniformly chosen sign.
/// Exchangeable, with E^W(W′ − W) = −(2/m)W.
pub struct SignFlipPair {
    m: usize,
}

impl SignFlipPair {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > 24 {
            return param(format!("sign-flip pair supports 1 <= m <= 24, got {m}"));
        }
        Ok(Self { m })
    }

    pub fn lambda(&self) -> f64 {
        2.0 / self.m as f64
    }

    fn state(&self, signs: &[f64]) -> PairState {
        let w: f64 = signs.iter().sum();
        let p = 1.0 / self.m as f64;
        PairState { w: vec![w], moves: signs.iter().map(|s| (p, vec![w - 2.0 * s])).collect() }
    }
}

impl PairModel for SignFlipPair {
    fn dim(&self) -> usize {
        1
    }

    fn draw_state(&self, rng: &mut StreamRng) -> PairState {
        let signs: Vec<f64> = (0..self.m).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        self.state(&signs)
    }

    fn states(&self) -> Option<Vec<(f64, PairState)>> {
        let mass = 0.5f64.powi(self.m as i32);
        Some(
            (0..1u32 << self.m)
                .map(|mask| {
                    let signs: Vec<f64> = (0..self.m).map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 }).collect();
                    (mass, self.state(&signs))
                })
                .collect(),
        )
    }
}

/// W = (W_r(π))_r for anti-symmetric matrices and uniform π; W′ = W(π′)
/// with π′ = π∘(I, I+1, …, n) for uniform I. Drift −(2/n)W, equal
/// marginals; exchangeability is not assumed.
pub struct FulmanPair {
    n: usize,
    matrices: Vec<StatMatrix>,
}

impl FulmanPair {
    pub fn new(matrices: Vec<StatMatrix>) -> Result<Self> {
        let Some(n) = matrices.first().map(|m| m.n()) else {
            return param("Fulman pair needs at least one matrix");
        };
        if n < 2 || matrices.iter().any(|m| m.n() != n) {
            return param("Fulman pair matrices must share one size n >= 2");
        }
        Ok(Self { n, matrices })
    }

    /// The standardised descent and inversion matrices.
    pub fn descent_inversion(n: usize) -> Result<Self> {
        Self::new(vec![builtin_matrices(n, MatrixKind::Descent)?, builtin_matrices(n, MatrixKind::Inversion)?])
    }

    pub fn lambda(&self) -> f64 {
        2.0 / self.n as f64
    }

    fn w(&self, pi: &Permutation) -> Vec<f64> {
        self.matrices.iter().map(|m| perm_stat(m, pi).expect("sizes checked")).collect()
    }

    /// D for the step at position i: the entry π(i) moves behind every
    /// later entry, flipping the sign of each of those pair terms.
    fn step_d(&self, pi: &Permutation, i: usize) -> Vec<f64> {
        let a = pi.apply(i);
        self.matrices.iter().map(|m| -2.0 * (i + 1..self.n).map(|j| m.get(a, pi.apply(j))).sum::<f64>()).collect()
    }

    fn state(&self, pi: &Permutation) -> PairState {
        let w = self.w(pi);
        let p = 1.0 / self.n as f64;
        let moves = (0..self.n).map(|i| (p, w.iter().zip(self.step_d(pi, i)).map(|(a, b)| a + b).collect())).collect();
        PairState { w, moves }
    }
}

impl PairModel for FulmanPair {
    fn dim(&self) -> usize {
        self.matrices.len()
    }

    fn draw_state(&self, rng: &mut StreamRng) -> PairState {
        self.state(&Permutation::random(self.n, rng))
    }

    fn states(&self) -> Option<Vec<(f64, PairState)>> {
        if self.n > MAX_EXHAUSTIVE_N {
            return None;
        }
        let perms = Permutation::all(self.n).ok()?;
        let mass = 1.0 / perms.len() as f64;
        Some(perms.iter().map(|pi| (mass, self.state(pi))).collect())
    }

    fn sample_pair(&self, rng: &mut StreamRng) -> (Vec<f64>, Vec<f64>) {
        let pi = Permutation::random(self.n, rng);
        let i = rng.random_range(0..self.n);
        let w = self.w(&pi);
        let wp = w.iter().zip(self.step_d(&pi, i)).map(|(a, b)| a + b).collect();
        (w, wp)
    }
}

/// Exact diagnostics of a finite pair against a drift matrix Λ.
#[derive(Debug, Clone, Serialize)]
pub struct PairRelations {
    /// max over states of |E^W(W′ − W) + ΛW|
    pub drift_residual: f64,
    /// max over values x of |P(W = x) − P(W′ = x)|
    pub marginal_discrepancy: f64,
    /// whether the joint law of (W, W′) is symmetric
    pub exchangeable: bool,
}

fn key(x: &[f64]) -> Vec<i64> {
    // values computed along different summation orders agree to ~1e-13
    x.iter().map(|v| (v * 1e9).round() as i64).collect()
}

pub fn pair_relations(pair: &dyn PairModel, lambda: &DMatrix<f64>) -> Option<PairRelations> {
    let states = pair.states()?;
    let d = pair.dim();
    let mut drift = 0.0f64;
    let mut law_w: HashMap<Vec<i64>, f64> = HashMap::new();
    let mut law_wp: HashMap<Vec<i64>, f64> = HashMap::new();
    let mut joint: HashMap<(Vec<i64>, Vec<i64>), f64> = HashMap::new();
    for (mass, st) in &states {
        let mut mean = vec![0.0; d];
        for (p, wp) in &st.moves {
            for c in 0..d {
                mean[c] += p * (wp[c] - st.w[c]);
            }
            *law_wp.entry(key(wp)).or_default() += mass * p;
            *joint.entry((key(&st.w), key(wp))).or_default() += mass * p;
        }
        *law_w.entry(key(&st.w)).or_default() += mass;
        let lw = mat_vec(lambda, &st.w);
        let scale = 1.0 + st.w.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for c in 0..d {
            drift = drift.max((mean[c] + lw[c]).abs() / scale);
        }
    }
    let marginal = law_w
        .keys()
        .chain(law_wp.keys())
        .map(|k| (law_w.get(k).unwrap_or(&0.0) - law_wp.get(k).unwrap_or(&0.0)).abs())
        .fold(0.0, f64::max);
    let exchangeable =
        joint.iter().all(|((a, b), p)| (p - joint.get(&(b.clone(), a.clone())).unwrap_or(&0.0)).abs() <= 1e-12);
    Some(PairRelations { drift_residual: drift, marginal_discrepancy: marginal, exchangeable })
}

const DRIFT_TOL: f64 = 1e-10;

/// Monte Carlo check of the drift: per-coordinate mean and standard error of
/// (W′ − W) + λW over single draws of the pair.
pub fn drift_mc(pair: &dyn PairModel, lambda: f64, reps: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if reps < 2 {
        return param("drift check needs at least two replications");
    }
    let d = pair.dim();
    let rows: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let (w, wp) = pair.sample_pair(&mut rng::stream(seed, r));
            (0..d).map(|c| wp[c] - w[c] + lambda * w[c]).collect()
        })
        .collect();
    let k = reps as f64;
    let mean: Vec<f64> = (0..d).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / k).collect();
    let se =
        (0..d).map(|c| (rows.iter().map(|r| (r[c] - mean[c]).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()).collect();
    Ok((mean, se))
}

fn moments_of_state(st: &PairState, g_of: impl Fn(&[f64]) -> Vec<f64>, d: usize) -> ConditionalMoments {
    let mut m = ConditionalMoments::zeros(d);
    for (p, wp) in &st.moves {
        let dv: Vec<f64> = wp.iter().zip(&st.w).map(|(a, b)| a - b).collect();
        m.add(*p, &g_of(&dv), &dv);
    }
    m
}

fn atoms_of(states: Vec<(f64, PairState)>, g_of: impl Fn(&[f64]) -> Vec<f64>) -> Vec<(f64, CouplingSample)> {
    let mut out = Vec::new();
    for (mass, st) in states {
        for (p, wp) in st.moves {
            let dv: Vec<f64> = wp.iter().zip(&st.w).map(|(a, b)| a - b).collect();
            out.push((mass * p, CouplingSample::new(st.w.clone(), wp, g_of(&dv))));
        }
    }
    out
}

/// (W, W′, ½Λ⁻¹(W′ − W)) for an exchangeable pair with drift −ΛW.
pub struct ExchangeablePairCoupling<P: PairModel> {
    pair: P,
    half_inv: DMatrix<f64>,
    relations: Option<PairRelations>,
}

impl<P: PairModel> ExchangeablePairCoupling<P> {
    /// Fails on a singular Λ, and on a drift mismatch when the pair can be
    /// enumerated.
    pub fn new(pair: P, lambda: DMatrix<f64>) -> Result<Self> {
        let d = pair.dim();
        if lambda.nrows() != d || lambda.ncols() != d {
            return param(format!("Λ must be {d}x{d}"));
        }
        let inv = lambda.clone().try_inverse().filter(|m| m.iter().all(|x| x.is_finite()));
        let Some(inv) = inv else {
            return param("Λ is singular");
        };
        let relations = pair_relations(&pair, &lambda);
        if let Some(r) = &relations {
            if r.drift_residual > DRIFT_TOL {
                return Err(Error::Consistency(format!(
                    "pair does not satisfy E^W(W′−W) = −ΛW (residual {:.3e})",
                    r.drift_residual
                )));
            }
        }
        Ok(Self { pair, half_inv: inv * 0.5, relations })
    }

    pub fn scalar(pair: P, lambda: f64) -> Result<Self> {
        let d = pair.dim();
        Self::new(pair, DMatrix::identity(d, d) * lambda)
    }

    /// Exact drift, marginal and exchangeability diagnostics, when enumerable.
    pub fn relations(&self) -> Option<&PairRelations> {
        self.relations.as_ref()
    }

    fn g(&self, dv: &[f64]) -> Vec<f64> {
        mat_vec(&self.half_inv, dv)
    }
}

impl<P: PairModel> CouplingModel for ExchangeablePairCoupling<P> {
    fn dim(&self) -> usize {
        self.pair.dim()
    }

    fn sample(&self, rng: &mut StreamRng) -> CouplingSample {
        let (w, wp) = self.pair.sample_pair(rng);
        let dv: Vec<f64> = wp.iter().zip(&w).map(|(a, b)| a - b).collect();
        let g = self.g(&dv);
        CouplingSample::new(w, wp, g)
    }

    fn enumerate(&self) -> Option<Vec<(f64, CouplingSample)>> {
        Some(atoms_of(self.pair.states()?, |dv| self.g(dv)))
    }

    fn conditioner(&self) -> Option<&dyn Conditioner> {
        Some(self)
    }
}

impl<P: PairModel> Conditioner for ExchangeablePairCoupling<P> {
    fn dim(&self) -> usize {
        self.pair.dim()
    }

    fn draw(&self, rng: &mut StreamRng) -> ConditionalMoments {
        moments_of_state(&self.pair.draw_state(rng), |dv| self.g(dv), self.pair.dim())
    }

    fn states(&self) -> Option<Vec<(f64, ConditionalMoments)>> {
        let d = self.pair.dim();
        Some(self.pair.states()?.iter().map(|(m, st)| (*m, moments_of_state(st, |dv| self.g(dv), d))).collect())
    }
}

/// (W, W′, (W′ − W)/(2λ)) for a pair with equal marginals and drift −λW.
/// Flagged [`CouplingKind::EqualMarginalLambda`].
pub struct EqualMarginalCoupling<P: PairModel> {
    pair: P,
    lambda: f64,
    relations: Option<PairRelations>,
}

impl<P: PairModel> EqualMarginalCoupling<P> {
    pub fn new(pair: P, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return param(format!("λ must lie in (0, 1), got {lambda}"));
        }
        let d = pair.dim();
        let relations = pair_relations(&pair, &(DMatrix::identity(d, d) * lambda));
        if let Some(r) = &relations {
            if r.drift_residual > DRIFT_TOL {
                return Err(Error::Consistency(format!("drift residual {:.3e}", r.drift_residual)));
            }
            if r.marginal_discrepancy > 1e-12 {
                return Err(Error::Consistency(format!(
                    "W and W′ differ in law (discrepancy {:.3e})",
                    r.marginal_discrepancy
                )));
            }
        }
        Ok(Self { pair, lambda, relations })
    }

    pub fn relations(&self) -> Option<&PairRelations> {
        self.relations.as_ref()
    }

    pub fn pair(&self) -> &P {
        &self.pair
    }

    fn g(&self, dv: &[f64]) -> Vec<f64> {
        dv.iter().map(|x| x / (2.0 * self.lambda)).collect()
    }
}

impl<P: PairModel> CouplingModel for EqualMarginalCoupling<P> {
    fn dim(&self) -> usize {
        self.pair.dim()
    }

    fn kind(&self) -> CouplingKind {
        CouplingKind::EqualMarginalLambda
    }

    fn sample(&self, rng: &mut StreamRng) -> CouplingSample {
        let (w, wp) = self.pair.sample_pair(rng);
        let dv: Vec<f64> = wp.iter().zip(&w).map(|(a, b)| a - b).collect();
        let g = self.g(&dv);
        CouplingSample::new(w, wp, g)
    }

    fn enumerate(&self) -> Option<Vec<(f64, CouplingSample)>> {
        Some(atoms_of(self.pair.states()?, |dv| self.g(dv)))
    }

    fn conditioner(&self) -> Option<&dyn Conditioner> {
        Some(self)
    }
}

impl<P: PairModel> Conditioner for EqualMarginalCoupling<P> {
    fn dim(&self) -> usize {
        self.pair.dim()
    }

    fn draw(&self, rng: &mut StreamRng) -> ConditionalMoments {
        moments_of_state(&self.pair.draw_state(rng), |dv| self.g(dv), self.pair.dim())
    }

    fn states(&self) -> Option<Vec<(f64, ConditionalMoments)>> {
        let d = self.pair.dim();
        Some(self.pair.states()?.iter().map(|(m, st)| (*m, moments_of_state(st, |dv| self.g(dv), d))).collect())
    }
}
