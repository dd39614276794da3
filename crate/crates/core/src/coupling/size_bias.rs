//! Size-bias coupling for a nonnegative vector Y with mean μ:
//! W = Y − μ, W′ = Y^K − μ, G = d·μ_K e_K, with K uniform on the d
//! directions and Y^K drawn independently from the law of Y size-biased in
//! direction K, i.e. reweighted by y_K/μ_K.
//!
//! The factor d compensates for K being uniform: summing over directions,
//! E[G_K(F_K(W′) − F_K(W))] = Σ_k (E[Y_k F_k(W)] − μ_k E F_k(W)) = E[WᵗF(W)].

use rand::Rng;

use super::{ConditionalMoments, Conditioner, CouplingModel, CouplingSample};
use crate::error::{param, Result};
use crate::rng::StreamRng;

pub type VecSampler = Box<dyn Fn(&mut StreamRng) -> Vec<f64> + Sync + Send>;

type Atoms = Vec<(f64, Vec<f64>)>;

enum Source {
    Pmf { atoms: Atoms, biased: Vec<Atoms> },
    Samplers { y: VecSampler, biased: Vec<VecSampler> },
}

pub struct SizeBiasCoupling {
    d: usize,
    mu: Vec<f64>,
    source: Source,
}

/// Cap on the number of outer states enumerated exactly.
const MAX_STATES: usize = 1 << 20;

fn draw_atom<'a>(rng: &mut StreamRng, atoms: &'a Atoms) -> &'a [f64] {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (p, y) in atoms {
        acc += p;
        if u < acc {
            return y;
        }
    }
    &atoms.last().expect("non-empty").1
}

impl SizeBiasCoupling {
    /// From a finite pmf of Y; the size-biased laws are built internally.
    pub fn from_pmf(atoms: Atoms) -> Result<Self> {
        let Some(d) = atoms.first().map(|a| a.1.len()) else {
            return param("size-bias coupling needs at least one atom");
        };
        if d == 0 || atoms.iter().any(|(p, y)| y.len() != d || !(*p >= 0.0) || y.iter().any(|v| !(*v >= 0.0))) {
            return param("atoms must share one dimension, with nonnegative values and masses");
        }
        let total: f64 = atoms.iter().map(|a| a.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return param(format!("pmf sums to {total}"));
        }
        let mu: Vec<f64> = (0..d).map(|i| atoms.iter().map(|(p, y)| p * y[i]).sum()).collect();
        if let Some(i) = mu.iter().position(|&m| m <= 0.0) {
            return param(format!("coordinate {i} has zero mean; cannot size-bias"));
        }
        let biased = (0..d)
            .map(|i| atoms.iter().filter(|(p, y)| p * y[i] > 0.0).map(|(p, y)| (p * y[i] / mu[i], y.clone())).collect())
            .collect();
        Ok(Self { d, mu, source: Source::Pmf { atoms, biased } })
    }

    /// From samplers of Y and of each Y^i, with the mean supplied.
    pub fn from_samplers(y: VecSampler, biased: Vec<VecSampler>, mu: Vec<f64>) -> Result<Self> {
        let d = mu.len();
        if d == 0 || biased.len() != d {
            return param("need one size-biased sampler per coordinate of μ");
        }
        if let Some(i) = mu.iter().position(|&m| !(m > 0.0)) {
            return param(format!("coordinate {i} has zero mean; cannot size-bias"));
        }
        Ok(Self { d, mu, source: Source::Samplers { y, biased } })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mu
    }

    /// Largest |E[Y_i 1{Y = x}] − μ_i P(Y^i = x)| over directions i and
    /// atoms x; zero for a correct size-biased law.
    pub fn size_bias_defect(&self) -> Option<f64> {
        let Source::Pmf { atoms, biased } = &self.source else {
            return None;
        };
        let mut worst = 0.0f64;
        for i in 0..self.d {
            for (_, x) in atoms {
                let lhs: f64 = atoms.iter().filter(|(_, y)| y == x).map(|(q, _)| q * x[i]).sum();
                let rhs: f64 = biased[i].iter().filter(|(_, y)| y == x).map(|(q, _)| q).sum::<f64>() * self.mu[i];
                worst = worst.max((lhs - rhs).abs());
            }
        }
        Some(worst)
    }

    fn triple(&self, y: &[f64], yk: &[f64], k: usize) -> CouplingSample {
        let w = y.iter().zip(&self.mu).map(|(a, m)| a - m).collect();
        let wp = yk.iter().zip(&self.mu).map(|(a, m)| a - m).collect();
        let mut g = vec![0.0; self.d];
        g[k] = self.d as f64 * self.mu[k];
        CouplingSample::new(w, wp, g)
    }

    /// Moments over K given Y and one draw of every Y^k.
    fn moments_given(&self, y: &[f64], yks: &[&[f64]]) -> ConditionalMoments {
        let mut m = ConditionalMoments::zeros(self.d);
        let p = 1.0 / self.d as f64;
        for (k, yk) in yks.iter().enumerate() {
            let s = self.triple(y, yk, k);
            m.add(p, &s.g, &s.d());
        }
        m
    }
}

impl CouplingModel for SizeBiasCoupling {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample(&self, rng: &mut StreamRng) -> CouplingSample {
        let k = rng.random_range(0..self.d);
        match &self.source {
            Source::Pmf { atoms, biased } => {
                let y = draw_atom(rng, atoms).to_vec();
                let yk = draw_atom(rng, &biased[k]).to_vec();
                self.triple(&y, &yk, k)
            }
            Source::Samplers { y, biased } => {
                let yv = y(rng);
                let yk = biased[k](rng);
                self.triple(&yv, &yk, k)
            }
        }
    }

    fn enumerate(&self) -> Option<Vec<(f64, CouplingSample)>> {
        let Source::Pmf { atoms, biased } = &self.source else {
            return None;
        };
        let pk = 1.0 / self.d as f64;
        let mut out = Vec::new();
        for (py, y) in atoms {
            for (k, bk) in biased.iter().enumerate() {
                for (q, yk) in bk {
                    out.push((py * pk * q, self.triple(y, yk, k)));
                }
            }
        }
        Some(out)
    }

    fn conditioner(&self) -> Option<&dyn Conditioner> {
        Some(self)
    }
}

impl Conditioner for SizeBiasCoupling {
    fn dim(&self) -> usize {
        self.d
    }

    fn draw(&self, rng: &mut StreamRng) -> ConditionalMoments {
        match &self.source {
            Source::Pmf { atoms, biased } => {
                let y = draw_atom(rng, atoms).to_vec();
                let yks: Vec<Vec<f64>> = biased.iter().map(|b| draw_atom(rng, b).to_vec()).collect();
                self.moments_given(&y, &yks.iter().map(Vec::as_slice).collect::<Vec<_>>())
            }
            Source::Samplers { y, biased } => {
                let yv = y(rng);
                let yks: Vec<Vec<f64>> = biased.iter().map(|b| b(rng)).collect();
                self.moments_given(&yv, &yks.iter().map(Vec::as_slice).collect::<Vec<_>>())
            }
        }
    }

    /// Outer state: Y together with one independent draw of every Y^k.
    fn states(&self) -> Option<Vec<(f64, ConditionalMoments)>> {
        let Source::Pmf { atoms, biased } = &self.source else {
            return None;
        };
        let count = biased.iter().try_fold(atoms.len(), |acc, b| acc.checked_mul(b.len()))?;
        if count > MAX_STATES {
            return None;
        }
        let mut out = Vec::with_capacity(count);
        let mut idx = vec![0usize; self.d];
        for (py, y) in atoms {
            idx.iter_mut().for_each(|i| *i = 0);
            loop {
                let prob = idx.iter().enumerate().fold(*py, |acc, (k, &i)| acc * biased[k][i].0);
                let yks: Vec<&[f64]> = idx.iter().enumerate().map(|(k, &i)| biased[k][i].1.as_slice()).collect();
                out.push((prob, self.moments_given(y, &yks)));
                // odometer over the biased supports
                let mut k = 0;
                while k < self.d {
                    idx[k] += 1;
                    if idx[k] < biased[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == self.d {
                    break;
                }
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bernoulli(p: f64) -> SizeBiasCoupling {
        SizeBiasCoupling::from_pmf(vec![(1.0 - p, vec![0.0]), (p, vec![1.0])]).unwrap()
    }

    #[test]
    fn bernoulli_size_bias_is_the_point_mass_at_one() {
        let c = bernoulli(0.3);
        for (_, s) in c.enumerate().unwrap() {
            assert!((s.w_prime[0] - 0.7).abs() < 1e-15);
            assert!((s.g[0] - 0.3).abs() < 1e-15);
        }
        assert_eq!(c.size_bias_defect(), Some(0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SizeBiasCoupling::from_pmf(vec![(1.0, vec![0.0, 1.0])]).is_err());
        assert!(SizeBiasCoupling::from_pmf(vec![(1.0, vec![-1.0])]).is_err());
        assert!(SizeBiasCoupling::from_pmf(vec![(0.5, vec![1.0])]).is_err());
        assert!(SizeBiasCoupling::from_samplers(Box::new(|_| vec![1.0]), vec![], vec![1.0]).is_err());
        assert!(
            SizeBiasCoupling::from_samplers(Box::new(|_| vec![0.0]), vec![Box::new(|_| vec![0.0])], vec![0.0]).is_err()
        );
    }

    #[test]
    fn outer_states_form_a_distribution() {
        let atoms = (0..8u32)
            .map(|m| {
                let b: Vec<f64> = (0..3).map(|k| f64::from(m >> k & 1)).collect();
                (0.125, vec![b[0] + b[1], b[1] + b[2]])
            })
            .collect();
        let c = SizeBiasCoupling::from_pmf(atoms).unwrap();
        let states = Conditioner::states(&c).unwrap();
        assert!((states.iter().map(|s| s.0).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(c.size_bias_defect().unwrap() < 1e-12);
    }
}
