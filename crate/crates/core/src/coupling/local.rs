//! Couplings for sums of locally dependent vectors: with I uniform on the
//! index set, (W, W′, G) = (Σ X_i, Σ_{i∉A_I} X_i, −|I|·X_I).

use rand::Rng;

use super::{ConditionalMoments, Conditioner, CouplingModel, CouplingSample};
use crate::error::{param, Result};
use crate::graph::Graph;
use crate::homogeneity::{component_scales, increasing_tuples, tuple_components};
use crate::rng::StreamRng;

/// A finite family of centred random vectors X_i with dependency
/// neighbourhoods A_i ∋ i: X_i must be independent of (X_j)_{j∉A_i}. The
/// caller vouches for that; [`LocalDependenceCoupling::spot_check`] tests
/// necessary consequences when the randomness is enumerable.
pub trait LocalField: Sync {
    type State: Sync;

    fn dim(&self) -> usize;

    /// Number of indices.
    fn len(&self) -> usize;

    fn draw(&self, rng: &mut StreamRng) -> Self::State;

    /// All X_i for one state, index order.
    fn values(&self, s: &Self::State) -> Vec<Vec<f64>>;

    fn neighbourhood(&self, i: usize) -> Vec<usize>;

    /// The underlying randomness as weighted atoms, when small enough.
    fn states(&self) -> Option<Vec<(f64, Self::State)>> {
        None
    }
}

pub struct LocalDependenceCoupling<F: LocalField> {
    field: F,
    hoods: Vec<Vec<usize>>,
}

impl<F: LocalField> LocalDependenceCoupling<F> {
    pub fn new(field: F) -> Result<Self> {
        if field.len() == 0 {
            return param("local dependence coupling needs a non-empty index set");
        }
        let hoods = (0..field.len()).map(|i| field.neighbourhood(i)).collect();
        Ok(Self { field, hoods })
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    fn sums(&self, xs: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = self.field.dim();
        let mut w = vec![0.0; d];
        for x in xs {
            w.iter_mut().zip(x).for_each(|(a, b)| *a += b);
        }
        let local = self
            .hoods
            .iter()
            .map(|h| {
                let mut s = vec![0.0; d];
                for &k in h {
                    s.iter_mut().zip(&xs[k]).for_each(|(a, b)| *a += b);
                }
                s
            })
            .collect();
        (w, local)
    }

    fn atoms(&self, s: &F::State) -> Vec<CouplingSample> {
        let xs = self.field.values(s);
        let (w, local) = self.sums(&xs);
        let n = xs.len() as f64;
        xs.iter()
            .zip(&local)
            .map(|(x, sl)| {
                let wp = w.iter().zip(sl).map(|(a, b)| a - b).collect();
                CouplingSample::new(w.clone(), wp, x.iter().map(|v| -n * v).collect())
            })
            .collect()
    }

    /// Exact inner moments given one state of the underlying randomness.
    pub fn moments_for_state(&self, s: &F::State) -> ConditionalMoments {
        let atoms = self.atoms(s);
        let prob = 1.0 / atoms.len() as f64;
        let mut m = ConditionalMoments::zeros(self.field.dim());
        for a in &atoms {
            m.add(prob, &a.g, &a.d());
        }
        m
    }

    /// Largest |E X_i| and largest |E X_{i,a} X_{j,b}| over pairs with
    /// j ∉ A_i. Both vanish when the declared structure is right.
    pub fn spot_check(&self) -> Option<(f64, f64)> {
        let states = self.field.states()?;
        let d = self.field.dim();
        let m = self.field.len();
        let mut mean = vec![0.0; m * d];
        let mut cross = vec![0.0; m * m * d * d];
        for (prob, s) in &states {
            let xs = self.field.values(s);
            for i in 0..m {
                for a in 0..d {
                    mean[i * d + a] += prob * xs[i][a];
                    for j in 0..m {
                        for b in 0..d {
                            cross[((i * m + j) * d + a) * d + b] += prob * xs[i][a] * xs[j][b];
                        }
                    }
                }
            }
        }
        let worst_mean = mean.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut worst_cross = 0.0f64;
        for i in 0..m {
            for j in (0..m).filter(|j| !self.hoods[i].contains(j)) {
                for ab in 0..d * d {
                    worst_cross = worst_cross.max(cross[(i * m + j) * d * d + ab].abs());
                }
            }
        }
        Some((worst_mean, worst_cross))
    }
}

impl<F: LocalField> CouplingModel for LocalDependenceCoupling<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn sample(&self, rng: &mut StreamRng) -> CouplingSample {
        let s = self.field.draw(rng);
        let i = rng.random_range(0..self.field.len());
        self.atoms(&s).swap_remove(i)
    }

    fn enumerate(&self) -> Option<Vec<(f64, CouplingSample)>> {
        let states = self.field.states()?;
        let per = 1.0 / self.field.len() as f64;
        Some(states.iter().flat_map(|(p, s)| self.atoms(s).into_iter().map(move |a| (p * per, a))).collect())
    }

    fn conditioner(&self) -> Option<&dyn Conditioner> {
        Some(self)
    }
}

impl<F: LocalField> Conditioner for LocalDependenceCoupling<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn draw(&self, rng: &mut StreamRng) -> ConditionalMoments {
        self.moments_for_state(&self.field.draw(rng))
    }

    fn states(&self) -> Option<Vec<(f64, ConditionalMoments)>> {
        let states = self.field.states()?;
        Some(states.iter().map(|(p, s)| (*p, self.moments_for_state(s))).collect())
    }
}

/// m iid centred coins X_i = B_i − q with B_i ~ Bernoulli(q), A_i = {i}.
pub struct IidCoins {
    pub m: usize,
    pub q: f64,
}

impl IidCoins {
    pub fn new(m: usize, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return param(format!("coin probability must lie in (0, 1), got {q}"));
        }
        Ok(Self { m, q })
    }
}

impl LocalField for IidCoins {
    type State = Vec<bool>;

    fn dim(&self) -> usize {
        1
    }

    fn len(&self) -> usize {
        self.m
    }

    fn draw(&self, rng: &mut StreamRng) -> Vec<bool> {
        (0..self.m).map(|_| rng.random_bool(self.q)).collect()
    }

    fn values(&self, s: &Vec<bool>) -> Vec<Vec<f64>> {
        s.iter().map(|&b| vec![f64::from(u8::from(b)) - self.q]).collect()
    }

    fn neighbourhood(&self, i: usize) -> Vec<usize> {
        vec![i]
    }

    fn states(&self) -> Option<Vec<(f64, Vec<bool>)>> {
        if self.m > 16 {
            return None;
        }
        Some(
            (0..1u32 << self.m)
                .map(|mask| {
                    let bits: Vec<bool> = (0..self.m).map(|k| mask >> k & 1 == 1).collect();
                    let ones = mask.count_ones() as i32;
                    (self.q.powi(ones) * (1.0 - self.q).powi(self.m as i32 - ones), bits)
                })
                .collect(),
        )
    }
}

/// Tuple components of the homogeneity statistics, standardised so that
/// Σ_ι Y_ι = (W₁, W₂). Index set: increasing 4-tuples; A_ι = tuples sharing
/// at least two vertices with ι.
pub struct GraphField {
    n: usize,
    p: f64,
    scales: (f64, f64),
    tuples: Vec<[usize; 4]>,
}

/// Above this many vertices the tuple list is not materialised.
pub const GRAPH_FIELD_MAX_N: usize = 12;

impl GraphField {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n > GRAPH_FIELD_MAX_N {
            return param(format!("explicit graph field is limited to n <= {GRAPH_FIELD_MAX_N}"));
        }
        if !(p > 0.0 && p < 1.0) {
            return param(format!("p must lie in (0, 1), got {p}"));
        }
        let scales = component_scales(n, p)?;
        Ok(Self { n, p, scales, tuples: increasing_tuples(n).collect() })
    }

    pub fn tuples(&self) -> &[[usize; 4]] {
        &self.tuples
    }
}

pub(crate) fn shared(a: &[usize; 4], b: &[usize; 4]) -> usize {
    a.iter().filter(|v| b.contains(v)).count()
}

impl LocalField for GraphField {
    type State = Graph;

    fn dim(&self) -> usize {
        2
    }

    fn len(&self) -> usize {
        self.tuples.len()
    }

    fn draw(&self, rng: &mut StreamRng) -> Graph {
        crate::graph::sample_gnp(self.n, self.p, rng).expect("validated parameters")
    }

    fn values(&self, g: &Graph) -> Vec<Vec<f64>> {
        let (c1, c2) = self.scales;
        self.tuples
            .iter()
            .map(|&t| {
                let (x1, x2) = tuple_components(|u, v| g.indicator(u, v), t, self.p);
                vec![c1 * x1, c2 * x2]
            })
            .collect()
    }

    fn neighbourhood(&self, i: usize) -> Vec<usize> {
        let t = &self.tuples[i];
        (0..self.tuples.len()).filter(|&k| shared(t, &self.tuples[k]) >= 2).collect()
    }

    fn states(&self) -> Option<Vec<(f64, Graph)>> {
        let m = self.n * (self.n - 1) / 2;
        if m > 15 {
            return None;
        }
        Some(
            (0..1u64 << m)
                .map(|mask| {
                    let k = mask.count_ones() as i32;
                    let prob = self.p.powi(k) * (1.0 - self.p).powi(m as i32 - k);
                    (prob, Graph::from_pair_mask(self.n, mask).expect("n <= 6"))
                })
                .collect(),
        )
    }
}
