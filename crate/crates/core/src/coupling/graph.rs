//! The local-dependence coupling of the homogeneity statistics on G(n, p).
//!
//! Index set: the N = C(n,4) increasing 4-tuples ι. With standardised tuple
//! components Y_ι (summing to W) and S_ι = Σ_{κ: |κ∩ι|≥2} Y_κ,
//! G = −N·Y_I and D = −S_I for I uniform.
//!
//! Given the graph, the conditioner needs S_ι for every ι. Writing P(ab) and
//! T(abc) for the sums of Y_κ over tuples containing a pair or a triple,
//! inclusion–exclusion gives
//!
//!   S_ι = Σ_{pairs ⊂ ι} P − 2 Σ_{triples ⊂ ι} T + 3 Y_ι,
//!
//! so two passes over the tuples suffice (O(n⁴) time, O(n³) memory).

use rand::Rng;

use super::local::{GraphField, LocalDependenceCoupling, GRAPH_FIELD_MAX_N};
use super::{ConditionalMoments, Conditioner, CouplingModel, CouplingSample};
use crate::error::{param, Result};
use crate::graph::{sample_gnp, Graph};
use crate::homogeneity::{component_scales, tuple_components, GraphCounts};
use crate::numeric::binom;
use crate::rng::StreamRng;

pub struct GraphCoupling {
    n: usize,
    p: f64,
    scales: (f64, f64),
    tuple_count: f64,
    small: Option<LocalDependenceCoupling<GraphField>>,
}

/// Exact enumeration covers all 2^C(n,2) graphs; 6 vertices is the limit.
const ENUMERATION_MAX_N: usize = 6;

#[inline]
fn triple_index(a: usize, b: usize, c: usize) -> usize {
    // combinatorial number system, a < b < c
    c * (c - 1) * (c - 2) / 6 + b * (b - 1) / 2 + a
}

impl GraphCoupling {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n < 5 {
            return param(format!("graph coupling needs n >= 5, got {n}"));
        }
        if !(p > 0.0 && p < 1.0) {
            return param(format!("p must lie in (0, 1), got {p}"));
        }
        let small = if n <= ENUMERATION_MAX_N.min(GRAPH_FIELD_MAX_N) {
            Some(LocalDependenceCoupling::new(GraphField::new(n, p)?)?)
        } else {
            None
        };
        Ok(Self { n, p, scales: component_scales(n, p)?, tuple_count: binom(n as u64, 4) as f64, small })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn y(&self, ind: impl Fn(usize, usize) -> f64, t: [usize; 4]) -> [f64; 2] {
        let (x1, x2) = tuple_components(ind, t, self.p);
        [self.scales.0 * x1, self.scales.1 * x2]
    }

    /// S_I for one tuple, by direct enumeration of its neighbourhood.
    fn local_sum(&self, g: &Graph, t: [usize; 4]) -> [f64; 2] {
        let ind = |u: usize, v: usize| g.indicator(u, v);
        let outside: Vec<usize> = (0..self.n).filter(|v| !t.contains(v)).collect();
        let mut s = [0.0; 2];
        let mut add = |mut k: [usize; 4]| {
            k.sort_unstable();
            let y = self.y(ind, k);
            s[0] += y[0];
            s[1] += y[1];
        };
        add(t);
        for drop in 0..4 {
            let keep: Vec<usize> = (0..4).filter(|&i| i != drop).map(|i| t[i]).collect();
            for &o in &outside {
                add([keep[0], keep[1], keep[2], o]);
            }
        }
        for a in 0..4 {
            for b in a + 1..4 {
                for (x, &o1) in outside.iter().enumerate() {
                    for &o2 in &outside[x + 1..] {
                        add([t[a], t[b], o1, o2]);
                    }
                }
            }
        }
        s
    }

    /// Exact moments over the tuple draw for a fixed graph.
    pub fn moments_for_graph(&self, g: &Graph) -> ConditionalMoments {
        let n = self.n;
        assert_eq!(g.n(), n, "graph size does not match coupling");
        let adj: Vec<f64> = (0..n * n).map(|k| g.indicator(k / n, k % n)).collect();
        let ind = |u: usize, v: usize| adj[u * n + v];
        let mut pair = vec![[0.0f64; 2]; n * n];
        let mut triple = vec![[0.0f64; 2]; binom(n as u64, 3) as usize];

        for_each_tuple(n, |t| {
            let y = self.y(ind, t);
            let [i, j, k, l] = t;
            for (a, b) in [(i, j), (i, k), (i, l), (j, k), (j, l), (k, l)] {
                let e = &mut pair[a * n + b];
                e[0] += y[0];
                e[1] += y[1];
            }
            for (a, b, c) in [(i, j, k), (i, j, l), (i, k, l), (j, k, l)] {
                let e = &mut triple[triple_index(a, b, c)];
                e[0] += y[0];
                e[1] += y[1];
            }
        });

        let mut m = ConditionalMoments::zeros(2);
        let mut y_max = 0.0f64;
        for_each_tuple(n, |t| {
            let y = self.y(ind, t);
            let [i, j, k, l] = t;
            let mut s = [3.0 * y[0], 3.0 * y[1]];
            for (a, b) in [(i, j), (i, k), (i, l), (j, k), (j, l), (k, l)] {
                let e = pair[a * n + b];
                s[0] += e[0];
                s[1] += e[1];
            }
            for (a, b, c) in [(i, j, k), (i, j, l), (i, k, l), (j, k, l)] {
                let e = triple[triple_index(a, b, c)];
                s[0] -= 2.0 * e[0];
                s[1] -= 2.0 * e[1];
            }
            y_max = y_max.max(y[0].hypot(y[1]));
            m.d_max = m.d_max.max(s[0].hypot(s[1]));
            m.d2 += s[0] * s[0] + s[1] * s[1];
            for a in 0..2 {
                for b in 0..2 {
                    m.dd[a * 2 + b] += s[a] * s[b];
                    let ys = y[a] * s[b];
                    m.gd[a * 2 + b] += ys;
                    for c in 0..2 {
                        m.gdd[(a * 2 + b) * 2 + c] -= ys * s[c];
                    }
                }
            }
        });
        let nt = self.tuple_count;
        m.d2 /= nt;
        m.dd.iter_mut().for_each(|x| *x /= nt);
        m.g_max = nt * y_max;
        m
    }
}

fn for_each_tuple(n: usize, mut f: impl FnMut([usize; 4])) {
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    f([i, j, k, l]);
                }
            }
        }
    }
}

/// Uniform increasing 4-tuple.
fn random_tuple(n: usize, rng: &mut StreamRng) -> [usize; 4] {
    let mut t = [0usize; 4];
    let mut filled = 0;
    while filled < 4 {
        let v = rng.random_range(0..n);
        if !t[..filled].contains(&v) {
            t[filled] = v;
            filled += 1;
        }
    }
    t.sort_unstable();
    t
}

impl CouplingModel for GraphCoupling {
    fn dim(&self) -> usize {
        2
    }

    fn sample(&self, rng: &mut StreamRng) -> CouplingSample {
        let g = sample_gnp(self.n, self.p, rng).expect("validated parameters");
        let t = random_tuple(self.n, rng);
        let st = GraphCounts::of(&g).and_then(|c| c.stats(self.p)).expect("validated parameters");
        let w = vec![st.w1, st.w2];
        let s = self.local_sum(&g, t);
        let y = self.y(|u, v| g.indicator(u, v), t);
        let wp = vec![w[0] - s[0], w[1] - s[1]];
        CouplingSample::new(w, wp, vec![-self.tuple_count * y[0], -self.tuple_count * y[1]])
    }

    fn enumerate(&self) -> Option<Vec<(f64, CouplingSample)>> {
        self.small.as_ref()?.enumerate()
    }

    fn conditioner(&self) -> Option<&dyn Conditioner> {
        Some(self)
    }
}

impl Conditioner for GraphCoupling {
    fn dim(&self) -> usize {
        2
    }

    fn draw(&self, rng: &mut StreamRng) -> ConditionalMoments {
        let g = sample_gnp(self.n, self.p, rng).expect("validated parameters");
        self.moments_for_graph(&g)
    }

    fn states(&self) -> Option<Vec<(f64, ConditionalMoments)>> {
        self.small.as_ref()?.states()
    }
}
