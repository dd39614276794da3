use rand::{Rng, RngCore};

use super::{Graph, GraphonKernel};
use crate::error::{param, Result};
use crate::rng::{self, StreamRng};

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return param(format!("edge probability must lie in [0, 1], got {p}"));
    }
    Ok(())
}

/// A Bernoulli(p) coin driven by one 64-bit draw per flip.
#[derive(Clone, Copy)]
struct Coin(Option<u64>);

impl Coin {
    fn new(p: f64) -> Self {
        // None means "always heads"
        if p >= 1.0 {
            Coin(None)
        } else {
            Coin(Some((p * 18446744073709551616.0) as u64))
        }
    }

    #[inline]
    fn flip(self, rng: &mut impl RngCore) -> bool {
        let u = rng.next_u64();
        match self.0 {
            None => true,
            Some(t) => u < t,
        }
    }
}

/// Erdős–Rényi G(n, p), seeded.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<Graph> {
    sample_gnp(n, p, &mut rng::from_seed(seed))
}

/// G(n, p) from an explicit stream; every pair consumes exactly one draw.
pub fn sample_gnp(n: usize, p: f64, rng: &mut StreamRng) -> Result<Graph> {
    check_p(p)?;
    let mut g = Graph::empty(n)?;
    let coin = Coin::new(p);
    for i in 0..n {
        for j in i + 1..n {
            if coin.flip(rng) {
                g.set_edge(i, j);
            }
        }
    }
    Ok(g)
}

/// W-random graph G(n, κ): latent positions U_i iid uniform on [0,1], then
/// each pair {i,j} independently an edge with probability κ(U_i, U_j).
pub fn gen_graphon(n: usize, kernel: &GraphonKernel, seed: u64) -> Result<Graph> {
    sample_graphon(n, kernel, &mut rng::from_seed(seed))
}

pub fn sample_graphon(n: usize, kernel: &GraphonKernel, rng: &mut StreamRng) -> Result<Graph> {
    let mut g = Graph::empty(n)?;
    let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    for i in 0..n {
        for j in i + 1..n {
            if Coin::new(kernel.eval(u[i], u[j])).flip(rng) {
                g.set_edge(i, j);
            }
        }
    }
    Ok(g)
}
