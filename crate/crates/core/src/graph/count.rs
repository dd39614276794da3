use super::{Graph, SubgraphPattern};
use crate::error::{param, Error, Result};

/// Largest graph [`brute_force_count`] accepts.
pub const BRUTE_FORCE_MAX_N: usize = 14;

/// Number of edges, T₁.
pub fn count_edges(g: &Graph) -> u64 {
    (0..g.n()).map(|i| g.degree(i) as u64).sum::<u64>() / 2
}

/// Number of 4-cycles, T₂.
///
/// Every 4-cycle a-b-c-d has exactly two diagonals {a,c} and {b,d}, and a pair
/// {i,j} with codegree c is a diagonal of C(c,2) cycles. Summing C(c,2) over all
/// pairs therefore counts each cycle twice.
pub fn count_four_cycles(g: &Graph) -> u64 {
    let n = g.n();
    let mut twice = 0u64;
    for i in 0..n {
        let ri = g.row(i);
        for j in i + 1..n {
            let c: u64 = ri.iter().zip(g.row(j)).map(|(a, b)| (a & b).count_ones() as u64).sum();
            twice += c * c.saturating_sub(1) / 2;
        }
    }
    twice / 2
}

/// Number of triangles: each edge {i,j} closes `codegree(i,j)` triangles, and
/// every triangle has three edges.
pub fn count_triangles(g: &Graph) -> u64 {
    let n = g.n();
    let mut thrice = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if g.has_edge(i, j) {
                thrice += g.codegree(i, j) as u64;
            }
        }
    }
    thrice / 3
}

/// |end(F, G)|: injective homomorphisms of the pattern into `g`, via the fast counters.
pub fn injective_count(g: &Graph, f: SubgraphPattern) -> u64 {
    let copies = match f {
        SubgraphPattern::K2 => count_edges(g),
        SubgraphPattern::K3 => count_triangles(g),
        SubgraphPattern::C4 => count_four_cycles(g),
    };
    copies * f.automorphisms()
}

/// Exhaustive count of copies of `f` in `g`: enumerates every injective map
/// of the pattern's vertices, keeps the edge-preserving ones, and divides by
/// the automorphism count.
pub fn brute_force_count(g: &Graph, f: SubgraphPattern) -> Result<u64> {
    let n = g.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Size(format!("brute-force counting is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")));
    }
    let k = f.vertices();
    let edges = f.edge_list();
    let mut image = vec![0usize; k];
    let mut homs = 0u64;
    enumerate_injections(n, k, 0, &mut image, &mut |img| {
        if edges.iter().all(|&(a, b)| g.has_edge(img[a], img[b])) {
            homs += 1;
        }
    });
    Ok(homs / f.automorphisms())
}

fn enumerate_injections(n: usize, k: usize, depth: usize, image: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    if depth == k {
        visit(image);
        return;
    }
    for v in 0..n {
        if image[..depth].contains(&v) {
            continue;
        }
        image[depth] = v;
        enumerate_injections(n, k, depth + 1, image, visit);
    }
}

/// t(F, G) = |end(F, G)| / (n)_k.
pub fn injective_density(g: &Graph, f: SubgraphPattern) -> Result<f64> {
    let k = f.vertices();
    if g.n() < k {
        return param(format!("density of a {k}-vertex pattern needs n >= {k}, got {}", g.n()));
    }
    Ok(injective_count(g, f) as f64 / falling_factorial(g.n() as u64, k as u32) as f64)
}

/// (n)_k = n (n-1) ... (n-k+1), exact.
pub fn falling_factorial(n: u64, k: u32) -> u128 {
    (0..k as u64).map(|i| n.saturating_sub(i) as u128).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_gnp;
    use SubgraphPattern::*;

    #[test]
    fn edge_counts() {
        assert_eq!(count_edges(&Graph::empty(4).unwrap()), 0);
        assert_eq!(count_edges(&Graph::complete(5).unwrap()), 10);
        assert_eq!(count_edges(&Graph::cycle(4).unwrap()), 4);
    }

    #[test]
    fn four_cycle_counts() {
        assert_eq!(count_four_cycles(&Graph::cycle(4).unwrap()), 1);
        assert_eq!(count_four_cycles(&Graph::path(4).unwrap()), 0);
        let k5 = Graph::complete(5).unwrap();
        assert_eq!(brute_force_count(&k5, C4).unwrap(), 15);
        assert_eq!(count_four_cycles(&k5), 15);
    }

    #[test]
    fn brute_force_small_cases() {
        assert_eq!(brute_force_count(&Graph::complete(4).unwrap(), C4).unwrap(), 3);
        assert_eq!(brute_force_count(&Graph::complete(3).unwrap(), K3).unwrap(), 1);
        assert_eq!(brute_force_count(&Graph::empty(6).unwrap(), K2).unwrap(), 0);
        let big = Graph::empty(BRUTE_FORCE_MAX_N + 1).unwrap();
        assert!(matches!(brute_force_count(&big, K2), Err(Error::Size(_))));
    }

    #[test]
    fn densities() {
        assert_eq!(injective_density(&Graph::complete(5).unwrap(), K2).unwrap(), 1.0);
        assert_eq!(injective_density(&Graph::empty(5).unwrap(), C4).unwrap(), 0.0);
        let c4 = Graph::cycle(4).unwrap();
        assert!((injective_density(&c4, C4).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(injective_density(&Graph::complete(3).unwrap(), C4).is_err());
    }

    #[test]
    fn fast_counters_match_brute_force_on_random_graphs() {
        let mut checked = 0;
        for seed in 0..200u64 {
            let n = 5 + (seed % 8) as usize;
            let p = [0.2, 0.5, 0.8][(seed / 8 % 3) as usize];
            let g = gen_gnp(n, p, seed).unwrap();
            assert_eq!(count_four_cycles(&g), brute_force_count(&g, C4).unwrap(), "seed {seed}");
            assert_eq!(count_triangles(&g), brute_force_count(&g, K3).unwrap(), "seed {seed}");
            assert_eq!(count_edges(&g), brute_force_count(&g, K2).unwrap(), "seed {seed}");
            assert_eq!(injective_count(&g, K2), 2 * count_edges(&g));
            checked += 1;
        }
        assert_eq!(checked, 200);
    }
}
