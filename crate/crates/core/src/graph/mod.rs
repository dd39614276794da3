//! Simple undirected graphs on labeled vertices, stored as dense bitset rows.

mod count;
mod generate;
pub mod io;
mod kernel;

pub use count::{
    brute_force_count, count_edges, count_four_cycles, count_triangles, injective_count, injective_density,
    BRUTE_FORCE_MAX_N,
};
pub use generate::{gen_gnp, gen_graphon, sample_gnp, sample_graphon};
pub use kernel::{kernel_density, BlockSpec, GraphonKernel};

use crate::error::{param, Result};

/// Simple undirected graph. Row `i` is a bitset of the neighbours of `i`,
/// one `u64` word per 64 vertices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Graph {
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return param("a graph needs at least one vertex");
        }
        let words = n.div_ceil(64);
        Ok(Self { n, words, bits: vec![0; n * words] })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for i in 0..n {
            for j in i + 1..n {
                g.set_edge(i, j);
            }
        }
        Ok(g)
    }

    /// The cycle 0-1-...-(n-1)-0.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return param("a cycle needs at least three vertices");
        }
        let mut g = Self::empty(n)?;
        for i in 0..n {
            g.set_edge(i, (i + 1) % n);
        }
        Ok(g)
    }

    pub fn path(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for i in 1..n {
            g.set_edge(i - 1, i);
        }
        Ok(g)
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Builds the graph whose pair `k` (in [`Graph::pairs`] order) is an edge
    /// iff bit `k` of `mask` is set. Used to enumerate all graphs on few vertices.
    pub fn from_pair_mask(n: usize, mask: u64) -> Result<Self> {
        let m = n * n.saturating_sub(1) / 2;
        if m > 64 {
            return param(format!("pair mask cannot describe graphs on {n} vertices"));
        }
        let mut g = Self::empty(n)?;
        for (k, (i, j)) in Self::pairs(n).enumerate() {
            if mask >> k & 1 == 1 {
                g.set_edge(i, j);
            }
        }
        Ok(g)
    }

    /// Unordered pairs `(i, j)`, `i < j`, in lexicographic order.
    pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return param(format!("self-loop at vertex {i}"));
        }
        if i >= self.n || j >= self.n {
            return param(format!("edge ({i}, {j}) out of range for n = {}", self.n));
        }
        self.set_edge(i, j);
        Ok(())
    }

    pub(crate) fn set_edge(&mut self, i: usize, j: usize) {
        debug_assert!(i != j && i < self.n && j < self.n);
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Edge indicator as 0/1.
    #[inline]
    pub fn indicator(&self, i: usize, j: usize) -> f64 {
        if self.has_edge(i, j) {
            1.0
        } else {
            0.0
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Common neighbours of `i` and `j`.
    #[inline]
    pub fn codegree(&self, i: usize, j: usize) -> u32 {
        self.row(i).iter().zip(self.row(j)).map(|(a, b)| (a & b).count_ones()).sum()
    }

    /// Edges `(i, j)` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        Self::pairs(self.n).filter(|&(i, j)| self.has_edge(i, j)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| !self.has_edge(i, i) && (0..self.n).all(|j| self.has_edge(i, j) == self.has_edge(j, i)))
    }
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Graph").field("n", &self.n).field("edges", &self.edges()).finish()
    }
}

/// The patterns the homogeneity test needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubgraphPattern {
    K2,
    K3,
    C4,
}

impl SubgraphPattern {
    pub fn vertices(self) -> usize {
        match self {
            Self::K2 => 2,
            Self::K3 => 3,
            Self::C4 => 4,
        }
    }

    pub fn edge_count(self) -> usize {
        match self {
            Self::K2 => 1,
            Self::K3 => 3,
            Self::C4 => 4,
        }
    }

    pub fn automorphisms(self) -> u64 {
        match self {
            Self::K2 => 2,
            Self::K3 => 6,
            Self::C4 => 8,
        }
    }

    /// Edge list on vertices `0..vertices()`; C4 is the cycle 0-1-2-3-0.
    pub fn edge_list(self) -> &'static [(usize, usize)] {
        match self {
            Self::K2 => &[(0, 1)],
            Self::K3 => &[(0, 1), (1, 2), (0, 2)],
            Self::C4 => &[(0, 1), (1, 2), (2, 3), (0, 3)],
        }
    }
}

impl std::str::FromStr for SubgraphPattern {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "k2" => Ok(Self::K2),
            "k3" => Ok(Self::K3),
            "c4" => Ok(Self::C4),
            other => param(format!("unknown pattern '{other}' (expected k2, k3 or c4)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_constructions() {
        let g = Graph::cycle(4).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert!(g.is_symmetric());
        assert_eq!(g.codegree(0, 2), 2);
        assert_eq!(g.codegree(0, 1), 0);
        assert!(Graph::empty(0).is_err());
    }

    #[test]
    fn rejects_bad_edges() {
        let mut g = Graph::empty(3).unwrap();
        assert!(g.add_edge(1, 1).is_err());
        assert!(g.add_edge(0, 3).is_err());
        g.add_edge(2, 0).unwrap();
        assert!(g.has_edge(0, 2));
    }

    #[test]
    fn wide_rows_span_multiple_words() {
        let mut g = Graph::empty(130).unwrap();
        g.add_edge(0, 129).unwrap();
        g.add_edge(65, 129).unwrap();
        assert_eq!(g.codegree(0, 65), 1);
        assert_eq!(g.degree(129), 2);
    }

    #[test]
    fn pair_mask_matches_pair_order() {
        let g = Graph::from_pair_mask(4, 0b100001).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (2, 3)]);
    }
}
