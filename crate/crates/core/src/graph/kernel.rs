use serde::{Deserialize, Serialize};

use super::SubgraphPattern;
use crate::error::{param, Result};

/// A symmetric kernel κ: [0,1]² → [0,1] from which dense random graphs are sampled.
///
/// Only the upper triangle of a block grid is stored, so symmetry holds by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphonKernel {
    Constant(f64),
    /// Piecewise constant on the rectangles of a partition of [0,1].
    BlockStep {
        bounds: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Piecewise constant on an m×m uniform grid.
    Tabulated {
        m: usize,
        upper: Vec<f64>,
    },
}

/// On-disk description of a step kernel: interior breakpoints and the full
/// (symmetric) block matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockSpec {
    #[serde(default)]
    pub breaks: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

fn packed_index(k: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * k - a * (a + 1) / 2 + b
}

fn check_probability(v: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return param(format!("{what} must lie in [0, 1], got {v}"));
    }
    Ok(())
}

fn pack_symmetric(values: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = values.len();
    if k == 0 {
        return param("kernel grid is empty");
    }
    let mut upper = Vec::with_capacity(k * (k + 1) / 2);
    for (a, row) in values.iter().enumerate() {
        if row.len() != k {
            return param(format!("kernel grid row {a} has {} entries, expected {k}", row.len()));
        }
        for b in a..k {
            if row[b] != values[b][a] {
                return param(format!("kernel grid is not symmetric at ({a}, {b})"));
            }
            check_probability(row[b], "kernel value")?;
            upper.push(row[b]);
        }
    }
    Ok(upper)
}

impl GraphonKernel {
    pub fn constant(p: f64) -> Result<Self> {
        check_probability(p, "edge probability")?;
        Ok(Self::Constant(p))
    }

    /// `breaks` are the interior breakpoints (strictly increasing, inside (0,1));
    /// `values` is the symmetric k×k block matrix with k = breaks.len() + 1.
    pub fn block_step(breaks: &[f64], values: &[Vec<f64>]) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return param(format!(
                "{} breakpoints need a {}x{} block matrix",
                breaks.len(),
                breaks.len() + 1,
                breaks.len() + 1
            ));
        }
        let mut bounds = Vec::with_capacity(breaks.len() + 2);
        bounds.push(0.0);
        for &b in breaks {
            if !(b > *bounds.last().unwrap() && b < 1.0) {
                return param("breakpoints must be strictly increasing inside (0, 1)");
            }
            bounds.push(b);
        }
        bounds.push(1.0);
        Ok(Self::BlockStep { bounds, upper: pack_symmetric(values)? })
    }

    /// Symmetric function tabulated at the cells of a uniform m×m grid.
    pub fn tabulated(values: &[Vec<f64>]) -> Result<Self> {
        Ok(Self::Tabulated { m: values.len(), upper: pack_symmetric(values)? })
    }

    pub fn from_spec(spec: &BlockSpec) -> Result<Self> {
        Self::block_step(&spec.breaks, &spec.values)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(s)?)
    }

    pub fn is_constant(&self) -> bool {
        let (_, v) = self.blocks();
        v.windows(2).all(|w| w[0] == w[1])
    }

    fn grid_size(&self) -> usize {
        match self {
            Self::Constant(_) => 1,
            Self::BlockStep { bounds, .. } => bounds.len() - 1,
            Self::Tabulated { m, .. } => *m,
        }
    }

    fn block_of(&self, x: f64) -> usize {
        match self {
            Self::Constant(_) => 0,
            Self::BlockStep { bounds, .. } => {
                let k = bounds.len() - 1;
                // first interior breakpoint strictly greater than x
                bounds[1..k].partition_point(|&b| b <= x)
            }
            Self::Tabulated { m, .. } => ((x * *m as f64) as usize).min(m - 1),
        }
    }

    fn block_value(&self, a: usize, b: usize) -> f64 {
        match self {
            Self::Constant(p) => *p,
            Self::BlockStep { upper, .. } | Self::Tabulated { upper, .. } => {
                upper[packed_index(self.grid_size(), a, b)]
            }
        }
    }

    /// κ(x, y).
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.block_value(self.block_of(x), self.block_of(y))
    }

    /// Block widths and the full row-major block matrix.
    pub fn blocks(&self) -> (Vec<f64>, Vec<f64>) {
        let k = self.grid_size();
        let widths = match self {
            Self::Constant(_) => vec![1.0],
            Self::BlockStep { bounds, .. } => bounds.windows(2).map(|w| w[1] - w[0]).collect(),
            Self::Tabulated { m, .. } => vec![1.0 / *m as f64; *m],
        };
        let values = (0..k * k).map(|ab| self.block_value(ab / k, ab % k)).collect();
        (widths, values)
    }
}

/// t(F, κ). Closed form for constant kernels; for step kernels the integral is
/// the finite block sum, evaluated as a trace of powers of D^{1/2} V D^{1/2}
/// (D the diagonal of block widths). For tabulated kernels this is the
/// midpoint rule on the stored grid.
pub fn kernel_density(f: SubgraphPattern, kernel: &GraphonKernel) -> f64 {
    if let GraphonKernel::Constant(p) = kernel {
        return p.powi(f.edge_count() as i32);
    }
    let (w, v) = kernel.blocks();
    let k = w.len();
    if f == SubgraphPattern::K2 {
        let mut s = 0.0;
        for a in 0..k {
            for b in 0..k {
                s += w[a] * w[b] * v[a * k + b];
            }
        }
        return s;
    }
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let a: Vec<f64> = (0..k * k).map(|ab| sw[ab / k] * v[ab] * sw[ab % k]).collect();
    let a2 = matmul(&a, &a, k);
    match f {
        SubgraphPattern::K3 => (0..k).map(|i| (0..k).map(|j| a2[i * k + j] * a[j * k + i]).sum::<f64>()).sum(),
        // A is symmetric, so tr(A⁴) = ‖A²‖²_F
        SubgraphPattern::C4 => a2.iter().map(|x| x * x).sum(),
        SubgraphPattern::K2 => unreachable!(),
    }
}

fn matmul(x: &[f64], y: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for l in 0..k {
            let xil = x[i * k + l];
            for j in 0..k {
                out[i * k + j] += xil * y[l * k + j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use SubgraphPattern::*;

    fn two_block(d: f64, o: f64) -> GraphonKernel {
        GraphonKernel::block_step(&[0.5], &[vec![d, o], vec![o, d]]).unwrap()
    }

    /// Explicit sum over the block labels of the four cycle vertices.
    fn c4_block_sum(k: &GraphonKernel) -> f64 {
        let (w, v) = k.blocks();
        let m = w.len();
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        s += w[a] * w[b] * w[c] * w[d] * v[a * m + b] * v[b * m + c] * v[c * m + d] * v[d * m + a];
                    }
                }
            }
        }
        s
    }

    #[test]
    fn constant_kernel_densities() {
        for p in [0.0, 0.25, 0.5, 1.0] {
            let k = GraphonKernel::constant(p).unwrap();
            for f in [K2, K3, C4] {
                let expect = p.powi(f.edge_count() as i32);
                assert!((kernel_density(f, &k) - expect).abs() <= 1e-15);
            }
            // the same constant stored as a 3-block step kernel
            let b = GraphonKernel::block_step(&[0.2, 0.7], &vec![vec![p; 3]; 3]).unwrap();
            for f in [K2, K3, C4] {
                let expect = p.powi(f.edge_count() as i32);
                assert!((kernel_density(f, &b) - expect).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn block_kernel_c4_exceeds_edge_density_power() {
        let k = two_block(0.6, 0.4);
        let t2 = kernel_density(K2, &k);
        let t4 = kernel_density(C4, &k);
        assert!((t2 - 0.5).abs() < 1e-15);
        assert!((t4 - c4_block_sum(&k)).abs() < 1e-15);
        // eigenvalues 0.5 and 0.1 of the kernel operator
        assert!((t4 - (0.5f64.powi(4) + 0.1f64.powi(4))).abs() < 1e-15);
        assert!(t4 > 0.5f64.powi(4));
    }

    #[test]
    fn unequal_blocks_match_block_sum() {
        let k =
            GraphonKernel::block_step(&[0.3, 0.55], &[vec![0.9, 0.2, 0.4], vec![0.2, 0.1, 0.7], vec![0.4, 0.7, 0.5]])
                .unwrap();
        assert!((kernel_density(C4, &k) - c4_block_sum(&k)).abs() < 1e-15);
        let (w, v) = k.blocks();
        let mut tri = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    tri += w[a] * w[b] * w[c] * v[a * 3 + b] * v[b * 3 + c] * v[a * 3 + c];
                }
            }
        }
        assert!((kernel_density(K3, &k) - tri).abs() < 1e-15);
    }

    #[test]
    fn tabulated_kernel_uses_grid_cells() {
        let t = GraphonKernel::tabulated(&[vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
        assert_eq!(t.eval(0.1, 0.9), 0.4);
        assert_eq!(t.eval(0.9, 0.9), 0.6);
        assert_eq!(t.eval(1.0, 0.0), 0.4);
        assert!((kernel_density(C4, &t) - kernel_density(C4, &two_block(0.6, 0.4))).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_kernels() {
        assert!(GraphonKernel::constant(1.5).is_err());
        assert!(GraphonKernel::constant(f64::NAN).is_err());
        assert!(GraphonKernel::block_step(&[0.5], &[vec![0.1, 0.2], vec![0.3, 0.1]]).is_err());
        assert!(GraphonKernel::block_step(&[1.2], &[vec![0.1, 0.2], vec![0.2, 0.1]]).is_err());
        assert!(GraphonKernel::block_step(&[], &[vec![0.1, 0.2], vec![0.2, 0.1]]).is_err());
    }

    #[test]
    fn block_lookup_at_breakpoints() {
        let k = two_block(0.7, 0.3);
        assert_eq!(k.eval(0.49, 0.2), 0.7);
        assert_eq!(k.eval(0.5, 0.2), 0.3);
        assert_eq!(k.eval(0.5, 0.99), 0.7);
        assert!(!k.is_constant());
        assert!(two_block(0.4, 0.4).is_constant());
    }

    #[test]
    fn json_spec_round_trip() {
        let k = GraphonKernel::from_json(r#"{"breaks":[0.5],"values":[[0.7,0.3],[0.3,0.7]]}"#).unwrap();
        assert_eq!(k, two_block(0.7, 0.3));
    }
}
