//! Sparse propagation operators built once per graph.

use crate::graph::Graph;
use crate::tensor::Tensor2;

/// Row-compressed sparse square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOp {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for (j, w) in row {
                indices.push(j);
                values.push(w);
            }
            indptr.push(indices.len());
        }
        SparseOp {
            indptr,
            indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// `self · h`.
    pub fn apply(&self, h: &Tensor2) -> Tensor2 {
        assert_eq!(h.rows(), self.dim(), "sparse apply row mismatch");
        let cols = h.cols();
        let mut out = Tensor2::zeros(h.rows(), cols);
        for i in 0..self.dim() {
            for (j, w) in self.row(i) {
                let src = h.row(j);
                let dst = out.row_mut(i);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        out
    }

    /// `selfᵀ · h`.
    pub fn apply_transpose(&self, h: &Tensor2) -> Tensor2 {
        assert_eq!(h.rows(), self.dim(), "sparse apply row mismatch");
        let cols = h.cols();
        let mut out = Tensor2::zeros(h.rows(), cols);
        for i in 0..self.dim() {
            for (j, w) in self.row(i) {
                let src = h.row(i);
                let dst = out.row_mut(j);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Tensor2 {
        let n = self.dim();
        let mut out = Tensor2::zeros(n, n);
        for i in 0..n {
            for (j, w) in self.row(i) {
                out.set(i, j, out.get(i, j) + w);
            }
        }
        out
    }
}

/// Operators on the symmetrized graph `Ã = A_sym + I`, where `A_sym` is the
/// 0/1 undirected adjacency (a data self-loop sets its diagonal entry).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOps {
    /// `D̃^{-1/2} Ã D̃^{-1/2}` (GCN, SGC).
    pub normalized: SparseOp,
    /// `Ã`: self plus neighbour sum (GIN with ε = 0).
    pub sum: SparseOp,
    /// Row-normalized `A_sym`: neighbour mean, empty rows for isolated nodes (SAGE).
    pub mean: SparseOp,
}

impl GraphOps {
    pub fn new(g: &Graph) -> Self {
        let adj = g.undirected_neighbors();
        let n = g.node_count();

        // Ã rows, sorted by column; a data self-loop adds to the identity entry
        let tilde: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                let mut row: Vec<(usize, f64)> = Vec::with_capacity(adj[i].len() + 1);
                let mut placed_self = false;
                for &j in &adj[i] {
                    if j == i {
                        row.push((i, 2.0));
                        placed_self = true;
                    } else {
                        if !placed_self && j > i {
                            row.push((i, 1.0));
                            placed_self = true;
                        }
                        row.push((j, 1.0));
                    }
                }
                if !placed_self {
                    row.push((i, 1.0));
                }
                row
            })
            .collect();
        let inv_sqrt_deg: Vec<f64> = tilde
            .iter()
            .map(|row| 1.0 / row.iter().map(|(_, w)| w).sum::<f64>().sqrt())
            .collect();
        let normalized = tilde
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .map(|&(j, w)| (j, w * inv_sqrt_deg[i] * inv_sqrt_deg[j]))
                    .collect()
            })
            .collect();
        let mean = adj
            .iter()
            .map(|nb| {
                let inv = 1.0 / nb.len() as f64;
                nb.iter().map(|&j| (j, inv)).collect()
            })
            .collect();

        GraphOps {
            normalized: SparseOp::from_rows(normalized),
            sum: SparseOp::from_rows(tilde),
            mean: SparseOp::from_rows(mean),
        }
    }

    pub fn node_count(&self) -> usize {
        self.sum.dim()
    }
}
