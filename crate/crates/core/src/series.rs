//! Containers for multivariate and network observation sequences.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `T` observations in `R^p`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSeries {
    data: Vec<f64>,
    dim: usize,
}

impl VectorSeries {
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} values do not form rows of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observations must be finite"));
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::invalid(format!(
                "row {} has dimension {}, expected {dim}",
                i + 1,
                rows[i].len()
            )));
        }
        Self::from_flat(rows.concat(), dim)
    }

    /// Scalar series as a one-dimensional vector series.
    pub fn from_scalars(x: &[f64]) -> Result<Self> {
        Self::from_flat(x.to_vec(), 1)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Observation `i` (0-based).
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Odd-indexed (`1, 3, 5, ..`) and even-indexed (`2, 4, ..`) halves.
    ///
    /// Index `j` of either half corresponds to original time `2j - 1` or
    /// `2j`, so change points found on a half map back through `t -> 2t`.
    pub fn split_even_odd(&self) -> Result<(Self, Self)> {
        if self.len() < 4 {
            return Err(Error::invalid(format!(
                "sample splitting needs at least 4 observations, got {}",
                self.len()
            )));
        }
        let mut odd = Vec::with_capacity(self.data.len() / 2 + self.dim);
        let mut even = Vec::with_capacity(self.data.len() / 2);
        for (i, row) in self.rows().enumerate() {
            if i % 2 == 0 { &mut odd } else { &mut even }.extend_from_slice(row);
        }
        Ok((
            Self { data: odd, dim: self.dim },
            Self { data: even, dim: self.dim },
        ))
    }
}

/// Sequence of undirected simple graphs on `n` nodes.
///
/// Each snapshot stores the strict upper triangle, pair `(i, j)` with
/// `i < j` at [`AdjacencySeries::pair_index`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencySeries {
    nodes: usize,
    snapshots: Vec<Vec<u8>>,
}

impl AdjacencySeries {
    pub fn pair_count(nodes: usize) -> usize {
        nodes * nodes.saturating_sub(1) / 2
    }

    /// Position of pair `(i, j)`, `i < j < n`, both 0-based.
    #[inline]
    pub fn pair_index(nodes: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < nodes);
        i * nodes - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Snapshots given as upper-triangle 0/1 vectors.
    pub fn from_upper(nodes: usize, snapshots: Vec<Vec<u8>>) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::invalid("a network needs at least 2 nodes"));
        }
        let pairs = Self::pair_count(nodes);
        for (t, snap) in snapshots.iter().enumerate() {
            if snap.len() != pairs {
                return Err(Error::invalid(format!(
                    "snapshot {} has {} pairs, expected {pairs}",
                    t + 1,
                    snap.len()
                )));
            }
            if snap.iter().any(|&v| v > 1) {
                return Err(Error::invalid(format!("snapshot {} is not binary", t + 1)));
            }
        }
        Ok(Self { nodes, snapshots })
    }

    /// Builds `len` snapshots from 1-based edges `(t, i, j)`, `i != j`.
    pub fn from_edges(nodes: usize, len: usize, edges: &[(usize, usize, usize)]) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::invalid("a network needs at least 2 nodes"));
        }
        let mut snapshots = vec![vec![0u8; Self::pair_count(nodes)]; len];
        for &(t, i, j) in edges {
            if t == 0 || t > len || i == 0 || j == 0 || i > nodes || j > nodes || i == j {
                return Err(Error::invalid(format!(
                    "edge ({t}, {i}, {j}) outside 1..={len} x 1..={nodes} or a self-loop"
                )));
            }
            let (a, b) = (i.min(j) - 1, i.max(j) - 1);
            snapshots[t - 1][Self::pair_index(nodes, a, b)] = 1;
        }
        Ok(Self { nodes, snapshots })
    }

    /// Validates symmetry, binary entries and a zero diagonal.
    pub fn from_dense(matrices: &[DMatrix<f64>]) -> Result<Self> {
        let nodes = matrices.first().map_or(0, DMatrix::nrows);
        let mut snapshots = Vec::with_capacity(matrices.len());
        for (t, a) in matrices.iter().enumerate() {
            if a.nrows() != nodes || a.ncols() != nodes {
                return Err(Error::invalid(format!("snapshot {} is not {nodes}x{nodes}", t + 1)));
            }
            let mut upper = Vec::with_capacity(Self::pair_count(nodes));
            for i in 0..nodes {
                if a[(i, i)] != 0.0 {
                    return Err(Error::invalid(format!("snapshot {} has a self-loop", t + 1)));
                }
                for j in i + 1..nodes {
                    let v = a[(i, j)];
                    if v != a[(j, i)] || !(v == 0.0 || v == 1.0) {
                        return Err(Error::invalid(format!(
                            "snapshot {} is not a symmetric 0/1 matrix",
                            t + 1
                        )));
                    }
                    upper.push(v as u8);
                }
            }
            snapshots.push(upper);
        }
        Self::from_upper(nodes, snapshots)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Upper triangle of snapshot `t` (0-based).
    pub fn upper(&self, t: usize) -> &[u8] {
        &self.snapshots[t]
    }

    /// Edges of every snapshot as 1-based `(t, i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (t, snap) in self.snapshots.iter().enumerate() {
            let mut k = 0;
            for i in 0..self.nodes {
                for j in i + 1..self.nodes {
                    if snap[k] == 1 {
                        out.push((t + 1, i + 1, j + 1));
                    }
                    k += 1;
                }
            }
        }
        out
    }

    pub fn dense(&self, t: usize) -> DMatrix<f64> {
        upper_to_dense(self.nodes, self.snapshots[t].iter().map(|&v| v as f64))
    }

    /// Odd- and even-indexed halves, mapped back through `t -> 2t`.
    pub fn split_even_odd(&self) -> Result<(Self, Self)> {
        if self.len() < 4 {
            return Err(Error::invalid(format!(
                "sample splitting needs at least 4 snapshots, got {}",
                self.len()
            )));
        }
        let odd = self.snapshots.iter().step_by(2).cloned().collect();
        let even = self.snapshots.iter().skip(1).step_by(2).cloned().collect();
        Ok((
            Self { nodes: self.nodes, snapshots: odd },
            Self { nodes: self.nodes, snapshots: even },
        ))
    }
}

/// Symmetric matrix with zero diagonal from strict-upper-triangle values.
pub fn upper_to_dense(nodes: usize, upper: impl IntoIterator<Item = f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(nodes, nodes);
    let mut it = upper.into_iter();
    for i in 0..nodes {
        for j in i + 1..nodes {
            let v = it.next().expect("upper triangle too short");
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Strict upper triangle of a square matrix, row by row.
pub fn dense_to_upper(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(AdjacencySeries::pair_count(n));
    for i in 0..n {
        for j in i + 1..n {
            out.push(m[(i, j)]);
        }
    }
    out
}
