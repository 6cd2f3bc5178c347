//! Dense row-major f64 tensor of rank 1..=3 plus the handful of BLAS-style
//! kernels the models need. Matrix products go through `matrixmultiply`;
//! the vector kernels are written so memory access stays sequential
//! (dot-product form for `W x`, axpy form for `Wᵀ x`).

use rand::Rng;

use crate::error::{shape as shape_err, Error, Result};

/// Row-major dense tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        assert!(
            !shape.is_empty() && shape.len() <= 3,
            "tensor rank must be 1..=3, got {}",
            shape.len()
        );
        Tensor { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        if shape.is_empty() || shape.len() > 3 {
            return Err(shape_err(format!("tensor rank must be 1..=3, got {}", shape.len())));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(shape_err(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Rows of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        debug_assert_eq!(self.rank(), 2);
        self.shape[0]
    }

    /// Columns of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        debug_assert_eq!(self.rank(), 2);
        self.shape[1]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row `i` of a rank-2 tensor as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn get2(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.shape[1] + j]
    }

    pub fn set2(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.shape[1] + j] = value;
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn zeros_like(&self) -> Tensor {
        Tensor::zeros(&self.shape)
    }

    /// Fills with uniform values in `(-limit, limit)`.
    pub fn init_uniform<R: Rng>(&mut self, rng: &mut R, limit: f64) {
        for x in &mut self.data {
            *x = rng.random_range(-limit..limit);
        }
    }

    /// `self += alpha * other`; shapes must match.
    pub fn add_scaled(&mut self, other: &Tensor, alpha: f64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    /// Errors if any element is NaN or infinite.
    pub fn check_finite(&self, context: &str) -> Result<()> {
        if let Some(pos) = self.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: context.to_string(),
                detail: format!("element {pos} of shape {:?} is {}", self.shape, self.data[pos]),
            });
        }
        Ok(())
    }
}

/// Glorot uniform limit `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Sparse row-major matrix: per row, `(column, value)` pairs in ascending
/// column order. Crash-frame feature vectors are mostly zeros (a few tf-idf
/// hits plus a handful of indicator bits), so the encoder's input-side work
/// shrinks by an order of magnitude when it streams only the nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    dim: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

impl SparseRows {
    pub fn new(dim: usize) -> SparseRows {
        SparseRows { dim, rows: Vec::new() }
    }

    /// Appends a row; entries must be in-bounds and strictly ascending.
    pub fn push_row(&mut self, entries: Vec<(u32, f64)>) {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0), "columns must ascend");
        debug_assert!(entries.iter().all(|(j, _)| (*j as usize) < self.dim));
        self.rows.push(entries);
    }

    pub fn from_dense(x: &Tensor) -> SparseRows {
        let mut s = SparseRows::new(x.cols());
        for t in 0..x.rows() {
            s.push_row(
                x.row(t)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j as u32, *v))
                    .collect(),
            );
        }
        s
    }

    pub fn to_dense(&self) -> Tensor {
        let mut x = Tensor::zeros(&[self.rows.len(), self.dim]);
        for (t, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                x.set2(t, j as usize, v);
            }
        }
        x
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[(u32, f64)] {
        &self.rows[t]
    }

    /// Same rows in reverse order.
    pub fn reversed(&self) -> SparseRows {
        SparseRows { dim: self.dim, rows: self.rows.iter().rev().cloned().collect() }
    }
}

/// `c = alpha * op(a) . op(b) + beta * c` for rank-2 tensors, with `op`
/// controlled by the transpose flags.
pub fn gemm(alpha: f64, a: &Tensor, ta: bool, b: &Tensor, tb: bool, beta: f64, c: &mut Tensor) {
    let (m, ka) = if ta { (a.cols(), a.rows()) } else { (a.rows(), a.cols()) };
    let (kb, n) = if tb { (b.cols(), b.rows()) } else { (b.rows(), b.cols()) };
    assert_eq!(ka, kb, "gemm inner dimensions differ: {ka} vs {kb}");
    assert_eq!(
        (c.rows(), c.cols()),
        (m, n),
        "gemm output shape mismatch: got {:?}, need ({m}, {n})",
        c.shape()
    );
    let (rsa, csa) = if ta { (1, a.cols() as isize) } else { (a.cols() as isize, 1) };
    let (rsb, csb) = if tb { (1, b.cols() as isize) } else { (b.cols() as isize, 1) };
    let rsc = c.cols() as isize;
    unsafe {
        matrixmultiply::dgemm(
            m,
            ka,
            n,
            alpha,
            a.data().as_ptr(),
            rsa,
            csa,
            b.data().as_ptr(),
            rsb,
            csb,
            beta,
            c.data_mut().as_mut_ptr(),
            rsc,
            1,
        );
    }
}

/// `y += W x` for row-major `W` (rows × cols): one dot product per row.
pub fn matvec_add(w: &Tensor, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(w.cols(), x.len());
    debug_assert_eq!(w.rows(), y.len());
    for (i, yi) in y.iter_mut().enumerate() {
        *yi += dot(w.row(i), x);
    }
}

/// `y += Wᵀ x`: axpy per row so reads stay sequential in `W`.
pub fn matvec_t_add(w: &Tensor, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(w.rows(), x.len());
    debug_assert_eq!(w.cols(), y.len());
    for (i, &xi) in x.iter().enumerate() {
        if xi != 0.0 {
            axpy(xi, w.row(i), y);
        }
    }
}

/// `dW += a bᵀ` (outer product accumulate).
pub fn outer_add(dw: &mut Tensor, a: &[f64], b: &[f64]) {
    debug_assert_eq!(dw.rows(), a.len());
    debug_assert_eq!(dw.cols(), b.len());
    for (i, &ai) in a.iter().enumerate() {
        if ai != 0.0 {
            axpy(ai, b, dw.row_mut(i));
        }
    }
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable log of summed exponentials. All `-inf`-like inputs
/// (at or below the CRF's -1e30 sentinel) yield the sentinel back.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= crate::crf::NEG_INF {
        return crate::crf::NEG_INF;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
