//! Dense order-4 tensor algebra: matricization, mode products and the
//! higher-order SVD.
//!
//! Modes are numbered 1 to 4 in the public API. A tensor with dims
//! `(n1, n2, n3, n4)` stores entry `(i1, i2, i3, i4)` at linear offset
//! `i1 + n1*(i2 + n2*(i3 + n3*i4))`, so mode 1 varies fastest. A mode-`k`
//! unfolding is the `n_k x prod(n_j, j != k)` matrix whose columns run over
//! the remaining indices with the lowest remaining mode varying fastest.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `max |M^T M - I|`; zero for an exactly orthonormal square matrix.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.transpose().matmul(self).expect("square product");
        gram.max_abs_diff(&DenseMatrix::identity(self.cols))
    }
}

/// Dense order-4 tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f64>,
}

fn check_mode(mode: usize) -> Result<usize> {
    if (1..=4).contains(&mode) {
        Ok(mode - 1)
    } else {
        Err(Error::InvalidMode(mode))
    }
}

impl Tensor4 {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Self::filled(dims, 0.0)
    }

    pub fn filled(dims: [usize; 4], value: f64) -> Self {
        Self {
            dims,
            data: vec![value; dims.iter().product()],
        }
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::shape(format!("tensor dims {dims:?} must be positive")));
        }
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::shape(format!(
                "{} values for tensor dims {dims:?}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: [usize; 4], mut f: impl FnMut([usize; 4]) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for i4 in 0..dims[3] {
            for i3 in 0..dims[2] {
                for i2 in 0..dims[1] {
                    for i1 in 0..dims[0] {
                        data.push(f([i1, i2, i3, i4]));
                    }
                }
            }
        }
        Self { dims, data }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn offset(&self, idx: [usize; 4]) -> usize {
        let [n1, n2, n3, _] = self.dims;
        idx[0] + n1 * (idx[1] + n2 * (idx[2] + n3 * idx[3]))
    }

    #[inline]
    pub fn get(&self, idx: [usize; 4]) -> f64 {
        self.data[self.offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: [usize; 4], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor4 {
        Tensor4 {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Tensor4 {
        self.map(|v| v * k)
    }

    pub fn sub(&self, other: &Tensor4) -> Tensor4 {
        debug_assert_eq!(self.dims, other.dims);
        Tensor4 {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Splits the layout around `mode` (0-based) into `(inner, n, outer)`
    /// so that the tensor reads as `[outer][n][inner]`.
    fn split(&self, mode: usize) -> (usize, usize, usize) {
        let inner = self.dims[..mode].iter().product();
        let outer = self.dims[mode + 1..].iter().product();
        (inner, self.dims[mode], outer)
    }

    /// Mode-`mode` matricization (`mode` in 1..=4).
    pub fn unfold(&self, mode: usize) -> Result<DenseMatrix> {
        let k = check_mode(mode)?;
        let (inner, n, outer) = self.split(k);
        let cols = inner * outer;
        let mut m = DenseMatrix::zeros(n, cols);
        for o in 0..outer {
            for a in 0..n {
                let src = &self.data[(o * n + a) * inner..(o * n + a + 1) * inner];
                m.data[a * cols + o * inner..a * cols + (o + 1) * inner].copy_from_slice(src);
            }
        }
        Ok(m)
    }

    /// Inverse of [`Tensor4::unfold`].
    pub fn fold(m: &DenseMatrix, mode: usize, dims: [usize; 4]) -> Result<Tensor4> {
        let k = check_mode(mode)?;
        let total: usize = dims.iter().product();
        if dims.iter().any(|&d| d == 0) || m.rows != dims[k] || m.rows * m.cols != total {
            return Err(Error::shape(format!(
                "cannot fold a {}x{} matrix along mode {mode} into {dims:?}",
                m.rows, m.cols
            )));
        }
        let mut t = Tensor4::zeros(dims);
        let (inner, n, outer) = t.split(k);
        let cols = m.cols;
        for o in 0..outer {
            for a in 0..n {
                t.data[(o * n + a) * inner..(o * n + a + 1) * inner]
                    .copy_from_slice(&m.data[a * cols + o * inner..a * cols + (o + 1) * inner]);
            }
        }
        Ok(t)
    }

    /// Mode-`mode` product `self x_mode m`; requires `m.cols() == n_mode`.
    pub fn mode_product(&self, m: &DenseMatrix, mode: usize) -> Result<Tensor4> {
        let k = check_mode(mode)?;
        if m.cols != self.dims[k] {
            return Err(Error::shape(format!(
                "mode-{mode} product with a {}x{} matrix on dims {:?}",
                m.rows, m.cols, self.dims
            )));
        }
        let (inner, n, outer) = self.split(k);
        let mut dims = self.dims;
        dims[k] = m.rows;
        let rows = m.rows;
        let mut out = vec![0.0; inner * rows * outer];
        for o in 0..outer {
            for a in 0..rows {
                let dst = &mut out[(o * rows + a) * inner..(o * rows + a + 1) * inner];
                for b in 0..n {
                    let coef = m.data[a * n + b];
                    if coef == 0.0 {
                        continue;
                    }
                    let src = &self.data[(o * n + b) * inner..(o * n + b + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += coef * s;
                    }
                }
            }
        }
        Ok(Tensor4 { dims, data: out })
    }

    /// `self x_1 f1^T x_2 f2^T x_3 f3^T x_4 f4^T`: coefficients of `self`
    /// in the basis given by the factor columns.
    pub fn project(&self, factors: &[DenseMatrix; 4]) -> Result<Tensor4> {
        let mut t = self.mode_product(&factors[0].transpose(), 1)?;
        for (k, f) in factors.iter().enumerate().skip(1) {
            t = t.mode_product(&f.transpose(), k + 1)?;
        }
        Ok(t)
    }

    /// Gram matrix of the mode-`k` unfolding (0-based `k`), without
    /// materializing the unfolding.
    fn mode_gram(&self, k: usize) -> DMatrix<f64> {
        let (inner, n, outer) = self.split(k);
        let mut g = DMatrix::<f64>::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let mut s = 0.0;
                for o in 0..outer {
                    let ra = &self.data[(o * n + a) * inner..(o * n + a + 1) * inner];
                    let rb = &self.data[(o * n + b) * inner..(o * n + b + 1) * inner];
                    s += ra.iter().zip(rb).map(|(x, y)| x * y).sum::<f64>();
                }
                g[(a, b)] = s;
                g[(b, a)] = s;
            }
        }
        g
    }
}

/// Core tensor and orthonormal factor matrices of a full (untruncated) HOSVD.
#[derive(Clone, Debug, PartialEq)]
pub struct Hosvd {
    pub core: Tensor4,
    pub factors: [DenseMatrix; 4],
}

impl Hosvd {
    pub fn reconstruct(&self) -> Result<Tensor4> {
        reconstruct(&self.core, &self.factors)
    }
}

/// Left singular vectors of the mode-`k` unfolding, ordered by descending
/// singular value, each column signed so its largest-magnitude entry is
/// positive (first occurrence wins ties).
fn mode_factor(t: &Tensor4, k: usize) -> DenseMatrix {
    let gram = t.mode_gram(k);
    let n = gram.nrows();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut u = DenseMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            u.set(i, col, sign * v[i]);
        }
    }
    u
}

/// Full higher-order SVD. The zero tensor maps to identity factors.
pub fn hosvd(t: &Tensor4) -> Hosvd {
    let factors: [DenseMatrix; 4] = if t.data.iter().all(|&v| v == 0.0) {
        t.dims.map(DenseMatrix::identity)
    } else {
        [0, 1, 2, 3].map(|k| mode_factor(t, k))
    };
    let core = t.project(&factors).expect("factor shapes follow the tensor");
    Hosvd { core, factors }
}

/// `core x_1 f1 x_2 f2 x_3 f3 x_4 f4`.
pub fn reconstruct(core: &Tensor4, factors: &[DenseMatrix; 4]) -> Result<Tensor4> {
    let mut t = core.mode_product(&factors[0], 1)?;
    for (k, f) in factors.iter().enumerate().skip(1) {
        t = t.mode_product(f, k + 1)?;
    }
    Ok(t)
}
