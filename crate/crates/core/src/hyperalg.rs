//! Hypercomplex numbers, the quaternion Hamilton product, Kronecker
//! products, and the fixed algebra tables that a PHM layer reduces to for
//! the complex and quaternion domains.
//!
//! Coefficients are ordered `(real, i1, i2, i3)`. Everything here is `f64`.

use std::ops::{Add, Index};

use crate::error::{Error, Result};

/// `h = h0 + h1 i1 + ... + h_{n-1} i_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercomplexNumber {
    coefficients: Vec<f64>,
}

impl HypercomplexNumber {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::EmptyInput("hypercomplex number"));
        }
        Ok(Self { coefficients })
    }

    pub fn quaternion(r: f64, i: f64, j: f64, k: f64) -> Self {
        Self {
            coefficients: vec![r, i, j, k],
        }
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn real(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn expect_quaternion(&self) -> Result<&[f64]> {
        if self.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: self.dim(),
            });
        }
        Ok(&self.coefficients)
    }
}

impl Index<usize> for HypercomplexNumber {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.coefficients[i]
    }
}

impl Add for &HypercomplexNumber {
    type Output = Result<HypercomplexNumber>;

    fn add(self, rhs: Self) -> Result<HypercomplexNumber> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rhs.dim(),
            });
        }
        let coefficients = self
            .coefficients
            .iter()
            .zip(&rhs.coefficients)
            .map(|(a, b)| a + b)
            .collect();
        Ok(HypercomplexNumber { coefficients })
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::shape("matrix", &[rows, cols], &[entries.len()]));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::LengthMismatch("ragged matrix rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::shape(
                "matrix add",
                &[self.rows, self.cols],
                &[rhs.rows, rhs.cols],
            ));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::shape(
                "matrix matmul",
                &[self.rows, self.cols],
                &[rhs.rows, rhs.cols],
            ));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                let row = &rhs.entries[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out.entries[i * rhs.cols..(i + 1) * rhs.cols]
                    .iter_mut()
                    .zip(row)
                {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::shape("matrix apply", &[self.rows, self.cols], &[v.len()]));
        }
        Ok(self
            .entries
            .chunks(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Quaternion product `p q`.
pub fn hamilton_product(p: &HypercomplexNumber, q: &HypercomplexNumber) -> Result<HypercomplexNumber> {
    let &[a1, b1, c1, d1] = p.expect_quaternion()? else {
        unreachable!()
    };
    let &[a2, b2, c2, d2] = q.expect_quaternion()? else {
        unreachable!()
    };
    Ok(HypercomplexNumber::quaternion(
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ))
}

/// Left-multiplication matrix of `q`: `hamilton_matrix(q) * r == q r`.
pub fn hamilton_matrix(q: &HypercomplexNumber) -> Result<Matrix> {
    let &[w0, w1, w2, w3] = q.expect_quaternion()? else {
        unreachable!()
    };
    Matrix::new(
        4,
        4,
        vec![
            w0, -w1, -w2, -w3, //
            w1, w0, -w3, w2, //
            w2, w3, w0, -w1, //
            w3, -w2, w1, w0,
        ],
    )
}

/// Block matrix whose `(i, j)` block is `a[i, j] * b`.
pub fn kronecker(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("kronecker"));
    }
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    let cols = n * q;
    let mut entries = vec![0.0; m * p * cols];
    for i in 0..m {
        for j in 0..n {
            let s = a.get(i, j);
            for k in 0..p {
                let dst = (i * p + k) * cols + j * q;
                for (d, v) in entries[dst..dst + q].iter_mut().zip(&b.entries[k * q..(k + 1) * q]) {
                    *d = s * v;
                }
            }
        }
    }
    Matrix::new(m * p, cols, entries)
}

/// Fixed sign/permutation matrices `A_i` such that `sum_i A_i (x) W_i` is the
/// real-domain multiplication matrix of the algebra with components `W_i`.
pub fn algebra_matrices(n: usize) -> Result<Vec<Matrix>> {
    let tables: Vec<Vec<f64>> = match n {
        1 => vec![vec![1.0]],
        2 => vec![
            vec![1.0, 0.0, 0.0, 1.0], //
            vec![0.0, -1.0, 1.0, 0.0],
        ],
        4 => vec![
            vec![
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
            vec![
                0.0, -1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, -1.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
            vec![
                0.0, 0.0, -1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, -1.0, 0.0, 0.0,
            ],
            vec![
                0.0, 0.0, 0.0, -1.0, //
                0.0, 0.0, -1.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0,
            ],
        ],
        _ => return Err(Error::UnsupportedDimension(n)),
    };
    tables.into_iter().map(|t| Matrix::new(n, n, t)).collect()
}
