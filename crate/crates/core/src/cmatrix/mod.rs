//! Dense complex matrices.
//!
//! Everything here is sized for small bipartite systems (total dimension up
//! to a few dozen). Matrices are row-major and immutable once built; all
//! operations return new values.
//!
//! Tensor-factor convention: in `kron(a, b)` the first argument is the left
//! factor, so the basis index of `|x1 x2>` is `x1 * dim_b + x2`.

mod eigen;
mod random;

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eigen::{hermitian_eig, HermitianEigen};
pub(crate) use eigen::{jacobi, top_eigenvector};
pub(crate) use random::orthonormalize_columns;
pub use random::{exp_i_hermitian, ginibre, haar_unitary, random_hermitian, random_unit_vector};

pub type C64 = Complex64;

/// Tolerance for Hermiticity, unitarity and positivity checks.
pub const CHECK_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                actual: format!("{} entries", data.len()),
            });
        }
        if let Some(k) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Row-major real entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Column vector from its components.
    pub fn column(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `|v><v|` for a (not necessarily normalized) vector.
    pub fn projector(v: &[C64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    /// Matrix product; panics on incompatible shapes.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max |A_ij - conj(A_ji)|.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Max |U^dagger U - I|.
    pub fn unitary_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_deviation() <= tol
    }

    /// Sets `A <- (A + A^dagger) / 2`.
    pub fn hermitize(&self) -> Self {
        let adj = self.adjoint();
        let mut out = self.clone();
        for (d, a) in out.data.iter_mut().zip(&adj.data) {
            *d = (*d + a) * 0.5;
        }
        out
    }

    /// Keeps only the diagonal.
    pub fn diagonal_part(&self) -> Self {
        Self::from_diagonal(&self.diagonal())
    }

    /// Relabels basis states: entry `(i, j)` moves to `(perm[i], perm[j])`.
    /// Equivalent to conjugation by the permutation matrix `P|i> = |perm[i]>`,
    /// but exact.
    pub fn permute_basis(&self, perm: &[usize]) -> Self {
        assert!(self.is_square() && perm.len() == self.rows);
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(perm[i], perm[j])] = self[(i, j)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// Kronecker product with `a` as the left factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = CMatrix::zeros(rows, cols);
    for ai in 0..a.rows {
        for aj in 0..a.cols {
            let x = a[(ai, aj)];
            if x == ZERO {
                continue;
            }
            for bi in 0..b.rows {
                for bj in 0..b.cols {
                    out[(ai * b.rows + bi, aj * b.cols + bj)] = x * b[(bi, bj)];
                }
            }
        }
    }
    out
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// `U rho U^dagger` without any checks.
pub(crate) fn conjugate_unchecked(rho: &CMatrix, u: &CMatrix) -> CMatrix {
    u.matmul(rho).matmul(&u.adjoint())
}

/// Returns `U rho U^dagger`, rejecting non-unitary `u` or mismatched shapes.
pub fn conjugate(rho: &CMatrix, u: &CMatrix) -> Result<CMatrix> {
    if !rho.is_square() {
        return Err(Error::NotSquare {
            rows: rho.rows,
            cols: rho.cols,
        });
    }
    if !u.is_square() || u.rows != rho.rows {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{} unitary", rho.rows, rho.rows),
            actual: format!("{}x{}", u.rows, u.cols),
        });
    }
    let deviation = u.unitary_deviation();
    if deviation > CHECK_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(conjugate_unchecked(rho, u))
}

/// `Tr(rho A)` for Hermitian arguments of the same size.
///
/// The result is real up to roundoff; an imaginary part above `1e-10` means
/// one of the inputs is corrupt and is reported as an error.
pub fn trace_product(rho: &CMatrix, a: &CMatrix) -> Result<f64> {
    if rho.rows != a.rows || rho.cols != a.cols || !rho.is_square() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", rho.rows, rho.cols),
            actual: format!("{}x{}", a.rows, a.cols),
        });
    }
    for m in [rho, a] {
        let asymmetry = m.hermitian_deviation();
        if asymmetry > CHECK_TOL {
            return Err(Error::NotHermitian { asymmetry });
        }
    }
    let t = trace_product_raw(rho, a);
    if t.im.abs() > CHECK_TOL {
        return Err(Error::ComplexTrace { imag: t.im });
    }
    Ok(t.re)
}

/// `Tr(rho A) = sum_ij rho_ij A_ji`, unchecked.
pub(crate) fn trace_product_raw(rho: &CMatrix, a: &CMatrix) -> C64 {
    let n = rho.rows;
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += rho.data[i * n + j] * a.data[j * n + i];
        }
    }
    acc
}

/// Standard one- and two-qubit operators.
pub mod ops {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    pub fn hadamard() -> CMatrix {
        let h = FRAC_1_SQRT_2;
        CMatrix::from_real(2, 2, &[h, h, h, -h]).expect("static shape")
    }

    /// Computational basis vector `|k>` in dimension `d`.
    pub fn basis_vec(d: usize, k: usize) -> Vec<C64> {
        let mut v = vec![ZERO; d];
        v[k] = ONE;
        v
    }

    /// `(|0> + |1>)/sqrt(2)` embedded in dimension `d >= 2`.
    pub fn plus_vec(d: usize) -> Vec<C64> {
        let mut v = vec![ZERO; d];
        v[0] = C64::new(FRAC_1_SQRT_2, 0.0);
        v[1] = C64::new(FRAC_1_SQRT_2, 0.0);
        v
    }
}
