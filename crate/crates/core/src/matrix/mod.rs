//! Dense complex matrices and the structural operators built on them.
//!
//! Product bases are lexicographic: `e_i ⊗ e_j` sits at index `i * n + j`
//! with `i` the outer (first tensor factor) index.

mod eig;
mod ops;

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use eig::herm_eig_from;
pub use eig::{herm_eig, numerical_rank, svd, EigResult, Svd};
pub(crate) use ops::real_pairing;
pub use ops::{
    kron, max_entangled, max_entangled_vector, partial_transpose, swap_operator, trace_pairing,
    unvec, vec, Side,
};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims("matrix entries", rows * cols, data.len()));
        }
        Ok(CMat { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        CMat::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let mut m = CMat::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// The matrix unit `e_i e_j^*` of size `rows x cols`.
    pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = CMat::zeros(rows, cols);
        m[(i, j)] = ONE;
        m
    }

    /// `u v^*`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        CMat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// `v v^*`.
    pub fn projector(v: &[C64]) -> Self {
        CMat::outer(v, v)
    }

    pub fn column_matrix(v: &[C64]) -> Self {
        CMat {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn ensure_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, &z) in v.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn try_matmul(&self, other: &CMat) -> Result<CMat> {
        if self.cols != other.rows {
            return Err(Error::dims(
                "matrix product",
                format!("{} rows", self.cols),
                other.rows,
            ));
        }
        Ok(self.matmul(other))
    }

    /// `A^* X A` for this matrix `A`.
    pub fn congruence(&self, x: &CMat) -> CMat {
        self.adjoint().matmul(&x.matmul(self))
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `v^* X v`.
    pub fn quadratic_form(&self, v: &[C64]) -> C64 {
        let xv = self.mul_vec(v);
        inner(v, &xv)
    }

    fn zip_with(&self, other: &CMat, f: impl Fn(C64, C64) -> C64) -> CMat {
        assert_eq!(self.shape(), other.shape(), "elementwise op on mismatched shapes");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add_assign_scaled(&mut self, other: &CMat, s: C64) {
        assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMat {
        self.scale(C64::new(s, 0.0))
    }

    pub fn neg(&self) -> CMat {
        self.scale_real(-1.0)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius distance to another matrix of the same shape.
    pub fn distance(&self, other: &CMat) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Max entrywise deviation from another matrix.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |X[i][j] - conj(X[j][i])|`, infinite for non-square matrices.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(X + X^*) / 2`.
    pub fn hermitian_part(&self) -> CMat {
        self.add(&self.adjoint()).scale_real(0.5)
    }

    /// Validates Hermiticity and returns the symmetrized matrix.
    ///
    /// Asymmetry above `tol` but below a gross threshold is symmetrized with
    /// a warning; gross asymmetry is an error.
    pub fn symmetrized(&self, tol: f64) -> Result<CMat> {
        self.ensure_square()?;
        let dev = self.hermitian_deviation();
        if dev <= tol {
            return Ok(self.hermitian_part());
        }
        let gross = 1e-6 * self.max_abs().max(1.0);
        if dev > gross {
            return Err(Error::NonHermitian { deviation: dev });
        }
        log::warn!("symmetrizing query with asymmetry {dev:.3e} above tolerance {tol:.1e}");
        Ok(self.hermitian_part())
    }

    /// The `(bi, bj)` block of size `bs x bs`.
    pub fn block(&self, bi: usize, bj: usize, bs: usize) -> CMat {
        CMat::from_fn(bs, bs, |i, j| self[(bi * bs + i, bj * bs + j)])
    }

    pub fn set_block(&mut self, bi: usize, bj: usize, b: &CMat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(bi * b.rows + i, bj * b.cols + j)] = b[(i, j)];
            }
        }
    }
}

/// `u^* v`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [C64]) {
    let n = norm(v);
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
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

pub fn basis_vector(n: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    v[i] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let a = CMat::from_fn(2, 3, |i, j| C64::new(i as f64, j as f64));
        assert_eq!(CMat::identity(2).matmul(&a), a);
        assert_eq!(a.matmul(&CMat::identity(3)), a);
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(matches!(
            CMat::from_vec(2, 2, vec![ONE; 3]),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn symmetrize_small_and_gross_asymmetry() {
        let mut x = CMat::identity(2);
        x[(0, 1)] = C64::new(1e-8, 0.0);
        let s = x.symmetrized(1e-10).unwrap();
        assert!(s.hermitian_deviation() == 0.0);
        x[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(x.symmetrized(1e-10), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn quadratic_form_of_identity_is_norm() {
        let v = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)];
        let q = CMat::identity(2).quadratic_form(&v);
        assert!((q.re - 5.25).abs() < 1e-15 && q.im.abs() < 1e-15);
    }
}
