//! Dense complex-matrix primitives.
//!
//! Everything above this module talks to matrices only through
//! [`ComplexMatrix`] and the decompositions defined here. The heavy lifting
//! (Golub-Kahan SVD, Francis/Schur iteration, Householder QR, Hermitian
//! tridiagonal QL) is delegated to `nalgebra`; this layer adds the
//! conventions the rest of the crate relies on: descending singular values,
//! positive-diagonal QR, phase-normalized Hermitian eigenvectors and explicit
//! failure signals instead of silent garbage.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Absolute default tolerance used when an operation does not state one.
pub const DEFAULT_EPS: f64 = 1e-10;

/// Iteration cap handed to the iterative kernels. Small dense problems
/// converge in a few dozen sweeps; hitting this signals a real failure.
const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("{routine} did not converge")]
    NoConvergence { routine: &'static str },
    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix has non-finite entries")]
    NonFinite,
}

/// Dense complex matrix addressed by `(row, col)`.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                let z = self.0[(i, j)];
                write!(f, "{:.6}{:+.6}i", z.re, z.im)?;
            }
        }
        write!(f, "]")
    }
}

/// Result of [`ComplexMatrix::svd`]: `M = U diag(S) V*`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

/// Result of [`ComplexMatrix::qr_positive`].
#[derive(Clone, Debug)]
pub struct Qr {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
}

/// Result of [`ComplexMatrix::hermitian_eig`]: `M = Q diag(λ) Q*`, λ descending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub vectors: ComplexMatrix,
    pub values: Vec<f64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "matrix dimensions must be positive");
        Self(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, entries)))
    }

    /// Real matrix from row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self, LinalgError> {
        let z: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_row_major(rows, cols, &z)
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let z: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&z)
    }

    pub fn from_inner(m: DMatrix<C64>) -> Self {
        assert!(m.nrows() >= 1 && m.ncols() >= 1, "matrix dimensions must be positive");
        Self(m)
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.0[(i, j)] = value;
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    /// Matrix product. Panics on incompatible shapes, like `nalgebra`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols(),
            other.rows(),
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows(),
            self.cols(),
            other.rows(),
            other.cols()
        );
        Self(&self.0 * &other.0)
    }

    /// Copy of the `nr x nc` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self(self.0.view((r0, c0), (nr, nc)).into_owned())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        self.0
            .view_mut((r0, c0), (block.rows(), block.cols()))
            .copy_from(&block.0);
    }

    /// Block-diagonal matrix `diag(a, b)`.
    pub fn block_diag(a: &Self, b: &Self) -> Self {
        let mut out = Self::zeros(a.rows() + b.rows(), a.cols() + b.cols());
        out.set_block(0, 0, a);
        out.set_block(a.rows(), a.cols(), b);
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Singular value decomposition with singular values sorted descending.
    pub fn svd(&self) -> Result<Svd, LinalgError> {
        self.check_finite()?;
        let svd = SVD::try_new(self.0.clone(), true, true, f64::EPSILON, MAX_SWEEPS)
            .ok_or(LinalgError::NoConvergence { routine: "svd" })?;
        let u = svd.u.ok_or(LinalgError::NoConvergence { routine: "svd" })?;
        let v_t = svd.v_t.ok_or(LinalgError::NoConvergence { routine: "svd" })?;
        let order = descending_order(svd.singular_values.as_slice());
        let k = order.len();
        let u_sorted = DMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
        let v_sorted = DMatrix::from_fn(v_t.ncols(), k, |i, j| v_t[(order[j], i)].conj());
        let s = order.iter().map(|&j| svd.singular_values[j]).collect();
        Ok(Svd {
            u: Self(u_sorted),
            singular_values: s,
            v: Self(v_sorted),
        })
    }

    /// Singular values only, sorted descending.
    pub fn singular_values(&self) -> Result<Vec<f64>, LinalgError> {
        self.check_finite()?;
        let svd = SVD::try_new(self.0.clone(), false, false, f64::EPSILON, MAX_SWEEPS)
            .ok_or(LinalgError::NoConvergence { routine: "svd" })?;
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    }

    /// Eigenvalues with algebraic multiplicity, in no particular order.
    pub fn eigenvalues(&self) -> Result<Vec<C64>, LinalgError> {
        self.check_square("eigenvalues")?;
        self.check_finite()?;
        let schur = Schur::try_new(self.0.clone(), f64::EPSILON, MAX_SWEEPS)
            .ok_or(LinalgError::NoConvergence { routine: "schur" })?;
        let ev = schur
            .eigenvalues()
            .ok_or(LinalgError::NoConvergence { routine: "schur" })?;
        Ok(ev.iter().copied().collect())
    }

    /// QR factorization with `R` having a strictly positive real diagonal.
    ///
    /// Requires `rows >= cols` and full column rank; `Q` is `rows x cols`.
    pub fn qr_positive(&self) -> Result<Qr, LinalgError> {
        let (m, n) = (self.rows(), self.cols());
        if m < n {
            return Err(LinalgError::Dimension(format!(
                "qr_positive needs rows >= cols, got {m}x{n}"
            )));
        }
        self.check_finite()?;
        let qr = self.0.clone().qr();
        let mut q = qr.q();
        let mut r = qr.r();
        let floor = (m as f64) * f64::EPSILON * self.frobenius_norm();
        for i in 0..n {
            let rii = r[(i, i)];
            let mag = rii.norm();
            if mag <= floor || mag == 0.0 {
                return Err(LinalgError::RankDeficient { column: i });
            }
            let phase = rii / mag;
            for z in q.column_mut(i).iter_mut() {
                *z *= phase;
            }
            for z in r.row_mut(i).iter_mut() {
                *z *= phase.conj();
            }
            r[(i, i)] = C64::new(mag, 0.0);
        }
        Ok(Qr { q: Self(q), r: Self(r) })
    }

    /// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
    ///
    /// The input is symmetrized before factorization; asymmetry beyond
    /// `DEFAULT_EPS * (1 + |M|_F)` is rejected. Each eigenvector is scaled so
    /// its first entry of (near-)maximal modulus is real and positive.
    pub fn hermitian_eig(&self) -> Result<HermitianEigen, LinalgError> {
        self.check_square("hermitian_eig")?;
        self.check_finite()?;
        let asym = (&self.0 - self.0.adjoint()).norm();
        if asym > DEFAULT_EPS * (1.0 + self.frobenius_norm()) {
            return Err(LinalgError::NotHermitian { asymmetry: asym });
        }
        let sym = (&self.0 + self.0.adjoint()).map(|z| z * 0.5);
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_SWEEPS)
            .ok_or(LinalgError::NoConvergence { routine: "hermitian_eig" })?;
        let order = descending_order(eig.eigenvalues.as_slice());
        let n = order.len();
        let mut vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        for j in 0..n {
            let col = vectors.column(j);
            let peak = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let pivot = col
                .iter()
                .copied()
                .find(|z| z.norm() >= peak * (1.0 - 1e-9))
                .unwrap_or(C64::new(1.0, 0.0));
            let phase = pivot.conj() / pivot.norm();
            for z in vectors.column_mut(j).iter_mut() {
                *z *= phase;
            }
        }
        let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
        Ok(HermitianEigen {
            vectors: Self(vectors),
            values,
        })
    }

    pub fn det(&self) -> Result<C64, LinalgError> {
        self.check_square("det")?;
        self.check_finite()?;
        Ok(self.0.clone().lu().determinant())
    }

    pub fn inverse(&self) -> Result<Self, LinalgError> {
        self.check_square("inverse")?;
        self.check_finite()?;
        let inv = self.0.clone().lu().try_inverse().ok_or(LinalgError::Singular)?;
        if inv.iter().all(|z| z.is_finite()) {
            Ok(Self(inv))
        } else {
            Err(LinalgError::Singular)
        }
    }

    /// 2-norm condition number, `∞` for singular input.
    pub fn condition_number(&self) -> Result<f64, LinalgError> {
        let s = self.singular_values()?;
        let smin = *s.last().expect("nonempty");
        Ok(if smin == 0.0 { f64::INFINITY } else { s[0] / smin })
    }

    fn check_square(&self, routine: &str) -> Result<(), LinalgError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(LinalgError::Dimension(format!(
                "{routine} needs a square matrix, got {}x{}",
                self.rows(),
                self.cols()
            )))
        }
    }

    fn check_finite(&self) -> Result<(), LinalgError> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(LinalgError::NonFinite)
        }
    }
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // stable sort keeps ties in kernel order, so results stay deterministic
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}
