//! Dense complex square matrices and the handful of spectral routines the
//! rest of the crate is built on.
//!
//! Storage is delegated to [`nalgebra::DMatrix`]; the public surface speaks
//! row-major order (see [`ComplexMatrix::from_row_major`]) so basis indices
//! line up with the Kronecker convention used by [`kron`].

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;

/// Maximum entrywise `|M - M^dagger|` accepted as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Operator-norm residual accepted for identities such as completeness.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Eigenvalues in `[-EIGEN_CLAMP, 0)` are treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: DMatrix::identity(dim, dim),
        }
    }

    /// Builds a `dim x dim` matrix from entries listed row by row.
    pub fn from_row_major(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(dim, dim, &entries),
        })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            inner: DMatrix::from_fn(dim, dim, &mut f),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| {
            if i == j {
                c64(diag[i], 0.0)
            } else {
                C64::default()
            }
        })
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                actual: v.len(),
            });
        }
        Ok(Self::from_fn(u.len(), |i, j| u[i] * v[j].conj()))
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.inner
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.inner[(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.inner[(row, col)] = value;
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let n = self.dim();
        (0..n * n).map(|k| self.inner[(k / n, k % n)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            inner: &self.inner * c64(factor, 0.0),
        }
    }

    /// `tr[self * other]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        let n = self.dim();
        let mut acc = C64::default();
        for i in 0..n {
            for j in 0..n {
                acc += self.inner[(i, j)] * other.inner[(j, i)];
            }
        }
        acc
    }

    /// Largest entrywise `|M - M^dagger|`.
    pub fn hermitian_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.inner[(i, j)] - self.inner[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self * other + other * self
    }

    /// Conjugation `u * self * u^dagger`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        Self {
            inner: &u.inner * &self.inner * u.inner.adjoint(),
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(self.dim(), v.len());
        let x = DVector::from_column_slice(v);
        (&self.inner * x).as_slice().to_vec()
    }

    /// Real part of `<v|self|v>`.
    pub fn expectation(&self, v: &[C64]) -> f64 {
        let n = self.dim();
        debug_assert_eq!(n, v.len());
        let mut acc = C64::default();
        for i in 0..n {
            let vi = v[i].conj();
            if vi == C64::default() {
                continue;
            }
            let row: C64 = v
                .iter()
                .enumerate()
                .map(|(j, x)| self.inner[(i, j)] * x)
                .sum();
            acc += vi * row;
        }
        acc.re
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: self.inner + rhs.inner,
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: self.inner - rhs.inner,
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: self.inner * rhs.inner,
        }
    }
}

impl Add<&ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: self.inner + &rhs.inner,
        }
    }
}

impl Sub<&ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: self.inner - &rhs.inner,
        }
    }
}

impl Mul<&ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: self.inner * &rhs.inner,
        }
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { inner: -self.inner }
    }
}

/// Kronecker product: entry `(i*db + k, j*db + l)` is `a[i,j] * b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix {
        inner: a.inner.kronecker(&b.inner),
    }
}

/// Kronecker product of vectors, same index convention as [`kron`].
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Spectrum of a Hermitian matrix, eigenvalues ascending, eigenvectors as
/// the columns of a unitary matrix.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `V f(Lambda) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors.inner;
        let n = v.nrows();
        let mut scaled = v.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let s = c64(f(lambda), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        ComplexMatrix {
            inner: scaled * v.adjoint(),
        }
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|x| x)
    }

    /// Number of eigenvalues within `tol` of `value`.
    pub fn multiplicity(&self, value: f64, tol: f64) -> usize {
        self.eigenvalues
            .iter()
            .filter(|&&x| (x - value).abs() <= tol)
            .count()
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let residual = m.hermitian_residual();
    if residual > HERMITICITY_TOL {
        return Err(Error::NonHermitianInput(residual));
    }
    let n = m.dim();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: ComplexMatrix::zeros(0),
        });
    }
    let sym = (&m.inner + m.inner.adjoint()) * c64(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: ComplexMatrix {
            inner: eigenvectors,
        },
    })
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    let min = eig.min_eigenvalue();
    if min < -EIGEN_CLAMP {
        return Err(Error::NotPositive(min));
    }
    Ok(eig.map_spectrum(|x| x.max(0.0).sqrt()))
}

/// Spectral norm. Exactly Hermitian inputs use the largest `|eigenvalue|`,
/// everything else the square root of the largest eigenvalue of `M^dagger M`.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.dim() == 0 {
        return 0.0;
    }
    if m.hermitian_residual() == 0.0 {
        let eig = hermitian_eig(m).expect("exactly Hermitian");
        return eig.min_eigenvalue().abs().max(eig.max_eigenvalue().abs());
    }
    let gram = ComplexMatrix {
        inner: m.inner.adjoint() * &m.inner,
    };
    let eig = hermitian_eig(&gram).expect("Gram matrix is Hermitian");
    eig.max_eigenvalue().max(0.0).sqrt()
}

/// Restriction of `op` to the range of the orthogonal projector `projector`,
/// expressed in an orthonormal basis of that range (`V^dagger op V`).
///
/// The result has dimension `rank(projector)`; a zero projector gives an
/// empty matrix.
pub fn compress_to_range(op: &ComplexMatrix, projector: &ComplexMatrix) -> Result<ComplexMatrix> {
    if op.dim() != projector.dim() {
        return Err(Error::DimensionMismatch {
            expected: projector.dim(),
            actual: op.dim(),
        });
    }
    let eig = hermitian_eig(projector)?;
    let cols: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k] > 0.5)
        .collect();
    let n = op.dim();
    let basis = DMatrix::from_fn(n, cols.len(), |i, j| eig.eigenvectors.inner[(i, cols[j])]);
    Ok(ComplexMatrix {
        inner: basis.adjoint() * &op.inner * basis,
    })
}
