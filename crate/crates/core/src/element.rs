//! Elements of the model vector space and inner products on it.

use std::ops::{Add, Index, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Coefficient vector of an element of the model space in the fixed basis `{e_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement(DVector<f64>);

impl AlgebraElement {
    pub fn new(coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.iter().all(|c| c.is_finite()) {
            Ok(Self(coeffs))
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn from_slice(coeffs: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coeffs))
    }

    pub fn zero(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    /// The basis vector `e_index` (zero-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_coeffs(self) -> DVector<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(&self.0 * a)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            })
        }
    }
}

impl From<DVector<f64>> for AlgebraElement {
    /// Wraps a coefficient vector produced by internal arithmetic.
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

impl Index<usize> for AlgebraElement {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: Self) -> AlgebraElement {
        AlgebraElement(&self.0 + &rhs.0)
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: Self) -> AlgebraElement {
        AlgebraElement(&self.0 - &rhs.0)
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        AlgebraElement(-&self.0)
    }
}

impl Mul<&AlgebraElement> for f64 {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        rhs.scale(self)
    }
}

/// An inner product on the model space, given by its Gram matrix in the basis `{e_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProduct {
    gram: DMatrix<f64>,
}

impl InnerProduct {
    pub fn identity(dim: usize) -> Self {
        Self {
            gram: DMatrix::identity(dim, dim),
        }
    }

    /// Accepts `gram` only if it is exactly symmetric and every leading principal minor is positive.
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::DimensionMismatch {
                expected: gram.nrows(),
                found: gram.ncols(),
            });
        }
        if gram.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite);
        }
        if gram != gram.transpose() {
            return Err(Error::NotSymmetric);
        }
        for k in 1..=gram.nrows() {
            let minor = gram.view((0, 0), (k, k)).determinant();
            if minor <= 0.0 {
                return Err(Error::NotPositiveDefinite { index: k, minor });
            }
        }
        Ok(Self { gram })
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `uᵀ G v`.
    pub fn inner(&self, u: &AlgebraElement, v: &AlgebraElement) -> Result<f64> {
        u.check_dim(self.dim())?;
        v.check_dim(self.dim())?;
        Ok(self.inner_raw(u.coeffs(), v.coeffs()))
    }

    pub(crate) fn inner_raw(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.gram * v))
    }
}

/// Free-function form of [`InnerProduct::inner`].
pub fn inner(u: &AlgebraElement, v: &AlgebraElement, ip: &InnerProduct) -> Result<f64> {
    ip.inner(u, v)
}
