//! Dense complex matrices, Hermitian operators and their spectral calculus.
//!
//! Operators are small (dimension at most a few dozen), so everything is a
//! row-major `Vec` and the eigensolver is cyclic complex Jacobi.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix<T>", into = "RawMatrix<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

/// Wire form: entries as `[re, im]` pairs, row-major.
#[derive(Serialize, Deserialize)]
struct RawMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<[T; 2]>,
}

impl<T: Real> TryFrom<RawMatrix<T>> for CMatrix<T> {
    type Error = Error;

    fn try_from(raw: RawMatrix<T>) -> Result<Self> {
        let data = raw.data.iter().map(|[re, im]| Complex::new(*re, *im)).collect();
        CMatrix::from_vec(raw.rows, raw.cols, data)
    }
}

impl<T: Real> From<CMatrix<T>> for RawMatrix<T> {
    fn from(m: CMatrix<T>) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("empty {rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real matrix from row slices.
    pub fn from_real_rows(rows: &[&[T]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex::new(x, T::zero())))
            .collect();
        Self::from_vec(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest `|a_ij - conj(a_ji)|`; infinite for non-square input.
    pub fn hermitian_defect(&self) -> T {
        if self.rows != self.cols {
            return T::infinity();
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(A + A*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "elementwise op on mismatched shapes"
        );
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        self.try_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn add(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        self.zip_with(rhs, |a, b| a - b)
    }
}

/// A self-adjoint operator on a finite-dimensional Hilbert space.
///
/// Construction checks `a_ij = conj(a_ji)` to within `1e-12` and then stores
/// the exact Hermitian part, so roundoff from earlier products never leaks
/// into the spectral routines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix<T>", into = "CMatrix<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct HermitianOperator<T> {
    m: CMatrix<T>,
}

impl<T: Real> TryFrom<CMatrix<T>> for HermitianOperator<T> {
    type Error = Error;

    fn try_from(m: CMatrix<T>) -> Result<Self> {
        Self::new(m)
    }
}

impl<T: Real> From<HermitianOperator<T>> for CMatrix<T> {
    fn from(h: HermitianOperator<T>) -> Self {
        h.m
    }
}

pub const HERMITIAN_TOL: f64 = 1e-12;

impl<T: Real> HermitianOperator<T> {
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::Shape(format!("{}x{} is not square", m.rows, m.cols)));
        }
        let defect = m.hermitian_defect();
        if defect > T::tol(HERMITIAN_TOL) {
            return Err(Error::NotHermitian {
                max_asymmetry: defect.as_f64(),
            });
        }
        Ok(Self::symmetrize(m))
    }

    /// Stores the Hermitian part of a computed square matrix without checking.
    pub(crate) fn symmetrize(m: CMatrix<T>) -> Self {
        debug_assert_eq!(m.rows, m.cols);
        Self { m: m.hermitian_part() }
    }

    pub fn from_real_rows(rows: &[&[T]]) -> Result<Self> {
        Self::new(CMatrix::from_real_rows(rows)?)
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self {
            m: CMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex::new(diag[i], T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            }),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim),
        }
    }

    pub fn scalar(dim: usize, c: T) -> Self {
        Self::identity(dim).scale(c)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.rows
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.m
    }

    pub fn scale(&self, s: T) -> Self {
        Self { m: self.m.scale(s) }
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { m: &self.m + &other.m })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { m: &self.m - &other.m })
    }

    /// `self + c I`.
    pub fn shift(&self, c: T) -> Self {
        let mut m = self.m.clone();
        for i in 0..m.rows {
            m[(i, i)].re = m[(i, i)].re + c;
        }
        Self { m }
    }

    /// `self * self`, which is positive semidefinite.
    pub fn square(&self) -> Self {
        Self::symmetrize(&self.m * &self.m)
    }

    /// The congruence `c * self * c` with a Hermitian `c`.
    pub fn congruence(&self, c: &Self) -> Result<Self> {
        self.same_dim(c)?;
        Ok(Self::symmetrize(&(&c.m * &self.m) * &c.m))
    }

    /// Max-entry norm of the commutator `[self, other]`.
    pub fn commutator_norm(&self, other: &Self) -> Result<T> {
        self.same_dim(other)?;
        Ok((&(&self.m * &other.m) - &(&other.m * &self.m)).max_abs())
    }

    pub fn eig(&self) -> Result<SpectralDecomposition<T>> {
        eig_hermitian(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        Ok(self.eig()?.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn max_eigenvalue(&self) -> Result<T> {
        Ok(*self.eigenvalues()?.last().expect("dim >= 1"))
    }

    /// Largest `|λ|`, i.e. the operator norm.
    pub fn spectral_norm(&self) -> Result<T> {
        let ev = self.eigenvalues()?;
        Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
    }

    /// Functional calculus `u(A) = U diag(u(λ)) U*`.
    pub fn apply<F>(&self, u: F) -> Result<Self>
    where
        F: Fn(T) -> Result<T>,
    {
        apply_scalar_func(self, u)
    }
}

/// Eigenvalues in ascending order with a unitary whose columns are the
/// matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: CMatrix<T>,
}

impl<T: Real> SpectralDecomposition<T> {
    /// `U diag(values) U*` for any replacement spectrum.
    pub fn recompose(&self, values: &[T]) -> HermitianOperator<T> {
        let u = &self.eigenvectors;
        let n = u.rows();
        let m = CMatrix::from_fn(n, n, |i, j| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k, &v) in values.iter().enumerate() {
                acc = acc + u[(i, k)] * u[(j, k)].conj() * v;
            }
            acc
        });
        HermitianOperator::symmetrize(m)
    }

    pub fn reconstruct(&self) -> HermitianOperator<T> {
        self.recompose(&self.eigenvalues)
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic complex Jacobi. Each rotation first removes the phase of the pivot
/// `a_pq` with a diagonal unitary, then applies a real Jacobi rotation.
/// Sweeps stop once the off-diagonal Frobenius mass drops below
/// `1e-13 * ||A||_F`.
pub fn eig_hermitian<T: Real>(a: &HermitianOperator<T>) -> Result<SpectralDecomposition<T>> {
    let n = a.dim();
    let mut m = a.matrix().clone();
    let mut v = CMatrix::<T>::identity(n);
    let norm = m.frobenius();
    let threshold = T::tol(1e-13) * norm;
    let zero = Complex::new(T::zero(), T::zero());

    let off_mass = |m: &CMatrix<T>| {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s = s + m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = norm == T::zero();
    for _ in 0..MAX_SWEEPS {
        if converged || off_mass(&m) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r == T::zero() {
                    continue;
                }
                let phase_conj = apq.conj() / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (r + r);
                let t = {
                    let mag = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    if theta < T::zero() {
                        -mag
                    } else {
                        mag
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // U = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
                let u00 = Complex::new(c, T::zero());
                let u01 = Complex::new(s, T::zero());
                let u10 = phase_conj * (-s);
                let u11 = phase_conj * c;

                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * u00 + akq * u10;
                    m[(k, q)] = akp * u01 + akq * u11;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = u00.conj() * apk + u10.conj() * aqk;
                    m[(q, k)] = u01.conj() * apk + u11.conj() * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u00 + vkq * u10;
                    v[(k, q)] = vkp * u01 + vkq * u11;
                }
                m[(p, q)] = zero;
                m[(q, p)] = zero;
                m[(p, p)].im = T::zero();
                m[(q, q)].im = T::zero();
            }
        }
    }
    if !converged && off_mass(&m) > threshold {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(i, i)]
            .re
            .partial_cmp(&m[(j, j)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// `u(A)` by the spectral theorem. `u` reports its own domain errors.
pub fn apply_scalar_func<T, F>(a: &HermitianOperator<T>, u: F) -> Result<HermitianOperator<T>>
where
    T: Real,
    F: Fn(T) -> Result<T>,
{
    let dec = a.eig()?;
    let mapped = dec
        .eigenvalues
        .iter()
        .map(|&x| u(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(dec.recompose(&mapped))
}

/// Outcome of a Loewner comparison `A ⪯ B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoewnerVerdict<T> {
    pub holds: bool,
    /// Smallest eigenvalue of `B - A`.
    pub margin: T,
    pub tolerance: T,
}

/// Default comparison tolerance `1e-8 (1 + ||B - A||_max)`.
pub fn default_loewner_tol<T: Real>(a: &HermitianOperator<T>, b: &HermitianOperator<T>) -> Result<T> {
    Ok(T::tol(1e-8) * (T::one() + b.try_sub(a)?.matrix().max_abs()))
}

/// Tests `A ⪯ B`. With `tol = None` the scale-aware default is used.
pub fn loewner_leq<T: Real>(
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
    tol: Option<T>,
) -> Result<LoewnerVerdict<T>> {
    let diff = b.try_sub(a)?;
    let tolerance = match tol {
        Some(t) => t,
        None => T::tol(1e-8) * (T::one() + diff.matrix().max_abs()),
    };
    let margin = diff.min_eigenvalue()?;
    Ok(LoewnerVerdict {
        holds: margin >= -tolerance,
        margin,
        tolerance,
    })
}

/// `|A|^p`, computed as `U diag(|λ|^p) U*`. `p = 0` gives the identity.
pub fn operator_abs_power<T: Real>(a: &HermitianOperator<T>, p: T) -> Result<HermitianOperator<T>> {
    if p == T::zero() {
        return Ok(HermitianOperator::identity(a.dim()));
    }
    let dec = a.eig()?;
    let scale = dec
        .eigenvalues
        .iter()
        .fold(T::zero(), |acc, x| acc.max(x.abs()));
    let singular_below = T::epsilon() * T::lit(16.0) * scale.max(T::min_positive_value());
    let mut mapped = Vec::with_capacity(dec.eigenvalues.len());
    for &x in &dec.eigenvalues {
        if p < T::zero() && x.abs() <= singular_below {
            return Err(Error::SingularPower {
                power: p.as_f64(),
                eigenvalue: x.as_f64(),
            });
        }
        mapped.push(x.abs().powf(p));
    }
    Ok(dec.recompose(&mapped))
}

/// `A^{-1/2}` for positive definite `A`.
pub fn psd_inv_sqrt<T: Real>(a: &HermitianOperator<T>) -> Result<HermitianOperator<T>> {
    let dec = a.eig()?;
    let min = dec.eigenvalues[0];
    if min <= T::zero() {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min.as_f64(),
        });
    }
    let mapped: Vec<T> = dec.eigenvalues.iter().map(|x| x.sqrt().recip()).collect();
    Ok(dec.recompose(&mapped))
}

/// `A^r` for positive semidefinite `A`, clamping roundoff-negative
/// eigenvalues to zero. Used for the fractional powers `1/p`, `1/q`.
pub fn psd_power<T: Real>(a: &HermitianOperator<T>, r: T) -> Result<HermitianOperator<T>> {
    let dec = a.eig()?;
    let scale = dec
        .eigenvalues
        .iter()
        .fold(T::zero(), |acc, x| acc.max(x.abs()));
    let slack = T::tol(1e-10) * (T::one() + scale);
    let mut mapped = Vec::with_capacity(dec.eigenvalues.len());
    for &x in &dec.eigenvalues {
        if x < -slack {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: x.as_f64(),
            });
        }
        let x = x.max(T::zero());
        if r < T::zero() && x == T::zero() {
            return Err(Error::SingularPower {
                power: r.as_f64(),
                eigenvalue: 0.0,
            });
        }
        mapped.push(if x == T::zero() { T::zero() } else { x.powf(r) });
    }
    Ok(dec.recompose(&mapped))
}
