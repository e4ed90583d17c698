//! Multivariate scalar functions and their evaluation on tuples of
//! Hermitian operators.
//!
//! Only two shapes are supported, because they are the ones where scalar
//! envelopes and operator evaluation agree for non-commuting inputs:
//! separable sums `Σ u_i(x_i)` and composites `h(Σ β_i x_i)` with `β_i >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{operator_abs_power, HermitianOperator};
use crate::Real;

/// Elementary one-variable functions. The last four variants exist so that
/// derivatives and `|h|^p` stay inside the type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub enum ScalarFunc1D<T> {
    /// `Σ_k c_k x^k`, coefficients in ascending order.
    Polynomial { coefficients: Vec<T> },
    Power { exponent: T },
    Log,
    Exp,
    Affine { slope: T, intercept: T },
    Reciprocal,
    Scaled { factor: T, inner: Box<ScalarFunc1D<T>> },
    /// `|h(x)|^p`.
    AbsPower { inner: Box<ScalarFunc1D<T>>, exponent: T },
    /// `sgn(h(x)) |h(x)|^r`.
    SignedPower { inner: Box<ScalarFunc1D<T>>, exponent: T },
    Product { left: Box<ScalarFunc1D<T>>, right: Box<ScalarFunc1D<T>> },
    Sum { terms: Vec<ScalarFunc1D<T>> },
}

fn domain<T: Real>(func: &str, x: T) -> Error {
    Error::Domain {
        func: func.to_string(),
        value: x.as_f64(),
    }
}

fn is_integer<T: Real>(q: T) -> bool {
    q.fract() == T::zero() && q.abs() < T::lit(1e6)
}

fn signed_pow<T: Real>(h: T, r: T, what: &str) -> Result<T> {
    if h == T::zero() {
        return if r > T::zero() {
            Ok(T::zero())
        } else {
            Err(domain(what, h))
        };
    }
    Ok(h.signum() * h.abs().powf(r))
}

impl<T: Real> ScalarFunc1D<T> {
    pub fn power(exponent: T) -> Self {
        Self::Power { exponent }
    }

    pub fn affine(slope: T, intercept: T) -> Self {
        Self::Affine { slope, intercept }
    }

    pub fn constant(c: T) -> Self {
        Self::Polynomial {
            coefficients: vec![c],
        }
    }

    pub fn identity() -> Self {
        Self::affine(T::one(), T::zero())
    }

    pub fn polynomial(coefficients: Vec<T>) -> Self {
        Self::Polynomial { coefficients }
    }

    pub fn scaled(factor: T, inner: Self) -> Self {
        Self::Scaled {
            factor,
            inner: Box::new(inner),
        }
    }

    pub fn abs_power(inner: Self, exponent: T) -> Self {
        Self::AbsPower {
            inner: Box::new(inner),
            exponent,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Polynomial { coefficients } => format!("poly{coefficients:?}"),
            Self::Power { exponent } => format!("x^{exponent}"),
            Self::Log => "log".into(),
            Self::Exp => "exp".into(),
            Self::Affine { slope, intercept } => format!("{slope}x+{intercept}"),
            Self::Reciprocal => "1/x".into(),
            Self::Scaled { factor, inner } => format!("{factor}*({})", inner.name()),
            Self::AbsPower { inner, exponent } => format!("|{}|^{exponent}", inner.name()),
            Self::SignedPower { inner, exponent } => format!("sgn|{}|^{exponent}", inner.name()),
            Self::Product { left, right } => format!("({})*({})", left.name(), right.name()),
            Self::Sum { terms } => terms.iter().map(Self::name).collect::<Vec<_>>().join("+"),
        }
    }

    pub fn eval(&self, x: T) -> Result<T> {
        let y = match self {
            Self::Polynomial { coefficients } => coefficients
                .iter()
                .rev()
                .fold(T::zero(), |acc, &c| acc * x + c),
            Self::Power { exponent: q } => {
                let q = *q;
                if q == T::zero() {
                    T::one()
                } else if is_integer(q) {
                    if q < T::zero() && x == T::zero() {
                        return Err(domain(&self.name(), x));
                    }
                    x.powi(q.to_i32().expect("small integer exponent"))
                } else if x > T::zero() || (x == T::zero() && q > T::zero()) {
                    x.powf(q)
                } else {
                    return Err(domain(&self.name(), x));
                }
            }
            Self::Log => {
                if x <= T::zero() {
                    return Err(domain("log", x));
                }
                x.ln()
            }
            Self::Exp => x.exp(),
            Self::Affine { slope, intercept } => *slope * x + *intercept,
            Self::Reciprocal => {
                if x == T::zero() {
                    return Err(domain("1/x", x));
                }
                x.recip()
            }
            Self::Scaled { factor, inner } => {
                if *factor == T::zero() {
                    // keeps derivatives of constant composites total
                    T::zero()
                } else {
                    *factor * inner.eval(x)?
                }
            }
            Self::AbsPower { inner, exponent } => {
                let h = inner.eval(x)?;
                if *exponent == T::zero() {
                    T::one()
                } else if h == T::zero() && *exponent < T::zero() {
                    return Err(domain(&self.name(), x));
                } else {
                    h.abs().powf(*exponent)
                }
            }
            Self::SignedPower { inner, exponent } => signed_pow(inner.eval(x)?, *exponent, &self.name())
                .map_err(|_| domain(&self.name(), x))?,
            Self::Product { left, right } => left.eval(x)? * right.eval(x)?,
            Self::Sum { terms } => {
                let mut s = T::zero();
                for t in terms {
                    s = s + t.eval(x)?;
                }
                s
            }
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err(domain(&self.name(), x))
        }
    }

    /// Symbolic derivative.
    pub fn derivative(&self) -> Self {
        match self {
            Self::Polynomial { coefficients } => {
                let d: Vec<T> = coefficients
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, &c)| c * T::lit(k as f64))
                    .collect();
                Self::polynomial(if d.is_empty() { vec![T::zero()] } else { d })
            }
            Self::Power { exponent: q } => {
                if *q == T::zero() {
                    Self::constant(T::zero())
                } else if *q == T::one() {
                    Self::constant(T::one())
                } else {
                    Self::scaled(*q, Self::power(*q - T::one()))
                }
            }
            Self::Log => Self::Reciprocal,
            Self::Exp => Self::Exp,
            Self::Affine { slope, .. } => Self::constant(*slope),
            Self::Reciprocal => Self::scaled(-T::one(), Self::power(-T::lit(2.0))),
            Self::Scaled { factor, inner } => Self::scaled(*factor, inner.derivative()),
            Self::AbsPower { inner, exponent } => {
                if *exponent == T::zero() {
                    return Self::constant(T::zero());
                }
                Self::Product {
                    left: Box::new(Self::scaled(
                        *exponent,
                        Self::SignedPower {
                            inner: inner.clone(),
                            exponent: *exponent - T::one(),
                        },
                    )),
                    right: Box::new(inner.derivative()),
                }
            }
            Self::SignedPower { inner, exponent } => Self::Product {
                left: Box::new(Self::scaled(
                    *exponent,
                    Self::AbsPower {
                        inner: inner.clone(),
                        exponent: *exponent - T::one(),
                    },
                )),
                right: Box::new(inner.derivative()),
            },
            Self::Product { left, right } => Self::Sum {
                terms: vec![
                    Self::Product {
                        left: Box::new(left.derivative()),
                        right: right.clone(),
                    },
                    Self::Product {
                        left: left.clone(),
                        right: Box::new(right.derivative()),
                    },
                ],
            },
            Self::Sum { terms } => Self::Sum {
                terms: terms.iter().map(Self::derivative).collect(),
            },
        }
    }

    /// `(slope, intercept)` when the function is affine by form.
    pub fn affine_coeffs(&self) -> Option<(T, T)> {
        match self {
            Self::Affine { slope, intercept } => Some((*slope, *intercept)),
            Self::Polynomial { coefficients } if coefficients.iter().skip(2).all(|c| *c == T::zero()) => Some((
                coefficients.get(1).copied().unwrap_or(T::zero()),
                coefficients.first().copied().unwrap_or(T::zero()),
            )),
            Self::Power { exponent } if *exponent == T::zero() => Some((T::zero(), T::one())),
            Self::Power { exponent } if *exponent == T::one() => Some((T::one(), T::zero())),
            Self::Scaled { factor, inner } => inner.affine_coeffs().map(|(s, c)| (*factor * s, *factor * c)),
            _ => None,
        }
    }

    /// True when the function is affine by form, so its chord is exact.
    pub fn is_affine(&self) -> bool {
        match self {
            Self::Polynomial { coefficients } => coefficients.iter().skip(2).all(|c| *c == T::zero()),
            Self::Affine { .. } => true,
            Self::Power { exponent } => *exponent == T::zero() || *exponent == T::one(),
            Self::Scaled { inner, .. } => inner.is_affine(),
            Self::Sum { terms } => terms.iter().all(Self::is_affine),
            _ => false,
        }
    }

    /// `u(A)` by spectral calculus.
    pub fn apply(&self, a: &HermitianOperator<T>) -> Result<HermitianOperator<T>> {
        a.apply(|x| self.eval(x))
    }
}

/// The product box `⨉ [m_i, M_i]` with `m_i < M_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[T; 2]>", into = "Vec<[T; 2]>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct BoxDomain<T> {
    bounds: Vec<(T, T)>,
}

impl<T: Real> TryFrom<Vec<[T; 2]>> for BoxDomain<T> {
    type Error = Error;

    fn try_from(v: Vec<[T; 2]>) -> Result<Self> {
        Self::new(v.into_iter().map(|[a, b]| (a, b)).collect())
    }
}

impl<T: Real> From<BoxDomain<T>> for Vec<[T; 2]> {
    fn from(b: BoxDomain<T>) -> Self {
        b.bounds.into_iter().map(|(a, b)| [a, b]).collect()
    }
}

impl<T: Real> BoxDomain<T> {
    pub fn new(bounds: Vec<(T, T)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidBox("zero-dimensional box".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBox(format!("axis {i}: [{lo}, {hi}]")));
            }
        }
        Ok(Self { bounds })
    }

    /// The same interval on every axis.
    pub fn cube(n: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(vec![(lo, hi); n])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(T, T)] {
        &self.bounds
    }

    pub fn lo(&self, i: usize) -> T {
        self.bounds[i].0
    }

    pub fn hi(&self, i: usize) -> T {
        self.bounds[i].1
    }

    pub fn width(&self, i: usize) -> T {
        self.bounds[i].1 - self.bounds[i].0
    }

    pub fn lower_corner(&self) -> Vec<T> {
        self.bounds.iter().map(|b| b.0).collect()
    }

    pub fn upper_corner(&self) -> Vec<T> {
        self.bounds.iter().map(|b| b.1).collect()
    }

    pub fn contains(&self, x: &[T], tol: T) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.bounds)
                .all(|(&v, &(lo, hi))| v >= lo - tol && v <= hi + tol)
    }

    /// Clamps `x` into the box in place.
    pub fn project(&self, x: &mut [T]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(&self.bounds) {
            *v = v.max(lo).min(hi);
        }
    }

    /// Range of `Σ β_i x_i` over the box for nonnegative `β`.
    pub fn linear_range(&self, beta: &[T]) -> (T, T) {
        let lo = beta.iter().zip(&self.bounds).map(|(&b, &(l, _))| b * l).sum();
        let hi = beta.iter().zip(&self.bounds).map(|(&b, &(_, h))| b * h).sum();
        (lo, hi)
    }
}

/// The two supported multivariate shapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub enum Form<T> {
    /// `f(x) = Σ u_i(x_i)`.
    Separable(Vec<ScalarFunc1D<T>>),
    /// `f(x) = outer(Σ β_i x_i)`, `β_i >= 0`.
    CompositeAffine { beta: Vec<T>, outer: ScalarFunc1D<T> },
}

/// A multivariate function `f(x_1, …, x_n)` in one of the supported forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Form<T>", into = "Form<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct MultiFunc<T> {
    form: Form<T>,
}

impl<T: Real> TryFrom<Form<T>> for MultiFunc<T> {
    type Error = Error;

    fn try_from(form: Form<T>) -> Result<Self> {
        Self::new(form)
    }
}

impl<T: Real> From<MultiFunc<T>> for Form<T> {
    fn from(f: MultiFunc<T>) -> Self {
        f.form
    }
}

impl<T: Real> MultiFunc<T> {
    pub fn new(form: Form<T>) -> Result<Self> {
        match &form {
            Form::Separable(us) if us.is_empty() => {
                return Err(Error::InvalidFunction("separable function of no variables".into()))
            }
            Form::CompositeAffine { beta, .. } => {
                if beta.is_empty() {
                    return Err(Error::InvalidFunction("composite of no variables".into()));
                }
                if beta.iter().any(|b| *b < T::zero() || !b.is_finite()) {
                    return Err(Error::InvalidFunction(format!(
                        "composite weights must be nonnegative, got {beta:?}"
                    )));
                }
            }
            _ => {}
        }
        Ok(Self { form })
    }

    pub fn separable(components: Vec<ScalarFunc1D<T>>) -> Result<Self> {
        Self::new(Form::Separable(components))
    }

    pub fn composite(beta: Vec<T>, outer: ScalarFunc1D<T>) -> Result<Self> {
        Self::new(Form::CompositeAffine { beta, outer })
    }

    /// `Σ slope_i x_i + intercept`, as a composite when slopes are
    /// nonnegative and as a separable sum otherwise.
    pub fn affine(slopes: Vec<T>, intercept: T) -> Result<Self> {
        let n = slopes.len();
        let comps = slopes
            .into_iter()
            .enumerate()
            .map(|(i, s)| ScalarFunc1D::affine(s, if i == 0 { intercept } else { T::zero() }))
            .collect();
        if n == 0 {
            return Err(Error::InvalidFunction("affine function of no variables".into()));
        }
        Self::separable(comps)
    }

    pub fn constant(n: usize, c: T) -> Result<Self> {
        Self::composite(vec![T::zero(); n], ScalarFunc1D::constant(c))
    }

    pub fn form(&self) -> &Form<T> {
        &self.form
    }

    pub fn arity(&self) -> usize {
        match &self.form {
            Form::Separable(us) => us.len(),
            Form::CompositeAffine { beta, .. } => beta.len(),
        }
    }

    pub fn is_affine(&self) -> bool {
        match &self.form {
            Form::Separable(us) => us.iter().all(ScalarFunc1D::is_affine),
            Form::CompositeAffine { outer, .. } => outer.is_affine(),
        }
    }

    fn check_arity(&self, got: usize) -> Result<()> {
        if got != self.arity() {
            return Err(Error::DimensionMismatch {
                expected: self.arity(),
                found: got,
            });
        }
        Ok(())
    }

    /// `|f|^p` as a function of the same shape. Separable sums of more than
    /// one variable are not closed under this and are rejected.
    pub fn abs_pow(&self, p: T) -> Result<Self> {
        match &self.form {
            Form::Separable(us) if us.len() == 1 => {
                Self::separable(vec![ScalarFunc1D::abs_power(us[0].clone(), p)])
            }
            Form::Separable(_) => Err(Error::Unsupported(
                "|f|^p of a separable sum in more than one variable".into(),
            )),
            Form::CompositeAffine { beta, outer } => {
                Self::composite(beta.clone(), ScalarFunc1D::abs_power(outer.clone(), p))
            }
        }
    }
}

/// `f(x)` for a point `x`.
pub fn eval_scalar<T: Real>(f: &MultiFunc<T>, x: &[T]) -> Result<T> {
    f.check_arity(x.len())?;
    match &f.form {
        Form::Separable(us) => {
            let mut s = T::zero();
            for (u, &xi) in us.iter().zip(x) {
                s = s + u.eval(xi)?;
            }
            Ok(s)
        }
        Form::CompositeAffine { beta, outer } => {
            let s = beta.iter().zip(x).map(|(&b, &xi)| b * xi).sum();
            outer.eval(s)
        }
    }
}

fn common_dim<T: Real>(ops: &[HermitianOperator<T>]) -> Result<usize> {
    let d = ops
        .first()
        .ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?
        .dim();
    if let Some(bad) = ops.iter().find(|a| a.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.dim(),
        });
    }
    Ok(d)
}

/// `f(A_1, …, A_n)`: `Σ u_i(A_i)` for separable forms, `outer(Σ β_i A_i)` for
/// composites.
pub fn eval_operator<T: Real>(f: &MultiFunc<T>, ops: &[HermitianOperator<T>]) -> Result<HermitianOperator<T>> {
    f.check_arity(ops.len())?;
    let dim = common_dim(ops)?;
    match &f.form {
        Form::Separable(us) => {
            let mut acc = HermitianOperator::zeros(dim);
            for (u, a) in us.iter().zip(ops) {
                acc = acc.try_add(&u.apply(a)?)?;
            }
            Ok(acc)
        }
        Form::CompositeAffine { beta, outer } => {
            let mut s = HermitianOperator::zeros(dim);
            for (&b, a) in beta.iter().zip(ops) {
                if b != T::zero() {
                    s = s.try_add(&a.scale(b))?;
                }
            }
            outer.apply(&s)
        }
    }
}

/// `∂f/∂x_i` in the same form.
pub fn partial<T: Real>(f: &MultiFunc<T>, i: usize) -> Result<MultiFunc<T>> {
    if i >= f.arity() {
        return Err(Error::DimensionMismatch {
            expected: f.arity(),
            found: i + 1,
        });
    }
    match &f.form {
        Form::Separable(us) => MultiFunc::separable(
            us.iter()
                .enumerate()
                .map(|(k, u)| {
                    if k == i {
                        u.derivative()
                    } else {
                        ScalarFunc1D::constant(T::zero())
                    }
                })
                .collect(),
        ),
        Form::CompositeAffine { beta, outer } => {
            MultiFunc::composite(beta.clone(), ScalarFunc1D::scaled(beta[i], outer.derivative()))
        }
    }
}

/// All partials of `f`.
pub fn gradient<T: Real>(f: &MultiFunc<T>) -> Result<Vec<MultiFunc<T>>> {
    (0..f.arity()).map(|i| partial(f, i)).collect()
}

/// Scalar `|f'(x)| = sqrt(Σ_i (∂_i f(x))^2)`.
pub fn grad_magnitude_scalar<T: Real>(grad: &[MultiFunc<T>], x: &[T]) -> Result<T> {
    let mut s = T::zero();
    for g in grad {
        let v = eval_scalar(g, x)?;
        s = s + v * v;
    }
    Ok(s.sqrt())
}

/// `|f'(A…)| = sqrt(Σ_i [f^{(i)}(A…)]^2)`.
pub fn grad_magnitude_operator<T: Real>(
    f: &MultiFunc<T>,
    ops: &[HermitianOperator<T>],
) -> Result<HermitianOperator<T>> {
    let dim = common_dim(ops)?;
    let mut acc = HermitianOperator::zeros(dim);
    for g in gradient(f)? {
        acc = acc.try_add(&eval_operator(&g, ops)?.square())?;
    }
    acc.apply(|x| Ok(x.max(T::zero()).sqrt()))
}

/// `|f(A…)|^p`.
pub fn abs_power_of_f<T: Real>(
    f: &MultiFunc<T>,
    ops: &[HermitianOperator<T>],
    p: T,
) -> Result<HermitianOperator<T>> {
    operator_abs_power(&eval_operator(f, ops)?, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{loewner_leq, CMatrix};
    use crate::random::{random_unitary, seeded, uniform_in};
    use proptest::prelude::*;

    type F = ScalarFunc1D<f64>;

    fn sigma_x() -> HermitianOperator<f64> {
        HermitianOperator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    fn close(a: &HermitianOperator<f64>, b: &HermitianOperator<f64>, tol: f64) -> bool {
        (a.matrix() - b.matrix()).max_abs() <= tol
    }

    fn random_in(seed: u64, dim: usize, lo: f64, hi: f64) -> HermitianOperator<f64> {
        let mut rng = seeded(seed);
        let u = random_unitary::<f64>(&mut rng, dim);
        let eig: Vec<f64> = (0..dim).map(|_| uniform_in(&mut rng, lo, hi)).collect();
        let d = HermitianOperator::from_diagonal(&eig);
        HermitianOperator::new(&(&u * d.matrix()) * &u.adjoint()).unwrap()
    }

    #[test]
    fn scalar_examples() {
        let f = MultiFunc::separable(vec![F::identity(), F::identity()]).unwrap();
        assert_eq!(eval_scalar(&f, &[1.0, 2.0]).unwrap(), 3.0);
        let g = MultiFunc::composite(vec![1.0, 1.0], F::power(2.0)).unwrap();
        assert_eq!(eval_scalar(&g, &[1.0, 2.0]).unwrap(), 9.0);
        let r = MultiFunc::separable(vec![F::Reciprocal]).unwrap();
        assert_eq!(eval_scalar(&r, &[0.5]).unwrap(), 2.0);
        assert!(eval_scalar(&r, &[0.5, 1.0]).is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(F::Log.eval(0.0).is_err());
        assert!(F::Reciprocal.eval(0.0).is_err());
        assert!(F::power(0.5).eval(-1.0).is_err());
        assert!(F::power(-1.0).eval(0.0).is_err());
        assert_eq!(F::power(0.5).eval(0.0).unwrap(), 0.0);
        assert_eq!(F::power(3.0).eval(-2.0).unwrap(), -8.0);
        assert!(F::Exp.eval(1e6).is_err());
    }

    #[test]
    fn negative_beta_rejected() {
        assert!(MultiFunc::composite(vec![1.0, -0.5], F::Exp).is_err());
        let json = r#"{"composite-affine":{"beta":[-1.0],"outer":{"kind":"exp"}}}"#;
        assert!(serde_json::from_str::<MultiFunc<f64>>(json).is_err());
        let json = r#"{"composite-affine":{"beta":[1.0],"outer":{"kind":"exp"}}}"#;
        assert!(serde_json::from_str::<MultiFunc<f64>>(json).is_ok());
    }

    #[test]
    fn operator_examples() {
        let a = random_in(1, 3, -1.0, 1.0);
        let b = random_in(2, 3, -1.0, 1.0);
        let f = MultiFunc::separable(vec![F::identity(), F::identity()]).unwrap();
        let sum = a.try_add(&b).unwrap();
        assert!(close(&eval_operator(&f, &[a, b]).unwrap(), &sum, 1e-13));

        let g = MultiFunc::composite(vec![1.0, 1.0], F::power(1.0)).unwrap();
        let y = eval_operator(
            &g,
            &[
                HermitianOperator::from_diagonal(&[1.0, 2.0]),
                HermitianOperator::from_diagonal(&[3.0, 4.0]),
            ],
        )
        .unwrap();
        assert!(close(&y, &HermitianOperator::from_diagonal(&[4.0, 6.0]), 1e-13));

        let h = MultiFunc::separable(vec![F::power(2.0), F::identity()]).unwrap();
        let sx = sigma_x();
        let sq = HermitianOperator::new(sx.matrix() * sx.matrix()).unwrap();
        assert!(close(&sq, &HermitianOperator::identity(2), 1e-15));
        let y = eval_operator(&h, &[sx, HermitianOperator::identity(2)]).unwrap();
        assert!(close(&y, &HermitianOperator::scalar(2, 2.0), 1e-13));

        assert!(eval_operator(&h, &[HermitianOperator::identity(2), HermitianOperator::identity(3)]).is_err());
        let log = MultiFunc::separable(vec![F::Log]).unwrap();
        assert!(matches!(
            eval_operator(&log, &[HermitianOperator::from_diagonal(&[-1.0, 1.0])]),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn partial_examples() {
        let f = MultiFunc::separable(vec![F::power(2.0), F::identity()]).unwrap();
        let d1 = partial(&f, 0).unwrap();
        assert_eq!(eval_scalar(&d1, &[3.0, 7.0]).unwrap(), 6.0);
        let d2 = partial(&f, 1).unwrap();
        assert_eq!(eval_scalar(&d2, &[3.0, 7.0]).unwrap(), 1.0);
        assert!(partial(&f, 2).is_err());

        let g = MultiFunc::composite(vec![2.0, 3.0], F::Exp).unwrap();
        let d = partial(&g, 1).unwrap();
        let x = [0.3f64, -0.2];
        let expect = 3.0 * (2.0 * x[0] + 3.0 * x[1]).exp();
        assert!((eval_scalar(&d, &x).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn grad_magnitude_examples() {
        let f = MultiFunc::separable(vec![F::identity()]).unwrap();
        let a = random_in(4, 3, -2.0, 2.0);
        let g = grad_magnitude_operator(&f, &[a]).unwrap();
        assert!(close(&g, &HermitianOperator::identity(3), 1e-13));

        let f = MultiFunc::separable(vec![F::power(2.0), F::constant(0.0)]).unwrap();
        let g = grad_magnitude_operator(
            &f,
            &[HermitianOperator::from_diagonal(&[1.0, 2.0]), random_in(5, 2, 0.0, 1.0)],
        )
        .unwrap();
        // sqrt(4 diag(1, 4))
        assert!(close(&g, &HermitianOperator::from_diagonal(&[2.0, 4.0]), 1e-13));

        let f = MultiFunc::composite(vec![0.0, 0.0], F::Exp).unwrap();
        let g = grad_magnitude_operator(&f, &[random_in(6, 2, 0.0, 1.0), random_in(7, 2, 0.0, 1.0)]).unwrap();
        assert!(g.matrix().max_abs() < 1e-15);
    }

    #[test]
    fn abs_power_examples() {
        let f = MultiFunc::separable(vec![F::identity()]).unwrap();
        let d = HermitianOperator::from_diagonal(&[-1.0, 2.0]);
        let y = abs_power_of_f(&f, &[d.clone()], 1.0).unwrap();
        assert!(close(&y, &HermitianOperator::from_diagonal(&[1.0, 2.0]), 1e-14));
        let y = abs_power_of_f(&f, &[d], 0.0).unwrap();
        assert!(close(&y, &HermitianOperator::identity(2), 0.0));
        let y = abs_power_of_f(&f, &[sigma_x()], 2.0).unwrap();
        assert!(close(&y, &HermitianOperator::identity(2), 1e-13));
    }

    #[test]
    fn abs_pow_form() {
        let f = MultiFunc::composite(vec![1.0, 2.0], F::affine(1.0, -1.0)).unwrap();
        let h = f.abs_pow(2.0).unwrap();
        assert!((eval_scalar(&h, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let two = MultiFunc::separable(vec![F::Exp, F::Exp]).unwrap();
        assert!(matches!(two.abs_pow(2.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn derivative_of_abs_power_matches_fd() {
        let h = F::abs_power(F::affine(2.0, -1.0), 2.5);
        let d = h.derivative();
        for &x in &[-1.0, 0.1, 0.9, 2.0] {
            let step = 1e-6;
            let fd = (h.eval(x + step).unwrap() - h.eval(x - step).unwrap()) / (2.0 * step);
            assert!((d.eval(x).unwrap() - fd).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn diagonal_inputs_match_scalar_evaluation() {
        let f = MultiFunc::separable(vec![F::Exp, F::power(2.0), F::Log]).unwrap();
        let d: Vec<Vec<f64>> = vec![vec![0.1, 0.5, 0.9], vec![-1.0, 0.0, 2.0], vec![0.5, 1.5, 3.0]];
        let ops: Vec<_> = d.iter().map(|v| HermitianOperator::from_diagonal(v)).collect();
        let y = eval_operator(&f, &ops).unwrap();
        for k in 0..3 {
            let s = eval_scalar(&f, &[d[0][k], d[1][k], d[2][k]]).unwrap();
            assert!((y.matrix()[(k, k)].re - s).abs() < 1e-10);
        }
        let g = MultiFunc::composite(vec![0.5, 1.0, 0.25], F::Exp).unwrap();
        let y = eval_operator(&g, &ops).unwrap();
        for k in 0..3 {
            let s = eval_scalar(&g, &[d[0][k], d[1][k], d[2][k]]).unwrap();
            assert!((y.matrix()[(k, k)].re - s).abs() < 1e-10);
        }
    }

    #[test]
    fn f32_evaluation() {
        let f = MultiFunc::<f32>::composite(vec![1.0, 1.0], ScalarFunc1D::Exp).unwrap();
        let y = eval_operator(
            &f,
            &[HermitianOperator::identity(2), HermitianOperator::zeros(2)],
        )
        .unwrap();
        assert!((y.matrix()[(0, 0)].re - 1f32.exp()).abs() < 1e-5);
        let _ = CMatrix::<f32>::identity(1);
    }

    fn unary(kind: u8) -> F {
        match kind % 6 {
            0 => F::Exp,
            1 => F::Log,
            2 => F::power(0.5),
            3 => F::power(3.0),
            4 => F::Reciprocal,
            _ => F::polynomial(vec![0.5, -1.0, 0.25, 0.1]),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn spectrum_mapping(seed in any::<u64>(), kind in 0u8..6, dim in 1usize..7) {
            let u = unary(kind);
            let a = random_in(seed, dim, 0.2, 3.0);
            let lhs = u.apply(&a).unwrap().eigenvalues().unwrap();
            let mut rhs: Vec<f64> = a.eigenvalues().unwrap().iter().map(|&x| u.eval(x).unwrap()).collect();
            rhs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (l, r) in lhs.iter().zip(&rhs) {
                prop_assert!((l - r).abs() <= 1e-10 * (1.0 + r.abs()), "{l} vs {r}");
            }
        }

        #[test]
        fn unitary_covariance(seed in any::<u64>(), kind in 0u8..6) {
            let u = unary(kind);
            let a = random_in(seed, 4, 0.2, 3.0);
            let w = random_unitary::<f64>(&mut seeded(seed ^ 0xabc), 4);
            let rotated = HermitianOperator::new(&(&w * a.matrix()) * &w.adjoint()).unwrap();
            let lhs = u.apply(&rotated).unwrap();
            let ua = u.apply(&a).unwrap();
            let rhs = &(&w * ua.matrix()) * &w.adjoint();
            let scale = 1.0 + ua.matrix().max_abs();
            prop_assert!((lhs.matrix() - &rhs).max_abs() <= 1e-9 * scale);
        }

        #[test]
        fn calculus_commutes_with_argument(seed in any::<u64>(), kind in 0u8..6) {
            let u = unary(kind);
            let a = random_in(seed, 5, 0.2, 3.0);
            let ua = u.apply(&a).unwrap();
            prop_assert!(ua.commutator_norm(&a).unwrap() <= 1e-9 * (1.0 + ua.matrix().max_abs()));
        }

        #[test]
        fn gradient_magnitude_is_psd(seed in any::<u64>(), k1 in 0u8..6, k2 in 0u8..6) {
            let f = MultiFunc::separable(vec![unary(k1), unary(k2)]).unwrap();
            let ops = [random_in(seed, 3, 0.2, 3.0), random_in(seed ^ 9, 3, 0.2, 3.0)];
            let g = grad_magnitude_operator(&f, &ops).unwrap();
            prop_assert!(g.min_eigenvalue().unwrap() >= -1e-10);
        }

        #[test]
        fn separable_envelope_transfers(seed in any::<u64>(), k1 in 0u8..6, k2 in 0u8..6) {
            // chord slopes plus exact per-axis offsets: Σ a_i x_i + b <= f <= Σ c_i x_i + d
            let box_ = [(0.3, 2.0), (0.5, 1.5)];
            let us = [unary(k1), unary(k2)];
            let mut slopes = vec![];
            let (mut b, mut d) = (0.0, 0.0);
            for (u, &(lo, hi)) in us.iter().zip(&box_) {
                let s = (u.eval(hi).unwrap() - u.eval(lo).unwrap()) / (hi - lo);
                let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
                for k in 0..=4000 {
                    let x = lo + (hi - lo) * k as f64 / 4000.0;
                    let r = u.eval(x).unwrap() - s * x;
                    mn = mn.min(r);
                    mx = mx.max(r);
                }
                slopes.push(s);
                b += mn - 1e-6;
                d += mx + 1e-6;
            }
            let f = MultiFunc::separable(us.to_vec()).unwrap();
            let ops = [random_in(seed, 4, box_[0].0, box_[0].1), random_in(seed ^ 3, 4, box_[1].0, box_[1].1)];
            let fa = eval_operator(&f, &ops).unwrap();
            let lin = ops[0].scale(slopes[0]).try_add(&ops[1].scale(slopes[1])).unwrap();
            prop_assert!(loewner_leq(&fa, &lin.shift(d), Some(1e-8)).unwrap().holds);
            prop_assert!(loewner_leq(&lin.shift(b), &fa, Some(1e-8)).unwrap().holds);
        }

        #[test]
        fn partials_match_finite_differences(seed in any::<u64>(), k1 in 0u8..6, k2 in 0u8..6, composite in any::<bool>()) {
            let box_ = BoxDomain::new(vec![(0.4, 2.0), (0.6, 1.8)]).unwrap();
            let f = if composite {
                MultiFunc::composite(vec![0.7, 0.4], unary(k1)).unwrap()
            } else {
                MultiFunc::separable(vec![unary(k1), unary(k2)]).unwrap()
            };
            let mut rng = seeded(seed);
            let x: Vec<f64> = (0..2).map(|i| uniform_in(&mut rng, box_.lo(i) + 0.05, box_.hi(i) - 0.05)).collect();
            for i in 0..2 {
                let h = 1e-5 * box_.width(i);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (eval_scalar(&f, &xp).unwrap() - eval_scalar(&f, &xm).unwrap()) / (2.0 * h);
                let an = eval_scalar(&partial(&f, i).unwrap(), &x).unwrap();
                prop_assert!((an - fd).abs() <= 1e-6 * (1.0 + an.abs()), "{an} vs {fd}");
            }
        }
    }
}
