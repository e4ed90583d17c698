//! Mond-Pečarić type bounds for `T_f = Σ_J w_J Φ_J(f(A_{j_1}, …, A_{j_n}))`.
//!
//! Each bound pairs an operator left-hand side with a right-hand side built
//! from a scalar extremum over the box, and records the Loewner verdict.

use serde::{Deserialize, Serialize};

use crate::envelope::{fit_envelope, validate_envelope, AffineEnvelope, EnvelopeCheck};
use crate::error::{Error, Result};
use crate::hyperfunc::{eval_operator, eval_scalar, BoxDomain, Form, MultiFunc, ScalarFunc1D};
use crate::linalg::{loewner_leq, psd_inv_sqrt, HermitianOperator, LoewnerVerdict};
use crate::maps::{aggregate_by, MapGrid, WeightFamily};
use crate::scalaropt::{box_maximize, box_minimize, OptOptions, OptResult};
use crate::Real;

/// Spectra may leave their interval by this much, relative to its scale.
pub const SPECTRUM_TOL: f64 = 1e-10;

/// Default relative tolerance for the final Loewner verdicts.
pub const VERDICT_TOL: f64 = 1e-8;

/// `F(u, v) = u - α v` or `F(u, v) = v^{-1/2} u v^{-1/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FKind<T> {
    Difference(T),
    Congruence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GSign {
    Positive,
    Negative,
}

/// Operators, weights, maps and functions of one bound problem.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct InequalityInstance<T> {
    axes: Vec<Vec<HermitianOperator<T>>>,
    #[serde(rename = "box")]
    bx: BoxDomain<T>,
    weights: WeightFamily<T>,
    grid: MapGrid<T>,
    f: MultiFunc<T>,
    g: MultiFunc<T>,
    envelope: AffineEnvelope<T>,
    #[serde(skip)]
    envelope_check: Option<EnvelopeCheck<T>>,
    #[serde(skip)]
    verdict_tol: T,
}

impl<T: Real> InequalityInstance<T> {
    /// Checks shapes and spectra. Without an explicit `envelope` the chord
    /// envelope of `f` is fitted; either way it is validated on a grid of
    /// `envelope_grid_res` points per axis.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        axes: Vec<Vec<HermitianOperator<T>>>,
        bx: BoxDomain<T>,
        weights: WeightFamily<T>,
        grid: MapGrid<T>,
        f: MultiFunc<T>,
        g: MultiFunc<T>,
        envelope: Option<AffineEnvelope<T>>,
        envelope_grid_res: usize,
    ) -> Result<Self> {
        let n = bx.dim();
        for (what, got) in [("axes", axes.len()), ("f", f.arity()), ("g", g.arity())] {
            if got != n {
                return Err(Error::Shape(format!("{what} has arity {got}, box has {n}")));
            }
        }
        let ks: Vec<usize> = axes.iter().map(Vec::len).collect();
        if weights.shape() != ks || grid.shape() != ks.as_slice() {
            return Err(Error::Shape(format!(
                "axis sizes {ks:?}, weights {:?}, map grid {:?}",
                weights.shape(),
                grid.shape()
            )));
        }
        for (i, ops) in axes.iter().enumerate() {
            let (lo, hi) = (bx.lo(i), bx.hi(i));
            let slack = T::tol(SPECTRUM_TOL) * (T::one() + lo.abs().max(hi.abs()));
            for (j, a) in ops.iter().enumerate() {
                if a.dim() != grid.dim_in() {
                    return Err(Error::DimensionMismatch {
                        expected: grid.dim_in(),
                        found: a.dim(),
                    });
                }
                let ev = a.eigenvalues()?;
                for &e in [ev[0], ev[ev.len() - 1]].iter() {
                    if e < lo - slack || e > hi + slack {
                        return Err(Error::SpectrumOutsideBox {
                            axis: i,
                            index: j,
                            lo: lo.as_f64(),
                            hi: hi.as_f64(),
                            eigenvalue: e.as_f64(),
                        });
                    }
                }
            }
        }
        let envelope = match envelope {
            Some(e) => e,
            None => fit_envelope(&f, &bx, 2)?,
        };
        let check = validate_envelope(&f, &envelope, &bx, envelope_grid_res);
        if check.violations > 0 {
            return Err(Error::EnvelopeViolated {
                violations: check.violations,
                worst_gap: check.worst_gap.as_f64(),
            });
        }
        Ok(Self {
            axes,
            bx,
            weights,
            grid,
            f,
            g,
            envelope,
            envelope_check: Some(check),
            verdict_tol: T::lit(VERDICT_TOL),
        })
    }

    pub fn n(&self) -> usize {
        self.bx.dim()
    }

    pub fn axes(&self) -> &[Vec<HermitianOperator<T>>] {
        &self.axes
    }

    pub fn box_domain(&self) -> &BoxDomain<T> {
        &self.bx
    }

    pub fn weights(&self) -> &WeightFamily<T> {
        &self.weights
    }

    pub fn grid(&self) -> &MapGrid<T> {
        &self.grid
    }

    pub fn f(&self) -> &MultiFunc<T> {
        &self.f
    }

    pub fn g(&self) -> &MultiFunc<T> {
        &self.g
    }

    pub fn envelope(&self) -> &AffineEnvelope<T> {
        &self.envelope
    }

    /// Result of the grid validation done at construction.
    pub fn envelope_check(&self) -> Option<&EnvelopeCheck<T>> {
        self.envelope_check.as_ref()
    }

    pub fn verdict_tol(&self) -> T {
        self.verdict_tol
    }

    /// Relative tolerance of the Loewner verdicts, scaled by
    /// `1 + max(||lhs||, ||rhs||)`.
    pub fn set_verdict_tol(&mut self, tol: T) {
        self.verdict_tol = tol;
    }

    /// Same operators and maps with other functions; the envelope is refitted.
    pub fn with_functions(&self, f: MultiFunc<T>, g: MultiFunc<T>, envelope_grid_res: usize) -> Result<Self> {
        let mut out = Self::new(
            self.axes.clone(),
            self.bx.clone(),
            self.weights.clone(),
            self.grid.clone(),
            f,
            g,
            None,
            envelope_grid_res,
        )?;
        out.verdict_tol = self.verdict_tol;
        Ok(out)
    }

    fn tuple(&self, idx: &[usize]) -> Vec<HermitianOperator<T>> {
        idx.iter().enumerate().map(|(i, &j)| self.axes[i][j].clone()).collect()
    }

    /// `Σ_J w_J Φ_J(h(A_{j_1}, …, A_{j_n}))` for any operator-valued `h`.
    pub fn mixture_of<F>(&self, mut h: F) -> Result<HermitianOperator<T>>
    where
        F: FnMut(&[HermitianOperator<T>]) -> Result<HermitianOperator<T>>,
    {
        aggregate_by(&self.grid, &self.weights, |_, idx| h(&self.tuple(idx)))
    }
}

/// Raw form used to read instances back; [`InequalityInstance::new`] does
/// the checking.
#[derive(Clone, Debug, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct InstanceData<T> {
    pub axes: Vec<Vec<HermitianOperator<T>>>,
    #[serde(rename = "box")]
    pub bx: BoxDomain<T>,
    pub weights: WeightFamily<T>,
    pub grid: MapGrid<T>,
    pub f: MultiFunc<T>,
    pub g: MultiFunc<T>,
    pub envelope: Option<AffineEnvelope<T>>,
}

impl<T: Real> InstanceData<T> {
    pub fn build(self, envelope_grid_res: usize) -> Result<InequalityInstance<T>> {
        InequalityInstance::new(
            self.axes,
            self.bx,
            self.weights,
            self.grid,
            self.f,
            self.g,
            self.envelope,
            envelope_grid_res,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct BoundReport<T> {
    pub theorem: String,
    pub side: Side,
    pub lhs: HermitianOperator<T>,
    pub rhs: HermitianOperator<T>,
    pub scalar_constant: T,
    pub verdict: LoewnerVerdict<T>,
    pub argpoint: Vec<T>,
}

/// `T_f`.
pub fn lhs_f_mixture<T: Real>(inst: &InequalityInstance<T>) -> Result<HermitianOperator<T>> {
    inst.mixture_of(|ops| eval_operator(&inst.f, ops))
}

/// `T_i = Σ_J w_J Φ_J(A_{j_i})` for every axis.
pub fn arg_mixtures<T: Real>(inst: &InequalityInstance<T>) -> Result<Vec<HermitianOperator<T>>> {
    (0..inst.n())
        .map(|i| inst.mixture_of(|ops| Ok(ops[i].clone())))
        .collect()
}

/// `g(T_1, …, T_n)`.
pub fn g_of_mixtures<T: Real>(inst: &InequalityInstance<T>) -> Result<HermitianOperator<T>> {
    eval_operator(&inst.g, &arg_mixtures(inst)?)
}

fn envelope_side<T: Real>(inst: &InequalityInstance<T>, side: Side, x: &[T]) -> T {
    match side {
        Side::Upper => inst.envelope.upper(x),
        Side::Lower => inst.envelope.lower(x),
    }
}

/// The scalar whose box extremum gives the constant of `fk` on `side`:
/// `env(x) - α g(x)` or `env(x) / g(x)`, with `env` the upper or lower plane.
pub fn objective_value<T: Real>(inst: &InequalityInstance<T>, fk: FKind<T>, side: Side, x: &[T]) -> Result<T> {
    let e = envelope_side(inst, side, x);
    match fk {
        FKind::Difference(alpha) => {
            if alpha == T::zero() {
                Ok(e)
            } else {
                Ok(e - alpha * eval_scalar(&inst.g, x)?)
            }
        }
        FKind::Congruence => Ok(e / eval_scalar(&inst.g, x)?),
    }
}

fn extremum<T: Real>(inst: &InequalityInstance<T>, fk: FKind<T>, side: Side, maximize: bool) -> Result<OptResult<T>> {
    let opts = OptOptions::default();
    let obj = |x: &[T]| objective_value(inst, fk, side, x);
    if maximize {
        box_maximize(obj, &inst.bx, &opts)
    } else {
        box_minimize(obj, &inst.bx, &opts)
    }
}

fn verdict<T: Real>(
    inst: &InequalityInstance<T>,
    side: Side,
    lhs: &HermitianOperator<T>,
    rhs: &HermitianOperator<T>,
) -> Result<LoewnerVerdict<T>> {
    let scale = T::one() + lhs.matrix().max_abs().max(rhs.matrix().max_abs());
    let tol = inst.verdict_tol * scale;
    match side {
        Side::Upper => loewner_leq(lhs, rhs, Some(tol)),
        Side::Lower => loewner_leq(rhs, lhs, Some(tol)),
    }
}

/// Range of `g` over the box.
pub fn g_range<T: Real>(inst: &InequalityInstance<T>) -> Result<(T, T)> {
    let opts = OptOptions::default();
    let lo = box_minimize(|x: &[T]| eval_scalar(&inst.g, x), &inst.bx, &opts)?;
    let hi = box_maximize(|x: &[T]| eval_scalar(&inst.g, x), &inst.bx, &opts)?;
    Ok((lo.value, hi.value))
}

/// `F(T_f, g(T…)) ⪯ max F(Σ c_i x_i + d, g(x))` (upper) or
/// `⪰ min F(Σ a_i x_i + b, g(x))` (lower), both times the identity.
pub fn general_bound<T: Real>(inst: &InequalityInstance<T>, fk: FKind<T>, side: Side) -> Result<BoundReport<T>> {
    let tf = lhs_f_mixture(inst)?;
    let gt = g_of_mixtures(inst)?;
    let lhs = match fk {
        FKind::Difference(alpha) => tf.try_sub(&gt.scale(alpha))?,
        FKind::Congruence => {
            let (gmin, _) = g_range(inst)?;
            if gmin <= T::zero() {
                return Err(Error::NotPositive { min: gmin.as_f64() });
            }
            let r = psd_inv_sqrt(&gt)?;
            tf.congruence(&r)?
        }
    };
    let opt = extremum(inst, fk, side, side == Side::Upper)?;
    let rhs = HermitianOperator::scalar(lhs.dim(), opt.value);
    let verdict = verdict(inst, side, &lhs, &rhs)?;
    Ok(BoundReport {
        theorem: "thm2.3".into(),
        side,
        lhs,
        rhs,
        scalar_constant: opt.value,
        verdict,
        argpoint: opt.argpoint,
    })
}

/// `T_f ⪯ α g(T…) + μ I` with `μ = max(Σ c_i x_i + d - α g(x))`; dually
/// with `(a, b)` and the minimum for the lower side.
pub fn alpha_difference_bound<T: Real>(inst: &InequalityInstance<T>, alpha: T, side: Side) -> Result<BoundReport<T>> {
    let lhs = lhs_f_mixture(inst)?;
    let opt = extremum(inst, FKind::Difference(alpha), side, side == Side::Upper)?;
    let shift = HermitianOperator::scalar(lhs.dim(), opt.value);
    let rhs = if alpha == T::zero() {
        shift
    } else {
        g_of_mixtures(inst)?.scale(alpha).try_add(&shift)?
    };
    let verdict = verdict(inst, side, &lhs, &rhs)?;
    Ok(BoundReport {
        theorem: "thm2.4".into(),
        side,
        lhs,
        rhs,
        scalar_constant: opt.value,
        verdict,
        argpoint: opt.argpoint,
    })
}

/// `T_f ⪯ g(T…) + μ I`: the `α = 1` case.
pub fn difference_bound<T: Real>(inst: &InequalityInstance<T>, side: Side) -> Result<BoundReport<T>> {
    let mut r = alpha_difference_bound(inst, T::one(), side)?;
    r.theorem = "thm2.15".into();
    Ok(r)
}

/// `T_f ⪯ λ g(T…)` with `λ` the box extremum of `(Σ c_i x_i + d) / g(x)`:
/// the maximum when `g > 0`, the minimum when `g < 0`. The lower side uses
/// `(a, b)` and the opposite extremum.
pub fn ratio_bound<T: Real>(inst: &InequalityInstance<T>, side: Side, g_sign: GSign) -> Result<BoundReport<T>> {
    let (gmin, gmax) = g_range(inst)?;
    let sign_ok = match g_sign {
        GSign::Positive => gmin > T::zero(),
        GSign::Negative => gmax < T::zero(),
    };
    if !sign_ok {
        return Err(Error::SignChange {
            min: gmin.as_f64(),
            max: gmax.as_f64(),
        });
    }
    let maximize = (side == Side::Upper) == (g_sign == GSign::Positive);
    let opt = extremum(inst, FKind::Congruence, side, maximize)?;
    let lhs = lhs_f_mixture(inst)?;
    let rhs = g_of_mixtures(inst)?.scale(opt.value);
    let verdict = verdict(inst, side, &lhs, &rhs)?;
    Ok(BoundReport {
        theorem: "thm2.9".into(),
        side,
        lhs,
        rhs,
        scalar_constant: opt.value,
        verdict,
        argpoint: opt.argpoint,
    })
}

/// Outer functions of the special composites `g(x) = h(Σ β_i x_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpecialKind<T> {
    Power { q: T },
    Log,
    Exp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SpecialG<T> {
    pub g: MultiFunc<T>,
    /// `None` when `g` takes both signs on the box (only difference bounds
    /// apply then).
    pub sign: Option<GSign>,
    pub s_range: (T, T),
}

/// Builds `h(Σ β_i x_i)` and reads off its sign on the box from the range of
/// `Σ β_i x_i`.
pub fn special_g<T: Real>(kind: SpecialKind<T>, beta: Vec<T>, bx: &BoxDomain<T>) -> Result<SpecialG<T>> {
    if beta.len() != bx.dim() {
        return Err(Error::DimensionMismatch {
            expected: bx.dim(),
            found: beta.len(),
        });
    }
    let outer = match kind {
        SpecialKind::Power { q } => ScalarFunc1D::power(q),
        SpecialKind::Log => ScalarFunc1D::Log,
        SpecialKind::Exp => ScalarFunc1D::Exp,
    };
    let g = MultiFunc::composite(beta.clone(), outer.clone())?;
    let (s_lo, s_hi) = bx.linear_range(&beta);
    // domain check at both ends; the outer functions are monotone or even powers
    let h_lo = outer.eval(s_lo)?;
    let h_hi = outer.eval(s_hi)?;
    let sign = match kind {
        SpecialKind::Log => {
            if s_lo > T::one() {
                Some(GSign::Positive)
            } else if s_hi < T::one() {
                Some(GSign::Negative)
            } else {
                None
            }
        }
        SpecialKind::Exp => Some(GSign::Positive),
        SpecialKind::Power { .. } => {
            let (mn, mx) = if s_hi > s_lo {
                let opts = OptOptions::default();
                let sb = BoxDomain::new(vec![(s_lo, s_hi)])?;
                (
                    box_minimize(|s: &[T]| outer.eval(s[0]), &sb, &opts)?.value,
                    box_maximize(|s: &[T]| outer.eval(s[0]), &sb, &opts)?.value,
                )
            } else {
                (h_lo.min(h_hi), h_lo.max(h_hi))
            };
            if mn > T::zero() {
                Some(GSign::Positive)
            } else if mx < T::zero() {
                Some(GSign::Negative)
            } else {
                None
            }
        }
    };
    Ok(SpecialG {
        g,
        sign,
        s_range: (s_lo, s_hi),
    })
}

/// True when the second step of the bound (scalar inequality in `x`
/// transferred to the mixtures `T_i`) is valid for non-commuting `T_i`.
///
/// The scalar inequality `φ(x) <= 0` transfers to `φ(T_1, …, T_n) ⪯ 0`
/// whenever `φ` is separable or a function of one linear form. That covers
/// one variable, affine or constant `g`, separable `g` for difference kinds,
/// and composite `g = h(β·x)` whose envelope slopes are parallel to `β`.
pub fn admissible<T: Real>(inst: &InequalityInstance<T>, fk: FKind<T>) -> bool {
    if inst.n() == 1 || inst.g.is_affine() {
        return true;
    }
    let difference = matches!(fk, FKind::Difference(_));
    if let FKind::Difference(alpha) = fk {
        if alpha == T::zero() {
            return true;
        }
    }
    match inst.g.form() {
        Form::Separable(_) => difference,
        Form::CompositeAffine { beta, .. } => {
            if beta.iter().all(|b| *b == T::zero()) {
                return true;
            }
            parallel(&inst.envelope.a, beta) && parallel(&inst.envelope.c, beta)
        }
    }
}

fn parallel<T: Real>(u: &[T], v: &[T]) -> bool {
    let scale = u.iter().chain(v).fold(T::zero(), |m, x| m.max(x.abs()));
    let tol = T::tol(1e-12) * (T::one() + scale * scale);
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            if (u[i] * v[j] - u[j] * v[i]).abs() > tol {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::PositiveLinearMap;
    use crate::random::{random_unitary, seeded, uniform_in};

    type F = ScalarFunc1D<f64>;

    fn random_in(seed: u64, dim: usize, lo: f64, hi: f64) -> HermitianOperator<f64> {
        let mut rng = seeded(seed);
        let u = random_unitary::<f64>(&mut rng, dim);
        let mut eig: Vec<f64> = (0..dim).map(|_| uniform_in(&mut rng, lo, hi)).collect();
        eig[0] = lo;
        if dim > 1 {
            eig[1] = hi;
        }
        let d = HermitianOperator::from_diagonal(&eig);
        HermitianOperator::new(&(&u * d.matrix()) * &u.adjoint()).unwrap()
    }

    fn singleton(a: HermitianOperator<f64>, lo: f64, hi: f64, f: MultiFunc<f64>, g: MultiFunc<f64>) -> InequalityInstance<f64> {
        let dim = a.dim();
        InequalityInstance::new(
            vec![vec![a]],
            BoxDomain::new(vec![(lo, hi)]).unwrap(),
            WeightFamily::uniform(&[1]).unwrap(),
            MapGrid::uniform(vec![1], PositiveLinearMap::identity(dim)).unwrap(),
            f,
            g,
            None,
            201,
        )
        .unwrap()
    }

    fn kantorovich(seed: u64, dim: usize) -> InequalityInstance<f64> {
        let a = random_in(seed, dim, 1.0, 2.0);
        let phi = PositiveLinearMap::random(dim, dim, 2, seed ^ 0x55).unwrap();
        InequalityInstance::new(
            vec![vec![a]],
            BoxDomain::new(vec![(1.0, 2.0)]).unwrap(),
            WeightFamily::uniform(&[1]).unwrap(),
            MapGrid::uniform(vec![1], phi).unwrap(),
            MultiFunc::separable(vec![F::Reciprocal]).unwrap(),
            MultiFunc::composite(vec![1.0], F::power(-1.0)).unwrap(),
            None,
            201,
        )
        .unwrap()
    }

    #[test]
    fn kantorovich_constant() {
        let (m, big_m) = (1.0f64, 2.0f64);
        let expected = (big_m + m).powi(2) / (4.0 * big_m * m);
        for seed in 0..20 {
            let inst = kantorovich(seed, 1 + (seed as usize % 8));
            let r = ratio_bound(&inst, Side::Upper, GSign::Positive).unwrap();
            assert!((r.scalar_constant - expected).abs() < 1e-9);
            assert!(r.verdict.holds, "{:?}", r.verdict);
            assert!(admissible(&inst, FKind::Congruence));
        }
    }

    #[test]
    fn singleton_reduces_to_scalar() {
        let a = HermitianOperator::from_diagonal(&[0.7]);
        let inst = singleton(a, 0.0, 1.0, MultiFunc::separable(vec![F::power(2.0)]).unwrap(), MultiFunc::constant(1, 0.0).unwrap());
        assert!((lhs_f_mixture(&inst).unwrap().matrix()[(0, 0)].re - 0.49).abs() < 1e-15);
        assert!((arg_mixtures(&inst).unwrap()[0].matrix()[(0, 0)].re - 0.7).abs() < 1e-15);
        let r = general_bound(&inst, FKind::Difference(0.0), Side::Upper).unwrap();
        // chord of x^2 on [0, 1] is x, so c = 1 and d = 0
        assert!((inst.envelope().c[0] - 1.0).abs() < 1e-15);
        assert!(inst.envelope().d.abs() < 1e-12);
        assert!((r.scalar_constant - 1.0).abs() < 1e-12);
        assert!(r.verdict.holds);
    }

    #[test]
    fn square_below_identity_for_random_instance() {
        let a = random_in(3, 5, 0.0, 1.0);
        let inst = singleton(a, 0.0, 1.0, MultiFunc::separable(vec![F::power(2.0)]).unwrap(), MultiFunc::constant(1, 0.0).unwrap());
        let r = general_bound(&inst, FKind::Difference(0.0), Side::Upper).unwrap();
        assert!(r.verdict.holds);
        let r = general_bound(&inst, FKind::Difference(0.0), Side::Lower).unwrap();
        assert!(r.verdict.holds);
    }

    #[test]
    fn affine_f_touches() {
        let a = random_in(4, 3, -1.0, 2.0);
        let f = MultiFunc::separable(vec![F::affine(2.0, 1.0)]).unwrap();
        for alpha in [-1.0, 0.0, 0.5, 2.0] {
            let inst = singleton(a.clone(), -1.0, 2.0, f.clone(), MultiFunc::constant(1, 0.0).unwrap());
            let r = general_bound(&inst, FKind::Difference(alpha), Side::Upper).unwrap();
            assert!(r.verdict.holds);
            assert!(r.verdict.margin.abs() < 1e-9);
            // maximum of 2x + 1 on [-1, 2]
            assert_eq!(r.scalar_constant, 5.0);
            let r = alpha_difference_bound(&inst, alpha, Side::Upper).unwrap();
            assert!(r.verdict.holds);
        }
    }

    #[test]
    fn aggregation_examples() {
        let d1 = HermitianOperator::from_diagonal(&[1.0, 0.0]);
        let d2 = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        let inst = InequalityInstance::new(
            vec![vec![d1, d2]],
            BoxDomain::new(vec![(0.0, 1.0)]).unwrap(),
            WeightFamily::uniform(&[2]).unwrap(),
            MapGrid::uniform(vec![2], PositiveLinearMap::identity(2)).unwrap(),
            MultiFunc::separable(vec![F::power(2.0)]).unwrap(),
            MultiFunc::constant(1, 1.0).unwrap(),
            None,
            201,
        )
        .unwrap();
        let tf = lhs_f_mixture(&inst).unwrap();
        assert!((tf.matrix() - HermitianOperator::from_diagonal(&[0.5, 0.5]).matrix()).max_abs() < 1e-15);

        let c = MultiFunc::constant(1, 5.0).unwrap();
        let inst = inst.with_functions(c, MultiFunc::constant(1, 1.0).unwrap(), 11).unwrap();
        let tf = lhs_f_mixture(&inst).unwrap();
        assert!((tf.matrix() - HermitianOperator::scalar(2, 5.0).matrix()).max_abs() < 1e-14);
    }

    #[test]
    fn mixture_of_swapped_diagonals() {
        let inst = InequalityInstance::new(
            vec![vec![HermitianOperator::from_diagonal(&[0.0, 2.0]), HermitianOperator::from_diagonal(&[2.0, 0.0])]],
            BoxDomain::new(vec![(0.0, 2.0)]).unwrap(),
            WeightFamily::uniform(&[2]).unwrap(),
            MapGrid::uniform(vec![2], PositiveLinearMap::identity(2)).unwrap(),
            MultiFunc::separable(vec![F::Exp]).unwrap(),
            MultiFunc::constant(1, 1.0).unwrap(),
            None,
            201,
        )
        .unwrap();
        let t = arg_mixtures(&inst).unwrap();
        assert!((t[0].matrix() - HermitianOperator::identity(2).matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn spectrum_outside_box_rejected() {
        let err = InequalityInstance::new(
            vec![vec![HermitianOperator::from_diagonal(&[0.5, 3.0])]],
            BoxDomain::new(vec![(0.0, 2.0)]).unwrap(),
            WeightFamily::uniform(&[1]).unwrap(),
            MapGrid::uniform(vec![1], PositiveLinearMap::identity(2)).unwrap(),
            MultiFunc::separable(vec![F::Exp]).unwrap(),
            MultiFunc::constant(1, 1.0).unwrap(),
            None,
            11,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SpectrumOutsideBox { .. }));
    }

    #[test]
    fn bad_manual_envelope_rejected() {
        let env = AffineEnvelope::new(vec![-0.5], 2f64.sqrt(), vec![-0.5], 1.4).unwrap();
        let err = InequalityInstance::new(
            vec![vec![HermitianOperator::from_diagonal(&[1.5])]],
            BoxDomain::new(vec![(1.0, 2.0)]).unwrap(),
            WeightFamily::uniform(&[1]).unwrap(),
            MapGrid::uniform(vec![1], PositiveLinearMap::identity(1)).unwrap(),
            MultiFunc::separable(vec![F::Reciprocal]).unwrap(),
            MultiFunc::constant(1, 1.0).unwrap(),
            Some(env),
            201,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EnvelopeViolated { .. }));
    }

    #[test]
    fn alpha_one_matches_difference() {
        let inst = kantorovich(9, 4);
        let a = alpha_difference_bound(&inst, 1.0, Side::Upper).unwrap();
        let b = difference_bound(&inst, Side::Upper).unwrap();
        assert_eq!(a.rhs, b.rhs);
        assert_eq!(b.theorem, "thm2.15");
    }

    #[test]
    fn ratio_of_f_with_itself() {
        let a = random_in(12, 4, 0.5, 2.0);
        let f = MultiFunc::separable(vec![F::Exp]).unwrap();
        let inst = singleton(a, 0.5, 2.0, f.clone(), f);
        let r = ratio_bound(&inst, Side::Upper, GSign::Positive).unwrap();
        assert!(r.scalar_constant >= 1.0);
        assert!(r.verdict.holds);
        let r = ratio_bound(&inst, Side::Lower, GSign::Positive).unwrap();
        assert!(r.scalar_constant <= 1.0 + 1e-12);
        assert!(r.verdict.holds);
        assert!(matches!(ratio_bound(&inst, Side::Upper, GSign::Negative), Err(Error::SignChange { .. })));
    }

    #[test]
    fn negative_g_ratio() {
        let a = random_in(13, 4, 0.2, 0.8);
        let inst = singleton(
            a,
            0.2,
            0.8,
            MultiFunc::separable(vec![F::Exp]).unwrap(),
            MultiFunc::composite(vec![1.0], F::Log).unwrap(),
        );
        for side in [Side::Upper, Side::Lower] {
            let r = ratio_bound(&inst, side, GSign::Negative).unwrap();
            assert!(r.verdict.holds, "{side:?} {:?}", r.verdict);
            let again = objective_value(&inst, FKind::Congruence, side, &r.argpoint).unwrap();
            assert!((again - r.scalar_constant).abs() < 1e-12);
        }
    }

    #[test]
    fn special_g_examples() {
        let bx = BoxDomain::new(vec![(1.0, 2.0)]).unwrap();
        let s = special_g(SpecialKind::Power { q: 1.0 }, vec![1.0], &bx).unwrap();
        assert_eq!(eval_scalar(&s.g, &[1.7]).unwrap(), 1.7);
        assert_eq!(s.sign, Some(GSign::Positive));

        let bx = BoxDomain::new(vec![(1.0, 1.5), (1.0, 1.5)]).unwrap();
        let s = special_g(SpecialKind::Log, vec![1.0, 1.0], &bx).unwrap();
        assert_eq!(s.s_range, (2.0, 3.0));
        assert_eq!(s.sign, Some(GSign::Positive));

        let bx = BoxDomain::new(vec![(0.2, 0.5)]).unwrap();
        let s = special_g(SpecialKind::Log, vec![1.0], &bx).unwrap();
        assert_eq!(s.sign, Some(GSign::Negative));

        let bx = BoxDomain::new(vec![(0.5, 2.0)]).unwrap();
        assert_eq!(special_g(SpecialKind::Log, vec![1.0], &bx).unwrap().sign, None);
        assert!(special_g(SpecialKind::Exp, vec![-1.0], &bx).is_err());
        let bx = BoxDomain::new(vec![(-1.0, 2.0)]).unwrap();
        assert!(special_g(SpecialKind::Log, vec![1.0], &bx).is_err());
    }

    #[test]
    fn admissibility_rules() {
        let bx = BoxDomain::new(vec![(0.5, 1.5), (0.5, 1.5)]).unwrap();
        let mk = |f: MultiFunc<f64>, g: MultiFunc<f64>| {
            InequalityInstance::new(
                vec![vec![random_in(1, 2, 0.5, 1.5)], vec![random_in(2, 2, 0.5, 1.5)]],
                bx.clone(),
                WeightFamily::uniform(&[1, 1]).unwrap(),
                MapGrid::uniform(vec![1, 1], PositiveLinearMap::identity(2)).unwrap(),
                f,
                g,
                None,
                21,
            )
            .unwrap()
        };
        let sep = MultiFunc::separable(vec![F::Exp, F::power(2.0)]).unwrap();
        let comp = MultiFunc::composite(vec![1.0, 2.0], F::Exp).unwrap();
        let inst = mk(sep.clone(), sep.clone());
        assert!(admissible(&inst, FKind::Difference(2.0)));
        assert!(!admissible(&inst, FKind::Congruence));
        let inst = mk(sep.clone(), comp.clone());
        assert!(admissible(&inst, FKind::Difference(0.0)));
        assert!(!admissible(&inst, FKind::Difference(1.0)));
        let inst = mk(MultiFunc::composite(vec![1.0, 2.0], F::Log).unwrap(), comp);
        assert!(admissible(&inst, FKind::Difference(1.0)));
        assert!(admissible(&inst, FKind::Congruence));
    }
}
