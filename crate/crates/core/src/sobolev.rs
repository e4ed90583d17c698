//! Sobolev-type estimates `(Σ w Φ(|f|^p))^{1/p} ⪯ C (…)^{1/q}` and the
//! constants behind them.

use serde::{Deserialize, Serialize};

use crate::bounds::{arg_mixtures, BoundReport, InequalityInstance, Side};
use crate::envelope::fit_envelope;
use crate::error::{Error, Result};
use crate::hyperfunc::{
    abs_power_of_f, eval_scalar, gradient, grad_magnitude_operator, grad_magnitude_scalar, BoxDomain, MultiFunc,
};
use crate::linalg::{loewner_leq, psd_power, HermitianOperator};
use crate::scalaropt::{box_maximize, box_minimize, OptOptions};
use crate::Real;

/// Gradients below this on the box are treated as vanishing.
pub const GRADIENT_FLOOR: f64 = 1e-9;

/// Lower clamp of the spectral enclosure used for `C_2`.
pub const SPECTRAL_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevExponents<T> {
    pub m: u32,
    pub p: T,
    pub q: T,
}

/// `q = m p / (m - p)` for `1 < p < m`.
pub fn sobolev_conjugate<T: Real>(m: u32, p: T) -> Result<SobolevExponents<T>> {
    let mt = T::lit(m as f64);
    if m < 2 || !(p > T::one() && p < mt) {
        return Err(Error::InvalidExponents(format!("need m > 1 and 1 < p < m, got m = {m}, p = {p}")));
    }
    Ok(SobolevExponents {
        m,
        p,
        q: mt * p / (mt - p),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevConstants<T> {
    pub c2: T,
    pub c3: T,
    pub c3_prime: T,
    pub c1: T,
    /// `None` when the envelope of `|f|^p` is not available for `f`'s form.
    pub c4_prime: Option<T>,
    pub c4: Option<T>,
}

fn opts() -> OptOptions {
    OptOptions::default()
}

/// Largest `C_2` with `C_2 h(x) <= h(x)^{p/q}` on the box, i.e. the minimum
/// of `h^{(p-q)/q}`.
pub fn constant_c2<T: Real>(h: &MultiFunc<T>, bx: &BoxDomain<T>, exps: &SobolevExponents<T>) -> Result<T> {
    let lo = box_minimize(|x: &[T]| eval_scalar(h, x), bx, &opts())?;
    if lo.value <= T::zero() {
        return Err(Error::NotPositive { min: lo.value.as_f64() });
    }
    let e = (exps.p - exps.q) / exps.q;
    Ok(box_minimize(|x: &[T]| Ok(eval_scalar(h, x)?.powf(e)), bx, &opts())?.value)
}

/// The same constant for `h` ranging over `[lo, hi]`, `0 < lo <= hi`.
pub fn constant_c2_on_range<T: Real>(lo: T, hi: T, exps: &SobolevExponents<T>) -> T {
    let e = (exps.p - exps.q) / exps.q;
    lo.powf(e).min(hi.powf(e))
}

fn max_abs_pow<T: Real>(f: &MultiFunc<T>, bx: &BoxDomain<T>, p: T) -> Result<(T, Vec<T>)> {
    let r = box_maximize(|x: &[T]| Ok(eval_scalar(f, x)?.abs().powf(p)), bx, &opts())?;
    Ok((r.value, r.argpoint))
}

/// `C_3 = max |f|^p / min |f'|^q` over the box. Zero when `f` vanishes on
/// the box.
pub fn constant_c3<T: Real>(f: &MultiFunc<T>, bx: &BoxDomain<T>, exps: &SobolevExponents<T>) -> Result<T> {
    let (top, _) = max_abs_pow(f, bx, exps.p)?;
    if top == T::zero() {
        return Ok(T::zero());
    }
    let grad = gradient(f)?;
    let gmin = box_minimize(|x: &[T]| grad_magnitude_scalar(&grad, x), bx, &opts())?.value;
    if gmin <= T::lit(GRADIENT_FLOOR) {
        return Err(Error::VanishingGradient { min: gmin.as_f64() });
    }
    Ok(top / gmin.powf(exps.q))
}

/// `Σ w Φ(|f(A…)|^p)` and `Σ w Φ(|f'(A…)|^q)`.
pub fn aggregated_powers<T: Real>(
    inst: &InequalityInstance<T>,
    exps: &SobolevExponents<T>,
) -> Result<(HermitianOperator<T>, HermitianOperator<T>)> {
    let f = inst.f();
    let x = inst.mixture_of(|ops| abs_power_of_f(f, ops, exps.p))?;
    let y = inst.mixture_of(|ops| psd_power(&grad_magnitude_operator(f, ops)?, exps.q))?;
    Ok((x, y))
}

fn c2_for_aggregate<T: Real>(x: &HermitianOperator<T>, exps: &SobolevExponents<T>) -> Result<T> {
    let ev = x.eigenvalues()?;
    let lo = ev[0].max(T::lit(SPECTRAL_FLOOR));
    let hi = ev[ev.len() - 1].max(lo);
    let inv_p = T::one() / exps.p;
    Ok(constant_c2_on_range(lo.powf(inv_p), hi.powf(inv_p), exps))
}

fn report<T: Real>(
    theorem: &str,
    inst: &InequalityInstance<T>,
    lhs: HermitianOperator<T>,
    rhs: HermitianOperator<T>,
    constant: T,
    argpoint: Vec<T>,
) -> Result<BoundReport<T>> {
    let scale = T::one() + lhs.matrix().max_abs().max(rhs.matrix().max_abs());
    let verdict = loewner_leq(&lhs, &rhs, Some(inst.verdict_tol() * scale))?;
    Ok(BoundReport {
        theorem: theorem.into(),
        side: Side::Upper,
        lhs,
        rhs,
        scalar_constant: constant,
        verdict,
        argpoint,
    })
}

/// `C_2`, `C_3`, `C_1` and, where available, `C_4'`, `C_4` for an instance.
pub fn sobolev_constants<T: Real>(inst: &InequalityInstance<T>, exps: &SobolevExponents<T>) -> Result<SobolevConstants<T>> {
    let (x, _) = aggregated_powers(inst, exps)?;
    let c2 = c2_for_aggregate(&x, exps)?;
    let c3 = constant_c3(inst.f(), inst.box_domain(), exps)?;
    let c3_prime = c3.powf(T::one() / exps.q);
    let (c4_prime, c4) = match mean_constants(inst, exps) {
        Ok((c4p, c4, _, _)) => (Some(c4p), Some(c4)),
        Err(Error::Unsupported(_)) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(SobolevConstants {
        c2,
        c3,
        c3_prime,
        c1: c3_prime / c2,
        c4_prime,
        c4,
    })
}

/// `(Σ w Φ(|f|^p))^{1/p} ⪯ C_1 (Σ w Φ(|f'|^q))^{1/q}` with
/// `C_1 = C_3^{1/q} / C_2`. `C_2` is taken for `h = (Σ w Φ(|f|^p))^{1/p}`
/// over its spectral enclosure.
pub fn verify_sobolev_original<T: Real>(inst: &InequalityInstance<T>, exps: &SobolevExponents<T>) -> Result<BoundReport<T>> {
    let (x, y) = aggregated_powers(inst, exps)?;
    let (top, argpoint) = max_abs_pow(inst.f(), inst.box_domain(), exps.p)?;
    let c3 = constant_c3(inst.f(), inst.box_domain(), exps)?;
    let c1 = if top == T::zero() {
        T::zero()
    } else {
        c3.powf(T::one() / exps.q) / c2_for_aggregate(&x, exps)?
    };
    let lhs = psd_power(&x, T::one() / exps.p)?;
    let rhs = psd_power(&y, T::one() / exps.q)?.scale(c1);
    report("sobolev", inst, lhs, rhs, c1, argpoint)
}

/// `(C_4', C_4, |f'(T…)|^q, argpoint of Λ)` for the mean variant.
fn mean_constants<T: Real>(
    inst: &InequalityInstance<T>,
    exps: &SobolevExponents<T>,
) -> Result<(T, T, HermitianOperator<T>, Vec<T>)> {
    let f = inst.f();
    let bx = inst.box_domain();
    let fp = f.abs_pow(exps.p)?;
    let t = arg_mixtures(inst)?;
    let g = psd_power(&grad_magnitude_operator(f, &t)?, exps.q)?;
    let (top, argpoint) = max_abs_pow(f, bx, exps.p)?;
    if top == T::zero() {
        return Ok((T::zero(), T::zero(), g, argpoint));
    }
    let env = fit_envelope(&fp, bx, 201)?;
    let grad = gradient(f)?;
    let gmin = box_minimize(|x: &[T]| grad_magnitude_scalar(&grad, x), bx, &opts())?.value;
    if gmin <= T::lit(GRADIENT_FLOOR) {
        return Err(Error::VanishingGradient { min: gmin.as_f64() });
    }
    let ratio = box_maximize(
        |x: &[T]| Ok(env.upper(x) / grad_magnitude_scalar(&grad, x)?.powf(exps.q)),
        bx,
        &opts(),
    )?;
    let lambda = ratio.value;
    let ev = g.eigenvalues()?;
    if ev[0] <= T::zero() {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: ev[0].as_f64(),
        });
    }
    let e = T::one() / exps.p - T::one() / exps.q;
    let c4_prime = ev
        .iter()
        .map(|&s| (lambda * s).powf(e))
        .fold(T::zero(), T::max);
    let c4 = c4_prime * lambda.powf(T::one() / exps.q);
    Ok((c4_prime, c4, g, ratio.argpoint))
}

/// `(Σ w Φ(|f|^p))^{1/p} ⪯ C_4 |f'(T_1, …, T_n)|` with `T_i` the mixtures.
///
/// `Λ = max (Σ c_i x_i + d) / |f'(x)|^q` uses the upper envelope of
/// `|f|^p`; `C_4' = max_s s^{1/p - 1/q}` over the spectrum of `Λ |f'(T)|^q`
/// and `C_4 = C_4' Λ^{1/q}`.
pub fn verify_sobolev_mean<T: Real>(inst: &InequalityInstance<T>, exps: &SobolevExponents<T>) -> Result<BoundReport<T>> {
    let (x, _) = aggregated_powers(inst, exps)?;
    let (_, c4, g, argpoint) = mean_constants(inst, exps)?;
    let lhs = psd_power(&x, T::one() / exps.p)?;
    let rhs = psd_power(&g, T::one() / exps.q)?.scale(c4);
    report("sobolev-mean", inst, lhs, rhs, c4, argpoint)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingNorms<T> {
    /// Largest eigenvalue of `(Σ w Φ(|f'|^q))^{1/q}`.
    pub w_norm: T,
    /// Largest eigenvalue of `(Σ w Φ(|f|^p))^{1/p}`.
    pub l_norm: T,
    pub w_member: bool,
    pub l_member: bool,
}

impl<T> EmbeddingNorms<T> {
    pub fn member(&self) -> bool {
        self.w_member && self.l_member
    }
}

fn bounded_positive<T: Real>(a: &HermitianOperator<T>) -> Result<(T, bool)> {
    let ev = a.eigenvalues()?;
    let hi = ev[ev.len() - 1];
    let ok = ev.iter().all(|x| x.is_finite()) && ev[0] >= -T::tol(1e-10) * (T::one() + hi.abs());
    Ok((hi, ok))
}

pub fn embedding_norms<T: Real>(inst: &InequalityInstance<T>, exps: &SobolevExponents<T>) -> Result<EmbeddingNorms<T>> {
    let (x, y) = aggregated_powers(inst, exps)?;
    let (w_norm, w_member) = bounded_positive(&psd_power(&y, T::one() / exps.q)?)?;
    let (l_norm, l_member) = bounded_positive(&psd_power(&x, T::one() / exps.p)?)?;
    Ok(EmbeddingNorms {
        w_norm,
        l_norm,
        w_member,
        l_member,
    })
}

fn grid_points<T: Real>(bx: &BoxDomain<T>, res: usize, mut visit: impl FnMut(&[T]) -> Result<()>) -> Result<()> {
    let n = bx.dim();
    let g = res.max(2);
    let mut idx = vec![0usize; n];
    let mut x = vec![T::zero(); n];
    loop {
        for i in 0..n {
            x[i] = if idx[i] + 1 == g {
                bx.hi(i)
            } else {
                bx.lo(i) + bx.width(i) * T::lit(idx[i] as f64) / T::lit((g - 1) as f64)
            };
        }
        visit(&x)?;
        let mut axis = n;
        loop {
            if axis == 0 {
                return Ok(());
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < g {
                break;
            }
            idx[axis] = 0;
        }
    }
}

fn exceeds<T: Real>(lhs: T, rhs: T) -> bool {
    lhs > rhs + T::tol(1e-12) * (T::one() + rhs.abs())
}

/// Grid nodes where `C_2 h(x) <= h(x)^{p/q}` fails.
pub fn lemma_c2_violations<T: Real>(
    h: &MultiFunc<T>,
    bx: &BoxDomain<T>,
    exps: &SobolevExponents<T>,
    c2: T,
    res: usize,
) -> Result<usize> {
    let mut bad = 0;
    grid_points(bx, res, |x| {
        let v = eval_scalar(h, x)?;
        if exceeds(c2 * v, v.powf(exps.p / exps.q)) {
            bad += 1;
        }
        Ok(())
    })?;
    Ok(bad)
}

/// Grid nodes where `|f(x)|^p <= C_3 |f'(x)|^q` fails.
pub fn lemma_c3_violations<T: Real>(
    f: &MultiFunc<T>,
    bx: &BoxDomain<T>,
    exps: &SobolevExponents<T>,
    c3: T,
    res: usize,
) -> Result<usize> {
    let grad = gradient(f)?;
    let mut bad = 0;
    grid_points(bx, res, |x| {
        let lhs = eval_scalar(f, x)?.abs().powf(exps.p);
        let rhs = c3 * grad_magnitude_scalar(&grad, x)?.powf(exps.q);
        if exceeds(lhs, rhs) {
            bad += 1;
        }
        Ok(())
    })?;
    Ok(bad)
}
