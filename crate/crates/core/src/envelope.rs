//! Affine envelopes `Σ a_i x_i + b <= f(x) <= Σ c_i x_i + d` over a box.
//!
//! Slopes are chords, so the residual `f - slope·x` is either a sum of
//! one-variable functions or a function of `s = Σ β_i x_i`. Its extrema are
//! then one-dimensional and found by a dense scan plus polishing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperfunc::{eval_scalar, BoxDomain, Form, MultiFunc, ScalarFunc1D};
use crate::scalaropt::{box_maximize, box_minimize, OptOptions};
use crate::Real;

/// Slack allowed on either side when checking an envelope on a grid.
pub const ENVELOPE_TOL: f64 = 1e-10;

/// Grid points used for the one-dimensional offset searches.
const OFFSET_GRID: usize = 2001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineEnvelope<T> {
    pub a: Vec<T>,
    pub b: T,
    pub c: Vec<T>,
    pub d: T,
}

impl<T: Real> AffineEnvelope<T> {
    pub fn new(a: Vec<T>, b: T, c: Vec<T>, d: T) -> Result<Self> {
        if a.len() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: c.len(),
            });
        }
        Ok(Self { a, b, c, d })
    }

    pub fn arity(&self) -> usize {
        self.a.len()
    }

    pub fn lower(&self, x: &[T]) -> T {
        self.a.iter().zip(x).map(|(&a, &x)| a * x).sum::<T>() + self.b
    }

    pub fn upper(&self, x: &[T]) -> T {
        self.c.iter().zip(x).map(|(&c, &x)| c * x).sum::<T>() + self.d
    }
}

/// Extrema of a one-variable residual on `[lo, hi]`.
fn residual_range<T: Real>(r: impl Fn(T) -> Result<T>, lo: T, hi: T) -> Result<(T, T)> {
    let bx = BoxDomain::new(vec![(lo, hi)])?;
    let opts = OptOptions::with_grid(OFFSET_GRID);
    let mn = box_minimize(|x: &[T]| r(x[0]), &bx, &opts)?;
    let mx = box_maximize(|x: &[T]| r(x[0]), &bx, &opts)?;
    Ok((mn.value, mx.value))
}

fn chord<T: Real>(u: &ScalarFunc1D<T>, lo: T, hi: T) -> Result<T> {
    Ok((u.eval(hi)? - u.eval(lo)?) / (hi - lo))
}

/// The canonical chord envelope of `f` on `bx`, checked on a grid of
/// `grid_res` points per axis.
pub fn fit_envelope<T: Real>(f: &MultiFunc<T>, bx: &BoxDomain<T>, grid_res: usize) -> Result<AffineEnvelope<T>> {
    if f.arity() != bx.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.arity(),
            found: bx.dim(),
        });
    }
    let env = match f.form() {
        Form::Separable(us) => {
            let (mut slopes, mut b, mut d) = (Vec::with_capacity(us.len()), T::zero(), T::zero());
            for (i, u) in us.iter().enumerate() {
                let (lo, hi) = (bx.lo(i), bx.hi(i));
                if let Some((s, c)) = u.affine_coeffs() {
                    slopes.push(s);
                    b = b + c;
                    d = d + c;
                    continue;
                }
                let s = chord(u, lo, hi)?;
                let (mn, mx) = residual_range(|x| Ok(u.eval(x)? - s * x), lo, hi)?;
                slopes.push(s);
                b = b + mn;
                d = d + mx;
            }
            AffineEnvelope::new(slopes.clone(), b, slopes, d)?
        }
        Form::CompositeAffine { beta, outer } => {
            let (s_lo, s_hi) = bx.linear_range(beta);
            if s_hi <= s_lo {
                let v = outer.eval(s_lo)?;
                let zero = vec![T::zero(); beta.len()];
                AffineEnvelope::new(zero.clone(), v, zero, v)?
            } else if let Some((k, c)) = outer.affine_coeffs() {
                let slopes: Vec<T> = beta.iter().map(|&b| k * b).collect();
                AffineEnvelope::new(slopes.clone(), c, slopes, c)?
            } else {
                let k = chord(outer, s_lo, s_hi)?;
                let (mn, mx) = residual_range(|s| Ok(outer.eval(s)? - k * s), s_lo, s_hi)?;
                let slopes: Vec<T> = beta.iter().map(|&b| k * b).collect();
                AffineEnvelope::new(slopes.clone(), mn, slopes, mx)?
            }
        }
    };
    let check = validate_envelope(f, &env, bx, grid_res);
    if check.violations > 0 {
        return Err(Error::EnvelopeViolated {
            violations: check.violations,
            worst_gap: check.worst_gap.as_f64(),
        });
    }
    Ok(env)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck<T> {
    pub nodes: usize,
    pub violations: usize,
    /// Largest `max(lower - f, f - upper)` over the grid, floored at zero.
    pub worst_gap: T,
}

/// Exhaustive scan of `grid_res` points per axis. Nodes where `f` cannot be
/// evaluated count as violations with an infinite gap.
pub fn validate_envelope<T: Real>(
    f: &MultiFunc<T>,
    env: &AffineEnvelope<T>,
    bx: &BoxDomain<T>,
    grid_res: usize,
) -> EnvelopeCheck<T> {
    let n = bx.dim();
    let g = grid_res.max(2);
    let tol = T::lit(ENVELOPE_TOL);
    let mut out = EnvelopeCheck {
        nodes: 0,
        violations: 0,
        worst_gap: T::zero(),
    };
    if env.arity() != n || f.arity() != n {
        out.violations = 1;
        out.worst_gap = T::infinity();
        return out;
    }
    let axes: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..g)
                .map(|k| {
                    if k + 1 == g {
                        bx.hi(i)
                    } else {
                        bx.lo(i) + bx.width(i) * T::lit(k as f64) / T::lit((g - 1) as f64)
                    }
                })
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; n];
    let mut x = vec![T::zero(); n];
    'grid: loop {
        for i in 0..n {
            x[i] = axes[i][idx[i]];
        }
        out.nodes += 1;
        let gap = match eval_scalar(f, &x) {
            Ok(v) => (env.lower(&x) - v).max(v - env.upper(&x)),
            Err(_) => T::infinity(),
        };
        if gap > tol {
            out.violations += 1;
        }
        out.worst_gap = out.worst_gap.max(gap);
        for axis in (0..n).rev() {
            idx[axis] += 1;
            if idx[axis] < g {
                continue 'grid;
            }
            idx[axis] = 0;
        }
        break;
    }
    out
}
