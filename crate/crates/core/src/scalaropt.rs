//! Box-constrained extrema of smooth scalar objectives: an exhaustive
//! uniform grid followed by Nelder-Mead polishing from the best nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperfunc::BoxDomain;
use crate::Real;

/// Largest supported number of variables.
pub const MAX_ARITY: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptOptions {
    /// Grid points per axis before clamping by `max_nodes`.
    pub grid_points: usize,
    /// Total grid node budget; the per-axis count shrinks to fit.
    pub max_nodes: usize,
    /// Number of best grid nodes that get polished.
    pub starts: usize,
    pub max_iter: usize,
    /// Simplex diameter stop, relative to the widest box side.
    pub xtol_rel: f64,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            grid_points: 33,
            max_nodes: 1 << 21,
            starts: 5,
            max_iter: 4000,
            xtol_rel: 1e-9,
        }
    }
}

impl OptOptions {
    pub fn with_grid(grid_points: usize) -> Self {
        Self {
            grid_points,
            ..Self::default()
        }
    }

    /// Points per axis actually used for an `n`-dimensional box.
    pub fn effective_grid(&self, n: usize) -> usize {
        let mut g = self.grid_points.max(2);
        while g > 2 && (g as f64).powi(n as i32) > self.max_nodes as f64 {
            g -= 1;
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult<T> {
    pub argpoint: Vec<T>,
    pub value: T,
    /// Grid points per axis used for the exhaustive scan.
    pub certificate_res: usize,
    pub evaluations: usize,
}

/// True if `(va, a)` ranks ahead of `(vb, b)`: larger value, then
/// lexicographically smaller point.
fn better<T: Real>(va: T, a: &[T], vb: T, b: &[T]) -> bool {
    if va != vb {
        return va > vb;
    }
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

struct Counted<'a, T, F> {
    f: &'a mut F,
    evals: usize,
    _t: std::marker::PhantomData<T>,
}

impl<T: Real, F: FnMut(&[T]) -> Result<T>> Counted<'_, T, F> {
    fn call(&mut self, x: &[T]) -> Result<T> {
        self.evals += 1;
        let v = (self.f)(x).map_err(|e| e.at_point(x))?;
        if !v.is_finite() {
            return Err(Error::Domain {
                func: "objective".into(),
                value: v.as_f64(),
            }
            .at_point(x));
        }
        Ok(v)
    }
}

fn grid_node<T: Real>(bx: &BoxDomain<T>, g: usize, idx: &[usize], out: &mut [T]) {
    let last = T::lit((g - 1) as f64);
    for (i, (&k, o)) in idx.iter().zip(out.iter_mut()).enumerate() {
        *o = if k + 1 == g {
            bx.hi(i)
        } else {
            bx.lo(i) + bx.width(i) * T::lit(k as f64) / last
        };
    }
}

/// Nelder-Mead on `-f` (i.e. maximizing `f`), every vertex clamped to the box.
fn polish<T: Real, F: FnMut(&[T]) -> Result<T>>(
    obj: &mut Counted<'_, T, F>,
    bx: &BoxDomain<T>,
    start: &[T],
    start_value: T,
    step: &[T],
    opts: &OptOptions,
) -> Result<(Vec<T>, T)> {
    let n = start.len();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let scale = (0..n).map(|i| bx.width(i)).fold(T::zero(), T::max);
    let xtol = T::lit(opts.xtol_rel) * scale;

    let mut simplex: Vec<(Vec<T>, T)> = vec![(start.to_vec(), start_value)];
    for i in 0..n {
        let mut x = start.to_vec();
        // step inward when the start sits on the upper face
        x[i] = if x[i] + step[i] <= bx.hi(i) { x[i] + step[i] } else { x[i] - step[i] };
        bx.project(&mut x);
        let v = obj.call(&x)?;
        simplex.push((x, v));
    }

    let order = |s: &mut Vec<(Vec<T>, T)>| {
        s.sort_by(|a, b| {
            if better(a.1, &a.0, b.1, &b.0) {
                std::cmp::Ordering::Less
            } else if better(b.1, &b.0, a.1, &a.0) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
    };

    let blend = |a: &[T], b: &[T], t: T| -> Vec<T> {
        let mut x: Vec<T> = a.iter().zip(b).map(|(&u, &v)| u + t * (v - u)).collect();
        bx.project(&mut x);
        x
    };

    for _ in 0..opts.max_iter {
        order(&mut simplex);
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(T::zero(), T::max)
            })
            .fold(T::zero(), T::max);
        if diameter < xtol {
            break;
        }

        let mut centroid = vec![T::zero(); n];
        for (x, _) in &simplex[..n] {
            for (c, &v) in centroid.iter_mut().zip(x) {
                *c = *c + v;
            }
        }
        let inv = T::one() / T::lit(n as f64);
        centroid.iter_mut().for_each(|c| *c = *c * inv);

        let (worst, worst_v) = simplex[n].clone();
        let xr = blend(&centroid, &worst, -T::one());
        let vr = obj.call(&xr)?;
        if vr > simplex[0].1 {
            let xe = blend(&centroid, &worst, -two);
            let ve = obj.call(&xe)?;
            simplex[n] = if ve > vr { (xe, ve) } else { (xr, vr) };
            continue;
        }
        if vr > simplex[n - 1].1 {
            simplex[n] = (xr, vr);
            continue;
        }
        let outside = vr > worst_v;
        let xc = blend(&centroid, if outside { &xr } else { &worst }, half);
        let vc = obj.call(&xc)?;
        if (outside && vc >= vr) || (!outside && vc > worst_v) {
            simplex[n] = (xc, vc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = blend(&best, &vertex.0, half);
            let v = obj.call(&x)?;
            *vertex = (x, v);
        }
    }
    order(&mut simplex);
    Ok(simplex.swap_remove(0))
}

/// Global maximum of `objective` over `bx`.
pub fn box_maximize<T, F>(mut objective: F, bx: &BoxDomain<T>, opts: &OptOptions) -> Result<OptResult<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<T>,
{
    let n = bx.dim();
    if n > MAX_ARITY {
        return Err(Error::Optimizer(format!("{n} variables exceeds the cap of {MAX_ARITY}")));
    }
    let g = opts.effective_grid(n);
    let mut obj = Counted {
        f: &mut objective,
        evals: 0,
        _t: std::marker::PhantomData,
    };

    let keep = opts.starts.max(1);
    let mut top: Vec<(Vec<T>, T)> = Vec::with_capacity(keep + 1);
    let mut idx = vec![0usize; n];
    let mut x = vec![T::zero(); n];
    'grid: loop {
        grid_node(bx, g, &idx, &mut x);
        let v = obj.call(&x)?;
        let pos = top
            .iter()
            .position(|(p, pv)| better(v, &x, *pv, p))
            .unwrap_or(top.len());
        if pos < keep {
            top.insert(pos, (x.clone(), v));
            top.truncate(keep);
        }
        for axis in (0..n).rev() {
            idx[axis] += 1;
            if idx[axis] < g {
                continue 'grid;
            }
            idx[axis] = 0;
        }
        break;
    }

    let step: Vec<T> = (0..n).map(|i| bx.width(i) / T::lit((g - 1) as f64)).collect();
    let (mut best_x, mut best_v) = top[0].clone();
    for (start, v0) in &top {
        let (px, pv) = polish(&mut obj, bx, start, *v0, &step, opts)?;
        if better(pv, &px, best_v, &best_x) {
            best_x = px;
            best_v = pv;
        }
    }
    Ok(OptResult {
        argpoint: best_x,
        value: best_v,
        certificate_res: g,
        evaluations: obj.evals,
    })
}

/// Global minimum, as the negated maximum of `-objective`.
pub fn box_minimize<T, F>(mut objective: F, bx: &BoxDomain<T>, opts: &OptOptions) -> Result<OptResult<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<T>,
{
    let r = box_maximize(|x: &[T]| objective(x).map(|v| -v), bx, opts)?;
    Ok(OptResult { value: -r.value, ..r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{seeded, uniform_in};

    fn interval(lo: f64, hi: f64) -> BoxDomain<f64> {
        BoxDomain::new(vec![(lo, hi)]).unwrap()
    }

    fn dense_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        (0..=n)
            .map(|k| f(lo + (hi - lo) * k as f64 / n as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn parabola_vertex() {
        let r = box_maximize(|x: &[f64]| Ok(-(x[0] - 1.5).powi(2)), &interval(1.0, 2.0), &OptOptions::default()).unwrap();
        assert!(r.value.abs() < 1e-9);
        assert!((r.argpoint[0] - 1.5).abs() < 1e-4);
        let r = box_minimize(|x: &[f64]| Ok((x[0] - 1.5).powi(2)), &interval(1.0, 2.0), &OptOptions::default()).unwrap();
        assert!(r.value.abs() < 1e-9);
    }

    #[test]
    fn linear_corners() {
        let bx = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        let r = box_maximize(|x: &[f64]| Ok(x[0] + x[1]), &bx, &OptOptions::default()).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.argpoint, vec![1.0, 1.0]);
        let r = box_minimize(|x: &[f64]| Ok(x[0] + x[1]), &bx, &OptOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.argpoint, vec![0.0, 0.0]);
    }

    #[test]
    fn kantorovich_objective() {
        let f = |x: f64| x * (-x / 2.0 + 1.5);
        let oracle = dense_max(f, 1.0, 2.0, 1_000_000);
        let r = box_maximize(|x: &[f64]| Ok(f(x[0])), &interval(1.0, 2.0), &OptOptions::default()).unwrap();
        assert!((r.value - oracle).abs() < 1e-9);
        assert!((r.value - 1.125).abs() < 1e-12);
        assert!((r.value - f(r.argpoint[0])).abs() <= 1e-12);
    }

    #[test]
    fn reciprocal_plus_half() {
        let f = |x: f64| 1.0 / x + x / 2.0;
        let oracle = -dense_max(|x| -f(x), 1.0, 2.0, 1_000_000);
        let r = box_minimize(|x: &[f64]| Ok(f(x[0])), &interval(1.0, 2.0), &OptOptions::default()).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-12);
        assert!((r.value - oracle).abs() < 1e-9);
        assert!((r.argpoint[0] - 2f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn errors_carry_the_point() {
        let err = box_maximize(
            |x: &[f64]| {
                if x[0] > 1.5 {
                    Err(Error::Domain {
                        func: "test".into(),
                        value: x[0],
                    })
                } else {
                    Ok(x[0])
                }
            },
            &interval(1.0, 2.0),
            &OptOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Evaluation { point, .. } => assert!(point[0] > 1.5),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn ties_pick_smallest_point() {
        let bx = BoxDomain::cube(2, -1.0, 1.0).unwrap();
        let r = box_maximize(|x: &[f64]| Ok(x[0] * x[0] + x[1] * x[1]), &bx, &OptOptions::default()).unwrap();
        assert_eq!(r.argpoint, vec![-1.0, -1.0]);
    }

    #[test]
    fn deterministic_and_monotone() {
        let f = |x: &[f64]| Ok((3.0 * x[0]).sin() * (2.0 * x[1]).cos() + 0.1 * x[0]);
        let small = BoxDomain::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let big = BoxDomain::new(vec![(-0.5, 1.5), (0.0, 2.0)]).unwrap();
        let a = box_maximize(f, &small, &OptOptions::default()).unwrap();
        let b = box_maximize(f, &small, &OptOptions::default()).unwrap();
        assert_eq!(a, b);
        let c = box_maximize(f, &big, &OptOptions::default()).unwrap();
        assert!(c.value >= a.value - 1e-12);
    }

    #[test]
    fn too_many_variables() {
        let bx = BoxDomain::cube(7, 0.0, 1.0).unwrap();
        assert!(matches!(
            box_maximize(|x: &[f64]| Ok(x[0]), &bx, &OptOptions::default()),
            Err(Error::Optimizer(_))
        ));
    }

    #[test]
    fn grid_clamps_for_high_arity() {
        let o = OptOptions::default();
        assert_eq!(o.effective_grid(3), 33);
        assert!(o.effective_grid(6).pow(6) <= o.max_nodes);
    }

    #[test]
    fn random_quadratics_match_brute_force_2d() {
        let mut rng = seeded(99);
        for _ in 0..10 {
            let c: Vec<f64> = (0..5).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
            let f = |x: &[f64]| c[0] * x[0] * x[0] + c[1] * x[1] * x[1] + c[2] * x[0] * x[1] + c[3] * x[0] + c[4] * x[1];
            let bx = BoxDomain::cube(2, -1.0, 1.0).unwrap();
            let mut brute = f64::NEG_INFINITY;
            let m = 801;
            for i in 0..m {
                for j in 0..m {
                    let x = [-1.0 + 2.0 * i as f64 / (m - 1) as f64, -1.0 + 2.0 * j as f64 / (m - 1) as f64];
                    brute = brute.max(f(&x));
                }
            }
            let r = box_maximize(|x: &[f64]| Ok(f(x)), &bx, &OptOptions::default()).unwrap();
            assert!(r.value >= brute - 1e-9, "{} < {}", r.value, brute);
            assert!(r.value - brute <= 1e-4, "{} vs {}", r.value, brute);
        }
    }

    #[test]
    fn f32_runs() {
        let bx = BoxDomain::<f32>::new(vec![(1.0, 2.0)]).unwrap();
        let r = box_maximize(|x: &[f32]| Ok(x[0] * (1.5 - x[0] / 2.0)), &bx, &OptOptions::default()).unwrap();
        assert!((r.value - 1.125).abs() < 1e-5);
    }
}
