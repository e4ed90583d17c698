//! Seeded instance specs and their materialization.

use opineq_core::bounds::InequalityInstance;
use opineq_core::hyperfunc::{BoxDomain, MultiFunc};
use opineq_core::linalg::HermitianOperator;
use opineq_core::maps::{MapGrid, PositiveLinearMap, WeightFamily};
use opineq_core::random::{random_unitary, seeded, uniform, uniform_in, Rng64};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const MAX_DIM: usize = 32;
pub const MAX_ARITY: usize = 4;
pub const DEFAULT_ENVELOPE_GRID: usize = 201;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapKind {
    RandomKraus { n_kraus: usize },
    Pinching,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    Uniform,
    RandomDirichlet,
}

/// Everything needed to rebuild an instance bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub seed: u64,
    pub dim: usize,
    /// `k_i` per axis; `n` is its length.
    pub ks: Vec<usize>,
    pub boxes: Vec<[f64; 2]>,
    pub f: MultiFunc<f64>,
    pub g: MultiFunc<f64>,
    pub map: MapKind,
    pub weights: WeightMode,
    #[serde(default = "default_envelope_grid")]
    pub envelope_grid: usize,
}

fn default_envelope_grid() -> usize {
    DEFAULT_ENVELOPE_GRID
}

impl InstanceSpec {
    pub fn n(&self) -> usize {
        self.ks.len()
    }

    pub fn check(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(HarnessError::Spec(format!("{field}: {msg}")));
        if self.dim == 0 || self.dim > MAX_DIM {
            return bad("dim", format!("{} not in 1..={MAX_DIM}", self.dim));
        }
        if self.ks.is_empty() || self.ks.len() > MAX_ARITY {
            return bad("ks", format!("arity {} not in 1..={MAX_ARITY}", self.ks.len()));
        }
        if self.ks.contains(&0) {
            return bad("ks", "every axis needs at least one operator".into());
        }
        if self.boxes.len() != self.n() {
            return bad("boxes", format!("{} intervals for {} axes", self.boxes.len(), self.n()));
        }
        if self.f.arity() != self.n() {
            return bad("f", format!("arity {} for {} axes", self.f.arity(), self.n()));
        }
        if self.g.arity() != self.n() {
            return bad("g", format!("arity {} for {} axes", self.g.arity(), self.n()));
        }
        if let MapKind::RandomKraus { n_kraus } = self.map {
            if n_kraus == 0 {
                return bad("map.n_kraus", "must be positive".into());
            }
        }
        Ok(())
    }
}

/// Hermitian matrix with spectrum drawn uniformly from `[lo, hi]`, rotated
/// by a random unitary. With `force_endpoints` the spectrum contains `lo`
/// and `hi` themselves (only `lo` when `dim = 1`).
pub fn random_hermitian_in_box(dim: usize, lo: f64, hi: f64, rng: &mut Rng64, force_endpoints: bool) -> HermitianOperator<f64> {
    let mut eig: Vec<f64> = (0..dim).map(|_| uniform_in(rng, lo, hi)).collect();
    if force_endpoints {
        eig[0] = lo;
        if dim > 1 {
            eig[1] = hi;
        }
    }
    let u = random_unitary::<f64>(rng, dim);
    let d = HermitianOperator::from_diagonal(&eig);
    HermitianOperator::new(&(&u * d.matrix()) * &u.adjoint()).expect("unitary conjugate of a diagonal is Hermitian")
}

/// Same, from a bare seed.
pub fn random_hermitian_seeded(dim: usize, lo: f64, hi: f64, seed: u64, force_endpoints: bool) -> HermitianOperator<f64> {
    random_hermitian_in_box(dim, lo, hi, &mut seeded(seed), force_endpoints)
}

fn dirichlet(rng: &mut Rng64, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - uniform(rng)).ln()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// Draws operators, maps and weights from `spec.seed`, then checks every
/// instance invariant. Every 4th operator gets forced endpoint eigenvalues.
pub fn build_instance(spec: &InstanceSpec) -> Result<InequalityInstance<f64>> {
    spec.check()?;
    let bx = BoxDomain::new(spec.boxes.iter().map(|b| (b[0], b[1])).collect())
        .map_err(|e| HarnessError::Spec(format!("boxes: {e}")))?;
    let mut rng = seeded(spec.seed);
    let mut counter = 0usize;
    let mut axes = Vec::with_capacity(spec.n());
    for (i, &k) in spec.ks.iter().enumerate() {
        let mut ops = Vec::with_capacity(k);
        for _ in 0..k {
            ops.push(random_hermitian_in_box(spec.dim, bx.lo(i), bx.hi(i), &mut rng, counter.is_multiple_of(4)));
            counter += 1;
        }
        axes.push(ops);
    }
    let total: usize = spec.ks.iter().product();
    let maps = (0..total)
        .map(|_| match spec.map {
            MapKind::RandomKraus { n_kraus } => PositiveLinearMap::random_with(&mut rng, spec.dim, spec.dim, n_kraus),
            MapKind::Pinching => Ok(PositiveLinearMap::pinching(spec.dim)),
            MapKind::Identity => Ok(PositiveLinearMap::identity(spec.dim)),
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let grid = MapGrid::new(spec.ks.clone(), maps)?;
    let weights = match spec.weights {
        WeightMode::Uniform => WeightFamily::uniform(&spec.ks)?,
        WeightMode::RandomDirichlet => WeightFamily::new(spec.ks.iter().map(|&k| dirichlet(&mut rng, k)).collect())?,
    };
    Ok(InequalityInstance::new(
        axes,
        bx,
        weights,
        grid,
        spec.f.clone(),
        spec.g.clone(),
        None,
        spec.envelope_grid,
    )?)
}
