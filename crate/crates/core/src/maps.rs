//! Normalized positive linear maps in Kraus form and the weighted
//! multi-index mixtures `Σ w_{1,j1}…w_{n,jn} Φ_{j1…jn}(X_{j1…jn})`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOperator};
use crate::random::{complex_gaussian, seeded, Rng64};
use crate::Real;

pub const NORMALIZATION_TOL: f64 = 1e-10;

/// `Φ(X) = Σ_k V_k* X V_k` with `V_k` of shape `dim_in x dim_out` and
/// `Σ_k V_k* V_k = I_out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KrausList<T>", into = "KrausList<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct PositiveLinearMap<T> {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix<T>>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct KrausList<T> {
    kraus: Vec<CMatrix<T>>,
}

impl<T: Real> TryFrom<KrausList<T>> for PositiveLinearMap<T> {
    type Error = Error;

    fn try_from(k: KrausList<T>) -> Result<Self> {
        Self::new(k.kraus)
    }
}

impl<T: Real> From<PositiveLinearMap<T>> for KrausList<T> {
    fn from(m: PositiveLinearMap<T>) -> Self {
        Self { kraus: m.kraus }
    }
}

/// Diagnostics from [`validate_map`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    /// `||Σ V_k* V_k - I||_max`.
    pub normalization_residual: f64,
    /// Smallest eigenvalue of `Φ(X)` over the sampled PSD `X`.
    pub positivity_min_eigenvalue: f64,
    pub samples: usize,
    pub normalized: bool,
    pub positive: bool,
}

impl MapReport {
    pub fn ok(&self) -> bool {
        self.normalized && self.positive
    }
}

impl<T: Real> PositiveLinearMap<T> {
    /// Checked constructor: shapes must agree and the family must be
    /// normalized to within `1e-10`.
    pub fn new(kraus: Vec<CMatrix<T>>) -> Result<Self> {
        let map = Self::from_kraus_unnormalized(kraus)?;
        let residual = map.normalization_residual();
        if residual > T::tol(NORMALIZATION_TOL) {
            return Err(Error::InvalidMap(format!(
                "Kraus family not normalized (residual {residual:e})"
            )));
        }
        Ok(map)
    }

    /// Shape-checked only; for diagnosing families that may not be unital.
    pub fn from_kraus_unnormalized(kraus: Vec<CMatrix<T>>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidMap("empty Kraus family".into()))?;
        let (dim_in, dim_out) = (first.rows(), first.cols());
        if let Some(bad) = kraus
            .iter()
            .find(|v| v.rows() != dim_in || v.cols() != dim_out)
        {
            return Err(Error::InvalidMap(format!(
                "Kraus operator {}x{} in a {dim_in}x{dim_out} family",
                bad.rows(),
                bad.cols()
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![CMatrix::identity(dim)],
        }
    }

    /// Pinching onto the standard basis: Kraus terms `e_k e_k*`.
    pub fn pinching(dim: usize) -> Self {
        let kraus = (0..dim)
            .map(|k| {
                CMatrix::from_fn(dim, dim, |i, j| {
                    if i == k && j == k {
                        Complex::new(T::one(), T::zero())
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                })
            })
            .collect();
        Self {
            dim_in: dim,
            dim_out: dim,
            kraus,
        }
    }

    /// Compression `X ↦ V* X V` by an isometry `V` (`V* V = I`).
    pub fn compression(v: CMatrix<T>) -> Result<Self> {
        Self::new(vec![v])
    }

    /// Random normalized map: Gaussian `V_k` rescaled by `S^{-1/2}` with
    /// `S = Σ V_k* V_k`. Draws with `λ_min(S) <= 1e-10 λ_max(S)` are redrawn,
    /// at most 8 times.
    pub fn random(dim_in: usize, dim_out: usize, n_kraus: usize, seed: u64) -> Result<Self> {
        Self::random_with(&mut seeded(seed), dim_in, dim_out, n_kraus)
    }

    pub fn random_with(rng: &mut Rng64, dim_in: usize, dim_out: usize, n_kraus: usize) -> Result<Self> {
        if n_kraus == 0 || dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidMap("need n_kraus, dim_in, dim_out >= 1".into()));
        }
        for _ in 0..8 {
            let vs: Vec<CMatrix<T>> = (0..n_kraus)
                .map(|_| complex_gaussian(rng, dim_in, dim_out))
                .collect();
            let s = gram_sum(&vs, dim_out);
            let ev = s.eigenvalues()?;
            if ev[0] <= T::lit(1e-10) * ev[ev.len() - 1] {
                continue;
            }
            let inv_sqrt = crate::linalg::psd_inv_sqrt(&s)?;
            let kraus = vs.iter().map(|v| v * inv_sqrt.matrix()).collect();
            return Self::new(kraus);
        }
        Err(Error::InvalidMap("Gram sum singular after 8 draws".into()))
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix<T>] {
        &self.kraus
    }

    pub fn normalization_residual(&self) -> T {
        let s = gram_sum(&self.kraus, self.dim_out);
        (s.matrix() - &CMatrix::identity(self.dim_out)).max_abs()
    }

    pub fn apply(&self, x: &HermitianOperator<T>) -> Result<HermitianOperator<T>> {
        kraus_apply(self, x)
    }
}

fn gram_sum<T: Real>(vs: &[CMatrix<T>], dim_out: usize) -> HermitianOperator<T> {
    let mut s = CMatrix::zeros(dim_out, dim_out);
    for v in vs {
        s = &s + &(&v.adjoint() * v);
    }
    HermitianOperator::symmetrize(s)
}

/// `Σ_k V_k* X V_k`.
pub fn kraus_apply<T: Real>(
    phi: &PositiveLinearMap<T>,
    x: &HermitianOperator<T>,
) -> Result<HermitianOperator<T>> {
    if x.dim() != phi.dim_in {
        return Err(Error::DimensionMismatch {
            expected: phi.dim_in,
            found: x.dim(),
        });
    }
    let mut acc = CMatrix::zeros(phi.dim_out, phi.dim_out);
    for v in &phi.kraus {
        let xv = x.matrix() * v;
        acc = &acc + &(&v.adjoint() * &xv);
    }
    Ok(HermitianOperator::symmetrize(acc))
}

/// Normalization residual plus positivity spot checks on `samples` random
/// PSD inputs (fixed internal seed). Never fails; problems are reported.
pub fn validate_map<T: Real>(phi: &PositiveLinearMap<T>, tol: T, samples: usize) -> MapReport {
    let residual = phi.normalization_residual();
    let mut rng = seeded(0x0b5e_55ed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let g = complex_gaussian::<T>(&mut rng, phi.dim_in, phi.dim_in);
        let psd = HermitianOperator::symmetrize(&g * &g.adjoint());
        let scale = T::one() + psd.matrix().max_abs();
        let min = kraus_apply(phi, &psd)
            .and_then(|y| y.min_eigenvalue())
            .map(|m| (m / scale).as_f64())
            .unwrap_or(f64::NEG_INFINITY);
        worst = worst.min(min);
    }
    MapReport {
        normalization_residual: residual.as_f64(),
        positivity_min_eigenvalue: worst,
        samples,
        normalized: residual <= tol,
        positive: samples == 0 || worst >= -tol.as_f64(),
    }
}

/// `n` probability vectors `w_i` of lengths `k_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<T>>", into = "Vec<Vec<T>>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct WeightFamily<T> {
    vectors: Vec<Vec<T>>,
}

impl<T: Real> TryFrom<Vec<Vec<T>>> for WeightFamily<T> {
    type Error = Error;

    fn try_from(v: Vec<Vec<T>>) -> Result<Self> {
        Self::new(v)
    }
}

impl<T: Real> From<WeightFamily<T>> for Vec<Vec<T>> {
    fn from(w: WeightFamily<T>) -> Self {
        w.vectors
    }
}

impl<T: Real> WeightFamily<T> {
    pub fn new(vectors: Vec<Vec<T>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidWeights("no probability vectors".into()));
        }
        for (i, w) in vectors.iter().enumerate() {
            if w.is_empty() {
                return Err(Error::InvalidWeights(format!("w_{i} is empty")));
            }
            if w.iter().any(|&x| x < T::zero() || !x.is_finite()) {
                return Err(Error::InvalidWeights(format!("w_{i} has a negative entry")));
            }
            let total: T = w.iter().copied().sum();
            if (total - T::one()).abs() > T::tol(1e-12) {
                return Err(Error::InvalidWeights(format!("w_{i} sums to {total}")));
            }
        }
        Ok(Self { vectors })
    }

    pub fn uniform(shape: &[usize]) -> Result<Self> {
        Self::new(
            shape
                .iter()
                .map(|&k| vec![T::one() / T::lit(k as f64); k])
                .collect(),
        )
    }

    pub fn vectors(&self) -> &[Vec<T>] {
        &self.vectors
    }

    pub fn shape(&self) -> Vec<usize> {
        self.vectors.iter().map(Vec::len).collect()
    }

    /// `w_{1,j1} ⋯ w_{n,jn}`.
    pub fn product(&self, index: &[usize]) -> T {
        self.vectors
            .iter()
            .zip(index)
            .fold(T::one(), |acc, (w, &j)| acc * w[j])
    }
}

/// Row-major iteration over all multi-indices of `shape`.
pub fn multi_indices(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; shape.len()];
        for (slot, &k) in idx.iter_mut().zip(shape).rev() {
            *slot = flat % k;
            flat /= k;
        }
        idx
    })
}

/// One map per multi-index `(j1, …, jn)`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid<T>", into = "RawGrid<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct MapGrid<T> {
    shape: Vec<usize>,
    maps: Vec<PositiveLinearMap<T>>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct RawGrid<T> {
    shape: Vec<usize>,
    maps: Vec<PositiveLinearMap<T>>,
}

impl<T: Real> TryFrom<RawGrid<T>> for MapGrid<T> {
    type Error = Error;

    fn try_from(g: RawGrid<T>) -> Result<Self> {
        Self::new(g.shape, g.maps)
    }
}

impl<T: Real> From<MapGrid<T>> for RawGrid<T> {
    fn from(g: MapGrid<T>) -> Self {
        Self {
            shape: g.shape,
            maps: g.maps,
        }
    }
}

impl<T: Real> MapGrid<T> {
    pub fn new(shape: Vec<usize>, maps: Vec<PositiveLinearMap<T>>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::InvalidMap(format!("bad grid shape {shape:?}")));
        }
        let total: usize = shape.iter().product();
        if maps.len() != total {
            return Err(Error::InvalidMap(format!(
                "grid shape {shape:?} needs {total} maps, got {}",
                maps.len()
            )));
        }
        let (din, dout) = (maps[0].dim_in, maps[0].dim_out);
        if maps.iter().any(|m| m.dim_in != din || m.dim_out != dout) {
            return Err(Error::InvalidMap("maps in a grid must share dimensions".into()));
        }
        for m in &maps {
            let r = m.normalization_residual();
            if r > T::tol(NORMALIZATION_TOL) {
                return Err(Error::InvalidMap(format!("grid map not normalized ({r:e})")));
            }
        }
        Ok(Self { shape, maps })
    }

    /// The same map at every multi-index.
    pub fn uniform(shape: Vec<usize>, map: PositiveLinearMap<T>) -> Result<Self> {
        let total = shape.iter().product();
        Self::new(shape, vec![map; total])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn maps(&self) -> &[PositiveLinearMap<T>] {
        &self.maps
    }

    pub fn dim_in(&self) -> usize {
        self.maps[0].dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.maps[0].dim_out
    }

    fn check_weights(&self, weights: &WeightFamily<T>) -> Result<()> {
        if weights.shape() != self.shape {
            return Err(Error::InvalidWeights(format!(
                "weight shape {:?} does not match grid shape {:?}",
                weights.shape(),
                self.shape
            )));
        }
        Ok(())
    }
}

/// `Σ_J w_J Φ_J(field_J)` with `field` in row-major multi-index order.
pub fn aggregate<T: Real>(
    grid: &MapGrid<T>,
    weights: &WeightFamily<T>,
    field: &[HermitianOperator<T>],
) -> Result<HermitianOperator<T>> {
    if field.len() != grid.maps.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.maps.len(),
            found: field.len(),
        });
    }
    aggregate_by(grid, weights, |flat, _| Ok(field[flat].clone()))
}

/// Like [`aggregate`], producing each field entry on demand from
/// `(flat index, multi-index)`.
pub fn aggregate_by<T, F>(
    grid: &MapGrid<T>,
    weights: &WeightFamily<T>,
    mut field: F,
) -> Result<HermitianOperator<T>>
where
    T: Real,
    F: FnMut(usize, &[usize]) -> Result<HermitianOperator<T>>,
{
    grid.check_weights(weights)?;
    let mut acc = HermitianOperator::zeros(grid.dim_out());
    for (flat, idx) in multi_indices(&grid.shape).enumerate() {
        let w = weights.product(&idx);
        let x = field(flat, &idx)?;
        let y = kraus_apply(&grid.maps[flat], &x)?;
        acc = acc.try_add(&y.scale(w))?;
    }
    Ok(acc)
}
