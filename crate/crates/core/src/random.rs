//! Seeded sampling primitives.
//!
//! The stream is xoshiro256** seeded through splitmix64 (`seed_from_u64`).
//! Uniforms take the top 53 bits of each output; normals use the cosine
//! branch of Box-Muller, one normal per two uniforms. Nothing else draws from
//! the generator, so a seed fully determines every sample.

use num_complex::Complex;
use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::linalg::CMatrix;
use crate::Real;

pub type Rng64 = Xoshiro256StarStar;

pub fn seeded(seed: u64) -> Rng64 {
    Rng64::seed_from_u64(seed)
}

/// splitmix64 finalizer; derives independent child seeds from `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform on `[0, 1)`.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn uniform_in(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// Uniform integer in `lo..=hi`.
pub fn uniform_int(rng: &mut impl RngCore, lo: usize, hi: usize) -> usize {
    debug_assert!(lo <= hi);
    lo + ((uniform(rng) * (hi - lo + 1) as f64) as usize).min(hi - lo)
}

pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn complex_gaussian<T: Real>(rng: &mut impl RngCore, rows: usize, cols: usize) -> CMatrix<T> {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re = standard_normal(rng);
        let im = standard_normal(rng);
        Complex::new(T::lit(re), T::lit(im))
    })
}

/// Unitary from modified Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<T: Real>(rng: &mut impl RngCore, dim: usize) -> CMatrix<T> {
    loop {
        let mut m = complex_gaussian::<T>(rng, dim, dim);
        let mut ok = true;
        for j in 0..dim {
            for k in 0..j {
                let mut proj = Complex::new(T::zero(), T::zero());
                for i in 0..dim {
                    proj = proj + m[(i, k)].conj() * m[(i, j)];
                }
                for i in 0..dim {
                    let sub = m[(i, k)] * proj;
                    m[(i, j)] = m[(i, j)] - sub;
                }
            }
            let norm = (0..dim).map(|i| m[(i, j)].norm_sqr()).sum::<T>().sqrt();
            if norm <= T::tol(1e-10) {
                ok = false;
                break;
            }
            for i in 0..dim {
                m[(i, j)] = m[(i, j)] / norm;
            }
        }
        if ok {
            return m;
        }
    }
}
