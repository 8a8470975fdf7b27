//! Spectral radius by block power (subspace) iteration.
//!
//! Random reservoir matrices are non-symmetric, so the dominant eigenvalue is
//! often one of a complex-conjugate pair and single-vector power iteration
//! oscillates instead of converging. Iterating a small orthonormal block and
//! taking the largest Ritz value modulus handles both real and complex
//! dominant eigenvalues.

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::reservoir::CsrMatrix;
use crate::rng::SeedTree;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerIterationOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub block_size: usize,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 20_000, block_size: 16 }
    }
}

pub fn spectral_radius(matrix: &CsrMatrix) -> Result<f64> {
    spectral_radius_with(matrix, &PowerIterationOptions::default())
}

pub fn spectral_radius_with(matrix: &CsrMatrix, opts: &PowerIterationOptions) -> Result<f64> {
    let n = matrix.dim();
    if n == 0 {
        return Ok(0.0);
    }
    if matrix.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix passed to spectral_radius".into()));
    }
    if matrix.nnz() == 0 {
        return Ok(0.0);
    }
    let m = opts.block_size.clamp(1, n);
    // fixed start block, independent of any caller seed
    let mut rng = SeedTree::new(0x005E_ED0F_B10C).rng();
    let mut q = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    q = q.qr().q();
    let mut y = DMatrix::zeros(n, m);
    let mut col = vec![0.0; n];
    let mut last = f64::NAN;
    let mut stable = 0;
    for it in 1..=opts.max_iterations {
        for j in 0..m {
            matrix.mul_vec_into(q.column(j).as_slice(), &mut col);
            y.column_mut(j).copy_from_slice(&col);
        }
        let h = q.transpose() * &y;
        let estimate = ritz_radius(&h);
        if !estimate.is_finite() {
            return Err(Error::NonFinite("Ritz matrix in spectral_radius".into()));
        }
        // a full-space block gives exact Ritz values; a zero image means the
        // block was annihilated
        if m == n || y.iter().all(|v| *v == 0.0) {
            return Ok(estimate);
        }
        if (estimate - last).abs() <= opts.tolerance * estimate.max(1e-8) {
            stable += 1;
            if stable >= 3 {
                return Ok(estimate);
            }
        } else {
            stable = 0;
        }
        last = estimate;
        if it == opts.max_iterations {
            break;
        }
        q = y.clone().qr().q();
    }
    Err(Error::NoConvergence { iterations: opts.max_iterations, estimate: last })
}

const SQUARINGS: usize = 64;

/// Spectral radius of the small Ritz matrix by Gelfand's formula,
/// `rho(H) = lim ||H^(2^j)||^(1/2^j)`, with the power renormalised after each
/// squaring. Unlike a shifted-QR eigen solver this cannot stall on repeated
/// or defective eigenvalues (near-identity or nilpotent blocks); 64 squarings
/// reduce any non-normality factor `c^(2^-j)` to rounding level.
fn ritz_radius(h: &DMatrix<f64>) -> f64 {
    let norm = h.amax();
    if norm == 0.0 {
        return 0.0;
    }
    let mut a = h / norm;
    let mut log_scale = norm.ln();
    let mut weight = 1.0;
    for _ in 0..SQUARINGS {
        let sq = &a * &a;
        let s = sq.amax();
        if s == 0.0 || !s.is_finite() {
            // nilpotent (up to rounding)
            return if s == 0.0 { 0.0 } else { f64::NAN };
        }
        weight *= 0.5;
        // ||H^(2^(j+1))|| = (c_j)^2 * s with c_j the accumulated scale
        log_scale += weight * s.ln();
        a = sq / s;
    }
    log_scale.exp()
}
