//! Shift-invert Lanczos for the largest eigenvalues of a symmetric operator.
//!
//! The operator `A` is available as a matrix-vector product and as a sparse
//! lower triangle of `sigma * I - A`. With `sigma` above the spectrum of `A`
//! that matrix is positive definite, so it is factorised once by sparse
//! Cholesky and the Lanczos recurrence runs on its inverse, whose dominant
//! eigenvalues `1 / (sigma - lambda)` belong to the largest `lambda`.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{MatMut, Side};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Lower-triangular entries (row >= col) of `sigma * I - A`.
    fn shifted_lower_triplets(&self, sigma: f64) -> Vec<Triplet<usize, usize, f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    /// Cap on applications of the inverted operator.
    pub max_iterations: usize,
    /// Required `||A y - lambda y|| / |lambda|` for every returned pair.
    pub tolerance: f64,
    /// Basis size before a thick restart.
    pub krylov_dim: usize,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self { max_iterations: 10_000, tolerance: 1e-10, krylov_dim: 48 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Descending.
    pub values: Vec<f64>,
    /// Unit Euclidean norm.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Gram-Schmidt twice against `basis`; returns the remaining norm.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
    norm(v)
}

fn combine(basis: &[Vec<f64>], coeffs: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (b, c) in basis.iter().zip(coeffs) {
        axpy(c, b, &mut out);
    }
    out
}

struct ShiftInverse {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl ShiftInverse {
    fn new<O: SymmetricOperator>(op: &O, sigma: f64) -> Result<Self> {
        let n = op.dim();
        let triplets = op.shifted_lower_triplets(sigma);
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
        let llt = mat
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Numerical(format!("shifted operator is not positive definite: {e}")))?;
        Ok(Self { llt })
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let n = y.len();
        self.llt.solve_in_place(MatMut::from_column_major_slice_mut(&mut y, n, 1));
        y
    }
}

/// The `count` largest eigenpairs of `op`, given `sigma` strictly above its
/// spectrum.
pub fn largest_eigenpairs<O: SymmetricOperator>(
    op: &O,
    sigma: f64,
    count: usize,
    config: &LanczosConfig,
) -> Result<EigenPairs> {
    let n = op.dim();
    if count == 0 || n == 0 {
        return Err(Error::InvalidInput("at least one eigenpair on a non-empty operator".into()));
    }
    let count = count.min(n);
    let inverse = ShiftInverse::new(op, sigma)?;

    let m = config.krylov_dim.max(count + 16).min(n);
    let keep = (count + 8).min(m.saturating_sub(1)).max(count.min(m));

    // Deterministic start without any mirror symmetry, so both parities are
    // reachable.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2c);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let s = norm(&start);
    start.iter_mut().for_each(|x| *x /= s);

    let mut basis: Vec<Vec<f64>> = vec![start];
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0usize;
    let mut scratch = vec![0.0; n];

    loop {
        // Expand until the basis holds `m` applied vectors, or the Krylov
        // space becomes invariant.
        let mut exhausted = false;
        while images.len() < m && images.len() < basis.len() {
            let w = inverse.apply(&basis[images.len()]);
            iterations += 1;
            let scale = norm(&w);
            let mut r = w.clone();
            images.push(w);
            if basis.len() < n {
                let rn = orthogonalize(&mut r, &basis);
                if rn > 1e-12 * scale {
                    r.iter_mut().for_each(|x| *x /= rn);
                    basis.push(r);
                } else {
                    exhausted = true;
                }
            } else {
                exhausted = true;
            }
            if exhausted {
                break;
            }
        }

        let k = images.len();
        let mut h = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let wanted = count.min(k);
        let mut values = Vec::with_capacity(wanted);
        let mut vectors = Vec::with_capacity(wanted);
        let mut residuals = Vec::with_capacity(wanted);
        let mut worst = 0.0f64;
        for &idx in order.iter().take(wanted) {
            let mu = eig.eigenvalues[idx];
            let col = eig.eigenvectors.column(idx);
            let mut y = combine(&basis[..k], col.iter().copied(), n);
            let yn = norm(&y);
            y.iter_mut().for_each(|x| *x /= yn);
            let lambda = sigma - 1.0 / mu;
            op.apply(&y, &mut scratch);
            axpy(-lambda, &y, &mut scratch);
            let rel = norm(&scratch) / lambda.abs().max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
            values.push(lambda);
            vectors.push(y);
            residuals.push(rel);
        }

        if worst <= config.tolerance || (exhausted && k >= basis.len()) {
            if worst > config.tolerance {
                return Err(Error::Convergence { iterations, residual: worst });
            }
            return Ok(EigenPairs { values, vectors, residuals, iterations });
        }
        if iterations >= config.max_iterations {
            return Err(Error::Convergence { iterations, residual: worst });
        }

        // Thick restart: keep the leading Ritz vectors and their images, then
        // continue from the unapplied residual direction.
        let next = if basis.len() > k { basis.pop() } else { None };
        let kept = keep.min(k);
        let mut new_basis = Vec::with_capacity(m + 1);
        let mut new_images = Vec::with_capacity(m);
        for &idx in order.iter().take(kept) {
            let col = eig.eigenvectors.column(idx);
            new_basis.push(combine(&basis[..k], col.iter().copied(), n));
            new_images.push(combine(&images[..k], col.iter().copied(), n));
        }
        let mut next = next.unwrap_or_else(|| (0..n).map(|_| rng.random::<f64>() - 0.5).collect());
        let rn = orthogonalize(&mut next, &new_basis);
        next.iter_mut().for_each(|x| *x /= rn);
        new_basis.push(next);
        basis = new_basis;
        images = new_images;
    }
}
