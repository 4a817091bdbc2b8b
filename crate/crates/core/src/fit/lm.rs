//! Levenberg-Marquardt least squares with analytic Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Scalar model `y = f(x; p)`.
pub trait Model {
    fn parameter_count(&self) -> usize;
    fn value(&self, x: f64, p: &[f64]) -> f64;
    /// Writes `df/dp` into `grad`.
    fn gradient(&self, x: f64, p: &[f64], grad: &mut [f64]);
    /// Parameter sets outside the model's domain are never stepped into.
    fn admissible(&self, _p: &[f64]) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Relative step size below which the fit is converged.
    pub step_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { max_iterations: 500, step_tolerance: 1e-10, initial_damping: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub parameters: Vec<f64>,
    /// Weighted sum of squared residuals.
    pub cost: f64,
    /// Inverse of the weighted normal matrix at the solution.
    pub inverse_normal: DMatrix<f64>,
    pub iterations: usize,
}

struct Problem<'a, M: Model> {
    model: &'a M,
    x: &'a [f64],
    y: &'a [f64],
    sigma: Option<&'a [f64]>,
}

impl<M: Model> Problem<'_, M> {
    fn weight(&self, i: usize) -> f64 {
        self.sigma.map_or(1.0, |s| 1.0 / s[i])
    }

    fn cost(&self, p: &[f64]) -> f64 {
        (0..self.x.len())
            .map(|i| {
                let r = (self.y[i] - self.model.value(self.x[i], p)) * self.weight(i);
                r * r
            })
            .sum()
    }

    fn linearise(&self, p: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let n = p.len();
        let mut jtj = DMatrix::zeros(n, n);
        let mut jtr = DVector::zeros(n);
        let mut g = vec![0.0; n];
        for i in 0..self.x.len() {
            let w = self.weight(i);
            self.model.gradient(self.x[i], p, &mut g);
            let r = (self.y[i] - self.model.value(self.x[i], p)) * w;
            for a in 0..n {
                jtr[a] += g[a] * w * r;
                for b in 0..=a {
                    jtj[(a, b)] += g[a] * g[b] * w * w;
                }
            }
        }
        jtj.fill_upper_triangle_with_lower_triangle();
        (jtj, jtr)
    }
}

/// Symmetric pseudo-inverse via eigen-decomposition.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let largest = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let cut = largest * 1e-13 * m.nrows() as f64;
    let inv = eig.eigenvalues.map(|v| if v.abs() > cut { 1.0 / v } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// Minimises `sum(((y - f(x; p)) / sigma)^2)`; uniform weights when
/// `sigma` is `None`.
pub fn levenberg_marquardt<M: Model>(
    model: &M,
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    initial: &[f64],
    cfg: &LmConfig,
) -> Result<LmOutcome> {
    let n = model.parameter_count();
    if initial.len() != n {
        return Err(Error::InvalidInput(format!("expected {n} initial parameters, got {}", initial.len())));
    }
    if x.len() != y.len() || sigma.is_some_and(|s| s.len() != x.len()) {
        return Err(Error::InvalidInput("data columns differ in length".into()));
    }
    if x.len() < n {
        return Err(Error::InvalidInput(format!("{} points cannot constrain {n} parameters", x.len())));
    }
    if sigma.is_some_and(|s| s.iter().any(|&v| !(v > 0.0 && v.is_finite()))) {
        return Err(Error::InvalidInput("uncertainties must be positive".into()));
    }
    let problem = Problem { model, x, y, sigma };
    let mut p = initial.to_vec();
    let mut cost = problem.cost(&p);
    if !cost.is_finite() {
        return Err(Error::Numerical("model is not finite at the initial guess".into()));
    }
    let mut lambda = cfg.initial_damping;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let (jtj, jtr) = problem.linearise(&p);
        if jtr.amax() == 0.0 {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e30 {
            let mut damped = jtj.clone();
            for a in 0..n {
                damped[(a, a)] += lambda * jtj[(a, a)].max(1e-12);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial_cost = if model.admissible(&trial) { problem.cost(&trial) } else { f64::INFINITY };
            if trial_cost.is_finite() && trial_cost <= cost {
                let small =
                    step.iter().zip(&p).all(|(s, v)| s.abs() <= cfg.step_tolerance * (v.abs() + cfg.step_tolerance));
                let stalled = cost - trial_cost <= 1e-15 * cost;
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                converged = small || stalled;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step exists at any damping: a stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::FitConvergence { iterations, cost, best: p });
    }
    let (jtj, _) = problem.linearise(&p);
    Ok(LmOutcome { parameters: p, cost, inverse_normal: pseudo_inverse(&jtj), iterations })
}
