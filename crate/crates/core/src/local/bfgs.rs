use nalgebra::{DMatrix, DVector};

use crate::optim::OptimError;

/// Sufficient-decrease constant of the backtracking line search.
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const MIN_STEP: f64 = 1e-12;

/// Inverse-Hessian update
/// `H⁺ = (I − zy'/y'z) H (I − yz'/y'z) + zz'/y'z`.
///
/// Returns `H` unchanged when `y'z ≤ 1e−10·|y||z|`, which keeps the
/// approximation positive definite.
pub fn bfgs_update(h: &DMatrix<f64>, z: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
    let yz = y.dot(z);
    if !(yz > 1e-10 * y.norm() * z.norm()) {
        return h.clone();
    }
    let rho = 1.0 / yz;
    let n = z.len();
    let left = DMatrix::identity(n, n) - z * y.transpose() * rho;
    let right = DMatrix::identity(n, n) - y * z.transpose() * rho;
    let mut next = &left * h * &right + z * z.transpose() * rho;
    // symmetrize away rounding drift
    next = (&next + next.transpose()) * 0.5;
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Objective value after every accepted step, starting value first.
    pub trace: Vec<f64>,
}

/// Quasi-Newton descent from `start` with Armijo backtracking.
///
/// `f` writes the gradient and returns the value; a non-finite value marks a
/// point outside the domain and makes the line search back off. Stops when
/// `|g| < tol`, the accepted step is shorter than `1e−12`, or after
/// `max_iters` iterations.
pub fn bfgs_minimize<F>(mut f: F, start: &[f64], tol: f64, max_iters: usize) -> Result<BfgsOutcome, OptimError>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = start.len();
    let mut x = DVector::from_column_slice(start);
    let mut g = DVector::zeros(n);
    let mut fx = f(x.as_slice(), g.as_mut_slice());
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(OptimError::NonFiniteStart);
    }
    let mut evaluations = 1;
    let mut h = DMatrix::identity(n, n);
    let mut trace = vec![fx];
    let mut iterations = 0;
    let mut trial_g = DVector::zeros(n);

    while iterations < max_iters && g.norm() >= tol {
        iterations += 1;
        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if !(slope < 0.0) {
            h = DMatrix::identity(n, n);
            p = -g.clone();
            slope = -g.norm_squared();
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &x + &p * alpha;
            let ft = f(trial.as_slice(), trial_g.as_mut_slice());
            evaluations += 1;
            if ft.is_finite() && ft <= fx + ARMIJO * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, fnext)) = accepted else {
            break;
        };
        let z = &next - &x;
        let y = &trial_g - &g;
        let step = z.norm();
        h = bfgs_update(&h, &z, &y);
        x = next;
        fx = fnext;
        g.copy_from(&trial_g);
        trace.push(fx);
        if step < MIN_STEP {
            break;
        }
    }
    Ok(BfgsOutcome {
        point: x.as_slice().to_vec(),
        value: fx,
        iterations,
        evaluations,
        trace,
    })
}
