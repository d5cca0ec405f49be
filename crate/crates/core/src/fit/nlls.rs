//! Bounded Levenberg-Marquardt with a central-difference Jacobian.
//!
//! Minimises `½ Σ rᵢ(p)²`. Parameters should be scaled by the caller so that
//! unit changes are meaningful: the finite-difference step is
//! `fd_rel_step · max(|pⱼ|, 1)`.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// A residual vector `r(p)` of fixed length.
pub trait LeastSquaresProblem {
    fn num_residuals(&self) -> usize;
    fn residuals(&self, params: &[f64], out: &mut [f64]);
}

/// Adapter turning a closure into a [`LeastSquaresProblem`].
pub struct FnProblem<F> {
    m: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnProblem<F> {
    pub fn new(num_residuals: usize, f: F) -> Self {
        FnProblem {
            m: num_residuals,
            f,
        }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LeastSquaresProblem for FnProblem<F> {
    fn num_residuals(&self) -> usize {
        self.m
    }

    fn residuals(&self, params: &[f64], out: &mut [f64]) {
        (self.f)(params, out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Bounds {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    fn clamp(&self, p: &mut [f64]) {
        for ((v, lo), hi) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((v, lo), hi)| *v >= *lo && *v <= *hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NllsOptions {
    pub max_iterations: usize,
    /// Converged when every gradient component, relative to its Jacobian
    /// column norm and the residual norm, is below this.
    pub gradient_tol: f64,
    pub step_tol: f64,
    pub cost_tol: f64,
    pub fd_rel_step: f64,
    pub initial_damping: f64,
    /// Scale the covariance by the reduced chi-square `2·cost/(m − n)`.
    /// Turn off when residuals are already normalised by known standard
    /// deviations and an absolute covariance is wanted.
    pub scale_covariance: bool,
}

impl Default for NllsOptions {
    fn default() -> Self {
        NllsOptions {
            max_iterations: 200,
            gradient_tol: 1e-10,
            step_tol: 1e-12,
            cost_tol: 1e-15,
            fd_rel_step: 6e-6,
            initial_damping: 1e-3,
            scale_covariance: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ZeroResidual,
    Gradient,
    Step,
    Cost,
    /// No step reduced the cost even at very large damping.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NllsSolution {
    pub params: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// `√diag(covariance)`.
    pub uncertainties: Vec<f64>,
    /// `½ Σ rᵢ²` at `params`.
    pub cost: f64,
    pub residual_rms: f64,
    /// Largest scaled gradient component at `params`.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub termination: Option<Termination>,
    /// `JᵀJ` was numerically singular; the covariance is a pseudo-inverse.
    pub singular: bool,
}

/// Least-squares fit of `problem` starting from `init` inside `bounds`.
///
/// Fails with [`Error::Convergence`] (carrying the best point found) when
/// `max_iterations` is exhausted.
pub fn nlls_fit<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    init: &[f64],
    bounds: &Bounds,
    options: &NllsOptions,
) -> Result<NllsSolution> {
    let n = init.len();
    let m = problem.num_residuals();
    if bounds.lower.len() != n || bounds.upper.len() != n {
        return Err(Error::domain(
            "bounds",
            n as f64,
            "length differs from parameter count",
        ));
    }
    if !bounds.contains(init) {
        return Err(Error::domain(
            "initial parameters",
            f64::NAN,
            "outside bounds",
        ));
    }
    if m < n {
        return Err(Error::InsufficientData { needed: n, got: m });
    }

    let mut p = init.to_vec();
    let mut r = vec![0.0; m];
    problem.residuals(&p, &mut r);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(
            "residual",
            f64::NAN,
            "non-finite at initial point",
        ));
    }
    let mut cost = half_sq(&r);
    let mut lambda = options.initial_damping;
    let mut nu = 2.0;
    let mut scale = vec![0.0_f64; n];
    let mut termination = None;
    let mut iterations = 0;
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; m];

    'outer: while iterations < options.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            termination = Some(Termination::ZeroResidual);
            break;
        }
        let jac = jacobian(problem, &p, &r, bounds, options.fd_rel_step);
        let rv = DVector::from_column_slice(&r);
        let grad = jac.tr_mul(&rv);
        let jtj = jac.tr_mul(&jac);
        if scaled_gradient(&jac, &grad, &r) <= options.gradient_tol {
            termination = Some(Termination::Gradient);
            break;
        }
        for j in 0..n {
            scale[j] = scale[j].max(jtj[(j, j)]).max(f64::MIN_POSITIVE);
        }

        loop {
            let mut lhs = jtj.clone();
            for j in 0..n {
                lhs[(j, j)] += lambda * scale[j];
            }
            let step = match lhs.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= nu;
                    nu *= 2.0;
                    if lambda > 1e32 {
                        termination = Some(Termination::Stalled);
                        break 'outer;
                    }
                    continue;
                }
            };
            for j in 0..n {
                trial[j] = p[j] + step[j];
            }
            bounds.clamp(&mut trial);
            let taken = DVector::from_iterator(n, (0..n).map(|j| trial[j] - p[j]));
            problem.residuals(&trial, &mut r_trial);
            let new_cost = half_sq(&r_trial);
            let predicted = -(grad.dot(&taken) + 0.5 * taken.dot(&(&jtj * &taken)));
            let actual = cost - new_cost;
            if new_cost.is_finite() && actual > 0.0 && predicted > 0.0 {
                let rho = actual / predicted;
                lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                let step_norm = taken.norm();
                let p_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                std::mem::swap(&mut p, &mut trial);
                std::mem::swap(&mut r, &mut r_trial);
                let old_cost = cost;
                cost = new_cost;
                if step_norm <= options.step_tol * (p_norm + options.step_tol) {
                    termination = Some(Termination::Step);
                    break 'outer;
                }
                if actual <= options.cost_tol * old_cost && predicted <= options.cost_tol * old_cost
                {
                    termination = Some(Termination::Cost);
                    break 'outer;
                }
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e32 {
                termination = Some(Termination::Stalled);
                break 'outer;
            }
        }
    }

    let solution = finish(
        problem,
        p,
        r,
        cost,
        iterations,
        termination,
        bounds,
        options,
    );
    match termination {
        Some(_) => Ok(solution),
        None => Err(Error::Convergence {
            iterations,
            best: Box::new(solution),
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    p: Vec<f64>,
    r: Vec<f64>,
    cost: f64,
    iterations: usize,
    termination: Option<Termination>,
    bounds: &Bounds,
    options: &NllsOptions,
) -> NllsSolution {
    let n = p.len();
    let m = r.len();
    let jac = jacobian(problem, &p, &r, bounds, options.fd_rel_step);
    let grad = jac.tr_mul(&DVector::from_column_slice(&r));
    let gradient_norm = scaled_gradient(&jac, &grad, &r);
    let jtj = jac.tr_mul(&jac);
    let (mut covariance, singular) = invert_normal(jtj);
    if options.scale_covariance && m > n {
        covariance *= 2.0 * cost / (m - n) as f64;
    }
    let uncertainties = (0..n).map(|j| covariance[(j, j)].max(0.0).sqrt()).collect();
    NllsSolution {
        params: p,
        covariance,
        uncertainties,
        cost,
        residual_rms: (2.0 * cost / m as f64).sqrt(),
        gradient_norm,
        iterations,
        termination,
        singular,
    }
}

fn invert_normal(jtj: DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let n = jtj.nrows();
    // Equilibrate before judging conditioning.
    let d: Vec<f64> = (0..n)
        .map(|j| {
            let v = jtj[(j, j)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let dm = DMatrix::from_diagonal(&DVector::from_vec(d));
    let scaled = &dm * &jtj * &dm;
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let singular = !(smin > 1e-14 * smax);
    let inv = if singular {
        svd.pseudo_inverse(1e-14 * smax)
            .unwrap_or_else(|_| DMatrix::zeros(n, n))
    } else {
        scaled.cholesky().map(|c| c.inverse()).unwrap_or_else(|| {
            svd.pseudo_inverse(1e-14 * smax)
                .unwrap_or_else(|_| DMatrix::zeros(n, n))
        })
    };
    (&dm * inv * &dm, singular)
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn scaled_gradient(jac: &DMatrix<f64>, grad: &DVector<f64>, r: &[f64]) -> f64 {
    let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rnorm == 0.0 {
        return 0.0;
    }
    (0..jac.ncols())
        .map(|j| {
            let cn = jac.column(j).norm();
            if cn == 0.0 {
                0.0
            } else {
                grad[j].abs() / (cn * rnorm)
            }
        })
        .fold(0.0, f64::max)
}

fn jacobian<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    p: &[f64],
    r0: &[f64],
    bounds: &Bounds,
    rel_step: f64,
) -> DMatrix<f64> {
    let n = p.len();
    let m = r0.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut q = p.to_vec();
    let mut fwd = vec![0.0; m];
    let mut bwd = vec![0.0; m];
    for j in 0..n {
        let h = rel_step * p[j].abs().max(1.0);
        let can_up = p[j] + h <= bounds.upper[j];
        let can_down = p[j] - h >= bounds.lower[j];
        match (can_up, can_down) {
            (true, true) => {
                q[j] = p[j] + h;
                problem.residuals(&q, &mut fwd);
                q[j] = p[j] - h;
                problem.residuals(&q, &mut bwd);
                for i in 0..m {
                    jac[(i, j)] = (fwd[i] - bwd[i]) / (2.0 * h);
                }
            }
            (true, false) => {
                q[j] = p[j] + h;
                problem.residuals(&q, &mut fwd);
                for i in 0..m {
                    jac[(i, j)] = (fwd[i] - r0[i]) / h;
                }
            }
            (false, _) => {
                q[j] = p[j] - h;
                problem.residuals(&q, &mut bwd);
                for i in 0..m {
                    jac[(i, j)] = (r0[i] - bwd[i]) / h;
                }
            }
        }
        q[j] = p[j];
    }
    jac
}
