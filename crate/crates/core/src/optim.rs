//! Maximum-likelihood fitting of the star parameters.
//!
//! The log-likelihood is concave in `a`, so any stationary point of the
//! feasible-interior iteration is a global maximizer. The solver is a
//! projected Newton ascent on `a >= floor` with a backtracking (Armijo)
//! line search. When the Hessian restricted to the free coordinates is not
//! negative definite it falls back to Barzilai-Borwein gradient steps.
//!
//! Two structural situations are decided up front from the sign pattern of
//! the data matrix:
//!
//! * a column with no positively labeled support has a gradient of
//!   `-lambda * (column sum)` everywhere, so its optimum is `a_j -> 0`; the
//!   coordinate is pinned to the floor and reported degenerate;
//! * a column with positive support but no negative support has a strictly
//!   positive gradient everywhere, so the supremum is only approached as
//!   `a_j -> infinity`; such fits end with [`FitStatus::NonfiniteMaximum`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::loss::{
    log_likelihood_grad_raw, log_likelihood_hess_raw, log_likelihood_raw, zero_one_loss,
    DataMatrix, LossReport,
};
use crate::numeric::norm_inf;
use crate::star::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Convergence threshold on the sup-norm of the free gradient.
    pub tol: f64,
    pub max_iter: usize,
    /// Lower bound kept on every coordinate of `a`.
    pub floor: f64,
    /// Iterates beyond this sup-norm are treated as escaping to infinity.
    pub radius: f64,
    /// Per-iteration objective gain regarded as no progress.
    pub stall: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            floor: 1e-12,
            radius: 1e6,
            stall: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    /// Interior stationary point found.
    Converged,
    /// Stationary on the free coordinates with some coordinates at the floor.
    Degenerate,
    /// No finite maximizer exists; some coordinate grows without bound.
    NonfiniteMaximum,
    /// No positively labeled point has a nonzero row; every coordinate is
    /// pinned to the floor.
    NoPositiveMass,
    /// Line search could not improve the objective before convergence.
    Stalled,
    MaxIterations,
}

impl FitStatus {
    /// Whether the fit reached an optimum (possibly on the boundary).
    pub fn is_optimal(self) -> bool {
        matches!(
            self,
            Self::Converged | Self::Degenerate | Self::NoPositiveMass
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a_star: ParamVector,
    pub objective: f64,
    pub iterations: usize,
    /// Sup-norm of the gradient over coordinates not held at the floor.
    pub grad_norm: f64,
    pub degenerate_rays: Vec<usize>,
    /// Columns without positively labeled support.
    pub no_positive_mass: Vec<usize>,
    pub status: FitStatus,
    /// Objective after every accepted step, starting with the initial value.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniquenessCertificate {
    pub rank_pos: usize,
    pub rank_neg: usize,
    pub n: usize,
    pub strictly_concave: bool,
    pub unique_max: bool,
}

/// Column-pivoted QR rank with threshold `1e-10 * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sigma_max = m.clone().singular_values().max();
    if sigma_max == 0.0 {
        return 0;
    }
    let threshold = 1e-10 * sigma_max;
    let r = m.clone().col_piv_qr().r();
    (0..r.nrows().min(r.ncols()))
        .filter(|&k| r[(k, k)].abs() > threshold)
        .count()
}

pub fn uniqueness_certificate(a_mat: &DataMatrix, labels: &[u8]) -> Result<UniquenessCertificate> {
    check_dim(a_mat.m(), labels.len())?;
    let rank_pos = numerical_rank(&a_mat.dense_rows_with_label(labels, 1));
    let rank_neg = numerical_rank(&a_mat.dense_rows_with_label(labels, 0));
    let n = a_mat.n();
    Ok(UniquenessCertificate {
        rank_pos,
        rank_neg,
        n,
        strictly_concave: rank_pos == n,
        unique_max: rank_pos == n && rank_neg == n,
    })
}

/// Fits from the all-ones start.
pub fn fit_mle(
    a_mat: &DataMatrix,
    labels: &[u8],
    lambda: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_mle_from(a_mat, labels, lambda, opts, &vec![1.0; a_mat.n()])
}

pub fn fit_mle_from(
    a_mat: &DataMatrix,
    labels: &[u8],
    lambda: f64,
    opts: &FitOptions,
    init: &[f64],
) -> Result<FitResult> {
    check_dim(a_mat.m(), labels.len())?;
    check_dim(a_mat.n(), init.len())?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    if !(opts.floor > 0.0 && opts.tol > 0.0 && opts.radius > opts.floor) {
        return Err(Error::InvalidParameter(
            "solver options need floor > 0, tol > 0, radius > floor".into(),
        ));
    }
    for (i, (row, &y)) in a_mat.rows().iter().zip(labels).enumerate() {
        if y == 1 && row.support().is_empty() {
            return Err(Error::UndefinedAtZero { index: i });
        }
    }

    let n = a_mat.n();
    let mut pos_mass = vec![0.0; n];
    let mut neg_mass = vec![0.0; n];
    for (row, &y) in a_mat.rows().iter().zip(labels) {
        let target = if y == 1 { &mut pos_mass } else { &mut neg_mass };
        for (j, v) in row.iter() {
            target[j] += v;
        }
    }
    let pinned: Vec<bool> = pos_mass.iter().map(|&p| p == 0.0).collect();
    let unbounded = (0..n).any(|j| pos_mass[j] > 0.0 && neg_mass[j] == 0.0);
    let no_positive_mass: Vec<usize> = (0..n).filter(|&j| pinned[j]).collect();

    let mut a: Vec<f64> = init
        .iter()
        .zip(&pinned)
        .map(|(&v, &p)| if p { opts.floor } else { v.max(opts.floor) })
        .collect();

    let finish = |a: Vec<f64>, objective: f64, iterations, grad_norm, status, trace| {
        let degenerate_rays = (0..n).filter(|&j| a[j] <= opts.floor).collect();
        Ok(FitResult {
            a_star: ParamVector::new(a)?,
            objective,
            iterations,
            grad_norm,
            degenerate_rays,
            no_positive_mass: no_positive_mass.clone(),
            status,
            trace,
        })
    };

    let mut value = log_likelihood_raw(a_mat, labels, &a, lambda)?;
    let mut trace = vec![value];
    if pinned.iter().all(|&p| p) {
        return finish(a, value, 0, 0.0, FitStatus::NoPositiveMass, trace);
    }

    let mut prev_step: Option<(Vec<f64>, Vec<f64>)> = None; // (a, grad) for BB
    let mut stalls = 0;
    for iter in 0..opts.max_iter {
        let grad = log_likelihood_grad_raw(a_mat, labels, &a, lambda)?;
        let free: Vec<usize> = (0..n)
            .filter(|&j| !pinned[j] && !(a[j] <= opts.floor && grad[j] <= 0.0))
            .collect();
        let grad_norm = free.iter().fold(0.0_f64, |m, &j| m.max(grad[j].abs()));

        let stationary = || {
            if unbounded {
                FitStatus::NonfiniteMaximum
            } else if free.len() < n {
                FitStatus::Degenerate
            } else {
                FitStatus::Converged
            }
        };
        if grad_norm <= opts.tol {
            return finish(a, value, iter, grad_norm, stationary(), trace);
        }
        if unbounded && (norm_inf(&a) > opts.radius || stalls >= 3) {
            return finish(
                a,
                value,
                iter,
                grad_norm,
                FitStatus::NonfiniteMaximum,
                trace,
            );
        }

        let newton = newton_direction(a_mat, labels, &a, lambda, &grad, &free)?;
        if let Some(d) = &newton {
            // predicted gain below the rounding level of the objective
            let decrement: f64 = free.iter().zip(d).map(|(&j, v)| grad[j] * v).sum();
            if !unbounded && 0.5 * decrement <= f64::EPSILON * value.abs().max(1.0) {
                return finish(a, value, iter, grad_norm, stationary(), trace);
            }
        }
        let direction =
            newton.unwrap_or_else(|| bb_direction(&a, &grad, &free, prev_step.as_ref()));

        // backtracking with projection onto a >= floor
        let slope_at =
            |cand: &[f64]| -> f64 { free.iter().map(|&j| grad[j] * (cand[j] - a[j])).sum() };
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand = a.clone();
            for (k, &j) in free.iter().enumerate() {
                cand[j] = (a[j] + step * direction[k]).max(opts.floor);
            }
            if let Ok(v) = log_likelihood_raw(a_mat, labels, &cand, lambda) {
                if v.is_finite()
                    && (v >= value + 1e-4 * slope_at(&cand) || (step == 1.0 && v >= value))
                {
                    accepted = Some((cand, v));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            let status = if unbounded {
                FitStatus::NonfiniteMaximum
            } else {
                FitStatus::Stalled
            };
            return finish(a, value, iter, grad_norm, status, trace);
        };
        if v - value < opts.stall {
            stalls += 1;
        } else {
            stalls = 0;
        }
        prev_step = Some((a, grad));
        a = cand;
        value = v;
        trace.push(v);
    }

    let grad = log_likelihood_grad_raw(a_mat, labels, &a, lambda)?;
    let grad_norm = (0..n)
        .filter(|&j| !pinned[j] && !(a[j] <= opts.floor && grad[j] <= 0.0))
        .fold(0.0_f64, |m, j| m.max(grad[j].abs()));
    let status = if grad_norm <= opts.tol {
        if unbounded {
            FitStatus::NonfiniteMaximum
        } else if (0..n).any(|j| a[j] <= opts.floor) {
            FitStatus::Degenerate
        } else {
            FitStatus::Converged
        }
    } else if unbounded {
        FitStatus::NonfiniteMaximum
    } else {
        FitStatus::MaxIterations
    };
    finish(a, value, opts.max_iter, grad_norm, status, trace)
}

/// Newton step on the free coordinates, or `None` if the restricted
/// Hessian is not (numerically) negative definite.
fn newton_direction(
    a_mat: &DataMatrix,
    labels: &[u8],
    a: &[f64],
    lambda: f64,
    grad: &[f64],
    free: &[usize],
) -> Result<Option<Vec<f64>>> {
    let hess = log_likelihood_hess_raw(a_mat, labels, a, lambda)?;
    let k = free.len();
    let neg = DMatrix::from_fn(k, k, |r, c| -hess[(free[r], free[c])]);
    let scale = neg.diagonal().max();
    if scale.is_nan() || scale <= 0.0 {
        return Ok(None);
    }
    let Some(chol) = neg.clone().cholesky() else {
        return Ok(None);
    };
    // reject nearly singular factors
    let l_diag = chol.l_dirty().diagonal();
    let min_pivot = l_diag.iter().fold(f64::INFINITY, |m, &v| m.min(v * v));
    if min_pivot < 1e-14 * scale {
        return Ok(None);
    }
    let g = nalgebra::DVector::from_iterator(k, free.iter().map(|&j| grad[j]));
    let d = chol.solve(&g);
    let ascent: f64 = d.iter().zip(g.iter()).map(|(p, q)| p * q).sum();
    if ascent.is_nan() || ascent <= 0.0 || d.iter().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    Ok(Some(d.iter().copied().collect()))
}

fn bb_direction(
    a: &[f64],
    grad: &[f64],
    free: &[usize],
    prev: Option<&(Vec<f64>, Vec<f64>)>,
) -> Vec<f64> {
    let g_norm = free.iter().fold(0.0_f64, |m, &j| m.max(grad[j].abs()));
    let mut alpha = if g_norm > 0.0 { 1.0 / g_norm } else { 1.0 };
    if let Some((a_prev, g_prev)) = prev {
        let mut ss = 0.0;
        let mut sy = 0.0;
        for &j in free {
            let s = a[j] - a_prev[j];
            let y = grad[j] - g_prev[j];
            ss += s * s;
            sy += s * y;
        }
        // concave objective: s.y < 0
        if sy < 0.0 && ss > 0.0 {
            alpha = -ss / sy;
        }
    }
    free.iter().map(|&j| alpha * grad[j]).collect()
}

/// One point of a rate-parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub lambda: f64,
    pub fit: FitResult,
    pub report: LossReport,
}

/// Fits every `lambda` in ascending order. Each fit is warm-started from the
/// previous optimum scaled by `lambda_prev / lambda`, which is the exact
/// optimum when the maximizer is unique. Failures are recorded per entry and
/// the sweep continues.
pub fn lambda_sweep(
    a_mat: &DataMatrix,
    labels: &[u8],
    lambdas: &[f64],
    opts: &FitOptions,
) -> Result<Vec<Result<SweepEntry>>> {
    if lambdas
        .windows(2)
        .any(|w| w[0].is_nan() || w[1].is_nan() || w[0] >= w[1])
    {
        return Err(Error::InvalidParameter(
            "lambdas must be strictly ascending".into(),
        ));
    }
    let mut out = Vec::with_capacity(lambdas.len());
    let mut warm: Option<(f64, Vec<f64>)> = None;
    for &lambda in lambdas {
        let init = match &warm {
            Some((prev, a)) => a.iter().map(|v| v * prev / lambda).collect(),
            None => vec![1.0; a_mat.n()],
        };
        let entry = fit_mle_from(a_mat, labels, lambda, opts, &init).and_then(|fit| {
            let report = zero_one_loss(a_mat, labels, &fit.a_star)?;
            Ok(SweepEntry {
                lambda,
                fit,
                report,
            })
        });
        if let Ok(e) = &entry {
            if e.fit.status.is_optimal() {
                warm = Some((lambda, e.fit.a_star.as_slice().to_vec()));
            }
        }
        out.push(entry);
    }
    Ok(out)
}
