//! The 0/1 loss and the exponential-CDF log-likelihood, their derivatives in
//! `a`, and the translated variants.
//!
//! With `f = A a` the likelihood is
//!
//! ```text
//! L(a) = sum_i  y_i log(1 - exp(-lambda f_i)) - (1 - y_i) lambda f_i
//! ```
//!
//! which is concave in `a`; only positively labeled rows contribute to the
//! Hessian.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fan::{CoefficientVector, Fan};
use crate::numeric::{inv_expm1, log1mexp, pairwise_sum};
use crate::star::{label_of, sub, ParamVector};

/// Points in `R^d` with 0/1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        check_dim(points.len(), labels.len())?;
        let Some(first) = points.first() else {
            return Err(Error::InvalidParameter("dataset is empty".into()));
        };
        let d = first.len();
        for p in &points {
            check_dim(d, p.len())?;
        }
        if let Some((row, l)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(Error::Label {
                row: row + 1,
                value: l.to_string(),
            });
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Same points with every label flipped.
    pub fn complemented(&self) -> Self {
        Self {
            points: self.points.clone(),
            labels: self.labels.iter().map(|l| 1 - l).collect(),
        }
    }

    /// Subset by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.points[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    /// Every point shifted by `-t`.
    pub fn shifted(&self, t: &[f64]) -> Result<Self> {
        check_dim(self.dim(), t.len())?;
        Ok(Self {
            points: self.points.iter().map(|p| sub(p, t)).collect(),
            labels: self.labels.clone(),
        })
    }
}

/// The matrix whose row `i` is `[x_i]`, stored row-sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: Vec<CoefficientVector>,
    n: usize,
}

impl DataMatrix {
    pub fn new(n: usize, rows: Vec<CoefficientVector>) -> Result<Self> {
        for r in &rows {
            check_dim(n, r.len())?;
        }
        Ok(Self { rows, n })
    }

    pub fn rows(&self) -> &[CoefficientVector] {
        &self.rows
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `A a`, i.e. `f_a` at every data point.
    pub fn apply(&self, a: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.dot(a)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows.len(), self.n);
        for (i, r) in self.rows.iter().enumerate() {
            for (j, v) in r.iter() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// Rows whose label equals `label`, densified.
    pub fn dense_rows_with_label(&self, labels: &[u8], label: u8) -> DMatrix<f64> {
        let picked: Vec<&CoefficientVector> = self
            .rows
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == label)
            .map(|(r, _)| r)
            .collect();
        let mut out = DMatrix::zeros(picked.len(), self.n);
        for (i, r) in picked.iter().enumerate() {
            for (j, v) in r.iter() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// False positives, false negatives and per-point predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossReport {
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub err: usize,
    pub per_point: Vec<u8>,
}

impl LossReport {
    fn from_predictions(predictions: Vec<u8>, labels: &[u8]) -> Self {
        let mut fp = 0;
        let mut fn_ = 0;
        for (&p, &y) in predictions.iter().zip(labels) {
            match (p, y) {
                (1, 0) => fp += 1,
                (0, 1) => fn_ += 1,
                _ => {}
            }
        }
        Self {
            fp,
            fn_,
            err: fp + fn_,
            per_point: predictions,
        }
    }

    pub fn accuracy(&self) -> f64 {
        if self.per_point.is_empty() {
            return 1.0;
        }
        1.0 - self.err as f64 / self.per_point.len() as f64
    }
}

pub fn data_matrix(fan: &Fan, data: &LabeledDataset) -> Result<DataMatrix> {
    check_dim(fan.dim(), data.dim())?;
    let rows = data
        .points()
        .iter()
        .enumerate()
        .map(|(i, x)| fan.coords(x).map_err(|e| e.at_point(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DataMatrix { rows, n: fan.n() })
}

fn check_inputs(a_mat: &DataMatrix, labels: &[u8], a: &[f64]) -> Result<()> {
    check_dim(a_mat.m(), labels.len())?;
    check_dim(a_mat.n(), a.len())
}

pub fn zero_one_loss(a_mat: &DataMatrix, labels: &[u8], a: &ParamVector) -> Result<LossReport> {
    check_inputs(a_mat, labels, a.as_slice())?;
    let predictions = a_mat
        .apply(a.as_slice())
        .into_iter()
        .map(label_of)
        .collect();
    Ok(LossReport::from_predictions(predictions, labels))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must be positive"
        )))
    }
}

/// Values `f = A a`, failing if a positively labeled point has `f = 0`.
fn scores(a_mat: &DataMatrix, labels: &[u8], a: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_inputs(a_mat, labels, a)?;
    check_lambda(lambda)?;
    let f = a_mat.apply(a);
    if let Some(index) = f
        .iter()
        .zip(labels)
        .position(|(&fi, &y)| y == 1 && fi <= 0.0)
    {
        return Err(Error::UndefinedAtZero { index });
    }
    Ok(f)
}

fn likelihood_from_scores(f: &[f64], labels: &[u8], lambda: f64) -> f64 {
    let terms: Vec<f64> = f
        .iter()
        .zip(labels)
        .map(|(&fi, &y)| {
            if y == 1 {
                log1mexp(lambda * fi)
            } else {
                -lambda * fi
            }
        })
        .collect();
    pairwise_sum(&terms)
}

pub fn log_likelihood(
    a_mat: &DataMatrix,
    labels: &[u8],
    a: &ParamVector,
    lambda: f64,
) -> Result<f64> {
    log_likelihood_raw(a_mat, labels, a.as_slice(), lambda)
}

/// [`log_likelihood`] on a raw slice; the optimizer works with unchecked
/// iterates.
pub(crate) fn log_likelihood_raw(
    a_mat: &DataMatrix,
    labels: &[u8],
    a: &[f64],
    lambda: f64,
) -> Result<f64> {
    let f = scores(a_mat, labels, a, lambda)?;
    Ok(likelihood_from_scores(&f, labels, lambda))
}

pub fn log_likelihood_grad(
    a_mat: &DataMatrix,
    labels: &[u8],
    a: &ParamVector,
    lambda: f64,
) -> Result<Vec<f64>> {
    log_likelihood_grad_raw(a_mat, labels, a.as_slice(), lambda)
}

pub(crate) fn log_likelihood_grad_raw(
    a_mat: &DataMatrix,
    labels: &[u8],
    a: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    let f = scores(a_mat, labels, a, lambda)?;
    let mut grad = vec![0.0; a_mat.n()];
    for ((row, &fi), &y) in a_mat.rows().iter().zip(&f).zip(labels) {
        let w = if y == 1 {
            lambda * inv_expm1(lambda * fi)
        } else {
            -lambda
        };
        for (j, v) in row.iter() {
            grad[j] += w * v;
        }
    }
    Ok(grad)
}

pub fn log_likelihood_hess(
    a_mat: &DataMatrix,
    labels: &[u8],
    a: &ParamVector,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    log_likelihood_hess_raw(a_mat, labels, a.as_slice(), lambda)
}

pub(crate) fn log_likelihood_hess_raw(
    a_mat: &DataMatrix,
    labels: &[u8],
    a: &[f64],
    lambda: f64,
) -> Result<DMatrix<f64>> {
    let f = scores(a_mat, labels, a, lambda)?;
    let n = a_mat.n();
    let mut hess = DMatrix::zeros(n, n);
    for ((row, &fi), &y) in a_mat.rows().iter().zip(&f).zip(labels) {
        if y == 0 {
            continue;
        }
        // e^{-z} / (1 - e^{-z})^2 = q (1 + q) with q = 1 / expm1(z)
        let q = inv_expm1(lambda * fi);
        let w = -lambda * lambda * q * (1.0 + q);
        for (j, vj) in row.iter() {
            for (k, vk) in row.iter() {
                hess[(j, k)] += w * vj * vk;
            }
        }
    }
    Ok(hess)
}

/// 0/1 loss of the classifier translated by `t`.
pub fn translational_zero_one_loss(
    fan: &Fan,
    data: &LabeledDataset,
    a: &ParamVector,
    t: &[f64],
) -> Result<LossReport> {
    let shifted = data.shifted(t)?;
    zero_one_loss(&data_matrix(fan, &shifted)?, data.labels(), a)
}

pub fn translational_log_likelihood(
    fan: &Fan,
    data: &LabeledDataset,
    a: &ParamVector,
    t: &[f64],
    lambda: f64,
) -> Result<f64> {
    let shifted = data.shifted(t)?;
    log_likelihood(&data_matrix(fan, &shifted)?, data.labels(), a, lambda)
}

/// 0/1 loss at the joint parameter `(a, t)`; the entry point for scans over
/// shape and translation together.
pub fn joint_loss(
    fan: &Fan,
    data: &LabeledDataset,
    a: &ParamVector,
    t: &[f64],
) -> Result<LossReport> {
    translational_zero_one_loss(fan, data, a, t)
}
