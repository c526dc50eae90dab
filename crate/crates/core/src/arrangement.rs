//! Chambers of the data arrangement in parameter space and scans of the
//! translational landscape.
//!
//! Point `x_i` cuts parameter space along the hyperplane `<[x_i], a> = 1`.
//! A sign vector assigns every point to the closed side (`<= 1`, predicted
//! 0) or the open side (`> 1`, predicted 1); its chamber is nonempty inside a
//! box iff the margin program
//!
//! ```text
//! maximize s  subject to  <[x_i], a> <= 1 - s   (closed side)
//!                         <[x_i], a> >= 1 + s   (open side)
//!                         lo <= a <= hi,  s <= 1
//! ```
//!
//! has optimum `s >= strict_eps`. Sign vectors are explored depth-first in
//! lexicographic order and a prefix that is already infeasible prunes its
//! whole subtree.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fan::Fan;
use crate::loss::{
    joint_loss, log_likelihood, zero_one_loss, DataMatrix, LabeledDataset, LossReport,
};
use crate::lp::{LinearProgram, LpSolution, Relation};
use crate::star::{translation_membership, ParamVector};

pub const DEFAULT_POINT_CAP: usize = 20;
pub const STRICT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chamber {
    /// Per point: 0 for the closed side `f <= 1`, 1 for the open side.
    pub sign_vector: Vec<u8>,
    pub witness: ParamVector,
    pub report: LossReport,
    /// Smallest distance `|f_i(witness) - 1|` over the points.
    pub margin: f64,
}

/// Axis-aligned box `lo <= a <= hi` with `lo > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamBox {
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo; n],
            hi: vec![hi; n],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        check_dim(n, self.lo.len())?;
        check_dim(n, self.hi.len())?;
        for (j, (&lo, &hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::InfeasibleBox {
                    coordinate: j,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChamberOptions {
    pub point_cap: usize,
    pub strict_eps: f64,
}

impl Default for ChamberOptions {
    fn default() -> Self {
        Self {
            point_cap: DEFAULT_POINT_CAP,
            strict_eps: STRICT_EPS,
        }
    }
}

struct MarginProblem<'a> {
    a_mat: &'a DataMatrix,
    bounds: &'a ParamBox,
}

impl MarginProblem<'_> {
    /// Maximal margin for the prefix sign vector, with the maximizing `a`.
    fn solve(&self, signs: &[u8]) -> Option<(Vec<f64>, f64)> {
        let n = self.a_mat.n();
        let lo = &self.bounds.lo;
        // variables: u = a - lo (n of them), s_plus, s_minus
        let mut objective = vec![0.0; n + 2];
        objective[n] = 1.0;
        objective[n + 1] = -1.0;
        let mut lp = LinearProgram::maximize(objective);
        for (row, &side) in self.a_mat.rows().iter().zip(signs) {
            let mut coeffs = vec![0.0; n + 2];
            let mut offset = 0.0;
            for (j, v) in row.iter() {
                coeffs[j] = v;
                offset += v * lo[j];
            }
            if side == 0 {
                // <r, u> + s <= 1 - <r, lo>
                coeffs[n] = 1.0;
                coeffs[n + 1] = -1.0;
                lp.add(coeffs, Relation::Le, 1.0 - offset);
            } else {
                // -<r, u> + s <= <r, lo> - 1
                for c in coeffs.iter_mut().take(n) {
                    *c = -*c;
                }
                coeffs[n] = 1.0;
                coeffs[n + 1] = -1.0;
                lp.add(coeffs, Relation::Le, offset - 1.0);
            }
        }
        for j in 0..n {
            let mut coeffs = vec![0.0; n + 2];
            coeffs[j] = 1.0;
            lp.add(coeffs, Relation::Le, self.bounds.hi[j] - lo[j]);
        }
        let mut cap = vec![0.0; n + 2];
        cap[n] = 1.0;
        lp.add(cap, Relation::Le, 1.0);

        match lp.solve() {
            LpSolution::Optimal { x, value } => {
                let a = (0..n).map(|j| (lo[j] + x[j]).max(lo[j])).collect();
                Some((a, value))
            }
            LpSolution::Infeasible | LpSolution::Unbounded => None,
        }
    }
}

/// All nonempty full-dimensional half-open chambers inside `bounds`, in
/// lexicographic order of their sign vectors.
pub fn enumerate_chambers(
    a_mat: &DataMatrix,
    labels: &[u8],
    bounds: &ParamBox,
    opts: &ChamberOptions,
) -> Result<Vec<Chamber>> {
    check_dim(a_mat.m(), labels.len())?;
    if a_mat.m() > opts.point_cap {
        return Err(Error::TooManyPoints {
            points: a_mat.m(),
            cap: opts.point_cap,
        });
    }
    bounds.validate(a_mat.n())?;
    let problem = MarginProblem { a_mat, bounds };
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(a_mat.m());
    explore(&problem, labels, opts, &mut prefix, &mut out)?;
    Ok(out)
}

fn explore(
    problem: &MarginProblem<'_>,
    labels: &[u8],
    opts: &ChamberOptions,
    prefix: &mut Vec<u8>,
    out: &mut Vec<Chamber>,
) -> Result<()> {
    let m = problem.a_mat.m();
    if prefix.len() == m {
        // only reached directly when m == 0
        if let Some((a, s)) = problem.solve(prefix) {
            if s >= opts.strict_eps {
                out.push(make_chamber(problem.a_mat, labels, prefix.clone(), a)?);
            }
        }
        return Ok(());
    }
    for side in [0u8, 1] {
        prefix.push(side);
        if let Some((a, s)) = problem.solve(prefix) {
            if s >= opts.strict_eps {
                if prefix.len() == m {
                    out.push(make_chamber(problem.a_mat, labels, prefix.clone(), a)?);
                } else {
                    explore(problem, labels, opts, prefix, out)?;
                }
            }
        }
        prefix.pop();
    }
    Ok(())
}

fn make_chamber(
    a_mat: &DataMatrix,
    labels: &[u8],
    sign_vector: Vec<u8>,
    a: Vec<f64>,
) -> Result<Chamber> {
    let witness = ParamVector::new(a)?;
    let report = zero_one_loss(a_mat, labels, &witness)?;
    let margin = a_mat
        .apply(witness.as_slice())
        .iter()
        .fold(f64::INFINITY, |m, f| m.min((f - 1.0).abs()));
    debug_assert_eq!(report.per_point, sign_vector);
    Ok(Chamber {
        sign_vector,
        witness,
        report,
        margin,
    })
}

/// Number of chambers per 0/1-loss value.
pub fn level_set_summary(chambers: &[Chamber]) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for c in chambers {
        *out.entry(c.report.err).or_insert(0) += 1;
    }
    out
}

/// 0/1 loss at `steps` equally spaced points from `from` to `to`, both ends
/// included.
pub fn segment_profile(
    a_mat: &DataMatrix,
    labels: &[u8],
    from: &ParamVector,
    to: &ParamVector,
    steps: usize,
) -> Result<Vec<usize>> {
    (0..steps)
        .map(|k| {
            let mu = if steps > 1 {
                k as f64 / (steps - 1) as f64
            } else {
                0.0
            };
            let a = from.lerp(to, mu)?;
            Ok(zero_one_loss(a_mat, labels, &a)?.err)
        })
        .collect()
}

/// A rectangular lattice `[x_min, x_max] x [y_min, y_max]` with spacing
/// `step`. Nodes are `min + k * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn square(min: f64, max: f64, step: f64) -> Self {
        Self {
            x_min: min,
            x_max: max,
            y_min: min,
            y_max: max,
            step,
        }
    }

    fn axis(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0 && max >= min && min.is_finite() && max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bad grid axis [{min}, {max}] with step {step}"
            )));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|k| min + k as f64 * step).collect())
    }

    pub fn xs(&self) -> Result<Vec<f64>> {
        Self::axis(self.x_min, self.x_max, self.step)
    }

    pub fn ys(&self) -> Result<Vec<f64>> {
        Self::axis(self.y_min, self.y_max, self.step)
    }
}

/// A scalar field over a [`GridSpec`]; `values[row][col]` sits at
/// `(xs[col], ys[row])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Vec<T>>,
}

impl<T: Send> Grid<T> {
    /// Evaluates `f(x, y)` at every node, rows in parallel.
    pub fn evaluate<F>(spec: &GridSpec, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<T> + Sync,
    {
        let xs = spec.xs()?;
        let ys = spec.ys()?;
        let values = ys
            .par_iter()
            .map(|&y| xs.iter().map(|&x| f(x, y)).collect::<Result<Vec<T>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { xs, ys, values })
    }
}

/// Translational 0/1 loss over a planar lattice, together with the
/// per-point membership signature (`t` in `x_i - Star(a)`) at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationalGrid {
    pub err: Grid<usize>,
    pub signatures: Grid<Vec<bool>>,
}

pub fn translational_grid(
    fan: &Fan,
    data: &LabeledDataset,
    a: &ParamVector,
    grid: &GridSpec,
) -> Result<TranslationalGrid> {
    if fan.dim() != 2 || data.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: data.dim(),
        });
    }
    let err = Grid::evaluate(grid, |x, y| Ok(joint_loss(fan, data, a, &[x, y])?.err))?;
    let signatures = Grid::evaluate(grid, |x, y| {
        data.points()
            .iter()
            .map(|p| translation_membership(fan, a, p, &[x, y]))
            .collect::<Result<Vec<bool>>>()
    })?;
    Ok(TranslationalGrid { err, signatures })
}

/// 0/1 loss over a planar lattice of parameter vectors (requires `n = 2`).
pub fn parameter_err_grid(
    a_mat: &DataMatrix,
    labels: &[u8],
    grid: &GridSpec,
) -> Result<Grid<usize>> {
    check_dim(2, a_mat.n())?;
    Grid::evaluate(grid, |x, y| {
        Ok(zero_one_loss(a_mat, labels, &ParamVector::new(vec![x, y])?)?.err)
    })
}

/// Log-likelihood over a planar lattice of parameter vectors (`n = 2`).
pub fn parameter_likelihood_grid(
    a_mat: &DataMatrix,
    labels: &[u8],
    lambda: f64,
    grid: &GridSpec,
) -> Result<Grid<f64>> {
    check_dim(2, a_mat.n())?;
    Grid::evaluate(grid, |x, y| {
        log_likelihood(a_mat, labels, &ParamVector::new(vec![x, y])?, lambda)
    })
}

/// Number of 4-connected components of the `true` cells.
pub fn count_components(mask: &[Vec<bool>]) -> usize {
    let rows = mask.len();
    let cols = mask.first().map_or(0, Vec::len);
    let mut seen = vec![vec![false; cols]; rows];
    let mut count = 0;
    for r in 0..rows {
        for c in 0..cols {
            if !mask[r][c] || seen[r][c] {
                continue;
            }
            count += 1;
            seen[r][c] = true;
            let mut queue = VecDeque::from([(r, c)]);
            while let Some((i, j)) = queue.pop_front() {
                let neighbors = [
                    (i.wrapping_sub(1), j),
                    (i + 1, j),
                    (i, j.wrapping_sub(1)),
                    (i, j + 1),
                ];
                for (p, q) in neighbors {
                    if p < rows && q < cols && mask[p][q] && !seen[p][q] {
                        seen[p][q] = true;
                        queue.push_back((p, q));
                    }
                }
            }
        }
    }
    count
}

/// Lattice components where the loss is zero (4-neighbor connectivity, a
/// proxy for topological components).
pub fn zero_components(err: &Grid<usize>) -> usize {
    let mask: Vec<Vec<bool>> = err
        .values
        .iter()
        .map(|row| row.iter().map(|&e| e == 0).collect())
        .collect();
    count_components(&mask)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathWitness {
    pub profile: Vec<usize>,
    pub max: usize,
}

/// Joint 0/1 loss along the straight segment from `(a1, t1)` to `(a2, t2)`
/// in shape-and-translation space, `steps` samples with both ends included.
pub fn joint_path_witness(
    fan: &Fan,
    data: &LabeledDataset,
    start: (&ParamVector, &[f64]),
    end: (&ParamVector, &[f64]),
    steps: usize,
) -> Result<PathWitness> {
    let (a1, t1) = start;
    let (a2, t2) = end;
    check_dim(t1.len(), t2.len())?;
    let profile = (0..steps)
        .map(|k| {
            let mu = if steps > 1 {
                k as f64 / (steps - 1) as f64
            } else {
                0.0
            };
            let a = a1.lerp(a2, mu)?;
            let t: Vec<f64> = t1
                .iter()
                .zip(t2)
                .map(|(p, q)| (1.0 - mu) * p + mu * q)
                .collect();
            Ok(joint_loss(fan, data, &a, &t)?.err)
        })
        .collect::<Result<Vec<usize>>>()?;
    let max = profile.iter().copied().max().unwrap_or(0);
    Ok(PathWitness { profile, max })
}
