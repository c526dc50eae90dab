//! Dense two-phase simplex for the small linear programs arising in chamber
//! enumeration: maximize `c x` subject to linear constraints and `x >= 0`.
//!
//! Bland's rule is used for both entering and leaving variables, so the
//! method terminates on degenerate problems. Problems here have at most a
//! few dozen rows and columns; no attempt is made at sparsity.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const PIVOT_EPS: f64 = 1e-12;
const COST_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

impl LinearProgram {
    /// Maximize `objective . x` over `x >= 0`.
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constraint(mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        self.add(coeffs, relation, rhs);
        self
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars(), "constraint width");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> LpSolution {
        Tableau::new(self).solve(&self.objective)
    }
}

struct Tableau {
    n: usize,
    /// Columns `0..n` are structural, then slack/surplus, then artificial.
    first_artificial: usize,
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let normalized: Vec<Constraint> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    Constraint {
                        coeffs: c.coeffs.iter().map(|v| -v).collect(),
                        relation: match c.relation {
                            Relation::Le => Relation::Ge,
                            Relation::Ge => Relation::Le,
                            Relation::Eq => Relation::Eq,
                        },
                        rhs: -c.rhs,
                    }
                } else {
                    c.clone()
                }
            })
            .collect();
        let slacks = normalized
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let artificials = normalized
            .iter()
            .filter(|c| c.relation != Relation::Le)
            .count();
        let first_artificial = n + slacks;
        let width = first_artificial + artificials + 1;

        let mut rows = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let mut slack = n;
        let mut art = first_artificial;
        for c in &normalized {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&c.coeffs);
            row[width - 1] = c.rhs;
            match c.relation {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
            }
            rows.push(row);
        }
        Self {
            n,
            first_artificial,
            rows,
            basis,
        }
    }

    fn width(&self) -> usize {
        self.first_artificial + self.artificial_count() + 1
    }

    fn artificial_count(&self) -> usize {
        self.rows
            .first()
            .map_or(0, |r| r.len() - 1 - self.first_artificial)
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.rows[i].len() - 1]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let p = self.rows[pr][pc];
        for v in self.rows[pr].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[pr].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == pr {
                continue;
            }
            let factor = row[pc];
            if factor != 0.0 {
                for (v, &q) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * q;
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs Bland-rule simplex for `max cost . x` over columns `< allowed`.
    /// Returns `false` if unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> bool {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .basis
                        .iter()
                        .zip(&self.rows)
                        .map(|(&b, row)| cost[b] * row[j])
                        .sum::<f64>();
                reduced > COST_EPS
            });
            let Some(j) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[j] > PIVOT_EPS {
                    let ratio = self.rhs(i) / row[j];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - 1e-15
                                || (ratio <= best + 1e-15 && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((i, _)) = leave else {
                return false;
            };
            self.pivot(i, j);
        }
        panic!("simplex exceeded {MAX_PIVOTS} pivots");
    }

    fn value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.rhs(i))
            .sum()
    }

    fn solve(mut self, objective: &[f64]) -> LpSolution {
        let width = self.width();
        if self.artificial_count() > 0 {
            let mut phase1 = vec![0.0; width - 1];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = -1.0;
            }
            self.optimize(&phase1, width - 1);
            if self.value(&phase1) < -FEAS_EPS {
                return LpSolution::Infeasible;
            }
            // drive remaining (zero-level) artificials out of the basis
            let mut i = 0;
            while i < self.rows.len() {
                if self.basis[i] >= self.first_artificial {
                    let replacement =
                        (0..self.first_artificial).find(|&j| self.rows[i][j].abs() > 1e-9);
                    match replacement {
                        Some(j) => {
                            self.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            // redundant row
                            self.rows.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }

        let mut cost = vec![0.0; width - 1];
        cost[..self.n].copy_from_slice(objective);
        if !self.optimize(&cost, self.first_artificial) {
            return LpSolution::Unbounded;
        }
        let mut x = vec![0.0; self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rhs(i);
            }
        }
        let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpSolution::Optimal { x, value }
    }
}
