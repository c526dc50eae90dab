//! Complete simplicial fans and the coefficient map `x -> [x]`.
//!
//! A [`Fan`] stores its rays, the ray indices of every maximal cone, and the
//! inverse of each cone's ray matrix. Locating a point is a linear scan over
//! the maximal cones: the first cone whose barycentric coefficients are all
//! nonnegative (up to [`CONE_TOL`]) wins, so points on a shared face resolve
//! to the lowest cone index.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::norm_inf;

/// Slack allowed on cone coefficients when locating a point.
pub const CONE_TOL: f64 = 1e-9;

/// Default seed for the sampled completeness/overlap probes.
pub const DEFAULT_PROBE_SEED: u64 = 0x5eed_fa11;

/// Largest dimension accepted for the type-B fan (3^6 - 1 = 728 rays).
pub const TYPE_B_MAX_DIM: usize = 6;

/// Largest ambient dimension supported at all.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone)]
pub struct Fan {
    dim: usize,
    rays: Vec<Vec<f64>>,
    cones: Vec<Vec<usize>>,
    inverses: Vec<DMatrix<f64>>,
}

/// The nonnegative coefficient vector of a point with respect to the
/// generators of the cone containing it. Stored sparsely: at most `dim`
/// entries are nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    n: usize,
    cone_id: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl CoefficientVector {
    pub(crate) fn new(n: usize, cone_id: usize, support: Vec<usize>, values: Vec<f64>) -> Self {
        Self {
            n,
            cone_id,
            support,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn cone_id(&self) -> usize {
        self.cone_id
    }

    /// Indices with a strictly positive coefficient.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Coefficients matching [`support`](Self::support).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.support
            .iter()
            .position(|&j| j == index)
            .map_or(0.0, |k| self.values[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    /// Dense length-`n` form.
    pub fn entries(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, v) in self.iter() {
            out[j] = v;
        }
        out
    }

    pub fn dot(&self, a: &[f64]) -> f64 {
        self.iter().map(|(j, v)| v * a[j]).sum()
    }
}

/// On-disk fan description. Cone indices are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FanFile {
    pub dim: usize,
    pub rays: Vec<Vec<f64>>,
    pub cones: Vec<Vec<usize>>,
}

impl Fan {
    /// Builds a fan from rays and maximal cones (0-based ray indices),
    /// checking simpliciality and probing completeness and interior
    /// disjointness along `10 * 2^dim` pseudo-random unit directions.
    pub fn build(
        dim: usize,
        rays: Vec<Vec<f64>>,
        cones: Vec<Vec<usize>>,
        probe_seed: u64,
    ) -> Result<Self> {
        let fan = Self::build_unchecked(dim, rays, cones)?;
        fan.probe(probe_seed)?;
        Ok(fan)
    }

    /// Same as [`build`](Self::build) but skips the sampled probes. Used for
    /// fans that are correct by construction.
    fn build_unchecked(dim: usize, rays: Vec<Vec<f64>>, cones: Vec<Vec<usize>>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidFan(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        for (i, r) in rays.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::InvalidFan(format!(
                    "ray {i} has {} coordinates, expected {dim}",
                    r.len()
                )));
            }
        }
        if cones.is_empty() {
            return Err(Error::InvalidFan("no maximal cones".into()));
        }
        let mut inverses = Vec::with_capacity(cones.len());
        for (c, cone) in cones.iter().enumerate() {
            if cone.len() != dim {
                return Err(Error::InvalidFan(format!(
                    "cone {c} has {} rays, expected {dim}",
                    cone.len()
                )));
            }
            if let Some(&bad) = cone.iter().find(|&&j| j >= rays.len()) {
                return Err(Error::InvalidFan(format!(
                    "cone {c} references ray {bad}, but there are {} rays",
                    rays.len()
                )));
            }
            let v = DMatrix::from_fn(dim, dim, |row, col| rays[cone[col]][row]);
            let scale = v.amax();
            let inv = v.try_inverse().ok_or(Error::SingularCone { cone: c })?;
            // reject numerically singular cones as well
            if !inv.iter().all(|x| x.is_finite()) || inv.amax() * scale > 1e12 {
                return Err(Error::SingularCone { cone: c });
            }
            inverses.push(inv);
        }
        Ok(Self {
            dim,
            rays,
            cones,
            inverses,
        })
    }

    fn probe(&self, seed: u64) -> Result<()> {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let samples = 10 * (1usize << self.dim);
        for _ in 0..samples {
            let dir = loop {
                let v: Vec<f64> = (0..self.dim)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if len > 1e-6 {
                    break v.into_iter().map(|x| x / len).collect::<Vec<f64>>();
                }
            };
            let x = DVector::from_column_slice(&dir);
            let mut covered = false;
            let mut interior: Option<usize> = None;
            for (c, inv) in self.inverses.iter().enumerate() {
                let mu = inv * &x;
                let min = mu.min();
                if min >= -CONE_TOL {
                    covered = true;
                }
                if min > CONE_TOL {
                    if let Some(first) = interior {
                        return Err(Error::Overlapping {
                            first,
                            second: c,
                            direction: dir,
                        });
                    }
                    interior = Some(c);
                }
            }
            if !covered {
                return Err(Error::NotComplete { direction: dir });
            }
        }
        Ok(())
    }

    /// Kite fan: rays `e1, -e1, e2, -e2, ...` and one cone per orthant.
    pub fn kite(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidFan(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        let mut rays = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut r = vec![0.0; dim];
                r[i] = sign;
                rays.push(r);
            }
        }
        let cones = (0..1usize << dim)
            .map(|mask| (0..dim).map(|i| 2 * i + ((mask >> i) & 1)).collect())
            .collect();
        Self::build_unchecked(dim, rays, cones)
    }

    /// Coxeter fan of type B: rays are the nonzero vectors of `{0, ±1}^d`,
    /// maximal cones are indexed by signed permutations. In dimension 2 the
    /// rays are ordered counterclockwise starting at `(1, 0)`.
    pub fn type_b(dim: usize) -> Result<Self> {
        Self::type_b_with_limit(dim, TYPE_B_MAX_DIM)
    }

    pub fn type_b_with_limit(dim: usize, max_dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidFan("dimension 0".into()));
        }
        let ray_count = 3usize.saturating_pow(dim as u32) - 1;
        if dim > max_dim || dim > MAX_DIM {
            let limit = 3usize.pow(max_dim.min(MAX_DIM) as u32) - 1;
            return Err(Error::SizeLimit {
                rays: ray_count,
                limit,
            });
        }

        let mut signs: Vec<Vec<i8>> = Vec::with_capacity(ray_count);
        let digits = [1i8, -1, 0];
        for code in 0..3usize.pow(dim as u32) {
            let mut c = code;
            let mut v = vec![0i8; dim];
            for slot in v.iter_mut().rev() {
                *slot = digits[c % 3];
                c /= 3;
            }
            if v.iter().any(|&s| s != 0) {
                signs.push(v);
            }
        }
        if dim == 2 {
            signs.sort_by(|p, q| {
                let angle = |v: &[i8]| {
                    let t = f64::from(v[1]).atan2(f64::from(v[0]));
                    if t < 0.0 {
                        t + 2.0 * PI
                    } else {
                        t
                    }
                };
                angle(p).total_cmp(&angle(q))
            });
        }
        let index: HashMap<Vec<i8>, usize> = signs
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();

        let mut cones = Vec::new();
        for perm in permutations(dim) {
            for mask in 0..1usize << dim {
                let sign = |axis: usize| if (mask >> axis) & 1 == 0 { 1i8 } else { -1i8 };
                let cone: Vec<usize> = (0..dim)
                    .map(|i| {
                        let mut v = vec![0i8; dim];
                        for &axis in &perm[i..] {
                            v[axis] = sign(axis);
                        }
                        index[&v]
                    })
                    .collect();
                cones.push(cone);
            }
        }

        let rays = signs
            .iter()
            .map(|s| s.iter().map(|&x| f64::from(x)).collect())
            .collect();
        Self::build_unchecked(dim, rays, cones)
    }

    /// Planar fan from a list of rays: rays are sorted by angle and
    /// consecutive rays form the maximal cones.
    pub fn from_rays_2d(rays: Vec<Vec<f64>>) -> Result<Self> {
        if rays.len() < 3 {
            return Err(Error::InvalidFan(format!(
                "a complete planar fan needs at least 3 rays, got {}",
                rays.len()
            )));
        }
        for (i, r) in rays.iter().enumerate() {
            if r.len() != 2 {
                return Err(Error::InvalidFan(format!(
                    "ray {i} has {} coordinates, expected 2",
                    r.len()
                )));
            }
            if r[0] == 0.0 && r[1] == 0.0 {
                return Err(Error::InvalidFan(format!("ray {i} is zero")));
            }
        }
        let angle = |r: &[f64]| {
            let t = r[1].atan2(r[0]);
            if t < 0.0 {
                t + 2.0 * PI
            } else {
                t
            }
        };
        let mut order: Vec<usize> = (0..rays.len()).collect();
        order.sort_by(|&p, &q| angle(&rays[p]).total_cmp(&angle(&rays[q])));
        for w in order.windows(2) {
            let (p, q) = (&rays[w[0]], &rays[w[1]]);
            let cross = p[0] * q[1] - p[1] * q[0];
            let dot = p[0] * q[0] + p[1] * q[1];
            let scale = (p[0].hypot(p[1])) * (q[0].hypot(q[1]));
            if cross.abs() <= 1e-12 * scale && dot > 0.0 {
                return Err(Error::DuplicateDirection {
                    first: w[0].min(w[1]),
                    second: w[0].max(w[1]),
                });
            }
        }
        let sorted: Vec<Vec<f64>> = order.iter().map(|&i| rays[i].clone()).collect();
        let k = sorted.len();
        let cones = (0..k).map(|i| vec![i, (i + 1) % k]).collect();
        Self::build(2, sorted, cones, DEFAULT_PROBE_SEED)
    }

    pub fn from_file(file: FanFile) -> Result<Self> {
        let cones = file
            .cones
            .iter()
            .enumerate()
            .map(|(c, cone)| {
                cone.iter()
                    .map(|&j| {
                        j.checked_sub(1).ok_or_else(|| {
                            Error::InvalidFan(format!("cone {c} uses index 0; indices are 1-based"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::build(file.dim, file.rays, cones, DEFAULT_PROBE_SEED)
    }

    pub fn to_file(&self) -> FanFile {
        FanFile {
            dim: self.dim,
            rays: self.rays.clone(),
            cones: self
                .cones
                .iter()
                .map(|c| c.iter().map(|j| j + 1).collect())
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("fan serializes")
    }

    /// Resolves a fan name: `kite:<d>`, `typeb:<d>`, `rays2d:<path>` (a JSON
    /// array of 2-vectors), or a path to a fan JSON file.
    pub fn resolve(name: &str) -> Result<Self> {
        let parse_dim = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidFan(format!("bad dimension in fan name {name:?}")))
        };
        if let Some(rest) = name.strip_prefix("kite:") {
            Self::kite(parse_dim(rest)?)
        } else if let Some(rest) = name.strip_prefix("typeb:") {
            Self::type_b(parse_dim(rest)?)
        } else if let Some(path) = name.strip_prefix("rays2d:") {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let rays: Vec<Vec<f64>> = serde_json::from_str(&text)?;
            Self::from_rays_2d(rays)
        } else {
            let path = Path::new(name);
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Self::from_json(&text)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of rays (the parameter dimension).
    pub fn n(&self) -> usize {
        self.rays.len()
    }

    pub fn rays(&self) -> &[Vec<f64>] {
        &self.rays
    }

    pub fn cones(&self) -> &[Vec<usize>] {
        &self.cones
    }

    pub fn cone_inverse(&self, cone: usize) -> &DMatrix<f64> {
        &self.inverses[cone]
    }

    /// Coefficients of the cone generators for `x`, i.e. the vector `[x]`.
    pub fn coords(&self, x: &[f64]) -> Result<CoefficientVector> {
        check_dim(self.dim, x.len())?;
        let tol = CONE_TOL * norm_inf(x).max(1.0);
        let xv = DVector::from_column_slice(x);
        let mut best = f64::NEG_INFINITY;
        for (c, inv) in self.inverses.iter().enumerate() {
            let mu = inv * &xv;
            let min = mu.min();
            if min >= -tol {
                let cone = &self.cones[c];
                let mut support = Vec::with_capacity(self.dim);
                let mut values = Vec::with_capacity(self.dim);
                for (k, &m) in mu.iter().enumerate() {
                    if m > 0.0 {
                        support.push(cone[k]);
                        values.push(m);
                    }
                }
                return Ok(CoefficientVector::new(self.n(), c, support, values));
            }
            best = best.max(min);
        }
        Err(Error::NoCone {
            index: None,
            violation: -best,
        })
    }
}

/// All permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1))
            .rev()
            .find(|&i| current[i] < current[i + 1])
        else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}
