//! Star-shaped classifiers `c_a(x) = [f_a(x) > 1]` with `f_a(x) = <[x], a>`,
//! optionally translated by `t`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fan::Fan;

/// Entries at or below this value are treated as degenerate (vertex at
/// infinity).
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Default margin used by [`shatter_params`].
pub const DEFAULT_SHATTER_EPS: f64 = 0.5;

/// A strictly positive parameter vector, one entry per ray of the fan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "a[{i}] = {v} must be finite and strictly positive"
            )));
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices whose value is at or below `floor`.
    pub fn degenerate_indices(&self, floor: f64) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= floor)
            .map(|(i, _)| i)
            .collect()
    }

    /// Entrywise `a / s`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * factor).collect())
    }

    /// `(1 - mu) * self + mu * other`.
    pub fn lerp(&self, other: &Self, mu: f64) -> Result<Self> {
        check_dim(self.len(), other.len())?;
        Self::new(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(p, q)| (1.0 - mu) * p + mu * q)
                .collect(),
        )
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(a: ParamVector) -> Self {
        a.0
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A star shape together with a translation of its center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslatedStar {
    pub a: ParamVector,
    pub t: Vec<f64>,
}

/// `f_a(x) = <[x], a>`.
pub fn evaluate(fan: &Fan, a: &ParamVector, x: &[f64]) -> Result<f64> {
    check_dim(fan.n(), a.len())?;
    Ok(fan.coords(x)?.dot(a.as_slice()))
}

/// 0 if `x` lies in the closed star `{f_a <= 1}`, 1 otherwise.
pub fn classify(fan: &Fan, a: &ParamVector, x: &[f64]) -> Result<u8> {
    Ok(label_of(evaluate(fan, a, x)?))
}

pub(crate) fn label_of(f: f64) -> u8 {
    u8::from(f > 1.0)
}

pub fn classify_translated(fan: &Fan, star: &TranslatedStar, x: &[f64]) -> Result<u8> {
    check_dim(fan.dim(), star.t.len())?;
    classify(fan, &star.a, &sub(x, &star.t))
}

/// Whether `t` lies in `x - Star(a)`, i.e. whether the star translated by
/// `t` contains `x`.
pub fn translation_membership(fan: &Fan, a: &ParamVector, x: &[f64], t: &[f64]) -> Result<bool> {
    check_dim(fan.dim(), t.len())?;
    Ok(evaluate(fan, a, &sub(x, t))? <= 1.0)
}

/// Boundary vertices `v_i / a_i` of the star, one per ray.
pub fn star_vertices(fan: &Fan, a: &ParamVector) -> Result<Vec<Vec<f64>>> {
    check_dim(fan.n(), a.len())?;
    fan.rays()
        .iter()
        .zip(a.as_slice())
        .enumerate()
        .map(|(i, (ray, &ai))| {
            if ai <= DEGENERACY_FLOOR {
                Err(Error::DegenerateRay { index: i })
            } else {
                Ok(ray.iter().map(|v| v / ai).collect())
            }
        })
        .collect()
}

/// Parameters realizing an arbitrary labeling of the generators:
/// `a_i = 1 - eps` for label 0, `1 + eps` for label 1.
pub fn shatter_params(fan: &Fan, labels: &[u8], eps: f64) -> Result<ParamVector> {
    check_dim(fan.n(), labels.len())?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} must lie in (0, 1)"
        )));
    }
    let values = labels
        .iter()
        .map(|&l| match l {
            0 => Ok(1.0 - eps),
            1 => Ok(1.0 + eps),
            other => Err(Error::InvalidParameter(format!("label {other} is not 0/1"))),
        })
        .collect::<Result<Vec<_>>>()?;
    ParamVector::new(values)
}

pub(crate) fn sub(x: &[f64], t: &[f64]) -> Vec<f64> {
    x.iter().zip(t).map(|(p, q)| p - q).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_fan() -> Fan {
        Fan::build(1, vec![vec![-1.0], vec![1.0]], vec![vec![0], vec![1]], 1).unwrap()
    }

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_nonpositive_params() {
        assert!(ParamVector::new(vec![1.0, 0.0]).is_err());
        assert!(ParamVector::new(vec![1.0, -2.0]).is_err());
        assert!(ParamVector::new(vec![f64::NAN]).is_err());
        let a = pv(&[1e-12, 2.0]);
        assert_eq!(a.degenerate_indices(DEGENERACY_FLOOR), vec![0]);
    }

    #[test]
    fn json_forms() {
        let a = pv(&[0.5, 2.0]);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[0.5,2.0]");
        let s: TranslatedStar = serde_json::from_str(r#"{"a": [1.0, 2.0], "t": [0.0]}"#).unwrap();
        assert_eq!(s.a, pv(&[1.0, 2.0]));
        assert!(serde_json::from_str::<ParamVector>("[1.0, -1.0]").is_err());
    }

    #[test]
    fn evaluate_and_classify_on_the_line() {
        let fan = line_fan();
        let a = pv(&[2.0 / 7.0, 3.0 / 7.0]);
        let f = evaluate(&fan, &a, &[-3.0]).unwrap();
        assert!((f - 6.0 / 7.0).abs() < 1e-15);
        assert_eq!(classify(&fan, &a, &[-3.0]).unwrap(), 0);
        assert_eq!(classify(&fan, &a, &[-4.0]).unwrap(), 1);
        assert_eq!(classify(&fan, &a, &[0.0]).unwrap(), 0);
        assert_eq!(evaluate(&fan, &a, &[1.0]).unwrap(), a[1]);
    }

    #[test]
    fn boundary_is_class_zero() {
        let fan = line_fan();
        let a = pv(&[0.5, 0.25]);
        assert_eq!(classify(&fan, &a, &[-2.0]).unwrap(), 0);
        assert_eq!(classify(&fan, &a, &[4.0]).unwrap(), 0);
    }

    #[test]
    fn translated_examples() {
        let fan = Fan::type_b(2).unwrap();
        let a = pv(&[
            1.0 / 3.0,
            3.0,
            1.0 / 3.0,
            3.0,
            1.0 / 3.0,
            3.0,
            1.0 / 3.0,
            3.0,
        ]);
        for t in [[2.9, 0.9], [0.9, 3.05]] {
            let star = TranslatedStar {
                a: a.clone(),
                t: t.to_vec(),
            };
            let labels: Vec<u8> = [[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]
                .iter()
                .map(|x| classify_translated(&fan, &star, x).unwrap())
                .collect();
            assert_eq!(labels, vec![0, 1, 0], "t = {t:?}");
        }
    }

    #[test]
    fn vertices() {
        let fan = line_fan();
        let v = star_vertices(&fan, &pv(&[6.0 / 5.0, 5.0 / 4.0])).unwrap();
        assert!((v[0][0] + 5.0 / 6.0).abs() < 1e-15);
        assert!((v[1][0] - 4.0 / 5.0).abs() < 1e-15);

        let b = Fan::type_b(2).unwrap();
        assert_eq!(
            star_vertices(&b, &ParamVector::constant(8, 1.0).unwrap()).unwrap(),
            b.rays()
        );

        let err = star_vertices(&fan, &pv(&[1e-12, 1.0])).unwrap_err();
        assert!(matches!(err, Error::DegenerateRay { index: 0 }));
    }

    #[test]
    fn shatter_extremes() {
        let b = Fan::type_b(2).unwrap();
        let zeros = shatter_params(&b, &[0; 8], 0.5).unwrap();
        assert!(zeros.as_slice().iter().all(|&v| v == 0.5));
        let ones = shatter_params(&b, &[1; 8], 0.5).unwrap();
        assert!(ones.as_slice().iter().all(|&v| v == 1.5));
        for (ray, l) in b.rays().iter().zip([0u8; 8]) {
            assert_eq!(classify(&b, &zeros, ray).unwrap(), l);
            assert_eq!(classify(&b, &ones, ray).unwrap(), 1);
        }
        assert!(shatter_params(&b, &[0; 8], 1.0).is_err());
        assert!(shatter_params(&b, &[0; 8], 0.0).is_err());
    }

    #[test]
    fn membership_at_center_and_far_away() {
        let b = Fan::type_b(2).unwrap();
        let a = pv(&[0.7, 1.3, 0.9, 2.0, 0.5, 1.1, 0.8, 1.7]);
        let x = [0.3, -1.2];
        assert!(translation_membership(&b, &a, &x, &x).unwrap());
        let radius = std::f64::consts::SQRT_2 / 0.5;
        assert!(!translation_membership(&b, &a, &x, &[x[0] + radius + 0.1, x[1]]).unwrap());
    }
}
