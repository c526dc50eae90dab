//! Synthetic star datasets, built-in example datasets, and CSV I/O.
//!
//! Generated data is reproducible: points are drawn with
//! `Xoshiro256PlusPlus::seed_from_u64(seed)` (crate `rand_xoshiro` 0.7) by
//! rejection sampling from the cube `[-1, 1]^d` onto the closed unit ball,
//! and each label is kept with probability `noise` and flipped otherwise,
//! symmetrically for both classes. Each accepted point consumes its
//! coordinates and then one uniform draw for the label decision.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fan::Fan;
use crate::loss::LabeledDataset;
use crate::star::{classify, ParamVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub fan_name: String,
    pub a_true: ParamVector,
    pub count: usize,
    /// Probability that an emitted label is correct.
    pub noise: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("count must be at least 1".into()));
        }
        if !(self.noise > 0.5 && self.noise <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "noise = {} must lie in (0.5, 1]",
                self.noise
            )));
        }
        Ok(())
    }
}

/// Star used by default for generated data: axis rays at `1.6`, diagonal
/// rays at `1.0`. On the 8-ray planar type-B fan this is a non-convex star
/// whose axis vertices sit at radius 0.625 and whose diagonal vertices lie
/// outside the unit disk.
pub fn default_star(n: usize) -> ParamVector {
    let values = (0..n).map(|i| if i % 2 == 0 { 1.6 } else { 1.0 }).collect();
    ParamVector::new(values).expect("positive constants")
}

pub fn sample_star_dataset(spec: &GenSpec) -> Result<LabeledDataset> {
    let fan = Fan::resolve(&spec.fan_name)?;
    sample_star_dataset_on(&fan, spec)
}

/// As [`sample_star_dataset`], with the fan already resolved.
pub fn sample_star_dataset_on(fan: &Fan, spec: &GenSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    check_dim(fan.n(), spec.a_true.len())?;
    let d = fan.dim();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let mut points = Vec::with_capacity(spec.count);
    let mut labels = Vec::with_capacity(spec.count);
    while points.len() < spec.count {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() > 1.0 {
            continue;
        }
        let truth = classify(fan, &spec.a_true, &x)?;
        let keep = rng.random::<f64>() < spec.noise;
        labels.push(if keep { truth } else { 1 - truth });
        points.push(x);
    }
    LabeledDataset::new(points, labels)
}

/// Which labeling of [`line_dataset`] to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelVariant {
    /// Labels `0,1,1,1,1,1,0,0` for `x = -4..-1, 1..4`.
    Listed,
    /// Labels `1,0,0,0,0,0,1,1`.
    Complemented,
}

impl std::str::FromStr for LabelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "listed" => Ok(Self::Listed),
            "complemented" => Ok(Self::Complemented),
            other => Err(Error::InvalidParameter(format!(
                "unknown label variant {other:?} (expected listed or complemented)"
            ))),
        }
    }
}

/// Eight points on the line, `-4, -3, -2, -1, 1, 2, 3, 4`. Pair with the fan
/// whose rays are `v1 = -e1, v2 = e1` (see [`line_fan`]).
pub fn line_dataset(variant: LabelVariant) -> LabeledDataset {
    let points = [-4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0]
        .iter()
        .map(|&x| vec![x])
        .collect();
    let listed = vec![0, 1, 1, 1, 1, 1, 0, 0];
    let data = LabeledDataset::new(points, listed).expect("static dataset");
    match variant {
        LabelVariant::Listed => data,
        LabelVariant::Complemented => data.complemented(),
    }
}

/// The one-dimensional fan with rays `-e1, e1`, in that order.
pub fn line_fan() -> Fan {
    Fan::build(1, vec![vec![-1.0], vec![1.0]], vec![vec![0], vec![1]], 1).expect("static fan")
}

/// Three points on the diagonal, `(1,1), (2,2), (3,3)`, labeled `0, 1, 0`.
pub fn diagonal_dataset() -> LabeledDataset {
    LabeledDataset::new(
        vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]],
        vec![0, 1, 0],
    )
    .expect("static dataset")
}

/// Thin cross-shaped star on the planar type-B fan used with
/// [`diagonal_dataset`]: `1/3` on axis rays, `3` on diagonal rays.
pub fn diagonal_star() -> ParamVector {
    let values = (0..8)
        .map(|i| if i % 2 == 0 { 1.0 / 3.0 } else { 3.0 })
        .collect();
    ParamVector::new(values).expect("positive constants")
}

/// Seeded shuffle followed by a split; returns `(train, test)` with
/// `round(test_fraction * m)` test points.
pub fn shuffle_split(
    data: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction {test_fraction} must lie in (0, 1)"
        )));
    }
    let m = data.len();
    let test = ((test_fraction * m as f64).round() as usize).clamp(1, m.saturating_sub(1));
    if m < 2 {
        return Err(Error::InvalidParameter(
            "need at least two points to split".into(),
        ));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut Xoshiro256PlusPlus::seed_from_u64(seed));
    let (test_idx, train_idx) = idx.split_at(test);
    Ok((data.select(train_idx)?, data.select(test_idx)?))
}

pub fn write_csv(data: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(data, file).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_csv_to(data: &LabeledDataset, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| Error::io("<csv>", e.into());
    let mut header: Vec<String> = (1..=data.dim()).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(to_io)?;
    for (p, &y) in data.points().iter().zip(data.labels()) {
        let mut record: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        record.push(y.to_string());
        w.write_record(&record).map_err(to_io)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file)
}

/// Parses `x1,...,xd,y`. Row numbers in errors count data rows from 1
/// (the header is row 0); columns count from 1.
pub fn read_csv_from(input: impl Read) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            column: 0,
            message: e.to_string(),
        })?
        .clone();
    let width = header.len();
    let expected: Vec<String> = (1..width)
        .map(|i| format!("x{i}"))
        .chain(std::iter::once("y".to_string()))
        .collect();
    if width < 2 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse {
            row: 0,
            column: 0,
            message: format!("expected header {:?}", expected.join(",")),
        });
    }

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() != width {
            return Err(Error::Parse {
                row,
                column: record.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let mut point = Vec::with_capacity(width - 1);
        for (c, field) in record.iter().take(width - 1).enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column: c + 1,
                message: format!("{field:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("{field:?} is not finite"),
                });
            }
            point.push(v);
        }
        let y = match &record[width - 1] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Label {
                    row,
                    value: other.to_string(),
                })
            }
        };
        points.push(point);
        labels.push(y);
    }
    LabeledDataset::new(points, labels)
}
