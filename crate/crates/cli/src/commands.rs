use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};
use starfan::arrangement::{
    enumerate_chambers, level_set_summary, parameter_err_grid, parameter_likelihood_grid,
    translational_grid, zero_components, ChamberOptions, Grid, GridSpec, ParamBox,
};
use starfan::datagen::{
    default_star, diagonal_dataset, line_dataset, line_fan, read_csv, sample_star_dataset_on,
    shuffle_split, write_csv, GenSpec, LabelVariant,
};
use starfan::loss::{data_matrix, log_likelihood, translational_log_likelihood, zero_one_loss};
use starfan::optim::{fit_mle, lambda_sweep, uniqueness_certificate};
use starfan::star::{star_vertices, TranslatedStar};
use starfan::{Error, Fan, LabeledDataset, LossReport, ParamVector};

use crate::args::{
    ChambersArgs, DataArgs, EvalArgs, GenArgs, LandscapeArgs, Metric, Space, SplitArgs, SweepArgs,
    TrainArgs,
};
use crate::svg::{self, Heatmap};

pub const SCHEMA: u32 = 1;

/// A failed run, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Solver(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 3,
            Self::Solver(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::Solver(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Self::Usage(e.to_string()),
            other => Self::Data(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Loaded {
    fan: Fan,
    fan_name: String,
    data: LabeledDataset,
}

fn load(args: &DataArgs) -> Result<Loaded, Failure> {
    let (data, default_fan) = match args.data.as_str() {
        "builtin:line" => (
            line_dataset(LabelVariant::Listed),
            Some(("line".to_string(), line_fan())),
        ),
        "builtin:diagonal" => (
            diagonal_dataset(),
            Some(("typeb:2".to_string(), Fan::type_b(2)?)),
        ),
        other if other.starts_with("builtin:") => {
            return Err(Failure::Usage(format!(
                "unknown built-in dataset {other:?} (expected builtin:line or builtin:diagonal)"
            )))
        }
        path => (read_csv(path)?, None),
    };
    let data = match args.labels_variant {
        LabelVariant::Listed => data,
        LabelVariant::Complemented => data.complemented(),
    };
    let (fan_name, fan) = match (&args.fan, default_fan) {
        (Some(name), _) => (name.clone(), Fan::resolve(name)?),
        (None, Some(default)) => default,
        (None, None) => return Err(Failure::Usage("--fan is required for CSV data".into())),
    };
    if data.dim() != fan.dim() {
        return Err(Error::DimensionMismatch {
            expected: fan.dim(),
            found: data.dim(),
        }
        .into());
    }
    Ok(Loaded {
        fan,
        fan_name,
        data,
    })
}

fn split(
    data: &LabeledDataset,
    args: &SplitArgs,
) -> Result<(LabeledDataset, Option<LabeledDataset>), Failure> {
    match args.test_fraction {
        Some(f) => {
            let (train, test) = shuffle_split(data, f, args.seed)?;
            Ok((train, Some(test)))
        }
        None => Ok((data.clone(), None)),
    }
}

fn summary(report: &LossReport) -> Value {
    json!({
        "fp": report.fp,
        "fn": report.fn_,
        "err": report.err,
        "accuracy": report.accuracy(),
    })
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| Failure::Data(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, value: &Value) -> Outcome {
    let text = serde_json::to_string_pretty(value).expect("json values serialize") + "\n";
    match out {
        Some(path) => write_file(path, &text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Data(format!("stdout: {e}")))
        }
    }
}

pub fn gen(args: &GenArgs) -> Outcome {
    let spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<GenSpec>(&text)
                .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?
        }
        None => {
            let fan = Fan::resolve(&args.fan)?;
            let a_true = match &args.a_true {
                Some(values) => ParamVector::new(values.clone())?,
                None => default_star(fan.n()),
            };
            GenSpec {
                fan_name: args.fan.clone(),
                a_true,
                count: args.count,
                noise: args.noise,
                seed: args.seed,
            }
        }
    };
    spec.validate()?;
    let fan = Fan::resolve(&spec.fan_name)?;
    let data = sample_star_dataset_on(&fan, &spec)?;
    write_csv(&data, &args.out)?;
    let truth = zero_one_loss(&data_matrix(&fan, &data)?, data.labels(), &spec.a_true)?;
    emit(
        None,
        &json!({
            "schema": SCHEMA,
            "command": "gen",
            "fan": spec.fan_name,
            "m": data.len(),
            "class_balance": {"0": data.count_label(0), "1": data.count_label(1)},
            "noise": spec.noise,
            "seed": spec.seed,
            "a_true": spec.a_true,
            "flipped": truth.err,
            "out": args.out,
        }),
    )
}

pub fn train(args: &TrainArgs) -> Outcome {
    let loaded = load(&args.data)?;
    let (train, test) = split(&loaded.data, &args.split)?;
    let a_mat = data_matrix(&loaded.fan, &train)?;
    let fit = fit_mle(&a_mat, train.labels(), args.lambda, &args.solver.options())?;
    let train_report = zero_one_loss(&a_mat, train.labels(), &fit.a_star)?;
    let test_report = match &test {
        Some(t) => Some(zero_one_loss(
            &data_matrix(&loaded.fan, t)?,
            t.labels(),
            &fit.a_star,
        )?),
        None => None,
    };
    let certificate = uniqueness_certificate(&a_mat, train.labels())?;
    if let Some(path) = &args.save_params {
        write_file(
            path,
            &(serde_json::to_string(&fit.a_star).expect("params serialize") + "\n"),
        )?;
    }
    emit(
        args.out.as_deref(),
        &json!({
            "schema": SCHEMA,
            "command": "train",
            "fan": loaded.fan_name,
            "data": args.data.data,
            "m_train": train.len(),
            "m_test": test.as_ref().map(LabeledDataset::len),
            "lambda": args.lambda,
            "fit": fit,
            "certificate": certificate,
            "train": summary(&train_report),
            "test": test_report.as_ref().map(summary),
        }),
    )?;
    if fit.status.is_optimal() {
        Ok(())
    } else {
        Err(Failure::Solver(format!(
            "solver stopped with status {:?}",
            fit.status
        )))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ParamsFile {
    Plain(ParamVector),
    Translated(TranslatedStar),
}

fn read_params(path: &PathBuf) -> Result<ParamsFile, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::Data(format!(
            "{}: expected a JSON array of positive numbers or {{\"a\": [...], \"t\": [...]}} ({e})",
            path.display()
        ))
    })
}

pub fn eval(args: &EvalArgs) -> Outcome {
    let loaded = load(&args.data)?;
    let star = match read_params(&args.params)? {
        ParamsFile::Plain(a) => TranslatedStar {
            a,
            t: vec![0.0; loaded.fan.dim()],
        },
        ParamsFile::Translated(star) => star,
    };
    let shifted = loaded.data.shifted(&star.t)?;
    let a_mat = data_matrix(&loaded.fan, &shifted)?;
    let report = zero_one_loss(&a_mat, shifted.labels(), &star.a)?;
    let likelihood = match args.lambda {
        Some(lambda) => Some(log_likelihood(&a_mat, shifted.labels(), &star.a, lambda)?),
        None => None,
    };
    emit(
        args.out.as_deref(),
        &json!({
            "schema": SCHEMA,
            "command": "eval",
            "fan": loaded.fan_name,
            "data": args.data.data,
            "m": shifted.len(),
            "a": star.a,
            "t": star.t,
            "loss": report,
            "accuracy": report.accuracy(),
            "lambda": args.lambda,
            "log_likelihood": likelihood,
        }),
    )
}

fn sweep_lambdas(args: &SweepArgs) -> Result<Vec<f64>, Failure> {
    if let Some(list) = &args.lambdas {
        return Ok(list.clone());
    }
    let (lo, hi, steps) = (args.lambda_min, args.lambda_max, args.steps);
    if !(lo > 0.0 && hi > lo && hi.is_finite() && steps >= 2) {
        return Err(Failure::Usage(format!(
            "need 0 < --lambda-min < --lambda-max and --steps >= 2 (got {lo}, {hi}, {steps})"
        )));
    }
    let ratio = hi / lo;
    Ok((0..steps)
        .map(|k| lo * ratio.powf(k as f64 / (steps - 1) as f64))
        .collect())
}

pub fn sweep(args: &SweepArgs) -> Outcome {
    let loaded = load(&args.data)?;
    let lambdas = sweep_lambdas(args)?;
    let (train, test) = split(&loaded.data, &args.split)?;
    let a_mat = data_matrix(&loaded.fan, &train)?;
    let test_mat = match &test {
        Some(t) => Some(data_matrix(&loaded.fan, t)?),
        None => None,
    };
    let entries = lambda_sweep(&a_mat, train.labels(), &lambdas, &args.solver.options())?;

    let mut rows = Vec::with_capacity(entries.len());
    let mut best: Option<(f64, f64)> = None;
    let mut first_error = None;
    let mut unconverged = Vec::new();
    for (lambda, entry) in lambdas.iter().zip(&entries) {
        match entry {
            Ok(e) => {
                let test_report = match (&test_mat, &test) {
                    (Some(m), Some(t)) => Some(zero_one_loss(m, t.labels(), &e.fit.a_star)?),
                    _ => None,
                };
                let acc = e.report.accuracy();
                if best.is_none_or(|(b, _)| acc > b) {
                    best = Some((acc, *lambda));
                }
                if !e.fit.status.is_optimal() {
                    unconverged.push(*lambda);
                }
                rows.push(json!({
                    "lambda": lambda,
                    "status": e.fit.status,
                    "a_star": e.fit.a_star,
                    "objective": e.fit.objective,
                    "iterations": e.fit.iterations,
                    "train": summary(&e.report),
                    "test": test_report.as_ref().map(summary),
                }));
            }
            Err(err) => {
                first_error.get_or_insert_with(|| err.to_string());
                rows.push(json!({"lambda": lambda, "error": err.to_string()}));
            }
        }
    }
    emit(
        args.out.as_deref(),
        &json!({
            "schema": SCHEMA,
            "command": "sweep",
            "fan": loaded.fan_name,
            "data": args.data.data,
            "m_train": train.len(),
            "m_test": test.as_ref().map(LabeledDataset::len),
            "entries": rows,
            "best": best.map(|(accuracy, lambda)| json!({"lambda": lambda, "train_accuracy": accuracy})),
        }),
    )?;
    if let Some(message) = first_error {
        return Err(Failure::Data(message));
    }
    if !unconverged.is_empty() {
        return Err(Failure::Solver(format!(
            "no optimum reached at lambda {unconverged:?}"
        )));
    }
    Ok(())
}

pub fn chambers(args: &ChambersArgs) -> Outcome {
    let loaded = load(&args.data)?;
    let a_mat = data_matrix(&loaded.fan, &loaded.data)?;
    let n = a_mat.n();
    let bounds = ParamBox::uniform(n, args.box_lo, args.box_hi);
    let chambers = enumerate_chambers(
        &a_mat,
        loaded.data.labels(),
        &bounds,
        &ChamberOptions::default(),
    )?;

    if let Some(path) = &args.out {
        let m = a_mat.m();
        let mut header: Vec<String> = (1..=m).map(|i| format!("s{i}")).collect();
        header.extend((1..=n).map(|j| format!("w{j}")));
        header.extend(["fp", "fn", "err", "margin"].map(String::from));
        let mut text = header.join(",") + "\n";
        for c in &chambers {
            let mut fields: Vec<String> = c.sign_vector.iter().map(u8::to_string).collect();
            fields.extend(c.witness.as_slice().iter().map(f64::to_string));
            fields.extend([c.report.fp, c.report.fn_, c.report.err].map(|v| v.to_string()));
            fields.push(c.margin.to_string());
            let _ = writeln!(text, "{}", fields.join(","));
        }
        write_file(path, &text)?;
    }
    let histogram: serde_json::Map<String, Value> = level_set_summary(&chambers)
        .into_iter()
        .map(|(err, count)| (err.to_string(), json!(count)))
        .collect();
    emit(
        None,
        &json!({
            "schema": SCHEMA,
            "command": "chambers",
            "fan": loaded.fan_name,
            "data": args.data.data,
            "m": a_mat.m(),
            "n": n,
            "box": {"lo": args.box_lo, "hi": args.box_hi},
            "count": chambers.len(),
            "err_histogram": histogram,
            "out": args.out,
        }),
    )
}

fn grid_spec(args: &LandscapeArgs, default: GridSpec) -> GridSpec {
    GridSpec {
        x_min: args.x_min.unwrap_or(default.x_min),
        x_max: args.x_max.unwrap_or(default.x_max),
        y_min: args.y_min.unwrap_or(default.y_min),
        y_max: args.y_max.unwrap_or(default.y_max),
        step: args.step.unwrap_or(default.step),
    }
}

fn grid_csv(grid: &Grid<f64>) -> String {
    let mut text = String::from("y\\x");
    for x in &grid.xs {
        let _ = write!(text, ",{x}");
    }
    text.push('\n');
    for (y, row) in grid.ys.iter().zip(&grid.values) {
        let _ = write!(text, "{y}");
        for v in row {
            let _ = write!(text, ",{v}");
        }
        text.push('\n');
    }
    text
}

fn as_f64(grid: Grid<usize>) -> Grid<f64> {
    Grid {
        xs: grid.xs,
        ys: grid.ys,
        values: grid
            .values
            .into_iter()
            .map(|row| row.into_iter().map(|v| v as f64).collect())
            .collect(),
    }
}

/// Outlines of `-Star(a) + x` for every data point, vertices in angular
/// order.
fn reflected_outlines(
    fan: &Fan,
    a: &ParamVector,
    data: &LabeledDataset,
) -> Result<Vec<Vec<[f64; 2]>>, Error> {
    let mut vertices: Vec<(f64, [f64; 2])> = star_vertices(fan, a)?
        .into_iter()
        .map(|v| (v[1].atan2(v[0]), [v[0], v[1]]))
        .collect();
    vertices.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(data
        .points()
        .iter()
        .map(|x| {
            vertices
                .iter()
                .map(|(_, v)| [x[0] - v[0], x[1] - v[1]])
                .collect()
        })
        .collect())
}

pub fn landscape(args: &LandscapeArgs) -> Outcome {
    let loaded = load(&args.data)?;
    let labels = loaded.data.labels();
    let mut outlines = Vec::new();
    let mut notes = Vec::new();
    let mut zero_count = None;

    let grid: Grid<f64> = match args.space {
        Space::Parameter => {
            let a_mat = data_matrix(&loaded.fan, &loaded.data)?;
            if a_mat.n() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: a_mat.n(),
                }
                .into());
            }
            let spec = grid_spec(args, GridSpec::square(0.01, 1.2, 0.01));
            match args.metric {
                Metric::Err => {
                    let g = parameter_err_grid(&a_mat, labels, &spec)?;
                    zero_count = Some(zero_components(&g));
                    as_f64(g)
                }
                Metric::Likelihood => {
                    parameter_likelihood_grid(&a_mat, labels, args.lambda, &spec)?
                }
            }
        }
        Space::Translation => {
            if loaded.fan.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: loaded.fan.dim(),
                }
                .into());
            }
            let Some(path) = &args.params else {
                return Err(Failure::Usage(
                    "translation landscapes need --params".into(),
                ));
            };
            let a = match read_params(path)? {
                ParamsFile::Plain(a) | ParamsFile::Translated(TranslatedStar { a, .. }) => a,
            };
            match reflected_outlines(&loaded.fan, &a, &loaded.data) {
                Ok(o) => outlines = o,
                Err(e) => notes.push(format!("star outlines omitted: {e}")),
            }
            let spec = grid_spec(args, default_translation_grid(&loaded, &a));
            match args.metric {
                Metric::Err => {
                    let g = translational_grid(&loaded.fan, &loaded.data, &a, &spec)?;
                    zero_count = Some(zero_components(&g.err));
                    as_f64(g.err)
                }
                Metric::Likelihood => Grid::evaluate(&spec, |x, y| {
                    match translational_log_likelihood(
                        &loaded.fan,
                        &loaded.data,
                        &a,
                        &[x, y],
                        args.lambda,
                    ) {
                        Err(Error::UndefinedAtZero { .. }) => Ok(f64::NEG_INFINITY),
                        other => other,
                    }
                })?,
            }
        }
    };

    let space = match args.space {
        Space::Parameter => "parameter",
        Space::Translation => "translation",
    };
    let metric = match args.metric {
        Metric::Err => "err",
        Metric::Likelihood => "likelihood",
    };
    let title = format!("{metric} over {space} space ({})", args.data.data);
    let svg_text = svg::render(&Heatmap {
        title: &title,
        xs: &grid.xs,
        ys: &grid.ys,
        values: &grid.values,
        outlines: &outlines,
    });
    let csv_path = args.out.join("landscape.csv");
    let svg_path = args.out.join("landscape.svg");
    write_file(&csv_path, &grid_csv(&grid))?;
    write_file(&svg_path, &svg_text)?;

    let finite = grid
        .values
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
        (l.min(v), h.max(v))
    });
    emit(
        None,
        &json!({
            "schema": SCHEMA,
            "command": "landscape",
            "fan": loaded.fan_name,
            "data": args.data.data,
            "space": space,
            "metric": metric,
            "lambda": (args.metric == Metric::Likelihood).then_some(args.lambda),
            "rows": grid.ys.len(),
            "cols": grid.xs.len(),
            "min": lo.is_finite().then_some(lo),
            "max": hi.is_finite().then_some(hi),
            "zero_components": zero_count,
            "connectivity": zero_count.map(|_| "4-neighbor lattice"),
            "notes": notes,
            "csv": csv_path,
            "svg": svg_path,
        }),
    )
}

/// Bounding box of the data padded by the star's extent, about 180 cells
/// across.
fn default_translation_grid(loaded: &Loaded, a: &ParamVector) -> GridSpec {
    let radius = star_vertices(&loaded.fan, a)
        .map(|vs| {
            vs.iter()
                .map(|v| v[0].abs().max(v[1].abs()))
                .fold(0.0, f64::max)
        })
        .unwrap_or(1.0)
        + 0.5;
    let points = loaded.data.points();
    let bound = |k: usize| {
        points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
                (l.min(p[k]), h.max(p[k]))
            })
    };
    let (x0, x1) = bound(0);
    let (y0, y1) = bound(1);
    let span = (x1 - x0).max(y1 - y0) + 2.0 * radius;
    GridSpec {
        x_min: x0 - radius,
        x_max: x1 + radius,
        y_min: y0 - radius,
        y_max: y1 + radius,
        step: span / 180.0,
    }
}
