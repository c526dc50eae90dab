//! End-to-end acceptance checks. Every test writes one `criterion N: PASS`
//! or `criterion N: FAIL` line to stdout (bypassing libtest capture) before
//! asserting.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use starfan::arrangement::{
    enumerate_chambers, joint_path_witness, level_set_summary, segment_profile, translational_grid,
    zero_components, ChamberOptions, GridSpec, ParamBox,
};
use starfan::datagen::{
    default_star, diagonal_dataset, diagonal_star, line_dataset, line_fan, sample_star_dataset_on,
    GenSpec, LabelVariant,
};
use starfan::loss::{
    data_matrix, log_likelihood, log_likelihood_grad, log_likelihood_hess, zero_one_loss,
};
use starfan::optim::{fit_mle, lambda_sweep, uniqueness_certificate, FitOptions, FitStatus};
use starfan::star::{classify, shatter_params, DEFAULT_SHATTER_EPS};
use starfan::{DataMatrix, Fan, LabeledDataset, ParamVector};

fn verdict(n: usize, what: &str, failures: &[String]) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {n}: {status} ({what})").unwrap();
    for f in failures.iter().take(5) {
        writeln!(out, "    {f}").unwrap();
    }
    out.flush().unwrap();
    assert!(failures.is_empty(), "criterion {n} failed: {failures:?}");
}

fn pv(v: &[f64]) -> ParamVector {
    ParamVector::new(v.to_vec()).unwrap()
}

fn line_problem(variant: LabelVariant) -> (DataMatrix, Vec<u8>) {
    let data = line_dataset(variant);
    (
        data_matrix(&line_fan(), &data).unwrap(),
        data.labels().to_vec(),
    )
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Noisy star data on `fan` with a random true star.
fn random_dataset(fan: &Fan, count: usize, rng: &mut Xoshiro256PlusPlus) -> LabeledDataset {
    let a_true: Vec<f64> = (0..fan.n()).map(|_| rng.random_range(0.6..2.0)).collect();
    let spec = GenSpec {
        fan_name: String::new(),
        a_true: pv(&a_true),
        count,
        noise: 0.85,
        seed: rng.random(),
    };
    sample_star_dataset_on(fan, &spec).unwrap()
}

fn random_param(n: usize, lo: f64, hi: f64, rng: &mut Xoshiro256PlusPlus) -> ParamVector {
    ParamVector::new((0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

#[test]
fn criterion_01_mle_golden_values() {
    let (a_mat, labels) = line_problem(LabelVariant::Listed);
    let mut failures = Vec::new();
    for (lambda, expected) in [(0.5, [0.93, 0.48]), (2.0, [0.23, 0.12])] {
        let start = Instant::now();
        let fit = fit_mle(&a_mat, &labels, lambda, &FitOptions::default()).unwrap();
        let elapsed = start.elapsed();
        if fit.status != FitStatus::Converged {
            failures.push(format!("lambda {lambda}: status {:?}", fit.status));
        }
        if sup_dist(fit.a_star.as_slice(), &expected) > 0.01 {
            failures.push(format!("lambda {lambda}: a* = {:?}", fit.a_star.as_slice()));
        }
        if elapsed >= Duration::from_secs(1) {
            failures.push(format!("lambda {lambda}: took {elapsed:?}"));
        }
    }
    verdict(1, "MLE golden values on the line dataset", &failures);
}

#[test]
fn criterion_02_lambda_ray_law() {
    let opts = FitOptions::default();
    let mut failures = Vec::new();
    let mut check = |name: &str, a_mat: &DataMatrix, labels: &[u8], lambda0: f64| {
        let base = fit_mle(a_mat, labels, lambda0, &opts).unwrap();
        if !base.status.is_optimal() {
            failures.push(format!("{name}: base fit {:?}", base.status));
            return;
        }
        let scale = sup(base.a_star.as_slice());
        for t in [0.5, 2.0, 4.0] {
            let fit = fit_mle(a_mat, labels, t * lambda0, &opts).unwrap();
            let predicted: Vec<f64> = base.a_star.as_slice().iter().map(|v| v / t).collect();
            let gap = sup_dist(fit.a_star.as_slice(), &predicted);
            if fit.status != base.status || gap > 1e-6 * scale {
                failures.push(format!(
                    "{name}, t = {t}: gap {gap:e}, status {:?}",
                    fit.status
                ));
            }
        }
    };

    let (a_mat, labels) = line_problem(LabelVariant::Listed);
    check("line", &a_mat, &labels, 0.5);

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
    let fans = [
        Fan::kite(2).unwrap(),
        Fan::type_b(2).unwrap(),
        Fan::kite(3).unwrap(),
    ];
    let mut certified = 0;
    let mut attempts = 0;
    while certified < 20 && attempts < 200 {
        attempts += 1;
        let fan = &fans[attempts % fans.len()];
        let data = random_dataset(fan, 80, &mut rng);
        let a_mat = data_matrix(fan, &data).unwrap();
        if !uniqueness_certificate(&a_mat, data.labels())
            .unwrap()
            .unique_max
        {
            continue;
        }
        certified += 1;
        let lambda0 = rng.random_range(0.3..3.0);
        check(
            &format!("random #{certified}"),
            &a_mat,
            data.labels(),
            lambda0,
        );
    }
    if certified < 20 {
        failures.push(format!("only {certified} certified datasets"));
    }
    verdict(
        2,
        "optimum scales as a*(t lambda) = a*(lambda)/t",
        &failures,
    );
}

fn count_direction_changes(seq: &[usize]) -> usize {
    let mut dedup = seq.to_vec();
    dedup.dedup();
    dedup
        .windows(3)
        .filter(|w| (w[1] > w[0]) != (w[2] > w[1]))
        .count()
}

#[test]
fn criterion_03_fp_fn_along_the_ray() {
    let mut failures = Vec::new();
    let (a_mat, labels) = line_problem(LabelVariant::Listed);
    let lambdas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let sweep = lambda_sweep(&a_mat, &labels, &lambdas, &FitOptions::default()).unwrap();
    let reports: Vec<_> = sweep.into_iter().map(|e| e.unwrap().report).collect();
    if reports.windows(2).any(|w| w[1].fp > w[0].fp) {
        failures.push(format!(
            "fp not nonincreasing: {:?}",
            reports.iter().map(|r| r.fp).collect::<Vec<_>>()
        ));
    }
    if reports.windows(2).any(|w| w[1].fn_ < w[0].fn_) {
        failures.push(format!(
            "fn not nondecreasing: {:?}",
            reports.iter().map(|r| r.fn_).collect::<Vec<_>>()
        ));
    }

    let (a_mat, labels) = line_problem(LabelVariant::Complemented);
    let fine: Vec<f64> = (0..400).map(|k| 0.02 * 1.02f64.powi(k)).collect();
    let sweep = lambda_sweep(&a_mat, &labels, &fine, &FitOptions::default()).unwrap();
    let errs: Vec<usize> = sweep.into_iter().map(|e| e.unwrap().report.err).collect();
    // unimodal sequences change direction at most once
    if count_direction_changes(&errs) < 2 {
        let mut d = errs.clone();
        d.dedup();
        failures.push(format!("err along the ray looks unimodal: {d:?}"));
    }
    verdict(
        3,
        "FP/FN monotone along the optimum ray, err non-unimodal",
        &failures,
    );
}

#[test]
fn criterion_04_chamber_structure() {
    let mut failures = Vec::new();
    let bounds = ParamBox::uniform(2, 1e-6, 1.2);
    for variant in [LabelVariant::Listed, LabelVariant::Complemented] {
        let (a_mat, labels) = line_problem(variant);
        let start = Instant::now();
        let chambers =
            enumerate_chambers(&a_mat, &labels, &bounds, &ChamberOptions::default()).unwrap();
        let elapsed = start.elapsed();
        if chambers.len() != 25 {
            failures.push(format!("{variant:?}: {} chambers", chambers.len()));
        }
        if elapsed >= Duration::from_secs(5) {
            failures.push(format!("{variant:?}: took {elapsed:?}"));
        }
        // brute force: count mismatches at each witness directly
        for c in &chambers {
            let f = a_mat.apply(c.witness.as_slice());
            let direct = f
                .iter()
                .zip(&labels)
                .filter(|(&fi, &y)| (fi > 1.0) as u8 != y)
                .count();
            let implied = c
                .sign_vector
                .iter()
                .zip(&labels)
                .filter(|(s, y)| s != y)
                .count();
            if direct != c.report.err || implied != c.report.err {
                failures.push(format!(
                    "{variant:?} {:?}: err {} vs {direct}",
                    c.sign_vector, c.report.err
                ));
            }
        }
        // independent oracle: every realized sign vector on a fine lattice
        let mut realized = BTreeSet::new();
        for i in 1..=1200 {
            for j in 1..=1200 {
                let a = pv(&[i as f64 * 1e-3, j as f64 * 1e-3]);
                realized.insert(zero_one_loss(&a_mat, &labels, &a).unwrap().per_point);
            }
        }
        let enumerated: BTreeSet<Vec<u8>> =
            chambers.iter().map(|c| c.sign_vector.clone()).collect();
        if realized != enumerated {
            failures.push(format!(
                "{variant:?}: lattice sees {} sign vectors",
                realized.len()
            ));
        }
        if variant == LabelVariant::Complemented {
            let zeros = level_set_summary(&chambers).get(&0).copied().unwrap_or(0);
            if zeros != 1 {
                failures.push(format!("{zeros} chambers with err 0"));
            }
        }
    }
    verdict(
        4,
        "25 chambers, oracle-matched err, unique zero chamber",
        &failures,
    );
}

#[test]
fn criterion_05_concavity_and_derivatives() {
    let mut failures = Vec::new();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(55);
    let fans = [
        Fan::kite(2).unwrap(),
        Fan::type_b(2).unwrap(),
        Fan::kite(3).unwrap(),
    ];

    for trial in 0..100 {
        let fan = &fans[trial % fans.len()];
        let data = random_dataset(fan, 40, &mut rng);
        let a_mat = data_matrix(fan, &data).unwrap();
        let a = random_param(fan.n(), 0.5, 2.0, &mut rng);
        let lambda = rng.random_range(0.2..3.0);
        let labels = data.labels();

        let hess = log_likelihood_hess(&a_mat, labels, &a, lambda).unwrap();
        let max_eig = hess.symmetric_eigen().eigenvalues.max();
        if max_eig > 1e-10 {
            failures.push(format!("trial {trial}: max eigenvalue {max_eig:e}"));
        }

        let grad = log_likelihood_grad(&a_mat, labels, &a, lambda).unwrap();
        let mut fd = vec![0.0; a.len()];
        for (j, g) in fd.iter_mut().enumerate() {
            let h = 1e-5 * a[j];
            let mut up = a.as_slice().to_vec();
            let mut down = a.as_slice().to_vec();
            up[j] += h;
            down[j] -= h;
            let lu = log_likelihood(&a_mat, labels, &pv(&up), lambda).unwrap();
            let ld = log_likelihood(&a_mat, labels, &pv(&down), lambda).unwrap();
            *g = (lu - ld) / (2.0 * h);
        }
        let rel = sup_dist(&fd, &grad) / sup(&grad).max(1.0);
        if rel > 1e-6 {
            failures.push(format!("trial {trial}: finite-difference error {rel:e}"));
        }
    }

    for trial in 0..1000 {
        let fan = &fans[trial % fans.len()];
        let data = random_dataset(fan, 20, &mut rng);
        let a_mat = data_matrix(fan, &data).unwrap();
        let a1 = random_param(fan.n(), 0.05, 5.0, &mut rng);
        let a2 = random_param(fan.n(), 0.05, 5.0, &mut rng);
        let mid = a1.lerp(&a2, 0.5).unwrap();
        let lambda = rng.random_range(0.1..5.0);
        let l = |a: &ParamVector| log_likelihood(&a_mat, data.labels(), a, lambda).unwrap();
        let (l1, l2, lm) = (l(&a1), l(&a2), l(&mid));
        if lm < 0.5 * (l1 + l2) - 1e-9 {
            failures.push(format!(
                "trial {trial}: midpoint {lm} below {}",
                0.5 * (l1 + l2)
            ));
        }
    }
    verdict(
        5,
        "Hessian negative semidefinite, gradient, midpoint concavity",
        &failures,
    );
}

#[test]
fn criterion_06_star_convexity() {
    let mut failures = Vec::new();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(66);
    let fans = [
        Fan::kite(2).unwrap(),
        Fan::type_b(2).unwrap(),
        Fan::type_b(3).unwrap(),
    ];
    for trial in 0..200 {
        let fan = &fans[trial % fans.len()];
        let data = random_dataset(fan, 60, &mut rng);
        let a_mat = data_matrix(fan, &data).unwrap();
        let a = random_param(fan.n(), 0.2, 3.0, &mut rng);
        let bumped: Vec<f64> = a
            .as_slice()
            .iter()
            .map(|v| {
                if rng.random_bool(0.5) {
                    v + rng.random_range(0.0..2.0)
                } else {
                    *v
                }
            })
            .collect();
        let before = zero_one_loss(&a_mat, data.labels(), &a).unwrap();
        let after = zero_one_loss(&a_mat, data.labels(), &pv(&bumped)).unwrap();
        if after.fp < before.fp || after.fn_ > before.fn_ {
            failures.push(format!(
                "trial {trial}: ({}, {}) -> ({}, {})",
                before.fp, before.fn_, after.fp, after.fn_
            ));
        }
    }

    // perfect classifiers for the complemented line labels fill
    // (1/4, 1/3] x (1/3, 1/2]
    let (a_mat, labels) = line_problem(LabelVariant::Complemented);
    for trial in 0..50 {
        let perfect = pv(&[
            rng.random_range(0.2501..0.3333),
            rng.random_range(0.3334..0.5),
        ]);
        assert_eq!(zero_one_loss(&a_mat, &labels, &perfect).unwrap().err, 0);
        let far = random_param(2, 0.01, 2.0, &mut rng);
        let far_err = zero_one_loss(&a_mat, &labels, &far).unwrap().err;
        let profile = segment_profile(&a_mat, &labels, &perfect, &far, 50).unwrap();
        if profile.iter().any(|&e| e > far_err) {
            failures.push(format!(
                "trial {trial}: profile {profile:?} exceeds {far_err}"
            ));
        }
    }
    verdict(
        6,
        "FP/FN monotone in a, segments from perfect classifiers",
        &failures,
    );
}

#[test]
fn criterion_07_shattering() {
    let fan = Fan::type_b(2).unwrap();
    let mut failures = Vec::new();
    for mask in 0u32..256 {
        let labels: Vec<u8> = (0..8).map(|i| ((mask >> i) & 1) as u8).collect();
        let a = shatter_params(&fan, &labels, DEFAULT_SHATTER_EPS).unwrap();
        let got: Vec<u8> = fan
            .rays()
            .iter()
            .map(|v| classify(&fan, &a, v).unwrap())
            .collect();
        if got != labels {
            failures.push(format!("labeling {labels:?} realized as {got:?}"));
        }
    }
    verdict(
        7,
        "all 256 labelings of the planar type-B rays realized",
        &failures,
    );
}

#[test]
fn criterion_08_translational_landscape() {
    let mut failures = Vec::new();
    let fan = Fan::type_b(2).unwrap();
    let data = diagonal_dataset();
    let a = diagonal_star();
    let grid = translational_grid(&fan, &data, &a, &GridSpec::square(-2.5, 6.5, 0.05)).unwrap();
    let min = grid.err.values.iter().flatten().min().copied();
    if min != Some(0) {
        failures.push(format!("minimum err {min:?}"));
    }
    let components = zero_components(&grid.err);
    if components != 2 {
        failures.push(format!("{components} zero components"));
    }
    let mut by_signature: HashMap<&Vec<bool>, usize> = HashMap::new();
    for (sig_row, err_row) in grid.signatures.values.iter().zip(&grid.err.values) {
        for (sig, &err) in sig_row.iter().zip(err_row) {
            let seen = *by_signature.entry(sig).or_insert(err);
            if seen != err {
                failures.push(format!("signature {sig:?} has err {seen} and {err}"));
            }
        }
    }
    let w = joint_path_witness(&fan, &data, (&a, &[2.9, 0.9]), (&a, &[0.9, 3.05]), 200).unwrap();
    let ends = (w.profile[0], w.profile[w.profile.len() - 1]);
    if ends != (0, 0) || w.max < 1 {
        failures.push(format!("path endpoints {ends:?}, max {}", w.max));
    }
    verdict(
        8,
        "two zero components, cell constancy, path witness",
        &failures,
    );
}

#[test]
fn criterion_09_coordinate_kernel() {
    let mut failures = Vec::new();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(99);
    let mut fans: Vec<(String, Fan)> = Vec::new();
    for d in 1..=4 {
        fans.push((format!("kite:{d}"), Fan::kite(d).unwrap()));
        fans.push((format!("typeb:{d}"), Fan::type_b(d).unwrap()));
    }
    for (name, fan) in &fans {
        let d = fan.dim();
        for (i, v) in fan.rays().iter().enumerate() {
            let c = fan.coords(v).unwrap();
            let expected: Vec<f64> = (0..fan.n()).map(|k| (k == i) as u8 as f64).collect();
            if sup_dist(&c.entries(), &expected) > 1e-12 {
                failures.push(format!("{name}: ray {i} maps to {:?}", c.entries()));
            }
        }
        for _ in 0..1000 {
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            let x: Vec<f64> = (0..d)
                .map(|_| scale * rng.random_range(-1.0..1.0))
                .collect();
            let c = fan.coords(&x).unwrap();
            let entries = c.entries();
            let mut rebuilt = vec![0.0; d];
            for (i, mu) in c.iter() {
                for (r, v) in rebuilt.iter_mut().zip(&fan.rays()[i]) {
                    *r += mu * v;
                }
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let err = rebuilt
                .iter()
                .zip(&x)
                .map(|(r, v)| (r - v).powi(2))
                .sum::<f64>()
                .sqrt();
            if err > 1e-10 * (1.0 + norm) {
                failures.push(format!("{name}: reconstruction error {err:e} at {x:?}"));
            }
            if c.support().len() > d {
                failures.push(format!("{name}: support {:?}", c.support()));
            }
            let s = rng.random_range(0.01..100.0);
            let sx: Vec<f64> = x.iter().map(|v| s * v).collect();
            let scaled = fan.coords(&sx).unwrap().entries();
            for (p, q) in scaled.iter().zip(&entries) {
                if (p - s * q).abs() > 1e-10 * (1.0 + s * q.abs()) {
                    failures.push(format!("{name}: homogeneity {p} vs {}", s * q));
                }
            }
            if name.starts_with("kite") {
                // rays e1, -e1, e2, -e2, ...
                let closed: Vec<f64> = x.iter().flat_map(|v| [v.max(0.0), (-v).max(0.0)]).collect();
                if sup_dist(&closed, &entries) > 1e-12 * (1.0 + norm) {
                    failures.push(format!("{name}: {entries:?} vs closed form {closed:?}"));
                }
            }
        }
    }
    verdict(
        9,
        "coordinate kernel invariants on built-in fans",
        &failures,
    );
}

#[test]
fn criterion_10_synthetic_experiment() {
    let start = Instant::now();
    let fan = Fan::type_b(2).unwrap();
    let spec = GenSpec {
        fan_name: "typeb:2".into(),
        a_true: default_star(fan.n()),
        count: 500,
        noise: 0.9,
        seed: 7,
    };
    let data = sample_star_dataset_on(&fan, &spec).unwrap();
    let a_mat = data_matrix(&fan, &data).unwrap();
    let lambdas: Vec<f64> = (0..40).map(|k| 0.05 * 1.15f64.powi(k)).collect();
    let sweep = lambda_sweep(&a_mat, data.labels(), &lambdas, &FitOptions::default()).unwrap();
    let mut best = (0.0, 0.0);
    for entry in sweep.into_iter().flatten() {
        let acc = entry.report.accuracy();
        if acc > best.0 {
            best = (acc, entry.lambda);
        }
    }
    let elapsed = start.elapsed();
    let mut failures = Vec::new();
    if best.0 < 0.80 {
        failures.push(format!(
            "best accuracy {:.3} at lambda {:.3}",
            best.0, best.1
        ));
    }
    if elapsed >= Duration::from_secs(60) {
        failures.push(format!("took {elapsed:?}"));
    }
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "    best train accuracy {:.3} at lambda {:.3} ({elapsed:.2?})",
        best.0, best.1
    )
    .unwrap();
    drop(out);
    verdict(
        10,
        "noisy 500-point star data, lambda sweep accuracy",
        &failures,
    );
}
