//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{Datelike, Days, NaiveDate, NaiveDateTime, Weekday};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand_distr::{Distribution, Normal};
use serde_json::Value;

use plugin_forecast::eval::{build_report, metrics, pearson, residual_stats, residuals, spearman};
use plugin_forecast::features::{FeatureMatrix, FeatureRow, FeatureSpec, Split};
use plugin_forecast::ingest::{parse_events, write_events, ChargingEvent, ColumnMapping};
use plugin_forecast::models::{adam_step, glm_fit, persistence_predict, AdamConfig, ModelArtifact, Network};
use plugin_forecast::pipeline::{self, prepare_matrix, train_models, ModelKind, RunConfig};
use plugin_forecast::rng::{derive_seed, seeded};
use plugin_forecast::series::{adf_test_fixed_lag, adf_test_values, adf_test_values_fixed_lag, aggregate, resample_halfhour_min, PluginSeries, Resolution, TimeWindow};
use plugin_forecast::synth::generate_events;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn data(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn at(date: NaiveDate, minutes: i64) -> NaiveDateTime {
    date.and_hms_opt(0, 0, 0).unwrap() + chrono::Duration::minutes(minutes)
}

fn aggregation_oracle() -> Outcome {
    let mut checked = 0;
    for seed in 0..50u64 {
        let mut rng = seeded(seed);
        let first = NaiveDate::from_ymd_opt(2017, 1, 1).unwrap() + Days::new(rng.random_range(0..365));
        let days = rng.random_range(1..=3u64);
        let span = days as i64 * 1440;
        let events: Vec<ChargingEvent> = (0..rng.random_range(0..=20))
            .map(|i| {
                let start = rng.random_range(-600..span + 300);
                let duration = match rng.random_range(0..10) {
                    0 => 0,
                    1..=4 => rng.random_range(1..=45),
                    _ => rng.random_range(1..=2500),
                };
                ChargingEvent::new(format!("e{i}"), None, 1, at(first, start), at(first, start + duration), 0.0, "org").unwrap()
            })
            .collect();

        // Round-trip through the CSV reader so ingestion is covered too.
        let mut csv = Vec::new();
        write_events(&mut csv, &events).unwrap();
        let (parsed, report) = parse_events(csv.as_slice(), &ColumnMapping::default()).unwrap();
        ensure(parsed == events && report.accepted == events.len(), || format!("seed {seed}: CSV round trip changed events"))?;

        let window = TimeWindow::whole_days(first, first + Days::new(days)).unwrap();
        let got = resample_halfhour_min(&aggregate(&parsed, &window)).unwrap();
        ensure(got.len() == days as usize * 48, || format!("seed {seed}: {} half-hour steps", got.len()))?;
        for block in 0..got.len() {
            let expected = (0..30)
                .map(|m| {
                    let t = at(first, block as i64 * 30 + m);
                    events.iter().filter(|e| e.start <= t && t < e.end).count() as u32
                })
                .min()
                .unwrap();
            ensure(got.values()[block] == expected, || {
                format!("seed {seed} block {block}: got {}, oracle {expected}", got.values()[block])
            })?;
            checked += 1;
        }
    }
    Ok(format!("50 datasets, {checked} half-hour values equal"))
}

fn persistence_lookup() -> Outcome {
    let config = RunConfig::default();
    let events = generate_events(&config.synth).unwrap();
    let series = pipeline::build_series(events, Default::default(), &config).unwrap().series;
    ensure(series.len() == 365 * 48, || format!("series has {} steps", series.len()))?;
    let mut checked = 0;
    for step in 0..series.len() {
        let ts = series.timestamp(step);
        let back = match ts.weekday() {
            Weekday::Mon => 3,
            Weekday::Sat => 7,
            _ => 1,
        };
        let source = series.index_of(ts - chrono::Duration::days(back));
        match (persistence_predict(&series, step), source) {
            (Ok(p), Some(j)) => {
                ensure(p == f64::from(series.values()[j]), || format!("step {step}: {p} vs {}", series.values()[j]))?;
                checked += 1;
            }
            (Err(_), None) => {}
            (p, s) => return Err(format!("step {step}: prediction {p:?}, source index {s:?}")),
        }
    }
    Ok(format!("{checked} predictions equal direct lookup"))
}

fn glm_recovery() -> Outcome {
    let mut rng = seeded(3);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let truth: Vec<[f64; 3]> = (0..7).map(|_| [0.0; 3].map(|_: f64| rng.random_range(-1.0..1.0))).collect();
    let base = NaiveDate::from_ymd_opt(2017, 1, 2).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let rows: Vec<FeatureRow> = (0..7 * 500)
        .map(|i| {
            let dow = (i % 7) as u8;
            let lags: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
            let clean: f64 = lags.iter().zip(&truth[usize::from(dow)]).map(|(x, b)| x * b).sum();
            FeatureRow {
                step: i,
                timestamp: base,
                target: clean + noise.sample(&mut rng),
                lag_values: lags,
                dow,
                month: 1,
                hour: 0,
            }
        })
        .collect();
    let matrix = FeatureMatrix {
        spec: FeatureSpec::default(),
        rows,
        split: None,
    };
    let model = glm_fit(&matrix).unwrap();
    let mut worst = 0.0f64;
    for (fitted, expected) in model.coefficients.iter().zip(&truth) {
        for (a, b) in fitted.iter().zip(expected) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 0.02, || format!("coefficient error {worst}"))?;

    let mut worst_orth = 0.0f64;
    for d in 0..7u8 {
        let rows: Vec<&FeatureRow> = matrix.rows.iter().filter(|r| r.dow == d).collect();
        let mut xtr = [0.0; 3];
        let mut xty = [0.0; 3];
        for r in &rows {
            let resid = r.target - model.predict_row(r);
            for i in 0..3 {
                xtr[i] += r.lag_values[i] * resid;
                xty[i] += r.lag_values[i] * r.target;
            }
        }
        let norm = xty.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel = xtr.iter().map(|v| v * v).sum::<f64>().sqrt() / norm;
        worst_orth = worst_orth.max(rel);
    }
    ensure(worst_orth <= 1e-8, || format!("orthogonality residual {worst_orth:e}"))?;
    Ok(format!("max coefficient error {worst:.2e}, max orthogonality {worst_orth:.1e}"))
}

fn gradient_check() -> Outcome {
    let h = 1e-5;
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let net = Network::he_init(4, &[3], 1000 + case);
        let mut rng = seeded(case);
        let x = Array2::from_shape_fn((1, 4), |_| rng.random_range(-2.0..2.0));
        let y = Array1::from_elem(1, rng.random_range(-2.0..2.0));
        let (_, grads) = net.loss_and_gradients(x.view(), y.view()).unwrap();
        #[allow(clippy::needless_range_loop)]
        for l in 0..net.layers.len() {
            let n_w = net.layers[l].weights.len();
            for p in 0..n_w + net.layers[l].bias.len() {
                let loss_at = |delta: f64| {
                    let mut n = net.clone();
                    if p < n_w {
                        n.layers[l].weights.as_slice_mut().unwrap()[p] += delta;
                    } else {
                        n.layers[l].bias[p - n_w] += delta;
                    }
                    n.loss(x.view(), y.view()).unwrap()
                };
                let numeric = (loss_at(h) - loss_at(-h)) / (2.0 * h);
                let analytic = if p < n_w {
                    grads[l].weights.as_slice().unwrap()[p]
                } else {
                    grads[l].bias[p - n_w]
                };
                let scale = analytic.abs().max(numeric.abs());
                let rel = if scale == 0.0 { 0.0 } else { (analytic - numeric).abs() / scale };
                ensure(rel <= 1e-4, || {
                    format!("case {case} layer {l} param {p}: analytic {analytic}, numeric {numeric}")
                })?;
                worst = worst.max(rel);
            }
        }
    }
    Ok(format!("100 inputs x 19 parameters, max relative error {worst:.1e}"))
}

fn adam_oracle() -> Outcome {
    let mut rng = seeded(5);
    let c: Vec<f64> = (0..8).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut worst = 0.0f64;
    for hyper in [
        AdamConfig::default(),
        AdamConfig {
            step_size: 0.1,
            ..AdamConfig::default()
        },
    ] {
        let mut theta = vec![0.0; c.len()];
        let (mut m, mut v) = (vec![0.0; c.len()], vec![0.0; c.len()]);
        let mut r_theta = vec![0.0; c.len()];
        let (mut r_m, mut r_v) = (vec![0.0; c.len()], vec![0.0; c.len()]);
        for t in 1..=200u64 {
            let grad: Vec<f64> = theta.iter().zip(&c).map(|(p, c)| 2.0 * (p - c)).collect();
            adam_step(&mut theta, &grad, &mut m, &mut v, t, &hyper);
            for i in 0..c.len() {
                let g = 2.0 * (r_theta[i] - c[i]);
                r_m[i] = hyper.beta1 * r_m[i] + (1.0 - hyper.beta1) * g;
                r_v[i] = hyper.beta2 * r_v[i] + (1.0 - hyper.beta2) * g * g;
                let m_hat = r_m[i] / (1.0 - hyper.beta1.powf(t as f64));
                let v_hat = r_v[i] / (1.0 - hyper.beta2.powf(t as f64));
                r_theta[i] -= hyper.step_size * m_hat / (v_hat.sqrt() + hyper.epsilon);
                let diff = (theta[i] - r_theta[i]).abs();
                ensure(diff <= 1e-10, || format!("step {t} coordinate {i}: {} vs {}", theta[i], r_theta[i]))?;
                worst = worst.max(diff);
            }
        }
    }
    Ok(format!("2 step sizes x 200 steps, max deviation {worst:.1e}"))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn metric_oracles() -> Outcome {
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let mut rng = seeded(600 + case);
        let n = rng.random_range(1..300);
        let actual: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..40u32))).collect();
        let predicted: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..50.0)).collect();

        let m = metrics(&predicted, &actual).unwrap();
        let (mut sq, mut abs, mut pct, mut kept) = (0.0, 0.0, 0.0, 0usize);
        for i in 0..n {
            let e = predicted[i] - actual[i];
            sq += e * e;
            abs += e.abs();
            if actual[i] != 0.0 {
                pct += (e / actual[i]).abs();
                kept += 1;
            }
        }
        let rmse = (sq / n as f64).sqrt();
        let mae = abs / n as f64;
        let mape = (kept > 0).then(|| 100.0 * pct / kept as f64);
        ensure(close(m.rmse, rmse) && close(m.mae, mae), || format!("case {case}: rmse/mae {m:?}"))?;
        ensure(m.rmse >= m.mae, || format!("case {case}: rmse < mae"))?;
        ensure(m.n == n && m.n_skipped_zero_actual == n - kept, || format!("case {case}: counts"))?;
        match (m.mape_pct, mape) {
            (Some(a), Some(b)) => ensure(close(a, b), || format!("case {case}: mape {a} vs {b}"))?,
            (None, None) => {}
            other => return Err(format!("case {case}: mape {other:?}")),
        }

        let r = residuals(&predicted, &actual).unwrap();
        let s = residual_stats(&r).unwrap();
        let mean = r.iter().sum::<f64>() / n as f64;
        let var = r.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        let mut sorted = r.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let quantile = |p: f64| {
            let pos = p * (n - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            sorted[lo] * (1.0 - (pos - lo as f64)) + sorted[hi] * (pos - lo as f64)
        };
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        let pairs = [
            (s.mean, mean),
            (s.median, median),
            (s.std_dev, var.sqrt()),
            (s.range, sorted[n - 1] - sorted[0]),
            (s.iqr, quantile(0.75) - quantile(0.25)),
        ];
        for (got, want) in pairs {
            ensure(close(got, want), || format!("case {case}: residual stat {got} vs {want}"))?;
            worst = worst.max((got - want).abs());
        }
        ensure(s.range >= s.iqr && s.iqr >= 0.0 && s.std_dev >= 0.0, || format!("case {case}: ordering"))?;
    }
    Ok(format!("100 vectors, max residual-stat deviation {worst:.1e}"))
}

fn correlation_oracles() -> Outcome {
    let reference = data("correlation_reference.json");
    let cases = reference.as_array().unwrap();
    let mut worst = 0.0f64;
    for case in cases {
        let (x, y) = (floats(&case["x"]), floats(&case["y"]));
        let label = case["label"].as_str().unwrap();
        for (got, want) in [
            (pearson(&x, &y).unwrap(), case["pearson"].as_f64().unwrap()),
            (spearman(&x, &y).unwrap(), case["spearman"].as_f64().unwrap()),
        ] {
            ensure((got - want).abs() <= 1e-12, || format!("{label}: {got} vs {want}"))?;
            worst = worst.max((got - want).abs());
        }
    }

    let mut runner = TestRunner::new(ProptestConfig {
        cases: 100,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let strategy = (prop::collection::vec((-400i32..400, -400i32..400), 3..80), 0usize..4);
    runner
        .run(&strategy, |(pairs, which)| {
            let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0) / 8.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1) / 8.0).collect();
            let f = |v: f64| match which {
                0 => v.exp(),
                1 => v * v * v + v,
                2 => v.atan() * 3.0 - 7.0,
                _ => 2.5 * v + 1.0,
            };
            let fx: Vec<f64> = x.iter().map(|v| f(*v)).collect();
            match (spearman(&x, &y), spearman(&fx, &y)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
            Ok(())
        })
        .map_err(|e| format!("monotone invariance: {e}"))?;
    Ok(format!("{} reference cases (max deviation {worst:.1e}), 100 monotone-invariance cases", cases.len()))
}

/// Epochs for the ordering gate: 300 rather than the default 1000. On the
/// default synthetic year a 1000-epoch run keeps checkpoints from epochs
/// 196-648 but gives the same test-RMSE ordering, with each network within
/// about 1% of its 300-epoch RMSE, while five seeds at 1000 epochs take
/// roughly three times as long.
const ORDERING_EPOCHS: usize = 300;

fn model_ordering() -> Outcome {
    let mut config = RunConfig::default();
    config.train.network.epochs = ORDERING_EPOCHS;
    let events = generate_events(&config.synth).unwrap();
    let series = pipeline::build_series(events, Default::default(), &config).unwrap().series;
    let matrix = prepare_matrix(&series, &config).unwrap();
    let baselines = [ModelArtifact::persistence(), ModelArtifact::glm(glm_fit(&matrix).unwrap())];
    let base = build_report(&baselines, &matrix, &series).unwrap();
    let test_rmse = |r: &plugin_forecast::eval::EvaluationReport, i: usize| r.models[i].metrics(Split::Test).unwrap().rmse;
    let (persistence, glm) = (test_rmse(&base, 0), test_rmse(&base, 1));

    let mut passed = 0;
    let mut summary = Vec::new();
    for seed in 0..5u64 {
        config.models = vec![ModelKind::NnV1, ModelKind::NnV2, ModelKind::NnV3];
        config.seeds.nn_v1 = derive_seed(seed, "nn-v1");
        config.seeds.nn_v2 = derive_seed(seed, "nn-v2");
        config.seeds.nn_v3 = derive_seed(seed, "nn-v3");
        let trained: Vec<ModelArtifact> = train_models(&matrix, &config).unwrap().into_iter().map(|t| t.artifact).collect();
        let report = build_report(&trained, &matrix, &series).unwrap();
        let (v1, v2, v3) = (test_rmse(&report, 0), test_rmse(&report, 1), test_rmse(&report, 2));
        let ok = v3 <= v2 && v2 <= glm && glm <= persistence && v3 <= 0.85 * persistence;
        passed += usize::from(ok);
        summary.push(format!("seed {seed}: v1 {v1:.3} v2 {v2:.3} v3 {v3:.3}{}", if ok { "" } else { " (out of order)" }));
    }
    let detail = format!(
        "{passed}/5 seeds ordered at {ORDERING_EPOCHS} epochs; persistence {persistence:.3}, glm {glm:.3}; {}",
        summary.join("; ")
    );
    ensure(passed >= 4, || detail.clone())?;
    Ok(detail)
}

fn determinism() -> Outcome {
    let run = |dir: &Path| -> Vec<u8> {
        let mut config = RunConfig {
            output_dir: dir.to_path_buf(),
            ..RunConfig::default()
        };
        config.train.network.epochs = 3;
        pipeline::cmd_synth(&config).unwrap();
        pipeline::cmd_build(&config).unwrap();
        pipeline::cmd_train(&config).unwrap();
        pipeline::cmd_report(&config).unwrap();
        std::fs::read(dir.join("report.json")).unwrap()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (first, second) = (run(a.path()), run(b.path()));
    ensure(first == second, || "report.json differs between runs".into())?;
    for name in ["analysis.json", "metrics.csv", "models/nn-v3.json", "series.csv"] {
        let same = std::fs::read(a.path().join(name)).unwrap() == std::fs::read(b.path().join(name)).unwrap();
        ensure(same, || format!("{name} differs between runs"))?;
    }
    Ok(format!("report.json identical ({} bytes)", first.len()))
}

fn adf_sanity() -> Outcome {
    let reference = data("adf_reference.json");
    let series = |name: &str| floats(&reference["series"][name]);

    let walk = adf_test_values(&series("random_walk"), 12).unwrap();
    let noise = adf_test_values(&series("white_noise"), 12).unwrap();
    ensure(!walk.stationary_at_5pct, || format!("random walk rejected: {walk:?}"))?;
    ensure(noise.stationary_at_5pct, || format!("white noise not rejected: {noise:?}"))?;
    for lag in [0, 4] {
        ensure(!adf_test_values_fixed_lag(&series("random_walk"), lag).unwrap().stationary_at_5pct, || {
            format!("random walk rejected at lag {lag}")
        })?;
        ensure(adf_test_values_fixed_lag(&series("white_noise"), lag).unwrap().stationary_at_5pct, || {
            format!("white noise not rejected at lag {lag}")
        })?;
    }

    let mut worst = 0.0f64;
    let fixed = reference["fixed"].as_array().unwrap();
    for case in fixed {
        let name = case["series"].as_str().unwrap();
        let lag = case["lag"].as_u64().unwrap() as usize;
        let got = adf_test_values_fixed_lag(&series(name), lag).unwrap();
        let want = case["statistic"].as_f64().unwrap();
        ensure((got.statistic - want).abs() <= 1e-6, || format!("{name} lag {lag}: {} vs {want}", got.statistic))?;
        ensure(got.nobs as u64 == case["nobs"].as_u64().unwrap(), || format!("{name} lag {lag}: nobs {}", got.nobs))?;
        worst = worst.max((got.statistic - want).abs());
        if name == "counts" {
            // Same values through the plug-in series entry point.
            let start = NaiveDate::from_ymd_opt(2017, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
            let values = series(name).iter().map(|v| *v as u32).collect();
            let s = PluginSeries::unmasked(start, Resolution::HalfHour, values).unwrap();
            let via_series = adf_test_fixed_lag(&s, lag).unwrap().statistic;
            ensure((via_series - want).abs() <= 1e-6, || format!("counts series lag {lag}: {via_series}"))?;
        }
    }
    Ok(format!(
        "walk {:.3} kept, noise {:.3} rejected; {} fixed-lag statistics within {worst:.1e}",
        walk.statistic,
        noise.statistic,
        fixed.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("aggregation matches per-minute oracle", aggregation_oracle, Some(10)),
        ("persistence equals calendar lookup", persistence_lookup, Some(5)),
        ("GLM coefficient recovery", glm_recovery, Some(5)),
        ("backprop gradient check", gradient_check, Some(10)),
        ("Adam matches reference loop", adam_oracle, Some(1)),
        ("metric formulas", metric_oracles, Some(5)),
        ("correlation oracles", correlation_oracles, Some(5)),
        ("test RMSE model ordering", model_ordering, Some(900)),
        ("end-to-end determinism", determinism, None),
        ("ADF sanity and reference match", adf_sanity, Some(5)),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = started.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(_), Some(limit)) if elapsed > Duration::from_secs(*limit) => {
                Err(format!("took {:.1}s, budget {limit}s", elapsed.as_secs_f64()))
            }
            (o, _) => o,
        };
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {status} [{:.2}s] {name}: {detail}", i + 1, elapsed.as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
