//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ndarray::{Array1, Array2};
use ord_core::dataset::{ColumnSchema, LabelAlphabet, Schema, TabularDataset, MAJORITY, MINORITY, OVERLAP};
use ord_core::experiments::{
    ablate_overlap_removal, bench_overlap, run_efficacy, DataSource, LoadedData, PipelineConfig, TestSource, TestSpec,
};
use ord_core::generators::{
    adasyn, adasyn_allocation, borderline_smote, danger_set, fit_generator, fit_gmm, smote, GeneratorConfig,
    GeneratorKind, GmmParams, SmoteConfig, SmoteOutput,
};
use ord_core::learners::{
    fit_gbdt, fit_logistic, logistic_loss_and_grad, mlp_loss_and_grad, GbdtParams, LearnerKind, LogisticParams,
    MlpModel,
};
use ord_core::metrics::{auc, classification_metrics, paired_t_test, threshold_sweep, BinaryConfusion, ScoredPredictions};
use ord_core::oracle_toy::{bayes_label, make_blobs, BlobWorld};
use ord_core::overlap::{detect_overlap, score_majority, OverlapConfig, TAU_GRID};
use ord_core::seed::rng_from_seed;
use rand::Rng;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

// Tolerances
const METRIC_TOL: f64 = 1e-12;
const TTEST_TOL: f64 = 1e-6;
const GRAD_REL_TOL: f64 = 1e-4;
const EM_MONOTONE_TOL: f64 = 1e-9;
const LOSS_TRACE_TOL: f64 = 1e-12;
const BOX_TOL: f64 = 1e-9;
// Criterion 2: Ord macro may trail Baseline by at most this many points.
const MACRO_SLACK_POINTS: f64 = 0.5;
const SCALING_RATIO_MAX: f64 = 3.0;
// Criterion 1: expected (not gated) mean gain in points.
const EXPECTED_ORACLE_GAIN_POINTS: f64 = 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn blobs1_config() -> PipelineConfig {
    PipelineConfig {
        data: DataSource::Toy {
            world: "blobs1".into(),
            seed: 0,
        },
        overlap: Some(OverlapConfig {
            tau: 0.2,
            k_folds: 2,
            n_trees: 50,
            ..Default::default()
        }),
        classifiers: vec![LearnerKind::Gbdt],
        seeds: SEEDS.to_vec(),
        ..Default::default()
    }
}

struct ToyRun {
    report: ord_core::experiments::EvalReport,
    seconds: f64,
}

fn toy_run() -> ToyRun {
    let start = Instant::now();
    let cfg = blobs1_config();
    let loaded = cfg.load_data().expect("load blobs1");
    let report = run_efficacy(&cfg, &loaded).expect("efficacy run");
    ToyRun {
        report,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn criterion_1(run: &ToyRun) -> Outcome {
    let oracle = |mode: &str, seed: u64, minority: bool| -> f64 {
        let rec = run.report.synthesis.iter().find(|r| r.mode == mode && r.seed == seed).expect("record");
        let o = rec.oracle.expect("oracle score");
        if minority {
            o.minority_acc.unwrap()
        } else {
            o.majority_acc.unwrap()
        }
    };
    let gains: Vec<f64> = SEEDS.iter().map(|&s| 100.0 * (oracle("ord", s, true) - oracle("baseline", s, true))).collect();
    let maj: Vec<f64> = SEEDS.iter().map(|&s| 100.0 * (oracle("ord", s, false) - oracle("baseline", s, false))).collect();
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    let mean_maj = maj.iter().sum::<f64>() / maj.len() as f64;
    let nonneg = gains.iter().filter(|&&g| g >= 0.0).count();
    let in_time = run.seconds < 120.0;
    let expected = if mean >= EXPECTED_ORACLE_GAIN_POINTS { "met" } else { "NOT met" };
    outcome(
        nonneg >= 4 && mean >= 0.0 && in_time,
        format!(
            "oracle minority gain per seed {gains:.2?} (mean {mean:.2} pts; expected >= {EXPECTED_ORACLE_GAIN_POINTS} {expected}); \
             gain >= 0 in {nonneg}/5; majority oracle gain mean {mean_maj:.2} pts; runtime {:.1}s",
            run.seconds
        ),
    )
}

fn criterion_2(run: &ToyRun) -> Outcome {
    let get = |mode: &str, seed: u64| {
        run.report
            .cells
            .iter()
            .find(|c| c.mode == mode && c.seed == seed && c.classifier == LearnerKind::Gbdt)
            .expect("cell")
            .metrics
    };
    let mean = |mode: &str, f: &dyn Fn(&ord_core::experiments::CellMetrics) -> f64| {
        SEEDS.iter().map(|&s| f(&get(mode, s))).sum::<f64>() / SEEDS.len() as f64
    };
    let macro_of = |m: &ord_core::experiments::CellMetrics| 100.0 * m.macro_acc.unwrap();
    let (ord, base) = (mean("ord", &macro_of), mean("baseline", &macro_of));
    let wins = SEEDS
        .iter()
        .filter(|&&s| get("ord", s).minority_acc.unwrap() > get("baseline", s).minority_acc.unwrap())
        .count();
    let strictly = if ord > base { "strictly greater" } else { "not strictly greater" };
    outcome(
        ord >= base - MACRO_SLACK_POINTS && wins >= 3,
        format!("GBDT macro ord {ord:.2} vs baseline {base:.2} ({strictly}); minority strictly greater in {wins}/5 seeds"),
    )
}

fn criterion_3() -> Outcome {
    let world = BlobWorld::blobs1();
    let mut rows = vec![];
    let mut pass = true;
    for &seed in &SEEDS {
        let d = make_blobs(&world, seed).unwrap();
        let cfg = OverlapConfig {
            tau: 0.2,
            n_trees: 50,
            seed,
            ..Default::default()
        };
        let (ternary, _) = detect_overlap(&d, &cfg).unwrap();
        let mean_post = |label: u8| {
            let idx = ternary.indices_of(label);
            let x = ternary.features();
            idx.iter()
                .map(|&i| bayes_label(&world, &x.row(i).to_vec(), world.priors).posterior[1])
                .sum::<f64>()
                / idx.len().max(1) as f64
        };
        let (p01, p00) = (mean_post(OVERLAP), mean_post(MAJORITY));
        let ok = ternary.count_label(OVERLAP) > 0 && p01 > p00;
        pass &= ok;
        rows.push(format!("s{seed}: {p01:.4} > {p00:.6}"));
    }
    outcome(pass, format!("mean P(minority|x) over D01 vs D00: {}", rows.join(", ")))
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut counts_all = vec![];
    for &seed in &SEEDS[..3] {
        let d = make_blobs(&BlobWorld::blobs1(), seed).unwrap();
        let scores = score_majority(
            &d,
            &OverlapConfig {
                n_trees: 50,
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let sets: Vec<std::collections::BTreeSet<usize>> =
            TAU_GRID.iter().map(|&t| scores.assign(t, false).overlap_rows().into_iter().collect()).collect();
        let counts: Vec<usize> = sets.iter().map(|s| s.len()).collect();
        pass &= counts.windows(2).all(|w| w[1] <= w[0]);
        pass &= sets.windows(2).all(|w| w[1].is_subset(&w[0]));
        counts_all.push(counts);
    }
    outcome(pass, format!("|D01| over tau grid {TAU_GRID:?}: {counts_all:?}; nested sets"))
}

fn overlap_1d(seed: u64) -> LoadedData {
    let mut rng = rng_from_seed(seed);
    let mut xs: Vec<f64> = (0..800).map(|_| rng.random_range(0.0..10.0)).collect();
    xs.extend((0..160).map(|_| rng.random_range(8.0..12.0)));
    let labels = (0..960).map(|i| u8::from(i >= 800)).collect();
    let schema = Schema::new(vec![ColumnSchema::numeric("x")], "y", "1").unwrap();
    let data = TabularDataset::new(schema, Array2::from_shape_vec((960, 1), xs).unwrap(), labels, LabelAlphabet::Binary)
        .unwrap();
    LoadedData { data, world: None }
}

fn criterion_5() -> Outcome {
    let mut parts = vec![];
    let mut pass = true;
    let one_d = PipelineConfig {
        data: DataSource::Csv {
            path: "fixture".into(),
            schema: "fixture".into(),
        },
        test: TestSpec {
            source: Some(TestSource::Holdout),
            per_class: 60,
        },
        overlap: Some(OverlapConfig {
            tau: 0.3,
            n_trees: 50,
            ..Default::default()
        }),
        classifiers: vec![LearnerKind::Gbdt],
        seeds: SEEDS.to_vec(),
        ..Default::default()
    };
    let blobs = PipelineConfig {
        test: TestSpec {
            source: Some(TestSource::Fresh),
            per_class: 2000,
        },
        ..blobs1_config()
    };
    for (name, cfg, loaded) in [
        ("1d", one_d, overlap_1d(11)),
        ("blobs1", blobs.clone(), blobs.load_data().unwrap()),
    ] {
        let r = ablate_overlap_removal(&cfg, &loaded).unwrap();
        let m = |mode: &str, s: u64| {
            r.cells
                .iter()
                .find(|c| c.mode == mode && c.seed == s)
                .unwrap()
                .metrics
                .minority_acc
                .unwrap()
        };
        let wins = SEEDS.iter().filter(|&&s| m("overlap_removed", s) >= m("full", s)).count();
        pass &= wins >= 4;
        parts.push(format!("{name}: removed >= full in {wins}/5"));
    }
    outcome(pass, parts.join("; "))
}

fn brute_confusion(y: &[u8], p: &[u8]) -> [usize; 4] {
    let mut c = [0; 4];
    for (&t, &q) in y.iter().zip(p) {
        let k = match (t, q) {
            (1, 1) => 0,
            (0, 1) => 1,
            (1, 0) => 2,
            _ => 3,
        };
        c[k] += 1;
    }
    c
}

fn brute_auc(y: &[u8], s: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1 && y[j] == 0 {
                den += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

fn brute_macro(y: &[u8], s: &[f64], t: f64) -> f64 {
    let (mut tp, mut p, mut tn, mut n) = (0.0, 0.0, 0.0, 0.0);
    for (&yi, &si) in y.iter().zip(s) {
        if yi == 1 {
            p += 1.0;
            if si >= t {
                tp += 1.0;
            }
        } else {
            n += 1.0;
            if si < t {
                tn += 1.0;
            }
        }
    }
    (tp / p + tn / n) / 2.0
}

/// Two-sided Student-t p-value by Simpson integration after x = sqrt(df) tan(theta),
/// which turns the density into cos^(df-1)(theta) on [0, pi/2].
fn integrated_t_p(t: f64, df: f64) -> f64 {
    let f = |th: f64| th.cos().powf(df - 1.0);
    let simpson = |a: f64, b: f64| {
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let th = (t.abs() / df.sqrt()).atan();
    simpson(th, half_pi) / simpson(0.0, half_pi)
}

fn criterion_6() -> Outcome {
    let mut rng = rng_from_seed(606);
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..200 {
        let n = rng.random_range(2..60);
        let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.3))).collect();
        y[0] = 0;
        y[1] = 1;
        // coarse grid so ties occur
        let s: Vec<f64> = (0..n).map(|_| (rng.random_range(0..20) as f64) / 19.0).collect();
        let pred: Vec<u8> = s.iter().map(|&v| u8::from(v >= 0.5)).collect();

        let c = BinaryConfusion::from_predictions(&y, &pred);
        let b = brute_confusion(&y, &pred);
        ok &= [c.tp, c.fp, c.fn_, c.tn] == b;
        let m = classification_metrics(&c);
        let (tp, fp, fn_, tn) = (b[0] as f64, b[1] as f64, b[2] as f64, b[3] as f64);
        let checks = [
            (m.minority_acc.unwrap(), tp / (tp + fn_)),
            (m.majority_acc.unwrap(), tn / (tn + fp)),
            (m.macro_acc.unwrap(), (tp / (tp + fn_) + tn / (tn + fp)) / 2.0),
            (m.f1, if tp + fp + fn_ == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) }),
        ];
        let sp = ScoredPredictions::new(y.clone(), s.clone()).unwrap();
        let a = auc(&sp).unwrap();
        worst = checks.iter().map(|(x, r)| (x - r).abs()).fold(worst, f64::max);
        worst = worst.max((a - brute_auc(&y, &s)).abs());
        let grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        let sweep = threshold_sweep(&sp, &grid).unwrap();
        for &(t, v) in &sweep.curve {
            worst = worst.max((v - brute_macro(&y, &s, t)).abs());
        }
        let best = sweep.curve.iter().map(|c| c.1).fold(f64::MIN, f64::max);
        ok &= (sweep.best_score - best).abs() <= METRIC_TOL;
    }
    ok &= worst <= METRIC_TOL;

    let mut tworst = 0.0f64;
    let reference = paired_t_test(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
    tworst = tworst.max((reference.two_sided_p - integrated_t_p(reference.t, 2.0)).abs());
    let ref_ok = (reference.two_sided_p - 0.0742).abs() < 5e-5;
    for _ in 0..50 {
        let n = rng.random_range(2..12);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| v + rng.random_range(-0.5..0.8)).collect();
        let r = paired_t_test(&a, &b).unwrap();
        tworst = tworst.max((r.two_sided_p - integrated_t_p(r.t, (n - 1) as f64)).abs());
    }
    outcome(
        ok && ref_ok && tworst <= TTEST_TOL,
        format!(
            "200 fixtures, max metric error {worst:.1e}; t-test max |p - integral| {tworst:.1e}; d=(1,2,3) p={:.4}",
            reference.two_sided_p
        ),
    )
}

fn fixture(rng: &mut impl Rng, n: usize, p: usize) -> (Array2<f64>, Vec<u8>) {
    let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-2.0..2.0));
    let y = (0..n).map(|i| u8::from(x[[i, 0]] + rng.random_range(-1.0..1.0) > 0.0)).collect();
    (x, y)
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt()).max(1e-8);
    diff / scale
}

fn criterion_7() -> Outcome {
    let mut rng = rng_from_seed(707);
    let h = 1e-6;
    let (mut worst_lr, mut worst_mlp) = (0.0f64, 0.0f64);
    for k in 0..20 {
        let (x, y) = fixture(&mut rng, 40, 4);
        let w = Array1::from_shape_fn(4, |_| rng.random_range(-1.0..1.0));
        let b = 0.3;
        let (_, gw, gb) = logistic_loss_and_grad(x.view(), &y, w.view(), b, 0.01);
        let mut numeric = vec![];
        for j in 0..4 {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            let lp = logistic_loss_and_grad(x.view(), &y, wp.view(), b, 0.01).0;
            let lm = logistic_loss_and_grad(x.view(), &y, wm.view(), b, 0.01).0;
            numeric.push((lp - lm) / (2.0 * h));
        }
        let lp = logistic_loss_and_grad(x.view(), &y, w.view(), b + h, 0.01).0;
        let lm = logistic_loss_and_grad(x.view(), &y, w.view(), b - h, 0.01).0;
        numeric.push((lp - lm) / (2.0 * h));
        let mut analytic = gw.to_vec();
        analytic.push(gb);
        worst_lr = worst_lr.max(rel_err(&analytic, &numeric));

        let model = MlpModel::init(4, 6, 70 + k);
        let (_, g) = mlp_loss_and_grad(&model, x.view(), &y);
        let flat = model.to_flat();
        let mut numeric = vec![];
        for j in 0..flat.len() {
            let mut m = model.clone();
            let mut v = flat.clone();
            v[j] += h;
            m.set_flat(&v);
            let lp = mlp_loss_and_grad(&m, x.view(), &y).0;
            v[j] -= 2.0 * h;
            m.set_flat(&v);
            let lm = mlp_loss_and_grad(&m, x.view(), &y).0;
            numeric.push((lp - lm) / (2.0 * h));
        }
        worst_mlp = worst_mlp.max(rel_err(&g, &numeric));
    }

    let mut em_worst = 0.0f64;
    for k in 0..50 {
        let n = rng.random_range(40..120);
        let (x, _) = fixture(&mut rng, n, 2);
        let mut x = x;
        for i in 0..n / 2 {
            x[[i, 0]] += 5.0;
        }
        let labels = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
        let schema = Schema::new(vec![ColumnSchema::numeric("a"), ColumnSchema::numeric("b")], "y", "1").unwrap();
        let d = TabularDataset::new(schema, x, labels, LabelAlphabet::Binary).unwrap();
        let params = GmmParams {
            n_components: 3,
            max_iter: 60,
            tol: 0.0,
        };
        let m = fit_gmm(&d, &params, k).unwrap();
        for c in &m.classes {
            for w in c.loglik_trace.windows(2) {
                em_worst = em_worst.max(w[0] - w[1]);
            }
        }
    }

    let mut trace_worst = f64::MIN;
    for _ in 0..10 {
        let (x, y) = fixture(&mut rng, 80, 3);
        let g = fit_gbdt(x.view(), &y, &GbdtParams { n_rounds: 50, ..Default::default() }).unwrap();
        let l = fit_logistic(x.view(), &y, &LogisticParams::default()).unwrap();
        for w in g.trace.windows(2).chain(l.loss_trace.windows(2)) {
            trace_worst = trace_worst.max(w[1] - w[0]);
        }
    }
    outcome(
        worst_lr < GRAD_REL_TOL && worst_mlp < GRAD_REL_TOL && em_worst <= EM_MONOTONE_TOL && trace_worst <= LOSS_TRACE_TOL,
        format!(
            "grad rel err logistic {worst_lr:.1e}, mlp {worst_mlp:.1e}; worst EM decrease {em_worst:.1e}; \
             worst loss increase (gbdt, logistic) {trace_worst:.1e}"
        ),
    )
}

fn mixed_table(rng: &mut impl Rng, n: usize) -> TabularDataset {
    let schema = Schema::new(
        vec![
            ColumnSchema::numeric("a"),
            ColumnSchema::categorical("c", vec!["p".into(), "q".into(), "r".into()]),
            ColumnSchema::numeric("b"),
        ],
        "y",
        "1",
    )
    .unwrap();
    let mut x = Array2::zeros((n, 3));
    let mut labels = vec![];
    for i in 0..n {
        let minority = i % 4 == 0;
        let shift = if minority { 1.5 } else { 0.0 };
        x[[i, 0]] = rng.random_range(-2.0..2.0) + shift;
        x[[i, 1]] = rng.random_range(0..3) as f64;
        x[[i, 2]] = rng.random_range(-2.0..2.0) - shift;
        labels.push(u8::from(minority));
    }
    TabularDataset::new(schema, x, labels, LabelAlphabet::Binary).unwrap()
}

fn inside_box(d: &TabularDataset, out: &SmoteOutput) -> bool {
    let x = d.features();
    out.pairs.iter().enumerate().all(|(i, &(s, nn))| {
        (0..d.n_features()).all(|j| {
            let v = out.rows[[i, j]];
            if d.schema().columns[j].is_categorical() {
                v == x[[s, j]]
            } else {
                let (lo, hi) = (x[[s, j]].min(x[[nn, j]]), x[[s, j]].max(x[[nn, j]]));
                v >= lo - BOX_TOL && v <= hi + BOX_TOL
            }
        })
    })
}

/// Danger rows by direct neighbor counting in population-standardized space.
fn brute_danger(pts: &[(f64, f64)], labels: &[u8], m: usize) -> Vec<usize> {
    let n = pts.len() as f64;
    let sd = |f: &dyn Fn(&(f64, f64)) -> f64| {
        let mean = pts.iter().map(f).sum::<f64>() / n;
        (pts.iter().map(|p| (f(p) - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    let (sx, sy) = (sd(&|p| p.0), sd(&|p| p.1));
    let mut out = vec![];
    for i in 0..pts.len() {
        if labels[i] != 1 {
            continue;
        }
        let mut others: Vec<(f64, usize)> = (0..pts.len())
            .filter(|&j| j != i)
            .map(|j| (((pts[i].0 - pts[j].0) / sx).powi(2) + ((pts[i].1 - pts[j].1) / sy).powi(2), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let maj = others[..m].iter().filter(|(_, j)| labels[*j] == 0).count();
        if 2 * maj >= m && maj < m {
            out.push(i);
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let mut rng = rng_from_seed(808);
    let d = mixed_table(&mut rng, 200);
    let cfg = SmoteConfig::default();
    let mut draws = 0;
    let mut boxed = true;
    for method in 0..3 {
        let mut r = rng_from_seed(800 + method);
        let out = match method {
            0 => smote(&d, MINORITY, &cfg, 400, &mut r),
            1 => borderline_smote(&d, MINORITY, &cfg, 300, &mut r),
            _ => adasyn(&d, MINORITY, &cfg, 300, &mut r),
        }
        .unwrap();
        draws += out.rows.nrows();
        boxed &= inside_box(&d, &out);
    }
    let alloc = adasyn_allocation(&[1.0, 0.0], 10);
    let alloc_ok = alloc == vec![10, 0];

    let pts = [
        (0.0, 0.0),
        (0.3, 0.1),
        (0.1, 0.4),
        (4.0, 4.0),
        (4.4, 3.8),
        (9.0, 9.0),
        (4.2, 4.3),
        (3.7, 4.1),
        (9.3, 8.8),
        (8.8, 9.2),
        (9.1, 9.4),
        (0.5, 0.3),
    ];
    // 0..=2 and 11: minority core; 3, 4: minority on the border of a majority pair
    let labels = vec![1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 1];
    let x = Array2::from_shape_fn((12, 2), |(i, j)| if j == 0 { pts[i].0 } else { pts[i].1 });
    let schema = Schema::new(vec![ColumnSchema::numeric("a"), ColumnSchema::numeric("b")], "y", "1").unwrap();
    let twelve = TabularDataset::new(schema, x, labels.clone(), LabelAlphabet::Binary).unwrap();
    let dcfg = SmoteConfig {
        k_neighbors: 2,
        m_neighbors: 4,
        ..Default::default()
    };
    let danger = danger_set(&twelve, 1, &dcfg).unwrap();
    let expected = brute_danger(&pts, &labels, 4);
    let danger_ok = danger == expected && danger == vec![3, 4];

    let mut echo = true;
    let ternary = {
        let mut l = d.labels().to_vec();
        for (i, v) in l.iter_mut().enumerate() {
            if *v == 0 && i % 5 == 0 {
                *v = OVERLAP;
            }
        }
        d.with_labels(l, LabelAlphabet::Ternary).unwrap()
    };
    let mut kinds = vec![];
    for kind in [GeneratorKind::Gmm, GeneratorKind::Smote, GeneratorKind::BorderlineSmote, GeneratorKind::Adasyn] {
        let gcfg = GeneratorConfig {
            kind,
            ..Default::default()
        };
        for data in [&d, &ternary] {
            let g = fit_generator(&gcfg, data, 9).unwrap();
            for label in [MAJORITY, MINORITY] {
                let batch = g.sample(label, 50, 3).unwrap();
                echo &= batch.data.labels().iter().all(|&l| l == label);
            }
        }
        kinds.push(format!("{kind:?}"));
    }
    let pool = ternary.clone();
    let bridge = ord_core::generators::ExternalBridge::from_dataset(pool);
    for label in [MAJORITY, MINORITY, OVERLAP] {
        let rows = bridge.draw(label, 10, 1).unwrap();
        echo &= rows.iter().all(|&r| bridge.pool().labels()[r] == label);
    }
    outcome(
        boxed && draws >= 1000 && alloc_ok && danger_ok && echo,
        format!(
            "{draws} draws inside seed-neighbor box: {boxed}; ADASYN {{1,0}} allocation {alloc:?}; \
             DANGER {danger:?} vs brute {expected:?}; label echo over {kinds:?} + bridge: {echo}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
  "data": {"toy": {"world": "blobs2", "seed": 5}},
  "test": {"per_class": 500},
  "overlap": {"tau": 0.2, "n_trees": 20},
  "classifiers": ["tree", "logistic", "adaboost", "gbdt", "mlp"],
  "learner_params": {"mlp": {"hidden": 8, "steps": 100, "learning_rate": 0.05}},
  "synth_per_class": 1000,
  "seeds": [0, 1]
}"#;
    let cfg_path = dir.path().join("exp.json");
    fs::write(&cfg_path, cfg).unwrap();
    let run = |name: &str, threads: &str| -> Option<Vec<u8>> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_ord"))
            .args(["run", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .env("ORD_THREADS", threads)
            .status()
            .ok()?;
        status.success().then(|| fs::read(Path::new(&out).join("cells.csv")).ok()).flatten()
    };
    let a = run("a", "4");
    let b = run("b", "4");
    let c = run("c", "1");
    let ok = a.is_some() && a == b && a == c;
    outcome(
        ok,
        format!(
            "cells.csv byte-identical across two runs: {}; threads 1 vs 4: {}",
            a.is_some() && a == b,
            a.is_some() && a == c
        ),
    )
}

fn criterion_10() -> Outcome {
    let cfg = OverlapConfig {
        n_trees: 50,
        ..Default::default()
    };
    let small = bench_overlap(50_000, 30, 1, &cfg);
    let big = bench_overlap(100_000, 30, 1, &cfg);
    let wide = bench_overlap(50_000, 200, 1, &cfg);
    match (small, big, wide) {
        (Ok(s), Ok(b), Ok(w)) => {
            let ratio = b.seconds / s.seconds;
            outcome(
                ratio <= SCALING_RATIO_MAX,
                format!(
                    "50k x 30 {:.2}s, 100k x 30 {:.2}s, ratio {ratio:.2} (max {SCALING_RATIO_MAX}); 50k x 200 {:.2}s",
                    s.seconds, b.seconds, w.seconds
                ),
            )
        }
        (s, b, w) => outcome(false, format!("bench error: {:?} {:?} {:?}", s.err(), b.err(), w.err())),
    }
}

fn criterion_11() -> Outcome {
    let d = make_blobs(&BlobWorld::blobs1(), 3).unwrap();
    let cfg = OverlapConfig {
        tau: 0.0,
        n_trees: 20,
        k_folds: 3,
        ..Default::default()
    };
    let (ternary, result) = detect_overlap(&d, &cfg).unwrap();
    let n_major = d.count_label(MAJORITY);
    let all_flagged = result.n_overlap == n_major && ternary.count_label(MAJORITY) == 0;

    let majority = d.indices_of(MAJORITY);
    let mut scored_count = vec![0usize; d.n_rows()];
    let mut disjoint = true;
    for f in &result.folds {
        let trained: std::collections::HashSet<usize> = f.trained_on.iter().copied().collect();
        for &r in &f.scored {
            scored_count[r] += 1;
            disjoint &= !trained.contains(&r);
        }
    }
    let once = majority.iter().all(|&r| scored_count[r] == 1)
        && scored_count.iter().sum::<usize>() == majority.len()
        && result.rows.iter().all(|a| result.folds[a.fold].scored.contains(&a.row));
    outcome(
        all_flagged && once && disjoint,
        format!(
            "tau=0 flags {}/{n_major} majority rows; each scored once: {once}; scorer never trained on its rows: {disjoint}",
            result.n_overlap
        ),
    )
}

fn main() {
    let toy = toy_run();
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("C1  toy oracle minority gain", Box::new(|| criterion_1(&toy))),
        ("C2  toy efficacy", Box::new(|| criterion_2(&toy))),
        ("C3  overlap geometry", Box::new(criterion_3)),
        ("C4  tau monotonicity", Box::new(criterion_4)),
        ("C5  overlap-removal ablation", Box::new(criterion_5)),
        ("C6  metric oracles", Box::new(criterion_6)),
        ("C7  numerical suites", Box::new(criterion_7)),
        ("C8  generator properties", Box::new(criterion_8)),
        ("C9  determinism", Box::new(criterion_9)),
        ("C10 scaling shape", Box::new(criterion_10)),
        ("C11 fold fidelity", Box::new(criterion_11)),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("[{tag}] {name}: {} ({:.1}s)", o.detail, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {}/{} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
