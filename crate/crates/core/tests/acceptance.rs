//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sqd_core::features::{
    build_feature_matrix, label_window, window_offsets, ResampleConfig, ResampledClimb, WindowConfig,
};
use sqd_core::learner::{
    evaluate, gini, grouped_folds, stratified_folds, window_sweep, CrossValConfig, DecisionTree,
    FoldGrouping, SweepRow, TreeConfig, DEFAULT_SWEEP_LENGTHS,
};
use sqd_core::orientation::{angle_diff, wall_angle, Plane};
use sqd_core::pipeline::{prepare_climbs, simulate_corpus};
use sqd_core::sensor::{
    dequantize, quantize, run_trace_instrumented, AnalogSample, Mode, RawSample, SensorConfig,
};
use sqd_core::station::{
    assemble_sessions, decode_corpus, decode_packet_log, encode_corpus, encode_packet_log,
    ClimbSession, SamplePacket, DEFAULT_GAP_S,
};
use sqd_core::synth::{generate, ScenarioScript};
use sqd_core::{Activity, Label};

const N_CLIMBS: usize = 48;
const JITTER: f64 = 0.2;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn check(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Self::check(false, detail)
    }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Outcome::fail(format!($($fmt)+));
        }
    };
}

/// Shared synthetic corpus for criteria 4, 7 and 8.
struct Corpus {
    sessions: Vec<ClimbSession>,
    climbs: Vec<ResampledClimb>,
    build_time: Duration,
}

fn build_corpus() -> Corpus {
    let start = Instant::now();
    let cfg = SensorConfig::default();
    let sessions = simulate_corpus(N_CLIMBS, &ScenarioScript::default(), JITTER, &cfg).unwrap();
    let climbs = prepare_climbs(&sessions, &cfg, &ResampleConfig::default()).unwrap();
    Corpus {
        sessions,
        climbs,
        build_time: start.elapsed(),
    }
}

fn cv_config() -> CrossValConfig {
    CrossValConfig::default()
}

// ---------------------------------------------------------------- 1

fn oracle_quantize(a: f64) -> i64 {
    // 2 g full scale, 8 bit: 127 counts per 2 g, half away from zero
    let scaled = a * 127.0 / 2.0;
    let q = scaled.abs() + 0.5;
    (scaled.signum() * q.floor()).clamp(-127.0, 127.0) as i64
}

fn oracle_mean(v: &[i64]) -> i64 {
    let mean = v.iter().sum::<i64>() as f64 / v.len() as f64;
    mean.round() as i64
}

fn moved(a: [i64; 3], b: [i64; 3]) -> bool {
    (0..3).any(|k| (a[k] - b[k]).abs() >= 15)
}

fn still_burst_still() -> Vec<AnalogSample> {
    (0..=7000u64)
        .map(|i| {
            let t = i * 10;
            let accel = if (30_000..40_000).contains(&t) {
                let s = (t - 30_000) as f64 / 1000.0;
                [0.8 * (TAU * s).sin(), 0.3 * (TAU * 0.7 * s).sin(), 1.0]
            } else {
                [0.0, 0.0, 1.0]
            };
            AnalogSample { t, accel }
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let cfg = SensorConfig::default();
    let run = run_trace_instrumented(&still_burst_still(), &cfg, 7, 1).unwrap();
    let q = |a: [f64; 3]| [oracle_quantize(a[0]), oracle_quantize(a[1]), oracle_quantize(a[2])];

    // (a) silence while still
    ensure!(
        run.packets.iter().flat_map(|p| &p.samples).all(|s| s.t >= 30_000),
        "packet sample before the burst"
    );
    ensure!(
        run.ticks.iter().filter(|k| k.t < 30_000).all(|k| k.mode_after == Mode::Sleep),
        "woke during the leading still period"
    );

    // (b) first tick whose reading moved >= 15 counts against the previous one
    let mut expected_wake = None;
    for w in run.ticks.windows(2) {
        if moved(q(w[0].analog), q(w[1].analog)) {
            expected_wake = Some(w[1].t);
            break;
        }
    }
    let actual_wake = run.ticks.iter().find(|k| k.mode_after == Mode::Active).map(|k| k.t);
    ensure!(
        expected_wake.is_some() && expected_wake == actual_wake,
        "wake at {actual_wake:?}, oracle {expected_wake:?}"
    );
    let wake_t = actual_wake.unwrap();
    let wake_reading = q(run.ticks.iter().find(|k| k.t == wake_t).unwrap().analog);

    // (c) transmitted samples are the 8-sample means of the active readings
    let active: Vec<(u64, [i64; 3])> = run
        .ticks
        .iter()
        .filter(|k| k.mode_before == Mode::Active)
        .map(|k| (k.t, q(k.analog)))
        .collect();
    let averages: Vec<(u64, [i64; 3])> = active
        .chunks_exact(8)
        .map(|g| {
            let axis = |a: usize| oracle_mean(&g.iter().map(|s| s.1[a]).collect::<Vec<_>>());
            (g[7].0, [axis(0), axis(1), axis(2)])
        })
        .collect();
    ensure!(active.len() % 8 == 0, "{} active readings is not whole groups", active.len());
    let sent: Vec<(u64, [i64; 3])> = run
        .packets
        .iter()
        .flat_map(|p| &p.samples)
        .map(|s| (s.t, [s.x as i64, s.y as i64, s.z as i64]))
        .collect();
    ensure!(
        sent == averages,
        "{} transmitted samples vs {} oracle averages",
        sent.len(),
        averages.len()
    );
    ensure!(
        run.packets.iter().all(|p| (1..=2).contains(&p.samples.len())),
        "packet outside 1..=2 samples"
    );
    ensure!(
        run.packets.iter().all(|p| p.flush || p.samples.len() == 2),
        "non-final packet with a partial batch"
    );
    ensure!(
        run.packets.iter().enumerate().all(|(i, p)| p.seq == i as u64),
        "seq numbers not consecutive"
    );

    // (d) timers: 0.8 s below threshold confirms inactivity, 20 s later sleep
    let mut reference = wake_reading;
    let (mut below, mut inactive, mut sleep_at) = (None, None, None);
    for &(t, avg) in &averages {
        if moved(reference, avg) {
            below = None;
            inactive = None;
        } else {
            let since = *below.get_or_insert(t);
            if inactive.is_none() && t - since >= 800 {
                inactive = Some(t);
            }
        }
        reference = avg;
        if inactive.is_some_and(|i| t - i >= 20_000) {
            sleep_at = Some(t);
            break;
        }
    }
    let sleep_ticks: Vec<u64> = run
        .ticks
        .iter()
        .filter(|k| k.mode_before == Mode::Active && k.mode_after == Mode::Sleep)
        .map(|k| k.t)
        .collect();
    ensure!(
        sleep_at.is_some() && sleep_ticks == vec![sleep_at.unwrap()],
        "sleep transitions {sleep_ticks:?}, oracle {sleep_at:?}"
    );
    let sleep_at = sleep_at.unwrap();
    ensure!(
        (40_000 + 20_800..40_000 + 22_000).contains(&sleep_at),
        "sleep at {sleep_at} ms is not ~20.8 s after the burst"
    );
    let last = run.packets.last().unwrap();
    ensure!(
        last.flush && last.samples.last().unwrap().t == sleep_at,
        "no final flush packet at the sleep transition"
    );
    ensure!(
        run.packets.iter().filter(|p| p.flush).count() == 1,
        "more than one flush packet"
    );
    ensure!(
        run.ticks.iter().filter(|k| k.t > sleep_at).all(|k| k.mode_after == Mode::Sleep),
        "woke again during the trailing still period"
    );
    Outcome::check(
        true,
        format!(
            "wake {wake_t} ms, {} averages in {} packets, sleep {sleep_at} ms with flush",
            averages.len(),
            run.packets.len()
        ),
    )
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let cfg = SensorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let bound = 2.0 / 127.0;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let a: f64 = rng.random_range(-2.5..=2.5);
        let back = dequantize(quantize(a, &cfg), &cfg).unwrap();
        worst = worst.max((back - a.clamp(-2.0, 2.0)).abs());
    }
    ensure!(worst <= bound, "worst round-trip error {worst:.6} g > {bound:.6} g");
    ensure!(quantize(2.0, &cfg) == 127, "2.0 g -> {}", quantize(2.0, &cfg));
    ensure!(dequantize(127, &cfg).unwrap() == 2.0, "127 -> {}", dequantize(127, &cfg).unwrap());
    ensure!(quantize(-2.0, &cfg) == -127 && dequantize(-127, &cfg).unwrap() == -2.0, "-2.0 g mapping");
    Outcome::check(true, format!("worst error {worst:.6} g over 10000 draws (bound {bound:.6})"))
}

// ---------------------------------------------------------------- 3

/// Sensor vector whose in-plane coordinates (u, v) are `r (cos a, sin a)` and
/// whose out-of-plane component is `w`. The plane angle is `atan2(v, u)`.
fn compose(plane: Plane, a_deg: f64, r: f64, w: f64) -> [f64; 3] {
    let (u, v) = (r * a_deg.to_radians().cos(), r * a_deg.to_radians().sin());
    match plane {
        // u = x, v = -y
        Plane::YX => [u, -v, w],
        // u = z, v = -y
        Plane::YZ => [w, -v, u],
        // u = z, v = x
        Plane::XZ => [v, w, u],
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        for plane in [Plane::YX, Plane::YZ, Plane::XZ] {
            let a0: f64 = rng.random_range(0.0..360.0);
            let phi: f64 = rng.random_range(-360.0..360.0);
            let r: f64 = rng.random_range(0.2..2.0);
            let w: f64 = rng.random_range(-2.0..2.0);
            let before = wall_angle(plane, compose(plane, a0, r, w), 0.0).unwrap();
            let after = wall_angle(plane, compose(plane, a0 + phi, r, w), 0.0).unwrap();
            worst = worst.max(angle_diff(before + phi, after).abs());
            worst = worst.max(angle_diff(a0, before).abs());
        }
    }
    ensure!(worst <= 1e-9, "rotation oracle error {worst:e} deg");

    let identities: [(Plane, [f64; 3], f64); 12] = [
        (Plane::YX, [1.0, 0.0, 0.0], 0.0),
        (Plane::YX, [0.0, -1.0, 0.0], 90.0),
        (Plane::YX, [-1.0, 0.0, 0.0], 180.0),
        (Plane::YX, [0.0, 1.0, 0.0], 270.0),
        (Plane::YZ, [0.0, 0.0, 1.0], 0.0),
        (Plane::YZ, [0.0, -1.0, 0.0], 90.0),
        (Plane::YZ, [0.0, 0.0, -1.0], 180.0),
        (Plane::YZ, [0.0, 1.0, 0.0], 270.0),
        (Plane::XZ, [0.0, 0.0, 1.0], 0.0),
        (Plane::XZ, [1.0, 0.0, 0.0], 90.0),
        (Plane::XZ, [0.0, 0.0, -1.0], 180.0),
        (Plane::XZ, [-1.0, 0.0, 0.0], 270.0),
    ];
    for (plane, s, want) in identities {
        let got = wall_angle(plane, s, 0.0).unwrap();
        ensure!(got == want, "{plane:?} of {s:?} = {got}, expected {want}");
    }
    Outcome::check(true, format!("max deviation {worst:.2e} deg over 3000 rotations, 12 identities exact"))
}

// ---------------------------------------------------------------- 4

fn criterion_4(corpus: &Corpus) -> (Outcome, Vec<SweepRow>) {
    let start = Instant::now();
    let rows = match window_sweep(
        &corpus.climbs,
        &DEFAULT_SWEEP_LENGTHS,
        &WindowConfig::new(DEFAULT_SWEEP_LENGTHS[0]),
        &TreeConfig::default(),
        &cv_config(),
    ) {
        Ok(r) => r,
        Err(e) => return (Outcome::fail(format!("sweep failed: {e}")), Vec::new()),
    };
    let elapsed = corpus.build_time + start.elapsed();
    let curve: Vec<String> = rows
        .iter()
        .map(|r| format!("{}:{:.3}", r.window_len, r.report.pooled.f1))
        .collect();
    println!("    F1 by window length: {}", curve.join(" "));

    let good: Vec<usize> = rows
        .iter()
        .filter(|r| {
            let s = r.report.pooled;
            s.precision >= 0.9 && s.recall >= 0.9 && s.f1 >= 0.9
        })
        .map(|r| r.window_len)
        .collect();
    let best = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.report.pooled.f1.total_cmp(&b.1.report.pooled.f1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let worst_drop = rows[..=best]
        .windows(2)
        .map(|w| w[0].report.pooled.f1 - w[1].report.pooled.f1)
        .fold(0.0f64, f64::max);
    let b = &rows[best];
    let detail = format!(
        "best L={} P={:.3} R={:.3} F1={:.3}; lengths with all >= 0.90: {good:?}; largest F1 drop before max {worst_drop:.3}; {:.1} s",
        b.window_len,
        b.report.pooled.precision,
        b.report.pooled.recall,
        b.report.pooled.f1,
        elapsed.as_secs_f64()
    );
    let pass = rows.len() == 12 && !good.is_empty() && worst_drop < 0.05 && elapsed < Duration::from_secs(300);
    (Outcome::check(pass, detail), rows)
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let mut cases = 0;
    for len in 0..=100usize {
        for w in 3..=len.max(3) {
            if w > len {
                continue;
            }
            let cfg = WindowConfig::new(w);
            let stride = w - 2;
            let enumerated: Vec<usize> = (0..len).filter(|&s| s % stride == 0 && s + w <= len).collect();
            let got = window_offsets(len, &cfg);
            ensure!(got == enumerated, "L={len} w={w}: {got:?} vs {enumerated:?}");
            cases += 1;
        }
    }
    let cfg = WindowConfig::new(45);
    let window = |hits: usize| -> Vec<Activity> {
        (0..45).map(|i| if i < hits { Activity::Lowering } else { Activity::Ascend }).collect()
    };
    ensure!(label_window(&window(41), &cfg) == Label::Lowering, "41/45 not lowering");
    ensure!(label_window(&window(40), &cfg) == Label::NotLowering, "40/45 labeled lowering");
    Outcome::check(true, format!("{cases} (length, window) pairs match enumeration; 41/45 lowering, 40/45 not"))
}

// ---------------------------------------------------------------- 6

#[derive(Debug)]
enum Oracle {
    Leaf(Label),
    Split(usize, f64, Box<Oracle>, Box<Oracle>),
}

fn oracle_gini(c: [usize; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    1.0 - (c[0] as f64 / n).powi(2) - (c[1] as f64 / n).powi(2)
}

fn counts(idx: &[usize], y: &[Label]) -> [usize; 2] {
    let mut c = [0, 0];
    for &i in idx {
        c[(y[i] == Label::Lowering) as usize] += 1;
    }
    c
}

/// Exhaustive search: every feature, every midpoint between distinct values,
/// scored by weighted child Gini; recursion to `depth_left`.
fn oracle_fit(x: &[[f64; 2]], y: &[Label], idx: &[usize], depth_left: usize, cfg: &TreeConfig) -> Oracle {
    let c = counts(idx, y);
    let leaf = Oracle::Leaf(if c[1] > c[0] { Label::Lowering } else { Label::NotLowering });
    let parent = oracle_gini(c);
    if depth_left == 0 || idx.len() < cfg.min_samples_split || parent == 0.0 {
        return leaf;
    }
    let mut candidates: Vec<(f64, usize, f64)> = Vec::new();
    for f in 0..2 {
        let mut values: Vec<f64> = idx.iter().map(|&i| x[i][f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let thr = (pair[0] + pair[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= thr);
            let n = idx.len() as f64;
            let w = (l.len() as f64 * oracle_gini(counts(&l, y)) + r.len() as f64 * oracle_gini(counts(&r, y))) / n;
            candidates.push((w, f, thr));
        }
    }
    let Some(min) = candidates.iter().map(|c| c.0).min_by(f64::total_cmp) else {
        return leaf;
    };
    let &(w, f, thr) = candidates
        .iter()
        .filter(|c| c.0 <= min + 1e-12)
        .min_by(|a, b| a.1.cmp(&b.1).then(a.2.total_cmp(&b.2)))
        .unwrap();
    if parent - w < cfg.min_impurity_decrease {
        return leaf;
    }
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= thr);
    Oracle::Split(
        f,
        thr,
        Box::new(oracle_fit(x, y, &l, depth_left - 1, cfg)),
        Box::new(oracle_fit(x, y, &r, depth_left - 1, cfg)),
    )
}

fn oracle_predict(t: &Oracle, row: &[f64; 2]) -> Label {
    match t {
        Oracle::Leaf(l) => *l,
        Oracle::Split(f, thr, l, r) => oracle_predict(if row[*f] <= *thr { l } else { r }, row),
    }
}

fn criterion_6() -> Outcome {
    let exact: [([usize; 2], f64); 5] = [
        ([5, 5], 0.5),
        ([10, 0], 0.0),
        ([1, 3], 0.375),
        ([3, 1], 0.375),
        ([2, 6], 0.375),
    ];
    for (c, want) in exact {
        let got = gini(&c).unwrap();
        ensure!(got == want, "gini({c:?}) = {got}, expected {want}");
    }
    ensure!((gini(&[1, 2]).unwrap() - 4.0 / 9.0).abs() < 1e-15, "gini([1, 2])");
    ensure!(gini(&[0, 0]).is_err(), "gini of an empty node must error");

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = TreeConfig {
        max_depth: 2,
        min_samples_split: 2,
        ..TreeConfig::default()
    };
    for case in 0..50 {
        let n = rng.random_range(4..=12);
        // small integer grid so ties and repeated values occur
        let x: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(0..6) as f64, rng.random_range(0..6) as f64 * 0.5])
            .collect();
        let mut y: Vec<Label> = (0..n)
            .map(|_| if rng.random_bool(0.5) { Label::Lowering } else { Label::NotLowering })
            .collect();
        y[0] = Label::Lowering;
        y[1] = Label::NotLowering;
        let tree = DecisionTree::fit(&x, &y, &cfg).unwrap();
        let oracle = oracle_fit(&x, &y, &(0..n).collect::<Vec<_>>(), cfg.max_depth, &cfg);
        let acc = |pred: &dyn Fn(&[f64; 2]) -> Label| (0..n).filter(|&i| pred(&x[i]) == y[i]).count();
        let tree_acc = acc(&|r| tree.predict(r).unwrap());
        let oracle_acc = acc(&|r| oracle_predict(&oracle, r));
        ensure!(
            tree_acc == oracle_acc,
            "instance {case}: tree accuracy {tree_acc}/{n}, brute force {oracle_acc}/{n}"
        );
        ensure!(
            (0..n).all(|i| tree.predict(&x[i]).unwrap() == oracle_predict(&oracle, &x[i])),
            "instance {case}: predictions differ from brute force"
        );
    }

    let labels: Vec<Label> = (0..137)
        .map(|i| if i % 5 == 0 || i % 11 == 0 { Label::Lowering } else { Label::NotLowering })
        .collect();
    let cv = cv_config();
    let folds = stratified_folds(&labels, &cv).unwrap();
    ensure!(folds.len() == 3, "{} repetitions", folds.len());
    for class in [Label::NotLowering, Label::Lowering] {
        let total = labels.iter().filter(|l| **l == class).count();
        let expected = total as f64 / cv.folds as f64;
        for (rep, fold_of) in folds.iter().enumerate() {
            for f in 0..cv.folds {
                let got = (0..labels.len()).filter(|&i| fold_of[i] == f && labels[i] == class).count();
                ensure!(
                    (got as f64 - expected).abs() < 1.0,
                    "rep {rep} fold {f}: {got} {class} vs expected {expected:.1}"
                );
            }
        }
    }
    for fold_of in &folds {
        let mut seen_in_test = vec![0usize; labels.len()];
        for f in 0..cv.folds {
            let test: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == f).collect();
            let train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != f).collect();
            ensure!(test.iter().all(|i| !train.contains(i)), "train/test overlap");
            ensure!(test.len() + train.len() == labels.len(), "samples lost from a split");
            for i in test {
                seen_in_test[i] += 1;
            }
        }
        ensure!(seen_in_test.iter().all(|&c| c == 1), "a sample is tested zero or several times");
    }
    let groups: Vec<usize> = (0..137).map(|i| i / 7).collect();
    let gfolds = grouped_folds(&groups, &CrossValConfig { grouping: FoldGrouping::Climb, ..cv }).unwrap();
    for fold_of in &gfolds {
        ensure!(
            (0..groups.len()).all(|i| fold_of[i] == fold_of[groups[i] * 7]),
            "a climb group straddles folds"
        );
    }
    Outcome::check(true, "gini exact; 50/50 instances match brute force; 3x10 folds balanced, no leakage")
}

// ---------------------------------------------------------------- 7

fn criterion_7(corpus: &Corpus, sweep: &[SweepRow]) -> Outcome {
    let len = sweep
        .iter()
        .max_by(|a, b| a.report.pooled.f1.total_cmp(&b.report.pooled.f1))
        .map(|r| r.window_len)
        .unwrap_or(45);
    let m = build_feature_matrix(&corpus.climbs, &WindowConfig::new(len)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pos: Vec<usize> = (0..m.len()).filter(|&i| m.labels[i] == Label::Lowering).collect();
    let mut neg: Vec<usize> = (0..m.len()).filter(|&i| m.labels[i] == Label::NotLowering).collect();
    neg.shuffle(&mut rng);
    let k = pos.len().min(neg.len());
    pos.truncate(k);
    neg.truncate(k);
    let idx: Vec<usize> = pos.into_iter().chain(neg).collect();
    let rows: Vec<[f64; 18]> = idx.iter().map(|&i| m.rows[i]).collect();
    let mut labels: Vec<Label> = idx.iter().map(|&i| m.labels[i]).collect();
    labels.shuffle(&mut rng);
    let report = evaluate(&rows, &labels, None, &TreeConfig::default(), &cv_config()).unwrap();
    let f1 = report.pooled.f1;
    Outcome::check(
        f1 < 0.75,
        format!("window {len}, {k}+{k} balanced windows, shuffled-label pooled F1 {f1:.3} (< 0.75)"),
    )
}

// ---------------------------------------------------------------- 8

fn random_packet(rng: &mut ChaCha8Rng) -> SamplePacket {
    let n = rng.random_range(1..=2);
    let mut t: u64 = rng.random_range(0..10_000_000);
    let samples = (0..n)
        .map(|_| {
            t += rng.random_range(1..500);
            RawSample::new(
                t,
                rng.random_range(-127..=127),
                rng.random_range(-127..=127),
                rng.random_range(-127..=127),
            )
        })
        .collect();
    SamplePacket {
        sensor_id: rng.random(),
        position: rng.random_range(0..16),
        seq: rng.random(),
        flush: rng.random_bool(0.3),
        samples,
    }
}

fn criterion_8(corpus: &Corpus) -> Outcome {
    let cfg = SensorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    let packets: Vec<SamplePacket> = (0..1000).map(|_| random_packet(&mut rng)).collect();
    let text = encode_packet_log(&packets);
    let decoded = match decode_packet_log(&text, &cfg) {
        Ok(p) => p,
        Err((line, e)) => return Outcome::fail(format!("packet line {line}: {e}")),
    };
    ensure!(decoded == packets, "decoded packets differ");
    ensure!(encode_packet_log(&decoded) == text, "packet re-encoding not byte-identical");

    let mut sessions = corpus.sessions.clone();
    ensure!(sessions.len() == N_CLIMBS, "{} sessions", sessions.len());
    let alphabet: Vec<char> = "ab,%\n\r=;: 09%2C".chars().collect();
    for s in &mut sessions {
        let key: String = (0..6).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
        let value: String = (0..12).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
        s.meta.insert(key, value);
    }
    let echo = "full_scale_g=2,bits=8,note=50%, commas";
    let text = encode_corpus(&sessions, echo);
    let back = match decode_corpus(&text) {
        Ok(c) => c,
        Err(e) => return Outcome::fail(format!("corpus decode: {e}")),
    };
    ensure!(back.sessions == sessions && back.config_echo == echo, "corpus round trip differs");
    ensure!(encode_corpus(&back.sessions, echo) == text, "corpus re-encoding not byte-identical");

    // three sensors, two climbs each, interleaved by time
    let mut stream: Vec<(u64, SamplePacket)> = Vec::new();
    for sensor in 0..3u32 {
        let mut seq_base = 0;
        for climb in 0..2u64 {
            let script = ScenarioScript {
                seed: 100 + sensor as u64 * 10 + climb,
                ..ScenarioScript::default()
            };
            let mut trace = generate(&script).unwrap();
            let shift = climb * 600_000 + sensor as u64 * 1_000;
            for s in &mut trace.samples {
                s.t += shift;
            }
            let run = run_trace_instrumented(&trace.samples, &cfg, sensor, 1).unwrap();
            for mut p in run.packets {
                p.seq += seq_base;
                stream.push((p.samples[0].t, p));
            }
            seq_base = stream.iter().filter(|(_, p)| p.sensor_id == sensor).count() as u64;
        }
    }
    stream.sort_by_key(|(t, p)| (*t, p.sensor_id));
    let clean: Vec<SamplePacket> = stream.into_iter().map(|(_, p)| p).collect();
    let reference = assemble_sessions(&clean, DEFAULT_GAP_S).unwrap();
    ensure!(
        reference.sessions.len() == 6 && reference.duplicates == 0,
        "{} sessions from 3 sensors x 2 climbs",
        reference.sessions.len()
    );

    let mut noisy = Vec::new();
    let mut injected = 0;
    for p in &clean {
        noisy.push(p.clone());
        if rng.random_bool(0.2) {
            for _ in 0..rng.random_range(1..=3) {
                noisy.push(p.clone());
                injected += 1;
            }
        }
    }
    let dup = assemble_sessions(&noisy, DEFAULT_GAP_S).unwrap();
    ensure!(dup.sessions == reference.sessions, "duplicates changed the assembled sessions");
    ensure!(dup.duplicates == injected, "counted {} duplicates, injected {injected}", dup.duplicates);

    Outcome::check(
        true,
        format!(
            "1000 packets and {} sessions byte-identical; {injected} injected duplicates ignored",
            sessions.len()
        ),
    )
}

fn main() {
    let corpus = build_corpus();
    let meta: BTreeMap<&str, usize> = BTreeMap::from([
        ("climbs", corpus.climbs.len()),
        ("samples", corpus.sessions.iter().map(|s| s.samples.len()).sum()),
    ]);
    println!("acceptance: corpus {meta:?}");

    let c1 = criterion_1();
    let c2 = criterion_2();
    let c3 = criterion_3();
    let (c4, sweep) = criterion_4(&corpus);
    let c5 = criterion_5();
    let c6 = criterion_6();
    let c7 = if sweep.is_empty() {
        Outcome::fail("needs the sweep of criterion 4")
    } else {
        criterion_7(&corpus, &sweep)
    };
    let c8 = criterion_8(&corpus);

    let results = [
        ("1 sensor emulator conformance", c1),
        ("2 quantization round trip", c2),
        ("3 orientation rotation oracle", c3),
        ("4 window sweep on synthetic corpus", c4),
        ("5 windowing arithmetic", c5),
        ("6 learner correctness", c6),
        ("7 permutation sanity", c7),
        ("8 serialization round trip", c8),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
