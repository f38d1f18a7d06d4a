use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use log::{info, warn};

use sqd_core::features::{build_feature_matrix, write_feature_csv, read_feature_csv, FeatureMatrix, ResampledClimb};
use sqd_core::learner::{
    evaluate as cross_validate, sweep_csv, sweep_metrics_csv, sweep_text_table, window_sweep, FoldGrouping, SweepRow,
};
use sqd_core::orientation::{lowering_signature, DEFAULT_LOWERING_TOL_DEG};
use sqd_core::pipeline::{prepare_climbs, session_series, simulate_corpus};
use sqd_core::sensor::SensorConfig;
use sqd_core::station::{decode_corpus, load_corpus, save_corpus, write_atomic, ClimbSession, CORPUS_MAGIC};
use sqd_core::synth::ScenarioScript;

use crate::config::Config;
use crate::manifest::RunManifest;
use crate::plot::{bar_chart, histogram, histogram_csv, line_chart, Series};
use crate::{Common, EvaluateArgs, ExtractArgs, ReportArgs, SimulateArgs};

pub const CORPUS_FILE: &str = "corpus.sqd";
pub const FEATURES_FILE: &str = "features.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
const HIST_BINS: usize = 10;

/// How a command failed: bad input or configuration (exit 2) or anything
/// else (exit 1).
#[derive(Debug)]
pub enum Failure {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

pub type CmdResult<T> = Result<T, Failure>;

trait Classify<T> {
    fn user(self) -> CmdResult<T>;
    fn internal(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn user(self) -> CmdResult<T> {
        self.map_err(|e| Failure::User(e.into()))
    }

    fn internal(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Internal(e.into()))
    }
}

/// Collects written files for the manifest.
struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn create(common: &Common, subcommand: &str) -> CmdResult<Self> {
        let dir = common
            .out
            .clone()
            .unwrap_or_else(|| Path::new("out").join(subcommand));
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))
            .user()?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn write(&mut self, rel: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> CmdResult<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).internal()?;
        }
        write_atomic(&path, contents.as_ref())
            .with_context(|| format!("writing {}", path.display()))
            .internal()?;
        self.files.push(path);
        Ok(())
    }
}

fn load_config(common: &Common) -> CmdResult<Config> {
    let mut cfg = Config::load(common.config.as_deref()).user()?;
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    Ok(cfg)
}

/// Sensor configuration stored in a corpus header, if any.
fn corpus_sensor(echo: &str) -> Option<SensorConfig> {
    let v: serde_json::Value = serde_json::from_str(echo).ok()?;
    serde_json::from_value(v.get("sensor")?.clone()).ok()
}

pub fn simulate(common: &Common, args: &SimulateArgs) -> CmdResult<()> {
    let started = Instant::now();
    let mut cfg = load_config(common)?;
    if let Some(n) = args.n {
        cfg.simulate.n = n;
    }
    if let Some(j) = args.jitter {
        cfg.simulate.jitter = j;
    }
    if args.scenario.is_some() {
        cfg.simulate.scenario = args.scenario.clone();
    }
    let mut script = match &cfg.simulate.scenario {
        Some(p) => ScenarioScript::load(p)
            .with_context(|| format!("scenario {}", p.display()))
            .user()?,
        None => ScenarioScript::default(),
    };
    if let Some(seed) = cfg.seed {
        script.seed = seed;
    }
    let sessions = simulate_corpus(cfg.simulate.n, &script, cfg.simulate.jitter, &cfg.sensor).user()?;
    let echo = serde_json::json!({
        "sensor": cfg.sensor,
        "scenario": script,
        "n": cfg.simulate.n,
        "jitter": cfg.simulate.jitter,
    })
    .to_string();

    let mut out = Outputs::create(common, "simulate")?;
    let path = out.dir.join(CORPUS_FILE);
    save_corpus(&sessions, &echo, &path)
        .with_context(|| format!("writing {}", path.display()))
        .internal()?;
    out.files.push(path.clone());

    let samples: usize = sessions.iter().map(|s| s.samples.len()).sum();
    println!("{} sessions, {samples} samples -> {}", sessions.len(), path.display());
    let mut m = RunManifest::new("simulate", &cfg);
    m.seeds.insert("scenario".into(), script.seed);
    m.inputs.extend(cfg.simulate.scenario.clone());
    m.outputs = out.files;
    m.write(&out.dir, started).internal()
}

fn orientation_csv(session: &ClimbSession, sensor: &SensorConfig) -> CmdResult<(String, Vec<[f64; 4]>)> {
    let (series, dropped) = session_series(session, sensor).user()?;
    if dropped > 0 {
        info!("{}: {dropped} degenerate reading(s) left out", session.climb_id);
    }
    let mut csv = String::from("t_ms,theta_yx,theta_yz,theta_xz,activity,lowering_signature\n");
    let mut points = Vec::with_capacity(series.len());
    for (i, o) in series.samples.iter().enumerate() {
        let activity = series.labels.as_ref().map(|l| l[i].as_str()).unwrap_or("");
        let _ = writeln!(
            csv,
            "{},{:.4},{:.4},{:.4},{activity},{}",
            o.t,
            o.theta_yx,
            o.theta_yz,
            o.theta_xz,
            u8::from(lowering_signature(o, DEFAULT_LOWERING_TOL_DEG))
        );
        points.push([o.t / 1000.0, o.theta_yx, o.theta_yz, o.theta_xz]);
    }
    Ok((csv, points))
}

fn lowering_samples(labels: &[sqd_core::Activity]) -> usize {
    labels.iter().filter(|a| a.is_lowering()).count()
}

fn write_histogram(out: &mut Outputs, stem: &str, title: &str, xlabel: &str, values: &[f64]) -> CmdResult<()> {
    let bins = histogram(values, HIST_BINS);
    out.write(format!("{stem}.csv"), histogram_csv(&bins))?;
    out.write(format!("{stem}.svg"), bar_chart(title, xlabel, &bins))
}

pub fn extract(common: &Common, args: &ExtractArgs) -> CmdResult<()> {
    let started = Instant::now();
    let mut cfg = load_config(common)?;
    if let Some(n) = args.target_len {
        cfg.resample.target_len = n;
    }
    if let Some(d) = args.target_duration {
        cfg.resample.target_duration_s = d;
    }
    if let Some(w) = args.window_len {
        cfg.window.window_len = w;
    }
    cfg.resample.validate().user()?;
    cfg.window.validate().user()?;
    let corpus = load_corpus(&args.corpus)
        .with_context(|| format!("corpus {}", args.corpus.display()))
        .user()?;
    if let Some(s) = corpus_sensor(&corpus.config_echo) {
        cfg.sensor = s;
    }
    let sessions = &corpus.sessions;
    if sessions.is_empty() {
        warn!("corpus {} holds no sessions; outputs will be empty", args.corpus.display());
    }
    let mut out = Outputs::create(common, "extract")?;

    for s in sessions {
        let (csv, points) = orientation_csv(s, &cfg.sensor)?;
        out.write(Path::new("orientation").join(format!("{}.csv", s.climb_id)), csv)?;
        let series: Vec<Series> = ["theta_yx", "theta_yz", "theta_xz"]
            .iter()
            .enumerate()
            .map(|(k, name)| Series {
                name,
                points: points.iter().map(|p| (p[0], p[k + 1])).collect(),
            })
            .collect();
        let svg = line_chart(&s.climb_id, "time (s)", "angle (deg)", &series, Some((0.0, 360.0)));
        out.write(Path::new("orientation").join(format!("{}.svg", s.climb_id)), svg)?;
    }

    let climbs = prepare_climbs(sessions, &cfg.sensor, &cfg.resample).user()?;
    let by_id: HashMap<&str, &ResampledClimb> = climbs.iter().map(|c| (c.climb_id.as_str(), c)).collect();
    let labeled = sessions.iter().all(|s| s.labels.is_some());

    let mut table = String::from("climb_id,samples,lowering_samples,lowering_s,resampled_samples,resampled_lowering_samples\n");
    let (mut len_pre, mut len_post, mut low_pre, mut low_post) = (vec![], vec![], vec![], vec![]);
    for s in sessions {
        let low = s.labels.as_deref().map(lowering_samples);
        let low_s = s.labels.as_deref().map(|l| {
            let t: Vec<u64> = s.samples.iter().zip(l).filter(|(_, a)| a.is_lowering()).map(|(x, _)| x.t).collect();
            match (t.first(), t.last()) {
                (Some(a), Some(b)) => (b - a) as f64 / 1000.0,
                _ => 0.0,
            }
        });
        let r = by_id.get(s.climb_id.as_str());
        let r_low = r.and_then(|c| c.series.labels.as_deref().map(lowering_samples));
        let show = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            table,
            "{},{},{},{},{},{}",
            s.climb_id,
            s.samples.len(),
            show(low),
            low_s.map(|x| format!("{x:.3}")).unwrap_or_default(),
            show(r.map(|c| c.series.len())),
            show(r_low)
        );
        len_pre.push(s.samples.len() as f64);
        if let Some(c) = r {
            len_post.push(c.series.len() as f64);
        }
        low_pre.extend(low.map(|x| x as f64));
        low_post.extend(r_low.map(|x| x as f64));
    }
    out.write("durations.csv", table)?;
    write_histogram(&mut out, "hist_length_pre", "Climb length before resampling", "samples per climb", &len_pre)?;
    write_histogram(&mut out, "hist_length_post", "Climb length after resampling", "samples per climb", &len_post)?;
    write_histogram(&mut out, "hist_lowering_pre", "Lowering duration before resampling", "lowering samples", &low_pre)?;
    write_histogram(&mut out, "hist_lowering_post", "Lowering duration after resampling", "lowering samples", &low_post)?;

    let matrix = if labeled {
        build_feature_matrix(&climbs, &cfg.window).user()?
    } else {
        warn!("corpus has unlabeled sessions; the feature table is left empty");
        FeatureMatrix::default()
    };
    let mut buf = Vec::new();
    write_feature_csv(&matrix, &mut buf).internal()?;
    out.write(FEATURES_FILE, buf)?;

    println!(
        "{} sessions, {} resampled climbs, {} windows of {} ({} lowering) -> {}",
        sessions.len(),
        climbs.len(),
        matrix.len(),
        cfg.window.window_len,
        matrix.positives(),
        out.dir.display()
    );
    let mut m = RunManifest::new("extract", &cfg);
    m.inputs.push(args.corpus.clone());
    m.outputs = out.files;
    m.write(&out.dir, started).internal()
}

fn sweep_plot(rows: &[(usize, f64, f64, f64)]) -> String {
    let series: Vec<Series> = ["precision", "recall", "f1"]
        .iter()
        .enumerate()
        .map(|(k, name)| Series {
            name,
            points: rows
                .iter()
                .map(|r| (r.0 as f64, [r.1, r.2, r.3][k]))
                .collect(),
        })
        .collect();
    line_chart("Lowering classification by window length", "window length (samples)", "score", &series, Some((0.0, 1.0)))
}

pub fn evaluate(common: &Common, args: &EvaluateArgs) -> CmdResult<()> {
    let started = Instant::now();
    let mut cfg = load_config(common)?;
    if let Some(l) = &args.lengths {
        cfg.evaluate.lengths = l.0.clone();
    }
    if let Some(w) = args.window_len {
        cfg.window.window_len = w;
    }
    if let Some(f) = args.folds {
        cfg.cv.folds = f;
    }
    if let Some(r) = args.repetitions {
        cfg.cv.repetitions = r;
    }
    if args.group_by_climb {
        cfg.cv.grouping = FoldGrouping::Climb;
    }
    if let Some(d) = args.max_depth {
        cfg.tree.max_depth = d;
    }
    if let Some(n) = args.target_len {
        cfg.resample.target_len = n;
    }
    if let Some(seed) = cfg.seed {
        cfg.cv.seed = seed;
        cfg.tree.seed = seed;
    }
    cfg.tree.validate().user()?;
    cfg.cv.validate().user()?;
    cfg.resample.validate().user()?;
    if let Some(&bad) = cfg.evaluate.lengths.iter().find(|&&l| l <= cfg.window.overlap) {
        return Err(Failure::User(anyhow!(
            "window length {bad} must exceed the overlap ({})",
            cfg.window.overlap
        )));
    }

    let bytes = std::fs::read(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))
        .user()?;
    let rows: Vec<SweepRow> = if bytes.starts_with(CORPUS_MAGIC.as_bytes()) {
        let text = String::from_utf8(bytes).context("corpus is not UTF-8").user()?;
        let corpus = decode_corpus(&text)
            .with_context(|| format!("corpus {}", args.input.display()))
            .user()?;
        if let Some(s) = corpus_sensor(&corpus.config_echo) {
            cfg.sensor = s;
        }
        let climbs = prepare_climbs(&corpus.sessions, &cfg.sensor, &cfg.resample).user()?;
        if climbs.is_empty() {
            warn!("no usable climbs in {}; nothing to evaluate", args.input.display());
            Vec::new()
        } else {
            window_sweep(&climbs, &cfg.evaluate.lengths, &cfg.window, &cfg.tree, &cfg.cv).user()?
        }
    } else {
        let m = read_feature_csv(&bytes[..])
            .with_context(|| format!("features {}", args.input.display()))
            .user()?;
        if m.is_empty() {
            warn!("{} holds no windows; nothing to evaluate", args.input.display());
            Vec::new()
        } else {
            cfg.evaluate.lengths = vec![cfg.window.window_len];
            let report = cross_validate(&m.rows, &m.labels, Some(&m.groups), &cfg.tree, &cfg.cv).user()?;
            vec![SweepRow {
                window_len: cfg.window.window_len,
                n_windows: m.len(),
                n_lowering: m.positives(),
                report,
            }]
        }
    };

    let mut out = Outputs::create(common, "evaluate")?;
    out.write("metrics.csv", sweep_metrics_csv(&rows))?;
    out.write(SWEEP_FILE, sweep_csv(&rows))?;
    let table = sweep_text_table(&rows);
    out.write("table.txt", &table)?;
    let points: Vec<_> = rows
        .iter()
        .map(|r| {
            let s = r.report.pooled;
            (r.window_len, s.precision, s.recall, s.f1)
        })
        .collect();
    out.write("sweep.svg", sweep_plot(&points))?;
    print!("{table}");

    let mut m = RunManifest::new("evaluate", &cfg);
    m.seeds.insert("cv".into(), cfg.cv.seed);
    m.inputs.push(args.input.clone());
    m.outputs = out.files;
    m.write(&out.dir, started).internal()
}

/// `(window, n_windows, n_lowering, precision, recall, f1)` rows of a sweep CSV.
type SweepLine = (usize, usize, usize, f64, f64, f64);

fn read_sweep(path: &Path) -> anyhow::Result<Vec<SweepLine>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    if lines.next() != Some("window_length,n_windows,n_lowering,precision,recall,f1") {
        return Err(anyhow!("{}: not a sweep table", path.display()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || anyhow!("{} line {}: malformed row", path.display(), i + 2);
            if f.len() != 6 {
                return Err(bad());
            }
            Ok((
                f[0].parse().map_err(|_| bad())?,
                f[1].parse().map_err(|_| bad())?,
                f[2].parse().map_err(|_| bad())?,
                f[3].parse().map_err(|_| bad())?,
                f[4].parse().map_err(|_| bad())?,
                f[5].parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

pub fn report(common: &Common, args: &ReportArgs) -> CmdResult<()> {
    let started = Instant::now();
    let cfg = load_config(common)?;
    let sweep_path = args.run.join(SWEEP_FILE);
    let rows = read_sweep(&sweep_path).user()?;

    let mut md = String::from("# Window-length sweep\n\n");
    let _ = writeln!(md, "Source: `{}`\n", args.run.display());
    match rows.iter().max_by(|a, b| a.5.total_cmp(&b.5)) {
        Some(b) => {
            let _ = writeln!(
                md,
                "Best window length: {} samples (precision {:.3}, recall {:.3}, F1 {:.3})\n",
                b.0, b.3, b.4, b.5
            );
        }
        None => md.push_str("The sweep is empty.\n\n"),
    }
    let good: Vec<String> = rows
        .iter()
        .filter(|r| r.3 >= 0.9 && r.4 >= 0.9 && r.5 >= 0.9)
        .map(|r| r.0.to_string())
        .collect();
    let _ = writeln!(
        md,
        "Lengths with precision, recall and F1 all >= 0.90: {}\n",
        if good.is_empty() { "none".to_string() } else { good.join(", ") }
    );
    md.push_str("| window | windows | lowering | precision | recall | F1 |\n|---:|---:|---:|---:|---:|---:|\n");
    for r in &rows {
        let _ = writeln!(md, "| {} | {} | {} | {:.3} | {:.3} | {:.3} |", r.0, r.1, r.2, r.3, r.4, r.5);
    }
    md.push_str("\n![sweep](sweep.svg)\n");

    let mut out = Outputs::create(common, "report")?;
    out.write("report.md", &md)?;
    let points: Vec<_> = rows.iter().map(|r| (r.0, r.3, r.4, r.5)).collect();
    out.write("sweep.svg", sweep_plot(&points))?;
    print!("{md}");

    let mut m = RunManifest::new("report", &cfg);
    m.inputs.push(sweep_path);
    m.outputs = out.files;
    m.write(&out.dir, started).internal()
}
