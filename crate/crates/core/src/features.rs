//! Resampling, sliding windows and per-window orientation statistics.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{Activity, Label};
use crate::orientation::{angle_diff, normalize_deg, OrientationSample};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("need at least 2 samples to resample, got {0}")]
    InsufficientData(usize),
    #[error("sample timestamps must strictly increase (index {0})")]
    Unordered(usize),
    #[error("{0} labels for {1} samples")]
    LabelMismatch(usize, usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("feature window is empty")]
    EmptyWindow,
    #[error("degenerate orientation sample at window index {0}")]
    Degenerate(usize),
    #[error("series is unlabeled")]
    Unlabeled,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("csv: {0}")]
    CsvLayout(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResampleConfig {
    /// Nominal duration every climb is mapped onto.
    pub target_duration_s: f64,
    pub target_len: usize,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            target_duration_s: 60.0,
            target_len: 360,
        }
    }
}

impl ResampleConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.target_len < 2 {
            return Err(FeatureError::InvalidConfig("target_len must be >= 2".into()));
        }
        if !(self.target_duration_s > 0.0) {
            return Err(FeatureError::InvalidConfig("target_duration_s must be > 0".into()));
        }
        Ok(())
    }

    /// Nominal seconds represented by one resampled step.
    pub fn seconds_per_sample(&self) -> f64 {
        self.target_duration_s / (self.target_len - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub window_len: usize,
    pub overlap: usize,
    pub lowering_fraction: f64,
}

/// Window length the classifier is reported at by default.
pub const DEFAULT_WINDOW_LEN: usize = 45;

impl Default for WindowConfig {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW_LEN)
    }
}

impl WindowConfig {
    pub fn new(window_len: usize) -> Self {
        Self {
            window_len,
            overlap: 2,
            lowering_fraction: 0.9,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if !(self.overlap > 0 && self.overlap < self.window_len) {
            return Err(FeatureError::InvalidConfig(format!(
                "overlap {} must be in (0, window_len = {})",
                self.overlap, self.window_len
            )));
        }
        if !(self.lowering_fraction > 0.0 && self.lowering_fraction <= 1.0) {
            return Err(FeatureError::InvalidConfig("lowering_fraction must be in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.window_len - self.overlap
    }
}

/// An orientation time series with optional per-sample activity labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub samples: Vec<OrientationSample>,
    pub labels: Option<Vec<Activity>>,
}

impl Series {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of samples labeled as lowering.
    pub fn lowering_count(&self) -> usize {
        self.labels
            .as_ref()
            .map_or(0, |l| l.iter().filter(|a| a.is_lowering()).count())
    }
}

fn lerp_angle(a: f64, b: f64, f: f64) -> f64 {
    if f == 0.0 {
        return a;
    }
    if f == 1.0 {
        return b;
    }
    normalize_deg(a + angle_diff(a, b) * f)
}

/// Linear, shortest-arc resampling onto `target_len` evenly spaced instants
/// spanning the original time range. Labels follow the nearest input sample
/// (the earlier one on ties).
pub fn resample(series: &Series, cfg: &ResampleConfig) -> Result<Series, FeatureError> {
    cfg.validate()?;
    let xs = &series.samples;
    if xs.len() < 2 {
        return Err(FeatureError::InsufficientData(xs.len()));
    }
    if let Some(i) = (1..xs.len()).find(|&i| xs[i].t <= xs[i - 1].t) {
        return Err(FeatureError::Unordered(i));
    }
    if let Some(l) = &series.labels {
        if l.len() != xs.len() {
            return Err(FeatureError::LabelMismatch(l.len(), xs.len()));
        }
    }
    let t0 = xs[0].t;
    let span = xs[xs.len() - 1].t - t0;
    let steps = (cfg.target_len - 1) as f64;
    let mut out = Vec::with_capacity(cfg.target_len);
    let mut labels = series.labels.as_ref().map(|_| Vec::with_capacity(cfg.target_len));
    let mut seg = 0usize;
    for k in 0..cfg.target_len {
        let t = if k + 1 == cfg.target_len {
            xs[xs.len() - 1].t
        } else {
            t0 + (k as f64 * span) / steps
        };
        while seg + 2 < xs.len() && xs[seg + 1].t <= t {
            seg += 1;
        }
        let (a, b) = (&xs[seg], &xs[seg + 1]);
        let f = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        let angles = [
            lerp_angle(a.theta_yx, b.theta_yx, f),
            lerp_angle(a.theta_yz, b.theta_yz, f),
            lerp_angle(a.theta_xz, b.theta_xz, f),
        ];
        out.push(OrientationSample::from_angles(t, angles));
        if let (Some(dst), Some(src)) = (labels.as_mut(), series.labels.as_ref()) {
            let nearest = if t - a.t <= b.t - t { seg } else { seg + 1 };
            dst.push(src[nearest]);
        }
    }
    Ok(Series {
        samples: out,
        labels,
    })
}

/// Start offsets of every complete window over a series of length `len`.
pub fn window_offsets(len: usize, cfg: &WindowConfig) -> Vec<usize> {
    if len < cfg.window_len {
        log::warn!(
            "series of length {len} is shorter than one window ({})",
            cfg.window_len
        );
        return Vec::new();
    }
    (0..=len - cfg.window_len).step_by(cfg.stride()).collect()
}

/// Lowering iff at least `lowering_fraction` of the window is lowering.
pub fn label_window(labels: &[Activity], cfg: &WindowConfig) -> Label {
    if labels.is_empty() {
        return Label::NotLowering;
    }
    let hits = labels.iter().filter(|a| a.is_lowering()).count();
    if hits as f64 / labels.len() as f64 >= cfg.lowering_fraction {
        Label::Lowering
    } else {
        Label::NotLowering
    }
}

pub const FEATURES_PER_PLANE: usize = 6;
pub const N_FEATURES: usize = 3 * FEATURES_PER_PLANE;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "yx_mean", "yx_std", "yx_min", "yx_max", "yx_range", "yx_median",
    "yz_mean", "yz_std", "yz_min", "yz_max", "yz_range", "yz_median",
    "xz_mean", "xz_std", "xz_min", "xz_max", "xz_range", "xz_median",
];

/// Statistics of one window: for each plane (yx, yz, xz) the mean,
/// population std, min, max, range and median of the angle series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFeatures(pub [f64; N_FEATURES]);

fn channel_stats(values: &mut [f64]) -> [f64; FEATURES_PER_PLANE] {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    values.sort_by(f64::total_cmp);
    let min = values[0];
    let max = values[values.len() - 1];
    let mid = values.len() / 2;
    let median = if values.len() % 2 == 0 {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    };
    [mean, var.sqrt(), min, max, max - min, median]
}

pub fn extract_features(window: &[OrientationSample]) -> Result<WindowFeatures, FeatureError> {
    if window.is_empty() {
        return Err(FeatureError::EmptyWindow);
    }
    if let Some(i) = window
        .iter()
        .position(|s| s.angles().iter().any(|a| !a.is_finite()))
    {
        return Err(FeatureError::Degenerate(i));
    }
    let mut out = [0.0; N_FEATURES];
    let mut buf = Vec::with_capacity(window.len());
    for plane in 0..3 {
        buf.clear();
        buf.extend(window.iter().map(|s| s.angles()[plane]));
        let stats = channel_stats(&mut buf);
        out[plane * FEATURES_PER_PLANE..(plane + 1) * FEATURES_PER_PLANE].copy_from_slice(&stats);
    }
    Ok(WindowFeatures(out))
}

/// Resampled climb ready for windowing.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledClimb {
    pub climb_id: String,
    pub series: Series,
}

/// Windows of a whole corpus, ordered by (climb, offset).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub rows: Vec<[f64; N_FEATURES]>,
    pub labels: Vec<Label>,
    /// Index into the climb list the matrix was built from.
    pub groups: Vec<usize>,
    pub climb_ids: Vec<String>,
    pub offsets: Vec<usize>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Lowering).count()
    }
}

/// Window, label and featurize every climb.
pub fn build_feature_matrix(
    climbs: &[ResampledClimb],
    cfg: &WindowConfig,
) -> Result<FeatureMatrix, FeatureError> {
    cfg.validate()?;
    type Row = ([f64; N_FEATURES], Label, usize);
    let per_climb: Vec<Vec<Row>> = climbs
        .par_iter()
        .map(|c| -> Result<Vec<Row>, FeatureError> {
            let labels = c.series.labels.as_ref().ok_or(FeatureError::Unlabeled)?;
            window_offsets(c.series.len(), cfg)
                .into_iter()
                .map(|off| {
                    let end = off + cfg.window_len;
                    let f = extract_features(&c.series.samples[off..end])?;
                    Ok((f.0, label_window(&labels[off..end], cfg), off))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let mut m = FeatureMatrix::default();
    for (g, rows) in per_climb.into_iter().enumerate() {
        for (r, l, off) in rows {
            m.rows.push(r);
            m.labels.push(l);
            m.groups.push(g);
            m.climb_ids.push(climbs[g].climb_id.clone());
            m.offsets.push(off);
        }
    }
    Ok(m)
}

/// CSV layout: the 18 feature columns, then `label`, `climb_id`, `offset`.
pub fn write_feature_csv<W: Write>(m: &FeatureMatrix, out: W) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.extend(["label", "climb_id", "offset"]);
    w.write_record(&header)?;
    for i in 0..m.len() {
        let mut rec: Vec<String> = m.rows[i].iter().map(|v| v.to_string()).collect();
        rec.push(m.labels[i].as_str().to_string());
        rec.push(m.climb_ids[i].clone());
        rec.push(m.offsets[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<FeatureMatrix, FeatureError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let expected: Vec<&str> = FEATURE_NAMES
        .iter()
        .copied()
        .chain(["label", "climb_id", "offset"])
        .collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(FeatureError::CsvLayout("unexpected header".into()));
    }
    let mut m = FeatureMatrix::default();
    let mut group_of: std::collections::HashMap<String, usize> = Default::default();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| FeatureError::CsvLayout(format!("row {}: bad {what}", line + 2));
        let mut row = [0.0; N_FEATURES];
        for (j, v) in row.iter_mut().enumerate() {
            *v = rec[j].parse().map_err(|_| bad(FEATURE_NAMES[j]))?;
        }
        let label: Label = rec[N_FEATURES].parse().map_err(|_| bad("label"))?;
        let climb = rec[N_FEATURES + 1].to_string();
        let offset: usize = rec[N_FEATURES + 2].parse().map_err(|_| bad("offset"))?;
        let next = group_of.len();
        let g = *group_of.entry(climb.clone()).or_insert(next);
        m.rows.push(row);
        m.labels.push(label);
        m.groups.push(g);
        m.climb_ids.push(climb);
        m.offsets.push(offset);
    }
    Ok(m)
}
