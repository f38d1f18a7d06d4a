use std::fmt::Write;

use serde::Serialize;

use super::cv::{evaluate, CrossValConfig};
use super::metrics::MetricsReport;
use super::tree::TreeConfig;
use super::LearnerError;
use crate::features::{build_feature_matrix, ResampledClimb, WindowConfig};

pub const DEFAULT_SWEEP_LENGTHS: [usize; 12] = [5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub window_len: usize,
    pub n_windows: usize,
    pub n_lowering: usize,
    pub report: MetricsReport,
}

/// Re-window the corpus at each length and cross-validate the tree.
/// `template` supplies overlap and the labeling fraction.
pub fn window_sweep(
    climbs: &[ResampledClimb],
    lengths: &[usize],
    template: &WindowConfig,
    tree_cfg: &TreeConfig,
    cv_cfg: &CrossValConfig,
) -> Result<Vec<SweepRow>, LearnerError> {
    tree_cfg.validate()?;
    cv_cfg.validate()?;
    let shortest = climbs.iter().map(|c| c.series.len()).min().unwrap_or(0);
    if let Some(&len) = lengths.iter().find(|&&len| len >= shortest) {
        return Err(LearnerError::WindowTooLong { len, shortest });
    }
    lengths
        .iter()
        .map(|&len| {
            let wcfg = WindowConfig {
                window_len: len,
                ..template.clone()
            };
            let m = build_feature_matrix(climbs, &wcfg)?;
            let report = evaluate(&m.rows, &m.labels, Some(&m.groups), tree_cfg, cv_cfg)?;
            log::info!(
                "window {len}: {} windows, F1 {:.3}",
                m.len(),
                report.pooled.f1
            );
            Ok(SweepRow {
                window_len: len,
                n_windows: m.len(),
                n_lowering: m.positives(),
                report,
            })
        })
        .collect()
}

/// One row per (window length, repetition), followed by the pooled and
/// mean rows of that length.
pub fn sweep_metrics_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("window_length,repetition,tp,fp,tn,fn,precision,recall,f1\n");
    for row in rows {
        let r = &row.report;
        for rep in &r.per_repetition {
            let c = rep.confusion;
            let s = rep.scores;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.6},{:.6},{:.6}",
                row.window_len, rep.repetition, c.tp, c.fp, c.tn, c.fn_, s.precision, s.recall, s.f1
            );
        }
        let c = r.pooled_confusion;
        let _ = writeln!(
            out,
            "{},pooled,{},{},{},{},{:.6},{:.6},{:.6}",
            row.window_len, c.tp, c.fp, c.tn, c.fn_, r.pooled.precision, r.pooled.recall, r.pooled.f1
        );
        let _ = writeln!(
            out,
            "{},mean,,,,,{:.6},{:.6},{:.6}",
            row.window_len, r.mean.precision, r.mean.recall, r.mean.f1
        );
    }
    out
}

/// Compact length → pooled P/R/F1 table for plotting.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("window_length,n_windows,n_lowering,precision,recall,f1\n");
    for row in rows {
        let s = row.report.pooled;
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6}",
            row.window_len, row.n_windows, row.n_lowering, s.precision, s.recall, s.f1
        );
    }
    out
}

pub fn sweep_text_table(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6}  {:>8}  {:>8}  {:>9}  {:>6}  {:>6}  {:>6}",
        "window", "windows", "lowering", "precision", "recall", "f1", "mean f1"
    );
    for row in rows {
        let s = row.report.pooled;
        let flag = if s.precision_undefined { "*" } else { "" };
        let _ = writeln!(
            out,
            "{:>6}  {:>8}  {:>8}  {:>8.3}{:1}  {:>6.3}  {:>6.3}  {:>6.3}",
            row.window_len,
            row.n_windows,
            row.n_lowering,
            s.precision,
            flag,
            s.recall,
            s.f1,
            row.report.mean.f1
        );
    }
    out
}
