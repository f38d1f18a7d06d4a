//! End-to-end glue: scripted climbs → emulated packets → sessions →
//! orientation series → resampled climbs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::features::{resample, FeatureError, ResampleConfig, ResampledClimb, Series};
use crate::orientation::orientation_of;
use crate::sensor::{run_trace, SensorConfig, SensorError};
use crate::station::ClimbSession;
use crate::synth::{jittered_scripts, generate, LabeledTrace, ScenarioScript, SynthError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Run one labeled trace through a fresh sensor node. The session holds every
/// transmitted averaged sample, labeled with the ground truth at its
/// timestamp.
pub fn simulate_climb(
    trace: &LabeledTrace,
    cfg: &SensorConfig,
    sensor_id: u32,
    climb_id: &str,
) -> Result<ClimbSession, PipelineError> {
    let packets = run_trace(&trace.samples, cfg, sensor_id, trace.sensor_position)?;
    let samples: Vec<_> = packets.iter().flat_map(|p| p.samples.iter().copied()).collect();
    let labels = samples
        .iter()
        .map(|s| trace.label_at(s.t).expect("trace is non-empty when packets exist"))
        .collect();
    Ok(ClimbSession {
        climb_id: climb_id.to_string(),
        sensor_position: trace.sensor_position,
        samples,
        labels: Some(labels),
        meta: BTreeMap::from([
            ("packets".to_string(), packets.len().to_string()),
            ("sensor_id".to_string(), sensor_id.to_string()),
        ]),
    })
}

/// Generate `n` jittered climbs from `base` and emulate each one.
pub fn simulate_corpus(
    n: usize,
    base: &ScenarioScript,
    jitter: f64,
    cfg: &SensorConfig,
) -> Result<Vec<ClimbSession>, PipelineError> {
    if n < 1 {
        return Err(SynthError::Invalid("n_climbs must be >= 1".into()).into());
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(SynthError::Invalid("jitter must be in [0, 1)".into()).into());
    }
    cfg.validate()?;
    jittered_scripts(n, base, jitter)
        .par_iter()
        .enumerate()
        .map(|(i, script)| {
            let trace = generate(script)?;
            let mut s = simulate_climb(&trace, cfg, 1, &format!("climb-{i:03}"))?;
            s.meta.insert("seed".into(), script.seed.to_string());
            Ok(s)
        })
        .collect()
}

/// Orientation series of a session. Readings with a degenerate plane are
/// dropped; the second value counts them.
pub fn session_series(session: &ClimbSession, cfg: &SensorConfig) -> Result<(Series, usize), PipelineError> {
    let mut samples = Vec::with_capacity(session.samples.len());
    let mut labels = session.labels.as_ref().map(|_| Vec::with_capacity(session.samples.len()));
    let mut dropped = 0;
    for (i, raw) in session.samples.iter().enumerate() {
        match orientation_of(raw.to_g(cfg)?, raw.t as f64) {
            Ok(o) => {
                samples.push(o);
                if let (Some(dst), Some(src)) = (labels.as_mut(), session.labels.as_ref()) {
                    dst.push(src[i]);
                }
            }
            Err(_) => dropped += 1,
        }
    }
    Ok((Series { samples, labels }, dropped))
}

/// Orientation, then resampling, for every session with at least two usable
/// samples. Shorter sessions are skipped with a warning.
pub fn prepare_climbs(
    sessions: &[ClimbSession],
    sensor_cfg: &SensorConfig,
    resample_cfg: &ResampleConfig,
) -> Result<Vec<ResampledClimb>, PipelineError> {
    resample_cfg.validate()?;
    let prepared: Vec<Option<ResampledClimb>> = sessions
        .par_iter()
        .map(|s| -> Result<_, PipelineError> {
            let (series, dropped) = session_series(s, sensor_cfg)?;
            if dropped > 0 {
                log::debug!("{}: dropped {dropped} degenerate sample(s)", s.climb_id);
            }
            if series.len() < 2 {
                log::warn!("{}: fewer than 2 usable samples, skipped", s.climb_id);
                return Ok(None);
            }
            Ok(Some(ResampledClimb {
                climb_id: s.climb_id.clone(),
                series: resample(&series, resample_cfg)?,
            }))
        })
        .collect::<Result<_, _>>()?;
    Ok(prepared.into_iter().flatten().collect())
}
