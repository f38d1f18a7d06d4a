//! Synthetic labeled acceleration traces for scripted climbs.
//!
//! A trace is the sensor-frame reading of the lowest clipped quickdraw at
//! 100 Hz: a unit gravity direction (the quickdraw pose) plus decaying jolts
//! from rope handling plus white noise. Each activity has its own pose
//! distribution and jolt rate:
//!
//! | activity  | pose                                 | jolts          |
//! |-----------|--------------------------------------|----------------|
//! | idle      | held                                 | none           |
//! | clip      | hanging → random ascent pose         | frequent, hard |
//! | ascend    | redrawn at every jolt                | ~1 per second  |
//! | rest      | half-lifted, quasi-static            | one at start   |
//! | lowering  | upward, wall-orthogonal, slow sway   | none           |
//! | rope_pull | swinging back to hanging             | frequent, soft |
//!
//! Only the discriminative structure matters here: a sustained upward pose
//! while lowering against transient, varied poses elsewhere.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::Activity;
use crate::sensor::AnalogSample;

/// Analog sampling period of generated traces.
pub const TRACE_PERIOD_MS: u64 = 10;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot read scenario")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub activity: Activity,
    pub duration_s: f64,
    pub intensity: f64,
}

impl Phase {
    pub fn new(activity: Activity, duration_s: f64, intensity: f64) -> Self {
        Self {
            activity,
            duration_s,
            intensity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub phases: Vec<Phase>,
    pub seed: u64,
    pub noise_std_g: f64,
    pub sensor_position: u32,
}

impl Default for ScenarioScript {
    fn default() -> Self {
        use Activity::*;
        Self {
            phases: vec![
                Phase::new(Idle, 5.0, 0.0),
                Phase::new(Clip, 2.0, 1.0),
                Phase::new(Ascend, 14.0, 1.0),
                Phase::new(Rest, 2.0, 0.5),
                Phase::new(Ascend, 6.0, 1.0),
                Phase::new(Lowering, 15.0, 1.0),
                Phase::new(RopePull, 3.0, 1.0),
                Phase::new(Idle, 30.0, 0.0),
            ],
            seed: 1,
            noise_std_g: 0.03,
            sensor_position: 1,
        }
    }
}

impl ScenarioScript {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if self.phases.is_empty() {
            return bad("at least one phase is required".into());
        }
        for (i, p) in self.phases.iter().enumerate() {
            if !(p.duration_s > 0.0 && p.duration_s.is_finite()) {
                return bad(format!("phase {i} ({}) needs a positive duration", p.activity));
            }
            if !(p.intensity >= 0.0 && p.intensity.is_finite()) {
                return bad(format!("phase {i} ({}) needs a non-negative intensity", p.activity));
            }
        }
        let lowering = self.phases.iter().filter(|p| p.activity.is_lowering()).count();
        if lowering > 1 {
            return bad(format!("a climb has at most one lowering phase, found {lowering}"));
        }
        if !(self.noise_std_g >= 0.0 && self.noise_std_g.is_finite()) {
            return bad("noise_std_g must be >= 0".into());
        }
        Ok(())
    }

    pub fn total_duration_s(&self) -> f64 {
        self.phases.iter().map(|p| p.duration_s).sum()
    }

    /// Parse the key–value scenario format:
    ///
    /// ```text
    /// # comment
    /// seed = 1
    /// noise_std_g = 0.03
    /// position = 1
    /// phase = clip 2.0 1.0      # activity, duration in s, intensity
    /// ```
    ///
    /// Phases run in file order. Keys other than `phase` may appear once.
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut script = ScenarioScript {
            phases: Vec::new(),
            ..Default::default()
        };
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| SynthError::Parse { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key != "phase" {
                if seen.contains(&key) {
                    return Err(err(format!("duplicate key `{key}`")));
                }
                seen.push(key);
            }
            match key {
                "seed" => script.seed = value.parse().map_err(|_| err(format!("bad seed `{value}`")))?,
                "noise_std_g" => {
                    script.noise_std_g = value.parse().map_err(|_| err(format!("bad noise `{value}`")))?
                }
                "position" => {
                    script.sensor_position =
                        value.parse().map_err(|_| err(format!("bad position `{value}`")))?
                }
                "phase" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if !(2..=3).contains(&parts.len()) {
                        return Err(err("phase needs `activity duration_s [intensity]`".into()));
                    }
                    let activity: Activity = parts[0].parse().map_err(|e| err(format!("{e}")))?;
                    let duration_s: f64 = parts[1]
                        .parse()
                        .map_err(|_| err(format!("bad duration `{}`", parts[1])))?;
                    let intensity: f64 = match parts.get(2) {
                        Some(s) => s.parse().map_err(|_| err(format!("bad intensity `{s}`")))?,
                        None => 1.0,
                    };
                    script.phases.push(Phase::new(activity, duration_s, intensity));
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        script.validate()?;
        Ok(script)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Render in the format accepted by [`ScenarioScript::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "noise_std_g = {}", self.noise_std_g);
        let _ = writeln!(out, "position = {}", self.sensor_position);
        for p in &self.phases {
            let _ = writeln!(out, "phase = {} {} {}", p.activity, p.duration_s, p.intensity);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrace {
    pub samples: Vec<AnalogSample>,
    pub labels: Vec<Activity>,
    pub sensor_position: u32,
}

impl LabeledTrace {
    /// Label of the last sample at or before `t` (the first label before the
    /// trace starts).
    pub fn label_at(&self, t: u64) -> Option<Activity> {
        if self.samples.is_empty() {
            return None;
        }
        let idx = self.samples.partition_point(|s| s.t <= t);
        Some(self.labels[idx.saturating_sub(1)])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

type Vec3 = [f64; 3];

fn normalize(v: Vec3) -> Vec3 {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Unit reading whose yz plane angle is `yz_deg` (x = 0), then rolled by
/// `roll_deg` about the sensor z axis.
fn pose(yz_deg: f64, roll_deg: f64) -> Vec3 {
    let (s, c) = yz_deg.to_radians().sin_cos();
    rotate_z([0.0, -s, c], roll_deg)
}

fn rotate_x(v: Vec3, deg: f64) -> Vec3 {
    let (s, c) = deg.to_radians().sin_cos();
    [v[0], v[1] * c - v[2] * s, v[1] * s + v[2] * c]
}

fn rotate_z(v: Vec3, deg: f64) -> Vec3 {
    let (s, c) = deg.to_radians().sin_cos();
    [v[0] * c - v[1] * s, v[0] * s + v[1] * c, v[2]]
}

/// Quickdraw hanging freely below its bolt.
const HANG_YZ_DEG: f64 = 256.0;

/// Rate and dwell range of short rope-loaded pauses during an ascent, in
/// which the draw sits in a lowering-like pose.
const LOADED_RATE_HZ: f64 = 0.15;
const LOADED_DWELL_S: (f64, f64) = (0.8, 3.0);

#[derive(Debug, Clone)]
struct Jolt {
    start_ms: f64,
    amplitude: Vec3,
    freq_hz: f64,
    tau_s: f64,
}

impl Jolt {
    fn at(&self, t_ms: f64) -> Vec3 {
        let dt = (t_ms - self.start_ms) / 1000.0;
        if !(0.0..5.0 * self.tau_s).contains(&dt) {
            return [0.0; 3];
        }
        let k = (-dt / self.tau_s).exp() * (2.0 * PI * self.freq_hz * dt).sin();
        [self.amplitude[0] * k, self.amplitude[1] * k, self.amplitude[2] * k]
    }
}

/// Pose targets, sway and jolts scheduled for one phase.
struct PhasePlan {
    start_ms: f64,
    end_ms: f64,
    activity: Activity,
    /// (time, target pose) pairs; the pose relaxes toward the latest target.
    targets: Vec<(f64, Vec3)>,
    relax_s: f64,
    jolts: Vec<Jolt>,
    sway: Option<Sway>,
}

#[derive(Debug, Clone, Copy)]
struct Sway {
    pitch_deg: f64,
    roll_deg: f64,
    period_s: f64,
    phase: f64,
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v: Vec3 = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if n2 > 1e-3 && n2 <= 1.0 {
            return normalize(v);
        }
    }
}

fn jolt(rng: &mut ChaCha8Rng, start_ms: f64, magnitude: f64) -> Jolt {
    let d = random_unit(rng);
    Jolt {
        start_ms,
        amplitude: [d[0] * magnitude, d[1] * magnitude, d[2] * magnitude],
        freq_hz: rng.random_range(2.5..6.0),
        tau_s: rng.random_range(0.12..0.3),
    }
}

/// Poisson jolt train over `[start, end)`.
fn jolt_train(
    rng: &mut ChaCha8Rng,
    start_ms: f64,
    end_ms: f64,
    rate_hz: f64,
    mag: (f64, f64),
) -> Vec<Jolt> {
    let mut out = Vec::new();
    if rate_hz <= 0.0 || mag.1 <= 0.0 {
        return out;
    }
    let gap = Exp::new(rate_hz).expect("positive rate");
    let mut t = start_ms;
    loop {
        t += gap.sample(rng) * 1000.0;
        if t >= end_ms {
            break;
        }
        let m = rng.random_range(mag.0..mag.1);
        out.push(jolt(rng, t, m));
    }
    out
}

/// Non-overlapping `(start, end)` pauses in ms, ending before `end_ms`.
fn loaded_episodes(rng: &mut ChaCha8Rng, start_ms: f64, end_ms: f64) -> Vec<(f64, f64)> {
    let gap = Exp::new(LOADED_RATE_HZ).expect("positive rate");
    let mut out = Vec::new();
    let mut t = start_ms + 1000.0;
    loop {
        t += gap.sample(rng) * 1000.0;
        let stop = t + rng.random_range(LOADED_DWELL_S.0..LOADED_DWELL_S.1) * 1000.0;
        if stop >= end_ms - 500.0 {
            break;
        }
        out.push((t, stop));
        t = stop + 1000.0;
    }
    out
}

fn plan_phase(
    rng: &mut ChaCha8Rng,
    phase: &Phase,
    start_ms: f64,
    lowering_yz: f64,
    lowering_roll: f64,
) -> PhasePlan {
    let end_ms = start_ms + phase.duration_s * 1000.0;
    let k = phase.intensity;
    let mut plan = PhasePlan {
        start_ms,
        end_ms,
        activity: phase.activity,
        targets: Vec::new(),
        relax_s: 0.25,
        jolts: Vec::new(),
        sway: None,
    };
    let ascent_pose = |rng: &mut ChaCha8Rng| {
        pose(
            rng.random_range(195.0..262.0),
            rng.random_range(-25.0..25.0),
        )
    };
    match phase.activity {
        Activity::Idle => {}
        Activity::Clip => {
            plan.jolts = jolt_train(rng, start_ms, end_ms, 2.5, (0.6 * k, 1.2 * k));
            plan.jolts.insert(0, jolt(rng, start_ms + 50.0, 1.0 * k.max(0.5)));
            plan.targets.push((start_ms, ascent_pose(rng)));
        }
        Activity::Ascend => {
            let jolts = jolt_train(rng, start_ms, end_ms, 1.0, (0.35 * k, 0.9 * k));
            let episodes = loaded_episodes(rng, start_ms, end_ms);
            plan.targets.push((start_ms, ascent_pose(rng)));
            for &(a, b) in &episodes {
                plan.targets.push((a, pose(rng.random_range(120.0..155.0), rng.random_range(-8.0..8.0))));
                plan.targets.push((b, ascent_pose(rng)));
            }
            // the draw hangs still while loaded: no jolts inside an episode
            plan.jolts = jolts
                .into_iter()
                .filter(|j| !episodes.iter().any(|&(a, b)| j.start_ms > a - 1000.0 && j.start_ms < b))
                .collect();
            for j in &plan.jolts {
                plan.targets.push((j.start_ms, ascent_pose(rng)));
            }
            plan.targets.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        Activity::Rest => {
            plan.jolts.push(jolt(rng, start_ms + 20.0, 0.5 * k.max(0.2)));
            plan.targets.push((
                start_ms,
                pose(rng.random_range(165.0..215.0), rng.random_range(-15.0..15.0)),
            ));
            plan.sway = Some(Sway {
                pitch_deg: 4.0 * k,
                roll_deg: 3.0 * k,
                period_s: rng.random_range(2.0..4.0),
                phase: rng.random_range(0.0..2.0 * PI),
            });
        }
        Activity::Lowering => {
            plan.targets.push((start_ms, pose(lowering_yz, lowering_roll)));
            plan.relax_s = 0.08;
            plan.sway = Some(Sway {
                pitch_deg: 6.0 * k,
                roll_deg: 5.0 * k,
                period_s: rng.random_range(2.5..4.0),
                phase: rng.random_range(0.0..2.0 * PI),
            });
        }
        Activity::RopePull => {
            plan.jolts = jolt_train(rng, start_ms, end_ms, 3.0, (0.25 * k, 0.6 * k));
            let n = plan.jolts.len();
            for (i, j) in plan.jolts.iter().enumerate() {
                let yz = if i + 1 == n {
                    HANG_YZ_DEG
                } else {
                    rng.random_range(215.0..275.0)
                };
                plan.targets.push((j.start_ms, pose(yz, rng.random_range(-20.0..20.0))));
            }
            plan.targets.push((end_ms - 300.0, pose(HANG_YZ_DEG, 0.0)));
        }
    }
    plan
}

/// Deterministic trace for one scripted climb.
pub fn generate(script: &ScenarioScript) -> Result<LabeledTrace, SynthError> {
    Ok(generate_with_truth(script)?.0)
}

/// As [`generate`], also returning the noise-free trace (same poses and
/// jolts, zero noise).
pub fn generate_with_truth(script: &ScenarioScript) -> Result<(LabeledTrace, Vec<AnalogSample>), SynthError> {
    script.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(script.seed ^ 0xD1B5_4A32_D192_ED03);

    let lowering_yz = rng.random_range(118.0..140.0);
    let lowering_roll = rng.random_range(-6.0..6.0);
    let mut start = 0.0;
    let plans: Vec<PhasePlan> = script
        .phases
        .iter()
        .map(|p| {
            let plan = plan_phase(&mut rng, p, start, lowering_yz, lowering_roll);
            start = plan.end_ms;
            plan
        })
        .collect();
    let total_ms = start;

    let mut samples = Vec::new();
    let mut truth = Vec::new();
    let mut labels = Vec::new();
    let mut current = pose(HANG_YZ_DEG, 0.0);
    let dt_s = TRACE_PERIOD_MS as f64 / 1000.0;
    let mut plan_idx = 0;
    let mut t = 0u64;
    while (t as f64) < total_ms {
        let tf = t as f64;
        while tf >= plans[plan_idx].end_ms {
            plan_idx += 1;
        }
        let plan = &plans[plan_idx];

        if let Some(&(_, target)) = plan.targets.iter().rev().find(|(ts, _)| *ts <= tf) {
            let a = (dt_s / plan.relax_s).min(1.0);
            current = normalize([
                current[0] + (target[0] - current[0]) * a,
                current[1] + (target[1] - current[1]) * a,
                current[2] + (target[2] - current[2]) * a,
            ]);
        }
        let mut g = current;
        if let Some(sw) = plan.sway {
            let w = 2.0 * PI * (tf - plan.start_ms) / 1000.0 / sw.period_s + sw.phase;
            g = rotate_x(g, sw.pitch_deg * w.sin());
            g = rotate_z(g, sw.roll_deg * (0.7 * w).cos());
        }
        for j in &plan.jolts {
            let a = j.at(tf);
            g = [g[0] + a[0], g[1] + a[1], g[2] + a[2]];
        }
        let noise: Vec3 = [
            noise_rng.sample::<f64, _>(StandardNormal) * script.noise_std_g,
            noise_rng.sample::<f64, _>(StandardNormal) * script.noise_std_g,
            noise_rng.sample::<f64, _>(StandardNormal) * script.noise_std_g,
        ];
        truth.push(AnalogSample { t, accel: g });
        samples.push(AnalogSample {
            t,
            accel: [g[0] + noise[0], g[1] + noise[1], g[2] + noise[2]],
        });
        labels.push(plan.activity);
        t += TRACE_PERIOD_MS;
    }
    Ok((
        LabeledTrace {
            samples,
            labels,
            sensor_position: script.sensor_position,
        },
        truth,
    ))
}

/// Seed of climb `i` in a corpus; climb 0 keeps the base seed.
pub fn climb_seed(base: u64, i: usize) -> u64 {
    base.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Per-climb scripts: durations and intensities scaled by independent
/// factors in `[1 - jitter, 1 + jitter]`.
pub fn jittered_scripts(n_climbs: usize, base: &ScenarioScript, jitter: f64) -> Vec<ScenarioScript> {
    (0..n_climbs)
        .map(|i| {
            let seed = climb_seed(base.seed, i);
            let mut s = base.clone();
            s.seed = seed;
            if jitter > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_F42D_4C95_7F2D);
                for p in &mut s.phases {
                    p.duration_s *= rng.random_range(1.0 - jitter..=1.0 + jitter);
                    p.intensity *= rng.random_range(1.0 - jitter..=1.0 + jitter);
                }
            }
            s
        })
        .collect()
}

pub fn generate_corpus(
    n_climbs: usize,
    base: &ScenarioScript,
    jitter: f64,
) -> Result<Vec<LabeledTrace>, SynthError> {
    if n_climbs < 1 {
        return Err(SynthError::Invalid("n_climbs must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(SynthError::Invalid("jitter must be in [0, 1)".into()));
    }
    jittered_scripts(n_climbs, base, jitter)
        .iter()
        .map(generate)
        .collect()
}
