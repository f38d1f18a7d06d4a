//! Emulation of the duty-cycled quickdraw accelerometer node.
//!
//! The node samples at a low rate while asleep and compares each reading with
//! a retained reference. A per-axis jump of at least `wake_threshold_counts`
//! switches it to the active rate, where every `avg_group` raw readings are
//! averaged and the averages are shipped in batches of `batch_size`. When the
//! averages stop changing for `inactive_confirm_s` the node is considered
//! inactive; after a further `sleep_after_s` it ships whatever is held back
//! as a flush packet and goes back to sleep.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::station::SamplePacket;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("invalid sensor config: {0}")]
    InvalidConfig(String),
    #[error("count {count} outside [-{max}, {max}]")]
    CountOutOfRange { count: i32, max: i32 },
    #[error("averaging group needs {expected} samples, got {got}")]
    GroupLength { expected: usize, got: usize },
    #[error("timestamp {t} ms does not advance past {prev} ms")]
    NonMonotonic { prev: u64, t: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub full_scale_g: f64,
    pub output_bits: u32,
    pub sleep_rate_hz: f64,
    pub active_rate_hz: f64,
    pub wake_threshold_counts: i32,
    pub avg_group: usize,
    pub batch_size: usize,
    pub inactive_confirm_s: f64,
    pub sleep_after_s: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            full_scale_g: 2.0,
            output_bits: 8,
            sleep_rate_hz: 10.0,
            active_rate_hz: 50.0,
            wake_threshold_counts: 15,
            avg_group: 8,
            batch_size: 2,
            inactive_confirm_s: 0.8,
            sleep_after_s: 20.0,
        }
    }
}

impl SensorConfig {
    /// Largest representable magnitude, `2^(bits-1) - 1`.
    pub fn max_count(&self) -> i32 {
        (1i32 << (self.output_bits - 1)) - 1
    }

    /// Acceleration represented by one count.
    pub fn resolution_g(&self) -> f64 {
        self.full_scale_g / self.max_count() as f64
    }

    pub fn sleep_period_ms(&self) -> u64 {
        (1000.0 / self.sleep_rate_hz).round().max(1.0) as u64
    }

    pub fn active_period_ms(&self) -> u64 {
        (1000.0 / self.active_rate_hz).round().max(1.0) as u64
    }

    pub fn validate(&self) -> Result<(), SensorError> {
        let bad = |m: &str| Err(SensorError::InvalidConfig(m.to_string()));
        if !(self.full_scale_g > 0.0) {
            return bad("full_scale_g must be > 0");
        }
        if !(2..=16).contains(&self.output_bits) {
            return bad("output_bits must be in [2, 16]");
        }
        if !(self.sleep_rate_hz > 0.0 && self.active_rate_hz > 0.0) {
            return bad("sampling rates must be > 0");
        }
        if self.sleep_rate_hz >= self.active_rate_hz {
            return bad("sleep_rate_hz must be below active_rate_hz");
        }
        if self.wake_threshold_counts < 1 || self.wake_threshold_counts > self.max_count() {
            return bad("wake_threshold_counts must be in [1, 2^(bits-1) - 1]");
        }
        if self.avg_group < 1 || self.batch_size < 1 {
            return bad("avg_group and batch_size must be >= 1");
        }
        if !(self.inactive_confirm_s >= 0.0 && self.sleep_after_s >= 0.0) {
            return bad("inactivity timers must be non-negative");
        }
        Ok(())
    }

    fn inactive_confirm_ms(&self) -> u64 {
        (self.inactive_confirm_s * 1000.0).round() as u64
    }

    fn sleep_after_ms(&self) -> u64 {
        (self.sleep_after_s * 1000.0).round() as u64
    }
}

/// One 3-axis reading in sensor counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RawSample {
    /// Milliseconds, monotonic per sensor.
    pub t: u64,
    pub x: i16,
    pub y: i16,
    pub z: i16,
}

impl RawSample {
    pub fn new(t: u64, x: i16, y: i16, z: i16) -> Self {
        Self { t, x, y, z }
    }

    pub fn axes(&self) -> [i16; 3] {
        [self.x, self.y, self.z]
    }

    pub fn to_g(&self, cfg: &SensorConfig) -> Result<[f64; 3], SensorError> {
        Ok([
            dequantize(self.x, cfg)?,
            dequantize(self.y, cfg)?,
            dequantize(self.z, cfg)?,
        ])
    }
}

/// Analog acceleration (g, sensor frame) at a millisecond timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalogSample {
    pub t: u64,
    pub accel: [f64; 3],
}

/// Convert acceleration to signed counts, rounding half away from zero and
/// saturating at the full-scale code.
pub fn quantize(a: f64, cfg: &SensorConfig) -> i16 {
    let max = cfg.max_count() as f64;
    let scaled = (a / cfg.full_scale_g * max).round();
    scaled.clamp(-max, max) as i16
}

pub fn dequantize(c: i16, cfg: &SensorConfig) -> Result<f64, SensorError> {
    let max = cfg.max_count();
    if (c as i32).abs() > max {
        return Err(SensorError::CountOutOfRange { count: c as i32, max });
    }
    Ok(c as f64 * cfg.full_scale_g / max as f64)
}

/// True when at least one axis moved by `wake_threshold_counts` or more.
pub fn exceeds_threshold(prev: &RawSample, curr: &RawSample, cfg: &SensorConfig) -> bool {
    prev.axes()
        .iter()
        .zip(curr.axes().iter())
        .any(|(a, b)| (*b as i32 - *a as i32).abs() >= cfg.wake_threshold_counts)
}

fn mean_half_away(values: impl Iterator<Item = i16>, n: usize) -> i16 {
    let sum: i64 = values.map(i64::from).sum();
    let n = n as i64;
    // integer round-half-away-from-zero of sum / n
    let q = (2 * sum.abs() + n) / (2 * n);
    (sum.signum() * q) as i16
}

/// Per-axis mean of one averaging group; the timestamp is the last sample's.
pub fn average_group(samples: &[RawSample], cfg: &SensorConfig) -> Result<RawSample, SensorError> {
    if samples.len() != cfg.avg_group {
        return Err(SensorError::GroupLength {
            expected: cfg.avg_group,
            got: samples.len(),
        });
    }
    let n = samples.len();
    Ok(RawSample {
        t: samples[n - 1].t,
        x: mean_half_away(samples.iter().map(|s| s.x), n),
        y: mean_half_away(samples.iter().map(|s| s.y), n),
        z: mean_half_away(samples.iter().map(|s| s.z), n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Sleep,
    Active,
}

/// Mutable node state. One per sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorState {
    pub mode: Mode,
    /// Comparison reference: the last transmitted average while active, the
    /// last observed reading while asleep.
    pub last_emitted: Option<RawSample>,
    pub avg_buffer: Vec<RawSample>,
    pub batch_buffer: Vec<RawSample>,
    pub below_threshold_since: Option<u64>,
    pub inactive_since: Option<u64>,
    last_t: Option<u64>,
    next_seq: u64,
}

impl Default for SensorState {
    fn default() -> Self {
        Self::new()
    }
}

impl SensorState {
    /// Power-on state: asleep, no reference yet.
    pub fn new() -> Self {
        Self {
            mode: Mode::Sleep,
            last_emitted: None,
            avg_buffer: Vec::new(),
            batch_buffer: Vec::new(),
            below_threshold_since: None,
            inactive_since: None,
            last_t: None,
            next_seq: 0,
        }
    }

    /// Sampling period the caller must honour for the next `step`.
    pub fn sample_period_ms(&self, cfg: &SensorConfig) -> u64 {
        match self.mode {
            Mode::Sleep => cfg.sleep_period_ms(),
            Mode::Active => cfg.active_period_ms(),
        }
    }
}

/// A sensor node: configuration, identity and state.
#[derive(Debug, Clone)]
pub struct SensorEmulator {
    cfg: SensorConfig,
    sensor_id: u32,
    position: u32,
    state: SensorState,
}

impl SensorEmulator {
    pub fn new(cfg: SensorConfig, sensor_id: u32, position: u32) -> Result<Self, SensorError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            sensor_id,
            position,
            state: SensorState::new(),
        })
    }

    pub fn config(&self) -> &SensorConfig {
        &self.cfg
    }

    pub fn state(&self) -> &SensorState {
        &self.state
    }

    pub fn mode(&self) -> Mode {
        self.state.mode
    }

    pub fn sample_period_ms(&self) -> u64 {
        self.state.sample_period_ms(&self.cfg)
    }

    /// Feed one analog reading taken at `t`. Returns the packets transmitted
    /// as a consequence (zero or one in practice).
    pub fn step(&mut self, analog: [f64; 3], t: u64) -> Result<Vec<SamplePacket>, SensorError> {
        if let Some(prev) = self.state.last_t {
            if t <= prev {
                return Err(SensorError::NonMonotonic { prev, t });
            }
        }
        self.state.last_t = Some(t);
        let sample = RawSample {
            t,
            x: quantize(analog[0], &self.cfg),
            y: quantize(analog[1], &self.cfg),
            z: quantize(analog[2], &self.cfg),
        };
        match self.state.mode {
            Mode::Sleep => {
                self.step_sleep(sample);
                Ok(Vec::new())
            }
            Mode::Active => Ok(self.step_active(sample)),
        }
    }

    fn step_sleep(&mut self, sample: RawSample) {
        let wake = match &self.state.last_emitted {
            Some(reference) => exceeds_threshold(reference, &sample, &self.cfg),
            None => false,
        };
        // the reading becomes the new reference either way, so slow drift
        // never accumulates into a wake-up
        self.state.last_emitted = Some(sample);
        if wake {
            self.state.mode = Mode::Active;
            self.state.below_threshold_since = None;
            self.state.inactive_since = None;
        }
    }

    fn step_active(&mut self, sample: RawSample) -> Vec<SamplePacket> {
        self.state.avg_buffer.push(sample);
        if self.state.avg_buffer.len() < self.cfg.avg_group {
            return Vec::new();
        }
        let avg = average_group(&self.state.avg_buffer, &self.cfg)
            .expect("buffer holds exactly avg_group samples");
        self.state.avg_buffer.clear();

        let moved = match &self.state.last_emitted {
            Some(reference) => exceeds_threshold(reference, &avg, &self.cfg),
            None => true,
        };
        if moved {
            self.state.below_threshold_since = None;
            self.state.inactive_since = None;
        } else {
            let since = *self.state.below_threshold_since.get_or_insert(avg.t);
            if self.state.inactive_since.is_none()
                && avg.t - since >= self.cfg.inactive_confirm_ms()
            {
                self.state.inactive_since = Some(avg.t);
            }
        }
        self.state.last_emitted = Some(avg);
        self.state.batch_buffer.push(avg);

        let go_to_sleep = self
            .state
            .inactive_since
            .is_some_and(|since| avg.t - since >= self.cfg.sleep_after_ms());
        if go_to_sleep {
            let packet = self.emit(true);
            self.state.mode = Mode::Sleep;
            self.state.avg_buffer.clear();
            self.state.below_threshold_since = None;
            self.state.inactive_since = None;
            return vec![packet];
        }
        if self.state.batch_buffer.len() >= self.cfg.batch_size {
            return vec![self.emit(false)];
        }
        Vec::new()
    }

    fn emit(&mut self, flush: bool) -> SamplePacket {
        let samples = std::mem::take(&mut self.state.batch_buffer);
        let seq = self.state.next_seq;
        self.state.next_seq += 1;
        SamplePacket {
            sensor_id: self.sensor_id,
            position: self.position,
            seq,
            flush,
            samples,
        }
    }
}

/// One emulator tick as seen by [`run_trace_instrumented`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub t: u64,
    pub analog: [f64; 3],
    pub mode_before: Mode,
    pub mode_after: Mode,
    pub packets_emitted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRun {
    pub packets: Vec<SamplePacket>,
    pub ticks: Vec<Tick>,
}

/// Linear interpolation of the analog trace at `t`; `hint` is advanced
/// monotonically so a full run stays linear in the trace length.
fn interpolate(trace: &[AnalogSample], t: u64, hint: &mut usize) -> [f64; 3] {
    while *hint + 1 < trace.len() && trace[*hint + 1].t <= t {
        *hint += 1;
    }
    let a = &trace[*hint];
    if *hint + 1 >= trace.len() || a.t == t {
        return a.accel;
    }
    let b = &trace[*hint + 1];
    let f = (t - a.t) as f64 / (b.t - a.t) as f64;
    [
        a.accel[0] + (b.accel[0] - a.accel[0]) * f,
        a.accel[1] + (b.accel[1] - a.accel[1]) * f,
        a.accel[2] + (b.accel[2] - a.accel[2]) * f,
    ]
}

/// Drive a fresh node over a whole analog trace, sampling it at whichever
/// rate the node is currently in.
pub fn run_trace(
    trace: &[AnalogSample],
    cfg: &SensorConfig,
    sensor_id: u32,
    position: u32,
) -> Result<Vec<SamplePacket>, SensorError> {
    run_trace_instrumented(trace, cfg, sensor_id, position).map(|run| run.packets)
}

/// As [`run_trace`], also recording every tick.
pub fn run_trace_instrumented(
    trace: &[AnalogSample],
    cfg: &SensorConfig,
    sensor_id: u32,
    position: u32,
) -> Result<TraceRun, SensorError> {
    let mut emu = SensorEmulator::new(cfg.clone(), sensor_id, position)?;
    let mut run = TraceRun {
        packets: Vec::new(),
        ticks: Vec::new(),
    };
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
        return Ok(run);
    };
    for w in trace.windows(2) {
        if w[1].t <= w[0].t {
            return Err(SensorError::NonMonotonic {
                prev: w[0].t,
                t: w[1].t,
            });
        }
    }
    let mut hint = 0usize;
    let mut t = first.t;
    while t <= last.t {
        let analog = interpolate(trace, t, &mut hint);
        let mode_before = emu.mode();
        let packets = emu.step(analog, t)?;
        run.ticks.push(Tick {
            t,
            analog,
            mode_before,
            mode_after: emu.mode(),
            packets_emitted: packets.len(),
        });
        run.packets.extend(packets);
        t += emu.sample_period_ms();
    }
    Ok(run)
}
