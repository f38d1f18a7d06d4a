//! File-based base-station layer: packet records, climb sessions and corpora.
//!
//! Packet record (one per line, comma separated, no quoting):
//!
//! ```text
//! sensor_id,position,seq,flush,t_ms,x,y,z[,t_ms,x,y,z]...
//! ```
//!
//! `flush` is `0` or `1`; counts are signed integers within the sensor range.
//!
//! Corpus file:
//!
//! ```text
//! sqd-corpus,1,<config echo>
//! session,<climb_id>,<position>,<n_samples>,<labeled 0|1>
//! meta,<key>,<value>
//! <t_ms>,<x>,<y>,<z>[,<activity>]
//! end,<climb_id>
//! ```
//!
//! Meta keys and values and the config echo are percent-escaped for `%`,
//! `,`, `\r` and `\n`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::activity::Activity;
use crate::sensor::{RawSample, SensorConfig};

pub const CORPUS_MAGIC: &str = "sqd-corpus";
pub const CORPUS_VERSION: u32 = 1;
pub const DEFAULT_GAP_S: f64 = 120.0;

/// A batch of averaged samples as transmitted by one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePacket {
    pub sensor_id: u32,
    pub position: u32,
    pub seq: u64,
    pub flush: bool,
    pub samples: Vec<RawSample>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PacketError {
    #[error("empty packet record")]
    Empty,
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("field `{field}`: `{value}` is not a valid integer")]
    BadInteger { field: String, value: String },
    #[error("field `flush`: expected 0 or 1, got `{0}`")]
    BadFlag(String),
    #[error("sample groups need 4 fields each, {0} trailing fields")]
    GroupArity(usize),
    #[error("packet carries no samples")]
    NoSamples,
    #[error("packet carries {got} samples, batch size is {max}")]
    BatchOverflow { got: usize, max: usize },
    #[error("field `{field}`: count {value} outside [-{max}, {max}]")]
    Range { field: String, value: i64, max: i64 },
    #[error("field `{field}`: timestamps inside a packet must increase")]
    NonIncreasing { field: String },
}

pub fn encode_packet(p: &SamplePacket) -> String {
    let mut out = format!(
        "{},{},{},{}",
        p.sensor_id,
        p.position,
        p.seq,
        if p.flush { 1 } else { 0 }
    );
    for s in &p.samples {
        out.push_str(&format!(",{},{},{},{}", s.t, s.x, s.y, s.z));
    }
    out.push('\n');
    out
}

fn parse_int<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, PacketError> {
    value.trim().parse::<T>().map_err(|_| PacketError::BadInteger {
        field: field.to_string(),
        value: value.to_string(),
    })
}

fn parse_count(field: String, value: &str, max: i64) -> Result<i16, PacketError> {
    let v: i64 = parse_int(&field, value)?;
    if v.abs() > max {
        return Err(PacketError::Range { field, value: v, max });
    }
    Ok(v as i16)
}

/// Parse one packet record, enforcing the batch bound and the sensor range
/// implied by `cfg`.
pub fn decode_packet(line: &str, cfg: &SensorConfig) -> Result<SamplePacket, PacketError> {
    let line = line.trim_end_matches(['\n', '\r']);
    if line.trim().is_empty() {
        return Err(PacketError::Empty);
    }
    let fields: Vec<&str> = line.split(',').collect();
    let get = |i: usize, name: &'static str| fields.get(i).copied().ok_or(PacketError::MissingField(name));
    let sensor_id: u32 = parse_int("sensor_id", get(0, "sensor_id")?)?;
    let position: u32 = parse_int("position", get(1, "position")?)?;
    let seq: u64 = parse_int("seq", get(2, "seq")?)?;
    let flush = match get(3, "flush")?.trim() {
        "0" => false,
        "1" => true,
        other => return Err(PacketError::BadFlag(other.to_string())),
    };
    let rest = &fields[4..];
    if rest.len() % 4 != 0 {
        return Err(PacketError::GroupArity(rest.len()));
    }
    let n = rest.len() / 4;
    if n == 0 {
        return Err(PacketError::NoSamples);
    }
    if n > cfg.batch_size {
        return Err(PacketError::BatchOverflow {
            got: n,
            max: cfg.batch_size,
        });
    }
    let max = cfg.max_count() as i64;
    let mut samples = Vec::with_capacity(n);
    for (k, g) in rest.chunks(4).enumerate() {
        let t: u64 = parse_int(&format!("sample[{k}].t"), g[0])?;
        let x = parse_count(format!("sample[{k}].x"), g[1], max)?;
        let y = parse_count(format!("sample[{k}].y"), g[2], max)?;
        let z = parse_count(format!("sample[{k}].z"), g[3], max)?;
        if let Some(prev) = samples.last().map(|s: &RawSample| s.t) {
            if t <= prev {
                return Err(PacketError::NonIncreasing {
                    field: format!("sample[{k}].t"),
                });
            }
        }
        samples.push(RawSample { t, x, y, z });
    }
    Ok(SamplePacket {
        sensor_id,
        position,
        seq,
        flush,
        samples,
    })
}

/// Write a packet log (one record per line).
pub fn encode_packet_log(packets: &[SamplePacket]) -> String {
    packets.iter().map(encode_packet).collect()
}

/// Parse a packet log, reporting the 1-based line of the first bad record.
/// Blank lines are skipped.
pub fn decode_packet_log(text: &str, cfg: &SensorConfig) -> Result<Vec<SamplePacket>, (usize, PacketError)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| decode_packet(l, cfg).map_err(|e| (i + 1, e)))
        .collect()
}

/// Per-sensor, per-climb sample stream.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClimbSession {
    pub climb_id: String,
    pub sensor_position: u32,
    pub samples: Vec<RawSample>,
    pub labels: Option<Vec<Activity>>,
    pub meta: BTreeMap<String, String>,
}

impl ClimbSession {
    pub fn duration_ms(&self) -> u64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssemblyError {
    #[error("sensor {sensor_id}: seq {seq} arrived after seq {prev}")]
    SeqRegression { sensor_id: u32, prev: u64, seq: u64 },
    #[error("sensor {sensor_id}: sample at {t} ms does not advance past {prev} ms")]
    TimeRegression { sensor_id: u32, prev: u64, t: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assembly {
    pub sessions: Vec<ClimbSession>,
    pub duplicates: usize,
}

/// Split each sensor's packet stream into climb sessions at silences longer
/// than `gap_s`. Packets of different sensors may be interleaved; each
/// sensor's own packets must arrive in seq order. A repeated seq is dropped
/// and counted.
pub fn assemble_sessions<'a, I>(packets: I, gap_s: f64) -> Result<Assembly, AssemblyError>
where
    I: IntoIterator<Item = &'a SamplePacket>,
{
    struct Stream {
        position: u32,
        last_seq: Option<u64>,
        samples: Vec<RawSample>,
    }
    let mut streams: BTreeMap<u32, Stream> = BTreeMap::new();
    let mut duplicates = 0;
    for p in packets {
        let st = streams.entry(p.sensor_id).or_insert(Stream {
            position: p.position,
            last_seq: None,
            samples: Vec::new(),
        });
        if let Some(prev) = st.last_seq {
            if p.seq == prev {
                duplicates += 1;
                continue;
            }
            if p.seq < prev {
                return Err(AssemblyError::SeqRegression {
                    sensor_id: p.sensor_id,
                    prev,
                    seq: p.seq,
                });
            }
        }
        st.last_seq = Some(p.seq);
        for s in &p.samples {
            if let Some(last) = st.samples.last() {
                if s.t <= last.t {
                    return Err(AssemblyError::TimeRegression {
                        sensor_id: p.sensor_id,
                        prev: last.t,
                        t: s.t,
                    });
                }
            }
            st.samples.push(*s);
        }
    }
    if duplicates > 0 {
        log::warn!("dropped {duplicates} duplicate packet(s)");
    }

    let gap_ms = (gap_s * 1000.0).round() as u64;
    let mut sessions = Vec::new();
    for (sensor_id, st) in streams {
        let mut current: Vec<RawSample> = Vec::new();
        let mut index = 0;
        let mut close = |samples: Vec<RawSample>, index: &mut usize| {
            sessions.push(ClimbSession {
                climb_id: format!("s{sensor_id}-{index:03}"),
                sensor_position: st.position,
                samples,
                labels: None,
                meta: BTreeMap::from([("sensor_id".to_string(), sensor_id.to_string())]),
            });
            *index += 1;
        };
        for s in st.samples {
            if let Some(last) = current.last() {
                if s.t - last.t > gap_ms {
                    close(std::mem::take(&mut current), &mut index);
                }
            }
            current.push(s);
        }
        if !current.is_empty() {
            close(current, &mut index);
        }
    }
    Ok(Assembly {
        sessions,
        duplicates,
    })
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error")]
    Io(#[from] std::io::Error),
    #[error("not a corpus file (missing `{CORPUS_MAGIC}` header)")]
    NotACorpus,
    #[error("unsupported corpus format version `{0}` (expected {CORPUS_VERSION})")]
    Version(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '%' => out.push_str("%25"),
            ',' => out.push_str("%2C"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c == '%' {
            let code: String = it.by_ref().take(2).collect();
            match code.as_str() {
                "25" => out.push('%'),
                "2C" => out.push(','),
                "0A" => out.push('\n'),
                "0D" => out.push('\r'),
                _ => return None,
            }
        } else {
            out.push(c);
        }
    }
    Some(out)
}

/// Render sessions in the corpus text format. `config_echo` is stored in the
/// header verbatim (escaped).
pub fn encode_corpus(sessions: &[ClimbSession], config_echo: &str) -> String {
    let mut out = format!("{CORPUS_MAGIC},{CORPUS_VERSION},{}\n", escape(config_echo));
    for s in sessions {
        out.push_str(&format!(
            "session,{},{},{},{}\n",
            escape(&s.climb_id),
            s.sensor_position,
            s.samples.len(),
            u8::from(s.labels.is_some())
        ));
        for (k, v) in &s.meta {
            out.push_str(&format!("meta,{},{}\n", escape(k), escape(v)));
        }
        for (i, r) in s.samples.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}", r.t, r.x, r.y, r.z));
            if let Some(labels) = &s.labels {
                out.push(',');
                out.push_str(labels[i].as_str());
            }
            out.push('\n');
        }
        out.push_str(&format!("end,{}\n", escape(&s.climb_id)));
    }
    out
}

/// A decoded corpus: its header echo and sessions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub config_echo: String,
    pub sessions: Vec<ClimbSession>,
}

pub fn decode_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(CorpusError::NotACorpus)?;
    let mut head = header.splitn(3, ',');
    if head.next() != Some(CORPUS_MAGIC) {
        return Err(CorpusError::NotACorpus);
    }
    let version = head.next().unwrap_or("");
    if version != CORPUS_VERSION.to_string() {
        return Err(CorpusError::Version(version.to_string()));
    }
    let fmt_err = |line: usize, msg: String| CorpusError::Format { line: line + 1, msg };
    let config_echo =
        unescape(head.next().unwrap_or("")).ok_or_else(|| fmt_err(0, "bad escape in header".into()))?;

    let mut sessions = Vec::new();
    while let Some((ln, line)) = lines.next() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 || f[0] != "session" {
            return Err(fmt_err(ln, format!("expected session header, got `{line}`")));
        }
        let climb_id = unescape(f[1]).ok_or_else(|| fmt_err(ln, "bad escape in climb id".into()))?;
        let sensor_position: u32 = f[2]
            .parse()
            .map_err(|_| fmt_err(ln, format!("bad position `{}`", f[2])))?;
        let n: usize = f[3]
            .parse()
            .map_err(|_| fmt_err(ln, format!("bad sample count `{}`", f[3])))?;
        let labeled = match f[4] {
            "0" => false,
            "1" => true,
            other => return Err(fmt_err(ln, format!("bad labeled flag `{other}`"))),
        };
        let mut session = ClimbSession {
            climb_id,
            sensor_position,
            samples: Vec::with_capacity(n),
            labels: labeled.then(|| Vec::with_capacity(n)),
            meta: BTreeMap::new(),
        };
        loop {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| fmt_err(ln, "unterminated session".into()))?;
            let f: Vec<&str> = line.split(',').collect();
            match f[0] {
                "end" => {
                    if f.len() != 2 || unescape(f[1]).as_deref() != Some(session.climb_id.as_str()) {
                        return Err(fmt_err(ln, "end marker does not match session".into()));
                    }
                    break;
                }
                "meta" => {
                    if f.len() != 3 {
                        return Err(fmt_err(ln, "meta needs key and value".into()));
                    }
                    let k = unescape(f[1]).ok_or_else(|| fmt_err(ln, "bad escape".into()))?;
                    let v = unescape(f[2]).ok_or_else(|| fmt_err(ln, "bad escape".into()))?;
                    session.meta.insert(k, v);
                }
                _ => {
                    let want = if labeled { 5 } else { 4 };
                    if f.len() != want {
                        return Err(fmt_err(ln, format!("sample needs {want} fields")));
                    }
                    let int = |i: usize| -> Result<i64, CorpusError> {
                        f[i].parse()
                            .map_err(|_| fmt_err(ln, format!("bad integer `{}`", f[i])))
                    };
                    let t = int(0)?;
                    let axes = [int(1)?, int(2)?, int(3)?];
                    if t < 0 || axes.iter().any(|a| a.abs() > i16::MAX as i64) {
                        return Err(fmt_err(ln, "sample value out of range".into()));
                    }
                    session.samples.push(RawSample::new(
                        t as u64,
                        axes[0] as i16,
                        axes[1] as i16,
                        axes[2] as i16,
                    ));
                    if let Some(labels) = session.labels.as_mut() {
                        labels.push(f[4].parse().map_err(|e| fmt_err(ln, format!("{e}")))?);
                    }
                }
            }
        }
        if session.samples.len() != n {
            return Err(fmt_err(
                ln,
                format!("session declares {n} samples, found {}", session.samples.len()),
            ));
        }
        sessions.push(session);
    }
    Ok(Corpus {
        config_echo,
        sessions,
    })
}

/// Write atomically: the file appears complete or not at all.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn save_corpus(sessions: &[ClimbSession], config_echo: &str, path: &Path) -> Result<(), CorpusError> {
    write_atomic(path, encode_corpus(sessions, config_echo).as_bytes())?;
    Ok(())
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    decode_corpus(&fs::read_to_string(path)?)
}
