//! CSV and JSON file formats. Every write goes to a temporary file in the
//! destination directory and is renamed into place.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use prosim_core::{ChannelId, ChannelMap, ConditionedSample, SemgFrame};

use crate::error::{CliError, CliResult};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::write(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::write(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::write(path, e))?;
    tmp.persist(path).map_err(|e| CliError::write(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::write(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::read(path, e))
}

/// One JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut buf = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut buf, r).map_err(|e| CliError::write(path, e))?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

/// A header row followed by numeric rows, written with shortest round-trip
/// float formatting.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::write(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::write(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::write(path, e.error()))?;
    write_atomic(path, &bytes)
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

fn raw_column(ch: ChannelId) -> String {
    format!("{}_mV", ch.name())
}

fn env_column(ch: ChannelId) -> String {
    format!("{}_env", ch.name())
}

fn header_with(f: fn(ChannelId) -> String) -> Vec<String> {
    std::iter::once("t_ms".to_string())
        .chain(ChannelId::ALL.map(f))
        .collect()
}

/// Reads `t_ms` plus the four channel columns named by `f`, in any order.
fn read_channels(path: &Path, f: fn(ChannelId) -> String) -> CliResult<Vec<(f64, ChannelMap<f64>)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::read(path, e))?;
    let headers = r.headers().map_err(|e| CliError::read(path, e))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::read(path, format!("missing column '{name}'")))
    };
    let t_col = find("t_ms")?;
    let cols = ChannelId::ALL.map(|ch| find(&f(ch)));
    let mut idx = [0usize; 4];
    for (i, c) in cols.into_iter().enumerate() {
        idx[i] = c?;
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::read(path, e))?;
        let parse = |col: usize| -> CliResult<f64> {
            let cell = rec.get(col).unwrap_or("").trim();
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::read(path, format!("row {}: bad number '{cell}'", line + 2)))
        };
        let t = parse(t_col)?;
        let mut m = ChannelMap::splat(0.0);
        for ch in ChannelId::ALL {
            m[ch] = parse(idx[ch.index()])?;
        }
        out.push((t, m));
    }
    Ok(out)
}

fn channel_rows(rows: impl IntoIterator<Item = (f64, ChannelMap<f64>)>) -> impl Iterator<Item = Vec<String>> {
    rows.into_iter()
        .map(|(t, m)| std::iter::once(num(t)).chain(m.to_array().map(num)).collect())
}

/// Header `t_ms,biceps_mV,triceps_mV,trapezius_mV,pectoralis_mV`.
pub fn read_recording(path: &Path) -> CliResult<Vec<SemgFrame>> {
    Ok(read_channels(path, raw_column)?
        .into_iter()
        .map(|(t_ms, samples)| SemgFrame { t_ms, samples })
        .collect())
}

pub fn write_recording(path: &Path, frames: &[SemgFrame]) -> CliResult<()> {
    let header = header_with(raw_column);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(path, &header, channel_rows(frames.iter().map(|f| (f.t_ms, f.samples))))
}

/// Header `t_ms,biceps_env,triceps_env,trapezius_env,pectoralis_env`.
pub fn read_envelopes(path: &Path) -> CliResult<Vec<ConditionedSample>> {
    Ok(read_channels(path, env_column)?
        .into_iter()
        .map(|(t_ms, envelope)| ConditionedSample { t_ms, envelope })
        .collect())
}

pub fn write_envelopes(path: &Path, samples: &[ConditionedSample]) -> CliResult<()> {
    let header = header_with(env_column);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(
        path,
        &header,
        channel_rows(samples.iter().map(|s| (s.t_ms, s.envelope))),
    )
}
