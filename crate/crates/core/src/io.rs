//! On-disk formats: event logs and count snapshots in compact little-endian
//! frames, trajectories and reports as CSV, and the JSON run manifest.
//!
//! Event log layout (`events.bin`):
//!
//! ```text
//! b"SBEV"  u8 version
//! repeated: f64 time (LE) | u8 kind | u32 site (LE, 0-based)
//! ```
//!
//! Snapshot layout (`snapshots.bin`):
//!
//! ```text
//! b"SBSN"  u8 version
//! u32 N | u64 H | u64 K | u64 seed | u64 stream | u64 snapshot count
//! repeated: f64 time | 4N × u64 counts ordered S.., I.., R.., B..
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{CompensatorCheck, ConvergenceReport, QV_COMPONENTS};
use crate::fields::{Compartment, CompartmentFields, SampledPath};
use crate::lattice::LatticeField;
use crate::params::ScalingParams;
use crate::stochastic::{EventKind, LoggedEvent, RngSeed, SystemState, Trajectory};
use crate::{Error, Result};

pub const EVENT_MAGIC: [u8; 4] = *b"SBEV";
pub const SNAPSHOT_MAGIC: [u8; 4] = *b"SBSN";
pub const FORMAT_VERSION: u8 = 1;
pub const EVENT_FRAME_LEN: usize = 13;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const SNAPSHOTS_FILE: &str = "snapshots.bin";
pub const EVENTS_FILE: &str = "events.bin";

pub const CSV_HEADER: &str = "time,site,S,I,R,B";

pub fn encode_event_log(log: &[LoggedEvent]) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + log.len() * EVENT_FRAME_LEN);
    out.extend_from_slice(&EVENT_MAGIC);
    out.push(FORMAT_VERSION);
    for e in log {
        out.extend_from_slice(&e.time.to_le_bytes());
        out.push(e.kind as u8);
        out.extend_from_slice(&(e.site as u32).to_le_bytes());
    }
    out
}

fn check_header(bytes: &[u8], magic: [u8; 4], what: &str) -> Result<()> {
    if bytes.len() < 5 {
        return Err(Error::corrupt(what, format!("{} bytes is shorter than the header", bytes.len())));
    }
    if bytes[..4] != magic {
        return Err(Error::corrupt(what, "bad magic bytes"));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::corrupt(what, format!("unsupported format version {}", bytes[4])));
    }
    Ok(())
}

pub fn decode_event_log(bytes: &[u8]) -> Result<Vec<LoggedEvent>> {
    const WHAT: &str = "event log";
    check_header(bytes, EVENT_MAGIC, WHAT)?;
    let body = &bytes[5..];
    if body.len() % EVENT_FRAME_LEN != 0 {
        return Err(Error::corrupt(
            WHAT,
            format!("{} trailing bytes after the last whole frame", body.len() % EVENT_FRAME_LEN),
        ));
    }
    let mut out = Vec::with_capacity(body.len() / EVENT_FRAME_LEN);
    let mut last = 0.0f64;
    for (idx, frame) in body.chunks_exact(EVENT_FRAME_LEN).enumerate() {
        let time = f64::from_le_bytes(frame[..8].try_into().expect("8 bytes"));
        let kind = EventKind::from_u8(frame[8])
            .ok_or_else(|| Error::corrupt(WHAT, format!("frame {idx}: unknown event kind {}", frame[8])))?;
        let site = u32::from_le_bytes(frame[9..13].try_into().expect("4 bytes")) as usize;
        if !time.is_finite() || time < last {
            return Err(Error::corrupt(WHAT, format!("frame {idx}: time {time} is not finite or goes backwards")));
        }
        last = time;
        out.push(LoggedEvent { time, kind, site });
    }
    Ok(out)
}

pub fn encode_snapshots(traj: &Trajectory) -> Vec<u8> {
    let n = traj.scaling.n;
    let mut out = Vec::with_capacity(49 + traj.states.len() * (8 + 32 * n));
    out.extend_from_slice(&SNAPSHOT_MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in [traj.scaling.h, traj.scaling.k, traj.seed.seed, traj.seed.stream, traj.states.len() as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for (t, s) in traj.sample_times.iter().zip(&traj.states) {
        out.extend_from_slice(&t.to_le_bytes());
        for c in s.to_flat() {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

/// Decodes `snapshots.bin` into a trajectory without an event log.
pub fn decode_snapshots(bytes: &[u8]) -> Result<Trajectory> {
    const WHAT: &str = "snapshot file";
    check_header(bytes, SNAPSHOT_MAGIC, WHAT)?;
    let mut rd = Reader { bytes, pos: 5, what: WHAT };
    let n = rd.u32()? as usize;
    let h = rd.u64()?;
    let k = rd.u64()?;
    let seed = RngSeed { seed: rd.u64()?, stream: rd.u64()? };
    let count = rd.u64()?;
    let scaling = ScalingParams::new(n, h, k).map_err(|e| Error::corrupt(WHAT, e.to_string()))?;
    let frame = 8u128 + 32 * n as u128;
    let expected = rd.pos as u128 + frame * count as u128;
    if expected != bytes.len() as u128 {
        return Err(Error::corrupt(
            WHAT,
            format!("header announces {count} snapshots ({expected} bytes) but file has {} bytes", bytes.len()),
        ));
    }
    let mut sample_times = Vec::with_capacity(count as usize);
    let mut states = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let t = rd.f64()?;
        if !t.is_finite() || sample_times.last().is_some_and(|&p| t <= p) || (sample_times.is_empty() && t != 0.0) {
            return Err(Error::corrupt(WHAT, format!("sample time {t} out of order")));
        }
        sample_times.push(t);
        let flat = (0..4 * n).map(|_| rd.u64()).collect::<Result<Vec<_>>>()?;
        states.push(SystemState::from_flat(flat).map_err(|e| Error::corrupt(WHAT, e.to_string()))?);
    }
    Ok(Trajectory {
        sample_times,
        states,
        event_log: None,
        seed,
        scaling,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl Reader<'_> {
    fn take<const L: usize>(&mut self) -> Result<[u8; L]> {
        let end = self.pos + L;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::corrupt(self.what, format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(slice.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.take().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take().map(f64::from_le_bytes)
    }
}

/// Long-format CSV, one row per `(time, site)`, sites numbered from 1.
pub fn trajectory_csv(path: &SampledPath) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (t, state) in path.times.iter().zip(&path.states) {
        for i in 0..state.n() {
            let [s, inf, r, b] = state.site(i);
            let _ = writeln!(out, "{t},{},{s},{inf},{r},{b}", i + 1);
        }
    }
    out
}

pub fn parse_trajectory_csv(text: &str) -> Result<SampledPath> {
    const WHAT: &str = "trajectory csv";
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == CSV_HEADER => {}
        _ => return Err(Error::corrupt(WHAT, format!("missing header `{CSV_HEADER}`"))),
    }
    let mut times: Vec<f64> = Vec::new();
    let mut blocks: Vec<Vec<[f64; 4]>> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: String| Error::corrupt(WHAT, format!("line {}: {m}", lineno + 1));
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        if cols.len() != 6 {
            return Err(err(format!("expected 6 columns, found {}", cols.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("`{s}`: {e}")));
        let t = num(cols[0])?;
        let site: usize = cols[1].parse().map_err(|e| err(format!("site `{}`: {e}", cols[1])))?;
        let vals = [num(cols[2])?, num(cols[3])?, num(cols[4])?, num(cols[5])?];
        if times.last() != Some(&t) {
            if let Some(&prev) = times.last() {
                if !(t > prev) {
                    return Err(err(format!("time {t} does not increase")));
                }
            }
            times.push(t);
            blocks.push(Vec::new());
        }
        let block = blocks.last_mut().expect("pushed above");
        if site != block.len() + 1 {
            return Err(err(format!("expected site {}, found {site}", block.len() + 1)));
        }
        block.push(vals);
    }
    let n = blocks.first().map_or(0, Vec::len);
    let mut states = Vec::with_capacity(blocks.len());
    for block in &blocks {
        if block.len() != n {
            return Err(Error::corrupt(WHAT, "time blocks have different numbers of sites"));
        }
        let field = |c: usize| LatticeField::new(block.iter().map(|v| v[c]).collect());
        let fields = (|| CompartmentFields::new(field(0)?, field(1)?, field(2)?, field(3)?))()
            .map_err(|e| Error::corrupt(WHAT, e.to_string()))?;
        states.push(fields);
    }
    Ok(SampledPath { times, states })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the counts of a state, used to pin replay results.
pub fn state_hash(state: &SystemState) -> String {
    let bytes: Vec<u8> = state.to_flat().iter().flat_map(|c| c.to_le_bytes()).collect();
    sha256_hex(&bytes)
}

/// Folds the events of `log` onto `initial`.
pub fn replay(initial: &SystemState, log: &[LoggedEvent]) -> Result<SystemState> {
    let mut state = initial.clone();
    for (idx, e) in log.iter().enumerate() {
        state.apply(e.event()).map_err(|err| match err {
            Error::InvariantViolation(m) => Error::InvariantViolation(format!("event {idx} at t = {}: {m}", e.time)),
            other => other,
        })?;
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedTransport {
    pub bias: f64,
    pub nu: f64,
    pub diffusion: f64,
}

/// Everything needed to reproduce a run, plus hashes of what it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
    pub mode: String,
    pub seed: u64,
    pub rng_algorithm: String,
    pub derived: DerivedTransport,
    /// The validated configuration, re-serialised with every default filled in.
    pub config_toml: String,
    pub config: serde_json::Value,
    /// Output file name → SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

pub fn parse_manifest(text: &str) -> Result<RunManifest> {
    serde_json::from_str(text).map_err(|e| Error::corrupt("manifest", e.to_string()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<String> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(bytes))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::corrupt("manifest", e.to_string()))?;
    write_file(&dir.join(MANIFEST_FILE), text.as_bytes()).map(|_| ())
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_manifest(&text)
}

/// Re-hashes every file listed in the manifest of `dir`.
pub fn verify_manifest(dir: &Path) -> Result<()> {
    let manifest = read_manifest(dir)?;
    for (name, expected) in &manifest.files {
        let actual = sha256_hex(&read_file(&dir.join(name))?);
        if &actual != expected {
            return Err(Error::corrupt(name.clone(), format!("sha256 {actual} does not match manifest {expected}")));
        }
    }
    Ok(())
}

/// Writes `trajectory.csv`, `snapshots.bin` and, when the log is present,
/// `events.bin` into `dir`. Returns file names with their hashes.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<BTreeMap<String, String>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = BTreeMap::new();
    let csv = trajectory_csv(&traj.rescaled());
    files.insert(TRAJECTORY_CSV.to_string(), write_file(&dir.join(TRAJECTORY_CSV), csv.as_bytes())?);
    files.insert(SNAPSHOTS_FILE.to_string(), write_file(&dir.join(SNAPSHOTS_FILE), &encode_snapshots(traj))?);
    if let Some(log) = &traj.event_log {
        files.insert(EVENTS_FILE.to_string(), write_file(&dir.join(EVENTS_FILE), &encode_event_log(log))?);
    }
    Ok(files)
}

/// Reads a trajectory written by [`write_trajectory`]. When `dir` holds a
/// manifest, every file it lists is hashed and compared first.
pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    if dir.join(MANIFEST_FILE).exists() {
        verify_manifest(dir)?;
    }
    let mut traj = decode_snapshots(&read_file(&dir.join(SNAPSHOTS_FILE))?)?;
    let events = dir.join(EVENTS_FILE);
    if events.exists() {
        let log = decode_event_log(&read_file(&events)?)?;
        if let Some(bad) = log.iter().find(|e| e.site >= traj.scaling.n) {
            return Err(Error::corrupt(EVENTS_FILE, format!("site {} outside the lattice", bad.site)));
        }
        traj.event_log = Some(log);
    }
    Ok(traj)
}

/// `rung,N,H,K,replica,distance`.
pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("rung,N,H,K,replica,distance\n");
    for (r, rung) in report.rungs.iter().enumerate() {
        for (k, d) in rung.distances.iter().enumerate() {
            let s = &rung.scaling;
            let _ = writeln!(out, "{},{},{},{},{},{d}", r + 1, s.n, s.h, s.k, k);
        }
    }
    out
}

/// `rung,N,H,K,median,q25,q75,ball_exits`.
pub fn convergence_summary_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("rung,N,H,K,median,q25,q75,ball_exits\n");
    for (r, rung) in report.rungs.iter().enumerate() {
        let s = &rung.scaling;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r + 1,
            s.n,
            s.h,
            s.k,
            rung.median,
            rung.q25,
            rung.q75,
            rung.ball_exits
        );
    }
    out
}

/// `time,site,compartment,mean,stderr` for the replica mean of `Z`.
pub fn martingale_csv(check: &CompensatorCheck) -> String {
    let mut out = String::from("time,site,compartment,mean,stderr\n");
    for (t, time) in check.times.iter().enumerate() {
        for i in 0..check.n {
            for c in Compartment::ALL {
                let _ = writeln!(
                    out,
                    "{time},{},{},{},{}",
                    i + 1,
                    c.label(),
                    check.z_mean[t][i][c.index()],
                    check.z_stderr[t][i][c.index()]
                );
            }
        }
    }
    out
}

/// `time,site,component,observed,predicted,residual_mean,residual_stderr`.
pub fn compensator_csv(check: &CompensatorCheck) -> String {
    let mut out = String::from("time,site,component,observed,predicted,residual_mean,residual_stderr\n");
    for (t, time) in check.times.iter().enumerate() {
        for i in 0..check.n {
            for (c, label) in QV_COMPONENTS.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{time},{},{label},{},{},{},{}",
                    i + 1,
                    check.observed_mean[t][i][c],
                    check.predicted_mean[t][i][c],
                    check.residual_mean[t][i][c],
                    check.residual_stderr[t][i][c]
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_traj() -> Trajectory {
        let sc = ScalingParams::new(3, 10, 20).unwrap();
        let s0 = SystemState::uniform(3, [5, 2, 1, 7]).unwrap();
        let log = vec![
            LoggedEvent { time: 0.1, kind: EventKind::Infection, site: 0 },
            LoggedEvent { time: 0.3, kind: EventKind::TransportOut, site: 2 },
        ];
        let s1 = replay(&s0, &log).unwrap();
        Trajectory {
            sample_times: vec![0.0, 0.5],
            states: vec![s0, s1],
            event_log: Some(log),
            seed: RngSeed { seed: 11, stream: 2 },
            scaling: sc,
        }
    }

    #[test]
    fn event_log_round_trip() {
        let t = sample_traj();
        let log = t.event_log.unwrap();
        let bytes = encode_event_log(&log);
        assert_eq!(bytes.len(), 5 + 2 * EVENT_FRAME_LEN);
        assert_eq!(decode_event_log(&bytes).unwrap(), log);
    }

    #[test]
    fn truncated_log_is_corrupt() {
        let bytes = encode_event_log(&sample_traj().event_log.unwrap());
        for cut in [0, 3, 6, bytes.len() - 1] {
            assert!(matches!(decode_event_log(&bytes[..cut]), Err(Error::Corrupt { .. })), "cut {cut}");
        }
    }

    #[test]
    fn snapshots_round_trip_and_truncation() {
        let t = sample_traj();
        let bytes = encode_snapshots(&t);
        let back = decode_snapshots(&bytes).unwrap();
        assert_eq!(back.states, t.states);
        assert_eq!(back.sample_times, t.sample_times);
        assert_eq!(back.seed, t.seed);
        assert_eq!(back.scaling, t.scaling);
        assert!(matches!(decode_snapshots(&bytes[..bytes.len() - 8]), Err(Error::Corrupt { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let p = sample_traj().rescaled();
        let text = trajectory_csv(&p);
        assert!(text.starts_with("time,site,S,I,R,B\n0,1,0.5,0.2,0.1,0.35\n"));
        assert_eq!(parse_trajectory_csv(&text).unwrap(), p);
    }

    #[test]
    fn replay_of_empty_log_is_identity() {
        let t = sample_traj();
        assert_eq!(replay(&t.states[0], &[]).unwrap(), t.states[0]);
    }
}
