//! Artifact formats: CSV tables, JSON envelopes and the binary trajectory
//! container.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::SystemParams;
use crate::liouville::{CorrelationKind, CorrelationSeries, WignerGrid};
use crate::trajectories::{JumpEvent, JumpKind, Protocol, TrajectoryRecord};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
const MAGIC: &[u8; 8] = b"JCWTRJ01";

/// JSON wrapper carrying everything needed to regenerate `data`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub code_version: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SystemParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// Echo of the run configuration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub data: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(kind: &str, data: T) -> Self {
        Self { code_version: CODE_VERSION.into(), kind: kind.into(), params: None, seed: None, dt: None, method: None, config: None, data }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Artifact(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Artifact(e.to_string())
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner().map_err(|e| Error::Artifact(e.to_string()))?.flush()?;
    Ok(())
}

/// `tau,h[,std_err]` or `tau,g2[,std_err]`
pub fn write_correlation_csv<W: Write>(out: W, s: &CorrelationSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let name = match s.kind {
        CorrelationKind::H => "h",
        CorrelationKind::G2 => "g2",
    };
    match &s.std_err {
        Some(se) => {
            w.write_record(["tau", name, "std_err"]).map_err(csv_err)?;
            for ((t, v), e) in s.tau.iter().zip(&s.values).zip(se) {
                w.serialize((t, v, e)).map_err(csv_err)?;
            }
        }
        None => {
            w.write_record(["tau", name]).map_err(csv_err)?;
            for (t, v) in s.tau.iter().zip(&s.values) {
                w.serialize((t, v)).map_err(csv_err)?;
            }
        }
    }
    finish(w)
}

/// Reads every column of a numeric CSV with a header row.
pub fn read_columns<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            c.push(field.trim().parse::<f64>().map_err(|e| Error::Artifact(format!("`{field}`: {e}")))?);
        }
    }
    Ok((header, cols))
}

/// `x,y,w`, with `x` varying fastest.
pub fn write_wigner_csv<W: Write>(out: W, g: &WignerGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "w"]).map_err(csv_err)?;
    for (iy, y) in g.y.iter().enumerate() {
        for (ix, x) in g.x.iter().enumerate() {
            w.serialize((x, y, g.values[iy][ix])).map_err(csv_err)?;
        }
    }
    finish(w)
}

/// `t,delta_omega,n_cond,A_cond,I_theta`
pub fn write_trajectory_csv<W: Write>(out: W, rec: &TrajectoryRecord) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "delta_omega", "n_cond", "A_cond", "I_theta"]).map_err(csv_err)?;
    for i in 0..rec.t.len() {
        w.serialize((rec.t[i], rec.delta_omega[i], rec.n_cond[i], rec.a_cond[i], rec.i_theta[i])).map_err(csv_err)?;
    }
    finish(w)
}

/// `time,kind,delta_omega`
pub fn write_events_csv<W: Write>(out: W, events: &[JumpEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "kind", "delta_omega"]).map_err(csv_err)?;
    for e in events {
        w.serialize((e.time, e.kind.as_str(), e.delta_omega)).map_err(csv_err)?;
    }
    finish(w)
}

pub fn read_events_csv<R: Read>(input: R) -> Result<Vec<JumpEvent>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<JumpEvent>().map(|e| e.map_err(csv_err)).collect()
}

#[derive(Serialize, Deserialize)]
struct BinaryHeader {
    code_version: String,
    params: SystemParams,
    protocol: Protocol,
    seed: u64,
    stream: u64,
    dt: f64,
    decimation: usize,
    samples: usize,
    events: usize,
}

fn put(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

/// `JCWTRJ01`, u32 header length, JSON header, then the five sample
/// columns and the events as little-endian `f64` (kind as one byte).
pub fn write_trajectory_binary<W: Write>(mut out: W, rec: &TrajectoryRecord) -> Result<()> {
    let header = BinaryHeader {
        code_version: CODE_VERSION.into(),
        params: rec.params,
        protocol: rec.protocol,
        seed: rec.seed,
        stream: rec.stream,
        dt: rec.dt,
        decimation: rec.decimation,
        samples: rec.t.len(),
        events: rec.events.len(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Artifact(e.to_string()))?;
    let mut buf = Vec::with_capacity(16 + json.len() + 40 * rec.t.len() + 17 * rec.events.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    for col in [&rec.t, &rec.delta_omega, &rec.n_cond, &rec.a_cond, &rec.i_theta] {
        put(&mut buf, col);
    }
    for e in &rec.events {
        buf.extend_from_slice(&e.time.to_le_bytes());
        buf.push(match e.kind {
            JumpKind::Apd => 0,
            JumpKind::Spontaneous => 1,
        });
        buf.extend_from_slice(&e.delta_omega.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let s = self.buf.get(self.pos..self.pos + n).ok_or_else(|| Error::Artifact("truncated trajectory container".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn column(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn read_trajectory_binary<R: Read>(mut input: R) -> Result<TrajectoryRecord> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Artifact("not a trajectory container".into()));
    }
    let len = u32::from_le_bytes(c.take(4)?.try_into().unwrap()) as usize;
    let h: BinaryHeader = serde_json::from_slice(c.take(len)?).map_err(|e| Error::Artifact(e.to_string()))?;
    let n = h.samples;
    let t = c.column(n)?;
    let delta_omega = c.column(n)?;
    let n_cond = c.column(n)?;
    let a_cond = c.column(n)?;
    let i_theta = c.column(n)?;
    let mut events = Vec::with_capacity(h.events);
    for _ in 0..h.events {
        let time = c.f64()?;
        let kind = match c.take(1)?[0] {
            0 => JumpKind::Apd,
            1 => JumpKind::Spontaneous,
            k => return Err(Error::Artifact(format!("unknown jump kind {k}"))),
        };
        events.push(JumpEvent { time, kind, delta_omega: c.f64()? });
    }
    if c.pos != buf.len() {
        return Err(Error::Artifact("trailing bytes in trajectory container".into()));
    }
    Ok(TrajectoryRecord {
        params: h.params,
        protocol: h.protocol,
        seed: h.seed,
        stream: h.stream,
        dt: h.dt,
        decimation: h.decimation,
        t,
        delta_omega,
        n_cond,
        a_cond,
        i_theta,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::Method;
    use crate::trajectories::{run_trajectory, RunOptions};

    fn record() -> TrajectoryRecord {
        let p = SystemParams { n_max: 3, g: 20.0, eps: 2.0, delta_omega: 20.0, tau_d_inv: 100.0, ..SystemParams::default() };
        run_trajectory(&p, Protocol::Fixed { duration: 20.0 }, &RunOptions { dt: 1e-3, seed: 4, stream: 0, decimation: 5 }).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let rec = record();
        assert!(!rec.events.is_empty());
        let mut buf = Vec::new();
        write_trajectory_binary(&mut buf, &rec).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(read_trajectory_binary(&buf[..]).unwrap(), rec);
        assert!(read_trajectory_binary(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn csv_round_trips() {
        let s = CorrelationSeries {
            kind: CorrelationKind::H,
            method: Method::Regression,
            theta: Some(0.0),
            tau: vec![-1.0, 0.0, 0.1],
            values: vec![1.0, 0.3, 1.0 / 3.0],
            std_err: None,
            params: None,
        };
        let mut buf = Vec::new();
        write_correlation_csv(&mut buf, &s).unwrap();
        let (h, cols) = read_columns(&buf[..]).unwrap();
        assert_eq!(h, ["tau", "h"]);
        assert_eq!(cols[0], s.tau);
        assert_eq!(cols[1], s.values);

        let rec = record();
        let mut ev = Vec::new();
        write_events_csv(&mut ev, &rec.events).unwrap();
        assert_eq!(read_events_csv(&ev[..]).unwrap(), rec.events);
        let mut tr = Vec::new();
        write_trajectory_csv(&mut tr, &rec).unwrap();
        let (h, cols) = read_columns(&tr[..]).unwrap();
        assert_eq!(h.len(), 5);
        assert_eq!(cols[2], rec.n_cond);
    }
}
