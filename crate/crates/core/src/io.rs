//! CSV tables: header row, comma separated, LF line endings.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::construct::{LevelSets, SkeletonChoice};
use crate::error::{Error, Result};
use crate::lpp::{DirectedPath, ScaleKey};
use crate::stats::ReplicateRecord;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Internal(format!("csv: {e}"))
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::Internal(format!("csv: {e}")))
}

/// Columns `x,y` (and `z` in three dimensions), one vertex per row.
pub fn write_geodesic<W: Write>(out: W, path: &DirectedPath) -> Result<()> {
    let mut w = writer(out);
    let header: &[&str] = match path.dim() {
        2 => &["x", "y"],
        3 => &["x", "y", "z"],
        d => return Err(Error::Unsupported(format!("no geodesic table for dimension {d}"))),
    };
    w.write_record(header)?;
    for v in path.iter() {
        w.serialize(v)?;
    }
    finish(w)
}

/// Columns `scale,sum`.
pub fn write_scale_sums<W: Write>(out: W, sums: &BTreeMap<ScaleKey, f64>) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["scale", "sum"])?;
    for (k, s) in sums {
        w.serialize((k.to_string(), s))?;
    }
    finish(w)
}

#[derive(Serialize)]
struct LevelRow {
    level: usize,
    index: usize,
    x: u32,
    y: u32,
    scale: Option<i32>,
}

/// Columns `level,index,x,y,scale`: the vertices added at each level, with
/// their position in that level's set and their target scale. The two
/// corners of level 0 carry no scale.
pub fn write_levels<W: Write>(out: W, sets: &LevelSets) -> Result<()> {
    let mut w = writer(out);
    for (level, vs) in sets.levels.iter().enumerate() {
        let added = sets.increment(level);
        for (index, v) in vs.iter().enumerate() {
            if added.binary_search(v).is_err() {
                continue;
            }
            w.serialize(LevelRow {
                level,
                index,
                x: v[0],
                y: v[1],
                scale: (level > 0).then(|| sets.scale_at(level)),
            })?;
        }
    }
    finish(w)
}

#[derive(Serialize)]
struct SkeletonRow {
    level: u32,
    corner_x: u32,
    corner_y: u32,
    choice: &'static str,
    gain: f64,
    alternative_gain: f64,
}

/// Columns `level,corner_x,corner_y,choice,gain,alternative_gain`.
pub fn write_skeletons<W: Write>(out: W, choices: &[SkeletonChoice]) -> Result<()> {
    let mut w = writer(out);
    for c in choices {
        w.serialize(SkeletonRow {
            level: c.level,
            corner_x: c.corner[0],
            corner_y: c.corner[1],
            choice: c.choice.name(),
            gain: c.gain,
            alternative_gain: c.alternative_gain,
        })?;
    }
    finish(w)
}

/// Columns `model,n,d,replicate,seed,L,transversal,constructed_L,runtime_ms`.
pub fn write_records<W: Write>(out: W, records: &[ReplicateRecord]) -> Result<()> {
    let mut w = writer(out);
    for r in records {
        w.serialize(r)?;
    }
    finish(w)
}

/// Columns `n,replicate,scale,sum`.
pub fn write_scale_table<W: Write>(out: W, records: &[ReplicateRecord]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["n", "replicate", "scale", "sum"])?;
    for r in records {
        for (k, s) in &r.scale_sums {
            w.serialize((r.n, r.replicate, k.to_string(), s))?;
        }
    }
    finish(w)
}
