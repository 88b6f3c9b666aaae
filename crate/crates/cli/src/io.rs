//! CSV and JSON writers for simulation outputs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use bbmlab::coalescent::CoalescentState;
use bbmlab::engine::TrajectoryRow;
use bbmlab::fkpp::WaveSolution;
use bbmlab::flows::format_ln_mass;
use bbmlab::genealogy::{Bridge, Partition};
use serde::Serialize;

pub fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn write_trajectory<W: Write>(w: &mut W, rows: &[TrajectoryRow]) -> anyhow::Result<()> {
    writeln!(w, "t,Z,Y,M,R")?;
    for r in rows {
        writeln!(w, "{:.16e},{:.16e},{:.16e},{},{}", r.t, r.z, r.y, r.m, r.r)?;
    }
    Ok(w.flush()?)
}

pub fn write_json<W: Write, T: Serialize>(w: &mut W, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    writeln!(w)?;
    Ok(w.flush()?)
}

/// Blocks as lists of 1-based labels, ordered by least element.
pub fn partition_json(p: &Partition) -> serde_json::Value {
    let blocks: Vec<Vec<usize>> = p.blocks().into_iter().map(|b| b.into_iter().map(|i| i + 1).collect()).collect();
    serde_json::json!({ "n": p.n(), "blocks": blocks })
}

pub fn write_bridge<W: Write>(w: &mut W, b: &Bridge, points: usize) -> anyhow::Result<()> {
    writeln!(w, "x,value")?;
    for i in 0..=points {
        let x = i as f64 / points as f64;
        writeln!(w, "{:.16e},{:.16e}", x, b.eval(x))?;
    }
    Ok(w.flush()?)
}

pub fn write_wave<W: Write>(w: &mut W, wave: &WaveSolution) -> anyhow::Result<()> {
    writeln!(w, "x,psi")?;
    for (x, p) in wave.grid.iter().zip(&wave.psi) {
        writeln!(w, "{x:.16e},{p:.16e}")?;
    }
    Ok(w.flush()?)
}

pub fn write_column<W: Write>(w: &mut W, name: &str, values: &[f64]) -> anyhow::Result<()> {
    writeln!(w, "{name}")?;
    for v in values {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(w.flush()?)
}

/// `path,t,Z` with `Z` printed from its logarithm so huge masses survive.
pub fn write_csbp<W: Write>(w: &mut W, times: &[f64], paths: &[Vec<f64>]) -> anyhow::Result<()> {
    writeln!(w, "path,t,Z")?;
    for (i, ln) in paths.iter().enumerate() {
        for (t, l) in times.iter().zip(ln) {
            writeln!(w, "{i},{t:.16e},{}", format_ln_mass(*l))?;
        }
    }
    Ok(w.flush()?)
}

/// One line per merger: `time,k,block_ids...` with 1-based block ids.
pub fn write_events<W: Write>(w: &mut W, state: &CoalescentState) -> anyhow::Result<()> {
    writeln!(w, "time,k,block_ids")?;
    for e in &state.history {
        let ids: Vec<String> = e.blocks.iter().map(|b| (b + 1).to_string()).collect();
        writeln!(w, "{:.16e},{},{}", e.time, e.k(), ids.join(","))?;
    }
    Ok(w.flush()?)
}
