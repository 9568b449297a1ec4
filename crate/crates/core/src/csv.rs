//! Plain CSV writers. Floats use 17 significant digits so values round-trip.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::hybrid::HybridDensityState;
use crate::ifs::Vec3;
use crate::pdp::Event;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// One row per (time, label, r, c) with the real and imaginary parts.
pub fn density_snapshots(times: &[f64], states: &[HybridDensityState]) -> String {
    let mut out = String::from("t,label,row,col,re,im\n");
    for (t, s) in times.iter().zip(states) {
        for (a, b) in s.blocks().iter().enumerate() {
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    let z = b[(r, c)];
                    row(&mut out, &[float(*t), a.to_string(), r.to_string(), c.to_string(), float(z.re), float(z.im)]);
                }
            }
        }
    }
    out
}

/// Two density runs side by side, with the entrywise deviation.
pub fn density_comparison(times: &[f64], master: &[HybridDensityState], pdp: &[HybridDensityState]) -> String {
    let mut out = String::from("t,trace_on_master,trace_on_pdp,max_abs_diff\n");
    for ((t, m), p) in times.iter().zip(master).zip(pdp) {
        let on = |s: &HybridDensityState| s.trace(crate::hybrid::Label(s.blocks().len() - 1));
        row(&mut out, &[float(*t), float(on(m)), float(on(p)), float(m.max_abs_diff(p))]);
    }
    out
}

/// First event time per trajectory; censored trajectories have an empty time.
pub fn first_events(times: &[Option<f64>]) -> String {
    let mut out = String::from("trajectory,t\n");
    for (i, t) in times.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", t.map(float).unwrap_or_default());
    }
    out
}

pub fn events(trajectory: usize, events: &[Event]) -> String {
    let mut out = String::from("trajectory,t,from,to\n");
    for e in events {
        row(&mut out, &[trajectory.to_string(), float(e.t), e.from.0.to_string(), e.to.0.to_string()]);
    }
    out
}

pub fn histogram(edges: &[f64], counts: &[usize]) -> String {
    let mut out = String::from("lo,hi,count\n");
    for (w, c) in edges.windows(2).zip(counts) {
        row(&mut out, &[float(w[0]), float(w[1]), c.to_string()]);
    }
    out
}

pub fn cloud(points: &[Vec3]) -> String {
    let mut out = String::from("x,y,z\n");
    for p in points {
        row(&mut out, &[float(p[0]), float(p[1]), float(p[2])]);
    }
    out
}

/// Generic table with a header and float columns.
pub fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        row(&mut out, &r.into_iter().map(float).collect::<Vec<_>>());
    }
    out
}

pub fn write_file(path: &std::path::Path, contents: &[u8]) -> io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents)
}
