//! CSV and SVG writers for runs, and the snapshot recorder.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::curves::TriodState;
use crate::diagnostics::{lift_triod, EnergyRow};
use crate::flow::FlowOutcome;
use crate::heis::{HPoint, HPolyline, PlanarPoint, PlanarPolyline};
use crate::{Error, Result};

pub const ENERGY_HEADER: [&str; 11] = [
    "t",
    "L_total",
    "L1",
    "L2",
    "L3",
    "mu1",
    "mu2",
    "mu3",
    "dissipation",
    "angle_defect",
    "z_spread",
];

pub const SNAPSHOT_HEADER: [&str; 6] = ["t", "alpha", "j", "x", "y", "z"];

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

// Shortest representation that parses back to the same value.
fn num(v: f64) -> String {
    format!("{v:?}")
}

/// The lifted triod at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub curves: [HPolyline; 3],
}

impl Snapshot {
    pub fn of(state: &TriodState) -> Self {
        Self {
            t: state.time,
            curves: lift_triod(state).0,
        }
    }

    /// The triod this snapshot was taken from; endpoint heights are read off
    /// the last node of each curve.
    pub fn to_state(&self) -> Result<TriodState> {
        let curves = self.curves.clone().map(|c| c.planar());
        let z = [0, 1, 2].map(|a| self.curves[a].last().z);
        TriodState::new(curves, z, self.t)
    }
}

pub fn write_energy_csv<W: Write>(rows: &[EnergyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ENERGY_HEADER).map_err(csv_err)?;
    for r in rows {
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        let mu = r.mu.map(|m| m.map(num)).unwrap_or_default();
        w.write_record([
            num(r.t),
            num(r.total),
            num(r.lengths[0]),
            num(r.lengths[1]),
            num(r.lengths[2]),
            mu[0].clone(),
            mu[1].clone(),
            mu[2].clone(),
            opt(r.dissipation),
            num(r.angle_defect),
            num(r.z_spread),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back what [`write_energy_csv`] wrote.
pub fn read_energy_csv<R: Read>(input: R) -> Result<Vec<EnergyRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(ENERGY_HEADER) {
        return Err(Error::Invalid(format!("unexpected energy header {header:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| -> Result<Option<f64>> {
            let s = rec.get(i).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| {
                Error::Invalid(format!(
                    "row {}: bad number {s:?} in column {}",
                    line + 1,
                    ENERGY_HEADER[i]
                ))
            })
        };
        let need = |i: usize| -> Result<f64> {
            field(i)?.ok_or_else(|| Error::Invalid(format!("row {}: column {} is empty", line + 1, ENERGY_HEADER[i])))
        };
        let mu = match (field(5)?, field(6)?, field(7)?) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };
        rows.push(EnergyRow {
            t: need(0)?,
            total: need(1)?,
            lengths: [need(2)?, need(3)?, need(4)?],
            mu,
            dissipation: field(8)?,
            angle_defect: need(9)?,
            z_spread: need(10)?,
        });
    }
    Ok(rows)
}

pub fn write_snapshot_csv<W: Write>(snaps: &[Snapshot], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SNAPSHOT_HEADER).map_err(csv_err)?;
    for s in snaps {
        for (a, curve) in s.curves.iter().enumerate() {
            for (j, p) in curve.nodes().iter().enumerate() {
                w.write_record([
                    num(s.t),
                    (a + 1).to_string(),
                    j.to_string(),
                    num(p.x),
                    num(p.y),
                    num(p.z),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Groups snapshot rows back into triods, in file order.
pub fn read_snapshot_csv<R: Read>(input: R) -> Result<Vec<Snapshot>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out: Vec<(f64, [Vec<HPoint>; 3])> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let get = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Invalid(format!("snapshot row {}: bad column {}", line + 1, SNAPSHOT_HEADER[i])))
        };
        let t = get(0)?;
        let alpha = get(1)? as usize;
        if !(1..=3).contains(&alpha) {
            return Err(Error::Invalid(format!(
                "snapshot row {}: alpha must be 1, 2 or 3",
                line + 1
            )));
        }
        if out.last().is_none_or(|(s, _)| *s != t) {
            out.push((t, Default::default()));
        }
        let nodes = &mut out.last_mut().expect("pushed above").1[alpha - 1];
        if get(2)? as usize != nodes.len() {
            return Err(Error::Invalid(format!(
                "snapshot row {}: node index out of order",
                line + 1
            )));
        }
        nodes.push(HPoint::new(get(3)?, get(4)?, get(5)?));
    }
    out.into_iter()
        .map(|(t, [a, b, c])| {
            Ok(Snapshot {
                t,
                curves: [HPolyline::new(a)?, HPolyline::new(b)?, HPolyline::new(c)?],
            })
        })
        .collect()
}

/// Planar polyline from a CSV with `x,y` columns (further columns ignored).
pub fn read_planar_csv<R: Read>(input: R) -> Result<PlanarPolyline> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Invalid(format!("curve file has no `{name}` column")))
    };
    let (ix, iy) = (col("x")?, col("y")?);
    let mut nodes = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let get = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Invalid(format!("curve row {}: bad number", line + 1)))
        };
        nodes.push(PlanarPoint::new(get(ix)?, get(iy)?));
    }
    PlanarPolyline::new(nodes)
}

/// `j,x,y,z` rows of a single curve in space.
pub fn write_curve_csv<W: Write>(curve: &HPolyline, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["j", "x", "y", "z"]).map_err(csv_err)?;
    for (j, p) in curve.nodes().iter().enumerate() {
        w.write_record([j.to_string(), num(p.x), num(p.y), num(p.z)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Collects snapshots at requested times while a flow runs. Each request is
/// served by the completed step nearest to it.
#[derive(Debug, Clone)]
pub struct SnapshotRecorder {
    start: f64,
    dt: f64,
    requests: Vec<(f64, usize)>,
    taken: Vec<Option<Snapshot>>,
}

impl SnapshotRecorder {
    pub fn new(times: &[f64], start: f64, dt: f64) -> Self {
        let requests: Vec<(f64, usize)> = times
            .iter()
            .map(|&t| (t, ((t - start) / dt).round().max(0.0) as usize))
            .collect();
        Self {
            start,
            dt,
            taken: vec![None; requests.len()],
            requests,
        }
    }

    fn step_of(&self, state: &TriodState) -> usize {
        ((state.time - self.start) / self.dt).round().max(0.0) as usize
    }

    pub fn observe(&mut self, state: &TriodState) {
        let m = self.step_of(state);
        for (slot, &(_, step)) in self.taken.iter_mut().zip(&self.requests) {
            if step == m && slot.is_none() {
                *slot = Some(Snapshot::of(state));
            }
        }
    }

    /// Fills requests the run never reached: step 0 from the initial state,
    /// later ones from the final state, which is then the nearest step.
    pub fn finish(mut self, outcome: &FlowOutcome) -> Vec<Snapshot> {
        for (slot, &(_, step)) in self.taken.iter_mut().zip(&self.requests) {
            if slot.is_none() {
                let state = if step == 0 {
                    &outcome.initial_state
                } else {
                    &outcome.final_state
                };
                *slot = Some(Snapshot::of(state));
            }
        }
        self.taken.into_iter().map(|s| s.expect("filled above")).collect()
    }
}

pub const SINGLE_TIME_COLOURS: [&str; 3] = ["olive", "purple", "gold"];
pub const INITIAL_COLOUR: &str = "blue";
pub const INTERMEDIATE_COLOUR: &str = "black";
pub const FINAL_COLOUR: &str = "red";

const WIDTH: f64 = 600.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 30.0;

struct Frame {
    min: PlanarPoint,
    scale: f64,
    offset: PlanarPoint,
}

impl Frame {
    fn fit(points: impl Iterator<Item = PlanarPoint>, width: f64, height: f64) -> Self {
        let (mut lo, mut hi) = (
            PlanarPoint::new(f64::INFINITY, f64::INFINITY),
            PlanarPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in points {
            lo = PlanarPoint::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = PlanarPoint::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let span_x = (hi.x - lo.x).max(1e-12);
        let span_y = (hi.y - lo.y).max(1e-12);
        let scale = ((width - 2.0 * MARGIN) / span_x).min((height - 2.0 * MARGIN) / span_y);
        let offset = PlanarPoint::new(0.5 * (width - scale * span_x), 0.5 * (height - scale * span_y));
        Self { min: lo, scale, offset }
    }

    // SVG y grows downwards.
    fn map(&self, p: PlanarPoint, height: f64) -> (f64, f64) {
        (
            self.offset.x + self.scale * (p.x - self.min.x),
            height - (self.offset.y + self.scale * (p.y - self.min.y)),
        )
    }
}

fn svg_open(s: &mut String, width: f64, height: f64) {
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
    );
}

fn polyline(s: &mut String, pts: impl Iterator<Item = (f64, f64)>, colour: &str) {
    let _ = write!(
        s,
        r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points=""#
    );
    for (i, (x, y)) in pts.enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.3},{y:.3}");
    }
    let _ = writeln!(s, r#""/>"#);
}

/// Projected triod plot. One snapshot is drawn per curve in olive, purple
/// and gold; several snapshots are drawn blue (first), black, red (last).
pub fn svg_triod(snaps: &[Snapshot]) -> Result<String> {
    if snaps.is_empty() {
        return Err(Error::Invalid("no snapshots to plot".into()));
    }
    let frame = Frame::fit(
        snaps
            .iter()
            .flat_map(|s| s.curves.iter().flat_map(|c| c.nodes().iter().map(|p| p.planar()))),
        WIDTH,
        HEIGHT,
    );
    let mut s = String::new();
    svg_open(&mut s, WIDTH, HEIGHT);
    let times: Vec<String> = snaps.iter().map(|sn| format!("{:.4}", sn.t)).collect();
    let _ = writeln!(s, "<title>projected triod, t = {}</title>", times.join(", "));
    let last = snaps.len() - 1;
    for (k, snap) in snaps.iter().enumerate() {
        for (a, curve) in snap.curves.iter().enumerate() {
            let colour = if snaps.len() == 1 {
                SINGLE_TIME_COLOURS[a]
            } else if k == 0 {
                INITIAL_COLOUR
            } else if k == last {
                FINAL_COLOUR
            } else {
                INTERMEDIATE_COLOUR
            };
            polyline(
                &mut s,
                curve.nodes().iter().map(|p| frame.map(p.planar(), HEIGHT)),
                colour,
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.0}" y="20" font-family="sans-serif" font-size="14">t = {}</text>"#,
        MARGIN,
        times.join(", ")
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Total energy over time, optionally with one curve's length.
pub fn svg_energy(rows: &[EnergyRow], curve: Option<usize>) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Invalid("empty energy series".into()));
    }
    if matches!(curve, Some(a) if !(1..=3).contains(&a)) {
        return Err(Error::Invalid("curve index must be 1, 2 or 3".into()));
    }
    let (w, h) = (WIDTH, 400.0);
    let t0 = rows[0].t;
    let t1 = rows[rows.len() - 1].t.max(t0 + 1e-12);
    let values = |r: &EnergyRow| {
        let mut v = vec![r.total];
        if let Some(a) = curve {
            v.push(r.lengths[a - 1]);
        }
        v
    };
    let lo = rows.iter().flat_map(values).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().flat_map(values).fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi > lo {
        0.05 * (hi - lo)
    } else {
        0.5 * lo.abs().max(1.0)
    };
    let (lo, hi) = (lo - pad, hi + pad);
    let left = 70.0;
    let map = |t: f64, v: f64| {
        (
            left + (w - left - MARGIN) * (t - t0) / (t1 - t0),
            h - MARGIN - (h - 2.0 * MARGIN) * (v - lo) / (hi - lo),
        )
    };
    // Long runs: plot at most about 2000 points.
    let stride = (rows.len() / 2000).max(1);
    let picked = || {
        rows.iter()
            .enumerate()
            .filter(move |(i, _)| i % stride == 0 || *i + 1 == rows.len())
            .map(|(_, r)| r)
    };

    let mut s = String::new();
    svg_open(&mut s, w, h);
    let _ = writeln!(s, "<title>discrete energy over time</title>");
    let _ = writeln!(
        s,
        r#"<rect x="{left:.0}" y="{m:.0}" width="{:.0}" height="{:.0}" fill="none" stroke="gray"/>"#,
        w - left - MARGIN,
        h - 2.0 * MARGIN,
        m = MARGIN
    );
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-family="sans-serif" font-size="12">{text}</text>"#
        );
    };
    label(&mut s, left - 5.0, MARGIN + 4.0, "end", format!("{hi:.4}"));
    label(&mut s, left - 5.0, h - MARGIN + 4.0, "end", format!("{lo:.4}"));
    label(&mut s, left, h - MARGIN + 18.0, "middle", format!("{t0:.4}"));
    label(&mut s, w - MARGIN, h - MARGIN + 18.0, "middle", format!("{t1:.4}"));
    polyline(&mut s, picked().map(|r| map(r.t, r.total)), "black");
    if let Some(a) = curve {
        polyline(&mut s, picked().map(|r| map(r.t, r.lengths[a - 1])), "red");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::builtin_experiment;
    use crate::flow::{run_flow, FlowParams};

    fn short_run() -> FlowOutcome {
        let t0 = builtin_experiment(2).unwrap().initial_state().unwrap();
        run_flow(&t0, &FlowParams::new(1e-3, 0.01), |_, _| {}).unwrap()
    }

    #[test]
    fn energy_csv_round_trip() {
        let o = short_run();
        let rows = crate::diagnostics::energy_series(&o).unwrap();
        let mut buf = Vec::new();
        write_energy_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,L_total,L1,L2,L3,mu1,mu2,mu3,dissipation,angle_defect,z_spread\n"));
        // The first row has no multipliers and no dissipation.
        assert!(text.lines().nth(1).unwrap().contains(",,,,"));
        let back = read_energy_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(a.mu, b.mu);
            assert_eq!(a.dissipation, b.dissipation);
        }
    }

    #[test]
    fn snapshot_csv_round_trip() {
        let o = short_run();
        let snaps = vec![Snapshot::of(&o.initial_state), Snapshot::of(&o.final_state)];
        let mut buf = Vec::new();
        write_snapshot_csv(&snaps, &mut buf).unwrap();
        let back = read_snapshot_csv(buf.as_slice()).unwrap();
        assert_eq!(back, snaps);
    }

    #[test]
    fn recorder_takes_nearest_step() {
        let t0 = builtin_experiment(2).unwrap().initial_state().unwrap();
        let mut rec = SnapshotRecorder::new(&[0.0, 0.0042, 1.0], 0.0, 1e-3);
        let o = run_flow(&t0, &FlowParams::new(1e-3, 0.01), |s, _| rec.observe(s)).unwrap();
        let snaps = rec.finish(&o);
        assert_eq!(snaps[0].t, 0.0);
        assert!((snaps[1].t - 0.004).abs() < 1e-12);
        assert_eq!(snaps[2].t, o.final_state.time);
    }

    #[test]
    fn svg_colours_follow_convention() {
        let o = short_run();
        let one = svg_triod(&[Snapshot::of(&o.final_state)]).unwrap();
        for c in SINGLE_TIME_COLOURS {
            assert!(one.contains(&format!("stroke=\"{c}\"")));
        }
        let three = svg_triod(&[
            Snapshot::of(&o.initial_state),
            Snapshot::of(&o.final_state),
            Snapshot::of(&o.final_state),
        ])
        .unwrap();
        assert_eq!(three.matches("stroke=\"blue\"").count(), 3);
        assert_eq!(three.matches("stroke=\"black\"").count(), 3);
        assert_eq!(three.matches("stroke=\"red\"").count(), 3);
        assert!(svg_triod(&[]).is_err());
    }

    #[test]
    fn energy_svg_is_deterministic() {
        let rows = crate::diagnostics::energy_series(&short_run()).unwrap();
        assert_eq!(svg_energy(&rows, Some(1)).unwrap(), svg_energy(&rows, Some(1)).unwrap());
        assert!(svg_energy(&[], None).is_err());
    }
}
