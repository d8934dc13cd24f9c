//! File formats: trajectories as `t,point,generator_id,gap` CSV (the last
//! row leaves the step columns empty), certificates as JSON plus a
//! per-round gap table CSV. Points round-trip exactly through the
//! shortest-representation float formatting.

use crate::error::{Error, Result};
use crate::parallel::GluingCertificate;
use crate::semigroup::{GapProfile, PseudoTrajectory, Trajectory, Window};
use crate::space::{Space, SpacePoint};

pub const TRAJECTORY_HEADER: &str = "t,point,generator_id,gap";

fn csv_rows(
    window: Window,
    points: &[SpacePoint],
    word: Option<&[String]>,
    gaps: Option<&GapProfile>,
) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for (i, t) in window.times().enumerate() {
        let gen = if i < window.steps() {
            word.map(|w| w[i].as_str()).unwrap_or("")
        } else {
            ""
        };
        let gap = if i < window.steps() {
            gaps.and_then(|g| g.amplitude_at(t)).unwrap_or(0.0)
        } else {
            0.0
        };
        if i < window.steps() {
            out.push_str(&format!("{t},{},{gen},{gap}\n", points[i]));
        } else {
            out.push_str(&format!("{t},{},,\n", points[i]));
        }
    }
    out
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    csv_rows(traj.window, traj.points(), Some(traj.word()), None)
}

pub fn pseudo_to_csv(y: &PseudoTrajectory, gaps: &GapProfile) -> String {
    csv_rows(
        y.window,
        y.points(),
        y.reference_word.as_deref(),
        Some(gaps),
    )
}

fn parse_point(space: &Space, field: &str) -> Result<SpacePoint> {
    match space {
        Space::RealLine => field
            .parse::<f64>()
            .map(SpacePoint::Real)
            .map_err(|e| Error::Parse(format!("bad point {field}: {e}"))),
        Space::FiniteDiscrete { .. } => Ok(SpacePoint::label(field)),
    }
}

struct CsvRows {
    t_min: i64,
    points: Vec<SpacePoint>,
    word: Vec<String>,
    gaps: Vec<f64>,
}

fn parse_rows(space: &Space, text: &str) -> Result<CsvRows> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TRAJECTORY_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header {TRAJECTORY_HEADER:?}, got {other:?}"
            )))
        }
    }
    let mut t_min: Option<i64> = None;
    let mut prev_t: Option<i64> = None;
    let mut points = Vec::new();
    let mut word = Vec::new();
    let mut gaps = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("row {}: expected 4 fields", n + 2)));
        }
        let t: i64 = fields[0]
            .parse()
            .map_err(|e| Error::Parse(format!("row {}: bad time: {e}", n + 2)))?;
        if let Some(p) = prev_t {
            if t != p + 1 {
                return Err(Error::Parse(format!(
                    "row {}: non-contiguous time {t} after {p}",
                    n + 2
                )));
            }
        }
        t_min.get_or_insert(t);
        prev_t = Some(t);
        points.push(parse_point(space, fields[1])?);
        if !fields[2].is_empty() {
            word.push(fields[2].to_string());
        }
        if !fields[3].is_empty() {
            gaps.push(
                fields[3]
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: bad gap: {e}", n + 2)))?,
            );
        }
    }
    Ok(CsvRows {
        t_min: t_min.ok_or_else(|| Error::Parse("no data rows".into()))?,
        points,
        word,
        gaps,
    })
}

pub fn trajectory_from_csv(space: &Space, text: &str) -> Result<Trajectory> {
    let rows = parse_rows(space, text)?;
    let window = Window::new(rows.t_min, rows.t_min + rows.points.len() as i64 - 1)?;
    if rows.word.len() != window.steps() {
        return Err(Error::Parse(format!(
            "expected {} generator ids, got {}",
            window.steps(),
            rows.word.len()
        )));
    }
    Trajectory::new(window, rows.points, rows.word)
}

pub fn pseudo_from_csv(space: &Space, text: &str) -> Result<PseudoTrajectory> {
    let rows = parse_rows(space, text)?;
    let window = Window::new(rows.t_min, rows.t_min + rows.points.len() as i64 - 1)?;
    let word = (rows.word.len() == window.steps()).then_some(rows.word);
    let _ = rows.gaps;
    PseudoTrajectory::new(window, rows.points, word)
}

pub fn trajectory_to_json(traj: &Trajectory) -> String {
    serde_json::to_string_pretty(traj).expect("trajectory serializes")
}

pub fn trajectory_from_json(text: &str) -> Result<Trajectory> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn certificate_to_json(cert: &GluingCertificate) -> String {
    serde_json::to_string_pretty(cert).expect("certificate serializes")
}

pub fn certificate_from_json(text: &str) -> Result<GluingCertificate> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Per-round gap table: one row per (round, surviving moment).
pub fn certificate_rounds_csv(cert: &GluingCertificate) -> String {
    let mut out = String::from("round,time,gap,predicted_bound,consumed_this_round\n");
    for r in &cert.rounds {
        for e in &r.gaps {
            let pred = r
                .predicted
                .iter()
                .find(|p| p.time == e.time)
                .map(|p| p.amplitude.to_string())
                .unwrap_or_default();
            let consumed = r.consumed.contains(&e.time);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.round, e.time, e.amplitude, pred, consumed
            ));
        }
    }
    out
}
