use super::Scenario;
use crate::error::{Error, Result};
use crate::topology::{closest_approach, pair_window, Interaction, PairSample};
use crate::trajectory::Trajectory;
use crate::Vec2;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

pub const SAMPLE_RATE_HZ: f64 = 100.0;
/// Polyline points per trajectory in SVG output.
pub const RENDER_SAMPLES: usize = 200;
const PX_PER_M: f64 = 50.0;
const PAD_PX: f64 = 20.0;
const CSV_HEADER: &str = "t,vehicle_id,x,y,vx,vy,ax,ay";
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// One row of the trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSample {
    pub t: f64,
    pub vehicle_id: String,
    pub position: Vec2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
}

/// Rows at 100 Hz up to the longest duration, time-major, vehicles in input order.
pub fn sample_rows(ids: &[String], trajs: &[Trajectory]) -> Result<Vec<CsvSample>> {
    if ids.len() != trajs.len() {
        return Err(Error::domain(format!(
            "{} ids for {} trajectories",
            ids.len(),
            trajs.len()
        )));
    }
    let horizon = trajs
        .iter()
        .map(Trajectory::total_duration)
        .fold(0.0, f64::max);
    let steps = (horizon * SAMPLE_RATE_HZ + 1e-9).floor() as usize;
    let mut rows = Vec::with_capacity((steps + 1) * trajs.len());
    for k in 0..=steps {
        let t = k as f64 / SAMPLE_RATE_HZ;
        for (id, traj) in ids.iter().zip(trajs) {
            let s = traj.probe(t).state;
            rows.push(CsvSample {
                t,
                vehicle_id: id.clone(),
                position: s.position,
                velocity: s.velocity,
                acceleration: s.acceleration,
            });
        }
    }
    Ok(rows)
}

pub fn write_trajectory_csv(
    mut out: impl Write,
    ids: &[String],
    trajs: &[Trajectory],
) -> Result<()> {
    let mut text = String::new();
    text.push_str(CSV_HEADER);
    text.push('\n');
    for r in sample_rows(ids, trajs)? {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.vehicle_id,
            r.position.x,
            r.position.y,
            r.velocity.x,
            r.velocity.y,
            r.acceleration.x,
            r.acceleration.y
        );
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn export_trajectories(
    ids: &[String],
    trajs: &[Trajectory],
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trajectory_csv(std::io::BufWriter::new(file), ids, trajs)
}

/// Parses a CSV written by [`write_trajectory_csv`].
pub fn read_trajectory_csv(text: &str) -> Result<Vec<CsvSample>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::parse(
                "expected header `t,vehicle_id,x,y,vx,vy,ax,ay`",
                Some("line 1".into()),
            ))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let loc = || Some(format!("line {}", i + 1));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::parse(
                format!("expected 8 fields, found {}", fields.len()),
                loc(),
            ));
        }
        let mut nums = [0.0; 7];
        for (slot, idx) in nums.iter_mut().zip([0, 2, 3, 4, 5, 6, 7]) {
            *slot = fields[idx]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(format!("invalid number `{}`", fields[idx]), loc()))?;
        }
        rows.push(CsvSample {
            t: nums[0],
            vehicle_id: fields[1].trim().to_string(),
            position: Vec2::new(nums[1], nums[2]),
            velocity: Vec2::new(nums[3], nums[4]),
            acceleration: Vec2::new(nums[5], nums[6]),
        });
    }
    Ok(rows)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Positions of one vehicle keyed by time, taken from CSV rows.
fn series<'a>(rows: &'a [CsvSample], id: &str) -> Vec<&'a CsvSample> {
    let mut out: Vec<&CsvSample> = rows.iter().filter(|r| r.vehicle_id == id).collect();
    out.sort_by(|x, y| x.t.total_cmp(&y.t));
    out
}

/// Time-aligned samples of two vehicles from CSV rows.
pub fn pair_samples(rows: &[CsvSample], a: &str, b: &str) -> Result<Vec<PairSample>> {
    let (sa, sb) = (series(rows, a), series(rows, b));
    for (id, s) in [(a, &sa), (b, &sb)] {
        if s.is_empty() {
            return Err(Error::domain(format!("no rows for vehicle `{id}`")));
        }
    }
    if a == b {
        return Err(Error::domain("a pair needs two distinct vehicles"));
    }
    let mut out = Vec::with_capacity(sa.len().min(sb.len()));
    let (mut i, mut j) = (0, 0);
    while i < sa.len() && j < sb.len() {
        let (ra, rb) = (sa[i], sb[j]);
        if (ra.t - rb.t).abs() <= 1e-9 * (1.0 + ra.t.abs()) {
            out.push(PairSample {
                t: ra.t,
                a: (ra.position, ra.velocity),
                b: (rb.position, rb.velocity),
            });
            i += 1;
            j += 1;
        } else if ra.t < rb.t {
            i += 1;
        } else {
            j += 1;
        }
    }
    if out.len() < 2 {
        return Err(Error::domain(format!(
            "vehicles `{a}` and `{b}` share fewer than two sample times"
        )));
    }
    Ok(out)
}

fn svg_document(scenario: &Scenario, paths: &[Vec<Vec2>], labels: &[(Vec2, String)]) -> String {
    let arena = &scenario.arena;
    let size = arena.size() * PX_PER_M;
    let to_px = |p: &Vec2| {
        (
            PAD_PX + (p.x - arena.min.x) * PX_PER_M,
            PAD_PX + (arena.max.y - p.y) * PX_PER_M,
        )
    };
    let (w, h) = (size.x + 2.0 * PAD_PX, size.y + 2.0 * PAD_PX);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="{PAD_PX}" y="{PAD_PX}" width="{:.1}" height="{:.1}" fill="none" stroke="#333" stroke-width="2"/>"##,
        size.x, size.y
    );
    for o in &scenario.obstacles {
        let (cx, cy) = to_px(&o.center);
        let _ = writeln!(
            s,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="#999"><title>{}</title></circle>"##,
            o.radius * PX_PER_M,
            xml_escape(&o.id)
        );
    }
    for (i, (points, v)) in paths.iter().zip(&scenario.vehicles).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|p| {
                let (x, y) = to_px(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            coords.join(" "),
            xml_escape(&v.id)
        );
        let (sx, sy) = to_px(&v.start.position);
        let (gx, gy) = to_px(&v.goal.position);
        let _ = writeln!(
            s,
            r#"<circle cx="{sx:.2}" cy="{sy:.2}" r="5" fill="{color}"/>"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="none" stroke="{color}" stroke-width="2"/>"#,
            gx - 5.0,
            gy - 5.0
        );
    }
    for (p, text) in labels {
        let (x, y) = to_px(p);
        let _ = writeln!(
            s,
            r##"<text x="{x:.2}" y="{y:.2}" font-size="10" fill="#000">{}</text>"##,
            xml_escape(text)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn pair_label(scenario: &Scenario, i: usize, j: usize) -> Option<String> {
    let (a, b) = (&scenario.vehicles[i].id, &scenario.vehicles[j].id);
    let label = scenario.pattern.get(a, b);
    (label != Interaction::None).then(|| format!("{a}-{b}: {}", label.name()))
}

/// SVG drawing of the arena, obstacles, paths, start/goal markers and the
/// requested label of every constrained pair at its key point.
pub fn render_paths_svg(scenario: &Scenario, trajs: &[Trajectory]) -> String {
    let paths: Vec<Vec<Vec2>> = trajs
        .iter()
        .map(|traj| {
            let total = traj.total_duration();
            (0..RENDER_SAMPLES)
                .map(|k| {
                    traj.probe(total * k as f64 / (RENDER_SAMPLES - 1) as f64)
                        .state
                        .position
                })
                .collect()
        })
        .collect();
    let mut labels = Vec::new();
    for i in 0..trajs.len().min(scenario.vehicles.len()) {
        for j in i + 1..trajs.len().min(scenario.vehicles.len()) {
            let Some(text) = pair_label(scenario, i, j) else {
                continue;
            };
            if let Ok(sol) =
                closest_approach(&trajs[i], &trajs[j], pair_window(&trajs[i], &trajs[j]))
            {
                labels.push((
                    0.5 * (sol.state_a().position + sol.state_b().position),
                    text,
                ));
            }
        }
    }
    svg_document(scenario, &paths, &labels)
}

/// Like [`render_paths_svg`] but from exported CSV rows; labels sit at the
/// nearest sample pair.
pub fn render_samples_svg(scenario: &Scenario, rows: &[CsvSample]) -> String {
    let paths: Vec<Vec<Vec2>> = scenario
        .vehicles
        .iter()
        .map(|v| series(rows, &v.id).iter().map(|r| r.position).collect())
        .collect();
    let mut labels = Vec::new();
    for i in 0..scenario.vehicles.len() {
        for j in i + 1..scenario.vehicles.len() {
            let Some(text) = pair_label(scenario, i, j) else {
                continue;
            };
            if let Ok(samples) =
                pair_samples(rows, &scenario.vehicles[i].id, &scenario.vehicles[j].id)
            {
                let nearest = samples
                    .iter()
                    .min_by(|x, y| {
                        (x.a.0 - x.b.0)
                            .norm_squared()
                            .total_cmp(&(y.a.0 - y.b.0).norm_squared())
                    })
                    .expect("at least two samples");
                labels.push((0.5 * (nearest.a.0 + nearest.b.0), text));
            }
        }
    }
    svg_document(scenario, &paths, &labels)
}

pub fn render_svg(scenario: &Scenario, trajs: &[Trajectory], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_paths_svg(scenario, trajs))?;
    Ok(())
}
