use std::fmt::Write;

use super::CliError;
use crate::planner::{goal_center, RunLog};
use crate::qts::Grid;

const CANVAS: f64 = 640.0;
const MARGIN: f64 = 20.0;
const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939",
];

struct Frame {
    grid: Grid,
    scale: f64,
}

impl Frame {
    fn new(grid: Grid) -> Self {
        Frame {
            grid,
            scale: (CANVAS - 2.0 * MARGIN) / grid.side,
        }
    }

    fn x(&self, p1: f64) -> f64 {
        MARGIN + (p1 - self.grid.origin[0]) * self.scale
    }

    fn y(&self, p2: f64) -> f64 {
        MARGIN + (self.grid.origin[1] + self.grid.side - p2) * self.scale
    }

    fn header(&self, title: &str) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{c}\" height=\"{c}\" viewBox=\"0 0 {c} {c}\">\n\
             <title>{title}</title>\n<rect width=\"{c}\" height=\"{c}\" fill=\"white\"/>\n",
            c = CANVAS
        )
    }

    /// Cell rectangles filled by `fill(m, n)`, optionally labelled.
    fn cells(
        &self,
        out: &mut String,
        fill: impl Fn(usize, usize) -> String,
        label: impl Fn(usize, usize) -> Option<String>,
    ) {
        let g = &self.grid;
        let w = g.cell_side() * self.scale;
        for m in 0..g.cells_per_side() {
            for n in 0..g.cells_per_side() {
                let (x, y) = (self.x(g.west(n)), self.y(g.north(m)));
                let _ = writeln!(
                    out,
                    "<rect id=\"cell-{m}-{n}\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{w:.2}\" fill=\"{}\" stroke=\"#999\" stroke-width=\"0.5\"/>",
                    fill(m, n)
                );
                if let Some(t) = label(m, n) {
                    let _ = writeln!(
                        out,
                        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"{:.1}\" text-anchor=\"middle\" fill=\"#333\">{t}</text>",
                        x + 0.5 * w,
                        y + 0.6 * w,
                        0.3 * w
                    );
                }
            }
        }
    }
}

fn quality_fill(q: u32, max: u32) -> String {
    if q == 0 {
        return "#000000".into();
    }
    // pale yellow to saturated yellow
    let s = q as f64 / max.max(1) as f64;
    let b = (230.0 - 170.0 * s).round() as u8;
    format!("#ffff{b:02x}")
}

/// Grid shaded by quality, obstacles, stations, goals and every agent's path.
pub fn render_trajectories(log: &RunLog) -> String {
    let f = Frame::new(log.grid);
    let max = log.capacity.iter().flatten().copied().max().unwrap_or(1);
    let mut out = f.header("trajectories");
    f.cells(
        &mut out,
        |m, n| quality_fill(log.capacity.get(m).and_then(|r| r.get(n)).copied().unwrap_or(1), max),
        |_, _| None,
    );
    for (k, s) in log.stations.iter().enumerate() {
        let (cx, cy) = (f.x(s[0]), f.y(s[1]));
        let pts: Vec<String> = (0..10)
            .map(|i| {
                let r = if i % 2 == 0 { 9.0 } else { 4.0 };
                let a = std::f64::consts::PI * i as f64 / 5.0;
                format!("{:.2},{:.2}", cx + r * a.sin(), cy - r * a.cos())
            })
            .collect();
        let _ = writeln!(
            out,
            "<polygon id=\"station-{k}\" points=\"{}\" fill=\"red\"/>",
            pts.join(" ")
        );
    }
    for (i, &id) in log.agents.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let rows = log.rows_of(id);
        let pts: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", f.x(r.p1), f.y(r.p2)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline id=\"path-{id}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        );
        if let Some(r) = rows.first() {
            let _ = writeln!(
                out,
                "<circle id=\"start-{id}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                f.x(r.p1),
                f.y(r.p2)
            );
        }
        if let Some(c) = log.goals.get(i).and_then(|g| goal_center(g)) {
            let (x, y) = (f.x(c[0]), f.y(c[1]));
            let _ = writeln!(
                out,
                "<path id=\"goal-{id}\" d=\"M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}\" stroke=\"red\" stroke-width=\"2\"/>",
                x - 5.0,
                y - 5.0,
                x + 5.0,
                y + 5.0,
                x - 5.0,
                y + 5.0,
                x + 5.0,
                y - 5.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Agent counts per cell at `step`, with agent positions.
pub fn render_heatmap(log: &RunLog, step: usize) -> Result<String, CliError> {
    if step > log.final_step {
        return Err(CliError::StepOutOfRange {
            step,
            last: log.final_step,
        });
    }
    let f = Frame::new(log.grid);
    let counts = log.occupancy_at(step, &log.grid);
    let max = counts.as_slice().iter().copied().max().unwrap_or(1).max(1);
    let mut out = f.header(&format!("occupancy at step {step}"));
    f.cells(
        &mut out,
        |m, n| {
            if log.capacity[m][n] == 0 {
                return "#000000".into();
            }
            let c = *counts.get(m, n);
            let g = (255.0 - 200.0 * c as f64 / max as f64).round() as u8;
            format!("#ff{g:02x}{g:02x}")
        },
        |m, n| Some(format!("{}/{}", counts.get(m, n), log.capacity[m][n])),
    );
    for r in log.rows_at(step) {
        let _ = writeln!(
            out,
            "<circle id=\"agent-{}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"#1f3f8f\"/>",
            r.agent,
            f.x(r.p1),
            f.y(r.p2)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
