//! Paving CSV, SVG rendering and run statistics.

use std::fmt::Write as _;

use robustpave::{Paving, SolveStats, Truth};
use serde::Serialize;

/// Shortest decimal that reads back to `v`; negative zero prints as `0`.
pub fn number(v: f64) -> String {
    format!("{}", v + 0.0)
}

/// Header `value,<var>_lo,<var>_hi,...`, then one row per box sorted by
/// lower corner.
pub fn paving_csv(paving: &Paving) -> String {
    let mut out = String::from("value");
    for name in &paving.names {
        let _ = write!(out, ",{name}_lo,{name}_hi");
    }
    out.push('\n');
    for (bx, t) in paving.sorted() {
        out.push(t.letter());
        for side in bx.sides() {
            let _ = write!(out, ",{},{}", number(side.lo()), number(side.hi()));
        }
        out.push('\n');
    }
    out
}

pub const SVG_SIZE: f64 = 800.0;

fn fill(t: Truth) -> &'static str {
    match t {
        Truth::True => "green",
        Truth::False => "red",
        Truth::Unknown => "white",
    }
}

/// One rectangle per box on an 800x800 canvas, the second axis pointing up.
/// `None` unless the paving is two-dimensional.
pub fn paving_svg(paving: &Paving) -> Option<String> {
    if paving.domain.dim() != 2 {
        return None;
    }
    let (dx, dy) = (paving.domain.side(0), paving.domain.side(1));
    let scale = |w: f64| if w > 0.0 { SVG_SIZE / w } else { 1.0 };
    let (sx, sy) = (scale(dx.width()), scale(dy.width()));
    let x = |v: f64| (v - dx.lo()) * sx;
    let y = |v: f64| SVG_SIZE - (v - dy.lo()) * sy;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="800" viewBox="0 0 800 800">"#
    );
    let _ = writeln!(
        out,
        "<title>{} over {} ({}), {}</title>",
        paving.names[1], paving.names[0], paving.domain, "green=T, red=F, white=U"
    );
    for (bx, t) in paving.sorted() {
        let (a, b) = (bx.side(0), bx.side(1));
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            number(x(a.lo())),
            number(y(b.hi())),
            number(x(a.hi()) - x(a.lo())),
            number(y(b.lo()) - y(b.hi())),
            fill(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="800" height="800" fill="none" stroke="black" stroke-width="2"/>"#
    );
    out.push_str("</svg>\n");
    Some(out)
}

#[derive(Debug, Serialize)]
pub struct StatsReport<'a> {
    pub mode: &'a str,
    pub unrolling: &'a str,
    pub horizon: usize,
    pub target_err: f64,
    /// Unknown measure of the paving; absent in single mode.
    pub err: Option<f64>,
    pub measure_true: Option<f64>,
    pub measure_false: Option<f64>,
    /// Bounds of the certified box found in single mode.
    pub found: Option<Vec<[f64; 2]>>,
    #[serde(flatten)]
    pub stats: &'a SolveStats,
}

pub fn stats_json(report: &StatsReport<'_>) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("stats serialize");
    s.push('\n');
    s
}
