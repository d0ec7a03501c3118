//! File formats: field CSV, trace CSV, generic CSV tables, JSON artifacts and
//! SVG line plots.
//!
//! # Field CSV
//!
//! ```text
//! schema,n,m,L,resolution
//! shrinker-lab/field/v1,2,2,4,129x129
//! index,x0,x1,u0,u1
//! 0,-4,-4,-1.2,0.8
//! ...
//! ```
//!
//! Rows are in node order (last axis fastest). Numbers use the shortest
//! representation that parses back to the same `f64`, so a write/read cycle
//! is loss-free. The boundary condition is not stored; a loaded field keeps
//! its boundary values frozen.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use shrinker_core::graph::{BoundaryCondition, FlowTrace, GridField};

use crate::error::{LabError, LabResult};

pub const FIELD_SCHEMA: &str = "shrinker-lab/field/v1";

fn csv_err(path: &Path, source: csv::Error) -> LabError {
    LabError::Csv {
        path: path.into(),
        source,
    }
}

/// Writes serializable rows with a header derived from the first row's
/// field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> LabResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> LabResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|source| LabError::Json {
        path: path.into(),
        source,
    })?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| LabError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> LabResult<()> {
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn field_to_csv(u: &GridField) -> String {
    let res: Vec<String> = u.resolution().iter().map(|r| r.to_string()).collect();
    let mut s = String::new();
    let _ = writeln!(s, "schema,n,m,L,resolution");
    let _ = writeln!(
        s,
        "{FIELD_SCHEMA},{},{},{},{}",
        u.n(),
        u.m(),
        u.half_width(),
        res.join("x")
    );
    let mut header = vec!["index".to_string()];
    header.extend((0..u.n()).map(|i| format!("x{i}")));
    header.extend((0..u.m()).map(|a| format!("u{a}")));
    let _ = writeln!(s, "{}", header.join(","));
    for node in 0..u.node_count() {
        let _ = write!(s, "{node}");
        for x in u.coords(node) {
            let _ = write!(s, ",{x}");
        }
        for v in u.value(node) {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn write_field(path: &Path, u: &GridField) -> LabResult<()> {
    write_text(path, &field_to_csv(u))
}

/// Parses a field CSV. The result has frozen boundary values.
pub fn field_from_csv(text: &str) -> LabResult<GridField> {
    let bad = |msg: String| LabError::Config(format!("field CSV: {msg}"));
    let mut lines = text.lines();
    let mut next = |what: &str| lines.next().ok_or_else(|| bad(format!("missing {what}")));
    if next("header")?.trim() != "schema,n,m,L,resolution" {
        return Err(bad("first line must be `schema,n,m,L,resolution`".into()));
    }
    let meta: Vec<&str> = next("metadata")?.split(',').collect();
    if meta.len() != 5 || meta[0] != FIELD_SCHEMA {
        return Err(bad(format!("expected `{FIELD_SCHEMA},n,m,L,resolution`")));
    }
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(format!("bad integer {s:?}")));
    let (n, m) = (int(meta[1])?, int(meta[2])?);
    let half_width: f64 = meta[3]
        .trim()
        .parse()
        .map_err(|_| bad(format!("bad L {:?}", meta[3])))?;
    let resolution = meta[4].split('x').map(int).collect::<LabResult<Vec<_>>>()?;
    let mut field = GridField::zeros(n, m, half_width, resolution.clone(), BoundaryCondition::Frozen)
        .map_err(|e| bad(e.to_string()))?;
    let columns = next("column header")?.split(',').count();
    if columns != 1 + n + m {
        return Err(bad(format!("expected {} columns, found {columns}", 1 + n + m)));
    }
    let mut values = Vec::with_capacity(field.node_count() * m);
    let mut rows = 0;
    for (k, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 1 + n + m {
            return Err(bad(format!("row {k}: expected {} cells", 1 + n + m)));
        }
        if int(cells[0])? != k || k >= field.node_count() {
            return Err(bad(format!("row {k}: index out of order")));
        }
        let coords = field.coords(k);
        for (i, c) in cells[1..=n].iter().enumerate() {
            let x: f64 = c.trim().parse().map_err(|_| bad(format!("row {k}: bad coordinate")))?;
            if (x - coords[i]).abs() > 1e-9 * half_width.max(1.0) {
                return Err(bad(format!("row {k}: coordinate {x} is not grid node {}", coords[i])));
            }
        }
        for c in &cells[1 + n..] {
            values.push(
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("row {k}: bad value")))?,
            );
        }
        rows += 1;
    }
    if rows != field.node_count() {
        return Err(bad(format!("expected {} rows, found {rows}", field.node_count())));
    }
    field = GridField::from_values(n, m, half_width, resolution, BoundaryCondition::Frozen, values)
        .map_err(|e| bad(e.to_string()))?;
    Ok(field)
}

pub fn read_field(path: &Path) -> LabResult<GridField> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    field_from_csv(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub sup_slope: f64,
    pub sup_residual: f64,
    #[serde(rename = "sup_B2")]
    pub sup_b2: f64,
    pub min_w: f64,
}

pub fn trace_rows(trace: &FlowTrace) -> Vec<TraceRow> {
    trace
        .samples
        .iter()
        .map(|s| TraceRow {
            step: s.step,
            time: s.time,
            sup_slope: s.sup_slope,
            sup_residual: s.sup_residual,
            sup_b2: s.sup_b2,
            min_w: s.min_w,
        })
        .collect()
}

pub fn write_trace(path: &Path, trace: &FlowTrace) -> LabResult<()> {
    write_csv(path, &trace_rows(trace))
}

/// One named polyline of a plot.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// A self-contained SVG line plot. Non-finite points and, with `log_y`,
/// non-positive values are skipped. The timestamp goes into `<metadata>`.
pub fn line_plot_svg(title: &str, x_label: &str, series: &[Series<'_>], log_y: bool, timestamp: &str) -> String {
    let (w, h, pad) = (720.0, 420.0, 60.0);
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let usable = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!log_y || y > 0.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().filter(|p| usable(p)).map(|&(x, y)| (x, ty(y))))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 <= 0.0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let esc = |s: &str| s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<metadata>generated {}</metadata>", esc(timestamp));
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        esc(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let ylab = if log_y {
            format!("1e{fy:.1}")
        } else {
            format!("{fy:.3e}")
        };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{fx:.3e}</text>"#,
            sx(fx),
            h - pad + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{ylab}</text>"#,
            pad - 4.0,
            sy(fy) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 12.0,
        esc(x_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|p| usable(p))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(ty(y))))
            .collect();
        if !path.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            w - pad - 150.0,
            pad + 16.0 * (k as f64 + 1.0),
            esc(ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn sample_field() -> GridField {
        let a = DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 0.1, 0.4]);
        GridField::from_fn(2, 2, 1.5, vec![7, 9], BoundaryCondition::linear(a), |x| {
            vec![(x[0] * 3.1).sin() / 7.0, 1.0 / 3.0 + x[1] * 1e-17]
        })
        .unwrap()
    }

    #[test]
    fn field_round_trip_is_loss_free() {
        let u = sample_field();
        let text = field_to_csv(&u);
        let back = field_from_csv(&text).unwrap();
        assert_eq!(back.values(), u.values());
        assert_eq!(back.resolution(), u.resolution());
        assert_eq!(back.half_width(), u.half_width());
        assert_eq!(field_to_csv(&back), text);
    }

    #[test]
    fn field_header_is_as_documented() {
        let text = field_to_csv(&sample_field());
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("schema,n,m,L,resolution"));
        assert_eq!(lines.next(), Some("shrinker-lab/field/v1,2,2,1.5,7x9"));
        assert_eq!(lines.next(), Some("index,x0,x1,u0,u1"));
        assert!(lines.next().unwrap().starts_with("0,-1.5,-1.5,"));
    }

    #[test]
    fn corrupted_fields_are_config_errors() {
        let text = field_to_csv(&sample_field());
        let cases = [
            text.replacen("field/v1", "field/v0", 1),
            text.replacen("7x9", "7x8", 1),
            text.lines().take(10).collect::<Vec<_>>().join("\n"),
            text.replacen("\n1,", "\n2,", 1),
        ];
        for c in &cases {
            assert!(matches!(field_from_csv(c), Err(LabError::Config(_))));
        }
    }

    #[test]
    fn svg_has_metadata_and_skips_bad_points() {
        let series = [Series {
            name: "r",
            points: vec![(0.0, 1.0), (1.0, 0.0), (2.0, f64::NAN), (3.0, 1e-3)],
        }];
        let svg = line_plot_svg("t<1>", "step", &series, true, "2024-01-01T00:00:00Z");
        assert!(svg.contains("<metadata>generated 2024-01-01T00:00:00Z</metadata>"));
        assert!(svg.contains("t&lt;1&gt;"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(!svg.contains("NaN"));
    }
}
