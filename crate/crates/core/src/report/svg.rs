//! Minimal, dependency-free line and bar charts.

use std::fmt::Write;

use super::{ReportError, Table};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Line,
    Bar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub kind: ChartKind,
    pub title: String,
    pub x: String,
    pub y: String,
    /// Column that splits rows into series; one series when absent.
    pub series: Option<String>,
}

impl ChartSpec {
    pub fn line(title: &str, x: &str, y: &str, series: Option<&str>) -> Self {
        Self {
            kind: ChartKind::Line,
            title: title.into(),
            x: x.into(),
            y: y.into(),
            series: series.map(Into::into),
        }
    }

    pub fn bar(title: &str, x: &str, y: &str, series: Option<&str>) -> Self {
        Self {
            kind: ChartKind::Bar,
            ..Self::line(title, x, y, series)
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Series {
    name: String,
    points: Vec<(String, f64, f64)>,
}

fn group(table: &Table, spec: &ChartSpec) -> Result<Vec<Series>, ReportError> {
    let xi = table.column(&spec.x)?;
    let yi = table.column(&spec.y)?;
    let si = spec.series.as_deref().map(|s| table.column(s)).transpose()?;
    let mut out: Vec<Series> = Vec::new();
    for (r, row) in table.rows.iter().enumerate() {
        let name = si.map(|i| row[i].to_string()).unwrap_or_else(|| spec.y.clone());
        let y = row[yi]
            .as_f64()
            .ok_or_else(|| ReportError::NotNumeric(spec.y.clone(), r))?;
        let label = row[xi].to_string();
        let x = match spec.kind {
            ChartKind::Line => row[xi]
                .as_f64()
                .ok_or_else(|| ReportError::NotNumeric(spec.x.clone(), r))?,
            ChartKind::Bar => 0.0,
        };
        match out.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((label, x, y)),
            None => out.push(Series {
                name,
                points: vec![(label, x, y)],
            }),
        }
    }
    Ok(out)
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-12 {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

/// Renders `table` as a self-contained SVG document.
pub fn emit_svg(table: &Table, spec: &ChartSpec) -> Result<String, ReportError> {
    if table.is_empty() {
        return Err(ReportError::EmptyTable);
    }
    let series = group(table, spec)?;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;

    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.2));
    let (ymin, ymax) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    let (ymin, ymax) = match spec.kind {
        ChartKind::Bar => span(ymin.min(0.0), ymax.max(0.0)),
        ChartKind::Line => span(ymin, ymax),
    };
    let sy = |y: f64| TOP + plot_h * (1.0 - (y - ymin) / (ymax - ymin));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&spec.title)
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT:.2},{TOP:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    for (value, anchor_y) in [(ymin, TOP + plot_h), (ymax, TOP)] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            anchor_y + 4.0,
            tick(value)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&spec.y)
    );

    match spec.kind {
        ChartKind::Line => {
            let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
            let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            let (xmin, xmax) = span(xmin, xmax);
            let sx = |x: f64| LEFT + plot_w * (x - xmin) / (xmax - xmin);
            for (value, x) in [(xmin, LEFT), (xmax, LEFT + plot_w)] {
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                    x,
                    TOP + plot_h + 16.0,
                    tick(value)
                );
            }
            for (k, s) in series.iter().enumerate() {
                let color = PALETTE[k % PALETTE.len()];
                let _ = writeln!(svg, r#"<g class="series" data-name="{}">"#, escape(&s.name));
                if s.points.len() > 1 {
                    let pts: Vec<String> = s
                        .points
                        .iter()
                        .map(|p| format!("{:.2},{:.2}", sx(p.1), sy(p.2)))
                        .collect();
                    let _ = writeln!(
                        svg,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                        pts.join(" ")
                    );
                }
                for p in &s.points {
                    let _ = writeln!(
                        svg,
                        r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                        sx(p.1),
                        sy(p.2)
                    );
                }
                let _ = writeln!(svg, "</g>");
            }
        }
        ChartKind::Bar => {
            let mut categories: Vec<String> = Vec::new();
            for s in &series {
                for p in &s.points {
                    if !categories.contains(&p.0) {
                        categories.push(p.0.clone());
                    }
                }
            }
            let group_w = plot_w / categories.len() as f64;
            let bar_w = group_w * 0.8 / series.len() as f64;
            for (c, cat) in categories.iter().enumerate() {
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                    LEFT + group_w * (c as f64 + 0.5),
                    TOP + plot_h + 16.0,
                    escape(cat)
                );
            }
            for (k, s) in series.iter().enumerate() {
                let color = PALETTE[k % PALETTE.len()];
                let _ = writeln!(svg, r#"<g class="series" data-name="{}">"#, escape(&s.name));
                for p in &s.points {
                    let c = categories.iter().position(|cat| *cat == p.0).expect("collected above");
                    let x = LEFT + group_w * c as f64 + group_w * 0.1 + bar_w * k as f64;
                    let (top, bottom) = (sy(p.2.max(0.0)), sy(p.2.min(0.0)));
                    let _ = writeln!(
                        svg,
                        r#"<rect class="marker" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                        x,
                        top,
                        bar_w,
                        (bottom - top).max(0.5)
                    );
                }
                let _ = writeln!(svg, "</g>");
            }
        }
    }

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let y = TOP + 10.0 + 18.0 * k as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><rect x="{x:.2}" y="{:.2}" width="12" height="12" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            y - 10.0,
            x + 18.0,
            y,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Cell;

    #[test]
    fn single_point_line_chart() {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![1.0.into(), 2.0.into()]);
        let svg = emit_svg(&t, &ChartSpec::line("one", "x", "y", None)).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.starts_with("<svg"));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn three_scheme_bars() {
        let mut t = Table::new(&["instance", "scheme", "total"]);
        for (s, v) in [("sip", 20.0), ("evf", 22.5), ("avg", 22.5)] {
            t.push(vec!["two-point".into(), s.into(), v.into()]);
        }
        let svg = emit_svg(&t, &ChartSpec::bar("totals", "instance", "total", Some("scheme"))).unwrap();
        assert_eq!(svg.matches(r#"<g class="series""#).count(), 3);
        for name in ["sip", "evf", "avg"] {
            assert!(svg.contains(&format!(">{name}</text></g>")), "legend {name}");
        }
        assert_eq!(
            svg,
            emit_svg(&t, &ChartSpec::bar("totals", "instance", "total", Some("scheme"))).unwrap()
        );
    }

    #[test]
    fn errors() {
        let t = Table::new(&["x", "y"]);
        assert!(matches!(
            emit_svg(&t, &ChartSpec::line("e", "x", "y", None)),
            Err(ReportError::EmptyTable)
        ));
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![Cell::Text("a".into()), 1.0.into()]);
        assert!(emit_svg(&t, &ChartSpec::line("e", "x", "y", None)).is_err());
        assert!(emit_svg(&t, &ChartSpec::line("e", "x", "nope", None)).is_err());
    }
}
