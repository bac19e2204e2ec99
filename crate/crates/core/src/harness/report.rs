//! Study reports, summary files and SVG line plots.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure {
    /// File stem of the `.svg` and `.csv` pair.
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

/// Result of one study. Everything written to disk is derived from this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub study: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub checks: Vec<Check>,
    pub figures: Vec<Figure>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(study: &str, config_hash: String, seeds: Vec<u64>) -> Self {
        Report { study: study.into(), config_hash, seeds, checks: Vec::new(), figures: Vec::new(), notes: Vec::new() }
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Plain-text summary with one `PASS`/`FAIL` line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "study: {}", self.study);
        let _ = writeln!(s, "config_sha256: {}", self.config_hash);
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "seeds: {}", seeds.join(","));
        for c in &self.checks {
            let _ = writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

fn clean_label(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl Figure {
    /// Rows `series,x,y`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("series,x,y\n");
        for ser in &self.series {
            let label = clean_label(&ser.label);
            for (x, y) in &ser.points {
                let _ = writeln!(s, "{label},{x},{y}");
            }
        }
        s
    }

    /// Self-contained SVG. Each series carries its raw points in a
    /// `data-points` attribute, formatted exactly as in the CSV.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 420.0;
        const ML: f64 = 70.0;
        const MR: f64 = 150.0;
        const MT: f64 = 40.0;
        const MB: f64 = 50.0;
        const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let usable = |x: f64, y: f64| tx(x).is_finite() && ty(y).is_finite();
        let pts = || self.series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| usable(*x, *y));
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts() {
            x0 = x0.min(tx(x));
            x1 = x1.max(tx(x));
            y0 = y0.min(ty(y));
            y1 = y1.max(ty(y));
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let px = |x: f64| ML + (tx(x) - x0) / (x1 - x0) * (W - ML - MR);
        let py = |y: f64| H - MB - (ty(y) - y0) / (y1 - y0) * (H - MT - MB);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (W - MR + ML) / 2.0, escape(&self.title));
        let (bx, by, bw, bh) = (ML, MT, W - ML - MR, H - MT - MB);
        let _ = writeln!(s, r#"<rect x="{bx}" y="{by}" width="{bw}" height="{bh}" fill="none" stroke="black"/>"#);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (vx, vy) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let (lx, ly) = (if self.log_x { 10f64.powf(vx) } else { vx }, if self.log_y { 10f64.powf(vy) } else { vy });
            let gx = bx + f * bw;
            let gy = by + bh - f * bh;
            let _ = writeln!(s, r#"<line x1="{gx:.2}" y1="{}" x2="{gx:.2}" y2="{}" stroke="black"/>"#, by + bh, by + bh + 5.0);
            let _ = writeln!(s, r#"<text x="{gx:.2}" y="{}" text-anchor="middle">{lx:.3}</text>"#, by + bh + 18.0);
            let _ = writeln!(s, r#"<line x1="{}" y1="{gy:.2}" x2="{bx}" y2="{gy:.2}" stroke="black"/>"#, bx - 5.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{ly:.3}</text>"#, bx - 8.0, gy + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, bx + bw / 2.0, H - 10.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            by + bh / 2.0,
            escape(&self.y_label)
        );
        for (k, ser) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let raw: Vec<String> = ser.points.iter().map(|(x, y)| format!("{x},{y}")).collect();
            let drawn: Vec<String> =
                ser.points.iter().filter(|(x, y)| usable(*x, *y)).map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<g class="series" data-label="{}" data-points="{}">"#,
                escape(&clean_label(&ser.label)),
                raw.join(" ")
            );
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, drawn.join(" "));
            let ly = MT + 10.0 + 18.0 * k as f64;
            let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, W - MR + 10.0, W - MR + 30.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, W - MR + 35.0, ly + 4.0, escape(&ser.label));
            let _ = writeln!(s, "</g>");
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig() -> Figure {
        Figure {
            name: "f".into(),
            title: "L1 <error> & more".into(),
            x_label: "N".into(),
            y_label: "L1".into(),
            log_x: true,
            log_y: true,
            series: vec![
                Series { label: "t=0.1".into(), points: vec![(100.0, 0.06), (200.0, 0.04), (400.0, 0.0312345678901)] },
                Series { label: "a,b".into(), points: vec![(100.0, 0.0)] },
            ],
        }
    }

    #[test]
    fn svg_is_well_formed_and_carries_the_csv_points() {
        let f = fig();
        let svg = f.to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;error&gt; &amp;"));
        let opens = svg.matches("<g ").count();
        assert_eq!(opens, svg.matches("</g>").count());
        // points in the svg equal the csv rows
        let csv = f.to_csv();
        let mut from_svg = Vec::new();
        for part in svg.split("data-label=\"").skip(1) {
            let label = &part[..part.find('"').unwrap()];
            let pts = part.split("data-points=\"").nth(1).unwrap();
            let pts = &pts[..pts.find('"').unwrap()];
            for p in pts.split_whitespace() {
                from_svg.push(format!("{label},{p}"));
            }
        }
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows, from_svg.iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn summary_lines() {
        let mut r = Report::new("demo", "abc".into(), vec![3, 4]);
        r.check("one", true, "fine");
        r.check("two", false, "off by 1");
        let s = r.summary();
        assert!(s.contains("seeds: 3,4\n"));
        assert!(s.contains("PASS one: fine\n") && s.contains("FAIL two: off by 1\n"));
        assert!(!r.all_passed());
    }
}
