//! Aggregation of a persisted sweep: error tables, admissible steps,
//! step-size gains, slopes, and a log–log SVG plot.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{CarlemanError, Result};
use crate::metrics::{convergence_slope, dt_max, gain, ErrorReport};
use crate::sweep::{read_summary, SummaryRow};

pub const DEFAULT_TOLERANCES: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub n_eval: usize,
    pub dt: f64,
    /// `None` for failed cells.
    pub max_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GainRow {
    pub tol: f64,
    pub method: String,
    pub dt_max: Option<f64>,
    /// Relative to the Jacobian baseline; absent for the baseline itself.
    pub gain: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    /// Keyed by `jacobian` / `lifted_Q<q>`, points sorted by `n_eval`.
    pub series: BTreeMap<String, Vec<SeriesPoint>>,
    pub gains: Vec<GainRow>,
    pub slopes: BTreeMap<String, Option<f64>>,
}

fn reports_of(points: &[SeriesPoint]) -> Vec<ErrorReport> {
    points
        .iter()
        .filter_map(|p| {
            p.max_error.map(|e| ErrorReport {
                dt: p.dt,
                n_steps: p.n_eval - 1,
                max_error: e,
                frob_error: f64::NAN,
                per_state_max: Vec::new(),
            })
        })
        .collect()
}

impl SweepReport {
    /// Slopes are fitted over every successful cell in the summary.
    pub fn from_rows(rows: &[SummaryRow], tolerances: &[f64]) -> Self {
        let mut series: BTreeMap<String, Vec<SeriesPoint>> = BTreeMap::new();
        for row in rows {
            series.entry(row.label()).or_default().push(SeriesPoint {
                n_eval: row.n_eval,
                dt: row.dt,
                max_error: row.max_error(),
            });
        }
        for pts in series.values_mut() {
            pts.sort_by_key(|p| p.n_eval);
        }

        let reports: BTreeMap<&str, Vec<ErrorReport>> = series
            .iter()
            .map(|(k, v)| (k.as_str(), reports_of(v)))
            .collect();
        let baseline = reports.get("jacobian");
        let mut gains = Vec::new();
        for &tol in tolerances {
            for (method, reps) in &reports {
                let is_base = *method == "jacobian";
                gains.push(GainRow {
                    tol,
                    method: method.to_string(),
                    dt_max: dt_max(reps, tol),
                    gain: match baseline {
                        Some(base) if !is_base => gain(reps, base, tol),
                        _ => None,
                    },
                });
            }
        }

        let slopes = reports
            .iter()
            .map(|(k, reps)| {
                let pts: Vec<(f64, f64)> = reps.iter().map(|r| (r.dt, r.max_error)).collect();
                (k.to_string(), convergence_slope(&pts))
            })
            .collect();

        SweepReport {
            series,
            gains,
            slopes,
        }
    }

    /// Uses the sweep's own `slopes.json` when present.
    pub fn from_run_dir(dir: &Path, tolerances: &[f64]) -> Result<Self> {
        let summary = dir.join("summary.csv");
        if !summary.is_file() {
            return Err(CarlemanError::InvalidConfig(format!(
                "{} not found",
                summary.display()
            )));
        }
        let rows = read_summary(&summary)?;
        if rows.is_empty() {
            return Err(CarlemanError::InvalidConfig(format!(
                "{} has no rows",
                summary.display()
            )));
        }
        let mut report = Self::from_rows(&rows, tolerances);
        let slopes_path = dir.join("slopes.json");
        if slopes_path.is_file() {
            let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(slopes_path)?)?;
            if let Some(obj) = v.get("slopes").and_then(|s| s.as_object()) {
                report.slopes = obj
                    .iter()
                    .map(|(k, s)| (k.clone(), s.as_f64()))
                    .collect();
            }
        }
        Ok(report)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let methods: Vec<&String> = self.series.keys().collect();
        let mut grid: Vec<(usize, f64)> = self
            .series
            .values()
            .flatten()
            .map(|p| (p.n_eval, p.dt))
            .collect();
        grid.sort_by_key(|g| g.0);
        grid.dedup_by_key(|g| g.0);

        out.push_str("E(dt)\n");
        let _ = write!(out, "{:>8} {:>12}", "n_eval", "dt");
        for m in &methods {
            let _ = write!(out, " {:>12}", m);
        }
        out.push('\n');
        for (n, dt) in &grid {
            let _ = write!(out, "{:>8} {:>12.4e}", n, dt);
            for m in &methods {
                let cell = self.series[*m]
                    .iter()
                    .find(|p| p.n_eval == *n)
                    .map(|p| fmt_opt(p.max_error, "FAILED"))
                    .unwrap_or_else(|| "-".into());
                let _ = write!(out, " {:>12}", cell);
            }
            out.push('\n');
        }

        out.push_str("\ndt_max and gain R(e)\n");
        let _ = writeln!(out, "{:>10} {:>12} {:>12} {:>10}", "tol", "method", "dt_max", "R(e)");
        for g in &self.gains {
            let r = if g.method == "jacobian" {
                "-".to_string()
            } else {
                g.gain.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
            };
            let _ = writeln!(
                out,
                "{:>10.1e} {:>12} {:>12} {:>10}",
                g.tol,
                g.method,
                fmt_opt(g.dt_max, "n/a"),
                r
            );
        }

        out.push_str("\nslopes\n");
        for (m, s) in &self.slopes {
            let _ = writeln!(
                out,
                "{:>12} {:>8}",
                m,
                s.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
            );
        }
        out
    }

    /// Flat CSV of the gain table: `tol,method,dt_max,gain`.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("tol,method,dt_max,gain\n");
        for g in &self.gains {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                g.tol,
                g.method,
                g.dt_max.map(|v| v.to_string()).unwrap_or_else(|| "n/a".into()),
                g.gain.map(|v| v.to_string()).unwrap_or_else(|| "n/a".into())
            );
        }
        out
    }

    /// Log–log polyline plot of `E` against the number of steps.
    pub fn render_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 420.0;
        const M: f64 = 60.0;
        const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

        let pts: Vec<(f64, f64)> = self
            .series
            .values()
            .flatten()
            .filter_map(|p| Some(((p.n_eval - 1) as f64, p.max_error.filter(|e| *e > 0.0)?)))
            .map(|(n, e)| (n.log10(), e.log10()))
            .collect();
        let bounds = |f: fn(&(f64, f64)) -> f64| {
            let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() && hi > lo {
                (lo.floor(), hi.ceil())
            } else if lo.is_finite() {
                (lo.floor() - 1.0, lo.floor() + 1.0)
            } else {
                (0.0, 1.0)
            }
        };
        let (x0, x1) = bounds(|p| p.0);
        let (y0, y1) = bounds(|p| p.1);
        let sx = |v: f64| M + (v - x0) / (x1 - x0) * (W - 2.0 * M);
        let sy = |v: f64| H - M - (v - y0) / (y1 - y0) * (H - 2.0 * M);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * M,
            H - 2.0 * M
        );
        for d in (x0 as i32)..=(x1 as i32) {
            let x = sx(d as f64);
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.1}" y1="{M}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"##,
                H - M,
                H - M + 18.0
            );
        }
        for d in (y0 as i32)..=(y1 as i32) {
            let y = sy(d as f64);
            let _ = writeln!(
                svg,
                r##"<line x1="{M}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"##,
                W - M,
                M - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">steps</text>"#,
            W / 2.0,
            H - 12.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">max error</text>"#,
            H / 2.0,
            H / 2.0
        );

        for (k, (name, series)) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let coords: Vec<String> = series
                .iter()
                .filter_map(|p| {
                    let e = p.max_error.filter(|e| *e > 0.0)?;
                    Some(format!(
                        "{:.2},{:.2}",
                        sx(((p.n_eval - 1) as f64).log10()),
                        sy(e.log10())
                    ))
                })
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
            let ly = M + 16.0 + 16.0 * k as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{name}</text>"#,
                W - M - 120.0,
                W - M - 100.0,
                W - M - 94.0,
                ly + 4.0
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn fmt_opt(v: Option<f64>, none: &str) -> String {
    v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| none.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, q: u32, n: usize, e: &str) -> SummaryRow {
        SummaryRow {
            method: method.into(),
            deg_z: q,
            n_eval: n,
            dt: 1.0 / (n - 1) as f64,
            max_error: e.into(),
            frob_error: e.into(),
        }
    }

    fn rows() -> Vec<SummaryRow> {
        vec![
            row("jacobian", 1, 11, "0.1"),
            row("jacobian", 1, 21, "0.05"),
            row("lifted", 3, 11, "0.05"),
            row("lifted", 3, 21, "0.025"),
        ]
    }

    #[test]
    fn gain_rows() {
        let rep = SweepReport::from_rows(&rows(), &[0.06, 1e-3]);
        let g = rep
            .gains
            .iter()
            .find(|g| g.tol == 0.06 && g.method == "lifted_Q3")
            .unwrap();
        assert_eq!(g.dt_max, Some(0.1));
        assert_eq!(g.gain, Some(2.0));
        let none = rep
            .gains
            .iter()
            .find(|g| g.tol == 1e-3 && g.method == "lifted_Q3")
            .unwrap();
        assert_eq!(none.gain, None);
        let text = rep.render_text();
        assert!(text.contains("n/a"));
        assert!((rep.slopes["jacobian"].unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn failed_cells_are_kept() {
        let mut r = rows();
        r.push(row("lifted", 3, 41, "FAILED"));
        let rep = SweepReport::from_rows(&r, &[0.06]);
        assert_eq!(rep.series["lifted_Q3"].len(), 3);
        assert!(rep.render_text().contains("FAILED"));
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = SweepReport::from_rows(&rows(), &[]).render_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn missing_dir() {
        let dir = tempfile::tempdir().unwrap();
        assert!(SweepReport::from_run_dir(dir.path(), &[0.1]).is_err());
    }
}
