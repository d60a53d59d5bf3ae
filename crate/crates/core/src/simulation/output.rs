//! CSV and SVG artifacts of an experiment.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::experiment::RiskReport;
use crate::error::Result;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// First line of every CSV: tool version and configuration hash.
pub fn provenance_line(config_hash: &str) -> String {
    format!("# deconv {TOOL_VERSION} config_sha256={config_hash}")
}

/// A CSV document: provenance comment, header row, then data rows.
pub fn write_csv<W: Write>(mut w: W, config_hash: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    writeln!(w, "{}", provenance_line(config_hash))?;
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    Ok(())
}

pub fn rates_rows(report: &RiskReport) -> Vec<Vec<String>> {
    report
        .cells
        .iter()
        .map(|c| {
            vec![
                c.n.to_string(),
                c.h.to_string(),
                c.n_cap.to_string(),
                c.risk.to_string(),
                c.stderr.to_string(),
            ]
        })
        .collect()
}

pub const RATES_HEADER: [&str; 5] = ["n", "h", "N", "risk", "stderr"];
pub const REPORT_HEADER: [&str; 4] = ["slope", "ci_low", "ci_high", "theoretical_slope"];

pub fn report_rows(report: &RiskReport) -> Vec<Vec<String>> {
    vec![vec![
        report.slope.to_string(),
        report.slope_ci.0.to_string(),
        report.slope_ci.1.to_string(),
        report.theoretical_slope.to_string(),
    ]]
}

/// Writes `rates.csv`, `report.csv` and optionally `plot.svg` into `dir`.
pub fn write_experiment(dir: &Path, report: &RiskReport, plot: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let rates = dir.join("rates.csv");
    write_csv(
        fs::File::create(&rates)?,
        &report.fingerprint,
        &RATES_HEADER,
        &rates_rows(report),
    )?;
    let summary = dir.join("report.csv");
    write_csv(
        fs::File::create(&summary)?,
        &report.fingerprint,
        &REPORT_HEADER,
        &report_rows(report),
    )?;
    let mut out = vec![rates, summary];
    if plot {
        let svg = dir.join("plot.svg");
        fs::write(&svg, loglog_svg(report))?;
        out.push(svg);
    }
    Ok(out)
}

/// Log-log plot of risk against n with the fitted line and a reference line
/// of the theoretical slope through the same centroid.
pub fn loglog_svg(report: &RiskReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 60.0;
    let pts: Vec<(f64, f64)> = report
        .cells
        .iter()
        .filter(|c| c.risk > 0.0)
        .map(|c| ((c.n as f64).log10(), c.risk.log10()))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let (x0, x1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (x0, x1) = (x0 - 0.1, x1 + 0.1);
    let (y0, y1) = (y0 - 0.2, y1 + 0.2);
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let _ = writeln!(
        s,
        r#"<path d="M{M} {M} L{M} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        b = H - M,
        r = W - M
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">log10 n</text>"#,
        W / 2.0,
        H - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" font-size="13" transform="rotate(-90 18 {})" text-anchor="middle">log10 risk</text>"#,
        H / 2.0,
        H / 2.0
    );
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    for (slope, color, dash) in [
        (report.slope, "steelblue", ""),
        (report.theoretical_slope, "firebrick", r#" stroke-dasharray="6 4""#),
    ] {
        if slope.is_finite() {
            let a = (x0, cy + slope * (x0 - cx));
            let b = (x1, cy + slope * (x1 - cx));
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"{dash}/>"#,
                px(a.0),
                py(a.1),
                px(b.0),
                py(b.1)
            );
        }
    }
    for &(x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#, px(x), py(y));
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" font-size="13">fitted slope {:.3} (95% CI {:.3}, {:.3}); theory {:.3}</text>"#,
        M, report.slope, report.slope_ci.0, report.slope_ci.1, report.theoretical_slope
    );
    s.push_str("</svg>\n");
    s
}
