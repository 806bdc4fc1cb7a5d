//! Renders mean cumulative regret curves from a run directory as SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::HarnessError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;
const MAX_POINTS: usize = 400;
const COLOURS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Mean cumulative regret per round for each `policy (ε)` curve.
pub fn mean_curves(trajectory_csv: &Path) -> Result<BTreeMap<String, Vec<f64>>, HarnessError> {
    let mut reader = csv::Reader::from_path(trajectory_csv)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Config(format!("trajectory.csv lacks column {name}")))
    };
    let (c_pol, c_eps, c_t, c_cum) = (col("policy")?, col("epsilon")?, col("t")?, col("cum_regret")?);
    let mut sums: BTreeMap<String, (Vec<f64>, Vec<u32>)> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let label = format!("{} (eps={})", &record[c_pol], &record[c_eps]);
        let t: usize = record[c_t]
            .parse()
            .map_err(|_| HarnessError::Config(format!("bad round index {}", &record[c_t])))?;
        let v: f64 = record[c_cum]
            .parse()
            .map_err(|_| HarnessError::Config(format!("bad regret value {}", &record[c_cum])))?;
        let (s, n) = sums.entry(label).or_default();
        if s.len() < t {
            s.resize(t, 0.0);
            n.resize(t, 0);
        }
        s[t - 1] += v;
        n[t - 1] += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(k, (s, n))| (k, s.iter().zip(&n).map(|(a, &c)| if c > 0 { a / c as f64 } else { f64::NAN }).collect()))
        .collect())
}

pub fn render_svg(curves: &BTreeMap<String, Vec<f64>>) -> String {
    let t_max = curves.values().map(Vec::len).max().unwrap_or(1).max(1) as f64;
    let y_max = curves
        .values()
        .flat_map(|c| c.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let x = |t: f64| MARGIN + (WIDTH - 2.0 * MARGIN) * t / t_max;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v / y_max;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, x1, y1) = (x(0.0), y(0.0), x(t_max), y(y_max));
    let _ = writeln!(svg, r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" stroke="black" fill="none"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">round t</text>"#, (x0 + x1) / 2.0, HEIGHT - 20.0);
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">mean cumulative regret</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let _ = writeln!(svg, r#"<text x="{x0}" y="{}" text-anchor="middle">0</text>"#, y0 + 16.0);
    let _ = writeln!(svg, r#"<text x="{x1}" y="{}" text-anchor="middle">{t_max}</text>"#, y0 + 16.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{y1}" text-anchor="end">{y_max:.3}</text>"#, x0 - 4.0);

    for (i, (label, curve)) in curves.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let stride = curve.len().div_ceil(MAX_POINTS).max(1);
        let mut points = String::new();
        for (t, v) in curve.iter().enumerate() {
            if (t % stride == 0 || t + 1 == curve.len()) && v.is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", x((t + 1) as f64), y(*v));
            }
        }
        let _ = writeln!(svg, r#"<polyline points="{}" stroke="{colour}" fill="none" stroke-width="1.5"/>"#, points.trim_end());
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            x0 + 10.0,
            x0 + 30.0,
            x0 + 36.0,
            ly + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Reads `dir/trajectory.csv` and writes `dir/regret.svg`.
pub fn render_plots(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let curves = mean_curves(&dir.join("trajectory.csv"))?;
    let out = dir.join("regret.svg");
    std::fs::write(&out, render_svg(&curves))?;
    Ok(vec![out])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn averages_over_replications() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory.csv");
        std::fs::write(
            &path,
            "policy,epsilon,replication,t,arm,reward,inst_regret,cum_regret,episode,support_size\n\
             p,1,0,1,0,0,0,1.0,0,0\np,1,0,2,0,0,0,3.0,1,0\np,1,1,1,0,0,0,0.0,0,0\np,1,1,2,0,0,0,1.0,1,0\n",
        )
        .unwrap();
        let curves = mean_curves(&path).unwrap();
        assert_eq!(curves["p (eps=1)"], vec![0.5, 2.0]);
        let files = render_plots(dir.path()).unwrap();
        let svg = std::fs::read_to_string(&files[0]).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    }

    #[test]
    fn missing_input_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = render_plots(dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
