//! Trajectory artifacts: CSV tables and a static SVG plot, written atomically.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::simulator::Trajectory;

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Header `t,x_1_1,...,x_m_n`; column `x_i_k` is component `k` of agent `i`.
pub fn trajectory_csv(traj: &Trajectory) -> Vec<u8> {
    let (n, m) = traj.final_state().shape();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    for i in 1..=m {
        for k in 1..=n {
            header.push(format!("x_{i}_{k}"));
        }
    }
    w.write_record(&header).expect("in-memory write");
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![t.to_string()];
        for i in 0..m {
            for k in 0..n {
                row.push(x[(k, i)].to_string());
            }
        }
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn dispersion_csv(traj: &Trajectory) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "dispersion"])
        .expect("in-memory write");
    for (t, d) in traj.times.iter().zip(&traj.dispersion) {
        w.write_record([t.to_string(), d.to_string()])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

struct Panel {
    top: f64,
    height: f64,
}

const WIDTH: f64 = 900.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

fn draw_panel(svg: &mut String, panel: &Panel, title: &str, times: &[f64], series: &[Vec<f64>]) {
    let t_max = times.last().copied().unwrap_or(1.0).max(1e-12);
    let (lo, hi) = bounds(series.iter().flatten().copied());
    let x = |t: f64| LEFT + (WIDTH - LEFT - RIGHT) * t / t_max;
    let y = |v: f64| panel.top + panel.height * (1.0 - (v - lo) / (hi - lo));
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        panel.top,
        WIDTH - LEFT - RIGHT,
        panel.height
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0,
        panel.top - 8.0
    );
    for (v, anchor) in [(hi, panel.top + 4.0), (lo, panel.top + panel.height)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{anchor}" font-size="11" text-anchor="end">{v:.3}</text>"#,
            LEFT - 6.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="end">t = {t_max}</text>"#,
        WIDTH - RIGHT,
        panel.top + panel.height + 14.0
    );
    for (k, s) in series.iter().enumerate() {
        let points: Vec<String> = times
            .iter()
            .zip(s)
            .map(|(t, v)| format!("{:.2},{:.2}", x(*t), y(*v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
            PALETTE[k % PALETTE.len()],
            points.join(" ")
        );
    }
}

/// Dispersion on top, every state component of every agent below.
pub fn plot_svg(traj: &Trajectory, title: &str) -> String {
    let height = 640.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    draw_panel(
        &mut svg,
        &Panel {
            top: 40.0,
            height: 200.0,
        },
        &format!("{title}: dispersion"),
        &traj.times,
        std::slice::from_ref(&traj.dispersion),
    );
    let (n, m) = traj.final_state().shape();
    let components: Vec<Vec<f64>> = (0..m)
        .flat_map(|i| (0..n).map(move |k| (i, k)))
        .map(|(i, k)| traj.states.iter().map(|x| x[(k, i)]).collect())
        .collect();
    draw_panel(
        &mut svg,
        &Panel {
            top: 300.0,
            height: 300.0,
        },
        "state components",
        &traj.times,
        &components,
    );
    svg.push_str("</svg>\n");
    svg
}
