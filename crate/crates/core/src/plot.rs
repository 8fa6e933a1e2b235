//! Minimal SVG plots of sweep results, each written next to the CSV of the
//! points it draws.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::Distribution;
use crate::error::{NgcaError, Result};
use crate::harness::{
    self, median, parse_conditions_csv, parse_results_csv, summarize, summary_to_csv, ConditionRow, CONDITIONS_FILE,
};
use crate::subspace::Method;

/// Sample size assumed when the condition numbers must be regenerated.
pub const DEFAULT_CONDITION_N: usize = 2000;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Series {
    label: String,
    color: &'static str,
    points: Vec<(f64, f64)>,
    band: Option<Vec<(f64, f64, f64)>>,
}

struct Axes {
    x_range: (f64, f64),
    y_range: (f64, f64),
    log_y: bool,
}

impl Axes {
    fn fit(series: &[Series], log_y: bool) -> Self {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in series {
            for &(x, y) in &s.points {
                xs.push(x);
                ys.push(y);
            }
            for &(x, lo, hi) in s.band.iter().flatten() {
                xs.push(x);
                ys.extend([lo, hi]);
            }
        }
        let tr = |v: f64| if log_y { v.max(1e-300).log10() } else { v };
        let ys: Vec<f64> = ys.into_iter().filter(|v| v.is_finite()).map(tr).collect();
        let span = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        Axes {
            x_range: span(&xs),
            y_range: span(&ys),
            log_y,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let y = if self.log_y { y.max(1e-300).log10() } else { y };
        HEIGHT - MARGIN - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn render(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let axes = Axes::fit(series, log_y);
    let mut svg = String::new();
    let w = &mut svg;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        w,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{title}</text>"#,
        WIDTH / 2.0
    )
    .unwrap();
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    writeln!(
        w,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" stroke="black" fill="none"/>"#
    )
    .unwrap();
    for k in 0..=4 {
        let fx = axes.x_range.0 + (axes.x_range.1 - axes.x_range.0) * k as f64 / 4.0;
        let fy = axes.y_range.0 + (axes.y_range.1 - axes.y_range.0) * k as f64 / 4.0;
        let label_y = if log_y {
            format!("1e{fy:.1}")
        } else {
            format!("{fy:.3}")
        };
        let py = if log_y { axes.py(10f64.powf(fy)) } else { axes.py(fy) };
        writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.2}</text>"#,
            axes.px(fx),
            y0 + 15.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label_y}</text>"#,
            x0 - 4.0,
            py + 4.0
        )
        .unwrap();
    }
    writeln!(
        w,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    )
    .unwrap();
    writeln!(
        w,
        r#"<text x="12" y="{}" text-anchor="middle" transform="rotate(-90 12 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )
    .unwrap();
    for (i, s) in series.iter().enumerate() {
        if let Some(band) = &s.band {
            let upper = band
                .iter()
                .map(|&(x, _, hi)| format!("{:.2},{:.2}", axes.px(x), axes.py(hi)));
            let lower = band
                .iter()
                .rev()
                .map(|&(x, lo, _)| format!("{:.2},{:.2}", axes.px(x), axes.py(lo)));
            let pts: Vec<String> = upper.chain(lower).collect();
            writeln!(
                w,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
                pts.join(" "),
                s.color
            )
            .unwrap();
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", axes.px(x), axes.py(y)))
            .collect();
        writeln!(
            w,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            pts.join(" "),
            s.color
        )
        .unwrap();
        for p in &pts {
            let (cx, cy) = p.split_once(',').expect("formatted point");
            writeln!(w, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{}"/>"#, s.color).unwrap();
        }
        let ly = MARGIN + 14.0 * i as f64;
        writeln!(
            w,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#,
            x1 - 110.0,
            ly - 9.0,
            s.color
        )
        .unwrap();
        writeln!(w, r#"<text x="{}" y="{ly}">{}</text>"#, x1 - 95.0, s.label).unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| NgcaError::io(path, e))
}

/// Condition numbers for the (distribution, r, seed) triples of a sweep:
/// read from the sibling conditions file when present, else regenerated.
fn load_conditions(csv_path: &Path, triples: &[(Distribution, f64, u64)]) -> Result<Vec<ConditionRow>> {
    let sibling = csv_path.parent().unwrap_or(Path::new(".")).join(CONDITIONS_FILE);
    if sibling.is_file() {
        let text = fs::read_to_string(&sibling).map_err(|e| NgcaError::io(&sibling, e))?;
        return parse_conditions_csv(&text);
    }
    triples
        .iter()
        .map(|&(distribution, r, seed)| {
            let (_, _, kappa) = harness::synthetic_instance(distribution, r, DEFAULT_CONDITION_N, seed)?;
            Ok(ConditionRow {
                distribution,
                r,
                seed,
                condition_number: kappa,
            })
        })
        .collect()
}

/// Reads a results CSV and writes, for each distribution, an error-vs-r
/// plot (median with interquartile band per method) plus its data CSV, and
/// one condition-number-vs-r plot. Returns the files written.
pub fn emit_plots(csv_path: &Path, output_dir: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(csv_path).map_err(|e| NgcaError::io(csv_path, e))?;
    let results = parse_results_csv(&text)?;
    if results.is_empty() {
        return Err(NgcaError::Schema(format!("{} has no result rows", csv_path.display())));
    }
    let mut triples: Vec<(Distribution, f64, u64)> = Vec::new();
    for r in &results {
        let t = (r.distribution, r.r, r.seed);
        if !triples.contains(&t) {
            triples.push(t);
        }
    }
    let conditions = load_conditions(csv_path, &triples)?;
    fs::create_dir_all(output_dir).map_err(|e| NgcaError::io(output_dir, e))?;

    let summary = summarize(&results);
    let mut distributions: Vec<Distribution> = summary.iter().map(|s| s.distribution).collect();
    distributions.sort();
    distributions.dedup();
    let mut written = Vec::new();
    for dist in distributions {
        let mut rows: Vec<_> = summary.iter().filter(|s| s.distribution == dist).cloned().collect();
        rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.r.total_cmp(&b.r)));
        let mut series = Vec::new();
        for (i, method) in Method::ALL.into_iter().enumerate() {
            let cells: Vec<_> = rows
                .iter()
                .filter(|s| s.method == method && s.median.is_some())
                .collect();
            if cells.is_empty() {
                continue;
            }
            series.push(Series {
                label: method.to_string(),
                color: COLORS[i % COLORS.len()],
                points: cells.iter().map(|s| (s.r, s.median.unwrap())).collect(),
                band: Some(cells.iter().map(|s| (s.r, s.q25.unwrap(), s.q75.unwrap())).collect()),
            });
        }
        let data_path = output_dir.join(format!("error_{dist}.csv"));
        write(&data_path, &summary_to_csv(&rows))?;
        let svg_path = output_dir.join(format!("error_{dist}.svg"));
        write(
            &svg_path,
            &render(&format!("subspace error, {dist}"), "r", "median error", &series, false),
        )?;
        written.extend([svg_path, data_path]);
    }

    let mut by_cell: BTreeMap<(Distribution, u64), Vec<f64>> = BTreeMap::new();
    for c in &conditions {
        by_cell
            .entry((c.distribution, c.r.to_bits()))
            .or_default()
            .push(c.condition_number);
    }
    let mut kappa_csv = String::from("distribution,r,median_condition_number\n");
    let mut series: Vec<Series> = Vec::new();
    for ((dist, r_bits), values) in &by_cell {
        let r = f64::from_bits(*r_bits);
        let med = median(values);
        writeln!(kappa_csv, "{dist},{r},{}", crate::io::format_f64(med)).unwrap();
        match series.iter_mut().find(|s| s.label == dist.as_str()) {
            Some(s) => s.points.push((r, med)),
            None => {
                let color = COLORS[Distribution::ALL.iter().position(|d| d == dist).unwrap_or(0)];
                series.push(Series {
                    label: dist.to_string(),
                    color,
                    points: vec![(r, med)],
                    band: None,
                });
            }
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let kappa_data = output_dir.join("condition_number.csv");
    write(&kappa_data, &kappa_csv)?;
    let kappa_svg = output_dir.join("condition_number.svg");
    write(
        &kappa_svg,
        &render(
            "covariance condition number",
            "r",
            "median condition number",
            &series,
            true,
        ),
    )?;
    written.extend([kappa_svg, kappa_data]);
    Ok(written)
}
