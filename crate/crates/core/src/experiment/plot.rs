//! Minimal SVG charts plus an equivalent gnuplot script over the CSV output.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{ExperimentError, HopRow, ResultRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    LossVsLoad,
    LossByCause,
    Fairness,
    Utilization,
    Sweep,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] = [
        PlotKind::LossVsLoad,
        PlotKind::LossByCause,
        PlotKind::Fairness,
        PlotKind::Utilization,
        PlotKind::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::LossVsLoad => "loss_vs_load",
            PlotKind::LossByCause => "loss_by_cause",
            PlotKind::Fairness => "fairness",
            PlotKind::Utilization => "utilization",
            PlotKind::Sweep => "sweep",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| format!("unknown plot kind `{s}`"))
    }
}

/// One line of a panel, with the CSV filter that reproduces it in gnuplot.
struct Series {
    label: String,
    dashed: bool,
    points: Vec<(f64, f64)>,
    awk_filter: String,
}

struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    log_y: bool,
    y_column: usize,
    x_column: usize,
    hops_file: bool,
    series: Vec<Series>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

const PANEL_W: f64 = 620.0;
const PANEL_H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn short_rate(bps: u64) -> String {
    if bps.is_multiple_of(1_000_000_000) {
        format!("{}G", bps / 1_000_000_000)
    } else {
        format!("{}M", bps / 1_000_000)
    }
}

fn variant_label(r: &ResultRow) -> String {
    format!(
        "W={} B={}Mb C={}",
        r.wavelengths,
        r.mean_burst_bits as f64 / 1e6,
        short_rate(r.control_bit_rate)
    )
}

/// Groups aggregate rows into series keyed by topology, architecture and variant.
fn group_rows(rows: &[ResultRow], y: fn(&ResultRow) -> f64, with_variant: bool) -> Vec<(Vec<String>, Series)> {
    let topologies: Vec<&str> = {
        let mut t: Vec<&str> = rows.iter().map(|r| r.topology.as_str()).collect();
        t.dedup();
        t
    };
    let multi_variant = {
        let first = rows.first().map(variant_label);
        rows.iter().any(|r| Some(variant_label(r)) != first)
    };
    let mut groups: BTreeMap<Vec<String>, Series> = BTreeMap::new();
    for r in rows {
        let mut label = vec![r.topology.clone(), r.arch.clone()];
        if with_variant || multi_variant {
            label.push(variant_label(r));
        }
        let s = groups.entry(label.clone()).or_insert_with(|| Series {
            label: label.join(" "),
            dashed: topologies.iter().position(|t| *t == r.topology).unwrap_or(0) % 2 == 1,
            points: Vec::new(),
            awk_filter: format!(
                "$2==\"{}\" && $3==\"{}\" && $5==\"{}\" && $7==\"{}\" && $8==\"{}\" && $9==\"*\"",
                r.topology, r.arch, r.wavelengths, r.mean_burst_bits, r.control_bit_rate
            ),
        });
        s.points.push((r.load, y(r)));
    }
    groups.into_iter().collect()
}

fn panels(kind: PlotKind, rows: &[ResultRow], hops: &[HopRow]) -> Result<Vec<Panel>, ExperimentError> {
    let agg: Vec<ResultRow> = rows.iter().filter(|r| r.seed.is_none()).cloned().collect();
    let missing = |what: &str| ExperimentError::MissingColumns {
        kind,
        what: what.to_string(),
    };
    if kind != PlotKind::Fairness && agg.is_empty() {
        return Err(missing("aggregate rows (seed = *)"));
    }
    let load_panel =
        |title: &str, y_label: &str, log_y: bool, col: usize, y: fn(&ResultRow) -> f64, variant: bool| Panel {
            title: title.to_string(),
            x_label: "offered load (Erlang per link, normalized)".into(),
            y_label: y_label.to_string(),
            log_y,
            x_column: 4,
            y_column: col,
            hops_file: false,
            series: group_rows(&agg, y, variant).into_iter().map(|(_, s)| s).collect(),
        };
    Ok(match kind {
        PlotKind::LossVsLoad => vec![load_panel(
            "Burst loss",
            "loss probability",
            true,
            12,
            |r| r.loss_total,
            false,
        )],
        PlotKind::Sweep => vec![load_panel(
            "Parameter sweep",
            "loss probability",
            true,
            12,
            |r| r.loss_total,
            true,
        )],
        PlotKind::LossByCause => vec![
            load_panel(
                "Loss by burst contention",
                "loss probability",
                true,
                13,
                |r| r.loss_burst,
                false,
            ),
            load_panel(
                "Loss by BCP contention",
                "loss probability",
                true,
                14,
                |r| r.loss_bcp,
                false,
            ),
        ],
        PlotKind::Utilization => vec![
            load_panel(
                "Useful utilization",
                "fraction of capacity",
                false,
                15,
                |r| r.utilization,
                false,
            ),
            load_panel(
                "Wasted reservations",
                "fraction of capacity",
                false,
                16,
                |r| r.utilization_wasted,
                false,
            ),
        ],
        PlotKind::Fairness => {
            if hops.is_empty() {
                return Err(missing("per-hop rows (hops_remaining, loss)"));
            }
            let mut groups: BTreeMap<(String, String, String), Series> = BTreeMap::new();
            let first_topo = hops[0].topology.clone();
            for h in hops {
                let load = format!("{:.3}", h.load);
                let s = groups
                    .entry((h.topology.clone(), h.arch.clone(), load.clone()))
                    .or_insert_with(|| Series {
                        label: format!("{} {} load {}", h.topology, h.arch, load),
                        dashed: h.topology != first_topo,
                        points: Vec::new(),
                        awk_filter: format!(
                            "$2==\"{}\" && $3==\"{}\" && $4==\"{}\" && $5==\"{}\" && $7==\"{}\" && $8==\"{}\"",
                            h.topology, h.arch, load, h.wavelengths, h.mean_burst_bits, h.control_bit_rate
                        ),
                    });
                s.points.push((h.hops_remaining as f64, h.loss));
            }
            vec![Panel {
                title: "Loss by remaining hops".into(),
                x_label: "hops remaining to egress".into(),
                y_label: "loss probability".into(),
                log_y: false,
                x_column: 9,
                y_column: 12,
                hops_file: true,
                series: groups.into_values().collect(),
            }]
        }
    })
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let vals: Vec<f64> = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .map(|v| if log { v.log10() } else { v })
            .collect();
        if vals.is_empty() {
            return if log {
                Axis { lo: -6.0, hi: 0.0, log }
            } else {
                Axis { lo: 0.0, hi: 1.0, log }
            };
        }
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if log {
            let (lo, hi) = (min.floor(), max.ceil());
            if lo == hi {
                Axis {
                    lo: lo - 1.0,
                    hi: hi + 1.0,
                    log,
                }
            } else {
                Axis { lo, hi, log }
            }
        } else if min == max {
            let pad = if min == 0.0 { 1.0 } else { min.abs() * 0.5 };
            Axis {
                lo: min - pad,
                hi: max + pad,
                log,
            }
        } else {
            let pad = (max - min) * 0.05;
            Axis {
                lo: if min >= 0.0 && min - pad < 0.0 { 0.0 } else { min - pad },
                hi: max + pad,
                log,
            }
        }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            (self.lo as i32..=self.hi as i32)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect()
        } else {
            (0..=5)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 5.0;
                    (v, format!("{v:.3}"))
                })
                .collect()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_panel(svg: &mut String, p: &Panel, x0: f64) {
    let xa = Axis::fit(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0)), false);
    let ya = Axis::fit(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.1)), p.log_y);
    let (pw, ph) = (PANEL_W - LEFT - RIGHT, PANEL_H - TOP - BOTTOM);
    let px = |v: f64| xa.frac(v).map(|f| x0 + LEFT + f * pw);
    let py = |v: f64| ya.frac(v).map(|f| TOP + ph - f * ph);

    let _ = writeln!(
        svg,
        r#"<rect x="{:.1}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#,
        x0 + LEFT
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        x0 + LEFT + pw / 2.0,
        escape(&p.title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
        x0 + LEFT + pw / 2.0,
        PANEL_H - 15.0,
        escape(&p.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        x0 + 18.0,
        TOP + ph / 2.0,
        x0 + 18.0,
        TOP + ph / 2.0,
        escape(&p.y_label)
    );
    for (v, label) in xa.ticks() {
        if let Some(x) = px(v) {
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="10">{label}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0
            );
        }
    }
    for (v, label) in ya.ticks() {
        if let Some(y) = py(v) {
            let _ = writeln!(
                svg,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{label}</text>"##,
                x0 + LEFT,
                x0 + LEFT + pw,
                x0 + LEFT - 6.0,
                y + 3.0
            );
        }
    }
    for (i, s) in p.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().filter_map(|&(x, y)| Some((px(x)?, py(y)?))).collect();
        if pts.len() >= 2 {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                path.join(" ")
            );
        }
        for (x, y) in &pts {
            let _ = writeln!(svg, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{color}"/>"#);
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = x0 + LEFT + pw + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{}/><text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
            lx + 20.0,
            if s.dashed { r#" stroke-dasharray="4,3""# } else { "" },
            lx + 24.0,
            ly + 3.0,
            escape(&s.label)
        );
    }
}

fn gnuplot_script(panels: &[Panel], csv_name: &str, hops_name: &str, svg_name: &str) -> String {
    let mut g = String::new();
    let _ = writeln!(g, "set datafile separator \",\"");
    let _ = writeln!(
        g,
        "set terminal svg size {},{} dynamic",
        PANEL_W as u32 * panels.len() as u32,
        PANEL_H as u32
    );
    let _ = writeln!(g, "set output \"{svg_name}\"");
    let _ = writeln!(g, "set key outside right");
    if panels.len() > 1 {
        let _ = writeln!(g, "set multiplot layout 1,{}", panels.len());
    }
    for p in panels {
        let _ = writeln!(g, "set title \"{}\"", p.title);
        let _ = writeln!(g, "set xlabel \"{}\"", p.x_label);
        let _ = writeln!(g, "set ylabel \"{}\"", p.y_label);
        let _ = writeln!(g, "{}", if p.log_y { "set logscale y" } else { "unset logscale y" });
        let file = if p.hops_file { hops_name } else { csv_name };
        let lines: Vec<String> = p
            .series
            .iter()
            .enumerate()
            .map(|(i, s)| {
                format!(
                    "  \"< awk -F, '{}' {file}\" using {}:{} with linespoints lc {} dt {} title \"{}\"",
                    s.awk_filter,
                    p.x_column,
                    p.y_column,
                    i + 1,
                    if s.dashed { 2 } else { 1 },
                    s.label
                )
            })
            .collect();
        let _ = writeln!(g, "plot \\\n{}", lines.join(", \\\n"));
    }
    if panels.len() > 1 {
        let _ = writeln!(g, "unset multiplot");
    }
    g
}

/// Writes `<stem>.svg` and `<stem>.plot` into `dir`. The script reads
/// `<stem>.csv` and `<stem>_hops.csv` from the same directory.
pub fn emit_plot(
    kind: PlotKind,
    rows: &[ResultRow],
    hops: &[HopRow],
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf), ExperimentError> {
    let panels = panels(kind, rows, hops)?;
    let width = PANEL_W * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut svg, p, PANEL_W * i as f64);
    }
    svg.push_str("</svg>\n");

    let svg_path = dir.join(format!("{stem}.svg"));
    let script_path = dir.join(format!("{stem}.plot"));
    let script = gnuplot_script(
        &panels,
        &format!("{stem}.csv"),
        &format!("{stem}_hops.csv"),
        &format!("{stem}_gnuplot.svg"),
    );
    for (path, body) in [(&svg_path, &svg), (&script_path, &script)] {
        std::fs::write(path, body).map_err(|e| ExperimentError::Output {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }
    Ok((svg_path, script_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agg(topology: &str, arch: &str, load: f64, loss: f64) -> ResultRow {
        ResultRow {
            scenario: "t".into(),
            topology: topology.into(),
            arch: arch.into(),
            load,
            wavelengths: 32,
            control_wavelengths: 1,
            mean_burst_bits: 1_000_000,
            control_bit_rate: 10_000_000_000,
            seed: None,
            offered: 1.0,
            delivered: 1.0,
            loss_total: loss,
            loss_burst: loss / 2.0,
            loss_bcp: loss / 2.0,
            utilization: 0.4,
            utilization_wasted: 0.0,
            mean_delay_ps: 1.0,
            ci: None,
            failure: None,
        }
    }

    #[test]
    fn kinds_parse() {
        for k in PlotKind::ALL {
            assert_eq!(k.as_str().parse::<PlotKind>().unwrap(), k);
        }
        assert!("pie".parse::<PlotKind>().is_err());
    }

    #[test]
    fn single_point_series_renders_a_marker() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![agg("nsfnet", "c-obs", 0.5, 1e-3)];
        let (svg, script) = emit_plot(PlotKind::LossVsLoad, &rows, &[], dir.path(), "one").unwrap();
        let text = std::fs::read_to_string(svg).unwrap();
        assert!(text.contains("<circle"));
        assert!(!text.contains("<polyline"));
        let g = std::fs::read_to_string(script).unwrap();
        assert!(g.contains("one.csv") && g.contains("using 4:12"));
    }

    #[test]
    fn lines_and_zero_values_on_log_axis() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            agg("nsfnet", "l-obs", 0.1, 0.0),
            agg("nsfnet", "l-obs", 0.2, 1e-5),
            agg("nsfnet", "l-obs", 0.3, 1e-3),
            agg("torus6x6", "l-obs", 0.3, 1e-3),
        ];
        let (svg, _) = emit_plot(PlotKind::LossByCause, &rows, &[], dir.path(), "two").unwrap();
        let text = std::fs::read_to_string(svg).unwrap();
        assert_eq!(text.matches("<polyline").count(), 2);
        assert!(text.contains("stroke-dasharray"));
    }

    #[test]
    fn fairness_needs_hop_rows() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![agg("nsfnet", "c-obs", 0.5, 1e-3)];
        let e = emit_plot(PlotKind::Fairness, &rows, &[], dir.path(), "f").unwrap_err();
        assert!(matches!(e, ExperimentError::MissingColumns { .. }));
        let e = emit_plot(PlotKind::Utilization, &[], &[], dir.path(), "u").unwrap_err();
        assert!(e.to_string().contains("aggregate rows"));
        assert!(!dir.path().join("u.svg").exists());
    }
}
