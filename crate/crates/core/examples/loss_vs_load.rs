// Total loss of the three architectures over a load sweep on both reference
// topologies, written as CSV plus an SVG chart.
//
// cargo run --release --example loss_vs_load -- [out_dir]

use std::path::{Path, PathBuf};

use obs_sim::experiment::{emit_csv, emit_plot, preset, run_scenario, PlotKind};

pub fn run_example(out_dir: &Path, bursts: u64, loads: Vec<f64>) -> anyhow::Result<PathBuf> {
    let mut s = preset("fig2")?;
    s.loads = loads;
    s.replications = 3;
    s.bursts_per_replication = bursts;
    let result = run_scenario(&s, 1)?;
    for p in &result.points {
        println!(
            "{:<9} {:<6} load {:.2}  loss {:.3e} ± {:.1e}",
            p.key.topology,
            p.key.arch,
            p.key.load,
            p.loss_total.mean,
            p.loss_total.half_width.unwrap_or(0.0)
        );
    }
    let rows = result.rows();
    let csv = out_dir.join("loss_vs_load.csv");
    emit_csv(&rows, &csv)?;
    emit_plot(PlotKind::LossVsLoad, &rows, &[], out_dir, "loss_vs_load")?;
    Ok(csv)
}

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&out)?;
    let csv = run_example(&out, 100_000, vec![0.3, 0.5, 0.7, 0.9])?;
    println!("wrote {}", csv.display());
    Ok(())
}
