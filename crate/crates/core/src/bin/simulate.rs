use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use obs_sim::experiment::{self, Scenario};
use obs_sim::network::{find_overlap, write_reservation_log};

/// Run an optical burst switching scenario and write CSV tables and plots.
#[derive(Parser, Debug)]
#[command(name = "simulate", version)]
struct Args {
    /// Scenario file; its keys override the preset, if any.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario: fig2, fig3, fig4, fig5 or fig6.
    #[arg(long)]
    preset: Option<String>,
    /// Master seed; replication r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// 10^5 bursts x 3 replications instead of the configured scale.
    #[arg(long)]
    quick: bool,
    /// Print the effective scenario in config-file form and exit.
    #[arg(long)]
    print_config: bool,
    /// Also run the first cell with reservation logging and write the log here.
    #[arg(long)]
    reservation_log: Option<PathBuf>,
}

fn scenario(args: &Args) -> Result<Scenario> {
    let mut s = match &args.preset {
        Some(p) => experiment::preset(p)?,
        None => Scenario::default(),
    };
    if let Some(path) = &args.config {
        s = experiment::load_config(path, s).with_context(|| format!("in {}", path.display()))?;
    } else if args.preset.is_none() {
        bail!("either --config or --preset is required");
    }
    if let Some(seed) = args.seed {
        s.master_seed = seed;
    }
    if args.quick {
        s = s.quick();
    }
    Ok(s)
}

fn main() -> Result<ExitCode> {
    let args = Args::parse();
    let s = scenario(&args)?;
    if args.print_config {
        print!("{}", experiment::scenario_to_config(&s));
        return Ok(ExitCode::SUCCESS);
    }
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    if let Some(path) = &args.reservation_log {
        let (_, out) = experiment::traced_first_cell(&s)?;
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_reservation_log(&out.reservation_log, file)?;
        if let Some((a, b)) = find_overlap(&out.reservation_log) {
            bail!("overlapping reservations: {a:?} and {b:?}");
        }
        eprintln!("wrote {} reservations to {}", out.reservation_log.len(), path.display());
    }

    eprintln!("{}: {} cells on {} thread(s)", s.name, s.cell_count(), args.jobs);
    let result = experiment::run_scenario(&s, args.jobs)?;
    let rows = result.rows();
    let hops = result.hop_rows();
    let csv = args.out.join(format!("{}.csv", s.name));
    experiment::emit_csv(&rows, &csv)?;
    if !hops.is_empty() {
        experiment::emit_hops_csv(&hops, &args.out.join(format!("{}_hops.csv", s.name)))?;
    }
    let (svg, _) = experiment::emit_plot(s.plot, &rows, &hops, &args.out, &s.name)?;
    eprintln!("wrote {} and {}", csv.display(), svg.display());

    let audit = result.total_audit();
    if audit.violations() > 0 {
        eprintln!("timing audit: {audit:?}");
    }
    let failed = result.failed_cells();
    for p in result.points.iter().filter(|p| p.failure.is_some()) {
        eprintln!(
            "failed: {} {} load {}: {}",
            p.key.topology,
            p.key.arch,
            p.key.load,
            p.failure.as_deref().unwrap_or_default()
        );
    }
    Ok(if failed > 0 || audit.violations() > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}
