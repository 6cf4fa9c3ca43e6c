use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use uam_contact::harness::{self, RunLog, Scenario};
use uam_contact::scheduler::region::{region_grid, regions_explicit, write_bitmap_csv, write_regions_csv};
use uam_contact::scheduler::{GainBox, RegionParams};

#[derive(Parser)]
#[command(name = "uam-contact", about = "Aerial manipulator contact simulation and gain scheduling")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write `<name>.csv` and `<name>.events.csv`.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario duration, s.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Print post-settling metrics for a logged run.
    Metrics {
        log: PathBuf,
        #[arg(long, default_value_t = 3.0)]
        settle: f64,
    },
    /// Time grid against explicit region computation.
    BenchScheduler {
        #[arg(long, value_delimiter = ',', default_value = "50,75,100,125,150,175")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value = "bench.csv")]
        out: PathBuf,
    },
    /// Write the three region polygons for one environment.
    RegionExport {
        #[arg(long, default_value_t = 200.0)]
        k_e: f64,
        #[arg(long, default_value_t = 0.5)]
        b_e: f64,
        #[arg(long, default_value_t = 4.0)]
        mass: f64,
        #[arg(long, default_value = "regions.csv")]
        out: PathBuf,
        /// Also write raw-inequality grid bitmaps at this resolution, one
        /// `<out stem>.<condition>.grid.csv` per condition.
        #[arg(long)]
        bitmap: Option<usize>,
    },
    /// Run several scenarios in parallel.
    Sweep {
        scenarios: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 3.0)]
        settle: f64,
        /// Extra seeds per scenario.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.cmd {
        Cmd::Run { scenario, out, seed, duration } => {
            let mut sc = Scenario::load(&scenario)?;
            if let Some(s) = seed {
                sc.seed = s;
            }
            if let Some(d) = duration {
                sc.duration = d;
                sc.validate()?;
            }
            let log = harness::run(&sc)?;
            log.save(&out)?;
            println!("{} rows, {} events -> {}", log.rows.len(), log.events.len(), out.display());
        }
        Cmd::Metrics { log, settle } => {
            let rows = RunLog::read_csv(std::fs::File::open(&log)?)?;
            let events_path = log.with_extension("events.csv");
            let events = match std::fs::File::open(&events_path) {
                Ok(f) => RunLog::read_events_csv(f)?,
                Err(_) => Vec::new(),
            };
            let run = RunLog { rows, events, ..RunLog::default() };
            print!("{}", harness::metrics(&run, settle).to_key_values());
        }
        Cmd::BenchScheduler { n, reps, out } => {
            let p = RegionParams::with_env(200.0, 0.5, 4.0);
            let rows = harness::bench_scheduler(&n, reps, &p, &GainBox::default());
            for r in &rows {
                println!("N={} grid={:.3e}s explicit={:.3e}s ratio={:.1}", r.n, r.grid_median_s, r.explicit_median_s, r.ratio);
            }
            if rows.len() >= 2 {
                println!("exponent={:.3}", harness::fit_scaling_exponent(&rows));
            }
            harness::write_bench_csv(&rows, std::fs::File::create(&out)?)?;
        }
        Cmd::RegionExport { k_e, b_e, mass, out, bitmap } => {
            let p = RegionParams::with_env(k_e, b_e, mass);
            let gb = GainBox::default();
            let regions = regions_explicit(&p, &gb)?;
            for r in &regions {
                println!("{} area={:.4} vertices={}", r.condition, r.area, r.vertices.len());
            }
            write_regions_csv(&regions, std::fs::File::create(&out)?)?;
            if let Some(n) = bitmap {
                let stem = out.file_stem().map_or("regions".into(), |s| s.to_string_lossy().into_owned());
                for r in &regions {
                    let path = out.with_file_name(format!("{stem}.{}.grid.csv", r.condition));
                    write_bitmap_csv(&region_grid(r.condition, &p, &gb, n), &gb, std::fs::File::create(path)?)?;
                }
            }
        }
        Cmd::Sweep { scenarios, out, settle, seeds } => {
            let mut all = Vec::new();
            for path in &scenarios {
                let base = Scenario::load(path)?;
                for k in 0..seeds.max(1) {
                    let mut sc = base.clone();
                    sc.seed = base.seed + k;
                    if k > 0 {
                        sc.name = format!("{}-s{}", base.name, sc.seed);
                    }
                    all.push(sc);
                }
            }
            for r in harness::sweep(&all, Some(&out), settle) {
                match r.outcome {
                    Ok(m) => println!(
                        "{} force_rms={:.4} motion_rms={:.4} breaks={}",
                        r.scenario, m.force_rms, m.motion_rms, m.breaks_after_settle
                    ),
                    Err(e) => println!("{} error: {e}", r.scenario),
                }
            }
        }
    }
    Ok(())
}
