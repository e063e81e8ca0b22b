use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evfleet::fleet::config::LoadedConfig;
use evfleet::fleet::gps::{compare_filters, demo_drive, ingest_gps, synth_gps_with_truth, write_gps, FilterSpec};
use evfleet::fleet::pipeline::{run_until, Stage};
use evfleet::fleet::report::load_report;
use evfleet::fleet::{emit_report, FleetError, RunReport, ScenarioConfig};

#[derive(Parser)]
#[command(name = "evfleet", version, about = "Energy-aware routing and charge scheduling for an EV fleet")]
struct Cli {
    /// Scenario config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "EVFLEET_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smooth a GPS log, or compare both filters on a synthetic drive.
    Filter {
        /// `t_s,v_mps` CSV; without it a seeded synthetic drive is used.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Noise of the synthetic drive (m/s).
        #[arg(long, default_value_t = 1.0)]
        noise_sd: f64,
    },
    /// Build the energy graph and write it as a matrix.
    EnergyMatrix,
    /// Energy graph plus routing.
    Route,
    /// Full pipeline: routes, charge schedule, degradation.
    Schedule,
    /// Re-render report files from a saved solution.json.
    Report {
        #[arg(long)]
        from: PathBuf,
    },
    /// Every scenario in a directory, plus the filter comparison.
    DemoCaseStudy {
        #[arg(long)]
        scenarios: Option<PathBuf>,
    },
}

fn load(cli: &Cli) -> Result<LoadedConfig, FleetError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| FleetError::Config("--config is required for this command".into()))?;
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.config.seed = seed;
    }
    Ok(cfg)
}

fn write(path: &Path, body: &str) -> Result<(), FleetError> {
    std::fs::write(path, body).map_err(|e| FleetError::Io(format!("{}: {e}", path.display())))
}

fn mkdir(path: &Path) -> Result<(), FleetError> {
    std::fs::create_dir_all(path).map_err(|e| FleetError::Io(format!("{}: {e}", path.display())))
}

fn profile_csv(p: &evfleet::energy::SpeedProfile) -> Result<String, FleetError> {
    let mut buf = Vec::new();
    write_gps(p, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

const SG: FilterSpec = FilterSpec::SavitzkyGolay {
    window: 21,
    poly_order: 3,
};
const KALMAN: FilterSpec = FilterSpec::Kalman {
    process_var: 1.0,
    meas_var: 1.0,
};

fn filter(out: &Path, input: Option<&Path>, noise_sd: f64, seed: u64) -> Result<String, FleetError> {
    mkdir(out)?;
    let (noisy, clean) = match input {
        Some(p) => {
            let raw = ingest_gps(p)?;
            (raw.clone(), None)
        }
        None => {
            let (n, c) = synth_gps_with_truth(&demo_drive(seed, noise_sd))?;
            (n, Some(c))
        }
    };
    let sg = evfleet::fleet::gps::apply_filter(&noisy, &SG)?;
    let kf = evfleet::fleet::gps::apply_filter(&noisy, &KALMAN)?;
    write(&out.join("raw.csv"), &profile_csv(&noisy)?)?;
    write(&out.join("savitzky_golay.csv"), &profile_csv(&sg)?)?;
    write(&out.join("kalman.csv"), &profile_csv(&kf)?)?;
    let Some(clean) = clean else {
        return Ok(format!("filtered {} samples into {}\n", noisy.len(), out.display()));
    };
    write(&out.join("clean.csv"), &profile_csv(&clean)?)?;
    let (c, _, _) = compare_filters(&noisy, &clean, SG, KALMAN)?;
    let table = format!(
        "method,rms_error_mps\nraw,{}\nsavitzky_golay,{}\nkalman,{}\n",
        c.raw_rms, c.savitzky_golay_rms, c.kalman_rms
    );
    write(&out.join("filter_comparison.csv"), &table)?;
    Ok(format!(
        "filter comparison on {} samples (seed {seed}, noise {noise_sd} m/s): raw {:.4}, savitzky-golay {:.4}, kalman {:.4}\n",
        c.samples, c.raw_rms, c.savitzky_golay_rms, c.kalman_rms
    ))
}

fn emit(report: &RunReport, out: &Path) -> Result<String, FleetError> {
    emit_report(report, out)?;
    std::fs::read_to_string(out.join("summary.txt")).map_err(|e| FleetError::Io(e.to_string()))
}

fn default_scenarios() -> PathBuf {
    let local = PathBuf::from("scenarios/case_study");
    if local.is_dir() {
        local
    } else {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/case_study")
    }
}

fn demo(cli: &Cli, dir: &Path) -> Result<String, FleetError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| FleetError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(FleetError::Config(format!("no scenario files in {}", dir.display())));
    }
    let out = &cli.out_dir;
    mkdir(out)?;
    let seed = cli.seed.unwrap_or(1);
    let mut text = filter(&out.join("filter"), None, 1.0, seed)?;
    let mut overview = String::from(
        "scenario,routes,route_kwh,objective,tariff,degradation,mean_dod,fleet_cycle_life\n",
    );
    for p in &paths {
        let mut cfg = ScenarioConfig::load(p)?;
        if let Some(s) = cli.seed {
            cfg.config.seed = s;
        }
        let report = run_until(&cfg, Stage::Schedule)?;
        let name = cfg.config.name.clone();
        emit_report(&report, &out.join(&name))?;
        let r = report.routing.as_ref().expect("routing ran");
        let s = report.schedule.as_ref().expect("schedule ran");
        let c = &s.result.cost;
        let ld: f64 = c.per_vehicle.iter().map(|v| v.loss_dod).sum();
        let life = if ld > 0.0 { (c.per_vehicle.len() as f64 / ld).to_string() } else { String::new() };
        writeln!(
            overview,
            "{name},{},{},{},{},{},{},{life}",
            r.solution.routes.len(),
            r.solution.total_energy_kwh,
            c.objective,
            c.tariff,
            c.degradation,
            c.mean_dod()
        )
        .expect("string write");
        writeln!(
            text,
            "{name}: {} routes, {:.3} kWh, objective {:.4}, mean DOD {:.4}",
            r.solution.routes.len(),
            r.solution.total_energy_kwh,
            c.objective,
            c.mean_dod()
        )
        .expect("string write");
    }
    write(&out.join("overview.csv"), &overview)?;
    Ok(text)
}

fn run(cli: &Cli) -> Result<String, FleetError> {
    let out = &cli.out_dir;
    match &cli.command {
        Command::Filter { input, noise_sd } => {
            filter(out, input.as_deref(), *noise_sd, cli.seed.unwrap_or(1))
        }
        Command::EnergyMatrix => {
            let report = run_until(&load(cli)?, Stage::Energy)?;
            mkdir(out)?;
            let mut buf = Vec::new();
            let graph = &report.energy.as_ref().expect("energy ran").graph;
            graph.energy_matrix().write_csv(&mut buf).map_err(|e| FleetError::stage("energy", e))?;
            write(&out.join("energy_matrix.csv"), &String::from_utf8_lossy(&buf))?;
            let mut buf = Vec::new();
            graph.time_matrix().write_csv(&mut buf).map_err(|e| FleetError::stage("energy", e))?;
            write(&out.join("time_matrix.csv"), &String::from_utf8_lossy(&buf))?;
            Ok(format!("{} nodes written to {}\n", graph.len(), out.display()))
        }
        Command::Route => emit(&run_until(&load(cli)?, Stage::Routing)?, out),
        Command::Schedule => emit(&run_until(&load(cli)?, Stage::Schedule)?, out),
        Command::Report { from } => emit(&load_report(from)?, out),
        Command::DemoCaseStudy { scenarios } => {
            let dir = scenarios.clone().unwrap_or_else(default_scenarios);
            demo(cli, &dir)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
