use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use rydgate::atomic::{LaserAxis, SpeciesTable};
use rydgate::experiments::{
    error_budget, protocol_table, sweep, PulseKind, SweepContext, SweepSpec,
};
use rydgate::grape::{find_time_optimal, robustify_vdw, PulseSchedule};
use rydgate::hamiltonian::NoiseConfig;
use rydgate::io::{
    read_json, write_budget_csv, write_json, write_protocols_csv, write_scan_csv, write_sweep_csv,
    DerivedParameters, Echo, Resolved, RunConfig,
};
use rydgate::units::to_um;
use rydgate::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "rydgate",
    version,
    about = "Long-range Rydberg iSWAP gate simulator and pulse optimizer"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of the configuration file (or the defaults).
#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration, or the config.json echoed by an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Omega_max/J (dimensionless). Replaces any distance from the config.
    #[arg(long, global = true)]
    ratio: Option<f64>,
    /// Interatomic distance in um. Replaces any ratio from the config.
    #[arg(long, global = true, conflicts_with = "ratio")]
    r_um: Option<f64>,
    /// Principal quantum number.
    #[arg(long, global = true)]
    n: Option<u32>,
    /// Omega_max / 2pi in MHz.
    #[arg(long, global = true)]
    omega_max_mhz: Option<f64>,
    /// Laser propagation axis, x or z.
    #[arg(long, global = true)]
    laser_axis: Option<LaserAxis>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Shortest noiseless pulse, optionally made robust against vdW shifts.
    Optimize {
        #[arg(long)]
        robust_vdw: bool,
    },
    /// Per-channel error budget of a pulse file.
    Budget {
        #[arg(long)]
        pulse: PathBuf,
        /// The pulse was optimized against the vdW shifts.
        #[arg(long)]
        robust_vdw: bool,
    },
    /// All-noise infidelity over a parameter grid.
    Sweep {
        /// JSON sweep specification.
        #[arg(long)]
        spec: PathBuf,
        /// Pulse for grids that keep it fixed; synthesized when absent.
        #[arg(long)]
        pulse: Option<PathBuf>,
    },
    /// pi-J-pi and constant-pulse baselines over the configured ratio grid.
    Protocols {
        /// Comma-separated Omega_max/J values replacing the configured grid.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
    },
    /// Print the derived parameters of the configuration.
    Info,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Dimension(_) => 2,
        Error::Numeric(_) | Error::Optimizer(_) => 3,
        Error::Io { .. } | Error::Parse { .. } => 4,
    }
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        // a config that does not parse is a configuration error, not an I/O one
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Parse { .. } => Error::Config(e.to_string()),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    if let Some(r) = c.ratio {
        cfg.ratio = Some(r);
        cfg.r_um = None;
    }
    if let Some(r) = c.r_um {
        cfg.r_um = Some(r);
        cfg.ratio = None;
    }
    if let Some(n) = c.n {
        cfg.n = n;
    }
    if let Some(w) = c.omega_max_mhz {
        cfg.omega_max_mhz = w;
    }
    if let Some(a) = c.laser_axis {
        cfg.laser_axis = a;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    cfg.optimizer.seed = cfg.seed;
    cfg.validate()?;
    Ok(cfg)
}

struct Run {
    cfg: RunConfig,
    table: SpeciesTable,
    resolved: Resolved,
    out: PathBuf,
}

impl Run {
    fn new(cfg: RunConfig) -> Result<Self> {
        let table = SpeciesTable::from_env_or_bundled()?;
        let resolved = cfg.resolve(&table)?;
        let out = cfg.out_dir.clone();
        Ok(Self {
            cfg,
            table,
            resolved,
            out,
        })
    }

    fn echo(&self) -> Result<Echo> {
        Ok(Echo {
            config: self.cfg.clone(),
            derived: DerivedParameters::new(&self.resolved.model, &self.cfg.budget)?,
        })
    }

    fn prepare_out(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        write_json(&self.path("config.json"), &self.echo()?)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn stamp(&self, pulse: &mut PulseSchedule) {
        pulse.meta.species = self.cfg.species.clone();
        pulse.meta.n = self.cfg.n;
        pulse.meta.r_um = to_um(self.resolved.r);
    }
}

fn optimize(run: &Run, robust: bool) -> Result<()> {
    run.prepare_out()?;
    let opts = run.cfg.optimizer_options();
    let clean = run.resolved.model.clone().with_noise(NoiseConfig::none());
    info!(
        "time-optimal search at Omega_max/J = {:.6}",
        run.resolved.ratio
    );
    let mut to = find_time_optimal(run.resolved.ratio, &clean, &opts)?;
    run.stamp(&mut to.report.pulse);
    write_scan_csv(&run.path("scan.csv"), run.resolved.ratio, &to.scan)?;
    write_json(&run.path("report_time_optimal.json"), &to)?;
    to.report.pulse.save(&run.path("pulse_time_optimal.json"))?;
    println!(
        "time-optimal T*Omega_max = {} (1-F = {:.3e})",
        to.duration, to.report.cost
    );
    let mut final_pulse = to.report.pulse.clone();
    if robust {
        let model = clean.with_noise(NoiseConfig::vdw_only());
        let mut r = robustify_vdw(&to.report.pulse, &model, &opts)?;
        run.stamp(&mut r.report.pulse);
        write_json(&run.path("report_robust.json"), &r)?;
        r.report.pulse.save(&run.path("pulse_robust.json"))?;
        println!(
            "vdW-robust T*Omega_max = {} (1-F with vdW = {:.3e})",
            r.duration, r.report.cost
        );
        final_pulse = r.report.pulse;
    }
    final_pulse.save(&run.path("pulse.json"))
}

fn budget(run: &Run, pulse_path: &Path, robust: bool) -> Result<()> {
    let pulse = PulseSchedule::load(pulse_path)?;
    run.prepare_out()?;
    let kind = if robust {
        PulseKind::VdwRobust
    } else {
        PulseKind::TimeOptimal
    };
    let id = pulse_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let report = error_budget(&pulse, &run.resolved.model, kind, &id, &run.cfg.budget)?;
    write_json(&run.path("budget.json"), &report)?;
    write_budget_csv(&run.path("budget.csv"), &report)?;
    for r in &report.rows {
        match (r.infidelity, &r.error) {
            (Some(v), _) => println!(
                "{:<28} {:.3e}  (excess {:.3e})",
                r.channel.id(),
                v,
                r.excess.unwrap_or(0.0)
            ),
            (None, Some(e)) => println!("{:<28} failed: {e}", r.channel.id()),
            _ => {}
        }
    }
    Ok(())
}

fn run_sweep(run: &Run, spec_path: &Path, pulse: Option<&Path>) -> Result<()> {
    let spec: SweepSpec = read_json(spec_path)?;
    let pulse = pulse.map(PulseSchedule::load).transpose()?;
    run.prepare_out()?;
    let ctx = SweepContext {
        base: run.resolved.model.clone(),
        species: run.cfg.species.clone(),
        table: run.table.clone(),
        optimizer: run.cfg.optimizer_options(),
        budget: run.cfg.budget.clone(),
        pulse,
    };
    let rows = sweep(&spec, &ctx)?;
    write_json(&run.path("sweep.json"), &rows)?;
    write_sweep_csv(&run.path("sweep.csv"), spec.variable, &rows)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} rows written, {failed} failed", rows.len());
    Ok(())
}

fn protocols(run: &Run, ratios: Option<&[f64]>) -> Result<()> {
    let ratios = ratios.unwrap_or(&run.cfg.protocol_ratios);
    run.prepare_out()?;
    let rows = protocol_table(&run.resolved.model, ratios)?;
    write_protocols_csv(&run.path("protocols.csv"), &rows)?;
    for r in &rows {
        println!(
            "ratio {:<8} piJpi T*Omega = {:<10.4} 1-F = {}  magic T*Omega = {}",
            r.ratio,
            r.pi_j_pi_duration,
            r.pi_j_pi_infidelity
                .map(|v| format!("{v:.3e}"))
                .unwrap_or("-".into()),
            r.magic_time
                .map(|v| format!("{v:.2}"))
                .unwrap_or("none".into()),
        );
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(j) = cli.common.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))?;
    }
    let mut cfg = load_config(&cli.common)?;
    if let Command::Optimize { robust_vdw: true } = cli.command {
        cfg.robust_vdw = true;
    }
    let run = Run::new(cfg)?;
    match &cli.command {
        Command::Optimize { .. } => optimize(&run, run.cfg.robust_vdw),
        Command::Budget { pulse, robust_vdw } => budget(&run, pulse, *robust_vdw),
        Command::Sweep { spec, pulse } => run_sweep(&run, spec, pulse.as_deref()),
        Command::Protocols { ratios } => protocols(&run, ratios.as_deref()),
        Command::Info => {
            let text =
                serde_json::to_string_pretty(&run.echo()?).map_err(|e| Error::parse("info", e))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
