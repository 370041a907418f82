mod config;
mod csv;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use oamhop::analytics::{aber_union_bound, se_for};
use oamhop::sim::{run_point, sweep, SweepRow};
use oamhop::validate::{run_suite, Fault, ValidateOptions};
use oamhop::{Error, JamVariant};

use config::RunConfig;
use csv::{num, opt, Table};

const SCHEMA_ANALYTIC: &str = "oamhop-analytic/1";
const SCHEMA_SIMULATE: &str = "oamhop-simulate/1";
const SCHEMA_SWEEP: &str = "oamhop-sweep/1";

#[derive(Parser)]
#[command(name = "oamhop", version, about = "IM-MH / IM-DSMH OAM mode-hopping analytics and simulation")]
struct Cli {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the jam-probability variant.
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantArg>,
    /// Worker threads for the simulator (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Union-bound ABER and SE bound over the SNR grid.
    Analytic,
    /// Monte Carlo BER over the SNR grid.
    Simulate,
    /// Evaluate the `[sweep]` axis at every SNR grid point.
    Sweep,
    /// Run the built-in oracle suite.
    Validate {
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Print the effective configuration with all defaults filled in.
    Config,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Normalized,
    PaperLiteral,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipRhoSign,
}

/// Failure classes with their exit codes.
enum Failure {
    Config(anyhow::Error),
    Validation(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(anyhow::Error::from)?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(v) = cli.variant {
        cfg.variant = match v {
            VariantArg::Normalized => JamVariant::Normalized,
            VariantArg::PaperLiteral => JamVariant::PaperLiteral,
        };
    }
    let (text, status) = match &cli.command {
        Command::Analytic => (analytic(&cfg)?, Ok(())),
        Command::Simulate => (simulate(&cfg)?, Ok(())),
        Command::Sweep => (sweep_cmd(&cfg)?, Ok(())),
        Command::Validate { inject_fault } => validate(cli.seed, *inject_fault),
        Command::Config => (cfg.to_toml()?, Ok(())),
    };
    match &cli.out {
        Some(p) => std::fs::write(p, &text)
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display()))?,
        None => print!("{text}"),
    }
    status
}

fn table(schema: &str, columns: &'static [&'static str], cfg: &RunConfig) -> Result<Table, Failure> {
    let mut t = Table::new(schema, columns);
    t.meta("config_sha256", cfg.digest()?);
    t.meta("seed", cfg.seed);
    t.meta("variant", cfg.variant.as_str());
    t.meta("jnr_linear", num(10f64.powf(cfg.jnr_db / 10.0)));
    t.meta("mean_channel_power", num(cfg.system(cfg.snr_db[0])?.mean_channel_power()));
    Ok(t)
}

fn params(cfg: &RunConfig, snr: f64, noise_var: f64, jam_var: f64) -> Vec<String> {
    vec![
        cfg.scheme.as_str().into(),
        cfg.n.to_string(),
        cfg.i.to_string(),
        cfg.u.to_string(),
        cfg.m.to_string(),
        num(cfg.xi),
        num(snr),
        num(cfg.jnr_db),
        num(cfg.sigma_eps_sq),
        num(noise_var),
        num(jam_var),
    ]
}

const PARAMS: [&str; 11] =
    ["scheme", "n", "i", "u", "m", "xi", "snr_db", "jnr_db", "sigma_eps_sq", "noise_var", "jam_var"];

fn analytic(cfg: &RunConfig) -> Result<String, Failure> {
    const COLS: &[&str] = &[
        "scheme", "n", "i", "u", "m", "xi", "snr_db", "jnr_db", "sigma_eps_sq", "noise_var", "jam_var",
        "aber_bound", "aber_exceeds_one", "se", "se_signal", "se_index", "csi", "variant",
    ];
    debug_assert_eq!(COLS[..PARAMS.len()], PARAMS);
    let mut t = table(SCHEMA_ANALYTIC, COLS, cfg)?;
    for &snr in &cfg.snr_db {
        let sys = cfg.system(snr)?;
        let a = aber_union_bound(&sys, cfg.scheme, sys.csi(), cfg.variant)?;
        let se = se_for(&sys, cfg.scheme, cfg.variant)?;
        let mut row = params(cfg, snr, sys.noise_var, sys.jam_var);
        row.extend([
            num(a.value),
            a.exceeds_one.to_string(),
            num(se.value),
            num(se.signal_part),
            num(se.index_part),
            a.csi.as_str().into(),
            cfg.variant.as_str().into(),
        ]);
        t.push(row);
    }
    Ok(t.render())
}

fn simulate(cfg: &RunConfig) -> Result<String, Failure> {
    const COLS: &[&str] = &[
        "scheme", "n", "i", "u", "m", "xi", "snr_db", "jnr_db", "sigma_eps_sq", "noise_var", "jam_var",
        "ber", "ci95", "trials", "errors", "bits", "reliable", "residual_jam_ratio",
    ];
    let mut t = table(SCHEMA_SIMULATE, COLS, cfg)?;
    t.meta("target_errors", cfg.sim.target_errors);
    t.meta("max_trials", cfg.sim.max_trials);
    for &snr in &cfg.snr_db {
        let sys = cfg.system(snr)?;
        let (noise, jam) = (sys.noise_var, sys.jam_var);
        let est = run_point(&cfg.plan(sys)?)?;
        let mut row = params(cfg, snr, noise, jam);
        row.extend([
            num(est.ber),
            num(est.ci95),
            est.trials.to_string(),
            est.bit_errors.to_string(),
            est.bits_total.to_string(),
            est.reliable.to_string(),
            opt(est.max_residual_jam_ratio),
        ]);
        t.push(row);
    }
    Ok(t.render())
}

fn sweep_cmd(cfg: &RunConfig) -> Result<String, Failure> {
    const COLS: &[&str] = &[
        "axis", "value", "scheme", "n", "i", "u", "m", "xi", "snr_db", "jnr_db", "sigma_eps_sq",
        "noise_var", "jam_var", "aber_bound", "se", "ber", "ci95", "trials", "errors", "reliable",
    ];
    let Some(settings) = &cfg.sweep else {
        return Err(anyhow::anyhow!("invalid `sweep`: the config has no [sweep] section").into());
    };
    let mut points = Vec::new();
    let mut resolved = Vec::new();
    for &value in &settings.values {
        let at = cfg.with_axis(settings.axis, value);
        at.check()?;
        for &snr in &at.snr_db {
            points.push((value, at.plan(at.system(snr)?)?));
            resolved.push((at.clone(), snr));
        }
    }
    let rows: Vec<SweepRow> = sweep(&points, settings.axis, cfg.variant, settings.simulate)?;
    let mut t = table(SCHEMA_SWEEP, COLS, cfg)?;
    t.meta("simulate", settings.simulate);
    for (r, (at, snr)) in rows.iter().zip(&resolved) {
        let mut row = vec![settings.axis.as_str().to_string(), num(r.value)];
        row.extend(params(at, *snr, r.plan.cfg.noise_var, r.plan.cfg.jam_var));
        row.extend([opt(r.aber.as_ref().map(|a| a.value)), opt(r.se.as_ref().map(|s| s.value))]);
        match &r.ber {
            Some(b) => row.extend([
                num(b.ber),
                num(b.ci95),
                b.trials.to_string(),
                b.bit_errors.to_string(),
                b.reliable.to_string(),
            ]),
            None => row.extend(std::iter::repeat_n(String::new(), 5)),
        }
        t.push(row);
    }
    Ok(t.render())
}

/// The suite keeps its own fixed seed unless `--seed` is given.
fn validate(seed: Option<u64>, fault: Option<FaultArg>) -> (String, Result<(), Failure>) {
    let defaults = ValidateOptions::default();
    let opts = ValidateOptions {
        fault: fault.map(|f| match f {
            FaultArg::FlipRhoSign => Fault::FlipRhoSign,
        }),
        seed: seed.unwrap_or(defaults.seed),
        ..defaults
    };
    let results = run_suite(&opts);
    let mut text = String::new();
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        text += &format!("{status} {} [{}]: {}\n", r.name, r.tolerance, r.detail);
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    text += &format!("{} of {} checks passed\n", results.len() - failed.len(), results.len());
    let status = if failed.is_empty() { Ok(()) } else { Err(Failure::Validation(failed.join("; "))) };
    (text, status)
}
