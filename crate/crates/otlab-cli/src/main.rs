//! otlab command line: parameter solving, analytic bounds, simulation
//! campaigns and the Crepeau attack demonstration.
//!
//! Exit status: 0 on success with every measurement within its bound,
//! 1 when any campaign verdict is BoundViolated, 2 on configuration or
//! usage errors.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use otlab::crepeau::{crepeau_attack_bound, crepeau_attack_exact, CrepeauConfig};
use otlab::ech::{ech_alice_bound, ech_bob_bound, ech_failure_bound, EchConfig};
use otlab::ot12::{ot12_alice_bound, ot12_bob_bound, ot12_failure_bound, Ot12Config};
use otlab::params::{
    derive_parameter_set, solve_big_n, validate_parameter_set, x_residual, X_RESIDUAL_TOL,
};
use otlab::sim::{
    compare_to_bound, reports_to_csv, reports_to_jsonl, run_trials_with_threads, wilson_interval,
    EstimateReport, Verdict, Z95,
};

use config::{validate_campaign, CampaignConfig, OutputFormat, Protocol};

#[derive(Parser)]
#[command(
    name = "otlab",
    about = "Simulation laboratory for 1-out-of-2 oblivious transfer over a flawed all-or-nothing primitive",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Security parameter derivation.
    Params {
        #[command(subcommand)]
        command: ParamsCommand,
    },
    /// Print every analytic bound for a protocol configuration.
    Bounds {
        /// JSON file with a protocol-tagged configuration.
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a Monte Carlo campaign from a config file.
    Simulate {
        #[command(subcommand)]
        command: SimulateCommand,
    },
    /// Attack demonstrations.
    Attack {
        #[command(subcommand)]
        command: AttackCommand,
    },
}

#[derive(Subcommand)]
enum ParamsCommand {
    /// Derive (c, beta, x, xi, alpha, N) for a target epsilon.
    Solve {
        /// Cheating probability target in (0, 1).
        #[arg(long)]
        epsilon: f64,
        /// Emit JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Campaign config file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override the config's output format.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Also dump per-trial transcript records to this file.
    #[arg(long)]
    transcripts: Option<PathBuf>,
    /// How many leading trials to dump per scenario.
    #[arg(long, default_value_t = 1)]
    transcript_count: u64,
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Element choosing protocol scenarios.
    Ech(SimulateArgs),
    /// 1-out-of-2 reduction scenarios.
    Ot12(SimulateArgs),
    /// Crepeau reduction scenarios.
    Crepeau(SimulateArgs),
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Measure how often Alice identifies Bob's choice in the Crepeau
    /// reduction with s garbage transfers.
    Crepeau {
        /// Number of transfers Alice sends as garbage.
        #[arg(long)]
        s: usize,
        /// Total transfers (a multiple of 3).
        #[arg(long = "N")]
        big_n: usize,
        /// Message length in bits.
        #[arg(long, default_value_t = 32)]
        ell: u32,
        #[arg(long, default_value_t = 20_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Params { command } => run_params(command),
        Command::Bounds { config } => run_bounds(&config),
        Command::Simulate { command } => match command {
            SimulateCommand::Ech(args) => run_simulate(Protocol::Ech, &args),
            SimulateCommand::Ot12(args) => run_simulate(Protocol::Ot12, &args),
            SimulateCommand::Crepeau(args) => run_simulate(Protocol::Crepeau, &args),
        },
        Command::Attack { command } => run_attack(command),
    };
    match outcome {
        Ok(violated) => {
            if violated {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run_params(command: ParamsCommand) -> Result<bool, String> {
    let ParamsCommand::Solve { epsilon, json } = command;
    let ps = derive_parameter_set(epsilon).map_err(|e| e.to_string())?;
    let report = validate_parameter_set(&ps);
    if json {
        let doc = serde_json::json!({
            "parameter_set": ps,
            "validation": report,
            "x_residual": x_residual(ps.epsilon, ps.c, ps.x),
            "big_n_integer": solve_big_n(ps.c, ps.xi, ps.x).map(|n| n.to_string()).ok(),
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializable")
        );
    } else {
        println!("parameter        value");
        println!("epsilon          {}", ps.epsilon);
        println!("c                {}", ps.c);
        println!("x                {}", ps.x);
        println!("beta             {}", ps.beta);
        println!("xi               {}", ps.xi);
        println!("alpha            {}", ps.alpha);
        println!("N (real)         {:e}", ps.big_n);
        match solve_big_n(ps.c, ps.xi, ps.x) {
            Ok(n) => println!("N (integer)      {n}"),
            Err(e) => println!("N (integer)      unavailable: {e}"),
        }
        println!(
            "x residual       {:e} (tolerance {:e})",
            x_residual(ps.epsilon, ps.c, ps.x),
            X_RESIDUAL_TOL
        );
        if report.is_valid() {
            println!("validation       ok (no violations)");
        } else {
            println!("validation       VIOLATIONS:");
            for v in &report.violations {
                println!("  {}: lhs {} > rhs {}", v.condition, v.lhs, v.rhs);
            }
        }
    }
    Ok(false)
}

/// Schema of the `bounds --config` file.
#[derive(Debug, Deserialize)]
struct BoundsFile {
    version: u32,
    #[serde(flatten)]
    spec: BoundsSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
enum BoundsSpec {
    Ech {
        alpha: f64,
        rounds_x: u32,
        n_t: usize,
        ell: u32,
        #[serde(default)]
        n_a: Option<usize>,
        #[serde(default)]
        n_b: Option<usize>,
    },
    Ot12 {
        c: u32,
        beta: f64,
        big_n: usize,
        alpha: f64,
        rounds_x: u32,
        ell: u32,
    },
    Crepeau {
        big_n: usize,
        s: usize,
        ell: u32,
    },
}

fn run_bounds(path: &Path) -> Result<bool, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
    let file: BoundsFile =
        serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
    if file.version != config::SCHEMA_VERSION {
        return Err(format!(
            "config version: expected {}, got {}",
            config::SCHEMA_VERSION,
            file.version
        ));
    }
    match file.spec {
        BoundsSpec::Ech {
            alpha,
            rounds_x,
            n_t,
            ell,
            n_a,
            n_b,
        } => {
            let cfg = EchConfig::new(alpha, rounds_x, n_t, ell).map_err(|e| e.to_string())?;
            let pf = ech_failure_bound(&cfg);
            println!("element choosing bounds (alpha {alpha}, x {rounds_x}, n_t {n_t})");
            println!("xi                 {}", cfg.xi());
            println!("final count (real) {}", cfg.expected_final_count());
            println!(
                "pf_ech             {} ({})",
                pf.value,
                applicability(pf.applicable)
            );
            if let Some(n_a) = n_a {
                println!("pa_ech (n_a {n_a})     {}", ech_alice_bound(n_a, rounds_x));
            }
            if let Some(n_b) = n_b {
                println!("pb_ech (n_b {n_b})     {}", ech_bob_bound(&cfg, n_b));
            }
        }
        BoundsSpec::Ot12 {
            c,
            beta,
            big_n,
            alpha,
            rounds_x,
            ell,
        } => {
            let cfg =
                Ot12Config::new(c, beta, big_n, alpha, rounds_x, ell).map_err(|e| e.to_string())?;
            let pf = ot12_failure_bound(&cfg);
            let pb = ot12_bob_bound(&cfg);
            println!(
                "1-out-of-2 bounds (c {c}, beta {beta}, N {big_n}, alpha {alpha}, x {rounds_x})"
            );
            println!("receive threshold n  {}", cfg.threshold());
            println!(
                "pf_st                {} ({})",
                pf.value,
                applicability(pf.applicable)
            );
            println!(
                "pa_st                {} (raw; comparisons clamp at 1)",
                ot12_alice_bound(&cfg)
            );
            println!(
                "pb_st                {} ({})",
                pb.value,
                applicability(pb.applicable)
            );
            let ech = cfg.ech_config();
            let pf_ech = ech_failure_bound(&ech);
            println!(
                "embedded pf_ech      {} ({})",
                pf_ech.value,
                applicability(pf_ech.applicable)
            );
        }
        BoundsSpec::Crepeau { big_n, s, ell } => {
            let cfg = CrepeauConfig::new(big_n, s, ell).map_err(|e| e.to_string())?;
            println!("crepeau reduction (N {big_n}, s {s})");
            println!("set size n          {}", cfg.set_size());
            println!("attack probability  >= {}", crepeau_attack_bound(s));
        }
    }
    Ok(false)
}

fn applicability(ok: bool) -> &'static str {
    if ok {
        "conditions hold"
    } else {
        "side conditions violated; value is outside its valid regime"
    }
}

fn worker_threads() -> Result<usize, String> {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match std::env::var("OTLAB_THREADS") {
        Ok(v) => {
            let cap: usize = v
                .parse()
                .map_err(|_| format!("OTLAB_THREADS: expected a positive integer, got {v:?}"))?;
            if cap == 0 {
                return Err("OTLAB_THREADS: must be at least 1".into());
            }
            Ok(cap.min(available).max(1))
        }
        Err(_) => Ok(available),
    }
}

fn run_simulate(protocol: Protocol, args: &SimulateArgs) -> Result<bool, String> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| format!("config {}: {e}", args.config.display()))?;
    let mut campaign: CampaignConfig = serde_json::from_str(&text)
        .map_err(|e| format!("config {}: {e}", args.config.display()))?;
    validate_campaign(&campaign)?;
    for spec in &campaign.scenarios {
        if spec.protocol() != protocol {
            return Err(format!(
                "scenarios: {} is a {} scenario; this is `simulate {protocol}`",
                spec.label(),
                spec.protocol()
            ));
        }
    }

    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err("trials: must be at least 1".into());
        }
        campaign.trials = trials;
    }
    if let Some(seed) = args.seed {
        campaign.master_seed = seed;
    }
    if let Some(path) = &args.output {
        let format = match &args.format {
            Some(f) if f == "json" => OutputFormat::Json,
            Some(_) => OutputFormat::Csv,
            None => campaign
                .output
                .as_ref()
                .map(|o| o.format)
                .unwrap_or(OutputFormat::Csv),
        };
        campaign.output = Some(config::OutputSpec {
            path: path.display().to_string(),
            format,
        });
    } else if let (Some(f), Some(out)) = (&args.format, campaign.output.as_mut()) {
        out.format = if f == "json" {
            OutputFormat::Json
        } else {
            OutputFormat::Csv
        };
    }

    let threads = worker_threads()?;
    let mut reports: Vec<EstimateReport> = Vec::new();
    let mut transcripts = String::new();
    for spec in &campaign.scenarios {
        let (scenario, bound) = spec.lower()?;
        let report =
            run_trials_with_threads(&scenario, campaign.trials, campaign.master_seed, threads)
                .map_err(|e| e.to_string())?;
        let report = match bound {
            Some(b) => compare_to_bound(report, b),
            None => report,
        };
        println!(
            "{}: rate {} [{}, {}] {} {}",
            report.label,
            report.rate,
            report.ci_low,
            report.ci_high,
            report
                .bound
                .map(|b| format!("bound {b}"))
                .unwrap_or_else(|| "no bound".into()),
            report.verdict
        );
        if args.transcripts.is_some() {
            for i in 0..args.transcript_count.min(campaign.trials) {
                let seed = otlab::rng::derive_seed(campaign.master_seed, i);
                transcripts.push_str(&format!(
                    "{}\n",
                    serde_json::json!({"label": report.label, "trial": i})
                ));
                transcripts.push_str(&scenario.trial_records(seed));
            }
        }
        reports.push(report);
    }

    if let Some(out) = &campaign.output {
        let rendered = match out.format {
            OutputFormat::Csv => reports_to_csv(&reports),
            OutputFormat::Json => reports_to_jsonl(&reports),
        };
        write_atomically(Path::new(&out.path), &rendered)?;
        println!("wrote {}", out.path);
    }
    if let Some(path) = &args.transcripts {
        write_atomically(path, &transcripts)?;
        println!("wrote {}", path.display());
    }

    Ok(reports.iter().any(|r| r.verdict == Verdict::BoundViolated))
}

fn run_attack(command: AttackCommand) -> Result<bool, String> {
    let AttackCommand::Crepeau {
        s,
        big_n,
        ell,
        trials,
        seed,
    } = command;
    let cfg = CrepeauConfig::new(big_n, s, ell).map_err(|e| e.to_string())?;
    let estimate = crepeau_attack_exact(&cfg, trials, seed).map_err(|e| e.to_string())?;
    let bound = crepeau_attack_bound(s);

    println!("crepeau reduction under {s} garbage transfers (N {big_n}, {trials} trials)");
    println!("abort rate          {}", estimate.abort_rate);
    match (estimate.attack_rate, estimate.std_err) {
        (Some(rate), Some(se)) => {
            println!("attack rate         {rate} (std err {se})");
            println!("paper bound         >= {bound}");
            let completed = estimate.trials - estimate.aborted;
            let (ci_low, ci_high) =
                wilson_interval(estimate.identified, completed, Z95).map_err(|e| e.to_string())?;
            let report = compare_to_bound(
                EstimateReport {
                    label: format!("crepeau-attack-s{s}"),
                    trials: completed,
                    successes: estimate.identified,
                    rate,
                    ci_low,
                    ci_high,
                    bound: None,
                    verdict: Verdict::NoBound,
                },
                bound,
            );
            match report.verdict {
                Verdict::BoundViolated => {
                    println!(
                        "verdict             BoundViolated: the measured rate exceeds 1-(2/3)^s; \
                         the identification attack is live"
                    );
                    Ok(true)
                }
                v => {
                    println!("verdict             {v}");
                    Ok(false)
                }
            }
        }
        _ => {
            println!("attack rate         undefined (every trial aborted)");
            Ok(false)
        }
    }
}

fn write_atomically(path: &Path, contents: &str) -> Result<(), String> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| format!("output {}: {e}", tmp.display()))?;
    fs::rename(&tmp, path).map_err(|e| format!("output {}: {e}", path.display()))
}
