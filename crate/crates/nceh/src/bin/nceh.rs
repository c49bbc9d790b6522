use clap::{Args, Parser, Subcommand};
use nceh::config::{GridSpec, RunConfig};
use nceh::suite::{cmd_residue, cmd_table, cmd_verify, init_thread_pool};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nceh",
    about = "Numerical verification of the Eguchi-Hanson spin geometry and its torus-deformed operator algebra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Instanton scale a > 0
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Deformation parameter
    #[arg(long, default_value_t = 0.25)]
    theta: f64,
    /// Grid NRxNTxNPxNS
    #[arg(long, default_value = "32x24x16x16")]
    grid: String,
    /// Override a tolerance, KEY=VALUE (repeatable)
    #[arg(long = "tol", value_name = "KEY=VAL")]
    tol: Vec<String>,
    /// RNG seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Mode cutoff
    #[arg(long, default_value_t = 3)]
    modes: u32,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<String>,
    /// Output format
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run every verification suite and emit the machine-readable report
    Verify(CommonOpts),
    /// Emit a CSV table comparing a closed form with its oracle
    Table {
        #[command(flatten)]
        common: CommonOpts,
        /// metric | christoffel | spin_connection | propagator
        #[arg(long)]
        what: String,
    },
    /// Residue and trace-consistency report
    Residue {
        #[command(flatten)]
        common: CommonOpts,
        /// Custom function as JSON mode-term list
        #[arg(long)]
        custom_f: Option<String>,
        /// Comma-separated list of scales for the ratio-constancy sweep
        #[arg(long)]
        a_sweep: Option<String>,
    },
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<_> = s.split('x').collect();
    if parts.len() != 4 {
        return Err(format!("grid must be NRxNTxNPxNS, got '{s}'"));
    }
    let mut nums = [0usize; 4];
    for (i, p) in parts.iter().enumerate() {
        nums[i] = p.parse().map_err(|_| format!("bad grid component '{p}'"))?;
    }
    Ok(GridSpec { n_r: nums[0], n_theta: nums[1], n_phi: nums[2], n_psi: nums[3] })
}

fn build_config(opts: &CommonOpts) -> Result<RunConfig, String> {
    let mut cfg = RunConfig {
        a: opts.a,
        theta_def: opts.theta,
        grid: parse_grid(&opts.grid)?,
        rng_seed: opts.seed,
        mode_cutoff: opts.modes,
        out: opts.out.clone(),
        ..RunConfig::default()
    };
    for kv in &opts.tol {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("tolerance override must be KEY=VAL, got '{kv}'"))?;
        let val: f64 = v.parse().map_err(|_| format!("bad tolerance value '{v}'"))?;
        cfg.tolerances.insert(k.to_string(), val);
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn emit(out: &Option<String>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match cli.command {
        Command::Verify(opts) => {
            let cfg = match build_config(&opts) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let report = match cmd_verify(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let body = match opts.format.as_str() {
                "json" => report.to_json(),
                "csv" => {
                    let mut s = String::from("id,anchor,residual,tolerance,pass\n");
                    for c in &report.checks {
                        s.push_str(&format!(
                            "{},{},{:.3e},{:.3e},{}\n",
                            c.id, c.anchor, c.residual, c.tolerance, c.pass
                        ));
                    }
                    s
                }
                other => {
                    eprintln!("config error: unknown format '{other}'");
                    return ExitCode::from(2);
                }
            };
            if emit(&opts.out, &body).is_err() {
                eprintln!("failed to write output");
                return ExitCode::from(2);
            }
            for c in &report.checks {
                eprintln!(
                    "{} {:<34} [{}] residual {:.3e} (tol {:.1e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.id,
                    c.anchor,
                    c.residual,
                    c.tolerance
                );
            }
            eprintln!(
                "{} / {} checks passed",
                report.summary.passed, report.summary.total
            );
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Table { common, what } => {
            let cfg = match build_config(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            match cmd_table(&cfg, &what) {
                Ok(csv) => {
                    if emit(&common.out, &csv).is_err() {
                        eprintln!("failed to write output");
                        return ExitCode::from(2);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("config error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Residue { common, custom_f, a_sweep } => {
            let cfg = match build_config(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            let sweep: Option<Vec<f64>> = match a_sweep {
                Some(s) => {
                    let parsed: Result<Vec<f64>, _> =
                        s.split(',').map(|x| x.trim().parse::<f64>()).collect();
                    match parsed {
                        Ok(v) => Some(v),
                        Err(_) => {
                            eprintln!("config error: bad --a-sweep list '{s}'");
                            return ExitCode::from(2);
                        }
                    }
                }
                None => None,
            };
            match cmd_residue(&cfg, custom_f.as_deref(), sweep.as_deref()) {
                Ok(value) => {
                    let mut body = serde_json::to_string_pretty(&value).unwrap();
                    body.push('\n');
                    if emit(&common.out, &body).is_err() {
                        eprintln!("failed to write output");
                        return ExitCode::from(2);
                    }
                    // consistency gate: trace-theorem rows must pass
                    let ok = value["functions"]
                        .as_array()
                        .map(|rows| {
                            rows.iter().all(|r| {
                                r["trace_relerr"].as_f64().unwrap_or(f64::INFINITY) <= 1e-5
                            })
                        })
                        .unwrap_or(false);
                    if ok {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("config error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
