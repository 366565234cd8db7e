use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use betacap::capacity::{
    cap_dirichlet_grid, closed_form, discretize, solve_dirichlet_grid, solve_equilibrium,
    CapacityMethod, CompactSetSpec,
};
use betacap::harness::{self, exit_code, fresh_output_dir, ReportFormat};
use betacap::operator::beta_for_symbol;
use betacap::symbols::Symbol;
use betacap::weights::{coef_weights, WeightSpec};
use clap::{Parser, Subcommand};
use serde_json::json;

const CONFIG_ERROR: u8 = 2;
const NUMERIC_ERROR: u8 = 1;

/// Singular values of composition operators against Green capacities.
///
/// Thread count comes from BETACAP_THREADS (default: all cores).
#[derive(Parser)]
#[command(name = "betacap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Output {
    /// Write into a fresh timestamped directory under this path instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// json, csv or text.
    #[arg(long, global = true, default_value = "text")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficient weights w_0..w_n of a space.
    Weights {
        /// hardy, bergman, dirichlet or alpha(x).
        spec: String,
        n_max: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Approximation numbers and their geometric decay rate.
    Beta {
        /// Composition chain, e.g. "auto(0.5)*dil(0.5)".
        symbol: String,
        #[arg(long, default_value = "hardy")]
        weights: String,
        #[arg(long = "N", default_value_t = 128)]
        n: usize,
        /// Double N until the truncation tail bound certifies.
        #[arg(long)]
        refine: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Green capacity of a set: disk(c,r), phdisk(c,r), segment(a,b) or image(<symbol>).
    Capacity {
        set: String,
        #[arg(long, default_value = "closed_form")]
        method: String,
        /// Boundary panels for the equilibrium solver.
        #[arg(long = "M", default_value_t = 512)]
        m: usize,
        /// Grid spacing, decimal or 1/n.
        #[arg(long, default_value = "1/256")]
        h: String,
        /// Dump the grid solution (x,y,u) to this file.
        #[arg(long)]
        grid_csv: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Run every experiment of a config file and write reports.
    Verify {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        match self {
            Failure::Config(m) => {
                eprintln!("error: {m}");
                ExitCode::from(CONFIG_ERROR)
            }
            Failure::Numeric(m) => {
                eprintln!("numerical failure: {m}");
                ExitCode::from(NUMERIC_ERROR)
            }
        }
    }
}

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn numeric<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Numeric(e.to_string())
}

fn parse_spacing(v: &str) -> Option<f64> {
    match v.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => v.trim().parse().ok(),
    }
}

fn write_output(
    out: &Option<PathBuf>,
    stem: &str,
    format: ReportFormat,
    body: &[u8],
) -> Result<(), Failure> {
    match out {
        None => {
            print!("{}", String::from_utf8_lossy(body));
            Ok(())
        }
        Some(base) => {
            let dir = fresh_output_dir(base).map_err(config)?;
            let file = dir.join(format!("{stem}.{}", format.extension()));
            fs::write(&file, body).map_err(config)?;
            println!("{}", file.display());
            Ok(())
        }
    }
}

fn pretty(v: serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(&v).expect("json value");
    s.push('\n');
    s.into_bytes()
}

fn weights_cmd(spec: &str, n_max: usize, out: &Output) -> Result<(), Failure> {
    let format: ReportFormat = out.format.parse().map_err(config)?;
    let spec: WeightSpec = spec.parse().map_err(config)?;
    let w = coef_weights(&spec, n_max).map_err(numeric)?;
    let body = match format {
        ReportFormat::Json => pretty(json!({ "spec": spec.to_string(), "weights": w.values() })),
        ReportFormat::Csv => w.to_csv().into_bytes(),
        ReportFormat::Text => w
            .values()
            .iter()
            .enumerate()
            .map(|(n, v)| format!("w_{n} = {v:.12e}\n"))
            .collect::<String>()
            .into_bytes(),
    };
    write_output(&out.out, "weights", format, &body)
}

fn beta_cmd(
    symbol: &str,
    weights: &str,
    n: usize,
    refine: bool,
    out: &Output,
) -> Result<(), Failure> {
    let format: ReportFormat = out.format.parse().map_err(config)?;
    let symbol: Symbol = symbol.parse().map_err(config)?;
    let spec: WeightSpec = weights.parse().map_err(config)?;
    let run = beta_for_symbol(&symbol, &spec, n, refine).map_err(numeric)?;
    let body = match format {
        ReportFormat::Json => pretty(json!({
            "symbol": symbol.to_string(),
            "weights": spec.to_string(),
            "N": run.order,
            "tail_bound": run.tail_bound,
            "certified": run.certified,
            "estimate": run.estimate,
            "spectrum": run.spectrum.values,
        })),
        ReportFormat::Csv => run.spectrum.to_csv().into_bytes(),
        ReportFormat::Text => format!(
            "symbol {symbol}\nweights {spec}\nN {}\nbeta {:.10}\nfit window n={}..{}, slope stderr {:.2e}, R^2 {:.10}\ntail bound {:.2e} ({})\n",
            run.order,
            run.estimate.beta,
            run.estimate.window.0,
            run.estimate.window.1,
            run.estimate.slope_stderr,
            run.estimate.fit_r2,
            run.tail_bound,
            if run.certified { "certified" } else { "not certified" },
        )
        .into_bytes(),
    };
    write_output(&out.out, "beta", format, &body)
}

fn capacity_cmd(
    set: &str,
    method: &str,
    m: usize,
    h: &str,
    grid_csv: &Option<PathBuf>,
    out: &Output,
) -> Result<(), Failure> {
    let format: ReportFormat = out.format.parse().map_err(config)?;
    let set: CompactSetSpec = set.parse().map_err(config)?;
    let method: CapacityMethod = method.parse().map_err(config)?;
    let h = parse_spacing(h).ok_or_else(|| Failure::Config(format!("bad grid spacing `{h}`")))?;
    let mut frostman = None;
    let est = match method {
        CapacityMethod::ClosedForm => closed_form(&set).map_err(numeric)?,
        CapacityMethod::Equilibrium => {
            let p = discretize(&set, m).map_err(numeric)?;
            let sol = solve_equilibrium(&p).map_err(numeric)?;
            frostman = Some(sol.frostman_residual);
            sol.estimate()
        }
        CapacityMethod::Grid => cap_dirichlet_grid(&set, h).map_err(numeric)?,
    };
    if let Some(path) = grid_csv {
        let sol = solve_dirichlet_grid(&set, h, None).map_err(numeric)?;
        fs::write(path, sol.to_csv()).map_err(config)?;
    }
    let body = match format {
        ReportFormat::Json => pretty(json!({
            "set": set.to_string(),
            "estimate": est,
            "frostman_residual": frostman,
        })),
        ReportFormat::Csv => format!(
            "set,method,cap,m_value,error_indicator\n\"{set}\",{},{},{},{}\n",
            est.method, est.value, est.m_value, est.error_indicator
        )
        .into_bytes(),
        ReportFormat::Text => {
            let mut s = format!(
                "set {set}\nmethod {}\ncap {:.10}\nM(cap) {:.10}\nerror indicator {:.2e}\n",
                est.method, est.value, est.m_value, est.error_indicator
            );
            if let Some(r) = frostman {
                s.push_str(&format!("Frostman residual {r:.2e}\n"));
            }
            s.into_bytes()
        }
    };
    write_output(&out.out, "capacity", format, &body)
}

fn verify_cmd(path: &Path, out: &Output) -> Result<ExitCode, Failure> {
    let format: ReportFormat = out.format.parse().map_err(config)?;
    let base = out.out.clone().unwrap_or_else(|| PathBuf::from("reports"));
    let outcome = harness::run_suite(path, &base, format).map_err(config)?;
    for r in &outcome.reports {
        print!(
            "{}",
            String::from_utf8_lossy(&harness::emit_report(r, ReportFormat::Text))
        );
    }
    println!("reports written to {}", outcome.dir.display());
    Ok(ExitCode::from(exit_code(&outcome.reports) as u8))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("BETACAP_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                return Failure::Config(format!(
                    "BETACAP_THREADS must be a positive integer, got `{v}`"
                ))
                .exit()
            }
        }
    }
    let result = match &cli.command {
        Command::Weights {
            spec,
            n_max,
            output,
        } => weights_cmd(spec, *n_max, output).map(|_| ExitCode::SUCCESS),
        Command::Beta {
            symbol,
            weights,
            n,
            refine,
            output,
        } => beta_cmd(symbol, weights, *n, *refine, output).map(|_| ExitCode::SUCCESS),
        Command::Capacity {
            set,
            method,
            m,
            h,
            grid_csv,
            output,
        } => capacity_cmd(set, method, *m, h, grid_csv, output).map(|_| ExitCode::SUCCESS),
        Command::Verify { config, output } => verify_cmd(config, output),
    };
    result.unwrap_or_else(Failure::exit)
}
