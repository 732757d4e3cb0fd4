use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};
use twisted_ybe::config::{parse_config, RunConfig};
use twisted_ybe::rmatrix::RMatrixKind;
use twisted_ybe::suite::run_suite;
use twisted_ybe::verify::CHECK_NAMES;

/// Numerical checks for dynamical R-matrices of GL_q(N), SL_q(N) and SL_q(K|N-K).
#[derive(Debug, Parser)]
#[command(name = "twisted-ybe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a check suite from a config file or from flags.
    Check(Box<CheckArgs>),
    /// List supported families and checks.
    Families {
        #[command(subcommand)]
        action: FamiliesAction,
    },
}

#[derive(Debug, Subcommand)]
enum FamiliesAction {
    List,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// TOML run configuration.
    #[arg(long, conflicts_with_all = ["group", "n", "k", "q", "h", "seed", "count", "gauge", "b0", "tol", "checks"])]
    config: Option<PathBuf>,
    /// glq, slq or slq_super.
    #[arg(long)]
    group: Option<String>,
    #[arg(long)]
    n: Option<i64>,
    /// Number of even indices (slq_super only).
    #[arg(long)]
    k: Option<i64>,
    /// Real `2.0` or complex `0.6,0.3`.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    seed: Option<i64>,
    #[arg(long)]
    count: Option<i64>,
    /// unitary or upper_triangular.
    #[arg(long)]
    gauge: Option<String>,
    /// `canonical` or `beta:3,2,1`.
    #[arg(long)]
    b0: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// Comma-separated check names, or `all`.
    #[arg(long)]
    checks: Option<String>,
    /// Report path; `-` prints the JSON report instead of the table.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_floats(text: &str, what: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("{what}: cannot parse '{s}' as a number")))
        .collect()
}

fn flags_to_table(args: &CheckArgs) -> anyhow::Result<Table> {
    let mut t = Table::new();
    let Some(group) = &args.group else {
        bail!("either --config or --group is required");
    };
    t.insert("group".into(), Value::String(group.clone()));
    if let Some(n) = args.n {
        t.insert("N".into(), Value::Integer(n));
    }
    if let Some(k) = args.k {
        t.insert("K".into(), Value::Integer(k));
    }
    if let Some(q) = &args.q {
        let parts = parse_floats(q, "--q")?;
        let value = match parts.as_slice() {
            [x] => Value::Float(*x),
            [x, y] => Value::Array(vec![Value::Float(*x), Value::Float(*y)]),
            _ => bail!("--q: expected 'x' or 're,im'"),
        };
        t.insert("q".into(), value);
    }
    if let Some(h) = args.h {
        t.insert("h".into(), Value::Float(h));
    }
    if let Some(gauge) = &args.gauge {
        t.insert("gauge".into(), Value::String(gauge.clone()));
    }
    if let Some(tol) = args.tol {
        t.insert("tolerance".into(), Value::Float(tol));
    }
    if let Some(checks) = &args.checks {
        let value = if checks == "all" {
            Value::String(checks.clone())
        } else {
            Value::Array(checks.split(',').map(|s| Value::String(s.trim().to_string())).collect())
        };
        t.insert("checks".into(), value);
    }
    if let Some(b0) = &args.b0 {
        let mut b = Table::new();
        match b0.split_once(':') {
            None => {
                b.insert("kind".into(), Value::String(b0.clone()));
            }
            Some(("beta", list)) => {
                b.insert("kind".into(), Value::String("beta".into()));
                let beta = parse_floats(list, "--b0")?;
                b.insert("beta".into(), Value::Array(beta.into_iter().map(Value::Float).collect()));
            }
            Some((kind, _)) => bail!("--b0: unsupported form '{kind}:...'; use 'canonical' or 'beta:x,y,...'"),
        }
        t.insert("b0".into(), Value::Table(b));
    }
    let mut m = Table::new();
    m.insert("seed".into(), Value::Integer(args.seed.unwrap_or(0)));
    if let Some(count) = args.count {
        m.insert("count".into(), Value::Integer(count));
    }
    t.insert("momenta".into(), Value::Table(m));
    Ok(t)
}

fn load_config(args: &CheckArgs) -> anyhow::Result<RunConfig> {
    let cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text)?
        }
        None => RunConfig::from_value(Value::Table(flags_to_table(args)?))?,
    };
    Ok(cfg)
}

fn check(args: CheckArgs) -> ExitCode {
    let cfg = match load_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let report = match run_suite(&cfg) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = args.out.or_else(|| cfg.output.clone());
    match out {
        Some(path) if path.as_os_str() == "-" => print!("{}", report.to_json()),
        Some(path) => {
            print!("{}", report.table());
            if let Err(e) = fs::write(&path, report.to_json()) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{}", report.table()),
    }
    ExitCode::from(report.exit_code() as u8)
}

fn families() {
    println!("builders:");
    for kind in RMatrixKind::ALL {
        println!("  {:<20} {}", kind.name(), kind.description());
    }
    println!("groups:");
    println!("  {:<20} dynamical R(p), any valid b0 and gauge", "glq");
    println!("  {:<20} q^(-1/N) R(p), canonical b0, unitary gauge", "slq");
    println!("  {:<20} q^(1/(N-K)-1/K) R(p), canonical b0, needs K", "slq_super");
    println!("checks:");
    for name in CHECK_NAMES {
        println!("  {name}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check(args) => check(*args),
        Command::Families { action: FamiliesAction::List } => {
            families();
            ExitCode::SUCCESS
        }
    }
}
