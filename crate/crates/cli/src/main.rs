use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pa_harq_cli::eval::{evaluate, OPERATIONS};
use pa_harq_cli::runner::run;
use pa_harq_cli::{write_csv, Figure, Method, Overrides, SweepSpec};

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "pa-harq", version, about = "Outage-constrained power allocation for predictor-antenna HARQ")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SweepArgs {
    /// TOML file with flat keys; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for Monte Carlo rows (row i uses seed + i).
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per row.
    #[arg(long)]
    trials: Option<u64>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict the sweep to one solution path.
    #[arg(long, value_enum)]
    method: Option<Method>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimised average power versus outage target.
    Fig3(SweepArgs),
    /// Equal-power retransmission versus outage target.
    Fig4(SweepArgs),
    /// Optimised average power versus vehicle speed.
    Fig5(SweepArgs),
    /// Gain over single-shot transmission at the headline operating point.
    Headline(SweepArgs),
    /// Every closed form against its Monte Carlo estimate.
    McVerify(SweepArgs),
    /// Evaluate one operation: `eval <op> key=value ...`.
    Eval {
        op: String,
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sweep(figure: Figure, args: &SweepArgs) -> anyhow::Result<SweepSpec> {
    let mut spec = match &args.config {
        Some(path) => SweepSpec::load(path, figure)?,
        None => SweepSpec::defaults(figure),
    };
    spec.apply(&Overrides { seed: args.seed, n_trials: args.trials, out: args.out.clone(), method: args.method });
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (figure, args) = match &cli.command {
        Command::Fig3(a) => (Figure::Fig3, a),
        Command::Fig4(a) => (Figure::Fig4, a),
        Command::Fig5(a) => (Figure::Fig5, a),
        Command::Headline(a) => (Figure::Headline, a),
        Command::McVerify(a) => (Figure::McVerify, a),
        Command::Eval { op, params, out } => return run_eval(op, params, out.as_ref()),
    };
    let spec = match sweep(figure, args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let rows = run(&spec);
    let written = output(spec.out.as_ref()).map_err(anyhow::Error::from).and_then(|w| Ok(write_csv(w, &rows)?));
    if let Err(e) = written {
        eprintln!("error: writing output: {e:#}");
        return ExitCode::from(EXIT_USAGE);
    }
    let failed = rows.iter().filter(|r| r.is_error()).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows could not be computed; see the error column", rows.len());
        return ExitCode::from(EXIT_INFEASIBLE);
    }
    ExitCode::SUCCESS
}

fn run_eval(op: &str, params: &[String], out: Option<&PathBuf>) -> ExitCode {
    if op == "list" {
        for (name, keys) in OPERATIONS {
            println!("{name:<18} {keys}");
        }
        return ExitCode::SUCCESS;
    }
    let values = match evaluate(op, params) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let written = output(out).map_err(anyhow::Error::from).and_then(|w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["quantity", "value"])?;
        for (k, v) in &values {
            w.write_record([k.clone(), format!("{v:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    });
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: writing output: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
