use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dynmatch::gen::{gen_stream, StreamKind};
use dynmatch::graph::{parse_stream, write_stream, UpdateEvent};
use dynmatch::harness::{bench, run, Algo, RunConfig};

#[derive(Parser)]
#[command(name = "dynmatch", version, about = "Dynamic approximate matching: stream generation, runs and benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a seeded update stream.
    Gen {
        #[arg(long, default_value = "erdos-renyi-dynamic")]
        kind: StreamKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a pipeline and write per-step metrics.
    Run(RunArgs),
    /// Per-step work of amortized vs scheduled runs.
    Bench(RunArgs),
    /// Run with verification at every step (unless --verify-every says otherwise).
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "damaged-edcs")]
    algo: Algo,
    /// Stream file; a stream is generated from --kind/--n/--steps when absent.
    #[arg(long)]
    stream: Option<PathBuf>,
    #[arg(long, default_value = "erdos-renyi-dynamic")]
    kind: StreamKind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long = "L")]
    l: Option<usize>,
    /// Guess growth factor of the vertex reduction.
    #[arg(long)]
    growth: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    verify_every: Option<usize>,
    /// Assert the strict approximation bound (EDCS algorithms).
    #[arg(long)]
    strict: bool,
    /// Metrics CSV path; stdout when absent.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self, default_verify: usize) -> RunConfig {
        let mut c = RunConfig::new(self.algo);
        c.beta = self.beta.unwrap_or(c.beta);
        c.lambda = self.lambda.unwrap_or(c.lambda);
        c.delta = self.delta.unwrap_or(c.delta);
        c.eps = self.eps.unwrap_or(c.eps);
        c.c = self.c.unwrap_or(c.c);
        c.k = self.k;
        c.l = self.l;
        c.growth = self.growth;
        c.seed = self.seed;
        c.verify_every = self.verify_every.unwrap_or(default_verify);
        c.strict = self.strict;
        c
    }

    fn stream(&self) -> Result<(usize, Vec<UpdateEvent>)> {
        if let Some(path) = &self.stream {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let (n, events) = parse_stream(&text)?;
            if self.n.is_some_and(|m| m != n) {
                bail!("--n {} disagrees with the stream header {n}", self.n.unwrap());
            }
            return Ok((n, events));
        }
        let Some(n) = self.n else { bail!("either --stream or --n is required") };
        Ok((n, gen_stream(self.kind, n, self.steps, self.seed)))
    }
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_cmd(args: &RunArgs, default_verify: usize) -> Result<ExitCode> {
    let cfg = args.config(default_verify);
    let (n, events) = args.stream()?;
    let out = run(&cfg, n, &events)?;
    emit(args.metrics.as_ref(), &out.csv())?;
    if let Some(r) = out.max_ratio {
        eprintln!("max checked ratio {r:.6}");
    }
    Ok(match out.failure {
        Some(f) => {
            eprintln!("invariant violated at {f}");
            ExitCode::FAILURE
        }
        None => ExitCode::SUCCESS,
    })
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Gen { kind, n, steps, seed, out } => {
            emit(out.as_ref(), &write_stream(n, &gen_stream(kind, n, steps, seed)))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run(a) => run_cmd(&a, 0),
        Cmd::Verify(a) => run_cmd(&a, 1),
        Cmd::Bench(a) => {
            let cfg = a.config(0);
            let (n, events) = a.stream()?;
            let (am, sc) = bench(&cfg, n, &events)?;
            emit(a.metrics.as_ref(), &format!("{}\n{}\n", am.to_text(), sc.to_text()))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
