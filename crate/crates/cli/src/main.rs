use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use appraisal_core::dynamics::fmt_f64;
use appraisal_core::verify::{run_suite, sample_interior, SuiteName, SuiteReport};
use appraisal_core::{
    alpha_threshold, integrate, solve_equilibrium, support_structure, validate_network, vertex_threshold,
    IntegratorConfig, NetworkModel, RawNetwork, SimplexState,
};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "appraisal", version, about = "Self-appraisal dynamics on weighted rooted digraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check admissibility and print the root set.
    Validate { network: PathBuf },
    /// Print the supporting layers, path coefficients and thresholds of a vertex.
    Analyze {
        network: PathBuf,
        #[arg(long)]
        vertex: usize,
    },
    /// Integrate the flow and write the trajectory as CSV.
    Simulate {
        network: PathBuf,
        /// `uniform`, `random:SEED`, or comma-separated values.
        #[arg(long, default_value = "uniform")]
        x0: String,
        #[arg(long, default_value_t = 200.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 1)]
        record_every: usize,
        /// Stop once the field norm drops below the convergence tolerance.
        #[arg(long)]
        stop_on_convergence: bool,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the non-vertex equilibrium and report its spectrum.
    Equilibrium {
        network: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run randomized verification suites.
    Verify {
        /// Suite name or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<NetworkModel> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let raw = RawNetwork::from_json_str(&text).with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(validate_network(&raw)?)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => Ok(io::stdout().write_all(bytes)?),
    }
}

fn list(xs: &[usize]) -> String {
    let items: Vec<String> = xs.iter().map(usize::to_string).collect();
    format!("[{}]", items.join(","))
}

fn parse_x0(spec: &str, n: usize) -> Result<SimplexState> {
    if spec == "uniform" {
        return Ok(SimplexState::uniform(n));
    }
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed: u64 = seed.parse().with_context(|| format!("bad seed `{seed}`"))?;
        return Ok(sample_interior(&mut ChaCha8Rng::seed_from_u64(seed), n));
    }
    let values = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad x0 entry `{s}`")))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != n {
        bail!("x0 has {} entries, network has {n} vertices", values.len());
    }
    Ok(SimplexState::new(values)?)
}

fn analyze(model: &NetworkModel, vertex: usize) -> Result<String> {
    let s = support_structure(model, vertex)?;
    let mut out = String::new();
    out.push_str(&format!("vertex: {vertex}\n"));
    for k in 0..=s.max_depth() {
        out.push_str(&format!("S({k}) = {}  D({k}) = {}\n", list(&s.layer(k)), list(s.difference(k))));
    }
    out.push_str("j,k,alpha\n");
    for (j, a) in s.alpha_entries() {
        out.push_str(&format!("{j},{},{}\n", s.depth_of(j).unwrap_or_default(), fmt_f64(a)));
    }
    out.push_str(&format!("alpha(n) = {}\n", fmt_f64(alpha_threshold(model.n())?)));
    out.push_str(&format!("alpha_i = {}\n", fmt_f64(vertex_threshold(model, vertex))));
    Ok(out)
}

fn verify(suite: &str, count: usize, seed: u64, json: Option<&Path>) -> Result<()> {
    let names: Vec<SuiteName> = if suite == "all" {
        SuiteName::ALL.to_vec()
    } else {
        vec![suite.parse()?]
    };
    let reports: Vec<SuiteReport> = names.into_iter().map(|s| run_suite(s, count, seed)).collect();
    for r in &reports {
        println!(
            "{}: {} cases, {} checks, {} failures",
            r.suite,
            r.cases,
            r.checks,
            r.failures.len()
        );
    }
    if let Some(p) = json {
        let text = if reports.len() == 1 {
            reports[0].to_json()
        } else {
            serde_json::to_string_pretty(&reports)?
        };
        fs::write(p, text + "\n").with_context(|| format!("cannot write {}", p.display()))?;
    }
    let failed: usize = reports.iter().map(|r| r.failures.len()).sum();
    if failed > 0 {
        bail!("{failed} verification failures");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { network } => {
            let model = load(&network)?;
            println!("rooted: true, roots: {}", list(model.roots()));
        }
        Command::Analyze { network, vertex } => {
            let model = load(&network)?;
            print!("{}", analyze(&model, vertex)?);
        }
        Command::Simulate {
            network,
            x0,
            horizon,
            step,
            record_every,
            stop_on_convergence,
            out,
        } => {
            let model = load(&network)?;
            let x0 = parse_x0(&x0, model.n())?;
            let cfg = IntegratorConfig {
                step,
                horizon,
                record_every,
                stop_on_convergence,
                ..IntegratorConfig::default()
            };
            let traj = integrate(&model, &x0, &cfg)?;
            let mut buf = Vec::new();
            traj.write_csv(&mut buf)?;
            emit(out.as_deref(), &buf)?;
        }
        Command::Equilibrium { network, out } => {
            let model = load(&network)?;
            let report = solve_equilibrium(&model)?;
            emit(out.as_deref(), (report.to_json() + "\n").as_bytes())?;
        }
        Command::Verify {
            suite,
            count,
            seed,
            json,
        } => verify(&suite, count, seed, json.as_deref())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
