use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, ProblemKind};

/// A comma-separated vector flag. The alias keeps clap from treating the
/// flag as a repeated scalar.
pub type Reals = Vec<f64>;

#[derive(Debug, Parser)]
#[command(name = "hamel-oc", version, about = "Boltzmann-Hamel optimal control and nonholonomic mechanics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an optimal-control boundary value problem by shooting.
    Solve(SolveArgs),
    /// Run the verification suite on built-in models; prints a JSON report.
    Verify(VerifyArgs),
    /// Integrate the forced mechanics of a model under constant quasi-forces.
    Simulate(SimulateArgs),
    /// Re-evaluate the cost of a trajectory file written by `solve`.
    Cost(CostArgs),
    /// List built-in models, their layouts and scenarios.
    List,
}

#[derive(Debug, Default, Args)]
pub struct ModelArgs {
    /// Built-in model name.
    #[arg(long)]
    pub model: Option<String>,
    /// Disc radius override.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Principal inertias override, `Ixx,Iyy,Izz`.
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub inertia: Option<Reals>,
}

#[derive(Debug, Default, Args)]
pub struct OutputArgs {
    /// Output file; the table goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Default, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Built-in scenario of the model.
    #[arg(long)]
    pub scenario: Option<String>,
    /// TOML scenario file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub layout: Option<ProblemKind>,
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t1: Option<f64>,
    /// Initial configuration, comma separated (`pi` allowed, e.g. `-pi/4`).
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub q0: Option<Reals>,
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub q1: Option<Reals>,
    /// Initial free quasi-velocities (dynamic problems).
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub u0: Option<Reals>,
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub u1: Option<Reals>,
    /// Shooting unknowns to start from.
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub guess: Option<Reals>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Convergence threshold on the terminal residual.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Random restarts after a failed Newton run.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Default, Args)]
pub struct VerifyArgs {
    /// Only this model.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip solving and probing the scenarios.
    #[arg(long)]
    pub quick: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub q0: Option<Reals>,
    /// Initial free quasi-velocities.
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub u0: Option<Reals>,
    /// Constant free quasi-forces; zero when absent.
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub forces: Option<Reals>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub t1: f64,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// A CSV or JSON trajectory written by `solve`.
    pub input: PathBuf,
}

/// Comma-separated reals; each entry may also be a multiple or fraction of
/// `pi`, such as `pi`, `-pi/4`, `2pi` or `0.5*pi`.
pub fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|tok| parse_real(tok.trim())).collect()
}

fn parse_real(tok: &str) -> Result<f64, String> {
    if let Ok(v) = tok.parse::<f64>() {
        return Ok(v);
    }
    let bad = || format!("`{tok}` is not a number");
    let lower = tok.to_ascii_lowercase();
    let Some(at) = lower.find("pi") else {
        return Err(bad());
    };
    let (head, tail) = (&lower[..at], &lower[at + 2..]);
    let head = head.trim_end_matches('*');
    let coeff = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let denom = match tail {
        "" => 1.0,
        t => t.strip_prefix('/').and_then(|d| d.parse::<f64>().ok()).ok_or_else(bad)?,
    };
    Ok(coeff * std::f64::consts::PI / denom)
}
