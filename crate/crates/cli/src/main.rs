//! `mmot-decouple`: classification, transport certificates, boundary value
//! solves, decoupling, rearrangement and the worked examples from the shell.
//!
//! Every command prints one JSON envelope on stdout (and to `<out>/report.json`
//! when `--out` is given). Exit status: 0 when every check passes, 1 when a
//! check fails, 2 for invalid input or I/O errors.

mod commands;
mod envelope;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmot_decouple::Tolerances;

use envelope::Envelope;

#[derive(Parser, Debug)]
#[command(name = "mmot-decouple", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a non-linearity: orientable, compatible, submodular after a flip.
    Analyze(Common),
    /// Monotone coupling of marginals with a duality certificate.
    Mmot(MmotArgs),
    /// Solve u'' = ∇H(u) on [−L, L] with Dirichlet data.
    Solve(SolveArgs),
    /// Build and verify decoupling potentials for a profile.
    Decouple(InputArgs),
    /// Rectangular rearrangement of a field on a box and its energies.
    Rearrange(InputArgs),
    /// Reproduce the worked examples.
    Examples(ExampleArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Built-in non-linearity name.
    #[arg(long)]
    pub spec: Option<String>,
    /// `key = value` file: name, m, box_i_min, box_i_max, coef, seed, a_i_j.
    #[arg(long)]
    pub spec_config: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Half-length of the interval.
    #[arg(long = "L")]
    pub length: Option<f64>,
    /// Mesh nodes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Per-axis resolution of verification grids.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long, default_value_t = mmot_decouple::nonlinearity::DEFAULT_SEED)]
    pub seed: u64,
    /// Directory for CSV and JSON artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tol_sign: Option<f64>,
    #[arg(long)]
    pub tol_dual: Option<f64>,
    #[arg(long)]
    pub tol_decouple: Option<f64>,
    #[arg(long)]
    pub tol_rearr: Option<f64>,
}

impl Common {
    pub fn tolerances(&self) -> mmot_decouple::Result<Tolerances> {
        let mut t = Tolerances::default();
        t.sign = self.tol_sign.unwrap_or(t.sign);
        t.dual = self.tol_dual.unwrap_or(t.dual);
        t.decouple = self.tol_decouple.unwrap_or(t.decouple);
        t.rearr = self.tol_rearr.unwrap_or(t.rearr);
        t.validate()?;
        Ok(t)
    }
}

#[derive(Args, Debug)]
pub struct MmotArgs {
    #[command(flatten)]
    pub common: Common,
    /// Marginal CSV (`atom[,weight]`); one per coordinate, in order.
    #[arg(long = "marginal", required = true)]
    pub marginals: Vec<PathBuf>,
    /// Orientation such as `1,-1,1`; derived from the classification when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Also compare with exhaustive search (uniform marginals, n ≤ 6, m ≤ 4).
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Boundary data `a1:b1,a2:b2,…`; defaults exist for the built-in examples.
    #[arg(long, allow_hyphen_values = true)]
    pub bc: Option<String>,
    /// Component signs for the log-sum-exp kinks, e.g. `1,-1`.
    #[arg(long, allow_hyphen_values = true)]
    pub signs: Option<String>,
}

#[derive(Args, Debug)]
pub struct InputArgs {
    #[command(flatten)]
    pub common: Common,
    /// Profile CSV (`x,u1,…`) for decouple; box field CSV (`x1[,x2],xN,u1,…`) for rearrange.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExampleArgs {
    #[command(flatten)]
    pub common: Common,
    /// `ac-quadratic`, `ac-logsumexp`, `quadratic-coupling` or `all`.
    #[arg(long, default_value = "all")]
    pub case: String,
    /// Component signs for `ac-logsumexp`, e.g. `1,-1,1`.
    #[arg(long, allow_hyphen_values = true)]
    pub signs: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Analyze(c) => ("analyze", c),
        Command::Mmot(a) => ("mmot", &a.common),
        Command::Solve(a) => ("solve", &a.common),
        Command::Decouple(a) => ("decouple", &a.common),
        Command::Rearrange(a) => ("rearrange", &a.common),
        Command::Examples(a) => ("examples", &a.common),
    };
    let result = match &cli.command {
        Command::Analyze(c) => commands::analyze(c),
        Command::Mmot(a) => commands::mmot(a),
        Command::Solve(a) => commands::solve(a),
        Command::Decouple(a) => commands::decouple(a),
        Command::Rearrange(a) => commands::rearrange(a),
        Command::Examples(a) => commands::examples(a),
    };
    match result {
        Ok(env) => finish(env, common),
        Err(e) => {
            let env = Envelope::error(name, common.seed, &e);
            emit(&env.to_json());
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}").and_then(|()| out.flush());
}

fn finish(env: Envelope, common: &Common) -> ExitCode {
    let text = env.to_json();
    if let Some(dir) = &common.out {
        if let Err(e) = mmot_decouple::io::write_json(&dir.join("report.json"), &env) {
            eprintln!("error: cannot write report: {e}");
            emit(&text);
            return ExitCode::from(2);
        }
    }
    emit(&text);
    if env.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
