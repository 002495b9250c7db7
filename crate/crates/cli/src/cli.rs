use crate::complex::{parse_complex, parse_tau_path, parse_weights};
use crate::output::Format;
use clap::{Args, Parser, Subcommand, ValueEnum};
use isl_core::flow::TauPath;
use isl_core::lame::Weights;
use isl_core::C64;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "isl",
    version,
    about = "Isomonodromic deformations of the generalized Lamé equation",
    after_help = "Complex numbers are written re+imj (or re+imi); tau paths as colon-separated vertices, e.g. 1.0i:1.5i.\n\
                  Exit status: 0 success, 2 invalid input, 3 numerical failure or failed check.\n\
                  Set ISL_LOG (error, warn, info, debug) for diagnostics on stderr."
)]
pub struct Cli {
    /// Integration tolerance (relative; the absolute tolerance is a tenth of it).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Scenario file in TOML; replaces the subcommand.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate elliptic functions and, optionally, the Lamé potential.
    Eval(EvalArgs),
    /// Integrate the Hamiltonian flow of (p, A).
    Flow(FlowArgs),
    /// Sample the explicit solution family for a seed (r, s).
    Hitchin(HitchinArgs),
    /// Compute monodromy matrices of the Lamé equation.
    Monodromy(MonodromyArgs),
    /// Map between torus data and Fuchsian data on the projective line.
    Convert(ConvertArgs),
    /// Steer a trajectory into a zero of p and fit the collapse constants.
    Collapse(CollapseArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

fn complex(s: &str) -> Result<C64, String> {
    parse_complex(s)
}

fn weights(s: &str) -> Result<Weights, String> {
    parse_weights(s)
}

fn tau_path(s: &str) -> Result<TauPath, String> {
    parse_tau_path(s)
}

#[derive(Debug, Args)]
pub struct LameArgs {
    /// Weights n0,n1,n2,n3 at the half periods.
    #[arg(long, value_parser = weights, allow_hyphen_values = true, default_value = "0,0,0,0")]
    pub weights: Weights,
    /// Apparent singular point p.
    #[arg(long, value_parser = complex, allow_hyphen_values = true)]
    pub p: Option<C64>,
    /// Residue A at p.
    #[arg(long = "a", value_parser = complex, allow_hyphen_values = true)]
    pub a: Option<C64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_parser = complex, allow_hyphen_values = true)]
    pub tau: C64,
    /// Evaluation points; repeat the flag for several.
    #[arg(long, value_parser = complex, allow_hyphen_values = true, required = true)]
    pub z: Vec<C64>,
    #[command(flatten)]
    pub lame: LameArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlowCheck {
    /// Elliptic form of Painlevé VI.
    Pvi,
    /// Differential identity of F.
    F,
    /// Agreement with the Painlevé flow on the projective line.
    Cross,
    /// Agreement of the flow with the explicit family (hitchin only).
    Flow,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub lame: LameArgs,
    #[arg(long, value_parser = tau_path, allow_hyphen_values = true)]
    pub tau_path: TauPath,
    /// Samples per path segment.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Stop when the reduced |p| drops below this radius.
    #[arg(long)]
    pub stop_radius: Option<f64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub check: Vec<FlowCheck>,
}

#[derive(Debug, Args)]
pub struct HitchinArgs {
    #[arg(long, value_parser = complex, allow_hyphen_values = true)]
    pub r: C64,
    #[arg(long, value_parser = complex, allow_hyphen_values = true)]
    pub s: C64,
    #[arg(long, value_parser = tau_path, allow_hyphen_values = true)]
    pub tau_path: TauPath,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub check: Vec<FlowCheck>,
}

#[derive(Debug, Args)]
pub struct MonodromyArgs {
    #[arg(long, value_parser = complex, allow_hyphen_values = true)]
    pub tau: C64,
    /// Use the explicit family with this r (requires --s).
    #[arg(long, value_parser = complex, allow_hyphen_values = true, requires = "s")]
    pub r: Option<C64>,
    #[arg(long, value_parser = complex, allow_hyphen_values = true, requires = "r")]
    pub s: Option<C64>,
    #[command(flatten)]
    pub lame: LameArgs,
    /// Basepoint of the loops (default 0.11 + 0.13 tau).
    #[arg(long, value_parser = complex, allow_hyphen_values = true)]
    pub basepoint: Option<C64>,
    /// Also measure trace drift along the flow on this path.
    #[arg(long, value_parser = tau_path, allow_hyphen_values = true)]
    pub tau_path: Option<TauPath>,
    /// Number of path samples used for the drift.
    #[arg(long, default_value_t = 5)]
    pub drift_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Lame2fuchs,
    Fuchs2lame,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long, value_enum)]
    pub direction: Direction,
    /// JSON document describing the equation.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Plus,
    Minus,
}

#[derive(Debug, Args)]
pub struct CollapseArgs {
    #[arg(long, value_parser = weights, allow_hyphen_values = true, default_value = "1,0,0,0")]
    pub weights: Weights,
    #[arg(long, value_enum, default_value = "plus")]
    pub branch: BranchArg,
    #[arg(long, value_parser = complex, allow_hyphen_values = true, default_value = "0")]
    pub h_tilde: C64,
    #[arg(long, value_parser = complex, allow_hyphen_values = true)]
    pub tau0: C64,
    /// Direction of departure from tau0.
    #[arg(long, value_parser = complex, allow_hyphen_values = true, default_value = "1j")]
    pub direction: C64,
    #[arg(long, default_value_t = 0.3)]
    pub length: f64,
    #[arg(long, default_value_t = 600)]
    pub samples: usize,
    /// Points at which the limiting potential is compared.
    #[arg(long, value_parser = complex, allow_hyphen_values = true)]
    pub z: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Closed-form tau-derivatives against finite differences.
    #[value(alias = "lemma-2.2")]
    TauDerivatives,
    /// Legendre relation, e-sum, g2 and the theta identities.
    LatticeIdentities,
    /// Theta-series functions against brute-force lattice sums.
    Oracle,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, value_parser = complex, allow_hyphen_values = true)]
    pub tau: C64,
    /// Number of sample points.
    #[arg(long, default_value_t = 8)]
    pub points: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn suite_alias_is_accepted() {
        let cli =
            Cli::try_parse_from(["isl", "verify", "--suite", "lemma-2.2", "--tau", "2i"]).unwrap();
        match cli.command {
            Some(Command::Verify(v)) => assert_eq!(v.suite, Suite::TauDerivatives),
            other => panic!("unexpected {other:?}"),
        }
    }
}
