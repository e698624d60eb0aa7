use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const AFTER_HELP: &str = "\
Expressions in r (used by --A, --B, --S, --T, --U, --a, --b):
  expr    := term (('+' | '-') term)*
  term    := unary (('*' | '/') unary)*
  unary   := '-' unary | power
  power   := primary ('^' unary)?
  primary := number | r | pi | func '(' expr ')' | '(' expr ')'
  func    := exp | ln | sqrt | sin | cos | tan | sinh | cosh | tanh | atan
  '^' binds tighter than unary minus: -r^2 is -(r^2).

Grid: --rmin/--rmax/--nodes/--scheme override QESDIRAC_GRID (rmin:rmax:n:scheme),
which overrides the default 1e-6:40:4000:geometric.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.";

#[derive(Debug, Parser)]
#[command(name = "qesdirac", version, about = "Quasi-exactly solvable radial Dirac systems", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Inner grid radius
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rmin: Option<f64>,
    /// Outer grid radius
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rmax: Option<f64>,
    /// Number of grid nodes
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// uniform or geometric
    #[arg(long, global = true)]
    pub scheme: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Screened-Coulomb model with its closed-form bound state
    Screened(ScreenedArgs),
    /// Trigonometric or hyperbolic construction from free functions
    Implicit(ImplicitArgs),
    /// Two bound states of one shared pair of potentials
    Doublet(DoubletArgs),
    /// Check a spinor against a system read from CSV files
    Verify(VerifyArgs),
    /// Matching determinant over an energy range, with refined roots
    Scan(ScanArgs),
}

/// Parameters of the screened-Coulomb model.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Sign of the model, +1 or -1
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<i64>,
    /// Rapidity fixing E = -eps lambda sinh t
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Decay rate of the bound state
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Screening strength (0 gives pure Coulomb)
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// Threshold exponent
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Centrifugal coupling, U = kappa / r
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["ell", "qabs", "sign"])]
    pub kappa: Option<f64>,
    /// Orbital number (-1 for the marginal kappa = 0 case)
    #[arg(long, allow_negative_numbers = true, requires = "qabs")]
    pub ell: Option<i64>,
    /// Monopole charge magnitude
    #[arg(long, allow_negative_numbers = true, requires = "ell")]
    pub qabs: Option<f64>,
    /// Sign of kappa, +1 or -1
    #[arg(long, allow_negative_numbers = true, requires = "ell")]
    pub sign: Option<i64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScreenedArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output prefix; writes PREFIX.csv and PREFIX.json
    #[arg(long, short, default_value = "screened")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Trig,
    Hyp,
}

#[derive(Debug, Args, Serialize)]
pub struct ImplicitArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Free function A(r) (trig mode)
    #[arg(long = "A", allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Free function B(r) (trig mode)
    #[arg(long = "B", allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Free function S(r) (hyp mode)
    #[arg(long = "S", allow_hyphen_values = true)]
    pub s: Option<String>,
    /// Free function T(r) (hyp mode)
    #[arg(long = "T", allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Initial value of Xi at r_min (hyp mode, default 0)
    #[arg(long, allow_negative_numbers = true)]
    pub xi0: Option<f64>,
    /// Centrifugal coupling, U = kappa / r
    #[arg(long, allow_negative_numbers = true, conflicts_with = "u")]
    pub kappa: Option<f64>,
    /// Centrifugal term as an expression
    #[arg(long = "U", allow_hyphen_values = true)]
    pub u: Option<String>,
    /// Energy constant (with --M); otherwise taken from the tail
    #[arg(long = "E", allow_negative_numbers = true, requires = "m")]
    pub e: Option<f64>,
    /// Mass constant (with --E)
    #[arg(long = "M", allow_negative_numbers = true, requires = "e")]
    pub m: Option<f64>,
    /// Fraction of trailing nodes used for the tail split
    #[arg(long, conflicts_with = "e")]
    pub tail_fraction: Option<f64>,
    /// Output prefix; writes PREFIX.csv and PREFIX.json
    #[arg(long, short, default_value = "implicit")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DoubletArgs {
    /// Shape function a(r), vanishing at r_min
    #[arg(long = "a", allow_hyphen_values = true)]
    pub a: String,
    /// Shape function b(r), vanishing at r_min
    #[arg(long = "b", allow_hyphen_values = true)]
    pub b: String,
    /// Energy gap E2 - E1
    #[arg(long, allow_negative_numbers = true)]
    pub delta: f64,
    /// Energy of the first state
    #[arg(long = "E1", allow_negative_numbers = true)]
    pub e1: f64,
    /// Mass
    #[arg(long = "M", allow_negative_numbers = true)]
    pub m: f64,
    /// Centrifugal coupling, U = kappa / r
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: f64,
    /// Output prefix; writes PREFIX_shared.csv, PREFIX_state1.csv,
    /// PREFIX_state2.csv and PREFIX.json
    #[arg(long, short, default_value = "doublet")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// CSV with columns r, U, V, W
    #[arg(long)]
    pub system: PathBuf,
    /// CSV with columns r, f, g
    #[arg(long)]
    pub spinor: PathBuf,
    /// Energy of the spinor
    #[arg(long = "E", allow_negative_numbers = true)]
    pub e: f64,
    /// Mass of the system
    #[arg(long = "M", allow_negative_numbers = true)]
    pub m: f64,
    /// Residual threshold for verified = true
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Write the report here instead of standard output
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    /// CSV with columns r, U, V, W (instead of model flags)
    #[arg(long, conflicts_with_all = ["eps", "t", "lambda", "h", "mu", "kappa", "ell"])]
    pub system: Option<PathBuf>,
    /// Mass of the system read with --system
    #[arg(long = "M", allow_negative_numbers = true, requires = "system")]
    pub m: Option<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Lower end of the scan (default just above -|M|)
    #[arg(long, allow_negative_numbers = true)]
    pub emin: Option<f64>,
    /// Upper end of the scan (default just below |M|)
    #[arg(long, allow_negative_numbers = true)]
    pub emax: Option<f64>,
    /// Number of energies
    #[arg(long, default_value_t = 400)]
    pub points: usize,
    /// Matching node (default: automatic)
    #[arg(long)]
    pub match_node: Option<usize>,
    /// Output prefix; writes PREFIX.csv and PREFIX.json
    #[arg(long, short, default_value = "scan")]
    pub out: PathBuf,
}
