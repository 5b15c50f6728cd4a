use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rabi_core::{ModelParams, Truncation};

use crate::args::{BranchChoice, Levels, Range};
use crate::error::{CliError, CliResult};
use crate::records::Format;

#[derive(Debug, Parser)]
#[command(
    name = "rabi",
    version,
    about = "Spectra, exceptional points and constraint curves of the generalized quantum Rabi model",
    after_help = "Exit status: 0 ok, 1 flagged (non-convergence, failed cells, failed checks), 2 invalid input."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest levels over a coupling sweep, plus the baseline energies.
    Spectrum(SpectrumArgs),
    /// S1 and S2 points along baselines at fixed Δ.
    Exceptional(ExceptionalArgs),
    /// Zero curves of 𝒢 and of the constraint polynomial in the Δ–g plane.
    Curves(CurvesArgs),
    /// Cross-validation against direct diagonalization.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Boson frequency ω.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub omega: f64,
    /// Bias ε.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Largest series index.
    #[arg(long, default_value_t = Truncation::default().n_max)]
    pub nmax: usize,
    /// Relative size below which a series term counts as tail.
    #[arg(long, default_value_t = Truncation::default().tail_tol)]
    pub tail_tol: f64,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Exit 0 even when results are flagged.
    #[arg(long)]
    pub allow_flagged: bool,
}

impl Common {
    pub fn params(&self, delta: f64) -> CliResult<ModelParams> {
        let p = ModelParams::new(self.omega, 0.0, delta, self.epsilon)?;
        if p.is_resonant() {
            return Err(CliError::Invalid(format!(
                "2ε/ω = {} is an integer: baselines of opposite branches coincide",
                2.0 * self.epsilon / self.omega
            )));
        }
        Ok(p)
    }

    pub fn truncation(&self) -> CliResult<Truncation> {
        let t = Truncation {
            n_max: self.nmax,
            tail_tol: self.tail_tol,
            ..Truncation::default()
        };
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    /// Qubit splitting Δ.
    #[arg(long, default_value_t = 1.2, allow_negative_numbers = true)]
    pub delta: f64,
    /// Coupling sweep, lo:hi:points.
    #[arg(long, default_value = "0.05:1.2:200")]
    pub g: Range,
    /// Levels per coupling.
    #[arg(long, default_value_t = 8)]
    pub levels: usize,
    /// Highest baseline index in the baseline file.
    #[arg(long, default_value_t = 4)]
    pub max_baseline: u32,
    /// Add an `oracle_dE` column from diagonalization at this Fock cutoff.
    #[arg(long, value_name = "M")]
    pub oracle_check: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleSetting {
    Off,
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for OracleSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(OracleSetting::Off),
            "auto" => Ok(OracleSetting::Auto),
            _ => s
                .parse()
                .map(OracleSetting::Fixed)
                .map_err(|_| format!("expected off, auto or a cutoff, got `{s}`")),
        }
    }
}

impl std::fmt::Display for OracleSetting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleSetting::Off => f.write_str("off"),
            OracleSetting::Auto => f.write_str("auto"),
            OracleSetting::Fixed(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExceptionalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Qubit splitting Δ.
    #[arg(long, default_value_t = 1.2, allow_negative_numbers = true)]
    pub delta: f64,
    /// Baseline indices, e.g. `1:4` or `0,2,3`.
    #[arg(long, default_value = "1:4")]
    pub baselines: Levels,
    #[arg(long, value_enum, default_value_t = BranchChoice::Both)]
    pub branch: BranchChoice,
    /// Coupling window and 𝒢 scan cells, lo:hi:steps.
    #[arg(long, default_value = "0.001:5:2000")]
    pub g: Range,
    /// Scan cells for the constraint polynomial.
    #[arg(long, default_value_t = 400)]
    pub s1_steps: usize,
    /// Degeneracy check: off, auto or a Fock cutoff.
    #[arg(long, default_value = "auto")]
    pub oracle: OracleSetting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveKind {
    /// Zero set of 𝒢 at the baseline.
    Full,
    /// Zero set of the constraint polynomial.
    S1,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub common: Common,
    /// Δ axis, lo:hi:points.
    #[arg(long, default_value = "0:6:601", allow_hyphen_values = true)]
    pub delta: Range,
    /// g axis, lo:hi:points.
    #[arg(long, default_value = "0.02:3:601")]
    pub g: Range,
    #[arg(long, default_value = "0:3")]
    pub baselines: Levels,
    #[arg(long, value_enum, default_value_t = BranchChoice::Both)]
    pub branch: BranchChoice,
    #[arg(long, value_enum, default_value_t = CurveKind::Both)]
    pub kind: CurveKind,
}

#[derive(Debug, Clone, Args)]
pub struct OracleCheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1.2, allow_negative_numbers = true)]
    pub delta: f64,
    /// Couplings to check, lo:hi:points.
    #[arg(long, default_value = "0.1:1:10")]
    pub g: Range,
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
    /// Fock cutoff of the reference diagonalization.
    #[arg(long, default_value_t = 60)]
    pub fock: usize,
    /// Larger cutoff used to confirm the reference has converged.
    #[arg(long, default_value_t = 80)]
    pub fock_check: usize,
    /// Allowed |E_G − E_oracle|.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}
