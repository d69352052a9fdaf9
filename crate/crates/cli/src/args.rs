use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Simulate the entropic uncertainty game with a quantum memory.
#[derive(Parser, Debug)]
#[command(name = "eur", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sweep the tangle on [0, 1] with the aligned state (conjugate bases by default).
    SweepTangle(SweepTangleArgs),
    /// Sweep omega on [0, 45 deg] at fixed tangle, or the tangle at a fixed omega.
    SweepOmega(SweepOmegaArgs),
    /// Simulate 36-setting tomography counts (or read them) and reconstruct the state.
    Tomo(TomoArgs),
    /// Scan the witness threshold in tangle for all three estimators.
    Witness(WitnessArgs),
    /// Play one uncertainty game and report entropies with bootstrap errors.
    Game(GameArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Base RNG seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rounds per game / estimator point (tomo: shots per setting).
    #[arg(long, default_value_t = eur_core::gamesim::DEFAULT_SHOTS)]
    pub shots: u64,
    /// Source fidelity with the target state, in [0.25, 1] (white-noise model).
    #[arg(long, default_value_t = eur_core::gamesim::DEFAULT_FIDELITY)]
    pub fidelity: f64,
    /// Use expected counts instead of sampling.
    #[arg(long)]
    pub exact: bool,
    /// Output file [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub threads: Option<usize>,
    /// Bootstrap resamples for statistical errors (at least 100).
    #[arg(long, default_value_t = eur_core::gamesim::DEFAULT_BOOTSTRAP_RESAMPLES)]
    pub bootstrap: usize,
}

/// Entanglement of the source, as tangle or Schmidt angle.
#[derive(Args, Debug, Clone, Default)]
pub struct StateArgs {
    /// Tangle of the pure source state, in [0, 1].
    #[arg(long, conflicts_with_all = ["zeta", "zeta_deg"])]
    pub tangle: Option<f64>,
    /// Schmidt angle zeta [radians].
    #[arg(long, conflicts_with = "zeta_deg")]
    pub zeta: Option<f64>,
    /// Schmidt angle zeta [degrees].
    #[arg(long)]
    pub zeta_deg: Option<f64>,
    /// Schmidt basis polar angle theta [radians].
    #[arg(long, conflicts_with = "theta_deg")]
    pub theta: Option<f64>,
    /// Schmidt basis polar angle theta [degrees].
    #[arg(long)]
    pub theta_deg: Option<f64>,
    /// Schmidt basis phase phi [radians].
    #[arg(long, conflicts_with = "phi_deg")]
    pub phi: Option<f64>,
    /// Schmidt basis phase phi [degrees].
    #[arg(long)]
    pub phi_deg: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct OmegaArgs {
    /// Angle of R relative to S = Z [radians].
    #[arg(long, conflicts_with = "omega_deg")]
    pub omega: Option<f64>,
    /// Angle of R relative to S = Z [degrees].
    #[arg(long)]
    pub omega_deg: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepTangleArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub omega: OmegaArgs,
    /// Number of tangle points (at least 2).
    #[arg(long, default_value_t = 41)]
    pub points: usize,
}

#[derive(Args, Debug)]
pub struct SweepOmegaArgs {
    #[command(flatten)]
    pub common: Common,
    /// Tangle held fixed while omega varies.
    #[arg(long, conflicts_with = "fixed_omega_deg")]
    pub tangle: Option<f64>,
    /// Hold omega fixed [degrees] and sweep the tangle instead.
    #[arg(long)]
    pub fixed_omega_deg: Option<f64>,
    /// Number of points [default: 46 for omega, 41 for tangle].
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TomoArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub state: StateArgs,
    /// Reconstruct from this counts CSV instead of simulating.
    #[arg(long)]
    pub counts_in: Option<PathBuf>,
    /// Write the simulated counts CSV here.
    #[arg(long)]
    pub counts_out: Option<PathBuf>,
    /// Draw Poisson counts (expected total = shots) instead of multinomial.
    #[arg(long, conflicts_with = "exact")]
    pub poisson: bool,
}

#[derive(Args, Debug)]
pub struct WitnessArgs {
    #[command(flatten)]
    pub common: Common,
    /// Independently sampled runs behind each threshold error.
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
}

#[derive(Args, Debug)]
pub struct GameArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub omega: OmegaArgs,
}

/// Radians from a radian/degree flag pair.
pub fn angle(rad: Option<f64>, deg: Option<f64>, default: f64) -> f64 {
    match (rad, deg) {
        (Some(r), _) => r,
        (None, Some(d)) => d.to_radians(),
        (None, None) => default,
    }
}
