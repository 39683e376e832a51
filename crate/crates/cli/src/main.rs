//! `lpanova` command-line tool: CSV in, fitted curves, ANOVA tables,
//! F-tests, varying-coefficient fits, H* exports and simulation studies
//! out. Exit codes: 0 success, 1 input error, 2 numerical failure.

mod load;
mod output;
mod run;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lpanova::Kernel;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "lpanova", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Local polynomial fit over the grid: x0, beta_0..beta_p, fhat.
    Fit(FitArgs),
    /// Pointwise ANOVA over the grid: x0, fhat, sst, sse, ssr, r2.
    LocalAnova(FitArgs),
    /// Integrated ANOVA table with the F-test.
    Anova(InferArgs),
    /// F-test for no effect.
    Ftest(InferArgs),
    /// Varying-coefficient fit (columns u, x2..xd, y) and its ANOVA.
    Vcm(InferArgs),
    /// Quasi-projection matrix export with diagnostics.
    Hstar(FitArgs),
    /// Seeded Monte Carlo studies of the R-squared estimators or of
    /// F-test rejection rates.
    Simulate(SimArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum KernelArg {
    Epanechnikov,
    Gaussian,
    Uniform,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Kernel {
        match k {
            KernelArg::Epanechnikov => Kernel::Epanechnikov,
            KernelArg::Gaussian => Kernel::Gaussian,
            KernelArg::Uniform => Kernel::Uniform,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SstArg {
    Sample,
    Integrated,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum VariantArg {
    Standard,
    Conservative,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum FamilyArg {
    Bump,
    TwistedPear,
    BumpScaled,
    PearScaled,
}

/// Flags shared by every dataset-consuming subcommand. Each flag can also
/// be set through the environment variable named after it with the
/// LPANOVA_ prefix.
#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    /// Input CSV file (columns x,y; or u,x2..xd,y for vcm)
    #[arg(long, env = "LPANOVA_INPUT")]
    pub input: PathBuf,
    /// Treat the first CSV row as a header
    #[arg(long, env = "LPANOVA_HAS_HEADER")]
    pub has_header: bool,
    #[arg(long, value_enum, default_value_t = KernelArg::Epanechnikov, env = "LPANOVA_KERNEL")]
    pub kernel: KernelArg,
    /// Bandwidth
    #[arg(long, env = "LPANOVA_H")]
    pub h: f64,
    /// Polynomial degree
    #[arg(long, default_value_t = 1, env = "LPANOVA_P")]
    pub p: usize,
    /// Number of grid points
    #[arg(long, default_value_t = 200, env = "LPANOVA_GRID_COUNT")]
    pub grid_count: usize,
    /// Grid start (defaults to the data range)
    #[arg(long, env = "LPANOVA_GRID_START")]
    pub grid_start: Option<f64>,
    /// Grid stop (defaults to the data range)
    #[arg(long, env = "LPANOVA_GRID_STOP")]
    pub grid_stop: Option<f64>,
    /// Grid step; with start/stop this overrides --grid-count
    #[arg(long, env = "LPANOVA_GRID_STEP")]
    pub grid_step: Option<f64>,
    /// Extend the grid one kernel radius beyond the data range
    #[arg(long, env = "LPANOVA_PADDED")]
    pub padded: bool,
    #[arg(long, value_enum, default_value_t = Format::Text, env = "LPANOVA_FORMAT")]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
pub struct InferArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    /// Which total sum of squares normalizes the reported R-squared
    #[arg(long, value_enum, default_value_t = SstArg::Sample, env = "LPANOVA_SST")]
    pub sst: SstArg,
    /// F-statistic denominator
    #[arg(long, value_enum, default_value_t = VariantArg::Conservative, env = "LPANOVA_VARIANT")]
    pub variant: VariantArg,
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    #[arg(long, value_enum, env = "LPANOVA_FAMILY")]
    pub family: FamilyArg,
    /// Noise scale for the bump / twisted-pear families
    #[arg(long, default_value_t = 1.0, env = "LPANOVA_SIGMA")]
    pub sigma: f64,
    /// Effect sizes for the scaled families (power studies)
    #[arg(long, value_delimiter = ',', default_value = "0", env = "LPANOVA_A_VALUES")]
    pub a_values: Vec<f64>,
    /// Sample size per replicate
    #[arg(long, env = "LPANOVA_N")]
    pub n: usize,
    /// Bandwidths; power studies sweep all, R-squared studies use the first
    #[arg(long, value_delimiter = ',', env = "LPANOVA_H")]
    pub h: Vec<f64>,
    #[arg(long, default_value_t = 1, env = "LPANOVA_P")]
    pub p: usize,
    #[arg(long, value_enum, default_value_t = KernelArg::Epanechnikov, env = "LPANOVA_KERNEL")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 200, env = "LPANOVA_GRID_COUNT")]
    pub grid_count: usize,
    #[arg(long, env = "LPANOVA_REPS")]
    pub reps: usize,
    #[arg(long, env = "LPANOVA_SEED")]
    pub seed: u64,
    /// Test level for power studies
    #[arg(long, default_value_t = 0.05, env = "LPANOVA_LEVEL")]
    pub level: f64,
    /// Also write the first replicate's dataset to this CSV path
    #[arg(long, env = "LPANOVA_EMIT_DATA")]
    pub emit_data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, env = "LPANOVA_FORMAT")]
    pub format: Format,
}

/// 1 for input problems, 2 for numerical failures inside the library.
fn error_exit_code(e: &lpanova::Error) -> u8 {
    use lpanova::Error::*;
    match e {
        InvalidInput(_) | DimensionMismatch { .. } => 1,
        AtGridPoint { source, .. } => error_exit_code(source),
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(run::CliError::Input(msg)) => {
            eprintln!("lpanova: {msg}");
            ExitCode::from(1)
        }
        Err(run::CliError::Lib(e)) => {
            eprintln!("lpanova: {e}");
            ExitCode::from(error_exit_code(&e))
        }
    }
}
