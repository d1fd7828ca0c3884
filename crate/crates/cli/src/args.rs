use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qex", version, about = "Extremal density matrices and spectra of qudit observables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues and eigenprojectors from pure extremal states.
    Spectrum(SpectrumArgs),
    /// Extremal states at fixed purity constants.
    Extremal(ExtremalArgs),
    /// Extremal mean values along a parameter of the operator.
    Sweep(SweepArgs),
    /// Admissibility of a grid over the purity-constant box.
    Region(RegionArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Operator file, or `builtin:NAME` for a shipped fixture.
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Include wall-clock time in the report (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantArgs {
    /// Request pure states (all constants zero).
    #[arg(long, conflicts_with_all = ["c2", "c3", "c4", "c5", "c6"])]
    pub pure: bool,
    #[arg(long, value_parser = parse_rational)]
    pub c2: Option<f64>,
    #[arg(long, value_parser = parse_rational)]
    pub c3: Option<f64>,
    #[arg(long, value_parser = parse_rational)]
    pub c4: Option<f64>,
    #[arg(long, value_parser = parse_rational)]
    pub c5: Option<f64>,
    #[arg(long, value_parser = parse_rational)]
    pub c6: Option<f64>,
}

impl ConstantArgs {
    /// `c_2..c_d`, or `None` for a pure request.
    pub fn values(&self, d: usize) -> Result<Option<Vec<f64>>, CliError> {
        if self.pure {
            return Ok(None);
        }
        let all = [self.c2, self.c3, self.c4, self.c5, self.c6];
        if let Some(k) = (d + 1..=6).find(|&k| all[k - 2].is_some()) {
            return Err(CliError::Validation(format!("--c{k} given for a {d}-level operator")));
        }
        all[..d - 1]
            .iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| CliError::Validation(format!("missing --c{} (or pass --pure)", i + 2))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    /// Compare against an independent eigensolver.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExtremalArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub constants: ConstantArgs,
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub constants: ConstantArgs,
    #[arg(long)]
    pub param: String,
    #[arg(long, value_parser = parse_rational, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, value_parser = parse_rational, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Exact rational (`29/100`, `-3`) converted once to the nearest `f64`;
/// plain decimals are accepted as well.
pub fn parse_rational(s: &str) -> Result<f64, String> {
    use num_rational::BigRational;
    use num_traits::ToPrimitive;
    if let Ok(r) = s.parse::<BigRational>() {
        return r.to_f64().ok_or_else(|| format!("`{s}` is out of range"));
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("`{s}` is neither a rational p/q nor a finite decimal"))
}
