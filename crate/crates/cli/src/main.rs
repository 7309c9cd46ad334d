mod output;
mod run;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "qflab", version, about = "Two-dimensional quasifields as sharply transitive sections")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List, describe or export catalog families.
    Family {
        #[command(subcommand)]
        action: FamilyAction,
    },
    /// Run every structural predicate and compare with the stated verdicts.
    Classify(ClassifyArgs),
    /// lhs * rhs
    Mul(OpArgs),
    /// The x with lhs * x = rhs.
    Ldiv(OpArgs),
    /// The x with x * rhs = lhs.
    Rdiv(OpArgs),
    /// Check spread axioms, sharp transitivity or the C1 inequality.
    Verify {
        #[command(subcommand)]
        what: VerifyWhat,
    },
    /// Write (r, t, a, b) and the left translation matrix on a grid.
    ExportTranslations(ExportArgs),
}

#[derive(Subcommand, Debug)]
pub enum FamilyAction {
    List,
    Show {
        id: String,
    },
    Export {
        id: String,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: SampleGrid,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand, Debug)]
pub enum VerifyWhat {
    /// (M1) on a sample, and (M2) on an 8 x 8 target grid for catalog families.
    Spread {
        #[command(flatten)]
        src: SourceArgs,
        #[command(flatten)]
        grid: SampleGrid,
        #[arg(long, default_value_t = 1e-6)]
        atol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Right division is unique and accurate on random pairs.
    Section {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// C1 inequality for a compact loop profile.
    C1 {
        /// JSON file with arrays t, a, b on [0, 2pi].
        #[arg(long, conflicts_with = "family")]
        profile: Option<PathBuf>,
        #[arg(long)]
        family: Option<String>,
        #[command(flatten)]
        params: ParamArgs,
        /// Scale u of the compact factor taken from a family.
        #[arg(long, default_value_t = 1.0)]
        u: f64,
        #[arg(long, default_value_t = 2048)]
        points: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<f64>,
    /// RemarkF function: cubic, expm1 or power:<w>.
    #[arg(long)]
    pub f: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    #[arg(long, required_unless_present = "spread", conflicts_with = "spread")]
    pub family: Option<String>,
    /// SpreadSample JSON on a tensor grid in (ln u, t).
    #[arg(long)]
    pub spread: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SampleGrid {
    #[arg(long, default_value_t = 10)]
    pub nr: usize,
    #[arg(long, default_value_t = 20)]
    pub nt: usize,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub src: SourceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Radii in the u grid (log-spaced on [1/8, 8]).
    #[arg(long, default_value_t = 33)]
    pub nu: usize,
    /// Angles in the t grid.
    #[arg(long, default_value_t = 256)]
    pub nt: usize,
    /// Relative tolerance; QFLAB_TOL is used when absent.
    #[arg(long, env = "QFLAB_TOL")]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OpArgs {
    #[command(flatten)]
    pub src: SourceArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub lhs: String,
    #[arg(long, allow_hyphen_values = true)]
    pub rhs: String,
    #[arg(long, env = "QFLAB_TOL")]
    pub rtol: Option<f64>,
    /// Decimal places printed.
    #[arg(long, default_value_t = 12)]
    pub digits: usize,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub src: SourceArgs,
    #[command(flatten)]
    pub grid: SampleGrid,
    #[command(flatten)]
    pub out: OutArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
