use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use torusforge::doubling::BoundSet;
use torusforge::odeint::IntegratorConfig;

#[derive(Debug, Parser)]
#[command(name = "torusforge", version, about = "Invariant tori of lifted polynomial vector fields")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "torusforge-out")]
    pub out: PathBuf,
    /// Artifacts to write besides the JSON-lines report.
    #[arg(long, global = true, value_delimiter = ',', default_value = "json")]
    pub emit: Vec<Emit>,
    /// Relative integration tolerance.
    #[arg(long, global = true)]
    pub tol_rel: Option<f64>,
    /// Absolute integration tolerance.
    #[arg(long, global = true)]
    pub tol_abs: Option<f64>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

impl GlobalArgs {
    pub fn emits(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, crate::RunError> {
        let mut c = IntegratorConfig::default();
        for (name, v, slot) in [
            ("--tol-rel", self.tol_rel, &mut c.rel_tol),
            ("--tol-abs", self.tol_abs, &mut c.abs_tol),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v < 1.0) {
                    return Err(crate::RunError::Argument(format!("{name} must lie in (0, 1), got {v}")));
                }
                *slot = v;
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lift a planar system file to its spatial family.
    Lift { input: PathBuf },
    /// Apply the squaring pullback `k` times to a spatial system file.
    Double {
        input: PathBuf,
        #[arg(short, long, default_value_t = 1)]
        k: u32,
        /// Value bound to the parameter before doubling, e.g. `1/50` or `0.02`.
        #[arg(long)]
        eps: Option<String>,
        /// Translation applied before doubling, one entry per coordinate.
        #[arg(long, value_delimiter = ',')]
        shift: Vec<String>,
        /// Tori counted in the input field.
        #[arg(long, default_value_t = 1)]
        tori: u64,
        /// Refuse a step whose output could exceed this many terms.
        #[arg(long, default_value_t = 2_000_000)]
        max_terms: usize,
    },
    /// Find the planar cycles, then detect and certify the tori of the lift.
    Verify {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<String>,
        /// `all` or a comma list such as `+++,-++`: also verify the doubled
        /// field at the first eps.
        #[arg(long)]
        octants: Option<String>,
        /// Translation used before doubling; chosen from the torus extent by
        /// default.
        #[arg(long)]
        shift: Option<i64>,
    },
    /// Lower-bound tables from stored constants or a bounds file.
    Tables {
        /// CSV with header `k,bound` or a JSON list of `{"k", "bound"}`.
        bounds: Option<PathBuf>,
        #[arg(long, default_value_t = BoundSet::Hyperbolic)]
        set: BoundSet,
        /// Append doubling-sequence rows up to this `k` (0 for none).
        #[arg(long, default_value_t = 20)]
        sequence: u32,
    },
    /// Quick randomized consistency checks.
    Selftest {
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}
