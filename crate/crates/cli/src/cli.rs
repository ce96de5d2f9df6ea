use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

/// Equilibria, characteristic roots and simulations of the forest
/// birth-rate renewal equation.
#[derive(Debug, Parser)]
#[command(name = "forest-renewal", version)]
pub struct Args {
    /// TOML configuration file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Built-in parameter set (see `forest-renewal presets`)
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Write the main output here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sections (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    #[value(name = "F")]
    F,
    #[value(name = "R")]
    R,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of equilibria with F′(b), λ₀ and verdicts (CSV)
    Equilibria,
    /// Sample F(b) or R(b) on a uniform grid (CSV)
    Curve {
        #[arg(long, value_enum)]
        which: Option<Which>,
        #[arg(long)]
        b_min: Option<f64>,
        #[arg(long)]
        b_max: Option<f64>,
        /// Number of intervals; n + 1 rows are written
        #[arg(long, short)]
        n: Option<usize>,
    },
    /// Characteristic-root report at an equilibrium (JSON)
    Spectrum {
        /// Birth rate to analyze
        #[arg(long, conflicts_with = "index")]
        b: Option<f64>,
        /// Position in the ascending equilibrium list (0 is b = 0)
        #[arg(long)]
        index: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        re_min: Option<f64>,
        #[arg(long)]
        re_max: Option<f64>,
        #[arg(long)]
        im_max: Option<f64>,
    },
    /// Time-step the renewal equation (CSV trajectory, JSON summary)
    Simulate {
        /// constant:C | periodic:B_STAR,EPS,OMEGA | file:PATH
        #[arg(long)]
        init: Option<String>,
        /// Write the JSON summary here (default: stderr)
        #[arg(long, value_name = "PATH")]
        summary: Option<PathBuf>,
        /// Also write the sampled initial history as a table readable by `file:`
        #[arg(long, value_name = "PATH")]
        write_init: Option<PathBuf>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        a_max: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Equilibrium counts and stability signatures over an (α, p) grid (CSV)
    Sweep {
        /// MIN:MAX:STEPS
        #[arg(long)]
        alpha: Option<String>,
        /// MIN:MAX:STEPS
        #[arg(long)]
        p: Option<String>,
    },
    /// List the built-in presets
    Presets,
}
