use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "weaktrace", version, about = "Weak values, pointer sweeps and weak-trace verdicts for linear-optics scenarios")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weak value of every slot projector.
    Weakvalues {
        /// Scenario file, built-in name (fig1, fig2) or `-` for stdin.
        #[arg(default_value = "-")]
        scenario: String,
    },
    /// Presence map and continuity verdict.
    Trace {
        #[arg(default_value = "-")]
        scenario: String,
        /// Presence threshold on |weak value|.
        #[arg(long, default_value_t = weaktrace::trace::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Single-pointer readout over a list of coupling strengths.
    Sweep {
        #[arg(default_value = "-")]
        scenario: String,
        /// Arm to couple (repeat or comma-separate for several sweeps).
        #[arg(long, required = true, value_delimiter = ',')]
        arm: Vec<String>,
        /// Strictly descending strengths, comma-separated.
        #[arg(long = "g", required = true, value_delimiter = ',', allow_negative_numbers = true)]
        g: Vec<f64>,
        /// Pointer position spread.
        #[arg(long, default_value_t = weaktrace::weakmeas::DEFAULT_WIDTH)]
        width: f64,
    },
    /// Print the source of a built-in scenario.
    Builtin {
        #[arg(value_parser = ["fig1", "fig2"])]
        name: String,
    },
    /// Parse and validate a scenario file.
    Validate { file: String },
}
