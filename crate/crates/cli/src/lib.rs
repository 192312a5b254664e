//! Experiment driver for the `skewcmv` library.

mod commands;
pub mod config;

pub use config::{Cli, Command, ExperimentConfig};

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] skewcmv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for usage errors, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use skewcmv::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::InvalidArgument(_) | E::OutOfRange { .. } | E::ResourceLimit { .. }) => 2,
            CliError::Core(E::Singular { .. } | E::Numeric(_)) => 3,
            CliError::Io(_) => 1,
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        // only the first call can set the global pool; later calls keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    std::fs::create_dir_all(&cli.out)?;
    let config = ExperimentConfig::new(&cli.command)?;
    let out = Output { dir: &cli.out, gnuplot: cli.gnuplot };
    commands::dispatch(&config, &out)
}

pub(crate) struct Output<'a> {
    pub dir: &'a Path,
    pub gnuplot: bool,
}

impl Output<'_> {
    pub fn write(&self, name: &str, text: &str) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    /// `{"config": …, "results": …}` as `<name>.json`.
    pub fn summary(&self, name: &str, config: &ExperimentConfig, results: serde_json::Value) -> Result<(), CliError> {
        let doc = serde_json::json!({ "config": config, "results": results });
        let mut text = serde_json::to_string_pretty(&doc).expect("summary serializes");
        text.push('\n');
        self.write(&format!("{name}.json"), &text)
    }

    /// Gnuplot script plotting columns `x:y` of a CSV file, when enabled.
    pub fn plot(&self, csv: &str, x: usize, y: usize, style: &str) -> Result<(), CliError> {
        if !self.gnuplot {
            return Ok(());
        }
        let stem = csv.trim_end_matches(".csv");
        let script = format!(
            "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo\nset output '{stem}.png'\nplot '{csv}' using {x}:{y} with {style}\n"
        );
        self.write(&format!("{stem}.gp"), &script)
    }
}
