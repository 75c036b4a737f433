use std::fs;
use std::path::Path;

use hdvar::estimators::EstimatorRegistry;
use hdvar::simharness::{Experiment, SimulationConfig, SimulationOutput};

use crate::data::write_dataset;
use crate::exit::{CliError, CliResult};

/// Parses a TOML config; errors name the offending key path.
pub fn load_config(path: &Path) -> CliResult<SimulationConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|m| CliError::Input(format!("{}: {m}", path.display())))
}

pub fn parse_config(text: &str) -> Result<SimulationConfig, String> {
    let de = toml::Deserializer::parse(text).map_err(|e| e.to_string())?;
    let config: SimulationConfig = match serde_path_to_error::deserialize(de) {
        Ok(c) => c,
        Err(e) => {
            let path = e.path().to_string();
            // toml's own error carries the line and column
            let located = toml::from_str::<SimulationConfig>(text)
                .err()
                .map_or_else(|| e.inner().message().to_string(), |t| t.to_string());
            return Err(if path == "." { located } else { format!("field `{path}`: {located}") });
        }
    };
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

pub struct SimulateArgs<'a> {
    pub config: &'a Path,
    pub out_dir: &'a Path,
    pub threads: Option<usize>,
    pub dump_data: bool,
}

/// Runs the experiment and writes `raw.csv` and `summary.json` (plus
/// `data_replicate0.csv` with `--dump-data`).
pub fn run_simulate(args: &SimulateArgs) -> CliResult<SimulationOutput> {
    let config = load_config(args.config)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let experiment = Experiment::prepare(config, base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let output = pool.install(|| experiment.run(&EstimatorRegistry::default()))?;

    fs::create_dir_all(args.out_dir)?;
    let mut w = csv::Writer::from_path(args.out_dir.join("raw.csv")).map_err(|e| CliError::Internal(e.to_string()))?;
    for row in &output.raw {
        w.serialize(row).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.flush()?;
    let summary = serde_json::to_string_pretty(&output.summary).map_err(|e| CliError::Internal(e.to_string()))?;
    fs::write(args.out_dir.join("summary.json"), summary + "\n")?;
    if args.dump_data {
        write_dataset(&args.out_dir.join("data_replicate0.csv"), &experiment.sample(0)?)?;
    }
    Ok(output)
}
