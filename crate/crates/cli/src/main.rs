use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lfvlab::{compare_manifests, emit_csv, parse_scenario, run_experiment, ResultManifest, Scenario};

#[derive(Parser)]
#[command(name = "lfvlab", version, about = "Run open-quantum-system scenarios and compare their manifests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, write its manifest and CSV tables.
    Run {
        scenario: PathBuf,
        /// Directory for manifest.json and the CSV tables; overrides [output].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
    /// Compare the tables of two manifests.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
}

const EXIT_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn load(path: &Path) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn output_paths(scenario: &Scenario, file: &Path, out: Option<PathBuf>) -> (PathBuf, PathBuf) {
    if let Some(dir) = out {
        return (dir.join("manifest.json"), dir);
    }
    let base = file.parent().unwrap_or(Path::new(".")).to_path_buf();
    let default_dir = base.join(&scenario.name);
    let manifest = scenario
        .output
        .manifest
        .as_ref()
        .map(|p| base.join(p))
        .unwrap_or_else(|| default_dir.join("manifest.json"));
    let csv = scenario.output.csv_dir.as_ref().map(|p| base.join(p)).unwrap_or(default_dir);
    (manifest, csv)
}

fn run(file: PathBuf, out: Option<PathBuf>) -> ExitCode {
    let scenario = match load(&file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let manifest = match run_experiment(&scenario) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let (manifest_path, csv_dir) = output_paths(&scenario, &file, out);
    if let Err(e) = manifest.write_atomic(&manifest_path).and_then(|_| emit_csv(&manifest, &csv_dir)) {
        eprintln!("{e}");
        return ExitCode::from(EXIT_ERROR);
    }
    println!("wrote {}", manifest_path.display());
    for c in &manifest.checks {
        println!("{:<16} {:>12.4e}  tol {:>10.3e}  {}", c.name, c.value, c.tolerance, if c.passed { "pass" } else { "FAIL" });
    }
    if manifest.all_passed() {
        ExitCode::SUCCESS
    } else {
        for c in manifest.failed_checks() {
            eprintln!("check failed: {} = {:e} exceeds {:e}", c.name, c.value, c.tolerance);
        }
        ExitCode::from(EXIT_FAILED)
    }
}

fn compare(a: PathBuf, b: PathBuf, tol: f64) -> ExitCode {
    let (ma, mb) = match (ResultManifest::load(&a), ResultManifest::load(&b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let diffs = compare_manifests(&ma, &mb, tol);
    if diffs.is_empty() {
        println!("manifests agree to {tol:e}");
        ExitCode::SUCCESS
    } else {
        for d in &diffs {
            eprintln!("{d}");
        }
        ExitCode::from(EXIT_FAILED)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { scenario, out } => run(scenario, out),
        Command::Validate { scenario } => match load(&scenario) {
            Ok(s) => {
                println!("{}: valid {} scenario '{}'", scenario.display(), s.experiment, s.name);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(EXIT_ERROR)
            }
        },
        Command::Compare { a, b, tol } => compare(a, b, tol),
    }
}
