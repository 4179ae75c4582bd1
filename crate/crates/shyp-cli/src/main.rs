//! `shyp`: strong-hyperbolicity and constraint-propagation analysis of
//! constant-coefficient first-order PDE systems.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use ndarray::Array2;

use shyp_core::io::{read_system, write_system, SystemFile};
use shyp_core::report::{analyze, render_spectral_text, render_text, AnalyzeOptions};
use shyp_core::subsidiary::VelocityPolicy;
use shyp_core::{catalog, WaveCovector};

#[derive(Parser)]
#[command(
    name = "shyp",
    version,
    about = "Analyze first-order PDE systems with differential constraints: \
             Geroch fields, reductions, Kronecker structures, strong hyperbolicity \
             and the subsidiary (constraint-evolution) system."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis pipeline on a system-definition file.
    Analyze {
        /// Path to the system-definition JSON file.
        system: PathBuf,
        /// Number of unit wave covectors to sample.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Seed for the sampling stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative rank tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Optional Gram form file (JSON {"g": [[...]]}); identity when absent.
        #[arg(long)]
        gram: Option<PathBuf>,
        /// Where to write the report; stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Report format.
        #[arg(long, default_value = "json", value_parser = ["json", "text"])]
        format: String,
        /// Optional CSV side channel with per-sample scalars.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Constraint-velocity policy: "default" or "constant:<file>" with
        /// a JSON {"n_free": [[...]]} matrix.
        #[arg(long, default_value = "default")]
        velocity_policy: String,
        /// Sweep parallelism (1 = serial).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Deep analysis at a single wave covector.
    SingleK {
        /// Path to the system-definition JSON file.
        system: PathBuf,
        /// Comma-separated spatial components, e.g. 0,0,1.
        #[arg(long)]
        k: String,
        /// Relative rank tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Seed for the probe values of the identity checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the record; stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Report format.
        #[arg(long, default_value = "json", value_parser = ["json", "text"])]
        format: String,
    },
    /// Emit a built-in system definition.
    Catalog {
        /// One of: maxwell, wave, toy_weak.
        name: String,
        /// Constant lapse.
        #[arg(long, default_value_t = 1.0)]
        lapse: f64,
        /// Constant shift as comma-separated components a,b,c.
        #[arg(long, default_value = "0,0,0")]
        shift: String,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_vec(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("cannot parse `{s}` as a number: {e}"))
        })
        .collect()
}

fn parse_shift(text: &str) -> anyhow::Result<[f64; 3]> {
    let v = parse_vec(text)?;
    if v.len() != 3 {
        return Err(anyhow!("shift needs exactly 3 components, got {}", v.len()));
    }
    Ok([v[0], v[1], v[2]])
}

fn parse_matrix_file(path: &PathBuf, key: &str) -> anyhow::Result<Array2<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse {}", path.display()))?;
    let rows = value
        .get(key)
        .and_then(|v| v.as_array())
        .ok_or_else(|| anyhow!("{} must contain an array field `{key}`", path.display()))?;
    let nrows = rows.len();
    let ncols = rows
        .first()
        .and_then(|r| r.as_array())
        .map(|r| r.len())
        .unwrap_or(0);
    let mut out = Array2::zeros((nrows, ncols));
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| anyhow!("row {i} of `{key}` is not an array"))?;
        if row.len() != ncols {
            return Err(anyhow!("ragged rows in `{key}`"));
        }
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = v
                .as_f64()
                .ok_or_else(|| anyhow!("non-numeric entry in `{key}`"))?;
        }
    }
    Ok(out)
}

/// Pipeline stage a core error belongs to, for error reporting.
fn stage_of(err: &shyp_core::Error) -> &'static str {
    use shyp_core::Error::*;
    match err {
        DimensionMismatch(_) | NonFiniteEntry(_) | ZeroWaveVector => "input validation",
        ConditionN0Failure { .. } => "condition checks",
        Condition1Unsatisfiable { .. } | CountMismatch { .. } | LemmaM0Violation { .. } => {
            "geroch splitting"
        }
        InvalidCoefficientLength { .. } => "reduction",
        ComplexPhysicalEigenvalue { .. } | SubspaceDimensionMismatch { .. } => "spectral sweep",
        SingularVelocityAssignment { .. } | ConditionVFailure { .. } => "subsidiary sweep",
        InvalidLapse(_) | UnknownCatalogName(_) => "catalog",
        Linalg(_) => "linear algebra backend",
    }
}

fn write_or_print(path: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze {
            system,
            samples,
            seed,
            tol,
            gram,
            report,
            format,
            csv,
            velocity_policy,
            jobs,
        } => {
            let symbol = read_system(&system).map_err(|e| anyhow!("parse stage: {e}"))?;
            let gram = match gram {
                Some(path) => Some(parse_matrix_file(&path, "g")?),
                None => None,
            };
            let policy = match velocity_policy.as_str() {
                "default" => VelocityPolicy::Default,
                other => match other.strip_prefix("constant:") {
                    Some(path) => {
                        VelocityPolicy::Constant(parse_matrix_file(&PathBuf::from(path), "n_free")?)
                    }
                    None => return Err(anyhow!("unknown velocity policy `{other}`")),
                },
            };
            let options = AnalyzeOptions {
                samples,
                seed,
                tol,
                gram,
                velocity_policy: policy,
                jobs,
            };
            let result =
                analyze(&symbol, &options).map_err(|e| anyhow!("{} stage: {e}", stage_of(&e)))?;
            let text = match format.as_str() {
                "json" => {
                    let mut t = serde_json::to_string_pretty(&result)?;
                    t.push('\n');
                    t
                }
                _ => render_text(&result),
            };
            write_or_print(&report, &text)?;
            if let Some(csv_path) = csv {
                let mut out = String::from("kx,ky,kz,min_cos,max_eig_imag,ss_cond_number\n");
                for (evo, sub) in result
                    .evolution
                    .records
                    .iter()
                    .zip(result.subsidiary.records.iter())
                {
                    let mut comps = evo.k.clone();
                    comps.resize(3, 0.0);
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        comps[0],
                        comps[1],
                        comps[2],
                        evo.min_cosine,
                        evo.max_imag,
                        sub.eigenvector_condition
                    ));
                }
                std::fs::write(&csv_path, out)
                    .with_context(|| format!("cannot write {}", csv_path.display()))?;
            }
            let all_true = result.verdicts.hyperbolic
                && result.verdicts.strongly_hyperbolic
                && result.verdicts.subsidiary_strongly_hyperbolic;
            Ok(if all_true {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::SingleK {
            system,
            k,
            tol,
            seed,
            report,
            format,
        } => {
            let symbol = read_system(&system).map_err(|e| anyhow!("parse stage: {e}"))?;
            let comps = parse_vec(&k)?;
            let covector = WaveCovector::from_spatial(&comps)
                .map_err(|e| anyhow!("wave covector: {e}"))?;
            let options = AnalyzeOptions {
                seed,
                tol,
                ..AnalyzeOptions::default()
            };
            let record = shyp_core::report::single_k(&symbol, &covector, &options)
                .map_err(|e| anyhow!("{} stage: {e}", stage_of(&e)))?;
            let text = match format.as_str() {
                "json" => {
                    let mut t = serde_json::to_string_pretty(&record)?;
                    t.push('\n');
                    t
                }
                _ => render_spectral_text(&record),
            };
            write_or_print(&report, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Catalog {
            name,
            lapse,
            shift,
            out,
        } => {
            let shift = parse_shift(&shift)?;
            let entry = catalog::by_name(&name, lapse, shift)
                .map_err(|e| anyhow!("catalog stage: {e}"))?;
            match out {
                Some(path) => {
                    write_system(&path, &entry.symbol).map_err(|e| anyhow!("write stage: {e}"))?
                }
                None => print!("{}", SystemFile::from_symbol(&entry.symbol).to_json()),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
