//! Command-line surface. Exit statuses: 0 success, 1 validation or domain
//! error, 2 I/O or parse error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::algebra::{
    self, BandTableDocument, InterpretationConfig, PerCategory, RelationCategory, ScalarConfig, Sign, WeightVector,
};
use crate::catalog::{self, Assessment, CapMode, CatalogDocument, PropertyCatalog, Window};
use crate::relations::{Nation, RelationStore};
use crate::report::{self, build_report};
use crate::sweep::{run_sweep, SensitivitySpec, SweepTarget};

#[derive(Debug, Parser)]
#[command(
    name = "nation-trust",
    version,
    about = "Trust algebra for directed nation-to-nation relations"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a catalog and/or an assessment; exit 1 on any violation.
    Validate {
        /// Catalog document (the shipped catalog when omitted).
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        assessment: Option<PathBuf>,
        #[arg(long, default_value = "strict")]
        cap_mode: CapMode,
    },
    /// Evaluate one assessment and print the pipeline report.
    Evaluate(EvaluateArgs),
    /// Print the relation matrix of a store.
    Matrix {
        #[arg(long)]
        store: PathBuf,
        /// Comma-separated nation ids, in row/column order. Defaults to every registered nation.
        #[arg(long, value_delimiter = ',')]
        nations: Option<Vec<String>>,
        /// YYYY-MM-DD..YYYY-MM-DD
        #[arg(long)]
        window: Window,
        #[arg(long, value_enum, default_value_t = MatrixFormat::Text)]
        format: MatrixFormat,
    },
    /// Sweep one weight or property value and report label flips.
    Whatif(WhatifArgs),
    /// Catalog utilities.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
    /// Nation registry utilities.
    Nation {
        #[command(subcommand)]
        command: NationCommand,
    },
}

#[derive(Debug, Subcommand)]
enum CatalogCommand {
    /// Print a catalog (the shipped one by default).
    Show {
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ShowFormat::Text)]
        format: ShowFormat,
    },
}

#[derive(Debug, Subcommand)]
enum NationCommand {
    /// Register a nation in a store document, creating the store if needed.
    Add {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        name: String,
        #[arg(long)]
        un_member: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatrixFormat {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ShowFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct WeightArgs {
    /// hostile,neutral,friendly
    #[arg(long, value_delimiter = ',', num_args = 1)]
    weights: Option<Vec<f64>>,
    #[arg(long)]
    weight_hostile: Option<f64>,
    #[arg(long)]
    weight_neutral: Option<f64>,
    #[arg(long)]
    weight_friendly: Option<f64>,
    /// hostile,neutral,friendly signs, each - or +
    #[arg(long, default_value = "-,+,+", allow_hyphen_values = true)]
    signs: String,
}

impl WeightArgs {
    fn weights(&self) -> Result<WeightVector, CliError> {
        let mut raw: PerCategory<Option<f64>> = PerCategory::default();
        if let Some(list) = &self.weights {
            let [h, n, f] = list[..] else {
                return Err(CliError::Usage(format!(
                    "--weights takes three values (hostile,neutral,friendly), got {}",
                    list.len()
                )));
            };
            raw = PerCategory::new(Some(h), Some(n), Some(f));
        }
        for (c, v) in [
            (RelationCategory::Hostile, self.weight_hostile),
            (RelationCategory::Neutral, self.weight_neutral),
            (RelationCategory::Friendly, self.weight_friendly),
        ] {
            if v.is_some() {
                raw[c] = v;
            }
        }
        let mut missing = Vec::new();
        let values = PerCategory::from_fn(|c| {
            raw[c].unwrap_or_else(|| {
                missing.push(c.as_str());
                0.0
            })
        });
        if !missing.is_empty() {
            return Err(CliError::Usage(format!(
                "missing weight for {} (use --weights h,n,f or --weight-<category>)",
                missing.join(", ")
            )));
        }
        algebra::validate_weights(values).map_err(|e| CliError::Domain(format!("weights stage failed: {e}")))
    }

    fn signs(&self) -> Result<ScalarConfig, CliError> {
        let parts = self
            .signs
            .split(',')
            .map(str::parse::<Sign>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::Usage)?;
        let [h, n, f] = parts[..] else {
            return Err(CliError::Usage(format!(
                "--signs takes three values, got `{}`",
                self.signs
            )));
        };
        Ok(ScalarConfig(PerCategory::new(h, n, f)))
    }
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Catalog document (the shipped catalog when omitted).
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    assessment: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
    /// Band table document for finer-grained labels.
    #[arg(long)]
    bands: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
    #[arg(long, default_value = "strict")]
    cap_mode: CapMode,
    /// Distance used by the strength interpretation flags.
    #[arg(long, default_value_t = algebra::DEFAULT_DELTA)]
    delta: f64,
    /// Also store the evaluation in this store document.
    #[arg(long)]
    record_into: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WhatifArgs {
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    assessment: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, default_value = "strict")]
    cap_mode: CapMode,
    /// Category whose weight is swept; the other two rescale proportionally.
    #[arg(long, conflicts_with = "sweep_property", required_unless_present = "sweep_property")]
    sweep_weight: Option<RelationCategory>,
    /// Property id whose observed value is swept.
    #[arg(long)]
    sweep_property: Option<String>,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    step: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_catalog(path: Option<&Path>) -> Result<PropertyCatalog, CliError> {
    let Some(path) = path else {
        return Ok(PropertyCatalog::default_catalog());
    };
    let doc: CatalogDocument = parse(path)?;
    PropertyCatalog::try_from(doc).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn load_store(path: &Path) -> Result<RelationStore, CliError> {
    let doc = parse(path)?;
    RelationStore::from_document(doc).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Validate {
            catalog,
            assessment,
            cap_mode,
        } => validate(catalog.as_deref(), assessment.as_deref(), cap_mode, out, err),
        Command::Evaluate(args) => evaluate(args, out),
        Command::Matrix {
            store,
            nations,
            window,
            format,
        } => {
            let store = load_store(&store)?;
            let ids: Vec<String> = match nations {
                Some(list) => list
                    .into_iter()
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect(),
                None => store.nations().map(|n| n.id.clone()).collect(),
            };
            let m = store
                .relation_matrix(&ids, window)
                .map_err(|e| CliError::Domain(e.to_string()))?;
            emit(
                out,
                &match format {
                    MatrixFormat::Text => report::matrix_to_text(&m),
                    MatrixFormat::Csv => report::matrix_to_csv(&m),
                },
            )?;
            Ok(0)
        }
        Command::Whatif(args) => whatif(args, out),
        Command::Catalog {
            command: CatalogCommand::Show { catalog, format },
        } => {
            let c = load_catalog(catalog.as_deref())?;
            let mut text = match format {
                ShowFormat::Text => report::catalog_to_text(&c),
                ShowFormat::Json => c.to_json(),
            };
            if !text.ends_with('\n') {
                text.push('\n');
            }
            emit(out, &text)?;
            Ok(0)
        }
        Command::Nation {
            command:
                NationCommand::Add {
                    store,
                    id,
                    name,
                    un_member,
                },
        } => {
            let mut s = if store.exists() {
                load_store(&store)?
            } else {
                RelationStore::new()
            };
            s.register_nation(Nation::new(id.clone(), name, un_member))
                .map_err(|e| CliError::Domain(e.to_string()))?;
            write_file(&store, &(s.to_json() + "\n"))?;
            emit(out, &format!("registered {id}\n"))?;
            Ok(0)
        }
    }
}

fn validate(
    catalog_path: Option<&Path>,
    assessment_path: Option<&Path>,
    mode: CapMode,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut failures = 0usize;
    let catalog = match catalog_path {
        None => PropertyCatalog::default_catalog(),
        Some(path) => {
            let doc: CatalogDocument = parse(path)?;
            let violations = doc.violations();
            for v in &violations {
                emit(out, &format!("{}: {v}\n", path.display()))?;
            }
            failures += violations.len();
            match PropertyCatalog::try_from(doc) {
                Ok(c) => c,
                Err(_) => {
                    if assessment_path.is_some() {
                        let _ = writeln!(err, "skipping assessment: catalog is invalid");
                    }
                    return Ok(1);
                }
            }
        }
    };
    if let Some(path) = assessment_path {
        let a: Assessment = parse(path)?;
        let r = catalog::validate_assessment(&a, &catalog, mode);
        for v in &r.violations {
            emit(out, &format!("{}: {v}\n", path.display()))?;
        }
        for w in &r.warnings {
            let _ = writeln!(err, "warning: {}: {w}", path.display());
        }
        failures += r.violations.len();
    }
    if failures == 0 {
        emit(out, "ok\n")?;
        Ok(0)
    } else {
        Ok(1)
    }
}

fn evaluate(args: EvaluateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let weights = args.weights.weights()?;
    let signs = args.weights.signs()?;
    let catalog = load_catalog(args.catalog.as_deref())?;
    let assessment: Assessment = parse(&args.assessment)?;
    let bands: Option<BandTableDocument> = args.bands.as_deref().map(parse).transpose()?;
    if !(args.delta.is_finite() && args.delta >= 0.0) {
        return Err(CliError::Usage("--delta must be a non-negative number".into()));
    }
    let interp = InterpretationConfig { delta: args.delta };
    let report = build_report(
        &catalog,
        &assessment,
        &weights,
        &signs,
        bands.as_ref(),
        args.cap_mode,
        &interp,
    )
    .map_err(|e| CliError::Domain(e.to_string()))?;
    if let Some(path) = &args.record_into {
        let mut store = load_store(path)?;
        store
            .evaluate_relation(
                &assessment.subject,
                &assessment.object,
                &assessment,
                &catalog,
                &weights,
                &signs,
                args.cap_mode,
            )
            .map_err(|e| CliError::Domain(format!("record stage failed: {e}")))?;
        write_file(path, &(store.to_json() + "\n"))?;
    }
    emit(
        out,
        &match args.format {
            ReportFormat::Text => report.to_text(),
            ReportFormat::Json => report.to_json(),
            ReportFormat::Csv => report.to_csv(),
        },
    )?;
    Ok(0)
}

fn whatif(args: WhatifArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let weights = args.weights.weights()?;
    let signs = args.weights.signs()?;
    let catalog = load_catalog(args.catalog.as_deref())?;
    let assessment: Assessment = parse(&args.assessment)?;
    let target = match (args.sweep_weight, args.sweep_property) {
        (Some(c), None) => SweepTarget::Weight(c),
        (None, Some(id)) => SweepTarget::Property(id),
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --sweep-weight or --sweep-property".into(),
            ))
        }
    };
    let spec = SensitivitySpec {
        target,
        from: args.from,
        to: args.to,
        step: args.step,
    };
    let result = run_sweep(&catalog, &assessment, &weights, &signs, args.cap_mode, &spec)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    emit(
        out,
        &match args.format {
            ReportFormat::Text => result.to_text(),
            ReportFormat::Json => result.to_json(),
            ReportFormat::Csv => result.to_csv(),
        },
    )?;
    Ok(0)
}

impl ValueEnum for RelationCategory {
    fn value_variants<'a>() -> &'a [Self] {
        &RelationCategory::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }
}

impl ValueEnum for CapMode {
    fn value_variants<'a>() -> &'a [Self] {
        &[CapMode::Strict, CapMode::Free]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            CapMode::Strict => "strict",
            CapMode::Free => "free",
        }))
    }
}
