use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use siframe::fiberization::{bracket, spectral_profile, DEFAULT_RANK_TOL};
use siframe::frontdesk::corpus::{corpus_build, ENTRIES};
use siframe::frontdesk::io::{write_field, write_gramian, write_spectral_csv, Encoding};
use siframe::frontdesk::report::now_unix;
use siframe::frontdesk::{parse_fibers, run_analyze, run_dual, run_oracle, run_reconstruct, run_scaling, Config};
use siframe::mixed_norms::parse_exponent;
use siframe::Error;

/// Frame verdicts, duals and reconstruction for shift-invariant spaces in
/// mixed Lebesgue norms.
///
/// Exit status: 0 when the run's verdict is true, 2 when it is false, 1 on
/// error. `SIFRAME_THREADS` caps the worker threads.
#[derive(Parser)]
#[command(name = "siframe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bracket, rank constancy, band condition, dual, reconstruction and frame bounds.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Also run the finite-group verdicts on the sampled system.
        #[arg(long)]
        oracle: bool,
        /// Write the bracket field (JSON index plus binary blocks).
        #[arg(long, value_name = "PATH")]
        gramian: Option<PathBuf>,
        /// Write the spectral profile as CSV.
        #[arg(long, value_name = "PATH")]
        profile: Option<PathBuf>,
    },
    /// Build dual generators and optionally write them as sampled fields.
    Dual {
        #[command(flatten)]
        common: Common,
        /// Directory for `dual_<i>.field` files.
        #[arg(long, value_name = "DIR")]
        emit: Option<PathBuf>,
    },
    /// Reconstruct a field (or the seeded random test field) through the dual.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Sampled-field file to reconstruct.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        /// Write the reconstructed field here.
        #[arg(long, value_name = "PATH")]
        emit: Option<PathBuf>,
    },
    /// Finite-group verdicts for a bundled scenario or a scenario file.
    Oracle {
        /// `delta`, `diff-filter`, `random-20`, `adversarial`, or a JSON path.
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Scaling-limit diagnostic of the first generator.
    DiagnoseScaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "N")]
        n_max: Option<u32>,
    },
    /// List corpus entries or write their generators to files.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    List {
        #[command(flatten)]
        common: Common,
    },
    /// Write every generator of an entry as `<label>.field` into `--out` (a directory).
    Emit {
        name: String,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "csv")]
        encoding: FieldEncoding,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldEncoding {
    Csv,
    Binary,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// JSON or TOML configuration; flags override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Corpus entry.
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long, value_parser = exponent)]
    p: Option<f64>,
    #[arg(long, value_parser = exponent)]
    q: Option<f64>,
    /// Frequency nodes, e.g. `64x16`.
    #[arg(long, value_name = "N1xN2")]
    fibers: Option<String>,
    /// Periodization radius.
    #[arg(long = "J", value_name = "J")]
    j: Option<usize>,
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when absent).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Omit the timestamp so identical inputs give identical bytes.
    #[arg(long)]
    stable: bool,
}

fn exponent(s: &str) -> Result<f64, String> {
    parse_exponent(s).map_err(|e| e.to_string())
}

impl Common {
    fn config(&self) -> Result<Config, Error> {
        let mut c = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(v) = &self.corpus {
            c.corpus = v.clone();
            c.generators.clear();
        }
        if let Some(v) = self.p {
            c.p = v;
        }
        if let Some(v) = self.q {
            c.q = v;
        }
        if let Some(v) = &self.fibers {
            c.fibers = parse_fibers(v)?;
        }
        if self.j.is_some() {
            c.j = self.j;
        }
        if let Some(v) = self.rank_tol {
            c.rank_tol = v;
        }
        if let Some(v) = self.trials {
            c.trials = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.validate()?;
        Ok(c)
    }

    fn stamp(&self) -> Option<u64> {
        (!self.stable).then(now_unix)
    }

    fn emit<T: Serialize>(&self, doc: &T) -> Result<(), Error> {
        let text = match self.format {
            Format::Json => serde_json::to_string_pretty(doc)? + "\n",
            Format::Csv => {
                let value = serde_json::to_value(doc)?;
                let mut rows = vec![("key".to_string(), "value".to_string())];
                flatten("", &value, &mut rows);
                rows.iter().map(|(k, v)| format!("{k},{}\n", csv_cell(v))).collect()
            }
        };
        match &self.out {
            Some(p) => fs::write(p, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

/// Dotted-key listing of every scalar in a JSON document.
fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten(&key(k), x, rows)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, rows)),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn encoding(e: FieldEncoding) -> Encoding {
    match e {
        FieldEncoding::Csv => Encoding::Csv,
        FieldEncoding::Binary => Encoding::Binary,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Analyze {
            common,
            oracle,
            gramian,
            profile,
        } => {
            let mut cfg = common.config()?;
            cfg.oracle |= oracle;
            let mut report = run_analyze(&cfg)?;
            report.generated_unix = common.stamp();
            if gramian.is_some() || profile.is_some() {
                let phi = cfg.system()?;
                let g = bracket(&phi, &phi, &cfg.frequency_grid(&phi)?)?;
                if let Some(p) = gramian {
                    write_gramian(&p, &g)?;
                }
                if let Some(p) = profile {
                    let mut w = std::io::BufWriter::new(fs::File::create(p)?);
                    write_spectral_csv(&mut w, &spectral_profile(&g, cfg.rank_tol)?)?;
                    w.flush()?;
                }
            }
            common.emit(&report)?;
            Ok(verdict(report.frame))
        }
        Command::Dual { common, emit } => {
            let cfg = common.config()?;
            let (mut report, dual) = match run_dual(&cfg) {
                Err(e) if matches!(e.root(), Error::ConditionIIIFails { .. }) => {
                    eprintln!("siframe: {e}");
                    return Ok(verdict(false));
                }
                other => other?,
            };
            report.generated_unix = common.stamp();
            if let Some(dir) = emit {
                fs::create_dir_all(&dir)?;
                for (i, g) in dual.psi.generators().iter().enumerate() {
                    write_field(&dir.join(format!("dual_{i}.field")), g, Encoding::Csv)?;
                }
            }
            common.emit(&report)?;
            Ok(verdict(true))
        }
        Command::Reconstruct { common, input, emit } => {
            let cfg = common.config()?;
            let (mut report, field) = match run_reconstruct(&cfg, input.as_deref()) {
                Err(e) if matches!(e.root(), Error::ConditionIIIFails { .. }) => {
                    eprintln!("siframe: {e}");
                    return Ok(verdict(false));
                }
                other => other?,
            };
            report.generated_unix = common.stamp();
            if let Some(p) = emit {
                write_field(&p, &field, Encoding::Csv)?;
            }
            common.emit(&report)?;
            Ok(verdict(true))
        }
        Command::Oracle { scenario, common } => {
            let tol = match &common.config {
                Some(_) => common.config()?.rank_tol,
                None => common.rank_tol.unwrap_or(DEFAULT_RANK_TOL),
            };
            let mut report = run_oracle(&scenario, tol)?;
            report.generated_unix = common.stamp();
            common.emit(&report)?;
            Ok(verdict(report.agreement))
        }
        Command::DiagnoseScaling { common, n_max } => {
            let mut cfg = common.config()?;
            if let Some(n) = n_max {
                cfg.scaling_n_max = n;
            }
            let mut report = run_scaling(&cfg)?;
            report.generated_unix = common.stamp();
            common.emit(&report)?;
            Ok(verdict(report.diagnostic.decayed))
        }
        Command::Corpus { action } => match action {
            CorpusAction::List { common } => {
                common.emit(&ENTRIES)?;
                Ok(ExitCode::SUCCESS)
            }
            CorpusAction::Emit {
                name,
                common,
                encoding: enc,
            } => {
                let cfg = common.config()?;
                let phi = corpus_build(&name, &cfg.corpus_params())?;
                let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
                fs::create_dir_all(&dir)?;
                let mut written = Vec::new();
                for (g, label) in phi.generators().iter().zip(phi.labels()) {
                    let path = dir.join(format!("{}.field", sanitize(label)));
                    write_field(&path, g, encoding(enc))?;
                    written.push(path.display().to_string());
                }
                println!("{}", serde_json::to_string_pretty(&written)?);
                Ok(ExitCode::SUCCESS)
            }
        },
    }
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn init_threads() {
    if let Some(n) = std::env::var("SIFRAME_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    // Usage errors exit 1; clap's own status 2 would read as a false verdict.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("siframe: {e}");
            ExitCode::from(1)
        }
    }
}
