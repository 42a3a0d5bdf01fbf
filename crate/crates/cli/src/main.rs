use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lpr_core::eval::{evaluate_corpus, load_truth};
use lpr_core::imaging::io::open_color;
use lpr_core::pipeline::recognize_with_diagnostics;
use lpr_core::recognition::font::StrokeFont;
use lpr_core::recognition::{load_templates, write_template_dir, write_template_zip};
use lpr_core::synth::{write_corpus, SynthOptions, TRUTH_FILE};
use lpr_core::{recognize, PipelineConfig, RecognitionResult, TemplateSet};
use lpr_service::ServerOptions;
use thiserror::Error;

#[derive(Parser)]
#[command(name = "lpr", version, about = "License plate recognition tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct EngineArgs {
    /// Pipeline config file (key=value).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Template archive (directory or zip); defaults to the bundled set.
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Read the plate in one image. Exits 0 when a plate is read, 2 when not.
    Recognize {
        image: PathBuf,
        /// Write per-stage images and reports to this directory.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Print the full result as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Score a labelled corpus and write report.json.
    Batch {
        corpus: PathBuf,
        /// Truth CSV; defaults to truth.csv inside the corpus.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Report path; defaults to report.json inside the corpus.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Render a labelled synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Maximum rotation in degrees; each scene draws uniformly from ±skew.
        #[arg(long, default_value_t = 0.0)]
        skew: f64,
        /// Gaussian pixel noise sigma, in gray levels.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Darken part of the plate with a brightness ramp.
        #[arg(long)]
        shadow: bool,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        lines: u8,
        /// Put an emblem beside the text.
        #[arg(long)]
        logo: bool,
    },
    /// Write a template archive (a directory, or a zip when OUT ends in .zip).
    Templates {
        #[arg(long)]
        out: PathBuf,
        /// Stroke font source; defaults to the bundled font.
        #[arg(long)]
        font: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[command(flatten)]
        server: ServerOptions,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Engine(#[from] lpr_core::Error),
    #[error(transparent)]
    Service(#[from] lpr_service::Error),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("lpr: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Recognize { image, dump, json, engine } => recognize_cmd(&image, dump.as_deref(), json, &engine),
        Command::Batch { corpus, truth, report, engine } => {
            batch(&corpus, truth.as_deref(), report.as_deref(), &engine).map(|_| ExitCode::SUCCESS)
        }
        Command::Synth { count, out, seed, skew, noise, shadow, lines, logo } => {
            let opts =
                SynthOptions { max_skew_deg: skew, noise_sigma: noise, shadow, lines, logo, ..Default::default() };
            if !(0.0..=45.0).contains(&skew) || noise < 0.0 {
                return Err(CliError::Usage("--skew must be in [0, 45] and --noise non-negative".into()));
            }
            let entries = write_corpus(&out, count, seed, &opts)?;
            println!("wrote {} scenes and {} to {}", entries.len(), TRUTH_FILE, out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Templates { out, font } => {
            let font = match &font {
                Some(p) => StrokeFont::parse(&read_text(p)?)?,
                None => StrokeFont::builtin(),
            };
            let set = TemplateSet::from_font(&font)?;
            if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("zip")) {
                write_template_zip(&set, &out)?;
            } else {
                write_template_dir(&set, &out)?;
            }
            let check = load_templates(&out)?;
            println!("wrote {} templates (version {}) to {}", check.templates().len(), check.version(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { server } => {
            lpr_service::init_logging();
            let rt =
                tokio::runtime::Runtime::new().map_err(|source| CliError::File { path: "runtime".into(), source })?;
            rt.block_on(lpr_service::run(server))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn load_engine(args: &EngineArgs) -> Result<(PipelineConfig, TemplateSet)> {
    let cfg = match &args.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let templates = match &args.templates {
        Some(p) => load_templates(p)?,
        None => TemplateSet::builtin().clone(),
    };
    Ok((cfg, templates))
}

fn recognize_cmd(image: &Path, dump: Option<&Path>, json: bool, engine: &EngineArgs) -> Result<ExitCode> {
    let (cfg, templates) = load_engine(engine)?;
    let img = open_color(image).map_err(|e| match e {
        lpr_core::Error::Io(source) => CliError::File { path: image.to_path_buf(), source },
        other => other.into(),
    })?;
    let result = match dump {
        Some(dir) => recognize_with_diagnostics(&img, &cfg, &templates, dir)?,
        None => recognize(&img, &cfg, &templates),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&result).expect("results serialize"));
    } else {
        print!("{}", describe(&result));
    }
    Ok(if result.failure.is_none() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn describe(r: &RecognitionResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status      {}", r.status());
    if let Some(p) = &r.plate {
        let _ = writeln!(s, "plate       {}", p.text);
        let _ = writeln!(s, "confidence  {:.3}", p.confidence);
    }
    if let Some(k) = r.candidate_used {
        let _ = writeln!(s, "candidate   {k}");
    }
    if let Some(b) = r.plate_bounds {
        let _ = writeln!(s, "bounds      x={} y={} w={} h={}", b.x, b.y, b.width, b.height);
    }
    let _ = writeln!(s, "skew        {:+.1} deg", r.skew_deg);
    let total: f64 = r.stage_timings.iter().map(|t| t.ms).sum();
    let _ = writeln!(s, "time        {total:.1} ms");
    for t in &r.stage_timings {
        let stage = match t.candidate {
            Some(k) => format!("{}[{k}]", t.stage),
            None => t.stage.clone(),
        };
        let _ = writeln!(s, "  {stage:<14}{:>8.2} ms", t.ms);
    }
    if let Some(d) = &r.diagnostics {
        let _ = writeln!(s, "dump        {}", d.display());
    }
    s
}

fn batch(corpus: &Path, truth: Option<&Path>, report: Option<&Path>, engine: &EngineArgs) -> Result<()> {
    let (cfg, templates) = load_engine(engine)?;
    let truth_path = truth.map_or_else(|| corpus.join(TRUTH_FILE), Path::to_path_buf);
    let entries = load_truth(&truth_path).map_err(|e| match e {
        lpr_core::Error::Io(source) => CliError::File { path: truth_path.clone(), source },
        other => other.into(),
    })?;
    if let Some(missing) = entries.iter().find(|e| !corpus.join(&e.image).is_file()) {
        return Err(CliError::Usage(format!(
            "image {} listed in the truth file does not exist",
            missing.image.display()
        )));
    }
    let (report_data, _) = evaluate_corpus(corpus, &entries, &cfg, &templates)?;
    let report_path = report.map_or_else(|| corpus.join("report.json"), Path::to_path_buf);
    let json = serde_json::to_string_pretty(&report_data).expect("reports serialize");
    std::fs::write(&report_path, json + "\n").map_err(|source| CliError::File { path: report_path.clone(), source })?;
    print!("{}", report_data.to_table());
    println!("report written to {}", report_path.display());
    Ok(())
}
