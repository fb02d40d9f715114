//! `fm`: validate, simulate, export and measure flow models.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use flowmodel::corpus::{corpus_list, entry};
use flowmodel::dsl::{self, LoadError, SourceFile};
use flowmodel::export::{export_model, export_trace, StyleProfile};
use flowmodel::metrics::{hartley, shannon_choices, trace_metrics};
use flowmodel::model::SystemModel;
use flowmodel::simulator::{run, Scenario, ScenarioSpec, Trace};
use flowmodel::validator::{has_errors, validate, StrictnessProfile};

#[derive(Parser)]
#[command(name = "fm", version, about = "Flow model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Strict,
    Legacy,
}

impl From<Profile> for StrictnessProfile {
    fn from(p: Profile) -> Self {
        match p {
            Profile::Strict => StrictnessProfile::Strict,
            Profile::Legacy => StrictnessProfile::Legacy,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// One JSON object per line.
    Records,
}

#[derive(Clone, Copy, ValueEnum)]
enum Style {
    Figure,
    Plain,
}

impl From<Style> for StyleProfile {
    fn from(s: Style) -> Self {
        match s {
            Style::Figure => StyleProfile::Figure,
            Style::Plain => StyleProfile::Plain,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a model against the well-formedness rules.
    Validate {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "strict")]
        profile: Profile,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run a scenario over a model.
    Simulate {
        model: PathBuf,
        /// Scenario file (.fms); without one, nothing is injected.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
        /// Write the JSONL trace here (`-` for stdout).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print trace metrics as JSON.
        #[arg(long)]
        metrics: bool,
        #[arg(long, value_enum)]
        profile: Option<Profile>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Render a model, optionally annotated with a trace, as Graphviz DOT.
    Export {
        model: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "figure")]
        style: Style,
    },
    /// Information measures.
    Metrics {
        #[command(subcommand)]
        which: MetricsCommand,
    },
    /// Reformat a model file in place, or check that it is formatted.
    Fmt {
        path: PathBuf,
        #[arg(long)]
        check: bool,
    },
    /// Browse the bundled example models.
    Corpus {
        #[command(subcommand)]
        which: CorpusCommand,
    },
}

#[derive(Subcommand)]
enum MetricsCommand {
    /// N signs over a vocabulary of S.
    Hartley {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        s: u64,
        #[arg(long, default_value_t = 2.0)]
        base: f64,
    },
    /// log2 of C equally likely choices.
    Choices {
        #[arg(long)]
        c: u64,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    List,
    /// Print an entry's model, scenario and commentary.
    Show {
        slug: String,
    },
}

/// A failure with its exit code: 1 for findings, 2 for unusable input.
struct Failure {
    code: u8,
    message: String,
}

fn finding(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn bad_input(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| bad_input(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<SystemModel, Failure> {
    let text = read(path)?;
    dsl::load(&text).map_err(|e| {
        let mut msg = format!("{}: {e}", path.display());
        match e {
            LoadError::Parse(diags) => {
                let src = SourceFile::new(Some(path.display().to_string()), text);
                for d in diags.iter().filter(|d| d.is_error()) {
                    msg.push('\n');
                    msg.push_str(&src.render(d));
                }
            }
            LoadError::Build(errs) => {
                for b in errs {
                    msg.push_str(&format!("\n  {b}"));
                }
            }
        }
        bad_input(msg)
    })
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable value")
}

fn write_out(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::write(p, text).map_err(|e| bad_input(format!("{}: {e}", p.display())))
        }
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_validate(path: &Path, profile: StrictnessProfile, format: Format) -> Outcome {
    let model = load_model(path)?;
    let violations = validate(&model, profile);
    for v in &violations {
        match format {
            Format::Text => println!("{}", v.render(&model)),
            Format::Records => println!("{}", json(&v.record(&model))),
        }
    }
    if format == Format::Text && violations.is_empty() {
        println!("ok: no violations");
    }
    if has_errors(&violations) {
        return Err(finding(format!(
            "{}: {} violation(s)",
            path.display(),
            violations.len()
        )));
    }
    Ok(())
}

struct SimulateArgs {
    scenario: Option<PathBuf>,
    seed: Option<u64>,
    horizon: Option<u64>,
    trace: Option<PathBuf>,
    metrics: bool,
    profile: Option<Profile>,
    format: Format,
}

fn cmd_simulate(model_path: &Path, args: SimulateArgs) -> Outcome {
    let model = Arc::new(load_model(model_path)?);
    let mut scenario = match &args.scenario {
        Some(p) => {
            let text = read(p)?;
            let spec = ScenarioSpec::parse(&text)
                .map_err(|e| bad_input(format!("{}: {e}", p.display())))?;
            spec.resolve(model.clone())
                .map_err(|errs| finding(format!("{}: {}", p.display(), errs.join("; "))))?
        }
        None => Scenario::new(model.clone()),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(h) = args.horizon {
        scenario.horizon = h;
    }
    if let Some(p) = args.profile {
        scenario.profile = p.into();
    }
    let trace = run(&scenario).map_err(|e| finding(e.to_string()))?;
    if let Some(p) = &args.trace {
        write_out(Some(p), &trace.to_jsonl(&model))?;
    }
    let to_stdout = args.trace.as_deref() == Some(Path::new("-"));
    if args.metrics {
        let m = trace_metrics(&trace);
        let line = json(&m);
        if to_stdout {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    } else if !to_stdout {
        summarize(&trace, &model, args.format);
    }
    Ok(())
}

fn summarize(trace: &Trace, model: &SystemModel, format: Format) {
    match format {
        Format::Records => {
            for r in trace.records(model) {
                println!("{}", json(&r));
            }
        }
        Format::Text => {
            for e in &trace.events {
                println!(
                    "t={} {} {} {}",
                    e.time,
                    e.token,
                    model.location_path(e.at),
                    e.kind.name()
                );
            }
            println!(
                "{} events, {} tokens, {} in flight",
                trace.events.len(),
                trace.tokens().len(),
                trace.in_flight()
            );
        }
    }
}

fn cmd_export(
    model_path: &Path,
    trace: Option<&Path>,
    out: Option<&Path>,
    style: Style,
) -> Outcome {
    let model = load_model(model_path)?;
    let violations = validate(&model, StrictnessProfile::Strict);
    if has_errors(&violations) {
        let lines: Vec<String> = violations.iter().map(|v| v.render(&model)).collect();
        return Err(finding(format!(
            "{}: model is invalid\n{}",
            model_path.display(),
            lines.join("\n")
        )));
    }
    let dot = match trace {
        None => export_model(&model, style.into()),
        Some(p) => {
            let text = read(p)?;
            let t = Trace::from_jsonl(&text, &model)
                .map_err(|e| bad_input(format!("{}: {e}", p.display())))?;
            export_trace(&t, &model, style.into()).map_err(|e| finding(e.to_string()))?
        }
    };
    write_out(out, &dot)
}

fn cmd_metrics(which: MetricsCommand) -> Outcome {
    let value = match which {
        MetricsCommand::Hartley { n, s, base } => hartley(n, s, base),
        MetricsCommand::Choices { c } => shannon_choices(c),
    }
    .map_err(|e| bad_input(e.to_string()))?;
    println!("{value}");
    Ok(())
}

fn cmd_fmt(path: &Path, check: bool) -> Outcome {
    let text = read(path)?;
    let formatted = dsl::format(&text).map_err(|e| {
        let src = SourceFile::new(Some(path.display().to_string()), text.clone());
        let dsl::FormatError::RefusesMalformed(diags) = &e;
        let rendered: Vec<String> = diags.iter().map(|d| src.render(d)).collect();
        bad_input(format!("{}: {e}\n{}", path.display(), rendered.join("\n")))
    })?;
    if formatted == text {
        return Ok(());
    }
    if check {
        return Err(finding(format!("{}: not formatted", path.display())));
    }
    fs::write(path, formatted).map_err(|e| bad_input(format!("{}: {e}", path.display())))
}

fn cmd_corpus(which: CorpusCommand) -> Outcome {
    match which {
        CorpusCommand::List => {
            for e in corpus_list() {
                println!("{:<16} {}", e.slug, e.title);
            }
        }
        CorpusCommand::Show { slug } => {
            let e = entry(&slug).map_err(|e| finding(e.to_string()))?;
            println!("# {} — {}\n", e.slug, e.title);
            println!("{}\n", e.commentary.trim());
            println!("## model\n\n{}", e.model_src);
            println!("## scenario\n\n{}", e.scenario_src);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Validate {
            path,
            profile,
            format,
        } => cmd_validate(&path, profile.into(), format),
        Command::Simulate {
            model,
            scenario,
            seed,
            horizon,
            trace,
            metrics,
            profile,
            format,
        } => cmd_simulate(
            &model,
            SimulateArgs {
                scenario,
                seed,
                horizon,
                trace,
                metrics,
                profile,
                format,
            },
        ),
        Command::Export {
            model,
            trace,
            out,
            style,
        } => cmd_export(&model, trace.as_deref(), out.as_deref(), style),
        Command::Metrics { which } => cmd_metrics(which),
        Command::Fmt { path, check } => cmd_fmt(&path, check),
        Command::Corpus { which } => cmd_corpus(which),
    };
    let _ = std::io::stdout().flush();
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fm: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
