use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use unveil::censorship::{write_censored, Answers, MaskTokens};
use unveil::corpus::{generate_synthetic, load_corpus, write_corpus, Scenario, SyntheticSpec};
use unveil::entity_recognition::census;
use unveil::evaluation::{write_report_csv, write_report_json};
use unveil::pipeline::{
    censor_names, files, name_source, rerender_report, run_to_dir, write_census, PipelineError,
    RunConfig,
};
use unveil::snippet_index::build_index;
use unveil::write_atomic;

#[derive(Parser)]
#[command(
    name = "unveil",
    version,
    about = "Censor person names in a corpus and try to recover them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config file plus `--set key=value` overrides, shared by the pipeline commands.
#[derive(clap::Args)]
struct ConfigArgs {
    /// TOML config file; unset keys take their defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set k=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, PipelineError> {
        let text = match &self.config {
            Some(p) => fs::read_to_string(p)?,
            None => String::new(),
        };
        let mut config = RunConfig::from_str_with(&text, &self.overrides)?;
        config.apply_env(|k| std::env::var(k).ok())?;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSONL corpus and optionally rewrite it in normalized form.
    Ingest {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Count person names and print those at or above `nocc_min` as CSV.
    Census {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Censor every name that passes the census; writes censored posts and answers.
    Censor {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the full experiment and print the report.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Rebuild the report of a finished run from its trials.
    Report {
        run_dir: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Write a synthetic corpus and the matching gazetteer.
    Synth {
        #[arg(short, long)]
        output: PathBuf,
        /// Gazetteer of planted and chatter names.
        #[arg(long)]
        gazetteer: Option<PathBuf>,
        /// Full generator spec as JSON; the scenario flags are ignored when set.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        names: usize,
        #[arg(long, default_value_t = 20)]
        posts: usize,
        #[arg(long, default_value_t = 50)]
        comments: usize,
        #[arg(long, default_value_t = 0.0)]
        shared: f64,
        /// Mention rate of an unrelated name in comments. Repeatable.
        #[arg(long)]
        chatter: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Ingest { input, output } => {
            let corpus = load_corpus(&input)?;
            if let Some(out) = output {
                write_atomic(&out, |w| write_corpus(&corpus, w))?;
            }
            println!(
                "{} documents: {} posts, {} comments",
                corpus.len(),
                corpus.posts().count(),
                corpus.comments().count()
            );
        }
        Command::Census { config, output } => {
            let config = config.load()?;
            let corpus = load_corpus(&config.corpus_path)?;
            let source = name_source(&config, &corpus)?;
            let c = census(&corpus, source.as_ref(), config.nocc_min, |_| true);
            match output {
                Some(p) => write_atomic(&p, |w| write_census(&c, w))?,
                None => write_census(&c, io::stdout().lock())?,
            }
        }
        Command::Censor { config } => {
            let config = config.load()?;
            let corpus = load_corpus(&config.corpus_path)?;
            let source = name_source(&config, &corpus)?;
            let names: Vec<String> = census(&corpus, source.as_ref(), config.nocc_min, |_| true)
                .names()
                .map(str::to_string)
                .collect();
            let index = build_index(&corpus);
            let mut tokens = MaskTokens::for_corpus(&corpus);
            let (censored, skipped) = censor_names(&index, &corpus, &names, &config, &mut tokens)?;
            let mut answers = Answers::default();
            let mut posts = Vec::new();
            for c in censored {
                for p in c.posts {
                    answers.insert(p.post_id.clone(), c.name.clone());
                    posts.push(p);
                }
            }
            let dir = &config.output_dir;
            fs::create_dir_all(dir)?;
            write_atomic(&dir.join(files::CENSORED), |w| write_censored(&posts, w))?;
            write_atomic(&dir.join(files::ANSWERS), |w| answers.write(w))?;
            for s in &skipped {
                eprintln!("skipped {}: {}", s.name, s.reason);
            }
            println!(
                "{} posts censored for {} names",
                posts.len(),
                names.len() - skipped.len()
            );
        }
        Command::Run { config, format } => {
            let config = config.load()?;
            let out = run_to_dir(&config)?;
            print_report(&out.report, format)?;
        }
        Command::Report { run_dir, format } => {
            let report = rerender_report(&run_dir)?;
            write_atomic(&run_dir.join(files::REPORT_JSON), |w| {
                write_report_json(&report, w)
            })?;
            write_atomic(&run_dir.join(files::REPORT_CSV), |w| {
                write_report_csv(&report, w)
            })?;
            print_report(&report, format)?;
        }
        Command::Synth {
            output,
            gazetteer,
            spec,
            names,
            posts,
            comments,
            shared,
            chatter,
            seed,
        } => {
            let spec = match spec {
                Some(p) => read_spec(&p)?,
                None => Scenario {
                    names,
                    post_count: posts,
                    comment_count: comments,
                    shared_fraction: shared,
                    chatter_rates: chatter,
                    seed,
                    ..Default::default()
                }
                .to_spec(),
            };
            let corpus = generate_synthetic(&spec)?;
            write_atomic(&output, |w| write_corpus(&corpus, w))?;
            if let Some(g) = gazetteer {
                let list: Vec<&str> = spec
                    .names
                    .iter()
                    .map(|n| n.name.as_str())
                    .chain(spec.chatter.iter().map(|c| c.name.as_str()))
                    .collect();
                write_atomic(&g, |w| writeln!(w, "{}", list.join("\n")))?;
            }
            println!("{} documents written to {}", corpus.len(), output.display());
        }
    }
    Ok(())
}

fn read_spec(path: &Path) -> Result<SyntheticSpec, PipelineError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

fn print_report(report: &unveil::evaluation::ExperimentReport, format: Format) -> io::Result<()> {
    let mut out = BufWriter::new(io::stdout().lock());
    match format {
        Format::Csv => write_report_csv(report, &mut out)?,
        Format::Json => write_report_json(report, &mut out)?,
    }
    out.flush()
}
