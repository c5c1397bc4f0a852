use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use reinsim_bench::report::{sensitivity_markdown, validation_markdown, Format};
use reinsim_bench::run::{build_world, portfolio, validate_generator};
use reinsim_bench::{run_benchmark, sweep, EpisodeRecord, RunConfig};
use reinsim_kernel::{run_episode, Profile};

#[derive(Parser)]
#[command(
    name = "reinsim",
    version,
    about = "Constrained multi-agent reinsurance simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration as JSON; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generator seed; run seeds are renumbered from it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Md)]
    format: Format,
    /// Overrides the number of treaties.
    #[arg(long)]
    treaties: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated portfolio.
    Generate(Common),
    /// Check generator statistics against market ranges.
    Validate(Common),
    /// Run one treaty under one profile and emit its trace.
    Episode {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "multi")]
        profile: Profile,
        /// Treaty index within the portfolio.
        #[arg(long, default_value_t = 0)]
        treaty: usize,
    },
    /// Full run of the four profiles.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        no_sensitivity: bool,
    },
    /// Repeat the run across correlation presets and thresholds.
    Sweep(Common),
}

/// Exit status for a run whose generator falls outside the market ranges.
const VALIDATION_FAILED: u8 = 2;

fn config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(n) = c.treaties {
        cfg.n_treaties = n;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(c) => {
            let cfg = config(&c)?;
            let p = portfolio(&cfg)?;
            let json = serde_json::to_string_pretty(&p)?;
            match &cfg.out_dir {
                Some(dir) => {
                    write(dir, "portfolio.json", &json)?;
                    println!(
                        "{} treaties written to {}",
                        p.treaties.len(),
                        dir.join("portfolio.json").display()
                    );
                }
                None => stdout(&format!("{json}\n"))?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(c) => {
            let cfg = config(&c)?;
            let v = validate_generator(&cfg)?;
            let text = match c.format {
                Format::Json => serde_json::to_string_pretty(&v)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["seed", "quantity", "value", "low", "high", "pass"])?;
                    for s in &v {
                        for ch in &s.report.checks {
                            w.write_record([
                                s.seed.to_string(),
                                ch.quantity.clone(),
                                ch.value.to_string(),
                                ch.low.to_string(),
                                ch.high.to_string(),
                                ch.pass.to_string(),
                            ])?;
                        }
                    }
                    String::from_utf8(w.into_inner()?)?
                }
                Format::Md => {
                    let mut s = String::new();
                    validation_markdown(&mut s, &v);
                    s
                }
            };
            emit(&cfg, "validation", c.format, &text)?;
            let pass = v.iter().all(|s| s.report.all_pass());
            Ok(if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(VALIDATION_FAILED)
            })
        }
        Command::Episode {
            common,
            profile,
            treaty,
        } => {
            let cfg = config(&common)?;
            let p = portfolio(&cfg)?;
            if treaty >= p.treaties.len() {
                bail!(
                    "treaty index {treaty} is outside a portfolio of {}",
                    p.treaties.len()
                );
            }
            let seed = cfg.seeds[0];
            let scenario = cfg.base();
            let world = build_world(&cfg, p, &scenario, seed)?;
            let o = run_episode(&world, treaty, profile, &cfg.kernel(&scenario), seed)?;
            let record = EpisodeRecord::from(&o);
            match &cfg.out_dir {
                Some(dir) => {
                    write(dir, "trace.jsonl", &o.trace_jsonl())?;
                    write(dir, "outcome.json", &serde_json::to_string_pretty(&record)?)?;
                    println!(
                        "{} {}: rounds {}, escalated {}, equilibrium {}, audit head {}",
                        o.treaty,
                        profile,
                        o.rounds.map_or("--".into(), |r| r.to_string()),
                        o.escalated,
                        o.equilibrium,
                        o.audit_head
                    );
                }
                None => stdout(&o.trace_jsonl())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            common,
            no_sensitivity,
        } => {
            let mut cfg = config(&common)?;
            cfg.sensitivity &= !no_sensitivity;
            let b = run_benchmark(&cfg)?;
            if let Some(dir) = &cfg.out_dir {
                write(dir, "report.md", &b.report.to_markdown())?;
                write(dir, "report.csv", &b.report.to_csv()?)?;
                write(dir, "report.json", &b.report.to_json()?)?;
                let mut lines = String::new();
                for r in &b.records {
                    lines.push_str(&serde_json::to_string(r)?);
                    lines.push('\n');
                }
                write(dir, "records.jsonl", &lines)?;
            }
            stdout(&b.report.render(common.format)?)?;
            Ok(if b.report.validation_passes() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(VALIDATION_FAILED)
            })
        }
        Command::Sweep(c) => {
            let cfg = config(&c)?;
            let s = sweep(&cfg)?;
            let text = match c.format {
                Format::Json => serde_json::to_string_pretty(&s)?,
                _ => {
                    let mut t = String::new();
                    sensitivity_markdown(&mut t, &s);
                    t
                }
            };
            emit(
                &cfg,
                "sweep",
                if c.format == Format::Json {
                    Format::Json
                } else {
                    Format::Md
                },
                &text,
            )?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit(cfg: &RunConfig, stem: &str, format: Format, text: &str) -> Result<()> {
    if let Some(dir) = &cfg.out_dir {
        write(dir, &format!("{stem}.{}", format.extension()), text)?;
    }
    stdout(text)
}

/// A closed pipe on stdout (as with `| head`) ends output quietly.
fn stdout(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
