use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skillpanel::pipeline::{exit_code, Pipeline, PipelineConfig, Stage, StageStatus};
use skillpanel::{Error, Result};

#[derive(Parser)]
#[command(name = "skillpanel", version, about = "Skill extraction and firm panel estimation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Stage to run (alternative to the subcommand). With `all`, the chain
    /// stops after this stage.
    #[arg(long, global = true)]
    stage: Option<String>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides SKILLPANEL_OUT and `paths.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    GenData,
    Train,
    MapTaxonomy,
    Extract,
    Panel,
    Estimate,
    Stability,
    All,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::GenData => Stage::GenData,
            Command::Train => Stage::Train,
            Command::MapTaxonomy => Stage::MapTaxonomy,
            Command::Extract => Stage::Extract,
            Command::Panel => Stage::Panel,
            Command::Estimate => Stage::Estimate,
            Command::Stability => Stage::Stability,
            Command::All => return None,
        })
    }
}

fn report(stage: Stage, status: StageStatus) {
    let s = match status {
        StageStatus::Ran => "done",
        StageStatus::UpToDate => "up to date",
    };
    println!("{stage}: {s}");
}

enum Plan {
    All(Option<Stage>),
    One(Stage),
}

fn plan(command: Option<Command>, stage: Option<&str>) -> Result<Plan> {
    // outer None: no --stage; inner None: --stage all
    let flag = stage
        .map(|s| if s == "all" { Ok(None) } else { Stage::from_name(s).map(Some) })
        .transpose()?;
    Ok(match (command, flag) {
        (None, None) => return Err(Error::Config("no stage given: use a subcommand or --stage".into())),
        (None, Some(None)) | (Some(Command::All), None) => Plan::All(None),
        (None, Some(Some(s))) => Plan::One(s),
        (Some(Command::All), Some(limit)) => Plan::All(limit),
        (Some(c), None) => Plan::One(c.stage().expect("not all")),
        (Some(c), Some(Some(s))) if c.stage() == Some(s) => Plan::One(s),
        (Some(_), Some(_)) => return Err(Error::Config("--stage conflicts with the subcommand".into())),
    })
}

fn run(cli: Cli) -> Result<()> {
    let plan = plan(cli.command, cli.stage.as_deref())?;
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let pipeline = Pipeline::new(config, cli.seed, cli.out)?;
    for w in pipeline.config.warnings() {
        log::warn!("{w}");
    }
    match plan {
        Plan::All(limit) => {
            for (stage, status) in pipeline.run_all_until(limit)? {
                report(stage, status);
            }
        }
        Plan::One(stage) => report(stage, pipeline.run_stage(stage)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
