use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use medpredict::advice::AdviceTable;
use medpredict::metrics::render_report;
use medpredict::persistence::ModelArtifact;
use medpredict::pipeline::{self, Disease, Scale, TrainConfig, TrainOverrides};
use medpredict::predict::{predict_features, predict_image, PredictResponse};
use medpredict_service::{ServiceConfig, DEFAULT_BODY_LIMIT, DEFAULT_PORT};

#[derive(Parser)]
#[command(name = "medpredict", version, about = "Train, evaluate and serve disease prediction models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model, print its test-set report and save it.
    Train(TrainArgs),
    /// Print the classification report of a saved model on labelled data.
    Evaluate(EvaluateArgs),
    /// Predict one case with a saved model.
    Predict(PredictArgs),
    /// Run the HTTP prediction service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// diabetes, heart, lung or brain
    #[arg(long)]
    disease: Disease,
    /// CSV file (diabetes, heart) or image folder root (lung, brain).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model_out: PathBuf,
    /// TOML file overriding the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// desk (reduced images and epochs) or full
    #[arg(long)]
    scale: Option<Scale>,
    /// Training epochs for image models.
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Feature object, inline or as a path to a JSON file.
    #[arg(long, required_unless_present = "image", conflicts_with = "image")]
    json: Option<String>,
    /// PNG or JPEG file for image models.
    #[arg(long, required_unless_present = "json")]
    image: Option<PathBuf>,
    /// Advice table replacing the built-in one.
    #[arg(long)]
    advice: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    models_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Bind to all interfaces instead of loopback only.
    #[arg(long)]
    public: bool,
    #[arg(long)]
    advice: Option<PathBuf>,
    /// Directory with the web UI build, served at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    /// Allowed browser origin; any origin when omitted.
    #[arg(long)]
    cors_origin: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BODY_LIMIT)]
    max_body_bytes: usize,
}

type CmdResult = Result<(), Box<dyn std::error::Error>>;

fn advice_table(path: Option<&Path>) -> medpredict::Result<AdviceTable> {
    match path {
        Some(p) => AdviceTable::load(p),
        None => Ok(AdviceTable::builtin()),
    }
}

fn train(a: TrainArgs) -> CmdResult {
    let overrides = TrainOverrides {
        seed: a.seed,
        scale: a.scale,
        epochs: a.epochs,
    };
    let cfg = TrainConfig::resolve(a.config.as_deref(), &overrides)?;
    let outcome = pipeline::train(a.disease, &a.data, &cfg)?;
    print!("{}", outcome.render());
    outcome.artifact.save(&a.model_out)?;
    println!("\nmodel saved to {}", a.model_out.display());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> CmdResult {
    let artifact = ModelArtifact::load(&a.model)?;
    let (_, report) = pipeline::evaluate(&artifact, &a.data)?;
    print!("{}", render_report(&report));
    Ok(())
}

fn predict(a: PredictArgs) -> CmdResult {
    let artifact = ModelArtifact::load(&a.model)?;
    let advice = advice_table(a.advice.as_deref())?;
    let response: PredictResponse = match (&a.json, &a.image) {
        (Some(j), None) => {
            let text = if j.trim_start().starts_with('{') {
                j.clone()
            } else {
                std::fs::read_to_string(j).map_err(|e| format!("{j}: {e}"))?
            };
            let body: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("invalid JSON: {e}"))?;
            predict_features(&artifact, &body, &advice)?
        }
        (None, Some(p)) => {
            let bytes = std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?;
            predict_image(&artifact, &bytes, &advice)?
        }
        _ => unreachable!("clap enforces exactly one input"),
    };
    match a.format {
        OutputFormat::Text => println!("{}", response.render_line()),
        OutputFormat::Json => println!("{}", serde_json::to_string(&response)?),
    }
    Ok(())
}

fn serve(a: ServeArgs) -> CmdResult {
    let mut cfg = ServiceConfig::new(a.models_dir);
    cfg.port = a.port;
    if a.public {
        cfg.host = [0, 0, 0, 0];
    }
    cfg.advice = advice_table(a.advice.as_deref())?;
    cfg.static_dir = a.static_dir;
    cfg.cors_origin = a.cors_origin;
    cfg.max_body_bytes = a.max_body_bytes;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(medpredict_service::serve(cfg))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Predict(a) => predict(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
