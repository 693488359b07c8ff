//! `seqfusion` command line. Every subcommand is a request to the service:
//! the one at `--server`, or an embedded one on a loopback port.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use seqfusion_client::Client;
use seqfusion_core::api::*;
use seqfusion_core::bench::{default_families, BenchConfig, SyntheticFamilySpec, SyntheticKind};
use seqfusion_core::extractor::{ExtractorDims, ExtractorTrainConfig, MaskSpec};
use seqfusion_core::forecasters::{Architecture, ForecasterSpec, TrainConfig};
use seqfusion_core::fusion::FusionConfig;
use seqfusion_core::metrics::Metric;
use seqfusion_core::zoo::{read_zoo_files, write_zoo_files, TransferMatrix, DEFAULT_SAMPLES};

#[derive(Parser)]
#[command(name = "seqfusion", version, about = "Zero-shot forecasting with a zoo of pre-trained forecasters")]
struct Cli {
    /// Service URL; without it an embedded service is started.
    #[arg(long, global = true)]
    server: Option<String>,
    /// Print a machine-readable JSON result to stdout.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Input CSVs have no header row.
    #[arg(long, global = true)]
    no_header: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic data: one family, or the five-family suite into a directory.
    Synth(SynthArgs),
    /// Train one forecaster on a dataset.
    TrainPtm(TrainPtmArgs),
    /// Train one forecaster per dataset and score every pair.
    TransferMatrix(TransferArgs),
    /// Train the representation extractor.
    TrainExtractor(ExtractorArgs),
    /// Assemble trained models and an extractor into a zoo directory.
    BuildZoo(BuildZooArgs),
    /// Embed zoo models and input variates, optionally projected by PCA.
    Embed(EmbedArgs),
    /// Forecast every channel of a CSV with the zoo.
    Forecast(ForecastArgs),
    /// Score a prediction file against a truth file.
    Evaluate(EvaluateArgs),
    /// Run the benchmark described by a TOML config.
    Benchmark(BenchmarkArgs),
    /// Run the HTTP service in the foreground.
    Serve(ServeArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Family kind: sine, sawtooth, trend_sine, random_walk or ar1.
    #[arg(long, conflicts_with = "suite")]
    kind: Option<SyntheticKind>,
    /// Write all five default families into the `--out` directory.
    #[arg(long)]
    suite: bool,
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value_t = 12)]
    period: usize,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 0.1)]
    noise_std: f64,
    #[arg(long, default_value_t = 2400)]
    length: usize,
    #[arg(long, default_value_t = 4)]
    channels: usize,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value = "linear")]
    arch: Architecture,
    #[arg(long, default_value_t = 36)]
    input_len: usize,
    #[arg(long, default_value_t = 12)]
    horizon: usize,
    #[arg(long, default_value_t = 16)]
    patch_len: usize,
    #[arg(long, default_value_t = 64)]
    hidden_dim: usize,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

impl ModelArgs {
    fn spec(&self) -> Result<ForecasterSpec> {
        Ok(match self.arch {
            Architecture::Linear => ForecasterSpec::linear(self.input_len, self.horizon),
            Architecture::PatchMlp => ForecasterSpec::patch_mlp(self.input_len, self.horizon, self.patch_len, self.hidden_dim),
            other => bail!("{other:?} is not trainable; use linear or patch-mlp"),
        })
    }

    fn train(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.lr,
            batch_size: self.batch_size,
            seed,
            stride: self.stride,
        }
    }
}

#[derive(Args)]
struct TrainPtmArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct TransferArgs {
    /// Comma-separated dataset CSVs.
    #[arg(long, value_delimiter = ',', required = true)]
    datasets: Vec<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct ExtractorArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    datasets: Vec<PathBuf>,
    #[arg(long)]
    transfer_matrix: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 0.25)]
    mask_ratio: f64,
    #[arg(long, default_value_t = 3)]
    views: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    /// Window length `L`; must equal the zoo models' input length.
    #[arg(long, default_value_t = 36)]
    input_len: usize,
    #[arg(long, default_value_t = 300)]
    epochs: usize,
    #[arg(long, default_value_t = 0.2)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 128)]
    windows_per_dataset: usize,
}

#[derive(Args)]
struct BuildZooArgs {
    /// Comma-separated model files; each file stem becomes the model id.
    #[arg(long, value_delimiter = ',', required = true)]
    models: Vec<PathBuf>,
    #[arg(long)]
    extractor: PathBuf,
    /// Comma-separated source CSVs, matched to models by dataset name.
    #[arg(long, value_delimiter = ',', required = true)]
    data: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    zoo: PathBuf,
    /// CSVs whose channels are embedded from their last `L` points.
    #[arg(long, value_delimiter = ',')]
    input: Vec<PathBuf>,
    /// Number of principal components (1 to 3).
    #[arg(long)]
    pca: Option<usize>,
}

#[derive(Args)]
struct ForecastArgs {
    #[arg(long)]
    zoo: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    horizon: usize,
    #[arg(long, default_value_t = 1)]
    top_k: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Comma-separated subset of mse, smape, mape.
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<String>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

struct Ctx {
    client: Client,
    json: bool,
    seed: u64,
    out: Option<PathBuf>,
    has_header: bool,
}

impl Ctx {
    fn out(&self, what: &str) -> Result<&Path> {
        self.out.as_deref().with_context(|| format!("--out is required for {what}"))
    }

    fn dataset(&self, path: &Path) -> Result<DatasetPayload> {
        let csv = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(DatasetPayload {
            name: stem(path),
            csv,
            has_header: self.has_header,
        })
    }

    fn datasets(&self, paths: &[PathBuf]) -> Result<Vec<DatasetPayload>> {
        paths.iter().map(|p| self.dataset(p)).collect()
    }

    /// Prints `value` as JSON with `--json`, otherwise `text`.
    fn report<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) -> Result<()> {
        if self.json {
            println!("{}", serde_json::to_string_pretty(value)?);
        } else {
            let t = text();
            if !t.is_empty() {
                println!("{t}");
            }
        }
        Ok(())
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn zoo_bundle(dir: &Path) -> Result<FileBundle> {
    Ok(FileBundle::from_zoo_files(&read_zoo_files(dir)?)?)
}

async fn synth(ctx: &Ctx, a: SynthArgs) -> Result<()> {
    let specs: Vec<SyntheticFamilySpec> = match (a.suite, a.kind) {
        (true, _) => default_families(a.length, a.channels, a.noise_std, ctx.seed),
        (false, Some(kind)) => vec![SyntheticFamilySpec {
            name: a.name.clone().unwrap_or_else(|| format!("{kind:?}").to_lowercase()),
            kind,
            period: a.period,
            amplitude: a.amplitude,
            noise_std: a.noise_std,
            length: a.length,
            channels: a.channels,
            seed: ctx.seed,
        }],
        (false, None) => bail!("pass --kind or --suite"),
    };
    let out = ctx.out("synth")?;
    let mut written = Vec::new();
    for family in specs {
        let data = ctx.client.synth(&SynthRequest { family }).await?;
        let path = if a.suite || out.is_dir() {
            out.join(format!("{}.csv", data.name))
        } else {
            out.to_path_buf()
        };
        write(&path, &data.csv)?;
        written.push(path.display().to_string());
    }
    ctx.report(&serde_json::json!({ "files": written }), || written.join("\n"))
}

async fn train_ptm(ctx: &Ctx, a: TrainPtmArgs) -> Result<()> {
    let req = TrainPtmRequest {
        dataset: ctx.dataset(&a.data)?,
        spec: a.model.spec()?,
        train: a.model.train(ctx.seed),
    };
    let out = ctx.out("train-ptm")?;
    let resp = ctx.client.train_ptm(&req).await?;
    write(out, &resp.model)?;
    ctx.report(&serde_json::json!({ "model": out, "log": resp.log }), || {
        format!("wrote {}", out.display())
    })
}

async fn transfer_matrix(ctx: &Ctx, a: TransferArgs) -> Result<()> {
    let req = TransferMatrixRequest {
        datasets: ctx.datasets(&a.datasets)?,
        spec: a.model.spec()?,
        train: a.model.train(ctx.seed),
    };
    let out = ctx.out("transfer-matrix")?;
    let tm = ctx.client.transfer_matrix(&req).await?;
    let mut bytes = serde_json::to_vec(&tm)?;
    bytes.push(b'\n');
    write(out, bytes)?;
    ctx.report(&tm, || format!("wrote {}", out.display()))
}

async fn train_extractor(ctx: &Ctx, a: ExtractorArgs) -> Result<()> {
    let transfer = TransferMatrix::load_file(&a.transfer_matrix)?;
    let req = TrainExtractorRequest {
        datasets: ctx.datasets(&a.datasets)?,
        transfer,
        dims: ExtractorDims {
            input_len: a.input_len,
            hidden: a.hidden,
            dim: a.dim,
        },
        config: ExtractorTrainConfig {
            lambda: a.lambda,
            epochs: a.epochs,
            learning_rate: a.lr,
            batch_size: a.batch_size,
            seed: ctx.seed,
            windows_per_dataset: a.windows_per_dataset,
        },
        mask: MaskSpec {
            mask_ratio: a.mask_ratio,
            num_views: a.views,
            seed: ctx.seed,
        },
    };
    let out = ctx.out("train-extractor")?;
    let resp = ctx.client.train_extractor(&req).await?;
    write(out, &resp.extractor)?;
    ctx.report(&serde_json::json!({ "extractor": out, "log": resp.log }), || {
        format!("wrote {}", out.display())
    })
}

async fn build_zoo(ctx: &Ctx, a: BuildZooArgs) -> Result<()> {
    let models = a
        .models
        .iter()
        .map(|p| {
            Ok(NamedFile {
                name: stem(p),
                content: read_text(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let req = BuildZooRequest {
        models,
        extractor: read_text(&a.extractor)?,
        sources: ctx.datasets(&a.data)?,
        samples: a.samples,
        seed: ctx.seed,
    };
    let out = ctx.out("build-zoo")?;
    let bundle = ctx.client.build_zoo(&req).await?;
    write_zoo_files(out, &bundle.to_zoo_files())?;
    let files: Vec<&String> = bundle.files.keys().collect();
    ctx.report(&serde_json::json!({ "zoo": out, "files": files }), || {
        format!("wrote {} ({} models)", out.display(), req.models.len())
    })
}

async fn embed(ctx: &Ctx, a: EmbedArgs) -> Result<()> {
    let req = EmbedRequest {
        zoo: zoo_bundle(&a.zoo)?,
        inputs: ctx.datasets(&a.input)?,
        pca: a.pca,
    };
    let resp = ctx.client.embed(&req).await?;
    let csv = resp.to_csv();
    match &ctx.out {
        Some(out) => {
            write(out, &csv)?;
            ctx.report(&resp, || format!("wrote {}", out.display()))
        }
        None => ctx.report(&resp, || csv.trim_end().to_string()),
    }
}

async fn forecast(ctx: &Ctx, a: ForecastArgs) -> Result<()> {
    let req = ForecastRequest {
        zoo: zoo_bundle(&a.zoo)?,
        input: ctx.dataset(&a.input)?,
        config: FusionConfig::new(a.horizon, a.top_k),
    };
    let resp = ctx.client.forecast(&req).await?;
    match &ctx.out {
        Some(out) => {
            write(out, &resp.csv)?;
            let sidecar = out.with_extension("provenance.json");
            let mut bytes = serde_json::to_vec_pretty(&resp.provenance)?;
            bytes.push(b'\n');
            write(&sidecar, bytes)?;
            ctx.report(&resp, || format!("wrote {} and {}", out.display(), sidecar.display()))
        }
        None => ctx.report(&resp, || resp.csv.trim_end().to_string()),
    }
}

async fn evaluate(ctx: &Ctx, a: EvaluateArgs) -> Result<()> {
    let metrics = if a.metrics.is_empty() {
        Metric::ALL.to_vec()
    } else {
        a.metrics
            .iter()
            .map(|m| serde_json::from_value(serde_json::Value::String(m.to_lowercase())))
            .collect::<Result<Vec<Metric>, _>>()
            .context("metrics must be among mse, smape, mape")?
    };
    let req = EvaluateRequest {
        truth: ctx.dataset(&a.truth)?,
        pred: ctx.dataset(&a.pred)?,
        metrics,
    };
    let resp = ctx.client.evaluate(&req).await?;
    ctx.report(&resp.scores, || {
        resp.scores
            .iter()
            .map(|(m, v)| match v {
                Some(v) => format!("{}: {v}", m.name()),
                None => format!("{}: undefined", m.name()),
            })
            .collect::<Vec<_>>()
            .join("\n")
    })
}

async fn benchmark(ctx: &Ctx, a: BenchmarkArgs) -> Result<()> {
    let mut config = BenchConfig::load(&a.config)?;
    let zoo = config.zoo.take().map(|d| zoo_bundle(&d)).transpose()?;
    let datasets = std::mem::take(&mut config.datasets)
        .iter()
        .map(|p| {
            let mut d = ctx.dataset(p)?;
            d.has_header = config.has_header;
            Ok(d)
        })
        .collect::<Result<Vec<_>>>()?;
    let out = ctx.out("benchmark")?;
    let resp = ctx.client.benchmark(&BenchmarkRequest { config, zoo, datasets }).await?;
    for (name, content) in &resp.files {
        write(&out.join(name), content)?;
    }
    if ctx.json {
        println!("{}", resp.files["report.json"].trim_end());
        return Ok(());
    }
    println!("{}", resp.files["summary.csv"].trim_end());
    Ok(())
}

async fn run(cli: Cli) -> Result<()> {
    if let Command::Serve(a) = &cli.command {
        let listener = tokio::net::TcpListener::bind(a.addr).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        seqfusion_server::serve(listener, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        return Ok(());
    }
    let base = match &cli.server {
        Some(url) => url.clone(),
        None => format!("http://{}", seqfusion_server::spawn(([127, 0, 0, 1], 0).into()).await?),
    };
    let ctx = Ctx {
        client: Client::new(base),
        json: cli.json,
        seed: cli.seed,
        out: cli.out,
        has_header: !cli.no_header,
    };
    match cli.command {
        Command::Synth(a) => synth(&ctx, a).await,
        Command::TrainPtm(a) => train_ptm(&ctx, a).await,
        Command::TransferMatrix(a) => transfer_matrix(&ctx, a).await,
        Command::TrainExtractor(a) => train_extractor(&ctx, a).await,
        Command::BuildZoo(a) => build_zoo(&ctx, a).await,
        Command::Embed(a) => embed(&ctx, a).await,
        Command::Forecast(a) => forecast(&ctx, a).await,
        Command::Evaluate(a) => evaluate(&ctx, a).await,
        Command::Benchmark(a) => benchmark(&ctx, a).await,
        Command::Serve(_) => unreachable!("handled above"),
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
