use std::net::SocketAddr;
use std::path::PathBuf;

use affecton_core::rating::DEFAULT_GOLDEN_THRESHOLD;
use affecton_service::ServiceConfig;
use clap::Parser;
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(
    name = "affecton-server",
    version,
    about = "Affect-steered generation and rating service"
)]
struct Args {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = "AFFECTON_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Extra `token<TAB>lemma` exceptions.
    #[arg(long)]
    lemmas: Option<PathBuf>,
    /// Rating items produced by `affecton select`.
    #[arg(long)]
    items: Option<PathBuf>,
    #[arg(long, default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/ui"))]
    ui_dir: PathBuf,
    #[arg(long = "cors-origin")]
    cors_origins: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_GOLDEN_THRESHOLD)]
    golden_threshold: u32,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let config = ServiceConfig {
        data_dir: args.data_dir,
        model: args.model,
        lexicon: args.lexicon,
        lemmas: args.lemmas,
        items: args.items,
        ui_dir: Some(args.ui_dir),
        cors_origins: args.cors_origins,
        golden_threshold: args.golden_threshold,
    };
    let app = affecton_service::build(&config)?;
    let addr: SocketAddr = format!("{}:{}", args.host, args.port).parse()?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
