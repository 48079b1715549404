//! Command-line front end for `genderprobe-core` and the annotation server.

pub mod args;
pub mod commands;
pub mod manifest;
pub mod server;

use anyhow::{Context, Result};

use args::{AnnotateCommand, Cli, Command, ServeArgs};
use genderprobe_core::annotation::LabelStore;
use genderprobe_core::jsonl::read_jsonl;
use genderprobe_core::MaskedSample;
use manifest::RunManifest;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Filter(a) => commands::filter(&a).map(drop),
        Command::Audit(a) => commands::audit(&a).map(drop),
        Command::Report(a) => commands::report(&a).map(drop),
        Command::Weat(a) => commands::weat(&a).map(drop),
        Command::Annotate(AnnotateCommand::Accuracy(a)) => commands::annotate_accuracy(&a).map(drop),
        Command::Annotate(AnnotateCommand::Serve(a)) => serve(&a),
    }
}

fn serve(args: &ServeArgs) -> Result<()> {
    if args.quorum == 0 {
        anyhow::bail!("--quorum must be at least 1");
    }
    let mut manifest = RunManifest::start("annotate serve", args)?;
    let samples: Vec<MaskedSample> = read_jsonl(&args.samples)?;
    let store = LabelStore::open(samples, &args.labels)?;
    manifest.inputs.push(args.samples.clone());
    manifest.outputs.push(args.labels.clone());
    manifest.finish(&args.labels)?;

    let app = server::router(server::AppState::new(store, args.quorum), args.ui_dir.as_deref());
    let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.bind)
            .await
            .with_context(|| format!("binding {}", args.bind))?;
        log::info!("annotation server listening on http://{}", listener.local_addr()?);
        server::serve(listener, app).await.context("serving")
    })
}
