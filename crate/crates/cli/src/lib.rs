//! Command-line pipeline and HTTP server for the Covidia knowledge graph.

pub mod config;
pub mod server;
pub mod stages;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use covidia_core::service::{DataDir, Snapshot};

use crate::config::{Config, CONFIG_ENV};

#[derive(Debug, Parser)]
#[command(name = "covidia", version, about = "Build and serve an interdisciplinary scholarly knowledge graph")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Directory holding every stage's outputs.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// Seed for every randomized stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate source feeds into per-source record files.
    Ingest {
        /// Feed as NAME=PATH; NAME is acemap, cord19, digsci or preprint.
        #[arg(long = "source", value_name = "NAME=PATH")]
        sources: Vec<String>,
    },
    /// Deduplicate the ingested feeds and tag locations.
    Fuse {
        #[arg(long)]
        gazetteer: Option<PathBuf>,
    },
    /// Train the discipline classifier.
    ClassifyTrain {
        #[arg(long)]
        train_set: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Train on BCE alone.
        #[arg(long)]
        no_contrastive: bool,
    },
    /// Assign disciplines to every fused paper.
    Classify {
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Train the knowledge-entity ranker and pick its threshold.
    ExtractTrain {
        #[arg(long)]
        glossary: Option<PathBuf>,
        /// Annotation rounds, merged in order.
        #[arg(long)]
        annotations: Vec<PathBuf>,
    },
    /// Tag papers with mention_knowledge edges.
    Extract {
        #[arg(long)]
        glossary: Option<PathBuf>,
    },
    /// Train the relation classifier.
    RelateTrain {
        #[arg(long)]
        relation_annotations: Option<PathBuf>,
    },
    /// Align and classify open-domain triples.
    Relate {
        #[arg(long)]
        triples: Option<PathBuf>,
        #[arg(long)]
        glossary: Option<PathBuf>,
    },
    /// Assemble the knowledge graph from the stage outputs.
    BuildKg {
        #[arg(long)]
        glossary: Option<PathBuf>,
        #[arg(long)]
        links: Option<PathBuf>,
        #[arg(long)]
        gazetteer: Option<PathBuf>,
    },
    /// Write the point table and density grids.
    GeoIndex {
        #[arg(long = "precision", default_values_t = [1usize, 2, 3, 4, 5, 6])]
        precisions: Vec<usize>,
    },
    /// Degree statistics and power-law fits of the four networks.
    Netsci {
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Export the graph as N-Triples.
    Export {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Serve the JSON API over the data directory.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        host: Option<String>,
    },
}

/// Resolve the configuration: file values, then flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<(Config, DataDir)> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed.or(cfg.seed) {
        cfg.set_seed(seed);
    }
    let data_dir = cli
        .data_dir
        .clone()
        .or_else(|| cfg.data_dir.clone())
        .unwrap_or_else(|| PathBuf::from("data"));
    Ok((cfg, DataDir::new(data_dir)))
}

pub fn run(cli: Cli) -> Result<()> {
    let (mut cfg, dir) = resolve_config(&cli)?;
    match cli.command {
        Command::Ingest { sources } => stages::ingest(&cfg, &dir, &sources),
        Command::Fuse { gazetteer } => stages::fuse_stage(&cfg, &dir, gazetteer),
        Command::ClassifyTrain {
            train_set,
            epochs,
            no_contrastive,
        } => {
            if let Some(e) = epochs {
                cfg.classify.train.epochs = e;
            }
            if no_contrastive {
                cfg.classify.train.contrastive = false;
            }
            stages::classify_train(&cfg, &dir, train_set)
        }
        Command::Classify { threshold } => stages::classify_stage(&cfg, &dir, threshold),
        Command::ExtractTrain { glossary, annotations } => stages::extract_train(&cfg, &dir, glossary, annotations),
        Command::Extract { glossary } => stages::extract_stage(&cfg, &dir, glossary),
        Command::RelateTrain { relation_annotations } => stages::relate_train(&cfg, &dir, relation_annotations),
        Command::Relate { triples, glossary } => stages::relate_stage(&cfg, &dir, triples, glossary),
        Command::BuildKg {
            glossary,
            links,
            gazetteer,
        } => stages::build_kg(&cfg, &dir, glossary, links, gazetteer),
        Command::GeoIndex { precisions } => stages::geo_index(&dir, &precisions),
        Command::Netsci { replicates } => stages::netsci(&cfg, &dir, replicates),
        Command::Export { output } => stages::export(&dir, output),
        Command::Serve { port, host } => {
            stages::require("serve", &dir.kg_log())?;
            let snapshot = Snapshot::load(&dir)?;
            let port = port.or(cfg.port).unwrap_or(8080);
            let host = host.or(cfg.host.clone()).unwrap_or_else(|| "127.0.0.1".into());
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(server::serve(snapshot, &host, port))
        }
    }
}
