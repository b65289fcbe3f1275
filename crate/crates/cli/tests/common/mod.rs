#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::Parser;
use covidia_cli::{run, Cli};
use serde_json::Value;

pub const STAGES: [&[&str]; 12] = [
    &["ingest"],
    &["fuse"],
    &["classify-train"],
    &["classify"],
    &["extract-train"],
    &["extract"],
    &["relate-train"],
    &["relate"],
    &["build-kg"],
    &["geo-index"],
    &["netsci"],
    &["export"],
];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn config() -> PathBuf {
    fixtures().join("config.toml")
}

/// Fresh directory under the cargo test scratch area.
pub fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stage_args(data: &Path, stage: &[&str]) -> Vec<String> {
    let mut args = vec![
        "--config".to_owned(),
        config().display().to_string(),
        "--data-dir".to_owned(),
        data.display().to_string(),
    ];
    args.extend(stage.iter().map(|s| s.to_string()));
    args
}

/// Every stage through the library entry point.
pub fn pipeline_in_process(data: &Path) {
    for stage in STAGES {
        let mut argv = vec!["covidia".to_owned()];
        argv.extend(stage_args(data, stage));
        run(Cli::parse_from(argv)).unwrap_or_else(|e| panic!("{stage:?}: {e:#}"));
    }
}

pub fn covidia(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covidia"))
        .args(args)
        .env_remove("COVIDIA_CONFIG")
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn covidia")
}

/// Every stage as a separate process; returns the first failure.
pub fn pipeline_binary(data: &Path) -> Result<(), String> {
    for stage in STAGES {
        let out = covidia(&stage_args(data, stage));
        if !out.status.success() {
            return Err(format!("{stage:?}: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }
    Ok(())
}

pub fn jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn tsv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split('\t').map(str::to_owned).collect())
        .collect()
}

/// Plain views of the stage files, read without the core crate.
pub struct Outputs {
    pub papers: Vec<Value>,
    pub locations: Vec<Value>,
    /// paper id -> discipline indices.
    pub disciplines: BTreeMap<String, BTreeSet<usize>>,
    /// (paper id, knowledge id).
    pub tags: BTreeSet<(String, String)>,
}

impl Outputs {
    pub fn read(data: &Path) -> Self {
        let disciplines = tsv(&data.join("disciplines.tsv"))
            .into_iter()
            .map(|row| {
                let labels = row
                    .get(1)
                    .map(|s| s.split(',').filter(|x| !x.is_empty()).map(|x| x.parse().unwrap()).collect())
                    .unwrap_or_default();
                (row[0].clone(), labels)
            })
            .collect();
        let tags = tsv(&data.join("tags.tsv"))
            .into_iter()
            .map(|row| (row[0].clone(), row[2].clone()))
            .collect();
        Outputs {
            papers: jsonl(&data.join("corpus/papers.jsonl")),
            locations: jsonl(&data.join("corpus/locations.jsonl")),
            disciplines,
            tags,
        }
    }

    pub fn paper(&self, id: &str) -> &Value {
        self.papers.iter().find(|p| p["paper_id"] == id).unwrap()
    }

    /// (lat, lon) of every location mention of a paper.
    pub fn points_of(&self, id: &str) -> Vec<(f64, f64)> {
        self.locations
            .iter()
            .filter(|l| l["paper_id"] == id)
            .map(|l| (l["lat"].as_f64().unwrap(), l["lon"].as_f64().unwrap()))
            .collect()
    }
}

pub fn str_of(v: &Value) -> &str {
    v.as_str().unwrap_or("")
}
