use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use covidia_core::classify::TrainConfig;
use covidia_core::extract::{RankerConfig, DEFAULT_TOP_N};
use covidia_core::netsci::DEFAULT_REPLICATES;
use covidia_core::relate::RelationConfig;
use serde::Deserialize;

pub const CONFIG_ENV: &str = "COVIDIA_CONFIG";

/// Pipeline configuration file. Relative paths are resolved against the
/// directory holding the file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub port: Option<u16>,
    pub host: Option<String>,
    pub inputs: Inputs,
    pub classify: ClassifySection,
    pub extract: ExtractSection,
    pub relate: RelateSection,
    pub netsci: NetsciSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    /// Feed name to file.
    pub sources: BTreeMap<String, PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub train_set: Option<PathBuf>,
    pub glossary: Option<PathBuf>,
    /// Annotation rounds, merged in order.
    pub annotations: Vec<PathBuf>,
    pub triples: Option<PathBuf>,
    pub relation_annotations: Option<PathBuf>,
    pub links: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySection {
    pub train: TrainConfig,
    pub threshold: f64,
    pub validation_fraction: f64,
}

impl Default for ClassifySection {
    fn default() -> Self {
        ClassifySection {
            train: TrainConfig::default(),
            threshold: 0.5,
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    pub ranker: RankerConfig,
    pub top_n: usize,
    pub validation_fraction: f64,
    pub min_recall: f64,
}

impl Default for ExtractSection {
    fn default() -> Self {
        ExtractSection {
            ranker: RankerConfig::default(),
            top_n: DEFAULT_TOP_N,
            validation_fraction: 0.3,
            min_recall: covidia_core::extract::MIN_RECALL,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelateSection {
    pub train: RelationConfig,
    pub validation_fraction: f64,
}

impl Default for RelateSection {
    fn default() -> Self {
        RelateSection {
            train: RelationConfig::default(),
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetsciSection {
    pub replicates: usize,
}

impl Default for NetsciSection {
    fn default() -> Self {
        NetsciSection {
            replicates: DEFAULT_REPLICATES,
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl Config {
    pub fn parse(raw: &str) -> Result<Self> {
        Ok(toml::from_str(raw)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::parse(&raw).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let Some(d) = &mut self.data_dir {
            resolve(base, d);
        }
        let i = &mut self.inputs;
        i.sources.values_mut().for_each(|p| resolve(base, p));
        i.annotations.iter_mut().for_each(|p| resolve(base, p));
        for p in [
            &mut i.gazetteer,
            &mut i.train_set,
            &mut i.glossary,
            &mut i.triples,
            &mut i.relation_annotations,
            &mut i.links,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p);
        }
    }

    /// Apply a global seed to every seeded stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.classify.train.seed = seed;
        self.extract.ranker.seed = seed;
        self.relate.train.seed = seed;
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(7)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c.seed(), 7);
        assert_eq!(c.netsci.replicates, DEFAULT_REPLICATES);
        assert_eq!(c.extract.top_n, DEFAULT_TOP_N);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("colour = 1").is_err());
        assert!(Config::parse("[classify]\nthreshhold = 0.3").is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "data_dir = \"out\"\n[inputs]\nglossary = \"/abs/g.tsv\"\nannotations = [\"a.tsv\"]\n[inputs.sources]\nacemap = \"s/a.jsonl\"\n",
        )
        .unwrap();
        let c = Config::load(&path).unwrap();
        assert_eq!(c.data_dir.unwrap(), dir.path().join("out"));
        assert_eq!(c.inputs.glossary.unwrap(), PathBuf::from("/abs/g.tsv"));
        assert_eq!(c.inputs.annotations, [dir.path().join("a.tsv")]);
        assert_eq!(c.inputs.sources["acemap"], dir.path().join("s/a.jsonl"));
    }

    #[test]
    fn seed_reaches_every_stage() {
        let mut c = Config::default();
        c.set_seed(99);
        assert_eq!(
            (c.classify.train.seed, c.extract.ranker.seed, c.relate.train.seed, c.seed()),
            (99, 99, 99, 99)
        );
    }
}
