use std::path::{Path, PathBuf};

use crate::corpus::SourceId;
use crate::netsci::NetworkKind;

/// File layout of a pipeline data directory. Every stage reads and writes
/// through these paths so that `serve` can find what the batch stages built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Validated records of one source feed.
    pub fn ingested(&self, source: SourceId) -> PathBuf {
        self.root.join("ingest").join(format!("{}.jsonl", source.as_str()))
    }

    pub fn ingest_warnings(&self, source: SourceId) -> PathBuf {
        self.root.join("ingest").join(format!("{}.warnings.txt", source.as_str()))
    }

    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus")
    }

    pub fn locations(&self) -> PathBuf {
        self.root.join("corpus").join("locations.jsonl")
    }

    pub fn classifier_model(&self) -> PathBuf {
        self.root.join("models").join("classifier.json")
    }

    pub fn classifier_metrics(&self) -> PathBuf {
        self.root.join("models").join("classifier_metrics.txt")
    }

    pub fn classifier_eval(&self) -> PathBuf {
        self.root.join("models").join("classifier_eval.json")
    }

    pub fn ranker_model(&self) -> PathBuf {
        self.root.join("models").join("ranker.json")
    }

    pub fn ranker_eval(&self) -> PathBuf {
        self.root.join("models").join("ranker_eval.json")
    }

    pub fn relation_model(&self) -> PathBuf {
        self.root.join("models").join("relation.json")
    }

    pub fn relation_eval(&self) -> PathBuf {
        self.root.join("models").join("relation_eval.json")
    }

    /// `paper_id<TAB>comma-separated discipline indices`
    pub fn disciplines(&self) -> PathBuf {
        self.root.join("disciplines.tsv")
    }

    pub fn tags(&self) -> PathBuf {
        self.root.join("tags.tsv")
    }

    pub fn relations(&self) -> PathBuf {
        self.root.join("relations.tsv")
    }

    pub fn unaligned_triples(&self) -> PathBuf {
        self.root.join("unaligned_triples.tsv")
    }

    pub fn kg_log(&self) -> PathBuf {
        self.root.join("kg").join("kg.jsonl")
    }

    pub fn kg_stats(&self) -> PathBuf {
        self.root.join("kg").join("stats.json")
    }

    pub fn geo_points(&self) -> PathBuf {
        self.root.join("geo").join("points.tsv")
    }

    pub fn geo_density(&self, precision: usize) -> PathBuf {
        self.root.join("geo").join(format!("density_p{precision}.tsv"))
    }

    pub fn network_report(&self) -> PathBuf {
        self.root.join("netsci").join("report.json")
    }

    pub fn network_table(&self) -> PathBuf {
        self.root.join("netsci").join("report.tsv")
    }

    pub fn network_edges(&self, kind: NetworkKind) -> PathBuf {
        self.root.join("netsci").join(format!("{}_edges.tsv", kind.as_str()))
    }

    pub fn network_distribution(&self, kind: NetworkKind) -> PathBuf {
        self.root.join("netsci").join(format!("{}_degrees.tsv", kind.as_str()))
    }

    pub fn ntriples(&self) -> PathBuf {
        self.root.join("export").join("kg.nt")
    }
}
