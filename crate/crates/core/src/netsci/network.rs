use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::powerlaw::{fit_power_law, PowerLawFit, MIN_OBSERVATIONS};
use crate::error::{Error, Result};
use crate::kgstore::{ConceptKind, KgStore, RelationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    Coauthor,
    Citation,
    AuthorWritesPaper,
    PaperInspiresAuthor,
}

impl NetworkKind {
    pub const ALL: [NetworkKind; 4] = [
        NetworkKind::Coauthor,
        NetworkKind::Citation,
        NetworkKind::AuthorWritesPaper,
        NetworkKind::PaperInspiresAuthor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NetworkKind::Coauthor => "coauthor",
            NetworkKind::Citation => "citation",
            NetworkKind::AuthorWritesPaper => "author_writes_paper",
            NetworkKind::PaperInspiresAuthor => "paper_inspires_author",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            NetworkKind::Coauthor => "Coauthor Network",
            NetworkKind::Citation => "Citation Network",
            NetworkKind::AuthorWritesPaper => "Author-Paper Network (Author-writes-Paper)",
            NetworkKind::PaperInspiresAuthor => "Paper-Author Network (Paper-inspires-Author)",
        }
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NetworkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown network kind {s:?}")))
    }
}

/// Edge list plus node partitions. Coauthor edges are stored once with the
/// smaller id first; citation edges run citing → cited; bipartite edges run
/// author → paper. Nodes are those touched by at least one edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkGraph {
    pub kind: NetworkKind,
    pub left: BTreeSet<String>,
    /// Empty for the two homogeneous kinds.
    pub right: BTreeSet<String>,
    pub edges: BTreeSet<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub concept: ConceptKind,
    pub size: usize,
    pub volume: usize,
    pub max_degree: usize,
    pub avg_degree: f64,
    /// degree → node count
    pub histogram: BTreeMap<usize, usize>,
}

fn papers_by_author(kg: &KgStore) -> BTreeMap<String, BTreeSet<String>> {
    let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for n in kg.nodes().filter(|n| n.kind == ConceptKind::Paper) {
        for (k, a) in kg.outgoing(&n.id) {
            if *k == RelationKind::IsWrittenBy {
                map.entry(a.clone()).or_default().insert(n.id.clone());
            }
        }
    }
    map
}

/// Number of nodes lying on a directed cycle (nodes Kahn's algorithm cannot remove).
fn nodes_on_cycles(nodes: &BTreeSet<String>, edges: &BTreeSet<(String, String)>) -> usize {
    let mut indeg: BTreeMap<&str, usize> = nodes.iter().map(|n| (n.as_str(), 0)).collect();
    let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in edges {
        *indeg.get_mut(b.as_str()).expect("edge-induced") += 1;
        out.entry(a).or_default().push(b);
    }
    let mut queue: Vec<&str> = indeg.iter().filter(|(_, &d)| d == 0).map(|(n, _)| *n).collect();
    let mut removed = 0;
    while let Some(n) = queue.pop() {
        removed += 1;
        for m in out.get(n).into_iter().flatten() {
            let d = indeg.get_mut(m).expect("edge-induced");
            *d -= 1;
            if *d == 0 {
                queue.push(m);
            }
        }
    }
    nodes.len() - removed
}

pub fn build_network(kg: &KgStore, kind: NetworkKind) -> NetworkGraph {
    let mut g = NetworkGraph {
        kind,
        left: BTreeSet::new(),
        right: BTreeSet::new(),
        edges: BTreeSet::new(),
    };
    match kind {
        NetworkKind::Coauthor => {
            for p in kg.nodes().filter(|n| n.kind == ConceptKind::Paper) {
                let authors: Vec<&String> = kg
                    .outgoing(&p.id)
                    .filter(|(k, _)| *k == RelationKind::IsWrittenBy)
                    .map(|(_, a)| a)
                    .collect();
                for (i, a) in authors.iter().enumerate() {
                    for b in &authors[i + 1..] {
                        let (x, y) = if a < b { (a, b) } else { (b, a) };
                        g.edges.insert(((*x).clone(), (*y).clone()));
                    }
                }
            }
            for (a, b) in &g.edges {
                g.left.insert(a.clone());
                g.left.insert(b.clone());
            }
        }
        NetworkKind::Citation => {
            for e in kg.edges().filter(|e| e.kind == RelationKind::IsCitedBy) {
                // e.source is cited by e.target
                g.left.insert(e.source.clone());
                g.left.insert(e.target.clone());
                g.edges.insert((e.target, e.source));
            }
            let cyclic = nodes_on_cycles(&g.left, &g.edges);
            if cyclic > 0 {
                log::warn!("citation network has {cyclic} papers on cycles; kept");
            }
        }
        NetworkKind::AuthorWritesPaper => {
            for e in kg.edges().filter(|e| e.kind == RelationKind::IsWrittenBy) {
                g.left.insert(e.target.clone());
                g.right.insert(e.source.clone());
                g.edges.insert((e.target, e.source));
            }
        }
        NetworkKind::PaperInspiresAuthor => {
            for (author, papers) in papers_by_author(kg) {
                for p in papers {
                    // papers cited by p: q is_cited_by p
                    for (k, q) in kg.incoming(&p) {
                        if *k == RelationKind::IsCitedBy {
                            g.left.insert(author.clone());
                            g.right.insert(q.clone());
                            g.edges.insert((author.clone(), q.clone()));
                        }
                    }
                }
            }
        }
    }
    g
}

impl NetworkGraph {
    pub fn is_bipartite(&self) -> bool {
        matches!(self.kind, NetworkKind::AuthorWritesPaper | NetworkKind::PaperInspiresAuthor)
    }

    /// Degree of every node per side. Coauthor degrees count neighbours;
    /// citation degrees count citations received.
    pub fn degrees(&self) -> Vec<(ConceptKind, BTreeMap<String, usize>)> {
        let zeros = |s: &BTreeSet<String>| -> BTreeMap<String, usize> { s.iter().map(|n| (n.clone(), 0)).collect() };
        match self.kind {
            NetworkKind::Coauthor => {
                let mut d = zeros(&self.left);
                for (a, b) in &self.edges {
                    *d.get_mut(a).expect("edge-induced") += 1;
                    *d.get_mut(b).expect("edge-induced") += 1;
                }
                vec![(ConceptKind::Author, d)]
            }
            NetworkKind::Citation => {
                let mut d = zeros(&self.left);
                for (_, cited) in &self.edges {
                    *d.get_mut(cited).expect("edge-induced") += 1;
                }
                vec![(ConceptKind::Paper, d)]
            }
            NetworkKind::AuthorWritesPaper | NetworkKind::PaperInspiresAuthor => {
                let mut l = zeros(&self.left);
                let mut r = zeros(&self.right);
                for (a, p) in &self.edges {
                    *l.get_mut(a).expect("edge-induced") += 1;
                    *r.get_mut(p).expect("edge-induced") += 1;
                }
                vec![(ConceptKind::Author, l), (ConceptKind::Paper, r)]
            }
        }
    }

    /// Size, volume (edge count), max and average degree per side. The average
    /// is 2·volume/size for the coauthor graph and volume/size otherwise.
    pub fn degree_stats(&self) -> Vec<DegreeStats> {
        let volume = self.edges.len();
        self.degrees()
            .into_iter()
            .map(|(concept, d)| {
                let size = d.len();
                let mut histogram = BTreeMap::new();
                for &v in d.values() {
                    *histogram.entry(v).or_insert(0) += 1;
                }
                let ends = if self.kind == NetworkKind::Coauthor { 2 * volume } else { volume };
                DegreeStats {
                    concept,
                    size,
                    volume,
                    max_degree: d.values().copied().max().unwrap_or(0),
                    avg_degree: if size == 0 { 0.0 } else { ends as f64 / size as f64 },
                    histogram,
                }
            })
            .collect()
    }

    /// `a<TAB>b` lines in sorted order.
    pub fn edge_list(&self) -> String {
        self.edges.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect()
    }
}

/// Logarithmic bins: bin 0 holds degree 0, bin b ≥ 1 holds degrees in
/// [2^(b-1), 2^b - 1]. Returns (low, high, count) for non-empty bins.
pub fn log_bins(histogram: &BTreeMap<usize, usize>) -> Vec<(usize, usize, usize)> {
    let mut bins: BTreeMap<u32, usize> = BTreeMap::new();
    for (&d, &c) in histogram {
        let b = if d == 0 { 0 } else { usize::BITS - d.leading_zeros() };
        *bins.entry(b).or_insert(0) += c;
    }
    bins.into_iter()
        .map(|(b, c)| match b {
            0 => (0, 0, c),
            b => (1 << (b - 1), (1 << b) - 1, c),
        })
        .collect()
}

/// `concept<TAB>low<TAB>high<TAB>count` lines for every side of the graph.
pub fn distribution_tsv(g: &NetworkGraph) -> String {
    let mut out = String::new();
    for s in g.degree_stats() {
        for (lo, hi, c) in log_bins(&s.histogram) {
            out.push_str(&format!("{}\t{lo}\t{hi}\t{c}\n", s.concept));
        }
    }
    out
}

pub fn export_distribution(g: &NetworkGraph, path: &Path) -> Result<()> {
    fs::write(path, distribution_tsv(g)).map_err(|e| Error::write(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReportRow {
    pub network: NetworkKind,
    pub stats: DegreeStats,
    /// Absent when the side has too few positive degrees to fit.
    pub fit: Option<PowerLawFit>,
}

/// Degree statistics and power-law fits of every side of `g`.
pub fn analyze(g: &NetworkGraph, replicates: usize, seed: u64) -> Result<Vec<NetworkReportRow>> {
    let degrees = g.degrees();
    let mut rows = Vec::new();
    for (stats, (_, d)) in g.degree_stats().into_iter().zip(degrees) {
        let positive: Vec<u64> = d.values().filter(|&&v| v > 0).map(|&v| v as u64).collect();
        let distinct: BTreeSet<u64> = positive.iter().copied().collect();
        let fit = if positive.len() >= MIN_OBSERVATIONS && distinct.len() >= 2 {
            Some(fit_power_law(&positive, replicates, seed)?)
        } else {
            None
        };
        rows.push(NetworkReportRow {
            network: g.kind,
            stats,
            fit,
        });
    }
    Ok(rows)
}

/// Plain-text table with the columns Networks, Concepts, Size, Volume,
/// Max Degree, Avg Degree, alpha, p_value, x_min.
pub fn report_table(rows: &[NetworkReportRow]) -> String {
    let mut out = String::from("Networks\tConcepts\tSize\tVolume\tMax Degree\tAvg Degree\talpha\tp_value\tx_min\n");
    for r in rows {
        let (a, p, x) = match &r.fit {
            Some(f) => (format!("{:.3}", f.alpha), format!("{:.3}", f.p_value), f.x_min.to_string()),
            None => ("-".into(), "-".into(), "-".into()),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.2}\t{a}\t{p}\t{x}\n",
            r.network.title(),
            r.stats.concept,
            r.stats.size,
            r.stats.volume,
            r.stats.max_degree,
            r.stats.avg_degree
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kgstore::{Edge, Node};

    fn kg(papers: &[&str], authors: &[&str], written: &[(&str, &str)], cites: &[(&str, &str)]) -> KgStore {
        let mut kg = KgStore::new();
        for p in papers {
            kg.upsert_node(Node::new(*p, ConceptKind::Paper)).unwrap();
        }
        for a in authors {
            kg.upsert_node(Node::new(*a, ConceptKind::Author)).unwrap();
        }
        for (p, a) in written {
            kg.upsert_edge(Edge::new(*p, RelationKind::IsWrittenBy, *a)).unwrap();
        }
        // (citing, cited)
        for (citing, cited) in cites {
            kg.upsert_edge(Edge::new(*cited, RelationKind::IsCitedBy, *citing)).unwrap();
        }
        kg
    }

    #[test]
    fn one_paper_three_authors_is_a_triangle() {
        let k = kg(&["p"], &["a", "b", "c"], &[("p", "a"), ("p", "b"), ("p", "c")], &[]);
        let g = build_network(&k, NetworkKind::Coauthor);
        assert_eq!(g.edges.len(), 3);
        assert!(g.edges.iter().all(|(a, b)| a < b));
        let s = &g.degree_stats()[0];
        assert_eq!((s.size, s.volume, s.max_degree), (3, 3, 2));
        assert_eq!(s.avg_degree, 2.0);
    }

    #[test]
    fn paper_inspires_author_by_hand() {
        // a1 wrote p1, a2 wrote p2 and p3; p1 cites p2, p3 cites p1
        let k = kg(
            &["p1", "p2", "p3"],
            &["a1", "a2"],
            &[("p1", "a1"), ("p2", "a2"), ("p3", "a2")],
            &[("p1", "p2"), ("p3", "p1")],
        );
        let g = build_network(&k, NetworkKind::PaperInspiresAuthor);
        let want: BTreeSet<(String, String)> =
            [("a1".into(), "p2".into()), ("a2".into(), "p1".into())].into_iter().collect();
        assert_eq!(g.edges, want);
        assert!(g.edges.iter().all(|(a, p)| g.left.contains(a) && g.right.contains(p)));
        assert!(g.left.is_disjoint(&g.right));

        let c = build_network(&k, NetworkKind::Citation);
        assert_eq!(c.edges.len(), 2);
        let s = &c.degree_stats()[0];
        assert_eq!((s.size, s.volume, s.max_degree), (3, 2, 1));
        assert_eq!(s.histogram, [(0, 1), (1, 2)].into_iter().collect());

        let w = build_network(&k, NetworkKind::AuthorWritesPaper);
        let stats = w.degree_stats();
        assert_eq!(stats[0].avg_degree, 1.5);
        assert_eq!(stats[1].avg_degree, 1.0);
    }

    #[test]
    fn star_closed_form() {
        // hub paper h written by a0 with each of n coauthors on separate papers
        let n = 6;
        let authors: Vec<String> = (0..=n).map(|i| format!("a{i}")).collect();
        let papers: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
        let mut written = Vec::new();
        for (i, p) in papers.iter().enumerate() {
            written.push((p.as_str(), "a0"));
            written.push((p.as_str(), authors[i + 1].as_str()));
        }
        let a: Vec<&str> = authors.iter().map(String::as_str).collect();
        let p: Vec<&str> = papers.iter().map(String::as_str).collect();
        let g = build_network(&kg(&p, &a, &written, &[]), NetworkKind::Coauthor);
        let s = &g.degree_stats()[0];
        assert_eq!(s.max_degree, n);
        assert!((s.avg_degree - 2.0 * n as f64 / (n + 1) as f64).abs() < 1e-12);
        assert_eq!(s.histogram.values().sum::<usize>(), s.size);
    }

    #[test]
    fn citation_cycles_are_kept() {
        let k = kg(&["x", "y"], &[], &[], &[("x", "y"), ("y", "x")]);
        let g = build_network(&k, NetworkKind::Citation);
        assert_eq!(g.edges.len(), 2);
        assert_eq!(nodes_on_cycles(&g.left, &g.edges), 2);
    }

    #[test]
    fn bins_by_hand() {
        let h: BTreeMap<usize, usize> = [(0, 2), (1, 5), (2, 3), (3, 1), (4, 4), (9, 1)].into_iter().collect();
        assert_eq!(log_bins(&h), vec![(0, 0, 2), (1, 1, 5), (2, 3, 4), (4, 7, 4), (8, 15, 1)]);
        assert!(log_bins(&BTreeMap::new()).is_empty());
        let empty = build_network(&KgStore::new(), NetworkKind::Coauthor);
        assert_eq!(distribution_tsv(&empty), "");
        assert_eq!(empty.degree_stats()[0].avg_degree, 0.0);
    }

    #[test]
    fn kind_names() {
        for k in NetworkKind::ALL {
            assert_eq!(k.as_str().parse::<NetworkKind>().unwrap(), k);
        }
        assert!("friends".parse::<NetworkKind>().is_err());
    }
}
