use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use covidia_core::classify::{self, load_training_set, metrics_report, DisciplineModel, PredictionRecord};
use covidia_core::corpus::{
    fuse, ingest_source, read_jsonl, tag_locations, write_jsonl, FusedCorpus, LocationMention, SourceId,
    SourceRecord,
};
use covidia_core::disciplines::NUM_DISCIPLINES;
use covidia_core::extract::{
    build_rank_groups, choose_threshold, evaluate_tagging, load_annotations, load_glossary, merge_annotations,
    score_candidates, split_papers, tag, train_ranker, EsaIndex, GlossaryEntry, RankerModel,
};
use covidia_core::geo::{density_to_tsv, Gazetteer};
use covidia_core::kgstore::{
    assemble, export_ntriples, load_links, parse_relation_edges, write_log, KgInputs,
};
use covidia_core::netsci::{analyze, build_network, export_distribution, report_table, NetworkKind};
use covidia_core::relate::{
    align_all, edge_line, evaluate_relations, ingest_triples, load_relation_annotations, name_map, train_relation,
    triple_line, RelationLabel, RelationModel,
};
use covidia_core::service::{DataDir, Snapshot};
use serde::Serialize;

use crate::config::Config;

/// Fail with a message naming the stage and the missing file.
pub fn require<'a>(stage: &str, path: &'a Path) -> Result<&'a Path> {
    if path.is_file() {
        Ok(path)
    } else {
        bail!("{stage}: missing input file {}", path.display())
    }
}

/// A flag value, else the configured value, else an error naming the option.
fn pick(stage: &str, flag: Option<PathBuf>, configured: &Option<PathBuf>, option: &str) -> Result<PathBuf> {
    let p = flag
        .or_else(|| configured.clone())
        .ok_or_else(|| anyhow!("{stage}: no {option} given; pass --{} or set inputs.{option}", option.replace('_', "-")))?;
    require(stage, &p)?;
    Ok(p)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, s)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(())
}

fn load_corpus(stage: &str, dir: &DataDir) -> Result<FusedCorpus> {
    require(stage, &dir.corpus().join("papers.jsonl"))?;
    FusedCorpus::read_dir(&dir.corpus()).with_context(|| format!("{stage}: cannot load the fused corpus"))
}

fn load_glossary_for(stage: &str, path: &Path) -> Result<Vec<GlossaryEntry>> {
    let (entries, warnings) = load_glossary(path).with_context(|| stage.to_owned())?;
    for w in &warnings {
        log::warn!("{stage}: {}:{}: {}", path.display(), w.line, w.message);
    }
    if entries.is_empty() {
        bail!("{stage}: glossary {} has no usable entries", path.display());
    }
    Ok(entries)
}

pub fn ingest(cfg: &Config, dir: &DataDir, sources: &[String]) -> Result<()> {
    const STAGE: &str = "ingest";
    let mut feeds: BTreeMap<SourceId, PathBuf> = BTreeMap::new();
    for (name, path) in &cfg.inputs.sources {
        feeds.insert(name.parse().with_context(|| format!("{STAGE}: inputs.sources"))?, path.clone());
    }
    for s in sources {
        let (name, path) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("{STAGE}: --source expects NAME=PATH, got {s:?}"))?;
        feeds.insert(name.parse().with_context(|| STAGE)?, PathBuf::from(path));
    }
    if feeds.is_empty() {
        bail!("{STAGE}: no source feeds given; pass --source NAME=PATH or set inputs.sources");
    }
    for path in feeds.values() {
        require(STAGE, path)?;
    }
    let out_dir = dir.root().join("ingest");
    if out_dir.exists() {
        fs::remove_dir_all(&out_dir).with_context(|| format!("cannot clear {}", out_dir.display()))?;
    }
    fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    for (source, path) in feeds {
        let report = ingest_source(&path, source).with_context(|| STAGE)?;
        write_jsonl(&dir.ingested(source), &report.records)?;
        write_file(&dir.ingest_warnings(source), report.error_report())?;
        log::info!(
            "{STAGE}: {source}: {} records, {} malformed lines",
            report.records.len(),
            report.warnings.len()
        );
    }
    Ok(())
}

pub fn fuse_stage(cfg: &Config, dir: &DataDir, gazetteer: Option<PathBuf>) -> Result<()> {
    const STAGE: &str = "fuse";
    let mut feeds = Vec::new();
    for source in SourceId::ALL {
        let path = dir.ingested(source);
        if path.is_file() {
            feeds.push(read_jsonl::<SourceRecord>(&path)?);
        }
    }
    if feeds.is_empty() {
        bail!("{STAGE}: missing input file {}", dir.root().join("ingest/<source>.jsonl").display());
    }
    let corpus = fuse(&feeds);
    corpus.write_dir(&dir.corpus())?;
    let (p, a, o, v) = corpus.counts();
    log::info!("{STAGE}: {p} papers, {a} authors, {o} organizations, {v} venues");

    let mentions: Vec<LocationMention> = match gazetteer.or_else(|| cfg.inputs.gazetteer.clone()) {
        Some(path) => {
            let gaz = Gazetteer::load(require(STAGE, &path)?).with_context(|| STAGE)?;
            corpus.papers.iter().flat_map(|paper| tag_locations(paper, &gaz)).collect()
        }
        None => {
            log::warn!("{STAGE}: no gazetteer configured; papers get no locations");
            Vec::new()
        }
    };
    write_jsonl(&dir.locations(), &mentions)?;
    Ok(())
}

#[derive(Serialize)]
struct ClassifierEval {
    train_examples: usize,
    validation_examples: usize,
    epoch_losses: Vec<f64>,
    metrics_at_3: Option<classify::RankingMetrics>,
}

pub fn classify_train(cfg: &Config, dir: &DataDir, train_set: Option<PathBuf>) -> Result<()> {
    const STAGE: &str = "classify-train";
    let path = pick(STAGE, train_set, &cfg.inputs.train_set, "train_set")?;
    let (examples, warnings) = load_training_set(&path).with_context(|| STAGE)?;
    for w in &warnings {
        log::warn!("{STAGE}: {}:{}: {}", path.display(), w.line, w.message);
    }
    let ids = examples.iter().map(|e| e.paper_id.clone()).collect();
    let (_, val_ids) = split_papers(ids, cfg.classify.validation_fraction, cfg.seed());
    let val_ids: BTreeSet<String> = val_ids.into_iter().collect();
    let (val, train): (Vec<_>, Vec<_>) = examples.into_iter().partition(|e| val_ids.contains(&e.paper_id));
    let (model, report) = classify::train(&train, &cfg.classify.train).with_context(|| STAGE)?;
    ensure_parent(&dir.classifier_model())?;
    model.save(&dir.classifier_model())?;

    let records: Vec<PredictionRecord> = val
        .iter()
        .map(|e| PredictionRecord {
            paper_id: e.paper_id.clone(),
            x: model.predict(&e.text, cfg.classify.threshold).probabilities,
            y: e.label_vector().iter().map(|&v| v as u8).collect(),
        })
        .collect();
    let metrics = if records.is_empty() {
        None
    } else {
        write_file(&dir.classifier_metrics(), metrics_report("linear+infonce", &records)?)?;
        Some(classify::evaluate(&records, 3)?)
    };
    write_json(
        &dir.classifier_eval(),
        &ClassifierEval {
            train_examples: train.len(),
            validation_examples: val.len(),
            epoch_losses: report.epoch_losses,
            metrics_at_3: metrics,
        },
    )
}

pub fn classify_stage(cfg: &Config, dir: &DataDir, threshold: Option<f64>) -> Result<()> {
    const STAGE: &str = "classify";
    let model = DisciplineModel::load(require(STAGE, &dir.classifier_model())?).with_context(|| STAGE)?;
    let corpus = load_corpus(STAGE, dir)?;
    let threshold = threshold.unwrap_or(cfg.classify.threshold);
    let mut out = String::new();
    for p in &corpus.papers {
        let pred = model.predict(&format!("{} {}", p.title, p.r#abstract), threshold);
        let labels: Vec<String> = pred.labels.iter().map(usize::to_string).collect();
        out.push_str(&format!("{}\t{}\n", p.paper_id, labels.join(",")));
    }
    write_file(&dir.disciplines(), out)
}

pub fn load_disciplines(stage: &str, path: &Path) -> Result<Vec<(String, Vec<usize>)>> {
    let raw = fs::read_to_string(require(stage, path)?)?;
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let (id, labels) = l
                .split_once('\t')
                .ok_or_else(|| anyhow!("{stage}: {}:{}: expected paper_id and labels", path.display(), i + 1))?;
            let labels = labels
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| match s.parse::<usize>() {
                    Ok(v) if v < NUM_DISCIPLINES => Ok(v),
                    _ => Err(anyhow!("{stage}: {}:{}: bad discipline {s:?}", path.display(), i + 1)),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((id.to_owned(), labels))
        })
        .collect()
}

#[derive(Serialize)]
struct RankerEval {
    train_papers: usize,
    validation_papers: usize,
    skipped_groups: usize,
    threshold: f64,
    precision: f64,
    recall: f64,
    epoch_losses: Vec<f64>,
}

pub fn extract_train(cfg: &Config, dir: &DataDir, glossary: Option<PathBuf>, annotations: Vec<PathBuf>) -> Result<()> {
    const STAGE: &str = "extract-train";
    let glossary = pick(STAGE, glossary, &cfg.inputs.glossary, "glossary")?;
    let rounds_paths = if annotations.is_empty() {
        cfg.inputs.annotations.clone()
    } else {
        annotations
    };
    if rounds_paths.is_empty() {
        bail!("{STAGE}: no annotations given; pass --annotations or set inputs.annotations");
    }
    let mut rounds = Vec::new();
    for p in &rounds_paths {
        let (anns, warnings) = load_annotations(require(STAGE, p)?).with_context(|| STAGE)?;
        for w in &warnings {
            log::warn!("{STAGE}: {}:{}: {}", p.display(), w.line, w.message);
        }
        rounds.push(anns);
    }
    let annotations = merge_annotations(&rounds);
    let entries = load_glossary_for(STAGE, &glossary)?;
    let index = EsaIndex::build(entries).with_context(|| STAGE)?;
    let corpus = load_corpus(STAGE, dir)?;
    let texts: BTreeMap<String, String> =
        corpus.papers.iter().map(|p| (p.paper_id.clone(), p.r#abstract.clone())).collect();

    let annotated: Vec<String> = annotations.iter().map(|a| a.paper_id.clone()).collect();
    let (train_ids, val_ids) = split_papers(annotated, cfg.extract.validation_fraction, cfg.seed());
    let train_set: BTreeSet<&String> = train_ids.iter().collect();
    let val_set: BTreeSet<&String> = val_ids.iter().collect();
    let train_anns: Vec<_> = annotations.iter().filter(|a| train_set.contains(&a.paper_id)).cloned().collect();
    let groups = build_rank_groups(&index, &texts, &train_anns);
    let (mut model, report) = train_ranker(&groups, &cfg.extract.ranker).with_context(|| STAGE)?;

    let gold: BTreeSet<(String, String)> = annotations
        .iter()
        .filter(|a| a.label > 0 && val_set.contains(&a.paper_id))
        .map(|a| (a.paper_id.clone(), a.entity_id.clone()))
        .collect();
    let scored: Vec<_> = val_ids
        .iter()
        .filter_map(|id| texts.get(id).map(|t| (id, t)))
        .flat_map(|(id, t)| score_candidates(id, t, &index, &model, cfg.extract.top_n))
        .collect();
    if gold.is_empty() || scored.is_empty() {
        bail!("{STAGE}: the validation split has no positive annotations or no candidates");
    }
    let threshold = choose_threshold(&scored, &gold, cfg.extract.min_recall)?;
    let kept: Vec<(String, String)> = scored
        .iter()
        .filter(|t| t.score >= threshold)
        .map(|t| (t.paper_id.clone(), t.entity_id.clone()))
        .collect();
    let (precision, recall) = evaluate_tagging(&kept, &gold)?;
    model.threshold = Some(threshold);
    ensure_parent(&dir.ranker_model())?;
    model.save(&dir.ranker_model())?;
    log::info!("{STAGE}: threshold {threshold:.6}, validation precision {precision:.4}, recall {recall:.4}");
    write_json(
        &dir.ranker_eval(),
        &RankerEval {
            train_papers: train_ids.len(),
            validation_papers: val_ids.len(),
            skipped_groups: report.skipped_groups.len(),
            threshold,
            precision,
            recall,
            epoch_losses: report.epoch_losses,
        },
    )
}

pub fn extract_stage(cfg: &Config, dir: &DataDir, glossary: Option<PathBuf>) -> Result<()> {
    const STAGE: &str = "extract";
    let glossary = pick(STAGE, glossary, &cfg.inputs.glossary, "glossary")?;
    let model = RankerModel::load(require(STAGE, &dir.ranker_model())?).with_context(|| STAGE)?;
    let threshold = model
        .threshold
        .ok_or_else(|| anyhow!("{STAGE}: ranker model has no threshold; rerun extract-train"))?;
    let index = EsaIndex::build(load_glossary_for(STAGE, &glossary)?).with_context(|| STAGE)?;
    let corpus = load_corpus(STAGE, dir)?;
    let mut lines = BTreeSet::new();
    for p in &corpus.papers {
        for t in tag(&p.paper_id, &p.r#abstract, &index, &model, threshold, cfg.extract.top_n) {
            lines.insert(t.to_line());
        }
    }
    log::info!("{STAGE}: {} mention_knowledge tags", lines.len());
    write_file(&dir.tags(), lines.into_iter().map(|l| l + "\n").collect::<String>())
}

pub fn load_tags(stage: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let raw = fs::read_to_string(require(stage, path)?)?;
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| match l.split('\t').collect::<Vec<_>>().as_slice() {
            [p, "mention_knowledge", e] => Ok((p.to_string(), e.to_string())),
            _ => bail!("{stage}: {}:{}: expected paper_id, mention_knowledge, entity_id", path.display(), i + 1),
        })
        .collect()
}

#[derive(Serialize)]
struct RelationEval {
    train_examples: usize,
    validation_examples: usize,
    accuracy: Option<f64>,
    macro_precision: Option<f64>,
    macro_recall: Option<f64>,
    epoch_losses: Vec<f64>,
}

pub fn relate_train(cfg: &Config, dir: &DataDir, annotations: Option<PathBuf>) -> Result<()> {
    const STAGE: &str = "relate-train";
    let path = pick(STAGE, annotations, &cfg.inputs.relation_annotations, "relation_annotations")?;
    let (anns, warnings) = load_relation_annotations(&path).with_context(|| STAGE)?;
    for w in &warnings {
        log::warn!("{STAGE}: {}:{}: {}", path.display(), w.line, w.message);
    }
    let keys: Vec<String> = (0..anns.len()).map(|i| format!("{i:08}")).collect();
    let (_, val_keys) = split_papers(keys, cfg.relate.validation_fraction, cfg.seed());
    let val_idx: BTreeSet<usize> = val_keys.iter().map(|k| k.parse().expect("generated key")).collect();
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (i, a) in anns.into_iter().enumerate() {
        if val_idx.contains(&i) {
            val.push(a);
        } else {
            train.push(a);
        }
    }
    let (model, report) = train_relation(&train, &cfg.relate.train).with_context(|| STAGE)?;
    ensure_parent(&dir.relation_model())?;
    model.save(&dir.relation_model())?;
    let preds: Vec<RelationLabel> = val.iter().map(|a| model.predict(&a.input).0).collect();
    let gold: Vec<RelationLabel> = val.iter().map(|a| a.label).collect();
    let accuracy =
        (!val.is_empty()).then(|| preds.iter().zip(&gold).filter(|(p, g)| p == g).count() as f64 / val.len() as f64);
    let (mp, mr) = match evaluate_relations(&preds, &gold) {
        Ok((p, r)) => (Some(p), Some(r)),
        Err(e) => {
            log::warn!("{STAGE}: no macro scores: {e}");
            (None, None)
        }
    };
    write_json(
        &dir.relation_eval(),
        &RelationEval {
            train_examples: train.len(),
            validation_examples: val.len(),
            accuracy,
            macro_precision: mp,
            macro_recall: mr,
            epoch_losses: report.epoch_losses,
        },
    )
}

pub fn relate_stage(cfg: &Config, dir: &DataDir, triples: Option<PathBuf>, glossary: Option<PathBuf>) -> Result<()> {
    const STAGE: &str = "relate";
    let triples = pick(STAGE, triples, &cfg.inputs.triples, "triples")?;
    let glossary = pick(STAGE, glossary, &cfg.inputs.glossary, "glossary")?;
    let model = RelationModel::load(require(STAGE, &dir.relation_model())?).with_context(|| STAGE)?;
    let (raw, warnings) = ingest_triples(&triples).with_context(|| STAGE)?;
    for w in &warnings {
        log::warn!("{STAGE}: {}:{}: {}", triples.display(), w.line, w.message);
    }
    let names = name_map(&load_glossary_for(STAGE, &glossary)?);
    let (aligned, unaligned) = align_all(&raw, &names);
    let mut edges = BTreeSet::new();
    for t in &aligned {
        let (label, _) = model.predict(&t.input());
        edges.extend(edge_line(t, label));
    }
    log::info!("{STAGE}: {} aligned, {} unaligned, {} typed edges", aligned.len(), unaligned.len(), edges.len());
    write_file(&dir.relations(), edges.into_iter().map(|l| l + "\n").collect::<String>())?;
    write_file(&dir.unaligned_triples(), unaligned.iter().map(|t| triple_line(t) + "\n").collect::<String>())
}

pub fn build_kg(
    cfg: &Config,
    dir: &DataDir,
    glossary: Option<PathBuf>,
    links: Option<PathBuf>,
    gazetteer: Option<PathBuf>,
) -> Result<()> {
    const STAGE: &str = "build-kg";
    let corpus = load_corpus(STAGE, dir)?;
    let disciplines = load_disciplines(STAGE, &dir.disciplines())?;
    let tags = load_tags(STAGE, &dir.tags())?;
    let rel_raw = fs::read_to_string(require(STAGE, &dir.relations())?)?;
    let (relations, bad) = parse_relation_edges(&rel_raw);
    if let Some(w) = bad.first() {
        bail!("{STAGE}: {}:{}: {}", dir.relations().display(), w.line, w.message);
    }
    let locations: Vec<LocationMention> = read_jsonl(require(STAGE, &dir.locations())?)?;
    let glossary = load_glossary_for(STAGE, &pick(STAGE, glossary, &cfg.inputs.glossary, "glossary")?)?;
    let links = match links.or_else(|| cfg.inputs.links.clone()) {
        Some(p) => {
            let (links, warnings) = load_links(require(STAGE, &p)?).with_context(|| STAGE)?;
            for w in &warnings {
                log::warn!("{STAGE}: {}:{}: {}", p.display(), w.line, w.message);
            }
            links
        }
        None => Vec::new(),
    };
    let gazetteer = match gazetteer.or_else(|| cfg.inputs.gazetteer.clone()) {
        Some(p) => Some(Gazetteer::load(require(STAGE, &p)?).with_context(|| STAGE)?),
        None => None,
    };
    let inputs = KgInputs {
        corpus: Some(&corpus),
        disciplines: &disciplines,
        glossary: &glossary,
        tags: &tags,
        relations: &relations,
        locations: &locations,
        links: &links,
        gazetteer: gazetteer.as_ref(),
    };
    let (kg, report) = assemble(&inputs).with_context(|| STAGE)?;
    ensure_parent(&dir.kg_log())?;
    write_log(&kg, &dir.kg_log())?;
    let stats = kg.stats();
    log::info!(
        "{STAGE}: {} nodes, {} edges, {} skipped edges",
        stats.total_nodes,
        stats.total_edges,
        report.skipped.len()
    );
    write_json(&dir.kg_stats(), &stats)
}

fn load_snapshot(stage: &str, dir: &DataDir) -> Result<Snapshot> {
    require(stage, &dir.kg_log())?;
    Snapshot::load(dir).with_context(|| stage.to_owned())
}

pub fn geo_index(dir: &DataDir, precisions: &[usize]) -> Result<()> {
    const STAGE: &str = "geo-index";
    let snap = load_snapshot(STAGE, dir)?;
    let geo = snap.geo();
    let mut points = String::new();
    let mut rows: Vec<_> = geo.points().iter().collect();
    rows.sort_by(|a, b| (&a.paper_id, &a.location).cmp(&(&b.paper_id, &b.location)));
    for p in rows {
        points.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            p.paper_id,
            p.location,
            p.point.lat,
            p.point.lon,
            p.geohash.as_str()
        ));
    }
    write_file(&dir.geo_points(), points)?;
    for &precision in precisions {
        let grid = geo.density_grid(precision).with_context(|| STAGE)?;
        write_file(&dir.geo_density(precision), density_to_tsv(&grid))?;
    }
    log::info!("{STAGE}: {} indexed points", geo.len());
    Ok(())
}

pub fn netsci(cfg: &Config, dir: &DataDir, replicates: Option<usize>) -> Result<()> {
    const STAGE: &str = "netsci";
    let snap = load_snapshot(STAGE, dir)?;
    let replicates = replicates.unwrap_or(cfg.netsci.replicates);
    let mut rows = Vec::new();
    for kind in NetworkKind::ALL {
        let g = build_network(snap.kg(), kind);
        write_file(&dir.network_edges(kind), g.edge_list())?;
        export_distribution(&g, &dir.network_distribution(kind))?;
        rows.extend(analyze(&g, replicates, cfg.seed()).with_context(|| format!("{STAGE}: {kind}"))?);
    }
    write_file(&dir.network_table(), report_table(&rows))?;
    write_json(&dir.network_report(), &rows)
}

pub fn export(dir: &DataDir, output: Option<PathBuf>) -> Result<()> {
    const STAGE: &str = "export";
    let snap = load_snapshot(STAGE, dir)?;
    let out = output.unwrap_or_else(|| dir.ntriples());
    ensure_parent(&out)?;
    export_ntriples(snap.kg(), &out).with_context(|| STAGE)?;
    log::info!("{STAGE}: wrote {}", out.display());
    Ok(())
}
