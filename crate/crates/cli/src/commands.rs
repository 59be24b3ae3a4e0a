use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use textkm::ingest::{
    build_corpus, deduplicate, extract_metadata, extract_review_blocks, load_corpus, save_corpus,
    write_atomic, Corpus, DocumentMeta,
};
use textkm::insight::{
    extract_concepts, load_patterns, profanity_count, score_document, top_terms,
    unique_word_counts, SentimentLexicon, SentimentScore,
};
use textkm::models::{rank_documents, top_topic_terms, train_naive_bayes, GibbsSampler};
use textkm::render::{
    render_bars, render_radar, render_scatter, render_timeseries, render_wordcloud, ChartStyle,
    LabeledSeries,
};
use textkm::sink::{
    append_record, emit_outbox, make_record, payload_envelope, verify_store, RecordKind,
};
use textkm::textprep::{content_tokens, preprocess_corpus, PipelineConfig, PreparedDocument};
use textkm::time::Timestamp;
use textkm::vectorspace::{build_dtm, build_vocabulary, DocumentTermMatrix, FeatureSelection};
use textkm::Error;

use crate::config::RunConfig;
use crate::results::{self, *};
use crate::{
    AnalyzeArgs, ClassifyArgs, ExportArgs, IngestArgs, ReportArgs, SearchArgs, VerifyArgs,
};

pub const CHART_FILES: [&str; 5] = [
    "radar.svg",
    "wordcloud.svg",
    "unique_words.svg",
    "sentiment_scatter.svg",
    "sentiment_timeseries.svg",
];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Invariant(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Invariant(_) => "internal",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Invariant(m) => m.clone(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) | Error::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Status output; a closed stdout (e.g. piped into `head`) is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn now() -> CliResult<Timestamp> {
    match std::env::var("KM_NOW") {
        Ok(v) => Timestamp::parse(&v)
            .ok_or_else(|| CliError::Usage(format!("KM_NOW {v:?} is not an ISO-8601 timestamp"))),
        Err(_) => Ok(Timestamp::now()),
    }
}

fn write_out(path: &Path, contents: &str) -> CliResult {
    write_atomic(path, contents.as_bytes()).map_err(CliError::from)
}

fn create_dir(path: &Path) -> CliResult {
    fs::create_dir_all(path)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))
}

pub fn ingest(args: &IngestArgs) -> CliResult {
    let retrieved = now()?;
    let entries = fs::read_dir(&args.input_dir)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.input_dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file() && matches!(p.extension().and_then(|x| x.to_str()), Some("html" | "txt"))
        })
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if files.is_empty() {
        return Err(CliError::Usage(format!(
            "no .html or .txt files in {}",
            args.input_dir.display()
        )));
    }

    let mut items = Vec::new();
    for path in &files {
        let bytes =
            fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes)
            .map_err(|_| CliError::Input(format!("{}: not valid UTF-8", path.display())))?;
        let source = path
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        if path.extension().is_some_and(|x| x == "html") {
            let meta = extract_metadata(&text, &source, retrieved);
            let blocks = extract_review_blocks(&text, &args.class_name);
            if args.join_blocks {
                if !blocks.is_empty() {
                    items.push((blocks.join("\n"), meta));
                }
            } else {
                items.extend(blocks.into_iter().map(|b| (b, meta.clone())));
            }
        } else {
            items.push((text, DocumentMeta::new(source, retrieved)));
        }
    }
    let (corpus, report) = deduplicate(&build_corpus(items, &args.id_prefix));
    save_corpus(&corpus, &args.out)?;
    say!("kept {} removed {}", report.kept, report.removed.len());
    for (dropped, kept) in &report.removed {
        say!("removed {dropped} duplicate-of {kept}");
    }
    Ok(())
}

struct Analysis {
    prepared: Vec<PreparedDocument>,
    dtm: Option<DocumentTermMatrix>,
}

/// Preprocesses and builds the DTM. `dtm` is `None` only when no document has
/// any content token at all.
fn vectorize(
    corpus: &Corpus,
    pipeline: &PipelineConfig,
    selection: &FeatureSelection,
) -> CliResult<Analysis> {
    let prepared = preprocess_corpus(corpus.documents(), pipeline);
    let dtm = match build_vocabulary(&prepared, selection) {
        Ok(vocab) => Some(build_dtm(&prepared, &vocab)),
        Err(Error::EmptyVocabulary) if prepared.iter().all(|p| p.content_tokens.is_empty()) => None,
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    if let Some(dtm) = &dtm {
        for (i, p) in prepared.iter().enumerate() {
            let in_vocab = p
                .content_tokens
                .iter()
                .filter(|t| dtm.vocabulary().index_of(t).is_some())
                .count();
            if dtm.row_sum(i) != in_vocab as u64 {
                return Err(CliError::Invariant(format!(
                    "DTM row {i} does not sum to its in-vocabulary token count"
                )));
            }
        }
    }
    Ok(Analysis { prepared, dtm })
}

fn dtm_json(corpus_id: &str, analysis: &Analysis) -> Value {
    let mut v = match &analysis.dtm {
        Some(dtm) => dtm.to_json(),
        None => serde_json::json!({
            "doc_ids": analysis.prepared.iter().map(|p| p.doc_id.clone()).collect::<Vec<_>>(),
            "terms": [],
            "df": [],
            "rows": analysis.prepared.iter().map(|_| Vec::<Value>::new()).collect::<Vec<_>>(),
        }),
    };
    let obj = v.as_object_mut().expect("dtm json is an object");
    obj.insert("schema_version".into(), RESULTS_SCHEMA_VERSION.into());
    obj.insert("corpus_id".into(), corpus_id.into());
    v
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.lda.seed = seed;
    }
    if let Some(k) = args.topics {
        cfg.lda.k = k;
        cfg.lda.validate()?;
    }
    let pipeline = cfg.pipeline.resolve()?;
    let lexicon = SentimentLexicon::load(&cfg.sentiment_lexicon)?;
    let patterns = load_patterns(&cfg.profanity)?;
    let corpus = load_corpus(&args.corpus)?;
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| cfg.output_dir.clone());
    create_dir(&out_dir)?;

    let analysis = vectorize(&corpus, &pipeline, &cfg.selection)?;
    let id = corpus.corpus_id.as_str();
    let prepared = &analysis.prepared;

    let sentiment = SentimentResults {
        documents: prepared
            .iter()
            .map(|p| score_document(p, &lexicon))
            .collect(),
    };
    let totals = analysis
        .dtm
        .as_ref()
        .map(|d| d.column_totals())
        .unwrap_or_default();
    let frequencies = FrequencyResults {
        top_k: cfg.wordcloud_top_k,
        terms: top_terms(&totals, cfg.wordcloud_top_k)
            .into_iter()
            .map(|(term, count)| TermCount { term, count })
            .collect(),
    };
    let unique = UniqueWordResults {
        documents: unique_word_counts(prepared),
    };
    let profanity = ProfanityResults {
        documents: prepared
            .iter()
            .map(|p| {
                let c = profanity_count(p.surface_tokens(), &patterns);
                DocProfanity {
                    doc_id: p.doc_id.clone(),
                    count: c.count,
                    matched: c.matched.into_iter().collect(),
                }
            })
            .collect(),
    };
    let concepts = ConceptResults {
        min_count: cfg.concepts.min_count,
        concepts: extract_concepts(prepared, cfg.concepts.min_count),
    };
    let topics = topic_results(analysis.dtm.as_ref(), &cfg)?;

    write_out(
        &out_dir.join(results::SENTIMENT),
        &to_pretty(&ResultsFile::new(id, sentiment)),
    )?;
    write_out(
        &out_dir.join(results::FREQUENCIES),
        &to_pretty(&ResultsFile::new(id, frequencies)),
    )?;
    write_out(
        &out_dir.join(results::UNIQUE_WORDS),
        &to_pretty(&ResultsFile::new(id, unique)),
    )?;
    write_out(
        &out_dir.join(results::PROFANITY),
        &to_pretty(&ResultsFile::new(id, profanity)),
    )?;
    write_out(
        &out_dir.join(results::CONCEPTS),
        &to_pretty(&ResultsFile::new(id, concepts)),
    )?;
    write_out(
        &out_dir.join(results::TOPICS),
        &to_pretty(&ResultsFile::new(id, topics)),
    )?;
    write_out(
        &out_dir.join(results::DTM),
        &to_pretty(&dtm_json(id, &analysis)),
    )?;
    say!("wrote 7 results files to {}", out_dir.display());
    Ok(())
}

const TOPIC_TERMS: usize = 10;

fn topic_results(dtm: Option<&DocumentTermMatrix>, cfg: &RunConfig) -> CliResult<TopicResults> {
    let empty = TopicResults {
        params: cfg.lda,
        topics: Vec::new(),
        documents: Vec::new(),
    };
    let Some(dtm) = dtm else {
        return Ok(empty);
    };
    let mut sampler = GibbsSampler::new(dtm, cfg.lda)?;
    for _ in 0..cfg.lda.iterations {
        sampler.sweep();
    }
    if !sampler.counts_consistent() {
        return Err(CliError::Invariant(
            "LDA count tables diverged from assignments".into(),
        ));
    }
    let model = sampler.estimate();
    for row in model.theta.iter().chain(&model.phi) {
        if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CliError::Invariant(
                "LDA distribution does not sum to 1".into(),
            ));
        }
    }
    let dominant = model.dominant_topics();
    Ok(TopicResults {
        params: cfg.lda,
        topics: top_topic_terms(&model, TOPIC_TERMS)
            .into_iter()
            .map(|terms| {
                terms
                    .into_iter()
                    .map(|(term, probability)| TermProbability { term, probability })
                    .collect()
            })
            .collect(),
        documents: model
            .doc_ids
            .iter()
            .zip(&model.theta)
            .zip(dominant)
            .map(|((doc_id, theta), dominant)| DocTopics {
                doc_id: doc_id.clone(),
                theta: theta.clone(),
                dominant,
            })
            .collect(),
    })
}

pub fn report(args: &ReportArgs) -> CliResult {
    let dir = &args.results;
    let sentiment: ResultsFile<SentimentResults> = results::load(&dir.join(results::SENTIMENT))?;
    let freqs: ResultsFile<FrequencyResults> = results::load(&dir.join(results::FREQUENCIES))?;
    let unique: ResultsFile<UniqueWordResults> = results::load(&dir.join(results::UNIQUE_WORDS))?;
    let profanity: ResultsFile<ProfanityResults> = results::load(&dir.join(results::PROFANITY))?;
    let out_dir = args.out_dir.clone().unwrap_or_else(|| dir.clone());
    create_dir(&out_dir)?;
    let style = ChartStyle::default();

    let radar: Vec<(String, f64)> = profanity
        .body
        .documents
        .iter()
        .map(|d| (d.doc_id.clone(), d.count as f64))
        .collect();
    let mut written = 0;
    if radar.len() >= 3 {
        write_out(&out_dir.join("radar.svg"), &render_radar(&radar, &style)?)?;
        written += 1;
    } else {
        eprintln!(
            "warning: radar.svg skipped: needs at least 3 documents, got {}",
            radar.len()
        );
    }

    let words: Vec<(String, u64)> = freqs
        .body
        .terms
        .iter()
        .map(|t| (t.term.clone(), t.count))
        .collect();
    write_out(
        &out_dir.join("wordcloud.svg"),
        &render_wordcloud(&words, &style)?,
    )?;

    let bars: Vec<(String, f64)> = unique
        .body
        .documents
        .iter()
        .map(|d| (d.doc_id.clone(), d.count as f64))
        .collect();
    write_out(
        &out_dir.join("unique_words.svg"),
        &render_bars(&bars, &style)?,
    )?;

    let docs = &sentiment.body.documents;
    let points: Vec<(f64, f64, String)> = docs
        .iter()
        .map(|d| {
            (
                d.aggregate.polarity,
                d.aggregate.subjectivity,
                d.doc_id.clone(),
            )
        })
        .collect();
    write_out(
        &out_dir.join("sentiment_scatter.svg"),
        &render_scatter(&points, (-1.0, 1.0), (0.0, 1.0), &style)?,
    )?;

    let series = docs
        .iter()
        .map(|d| {
            let points = d
                .series
                .iter()
                .enumerate()
                .map(|(i, s): (usize, &SentimentScore)| (i as i64, s.polarity))
                .collect();
            LabeledSeries::new(d.doc_id.clone(), points)
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_out(
        &out_dir.join("sentiment_timeseries.svg"),
        &render_timeseries(&series, &style)?,
    )?;
    written += 4;
    say!("wrote {written} charts to {}", out_dir.display());
    Ok(())
}

/// The record kinds a results file becomes. `sentiment.out` yields a summary
/// and a per-sentence series record.
fn export_records(dir: &Path) -> CliResult<Vec<(RecordKind, String, Value)>> {
    let mut out = Vec::new();
    let files = [
        (results::SENTIMENT, RecordKind::SentimentSummary),
        (results::FREQUENCIES, RecordKind::FrequencyTable),
        (results::UNIQUE_WORDS, RecordKind::UniqueWords),
        (results::PROFANITY, RecordKind::Profanity),
        (results::CONCEPTS, RecordKind::Concepts),
        (results::TOPICS, RecordKind::Topics),
    ];
    for (name, kind) in files {
        let path = dir.join(name);
        let mut v: Value = serde_json::from_str(&results::read_text(&path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let obj = v
            .as_object_mut()
            .ok_or_else(|| CliError::Input(format!("{}: not a JSON object", path.display())))?;
        if obj.remove("schema_version") != Some(Value::from(RESULTS_SCHEMA_VERSION)) {
            return Err(CliError::Input(format!(
                "{}: unsupported schema_version",
                path.display()
            )));
        }
        let corpus_id = match obj.remove("corpus_id") {
            Some(Value::String(s)) => s,
            _ => {
                return Err(CliError::Input(format!(
                    "{}: missing corpus_id",
                    path.display()
                )))
            }
        };
        if kind == RecordKind::SentimentSummary {
            let sentiment: SentimentResults = serde_json::from_value(v.clone())
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let summary: Vec<Value> = sentiment
                .documents
                .iter()
                .map(|d| serde_json::json!({"doc_id": d.doc_id, "aggregate": d.aggregate}))
                .collect();
            let series: Vec<Value> = sentiment
                .documents
                .iter()
                .map(|d| serde_json::json!({"doc_id": d.doc_id, "series": d.series}))
                .collect();
            out.push((
                RecordKind::SentimentSummary,
                corpus_id.clone(),
                serde_json::json!({ "documents": summary }),
            ));
            out.push((
                RecordKind::SentimentSeries,
                corpus_id,
                serde_json::json!({ "documents": series }),
            ));
        } else {
            out.push((kind, corpus_id, v));
        }
    }
    let source = out.first().map(|(_, c, _)| c.clone()).unwrap_or_default();
    if let Some((_, other, _)) = out.iter().find(|(_, c, _)| *c != source) {
        return Err(CliError::Input(format!(
            "results mix corpus ids {source} and {other}"
        )));
    }
    for name in CHART_FILES {
        let path = dir.join(name);
        if path.is_file() {
            let svg = fs::read_to_string(&path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            out.push((
                RecordKind::Chart,
                source.clone(),
                serde_json::json!({ "file": name, "svg": svg }),
            ));
        }
    }
    Ok(out)
}

pub fn export(args: &ExportArgs) -> CliResult {
    let created = now()?;
    let records = export_records(&args.results)?;
    create_dir(&args.outbox)?;
    if let Some(parent) = args.store.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut tags: BTreeSet<String> = args.tags.iter().cloned().collect();
    tags.insert("analytics".into());
    let tags: Vec<String> = tags.into_iter().collect();
    let (mut appended, mut skipped) = (0, 0);
    for (kind, source, data) in records {
        let record = make_record(kind, payload_envelope(data), &tags, &source, created);
        if append_record(&args.store, &record)? {
            appended += 1;
        } else {
            skipped += 1;
        }
        emit_outbox(&record, &args.outbox, None)?;
    }
    say!("appended {appended} skipped {skipped}");
    Ok(())
}

fn pipeline_from(config: Option<&PathBuf>) -> CliResult<(PipelineConfig, FeatureSelection)> {
    match config {
        Some(p) => {
            let cfg = RunConfig::load(p)?;
            Ok((cfg.pipeline.resolve()?, cfg.selection))
        }
        None => Ok((PipelineConfig::default(), FeatureSelection::default())),
    }
}

pub fn search(args: &SearchArgs) -> CliResult {
    if args.query.trim().is_empty() {
        return Err(CliError::Usage("query is empty".into()));
    }
    if args.top_k == 0 {
        return Err(CliError::Usage("top-k must be at least 1".into()));
    }
    let (pipeline, selection) = pipeline_from(args.config.as_ref())?;
    let corpus = load_corpus(&args.corpus)?;
    let Some(dtm) = vectorize(&corpus, &pipeline, &selection)?.dtm else {
        say!("no results");
        return Ok(());
    };
    let ranking = rank_documents(&args.query, &dtm, &pipeline);
    if ranking.hits.is_empty() {
        say!("no results");
        return Ok(());
    }
    for (rank, hit) in ranking.hits.iter().take(args.top_k).enumerate() {
        say!("{} {:.6} {}", rank + 1, hit.score, hit.doc_id);
    }
    Ok(())
}

fn parse_labels(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut labels = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((doc, label)) = line.split_once(',') else {
            return Err(CliError::Input(format!(
                "{}: line {}: expected doc_id,label",
                path.display(),
                n + 1
            )));
        };
        let (doc, label) = (doc.trim(), label.trim());
        if n == 0 && doc == "doc_id" && label == "label" {
            continue;
        }
        if doc.is_empty() || label.is_empty() {
            return Err(CliError::Input(format!(
                "{}: line {}: empty field",
                path.display(),
                n + 1
            )));
        }
        if labels.insert(doc.to_string(), label.to_string()).is_some() {
            return Err(CliError::Input(format!(
                "{}: line {}: duplicate doc_id {doc}",
                path.display(),
                n + 1
            )));
        }
    }
    Ok(labels)
}

pub fn classify(args: &ClassifyArgs) -> CliResult {
    let (pipeline, selection) = pipeline_from(args.config.as_ref())?;
    let corpus = load_corpus(&args.corpus)?;
    let labels = parse_labels(&args.labels)?;
    if let Some(unknown) = labels.keys().find(|id| corpus.get(id).is_none()) {
        return Err(CliError::Input(format!(
            "label for unknown document {unknown:?}"
        )));
    }
    if let Some(doc) = &args.doc {
        if corpus.get(doc).is_none() {
            return Err(CliError::Usage(format!("unknown document {doc:?}")));
        }
    }
    if labels.values().collect::<BTreeSet<_>>().len() < 2 {
        return Err(CliError::Usage("labels name fewer than two classes".into()));
    }
    let Some(dtm) = vectorize(&corpus, &pipeline, &selection)?.dtm else {
        return Err(CliError::Input(Error::EmptyVocabulary.to_string()));
    };
    let ids: Vec<&str> = dtm
        .doc_ids()
        .iter()
        .map(String::as_str)
        .filter(|id| labels.contains_key(*id))
        .collect();
    let model = train_naive_bayes(&dtm.select_rows(&ids)?, &labels, args.alpha)?;
    let counts = match (&args.doc, &args.text) {
        (Some(doc), _) => dtm.row_terms(dtm.row_index(doc).expect("checked above")),
        (None, Some(text)) => {
            let mut counts = BTreeMap::new();
            for t in content_tokens(text, &pipeline) {
                *counts.entry(t).or_insert(0u32) += 1;
            }
            counts
        }
        (None, None) => return Err(CliError::Usage("pass --doc or --text".into())),
    };
    let result = model.classify(&counts);
    say!("label {}", result.label);
    for (class, score) in &result.scores {
        say!("{class} {score:.6}");
    }
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> CliResult {
    let report = verify_store(&args.store)?;
    for (line, id) in &report.mismatched {
        say!("mismatch line {line} id {id}");
    }
    for (line, id) in &report.duplicates {
        say!("duplicate line {line} id {id}");
    }
    if !report.is_clean() {
        return Err(CliError::Input(format!(
            "{}: {} of {} records failed verification",
            args.store.display(),
            report.mismatched.len() + report.duplicates.len(),
            report.records
        )));
    }
    say!("ok {} records", report.records);
    Ok(())
}
