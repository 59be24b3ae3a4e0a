use std::fs;
use std::path::{Path, PathBuf};

use textkm::ingest::{build_corpus, deduplicate, extract_metadata, extract_review_blocks, Corpus};
use textkm::insight::{score_document, top_terms, unique_word_counts, SentimentLexicon};
use textkm::models::rank_documents;
use textkm::render::render_bars;
use textkm::sink::{
    append_record, emit_outbox, make_record, payload_envelope, query_records, RecordFilter,
    RecordKind,
};
use textkm::textprep::{load_lemma_table, preprocess_corpus, PipelineConfig, PreparedDocument};
use textkm::time::Timestamp;
use textkm::vectorspace::{build_dtm, build_vocabulary, FeatureSelection};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn now() -> Timestamp {
    Timestamp::parse("2024-01-15T10:00:00Z").unwrap()
}

fn corpus() -> Corpus {
    let mut files: Vec<PathBuf> = fs::read_dir(fixtures().join("reviews"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    let mut items = Vec::new();
    for f in &files {
        let html = fs::read_to_string(f).unwrap();
        let meta = extract_metadata(&html, &f.file_name().unwrap().to_string_lossy(), now());
        for block in extract_review_blocks(&html, "portfolioContainer") {
            items.push((block, meta.clone()));
        }
    }
    deduplicate(&build_corpus(items, "student")).0
}

fn prepared(c: &Corpus) -> Vec<PreparedDocument> {
    let cfg = PipelineConfig {
        lemmatize: true,
        lemma_table: load_lemma_table(&fixtures().join("lemmas.tsv")).unwrap(),
        ..Default::default()
    };
    preprocess_corpus(c.documents(), &cfg)
}

#[test]
fn fixture_ingests_to_ten_students() {
    let c = corpus();
    let ids: Vec<&str> = c.documents().iter().map(|d| d.id.as_str()).collect();
    let want: Vec<String> = (1..=10).map(|i| format!("student_{i}")).collect();
    assert_eq!(ids, want);
    let d5 = c.get("student_5").unwrap();
    assert_eq!(d5.meta.author.as_deref(), Some("student_5"));
    assert_eq!(d5.meta.source_uri, "review_05.html");
    assert_eq!(d5.meta.created_at, Timestamp::parse("2023-09-15"));
    assert!(d5.raw_text.starts_with("Damn, the biology syllabus"));
    assert!(!d5.raw_text.contains("School portal"));
}

#[test]
fn fixture_sentiment_pattern() {
    let c = corpus();
    let lex = SentimentLexicon::load(&fixtures().join("sentiment_lexicon.csv")).unwrap();
    let scores: Vec<_> = prepared(&c)
        .iter()
        .map(|p| score_document(p, &lex))
        .collect();
    let best = scores
        .iter()
        .max_by(|a, b| a.aggregate.polarity.total_cmp(&b.aggregate.polarity))
        .unwrap();
    assert_eq!(best.doc_id, "student_6");
    assert!(scores[1].aggregate.polarity < 0.0);
    for s in [&scores[3], &scores[5]] {
        assert!(s.series.iter().all(|x| x.polarity > 0.0), "{}", s.doc_id);
    }
}

#[test]
fn fixture_unique_words_pattern() {
    let c = corpus();
    let unique = unique_word_counts(&prepared(&c));
    let mut ranked: Vec<_> = unique
        .iter()
        .map(|u| (u.count, u.doc_id.as_str()))
        .collect();
    ranked.sort();
    assert_eq!(ranked[0].1, "student_9");
    let top: Vec<&str> = ranked.iter().rev().take(2).map(|r| r.1).collect();
    assert_eq!(top, ["student_3", "student_5"]);

    let bars: Vec<(String, f64)> = unique
        .iter()
        .map(|u| (u.doc_id.clone(), u.count as f64))
        .collect();
    let svg = render_bars(&bars, &Default::default()).unwrap();
    let heights: Vec<f64> = svg
        .lines()
        .filter(|l| l.contains("class=\"bar\""))
        .map(|l| {
            let s = l.split(" height=\"").nth(1).unwrap();
            s[..s.find('"').unwrap()].parse().unwrap()
        })
        .collect();
    let tallest = heights.iter().cloned().fold(f64::MIN, f64::max);
    assert_eq!(heights[2], tallest);
}

#[test]
fn fixture_frequencies_and_search() {
    let c = corpus();
    let prep = prepared(&c);
    let dtm = build_dtm(
        &prep,
        &build_vocabulary(&prep, &FeatureSelection::default()).unwrap(),
    );
    let top = top_terms(&dtm.column_totals(), 3);
    assert_eq!(top[0], ("school".to_string(), 12));

    let cfg = PipelineConfig::default();
    let hits = rank_documents("glaciers", &dtm, &cfg).hits;
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].doc_id, "student_5");
    assert!(rank_documents("zebra", &dtm, &cfg).no_vocabulary_match);
}

#[test]
fn store_and_outbox_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store.jsonl");
    let outbox = dir.path().join("outbox");
    fs::create_dir(&outbox).unwrap();
    let mut ids = std::collections::BTreeSet::new();
    for i in 0..100 {
        let kind = RecordKind::ALL[i % RecordKind::ALL.len()];
        let r = make_record(
            kind,
            payload_envelope(serde_json::json!({ "i": i })),
            &["t"],
            "c",
            now(),
        );
        assert!(append_record(&store, &r).unwrap());
        let p1 = emit_outbox(&r, &outbox, None).unwrap();
        let p2 = emit_outbox(&r, &outbox, Some("other.route.key")).unwrap();
        assert_eq!(p1, p2);
        let msg: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&p1).unwrap()).unwrap();
        assert_eq!(msg["routing_key"], kind.default_routing_key());
        ids.insert(r.id);
    }
    assert_eq!(ids.len(), 100);
    assert_eq!(fs::read_to_string(&store).unwrap().lines().count(), 100);
    assert_eq!(fs::read_dir(&outbox).unwrap().count(), 100);

    let only = RecordFilter {
        kinds: Some([RecordKind::SentimentSummary].into()),
        ..Default::default()
    };
    let got = query_records(&store, &only).unwrap();
    assert_eq!(got.len(), 10);
    assert!(got.iter().all(|r| r.kind == RecordKind::SentimentSummary));
    let none = RecordFilter {
        tags_any: Some(["zzz".to_string()].into()),
        ..Default::default()
    };
    assert!(query_records(&store, &none).unwrap().is_empty());

    let bad = make_record(RecordKind::Topics, serde_json::json!(1), &["t"], "c", now());
    assert!(emit_outbox(&bad, &outbox, Some("A B")).is_err());
}

#[test]
fn corrupt_store_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store.jsonl");
    let r = make_record(RecordKind::Chart, serde_json::json!(1), &["t"], "c", now());
    append_record(&store, &r).unwrap();
    let mut text = fs::read_to_string(&store).unwrap();
    text.push_str("not json\n");
    fs::write(&store, text).unwrap();
    let err = query_records(&store, &RecordFilter::default()).unwrap_err();
    assert!(
        matches!(err, textkm::Error::StoreIntegrity { line: 2, .. }),
        "{err}"
    );
}
