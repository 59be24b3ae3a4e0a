//! Descriptive analytics over prepared documents: lexicon sentiment,
//! profanity counts, unique words, term frequencies, co-occurring term pairs
//! and word trees.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::PreparedDocument;

pub const DEFAULT_WINDOW: usize = 3;
pub const DEFAULT_NEGATION: f64 = -0.5;

/// Surface-form polarity lexicon with negation and intensifier cues.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLexicon {
    entries: BTreeMap<String, (f64, f64)>,
    negators: BTreeSet<String>,
    intensifiers: BTreeMap<String, f64>,
    window: usize,
    negation: f64,
}

impl SentimentLexicon {
    pub fn new(
        entries: BTreeMap<String, (f64, f64)>,
        negators: BTreeSet<String>,
        intensifiers: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let lex = SentimentLexicon {
            entries,
            negators,
            intensifiers,
            window: DEFAULT_WINDOW,
            negation: DEFAULT_NEGATION,
        };
        lex.validate()?;
        Ok(lex)
    }

    pub fn with_rule_constants(mut self, window: usize, negation: f64) -> Result<Self> {
        self.window = window;
        self.negation = negation;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        for (term, &(p, s)) in &self.entries {
            if !(-1.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&s) {
                return Err(Error::Config(format!(
                    "lexicon entry {term:?} out of bounds"
                )));
            }
        }
        for (term, &f) in &self.intensifiers {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Config(format!(
                    "intensifier {term:?} factor must be > 0"
                )));
            }
        }
        for term in self.negators.iter().chain(self.intensifiers.keys()) {
            if self.entries.contains_key(term) {
                return Err(Error::Config(format!(
                    "{term:?} is both a cue and a scored entry"
                )));
            }
        }
        if !self.negation.is_finite() {
            return Err(Error::Config("negation factor must be finite".into()));
        }
        Ok(())
    }

    pub fn entries(&self) -> &BTreeMap<String, (f64, f64)> {
        &self.entries
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn negation(&self) -> f64 {
        self.negation
    }

    /// Parses the line format:
    ///
    /// ```text
    /// #window=3
    /// #negation=-0.5
    /// good,0.7,0.6
    /// !not
    /// *very,1.3
    /// ```
    ///
    /// Other `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut negators = BTreeSet::new();
        let mut intensifiers = BTreeMap::new();
        let mut window = DEFAULT_WINDOW;
        let mut negation = DEFAULT_NEGATION;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let bad = |msg: &str| Error::format(format!("line {}", n + 1), msg.to_string());
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.strip_prefix("window=") {
                    window = v
                        .trim()
                        .parse()
                        .map_err(|_| bad("window must be an integer"))?;
                } else if let Some(v) = comment.strip_prefix("negation=") {
                    negation = v
                        .trim()
                        .parse()
                        .map_err(|_| bad("negation must be a number"))?;
                }
                continue;
            }
            if let Some(term) = line.strip_prefix('!') {
                negators.insert(term.trim().to_lowercase());
            } else if let Some(rest) = line.strip_prefix('*') {
                let (term, factor) = rest
                    .split_once(',')
                    .ok_or_else(|| bad("expected *term,factor"))?;
                let factor: f64 = factor
                    .trim()
                    .parse()
                    .map_err(|_| bad("factor must be a number"))?;
                intensifiers.insert(term.trim().to_lowercase(), factor);
            } else {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                let [term, p, s] = cols[..] else {
                    return Err(bad("expected term,polarity,subjectivity"));
                };
                let p: f64 = p.parse().map_err(|_| bad("polarity must be a number"))?;
                let s: f64 = s
                    .parse()
                    .map_err(|_| bad("subjectivity must be a number"))?;
                entries.insert(term.to_lowercase(), (p, s));
            }
        }
        SentimentLexicon::new(entries, negators, intensifiers)?
            .with_rule_constants(window, negation)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SentimentScore {
    pub polarity: f64,
    pub subjectivity: f64,
    pub assessments: usize,
}

impl SentimentScore {
    fn mean_of(assessments: &[(f64, f64)]) -> Self {
        if assessments.is_empty() {
            return SentimentScore::default();
        }
        let n = assessments.len() as f64;
        SentimentScore {
            polarity: assessments.iter().map(|a| a.0).sum::<f64>() / n,
            subjectivity: assessments.iter().map(|a| a.1).sum::<f64>() / n,
            assessments: assessments.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentSentiment {
    pub doc_id: String,
    pub aggregate: SentimentScore,
    pub series: Vec<SentimentScore>,
}

/// `(polarity, subjectivity)` for every lexicon hit, left to right.
///
/// Each hit looks back at most `window` tokens. The nearest intensifier in
/// that window scales both values (clamped to their ranges); any negator in
/// the window then multiplies polarity by the negation factor.
pub fn assess_sentence(tokens: &[String], lex: &SentimentLexicon) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        let Some(&(mut p, mut s)) = lex.entries.get(tok) else {
            continue;
        };
        let window = &tokens[i.saturating_sub(lex.window)..i];
        if let Some(f) = window.iter().rev().find_map(|t| lex.intensifiers.get(t)) {
            p = (p * f).clamp(-1.0, 1.0);
            s = (s * f).clamp(0.0, 1.0);
        }
        if window.iter().any(|t| lex.negators.contains(t)) {
            p = (p * lex.negation).clamp(-1.0, 1.0);
        }
        out.push((p, s));
    }
    out
}

pub fn score_sentence(tokens: &[String], lex: &SentimentLexicon) -> SentimentScore {
    SentimentScore::mean_of(&assess_sentence(tokens, lex))
}

/// Per-sentence series plus an aggregate that averages every individual
/// assessment in the document (not the sentence means).
pub fn score_document(prep: &PreparedDocument, lex: &SentimentLexicon) -> DocumentSentiment {
    let per_sentence: Vec<Vec<(f64, f64)>> = prep
        .sentences
        .iter()
        .map(|s| assess_sentence(s, lex))
        .collect();
    let all: Vec<(f64, f64)> = per_sentence.iter().flatten().copied().collect();
    DocumentSentiment {
        doc_id: prep.doc_id.clone(),
        aggregate: SentimentScore::mean_of(&all),
        series: per_sentence
            .iter()
            .map(|a| SentimentScore::mean_of(a))
            .collect(),
    }
}

/// `*` matches any run of characters, including none.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProfanityCount {
    /// Matching token occurrences.
    pub count: usize,
    pub matched: BTreeSet<String>,
}

pub fn profanity_count<'a>(
    tokens: impl IntoIterator<Item = &'a String>,
    patterns: &[String],
) -> ProfanityCount {
    let mut out = ProfanityCount::default();
    for tok in tokens {
        if patterns.iter().any(|p| glob_match(p, tok)) {
            out.count += 1;
            out.matched.insert(tok.clone());
        }
    }
    out
}

/// One glob pattern per line; `#` comments and blank lines skipped.
pub fn parse_patterns(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn load_patterns(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_patterns(&text))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniqueWords {
    pub doc_id: String,
    pub count: usize,
    pub words: BTreeSet<String>,
}

/// Words of each document that occur in no other document, in corpus order.
/// Uses stop-filtered tokens before stemming.
pub fn unique_word_counts(prepared: &[PreparedDocument]) -> Vec<UniqueWords> {
    let types: Vec<BTreeSet<&str>> = prepared.iter().map(|d| d.surface_types()).collect();
    let mut doc_freq: HashMap<&str, usize> = HashMap::new();
    for set in &types {
        for &t in set {
            *doc_freq.entry(t).or_default() += 1;
        }
    }
    prepared
        .iter()
        .zip(&types)
        .map(|(doc, set)| {
            let words: BTreeSet<String> = set
                .iter()
                .filter(|t| doc_freq[*t] == 1)
                .map(|t| t.to_string())
                .collect();
            UniqueWords {
                doc_id: doc.doc_id.clone(),
                count: words.len(),
                words,
            }
        })
        .collect()
}

/// Total content-token counts over a prepared corpus.
pub fn term_totals(prepared: &[PreparedDocument]) -> BTreeMap<String, u64> {
    let mut totals = BTreeMap::new();
    for t in prepared.iter().flat_map(|d| &d.content_tokens) {
        *totals.entry(t.clone()).or_default() += 1;
    }
    totals
}

/// The `k` most frequent terms, ties in lexicographic order.
pub fn top_terms(counts: &BTreeMap<String, u64>, k: usize) -> Vec<(String, u64)> {
    let mut all: Vec<(String, u64)> = counts.iter().map(|(t, &c)| (t.clone(), c)).collect();
    // BTreeMap order is already lexicographic, and the sort is stable
    all.sort_by_key(|e| std::cmp::Reverse(e.1));
    all.truncate(k);
    all
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub first: String,
    pub second: String,
    pub count: usize,
}

/// Adjacent content-token pairs within a sentence seen at least `min_count` times.
pub fn extract_concepts(prepared: &[PreparedDocument], min_count: usize) -> Vec<Concept> {
    let mut counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for sentence in prepared.iter().flat_map(|d| &d.content_sentences) {
        for pair in sentence.windows(2) {
            *counts.entry((&pair[0], &pair[1])).or_default() += 1;
        }
    }
    let mut out: Vec<Concept> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count.max(1))
        .map(|((a, b), count)| Concept {
            first: a.to_string(),
            second: b.to_string(),
            count,
        })
        .collect();
    out.sort_by_key(|e| std::cmp::Reverse(e.count));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordTreeNode {
    pub term: String,
    pub count: usize,
    pub children: Vec<WordTreeNode>,
}

#[derive(Default)]
struct Trie<'a> {
    count: usize,
    children: BTreeMap<&'a str, Trie<'a>>,
}

impl Trie<'_> {
    fn into_node(self, term: &str) -> WordTreeNode {
        let mut children: Vec<WordTreeNode> = self
            .children
            .into_iter()
            .map(|(t, sub)| sub.into_node(t))
            .collect();
        children.sort_by_key(|c| std::cmp::Reverse(c.count));
        WordTreeNode {
            term: term.to_string(),
            count: self.count,
            children,
        }
    }
}

/// Continuations of `root` within sentences, up to `max_depth` tokens deep.
pub fn word_tree(prepared: &[PreparedDocument], root: &str, max_depth: usize) -> WordTreeNode {
    let mut trie = Trie::default();
    for sentence in prepared.iter().flat_map(|d| &d.content_sentences) {
        for (i, tok) in sentence.iter().enumerate() {
            if tok != root {
                continue;
            }
            trie.count += 1;
            let mut node = &mut trie;
            for next in sentence.iter().skip(i + 1).take(max_depth) {
                node = node.children.entry(next.as_str()).or_default();
                node.count += 1;
            }
        }
    }
    trie.into_node(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    fn prep(id: &str, sentences: &[&[&str]]) -> PreparedDocument {
        let sentences: Vec<Vec<String>> = sentences.iter().map(|s| toks(s)).collect();
        let flat: Vec<String> = sentences.iter().flatten().cloned().collect();
        PreparedDocument {
            doc_id: id.into(),
            filtered_tokens: flat.clone(),
            token_types: flat.iter().cloned().collect(),
            content_tokens: flat,
            content_sentences: sentences.clone(),
            sentences,
        }
    }

    fn lexicon() -> SentimentLexicon {
        SentimentLexicon::parse("good,0.7,0.6\nbad,-0.7,0.667\n!not\n*very,1.3\n").unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn single_hit() {
        let s = score_sentence(&toks(&["good"]), &lexicon());
        assert_eq!((s.polarity, s.subjectivity, s.assessments), (0.7, 0.6, 1));
    }

    #[test]
    fn negated_hit() {
        let s = score_sentence(&toks(&["not", "good"]), &lexicon());
        assert!(close(s.polarity, -0.35) && close(s.subjectivity, 0.6));
        assert_eq!(s.assessments, 1);
    }

    #[test]
    fn intensified_hit() {
        let s = score_sentence(&toks(&["very", "good"]), &lexicon());
        assert!(close(s.polarity, 0.91) && close(s.subjectivity, 0.78));
    }

    #[test]
    fn intensifier_clamps() {
        let lex = SentimentLexicon::parse("great,0.9,0.9\n*extremely,2\n").unwrap();
        let s = score_sentence(&toks(&["extremely", "great"]), &lex);
        assert_eq!((s.polarity, s.subjectivity), (1.0, 1.0));
    }

    #[test]
    fn window_is_three_tokens() {
        let lex = lexicon();
        let far = score_sentence(&toks(&["not", "a", "b", "c", "good"]), &lex);
        assert_eq!(far.polarity, 0.7);
        let near = score_sentence(&toks(&["not", "b", "c", "good"]), &lex);
        assert!(close(near.polarity, -0.35));
    }

    #[test]
    fn empty_sentence() {
        assert_eq!(score_sentence(&[], &lexicon()), SentimentScore::default());
    }

    #[test]
    fn document_aggregate_is_mean_of_assessments() {
        let d = prep("d", &[&["good"], &["bad"]]);
        let s = score_document(&d, &lexicon());
        assert!(close(s.aggregate.polarity, 0.0));
        assert_eq!(s.series.len(), 2);
        assert_eq!((s.series[0].polarity, s.series[1].polarity), (0.7, -0.7));

        // unequal hit counts: 3 assessments, not two sentence means
        let d = prep("d", &[&["good", "good"], &["bad"]]);
        let s = score_document(&d, &lexicon());
        assert!(close(s.aggregate.polarity, 0.7 / 3.0));
    }

    #[test]
    fn document_without_hits() {
        let s = score_document(&prep("d", &[&["plain"], &["text"]]), &lexicon());
        assert_eq!(s.aggregate, SentimentScore::default());
        assert!(s.series.iter().all(|x| *x == SentimentScore::default()));
    }

    #[test]
    fn lexicon_parse_errors_carry_line_numbers() {
        match SentimentLexicon::parse("good,0.7,0.6\nbad,x,1\n").unwrap_err() {
            Error::InputFormat { field, .. } => assert_eq!(field, "line 2"),
            e => panic!("{e:?}"),
        }
        assert!(SentimentLexicon::parse("good,1.5,0.5\n").is_err());
        assert!(SentimentLexicon::parse("good,0.5,0.5\n!good\n").is_err());
        let lex = SentimentLexicon::parse("#window=2\n#negation=-1\n# note\n").unwrap();
        assert_eq!((lex.window(), lex.negation()), (2, -1.0));
    }

    #[test]
    fn globbing() {
        assert!(glob_match("hell", "hell"));
        assert!(!glob_match("hell", "hello"));
        assert!(glob_match("f*ck", "fck"));
        assert!(glob_match("f*ck", "fuuck"));
        assert!(glob_match("*", ""));
        assert!(glob_match("a*b*c", "axxbyyc"));
        assert!(!glob_match("a*b*c", "axxbyy"));
    }

    #[test]
    fn profanity_counts_occurrences() {
        let r = profanity_count(&toks(&["hell", "x", "hell"]), &toks(&["hell"]));
        assert_eq!(r.count, 2);
        assert_eq!(r.matched, BTreeSet::from(["hell".to_string()]));
        assert_eq!(
            profanity_count(&toks(&["a"]), &toks(&["hell"])),
            ProfanityCount::default()
        );
    }

    #[test]
    fn unique_words() {
        let docs = [
            prep("d1", &[&["apple", "school"]]),
            prep("d2", &[&["school", "zebra"]]),
        ];
        let u = unique_word_counts(&docs);
        assert_eq!((u[0].count, u[1].count), (1, 1));
        assert!(u[0].words.contains("apple") && u[1].words.contains("zebra"));

        let same = [prep("a", &[&["x", "y"]]), prep("b", &[&["y", "x"]])];
        assert!(unique_word_counts(&same).iter().all(|u| u.count == 0));
    }

    #[test]
    fn top_terms_ties_and_truncation() {
        let counts: BTreeMap<String, u64> =
            [("a".into(), 3), ("b".into(), 3), ("c".into(), 1)].into();
        assert_eq!(top_terms(&counts, 2), [("a".into(), 3), ("b".into(), 3)]);
        assert_eq!(top_terms(&counts, 10).len(), 3);
        let one: BTreeMap<String, u64> = [("x".into(), 5)].into();
        assert_eq!(top_terms(&one, 1), [("x".to_string(), 5)]);
    }

    #[test]
    fn concepts() {
        let docs = [prep("d", &[&["new", "york", "new", "york", "city"]])];
        let c = extract_concepts(&docs, 2);
        assert_eq!(
            c,
            [Concept {
                first: "new".into(),
                second: "york".into(),
                count: 2
            }]
        );
        assert_eq!(extract_concepts(&docs, 1).len(), 3);
        assert!(extract_concepts(&[], 1).is_empty());
        assert!(extract_concepts(&[prep("d", &[&["a"], &["b"]])], 1).is_empty());
    }

    #[test]
    fn word_trees() {
        let docs = [prep("d", &[&["a", "b", "a", "c"]])];
        let t = word_tree(&docs, "a", 1);
        assert_eq!(t.count, 2);
        let kids: Vec<(&str, usize)> = t
            .children
            .iter()
            .map(|c| (c.term.as_str(), c.count))
            .collect();
        assert_eq!(kids, [("b", 1), ("c", 1)]);
        assert!(t.children.iter().all(|c| c.children.is_empty()));

        let absent = word_tree(&docs, "z", 3);
        assert_eq!((absent.count, absent.children.len()), (0, 0));
    }
}
