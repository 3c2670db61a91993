//! Corpus ingestion: plain-text tokenization, the UCI sparse
//! bag-of-words format, vocabulary pruning, and the integer token view
//! the sampler consumes.
//!
//! Documents are exchangeable bags of words for the model, so loaders fix
//! an arbitrary but deterministic token order (ascending term id for
//! bag-of-words input) and a deterministic vocabulary order (lexicographic
//! for tokenized text, file order for an explicit vocabulary file).

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The reference vocabulary: term strings plus per-term frequencies.
///
/// `doc_freq[t]` counts retained documents containing term `t` at least
/// once; `corpus_freq[t]` counts total occurrences, so
/// `corpus_freq[t] >= doc_freq[t]` always.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub terms: Vec<String>,
    pub doc_freq: Vec<u32>,
    pub corpus_freq: Vec<u64>,
}

impl Vocabulary {
    /// Number of terms `V`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    /// Linear lookup; the loaders keep their own hash maps, this exists
    /// for tests and small tools.
    pub fn id(&self, term: &str) -> Option<u32> {
        self.terms.iter().position(|t| t == term).map(|i| i as u32)
    }

    /// One term per line, line number = id.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for term in &self.terms {
            writeln!(out, "{term}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Tokenized documents over a shared vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub vocab: Vocabulary,
    /// Token ids per document; every retained document is nonempty.
    pub docs: Vec<Vec<u32>>,
    /// Stable external identifier per document (file name, line number,
    /// or original bag-of-words index).
    pub doc_ids: Vec<String>,
}

impl Corpus {
    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    /// Vocabulary size `V`.
    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    /// Write in UCI sparse format: three header lines `D`, `W`, `NNZ`,
    /// then 1-indexed `doc term count` triples with terms ascending
    /// within each document.
    pub fn write_uci_bow(&self, path: &Path) -> Result<()> {
        let mut triples: Vec<(usize, u32, u32)> = Vec::new();
        for (d, doc) in self.docs.iter().enumerate() {
            let mut counts: HashMap<u32, u32> = HashMap::new();
            for &t in doc {
                *counts.entry(t).or_insert(0) += 1;
            }
            let mut row: Vec<(u32, u32)> = counts.into_iter().collect();
            row.sort_unstable();
            triples.extend(row.into_iter().map(|(t, c)| (d, t, c)));
        }
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", self.n_docs()).map_err(|e| Error::io(path, e))?;
        writeln!(out, "{}", self.n_terms()).map_err(|e| Error::io(path, e))?;
        writeln!(out, "{}", triples.len()).map_err(|e| Error::io(path, e))?;
        for (d, t, c) in triples {
            writeln!(out, "{} {} {}", d + 1, t + 1, c).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Plain-text ingestion settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenizerConfig {
    /// Treat every nonempty line as its own document instead of every
    /// file.
    pub one_doc_per_line: bool,
}

/// Lowercase and split on every non-alphanumeric character.
fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Load documents from a file or a directory of files; see
/// [`TokenizerConfig`] for the per-line mode. Vocabulary ids are assigned
/// in lexicographic term order, files are visited in name order, so the
/// result is independent of directory enumeration order.
pub fn load_plain_text(path: &Path, config: TokenizerConfig) -> Result<Corpus> {
    let mut files: Vec<PathBuf> = if path.is_dir() {
        let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
        let mut files = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(path, e))?;
            if entry.path().is_file() {
                files.push(entry.path());
            }
        }
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    files.retain(|f| f.file_name().is_some());

    let mut raw_docs: Vec<(String, Vec<String>)> = Vec::new();
    for file in &files {
        let text = fs::read_to_string(file).map_err(|e| Error::io(file.clone(), e))?;
        let name = file.file_name().unwrap().to_string_lossy().into_owned();
        if config.one_doc_per_line {
            for (i, line) in text.lines().enumerate() {
                let tokens = tokenize(line);
                if !tokens.is_empty() {
                    raw_docs.push((format!("{}:{}", name, i + 1), tokens));
                }
            }
        } else {
            let tokens = tokenize(&text);
            if !tokens.is_empty() {
                raw_docs.push((name, tokens));
            }
        }
    }
    if raw_docs.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "zero retained documents under {}",
            path.display()
        )));
    }

    let mut terms: Vec<String> = raw_docs
        .iter()
        .flat_map(|(_, tokens)| tokens.iter().cloned())
        .collect();
    terms.sort_unstable();
    terms.dedup();
    let term_to_id: HashMap<&str, u32> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u32))
        .collect();

    let mut doc_ids = Vec::with_capacity(raw_docs.len());
    let mut docs = Vec::with_capacity(raw_docs.len());
    for (id, tokens) in &raw_docs {
        doc_ids.push(id.clone());
        docs.push(tokens.iter().map(|t| term_to_id[t.as_str()]).collect());
    }
    let vocab = tally_vocabulary(terms, &docs);
    Ok(Corpus {
        vocab,
        docs,
        doc_ids,
    })
}

/// Recompute both frequency columns from the token streams.
pub(crate) fn tally_vocabulary(terms: Vec<String>, docs: &[Vec<u32>]) -> Vocabulary {
    let v = terms.len();
    let mut doc_freq = vec![0u32; v];
    let mut corpus_freq = vec![0u64; v];
    let mut seen = vec![usize::MAX; v];
    for (d, doc) in docs.iter().enumerate() {
        for &t in doc {
            corpus_freq[t as usize] += 1;
            if seen[t as usize] != d {
                seen[t as usize] = d;
                doc_freq[t as usize] += 1;
            }
        }
    }
    Vocabulary {
        terms,
        doc_freq,
        corpus_freq,
    }
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    field: &str,
    value: &str,
) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {field}: {value:?}")))
}

/// Load a UCI sparse bag-of-words pair: `docword_path` holds the three
/// header lines `D`, `W`, `NNZ` followed by exactly `NNZ` 1-indexed
/// `doc term count` triples; `vocab_path` holds one term per line.
///
/// Token order within a document is ascending term id. Documents with no
/// triples are dropped; their 1-indexed bag-of-words identifiers are kept
/// for the retained ones.
pub fn load_uci_bow(docword_path: &Path, vocab_path: &Path) -> Result<Corpus> {
    let vocab_text = fs::read_to_string(vocab_path).map_err(|e| Error::io(vocab_path, e))?;
    let terms: Vec<String> = vocab_text.lines().map(str::to_owned).collect();
    if terms.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no terms in {}",
            vocab_path.display()
        )));
    }

    let file = fs::File::open(docword_path).map_err(|e| Error::io(docword_path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut header = |name: &str| -> Result<usize> {
        match lines.next() {
            Some((i, Ok(line))) => parse_field(docword_path, i + 1, name, line.trim()),
            Some((_, Err(e))) => Err(Error::io(docword_path, e)),
            None => Err(Error::parse(
                docword_path,
                0,
                format!("missing {name} header"),
            )),
        }
    };
    let n_docs: usize = header("document count")?;
    let n_terms: usize = header("vocabulary size")?;
    let nnz: usize = header("nonzero count")?;
    if n_terms != terms.len() {
        return Err(Error::parse(
            docword_path,
            2,
            format!(
                "vocabulary size {} disagrees with {} terms in {}",
                n_terms,
                terms.len(),
                vocab_path.display()
            ),
        ));
    }

    let mut sparse: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n_docs];
    let mut rows = 0usize;
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(docword_path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let mut fields = line.split_whitespace();
        let mut next = |name: &str| -> Result<&str> {
            fields
                .next()
                .ok_or_else(|| Error::parse(docword_path, lineno, format!("missing {name}")))
        };
        let d: usize = parse_field(docword_path, lineno, "document id", next("document id")?)?;
        let t: usize = parse_field(docword_path, lineno, "term id", next("term id")?)?;
        let c: u32 = parse_field(docword_path, lineno, "count", next("count")?)?;
        if !(1..=n_docs).contains(&d) {
            return Err(Error::parse(
                docword_path,
                lineno,
                format!("document id {d} outside 1..={n_docs}"),
            ));
        }
        if !(1..=n_terms).contains(&t) {
            return Err(Error::parse(
                docword_path,
                lineno,
                format!("term id {t} outside 1..={n_terms}"),
            ));
        }
        if c == 0 {
            return Err(Error::parse(docword_path, lineno, "zero count"));
        }
        sparse[d - 1].push((t as u32 - 1, c));
        rows += 1;
    }
    if rows != nnz {
        return Err(Error::parse(
            docword_path,
            3,
            format!("header promises {nnz} triples, file has {rows}"),
        ));
    }

    let mut docs = Vec::new();
    let mut doc_ids = Vec::new();
    for (d, mut row) in sparse.into_iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        row.sort_unstable();
        let mut tokens = Vec::new();
        for (t, c) in row {
            tokens.extend(std::iter::repeat_n(t, c as usize));
        }
        docs.push(tokens);
        doc_ids.push((d + 1).to_string());
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no nonempty documents in {}",
            docword_path.display()
        )));
    }
    let vocab = tally_vocabulary(terms, &docs);
    Ok(Corpus {
        vocab,
        docs,
        doc_ids,
    })
}

/// Vocabulary filters applied by [`prune_vocabulary`]. Defaults follow
/// common practice for this model family: drop terms in fewer than 5
/// documents or in more than half of them, no stopword list.
#[derive(Debug, Clone)]
pub struct PruneConfig {
    pub min_doc_freq: u32,
    pub max_doc_frac: f64,
    pub stopwords: Vec<String>,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            min_doc_freq: 5,
            max_doc_frac: 0.5,
            stopwords: Vec::new(),
        }
    }
}

/// What pruning did, for logs and reproducibility records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    pub terms_before: usize,
    pub terms_after: usize,
    pub docs_before: usize,
    pub docs_after: usize,
    pub dropped_doc_ids: Vec<String>,
    /// Filter rounds until the fixed point (dropping documents changes
    /// `D`, which changes the `max_doc_frac` cutoff, so filters re-run
    /// until stable).
    pub rounds: usize,
}

/// Remove terms failing the document-frequency filters or appearing in
/// the stopword list, re-tokenize, and drop documents that become empty.
///
/// Runs to a fixed point so that applying the same configuration twice is
/// exactly the identity on the result.
pub fn prune_vocabulary(corpus: &Corpus, config: &PruneConfig) -> Result<(Corpus, PruneReport)> {
    if !(0.0..=1.0).contains(&config.max_doc_frac) {
        return Err(Error::invalid(format!(
            "max_doc_frac must lie in [0, 1], got {}",
            config.max_doc_frac
        )));
    }
    let stop: std::collections::HashSet<&str> =
        config.stopwords.iter().map(String::as_str).collect();

    let mut current = corpus.clone();
    let mut dropped_doc_ids = Vec::new();
    let mut rounds = 0usize;
    loop {
        rounds += 1;
        let d = current.n_docs() as f64;
        let max_df = (config.max_doc_frac * d).floor() as u32;
        let keep: Vec<bool> = (0..current.n_terms())
            .map(|t| {
                current.vocab.doc_freq[t] >= config.min_doc_freq
                    && current.vocab.doc_freq[t] <= max_df
                    && !stop.contains(current.vocab.terms[t].as_str())
            })
            .collect();
        if keep.iter().all(|&k| k) {
            break;
        }
        if keep.iter().all(|&k| !k) {
            return Err(Error::EmptyCorpus(
                "pruning removed every vocabulary term".into(),
            ));
        }

        let mut new_id = vec![u32::MAX; current.n_terms()];
        let mut terms = Vec::new();
        for (t, &k) in keep.iter().enumerate() {
            if k {
                new_id[t] = terms.len() as u32;
                terms.push(current.vocab.terms[t].clone());
            }
        }

        let mut docs = Vec::new();
        let mut doc_ids = Vec::new();
        for (doc, id) in current.docs.iter().zip(&current.doc_ids) {
            let tokens: Vec<u32> = doc
                .iter()
                .filter(|&&t| keep[t as usize])
                .map(|&t| new_id[t as usize])
                .collect();
            if tokens.is_empty() {
                dropped_doc_ids.push(id.clone());
            } else {
                docs.push(tokens);
                doc_ids.push(id.clone());
            }
        }
        if docs.is_empty() {
            return Err(Error::EmptyCorpus("pruning removed every document".into()));
        }
        current = Corpus {
            vocab: tally_vocabulary(terms, &docs),
            docs,
            doc_ids,
        };
    }

    let report = PruneReport {
        terms_before: corpus.n_terms(),
        terms_after: current.n_terms(),
        docs_before: corpus.n_docs(),
        docs_after: current.n_docs(),
        dropped_doc_ids,
        rounds,
    };
    Ok((current, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn tokenizer_lowercases_and_strips_punctuation() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "doc.txt", "the cat. The CAT sat");
        let corpus = load_plain_text(&path, TokenizerConfig::default()).unwrap();
        assert_eq!(corpus.vocab.terms, ["cat", "sat", "the"]);
        let words: Vec<&str> = corpus.docs[0]
            .iter()
            .map(|&t| corpus.vocab.term(t))
            .collect();
        assert_eq!(words, ["the", "cat", "the", "cat", "sat"]);
    }

    #[test]
    fn empty_input_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "doc.txt", " .,! \n\n");
        match load_plain_text(&path, TokenizerConfig::default()) {
            Err(Error::EmptyCorpus(msg)) => assert!(msg.contains("zero retained documents")),
            other => panic!("expected EmptyCorpus, got {other:?}"),
        }
    }

    #[test]
    fn per_line_documents_and_frequencies() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "docs.txt", "a b\nb c\n");
        let corpus = load_plain_text(
            &path,
            TokenizerConfig {
                one_doc_per_line: true,
            },
        )
        .unwrap();
        assert_eq!(corpus.n_docs(), 2);
        assert_eq!(corpus.doc_ids, ["docs.txt:1", "docs.txt:2"]);
        let b = corpus.vocab.id("b").unwrap() as usize;
        assert_eq!(corpus.vocab.doc_freq[b], 2);
        assert_eq!(corpus.vocab.corpus_freq[b], 2);
    }

    #[test]
    fn directory_loads_in_name_order() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "b.txt", "beta");
        write_file(dir.path(), "a.txt", "alpha");
        let corpus = load_plain_text(dir.path(), TokenizerConfig::default()).unwrap();
        assert_eq!(corpus.doc_ids, ["a.txt", "b.txt"]);
    }

    #[test]
    fn uci_triple_expansion() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = write_file(dir.path(), "vocab.txt", "apple\nbanana\n");
        let bow = write_file(dir.path(), "docword.txt", "1\n2\n1\n1 2 3\n");
        let corpus = load_uci_bow(&bow, &vocab).unwrap();
        assert_eq!(corpus.docs, vec![vec![1, 1, 1]]);
        assert_eq!(corpus.doc_ids, ["1"]);
    }

    #[test]
    fn uci_row_count_must_match_header() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = write_file(dir.path(), "vocab.txt", "a\nb\n");
        let bow = write_file(
            dir.path(),
            "docword.txt",
            "2\n2\n5\n1 1 1\n1 2 1\n2 1 1\n2 2 1\n",
        );
        match load_uci_bow(&bow, &vocab) {
            Err(Error::Parse { msg, .. }) => {
                assert!(msg.contains('5') && msg.contains('4'), "{msg}");
            }
            other => panic!("expected Parse error, got {other:?}"),
        }
    }

    #[test]
    fn uci_term_id_bounds_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = write_file(dir.path(), "vocab.txt", "a\nb\n");
        let bow = write_file(dir.path(), "docword.txt", "1\n2\n1\n1 3 1\n");
        match load_uci_bow(&bow, &vocab) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("term id 3"), "{msg}");
            }
            other => panic!("expected Parse error, got {other:?}"),
        }
    }

    #[test]
    fn uci_vocab_size_must_match_file() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = write_file(dir.path(), "vocab.txt", "a\nb\nc\n");
        let bow = write_file(dir.path(), "docword.txt", "1\n2\n1\n1 1 1\n");
        assert!(matches!(
            load_uci_bow(&bow, &vocab),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn uci_shared_terms_count_document_frequency() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = write_file(dir.path(), "vocab.txt", "a\nb\n");
        let bow = write_file(dir.path(), "docword.txt", "2\n2\n3\n1 1 2\n2 1 1\n2 2 1\n");
        let corpus = load_uci_bow(&bow, &vocab).unwrap();
        assert_eq!(corpus.vocab.doc_freq, vec![2, 1]);
        assert_eq!(corpus.vocab.corpus_freq, vec![3, 1]);
    }

    #[test]
    fn uci_empty_documents_are_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = write_file(dir.path(), "vocab.txt", "a\n");
        let bow = write_file(dir.path(), "docword.txt", "3\n1\n2\n1 1 1\n3 1 2\n");
        let corpus = load_uci_bow(&bow, &vocab).unwrap();
        assert_eq!(corpus.n_docs(), 2);
        assert_eq!(corpus.doc_ids, ["1", "3"]);
    }

    #[test]
    fn prune_identity_configuration_changes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "docs.txt", "a b c\nb c d\nc d e\n");
        let corpus = load_plain_text(
            &path,
            TokenizerConfig {
                one_doc_per_line: true,
            },
        )
        .unwrap();
        let config = PruneConfig {
            min_doc_freq: 1,
            max_doc_frac: 1.0,
            stopwords: Vec::new(),
        };
        let (pruned, report) = prune_vocabulary(&corpus, &config).unwrap();
        assert_eq!(pruned, corpus);
        assert_eq!(report.rounds, 1);
        assert!(report.dropped_doc_ids.is_empty());
    }

    #[test]
    fn prune_removes_ubiquitous_terms() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "docs.txt",
            "the cat fish\nthe dog bird\nthe cat dog\nthe fish bird\n",
        );
        let corpus = load_plain_text(
            &path,
            TokenizerConfig {
                one_doc_per_line: true,
            },
        )
        .unwrap();
        let config = PruneConfig {
            min_doc_freq: 1,
            max_doc_frac: 0.5,
            stopwords: Vec::new(),
        };
        // "the" appears in all four documents and exceeds the 50% cutoff;
        // every other term sits at exactly half and stays.
        let (pruned, report) = prune_vocabulary(&corpus, &config).unwrap();
        assert_eq!(pruned.vocab.terms, ["bird", "cat", "dog", "fish"]);
        assert_eq!(pruned.n_docs(), 4);
        assert_eq!(report.rounds, 2); // removal round + stable round
    }

    #[test]
    fn prune_cascade_to_empty_is_an_error() {
        // Aggressive fraction cutoffs can cascade: dropping documents
        // shrinks D, tightening the cutoff until nothing survives. That
        // must surface as the empty-corpus error, not a silent empty
        // result.
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "docs.txt",
            "the cat\nthe dog\nthe cat dog\nthe fish cat dog\n",
        );
        let corpus = load_plain_text(
            &path,
            TokenizerConfig {
                one_doc_per_line: true,
            },
        )
        .unwrap();
        let config = PruneConfig {
            min_doc_freq: 1,
            max_doc_frac: 0.5,
            stopwords: Vec::new(),
        };
        assert!(matches!(
            prune_vocabulary(&corpus, &config),
            Err(Error::EmptyCorpus(_))
        ));
    }

    #[test]
    fn prune_applies_stopwords() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "docs.txt", "keep the cat\ndrop the dog\n");
        let corpus = load_plain_text(
            &path,
            TokenizerConfig {
                one_doc_per_line: true,
            },
        )
        .unwrap();
        let config = PruneConfig {
            min_doc_freq: 1,
            max_doc_frac: 1.0,
            stopwords: vec!["the".into()],
        };
        let (pruned, _) = prune_vocabulary(&corpus, &config).unwrap();
        assert!(pruned.vocab.id("the").is_none());
        assert_eq!(pruned.total_tokens(), 4);
    }

    #[test]
    fn prune_rejects_removing_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "docs.txt", "a b\n");
        let corpus = load_plain_text(&path, TokenizerConfig::default()).unwrap();
        let config = PruneConfig {
            min_doc_freq: 10,
            max_doc_frac: 1.0,
            stopwords: Vec::new(),
        };
        assert!(matches!(
            prune_vocabulary(&corpus, &config),
            Err(Error::EmptyCorpus(_))
        ));
    }

    #[test]
    fn prune_tallies_stay_consistent() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "docs.txt",
            "a a b c\nb c d\nc d e f\nf g a\nh h h i\n",
        );
        let corpus = load_plain_text(
            &path,
            TokenizerConfig {
                one_doc_per_line: true,
            },
        )
        .unwrap();
        let config = PruneConfig {
            min_doc_freq: 2,
            max_doc_frac: 0.8,
            stopwords: Vec::new(),
        };
        let (pruned, report) = prune_vocabulary(&corpus, &config).unwrap();
        let total: u64 = pruned.vocab.corpus_freq.iter().sum();
        assert_eq!(total as usize, pruned.total_tokens());
        assert_eq!(
            report.docs_before,
            pruned.n_docs() + report.dropped_doc_ids.len()
        );
    }

    /// Strategy: a small random corpus as explicit token lists.
    fn corpus_strategy() -> impl Strategy<Value = Corpus> {
        (2u32..8, 1usize..8).prop_flat_map(|(v, d)| {
            proptest::collection::vec(proptest::collection::vec(0..v, 1..12), d..=d).prop_map(
                move |docs| {
                    let terms: Vec<String> = (0..v).map(|i| format!("t{i:02}")).collect();
                    let doc_ids = (0..docs.len()).map(|i| (i + 1).to_string()).collect();
                    Corpus {
                        vocab: tally_vocabulary(terms, &docs),
                        docs,
                        doc_ids,
                    }
                },
            )
        })
    }

    proptest! {
        /// UCI write/reload preserves every document's token multiset.
        /// (The loader emits tokens in ascending id order, so the multiset
        /// is exactly the sorted sequence.)
        #[test]
        fn uci_round_trip(corpus in corpus_strategy()) {
            let dir = tempfile::tempdir().unwrap();
            let bow = dir.path().join("docword.txt");
            let vocab = dir.path().join("vocab.txt");
            corpus.write_uci_bow(&bow).unwrap();
            corpus.vocab.write(&vocab).unwrap();
            let reloaded = load_uci_bow(&bow, &vocab).unwrap();
            prop_assert_eq!(reloaded.n_docs(), corpus.n_docs());
            for (a, b) in corpus.docs.iter().zip(&reloaded.docs) {
                let mut a = a.clone();
                a.sort_unstable();
                prop_assert_eq!(&a, b);
            }
            prop_assert_eq!(&reloaded.vocab, &corpus.vocab);
        }

        /// Pruning is idempotent: a second application of the same
        /// configuration is the identity.
        #[test]
        fn prune_is_idempotent(corpus in corpus_strategy(),
                               min_df in 1u32..4,
                               frac in 0.3f64..1.0) {
            let config = PruneConfig {
                min_doc_freq: min_df,
                max_doc_frac: frac,
                stopwords: Vec::new(),
            };
            let Ok((once, _)) = prune_vocabulary(&corpus, &config) else {
                return Ok(()); // everything pruned away: nothing to check
            };
            let (twice, report) = prune_vocabulary(&once, &config).unwrap();
            prop_assert_eq!(&twice, &once);
            prop_assert_eq!(report.rounds, 1);
        }
    }
}
