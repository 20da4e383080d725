//! Five-sentence story corpora: CSV ingestion, cleaning, splits, and the
//! body/ending segmentation the rest of the pipeline consumes.
//!
//! Input files are RFC 4180 CSV with the header
//! `storyid,storytitle,sentence1,...,sentence5`. Rows are cleaned on the way
//! in, so a loaded [`Story`] never needs cleaning again. Malformed rows are
//! rejected individually with row-indexed diagnostics; only file-level
//! problems (missing file, wrong header) abort a load.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::rng::SplitMix64;

const HEADER: [&str; 7] = [
    "storyid",
    "storytitle",
    "sentence1",
    "sentence2",
    "sentence3",
    "sentence4",
    "sentence5",
];

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error(
        "{path} looks like a two-candidate ending-selection file \
         (columns like InputSentence1/RandomFifthSentenceQuiz1); expected the \
         five-sentence story layout with header storyid,storytitle,sentence1..sentence5"
    )]
    EndingSelectionLayout { path: PathBuf },
    #[error("{path}: unrecognized header {found:?}; expected storyid,storytitle,sentence1..sentence5")]
    Header { path: PathBuf, found: Vec<String> },
    #[error("train fraction must be a finite value in [0, 1], got {0}")]
    Fraction(f64),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One story: a stable id, a title, and exactly five cleaned sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Story {
    pub id: String,
    pub title: String,
    pub sentences: [String; 5],
}

impl Story {
    /// First four sentences joined with single spaces.
    pub fn body(&self) -> String {
        self.sentences[..4].join(" ")
    }

    /// The gold fifth sentence.
    pub fn ending(&self) -> &str {
        &self.sentences[4]
    }
}

/// Body and gold ending of a story, the unit backends and metrics work on.
pub fn segment_story(story: &Story) -> (String, String) {
    (story.body(), story.sentences[4].clone())
}

/// All five sentences joined with `separator`, for language-model fitting.
pub fn training_text(story: &Story, separator: &str) -> String {
    story.sentences.join(separator)
}

/// Stories in a stable order; ids are unique within a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub stories: Vec<Story>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.stories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stories.is_empty()
    }

    /// Index from story id to position, for record resolution.
    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.stories
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect()
    }
}

/// A rejected or suspicious row; `row` is the 1-based data row number
/// (the header is row 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    pub row: usize,
    pub message: String,
}

impl fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.message)
    }
}

#[derive(Debug, Default)]
pub struct LoadOutcome {
    pub corpus: Corpus,
    pub diagnostics: Vec<RowDiagnostic>,
}

/// Normalizes raw text: curly quotes become straight quotes, control
/// characters are dropped, whitespace runs collapse to single spaces, and
/// the result is trimmed. Applying it twice changes nothing.
pub fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        let c = match c {
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' => '\'',
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' => '"',
            other => other,
        };
        if c.is_whitespace() {
            pending_space = true;
        } else if c.is_control() {
            // dropped entirely; controls never count as word separators
        } else {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

/// Loads one story CSV. Row-level problems reject the row and continue;
/// the error cases are file-level only.
pub fn load_csv(path: impl AsRef<Path>) -> Result<LoadOutcome, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(file);

    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_lowercase())
        .collect();
    if headers
        .iter()
        .any(|h| h.contains("inputsentence") || h.contains("randomfifthsentencequiz"))
    {
        return Err(CorpusError::EndingSelectionLayout {
            path: path.to_path_buf(),
        });
    }
    if headers != HEADER {
        return Err(CorpusError::Header {
            path: path.to_path_buf(),
            found: headers,
        });
    }

    let mut outcome = LoadOutcome::default();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                outcome.diagnostics.push(RowDiagnostic {
                    row,
                    message: format!("unparseable row: {e}"),
                });
                continue;
            }
        };
        match parse_row(&record, row, &mut seen) {
            Ok(story) => outcome.corpus.stories.push(story),
            Err(diag) => outcome.diagnostics.push(diag),
        }
    }
    if outcome.corpus.is_empty() {
        outcome.diagnostics.push(RowDiagnostic {
            row: 0,
            message: "file contains a header but no usable story rows".into(),
        });
    }
    Ok(outcome)
}

fn parse_row(
    record: &csv::StringRecord,
    row: usize,
    seen: &mut HashSet<String>,
) -> Result<Story, RowDiagnostic> {
    if record.len() != HEADER.len() {
        return Err(RowDiagnostic {
            row,
            message: format!("expected {} columns, found {}", HEADER.len(), record.len()),
        });
    }
    let id = clean_text(&record[0]);
    if id.is_empty() {
        return Err(RowDiagnostic {
            row,
            message: "storyid is empty".into(),
        });
    }
    let title = clean_text(&record[1]);
    let mut sentences: [String; 5] = Default::default();
    for (k, slot) in sentences.iter_mut().enumerate() {
        let cleaned = clean_text(&record[k + 2]);
        if cleaned.is_empty() {
            return Err(RowDiagnostic {
                row,
                message: format!("sentence{} is empty", k + 1),
            });
        }
        *slot = cleaned;
    }
    if !seen.insert(id.clone()) {
        return Err(RowDiagnostic {
            row,
            message: format!("duplicate storyid {id:?}"),
        });
    }
    Ok(Story {
        id,
        title,
        sentences,
    })
}

/// Loads and merges several story CSVs in order. Ids must stay unique
/// across files; a repeat is rejected with a diagnostic naming its file.
pub fn load_many(paths: &[PathBuf]) -> Result<(Corpus, Vec<String>), CorpusError> {
    let mut merged = Corpus::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut diagnostics = Vec::new();
    for path in paths {
        let outcome = load_csv(path)?;
        for d in outcome.diagnostics {
            diagnostics.push(format!("{}: {}", path.display(), d));
        }
        for story in outcome.corpus.stories {
            if seen.insert(story.id.clone()) {
                merged.stories.push(story);
            } else {
                diagnostics.push(format!(
                    "{}: duplicate storyid {:?} already loaded from an earlier file",
                    path.display(),
                    story.id
                ));
            }
        }
    }
    Ok((merged, diagnostics))
}

/// Serializes a corpus back to the same CSV layout it was loaded from.
/// Reloading the output yields field-identical stories.
pub fn dump_csv(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let bytes = to_csv_bytes(corpus);
    std::fs::write(path, bytes).map_err(|source| CorpusError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn to_csv_bytes(corpus: &Corpus) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(HEADER).expect("write to Vec");
    for s in &corpus.stories {
        let mut record = vec![s.id.as_str(), s.title.as_str()];
        record.extend(s.sentences.iter().map(|x| x.as_str()));
        writer.write_record(&record).expect("write to Vec");
    }
    writer.into_inner().expect("flush to Vec")
}

/// SHA-256 over the canonical CSV serialization, as lowercase hex. Any
/// change to any field, or to story order, changes the digest.
pub fn fingerprint(corpus: &Corpus) -> String {
    let digest = Sha256::digest(to_csv_bytes(corpus));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// How to divide a corpus: shuffle with `seed`, then take the first
/// `floor(train_fraction * len)` stories as the train split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Splits a corpus into disjoint train and test parts. Every story lands in
/// exactly one part; both keep the shuffled order.
pub fn split_corpus(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus), CorpusError> {
    if !spec.train_fraction.is_finite() || !(0.0..=1.0).contains(&spec.train_fraction) {
        return Err(CorpusError::Fraction(spec.train_fraction));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    SplitMix64::new(spec.seed).shuffle(&mut order);
    let n_train = (spec.train_fraction * corpus.len() as f64).floor() as usize;
    let n_train = n_train.min(corpus.len());
    let take = |ix: &[usize]| Corpus {
        stories: ix.iter().map(|&i| corpus.stories[i].clone()).collect(),
    };
    Ok((take(&order[..n_train]), take(&order[n_train..])))
}

/// Cleaned fifth sentences in corpus order, duplicates preserved.
pub fn fifth_sentence_pool(corpus: &Corpus) -> Vec<String> {
    corpus
        .stories
        .iter()
        .map(|s| s.sentences[4].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn story(id: &str) -> Story {
        Story {
            id: id.into(),
            title: format!("title {id}"),
            sentences: [
                "One.".into(),
                "Two.".into(),
                "Three.".into(),
                "Four.".into(),
                format!("Five {id}."),
            ],
        }
    }

    fn corpus_of(n: usize) -> Corpus {
        Corpus {
            stories: (0..n).map(|i| story(&format!("s{i}"))).collect(),
        }
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn clean_text_normalizes_quotes_whitespace_and_controls() {
        assert_eq!(clean_text("\u{201C}Hi!\u{201D}"), "\"Hi!\"");
        assert_eq!(clean_text("It\u{2019}s fine"), "It's fine");
        assert_eq!(clean_text("a\tb\nc"), "a b c");
        assert_eq!(clean_text("  padded   out  "), "padded out");
        assert_eq!(clean_text("null\u{0}byte"), "nullbyte");
        assert_eq!(clean_text(""), "");
    }

    #[test]
    fn clean_text_is_idempotent() {
        for raw in [
            "  \u{201C}Dan\u{2019}s\u{201D}\t dog ",
            "already clean",
            "a\u{0007}b  c",
        ] {
            let once = clean_text(raw);
            assert_eq!(clean_text(&once), once);
        }
    }

    #[test]
    fn loads_a_well_formed_file() {
        let f = write_temp(
            "storyid,storytitle,sentence1,sentence2,sentence3,sentence4,sentence5\n\
             s1,A Day,First.,Second.,Third.,Fourth.,Fifth.\n\
             s2,\"Comma, Title\",\u{201C}Hi.\u{201D},B.,C.,D.,E.\n",
        );
        let out = load_csv(f.path()).unwrap();
        assert!(out.diagnostics.is_empty());
        assert_eq!(out.corpus.len(), 2);
        assert_eq!(out.corpus.stories[0].id, "s1");
        assert_eq!(out.corpus.stories[1].title, "Comma, Title");
        // cleaned at ingestion
        assert_eq!(out.corpus.stories[1].sentences[0], "\"Hi.\"");
    }

    #[test]
    fn rejects_rows_with_problems_and_keeps_the_rest() {
        let f = write_temp(
            "storyid,storytitle,sentence1,sentence2,sentence3,sentence4,sentence5\n\
             s1,T,A.,B.,C.,D.,\n\
             s2,T,A.,B.,C.,D.,E.\n\
             s2,T,A.,B.,C.,D.,E.\n\
             s3,T,A.,B.,C.\n",
        );
        let out = load_csv(f.path()).unwrap();
        assert_eq!(out.corpus.len(), 1);
        assert_eq!(out.corpus.stories[0].id, "s2");
        assert_eq!(out.diagnostics.len(), 3);
        assert!(out.diagnostics[0].to_string().contains("row 1"));
        assert!(out.diagnostics[0].to_string().contains("sentence5"));
        assert!(out.diagnostics[1].to_string().contains("duplicate"));
        assert!(out.diagnostics[2].to_string().contains("columns"));
    }

    #[test]
    fn empty_file_yields_empty_corpus_with_warning() {
        let f = write_temp("storyid,storytitle,sentence1,sentence2,sentence3,sentence4,sentence5\n");
        let out = load_csv(f.path()).unwrap();
        assert!(out.corpus.is_empty());
        assert_eq!(out.diagnostics.len(), 1);
        assert!(out.diagnostics[0].message.contains("no usable story rows"));
    }

    #[test]
    fn rejects_ending_selection_layout_with_clear_message() {
        let f = write_temp(
            "InputStoryid,InputSentence1,InputSentence2,InputSentence3,InputSentence4,\
             RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2,AnswerRightEnding\n",
        );
        let err = load_csv(f.path()).unwrap_err();
        assert!(matches!(err, CorpusError::EndingSelectionLayout { .. }));
        assert!(err.to_string().contains("five-sentence story layout"));
    }

    #[test]
    fn rejects_unknown_header() {
        let f = write_temp("id,title,s1,s2,s3,s4,s5\nx,t,a,b,c,d,e\n");
        let err = load_csv(f.path()).unwrap_err();
        assert!(matches!(err, CorpusError::Header { .. }));
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(
            load_csv("/nonexistent/stories.csv"),
            Err(CorpusError::Io { .. })
        ));
    }

    #[test]
    fn dump_then_load_round_trips_fields() {
        let corpus = Corpus {
            stories: vec![
                Story {
                    id: "a1".into(),
                    title: "With, comma".into(),
                    sentences: [
                        "He said \"go\".".into(),
                        "Two.".into(),
                        "Three.".into(),
                        "Four.".into(),
                        "Dan's plan worked.".into(),
                    ],
                },
                story("b2"),
            ],
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        dump_csv(&corpus, f.path()).unwrap();
        let reloaded = load_csv(f.path()).unwrap();
        assert!(reloaded.diagnostics.is_empty());
        assert_eq!(reloaded.corpus, corpus);
    }

    #[test]
    fn fingerprint_tracks_content_and_order() {
        let a = corpus_of(3);
        let mut b = corpus_of(3);
        assert_eq!(fingerprint(&a), fingerprint(&b));
        b.stories[1].sentences[4] = "Changed.".into();
        assert_ne!(fingerprint(&a), fingerprint(&b));
        let mut c = corpus_of(3);
        c.stories.swap(0, 1);
        assert_ne!(fingerprint(&a), fingerprint(&c));
    }

    #[test]
    fn split_sizes_follow_the_floor_rule() {
        let corpus = corpus_of(10);
        let spec = SplitSpec {
            train_fraction: 0.8,
            seed: 11,
        };
        let (train, test) = split_corpus(&corpus, &spec).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);

        let all = SplitSpec {
            train_fraction: 1.0,
            seed: 11,
        };
        let (train, test) = split_corpus(&corpus, &all).unwrap();
        assert_eq!(train.len(), 10);
        assert!(test.is_empty());
    }

    #[test]
    fn split_is_deterministic_per_seed_and_partitions_the_corpus() {
        let corpus = corpus_of(50);
        let spec = SplitSpec {
            train_fraction: 0.8,
            seed: 4,
        };
        let (t1, e1) = split_corpus(&corpus, &spec).unwrap();
        let (t2, e2) = split_corpus(&corpus, &spec).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(e1, e2);

        let other = split_corpus(
            &corpus,
            &SplitSpec {
                train_fraction: 0.8,
                seed: 5,
            },
        )
        .unwrap();
        assert_ne!(t1, other.0);

        let mut ids: Vec<&str> = t1
            .stories
            .iter()
            .chain(e1.stories.iter())
            .map(|s| s.id.as_str())
            .collect();
        ids.sort_unstable();
        let mut expected: Vec<String> = corpus.stories.iter().map(|s| s.id.clone()).collect();
        expected.sort_unstable();
        assert_eq!(ids, expected.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    }

    #[test]
    fn out_of_range_fraction_is_rejected() {
        let corpus = corpus_of(3);
        for bad in [-0.1, 1.5, f64::NAN] {
            let err = split_corpus(
                &corpus,
                &SplitSpec {
                    train_fraction: bad,
                    seed: 0,
                },
            );
            assert!(matches!(err, Err(CorpusError::Fraction(_))));
        }
    }

    #[test]
    fn segmentation_joins_body_and_exposes_ending() {
        let s = Story {
            id: "x".into(),
            title: "t".into(),
            sentences: [
                "A one.".into(),
                "B two.".into(),
                "C three.".into(),
                "D four.".into(),
                "E five.".into(),
            ],
        };
        let (body, ending) = segment_story(&s);
        assert_eq!(body, "A one. B two. C three. D four.");
        assert_eq!(ending, "E five.");
        assert_eq!(
            training_text(&s, " "),
            "A one. B two. C three. D four. E five."
        );
    }

    #[test]
    fn pool_preserves_order_and_duplicates() {
        let mut corpus = corpus_of(3);
        corpus.stories[2].sentences[4] = corpus.stories[0].sentences[4].clone();
        let pool = fifth_sentence_pool(&corpus);
        assert_eq!(pool.len(), 3);
        assert_eq!(pool[0], pool[2]);
    }
}
