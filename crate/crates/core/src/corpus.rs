//! Interaction records and their line-delimited JSON storage.
//!
//! One record per line, with the fixed field names `tweet_id`, `user_id`,
//! `timestamp`, `kind`, `source_user_id`, `urls`, `client`, `verified` and
//! `text`. Malformed lines never abort a parse; they are returned as
//! [`Diagnostic`]s carrying the 1-based line number.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("inverted time window: start {start} > end {end}")]
    InvertedWindow { start: f64, end: f64 },
    #[error("record {tweet_id}: {reason}")]
    InvalidRecord { tweet_id: String, reason: String },
}

/// How a record relates to an earlier tweet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Original,
    Retweet,
    Quote,
    Reply,
}

impl InteractionKind {
    pub const ALL: [InteractionKind; 4] = [
        InteractionKind::Original,
        InteractionKind::Retweet,
        InteractionKind::Quote,
        InteractionKind::Reply,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Original => "original",
            InteractionKind::Retweet => "retweet",
            InteractionKind::Quote => "quote",
            InteractionKind::Reply => "reply",
        }
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InteractionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" => Ok(InteractionKind::Original),
            "retweet" => Ok(InteractionKind::Retweet),
            "quote" => Ok(InteractionKind::Quote),
            "reply" => Ok(InteractionKind::Reply),
            other => Err(format!("unknown interaction kind `{other}`")),
        }
    }
}

/// One interaction event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub user_id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: f64,
    pub kind: InteractionKind,
    /// Retweeted, quoted or replied-to user. Absent for originals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_user_id: Option<String>,
    #[serde(default)]
    pub urls: Vec<String>,
    #[serde(default)]
    pub client: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl TweetRecord {
    /// Check the record-level invariants.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |reason: &str| {
            Err(CorpusError::InvalidRecord {
                tweet_id: self.tweet_id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.tweet_id.is_empty() {
            return fail("empty tweet_id");
        }
        if self.user_id.is_empty() {
            return fail("empty user_id");
        }
        if !self.timestamp.is_finite() || self.timestamp < 0.0 {
            return fail("timestamp must be finite and non-negative");
        }
        match (self.kind, self.source_user_id.as_deref()) {
            (InteractionKind::Original, Some(_)) => fail("original tweet with a source_user_id"),
            (InteractionKind::Original, None) => Ok(()),
            (_, None) | (_, Some("")) => fail("retweet, quote or reply without source_user_id"),
            _ => Ok(()),
        }
    }
}

/// A malformed input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub file: Option<PathBuf>,
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(p) => write!(f, "{}:{}: {}", p.display(), self.line, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

/// Inclusive timestamp window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn new(start: f64, end: f64) -> Result<Self, CorpusError> {
        if start > end {
            return Err(CorpusError::InvertedWindow { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn unbounded() -> Self {
        Self {
            start: f64::NEG_INFINITY,
            end: f64::INFINITY,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

/// The canonical in-memory corpus. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub records: Vec<TweetRecord>,
}

impl Corpus {
    pub fn new(records: Vec<TweetRecord>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TweetRecord> {
        self.records.iter()
    }

    /// Records whose kind is in `kinds`.
    pub fn of_kinds<'a>(
        &'a self,
        kinds: &'a KindSet,
    ) -> impl Iterator<Item = &'a TweetRecord> + 'a {
        self.records.iter().filter(move |r| kinds.contains(r.kind))
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let io_err = |source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut w = io::BufWriter::new(file);
        self.write_jsonl(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)
    }
}

/// Set of interaction kinds, used to select which records feed an analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KindSet(u8);

impl KindSet {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn only(kind: InteractionKind) -> Self {
        Self::empty().with(kind)
    }

    pub fn retweets() -> Self {
        Self::only(InteractionKind::Retweet)
    }

    /// Retweets and quotes treated as one interaction type.
    pub fn retweets_and_quotes() -> Self {
        Self::retweets().with(InteractionKind::Quote)
    }

    pub fn with(self, kind: InteractionKind) -> Self {
        Self(self.0 | (1 << kind as u8))
    }

    pub fn contains(&self, kind: InteractionKind) -> bool {
        self.0 & (1 << kind as u8) != 0
    }

    pub fn kinds(&self) -> impl Iterator<Item = InteractionKind> + '_ {
        InteractionKind::ALL.into_iter().filter(|k| self.contains(*k))
    }
}

impl std::str::FromStr for KindSet {
    type Err = String;

    /// Comma-separated kind names, e.g. `retweet,quote`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = KindSet::empty();
        for tok in s.split(',').filter(|t| !t.trim().is_empty()) {
            set = set.with(tok.parse()?);
        }
        if set == KindSet::empty() {
            return Err("empty kind set".into());
        }
        Ok(set)
    }
}

impl fmt::Display for KindSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.kinds().map(InteractionKind::as_str).collect();
        f.write_str(&names.join(","))
    }
}

/// Result of parsing one or more record files.
#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub corpus: Corpus,
    pub diagnostics: Vec<Diagnostic>,
    /// Well-formed records outside the window.
    pub out_of_window: usize,
}

/// Parse line-delimited records from a reader, keeping those inside `window`.
pub fn parse_reader<R: BufRead>(reader: R, window: TimeWindow) -> io::Result<ParseOutcome> {
    let mut outcome = ParseOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        match parse_line(&line) {
            Ok(rec) if window.contains(rec.timestamp) => outcome.corpus.records.push(rec),
            Ok(_) => outcome.out_of_window += 1,
            Err(message) => outcome.diagnostics.push(Diagnostic {
                file: None,
                line: lineno,
                message,
            }),
        }
    }
    Ok(outcome)
}

fn parse_line(line: &str) -> Result<TweetRecord, String> {
    if line.trim().is_empty() {
        return Err("empty line".to_string());
    }
    let rec: TweetRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    rec.validate().map_err(|e| e.to_string())?;
    Ok(rec)
}

/// Parse a single record file.
pub fn parse_corpus(path: &Path, window: TimeWindow) -> Result<ParseOutcome, CorpusError> {
    parse_corpus_files(&[path.to_path_buf()], window)
}

/// Parse several files concurrently; the merged corpus keeps file order, then line order.
pub fn parse_corpus_files(paths: &[PathBuf], window: TimeWindow) -> Result<ParseOutcome, CorpusError> {
    if window.start > window.end {
        return Err(CorpusError::InvertedWindow {
            start: window.start,
            end: window.end,
        });
    }
    let parts: Vec<ParseOutcome> = paths
        .par_iter()
        .map(|path| {
            let io_err = |source| CorpusError::Io {
                path: path.clone(),
                source,
            };
            let file = File::open(path).map_err(io_err)?;
            let mut part = parse_reader(BufReader::with_capacity(1 << 20, file), window).map_err(io_err)?;
            for d in &mut part.diagnostics {
                d.file = Some(path.clone());
            }
            Ok(part)
        })
        .collect::<Result<_, CorpusError>>()?;

    let mut merged = ParseOutcome::default();
    for part in parts {
        merged.corpus.records.extend(part.corpus.records);
        merged.diagnostics.extend(part.diagnostics);
        merged.out_of_window += part.out_of_window;
    }
    Ok(merged)
}

/// Whether a tweet came from an official platform client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientClass {
    Official,
    Unofficial,
}

pub const DEFAULT_OFFICIAL_CLIENTS: [&str; 6] = [
    "Twitter Web Client",
    "Twitter Web App",
    "Twitter for iPhone",
    "Twitter for Android",
    "Twitter for iPad",
    "TweetDeck",
];

/// Case-insensitive set of official client names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OfficialClients(HashSet<String>);

impl OfficialClients {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(names.into_iter().map(|s| s.as_ref().to_lowercase()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn classify(&self, client: &str) -> ClientClass {
        classify_client(client, self)
    }
}

impl Default for OfficialClients {
    fn default() -> Self {
        Self::new(DEFAULT_OFFICIAL_CLIENTS)
    }
}

pub fn classify_client(client: &str, official: &OfficialClients) -> ClientClass {
    if !client.is_empty() && official.0.contains(&client.to_lowercase()) {
        ClientClass::Official
    } else {
        ClientClass::Unofficial
    }
}

/// Per-kind and per-client-class record counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub records: usize,
    pub users: usize,
    pub originals: usize,
    pub retweets: usize,
    pub quotes: usize,
    pub replies: usize,
    pub official: usize,
    pub unofficial: usize,
}

pub fn summarize(corpus: &Corpus, official: &OfficialClients) -> CorpusSummary {
    let mut s = CorpusSummary {
        records: corpus.len(),
        ..Default::default()
    };
    let mut users = HashSet::new();
    for r in corpus.iter() {
        users.insert(r.user_id.as_str());
        match r.kind {
            InteractionKind::Original => s.originals += 1,
            InteractionKind::Retweet => s.retweets += 1,
            InteractionKind::Quote => s.quotes += 1,
            InteractionKind::Reply => s.replies += 1,
        }
        match official.classify(&r.client) {
            ClientClass::Official => s.official += 1,
            ClientClass::Unofficial => s.unofficial += 1,
        }
    }
    s.users = users.len();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(id: &str, ts: f64) -> String {
        format!(
            r#"{{"tweet_id":"{id}","user_id":"u{id}","timestamp":{ts},"kind":"retweet","source_user_id":"v","urls":["https://cnn.com/a"],"client":"Twitter Web App"}}"#
        )
    }

    #[test]
    fn window_filter() {
        let text = [line("1", 10.0), line("2", 20.0), line("3", 30.0), line("4", 99.0)].join("\n");
        let out = parse_reader(text.as_bytes(), TimeWindow::new(0.0, 30.0).unwrap()).unwrap();
        assert_eq!(out.corpus.len(), 3);
        assert!(out.diagnostics.is_empty());
        assert_eq!(out.out_of_window, 1);
        let ids: Vec<_> = out.corpus.iter().map(|r| r.tweet_id.as_str()).collect();
        assert_eq!(ids, ["1", "2", "3"]);
    }

    #[test]
    fn empty_input() {
        let out = parse_reader("".as_bytes(), TimeWindow::unbounded()).unwrap();
        assert!(out.corpus.is_empty());
        assert!(out.diagnostics.is_empty());
    }

    #[test]
    fn missing_user_id_is_diagnosed() {
        let text = r#"{"tweet_id":"1","timestamp":5,"kind":"original"}"#;
        let out = parse_reader(text.as_bytes(), TimeWindow::unbounded()).unwrap();
        assert!(out.corpus.is_empty());
        assert_eq!(out.diagnostics.len(), 1);
        assert_eq!(out.diagnostics[0].line, 1);
        assert!(out.diagnostics[0].message.contains("user_id"));
    }

    #[test]
    fn kind_source_consistency() {
        let bad = [
            r#"{"tweet_id":"1","user_id":"a","timestamp":1,"kind":"retweet"}"#,
            r#"{"tweet_id":"2","user_id":"a","timestamp":1,"kind":"original","source_user_id":"b"}"#,
            r#"{"tweet_id":"3","user_id":"a","timestamp":-1,"kind":"original"}"#,
        ]
        .join("\n");
        let out = parse_reader(bad.as_bytes(), TimeWindow::unbounded()).unwrap();
        assert!(out.corpus.is_empty());
        let lines: Vec<_> = out.diagnostics.iter().map(|d| d.line).collect();
        assert_eq!(lines, [1, 2, 3]);
    }

    #[test]
    fn inverted_window_is_fatal() {
        assert!(matches!(
            TimeWindow::new(5.0, 1.0),
            Err(CorpusError::InvertedWindow { .. })
        ));
        let w = TimeWindow { start: 5.0, end: 1.0 };
        assert!(parse_corpus_files(&[], w).is_err());
    }

    #[test]
    fn missing_file_is_fatal() {
        let err = parse_corpus(Path::new("/nonexistent/records.jsonl"), TimeWindow::unbounded());
        assert!(matches!(err, Err(CorpusError::Io { .. })));
    }

    #[test]
    fn client_classes() {
        let official = OfficialClients::default();
        assert_eq!(classify_client("Twitter Web Client", &official), ClientClass::Official);
        assert_eq!(classify_client("twitter web client", &official), ClientClass::Official);
        assert_eq!(classify_client("SocialFlow", &official), ClientClass::Unofficial);
        assert_eq!(classify_client("Hootsuite", &official), ClientClass::Unofficial);
        assert_eq!(classify_client("", &official), ClientClass::Unofficial);
    }

    #[test]
    fn kind_set_parsing() {
        let s: KindSet = "retweet,quote".parse().unwrap();
        assert!(s.contains(InteractionKind::Retweet));
        assert!(s.contains(InteractionKind::Quote));
        assert!(!s.contains(InteractionKind::Reply));
        assert_eq!(s.to_string(), "retweet,quote");
        assert!("".parse::<KindSet>().is_err());
        assert!("like".parse::<KindSet>().is_err());
    }

    fn arb_record() -> impl Strategy<Value = TweetRecord> {
        (
            "[a-z0-9]{1,8}",
            "[a-z0-9]{1,8}",
            0.0f64..2e9,
            prop::sample::select(InteractionKind::ALL.to_vec()),
            "[a-z0-9]{1,8}",
            prop::collection::vec("https?://[a-z]{1,8}\\.(com|org)/[a-z0-9]{0,6}", 0..3),
            prop::sample::select(vec!["", "TweetDeck", "SocialFlow"]),
            prop::option::of(any::<bool>()),
            prop::option::of("[ -~]{0,20}"),
        )
            .prop_map(|(tid, uid, ts, kind, src, urls, client, verified, text)| TweetRecord {
                tweet_id: tid,
                user_id: uid,
                timestamp: ts,
                kind,
                source_user_id: (kind != InteractionKind::Original).then_some(src),
                urls,
                client: client.to_string(),
                verified,
                text,
            })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip(records in prop::collection::vec(arb_record(), 0..20)) {
            let corpus = Corpus::new(records);
            let mut buf = Vec::new();
            corpus.write_jsonl(&mut buf).unwrap();
            let back = parse_reader(buf.as_slice(), TimeWindow::unbounded()).unwrap();
            prop_assert!(back.diagnostics.is_empty());
            prop_assert_eq!(&back.corpus, &corpus);
            let mut buf2 = Vec::new();
            back.corpus.write_jsonl(&mut buf2).unwrap();
            prop_assert_eq!(buf, buf2);
        }

        #[test]
        fn client_classes_partition(records in prop::collection::vec(arb_record(), 0..30)) {
            let corpus = Corpus::new(records);
            let s = summarize(&corpus, &OfficialClients::default());
            prop_assert_eq!(s.official + s.unofficial, corpus.len());
        }
    }
}
