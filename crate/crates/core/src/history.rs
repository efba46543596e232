//! Commit history ingestion: the JSON-lines bundle format, the raw `git log`
//! adapter, and commit-to-ticket linking.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::BufRead;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("line {line}: malformed bundle record: {reason}")]
    MalformedBundle { line: usize, reason: String },
    #[error("line {line}: duplicate commit id `{id}`")]
    DuplicateCommitId { line: usize, id: String },
    #[error("line {position}: malformed git log: {reason}")]
    MalformedGitLog { position: usize, reason: String },
    #[error("invalid ticket pattern: {0}")]
    InvalidPattern(String),
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
}

/// Tag of one line inside a hunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineTag {
    Context,
    Added,
    Removed,
}

impl LineTag {
    pub fn marker(self) -> &'static str {
        match self {
            LineTag::Context => " ",
            LineTag::Added => "+",
            LineTag::Removed => "-",
        }
    }

    fn from_marker(s: &str) -> Option<Self> {
        match s {
            " " => Some(LineTag::Context),
            "+" => Some(LineTag::Added),
            "-" => Some(LineTag::Removed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: u32,
    pub old_count: u32,
    pub new_start: u32,
    pub new_count: u32,
    pub lines: Vec<(LineTag, String)>,
}

impl Hunk {
    fn counted(&self) -> (u32, u32) {
        let mut old = 0;
        let mut new = 0;
        for (tag, _) in &self.lines {
            match tag {
                LineTag::Context => {
                    old += 1;
                    new += 1;
                }
                LineTag::Added => new += 1,
                LineTag::Removed => old += 1,
            }
        }
        (old, new)
    }

    /// Checks that the header counts agree with the body.
    pub fn is_consistent(&self) -> bool {
        self.counted() == (self.old_count, self.new_count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileDiff {
    /// `None` when the file was added.
    pub old_path: Option<String>,
    /// `None` when the file was deleted.
    pub new_path: Option<String>,
    pub hunks: Vec<Hunk>,
    /// Set for binary patches, whose content cannot be parsed.
    pub binary: bool,
}

impl FileDiff {
    /// The path the file is known under after the commit, falling back to the
    /// old path for deletions.
    pub fn path(&self) -> &str {
        self.new_path
            .as_deref()
            .or(self.old_path.as_deref())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commit {
    pub id: String,
    pub timestamp: i64,
    pub message: String,
    pub diffs: Vec<FileDiff>,
}

/// Normalized ticket number: ASCII digits without leading zeros.
///
/// Ordering is numeric, so `9` sorts before `10`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TicketId(String);

impl TicketId {
    /// Accepts `4711`, `#4711` or `0042`; anything that is not digits after
    /// stripping a leading `#` is rejected.
    pub fn parse(raw: &str) -> Option<Self> {
        let digits = raw.trim().trim_start_matches('#');
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let trimmed = digits.trim_start_matches('0');
        Some(TicketId(
            if trimmed.is_empty() { "0" } else { trimmed }.to_string(),
        ))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Ord for TicketId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for TicketId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TicketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum TicketType {
    Feature,
    Bug,
    Maintenance,
    #[default]
    Unknown,
}

impl TicketType {
    pub fn as_str(self) -> &'static str {
        match self {
            TicketType::Feature => "feature",
            TicketType::Bug => "bug",
            TicketType::Maintenance => "maintenance",
            TicketType::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TicketRef {
    pub ticket_id: TicketId,
    pub ticket_type: TicketType,
}

/// Ticket types supplied by a sidecar file: a JSON object mapping ticket
/// numbers to `feature`, `bug`, `maintenance` or `unknown`.
#[derive(Debug, Clone, Default)]
pub struct TicketTypes(BTreeMap<TicketId, TicketType>);

impl TicketTypes {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: BTreeMap<String, TicketType> =
            serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut map = BTreeMap::new();
        for (k, v) in raw {
            let id = TicketId::parse(&k).ok_or_else(|| format!("`{k}` is not a ticket number"))?;
            map.insert(id, v);
        }
        Ok(TicketTypes(map))
    }

    pub fn resolve(&self, id: &TicketId) -> TicketRef {
        TicketRef {
            ticket_id: id.clone(),
            ticket_type: self.0.get(id).copied().unwrap_or_default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Bundle format

#[derive(Serialize, Deserialize)]
pub(crate) struct BundleCommit {
    pub id: String,
    pub timestamp: i64,
    pub message: String,
    pub diffs: Vec<BundleDiff>,
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct BundleDiff {
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub hunks: Vec<BundleHunk>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub binary: bool,
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct BundleHunk {
    pub old_start: u32,
    pub old_count: u32,
    pub new_start: u32,
    pub new_count: u32,
    pub lines: Vec<(String, String)>,
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl From<&Commit> for BundleCommit {
    fn from(c: &Commit) -> Self {
        BundleCommit {
            id: c.id.clone(),
            timestamp: c.timestamp,
            message: c.message.clone(),
            diffs: c
                .diffs
                .iter()
                .map(|d| BundleDiff {
                    old_path: d.old_path.clone(),
                    new_path: d.new_path.clone(),
                    binary: d.binary,
                    hunks: d
                        .hunks
                        .iter()
                        .map(|h| BundleHunk {
                            old_start: h.old_start,
                            old_count: h.old_count,
                            new_start: h.new_start,
                            new_count: h.new_count,
                            lines: h
                                .lines
                                .iter()
                                .map(|(t, s)| (t.marker().to_string(), s.clone()))
                                .collect(),
                            extra: BTreeMap::new(),
                        })
                        .collect(),
                    extra: BTreeMap::new(),
                })
                .collect(),
            extra: BTreeMap::new(),
        }
    }
}

fn reject_unknown(
    strict: bool,
    extra: &BTreeMap<String, serde_json::Value>,
    what: &str,
) -> Result<(), String> {
    match extra.keys().next() {
        Some(k) if strict => Err(format!("unknown field `{k}` in {what}")),
        _ => Ok(()),
    }
}

fn convert_record(raw: BundleCommit, strict: bool) -> Result<Commit, String> {
    reject_unknown(strict, &raw.extra, "commit")?;
    if raw.id.is_empty() {
        return Err("empty commit id".into());
    }
    let mut seen_paths = HashSet::new();
    let mut diffs = Vec::with_capacity(raw.diffs.len());
    for (di, d) in raw.diffs.into_iter().enumerate() {
        reject_unknown(strict, &d.extra, "diff")?;
        if d.old_path.is_none() && d.new_path.is_none() {
            return Err(format!("diff {di} has neither old_path nor new_path"));
        }
        for p in [&d.old_path, &d.new_path].into_iter().flatten() {
            if p.is_empty() {
                return Err(format!("diff {di} has an empty path"));
            }
        }
        let key = (d.old_path.clone(), d.new_path.clone());
        if !seen_paths.insert(key) {
            return Err(format!("diff {di} repeats a file path"));
        }
        let mut hunks = Vec::with_capacity(d.hunks.len());
        for (hi, h) in d.hunks.into_iter().enumerate() {
            reject_unknown(strict, &h.extra, "hunk")?;
            let mut lines = Vec::with_capacity(h.lines.len());
            for (tag, text) in h.lines {
                let tag = LineTag::from_marker(&tag)
                    .ok_or_else(|| format!("diff {di} hunk {hi}: bad line tag `{tag}`"))?;
                lines.push((tag, text));
            }
            let hunk = Hunk {
                old_start: h.old_start,
                old_count: h.old_count,
                new_start: h.new_start,
                new_count: h.new_count,
                lines,
            };
            if !hunk.is_consistent() {
                return Err(format!(
                    "diff {di} hunk {hi}: line counts disagree with header"
                ));
            }
            hunks.push(hunk);
        }
        for (hi, pair) in hunks.windows(2).enumerate() {
            let prev_end = pair[0].new_start + pair[0].new_count;
            if pair[1].new_start < prev_end
                || pair[1].old_start < pair[0].old_start + pair[0].old_count
            {
                return Err(format!(
                    "diff {di} hunk {}: hunks overlap or are unordered",
                    hi + 1
                ));
            }
        }
        diffs.push(FileDiff {
            old_path: d.old_path,
            new_path: d.new_path,
            hunks,
            binary: d.binary,
        });
    }
    Ok(Commit {
        id: raw.id,
        timestamp: raw.timestamp,
        message: raw.message,
        diffs,
    })
}

/// Reads a history bundle. Commits come back sorted by timestamp; ties keep
/// input order.
pub fn load_bundle<R: BufRead>(reader: R, strict: bool) -> Result<Vec<Commit>, HistoryError> {
    let mut commits = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: BundleCommit =
            serde_json::from_str(&line).map_err(|e| HistoryError::MalformedBundle {
                line: line_no,
                reason: e.to_string(),
            })?;
        let commit =
            convert_record(raw, strict).map_err(|reason| HistoryError::MalformedBundle {
                line: line_no,
                reason,
            })?;
        if !ids.insert(commit.id.clone()) {
            return Err(HistoryError::DuplicateCommitId {
                line: line_no,
                id: commit.id,
            });
        }
        commits.push(commit);
    }
    commits.sort_by_key(|c| c.timestamp);
    Ok(commits)
}

// ---------------------------------------------------------------------------
// git log adapter

fn strip_side_prefix(path: &str) -> String {
    let path = path.split('\t').next().unwrap_or(path);
    path.strip_prefix("a/")
        .or_else(|| path.strip_prefix("b/"))
        .unwrap_or(path)
        .to_string()
}

fn diff_marker_path(rest: &str) -> Option<String> {
    let rest = rest.split('\t').next().unwrap_or(rest);
    if rest == "/dev/null" {
        None
    } else {
        Some(strip_side_prefix(rest))
    }
}

/// Splits `a/<p> b/<q>`, preferring the split where both sides agree.
fn split_git_header(rest: &str) -> Option<(String, String)> {
    let candidates: Vec<usize> = rest.match_indices(" b/").map(|(i, _)| i).collect();
    let pick = candidates
        .iter()
        .copied()
        .find(|&i| rest[..i].strip_prefix("a/") == Some(&rest[i + 3..]))
        .or_else(|| candidates.first().copied())?;
    let old = rest[..pick].strip_prefix("a/")?.to_string();
    let new = rest[pick + 3..].to_string();
    Some((old, new))
}

fn parse_hunk_header(line: &str) -> Option<(u32, u32, u32, u32)> {
    let rest = line.strip_prefix("@@ -")?;
    let end = rest.find(" @@")?;
    let (old, new) = rest[..end].split_once(" +")?;
    let range = |s: &str| -> Option<(u32, u32)> {
        match s.split_once(',') {
            Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
            None => Some((s.parse().ok()?, 1)),
        }
    };
    let (os, oc) = range(old)?;
    let (ns, nc) = range(new)?;
    Some((os, oc, ns, nc))
}

struct PendingDiff {
    old_path: Option<String>,
    new_path: Option<String>,
    added: bool,
    deleted: bool,
    binary: bool,
    hunks: Vec<Hunk>,
}

impl PendingDiff {
    fn finish(self) -> FileDiff {
        FileDiff {
            old_path: if self.added { None } else { self.old_path },
            new_path: if self.deleted { None } else { self.new_path },
            hunks: self.hunks,
            binary: self.binary,
        }
    }
}

/// Converts `git log --patch` text in the layout
///
/// ```text
/// commit <sha>
/// author-date <unix seconds>
///
///     message, indented four spaces
///
/// diff --git a/<path> b/<path>
/// --- a/<path>
/// +++ b/<path>
/// @@ -1,2 +1,3 @@
/// ```
///
/// Other header lines (`Author:`, `Date:`, `Merge:`) and extended diff
/// headers (`index`, modes, similarity) are accepted and ignored, except for
/// `rename from`/`rename to` and `new file`/`deleted file`.
pub fn convert_git_log(text: &str) -> Result<Vec<Commit>, HistoryError> {
    let lines: Vec<&str> = text.lines().collect();
    let err = |position: usize, reason: &str| HistoryError::MalformedGitLog {
        position,
        reason: reason.to_string(),
    };
    let mut commits: Vec<Commit> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if line.trim().is_empty() {
            i += 1;
            continue;
        }
        let Some(sha) = line.strip_prefix("commit ") else {
            return Err(err(i + 1, "expected `commit <sha>`"));
        };
        let id = sha
            .split_whitespace()
            .next()
            .unwrap_or_default()
            .to_string();
        if id.is_empty() {
            return Err(err(i + 1, "empty commit id"));
        }
        let header_line = i + 1;
        i += 1;
        let mut timestamp = None;
        while i < lines.len() && !lines[i].is_empty() {
            if let Some(ts) = lines[i].strip_prefix("author-date ") {
                timestamp = Some(
                    ts.trim()
                        .parse::<i64>()
                        .map_err(|_| err(i + 1, "author-date is not an integer"))?,
                );
            }
            i += 1;
        }
        let timestamp = timestamp.ok_or_else(|| err(header_line, "missing author-date header"))?;

        let mut message_lines = Vec::new();
        while i < lines.len()
            && !lines[i].starts_with("diff --git ")
            && !lines[i].starts_with("commit ")
        {
            let l = lines[i];
            if let Some(stripped) = l.strip_prefix("    ") {
                message_lines.push(stripped);
            } else if l.trim().is_empty() {
                message_lines.push("");
            } else {
                return Err(err(i + 1, "message lines must be indented four spaces"));
            }
            i += 1;
        }
        while message_lines.first() == Some(&"") {
            message_lines.remove(0);
        }
        while message_lines.last() == Some(&"") {
            message_lines.pop();
        }

        let mut diffs = Vec::new();
        while i < lines.len() && lines[i].starts_with("diff --git ") {
            let (old, new) = split_git_header(&lines[i]["diff --git ".len()..])
                .ok_or_else(|| err(i + 1, "cannot read paths from diff header"))?;
            let mut pending = PendingDiff {
                old_path: Some(old),
                new_path: Some(new),
                added: false,
                deleted: false,
                binary: false,
                hunks: Vec::new(),
            };
            i += 1;
            // extended headers
            while i < lines.len()
                && !lines[i].starts_with("@@")
                && !lines[i].starts_with("diff --git ")
                && !lines[i].starts_with("commit ")
            {
                let l = lines[i];
                if l.starts_with("new file mode") {
                    pending.added = true;
                } else if l.starts_with("deleted file mode") {
                    pending.deleted = true;
                } else if let Some(p) = l.strip_prefix("rename from ") {
                    pending.old_path = Some(p.to_string());
                } else if let Some(p) = l.strip_prefix("rename to ") {
                    pending.new_path = Some(p.to_string());
                } else if let Some(p) = l.strip_prefix("--- ") {
                    match diff_marker_path(p) {
                        Some(p) => pending.old_path = Some(p),
                        None => pending.added = true,
                    }
                } else if let Some(p) = l.strip_prefix("+++ ") {
                    match diff_marker_path(p) {
                        Some(p) => pending.new_path = Some(p),
                        None => pending.deleted = true,
                    }
                } else if l.starts_with("Binary files ") || l == "GIT binary patch" {
                    pending.binary = true;
                } else if l.trim().is_empty() {
                    // blank separator before the next commit
                } else if pending.binary {
                    // base85 payload of a binary patch
                } else if !(l.starts_with("index ")
                    || l.starts_with("old mode")
                    || l.starts_with("new mode")
                    || l.starts_with("similarity index")
                    || l.starts_with("dissimilarity index")
                    || l.starts_with("copy from")
                    || l.starts_with("copy to"))
                {
                    return Err(err(i + 1, "unexpected line in diff header"));
                }
                i += 1;
            }
            while i < lines.len() && lines[i].starts_with("@@") {
                let (old_start, old_count, new_start, new_count) =
                    parse_hunk_header(lines[i]).ok_or_else(|| err(i + 1, "bad hunk header"))?;
                let mut hunk = Hunk {
                    old_start,
                    old_count,
                    new_start,
                    new_count,
                    lines: Vec::new(),
                };
                i += 1;
                let (mut old_left, mut new_left) = (old_count, new_count);
                while old_left > 0 || new_left > 0 {
                    let Some(&l) = lines.get(i) else {
                        return Err(err(i, "hunk ends early"));
                    };
                    let (tag, body) = match l.chars().next() {
                        Some('+') => (LineTag::Added, &l[1..]),
                        Some('-') => (LineTag::Removed, &l[1..]),
                        Some(' ') => (LineTag::Context, &l[1..]),
                        // some tools strip the space of empty context lines
                        None => (LineTag::Context, ""),
                        Some('\\') => {
                            i += 1;
                            continue;
                        }
                        _ => return Err(err(i + 1, "unexpected line inside hunk")),
                    };
                    match tag {
                        LineTag::Added if new_left > 0 => new_left -= 1,
                        LineTag::Removed if old_left > 0 => old_left -= 1,
                        LineTag::Context if old_left > 0 && new_left > 0 => {
                            old_left -= 1;
                            new_left -= 1;
                        }
                        _ => return Err(err(i + 1, "hunk body exceeds header counts")),
                    }
                    hunk.lines.push((tag, body.to_string()));
                    i += 1;
                }
                while i < lines.len() && lines[i].starts_with('\\') {
                    i += 1;
                }
                pending.hunks.push(hunk);
            }
            diffs.push(pending.finish());
            while i < lines.len() && lines[i].trim().is_empty() {
                i += 1;
            }
        }
        commits.push(Commit {
            id,
            timestamp,
            message: message_lines.join("\n"),
            diffs,
        });
    }
    commits.sort_by_key(|c| c.timestamp);
    Ok(commits)
}

// ---------------------------------------------------------------------------
// Ticket linking

/// Matches a leading `#` followed by digits.
pub const DEFAULT_TICKET_PATTERN: &str = r"^#(\d+)";

#[derive(Debug, Clone)]
pub struct TicketPattern {
    regex: Regex,
    all_refs: bool,
}

impl TicketPattern {
    /// Compiles `pattern`, which must contain exactly one capture group.
    /// With `all_refs`, every distinct ticket number in a message is linked;
    /// otherwise only the first.
    pub fn new(pattern: &str, all_refs: bool) -> Result<Self, HistoryError> {
        let regex = Regex::new(pattern).map_err(|e| HistoryError::InvalidPattern(e.to_string()))?;
        if regex.captures_len() != 2 {
            return Err(HistoryError::InvalidPattern(format!(
                "`{pattern}` must have exactly one capture group, found {}",
                regex.captures_len() - 1
            )));
        }
        Ok(TicketPattern { regex, all_refs })
    }

    fn extract(&self, message: &str) -> Vec<TicketId> {
        let mut out = Vec::new();
        for caps in self.regex.captures_iter(message) {
            if let Some(id) = caps.get(1).and_then(|m| TicketId::parse(m.as_str())) {
                if !out.contains(&id) {
                    out.push(id);
                }
                if !self.all_refs {
                    break;
                }
            }
        }
        out
    }
}

impl Default for TicketPattern {
    fn default() -> Self {
        TicketPattern::new(DEFAULT_TICKET_PATTERN, false).expect("default pattern compiles")
    }
}

#[derive(Debug, Default)]
pub struct TicketLinks<'a> {
    pub tickets: BTreeMap<TicketId, Vec<&'a Commit>>,
    pub unlinked: Vec<&'a Commit>,
}

impl TicketLinks<'_> {
    pub fn ticket_ids(&self) -> BTreeSet<&TicketId> {
        self.tickets.keys().collect()
    }
}

/// Groups commits by the ticket numbers found in their messages.
/// `commits` must already be in timestamp order; lists keep that order.
pub fn link_tickets<'a>(commits: &'a [Commit], pattern: &TicketPattern) -> TicketLinks<'a> {
    let mut links = TicketLinks::default();
    for commit in commits {
        let ids = pattern.extract(&commit.message);
        if ids.is_empty() {
            links.unlinked.push(commit);
        }
        for id in ids {
            links.tickets.entry(id).or_default().push(commit);
        }
    }
    links
}
