//! End-to-end analysis: replay patches to recover file states, parse both
//! sides of every change, map changes to methods, accumulate per ticket,
//! join coverage and compute the reports.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::changeset::{accumulate, ChangesetError, CommitEvents, TicketChangeset};
use crate::coverage::{classify, CoverageSet};
use crate::diffmap::map_commit;
use crate::history::{link_tickets, Commit, FileDiff, LineTag, TicketPattern, TicketTypes};
use crate::metric::{compute_report, TicketCoverageReport};
use crate::parser::{has_source_extension, parse_source, MethodDescriptor};
use crate::triviality::{apply_filter, verdicts_for, FilterCategory};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: commit {commit}: no base snapshot for this file")]
    MissingSnapshot { commit: String, path: String },
    #[error("{path}:{line}: commit {commit}: hunk {hunk} does not apply ({reason})")]
    PatchConflict {
        commit: String,
        path: String,
        hunk: usize,
        line: usize,
        reason: String,
    },
    #[error("{path}: commit {commit}: file is added but already exists")]
    AlreadyExists { commit: String, path: String },
    #[error("{path}: cannot read snapshot: {source}")]
    SnapshotIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Changeset(#[from] ChangesetError),
}

/// File tree as of the parent of the first commit. Files are looked up in
/// memory first, then under `root`.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    pub root: Option<PathBuf>,
    pub files: BTreeMap<String, String>,
}

impl Snapshot {
    pub fn from_dir(root: impl Into<PathBuf>) -> Self {
        Snapshot {
            root: Some(root.into()),
            files: BTreeMap::new(),
        }
    }

    pub fn from_files<I, K, V>(files: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Snapshot {
            root: None,
            files: files
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    fn lookup(&self, path: &str) -> Result<Option<String>, PipelineError> {
        if let Some(text) = self.files.get(path) {
            return Ok(Some(text.clone()));
        }
        let Some(root) = &self.root else {
            return Ok(None);
        };
        // refuse paths that would escape the snapshot directory
        if Path::new(path)
            .components()
            .any(|c| !matches!(c, std::path::Component::Normal(_)))
        {
            return Ok(None);
        }
        match fs::read_to_string(root.join(path)) {
            Ok(text) => Ok(Some(text)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(PipelineError::SnapshotIo {
                path: root.join(path).display().to_string(),
                source,
            }),
        }
    }
}

/// Splits text into lines without terminators.
pub fn split_lines(text: &str) -> Vec<String> {
    text.lines().map(str::to_string).collect()
}

/// Pre- and post-image of one file touched by a commit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileState {
    /// Index of the diff inside the commit.
    pub diff_index: usize,
    pub pre: Option<Vec<String>>,
    pub post: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitStates {
    pub commit_id: String,
    pub files: Vec<FileState>,
}

fn involves_source(diff: &FileDiff, extensions: &[String]) -> bool {
    [&diff.old_path, &diff.new_path]
        .into_iter()
        .flatten()
        .any(|p| has_source_extension(p, extensions))
}

/// Applies the hunks of `diff` to `base`, checking every context and removed
/// line against it.
pub fn apply_hunks(
    base: &[String],
    diff: &FileDiff,
    commit_id: &str,
) -> Result<Vec<String>, PipelineError> {
    let conflict = |hunk: usize, line: usize, reason: String| PipelineError::PatchConflict {
        commit: commit_id.to_string(),
        path: diff.path().to_string(),
        hunk,
        line,
        reason,
    };
    let mut out = Vec::with_capacity(base.len());
    let mut cursor = 0usize;
    for (h, hunk) in diff.hunks.iter().enumerate() {
        let h = h + 1;
        let start = if hunk.old_count == 0 {
            hunk.old_start as usize
        } else {
            (hunk.old_start as usize).saturating_sub(1)
        };
        if start < cursor || start > base.len() {
            return Err(conflict(
                h,
                hunk.old_start as usize,
                "hunk lies outside the file".into(),
            ));
        }
        out.extend_from_slice(&base[cursor..start]);
        let expected_new = if hunk.new_count == 0 {
            hunk.new_start as usize
        } else {
            (hunk.new_start as usize).saturating_sub(1)
        };
        if out.len() != expected_new {
            return Err(conflict(
                h,
                start + 1,
                format!("new-side start {} disagrees with replay", hunk.new_start),
            ));
        }
        let mut idx = start;
        for (tag, text) in &hunk.lines {
            match tag {
                LineTag::Added => out.push(text.clone()),
                LineTag::Context | LineTag::Removed => {
                    match base.get(idx) {
                        Some(actual) if actual == text => {}
                        Some(actual) => {
                            return Err(conflict(
                                h,
                                idx + 1,
                                format!("expected `{text}`, found `{actual}`"),
                            ))
                        }
                        None => return Err(conflict(h, idx + 1, "past end of file".into())),
                    }
                    if *tag == LineTag::Context {
                        out.push(text.clone());
                    }
                    idx += 1;
                }
            }
        }
        cursor = idx;
    }
    out.extend_from_slice(&base[cursor..]);
    Ok(out)
}

/// Replays every commit in order over `snapshot` and returns, per commit,
/// the pre- and post-image of each touched source file. Binary diffs and
/// files without a source extension are skipped.
pub fn reconstruct_states(
    commits: &[Commit],
    snapshot: &Snapshot,
    extensions: &[String],
) -> Result<Vec<CommitStates>, PipelineError> {
    // None marks a file deleted during the replay
    let mut current: HashMap<String, Option<Vec<String>>> = HashMap::new();
    let mut out = Vec::with_capacity(commits.len());
    for commit in commits {
        let mut files = Vec::new();
        for (i, diff) in commit.diffs.iter().enumerate() {
            if diff.binary || !involves_source(diff, extensions) {
                continue;
            }
            let pre = match &diff.old_path {
                None => {
                    let path = diff.new_path.as_deref().unwrap_or_default();
                    let exists = match current.get(path) {
                        Some(state) => state.is_some(),
                        None => snapshot.lookup(path)?.is_some(),
                    };
                    if exists {
                        return Err(PipelineError::AlreadyExists {
                            commit: commit.id.clone(),
                            path: path.to_string(),
                        });
                    }
                    None
                }
                Some(path) => {
                    let text = match current.get(path) {
                        Some(Some(lines)) => Some(lines.clone()),
                        Some(None) => None,
                        None => snapshot.lookup(path)?.map(|t| split_lines(&t)),
                    };
                    match text {
                        Some(lines) => Some(lines),
                        None => {
                            return Err(PipelineError::MissingSnapshot {
                                commit: commit.id.clone(),
                                path: path.clone(),
                            })
                        }
                    }
                }
            };
            let base: &[String] = pre.as_deref().unwrap_or(&[]);
            let applied = apply_hunks(base, diff, &commit.id)?;
            let post = diff.new_path.as_ref().map(|_| applied);
            if let Some(old) = &diff.old_path {
                if diff.new_path.as_ref() != Some(old) {
                    current.insert(old.clone(), None);
                }
            }
            if let Some(new) = &diff.new_path {
                current.insert(new.clone(), post.clone());
            }
            files.push(FileState {
                diff_index: i,
                pre,
                post,
            });
        }
        out.push(CommitStates {
            commit_id: commit.id.clone(),
            files,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Options {
    pub extensions: Vec<String>,
    pub ticket_pattern: TicketPattern,
    pub ticket_types: TicketTypes,
    /// `None` disables the triviality filter; an empty list enables all
    /// categories.
    pub filter: Option<Vec<FilterCategory>>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            extensions: vec!["java".into()],
            ticket_pattern: TicketPattern::default(),
            ticket_types: TicketTypes::default(),
            filter: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Analysis {
    pub changesets: Vec<TicketChangeset>,
    pub reports: Vec<TicketCoverageReport>,
    pub warnings: Vec<String>,
}

fn parse_side(
    path: Option<&String>,
    lines: Option<&Vec<String>>,
    commit_id: &str,
    warnings: &mut Vec<String>,
) -> Option<Vec<MethodDescriptor>> {
    let (Some(path), Some(lines)) = (path, lines) else {
        return Some(Vec::new());
    };
    match parse_source(path, &lines.join("\n")) {
        Ok(methods) => Some(methods),
        Err(e) => {
            warnings.push(format!("skipping {path} at commit {commit_id}: {e}"));
            None
        }
    }
}

/// Per-commit method events for every commit of the history.
pub fn commit_events(
    commits: &[Commit],
    states: &[CommitStates],
    warnings: &mut Vec<String>,
) -> Vec<CommitEvents> {
    let mut ambiguous = BTreeSet::new();
    let mut out = Vec::with_capacity(commits.len());
    for (commit, state) in commits.iter().zip(states) {
        let mut ce = CommitEvents {
            commit_id: commit.id.clone(),
            ..CommitEvents::default()
        };
        for file in &state.files {
            let diff = &commit.diffs[file.diff_index];
            let old = parse_side(
                diff.old_path.as_ref(),
                file.pre.as_ref(),
                &commit.id,
                warnings,
            );
            let new = parse_side(
                diff.new_path.as_ref(),
                file.post.as_ref(),
                &commit.id,
                warnings,
            );
            let (Some(old), Some(new)) = (old, new) else {
                continue;
            };
            let mut seen = BTreeSet::new();
            for m in &new {
                if !seen.insert(&m.key) {
                    ambiguous.insert(m.key.to_string());
                }
            }
            ce.events.extend(map_commit(diff, &old, &new, &commit.id));
            ce.post_methods.extend(new);
        }
        out.push(ce);
    }
    for key in ambiguous {
        warnings.push(format!(
            "ambiguous method key {key}: overloads with equal arity are merged"
        ));
    }
    out
}

/// Runs the whole analysis. `commits` must be in timestamp order, as
/// returned by the history loaders.
pub fn analyze(
    commits: &[Commit],
    snapshot: &Snapshot,
    coverage: &CoverageSet,
    options: &Options,
) -> Result<Analysis, PipelineError> {
    let states = reconstruct_states(commits, snapshot, &options.extensions)?;
    let mut warnings = Vec::new();
    let events = commit_events(commits, &states, &mut warnings);
    let by_id: HashMap<&str, &CommitEvents> =
        events.iter().map(|e| (e.commit_id.as_str(), e)).collect();

    let links = link_tickets(commits, &options.ticket_pattern);
    for c in &links.unlinked {
        warnings.push(format!("commit {} references no ticket", c.id));
    }

    let mut analysis = Analysis::default();
    for (id, ticket_commits) in &links.tickets {
        let ticket_events: Vec<CommitEvents> = ticket_commits
            .iter()
            .map(|c| by_id[c.id.as_str()].clone())
            .collect();
        let changeset = accumulate(options.ticket_types.resolve(id), &ticket_events)?;
        let classification = classify(&changeset, coverage);
        let filtered = options
            .filter
            .as_ref()
            .map(|cats| apply_filter(&changeset, &verdicts_for(&changeset), cats));
        analysis.reports.push(compute_report(
            &changeset,
            &classification,
            filtered.as_ref(),
        ));
        analysis.changesets.push(changeset);
    }
    analysis.warnings = warnings;
    Ok(analysis)
}
