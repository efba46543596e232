//! Attribution of a commit's changed lines to the methods they fall in.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::history::{FileDiff, LineTag};
use crate::parser::{MethodDescriptor, MethodKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Added,
    Modified,
    Deleted,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MethodChangeEvent {
    pub commit_id: String,
    pub key: MethodKey,
    pub change: ChangeKind,
}

/// Lines touched by a diff, on both sides.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangedLines {
    /// New-file line numbers of added lines.
    pub added: BTreeSet<u32>,
    /// Old-file line numbers of removed lines.
    pub removed: BTreeSet<u32>,
    /// For each run of removals with no additions in between, the new-file
    /// line preceding the removal point (at least 1).
    pub deletion_anchors: BTreeSet<u32>,
}

/// Walks the hunks of `diff` and records which lines changed.
pub fn changed_lines(diff: &FileDiff) -> ChangedLines {
    let mut out = ChangedLines::default();
    for hunk in &diff.hunks {
        let mut old_line = hunk.old_start.max(1);
        let mut new_line = hunk.new_start.max(1);
        if hunk.new_count == 0 {
            // git anchors an empty post-image range at the preceding line
            new_line = hunk.new_start + 1;
        }
        if hunk.old_count == 0 {
            old_line = hunk.old_start + 1;
        }
        let mut run_has_removal = false;
        let mut run_has_addition = false;
        let mut run_anchor = 0;
        let close_run = |out: &mut ChangedLines, removal: bool, addition: bool, anchor: u32| {
            if removal && !addition {
                out.deletion_anchors.insert(anchor.max(1));
            }
        };
        for (tag, _) in &hunk.lines {
            match tag {
                LineTag::Context => {
                    close_run(&mut out, run_has_removal, run_has_addition, run_anchor);
                    run_has_removal = false;
                    run_has_addition = false;
                    old_line += 1;
                    new_line += 1;
                }
                LineTag::Added => {
                    out.added.insert(new_line);
                    run_has_addition = true;
                    new_line += 1;
                }
                LineTag::Removed => {
                    if !run_has_removal && !run_has_addition {
                        run_anchor = new_line - 1;
                    }
                    out.removed.insert(old_line);
                    run_has_removal = true;
                    old_line += 1;
                }
            }
        }
        close_run(&mut out, run_has_removal, run_has_addition, run_anchor);
    }
    out
}

/// New-file line numbers touched by `diff`: every added line, plus an anchor
/// line for each pure deletion.
pub fn changed_new_lines(diff: &FileDiff) -> BTreeSet<u32> {
    let lines = changed_lines(diff);
    lines
        .added
        .union(&lines.deletion_anchors)
        .copied()
        .collect()
}

/// Descriptors with the smallest range containing `line`. Several are
/// returned only when methods share exactly the same line range.
pub fn innermost(methods: &[MethodDescriptor], line: u32) -> Vec<&MethodDescriptor> {
    let mut best: Vec<&MethodDescriptor> = Vec::new();
    for m in methods.iter().filter(|m| m.contains_line(line)) {
        match best.first().map(|b| b.span()) {
            Some(span) if m.span() > span => {}
            Some(span) if m.span() == span => best.push(m),
            _ => best = vec![m],
        }
    }
    best
}

/// Turns the diff of one file into per-method change events.
///
/// Added lines are attributed to the innermost post-image method that
/// contains them. Removed lines are attributed to the innermost pre-image
/// method that contained them, provided that method still exists after the
/// commit. Methods only present after the commit are `added`, methods only
/// present before are `deleted`. Methods are matched across the two sides by
/// class chain, name and arity, so renaming the file alone yields no events.
pub fn map_commit(
    diff: &FileDiff,
    old_methods: &[MethodDescriptor],
    new_methods: &[MethodDescriptor],
    commit_id: &str,
) -> Vec<MethodChangeEvent> {
    let lines = changed_lines(diff);
    let old_ids: HashSet<(&str, &str, u32)> =
        old_methods.iter().map(|m| m.key.identity()).collect();
    let mut new_by_id: BTreeMap<(&str, &str, u32), &MethodKey> = BTreeMap::new();
    for m in new_methods {
        new_by_id.entry(m.key.identity()).or_insert(&m.key);
    }

    let mut events: BTreeMap<MethodKey, ChangeKind> = BTreeMap::new();
    let mut record = |key: &MethodKey, change: ChangeKind| {
        events
            .entry(key.clone())
            .and_modify(|c| {
                if change < *c {
                    *c = change;
                }
            })
            .or_insert(change);
    };

    for &line in &lines.added {
        for m in innermost(new_methods, line) {
            let change = if old_ids.contains(&m.key.identity()) {
                ChangeKind::Modified
            } else {
                ChangeKind::Added
            };
            record(&m.key, change);
        }
    }
    for &line in &lines.removed {
        for m in innermost(old_methods, line) {
            if let Some(new_key) = new_by_id.get(&m.key.identity()) {
                record(new_key, ChangeKind::Modified);
            }
        }
    }
    let deleted_path = diff.path();
    for m in old_methods {
        if !new_by_id.contains_key(&m.key.identity()) {
            let mut key = m.key.clone();
            key.path = deleted_path.to_string();
            record(&key, ChangeKind::Deleted);
        }
    }

    events
        .into_iter()
        .map(|(key, change)| MethodChangeEvent {
            commit_id: commit_id.to_string(),
            key,
            change,
        })
        .collect()
}
