//! Brute-force reference implementations.

use std::collections::{BTreeMap, BTreeSet};

use ticketcov::changeset::{FinalChange, PruneReason};
use ticketcov::diffmap::ChangeKind;

use super::javagen::Placed;
use super::lcs;

pub type Identity = (String, String, u32);

/// Expected events for one file change, computed from the full-file
/// alignment and the generator's own method ranges. Keys are identities;
/// the path is implied by the file.
pub fn map_commit_oracle(
    old_lines: &[String],
    old_methods: &[Placed],
    new_lines: &[String],
    new_methods: &[Placed],
) -> BTreeMap<Identity, ChangeKind> {
    let (removed, added) = lcs::changed(old_lines, new_lines);
    let old_ids: BTreeSet<Identity> = old_methods.iter().map(Placed::identity).collect();
    let new_ids: BTreeSet<Identity> = new_methods.iter().map(Placed::identity).collect();
    let mut out: BTreeMap<Identity, ChangeKind> = BTreeMap::new();
    let mut put = |id: Identity, kind: ChangeKind| {
        let slot = out.entry(id).or_insert(kind);
        if kind < *slot {
            *slot = kind;
        }
    };

    let innermost = |methods: &[Placed], line: u32| -> Vec<Identity> {
        let containing: Vec<&Placed> = methods.iter().filter(|m| m.contains(line)).collect();
        let Some(min) = containing.iter().map(|m| m.end - m.start).min() else {
            return Vec::new();
        };
        containing
            .iter()
            .filter(|m| m.end - m.start == min)
            .map(|m| m.identity())
            .collect()
    };

    for line in added {
        for id in innermost(new_methods, line) {
            let kind = if old_ids.contains(&id) {
                ChangeKind::Modified
            } else {
                ChangeKind::Added
            };
            put(id, kind);
        }
    }
    for line in removed {
        for id in innermost(old_methods, line) {
            if new_ids.contains(&id) {
                put(id, ChangeKind::Modified);
            }
        }
    }
    for id in old_ids.difference(&new_ids) {
        put(id.clone(), ChangeKind::Deleted);
    }
    out
}

/// Outcome of a ticket for one key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Kept(FinalChange),
    Pruned(PruneReason),
}

/// Explicit per-key state machine over the ticket's event sequence.
pub fn replay_oracle<K: Ord + Clone>(events: &[(K, ChangeKind)]) -> BTreeMap<K, Outcome> {
    let mut per_key: BTreeMap<K, Vec<ChangeKind>> = BTreeMap::new();
    for (k, c) in events {
        per_key.entry(k.clone()).or_default().push(*c);
    }
    per_key
        .into_iter()
        .map(|(k, seq)| {
            let existed_before = seq[0] != ChangeKind::Added;
            let alive = *seq.last().unwrap() != ChangeKind::Deleted;
            let ever_added = seq.contains(&ChangeKind::Added);
            let outcome = match (alive, existed_before) {
                (true, _) if ever_added => Outcome::Kept(FinalChange::Added),
                (true, _) => Outcome::Kept(FinalChange::Modified),
                (false, true) => Outcome::Pruned(PruneReason::Deleted),
                (false, false) => Outcome::Pruned(PruneReason::Ephemeral),
            };
            (k, outcome)
        })
        .collect()
}

/// Expected changeset of a single-file ticket from the sequence of file
/// states alone: which methods exist at the start, at the end and in
/// between, and which ones had a changed line in some step.
pub fn state_oracle(states: &[(Vec<String>, Vec<Placed>)]) -> BTreeMap<Identity, Outcome> {
    let ids =
        |i: usize| -> BTreeSet<Identity> { states[i].1.iter().map(Placed::identity).collect() };
    let first = ids(0);
    let last = ids(states.len() - 1);
    let mut touched: BTreeSet<Identity> = BTreeSet::new();
    let mut ever: BTreeSet<Identity> = BTreeSet::new();
    let mut gone_in_between: BTreeSet<Identity> = BTreeSet::new();
    for i in 0..states.len() {
        let here = ids(i);
        ever.extend(here.iter().cloned());
        for id in &ever {
            if !here.contains(id) {
                gone_in_between.insert(id.clone());
            }
        }
        if i == 0 {
            continue;
        }
        let (old_lines, old_methods) = &states[i - 1];
        let (new_lines, new_methods) = &states[i];
        let (removed, added) = lcs::changed(old_lines, new_lines);
        for m in new_methods {
            if added.iter().any(|&l| m.contains(l)) {
                touched.insert(m.identity());
            }
        }
        for m in old_methods {
            if removed.iter().any(|&l| m.contains(l)) && here.contains(&m.identity()) {
                touched.insert(m.identity());
            }
        }
    }
    let mut out = BTreeMap::new();
    for id in &ever {
        if last.contains(id) {
            if !touched.contains(id) {
                continue;
            }
            let change = if !first.contains(id) || gone_in_between.contains(id) {
                FinalChange::Added
            } else {
                FinalChange::Modified
            };
            out.insert(id.clone(), Outcome::Kept(change));
        } else if first.contains(id) {
            out.insert(id.clone(), Outcome::Pruned(PruneReason::Deleted));
        } else {
            out.insert(id.clone(), Outcome::Pruned(PruneReason::Ephemeral));
        }
    }
    out
}
