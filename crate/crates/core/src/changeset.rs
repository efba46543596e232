//! Per-ticket accumulation of method change events.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffmap::{ChangeKind, MethodChangeEvent};
use crate::history::TicketRef;
use crate::parser::{MethodDescriptor, MethodKey};
use crate::triviality::FilterCategory;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChangesetError {
    #[error("method {key} is modified in commit {commit_id} after being deleted")]
    InconsistentHistory { key: MethodKey, commit_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalChange {
    Added,
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneReason {
    /// Existed before the ticket and was deleted by it.
    Deleted,
    /// Added and deleted again within the ticket.
    Ephemeral,
    /// Abstract or interface method without a body.
    Stub,
    /// Removed by the triviality filter.
    Filtered(FilterCategory),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangedMethod {
    pub change: FinalChange,
    /// The method as declared after the last commit that touched it.
    pub descriptor: Option<MethodDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TicketChangeset {
    pub ticket: TicketRef,
    pub methods: BTreeMap<MethodKey, ChangedMethod>,
    pub pruned: BTreeMap<MethodKey, PruneReason>,
}

impl TicketChangeset {
    pub fn len(&self) -> usize {
        self.methods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.methods.is_empty()
    }
}

/// The events of one commit, with the post-commit methods of every file the
/// commit touched.
#[derive(Debug, Clone, Default)]
pub struct CommitEvents {
    pub commit_id: String,
    pub events: Vec<MethodChangeEvent>,
    pub post_methods: Vec<MethodDescriptor>,
}

#[derive(Debug)]
struct KeyState {
    existed_before: bool,
    alive: bool,
    ever_added: bool,
    final_change: FinalChange,
    descriptor: Option<MethodDescriptor>,
}

/// Replays a ticket's commits in order and keeps the methods that were added
/// or changed and still exist at the end.
pub fn accumulate(
    ticket: TicketRef,
    commits: &[CommitEvents],
) -> Result<TicketChangeset, ChangesetError> {
    let mut states: BTreeMap<MethodKey, KeyState> = BTreeMap::new();
    for commit in commits {
        let lookup: BTreeMap<&MethodKey, &MethodDescriptor> =
            commit.post_methods.iter().map(|d| (&d.key, d)).collect();
        for event in &commit.events {
            let descriptor = lookup.get(&event.key).map(|d| (*d).clone());
            match states.get_mut(&event.key) {
                None => {
                    let state = match event.change {
                        ChangeKind::Added => KeyState {
                            existed_before: false,
                            alive: true,
                            ever_added: true,
                            final_change: FinalChange::Added,
                            descriptor,
                        },
                        ChangeKind::Modified => KeyState {
                            existed_before: true,
                            alive: true,
                            ever_added: false,
                            final_change: FinalChange::Modified,
                            descriptor,
                        },
                        ChangeKind::Deleted => KeyState {
                            existed_before: true,
                            alive: false,
                            ever_added: false,
                            final_change: FinalChange::Modified,
                            descriptor: None,
                        },
                    };
                    states.insert(event.key.clone(), state);
                }
                Some(state) => match event.change {
                    ChangeKind::Added => {
                        if !state.alive {
                            state.alive = true;
                            state.ever_added = true;
                            state.final_change = FinalChange::Added;
                        }
                        state.descriptor = descriptor.or(state.descriptor.take());
                    }
                    ChangeKind::Modified => {
                        if !state.alive {
                            return Err(ChangesetError::InconsistentHistory {
                                key: event.key.clone(),
                                commit_id: commit.commit_id.clone(),
                            });
                        }
                        state.descriptor = descriptor.or(state.descriptor.take());
                    }
                    ChangeKind::Deleted => {
                        state.alive = false;
                        state.descriptor = None;
                    }
                },
            }
        }
    }

    let mut methods = BTreeMap::new();
    let mut pruned = BTreeMap::new();
    for (key, state) in states {
        if !state.alive {
            let reason = if state.existed_before {
                PruneReason::Deleted
            } else {
                debug_assert!(state.ever_added);
                PruneReason::Ephemeral
            };
            pruned.insert(key, reason);
        } else if state
            .descriptor
            .as_ref()
            .is_some_and(|d| d.is_abstract_or_interface_stub)
        {
            pruned.insert(key, PruneReason::Stub);
        } else {
            methods.insert(
                key,
                ChangedMethod {
                    change: state.final_change,
                    descriptor: state.descriptor,
                },
            );
        }
    }
    Ok(TicketChangeset {
        ticket,
        methods,
        pruned,
    })
}
