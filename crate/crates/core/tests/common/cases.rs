//! Single randomized cases, shared by the property tests and the
//! acceptance target. Each returns `Err` with a description on mismatch.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use ticketcov::changeset::{accumulate, ChangedMethod, CommitEvents, PruneReason, TicketChangeset};
use ticketcov::coverage::{classify, CoverageClass, CoverageSet};
use ticketcov::diffmap::{map_commit, ChangeKind, MethodChangeEvent};
use ticketcov::history::{Commit, TicketId, TicketRef, TicketType};
use ticketcov::metric::compute_report;
use ticketcov::parser::{parse_source, MethodDescriptor, MethodKey, MethodKind};
use ticketcov::pipeline::{commit_events, reconstruct_states, Snapshot};
use ticketcov::report::{render_json, reports_from_json};

use super::javagen::{self, GenFile, Placed};
use super::lcs;
use super::oracle::{self, Outcome};

fn ticket(n: u32) -> TicketRef {
    TicketRef {
        ticket_id: TicketId::parse(&n.to_string()).unwrap(),
        ticket_type: TicketType::Feature,
    }
}

fn check_ranges(
    path: &str,
    lines: &[String],
    placed: &[Placed],
) -> Result<Vec<MethodDescriptor>, String> {
    let parsed = parse_source(path, &lines.join("\n")).map_err(|e| format!("parse failed: {e}"))?;
    let mut got: Vec<(String, String, u32, u32, u32)> = parsed
        .iter()
        .map(|d| {
            (
                d.key.class_chain.clone(),
                d.key.name.clone(),
                d.key.param_arity,
                d.start_line,
                d.end_line,
            )
        })
        .collect();
    let mut want: Vec<(String, String, u32, u32, u32)> = placed
        .iter()
        .map(|p| (p.chain.clone(), p.name.clone(), p.arity, p.start, p.end))
        .collect();
    got.sort();
    want.sort();
    if got != want {
        return Err(format!(
            "parser ranges differ from generator: got {got:?}, want {want:?}"
        ));
    }
    Ok(parsed)
}

/// One (old, new) file pair through `map_commit`, compared with the
/// line-membership oracle.
pub fn diffmap_case<R: Rng>(rng: &mut R) -> Result<(), String> {
    let old_file = javagen::random_file(rng);
    let new_file = javagen::mutate(rng, &old_file);
    let added_file = rng.gen_bool(0.1);
    let deleted_file = !added_file && rng.gen_bool(0.1);
    let renamed = rng.gen_bool(0.1);
    let old_path = "src/gen/Gen.java";
    let new_path = if renamed {
        "src/gen/Renamed.java"
    } else {
        old_path
    };

    let (old_lines, old_placed) = if added_file {
        (Vec::new(), Vec::new())
    } else {
        old_file.render()
    };
    let (new_lines, new_placed) = if deleted_file {
        (Vec::new(), Vec::new())
    } else {
        new_file.render()
    };
    let context = rng.gen_range(0..=3);
    let diff = lcs::file_diff(
        (!added_file).then_some(old_path),
        (!deleted_file).then_some(new_path),
        &old_lines,
        &new_lines,
        context,
    );
    let old_methods = if added_file {
        Vec::new()
    } else {
        check_ranges(old_path, &old_lines, &old_placed)?
    };
    let new_methods = if deleted_file {
        Vec::new()
    } else {
        check_ranges(new_path, &new_lines, &new_placed)?
    };

    let got: BTreeMap<(String, String, String, u32), ChangeKind> =
        map_commit(&diff, &old_methods, &new_methods, "c")
            .into_iter()
            .map(|e: MethodChangeEvent| {
                (
                    (e.key.path, e.key.class_chain, e.key.name, e.key.param_arity),
                    e.change,
                )
            })
            .collect();
    let event_path = if deleted_file { old_path } else { new_path };
    let want: BTreeMap<(String, String, String, u32), ChangeKind> =
        oracle::map_commit_oracle(&old_lines, &old_placed, &new_lines, &new_placed)
            .into_iter()
            .map(|((chain, name, arity), kind)| {
                ((event_path.to_string(), chain, name, arity), kind)
            })
            .collect();
    if got != want {
        return Err(format!(
            "map_commit mismatch (context {context})\nold:\n{}\nnew:\n{}\ngot:  {got:?}\nwant: {want:?}",
            old_lines.join("\n"),
            new_lines.join("\n")
        ));
    }
    if deleted_file && got.values().any(|k| *k != ChangeKind::Deleted) {
        return Err("deleted file produced a non-deleted event".into());
    }
    Ok(())
}

fn stub_descriptor(key: &MethodKey, stub: bool) -> MethodDescriptor {
    MethodDescriptor {
        key: key.clone(),
        kind: MethodKind::Method,
        start_line: 1,
        end_line: 1,
        statement_count: if stub { 0 } else { 1 },
        parameter_count: key.param_arity,
        returns_boolean_literal_only: false,
        is_override_of_tostring: false,
        getter_shape: None,
        super_call_shape: None,
        is_abstract_or_interface_stub: stub,
        facts: Default::default(),
    }
}

/// Random valid event history over a handful of keys, replayed by
/// `accumulate` and by the explicit state machine.
pub fn changeset_replay_case<R: Rng>(rng: &mut R) -> Result<(), String> {
    let nkeys = rng.gen_range(1..8);
    let keys: Vec<MethodKey> = (0..nkeys)
        .map(|i| MethodKey::new("src/A.java", "A", &format!("m{i}"), i % 2))
        .collect();
    let stub: Vec<bool> = (0..nkeys).map(|_| rng.gen_bool(0.1)).collect();
    let mut alive: Vec<bool> = (0..nkeys).map(|_| rng.gen_bool(0.5)).collect();
    let mut commits = Vec::new();
    let mut flat = Vec::new();
    for c in 0..rng.gen_range(1..6) {
        let id = format!("c{c}");
        let mut events = Vec::new();
        let mut chosen: Vec<usize> = (0..nkeys as usize).collect();
        chosen.shuffle(rng);
        chosen.truncate(rng.gen_range(0..=nkeys as usize));
        for k in chosen {
            let change = if alive[k] {
                if rng.gen_bool(0.35) {
                    ChangeKind::Deleted
                } else {
                    ChangeKind::Modified
                }
            } else {
                ChangeKind::Added
            };
            alive[k] = change != ChangeKind::Deleted;
            events.push(MethodChangeEvent {
                commit_id: id.clone(),
                key: keys[k].clone(),
                change,
            });
            flat.push((k, change));
        }
        let post_methods = (0..nkeys as usize)
            .filter(|&k| alive[k])
            .map(|k| stub_descriptor(&keys[k], stub[k]))
            .collect();
        commits.push(CommitEvents {
            commit_id: id,
            events,
            post_methods,
        });
    }
    let cs = accumulate(ticket(1), &commits).map_err(|e| e.to_string())?;
    let mut want = oracle::replay_oracle(&flat);
    for (k, outcome) in want.iter_mut() {
        if stub[*k] && matches!(outcome, Outcome::Kept(_)) {
            *outcome = Outcome::Pruned(PruneReason::Stub);
        }
    }
    let want: BTreeMap<MethodKey, Outcome> = want
        .into_iter()
        .map(|(k, o)| (keys[k].clone(), o))
        .collect();
    let got = outcomes(&cs);
    if got != want {
        return Err(format!(
            "accumulate mismatch for {flat:?}\ngot:  {got:?}\nwant: {want:?}"
        ));
    }
    let distinct: BTreeSet<usize> = flat.iter().map(|(k, _)| *k).collect();
    if cs.methods.len() + cs.pruned.len() != distinct.len() {
        return Err("methods + pruned does not cover every key with an event".into());
    }
    Ok(())
}

fn outcomes(cs: &TicketChangeset) -> BTreeMap<MethodKey, Outcome> {
    let mut out: BTreeMap<MethodKey, Outcome> = cs
        .methods
        .iter()
        .map(|(k, m): (&MethodKey, &ChangedMethod)| (k.clone(), Outcome::Kept(m.change)))
        .collect();
    for (k, r) in &cs.pruned {
        out.insert(k.clone(), Outcome::Pruned(*r));
    }
    out
}

/// A multi-commit ticket on one file: diffs are replayed over a snapshot,
/// parsed, mapped and accumulated, then compared with the changeset derived
/// from the sequence of file states alone.
pub fn changeset_state_case<R: Rng>(rng: &mut R) -> Result<(), String> {
    let path = "src/gen/Gen.java";
    let mut files: Vec<GenFile> = vec![javagen::random_file(rng)];
    for _ in 0..rng.gen_range(1..5) {
        let next = javagen::mutate(rng, files.last().unwrap());
        files.push(next);
    }
    let rendered: Vec<(Vec<String>, Vec<Placed>)> = files.iter().map(GenFile::render).collect();
    let commits: Vec<Commit> = rendered
        .windows(2)
        .enumerate()
        .map(|(i, w)| Commit {
            id: format!("c{i}"),
            timestamp: i as i64,
            message: "#1 step".into(),
            diffs: vec![lcs::file_diff(
                Some(path),
                Some(path),
                &w[0].0,
                &w[1].0,
                rng.gen_range(0..=3),
            )],
        })
        .collect();
    let snapshot = Snapshot::from_files([(path, rendered[0].0.join("\n"))]);
    let states = reconstruct_states(&commits, &snapshot, &["java".to_string()])
        .map_err(|e| e.to_string())?;
    for (i, s) in states.iter().enumerate() {
        if s.files[0].post.as_ref() != Some(&rendered[i + 1].0) {
            return Err(format!(
                "replay of commit c{i} does not reproduce its post-image"
            ));
        }
    }
    let mut warnings = Vec::new();
    let events = commit_events(&commits, &states, &mut warnings);
    if !warnings.is_empty() {
        return Err(format!("unexpected warnings: {warnings:?}"));
    }
    let cs = accumulate(ticket(1), &events).map_err(|e| e.to_string())?;
    let got: BTreeMap<(String, String, u32), Outcome> = outcomes(&cs)
        .into_iter()
        .map(|(k, o)| ((k.class_chain, k.name, k.param_arity), o))
        .collect();
    let want = oracle::state_oracle(&rendered);
    if got != want {
        let dump: Vec<String> = rendered.iter().map(|(l, _)| l.join("\n")).collect();
        return Err(format!(
            "changeset mismatch\nstates:\n{}\ngot:  {got:?}\nwant: {want:?}",
            dump.join("\n=====\n")
        ));
    }
    Ok(())
}

/// Random changeset and coverage: partition identity, brute-force tally,
/// and byte-identical JSON across two renderings.
pub fn partition_case<R: Rng>(rng: &mut R) -> Result<(), String> {
    let universe: Vec<MethodKey> = (0..rng.gen_range(0..30))
        .map(|i| {
            MethodKey::new(
                &format!("src/F{}.java", i % 4),
                "F",
                &format!("m{i}"),
                i % 3,
            )
        })
        .collect();
    let mut reports = Vec::new();
    for t in 0..rng.gen_range(1..5) {
        let methods: BTreeMap<MethodKey, ChangedMethod> = universe
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .map(|k| {
                (
                    k.clone(),
                    ChangedMethod {
                        change: ticketcov::changeset::FinalChange::Added,
                        descriptor: None,
                    },
                )
            })
            .collect();
        let cs = TicketChangeset {
            ticket: ticket(t + 1),
            methods,
            pruned: BTreeMap::new(),
        };
        let cov = CoverageSet {
            startup: universe
                .iter()
                .filter(|_| rng.gen_bool(0.2))
                .cloned()
                .collect(),
            test: universe
                .iter()
                .filter(|_| rng.gen_bool(0.6))
                .cloned()
                .collect(),
        };
        let classes = classify(&cs, &cov);
        let r = compute_report(&cs, &classes, None);
        if r.test_exclusive + r.startup_covered + r.untested != r.total {
            return Err(format!("partition broken: {r:?}"));
        }
        let (mut te, mut st, mut un) = (0, 0, 0);
        for k in cs.methods.keys() {
            if cov.startup.contains(k) {
                st += 1;
            } else if cov.test.contains(k) {
                te += 1;
            } else {
                un += 1;
            }
        }
        if (te, st, un, cs.methods.len() as u64)
            != (r.test_exclusive, r.startup_covered, r.untested, r.total)
        {
            return Err(format!(
                "tally mismatch: want {:?}, got {r:?}",
                (te, st, un)
            ));
        }
        let gaps: Vec<&MethodKey> = classes
            .iter()
            .filter(|(_, c)| **c == CoverageClass::Untested)
            .map(|(k, _)| k)
            .collect();
        if gaps.len() != r.gap_list.len() {
            return Err("gap list length differs from untested count".into());
        }
        reports.push(r);
    }
    let a = render_json(&reports);
    let b = render_json(&reports);
    if a != b {
        return Err("JSON differs between two renderings".into());
    }
    let back = reports_from_json(&a)?;
    let mut sorted = reports.clone();
    sorted.sort_by(|x, y| x.ticket.ticket_id.cmp(&y.ticket.ticket_id));
    if back != sorted {
        return Err("JSON does not read back to the same reports".into());
    }
    Ok(())
}
