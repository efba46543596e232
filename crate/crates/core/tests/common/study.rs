//! Deterministic synthetic history shaped like a mid-sized industrial study:
//! 54 tickets, 511 changed methods, of which 364 are covered only by tests,
//! 37 also at startup, and 110 not at all. 28 of the untested methods are
//! trivial (4 toString, 12 getters, 7 delegating constructors, 5 boolean
//! literal returners).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ticketcov::history::{Commit, FileDiff};
use ticketcov::pipeline::{split_lines, Snapshot};

use super::lcs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Tested,
    Startup,
    Untested,
    ToString,
    Getter,
    Constructor,
    BooleanLiteral,
}

impl Role {
    pub fn is_trivial(self) -> bool {
        matches!(
            self,
            Role::ToString | Role::Getter | Role::Constructor | Role::BooleanLiteral
        )
    }
}

pub const TICKETS: usize = 54;
pub const METHODS: u64 = 511;
pub const TESTED: u64 = 364;
pub const STARTUP: u64 = 37;
pub const UNTESTED: u64 = 110;

#[derive(Debug, Clone)]
pub struct StudyTicket {
    pub id: u32,
    pub roles: Vec<Role>,
}

#[derive(Debug, Clone)]
pub struct StudyCorpus {
    pub tickets: Vec<StudyTicket>,
    pub commits: Vec<Commit>,
    pub snapshot: BTreeMap<String, String>,
    pub coverage_test: String,
    pub coverage_startup: String,
    pub ticket_types: String,
}

impl StudyCorpus {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot::from_files(self.snapshot.clone())
    }
}

fn class_source(class: &str, role: Role, variant: u32) -> String {
    let body = match role {
        Role::Tested | Role::Startup | Role::Untested => format!(
            "    public int compute(int a) {{\n        int b = a * {variant};\n        return b + 1;\n    }}\n"
        ),
        Role::ToString => "    private int id;\n\n    @Override\n    public String toString() {\n        return \"Item\" + id;\n    }\n".to_string(),
        Role::Getter => "    private int value;\n\n    public int getValue() {\n        return value;\n    }\n".to_string(),
        Role::Constructor => format!(
            "    private int size;\n\n    public {class}(int size) {{\n        super(size);\n        this.size = size;\n    }}\n"
        ),
        Role::BooleanLiteral => "    public boolean enabled() {\n        return true;\n    }\n".to_string(),
    };
    let extends = if role == Role::Constructor {
        " extends Base"
    } else {
        ""
    };
    format!("package study;\n\npublic class {class}{extends} {{\n{body}}}\n")
}

/// Name and arity of the single method a role's class declares.
fn method_of(class: &str, role: Role) -> (String, u32) {
    match role {
        Role::Tested | Role::Startup | Role::Untested => ("compute".into(), 1),
        Role::ToString => ("toString".into(), 0),
        Role::Getter => ("getValue".into(), 0),
        Role::Constructor => (class.to_string(), 1),
        Role::BooleanLiteral => ("enabled".into(), 0),
    }
}

fn add_file(path: &str, text: &str) -> FileDiff {
    lcs::file_diff(None, Some(path), &[], &split_lines(text), 3)
}

fn edit_file(path: &str, old: &str, new: &str) -> FileDiff {
    lcs::file_diff(
        Some(path),
        Some(path),
        &split_lines(old),
        &split_lines(new),
        3,
    )
}

fn delete_file(path: &str, old: &str) -> FileDiff {
    lcs::file_diff(Some(path), None, &split_lines(old), &[], 3)
}

pub fn generate(seed: u64) -> StudyCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut roles = Vec::new();
    roles.extend(std::iter::repeat_n(Role::Tested, TESTED as usize));
    roles.extend(std::iter::repeat_n(Role::Startup, STARTUP as usize));
    roles.extend(std::iter::repeat_n(Role::Untested, 82));
    roles.extend(std::iter::repeat_n(Role::ToString, 4));
    roles.extend(std::iter::repeat_n(Role::Getter, 12));
    roles.extend(std::iter::repeat_n(Role::Constructor, 7));
    roles.extend(std::iter::repeat_n(Role::BooleanLiteral, 5));
    assert_eq!(roles.len() as u64, METHODS);
    roles.shuffle(&mut rng);

    // 25 tickets of 10 methods and 29 of 9: 511 in total
    let mut sizes: Vec<usize> = std::iter::repeat_n(10, 25)
        .chain(std::iter::repeat_n(9, 29))
        .collect();
    sizes.shuffle(&mut rng);

    let mut tickets = Vec::new();
    let mut offset = 0;
    for (i, size) in sizes.iter().enumerate() {
        tickets.push(StudyTicket {
            id: 200 + 13 * i as u32,
            roles: roles[offset..offset + size].to_vec(),
        });
        offset += size;
    }

    let mut snapshot = BTreeMap::new();
    let mut commits = Vec::new();
    let mut test_cov = String::from("# test coverage\n");
    let mut startup_cov = String::from("# startup coverage\n");
    let mut types = BTreeMap::new();

    for (i, t) in tickets.iter().enumerate() {
        let kind = ["feature", "bug", "maintenance"][i % 3];
        types.insert(t.id.to_string(), kind);
        let mut first = Vec::new();
        let mut second = Vec::new();
        for (j, &role) in t.roles.iter().enumerate() {
            let class = format!("T{}M{}", t.id, j);
            let path = format!("src/main/java/study/{class}.java");
            let text = class_source(&class, role, j as u32 + 2);
            let plain = matches!(role, Role::Tested | Role::Startup | Role::Untested);
            if plain && j == 0 && i % 4 == 1 {
                // method existed before the ticket, which modifies it
                let before = class_source(&class, role, 97);
                first.push(edit_file(&path, &before, &text));
                snapshot.insert(path.clone(), before);
            } else if plain && j == 1 && i % 3 == 0 {
                // added, then reworked in a later commit of the same ticket
                let draft = class_source(&class, role, 55);
                first.push(add_file(&path, &draft));
                second.push(edit_file(&path, &draft, &text));
            } else {
                first.push(add_file(&path, &text));
            }
            let (name, arity) = method_of(&class, role);
            let line = format!("{path}\t{class}\t{name}\t{arity}\n");
            match role {
                Role::Tested => test_cov.push_str(&line),
                Role::Startup => {
                    startup_cov.push_str(&line);
                    if j % 2 == 0 {
                        test_cov.push_str(&line);
                    }
                }
                _ => {}
            }
        }
        if i % 5 == 2 {
            // temporary helper that does not survive the ticket
            let path = format!("src/main/java/study/Tmp{}.java", t.id);
            let text = format!("package study;\n\nclass Tmp{} {{\n    void scratch() {{\n        work();\n    }}\n}}\n", t.id);
            first.push(add_file(&path, &text));
            second.push(delete_file(&path, &text));
            // covered, which must not matter once it is gone
            test_cov.push_str(&format!("{path}\tTmp{}\tscratch\t0\n", t.id));
        }
        if i % 7 == 3 {
            // pre-existing code removed by the ticket
            let path = format!("src/main/java/study/Old{}.java", t.id);
            let text = format!("package study;\n\nclass Old{} {{\n    void legacy() {{\n        work();\n    }}\n}}\n", t.id);
            snapshot.insert(path.clone(), text.clone());
            first.push(delete_file(&path, &text));
        }
        commits.push(Commit {
            id: format!("{:040x}", 2 * i + 1),
            timestamp: 1_000_000 + 100 * i as i64,
            message: format!("#{} implement part one", t.id),
            diffs: first,
        });
        if !second.is_empty() {
            commits.push(Commit {
                id: format!("{:040x}", 2 * i + 2),
                // lands after commits of later tickets
                timestamp: 1_000_000 + 100 * (i as i64 + 3) + 50,
                message: format!("#{} follow-up", t.id),
                diffs: second,
            });
        }
    }
    commits.push(Commit {
        id: "f".repeat(40),
        timestamp: 999_999,
        message: "Bump build tooling".into(),
        diffs: vec![add_file("build.gradle", "plugins {\n}\n")],
    });
    commits.sort_by_key(|c| c.timestamp);

    StudyCorpus {
        tickets,
        commits,
        snapshot,
        coverage_test: test_cov,
        coverage_startup: startup_cov,
        ticket_types: serde_json::to_string(&types).unwrap(),
    }
}
