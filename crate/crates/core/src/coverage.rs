//! Method-level coverage input (TSV and a JaCoCo XML subset) and the
//! startup/test classification of changed methods.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use quick_xml::events::{BytesStart, Event};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::changeset::TicketChangeset;
use crate::parser::MethodKey;

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("line {line}: malformed coverage record: {reason}")]
    MalformedCoverageLine { line: usize, reason: String },
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageSet {
    /// Methods executed during application startup, before any test ran.
    pub startup: BTreeSet<MethodKey>,
    /// Methods executed while the tests ran.
    pub test: BTreeSet<MethodKey>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageClass {
    TestExclusive,
    StartupCovered,
    Untested,
}

/// Reads `path<TAB>class_chain<TAB>name<TAB>param_arity` records.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_coverage_tsv<R: BufRead>(reader: R) -> Result<BTreeSet<MethodKey>, CoverageError> {
    let mut keys = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| CoverageError::MalformedCoverageLine {
            line: line_no,
            reason: reason.to_string(),
        };
        let cols: Vec<&str> = line.split('\t').collect();
        let [path, chain, name, arity] = cols[..] else {
            return Err(bad(&format!(
                "expected 4 tab-separated columns, found {}",
                cols.len()
            )));
        };
        if path.is_empty() || name.is_empty() {
            return Err(bad("empty path or method name"));
        }
        let arity: u32 = arity.trim().parse().map_err(|_| {
            bad(&format!(
                "param_arity `{arity}` is not a non-negative integer"
            ))
        })?;
        keys.insert(MethodKey::new(path, chain, name, arity));
    }
    Ok(keys)
}

/// How JaCoCo class names are mapped onto repository paths.
#[derive(Debug, Clone, Default)]
pub struct PathMapping {
    /// Source roots such as `src/main/java`, tried in order.
    pub source_roots: Vec<String>,
    /// Repository paths known to exist. When given, the first root under
    /// which the derived path exists wins; otherwise the first root is used.
    pub known_paths: BTreeSet<String>,
}

impl PathMapping {
    pub fn with_roots<I: IntoIterator<Item = S>, S: Into<String>>(roots: I) -> Self {
        PathMapping {
            source_roots: roots.into_iter().map(Into::into).collect(),
            known_paths: BTreeSet::new(),
        }
    }

    fn resolve(&self, relative: &str) -> String {
        let join = |root: &str| {
            let root = root.trim_end_matches('/');
            if root.is_empty() {
                relative.to_string()
            } else {
                format!("{root}/{relative}")
            }
        };
        if !self.known_paths.is_empty() {
            for root in &self.source_roots {
                let candidate = join(root);
                if self.known_paths.contains(&candidate) {
                    return candidate;
                }
            }
        }
        join(self.source_roots.first().map_or("", String::as_str))
    }

    /// Maps a JVM internal class name (`com/acme/Outer$Inner`) to the source
    /// path of its top-level class and the class chain.
    pub fn class_location(&self, internal_name: &str) -> (String, String) {
        let (package, binary) = internal_name
            .rsplit_once('/')
            .unwrap_or(("", internal_name));
        let segments: Vec<&str> = binary.split('$').collect();
        let top = segments[0];
        let relative = if package.is_empty() {
            format!("{top}.java")
        } else {
            format!("{package}/{top}.java")
        };
        let chain: Vec<String> = segments
            .iter()
            .map(|seg| {
                if !seg.is_empty() && seg.bytes().all(|b| b.is_ascii_digit()) {
                    format!("$anon{seg}")
                } else {
                    // local classes are compiled as Outer$1Local
                    seg.trim_start_matches(|c: char| c.is_ascii_digit())
                        .to_string()
                }
            })
            .collect();
        (self.resolve(&relative), chain.join("."))
    }
}

/// Splits a JVM method descriptor's parameter list into its types.
fn descriptor_params(desc: &str) -> Option<Vec<&str>> {
    let inner = desc.strip_prefix('(')?.split(')').next()?;
    let bytes = inner.as_bytes();
    let mut params = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        while bytes[i] == b'[' {
            i += 1;
            if i >= bytes.len() {
                return None;
            }
        }
        match bytes[i] {
            b'L' => {
                let end = inner[i..].find(';')? + i;
                i = end + 1;
            }
            b'B' | b'C' | b'D' | b'F' | b'I' | b'J' | b'S' | b'Z' => i += 1,
            _ => return None,
        }
        params.push(&inner[start..i]);
    }
    Some(params)
}

fn attr(e: &BytesStart<'_>, name: &[u8]) -> Result<Option<String>, CoverageError> {
    for a in e.attributes() {
        let a = a.map_err(|err| CoverageError::MalformedXml(err.to_string()))?;
        if a.key.local_name().as_ref() == name {
            let v = a
                .unescape_value()
                .map_err(|err| CoverageError::MalformedXml(err.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

struct OpenMethod {
    name: String,
    desc: String,
    covered: bool,
}

fn method_key(
    mapping: &PathMapping,
    class: &str,
    method: &OpenMethod,
) -> Result<Option<MethodKey>, CoverageError> {
    if method.name == "<clinit>"
        || method.name.starts_with("lambda$")
        || method.name.starts_with("access$")
    {
        return Ok(None);
    }
    let mut params = descriptor_params(&method.desc).ok_or_else(|| {
        CoverageError::MalformedXml(format!("bad method descriptor `{}`", method.desc))
    })?;
    let (path, chain) = mapping.class_location(class);
    let name = if method.name == "<init>" {
        let simple = chain.rsplit('.').next().unwrap_or(&chain);
        if simple.starts_with("$anon") {
            return Ok(None);
        }
        // inner-class constructors take the enclosing instance first
        if let Some((outer, _)) = class.rsplit_once('$') {
            if params.first() == Some(&format!("L{outer};").as_str()) {
                params.remove(0);
            }
        }
        simple.to_string()
    } else {
        method.name.clone()
    };
    Ok(Some(MethodKey::new(
        &path,
        &chain,
        &name,
        params.len() as u32,
    )))
}

/// Reads a JaCoCo XML report and returns every method whose METHOD counter
/// reports at least one covered method. Namespaces and elements other than
/// class, method and counter are ignored.
pub fn parse_jacoco_xml<R: BufRead>(
    mut reader: R,
    mapping: &PathMapping,
) -> Result<BTreeSet<MethodKey>, CoverageError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut xml = quick_xml::Reader::from_str(&text);
    xml.config_mut().trim_text(true);

    let mut keys = BTreeSet::new();
    let mut classes: Vec<Option<String>> = Vec::new();
    let mut method: Option<OpenMethod> = None;
    let mut depth = 0usize;
    let mut seen_root = false;
    loop {
        let event = xml.read_event().map_err(|e| {
            CoverageError::MalformedXml(format!("at byte {}: {e}", xml.buffer_position()))
        })?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                seen_root = true;
                let open = matches!(event, Event::Start(_));
                if open {
                    depth += 1;
                }
                match e.local_name().as_ref() {
                    b"class" if open => classes.push(attr(e, b"name")?),
                    b"method" if open => {
                        method = Some(OpenMethod {
                            name: attr(e, b"name")?.unwrap_or_default(),
                            desc: attr(e, b"desc")?.unwrap_or_default(),
                            covered: false,
                        });
                    }
                    b"counter" => {
                        if let Some(m) = method.as_mut() {
                            if attr(e, b"type")?.as_deref() == Some("METHOD") {
                                let covered = attr(e, b"covered")?.unwrap_or_default();
                                let covered: u64 = covered.trim().parse().map_err(|_| {
                                    CoverageError::MalformedXml(format!(
                                        "counter covered=`{covered}` is not a number"
                                    ))
                                })?;
                                m.covered |= covered > 0;
                            }
                        }
                    }
                    _ => {}
                }
            }
            Event::End(ref e) => {
                depth = depth.saturating_sub(1);
                match e.local_name().as_ref() {
                    b"class" => {
                        classes.pop();
                    }
                    b"method" => {
                        if let Some(m) = method.take() {
                            let class = classes.last().cloned().flatten();
                            if let (true, Some(class)) = (m.covered, class) {
                                if let Some(key) = method_key(mapping, &class, &m)? {
                                    keys.insert(key);
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !seen_root {
        return Err(CoverageError::MalformedXml("no root element".into()));
    }
    if depth != 0 {
        return Err(CoverageError::MalformedXml(
            "unexpected end of document".into(),
        ));
    }
    Ok(keys)
}

/// Assigns each changeset method its coverage class. Startup coverage wins
/// over test coverage; coverage of methods outside the changeset is ignored.
pub fn classify(
    changeset: &TicketChangeset,
    cov: &CoverageSet,
) -> BTreeMap<MethodKey, CoverageClass> {
    changeset
        .methods
        .keys()
        .map(|key| (key.clone(), classify_key(key, cov)))
        .collect()
}

pub fn classify_key(key: &MethodKey, cov: &CoverageSet) -> CoverageClass {
    if cov.startup.contains(key) {
        CoverageClass::StartupCovered
    } else if cov.test.contains(key) {
        CoverageClass::TestExclusive
    } else {
        CoverageClass::Untested
    }
}
