//! Shallow parser for Java-like sources.
//!
//! The parser tokenizes just enough (comments, string/char literals, text
//! blocks, identifiers, delimiters) to recover method and constructor
//! declarations with their line ranges, then walks type bodies and method
//! bodies recursively. There is no grammar beyond that: generics are skipped
//! heuristically, types are never resolved, and expressions are opaque except
//! for `new T(..) { .. }` bodies, which become anonymous classes.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unbalanced delimiters at line {line}")]
    UnbalancedBraces { line: u32 },
}

/// Join identity of a method across parser, changesets and coverage.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodKey {
    pub path: String,
    /// Dot-joined nesting of declared type names; anonymous classes appear as
    /// `$anon<N>`, numbered per enclosing type from 1.
    pub class_chain: String,
    pub name: String,
    pub param_arity: u32,
}

impl MethodKey {
    pub fn new(path: &str, class_chain: &str, name: &str, param_arity: u32) -> Self {
        MethodKey {
            path: path.to_string(),
            class_chain: class_chain.to_string(),
            name: name.to_string(),
            param_arity,
        }
    }

    /// The key without its path. Used to match methods across a file rename.
    pub fn identity(&self) -> (&str, &str, u32) {
        (&self.class_chain, &self.name, self.param_arity)
    }
}

impl fmt::Display for MethodKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}.{}/{}",
            self.path, self.class_chain, self.name, self.param_arity
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Method,
    Constructor,
}

/// Raw body facts recorded while parsing; the shape flags are derived from
/// these by [`classify_shapes`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BodyFacts {
    /// Set when the body is exactly `return <identifier>;` or
    /// `return this.<identifier>;`.
    pub returned_identifier: Option<String>,
    /// Whether a field with that identifier is declared in the same
    /// top-level type.
    pub returned_identifier_is_field: bool,
    /// Body is exactly `return true;` or `return false;`.
    pub returns_boolean_literal: bool,
    /// First statement is `super(...);`.
    pub leading_super_call: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDescriptor {
    pub key: MethodKey,
    pub kind: MethodKind,
    /// First line of the declaration, annotations included.
    pub start_line: u32,
    /// Line of the closing brace (or of the `;` for bodiless declarations).
    pub end_line: u32,
    pub statement_count: u32,
    pub parameter_count: u32,
    pub returns_boolean_literal_only: bool,
    pub is_override_of_tostring: bool,
    pub getter_shape: Option<String>,
    /// Number of statements after a leading `super(...)` call, constructors only.
    pub super_call_shape: Option<u32>,
    pub is_abstract_or_interface_stub: bool,
    pub facts: BodyFacts,
}

impl MethodDescriptor {
    pub fn contains_line(&self, line: u32) -> bool {
        self.start_line <= line && line <= self.end_line
    }

    pub fn span(&self) -> u32 {
        self.end_line - self.start_line
    }
}

fn capitalized(ident: &str) -> String {
    let mut chars = ident.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn is_getter_name(name: &str, field: &str) -> bool {
    let cap = capitalized(field);
    name.strip_prefix("get") == Some(cap.as_str()) || name.strip_prefix("is") == Some(cap.as_str())
}

/// Derives the shape flags from the recorded body facts. Idempotent.
pub fn classify_shapes(mut d: MethodDescriptor) -> MethodDescriptor {
    let is_method = d.kind == MethodKind::Method;
    d.is_override_of_tostring = is_method && d.key.name == "toString" && d.parameter_count == 0;
    d.returns_boolean_literal_only = d.facts.returns_boolean_literal && d.statement_count == 1;
    d.getter_shape = match &d.facts.returned_identifier {
        Some(ident)
            if is_method
                && d.parameter_count == 0
                && d.statement_count == 1
                && d.facts.returned_identifier_is_field
                && is_getter_name(&d.key.name, ident) =>
        {
            Some(ident.clone())
        }
        _ => None,
    };
    d.super_call_shape = if d.kind == MethodKind::Constructor && d.facts.leading_super_call {
        Some(d.statement_count.saturating_sub(1))
    } else {
        None
    };
    d
}

// ---------------------------------------------------------------------------
// Tokens

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Punct(char),
    Arrow,
    ColonColon,
    Literal,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: u32,
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_part(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut line = 1u32;
    let mut i = 0;
    let n = chars.len();
    while i < n {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < n && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                i += 2;
                while i < n && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    if chars[i] == '\n' {
                        line += 1;
                    }
                    i += 1;
                }
                i = (i + 2).min(n);
            }
            '"' if chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"') => {
                let start_line = line;
                i += 3;
                while i < n {
                    match chars[i] {
                        '\\' => {
                            if chars.get(i + 1) == Some(&'\n') {
                                line += 1;
                            }
                            i += 2;
                        }
                        '"' if chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"') => {
                            i += 3;
                            break;
                        }
                        '\n' => {
                            line += 1;
                            i += 1;
                        }
                        _ => i += 1,
                    }
                }
                toks.push(Token {
                    tok: Tok::Literal,
                    line: start_line,
                });
            }
            '"' | '\'' => {
                let quote = c;
                i += 1;
                while i < n && chars[i] != quote && chars[i] != '\n' {
                    if chars[i] == '\\' && chars.get(i + 1).is_some_and(|&c| c != '\n') {
                        i += 1;
                    }
                    i += 1;
                }
                if i < n && chars[i] == quote {
                    i += 1;
                }
                toks.push(Token {
                    tok: Tok::Literal,
                    line,
                });
            }
            c if c.is_ascii_digit()
                || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) =>
            {
                i += 1;
                while i < n && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                toks.push(Token {
                    tok: Tok::Literal,
                    line,
                });
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < n && is_ident_part(chars[i]) {
                    i += 1;
                }
                toks.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line,
                });
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                toks.push(Token {
                    tok: Tok::Arrow,
                    line,
                });
                i += 2;
            }
            ':' if chars.get(i + 1) == Some(&':') => {
                toks.push(Token {
                    tok: Tok::ColonColon,
                    line,
                });
                i += 2;
            }
            c => {
                toks.push(Token {
                    tok: Tok::Punct(c),
                    line,
                });
                i += 1;
            }
        }
    }
    toks
}

const NONE: usize = usize::MAX;

/// Pairs `(`/`)`, `[`/`]` and `{`/`}`. Angle brackets are never paired.
fn match_delimiters(toks: &[Token]) -> Result<Vec<usize>, ParseError> {
    let mut matching = vec![NONE; toks.len()];
    let mut stack: Vec<(usize, char)> = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if let Tok::Punct(c) = t.tok {
            match c {
                '(' | '[' | '{' => stack.push((i, c)),
                ')' | ']' | '}' => {
                    let want = match c {
                        ')' => '(',
                        ']' => '[',
                        _ => '{',
                    };
                    match stack.pop() {
                        Some((j, open)) if open == want => {
                            matching[i] = j;
                            matching[j] = i;
                        }
                        _ => return Err(ParseError::UnbalancedBraces { line: t.line }),
                    }
                }
                _ => {}
            }
        }
    }
    match stack.first() {
        Some(&(j, _)) => Err(ParseError::UnbalancedBraces { line: toks[j].line }),
        None => Ok(matching),
    }
}

const RESERVED: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
    "true",
    "false",
    "null",
    "yield",
];

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
    "non",
    "-",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TypeKind {
    Class,
    Interface,
    Enum,
    Record,
    Annotation,
    Anonymous,
}

struct TypeCtx<'c> {
    chain: &'c str,
    name: Option<&'c str>,
    kind: TypeKind,
    record_arity: Option<u32>,
}

struct Found {
    descriptor: MethodDescriptor,
    top_level: usize,
}

struct Walker<'a> {
    path: &'a str,
    toks: &'a [Token],
    matching: Vec<usize>,
    found: Vec<Found>,
    anon_counters: HashMap<String, usize>,
    fields: Vec<HashSet<String>>,
    top: usize,
}

impl<'a> Walker<'a> {
    fn ident(&self, i: usize) -> Option<&str> {
        match self.toks.get(i).map(|t| &t.tok) {
            Some(Tok::Ident(s)) => Some(s),
            _ => None,
        }
    }

    fn is_ident(&self, i: usize, s: &str) -> bool {
        self.ident(i) == Some(s)
    }

    fn is_punct(&self, i: usize, c: char) -> bool {
        matches!(self.toks.get(i).map(|t| &t.tok), Some(Tok::Punct(p)) if *p == c)
    }

    fn is_opener(&self, i: usize) -> bool {
        self.is_punct(i, '(') || self.is_punct(i, '[') || self.is_punct(i, '{')
    }

    fn line(&self, i: usize) -> u32 {
        self.toks[i.min(self.toks.len() - 1)].line
    }

    fn after_dot(&self, i: usize) -> bool {
        i > 0 && self.is_punct(i - 1, '.')
    }

    /// Recognizes the start of a type declaration at `i`, returning its kind
    /// and the index of its name token.
    fn type_decl_at(&self, i: usize) -> Option<(TypeKind, usize)> {
        if self.after_dot(i) {
            return None;
        }
        if self.is_punct(i, '@') && self.is_ident(i + 1, "interface") {
            return self.ident(i + 2).map(|_| (TypeKind::Annotation, i + 2));
        }
        let kind = match self.ident(i)? {
            "class" => TypeKind::Class,
            "interface" => TypeKind::Interface,
            "enum" => TypeKind::Enum,
            "record" => TypeKind::Record,
            _ => return None,
        };
        let name = self.ident(i + 1)?;
        if RESERVED.contains(&name) {
            return None;
        }
        if kind == TypeKind::Record && !(self.is_punct(i + 2, '(') || self.is_punct(i + 2, '<')) {
            return None;
        }
        Some((kind, i + 1))
    }

    fn skip_annotation(&self, mut i: usize) -> usize {
        // at '@' Ident
        i += 2;
        while self.is_punct(i, '.') && self.ident(i + 1).is_some() {
            i += 2;
        }
        if self.is_punct(i, '(') {
            i = self.matching[i] + 1;
        }
        i
    }

    fn next_anon(&mut self, chain: &str) -> String {
        let n = self.anon_counters.entry(chain.to_string()).or_insert(0);
        *n += 1;
        format!("{chain}.$anon{n}")
    }

    /// Counts parameters in the list delimited by `open`.
    fn arity(&self, open: usize) -> u32 {
        let close = self.matching[open];
        if close == open + 1 {
            return 0;
        }
        let mut commas = 0;
        let mut angle = 0i32;
        let mut k = open + 1;
        while k < close {
            if self.is_opener(k) {
                k = self.matching[k] + 1;
                continue;
            }
            if self.is_punct(k, '<') {
                angle += 1;
            } else if self.is_punct(k, '>') {
                angle = (angle - 1).max(0);
            } else if self.is_punct(k, ',') && angle == 0 {
                commas += 1;
            }
            k += 1;
        }
        commas + 1
    }

    fn record_arity(&self, name_idx: usize) -> u32 {
        let mut k = name_idx + 1;
        if self.is_punct(k, '<') {
            let mut depth = 0;
            while k < self.toks.len() {
                if self.is_punct(k, '<') {
                    depth += 1;
                } else if self.is_punct(k, '>') {
                    depth -= 1;
                    if depth == 0 {
                        k += 1;
                        break;
                    }
                }
                k += 1;
            }
        }
        if self.is_punct(k, '(') {
            self.arity(k)
        } else {
            0
        }
    }

    fn record_component_names(&self, name_idx: usize) -> Vec<String> {
        let mut k = name_idx + 1;
        while k < self.toks.len() && !self.is_punct(k, '(') && !self.is_punct(k, '{') {
            k += 1;
        }
        let mut names = Vec::new();
        if !self.is_punct(k, '(') {
            return names;
        }
        let close = self.matching[k];
        let mut j = k + 1;
        while j < close {
            if self.is_opener(j) {
                j = self.matching[j] + 1;
                continue;
            }
            if (self.is_punct(j + 1, ',') || j + 1 == close) && self.ident(j).is_some() {
                names.push(self.ident(j).unwrap_or_default().to_string());
            }
            j += 1;
        }
        names
    }

    fn find_open_brace(&self, mut k: usize, end: usize) -> Option<usize> {
        while k < end {
            if self.is_punct(k, '{') {
                return Some(k);
            }
            if self.is_punct(k, ';') {
                return None;
            }
            if self.is_opener(k) {
                k = self.matching[k] + 1;
            } else {
                k += 1;
            }
        }
        None
    }

    fn walk_nested_type(
        &mut self,
        kind: TypeKind,
        name_idx: usize,
        end: usize,
        chain: &str,
    ) -> Option<usize> {
        let brace = self.find_open_brace(name_idx + 1, end)?;
        let name = self.ident(name_idx).unwrap_or_default().to_string();
        let nested = if chain.is_empty() {
            name.clone()
        } else {
            format!("{chain}.{name}")
        };
        let record_arity = if kind == TypeKind::Record {
            for field in self.record_component_names(name_idx) {
                self.fields[self.top].insert(field);
            }
            Some(self.record_arity(name_idx))
        } else {
            None
        };
        self.walk_type_body(
            brace,
            &TypeCtx {
                chain: &nested,
                name: Some(&name),
                kind,
                record_arity,
            },
        );
        Some(self.matching[brace] + 1)
    }

    fn walk_unit(&mut self) {
        let mut i = 0;
        let n = self.toks.len();
        while i < n {
            if self.is_punct(i, '@')
                && !self.is_ident(i + 1, "interface")
                && self.ident(i + 1).is_some()
            {
                i = self.skip_annotation(i);
                continue;
            }
            if let Some((kind, name_idx)) = self.type_decl_at(i) {
                self.fields.push(HashSet::new());
                self.top = self.fields.len() - 1;
                match self.walk_nested_type(kind, name_idx, n, "") {
                    Some(next) => i = next,
                    None => i = name_idx + 1,
                }
                continue;
            }
            if self.is_opener(i) {
                i = self.matching[i] + 1;
                continue;
            }
            i += 1;
        }
    }

    fn walk_enum_constants(&mut self, mut i: usize, close: usize, chain: &str) -> usize {
        loop {
            while i < close && self.is_punct(i, '@') && self.ident(i + 1).is_some() {
                i = self.skip_annotation(i);
            }
            if i >= close {
                return close;
            }
            if self.is_punct(i, ';') {
                return i + 1;
            }
            if self.is_punct(i, ',') {
                i += 1;
                continue;
            }
            if self.ident(i).is_none() {
                return i;
            }
            let next_is_constant_tail = i + 1 == close
                || self.is_punct(i + 1, '(')
                || self.is_punct(i + 1, '{')
                || self.is_punct(i + 1, ',')
                || self.is_punct(i + 1, ';');
            if !next_is_constant_tail {
                return i;
            }
            i += 1;
            if self.is_punct(i, '(') {
                let end = self.matching[i];
                self.walk_code(i + 1, end, chain);
                i = end + 1;
            }
            if self.is_punct(i, '{') {
                let anon = self.next_anon(chain);
                self.walk_type_body(
                    i,
                    &TypeCtx {
                        chain: &anon,
                        name: None,
                        kind: TypeKind::Anonymous,
                        record_arity: None,
                    },
                );
                i = self.matching[i] + 1;
            }
        }
    }

    fn walk_type_body(&mut self, open: usize, ctx: &TypeCtx<'_>) {
        let close = self.matching[open];
        let mut i = open + 1;
        if ctx.kind == TypeKind::Enum {
            i = self.walk_enum_constants(i, close, ctx.chain);
        }
        while i < close {
            if self.is_punct(i, ';') {
                i += 1;
                continue;
            }
            let start = i;
            let mut j = i;
            let mut first_paren = None;
            let mut type_decl = None;
            let mut end_kind = None;
            while j < close {
                if self.is_punct(j, '@')
                    && self.ident(j + 1).is_some()
                    && !self.is_ident(j + 1, "interface")
                {
                    j = self.skip_annotation(j);
                    continue;
                }
                if type_decl.is_none() && first_paren.is_none() {
                    if let Some(found) = self.type_decl_at(j) {
                        type_decl = Some(found);
                        j = found.1 + 1;
                        continue;
                    }
                }
                match &self.toks[j].tok {
                    Tok::Punct('(') => {
                        if first_paren.is_none() && type_decl.is_none() {
                            first_paren = Some(j);
                        }
                        j = self.matching[j] + 1;
                        continue;
                    }
                    Tok::Punct('[') => {
                        j = self.matching[j] + 1;
                        continue;
                    }
                    Tok::Punct('=') if type_decl.is_none() => {
                        end_kind = Some('=');
                        break;
                    }
                    Tok::Punct(';') => {
                        end_kind = Some(';');
                        break;
                    }
                    Tok::Punct('{') => {
                        end_kind = Some('{');
                        break;
                    }
                    _ => j += 1,
                }
            }
            match end_kind {
                None => break,
                Some('=') => {
                    let mut semi = j + 1;
                    while semi < close && !self.is_punct(semi, ';') {
                        if self.is_opener(semi) {
                            semi = self.matching[semi] + 1;
                        } else {
                            semi += 1;
                        }
                    }
                    self.collect_field_names(start, semi.min(close));
                    self.walk_code(j + 1, semi.min(close), ctx.chain);
                    i = semi + 1;
                }
                Some(';') => {
                    match (type_decl, first_paren) {
                        (None, Some(paren)) => {
                            self.emit_method(start, paren, None, j, ctx);
                        }
                        (None, None) => self.collect_field_names(start, j),
                        _ => {}
                    }
                    i = j + 1;
                }
                _ => {
                    let body_close = self.matching[j];
                    if let Some((kind, name_idx)) = type_decl {
                        self.walk_nested_type(kind, name_idx, body_close + 1, ctx.chain);
                    } else if let Some(paren) = first_paren {
                        if !self.emit_method(start, paren, Some(j), body_close, ctx) {
                            self.walk_code(j + 1, body_close, ctx.chain);
                        }
                    } else if self.is_compact_constructor(start, j, ctx) {
                        self.emit_compact_constructor(start, j, ctx);
                    } else {
                        // initializer block or something unrecognized
                        self.walk_code(j + 1, body_close, ctx.chain);
                    }
                    i = body_close + 1;
                }
            }
        }
    }

    fn is_compact_constructor(&self, start: usize, brace: usize, ctx: &TypeCtx<'_>) -> bool {
        if ctx.kind != TypeKind::Record {
            return false;
        }
        let mut names = Vec::new();
        let mut k = start;
        while k < brace {
            if self.is_punct(k, '@') && self.ident(k + 1).is_some() {
                k = self.skip_annotation(k);
                continue;
            }
            match self.ident(k) {
                Some(id) if MODIFIERS.contains(&id) => {}
                Some(id) => names.push(id),
                None => return false,
            }
            k += 1;
        }
        names.len() == 1 && Some(names[0]) == ctx.name
    }

    fn emit_compact_constructor(&mut self, start: usize, brace: usize, ctx: &TypeCtx<'_>) {
        let close = self.matching[brace];
        let name = ctx.name.unwrap_or_default().to_string();
        let arity = ctx.record_arity.unwrap_or(0);
        self.push_descriptor(
            start,
            &name,
            arity,
            MethodKind::Constructor,
            Some(brace),
            close,
            ctx.chain,
        );
        self.walk_code(brace + 1, close, ctx.chain);
    }

    /// Emits a method or constructor whose parameter list opens at `paren`.
    /// Returns false when the header does not look like a declaration.
    fn emit_method(
        &mut self,
        start: usize,
        paren: usize,
        body: Option<usize>,
        end: usize,
        ctx: &TypeCtx<'_>,
    ) -> bool {
        if paren == 0 {
            return false;
        }
        let Some(name) = self.ident(paren - 1).map(str::to_string) else {
            return false;
        };
        if RESERVED.contains(&name.as_str()) {
            return false;
        }
        let kind = if ctx.name == Some(name.as_str()) && ctx.kind != TypeKind::Anonymous {
            MethodKind::Constructor
        } else {
            MethodKind::Method
        };
        let arity = self.arity(paren);
        self.push_descriptor(start, &name, arity, kind, body, end, ctx.chain);
        if let Some(open) = body {
            self.walk_code(open + 1, end, ctx.chain);
        }
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn push_descriptor(
        &mut self,
        start: usize,
        name: &str,
        arity: u32,
        kind: MethodKind,
        body: Option<usize>,
        end: usize,
        chain: &str,
    ) {
        let (statement_count, facts) = match body {
            Some(open) => self.body_facts(open),
            None => (0, BodyFacts::default()),
        };
        let descriptor = MethodDescriptor {
            key: MethodKey::new(self.path, chain, name, arity),
            kind,
            start_line: self.line(start),
            end_line: self.line(end),
            statement_count,
            parameter_count: arity,
            returns_boolean_literal_only: false,
            is_override_of_tostring: false,
            getter_shape: None,
            super_call_shape: None,
            is_abstract_or_interface_stub: body.is_none(),
            facts,
        };
        self.found.push(Found {
            descriptor,
            top_level: self.top,
        });
    }

    fn collect_field_names(&mut self, start: usize, end: usize) {
        let mut names = Vec::new();
        let mut angle = 0i32;
        let mut after_eq = false;
        let mut prev_ident: Option<&str> = None;
        let mut k = start;
        while k < end {
            if self.is_punct(k, '@') && self.ident(k + 1).is_some() && !after_eq {
                k = self.skip_annotation(k);
                continue;
            }
            if self.is_punct(k, '[') && !after_eq {
                if let Some(p) = prev_ident.take() {
                    names.push(p);
                }
                k = self.matching[k] + 1;
                continue;
            }
            if self.is_opener(k) {
                k = self.matching[k] + 1;
                prev_ident = None;
                continue;
            }
            match &self.toks[k].tok {
                Tok::Ident(s) => prev_ident = Some(s),
                Tok::Punct('<') if !after_eq => {
                    angle += 1;
                    prev_ident = None;
                }
                Tok::Punct('>') if !after_eq => {
                    angle = (angle - 1).max(0);
                    prev_ident = None;
                }
                Tok::Punct('=') if angle == 0 && !after_eq => {
                    if let Some(p) = prev_ident.take() {
                        names.push(p);
                    }
                    after_eq = true;
                }
                Tok::Punct(',') if angle == 0 => {
                    if !after_eq {
                        if let Some(p) = prev_ident.take() {
                            names.push(p);
                        }
                    }
                    after_eq = false;
                }
                _ => prev_ident = None,
            }
            k += 1;
        }
        if !after_eq {
            if let Some(p) = prev_ident {
                names.push(p);
            }
        }
        let names: Vec<String> = names
            .into_iter()
            .filter(|n| !RESERVED.contains(n))
            .map(str::to_string)
            .collect();
        if let Some(set) = self.fields.get_mut(self.top) {
            set.extend(names);
        }
    }

    /// Scans statements and expressions for anonymous and local classes.
    fn walk_code(&mut self, start: usize, end: usize, chain: &str) {
        let mut k = start;
        while k < end {
            if self.is_punct(k, '{') && self.is_anonymous_body(k) {
                let anon = self.next_anon(chain);
                self.walk_type_body(
                    k,
                    &TypeCtx {
                        chain: &anon,
                        name: None,
                        kind: TypeKind::Anonymous,
                        record_arity: None,
                    },
                );
                k = self.matching[k] + 1;
                continue;
            }
            if let Some((kind, name_idx)) = self.type_decl_at(k) {
                if let Some(next) = self.walk_nested_type(kind, name_idx, end, chain) {
                    k = next;
                    continue;
                }
            }
            k += 1;
        }
    }

    /// `{` preceded by `new Type(...)`.
    fn is_anonymous_body(&self, brace: usize) -> bool {
        if brace == 0 || !self.is_punct(brace - 1, ')') {
            return false;
        }
        let mut b = self.matching[brace - 1];
        while b > 0 {
            b -= 1;
            match &self.toks[b].tok {
                Tok::Ident(s) if s == "new" => return true,
                Tok::Ident(s) if RESERVED.contains(&s.as_str()) => return false,
                Tok::Ident(_) => {}
                Tok::Punct('.' | '<' | '>' | ',' | '?' | '&') => {}
                _ => return false,
            }
        }
        false
    }

    // -- statements ---------------------------------------------------------

    fn skip_statement(&self, k: usize, end: usize) -> usize {
        if k >= end {
            return end;
        }
        if self.is_punct(k, ';') {
            return k + 1;
        }
        if self.is_punct(k, '{') {
            return self.matching[k] + 1;
        }
        if let Some(word) = self.ident(k) {
            match word {
                "if" | "while" | "for" | "switch" | "synchronized" => {
                    let mut m = k + 1;
                    if self.is_punct(m, '(') {
                        m = self.matching[m] + 1;
                    }
                    if word == "switch" || word == "synchronized" {
                        if self.is_punct(m, '{') {
                            return self.matching[m] + 1;
                        }
                        return self.skip_simple(k, end);
                    }
                    m = self.skip_statement(m, end);
                    if word == "if" && self.is_ident(m, "else") {
                        m = self.skip_statement(m + 1, end);
                    }
                    return m;
                }
                "do" => {
                    let mut m = self.skip_statement(k + 1, end);
                    if self.is_ident(m, "while") {
                        m += 1;
                        if self.is_punct(m, '(') {
                            m = self.matching[m] + 1;
                        }
                        if self.is_punct(m, ';') {
                            m += 1;
                        }
                    }
                    return m;
                }
                "try" => {
                    let mut m = k + 1;
                    if self.is_punct(m, '(') {
                        m = self.matching[m] + 1;
                    }
                    if self.is_punct(m, '{') {
                        m = self.matching[m] + 1;
                    }
                    while self.is_ident(m, "catch") {
                        m += 1;
                        if self.is_punct(m, '(') {
                            m = self.matching[m] + 1;
                        }
                        if self.is_punct(m, '{') {
                            m = self.matching[m] + 1;
                        }
                    }
                    if self.is_ident(m, "finally") {
                        m += 1;
                        if self.is_punct(m, '{') {
                            m = self.matching[m] + 1;
                        }
                    }
                    return m;
                }
                w if !RESERVED.contains(&w) && self.is_punct(k + 1, ':') => {
                    return self.skip_statement(k + 2, end);
                }
                _ => {}
            }
        }
        self.skip_simple(k, end)
    }

    /// Up to and including the next top-level `;`, or past a local type body.
    fn skip_simple(&self, mut k: usize, end: usize) -> usize {
        let mut saw_assignment = false;
        while k < end {
            if !saw_assignment {
                if let Some((_, name_idx)) = self.type_decl_at(k) {
                    return match self.find_open_brace(name_idx + 1, end) {
                        Some(brace) => self.matching[brace] + 1,
                        None => end,
                    };
                }
            }
            if self.is_punct(k, ';') {
                return k + 1;
            }
            if self.is_punct(k, '=') {
                saw_assignment = true;
            }
            if self.is_opener(k) {
                k = self.matching[k] + 1;
            } else {
                k += 1;
            }
        }
        end
    }

    fn body_facts(&self, open: usize) -> (u32, BodyFacts) {
        let close = self.matching[open];
        let mut statements = Vec::new();
        let mut k = open + 1;
        while k < close {
            if self.is_punct(k, ';') {
                k += 1;
                continue;
            }
            let next = self.skip_statement(k, close).max(k + 1);
            statements.push((k, next));
            k = next;
        }
        let mut facts = BodyFacts::default();
        if let [(s, e)] = statements[..] {
            if self.is_ident(s, "return") {
                let expr = &self.toks[s + 1..e];
                let toks: Vec<&Tok> = expr.iter().map(|t| &t.tok).collect();
                match toks[..] {
                    [Tok::Ident(id), Tok::Punct(';')] => match id.as_str() {
                        "true" | "false" => facts.returns_boolean_literal = true,
                        w if RESERVED.contains(&w) => {}
                        _ => facts.returned_identifier = Some(id.clone()),
                    },
                    [Tok::Ident(this), Tok::Punct('.'), Tok::Ident(id), Tok::Punct(';')]
                        if this == "this" && !RESERVED.contains(&id.as_str()) =>
                    {
                        facts.returned_identifier = Some(id.clone());
                    }
                    _ => {}
                }
            }
        }
        if let Some(&(s, e)) = statements.first() {
            if self.is_ident(s, "super") && self.is_punct(s + 1, '(') {
                let after = self.matching[s + 1] + 1;
                facts.leading_super_call = after + 1 == e && self.is_punct(after, ';');
            }
        }
        (statements.len() as u32, facts)
    }
}

/// Extracts every method and constructor declared in `text`, including those
/// of nested, local and anonymous classes, ordered by start line.
pub fn parse_source(path: &str, text: &str) -> Result<Vec<MethodDescriptor>, ParseError> {
    let toks = tokenize(text);
    if toks.is_empty() {
        return Ok(Vec::new());
    }
    let matching = match_delimiters(&toks)?;
    let mut walker = Walker {
        path,
        toks: &toks,
        matching,
        found: Vec::new(),
        anon_counters: HashMap::new(),
        fields: Vec::new(),
        top: 0,
    };
    walker.walk_unit();
    let fields = std::mem::take(&mut walker.fields);
    let mut out: Vec<MethodDescriptor> = walker
        .found
        .into_iter()
        .map(|f| {
            let mut d = f.descriptor;
            if let Some(id) = &d.facts.returned_identifier {
                d.facts.returned_identifier_is_field =
                    fields.get(f.top_level).is_some_and(|s| s.contains(id));
            }
            classify_shapes(d)
        })
        .collect();
    out.sort_by_key(|d| d.start_line);
    Ok(out)
}

/// Whether `path` ends with one of `extensions` (given without the dot).
pub fn has_source_extension(path: &str, extensions: &[String]) -> bool {
    extensions
        .iter()
        .any(|ext| path.rsplit_once('.').is_some_and(|(_, e)| e == ext))
}
