//! Textual program frontend (`.mdfg` files).
//!
//! A program is a line-oriented list of statements:
//!
//! ```text
//! require <Name> <sensor|compute|actuator> { <key> <op> <value> [, ...] }
//! <name> = <Function>(<arg> [, <arg>...]) [@ <policy>[, <policy>...]]
//! output <name> [, <name>...]
//! ```
//!
//! `require` declares a node and its constraints (`frequency >= 50 Hz`,
//! `resolution = 320x240`, `token_bytes = 230400`); bindings apply a declared
//! compute/actuator node to earlier names, which fixes its input ports and
//! creates the edges; `output` designates the graph sinks. Per-argument edge
//! policies are `latest` (default), `window(k)` and `fifo`. Comments run from
//! `#` to end of line. Identifiers are ASCII words with at least one letter;
//! `Hz` and `FPS` are interchangeable frequency units. Every name must be
//! declared before use, which makes lowered graphs acyclic by construction.
//!
//! Requires without a frequency constraint lower to a 1 Hz default rate and
//! contribute nothing to the constraint set. Requires without `token_bytes`
//! default to 1 byte (actuators are forced to 0).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::graph::{is_valid_ident, EdgeSpec, Mdfg, NodeKind, NodeSpec, Policy};

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A one-line diagnostic with source position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
}

impl Diagnostic {
    fn new(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            pos,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: error: {}",
            self.pos.line, self.pos.col, self.message
        )
    }
}

impl std::error::Error for Diagnostic {}

/// Constraint relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rel {
    Ge,
    Eq,
    Le,
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rel::Ge => write!(f, ">="),
            Rel::Eq => write!(f, "="),
            Rel::Le => write!(f, "<="),
        }
    }
}

/// Constraint right-hand side: a number or an opaque word like `320x240`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CValue {
    Number(f64),
    Word(String),
}

impl fmt::Display for CValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CValue::Number(n) => write!(f, "{n}"),
            CValue::Word(w) => write!(f, "{w}"),
        }
    }
}

/// One `key op value` constraint. Positions do not participate in equality.
#[derive(Debug, Clone, Serialize)]
pub struct Constraint {
    pub key: String,
    pub rel: Rel,
    pub value: CValue,
    pub pos: Pos,
}

impl PartialEq for Constraint {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.rel == other.rel && self.value == other.value
    }
}

/// `require Name kind { ... }`.
#[derive(Debug, Clone, Serialize)]
pub struct RequireDecl {
    pub name: String,
    pub kind: NodeKind,
    pub constraints: Vec<Constraint>,
    pub pos: Pos,
}

impl PartialEq for RequireDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind && self.constraints == other.constraints
    }
}

/// `name = Function(args) [@ policies]`. The policy vector always has one
/// entry per argument (defaulted to `latest`), so equality is semantic.
#[derive(Debug, Clone, Serialize)]
pub struct BindingDecl {
    pub name: String,
    pub function: String,
    pub args: Vec<String>,
    pub policies: Vec<Policy>,
    pub pos: Pos,
}

impl PartialEq for BindingDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.function == other.function
            && self.args == other.args
            && self.policies == other.policies
    }
}

/// One name in an `output` statement.
#[derive(Debug, Clone, Serialize)]
pub struct OutputRef {
    pub name: String,
    pub pos: Pos,
}

impl PartialEq for OutputRef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

/// Parsed program: requires, bindings and outputs in source order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Program {
    pub requires: Vec<RequireDecl>,
    pub bindings: Vec<BindingDecl>,
    pub outputs: Vec<OutputRef>,
}

impl Program {
    pub fn require(&self, name: &str) -> Option<&RequireDecl> {
        self.requires.iter().find(|r| r.name == name)
    }

    /// The frequency constraint of a require, if any, as (relation, Hz).
    pub fn frequency_of(&self, name: &str) -> Option<(Rel, f64)> {
        self.require(name)?.constraints.iter().find_map(|c| {
            if c.key == "frequency" {
                match c.value {
                    CValue::Number(hz) => Some((c.rel, hz)),
                    CValue::Word(_) => None,
                }
            } else {
                None
            }
        })
    }
}

/// Declared timing constraints keyed by node name.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConstraintSet {
    pub frequency: BTreeMap<String, (Rel, f64)>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.frequency.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    At,
    Ge,
    Le,
    Assign,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Number(n) => write!(f, "`{n}`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::At => write!(f, "`@`"),
            Tok::Ge => write!(f, "`>=`"),
            Tok::Le => write!(f, "`<=`"),
            Tok::Assign => write!(f, "`=`"),
        }
    }
}

fn lex_line(line: &str, line_no: u32) -> Result<Vec<(Tok, Pos)>, Diagnostic> {
    let mut toks = Vec::new();
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let col = (i + 1) as u32;
        let pos = Pos { line: line_no, col };
        let b = bytes[i];
        match b {
            b'#' => break,
            b' ' | b'\t' | b'\r' => i += 1,
            b'{' => {
                toks.push((Tok::LBrace, pos));
                i += 1;
            }
            b'}' => {
                toks.push((Tok::RBrace, pos));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, pos));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, pos));
                i += 1;
            }
            b',' | b';' => {
                toks.push((Tok::Comma, pos));
                i += 1;
            }
            b'@' => {
                toks.push((Tok::At, pos));
                i += 1;
            }
            b'>' if bytes.get(i + 1) == Some(&b'=') => {
                toks.push((Tok::Ge, pos));
                i += 2;
            }
            b'<' if bytes.get(i + 1) == Some(&b'=') => {
                toks.push((Tok::Le, pos));
                i += 2;
            }
            b'=' => {
                toks.push((Tok::Assign, pos));
                i += 1;
            }
            _ if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.')
                {
                    i += 1;
                }
                let word = &line[start..i];
                if word.bytes().all(|c| c.is_ascii_digit() || c == b'.') {
                    let n: f64 = word
                        .parse()
                        .map_err(|_| Diagnostic::new(pos, format!("malformed number `{word}`")))?;
                    toks.push((Tok::Number(n), pos));
                } else if word.contains('.') {
                    return Err(Diagnostic::new(pos, format!("unexpected `.` in `{word}`")));
                } else {
                    toks.push((Tok::Word(word.to_string()), pos));
                }
            }
            _ => {
                let ch = line[i..].chars().next().unwrap();
                return Err(Diagnostic::new(pos, format!("unexpected character `{ch}`")));
            }
        }
    }
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct LineParser<'a> {
    toks: &'a [(Tok, Pos)],
    i: usize,
    line_no: u32,
    line_len: u32,
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|(_, p)| *p).unwrap_or(Pos {
            line: self.line_no,
            col: self.line_len + 1,
        })
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.i).cloned();
        self.i += 1;
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<Pos, Diagnostic> {
        match self.next() {
            Some((t, p)) if &t == want => Ok(p),
            Some((t, p)) => Err(Diagnostic::new(p, format!("expected {what}, found {t}"))),
            None => Err(Diagnostic::new(self.pos(), format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), Diagnostic> {
        match self.next() {
            Some((Tok::Word(w), p)) => {
                if w == "require" || w == "output" {
                    return Err(Diagnostic::new(p, format!("`{w}` is a reserved word")));
                }
                if !is_valid_ident(&w) {
                    return Err(Diagnostic::new(p, format!("invalid identifier `{w}`")));
                }
                Ok((w, p))
            }
            Some((t, p)) => Err(Diagnostic::new(p, format!("expected {what}, found {t}"))),
            None => Err(Diagnostic::new(self.pos(), format!("expected {what}"))),
        }
    }

    fn end(&mut self) -> Result<(), Diagnostic> {
        if let Some((t, p)) = self.next() {
            return Err(Diagnostic::new(p, format!("unexpected trailing {t}")));
        }
        Ok(())
    }
}

/// Parses program text into an AST. The first error wins; positions are
/// retained for diagnostics.
pub fn parse(text: &str) -> Result<Program, Diagnostic> {
    let mut program = Program::default();
    // Names declared so far (requires and bindings share one namespace).
    let mut declared: BTreeMap<String, Pos> = BTreeMap::new();
    let mut any_statement = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = (idx + 1) as u32;
        let toks = lex_line(raw_line, line_no)?;
        if toks.is_empty() {
            continue;
        }
        any_statement = true;
        let mut p = LineParser {
            toks: &toks,
            i: 0,
            line_no,
            line_len: raw_line.len() as u32,
        };
        match p.peek() {
            Some(Tok::Word(w)) if w == "require" => {
                let (_, _kw_pos) = p.next().unwrap();
                let (name, name_pos) = p.ident("node name")?;
                if let Some(prev) = declared.get(&name) {
                    return Err(Diagnostic::new(
                        name_pos,
                        format!("duplicate name `{name}` (first declared at {prev})"),
                    ));
                }
                let (kind_word, kind_pos) = p.ident("node kind")?;
                let kind = match kind_word.as_str() {
                    "sensor" => NodeKind::Sensor,
                    "compute" => NodeKind::Compute,
                    "actuator" => NodeKind::Actuator,
                    other => {
                        return Err(Diagnostic::new(
                            kind_pos,
                            format!(
                                "unknown kind `{other}` (expected sensor, compute or actuator)"
                            ),
                        ))
                    }
                };
                p.expect(&Tok::LBrace, "`{`")?;
                let mut constraints = Vec::new();
                let mut saw_frequency = false;
                if p.peek() != Some(&Tok::RBrace) {
                    loop {
                        let c = parse_constraint(&mut p, &mut saw_frequency)?;
                        constraints.push(c);
                        match p.peek() {
                            Some(Tok::Comma) => {
                                p.next();
                            }
                            _ => break,
                        }
                    }
                }
                p.expect(&Tok::RBrace, "`}`")?;
                p.end()?;
                declared.insert(name.clone(), name_pos);
                program.requires.push(RequireDecl {
                    name,
                    kind,
                    constraints,
                    pos: name_pos,
                });
            }
            Some(Tok::Word(w)) if w == "output" => {
                p.next();
                loop {
                    let (name, pos) = p.ident("output name")?;
                    if !declared.contains_key(&name) {
                        return Err(Diagnostic::new(
                            pos,
                            format!("reference to undeclared name `{name}`"),
                        ));
                    }
                    if program.outputs.iter().any(|o| o.name == name) {
                        return Err(Diagnostic::new(pos, format!("duplicate output `{name}`")));
                    }
                    program.outputs.push(OutputRef { name, pos });
                    match p.peek() {
                        Some(Tok::Comma) => {
                            p.next();
                        }
                        _ => break,
                    }
                }
                p.end()?;
            }
            _ => {
                // Binding: name = Function(args) [@ policies]
                let (name, name_pos) = p.ident("statement (`require`, `output` or a binding)")?;
                if let Some(prev) = declared.get(&name) {
                    return Err(Diagnostic::new(
                        name_pos,
                        format!("duplicate name `{name}` (first declared at {prev})"),
                    ));
                }
                p.expect(&Tok::Assign, "`=`")?;
                let (function, fpos) = p.ident("function name")?;
                if !declared.contains_key(&function) {
                    return Err(Diagnostic::new(
                        fpos,
                        format!("reference to undeclared name `{function}`"),
                    ));
                }
                p.expect(&Tok::LParen, "`(`")?;
                let mut args = Vec::new();
                if p.peek() != Some(&Tok::RParen) {
                    loop {
                        let (arg, apos) = p.ident("argument name")?;
                        if !declared.contains_key(&arg) {
                            return Err(Diagnostic::new(
                                apos,
                                format!("reference to undeclared name `{arg}`"),
                            ));
                        }
                        args.push(arg);
                        match p.peek() {
                            Some(Tok::Comma) => {
                                p.next();
                            }
                            _ => break,
                        }
                    }
                }
                p.expect(&Tok::RParen, "`)`")?;
                let mut policies = Vec::new();
                if p.peek() == Some(&Tok::At) {
                    p.next();
                    loop {
                        policies.push(parse_policy(&mut p)?);
                        match p.peek() {
                            Some(Tok::Comma) => {
                                p.next();
                            }
                            _ => break,
                        }
                    }
                }
                p.end()?;
                if policies.len() > args.len() {
                    return Err(Diagnostic::new(
                        name_pos,
                        format!(
                            "{} policies declared for {} arguments",
                            policies.len(),
                            args.len()
                        ),
                    ));
                }
                policies.resize(args.len(), Policy::Latest);
                declared.insert(name.clone(), name_pos);
                program.bindings.push(BindingDecl {
                    name,
                    function,
                    args,
                    policies,
                    pos: name_pos,
                });
            }
        }
    }

    if !any_statement || program.requires.is_empty() {
        return Err(Diagnostic::new(
            Pos { line: 1, col: 1 },
            "expected 'require' (a program declares at least one node)",
        ));
    }
    Ok(program)
}

fn parse_constraint(
    p: &mut LineParser<'_>,
    saw_frequency: &mut bool,
) -> Result<Constraint, Diagnostic> {
    let (key, key_pos) = p.ident("constraint key")?;
    let rel = match p.next() {
        Some((Tok::Ge, _)) => Rel::Ge,
        Some((Tok::Assign, _)) => Rel::Eq,
        Some((Tok::Le, _)) => Rel::Le,
        Some((t, pos)) => {
            return Err(Diagnostic::new(
                pos,
                format!("expected `>=`, `=` or `<=`, found {t}"),
            ))
        }
        None => return Err(Diagnostic::new(p.pos(), "expected `>=`, `=` or `<=`")),
    };
    let value = match p.next() {
        Some((Tok::Number(n), npos)) => {
            // Optional unit after numeric frequency values.
            if let Some(Tok::Word(u)) = p.peek() {
                if u == "Hz" || u == "FPS" {
                    if key != "frequency" {
                        return Err(Diagnostic::new(
                            npos,
                            format!("unit `{u}` only applies to frequency"),
                        ));
                    }
                    p.next();
                }
            }
            CValue::Number(n)
        }
        Some((Tok::Word(w), _)) => CValue::Word(w),
        Some((t, pos)) => return Err(Diagnostic::new(pos, format!("expected a value, found {t}"))),
        None => return Err(Diagnostic::new(p.pos(), "expected a value")),
    };
    if key == "frequency" {
        if *saw_frequency {
            return Err(Diagnostic::new(key_pos, "at most one frequency constraint"));
        }
        *saw_frequency = true;
        match value {
            CValue::Number(hz) if hz > 0.0 && hz.is_finite() => {}
            _ => {
                return Err(Diagnostic::new(
                    key_pos,
                    "frequency must be a positive number",
                ))
            }
        }
    }
    Ok(Constraint {
        key,
        rel,
        value,
        pos: key_pos,
    })
}

fn parse_policy(p: &mut LineParser<'_>) -> Result<Policy, Diagnostic> {
    let (word, pos) = p.ident("policy (latest, window(k) or fifo)")?;
    match word.as_str() {
        "latest" => Ok(Policy::Latest),
        "fifo" => Ok(Policy::Fifo),
        "window" => {
            p.expect(&Tok::LParen, "`(`")?;
            let k = match p.next() {
                Some((Tok::Number(n), npos)) => {
                    if n < 1.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
                        return Err(Diagnostic::new(npos, "window size must be an integer >= 1"));
                    }
                    n as u32
                }
                Some((t, pos)) => {
                    return Err(Diagnostic::new(
                        pos,
                        format!("expected window size, found {t}"),
                    ))
                }
                None => return Err(Diagnostic::new(p.pos(), "expected window size")),
            };
            p.expect(&Tok::RParen, "`)`")?;
            Ok(Policy::Window(k))
        }
        other => Err(Diagnostic::new(
            pos,
            format!("unknown policy `{other}` (expected latest, window(k) or fifo)"),
        )),
    }
}

// ---------------------------------------------------------------------------
// Lowering
// ---------------------------------------------------------------------------

/// Lowers a parsed program into a graph plus its declared timing constraints.
///
/// One node per require; one edge per (binding argument -> function port).
/// Port count of a compute/actuator node is fixed by its first binding's
/// arity; binding the same function again with a different arity is an error.
pub fn lower(program: &Program) -> Result<(Mdfg, ConstraintSet), Diagnostic> {
    // arg/binding name -> producing node name.
    let mut resolve: BTreeMap<&str, &str> = BTreeMap::new();
    for r in &program.requires {
        resolve.insert(&r.name, &r.name);
    }

    let mut arity: BTreeMap<&str, usize> = BTreeMap::new();
    for b in &program.bindings {
        let Some(require) = program.require(&b.function) else {
            return Err(Diagnostic::new(
                b.pos,
                format!("`{}` does not name a required node", b.function),
            ));
        };
        if require.kind == NodeKind::Sensor {
            return Err(Diagnostic::new(
                b.pos,
                format!("sensor `{}` cannot be bound to inputs", b.function),
            ));
        }
        if let Some(&n) = arity.get(b.function.as_str()) {
            if n != b.args.len() {
                return Err(Diagnostic::new(
                    b.pos,
                    format!(
                        "arity mismatch: `{}` bound with {} argument(s), previously {}",
                        b.function,
                        b.args.len(),
                        n
                    ),
                ));
            }
        } else {
            arity.insert(&b.function, b.args.len());
        }
        resolve.insert(&b.name, &b.function);
    }

    let mut constraints = ConstraintSet::default();
    let mut nodes = Vec::new();
    for r in &program.requires {
        let mut rate_hz = 1.0;
        let mut token_bytes: Option<u64> = None;
        let mut attrs = BTreeMap::new();
        for c in &r.constraints {
            match c.key.as_str() {
                "frequency" => {
                    let CValue::Number(hz) = c.value else {
                        unreachable!()
                    };
                    rate_hz = hz;
                    constraints.frequency.insert(r.name.clone(), (c.rel, hz));
                }
                "token_bytes" => {
                    let CValue::Number(n) = c.value else {
                        return Err(Diagnostic::new(c.pos, "token_bytes must be an integer"));
                    };
                    if c.rel != Rel::Eq || n < 0.0 || n.fract() != 0.0 {
                        return Err(Diagnostic::new(
                            c.pos,
                            "token_bytes must be `= <non-negative integer>`",
                        ));
                    }
                    token_bytes = Some(n as u64);
                }
                _ => {
                    if c.rel != Rel::Eq {
                        return Err(Diagnostic::new(
                            c.pos,
                            format!("only frequency supports `{}` constraints", c.rel),
                        ));
                    }
                    attrs.insert(c.key.clone(), c.value.to_string());
                }
            }
        }
        let token_bytes = token_bytes.unwrap_or(match r.kind {
            NodeKind::Actuator => 0,
            _ => 1,
        });
        if r.kind == NodeKind::Actuator && token_bytes != 0 {
            return Err(Diagnostic::new(
                r.pos,
                format!("actuator `{}` must have token_bytes = 0", r.name),
            ));
        }
        let ports: Vec<String> = match r.kind {
            NodeKind::Sensor => vec![],
            _ => {
                let n = arity.get(r.name.as_str()).copied().unwrap_or(0);
                if r.kind == NodeKind::Actuator && n == 0 {
                    return Err(Diagnostic::new(
                        r.pos,
                        format!("actuator `{}` is never bound to any input", r.name),
                    ));
                }
                (0..n).map(|i| format!("in{i}")).collect()
            }
        };
        let mut node = NodeSpec::new(r.name.clone(), r.kind, rate_hz, token_bytes, ports)
            .map_err(|e| Diagnostic::new(r.pos, e.to_string()))?;
        node.attrs = attrs;
        nodes.push(node);
    }

    let mut edges = Vec::new();
    for b in &program.bindings {
        for (i, arg) in b.args.iter().enumerate() {
            let producer = resolve[arg.as_str()];
            edges.push(
                EdgeSpec::new(
                    producer,
                    b.function.clone(),
                    format!("in{i}"),
                    b.policies[i],
                )
                .map_err(|e| Diagnostic::new(b.pos, e.to_string()))?,
            );
        }
    }

    let mut outputs = Vec::new();
    let mut seen_outputs = BTreeSet::new();
    for o in &program.outputs {
        let node = resolve.get(o.name.as_str()).copied().ok_or_else(|| {
            Diagnostic::new(o.pos, format!("reference to undeclared name `{}`", o.name))
        })?;
        if !seen_outputs.insert(node.to_string()) {
            return Err(Diagnostic::new(
                o.pos,
                format!(
                    "output `{}` resolves to already-listed node `{node}`",
                    o.name
                ),
            ));
        }
        outputs.push(node.to_string());
    }

    let graph = Mdfg::new(nodes, edges, outputs)
        .map_err(|e| Diagnostic::new(Pos { line: 1, col: 1 }, e.to_string()))?;
    Ok((graph, constraints))
}

// ---------------------------------------------------------------------------
// Pretty printer
// ---------------------------------------------------------------------------

fn write_policy_suffix(out: &mut String, policies: &[Policy]) {
    if policies.iter().all(|p| matches!(p, Policy::Latest)) {
        return;
    }
    out.push_str(" @ ");
    for (i, p) in policies.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&p.to_string());
    }
}

/// Canonical text form: requires, then bindings, then outputs. The output
/// re-parses to an equal AST.
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for r in &program.requires {
        out.push_str("require ");
        out.push_str(&r.name);
        out.push(' ');
        out.push_str(&r.kind.to_string());
        out.push_str(" {");
        for (i, c) in r.constraints.iter().enumerate() {
            out.push_str(if i == 0 { " " } else { ", " });
            out.push_str(&c.key);
            out.push(' ');
            out.push_str(&c.rel.to_string());
            out.push(' ');
            out.push_str(&c.value.to_string());
            if c.key == "frequency" {
                out.push_str(" Hz");
            }
        }
        out.push_str(if r.constraints.is_empty() { "}" } else { " }" });
        out.push('\n');
    }
    if !program.bindings.is_empty() {
        out.push('\n');
    }
    for b in &program.bindings {
        out.push_str(&b.name);
        out.push_str(" = ");
        out.push_str(&b.function);
        out.push('(');
        out.push_str(&b.args.join(", "));
        out.push(')');
        write_policy_suffix(&mut out, &b.policies);
        out.push('\n');
    }
    if !program.outputs.is_empty() {
        out.push('\n');
        out.push_str("output ");
        let names: Vec<&str> = program.outputs.iter().map(|o| o.name.as_str()).collect();
        out.push_str(&names.join(", "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Transliteration of the home-robot program: seven requires, three
    /// bindings, one output.
    pub(crate) const VACUUM_PROGRAM: &str = "\
# Computation graph of a robot vacuum.

require IR sensor { frequency >= 50 Hz, token_bytes = 2 }
require Camera sensor { resolution = 320x240, frequency >= 30 Hz, token_bytes = 230400 }
require IMU sensor { frequency >= 100 Hz, token_bytes = 64 }
require WO sensor { frequency >= 50 Hz, token_bytes = 16 }
require 2DPerception compute { frequency >= 50 Hz, token_bytes = 8192 }
require Localization compute { frequency >= 50 Hz, token_bytes = 256 }
require Control compute { frequency >= 50 Hz, token_bytes = 100 }

perc = 2DPerception(IR, Camera)
loc = Localization(Camera, IMU, WO)
cmd = Control(perc, loc)

output cmd
";

    #[test]
    fn parses_the_vacuum_program() {
        let p = parse(VACUUM_PROGRAM).unwrap();
        assert_eq!(p.requires.len(), 7);
        assert_eq!(p.bindings.len(), 3);
        assert_eq!(p.outputs.len(), 1);
        let freqs: Vec<(&str, f64)> = p
            .requires
            .iter()
            .map(|r| (r.name.as_str(), p.frequency_of(&r.name).unwrap().1))
            .collect();
        assert_eq!(
            freqs,
            vec![
                ("IR", 50.0),
                ("Camera", 30.0),
                ("IMU", 100.0),
                ("WO", 50.0),
                ("2DPerception", 50.0),
                ("Localization", 50.0),
                ("Control", 50.0),
            ]
        );
        for r in &p.requires {
            assert_eq!(p.frequency_of(&r.name).unwrap().0, Rel::Ge);
        }
        let camera = p.require("Camera").unwrap();
        assert!(camera
            .constraints
            .iter()
            .any(|c| c.key == "resolution" && c.value == CValue::Word("320x240".into())));
    }

    #[test]
    fn empty_input_wants_a_require() {
        let err = parse("").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 1 });
        assert!(err.message.contains("expected 'require'"), "{err}");
        let err = parse("# only a comment\n").unwrap_err();
        assert!(err.message.contains("expected 'require'"), "{err}");
    }

    #[test]
    fn forward_reference_names_the_culprit() {
        // Delete the IR require line: perc's first argument dangles.
        let text = VACUUM_PROGRAM
            .lines()
            .filter(|l| !l.starts_with("require IR"))
            .collect::<Vec<_>>()
            .join("\n");
        let err = parse(&text).unwrap_err();
        assert!(err.message.contains("`IR`"), "{err}");
        assert!(err.message.contains("undeclared"), "{err}");
        assert_eq!(err.pos.line, 10); // the perc binding line after deletion
    }

    #[test]
    fn duplicate_names_and_unknown_kinds_are_rejected() {
        let err =
            parse("require A sensor { frequency >= 10 }\nrequire A sensor { frequency >= 10 }\n")
                .unwrap_err();
        assert!(err.message.contains("duplicate name `A`"), "{err}");
        let err = parse("require A widget { frequency >= 10 }\n").unwrap_err();
        assert!(err.message.contains("unknown kind `widget`"), "{err}");
        let err = parse("require A sensor { frequency >= 10, frequency >= 20 }\n").unwrap_err();
        assert!(err.message.contains("at most one frequency"), "{err}");
    }

    #[test]
    fn fps_is_an_alias_for_hz() {
        let p = parse("require Cam sensor { frequency >= 30 FPS }\n").unwrap();
        assert_eq!(p.frequency_of("Cam"), Some((Rel::Ge, 30.0)));
    }

    #[test]
    fn lower_builds_the_seven_node_graph() {
        let p = parse(VACUUM_PROGRAM).unwrap();
        let (graph, constraints) = lower(&p).unwrap();
        assert_eq!(graph.nodes.len(), 7);
        assert_eq!(graph.edges.len(), 7);
        let keys: Vec<String> = graph.edges.iter().map(|e| e.key()).collect();
        for expected in [
            "IR->2DPerception.in0",
            "Camera->2DPerception.in1",
            "Camera->Localization.in0",
            "IMU->Localization.in1",
            "WO->Localization.in2",
            "2DPerception->Control.in0",
            "Localization->Control.in1",
        ] {
            assert!(keys.contains(&expected.to_string()), "missing {expected}");
        }
        assert_eq!(graph.outputs, vec!["Control"]);
        assert_eq!(constraints.frequency.len(), 7);
        assert_eq!(constraints.frequency["IMU"], (Rel::Ge, 100.0));
        assert!(crate::graph::validate_graph(&graph).is_empty());
    }

    #[test]
    fn lower_minimal_identity_pipeline() {
        let p = parse(
            "require S sensor { frequency >= 10 }\nrequire F compute { frequency >= 10 }\ny = F(S)\noutput y\n",
        )
        .unwrap();
        let (graph, _) = lower(&p).unwrap();
        assert_eq!(graph.nodes.len(), 2);
        assert_eq!(graph.edges.len(), 1);
        assert_eq!(graph.edges[0].key(), "S->F.in0");
    }

    #[test]
    fn lower_rejects_arity_mismatch() {
        let p = parse(
            "require S sensor { frequency >= 10 }\nrequire F compute { frequency >= 10 }\na = F(S)\nb = F(S, S)\n",
        )
        .unwrap();
        let err = lower(&p).unwrap_err();
        assert!(err.message.contains("arity mismatch"), "{err}");
    }

    #[test]
    fn policies_attach_per_argument() {
        let p = parse(
            "require S sensor { frequency >= 10 }\nrequire T sensor { frequency >= 5 }\nrequire F compute { frequency >= 10 }\ny = F(S, T) @ window(3), fifo\noutput y\n",
        )
        .unwrap();
        let (graph, _) = lower(&p).unwrap();
        let by_key: BTreeMap<String, Policy> =
            graph.edges.iter().map(|e| (e.key(), e.policy)).collect();
        assert_eq!(by_key["S->F.in0"], Policy::Window(3));
        assert_eq!(by_key["T->F.in1"], Policy::Fifo);
        // window(1) canonicalizes to latest in the IR.
        let p2 = parse(
            "require S sensor { frequency >= 10 }\nrequire F compute { frequency >= 10 }\ny = F(S) @ window(1)\n",
        )
        .unwrap();
        let (g2, _) = lower(&p2).unwrap();
        assert_eq!(g2.edges[0].policy, Policy::Latest);
    }

    #[test]
    fn pretty_print_round_trips_the_vacuum_program() {
        let p = parse(VACUUM_PROGRAM).unwrap();
        let printed = pretty_print(&p);
        let reparsed = parse(&printed).unwrap();
        assert_eq!(p, reparsed);
        // Canonical form is a fixed point.
        assert_eq!(printed, pretty_print(&reparsed));
    }

    #[test]
    fn default_rate_applies_without_frequency_constraint() {
        let p = parse("require S sensor { token_bytes = 4 }\n").unwrap();
        let (graph, constraints) = lower(&p).unwrap();
        assert_eq!(graph.nodes["S"].rate_hz, 1.0);
        assert!(constraints.is_empty());
    }

    #[test]
    fn actuator_rules_enforced_at_lowering() {
        let err = lower(&parse("require M actuator { frequency >= 10 }\n").unwrap()).unwrap_err();
        assert!(err.message.contains("never bound"), "{err}");
        let err = lower(
            &parse("require S sensor { frequency >= 10 }\nrequire M actuator { frequency >= 10, token_bytes = 8 }\nm = M(S)\n")
                .unwrap(),
        )
        .unwrap_err();
        assert!(err.message.contains("token_bytes = 0"), "{err}");
        let ok = lower(
            &parse("require S sensor { frequency >= 10 }\nrequire M actuator { frequency >= 10 }\nm = M(S)\noutput m\n")
                .unwrap(),
        );
        assert!(ok.is_ok());
    }
}
