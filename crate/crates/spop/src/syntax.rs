//! Textual formats: rewrite systems, certificates, word-algebra programs,
//! and measurement patterns.
//!
//! Systems are line-oriented in an old TPDB style: a `(VAR ...)` block
//! followed by `(RULES ...)`. Argument lists use commas; an optional
//! semicolon inside an argument list declares the normal/safe split inline,
//! everything left of the semicolon being normal. Certificates are
//! `key: value` lines (see [`parse_certificate`]); their printer and parser
//! round-trip byte-exactly.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::bwsc::BwscExpr;
use crate::order::{Certificate, Variant};
use crate::prec::{Kind, Precedence, Tiering};
use crate::term::{Signature, SymbolId, Term, VarId};
use crate::trs::{Rule, Trs};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Arrow,
    Gt,
    Tilde,
    Caret,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Tilde => write!(f, "`~`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Lexer {
    fn new(src: &str) -> Result<Lexer, ParseError> {
        let mut toks = Vec::new();
        for (li, raw_line) in src.lines().enumerate() {
            let line = li + 1;
            let content = match raw_line.find('#') {
                Some(i) => &raw_line[..i],
                None => raw_line,
            };
            let chars: Vec<char> = content.chars().collect();
            let mut i = 0;
            while i < chars.len() {
                let col = i + 1;
                let c = chars[i];
                match c {
                    ' ' | '\t' | '\r' => i += 1,
                    '(' => {
                        toks.push((Tok::LParen, line, col));
                        i += 1;
                    }
                    ')' => {
                        toks.push((Tok::RParen, line, col));
                        i += 1;
                    }
                    '[' => {
                        toks.push((Tok::LBracket, line, col));
                        i += 1;
                    }
                    ']' => {
                        toks.push((Tok::RBracket, line, col));
                        i += 1;
                    }
                    ',' => {
                        toks.push((Tok::Comma, line, col));
                        i += 1;
                    }
                    ';' => {
                        toks.push((Tok::Semi, line, col));
                        i += 1;
                    }
                    '>' => {
                        toks.push((Tok::Gt, line, col));
                        i += 1;
                    }
                    '~' => {
                        toks.push((Tok::Tilde, line, col));
                        i += 1;
                    }
                    '^' => {
                        toks.push((Tok::Caret, line, col));
                        i += 1;
                    }
                    '-' => {
                        if i + 1 < chars.len() && chars[i + 1] == '>' {
                            toks.push((Tok::Arrow, line, col));
                            i += 2;
                        } else {
                            return Err(ParseError::new(line, col, "expected `->`"));
                        }
                    }
                    '0'..='9' => {
                        let start = i;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                        let text: String = chars[start..i].iter().collect();
                        let n = text.parse::<u64>().map_err(|_| {
                            ParseError::new(line, col, "number too large")
                        })?;
                        toks.push((Tok::Num(n), line, col));
                    }
                    c if c.is_alphabetic() || c == '_' => {
                        let start = i;
                        while i < chars.len()
                            && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                        {
                            i += 1;
                        }
                        let text: String = chars[start..i].iter().collect();
                        toks.push((Tok::Ident(text), line, col));
                    }
                    other => {
                        return Err(ParseError::new(
                            line,
                            col,
                            format!("unexpected character `{other}`"),
                        ))
                    }
                }
            }
        }
        let last = src.lines().count().max(1);
        toks.push((Tok::Eof, last, 1));
        Ok(Lexer { toks, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> (usize, usize) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let (l, c) = self.here();
        let got = self.next();
        if got == want {
            Ok(())
        } else {
            Err(ParseError::new(l, c, format!("expected {want}, found {got}")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        let (l, c) = self.here();
        match self.next() {
            Tok::Ident(s) => Ok(s),
            got => Err(ParseError::new(l, c, format!("expected a name, found {got}"))),
        }
    }

    fn num(&mut self) -> Result<u64, ParseError> {
        let (l, c) = self.here();
        match self.next() {
            Tok::Num(n) => Ok(n),
            got => Err(ParseError::new(l, c, format!("expected a number, found {got}"))),
        }
    }

    fn err_here(&self, msg: impl Into<String>) -> ParseError {
        let (l, c) = self.here();
        ParseError::new(l, c, msg)
    }
}

/// A parsed rewrite system together with the argument splits declared inline.
#[derive(Debug, Clone)]
pub struct ParsedTrs {
    pub trs: Trs,
    /// Normal-position masks for the symbols whose occurrences used `;`.
    pub declared_masks: HashMap<SymbolId, u64>,
}

pub fn parse_trs(src: &str) -> Result<ParsedTrs, ParseError> {
    let mut lex = Lexer::new(src)?;
    let mut sig = Signature::new();
    let mut vars: HashMap<String, VarId> = HashMap::new();
    let mut rules: Vec<(Term, Term)> = Vec::new();
    let mut declared: HashMap<String, usize> = HashMap::new();
    let mut arities: HashMap<String, usize> = HashMap::new();
    let mut saw_rules = false;
    loop {
        match lex.peek() {
            Tok::Eof => break,
            Tok::LParen => {
                lex.next();
                let block = lex.ident()?;
                match block.as_str() {
                    "VAR" => {
                        while let Tok::Ident(_) = lex.peek() {
                            let name = lex.ident()?;
                            if !vars.contains_key(&name) {
                                let id = sig.add_var(&name).map_err(|e| lex.err_here(e.to_string()))?;
                                vars.insert(name, id);
                            }
                        }
                        lex.expect(Tok::RParen)?;
                    }
                    "RULES" => {
                        saw_rules = true;
                        while *lex.peek() != Tok::RParen {
                            let (ll, lc) = lex.here();
                            let lhs =
                                parse_rule_term(&mut lex, &mut sig, &vars, &mut declared, &mut arities)?;
                            if lhs.is_var() {
                                return Err(ParseError::new(
                                    ll,
                                    lc,
                                    "left-hand side of a rule cannot be a variable",
                                ));
                            }
                            lex.expect(Tok::Arrow)?;
                            let (rl, rc) = lex.here();
                            let rhs =
                                parse_rule_term(&mut lex, &mut sig, &vars, &mut declared, &mut arities)?;
                            let lhs_vars = lhs.vars();
                            if rhs.vars().iter().any(|v| !lhs_vars.contains(v)) {
                                return Err(ParseError::new(
                                    rl,
                                    rc,
                                    "right-hand side mentions a variable not bound on the left",
                                ));
                            }
                            rules.push((lhs, rhs));
                        }
                        lex.expect(Tok::RParen)?;
                    }
                    other => {
                        return Err(lex.err_here(format!("unknown block `{other}`")));
                    }
                }
            }
            other => {
                return Err(lex.err_here(format!("expected a `(VAR ...)` or `(RULES ...)` block, found {other}")))
            }
        }
    }
    if !saw_rules {
        return Err(lex.err_here("missing `(RULES ...)` block"));
    }
    let rules: Vec<Rule> = rules.into_iter().map(|(lhs, rhs)| Rule { lhs, rhs }).collect();
    let trs = Trs::new(sig, rules).map_err(|e| ParseError::new(1, 1, e.to_string()))?;
    let declared_masks = declared
        .into_iter()
        .map(|(name, k)| {
            let id = trs.signature().symbol(&name).expect("declared symbol was interned");
            let mask = if k == 0 { 0 } else { (1u64 << k) - 1 };
            (id, mask)
        })
        .collect();
    Ok(ParsedTrs { trs, declared_masks })
}

/// One term of a rule: identifiers are variables iff declared in the `VAR`
/// block. Records and cross-checks inline `;` splits.
fn parse_rule_term(
    lex: &mut Lexer,
    sig: &mut Signature,
    vars: &HashMap<String, VarId>,
    declared: &mut HashMap<String, usize>,
    arities: &mut HashMap<String, usize>,
) -> Result<Term, ParseError> {
    let (l, c) = lex.here();
    let name = lex.ident()?;
    if let Some(&v) = vars.get(&name) {
        if *lex.peek() == Tok::LParen {
            return Err(ParseError::new(l, c, format!("variable `{name}` cannot take arguments")));
        }
        return Ok(Term::Var(v));
    }
    let mut args = Vec::new();
    let mut split: Option<usize> = None;
    if *lex.peek() == Tok::LParen {
        lex.next();
        loop {
            match lex.peek() {
                Tok::RParen => {
                    lex.next();
                    break;
                }
                Tok::Semi => {
                    let (sl, sc) = lex.here();
                    lex.next();
                    if split.is_some() {
                        return Err(ParseError::new(sl, sc, "second `;` in an argument list"));
                    }
                    split = Some(args.len());
                }
                Tok::Comma => {
                    lex.next();
                }
                _ => {
                    args.push(parse_rule_term(lex, sig, vars, declared, arities)?);
                }
            }
        }
    }
    if let Some(&known) = arities.get(&name) {
        if known != args.len() {
            return Err(ParseError::new(
                l,
                c,
                format!("`{name}` used with {} arguments but previously with {known}", args.len()),
            ));
        }
    } else {
        arities.insert(name.clone(), args.len());
    }
    if let Some(k) = split {
        match declared.get(&name) {
            Some(&prev) if prev != k => {
                return Err(ParseError::new(
                    l,
                    c,
                    format!("`{name}` declared with {k} normal arguments here but {prev} elsewhere"),
                ));
            }
            _ => {
                declared.insert(name.clone(), k);
            }
        }
    }
    let id = sig
        .add_symbol(&name, args.len())
        .map_err(|e| ParseError::new(l, c, e.to_string()))?;
    Ok(Term::App(id, args))
}

/// Renders a system in the file format. When a tiering is given, defined
/// symbols whose normal positions form a prefix get inline `;` splits.
pub fn print_trs(trs: &Trs, tiering: Option<&Tiering>) -> String {
    let sig = trs.signature();
    let mut var_names: Vec<&str> = Vec::new();
    for rule in trs.rules() {
        for v in rule.lhs.vars() {
            let name = sig.var_name(v);
            if !var_names.contains(&name) {
                var_names.push(name);
            }
        }
    }
    let mut out = String::new();
    out.push_str("(VAR");
    for v in &var_names {
        out.push(' ');
        out.push_str(v);
    }
    out.push_str(")\n(RULES\n");
    for rule in trs.rules() {
        out.push_str("  ");
        out.push_str(&show_term(trs, tiering, &rule.lhs));
        out.push_str(" -> ");
        out.push_str(&show_term(trs, tiering, &rule.rhs));
        out.push('\n');
    }
    out.push_str(")\n");
    out
}

/// Renders one rule the way [`print_trs`] would.
pub fn print_rule(trs: &Trs, tiering: Option<&Tiering>, rule: &Rule) -> String {
    format!(
        "{} -> {}",
        show_term(trs, tiering, &rule.lhs),
        show_term(trs, tiering, &rule.rhs)
    )
}

fn show_term(trs: &Trs, tiering: Option<&Tiering>, t: &Term) -> String {
    let sig = trs.signature();
    match t {
        Term::Var(v) => sig.var_name(*v).to_owned(),
        Term::App(f, args) => {
            let mut out = sig.name(*f).to_owned();
            if args.is_empty() {
                return out;
            }
            let split = tiering.and_then(|ti| {
                if !trs.is_defined(*f) {
                    return None;
                }
                let mask = ti.normal_mask(*f);
                let k = mask.count_ones() as usize;
                let prefix = if k == 0 { 0 } else { (1u64 << k) - 1 };
                (mask == prefix).then_some(k)
            });
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if Some(i) == split {
                    out.push_str("; ");
                } else if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&show_term(trs, tiering, arg));
            }
            if split == Some(args.len()) {
                out.push(';');
            }
            out.push(')');
            out
        }
    }
}

/// Parses a ground term over the system's symbols (no variables).
pub fn parse_ground_term(src: &str, trs: &Trs) -> Result<Term, ParseError> {
    let mut lex = Lexer::new(src)?;
    let t = parse_closed_term(&mut lex, trs)?;
    lex.expect(Tok::Eof)?;
    Ok(t)
}

fn parse_closed_term(lex: &mut Lexer, trs: &Trs) -> Result<Term, ParseError> {
    let (l, c) = lex.here();
    let name = lex.ident()?;
    let Some(id) = trs.signature().symbol(&name) else {
        return Err(ParseError::new(l, c, format!("unknown symbol `{name}`")));
    };
    let mut args = Vec::new();
    if *lex.peek() == Tok::LParen {
        lex.next();
        loop {
            match lex.peek() {
                Tok::RParen => {
                    lex.next();
                    break;
                }
                Tok::Comma | Tok::Semi => {
                    lex.next();
                }
                _ => args.push(parse_closed_term(lex, trs)?),
            }
        }
    }
    if trs.signature().arity(id) != args.len() {
        return Err(ParseError::new(
            l,
            c,
            format!(
                "`{name}` expects {} arguments, got {}",
                trs.signature().arity(id),
                args.len()
            ),
        ));
    }
    Ok(Term::App(id, args))
}

/// A start-term pattern with `sym^n(...)` repetition markers; `n` is
/// substituted when instantiating.
#[derive(Debug, Clone)]
pub struct MeasurePattern {
    node: PatternNode,
}

#[derive(Debug, Clone)]
enum PatternNode {
    App(SymbolId, Vec<PatternNode>),
    Repeat(SymbolId, Box<PatternNode>),
}

impl MeasurePattern {
    pub fn instantiate(&self, n: u64) -> Term {
        instantiate_node(&self.node, n)
    }
}

fn instantiate_node(node: &PatternNode, n: u64) -> Term {
    match node {
        PatternNode::App(f, args) => {
            Term::App(*f, args.iter().map(|a| instantiate_node(a, n)).collect())
        }
        PatternNode::Repeat(f, inner) => {
            let mut t = instantiate_node(inner, n);
            for _ in 0..n {
                t = Term::App(*f, vec![t]);
            }
            t
        }
    }
}

pub fn parse_pattern(src: &str, trs: &Trs) -> Result<MeasurePattern, ParseError> {
    let mut lex = Lexer::new(src)?;
    let node = parse_pattern_node(&mut lex, trs)?;
    lex.expect(Tok::Eof)?;
    Ok(MeasurePattern { node })
}

fn parse_pattern_node(lex: &mut Lexer, trs: &Trs) -> Result<PatternNode, ParseError> {
    let (l, c) = lex.here();
    let name = lex.ident()?;
    let Some(id) = trs.signature().symbol(&name) else {
        return Err(ParseError::new(l, c, format!("unknown symbol `{name}`")));
    };
    if *lex.peek() == Tok::Caret {
        lex.next();
        let (ml, mc) = lex.here();
        let marker = lex.ident()?;
        if marker != "n" {
            return Err(ParseError::new(ml, mc, "the repetition exponent must be `n`"));
        }
        if trs.signature().arity(id) != 1 {
            return Err(ParseError::new(l, c, format!("`{name}` must be unary to repeat")));
        }
        lex.expect(Tok::LParen)?;
        let inner = parse_pattern_node(lex, trs)?;
        lex.expect(Tok::RParen)?;
        return Ok(PatternNode::Repeat(id, Box::new(inner)));
    }
    let mut args = Vec::new();
    if *lex.peek() == Tok::LParen {
        lex.next();
        loop {
            match lex.peek() {
                Tok::RParen => {
                    lex.next();
                    break;
                }
                Tok::Comma | Tok::Semi => {
                    lex.next();
                }
                _ => args.push(parse_pattern_node(lex, trs)?),
            }
        }
    }
    if trs.signature().arity(id) != args.len() {
        return Err(ParseError::new(
            l,
            c,
            format!(
                "`{name}` expects {} arguments, got {}",
                trs.signature().arity(id),
                args.len()
            ),
        ));
    }
    Ok(PatternNode::App(id, args))
}

/// Parses a certificate against the system it certifies.
///
/// Format, one `key: value` per line (`#` comments allowed):
///
/// ```text
/// variant: spop
/// precedence: square > times > plus > S ~ Z
/// recursive: plus times
/// safe: plus 2
/// safe: times
/// safe: square
/// ```
///
/// `precedence` lists every symbol once, classes joined by `~` and separated
/// by `>`, highest first. `recursive` names the recursive defined symbols.
/// One `safe` line per defined symbol lists its safe positions (1-based);
/// constructors are implicitly all-safe.
pub fn parse_certificate(src: &str, trs: &Trs) -> Result<Certificate, ParseError> {
    let sig = trs.signature();
    let mut variant: Option<Variant> = None;
    let mut classes: Option<Vec<Vec<SymbolId>>> = None;
    let mut recursive: Option<Vec<SymbolId>> = None;
    let mut safe_lines: HashMap<SymbolId, Vec<usize>> = HashMap::new();
    for (li, raw) in src.lines().enumerate() {
        let line_no = li + 1;
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, rest)) = content.split_once(':') else {
            return Err(ParseError::new(line_no, 1, "expected `key: value`"));
        };
        let rest = rest.trim();
        match key.trim() {
            "variant" => {
                if variant.is_some() {
                    return Err(ParseError::new(line_no, 1, "duplicate `variant`"));
                }
                variant = Some(Variant::parse(rest).ok_or_else(|| {
                    ParseError::new(line_no, 1, format!("unknown variant `{rest}`"))
                })?);
            }
            "precedence" => {
                if classes.is_some() {
                    return Err(ParseError::new(line_no, 1, "duplicate `precedence`"));
                }
                classes = Some(parse_precedence_line(rest, sig, line_no)?);
            }
            "recursive" => {
                if recursive.is_some() {
                    return Err(ParseError::new(line_no, 1, "duplicate `recursive`"));
                }
                let mut out = Vec::new();
                for name in rest.split_whitespace() {
                    let id = lookup(sig, name, line_no)?;
                    out.push(id);
                }
                recursive = Some(out);
            }
            "safe" => {
                let mut parts = rest.split_whitespace();
                let Some(name) = parts.next() else {
                    return Err(ParseError::new(line_no, 1, "`safe` needs a symbol name"));
                };
                let id = lookup(sig, name, line_no)?;
                if safe_lines.contains_key(&id) {
                    return Err(ParseError::new(
                        line_no,
                        1,
                        format!("duplicate `safe` line for `{name}`"),
                    ));
                }
                let mut positions = Vec::new();
                for p in parts {
                    let n: usize = p.parse().map_err(|_| {
                        ParseError::new(line_no, 1, format!("`{p}` is not a position"))
                    })?;
                    if n == 0 || n > sig.arity(id) {
                        return Err(ParseError::new(
                            line_no,
                            1,
                            format!("position {n} out of range for `{name}`"),
                        ));
                    }
                    positions.push(n);
                }
                safe_lines.insert(id, positions);
            }
            other => {
                return Err(ParseError::new(line_no, 1, format!("unknown key `{other}`")));
            }
        }
    }
    let variant = variant.ok_or_else(|| ParseError::new(1, 1, "missing `variant` line"))?;
    let classes = classes.ok_or_else(|| ParseError::new(1, 1, "missing `precedence` line"))?;
    let precedence = Precedence::new(sig, classes).map_err(|e| ParseError::new(1, 1, e.to_string()))?;
    let recursive = recursive.unwrap_or_default();
    let mut kinds = Vec::with_capacity(sig.len());
    for f in sig.symbols() {
        let kind = if trs.is_defined(f) {
            if recursive.contains(&f) {
                Kind::Recursive
            } else {
                Kind::Compositional
            }
        } else {
            if recursive.contains(&f) {
                return Err(ParseError::new(
                    1,
                    1,
                    format!("constructor `{}` cannot be recursive", sig.name(f)),
                ));
            }
            Kind::Constructor
        };
        kinds.push(kind);
    }
    let mut masks = Vec::with_capacity(sig.len());
    for f in sig.symbols() {
        let arity = sig.arity(f);
        let full = if arity == 0 { 0 } else { (1u64 << arity) - 1 };
        if trs.is_defined(f) {
            let Some(safe) = safe_lines.get(&f) else {
                return Err(ParseError::new(
                    1,
                    1,
                    format!("missing `safe` line for defined symbol `{}`", sig.name(f)),
                ));
            };
            let mut mask = full;
            for &p in safe {
                mask &= !(1u64 << (p - 1));
            }
            masks.push(mask);
        } else {
            if let Some(safe) = safe_lines.get(&f) {
                let mut mask = full;
                for &p in safe {
                    mask &= !(1u64 << (p - 1));
                }
                if mask != 0 {
                    return Err(ParseError::new(
                        1,
                        1,
                        format!("constructor `{}` must list every position as safe", sig.name(f)),
                    ));
                }
            }
            masks.push(0);
        }
    }
    let tiering =
        Tiering::new(sig, kinds, masks).map_err(|e| ParseError::new(1, 1, e.to_string()))?;
    Ok(Certificate {
        precedence,
        tiering,
        variant,
    })
}

fn lookup(sig: &Signature, name: &str, line: usize) -> Result<SymbolId, ParseError> {
    sig.symbol(name)
        .ok_or_else(|| ParseError::new(line, 1, format!("unknown symbol `{name}`")))
}

fn parse_precedence_line(
    rest: &str,
    sig: &Signature,
    line: usize,
) -> Result<Vec<Vec<SymbolId>>, ParseError> {
    let mut classes = Vec::new();
    if rest.trim().is_empty() {
        return Ok(classes);
    }
    for class_text in rest.split('>') {
        let mut class = Vec::new();
        for name in class_text.split('~') {
            let name = name.trim();
            if name.is_empty() {
                return Err(ParseError::new(line, 1, "empty symbol name in precedence"));
            }
            class.push(lookup(sig, name, line)?);
        }
        classes.push(class);
    }
    Ok(classes)
}

/// Canonical certificate text; `parse_certificate` inverts it byte-exactly.
pub fn print_certificate(cert: &Certificate, trs: &Trs) -> String {
    let sig = trs.signature();
    let mut out = String::new();
    out.push_str("variant: ");
    out.push_str(cert.variant.as_str());
    out.push('\n');
    out.push_str("precedence:");
    for (i, class) in cert.precedence.classes().iter().enumerate() {
        if i > 0 {
            out.push_str(" >");
        }
        for (j, &f) in class.iter().enumerate() {
            if j > 0 {
                out.push_str(" ~");
            }
            out.push(' ');
            out.push_str(sig.name(f));
        }
    }
    out.push('\n');
    out.push_str("recursive:");
    for f in sig.symbols() {
        if cert.tiering.kind(f) == Kind::Recursive {
            out.push(' ');
            out.push_str(sig.name(f));
        }
    }
    out.push('\n');
    for f in sig.symbols() {
        if !trs.is_defined(f) {
            continue;
        }
        out.push_str("safe: ");
        out.push_str(sig.name(f));
        for p in cert.tiering.safe_positions(f, sig.arity(f)) {
            out.push(' ');
            out.push_str(&(p + 1).to_string());
        }
        out.push('\n');
    }
    out
}

/// The inline splits of the source text must agree with the certificate.
pub fn check_declared_splits(
    parsed: &ParsedTrs,
    cert: &Certificate,
) -> Result<(), ParseError> {
    let sig = parsed.trs.signature();
    for (&f, &mask) in &parsed.declared_masks {
        if cert.tiering.normal_mask(f) != mask {
            return Err(ParseError::new(
                1,
                1,
                format!(
                    "inline split of `{}` disagrees with the certificate's safe mapping",
                    sig.name(f)
                ),
            ));
        }
    }
    Ok(())
}

/// Parses a word-algebra program.
///
/// Grammar (comments with `#`):
///
/// ```text
/// expr := P | C | S0 | S1
///       | O[k,l]                      zero
///       | I[k,l,j]                    projection (1-based j)
///       | wsc[k,l](h; i1, ..; g1, ..) weak safe composition
///       | srn(g, h0, h1)              safe recursion on notation
///       | srnps(g, h0, h1; p1, ..)    with parameter substitution
/// ```
pub fn parse_bwsc_program(src: &str) -> Result<BwscExpr, ParseError> {
    let mut lex = Lexer::new(src)?;
    let e = parse_bwsc_expr(&mut lex)?;
    lex.expect(Tok::Eof)?;
    Ok(e)
}

fn parse_bwsc_expr(lex: &mut Lexer) -> Result<BwscExpr, ParseError> {
    let (l, c) = lex.here();
    let head = lex.ident()?;
    match head.as_str() {
        "P" => Ok(BwscExpr::Pred),
        "C" => Ok(BwscExpr::Cond),
        "S0" => Ok(BwscExpr::Succ(0)),
        "S1" => Ok(BwscExpr::Succ(1)),
        "O" => {
            lex.expect(Tok::LBracket)?;
            let k = lex.num()? as usize;
            lex.expect(Tok::Comma)?;
            let safes = lex.num()? as usize;
            lex.expect(Tok::RBracket)?;
            Ok(BwscExpr::Zero { normals: k, safes })
        }
        "I" => {
            lex.expect(Tok::LBracket)?;
            let k = lex.num()? as usize;
            lex.expect(Tok::Comma)?;
            let safes = lex.num()? as usize;
            lex.expect(Tok::Comma)?;
            let index = lex.num()? as usize;
            lex.expect(Tok::RBracket)?;
            Ok(BwscExpr::Proj {
                normals: k,
                safes,
                index,
            })
        }
        "wsc" => {
            lex.expect(Tok::LBracket)?;
            let normals = lex.num()? as usize;
            lex.expect(Tok::Comma)?;
            let safes = lex.num()? as usize;
            lex.expect(Tok::RBracket)?;
            lex.expect(Tok::LParen)?;
            let h = Rc::new(parse_bwsc_expr(lex)?);
            lex.expect(Tok::Semi)?;
            let mut selection = Vec::new();
            while let Tok::Num(_) = lex.peek() {
                selection.push(lex.num()? as usize);
                if *lex.peek() == Tok::Comma {
                    lex.next();
                }
            }
            lex.expect(Tok::Semi)?;
            let mut gs = Vec::new();
            while *lex.peek() != Tok::RParen {
                gs.push(Rc::new(parse_bwsc_expr(lex)?));
                if *lex.peek() == Tok::Comma {
                    lex.next();
                }
            }
            lex.expect(Tok::RParen)?;
            Ok(BwscExpr::Wsc {
                normals,
                safes,
                h,
                selection,
                gs,
            })
        }
        "srn" => {
            lex.expect(Tok::LParen)?;
            let g = Rc::new(parse_bwsc_expr(lex)?);
            lex.expect(Tok::Comma)?;
            let h0 = Rc::new(parse_bwsc_expr(lex)?);
            lex.expect(Tok::Comma)?;
            let h1 = Rc::new(parse_bwsc_expr(lex)?);
            lex.expect(Tok::RParen)?;
            Ok(BwscExpr::Srn { g, h0, h1 })
        }
        "srnps" => {
            lex.expect(Tok::LParen)?;
            let g = Rc::new(parse_bwsc_expr(lex)?);
            lex.expect(Tok::Comma)?;
            let h0 = Rc::new(parse_bwsc_expr(lex)?);
            lex.expect(Tok::Comma)?;
            let h1 = Rc::new(parse_bwsc_expr(lex)?);
            lex.expect(Tok::Semi)?;
            let mut ps = Vec::new();
            while *lex.peek() != Tok::RParen {
                ps.push(Rc::new(parse_bwsc_expr(lex)?));
                if *lex.peek() == Tok::Comma {
                    lex.next();
                }
            }
            lex.expect(Tok::RParen)?;
            Ok(BwscExpr::SrnPs { g, h0, h1, ps })
        }
        other => Err(ParseError::new(l, c, format!("unknown function `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::square;
    use crate::order::check_compatibility;

    const SQUARE_TRS: &str = "\
(VAR x y)
(RULES
  plus(Z; y) -> y
  plus(S(; x); y) -> S(; plus(x; y))
  times(Z, y;) -> Z
  times(S(; x), y;) -> plus(y; times(x, y;))
  square(x;) -> times(x, x;)
)
";

    const SQUARE_CERT: &str = "\
variant: spop
precedence: square > times > plus > S ~ Z
recursive: plus times
safe: plus 2
safe: times
safe: square
";

    #[test]
    fn parses_the_square_system() {
        let parsed = parse_trs(SQUARE_TRS).unwrap();
        assert_eq!(parsed.trs.rules().len(), 5);
        assert!(parsed.trs.is_constructor_trs());
        let sig = parsed.trs.signature();
        let plus = sig.symbol("plus").unwrap();
        let times = sig.symbol("times").unwrap();
        let s = sig.symbol("S").unwrap();
        assert_eq!(parsed.declared_masks[&plus], 0b01);
        assert_eq!(parsed.declared_masks[&times], 0b11);
        assert_eq!(parsed.declared_masks[&s], 0);
    }

    #[test]
    fn parses_and_validates_the_square_certificate() {
        let parsed = parse_trs(SQUARE_TRS).unwrap();
        let cert = parse_certificate(SQUARE_CERT, &parsed.trs).unwrap();
        check_declared_splits(&parsed, &cert).unwrap();
        let report = check_compatibility(&parsed.trs, &cert).unwrap();
        assert_eq!(report.degree, 2);
    }

    #[test]
    fn certificate_round_trips_byte_exactly() {
        let parsed = parse_trs(SQUARE_TRS).unwrap();
        let cert = parse_certificate(SQUARE_CERT, &parsed.trs).unwrap();
        let printed = print_certificate(&cert, &parsed.trs);
        let reparsed = parse_certificate(&printed, &parsed.trs).unwrap();
        assert_eq!(cert, reparsed);
        assert_eq!(printed, print_certificate(&reparsed, &parsed.trs));
    }

    #[test]
    fn trs_printing_round_trips() {
        let sq = square();
        let printed = print_trs(&sq.trs, Some(&sq.cert.tiering));
        let reparsed = parse_trs(&printed).unwrap();
        assert_eq!(reparsed.trs.rules().len(), 5);
        let plus = reparsed.trs.signature().symbol("plus").unwrap();
        assert_eq!(reparsed.declared_masks[&plus], 0b01);
        // and the re-print is stable
        let cert2 = Certificate {
            precedence: Precedence::new(
                reparsed.trs.signature(),
                parse_certificate(SQUARE_CERT, &reparsed.trs)
                    .unwrap()
                    .precedence
                    .classes()
                    .to_vec(),
            )
            .unwrap(),
            ..parse_certificate(SQUARE_CERT, &reparsed.trs).unwrap()
        };
        assert_eq!(printed, print_trs(&reparsed.trs, Some(&cert2.tiering)));
    }

    #[test]
    fn mismatched_splits_are_rejected() {
        let src = "\
(VAR x y)
(RULES
  plus(Z; y) -> y
  plus(S(; x), y) -> plus(x; y)
)
";
        // plus declared with 1 normal argument on line 3 but used with a plain
        // comma on line 4 is fine; a conflicting `;` position is not.
        assert!(parse_trs(src).is_ok());
        let bad = "\
(VAR x y)
(RULES
  plus(Z; y) -> y
  plus(S(; x), y;) -> plus(x; y)
)
";
        let err = parse_trs(bad).unwrap_err();
        assert!(err.msg.contains("normal arguments"), "{err}");
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_trs("(RULES\n  f(x) -> ?\n)").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.msg.contains("unexpected character"));
        let err = parse_trs("(VAR x)\n(RULES x -> x)").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn arity_clashes_are_parse_errors() {
        let err = parse_trs("(VAR x)\n(RULES\n  f(x) -> g(x, x)\n  g(x) -> x\n)").unwrap_err();
        assert!(err.msg.contains("arguments"), "{err}");
    }

    #[test]
    fn cert_missing_safe_line_is_an_error() {
        let parsed = parse_trs(SQUARE_TRS).unwrap();
        let broken = SQUARE_CERT.replace("safe: square\n", "");
        let err = parse_certificate(&broken, &parsed.trs).unwrap_err();
        assert!(err.msg.contains("missing `safe` line"), "{err}");
    }

    #[test]
    fn ground_terms_and_patterns() {
        let parsed = parse_trs(SQUARE_TRS).unwrap();
        let t = parse_ground_term("square(S(S(Z)))", &parsed.trs).unwrap();
        assert_eq!(t.size(), 4);
        let t2 = parse_ground_term("square(S(; S(; Z));)", &parsed.trs).unwrap();
        assert_eq!(t, t2);
        assert!(parse_ground_term("square(y)", &parsed.trs).is_err());
        let pat = parse_pattern("square(S^n(Z);)", &parsed.trs).unwrap();
        assert_eq!(pat.instantiate(0), parse_ground_term("square(Z)", &parsed.trs).unwrap());
        assert_eq!(
            pat.instantiate(2),
            parse_ground_term("square(S(S(Z)))", &parsed.trs).unwrap()
        );
    }

    #[test]
    fn bwsc_program_syntax() {
        let src = "\
# append |x| zeros to y
srn(I[0,1,1], wsc[1,2](S0; ; I[1,2,3]), wsc[1,2](S0; ; I[1,2,3]))
";
        let e = parse_bwsc_program(src).unwrap();
        assert_eq!(e.well_formed().unwrap(), (1, 1));
        assert_eq!(e.nesting_depth(), 1);
        assert!(parse_bwsc_program("srn(P, P, P, P)").is_err());
        assert!(parse_bwsc_program("Q").is_err());
    }
}
