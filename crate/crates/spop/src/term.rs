//! First-order terms over a finite signature.
//!
//! Symbols and variables are interned in a [`Signature`]; terms refer to them
//! by index. All term values are immutable after construction and safe to
//! share across threads.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Index of a function symbol in its [`Signature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolId(pub u32);

/// Index of a variable in its [`Signature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

#[derive(Debug, Clone)]
struct SymbolDecl {
    name: String,
    arity: usize,
}

/// Interning table for function symbols and variables.
#[derive(Debug, Clone, Default)]
pub struct Signature {
    symbols: Vec<SymbolDecl>,
    by_name: HashMap<String, SymbolId>,
    vars: Vec<String>,
    var_by_name: HashMap<String, VarId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("symbol `{0}` already declared with arity {1}, now used with arity {2}")]
    ArityClash(String, usize, usize),
    #[error("name `{0}` is used both as a variable and as a function symbol")]
    NameClash(String),
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `name` with the given arity. Re-declaring with the same arity
    /// returns the existing id.
    pub fn add_symbol(&mut self, name: &str, arity: usize) -> Result<SymbolId, SignatureError> {
        if self.var_by_name.contains_key(name) {
            return Err(SignatureError::NameClash(name.to_owned()));
        }
        if let Some(&id) = self.by_name.get(name) {
            let declared = self.symbols[id.0 as usize].arity;
            if declared != arity {
                return Err(SignatureError::ArityClash(name.to_owned(), declared, arity));
            }
            return Ok(id);
        }
        let id = SymbolId(self.symbols.len() as u32);
        self.symbols.push(SymbolDecl {
            name: name.to_owned(),
            arity,
        });
        self.by_name.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn add_var(&mut self, name: &str) -> Result<VarId, SignatureError> {
        if self.by_name.contains_key(name) {
            return Err(SignatureError::NameClash(name.to_owned()));
        }
        if let Some(&id) = self.var_by_name.get(name) {
            return Ok(id);
        }
        let id = VarId(self.vars.len() as u32);
        self.vars.push(name.to_owned());
        self.var_by_name.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn symbol(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.symbols[id.0 as usize].name
    }

    pub fn arity(&self, id: SymbolId) -> usize {
        self.symbols[id.0 as usize].arity
    }

    pub fn var_name(&self, id: VarId) -> &str {
        &self.vars[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.symbols.len() as u32).map(SymbolId)
    }
}

/// A first-order term: a variable or a symbol applied to arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(VarId),
    App(SymbolId, Vec<Term>),
}

impl Term {
    pub fn app(f: SymbolId, args: Vec<Term>) -> Term {
        Term::App(f, args)
    }

    pub fn constant(f: SymbolId) -> Term {
        Term::App(f, Vec::new())
    }

    pub fn root(&self) -> Option<SymbolId> {
        match self {
            Term::Var(_) => None,
            Term::App(f, _) => Some(*f),
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::App(_, args) => args,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Depth: 0 for variables and constants, otherwise one more than the
    /// deepest argument.
    pub fn depth(&self) -> u64 {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => match args.iter().map(Term::depth).max() {
                None => 0,
                Some(d) => d + 1,
            },
        }
    }

    /// Number of symbol and variable occurrences.
    pub fn size(&self) -> u64 {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<u64>(),
        }
    }

    /// All subterms including `self`, pre-order.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.collect_subterms(&mut out);
        out
    }

    fn collect_subterms<'a>(&'a self, out: &mut Vec<&'a Term>) {
        out.push(self);
        for arg in self.args() {
            arg.collect_subterms(out);
        }
    }

    /// Proper subterms: everything below the root.
    pub fn proper_subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        for arg in self.args() {
            arg.collect_subterms(&mut out);
        }
        out
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::App(_, args) => {
                for arg in args {
                    arg.collect_vars(out);
                }
            }
        }
    }

    pub fn contains_symbol_where(&self, pred: &impl Fn(SymbolId) -> bool) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(f, args) => {
                pred(*f) || args.iter().any(|a| a.contains_symbol_where(pred))
            }
        }
    }

    /// Applies a substitution, leaving unmapped variables in place.
    pub fn substitute(&self, subst: &Subst) -> Term {
        match self {
            Term::Var(v) => match subst.get(*v) {
                Some(t) => t.clone(),
                None => self.clone(),
            },
            Term::App(f, args) => {
                Term::App(*f, args.iter().map(|a| a.substitute(subst)).collect())
            }
        }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> TermDisplay<'a> {
        TermDisplay { term: self, sig }
    }
}

/// A finite map from variables to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst {
    map: HashMap<VarId, Term>,
}

impl Subst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, v: VarId, t: Term) {
        self.map.insert(v, t);
    }

    pub fn get(&self, v: VarId) -> Option<&Term> {
        self.map.get(&v)
    }

    /// Binds `v` to `t`, failing if `v` is already bound to a different term.
    pub fn bind_consistent(&mut self, v: VarId, t: &Term) -> bool {
        match self.map.get(&v) {
            Some(existing) => existing == t,
            None => {
                self.map.insert(v, t.clone());
                true
            }
        }
    }
}

pub struct TermDisplay<'a> {
    term: &'a Term,
    sig: &'a Signature,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.term {
            Term::Var(v) => write!(f, "{}", self.sig.var_name(*v)),
            Term::App(sym, args) => {
                write!(f, "{}", self.sig.name(*sym))?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, arg) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{}", arg.display(self.sig))?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}
