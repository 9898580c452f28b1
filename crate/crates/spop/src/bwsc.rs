//! A tiered function algebra on binary words, its evaluator, and a compiler
//! into certified rewrite systems.
//!
//! Functions take `k` normal and `l` safe word arguments. The algebra is
//! generated from initial functions (zero, projections, predecessor,
//! conditional) by weak safe composition and safe recursion on notation,
//! optionally with parameter substitution. Recursion always destructs the
//! first normal argument; recursive results only ever flow into safe
//! positions.
//!
//! Compilation emits one defined symbol per distinct sub-expression, the
//! defining rules over the word constructors, and a certificate whose degree
//! equals the nesting depth of recursion schemas.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::order::{Certificate, Variant};
use crate::prec::{Kind, Precedence, Tiering};
use crate::term::{Signature, SymbolId, Term, VarId};
use crate::trs::{Rule, Trs};

/// A binary word; bit `i` is appended on the right, so `push` builds the word
/// left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Word {
        Word::default()
    }

    pub fn from_bits(bits: &[u8]) -> Word {
        assert!(bits.iter().all(|&b| b <= 1));
        Word(bits.to_vec())
    }

    /// Parses `e` (the empty word) or a string of 0s and 1s.
    pub fn parse(s: &str) -> Option<Word> {
        if s == "e" {
            return Some(Word::empty());
        }
        let mut bits = Vec::new();
        for c in s.chars() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => return None,
            }
        }
        if bits.is_empty() {
            return None;
        }
        Some(Word(bits))
    }

    pub fn push(&self, bit: u8) -> Word {
        let mut bits = self.0.clone();
        bits.push(bit);
        Word(bits)
    }

    /// Splits off the last (most recently appended) bit.
    pub fn split_last(&self) -> Option<(Word, u8)> {
        let mut bits = self.0.clone();
        let bit = bits.pop()?;
        Some((Word(bits), bit))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Expressions of the algebra. `Wsc` carries its own arity because the
/// composed functions alone do not determine it when the list is empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BwscExpr {
    /// `O^{k,l}`: constantly the empty word.
    Zero { normals: usize, safes: usize },
    /// `I^{k,l}_j`: the j-th argument, 1-based across normals then safes.
    Proj {
        normals: usize,
        safes: usize,
        index: usize,
    },
    /// Predecessor: drops the last bit.
    Pred,
    /// Four-way conditional on the last bit of its first safe argument.
    Cond,
    /// Constructor successor `S_i`; only usable inside schema bodies.
    Succ(u8),
    /// Weak safe composition: `f(x; y) = h(x_{i_1}, .., x_{i_m}; g_1(x; y), ..)`.
    Wsc {
        normals: usize,
        safes: usize,
        h: Rc<BwscExpr>,
        selection: Vec<usize>,
        gs: Vec<Rc<BwscExpr>>,
    },
    /// Safe recursion on notation over the first normal argument.
    Srn {
        g: Rc<BwscExpr>,
        h0: Rc<BwscExpr>,
        h1: Rc<BwscExpr>,
    },
    /// Safe recursion with parameter substitution: the recursive call
    /// receives `p_j(z, x; y)` at its safe positions.
    SrnPs {
        g: Rc<BwscExpr>,
        h0: Rc<BwscExpr>,
        h1: Rc<BwscExpr>,
        ps: Vec<Rc<BwscExpr>>,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BwscError {
    #[error("projection index {index} out of range for arity ({normals}; {safes})")]
    BadProjection {
        normals: usize,
        safes: usize,
        index: usize,
    },
    #[error("composition selects normal argument {index}, but only {normals} exist")]
    BadSelection { normals: usize, index: usize },
    #[error("inner function of a composition has arity ({0}; {1}), expected ({2}; {3})")]
    CompositionArity(usize, usize, usize, usize),
    #[error("step function of a recursion has arity ({0}; {1}), expected ({2}; {3})")]
    StepArity(usize, usize, usize, usize),
    #[error("parameter function has arity ({0}; {1}), expected ({2}; {3})")]
    ParameterArity(usize, usize, usize, usize),
    #[error("parameter substitution needs one parameter function per safe argument")]
    ParameterCount,
    #[error("constructor successors are only usable inside schema bodies")]
    SuccAtTopLevel,
    #[error("expected {expected} {which} arguments, got {got}")]
    ArgCount {
        which: &'static str,
        expected: usize,
        got: usize,
    },
}

impl BwscExpr {
    /// Normal/safe arity, validating the schema shapes along the way.
    pub fn arity(&self) -> Result<(usize, usize), BwscError> {
        match self {
            BwscExpr::Zero { normals, safes } => Ok((*normals, *safes)),
            BwscExpr::Proj {
                normals,
                safes,
                index,
            } => {
                if *index == 0 || *index > normals + safes {
                    return Err(BwscError::BadProjection {
                        normals: *normals,
                        safes: *safes,
                        index: *index,
                    });
                }
                Ok((*normals, *safes))
            }
            BwscExpr::Pred | BwscExpr::Succ(_) => Ok((0, 1)),
            BwscExpr::Cond => Ok((0, 4)),
            BwscExpr::Wsc {
                normals,
                safes,
                h,
                selection,
                gs,
            } => {
                for &i in selection {
                    if i == 0 || i > *normals {
                        return Err(BwscError::BadSelection {
                            normals: *normals,
                            index: i,
                        });
                    }
                }
                let (hk, hl) = h.arity()?;
                if hk != selection.len() || hl != gs.len() {
                    return Err(BwscError::CompositionArity(
                        hk,
                        hl,
                        selection.len(),
                        gs.len(),
                    ));
                }
                for g in gs {
                    let (gk, gl) = g.arity()?;
                    if gk != *normals || gl != *safes {
                        return Err(BwscError::CompositionArity(gk, gl, *normals, *safes));
                    }
                }
                Ok((*normals, *safes))
            }
            BwscExpr::Srn { g, h0, h1 } => {
                let (k, l) = g.arity()?;
                for h in [h0, h1] {
                    let (hk, hl) = h.arity()?;
                    if hk != k + 1 || hl != l + 1 {
                        return Err(BwscError::StepArity(hk, hl, k + 1, l + 1));
                    }
                }
                Ok((k + 1, l))
            }
            BwscExpr::SrnPs { g, h0, h1, ps } => {
                let (k, l) = g.arity()?;
                for h in [h0, h1] {
                    let (hk, hl) = h.arity()?;
                    if hk != k + 1 || hl != l + 1 {
                        return Err(BwscError::StepArity(hk, hl, k + 1, l + 1));
                    }
                }
                if ps.len() != l {
                    return Err(BwscError::ParameterCount);
                }
                for p in ps {
                    let (pk, pl) = p.arity()?;
                    if pk != k + 1 || pl != l {
                        return Err(BwscError::ParameterArity(pk, pl, k + 1, l));
                    }
                }
                Ok((k + 1, l))
            }
        }
    }

    /// Arity check plus the top-level successor restriction.
    pub fn well_formed(&self) -> Result<(usize, usize), BwscError> {
        if matches!(self, BwscExpr::Succ(_)) {
            return Err(BwscError::SuccAtTopLevel);
        }
        self.arity()
    }

    /// Maximal number of nested recursion schemas on any path.
    pub fn nesting_depth(&self) -> u64 {
        match self {
            BwscExpr::Zero { .. }
            | BwscExpr::Proj { .. }
            | BwscExpr::Pred
            | BwscExpr::Cond
            | BwscExpr::Succ(_) => 0,
            BwscExpr::Wsc { h, gs, .. } => {
                let mut d = h.nesting_depth();
                for g in gs {
                    d = d.max(g.nesting_depth());
                }
                d
            }
            BwscExpr::Srn { g, h0, h1 } => {
                1 + g
                    .nesting_depth()
                    .max(h0.nesting_depth())
                    .max(h1.nesting_depth())
            }
            BwscExpr::SrnPs { g, h0, h1, ps } => {
                let mut d = g
                    .nesting_depth()
                    .max(h0.nesting_depth())
                    .max(h1.nesting_depth());
                for p in ps {
                    d = d.max(p.nesting_depth());
                }
                1 + d
            }
        }
    }

    pub fn uses_parameter_substitution(&self) -> bool {
        match self {
            BwscExpr::SrnPs { .. } => true,
            BwscExpr::Wsc { h, gs, .. } => {
                h.uses_parameter_substitution() || gs.iter().any(|g| g.uses_parameter_substitution())
            }
            BwscExpr::Srn { g, h0, h1 } => {
                g.uses_parameter_substitution()
                    || h0.uses_parameter_substitution()
                    || h1.uses_parameter_substitution()
            }
            _ => false,
        }
    }
}

/// Evaluates a well-formed expression on the given argument words.
pub fn eval(e: &BwscExpr, normals: &[Word], safes: &[Word]) -> Result<Word, BwscError> {
    let (k, l) = e.well_formed()?;
    check_args(k, l, normals, safes)?;
    Ok(eval_rec(e, normals, safes, &mut 0))
}

/// Like [`eval`], also reporting how many recursion-schema unfoldings were
/// performed; that count depends only on the normal arguments.
pub fn eval_counting(
    e: &BwscExpr,
    normals: &[Word],
    safes: &[Word],
) -> Result<(Word, u64), BwscError> {
    let (k, l) = e.well_formed()?;
    check_args(k, l, normals, safes)?;
    let mut unfoldings = 0;
    let w = eval_rec(e, normals, safes, &mut unfoldings);
    Ok((w, unfoldings))
}

fn check_args(k: usize, l: usize, normals: &[Word], safes: &[Word]) -> Result<(), BwscError> {
    if normals.len() != k {
        return Err(BwscError::ArgCount {
            which: "normal",
            expected: k,
            got: normals.len(),
        });
    }
    if safes.len() != l {
        return Err(BwscError::ArgCount {
            which: "safe",
            expected: l,
            got: safes.len(),
        });
    }
    Ok(())
}

fn eval_rec(e: &BwscExpr, normals: &[Word], safes: &[Word], unfoldings: &mut u64) -> Word {
    match e {
        BwscExpr::Zero { .. } => Word::empty(),
        BwscExpr::Proj { normals: k, index, .. } => {
            if *index <= *k {
                normals[*index - 1].clone()
            } else {
                safes[*index - 1 - *k].clone()
            }
        }
        BwscExpr::Pred => match safes[0].split_last() {
            Some((w, _)) => w,
            None => Word::empty(),
        },
        BwscExpr::Cond => match safes[0].split_last() {
            None => safes[1].clone(),
            Some((_, 0)) => safes[2].clone(),
            Some((_, _)) => safes[3].clone(),
        },
        BwscExpr::Succ(i) => safes[0].push(*i),
        BwscExpr::Wsc {
            h, selection, gs, ..
        } => {
            let h_normals: Vec<Word> = selection
                .iter()
                .map(|&i| normals[i - 1].clone())
                .collect();
            let h_safes: Vec<Word> = gs
                .iter()
                .map(|g| eval_rec(g, normals, safes, unfoldings))
                .collect();
            eval_rec(h, &h_normals, &h_safes, unfoldings)
        }
        BwscExpr::Srn { g, h0, h1 } => match normals[0].split_last() {
            None => eval_rec(g, &normals[1..], safes, unfoldings),
            Some((z, bit)) => {
                *unfoldings += 1;
                let mut rec_normals = vec![z.clone()];
                rec_normals.extend_from_slice(&normals[1..]);
                let rec = eval_rec(e, &rec_normals, safes, unfoldings);
                let mut h_safes = safes.to_vec();
                h_safes.push(rec);
                let h = if bit == 0 { h0 } else { h1 };
                eval_rec(h, &rec_normals, &h_safes, unfoldings)
            }
        },
        BwscExpr::SrnPs { g, h0, h1, ps } => match normals[0].split_last() {
            None => eval_rec(g, &normals[1..], safes, unfoldings),
            Some((z, bit)) => {
                *unfoldings += 1;
                let mut rec_normals = vec![z.clone()];
                rec_normals.extend_from_slice(&normals[1..]);
                let rec_safes: Vec<Word> = ps
                    .iter()
                    .map(|p| eval_rec(p, &rec_normals, safes, unfoldings))
                    .collect();
                let rec = eval_rec(e, &rec_normals, &rec_safes, unfoldings);
                let mut h_safes = safes.to_vec();
                h_safes.push(rec);
                let h = if bit == 0 { h0 } else { h1 };
                eval_rec(h, &rec_normals, &h_safes, unfoldings)
            }
        },
    }
}

/// The result of compiling an expression: the rewrite system, its
/// certificate, the root symbol, and the word constructors.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub trs: Trs,
    pub certificate: Certificate,
    pub root: SymbolId,
    pub eps: SymbolId,
    pub s0: SymbolId,
    pub s1: SymbolId,
}

impl CompiledProgram {
    pub fn encode_word(&self, w: &Word) -> Term {
        let mut t = Term::constant(self.eps);
        for &bit in w.bits() {
            let c = if bit == 0 { self.s0 } else { self.s1 };
            t = Term::App(c, vec![t]);
        }
        t
    }

    pub fn decode_word(&self, t: &Term) -> Option<Word> {
        let mut bits = Vec::new();
        let mut cur = t;
        loop {
            match cur {
                Term::App(f, args) if *f == self.eps && args.is_empty() => {
                    bits.reverse();
                    return Some(Word::from_bits(&bits));
                }
                Term::App(f, args) if (*f == self.s0 || *f == self.s1) && args.len() == 1 => {
                    bits.push(if *f == self.s0 { 0 } else { 1 });
                    cur = &args[0];
                }
                _ => return None,
            }
        }
    }

    /// The basic term `root(normals; safes)` with encoded word arguments.
    pub fn call(&self, normals: &[Word], safes: &[Word]) -> Term {
        let mut args: Vec<Term> = normals.iter().map(|w| self.encode_word(w)).collect();
        args.extend(safes.iter().map(|w| self.encode_word(w)));
        Term::App(self.root, args)
    }
}

/// Compiles a well-formed expression into a rewrite system plus certificate.
/// Shared sub-expressions compile to shared symbols; the certificate puts
/// every schema symbol strictly above its ingredients, marks exactly the
/// recursion symbols recursive, and keeps the root maximal.
pub fn compile_to_trs(expr: &BwscExpr) -> Result<CompiledProgram, BwscError> {
    expr.well_formed()?;
    let mut c = Compiler::new();
    let root = c.symbol_for(expr)?;
    c.finish(expr, root)
}

struct Compiler {
    sig: Signature,
    eps: SymbolId,
    s0: SymbolId,
    s1: SymbolId,
    z_var: VarId,
    x_vars: Vec<VarId>,
    y_vars: Vec<VarId>,
    rules: Vec<Rule>,
    symbols: HashMap<BwscExpr, SymbolId>,
    exprs: Vec<(BwscExpr, SymbolId)>,
    used_names: HashMap<String, BwscExpr>,
}

impl Compiler {
    fn new() -> Compiler {
        let mut sig = Signature::new();
        let eps = sig.add_symbol("eps", 0).unwrap();
        let s0 = sig.add_symbol("s0", 1).unwrap();
        let s1 = sig.add_symbol("s1", 1).unwrap();
        let z_var = sig.add_var("z").unwrap();
        Compiler {
            sig,
            eps,
            s0,
            s1,
            z_var,
            x_vars: Vec::new(),
            y_vars: Vec::new(),
            rules: Vec::new(),
            symbols: HashMap::new(),
            exprs: Vec::new(),
            used_names: HashMap::new(),
        }
    }

    fn x(&mut self, i: usize) -> Term {
        while self.x_vars.len() <= i {
            let name = format!("x{}", self.x_vars.len() + 1);
            self.x_vars.push(self.sig.add_var(&name).unwrap());
        }
        Term::Var(self.x_vars[i])
    }

    fn y(&mut self, i: usize) -> Term {
        while self.y_vars.len() <= i {
            let name = format!("y{}", self.y_vars.len() + 1);
            self.y_vars.push(self.sig.add_var(&name).unwrap());
        }
        Term::Var(self.y_vars[i])
    }

    fn base_name(&self, e: &BwscExpr) -> String {
        match e {
            BwscExpr::Zero { normals, safes } => format!("zero_{normals}_{safes}"),
            BwscExpr::Proj {
                normals,
                safes,
                index,
            } => format!("proj_{normals}_{safes}_{index}"),
            BwscExpr::Pred => "pred".to_owned(),
            BwscExpr::Cond => "cond".to_owned(),
            BwscExpr::Succ(_) => unreachable!("successors are inlined"),
            BwscExpr::Wsc { .. } => format!("sub_{:08x}", structural_hash(e) as u32),
            BwscExpr::Srn { .. } => format!("srn_{:08x}", structural_hash(e) as u32),
            BwscExpr::SrnPs { .. } => format!("srnps_{:08x}", structural_hash(e) as u32),
        }
    }

    /// Symbol for a compiled sub-expression, emitting its rules on first use.
    fn symbol_for(&mut self, e: &BwscExpr) -> Result<SymbolId, BwscError> {
        if let Some(&sym) = self.symbols.get(e) {
            return Ok(sym);
        }
        let (k, l) = e.arity()?;
        let mut name = self.base_name(e);
        while let Some(prev) = self.used_names.get(&name) {
            if prev == e {
                break;
            }
            name.push('x'); // hash collision; disambiguate deterministically
        }
        self.used_names.insert(name.clone(), e.clone());
        let sym = self
            .sig
            .add_symbol(&name, k + l)
            .expect("fresh compiled symbol");
        self.symbols.insert(e.clone(), sym);
        self.exprs.push((e.clone(), sym));
        self.emit_rules(e, sym, k, l)?;
        Ok(sym)
    }

    /// Application of a schema ingredient: constructor successors are inlined,
    /// everything else becomes a call to its compiled symbol.
    fn apply(
        &mut self,
        e: &BwscExpr,
        normals: Vec<Term>,
        safes: Vec<Term>,
    ) -> Result<Term, BwscError> {
        if let BwscExpr::Succ(i) = e {
            let c = if *i == 0 { self.s0 } else { self.s1 };
            debug_assert!(normals.is_empty() && safes.len() == 1);
            return Ok(Term::App(c, safes));
        }
        let sym = self.symbol_for(e)?;
        let mut args = normals;
        args.extend(safes);
        Ok(Term::App(sym, args))
    }

    fn emit_rules(&mut self, e: &BwscExpr, sym: SymbolId, k: usize, l: usize) -> Result<(), BwscError> {
        match e {
            BwscExpr::Zero { .. } => {
                let args = self.arg_vars(k, l);
                self.rules.push(Rule {
                    lhs: Term::App(sym, args),
                    rhs: Term::constant(self.eps),
                });
            }
            BwscExpr::Proj { index, .. } => {
                let args = self.arg_vars(k, l);
                let rhs = args[*index - 1].clone();
                self.rules.push(Rule {
                    lhs: Term::App(sym, args),
                    rhs,
                });
            }
            BwscExpr::Pred => {
                let x = self.x(0);
                self.rules.push(Rule {
                    lhs: Term::App(sym, vec![Term::constant(self.eps)]),
                    rhs: Term::constant(self.eps),
                });
                for c in [self.s0, self.s1] {
                    self.rules.push(Rule {
                        lhs: Term::App(sym, vec![Term::App(c, vec![x.clone()])]),
                        rhs: x.clone(),
                    });
                }
            }
            BwscExpr::Cond => {
                let x = self.x(0);
                let rest: Vec<Term> = (0..3).map(|i| self.y(i)).collect();
                let mut lhs_args = vec![Term::constant(self.eps)];
                lhs_args.extend(rest.clone());
                self.rules.push(Rule {
                    lhs: Term::App(sym, lhs_args),
                    rhs: rest[0].clone(),
                });
                for (bit, c) in [(0, self.s0), (1, self.s1)] {
                    let mut lhs_args = vec![Term::App(c, vec![x.clone()])];
                    lhs_args.extend(rest.clone());
                    self.rules.push(Rule {
                        lhs: Term::App(sym, lhs_args),
                        rhs: rest[1 + bit].clone(),
                    });
                }
            }
            BwscExpr::Wsc {
                h, selection, gs, ..
            } => {
                let xs: Vec<Term> = (0..k).map(|i| self.x(i)).collect();
                let ys: Vec<Term> = (0..l).map(|i| self.y(i)).collect();
                let h_normals: Vec<Term> =
                    selection.iter().map(|&i| xs[i - 1].clone()).collect();
                let mut h_safes = Vec::new();
                for g in gs {
                    let call = self.apply(g, xs.clone(), ys.clone())?;
                    h_safes.push(call);
                }
                let rhs = self.apply(h, h_normals, h_safes)?;
                let mut lhs_args = xs;
                lhs_args.extend(ys);
                self.rules.push(Rule {
                    lhs: Term::App(sym, lhs_args),
                    rhs,
                });
            }
            BwscExpr::Srn { g, h0, h1 } => {
                self.emit_recursion_rules(sym, k, l, g, [h0, h1], None)?;
            }
            BwscExpr::SrnPs { g, h0, h1, ps } => {
                self.emit_recursion_rules(sym, k, l, g, [h0, h1], Some(ps))?;
            }
            BwscExpr::Succ(_) => unreachable!("successors are inlined"),
        }
        Ok(())
    }

    fn emit_recursion_rules(
        &mut self,
        sym: SymbolId,
        k: usize,
        l: usize,
        g: &Rc<BwscExpr>,
        hs: [&Rc<BwscExpr>; 2],
        ps: Option<&Vec<Rc<BwscExpr>>>,
    ) -> Result<(), BwscError> {
        // k counts the recursion argument; the remaining normals are x1..x_{k-1}.
        let xs: Vec<Term> = (0..k - 1).map(|i| self.x(i)).collect();
        let ys: Vec<Term> = (0..l).map(|i| self.y(i)).collect();
        // base: f(eps, x; y) -> g(x; y)
        let rhs = self.apply(g, xs.clone(), ys.clone())?;
        let mut lhs_args = vec![Term::constant(self.eps)];
        lhs_args.extend(xs.clone());
        lhs_args.extend(ys.clone());
        self.rules.push(Rule {
            lhs: Term::App(sym, lhs_args),
            rhs,
        });
        // steps: f(s_i(z), x; y) -> h_i(z, x; y, f(z, x; <safe args>))
        let z = Term::Var(self.z_var);
        for (bit, h) in hs.iter().enumerate() {
            let c = if bit == 0 { self.s0 } else { self.s1 };
            let mut rec_normals = vec![z.clone()];
            rec_normals.extend(xs.clone());
            let rec_safes = match ps {
                None => ys.clone(),
                Some(ps) => {
                    let mut out = Vec::new();
                    for p in ps {
                        out.push(self.apply(p, rec_normals.clone(), ys.clone())?);
                    }
                    out
                }
            };
            let mut rec_args = rec_normals.clone();
            rec_args.extend(rec_safes);
            let rec_call = Term::App(sym, rec_args);
            let mut h_safes = ys.clone();
            h_safes.push(rec_call);
            let rhs = self.apply(h, rec_normals, h_safes)?;
            let mut lhs_args = vec![Term::App(c, vec![z.clone()])];
            lhs_args.extend(xs.clone());
            lhs_args.extend(ys.clone());
            self.rules.push(Rule {
                lhs: Term::App(sym, lhs_args),
                rhs,
            });
        }
        Ok(())
    }

    fn arg_vars(&mut self, k: usize, l: usize) -> Vec<Term> {
        let mut args: Vec<Term> = (0..k).map(|i| self.x(i)).collect();
        args.extend((0..l).map(|i| self.y(i)));
        args
    }

    fn finish(self, root_expr: &BwscExpr, root: SymbolId) -> Result<CompiledProgram, BwscError> {
        let variant = if root_expr.uses_parameter_substitution() {
            Variant::SpopPs
        } else {
            Variant::Spop
        };
        let trs = Trs::new(self.sig, self.rules).expect("compiled rules are well-formed");
        let sig = trs.signature();
        // Levels: constructors at the bottom; defined symbols layered by
        // (nesting depth, height among equal depths). Symbols of one key are
        // never nested within each other, and recursion symbols always have
        // height 0, so each level is uniform in kind and the recursion depth
        // of the root equals its nesting depth.
        let mut keys: Vec<(u64, u64)> = Vec::new();
        let mut key_of: HashMap<SymbolId, (u64, u64)> = HashMap::new();
        for (e, sym) in &self.exprs {
            let key = (e.nesting_depth(), same_level_height(e));
            key_of.insert(*sym, key);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.sort();
        let mut levels = vec![0u32; sig.len()];
        for (sym, key) in &key_of {
            let rank = keys.iter().position(|k| k == key).unwrap() as u32;
            levels[sym.0 as usize] = rank + 1;
        }
        let precedence = Precedence::from_levels(sig, &levels);
        let mut kinds = vec![Kind::Constructor; sig.len()];
        let mut masks = vec![0u64; sig.len()];
        for (e, sym) in &self.exprs {
            let (k, _) = e.arity()?;
            kinds[sym.0 as usize] = match e {
                BwscExpr::Srn { .. } | BwscExpr::SrnPs { .. } => Kind::Recursive,
                _ => Kind::Compositional,
            };
            masks[sym.0 as usize] = if k == 0 { 0 } else { (1u64 << k) - 1 };
        }
        let tiering = Tiering::new(sig, kinds, masks).expect("compiled tiering is valid");
        let certificate = Certificate {
            precedence,
            tiering,
            variant,
        };
        Ok(CompiledProgram {
            trs,
            certificate,
            root,
            eps: self.eps,
            s0: self.s0,
            s1: self.s1,
        })
    }
}

/// Height of an expression among the sub-expressions that share its nesting
/// depth; ingredients always have a strictly smaller (depth, height) key.
fn same_level_height(e: &BwscExpr) -> u64 {
    let d = e.nesting_depth();
    let ingredients: Vec<&Rc<BwscExpr>> = match e {
        BwscExpr::Wsc { h, gs, .. } => {
            let mut v = vec![h];
            v.extend(gs.iter());
            v
        }
        BwscExpr::Srn { g, h0, h1 } => vec![g, h0, h1],
        BwscExpr::SrnPs { g, h0, h1, ps } => {
            let mut v = vec![g, h0, h1];
            v.extend(ps.iter());
            v
        }
        _ => return 0,
    };
    ingredients
        .iter()
        .filter(|i| !matches!(i.as_ref(), BwscExpr::Succ(_)))
        .filter(|i| i.nesting_depth() == d)
        .map(|i| 1 + same_level_height(i))
        .max()
        .unwrap_or(0)
}

/// FNV-1a over a canonical serialization; stable across runs and platforms.
fn structural_hash(e: &BwscExpr) -> u64 {
    let mut state = 0xcbf29ce484222325u64;
    hash_into(e, &mut state);
    state
}

fn fnv_byte(state: &mut u64, b: u8) {
    *state ^= b as u64;
    *state = state.wrapping_mul(0x100000001b3);
}

fn fnv_num(state: &mut u64, n: usize) {
    for b in (n as u64).to_le_bytes() {
        fnv_byte(state, b);
    }
}

fn hash_into(e: &BwscExpr, state: &mut u64) {
    let byte = |state: &mut u64, b: u8| fnv_byte(state, b);
    let num = |state: &mut u64, n: usize| fnv_num(state, n);
    match e {
        BwscExpr::Zero { normals, safes } => {
            byte(state, 1);
            num(state, *normals);
            num(state, *safes);
        }
        BwscExpr::Proj {
            normals,
            safes,
            index,
        } => {
            byte(state, 2);
            num(state, *normals);
            num(state, *safes);
            num(state, *index);
        }
        BwscExpr::Pred => byte(state, 3),
        BwscExpr::Cond => byte(state, 4),
        BwscExpr::Succ(i) => {
            byte(state, 5);
            byte(state, *i);
        }
        BwscExpr::Wsc {
            normals,
            safes,
            h,
            selection,
            gs,
        } => {
            byte(state, 6);
            num(state, *normals);
            num(state, *safes);
            hash_into(h, state);
            num(state, selection.len());
            for &i in selection {
                num(state, i);
            }
            num(state, gs.len());
            for g in gs {
                hash_into(g, state);
            }
        }
        BwscExpr::Srn { g, h0, h1 } => {
            byte(state, 7);
            hash_into(g, state);
            hash_into(h0, state);
            hash_into(h1, state);
        }
        BwscExpr::SrnPs { g, h0, h1, ps } => {
            byte(state, 8);
            hash_into(g, state);
            hash_into(h0, state);
            hash_into(h1, state);
            num(state, ps.len());
            for p in ps {
                hash_into(p, state);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::check_compatibility;
    use crate::trs::DEFAULT_FUEL;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    /// f(x; y) = y followed by |x| zeros, via recursion with h_i = S_0
    /// composed with the projection of the recursive result.
    fn append_zeros() -> BwscExpr {
        let g = Rc::new(BwscExpr::Proj {
            normals: 0,
            safes: 1,
            index: 1,
        });
        let h = Rc::new(BwscExpr::Wsc {
            normals: 1,
            safes: 2,
            h: Rc::new(BwscExpr::Succ(0)),
            selection: vec![],
            gs: vec![Rc::new(BwscExpr::Proj {
                normals: 1,
                safes: 2,
                index: 3,
            })],
        });
        BwscExpr::Srn {
            g,
            h0: h.clone(),
            h1: h,
        }
    }

    #[test]
    fn initial_function_semantics() {
        assert_eq!(eval(&BwscExpr::Pred, &[], &[w("e")]).unwrap(), w("e"));
        assert_eq!(eval(&BwscExpr::Pred, &[], &[w("10")]).unwrap(), w("1"));
        // conditional picks by the trailing bit
        let args = [w("1"), w("0"), w("00"), w("11")];
        assert_eq!(eval(&BwscExpr::Cond, &[], &args).unwrap(), w("11"));
        let args = [w("10"), w("0"), w("00"), w("11")];
        assert_eq!(eval(&BwscExpr::Cond, &[], &args).unwrap(), w("00"));
        let args = [w("e"), w("0"), w("00"), w("11")];
        assert_eq!(eval(&BwscExpr::Cond, &[], &args).unwrap(), w("0"));
        let zero = BwscExpr::Zero {
            normals: 2,
            safes: 1,
        };
        assert_eq!(eval(&zero, &[w("101"), w("e")], &[w("1")]).unwrap(), w("e"));
        let proj = BwscExpr::Proj {
            normals: 1,
            safes: 1,
            index: 2,
        };
        assert_eq!(eval(&proj, &[w("0")], &[w("11")]).unwrap(), w("11"));
    }

    #[test]
    fn recursion_appends_zeros() {
        let f = append_zeros();
        assert_eq!(f.well_formed().unwrap(), (1, 1));
        assert_eq!(eval(&f, &[w("10")], &[w("1")]).unwrap(), w("100"));
        assert_eq!(eval(&f, &[w("e")], &[w("1")]).unwrap(), w("1"));
        assert_eq!(eval(&f, &[w("1111")], &[w("e")]).unwrap(), w("0000"));
    }

    #[test]
    fn unfolding_count_ignores_safe_arguments() {
        let f = append_zeros();
        let (_, n1) = eval_counting(&f, &[w("101")], &[w("e")]).unwrap();
        let (_, n2) = eval_counting(&f, &[w("101")], &[w("0110")]).unwrap();
        assert_eq!(n1, 3);
        assert_eq!(n1, n2);
    }

    #[test]
    fn nesting_depth_examples() {
        assert_eq!(BwscExpr::Pred.nesting_depth(), 0);
        let f = append_zeros();
        assert_eq!(f.nesting_depth(), 1);
        // nest once more: recurse on a fresh argument, passing the previous
        // function as the step.
        let g = Rc::new(BwscExpr::Proj {
            normals: 1,
            safes: 1,
            index: 2,
        });
        let step = Rc::new(BwscExpr::Wsc {
            normals: 2,
            safes: 2,
            h: Rc::new(append_zeros()),
            selection: vec![1],
            gs: vec![Rc::new(BwscExpr::Proj {
                normals: 2,
                safes: 2,
                index: 4,
            })],
        });
        let nested = BwscExpr::Srn {
            g,
            h0: step.clone(),
            h1: step,
        };
        assert_eq!(nested.well_formed().unwrap(), (2, 1));
        assert_eq!(nested.nesting_depth(), 2);
    }

    #[test]
    fn degree_tracks_nesting_up_to_depth_three() {
        // wrap the append function in two more recursions, one per level
        let mut f = append_zeros(); // (1, 1), depth 1
        for depth in 2..=3u64 {
            let (k, l) = f.arity().unwrap();
            let g = Rc::new(BwscExpr::Proj {
                normals: k,
                safes: l,
                index: k + l,
            });
            let step = Rc::new(BwscExpr::Wsc {
                normals: k + 1,
                safes: l + 1,
                h: Rc::new(f.clone()),
                selection: (2..=k + 1).collect(),
                gs: (0..l)
                    .map(|i| {
                        Rc::new(BwscExpr::Proj {
                            normals: k + 1,
                            safes: l + 1,
                            index: k + 2 + i,
                        })
                    })
                    .collect(),
            });
            f = BwscExpr::Srn {
                g,
                h0: step.clone(),
                h1: step,
            };
            assert_eq!(f.nesting_depth(), depth);
            let compiled = compile_to_trs(&f).unwrap();
            let report = check_compatibility(&compiled.trs, &compiled.certificate).unwrap();
            assert_eq!(report.degree, depth, "degree law at depth {depth}");
        }
    }

    #[test]
    fn ill_arity_is_rejected() {
        let bad = BwscExpr::Srn {
            g: Rc::new(BwscExpr::Pred),
            h0: Rc::new(BwscExpr::Pred),
            h1: Rc::new(BwscExpr::Pred),
        };
        assert!(bad.well_formed().is_err());
        assert!(BwscExpr::Succ(0).well_formed().is_err());
        let proj = BwscExpr::Proj {
            normals: 1,
            safes: 1,
            index: 3,
        };
        assert!(proj.well_formed().is_err());
    }

    #[test]
    fn predecessor_compiles_to_three_rules_at_degree_zero() {
        let compiled = compile_to_trs(&BwscExpr::Pred).unwrap();
        assert_eq!(compiled.trs.rules().len(), 3);
        let report = check_compatibility(&compiled.trs, &compiled.certificate).unwrap();
        assert_eq!(report.degree, 0);
    }

    #[test]
    fn recursion_node_emits_three_rules() {
        let f = append_zeros();
        let compiled = compile_to_trs(&f).unwrap();
        let root_rules = compiled
            .trs
            .rules()
            .iter()
            .filter(|r| r.lhs.root() == Some(compiled.root))
            .count();
        assert_eq!(root_rules, 3);
        // degree equals the nesting depth
        let report = check_compatibility(&compiled.trs, &compiled.certificate).unwrap();
        assert_eq!(report.degree, 1);
    }

    #[test]
    fn compiled_system_computes_the_function() {
        let f = append_zeros();
        let compiled = compile_to_trs(&f).unwrap();
        assert!(compiled.trs.is_constructor_trs());
        for (x, y) in [("10", "1"), ("e", "0"), ("111", "e"), ("01", "10")] {
            let expected = eval(&f, &[w(x)], &[w(y)]).unwrap();
            let start = compiled.call(&[w(x)], &[w(y)]);
            let nf = compiled.trs.normalize(&start, DEFAULT_FUEL).unwrap();
            assert_eq!(compiled.decode_word(&nf), Some(expected));
        }
    }

    #[test]
    fn shared_subexpressions_compile_once() {
        let p = Rc::new(BwscExpr::Proj {
            normals: 0,
            safes: 1,
            index: 1,
        });
        let twice = BwscExpr::Wsc {
            normals: 0,
            safes: 1,
            h: Rc::new(BwscExpr::Pred),
            selection: vec![],
            gs: vec![Rc::new(BwscExpr::Wsc {
                normals: 0,
                safes: 1,
                h: Rc::new(BwscExpr::Pred),
                selection: vec![],
                gs: vec![p.clone()],
            })],
        };
        let compiled = compile_to_trs(&twice).unwrap();
        // pred appears twice in the tree but compiles to one symbol
        let pred_count = compiled
            .trs
            .signature()
            .symbols()
            .filter(|&s| compiled.trs.signature().name(s) == "pred")
            .count();
        assert_eq!(pred_count, 1);
    }

    #[test]
    fn parameter_substitution_compiles_and_certifies() {
        // f(z; y) = y with |z| ones appended before recursion bottoms out:
        // every step replaces the safe parameter by S_1(y).
        let g = Rc::new(BwscExpr::Proj {
            normals: 0,
            safes: 1,
            index: 1,
        });
        let h = Rc::new(BwscExpr::Proj {
            normals: 1,
            safes: 2,
            index: 3,
        });
        let p = Rc::new(BwscExpr::Wsc {
            normals: 1,
            safes: 1,
            h: Rc::new(BwscExpr::Succ(1)),
            selection: vec![],
            gs: vec![Rc::new(BwscExpr::Proj {
                normals: 1,
                safes: 1,
                index: 2,
            })],
        });
        let f = BwscExpr::SrnPs {
            g,
            h0: h.clone(),
            h1: h,
            ps: vec![p],
        };
        assert_eq!(f.well_formed().unwrap(), (1, 1));
        assert_eq!(eval(&f, &[w("00")], &[w("e")]).unwrap(), w("11"));
        let compiled = compile_to_trs(&f).unwrap();
        assert_eq!(compiled.certificate.variant, Variant::SpopPs);
        let report = check_compatibility(&compiled.trs, &compiled.certificate).unwrap();
        assert_eq!(report.degree, 1);
        let start = compiled.call(&[w("00")], &[w("e")]);
        let nf = compiled.trs.normalize(&start, DEFAULT_FUEL).unwrap();
        assert_eq!(compiled.decode_word(&nf), Some(w("11")));
    }
}
