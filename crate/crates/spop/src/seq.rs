//! The sequence world.
//!
//! Terms whose normal argument positions hold values flatten into sequences
//! of *normalized* terms: each head keeps only its normal arguments. On these
//! sequences a family of width-bounded orders decides descent; their maximal
//! descent lengths are what bound innermost derivation heights. This module
//! provides the flattening interpretation, the order decision procedure with
//! evidence, successor enumeration, descent-length computation, the
//! recurrence constant, and the step-by-step embedding verifier.

use std::collections::{HashMap, HashSet};

use itertools::Itertools;
use thiserror::Error;

use crate::order::{check_compatibility, Certificate, CompatError};
use crate::prec::{canonicalize, CanonTerm, Kind, Precedence, Tiering};
use crate::term::{Signature, SymbolId, Term};
use crate::trs::{Trs, TrsError};

/// A marked application `f^n(v_1, .., v_k)`: the root keeps exactly its
/// normal arguments (none for constructors), and those arguments are values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormalizedTerm {
    pub root: SymbolId,
    pub args: Vec<Term>,
}

/// A flat sequence of normalized terms. A single term is identified with its
/// singleton sequence, so `len() == 1` plays the role of "term".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SeqTerm {
    items: Vec<NormalizedTerm>,
}

impl SeqTerm {
    pub fn nil() -> SeqTerm {
        SeqTerm::default()
    }

    pub fn singleton(t: NormalizedTerm) -> SeqTerm {
        SeqTerm { items: vec![t] }
    }

    pub fn from_items(items: Vec<NormalizedTerm>) -> SeqTerm {
        SeqTerm { items }
    }

    pub fn items(&self) -> &[NormalizedTerm] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_nil(&self) -> bool {
        self.items.is_empty()
    }

    pub fn as_single(&self) -> Option<&NormalizedTerm> {
        if self.items.len() == 1 {
            Some(&self.items[0])
        } else {
            None
        }
    }

    pub fn display(&self, sig: &Signature) -> String {
        let inner = self
            .items
            .iter()
            .map(|t| t.display(sig))
            .collect::<Vec<_>>()
            .join(" ");
        format!("[{inner}]")
    }
}

impl NormalizedTerm {
    pub fn display(&self, sig: &Signature) -> String {
        let mut out = format!("{}^n", sig.name(self.root));
        if !self.args.is_empty() {
            out.push('(');
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&a.display(sig).to_string());
            }
            out.push(')');
        }
        out
    }
}

/// Sequence concatenation; terms are their singleton sequences.
pub fn append(a: &SeqTerm, b: &SeqTerm) -> SeqTerm {
    let mut items = a.items.clone();
    items.extend(b.items.iter().cloned());
    SeqTerm { items }
}

/// Membership in the set of terms carrying values at every normal argument
/// position, closed under safe positions.
pub fn in_tn(trs: &Trs, tiering: &Tiering, t: &Term) -> bool {
    if trs.is_value(t) {
        return true;
    }
    let Term::App(f, args) = t else {
        return true; // variables are values
    };
    args.iter().enumerate().all(|(i, a)| {
        let normal = tiering.kind(*f) != Kind::Constructor && tiering.is_normal_pos(*f, i);
        if normal {
            trs.is_value(a)
        } else {
            in_tn(trs, tiering, a)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("term has a non-value at a normal argument position")]
pub struct NotInTn;

/// The flattening interpretation: values vanish, a head keeps its normal
/// arguments, and the interpretations of the safe arguments are concatenated
/// behind it.
pub fn interpret(trs: &Trs, tiering: &Tiering, t: &Term) -> Result<SeqTerm, NotInTn> {
    if trs.is_value(t) {
        return Ok(SeqTerm::nil());
    }
    let Term::App(f, args) = t else {
        return Ok(SeqTerm::nil());
    };
    let mut head_args = Vec::new();
    let mut tail = SeqTerm::nil();
    for (i, a) in args.iter().enumerate() {
        let normal = tiering.kind(*f) != Kind::Constructor && tiering.is_normal_pos(*f, i);
        if normal {
            if !trs.is_value(a) {
                return Err(NotInTn);
            }
            head_args.push(a.clone());
        } else {
            tail = append(&tail, &interpret(trs, tiering, a)?);
        }
    }
    let head = SeqTerm::singleton(NormalizedTerm {
        root: *f,
        args: head_args,
    });
    Ok(append(&head, &tail))
}

pub fn canon_nt(prec: &Precedence, t: &NormalizedTerm) -> CanonTerm {
    let mut args: Vec<CanonTerm> = t.args.iter().map(|a| canonicalize(prec, a)).collect();
    args.sort();
    CanonTerm::App(prec.class_index(t.root) as u32, args)
}

pub fn canon_seq(prec: &Precedence, a: &SeqTerm) -> Vec<CanonTerm> {
    let mut items: Vec<CanonTerm> = a.items.iter().map(|t| canon_nt(prec, t)).collect();
    items.sort();
    items
}

pub fn nt_equivalent(prec: &Precedence, a: &NormalizedTerm, b: &NormalizedTerm) -> bool {
    canon_nt(prec, a) == canon_nt(prec, b)
}

pub fn seq_equivalent(prec: &Precedence, a: &SeqTerm, b: &SeqTerm) -> bool {
    canon_seq(prec, a) == canon_seq(prec, b)
}

/// Evidence for one derivation of `lhs > rhs` in the sequence order.
#[derive(Debug, Clone)]
pub struct GvProof {
    pub lhs: SeqTerm,
    pub rhs: SeqTerm,
    pub clause: GvClause,
}

#[derive(Debug, Clone)]
pub enum GvClause {
    /// Head strictly below, arguments equivalent to proper subterms.
    Ia,
    /// Equivalent recursive head, argument tuple descends.
    Ts { perm: Vec<usize> },
    /// Term against a sequence: every element individually dominated, at most
    /// one element not built from symbols strictly below the head.
    Ialst { subs: Vec<GvProof> },
    /// Sequence against a partition of the right side into blocks, one per
    /// left element; `None` marks an equivalent block.
    Ms {
        blocks: Vec<Vec<usize>>,
        subs: Vec<Option<GvProof>>,
    },
}

impl GvClause {
    pub fn name(&self) -> &'static str {
        match self {
            GvClause::Ia => "ia",
            GvClause::Ts { .. } => "ts",
            GvClause::Ialst { .. } => "ialst",
            GvClause::Ms { .. } => "ms",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct GvNotGreater(pub String);

/// Decides the width-`k` sequence order.
pub fn gspopv_gt(
    prec: &Precedence,
    tiering: &Tiering,
    k: usize,
    a: &SeqTerm,
    b: &SeqTerm,
) -> Result<GvProof, GvNotGreater> {
    assert!(k >= 1, "width parameter must be at least 1");
    let cmp = GvCmp { prec, tiering, k };
    cmp.gt_seq(a, b)
}

struct GvCmp<'a> {
    prec: &'a Precedence,
    tiering: &'a Tiering,
    k: usize,
}

impl GvCmp<'_> {
    fn gt_seq(&self, a: &SeqTerm, b: &SeqTerm) -> Result<GvProof, GvNotGreater> {
        if let Some(s) = a.as_single() {
            if let Some(t) = b.as_single() {
                return self.gt_term(s, t).map(|clause| GvProof {
                    lhs: a.clone(),
                    rhs: b.clone(),
                    clause,
                });
            }
            return self.ialst(s, b).map(|clause| GvProof {
                lhs: a.clone(),
                rhs: b.clone(),
                clause,
            });
        }
        self.ms(a, b)
    }

    /// Weak comparison of a term against a block: equivalent singleton or a
    /// strict descent. `Some(None)` means equivalent.
    fn geq_seq(&self, s: &NormalizedTerm, block: &SeqTerm) -> Option<Option<GvProof>> {
        if let Some(t) = block.as_single() {
            if nt_equivalent(self.prec, s, t) {
                return Some(None);
            }
        }
        self.gt_seq(&SeqTerm::singleton(s.clone()), block)
            .ok()
            .map(Some)
    }

    fn gt_term(&self, s: &NormalizedTerm, t: &NormalizedTerm) -> Result<GvClause, GvNotGreater> {
        let f = s.root;
        let g = t.root;
        let mut reasons = Vec::new();
        if self.tiering.kind(f) != Kind::Constructor && self.prec.above(f, g) {
            match self.try_ia(s, t) {
                Ok(c) => return Ok(c),
                Err(e) => reasons.push(e.0),
            }
        } else {
            reasons.push("ia: head is not a defined symbol strictly above the right head".into());
        }
        if self.tiering.is_recursive(f) && self.prec.equivalent(f, g) {
            match self.try_ts(s, t) {
                Ok(c) => return Ok(c),
                Err(e) => reasons.push(e.0),
            }
        } else {
            reasons.push("ts: head is not recursive and equivalent to the right head".into());
        }
        Err(GvNotGreater(reasons.join("; ")))
    }

    fn try_ia(&self, s: &NormalizedTerm, t: &NormalizedTerm) -> Result<GvClause, GvNotGreater> {
        if t.args.len() > self.k {
            return Err(GvNotGreater(format!(
                "ia: right head has {} arguments, width bound is {}",
                t.args.len(),
                self.k
            )));
        }
        let subterm_canons = proper_subterm_canons(self.prec, s);
        for w in &t.args {
            if !subterm_canons.contains(&canonicalize(self.prec, w)) {
                return Err(GvNotGreater(
                    "ia: an argument is not equivalent to a proper subterm of the left term".into(),
                ));
            }
        }
        Ok(GvClause::Ia)
    }

    fn try_ts(&self, s: &NormalizedTerm, t: &NormalizedTerm) -> Result<GvClause, GvNotGreater> {
        let n = s.args.len();
        if t.args.len() != n {
            return Err(GvNotGreater("ts: argument counts differ".into()));
        }
        if n > self.k {
            return Err(GvNotGreater(format!(
                "ts: {} arguments exceed the width bound {}",
                n, self.k
            )));
        }
        // rel[i][j]: t_j equivalent to a subterm of s_i (weak) or to a proper
        // subterm (strict).
        let mut weak = vec![vec![false; n]; n];
        let mut strict = vec![vec![false; n]; n];
        for i in 0..n {
            let subs = subterm_canons_of(self.prec, &s.args[i], true);
            let propers = subterm_canons_of(self.prec, &s.args[i], false);
            for j in 0..n {
                let cj = canonicalize(self.prec, &t.args[j]);
                weak[i][j] = subs.contains(&cj);
                strict[i][j] = propers.contains(&cj);
            }
        }
        let mut perm = vec![usize::MAX; n];
        let mut used = vec![false; n];
        if search_tuple(&weak, &strict, 0, &mut used, &mut perm, false) {
            Ok(GvClause::Ts { perm })
        } else {
            Err(GvNotGreater(
                "ts: no permutation makes the argument tuple descend".into(),
            ))
        }
    }

    fn ialst(&self, s: &NormalizedTerm, b: &SeqTerm) -> Result<GvClause, GvNotGreater> {
        if b.len() > self.k {
            return Err(GvNotGreater(format!(
                "ialst: sequence of length {} exceeds the width bound {}",
                b.len(),
                self.k
            )));
        }
        let mut subs = Vec::new();
        for t in b.items() {
            let sub = self
                .gt_term(s, t)
                .map_err(|e| GvNotGreater(format!("ialst: element not dominated: {}", e.0)))?;
            subs.push(GvProof {
                lhs: SeqTerm::singleton(s.clone()),
                rhs: SeqTerm::singleton(t.clone()),
                clause: sub,
            });
        }
        let unbounded = b
            .items()
            .iter()
            .filter(|t| self.element_unbounded(s.root, t))
            .count();
        if unbounded > 1 {
            return Err(GvNotGreater(format!(
                "ialst: {unbounded} elements carry defined symbols not below the head"
            )));
        }
        Ok(GvClause::Ialst { subs })
    }

    /// Does the element carry a defined symbol not strictly below `f`? Its
    /// arguments are values, so only the head can.
    fn element_unbounded(&self, f: SymbolId, t: &NormalizedTerm) -> bool {
        self.tiering.kind(t.root) != Kind::Constructor && !self.prec.above(f, t.root)
    }

    fn ms(&self, a: &SeqTerm, b: &SeqTerm) -> Result<GvProof, GvNotGreater> {
        let n = a.len();
        if n == 0 {
            return Err(GvNotGreater("the empty sequence has no successors".into()));
        }
        let items = b.items();
        let mut assign = vec![0usize; items.len()];
        if self.ms_assign(a, items, 0, &mut assign) {
            let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); n];
            for (idx, &blk) in assign.iter().enumerate() {
                blocks[blk].push(idx);
            }
            let mut subs = Vec::new();
            for (i, s) in a.items().iter().enumerate() {
                let block = SeqTerm::from_items(
                    blocks[i].iter().map(|&idx| items[idx].clone()).collect(),
                );
                let sub = self
                    .geq_seq(s, &block)
                    .expect("assignment was checked feasible");
                subs.push(sub);
            }
            return Ok(GvProof {
                lhs: a.clone(),
                rhs: b.clone(),
                clause: GvClause::Ms { blocks, subs },
            });
        }
        Err(GvNotGreater(
            "ms: no block partition of the right side descends".into(),
        ))
    }

    /// Backtracks over assignments of right-side elements to left blocks and
    /// accepts the first feasible one (checked per complete assignment; sizes
    /// are small).
    fn ms_assign(
        &self,
        a: &SeqTerm,
        items: &[NormalizedTerm],
        idx: usize,
        assign: &mut [usize],
    ) -> bool {
        let n = a.len();
        if idx == items.len() {
            let mut strict = false;
            for (i, s) in a.items().iter().enumerate() {
                let block: Vec<NormalizedTerm> = (0..items.len())
                    .filter(|&j| assign[j] == i)
                    .map(|j| items[j].clone())
                    .collect();
                match self.geq_seq(s, &SeqTerm::from_items(block)) {
                    Some(None) => {}
                    Some(Some(_)) => strict = true,
                    None => return false,
                }
            }
            return strict;
        }
        for blk in 0..n {
            assign[idx] = blk;
            if self.ms_assign(a, items, idx + 1, assign) {
                return true;
            }
        }
        false
    }
}

fn search_tuple(
    weak: &[Vec<bool>],
    strict: &[Vec<bool>],
    i: usize,
    used: &mut [bool],
    perm: &mut [usize],
    have_strict: bool,
) -> bool {
    let n = weak.len();
    if i == n {
        return have_strict;
    }
    for j in 0..n {
        if used[j] || !weak[i][j] {
            continue;
        }
        used[j] = true;
        perm[i] = j;
        if search_tuple(weak, strict, i + 1, used, perm, have_strict || strict[i][j]) {
            return true;
        }
        used[j] = false;
        perm[i] = usize::MAX;
    }
    false
}

/// Canonical forms of the proper subterms of a marked term: everything at or
/// below its arguments.
fn proper_subterm_canons(prec: &Precedence, s: &NormalizedTerm) -> HashSet<CanonTerm> {
    let mut out = HashSet::new();
    for arg in &s.args {
        for sub in arg.subterms() {
            out.insert(canonicalize(prec, sub));
        }
    }
    out
}

fn subterm_canons_of(prec: &Precedence, t: &Term, include_self: bool) -> HashSet<CanonTerm> {
    let mut out = HashSet::new();
    for sub in t.subterms() {
        out.insert(canonicalize(prec, sub));
    }
    if !include_self {
        out.remove(&canonicalize(prec, t));
    }
    out
}

/// Representatives of proper subterms of a marked term, deduplicated up to
/// equivalence, deterministic order.
fn proper_subterm_reps(prec: &Precedence, s: &NormalizedTerm) -> Vec<Term> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for arg in &s.args {
        for sub in arg.subterms() {
            if seen.insert(canonicalize(prec, sub)) {
                out.push(sub.clone());
            }
        }
    }
    out
}

fn subterm_reps_of(prec: &Precedence, t: &Term) -> Vec<(Term, bool)> {
    // (representative, is_proper)
    let self_canon = canonicalize(prec, t);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for sub in t.subterms() {
        let c = canonicalize(prec, sub);
        if seen.insert(c.clone()) {
            out.push((sub.clone(), c != self_canon));
        }
    }
    out
}

fn marked_arity(_sig: &Signature, tiering: &Tiering, g: SymbolId) -> usize {
    if tiering.kind(g) == Kind::Constructor {
        0
    } else {
        tiering.normal_count(g)
    }
}

/// Enumerates all order successors of a single normalized term up to
/// equivalence: smaller heads over proper subterms, recursive steps, and the
/// bounded sequences formed from them.
pub fn successors(
    sig: &Signature,
    prec: &Precedence,
    tiering: &Tiering,
    k: usize,
    t: &NormalizedTerm,
) -> Vec<SeqTerm> {
    let term_succ = term_successors(sig, prec, tiering, k, t);
    let mut out: Vec<SeqTerm> = Vec::new();
    let mut seen: HashSet<Vec<CanonTerm>> = HashSet::new();
    for u in &term_succ {
        let s = SeqTerm::singleton(u.clone());
        if seen.insert(canon_seq(prec, &s)) {
            out.push(s);
        }
    }
    // ialst: multisets of dominated elements, width-bounded, at most one
    // element not below the head.
    let unbounded_flags: Vec<bool> = term_succ
        .iter()
        .map(|u| tiering.kind(u.root) != Kind::Constructor && !prec.above(t.root, u.root))
        .collect();
    for m in 0..=k {
        if m == 1 {
            continue; // singletons coincide with term successors
        }
        for combo in (0..term_succ.len()).combinations_with_replacement(m) {
            let unbounded = combo.iter().filter(|&&i| unbounded_flags[i]).count();
            if unbounded > 1 {
                continue;
            }
            let s = SeqTerm::from_items(combo.iter().map(|&i| term_succ[i].clone()).collect());
            if seen.insert(canon_seq(prec, &s)) {
                out.push(s);
            }
        }
    }
    out
}

/// Successors of `t` that are single terms, up to equivalence.
pub fn term_successors(
    sig: &Signature,
    prec: &Precedence,
    tiering: &Tiering,
    k: usize,
    t: &NormalizedTerm,
) -> Vec<NormalizedTerm> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let f = t.root;
    // ia: heads strictly below over proper subterms.
    if tiering.kind(f) != Kind::Constructor {
        let reps = proper_subterm_reps(prec, t);
        for g in sig.symbols() {
            if !prec.above(f, g) {
                continue;
            }
            let m = marked_arity(sig, tiering, g);
            if m > k {
                continue;
            }
            if m == 0 {
                let cand = NormalizedTerm {
                    root: g,
                    args: vec![],
                };
                if seen.insert(canon_nt(prec, &cand)) {
                    out.push(cand);
                }
                continue;
            }
            for args in (0..m).map(|_| reps.iter()).multi_cartesian_product() {
                let cand = NormalizedTerm {
                    root: g,
                    args: args.into_iter().cloned().collect(),
                };
                if seen.insert(canon_nt(prec, &cand)) {
                    out.push(cand);
                }
            }
        }
    }
    // ts: equivalent recursive heads over per-coordinate subterms with one
    // strict descent.
    if tiering.is_recursive(f) {
        let n = t.args.len();
        if n <= k && n > 0 {
            let coord_reps: Vec<Vec<(Term, bool)>> = t
                .args
                .iter()
                .map(|arg| subterm_reps_of(prec, arg))
                .collect();
            for g in sig.symbols() {
                if !prec.equivalent(f, g) || marked_arity(sig, tiering, g) != n {
                    continue;
                }
                for choice in coord_reps.iter().multi_cartesian_product() {
                    if !choice.iter().any(|(_, proper)| *proper) {
                        continue;
                    }
                    let cand = NormalizedTerm {
                        root: g,
                        args: choice.iter().map(|(rep, _)| rep.clone()).collect(),
                    };
                    if seen.insert(canon_nt(prec, &cand)) {
                        out.push(cand);
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("descent-length budget exhausted")]
pub struct SlowFuelExceeded;

/// Length of the longest descending chain from `a` in the width-`k` order.
///
/// Single terms are expanded by exhaustive successor enumeration, memoized on
/// canonical forms. Sequences act as containers: their descent length is the
/// sum over their elements, which matches the chain-interleaving reading and
/// is validated against brute-force chain search in the tests.
pub fn slow(
    sig: &Signature,
    prec: &Precedence,
    tiering: &Tiering,
    k: usize,
    a: &SeqTerm,
    fuel: u64,
) -> Result<u64, SlowFuelExceeded> {
    let mut engine = SlowEngine {
        sig,
        prec,
        tiering,
        k,
        budget: fuel,
        memo: HashMap::new(),
    };
    engine.slow_seq(a)
}

struct SlowEngine<'a> {
    sig: &'a Signature,
    prec: &'a Precedence,
    tiering: &'a Tiering,
    k: usize,
    budget: u64,
    memo: HashMap<CanonTerm, u64>,
}

impl SlowEngine<'_> {
    fn slow_seq(&mut self, a: &SeqTerm) -> Result<u64, SlowFuelExceeded> {
        let mut total = 0u64;
        for item in a.items() {
            total = total
                .checked_add(self.slow_term(item)?)
                .ok_or(SlowFuelExceeded)?;
        }
        Ok(total)
    }

    fn slow_term(&mut self, t: &NormalizedTerm) -> Result<u64, SlowFuelExceeded> {
        let key = canon_nt(self.prec, t);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        if self.budget == 0 {
            return Err(SlowFuelExceeded);
        }
        self.budget -= 1;
        let mut best = 0u64;
        for succ in successors(self.sig, self.prec, self.tiering, self.k, t) {
            let v = self.slow_seq(&succ)?;
            best = best.max(v.checked_add(1).ok_or(SlowFuelExceeded)?);
        }
        self.memo.insert(key, best);
        Ok(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum McError {
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("recurrence constant overflows")]
    Overflow,
}

/// The recurrence constant `mc(1, d) = 1`, `mc(r, d) = mc(r-1, d) * k^(d+1) + 1`.
pub fn mc(r: u64, d: u64, k: u64) -> Result<u64, McError> {
    if r == 0 {
        return Err(McError::ZeroRank);
    }
    let step = checked_pow(k, d.checked_add(1).ok_or(McError::Overflow)?)?;
    let mut acc = 1u64;
    for _ in 1..r {
        acc = acc
            .checked_mul(step)
            .and_then(|v| v.checked_add(1))
            .ok_or(McError::Overflow)?;
    }
    Ok(acc)
}

fn checked_pow(base: u64, exp: u64) -> Result<u64, McError> {
    let mut acc = 1u64;
    for _ in 0..exp {
        acc = acc.checked_mul(base).ok_or(McError::Overflow)?;
    }
    Ok(acc)
}

#[derive(Debug, Error)]
pub enum SlowBoundError {
    #[error("expected {expected} value arguments for the marked symbol, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("argument is not a value")]
    NotAValue,
    #[error(transparent)]
    Fuel(#[from] SlowFuelExceeded),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(
        "descent bound violated: successor has descent length {slow} but the bound is {bound}"
    )]
    BoundViolation { slow: u64, bound: u64 },
}

#[derive(Debug, Clone)]
pub struct SlowBoundReport {
    pub successors_checked: usize,
    pub max_slow: u64,
    pub bound: u64,
}

/// Checks the proof-internal descent bound: every successor `b` of
/// `f^n(values)` satisfies `slow(b) < mc(rk(f), rd(f)) * (2 + sum depth)^rd(f)`.
pub fn check_slow_bound(
    trs: &Trs,
    cert: &Certificate,
    k: usize,
    f: SymbolId,
    values: &[Term],
    fuel: u64,
) -> Result<SlowBoundReport, SlowBoundError> {
    let sig = trs.signature();
    let prec = &cert.precedence;
    let tiering = &cert.tiering;
    let expected = marked_arity(sig, tiering, f);
    if values.len() != expected {
        return Err(SlowBoundError::ArityMismatch {
            expected,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !trs.is_value(v)) {
        return Err(SlowBoundError::NotAValue);
    }
    let start = NormalizedTerm {
        root: f,
        args: values.to_vec(),
    };
    let rd = crate::prec::recursion_depth(prec, tiering, f);
    let rk = prec.rank(f);
    let depth_sum: u64 = values.iter().map(|v| v.depth()).sum();
    let base = mc(rk, rd, k as u64)?;
    let bound = base
        .checked_mul(checked_pow(2 + depth_sum, rd)?)
        .ok_or(McError::Overflow)?;
    let mut max_slow = 0;
    let succs = successors(sig, prec, tiering, k, &start);
    let checked = succs.len();
    for b in succs {
        let v = slow(sig, prec, tiering, k, &b, fuel)?;
        max_slow = max_slow.max(v);
        if v >= bound {
            return Err(SlowBoundError::BoundViolation { slow: v, bound });
        }
    }
    Ok(SlowBoundReport {
        successors_checked: checked,
        max_slow,
        bound,
    })
}

/// One checked innermost step of the embedding verification.
#[derive(Debug, Clone)]
pub struct EmbeddingStep {
    pub from: Term,
    pub to: Term,
    pub proof: GvProof,
}

#[derive(Debug, Clone)]
pub struct EmbeddingReport {
    /// The width used: maximal right-hand side size of the completed system.
    pub width: usize,
    pub steps: Vec<EmbeddingStep>,
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("certificate does not orient the system: {0}")]
    NotCompatible(#[from] CompatError),
    #[error("start term has a non-value at a normal position")]
    StartNotInTn,
    #[error(transparent)]
    Trs(#[from] TrsError),
    #[error("step budget exhausted while exploring the derivation graph")]
    Fuel,
    #[error("embedding violated on step `{from}` -> `{to}`: {reason}")]
    Violation {
        from: String,
        to: String,
        reason: String,
    },
}

/// Follows every innermost derivation from `start` in the garbage-completed
/// system and checks that each step stays inside the value-at-normal-position
/// fragment and strictly descends under the interpretation.
///
/// A violation signals an implementation bug, not a property of the input:
/// compatible systems are guaranteed to embed.
pub fn verify_embedding(
    trs: &Trs,
    cert: &Certificate,
    start: &Term,
    fuel: u64,
) -> Result<EmbeddingReport, EmbeddingError> {
    check_compatibility(trs, cert)?;
    let world = trs.garbage_completed()?;
    let mut cert = cert.clone();
    extend_cert_for_bot(&mut cert, &world.trs, world.bot);
    let width = world
        .trs
        .rules()
        .iter()
        .map(|r| r.rhs.size() as usize)
        .max()
        .unwrap_or(1)
        .max(1);
    if !in_tn(&world.trs, &cert.tiering, start) {
        return Err(EmbeddingError::StartNotInTn);
    }
    let mut steps = Vec::new();
    let mut frontier = vec![start.clone()];
    let mut visited: HashSet<Term> = HashSet::new();
    visited.insert(start.clone());
    let mut budget = fuel;
    while let Some(s) = frontier.pop() {
        let ints_s = interpret(&world.trs, &cert.tiering, &s)
            .expect("membership was checked before enqueueing");
        for t in world.innermost_successors(&s) {
            if budget == 0 {
                return Err(EmbeddingError::Fuel);
            }
            budget -= 1;
            let fail = |reason: String| EmbeddingError::Violation {
                from: s.display(world.trs.signature()).to_string(),
                to: t.display(world.trs.signature()).to_string(),
                reason,
            };
            if !in_tn(&world.trs, &cert.tiering, &t) {
                return Err(fail(
                    "successor leaves the value-at-normal fragment".into(),
                ));
            }
            let ints_t =
                interpret(&world.trs, &cert.tiering, &t).expect("membership was just checked");
            let proof = gspopv_gt(&cert.precedence, &cert.tiering, width, &ints_s, &ints_t)
                .map_err(|e| fail(e.0))?;
            steps.push(EmbeddingStep {
                from: s.clone(),
                to: t.clone(),
                proof,
            });
            if visited.insert(t.clone()) {
                frontier.push(t);
            }
        }
    }
    Ok(EmbeddingReport { width, steps })
}

/// If garbage completion added the bottom constant, give it a fresh bottom
/// class and constructor tiering. A reused constant needs no work: validated
/// certificates keep constructors in the bottom class, below every defined
/// symbol.
fn extend_cert_for_bot(cert: &mut Certificate, world_trs: &Trs, bot: SymbolId) {
    let sig = world_trs.signature();
    let covered: usize = cert.precedence.classes().iter().map(|c| c.len()).sum();
    if covered == sig.len() {
        return;
    }
    let mut classes = cert.precedence.classes().to_vec();
    classes.push(vec![bot]);
    cert.precedence = Precedence::new(sig, classes).expect("bottom class extends the precedence");
    let mut kinds: Vec<Kind> = sig
        .symbols()
        .map(|f| {
            if f == bot {
                Kind::Constructor
            } else {
                cert.tiering.kind(f)
            }
        })
        .collect();
    let mut masks: Vec<u64> = sig
        .symbols()
        .map(|f| if f == bot { 0 } else { cert.tiering.normal_mask(f) })
        .collect();
    kinds[bot.0 as usize] = Kind::Constructor;
    masks[bot.0 as usize] = 0;
    cert.tiering = Tiering::new(sig, kinds, masks).expect("constructor tiering for bottom");
}
