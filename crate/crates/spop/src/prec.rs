//! Precedences, symbol tiering, and the comparison relations built on them:
//! equivalence of terms up to argument permutation, its tier-respecting
//! refinement, and the normal-subterm relation.

use std::fmt;

use thiserror::Error;

use crate::term::{Signature, SymbolId, Term};

/// Classification of a symbol under a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Constructor,
    Recursive,
    Compositional,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Constructor => write!(f, "constructor"),
            Kind::Recursive => write!(f, "recursive"),
            Kind::Compositional => write!(f, "compositional"),
        }
    }
}

/// A layered preorder on the signature: an ordered partition into equivalence
/// classes, highest class first. Symbols in the same class are equivalent;
/// a symbol is strictly above every symbol in a later class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Precedence {
    classes: Vec<Vec<SymbolId>>,
    class_of: Vec<u32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrecedenceError {
    #[error("symbol `{0}` appears more than once in the precedence")]
    Duplicate(String),
    #[error("symbol `{0}` is missing from the precedence")]
    Missing(String),
    #[error("empty precedence class")]
    EmptyClass,
}

impl Precedence {
    /// Builds a precedence from classes listed highest first. Every symbol of
    /// the signature must occur exactly once.
    pub fn new(sig: &Signature, classes: Vec<Vec<SymbolId>>) -> Result<Self, PrecedenceError> {
        let mut class_of = vec![u32::MAX; sig.len()];
        for (i, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(PrecedenceError::EmptyClass);
            }
            for &f in class {
                if class_of[f.0 as usize] != u32::MAX {
                    return Err(PrecedenceError::Duplicate(sig.name(f).to_owned()));
                }
                class_of[f.0 as usize] = i as u32;
            }
        }
        for f in sig.symbols() {
            if class_of[f.0 as usize] == u32::MAX {
                return Err(PrecedenceError::Missing(sig.name(f).to_owned()));
            }
        }
        Ok(Precedence { classes, class_of })
    }

    /// Builds a precedence from per-symbol levels where a *higher* level means
    /// higher in the precedence. Unused levels are skipped.
    pub fn from_levels(sig: &Signature, levels: &[u32]) -> Self {
        assert_eq!(levels.len(), sig.len());
        let mut distinct: Vec<u32> = levels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.reverse();
        let classes: Vec<Vec<SymbolId>> = distinct
            .iter()
            .map(|&lvl| {
                sig.symbols()
                    .filter(|f| levels[f.0 as usize] == lvl)
                    .collect()
            })
            .collect();
        Precedence::new(sig, classes).expect("levels cover every symbol")
    }

    pub fn classes(&self) -> &[Vec<SymbolId>] {
        &self.classes
    }

    pub fn class_index(&self, f: SymbolId) -> usize {
        self.class_of[f.0 as usize] as usize
    }

    /// f strictly above g.
    pub fn above(&self, f: SymbolId, g: SymbolId) -> bool {
        self.class_index(f) < self.class_index(g)
    }

    pub fn equivalent(&self, f: SymbolId, g: SymbolId) -> bool {
        self.class_index(f) == self.class_index(g)
    }

    /// Length of the longest strictly descending chain from `f`, counting `f`.
    /// The bottom class has rank 1.
    pub fn rank(&self, f: SymbolId) -> u64 {
        (self.classes.len() - self.class_index(f)) as u64
    }
}

/// Per-symbol kinds and normal argument positions. Constructors always have
/// every position safe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tiering {
    kinds: Vec<Kind>,
    normal_masks: Vec<u64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TieringError {
    #[error("constructor `{0}` must have all argument positions safe")]
    ConstructorWithNormals(String),
    #[error("normal position {1} out of range for `{0}`")]
    PositionOutOfRange(String, usize),
    #[error("symbol arity above the supported maximum of 64")]
    ArityTooLarge,
}

impl Tiering {
    /// `normal_positions` are 1-based position sets, encoded as bit masks with
    /// bit `i` for position `i + 1`.
    pub fn new(
        sig: &Signature,
        kinds: Vec<Kind>,
        normal_masks: Vec<u64>,
    ) -> Result<Self, TieringError> {
        assert_eq!(kinds.len(), sig.len());
        assert_eq!(normal_masks.len(), sig.len());
        for f in sig.symbols() {
            let arity = sig.arity(f);
            if arity > 64 {
                return Err(TieringError::ArityTooLarge);
            }
            let mask = normal_masks[f.0 as usize];
            let valid = if arity == 64 { u64::MAX } else { (1u64 << arity) - 1 };
            if mask & !valid != 0 {
                let bad = (mask & !valid).trailing_zeros() as usize + 1;
                return Err(TieringError::PositionOutOfRange(sig.name(f).to_owned(), bad));
            }
            if kinds[f.0 as usize] == Kind::Constructor && mask != 0 {
                return Err(TieringError::ConstructorWithNormals(sig.name(f).to_owned()));
            }
        }
        Ok(Tiering {
            kinds,
            normal_masks,
        })
    }

    pub fn kind(&self, f: SymbolId) -> Kind {
        self.kinds[f.0 as usize]
    }

    pub fn is_constructor(&self, f: SymbolId) -> bool {
        self.kind(f) == Kind::Constructor
    }

    pub fn is_recursive(&self, f: SymbolId) -> bool {
        self.kind(f) == Kind::Recursive
    }

    /// Is 0-based argument position `i` of `f` normal?
    pub fn is_normal_pos(&self, f: SymbolId, i: usize) -> bool {
        self.normal_masks[f.0 as usize] & (1u64 << i) != 0
    }

    pub fn normal_mask(&self, f: SymbolId) -> u64 {
        self.normal_masks[f.0 as usize]
    }

    pub fn normal_count(&self, f: SymbolId) -> usize {
        self.normal_masks[f.0 as usize].count_ones() as usize
    }

    /// 0-based normal positions of `f`, ascending.
    pub fn normal_positions(&self, f: SymbolId, arity: usize) -> Vec<usize> {
        (0..arity).filter(|&i| self.is_normal_pos(f, i)).collect()
    }

    /// 0-based safe positions of `f`, ascending.
    pub fn safe_positions(&self, f: SymbolId, arity: usize) -> Vec<usize> {
        (0..arity).filter(|&i| !self.is_normal_pos(f, i)).collect()
    }
}

/// Recursion depth: like rank, but only recursive symbols contribute. In a
/// layered precedence this is the number of recursive classes at or below the
/// symbol, counting its own class only when the symbol itself is recursive.
pub fn recursion_depth(prec: &Precedence, tiering: &Tiering, f: SymbolId) -> u64 {
    let direct = if tiering.is_recursive(f) { 1 } else { 0 };
    direct + count_recursive_below(prec, tiering, prec.class_index(f))
}

fn count_recursive_below(prec: &Precedence, tiering: &Tiering, class_idx: usize) -> u64 {
    prec.classes()[class_idx + 1..]
        .iter()
        .map(|class| {
            class
                .iter()
                .map(|&g| if tiering.is_recursive(g) { 1u64 } else { 0 })
                .max()
                .unwrap_or(0)
        })
        .sum()
}

/// Terms equivalent up to the precedence on roots and a permutation of
/// arguments at each node.
pub fn equivalent(prec: &Precedence, s: &Term, t: &Term) -> bool {
    match (s, t) {
        (Term::Var(a), Term::Var(b)) => a == b,
        (Term::App(f, ss), Term::App(g, ts)) => {
            prec.equivalent(*f, *g)
                && ss.len() == ts.len()
                && match_args(ss, ts, &mut |a, b| equivalent(prec, a, b), |_, _| true)
        }
        _ => false,
    }
}

/// Equivalence refined so that the witnessing permutation maps normal
/// positions to normal positions.
pub fn safe_equivalent(prec: &Precedence, tiering: &Tiering, s: &Term, t: &Term) -> bool {
    if s == t {
        return true;
    }
    match (s, t) {
        (Term::App(f, ss), Term::App(g, ts)) => {
            if !prec.equivalent(*f, *g) || ss.len() != ts.len() {
                return false;
            }
            if tiering.normal_mask(*f).count_ones() != tiering.normal_mask(*g).count_ones() {
                return false;
            }
            let f = *f;
            let g = *g;
            match_args(
                ss,
                ts,
                &mut |a, b| safe_equivalent(prec, tiering, a, b),
                |i, j| tiering.is_normal_pos(f, i) == tiering.is_normal_pos(g, j),
            )
        }
        _ => false,
    }
}

/// Bipartite matching of argument lists: does a bijection exist with
/// `admissible(i, j)` and `related(ss[i], ts[j])` for every matched pair?
fn match_args(
    ss: &[Term],
    ts: &[Term],
    related: &mut impl FnMut(&Term, &Term) -> bool,
    admissible: impl Fn(usize, usize) -> bool,
) -> bool {
    let n = ss.len();
    let mut edges = vec![Vec::new(); n];
    for (i, s) in ss.iter().enumerate() {
        for (j, t) in ts.iter().enumerate() {
            if admissible(i, j) && related(s, t) {
                edges[i].push(j);
            }
        }
    }
    // Kuhn's augmenting-path matching; argument lists are small.
    let mut matched_to: Vec<Option<usize>> = vec![None; n];
    fn try_assign(
        i: usize,
        edges: &[Vec<usize>],
        seen: &mut [bool],
        matched_to: &mut [Option<usize>],
    ) -> bool {
        for &j in &edges[i] {
            if !seen[j] {
                seen[j] = true;
                if matched_to[j].is_none()
                    || try_assign(matched_to[j].unwrap(), edges, seen, matched_to)
                {
                    matched_to[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..n {
        let mut seen = vec![false; n];
        if !try_assign(i, &edges, &mut seen, &mut matched_to) {
            return false;
        }
    }
    true
}

/// The normal-subterm relation: `t` is found at or below an argument of `s`,
/// descending only through normal positions at defined symbols. Constructor
/// positions impose no restriction.
pub fn normal_subterm_gt(prec: &Precedence, tiering: &Tiering, s: &Term, t: &Term) -> bool {
    let Term::App(f, args) = s else {
        return false;
    };
    args.iter().enumerate().any(|(i, arg)| {
        let pos_ok = tiering.is_constructor(*f) || tiering.is_normal_pos(*f, i);
        pos_ok
            && (safe_equivalent(prec, tiering, arg, t) || normal_subterm_gt(prec, tiering, arg, t))
    })
}

/// Canonical representative of a term's equivalence class: argument lists are
/// sorted recursively, so two terms are equivalent iff their canonical forms
/// are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CanonTerm {
    Var(u32),
    App(u32, Vec<CanonTerm>),
}

pub fn canonicalize(prec: &Precedence, t: &Term) -> CanonTerm {
    match t {
        Term::Var(v) => CanonTerm::Var(v.0),
        Term::App(f, args) => {
            let mut cs: Vec<CanonTerm> = args.iter().map(|a| canonicalize(prec, a)).collect();
            cs.sort();
            CanonTerm::App(prec.class_index(*f) as u32, cs)
        }
    }
}
