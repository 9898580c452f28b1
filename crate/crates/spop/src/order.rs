//! The small polynomial path order and its parameter-substitution extension.
//!
//! A [`Certificate`] fixes a precedence, a kind for each symbol, and the
//! normal/safe partition of argument positions. Rule orientation produces
//! [`ProofNode`] trees that can be replayed against the definition, and a
//! compatible system earns a [`DegreeReport`] whose degree bounds the
//! innermost runtime complexity.

use serde::Serialize;
use thiserror::Error;

use crate::prec::{
    normal_subterm_gt, recursion_depth, safe_equivalent, Kind, Precedence, Tiering,
};
use crate::term::{SymbolId, Term};
use crate::trs::Trs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    /// Recursive calls receive safe arguments unchanged.
    Spop,
    /// Recursive calls may substitute parameters at safe positions.
    SpopPs,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Spop => "spop",
            Variant::SpopPs => "spop_ps",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "spop" => Some(Variant::Spop),
            "spop_ps" | "spop-ps" => Some(Variant::SpopPs),
            _ => None,
        }
    }
}

/// The witness checked by the order: precedence, kinds, argument partition,
/// and which order variant to use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub precedence: Precedence,
    pub tiering: Tiering,
    pub variant: Variant,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CertError {
    #[error("constructor `{0}` sits above other symbols in the precedence")]
    ConstructorAbove(String),
    #[error("precedence class mixes kinds: `{0}` is {1}, `{2}` is {3}")]
    MixedClass(String, Kind, String, Kind),
    #[error("`{0}` is a defined symbol but the certificate marks it as a constructor")]
    DefinedMarkedConstructor(String),
    #[error("`{0}` is a constructor but the certificate marks it as {1}")]
    ConstructorMarkedDefined(String, Kind),
    #[error("certificate does not cover the signature")]
    SizeMismatch,
}

impl Certificate {
    /// Admissibility with respect to the system: constructors never sit
    /// strictly above other symbols, classes are uniform in kind, and kinds
    /// agree with which symbols the rules define.
    pub fn validate(&self, trs: &Trs) -> Result<(), CertError> {
        let sig = trs.signature();
        if self.precedence.classes().iter().map(|c| c.len()).sum::<usize>() != sig.len() {
            return Err(CertError::SizeMismatch);
        }
        let classes = self.precedence.classes();
        for (i, class) in classes.iter().enumerate() {
            let first_kind = self.tiering.kind(class[0]);
            for &f in class {
                let kind = self.tiering.kind(f);
                if kind != first_kind {
                    return Err(CertError::MixedClass(
                        sig.name(class[0]).to_owned(),
                        first_kind,
                        sig.name(f).to_owned(),
                        kind,
                    ));
                }
                if kind == Kind::Constructor && i + 1 < classes.len() {
                    return Err(CertError::ConstructorAbove(sig.name(f).to_owned()));
                }
                match (trs.is_defined(f), kind) {
                    (true, Kind::Constructor) => {
                        return Err(CertError::DefinedMarkedConstructor(sig.name(f).to_owned()))
                    }
                    (false, Kind::Recursive) | (false, Kind::Compositional) => {
                        return Err(CertError::ConstructorMarkedDefined(
                            sig.name(f).to_owned(),
                            kind,
                        ))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// Options for the under-specified corner of the recursion clause: whether the
/// safe tuple must also decrease strictly. The weak reading (the default) is
/// the one under which the standard arithmetic examples orient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrientOptions {
    pub safe_tuple_strict: bool,
}

impl Default for OrientOptions {
    fn default() -> Self {
        OrientOptions {
            safe_tuple_strict: false,
        }
    }
}

/// One node of an orientation proof: the compared pair plus the clause that
/// concluded it, with enough witnesses to replay the conclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofNode {
    pub lhs: Term,
    pub rhs: Term,
    pub clause: Clause,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Clause {
    /// Some argument of the left-hand side already dominates the right.
    St { index: usize, sub: Box<GeqProof> },
    /// Descent to a root strictly below: normal arguments are reached via the
    /// normal-subterm relation, safe arguments are compared recursively.
    /// `unbounded` records the one argument allowed to contain symbols not
    /// below the left root, if any.
    Ia {
        safe_subs: Vec<ProofNode>,
        unbounded: Option<usize>,
    },
    /// Recursion step: product comparison of normal and safe tuples modulo
    /// partition-respecting permutations.
    Ts {
        normal_perm: Vec<usize>,
        normal_subs: Vec<GeqProof>,
        safe_perm: Vec<usize>,
        safe_subs: Vec<GeqProof>,
    },
    /// Recursion step with parameter substitution: strict product on normal
    /// tuples, full comparison against every safe argument.
    TsPs {
        normal_perm: Vec<usize>,
        normal_subs: Vec<GeqProof>,
        safe_subs: Vec<ProofNode>,
    },
}

impl Clause {
    pub fn name(&self) -> &'static str {
        match self {
            Clause::St { .. } => "st",
            Clause::Ia { .. } => "ia",
            Clause::Ts { .. } | Clause::TsPs { .. } => "ts",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeqProof {
    Equivalent,
    Greater(ProofNode),
}

/// Failure evidence: the obligation that could not be met.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{obligation}")]
pub struct NotGreater {
    pub obligation: String,
}

impl NotGreater {
    fn new(msg: impl Into<String>) -> Self {
        NotGreater {
            obligation: msg.into(),
        }
    }
}

pub fn spop_gt(cert: &Certificate, s: &Term, t: &Term) -> Result<ProofNode, NotGreater> {
    Orienter::new(cert, Variant::Spop, OrientOptions::default()).gt(s, t)
}

pub fn spop_ps_gt(cert: &Certificate, s: &Term, t: &Term) -> Result<ProofNode, NotGreater> {
    Orienter::new(cert, Variant::SpopPs, OrientOptions::default()).gt(s, t)
}

/// Compares under the certificate's own variant.
pub fn orient_gt(cert: &Certificate, s: &Term, t: &Term) -> Result<ProofNode, NotGreater> {
    Orienter::new(cert, cert.variant, OrientOptions::default()).gt(s, t)
}

pub fn orient_gt_with(
    cert: &Certificate,
    opts: OrientOptions,
    s: &Term,
    t: &Term,
) -> Result<ProofNode, NotGreater> {
    Orienter::new(cert, cert.variant, opts).gt(s, t)
}

struct Orienter<'a> {
    cert: &'a Certificate,
    variant: Variant,
    opts: OrientOptions,
}

impl<'a> Orienter<'a> {
    fn new(cert: &'a Certificate, variant: Variant, opts: OrientOptions) -> Self {
        Orienter {
            cert,
            variant,
            opts,
        }
    }

    fn prec(&self) -> &Precedence {
        &self.cert.precedence
    }

    fn tiering(&self) -> &Tiering {
        &self.cert.tiering
    }

    fn geq(&self, s: &Term, t: &Term) -> Option<GeqProof> {
        if safe_equivalent(self.prec(), self.tiering(), s, t) {
            return Some(GeqProof::Equivalent);
        }
        self.gt(s, t).ok().map(GeqProof::Greater)
    }

    fn gt(&self, s: &Term, t: &Term) -> Result<ProofNode, NotGreater> {
        let Term::App(f, s_args) = s else {
            return Err(NotGreater::new("left-hand side is a variable"));
        };
        // clause st
        for (i, si) in s_args.iter().enumerate() {
            if let Some(sub) = self.geq(si, t) {
                return Ok(ProofNode {
                    lhs: s.clone(),
                    rhs: t.clone(),
                    clause: Clause::St {
                        index: i,
                        sub: Box::new(sub),
                    },
                });
            }
        }
        let Term::App(g, _) = t else {
            return Err(NotGreater::new(
                "variable on the right is not reachable from any argument",
            ));
        };
        let mut reasons: Vec<String> = Vec::new();
        if self.tiering().kind(*f) != Kind::Constructor && self.prec().above(*f, *g) {
            match self.try_ia(s, *f, t, *g) {
                Ok(clause) => {
                    return Ok(ProofNode {
                        lhs: s.clone(),
                        rhs: t.clone(),
                        clause,
                    })
                }
                Err(e) => reasons.push(e.obligation),
            }
        } else {
            reasons.push("clause ia: right root is not strictly below the left root".into());
        }
        if self.tiering().is_recursive(*f) && self.prec().equivalent(*f, *g) {
            let attempt = match self.variant {
                Variant::Spop => self.try_ts(s, *f, t, *g),
                Variant::SpopPs => self.try_ts_ps(s, *f, t, *g),
            };
            match attempt {
                Ok(clause) => {
                    return Ok(ProofNode {
                        lhs: s.clone(),
                        rhs: t.clone(),
                        clause,
                    })
                }
                Err(e) => reasons.push(e.obligation),
            }
        } else {
            reasons.push(
                "clause ts: left root is not recursive or roots are not equivalent".into(),
            );
        }
        Err(NotGreater::new(reasons.join("; ")))
    }

    /// Does `t` (an argument of the compared right-hand side) exceed what the
    /// one unbounded position may carry?
    fn arg_is_unbounded(&self, f: SymbolId, t: &Term) -> bool {
        match self.variant {
            // Plain order: only defined symbols count.
            Variant::Spop => t.contains_symbol_where(&|h| {
                self.tiering().kind(h) != Kind::Constructor && !self.prec().above(f, h)
            }),
            // Parameter substitution: any function symbol counts.
            Variant::SpopPs => t.contains_symbol_where(&|h| !self.prec().above(f, h)),
        }
    }

    fn try_ia(&self, s: &Term, f: SymbolId, t: &Term, g: SymbolId) -> Result<Clause, NotGreater> {
        let t_args = t.args();
        let mut safe_subs = Vec::new();
        for (j, tj) in t_args.iter().enumerate() {
            let normal = self.tiering().kind(g) != Kind::Constructor
                && self.tiering().is_normal_pos(g, j);
            if normal {
                if !normal_subterm_gt(self.prec(), self.tiering(), s, tj) {
                    return Err(NotGreater::new(format!(
                        "clause ia: normal argument {} of the right-hand side is not a normal subterm of the left",
                        j + 1
                    )));
                }
            } else {
                match self.gt(s, tj) {
                    Ok(p) => safe_subs.push(p),
                    Err(e) => {
                        return Err(NotGreater::new(format!(
                            "clause ia: safe argument {} not dominated: {}",
                            j + 1,
                            e.obligation
                        )))
                    }
                }
            }
        }
        let unbounded: Vec<usize> = t_args
            .iter()
            .enumerate()
            .filter(|(_, tj)| self.arg_is_unbounded(f, tj))
            .map(|(j, _)| j)
            .collect();
        if unbounded.len() > 1 {
            return Err(NotGreater::new(format!(
                "clause ia: {} arguments carry symbols not below the left root, at most one may",
                unbounded.len()
            )));
        }
        Ok(Clause::Ia {
            safe_subs,
            unbounded: unbounded.first().copied(),
        })
    }

    fn split_args<'t>(&self, sym: SymbolId, args: &'t [Term]) -> (Vec<&'t Term>, Vec<&'t Term>) {
        let mut normal = Vec::new();
        let mut safe = Vec::new();
        for (i, a) in args.iter().enumerate() {
            if self.tiering().kind(sym) != Kind::Constructor && self.tiering().is_normal_pos(sym, i)
            {
                normal.push(a);
            } else {
                safe.push(a);
            }
        }
        (normal, safe)
    }

    fn try_ts(&self, s: &Term, f: SymbolId, t: &Term, g: SymbolId) -> Result<Clause, NotGreater> {
        let (s_normal, s_safe) = self.split_args(f, s.args());
        let (t_normal, t_safe) = self.split_args(g, t.args());
        if s_normal.len() != t_normal.len() || s_safe.len() != t_safe.len() {
            return Err(NotGreater::new(
                "clause ts: argument partitions of the two roots differ",
            ));
        }
        let (normal_perm, normal_subs) = self
            .product(&s_normal, &t_normal, true)
            .ok_or_else(|| NotGreater::new("clause ts: no strict product decrease on normal arguments"))?;
        let (safe_perm, safe_subs) = self
            .product(&s_safe, &t_safe, self.opts.safe_tuple_strict)
            .ok_or_else(|| NotGreater::new("clause ts: safe arguments do not compare pointwise"))?;
        Ok(Clause::Ts {
            normal_perm,
            normal_subs,
            safe_perm,
            safe_subs,
        })
    }

    fn try_ts_ps(&self, s: &Term, f: SymbolId, t: &Term, g: SymbolId) -> Result<Clause, NotGreater> {
        let (s_normal, _) = self.split_args(f, s.args());
        let (t_normal, t_safe) = self.split_args(g, t.args());
        if s_normal.len() != t_normal.len() {
            return Err(NotGreater::new(
                "clause ts: numbers of normal arguments differ",
            ));
        }
        let (normal_perm, normal_subs) = self
            .product(&s_normal, &t_normal, true)
            .ok_or_else(|| NotGreater::new("clause ts: no strict product decrease on normal arguments"))?;
        let mut safe_subs = Vec::new();
        for tj in &t_safe {
            if self.arg_is_unbounded(f, tj) {
                return Err(NotGreater::new(
                    "clause ts: a safe argument of the recursive call contains symbols not below the left root",
                ));
            }
            match self.gt(s, tj) {
                Ok(p) => safe_subs.push(p),
                Err(e) => {
                    return Err(NotGreater::new(format!(
                        "clause ts: safe argument not dominated: {}",
                        e.obligation
                    )))
                }
            }
        }
        Ok(Clause::TsPs {
            normal_perm,
            normal_subs,
            safe_subs,
        })
    }

    /// Product comparison modulo permutation: a bijection matching every left
    /// entry with a pointwise-dominated right entry, strictly at least once
    /// when `need_strict`. First match in index order wins, so proofs are
    /// reproducible.
    fn product(
        &self,
        ss: &[&Term],
        ts: &[&Term],
        need_strict: bool,
    ) -> Option<(Vec<usize>, Vec<GeqProof>)> {
        let n = ss.len();
        if n != ts.len() {
            return None;
        }
        if n == 0 {
            return if need_strict { None } else { Some((vec![], vec![])) };
        }
        let mut matrix: Vec<Vec<Option<GeqProof>>> = Vec::with_capacity(n);
        for s in ss {
            matrix.push(ts.iter().map(|t| self.geq(s, t)).collect());
        }
        let mut perm = vec![usize::MAX; n];
        let mut used = vec![false; n];
        if search_product(&matrix, 0, &mut used, &mut perm, need_strict, false) {
            let subs = perm
                .iter()
                .enumerate()
                .map(|(i, &j)| matrix[i][j].clone().expect("matched edge exists"))
                .collect();
            Some((perm, subs))
        } else {
            None
        }
    }
}

fn search_product(
    matrix: &[Vec<Option<GeqProof>>],
    i: usize,
    used: &mut [bool],
    perm: &mut [usize],
    need_strict: bool,
    have_strict: bool,
) -> bool {
    let n = matrix.len();
    if i == n {
        return !need_strict || have_strict;
    }
    for j in 0..n {
        if used[j] {
            continue;
        }
        let Some(edge) = &matrix[i][j] else { continue };
        let strict = matches!(edge, GeqProof::Greater(_));
        used[j] = true;
        perm[i] = j;
        if search_product(matrix, i + 1, used, perm, need_strict, have_strict || strict) {
            return true;
        }
        used[j] = false;
        perm[i] = usize::MAX;
    }
    false
}

/// The certificate's degree statement: per-symbol recursion depths and their
/// maximum over defined symbols, plus one orientation proof per rule.
#[derive(Debug, Clone)]
pub struct DegreeReport {
    pub degree: u64,
    pub per_symbol: Vec<(SymbolId, u64)>,
    pub proofs: Vec<ProofNode>,
}

#[derive(Debug, Error)]
pub enum CompatError {
    #[error("not a constructor system: a left-hand side has a defined symbol below the root")]
    NotConstructorTrs,
    #[error("invalid certificate: {0}")]
    Cert(#[from] CertError),
    #[error("rule {rule} not oriented: {failure}")]
    RuleFails { rule: usize, failure: NotGreater },
}

pub fn check_compatibility(trs: &Trs, cert: &Certificate) -> Result<DegreeReport, CompatError> {
    check_compatibility_with(trs, cert, OrientOptions::default())
}

pub fn check_compatibility_with(
    trs: &Trs,
    cert: &Certificate,
    opts: OrientOptions,
) -> Result<DegreeReport, CompatError> {
    if !trs.is_constructor_trs() {
        return Err(CompatError::NotConstructorTrs);
    }
    cert.validate(trs)?;
    let orienter = Orienter::new(cert, cert.variant, opts);
    let mut proofs = Vec::new();
    for (i, rule) in trs.rules().iter().enumerate() {
        match orienter.gt(&rule.lhs, &rule.rhs) {
            Ok(p) => proofs.push(p),
            Err(failure) => return Err(CompatError::RuleFails { rule: i, failure }),
        }
    }
    let per_symbol: Vec<(SymbolId, u64)> = trs
        .defined_symbols()
        .into_iter()
        .map(|f| (f, recursion_depth(&cert.precedence, &cert.tiering, f)))
        .collect();
    let degree = per_symbol.iter().map(|(_, d)| *d).max().unwrap_or(0);
    Ok(DegreeReport {
        degree,
        per_symbol,
        proofs,
    })
}

/// Re-validates every node of a proof against the definition of the order.
pub fn replay(cert: &Certificate, proof: &ProofNode) -> bool {
    replay_with(cert, OrientOptions::default(), proof)
}

pub fn replay_with(cert: &Certificate, opts: OrientOptions, proof: &ProofNode) -> bool {
    let orienter = Orienter::new(cert, cert.variant, opts);
    replay_node(&orienter, proof)
}

fn replay_node(o: &Orienter, node: &ProofNode) -> bool {
    let Term::App(f, s_args) = &node.lhs else {
        return false;
    };
    match &node.clause {
        Clause::St { index, sub } => {
            let Some(si) = s_args.get(*index) else {
                return false;
            };
            replay_geq(o, si, &node.rhs, sub)
        }
        Clause::Ia { safe_subs, .. } => {
            let Term::App(g, t_args) = &node.rhs else {
                return false;
            };
            if o.tiering().kind(*f) == Kind::Constructor || !o.prec().above(*f, *g) {
                return false;
            }
            let mut safe_iter = safe_subs.iter();
            for (j, tj) in t_args.iter().enumerate() {
                let normal =
                    o.tiering().kind(*g) != Kind::Constructor && o.tiering().is_normal_pos(*g, j);
                if normal {
                    if !normal_subterm_gt(o.prec(), o.tiering(), &node.lhs, tj) {
                        return false;
                    }
                } else {
                    let Some(sub) = safe_iter.next() else {
                        return false;
                    };
                    if sub.lhs != node.lhs || &sub.rhs != tj || !replay_node(o, sub) {
                        return false;
                    }
                }
            }
            if safe_iter.next().is_some() {
                return false;
            }
            t_args.iter().filter(|tj| o.arg_is_unbounded(*f, tj)).count() <= 1
        }
        Clause::Ts {
            normal_perm,
            normal_subs,
            safe_perm,
            safe_subs,
        } => {
            let Term::App(g, t_args) = &node.rhs else {
                return false;
            };
            if !o.tiering().is_recursive(*f) || !o.prec().equivalent(*f, *g) {
                return false;
            }
            let (s_normal, s_safe) = o.split_args(*f, s_args);
            let (t_normal, t_safe) = o.split_args(*g, t_args);
            replay_product(o, &s_normal, &t_normal, normal_perm, normal_subs, true)
                && replay_product(o, &s_safe, &t_safe, safe_perm, safe_subs, o.opts.safe_tuple_strict)
        }
        Clause::TsPs {
            normal_perm,
            normal_subs,
            safe_subs,
        } => {
            let Term::App(g, t_args) = &node.rhs else {
                return false;
            };
            if o.variant != Variant::SpopPs
                || !o.tiering().is_recursive(*f)
                || !o.prec().equivalent(*f, *g)
            {
                return false;
            }
            let (s_normal, _) = o.split_args(*f, s_args);
            let (t_normal, t_safe) = o.split_args(*g, t_args);
            if !replay_product(o, &s_normal, &t_normal, normal_perm, normal_subs, true) {
                return false;
            }
            if safe_subs.len() != t_safe.len() {
                return false;
            }
            for (sub, tj) in safe_subs.iter().zip(t_safe.iter()) {
                if o.arg_is_unbounded(*f, tj) {
                    return false;
                }
                if sub.lhs != node.lhs || &sub.rhs != *tj || !replay_node(o, sub) {
                    return false;
                }
            }
            true
        }
    }
}

fn replay_geq(o: &Orienter, s: &Term, t: &Term, sub: &GeqProof) -> bool {
    match sub {
        GeqProof::Equivalent => safe_equivalent(o.prec(), o.tiering(), s, t),
        GeqProof::Greater(p) => &p.lhs == s && &p.rhs == t && replay_node(o, p),
    }
}

fn replay_product(
    o: &Orienter,
    ss: &[&Term],
    ts: &[&Term],
    perm: &[usize],
    subs: &[GeqProof],
    need_strict: bool,
) -> bool {
    let n = ss.len();
    if ts.len() != n || perm.len() != n || subs.len() != n {
        return false;
    }
    let mut used = vec![false; n];
    let mut have_strict = false;
    for i in 0..n {
        let j = perm[i];
        if j >= n || used[j] {
            return false;
        }
        used[j] = true;
        match &subs[i] {
            GeqProof::Equivalent => {
                if !safe_equivalent(o.prec(), o.tiering(), ss[i], ts[j]) {
                    return false;
                }
            }
            GeqProof::Greater(p) => {
                if &p.lhs != ss[i] || &p.rhs != ts[j] || !replay_node(o, p) {
                    return false;
                }
                have_strict = true;
            }
        }
    }
    !need_strict || have_strict
}
