//! Term rewrite systems and the innermost rewriting engine.
//!
//! Covers rule/system validation, constructor-system classification, innermost
//! successor computation, derivation height, ground pattern coverage
//! (complete definedness), and garbage completion with a fresh bottom
//! constant.

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::term::{Signature, Subst, SymbolId, Term, VarId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub lhs: Term,
    pub rhs: Term,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrsError {
    #[error("rule {0}: left-hand side is a variable")]
    LhsVariable(usize),
    #[error("rule {0}: right-hand side mentions a variable not bound on the left")]
    FreeRhsVariable(usize),
    #[error("rule {0}: symbol applied with wrong number of arguments")]
    ArityViolation(usize),
    #[error("symbol `{0}` is already declared with arity {1}; need a fresh constant")]
    SignatureClash(String, usize),
}

/// A finite rewrite system over an owned signature. Defined symbols are the
/// roots of left-hand sides; the rest are constructors.
#[derive(Debug, Clone)]
pub struct Trs {
    sig: Signature,
    rules: Vec<Rule>,
    defined: Vec<bool>,
}

impl Trs {
    pub fn new(sig: Signature, rules: Vec<Rule>) -> Result<Self, TrsError> {
        let mut defined = vec![false; sig.len()];
        for (i, rule) in rules.iter().enumerate() {
            let Some(root) = rule.lhs.root() else {
                return Err(TrsError::LhsVariable(i));
            };
            if !arities_ok(&sig, &rule.lhs) || !arities_ok(&sig, &rule.rhs) {
                return Err(TrsError::ArityViolation(i));
            }
            let lhs_vars = rule.lhs.vars();
            if rule.rhs.vars().iter().any(|v| !lhs_vars.contains(v)) {
                return Err(TrsError::FreeRhsVariable(i));
            }
            defined[root.0 as usize] = true;
        }
        Ok(Trs {
            sig,
            rules,
            defined,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_defined(&self, f: SymbolId) -> bool {
        self.defined[f.0 as usize]
    }

    pub fn defined_symbols(&self) -> Vec<SymbolId> {
        self.sig.symbols().filter(|&f| self.is_defined(f)).collect()
    }

    pub fn constructors(&self) -> Vec<SymbolId> {
        self.sig.symbols().filter(|&f| !self.is_defined(f)).collect()
    }

    /// Every left-hand side is a defined symbol applied to constructor terms.
    pub fn is_constructor_trs(&self) -> bool {
        self.rules.iter().all(|rule| {
            rule.lhs
                .args()
                .iter()
                .all(|arg| !arg.contains_symbol_where(&|f| self.is_defined(f)))
        })
    }

    /// No defined symbol occurs in `t`.
    pub fn is_value(&self, t: &Term) -> bool {
        !t.contains_symbol_where(&|f| self.is_defined(f))
    }

    /// `t` is a defined symbol applied to values.
    pub fn is_basic(&self, t: &Term) -> bool {
        match t.root() {
            Some(f) => self.is_defined(f) && t.args().iter().all(|a| self.is_value(a)),
            None => false,
        }
    }

    pub fn is_left_linear(&self) -> bool {
        self.rules.iter().all(|rule| {
            let mut seen = HashSet::new();
            all_vars_distinct(&rule.lhs, &mut seen)
        })
    }

    /// Matches `pattern` against `subject` syntactically.
    pub fn match_rule<'a>(pattern: &Term, subject: &'a Term) -> Option<Subst> {
        let mut subst = Subst::new();
        if match_into(pattern, subject, &mut subst) {
            Some(subst)
        } else {
            None
        }
    }

    pub fn is_normal_form(&self, t: &Term) -> bool {
        t.subterms()
            .iter()
            .all(|u| self.rules.iter().all(|r| Trs::match_rule(&r.lhs, u).is_none()))
    }

    /// All one-step innermost reducts of `t`: a redex may fire only when its
    /// own arguments are normal forms. Deterministic order, duplicates
    /// removed.
    pub fn innermost_successors(&self, t: &Term) -> Vec<Term> {
        let mut out = Vec::new();
        self.successors_into(t, &mut |u| out.push(u));
        dedupe(out)
    }

    fn successors_into(&self, t: &Term, emit: &mut dyn FnMut(Term)) {
        let Term::App(f, args) = t else { return };
        if args.iter().all(|a| self.is_normal_form(a)) {
            for rule in &self.rules {
                if let Some(subst) = Trs::match_rule(&rule.lhs, t) {
                    emit(rule.rhs.substitute(&subst));
                }
            }
        } else {
            for (i, arg) in args.iter().enumerate() {
                self.successors_into(arg, &mut |new_arg| {
                    let mut new_args = args.clone();
                    new_args[i] = new_arg;
                    emit(Term::App(*f, new_args));
                });
            }
        }
    }

    /// Reduces `t` to an innermost normal form, always taking the first
    /// successor. Intended for confluent systems where the normal form is
    /// unique.
    pub fn normalize(&self, t: &Term, fuel: u64) -> Result<Term, FuelExceeded> {
        let mut current = t.clone();
        for _ in 0..fuel {
            let mut next = None;
            self.successors_into(&current, &mut |u| {
                if next.is_none() {
                    next = Some(u);
                }
            });
            match next {
                Some(u) => current = u,
                None => return Ok(current),
            }
        }
        if self.is_normal_form(&current) {
            Ok(current)
        } else {
            Err(FuelExceeded)
        }
    }

    /// Maximal length of an innermost derivation from `t`.
    ///
    /// Exhaustive over all derivations, without assuming confluence. Rather
    /// than walking the full interleaving graph, the engine computes, per
    /// subterm, the set of reachable normal forms with the maximal step count
    /// to each; independent positions contribute additively, which is exact
    /// for innermost rewriting.
    pub fn derivation_height(&self, t: &Term, fuel: u64) -> Result<u64, FuelExceeded> {
        let mut engine = DhEngine {
            trs: self,
            fuel,
            work: 0,
            memo: HashMap::new(),
            in_progress: HashSet::new(),
        };
        let nfs = engine.nf_set(t)?;
        Ok(nfs.iter().map(|(_, len)| *len).max().unwrap_or(0))
    }

    /// Ground pattern coverage: is every ground basic term reducible?
    /// Sound and complete for left-linear constructor systems; non-left-linear
    /// input is reported as [`Coverage::Unknown`].
    pub fn coverage(&self) -> Coverage {
        if !self.is_left_linear() {
            return Coverage::Unknown;
        }
        let groundable = self.groundable_constructors();
        for f in self.defined_symbols() {
            let arity = self.sig.arity(f);
            let rows: Vec<Vec<Term>> = self
                .rules
                .iter()
                .filter(|r| r.lhs.root() == Some(f))
                .map(|r| r.lhs.args().to_vec())
                .collect();
            if arity > 0 && groundable.is_empty() {
                continue; // no ground instances to cover
            }
            if let Some(witness_args) = self.uncovered(&groundable, rows, arity) {
                return Coverage::Incomplete {
                    witness: Term::App(f, witness_args),
                };
            }
        }
        Coverage::Complete
    }

    /// Constructors from which a ground value can be built, with a minimal
    /// witness term each. Ordered so that witnesses are deterministic.
    fn groundable_constructors(&self) -> BTreeMap<SymbolId, Term> {
        let mut witness: BTreeMap<SymbolId, Term> = BTreeMap::new();
        loop {
            let mut changed = false;
            for c in self.constructors() {
                if witness.contains_key(&c) {
                    continue;
                }
                let args: Option<Vec<Term>> = (0..self.sig.arity(c))
                    .map(|_| witness.values().next().cloned())
                    .collect();
                if let Some(args) = args {
                    witness.insert(c, Term::App(c, args));
                    changed = true;
                }
            }
            if !changed {
                return witness;
            }
        }
    }

    /// Returns a ground value vector missed by all rows, if any.
    fn uncovered(
        &self,
        groundable: &BTreeMap<SymbolId, Term>,
        rows: Vec<Vec<Term>>,
        width: usize,
    ) -> Option<Vec<Term>> {
        if rows.is_empty() {
            let args: Option<Vec<Term>> = (0..width)
                .map(|_| groundable.values().next().cloned())
                .collect();
            return args; // None only when no ground value exists at all
        }
        if width == 0 {
            return None;
        }
        let used: HashSet<SymbolId> = rows
            .iter()
            .filter_map(|row| row[0].root())
            .collect();
        let all_used = groundable.keys().all(|c| used.contains(c));
        if all_used {
            for &c in groundable.keys() {
                let arity = self.sig.arity(c);
                let spec_rows: Vec<Vec<Term>> = rows
                    .iter()
                    .filter_map(|row| specialize_row(row, c, arity))
                    .collect();
                if let Some(w) = self.uncovered(groundable, spec_rows, arity + width - 1) {
                    let (head_args, rest) = w.split_at(arity);
                    let mut out = vec![Term::App(c, head_args.to_vec())];
                    out.extend_from_slice(rest);
                    return Some(out);
                }
            }
            None
        } else {
            let default_rows: Vec<Vec<Term>> = rows
                .iter()
                .filter(|row| row[0].is_var())
                .map(|row| row[1..].to_vec())
                .collect();
            let unused = groundable
                .iter()
                .find(|(c, _)| !used.contains(c))
                .map(|(_, w)| w.clone())
                .expect("some groundable constructor is unused");
            let rest = self.uncovered(groundable, default_rows, width - 1)?;
            let mut out = vec![unused];
            out.extend(rest);
            Some(out)
        }
    }

    /// Extends the signature with a fresh bottom constant and returns the
    /// completed world in which garbage rewrites to it.
    pub fn garbage_completed(&self) -> Result<GarbageCompleted, TrsError> {
        let mut sig = self.sig.clone();
        if let Some(existing) = sig.symbol(BOT_NAME) {
            if sig.arity(existing) != 0 || self.is_defined(existing) {
                return Err(TrsError::SignatureClash(
                    BOT_NAME.to_owned(),
                    sig.arity(existing),
                ));
            }
        }
        let bot = sig.add_symbol(BOT_NAME, 0).expect("bot constant is fresh or reused");
        let trs = Trs::new(sig, self.rules.clone()).expect("rules unchanged");
        Ok(GarbageCompleted { trs, bot })
    }
}

pub const BOT_NAME: &str = "bot";

/// Result of the ground pattern coverage check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coverage {
    /// Every ground basic term is reducible: values coincide with ground
    /// normal forms.
    Complete,
    /// Some ground basic term is a normal form.
    Incomplete { witness: Term },
    /// Not decided: the system is not left-linear.
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("fuel exceeded: derivation longer than the budget or search space too large")]
pub struct FuelExceeded;

/// A rewrite system together with the fresh bottom constant that the
/// (infinitely many) garbage rules collapse to.
#[derive(Debug, Clone)]
pub struct GarbageCompleted {
    pub trs: Trs,
    pub bot: SymbolId,
}

impl GarbageCompleted {
    /// Replaces every garbage subterm (a normal form of the base system with a
    /// defined root) by the bottom constant, to fixpoint.
    pub fn normalize_garbage(&self, t: &Term) -> Term {
        let mut current = t.clone();
        loop {
            let next = self.garbage_pass(&current);
            if next == current {
                return current;
            }
            current = next;
        }
    }

    fn garbage_pass(&self, t: &Term) -> Term {
        match t {
            Term::Var(_) => t.clone(),
            Term::App(f, args) => {
                let new_args: Vec<Term> = args.iter().map(|a| self.garbage_pass(a)).collect();
                let u = Term::App(*f, new_args);
                if self.trs.is_defined(*f) && self.trs.is_normal_form(&u) {
                    Term::constant(self.bot)
                } else {
                    u
                }
            }
        }
    }

    pub fn is_garbage(&self, t: &Term) -> bool {
        match t.root() {
            Some(f) => self.trs.is_defined(f) && self.trs.is_normal_form(t),
            None => false,
        }
    }

    /// Innermost successors in the completed system: base rule steps plus
    /// garbage steps to bottom. In this world normal forms are exactly
    /// values.
    pub fn innermost_successors(&self, t: &Term) -> Vec<Term> {
        let mut out = Vec::new();
        self.successors_into(t, &mut |u| out.push(u));
        dedupe(out)
    }

    fn successors_into(&self, t: &Term, emit: &mut dyn FnMut(Term)) {
        let Term::App(f, args) = t else { return };
        if args.iter().all(|a| self.trs.is_value(a)) {
            let mut fired = false;
            for rule in self.trs.rules() {
                if let Some(subst) = Trs::match_rule(&rule.lhs, t) {
                    emit(rule.rhs.substitute(&subst));
                    fired = true;
                }
            }
            if !fired && self.trs.is_defined(*f) {
                emit(Term::constant(self.bot));
            }
        } else {
            for (i, arg) in args.iter().enumerate() {
                self.successors_into(arg, &mut |new_arg| {
                    let mut new_args = args.clone();
                    new_args[i] = new_arg;
                    emit(Term::App(*f, new_args));
                });
            }
        }
    }
}

fn arities_ok(sig: &Signature, t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::App(f, args) => {
            sig.arity(*f) == args.len() && args.iter().all(|a| arities_ok(sig, a))
        }
    }
}

fn all_vars_distinct(t: &Term, seen: &mut HashSet<VarId>) -> bool {
    match t {
        Term::Var(v) => seen.insert(*v),
        Term::App(_, args) => args.iter().all(|a| all_vars_distinct(a, seen)),
    }
}

fn match_into(pattern: &Term, subject: &Term, subst: &mut Subst) -> bool {
    match pattern {
        Term::Var(v) => subst.bind_consistent(*v, subject),
        Term::App(f, pargs) => match subject {
            Term::App(g, sargs) if f == g => pargs
                .iter()
                .zip(sargs.iter())
                .all(|(p, s)| match_into(p, s, subst)),
            _ => false,
        },
    }
}

fn specialize_row(row: &[Term], c: SymbolId, arity: usize) -> Option<Vec<Term>> {
    match &row[0] {
        Term::Var(_) => {
            // Fresh wildcards; variable identity is irrelevant for coverage of
            // left-linear rows.
            let mut out: Vec<Term> = (0..arity).map(|i| Term::Var(VarId(u32::MAX - i as u32))).collect();
            out.extend_from_slice(&row[1..]);
            Some(out)
        }
        Term::App(g, args) if *g == c => {
            let mut out = args.clone();
            out.extend_from_slice(&row[1..]);
            Some(out)
        }
        Term::App(..) => None,
    }
}

fn dedupe(terms: Vec<Term>) -> Vec<Term> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for t in terms {
        if seen.insert(t.clone()) {
            out.push(t);
        }
    }
    out
}

struct DhEngine<'a> {
    trs: &'a Trs,
    fuel: u64,
    work: u64,
    memo: HashMap<Term, Vec<(Term, u64)>>,
    in_progress: HashSet<Term>,
}

impl DhEngine<'_> {
    /// Reachable innermost normal forms of `t`, each with the maximal number
    /// of steps over all derivations ending in it.
    fn nf_set(&mut self, t: &Term) -> Result<Vec<(Term, u64)>, FuelExceeded> {
        if let Some(cached) = self.memo.get(t) {
            return Ok(cached.clone());
        }
        if !self.in_progress.insert(t.clone()) {
            // A root step reached the same term again: nonterminating.
            return Err(FuelExceeded);
        }
        let result = self.nf_set_uncached(t);
        self.in_progress.remove(t);
        let result = result?;
        self.memo.insert(t.clone(), result.clone());
        Ok(result)
    }

    fn nf_set_uncached(&mut self, t: &Term) -> Result<Vec<(Term, u64)>, FuelExceeded> {
        self.spend(1)?;
        let Term::App(f, args) = t else {
            return Ok(vec![(t.clone(), 0)]);
        };
        // All maximal interleavings first normalize the arguments; lengths of
        // independent positions add up.
        let mut combos: Vec<(Vec<Term>, u64)> = vec![(Vec::new(), 0)];
        for arg in args {
            let arg_nfs = self.nf_set(arg)?;
            let mut next = Vec::new();
            for (prefix, len) in &combos {
                for (nf, arg_len) in &arg_nfs {
                    self.spend(1)?;
                    let mut p = prefix.clone();
                    p.push(nf.clone());
                    next.push((p, self.add_steps(*len, *arg_len)?));
                }
            }
            combos = next;
        }
        let mut out: HashMap<Term, u64> = HashMap::new();
        for (nf_args, arg_len) in combos {
            let u = Term::App(*f, nf_args);
            let mut fired = false;
            for rule in self.trs.rules() {
                if let Some(subst) = Trs::match_rule(&rule.lhs, &u) {
                    fired = true;
                    let reduct = rule.rhs.substitute(&subst);
                    for (nf, tail_len) in self.nf_set(&reduct)? {
                        let total = self.add_steps(arg_len, self.add_steps(1, tail_len)?)?;
                        record_max(&mut out, nf, total);
                    }
                }
            }
            if !fired {
                record_max(&mut out, u, arg_len);
            }
        }
        Ok(out.into_iter().collect())
    }

    fn spend(&mut self, units: u64) -> Result<(), FuelExceeded> {
        self.work += units;
        // Allow generous exploration relative to the step budget.
        if self.work > self.fuel.saturating_mul(64) {
            return Err(FuelExceeded);
        }
        Ok(())
    }

    fn add_steps(&self, a: u64, b: u64) -> Result<u64, FuelExceeded> {
        let sum = a.checked_add(b).ok_or(FuelExceeded)?;
        if sum > self.fuel {
            return Err(FuelExceeded);
        }
        Ok(sum)
    }
}

fn record_max(out: &mut HashMap<Term, u64>, nf: Term, len: u64) {
    let entry = out.entry(nf).or_insert(0);
    if len > *entry {
        *entry = len;
    }
}

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[cfg(test)]
mod tests {
    use super::*;

    struct Square {
        trs: Trs,
        z: SymbolId,
        s: SymbolId,
        plus: SymbolId,
        times: SymbolId,
        square: SymbolId,
    }

    fn square_trs() -> Square {
        let mut sig = Signature::new();
        let z = sig.add_symbol("Z", 0).unwrap();
        let s = sig.add_symbol("S", 1).unwrap();
        let plus = sig.add_symbol("plus", 2).unwrap();
        let times = sig.add_symbol("times", 2).unwrap();
        let square = sig.add_symbol("square", 1).unwrap();
        let x = sig.add_var("x").unwrap();
        let y = sig.add_var("y").unwrap();
        let vx = Term::Var(x);
        let vy = Term::Var(y);
        let rules = vec![
            Rule {
                lhs: Term::App(plus, vec![Term::constant(z), vy.clone()]),
                rhs: vy.clone(),
            },
            Rule {
                lhs: Term::App(plus, vec![Term::App(s, vec![vx.clone()]), vy.clone()]),
                rhs: Term::App(s, vec![Term::App(plus, vec![vx.clone(), vy.clone()])]),
            },
            Rule {
                lhs: Term::App(times, vec![Term::constant(z), vy.clone()]),
                rhs: Term::constant(z),
            },
            Rule {
                lhs: Term::App(times, vec![Term::App(s, vec![vx.clone()]), vy.clone()]),
                rhs: Term::App(plus, vec![vy.clone(), Term::App(times, vec![vx.clone(), vy.clone()])]),
            },
            Rule {
                lhs: Term::App(square, vec![vx.clone()]),
                rhs: Term::App(times, vec![vx.clone(), vx.clone()]),
            },
        ];
        Square {
            trs: Trs::new(sig, rules).unwrap(),
            z,
            s,
            plus,
            times,
            square,
        }
    }

    fn num(sq: &Square, n: usize) -> Term {
        let mut t = Term::constant(sq.z);
        for _ in 0..n {
            t = Term::App(sq.s, vec![t]);
        }
        t
    }

    /// Exhaustive graph search over all innermost derivations; exponential,
    /// for cross-checking the decomposed engine on small inputs.
    fn naive_dh(trs: &Trs, t: &Term, memo: &mut HashMap<Term, u64>) -> u64 {
        if let Some(&v) = memo.get(t) {
            return v;
        }
        let succs = trs.innermost_successors(t);
        let v = succs
            .iter()
            .map(|u| 1 + naive_dh(trs, u, memo))
            .max()
            .unwrap_or(0);
        memo.insert(t.clone(), v);
        v
    }

    #[test]
    fn classifies_constructor_systems() {
        let sq = square_trs();
        assert!(sq.trs.is_constructor_trs());

        let mut sig = Signature::new();
        let f = sig.add_symbol("f", 1).unwrap();
        let g = sig.add_symbol("g", 1).unwrap();
        let x = sig.add_var("x").unwrap();
        let rules = vec![
            Rule {
                lhs: Term::App(f, vec![Term::App(g, vec![Term::Var(x)])]),
                rhs: Term::Var(x),
            },
            Rule {
                lhs: Term::App(g, vec![Term::Var(x)]),
                rhs: Term::Var(x),
            },
        ];
        let trs = Trs::new(sig, rules).unwrap();
        assert!(!trs.is_constructor_trs());

        let empty = Trs::new(Signature::new(), vec![]).unwrap();
        assert!(empty.is_constructor_trs());
    }

    #[test]
    fn values_and_basic_terms() {
        let sq = square_trs();
        assert!(sq.trs.is_value(&num(&sq, 2)));
        let basic = Term::App(sq.plus, vec![num(&sq, 1), num(&sq, 0)]);
        assert!(sq.trs.is_basic(&basic));
        let nested = Term::App(
            sq.plus,
            vec![Term::App(sq.plus, vec![num(&sq, 0), num(&sq, 0)]), num(&sq, 0)],
        );
        assert!(!sq.trs.is_basic(&nested));
    }

    #[test]
    fn innermost_successor_examples() {
        let sq = square_trs();
        // plus(Z; S(Z)) -> S(Z)
        let t = Term::App(sq.plus, vec![num(&sq, 0), num(&sq, 1)]);
        assert_eq!(sq.trs.innermost_successors(&t), vec![num(&sq, 1)]);
        // times(S(S(Z)), S(Z)) -> plus(S(Z); times(S(Z), S(Z)))
        let t = Term::App(sq.times, vec![num(&sq, 2), num(&sq, 1)]);
        let expected = Term::App(
            sq.plus,
            vec![num(&sq, 1), Term::App(sq.times, vec![num(&sq, 1), num(&sq, 1)])],
        );
        assert_eq!(sq.trs.innermost_successors(&t), vec![expected]);
        // values have no successors
        assert!(sq.trs.innermost_successors(&num(&sq, 3)).is_empty());
    }

    #[test]
    fn inner_redexes_fire_first() {
        let sq = square_trs();
        // plus(Z; plus(Z; Z)): only the inner redex is innermost.
        let inner = Term::App(sq.plus, vec![num(&sq, 0), num(&sq, 0)]);
        let t = Term::App(sq.plus, vec![num(&sq, 0), inner]);
        let succs = sq.trs.innermost_successors(&t);
        assert_eq!(
            succs,
            vec![Term::App(sq.plus, vec![num(&sq, 0), num(&sq, 0)])]
        );
    }

    #[test]
    fn derivation_height_examples() {
        let sq = square_trs();
        // plus(S(S(Z)); Z): two step rules and one base application.
        let t = Term::App(sq.plus, vec![num(&sq, 2), num(&sq, 0)]);
        assert_eq!(sq.trs.derivation_height(&t, DEFAULT_FUEL).unwrap(), 3);
        assert_eq!(sq.trs.derivation_height(&num(&sq, 4), DEFAULT_FUEL).unwrap(), 0);
    }

    #[test]
    fn decomposed_height_matches_graph_search() {
        let sq = square_trs();
        for n in 0..4 {
            for m in 0..4 {
                let t = Term::App(sq.times, vec![num(&sq, n), num(&sq, m)]);
                let mut memo = HashMap::new();
                assert_eq!(
                    sq.trs.derivation_height(&t, DEFAULT_FUEL).unwrap(),
                    naive_dh(&sq.trs, &t, &mut memo),
                    "times({n},{m})"
                );
            }
        }
        let t = Term::App(sq.square, vec![num(&sq, 3)]);
        let mut memo = HashMap::new();
        assert_eq!(
            sq.trs.derivation_height(&t, DEFAULT_FUEL).unwrap(),
            naive_dh(&sq.trs, &t, &mut memo)
        );
    }

    #[test]
    fn decomposed_height_is_exact_without_confluence() {
        // a -> b | c with different continuation lengths, plus a rule that
        // erases its argument: the maximum must track the longest branch.
        let mut sig = Signature::new();
        let a = sig.add_symbol("a", 0).unwrap();
        let b = sig.add_symbol("b", 0).unwrap();
        let c = sig.add_symbol("c", 0).unwrap();
        let d = sig.add_symbol("d", 0).unwrap();
        let f = sig.add_symbol("f", 1).unwrap();
        let k = sig.add_symbol("k", 0).unwrap();
        let x = sig.add_var("x").unwrap();
        let rules = vec![
            Rule { lhs: Term::constant(a), rhs: Term::constant(b) },
            Rule { lhs: Term::constant(a), rhs: Term::constant(c) },
            Rule { lhs: Term::constant(c), rhs: Term::constant(d) },
            // f collapses b-values quickly but loops longer on d
            Rule { lhs: Term::App(f, vec![Term::constant(b)]), rhs: Term::constant(k) },
            Rule { lhs: Term::App(f, vec![Term::constant(d)]), rhs: Term::App(f, vec![Term::constant(b)]) },
            Rule { lhs: Term::App(f, vec![Term::Var(x)]), rhs: Term::constant(k) },
        ];
        let trs = Trs::new(sig, rules).unwrap();
        let t = Term::App(f, vec![Term::constant(a)]);
        let mut memo = HashMap::new();
        let expected = naive_dh(&trs, &t, &mut memo);
        assert_eq!(trs.derivation_height(&t, DEFAULT_FUEL).unwrap(), expected);
    }

    #[test]
    fn nonterminating_systems_exhaust_fuel() {
        let mut sig = Signature::new();
        let a = sig.add_symbol("a", 0).unwrap();
        let rules = vec![Rule {
            lhs: Term::constant(a),
            rhs: Term::constant(a),
        }];
        let trs = Trs::new(sig, rules).unwrap();
        assert_eq!(
            trs.derivation_height(&Term::constant(a), 1000),
            Err(FuelExceeded)
        );
    }

    #[test]
    fn coverage_of_the_square_system() {
        let sq = square_trs();
        assert_eq!(sq.trs.coverage(), Coverage::Complete);
    }

    #[test]
    fn coverage_matches_brute_force_on_small_systems() {
        // Brute force: enumerate ground basic terms with arguments up to the
        // maximal pattern depth and test reducibility.
        let sq = square_trs();
        let max_depth = 2;
        let mut values = vec![num(&sq, 0)];
        for n in 1..=max_depth {
            values.push(num(&sq, n));
        }
        for f in sq.trs.defined_symbols() {
            for v1 in &values {
                for v2 in &values {
                    let args: Vec<Term> = match sq.trs.signature().arity(f) {
                        1 => vec![v1.clone()],
                        2 => vec![v1.clone(), v2.clone()],
                        _ => unreachable!(),
                    };
                    let t = Term::App(f, args);
                    assert!(
                        !sq.trs.is_normal_form(&t),
                        "{} should be reducible",
                        t.display(sq.trs.signature())
                    );
                }
            }
        }
    }

    #[test]
    fn incomplete_system_yields_witness() {
        let mut sig = Signature::new();
        let z = sig.add_symbol("Z", 0).unwrap();
        let s = sig.add_symbol("S", 1).unwrap();
        let f = sig.add_symbol("f", 1).unwrap();
        let rules = vec![Rule {
            lhs: Term::App(f, vec![Term::constant(z)]),
            rhs: Term::constant(z),
        }];
        let trs = Trs::new(sig, rules).unwrap();
        match trs.coverage() {
            Coverage::Incomplete { witness } => {
                assert_eq!(witness.root(), Some(f));
                assert!(trs.is_normal_form(&witness));
                let _ = s;
            }
            other => panic!("expected incomplete, got {other:?}"),
        }
    }

    #[test]
    fn nonlinear_coverage_is_unknown() {
        let mut sig = Signature::new();
        let t = sig.add_symbol("true", 0).unwrap();
        let eq = sig.add_symbol("eq", 2).unwrap();
        let x = sig.add_var("x").unwrap();
        let rules = vec![Rule {
            lhs: Term::App(eq, vec![Term::Var(x), Term::Var(x)]),
            rhs: Term::constant(t),
        }];
        let trs = Trs::new(sig, rules).unwrap();
        assert_eq!(trs.coverage(), Coverage::Unknown);
    }

    #[test]
    fn garbage_rewrites_to_bottom() {
        let mut sig = Signature::new();
        let z = sig.add_symbol("Z", 0).unwrap();
        let s = sig.add_symbol("S", 1).unwrap();
        let f = sig.add_symbol("f", 1).unwrap();
        let rules = vec![Rule {
            lhs: Term::App(f, vec![Term::constant(z)]),
            rhs: Term::constant(z),
        }];
        let trs = Trs::new(sig, rules).unwrap();
        let world = trs.garbage_completed().unwrap();
        let garbage = Term::App(f, vec![Term::App(s, vec![Term::constant(z)])]);
        assert_eq!(world.normalize_garbage(&garbage), Term::constant(world.bot));
        // values are untouched
        let v = Term::App(s, vec![Term::constant(z)]);
        assert_eq!(world.normalize_garbage(&v), v);
        // idempotent, and output is garbage-free
        let once = world.normalize_garbage(&garbage);
        assert_eq!(world.normalize_garbage(&once), once);
        assert!(once.subterms().iter().all(|u| !world.is_garbage(u)));
    }

    #[test]
    fn bottom_name_clash_is_detected() {
        let mut sig = Signature::new();
        let bot = sig.add_symbol(BOT_NAME, 1).unwrap();
        let z = sig.add_symbol("Z", 0).unwrap();
        let f = sig.add_symbol("f", 1).unwrap();
        let x = sig.add_var("x").unwrap();
        let rules = vec![Rule {
            lhs: Term::App(f, vec![Term::Var(x)]),
            rhs: Term::App(bot, vec![Term::constant(z)]),
        }];
        let trs = Trs::new(sig, rules).unwrap();
        assert!(matches!(
            trs.garbage_completed(),
            Err(TrsError::SignatureClash(..))
        ));
    }

    #[test]
    fn height_is_monotone_along_steps() {
        let sq = square_trs();
        let start = Term::App(sq.square, vec![num(&sq, 3)]);
        let mut frontier = vec![start];
        let mut seen = HashSet::new();
        while let Some(t) = frontier.pop() {
            if !seen.insert(t.clone()) {
                continue;
            }
            let h = sq.trs.derivation_height(&t, DEFAULT_FUEL).unwrap();
            for succ in sq.trs.innermost_successors(&t) {
                let hs = sq.trs.derivation_height(&succ, DEFAULT_FUEL).unwrap();
                assert!(h >= 1 + hs);
                frontier.push(succ);
            }
        }
    }
}
