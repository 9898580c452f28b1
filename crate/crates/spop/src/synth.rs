//! Automatic certificate search.
//!
//! The search space per defined symbol is a precedence level, a kind bit, and
//! one safe/normal bit per argument position; constructors are pinned to the
//! bottom level with every position safe, which is forced by admissibility in
//! a layered precedence. Candidates are explored by depth-first assignment in
//! a fixed symbol order with chronological backtracking; a rule is checked as
//! soon as all of its symbols are assigned, so orientation failures prune
//! whole prefixes. Degrees are tried in increasing order, which makes the
//! first hit minimal and the search deterministic.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::order::{check_compatibility, Certificate, DegreeReport, Variant};
use crate::prec::{normal_subterm_gt, Kind, Precedence, Tiering};
use crate::term::{Signature, SymbolId, Term};
use crate::trs::{Rule, Trs};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBudget {
    /// Cap on candidate assignments examined, partial prefixes included.
    pub max_candidates: u64,
    pub time_limit: Duration,
    pub max_degree: u64,
}

impl SearchBudget {
    /// Defaults sized for desk-scale systems: the degree cap is the number of
    /// defined symbols, which no layered certificate can exceed.
    pub fn default_for(trs: &Trs) -> SearchBudget {
        SearchBudget {
            max_candidates: u64::MAX,
            time_limit: Duration::from_secs(60),
            max_degree: trs.defined_symbols().len() as u64,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.max_candidates == 0 || self.time_limit.is_zero() {
            return Err(SynthError::InvalidBudget);
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("search budget fields must be positive")]
    InvalidBudget,
    #[error("certificate search requires a constructor system")]
    NotConstructorTrs,
    #[error("a fixed partition refers to an argument position out of range")]
    BadFixedMask,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelStats {
    pub degree: u64,
    pub candidates: u64,
    pub exhausted: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SynthStats {
    pub levels: Vec<LevelStats>,
    pub nodes: u64,
}

#[derive(Debug)]
pub enum SynthOutcome {
    Certified {
        certificate: Certificate,
        report: DegreeReport,
        stats: SynthStats,
    },
    /// `budget_exhausted = false` means the whole finite space up to the
    /// degree cap was searched: a genuine negative for that space.
    NoCertificate {
        budget_exhausted: bool,
        stats: SynthStats,
    },
}

pub fn synthesize(
    trs: &Trs,
    variant: Variant,
    budget: &SearchBudget,
) -> Result<SynthOutcome, SynthError> {
    synthesize_with_fixed(trs, variant, budget, &HashMap::new())
}

/// Like [`synthesize`], but with the normal-position masks of some symbols
/// pinned (for systems whose source text declares the argument split).
pub fn synthesize_with_fixed(
    trs: &Trs,
    variant: Variant,
    budget: &SearchBudget,
    fixed_masks: &HashMap<SymbolId, u64>,
) -> Result<SynthOutcome, SynthError> {
    budget.validate()?;
    if !trs.is_constructor_trs() {
        return Err(SynthError::NotConstructorTrs);
    }
    let sig = trs.signature();
    for (&f, &mask) in fixed_masks {
        let arity = sig.arity(f);
        let valid = if arity >= 64 { u64::MAX } else { (1u64 << arity) - 1 };
        if mask & !valid != 0 {
            return Err(SynthError::BadFixedMask);
        }
    }
    let mut search = Search::new(trs, variant, budget, fixed_masks);
    Ok(search.run())
}

struct Search<'a> {
    trs: &'a Trs,
    variant: Variant,
    budget: &'a SearchBudget,
    fixed_masks: &'a HashMap<SymbolId, u64>,
    /// Defined symbols in assignment order (first occurrence in the rules).
    order: Vec<SymbolId>,
    /// Rules checked as soon as the symbol at this order index is assigned.
    rules_ready: Vec<Vec<usize>>,
    levels: Vec<u32>,
    kinds: Vec<Kind>,
    masks: Vec<u64>,
    target: u64,
    deadline: Instant,
    nodes: u64,
    interrupted: bool,
    level_candidates: u64,
}

enum LevelResult {
    Found(Certificate, DegreeReport),
    Exhausted,
    Interrupted,
}

impl<'a> Search<'a> {
    fn new(
        trs: &'a Trs,
        variant: Variant,
        budget: &'a SearchBudget,
        fixed_masks: &'a HashMap<SymbolId, u64>,
    ) -> Self {
        let sig = trs.signature();
        let mut order = Vec::new();
        for rule in trs.rules() {
            for t in [&rule.lhs, &rule.rhs] {
                collect_defined(trs, t, &mut order);
            }
        }
        for f in trs.defined_symbols() {
            if !order.contains(&f) {
                order.push(f);
            }
        }
        // A rule is ready once the last of its defined symbols is assigned.
        let pos: HashMap<SymbolId, usize> =
            order.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let mut rules_ready = vec![Vec::new(); order.len().max(1)];
        for (ri, rule) in trs.rules().iter().enumerate() {
            let mut last = 0usize;
            for t in [&rule.lhs, &rule.rhs] {
                for sub in t.subterms() {
                    if let Some(f) = sub.root() {
                        if let Some(&p) = pos.get(&f) {
                            last = last.max(p);
                        }
                    }
                }
            }
            if order.is_empty() {
                continue;
            }
            rules_ready[last].push(ri);
        }
        Search {
            trs,
            variant,
            budget,
            fixed_masks,
            order,
            rules_ready,
            levels: vec![0; sig.len()],
            kinds: (0..sig.len() as u32)
                .map(|i| {
                    if trs.is_defined(SymbolId(i)) {
                        Kind::Compositional
                    } else {
                        Kind::Constructor
                    }
                })
                .collect(),
            masks: vec![0; sig.len()],
            target: 0,
            deadline: Instant::now() + budget.time_limit,
            nodes: 0,
            interrupted: false,
            level_candidates: 0,
        }
    }

    fn run(&mut self) -> SynthOutcome {
        let mut stats = SynthStats::default();
        for d in 0..=self.budget.max_degree {
            self.target = d;
            self.level_candidates = 0;
            let result = self.assign(0);
            stats.levels.push(LevelStats {
                degree: d,
                candidates: self.level_candidates,
                exhausted: matches!(result, LevelResult::Exhausted),
            });
            stats.nodes = self.nodes;
            match result {
                LevelResult::Found(certificate, report) => {
                    return SynthOutcome::Certified {
                        certificate,
                        report,
                        stats,
                    }
                }
                LevelResult::Exhausted => continue,
                LevelResult::Interrupted => {
                    return SynthOutcome::NoCertificate {
                        budget_exhausted: true,
                        stats,
                    }
                }
            }
        }
        SynthOutcome::NoCertificate {
            budget_exhausted: false,
            stats,
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.interrupted {
            return true;
        }
        self.nodes += 1;
        if self.nodes > self.budget.max_candidates {
            self.interrupted = true;
        }
        if self.nodes % 1024 == 0 && Instant::now() >= self.deadline {
            self.interrupted = true;
        }
        self.interrupted
    }

    fn assign(&mut self, idx: usize) -> LevelResult {
        if self.out_of_budget() {
            return LevelResult::Interrupted;
        }
        if idx == self.order.len() {
            return self.complete();
        }
        let f = self.order[idx];
        let arity = self.trs.signature().arity(f);
        let mask_choices: Vec<u64> = match self.fixed_masks.get(&f) {
            Some(&m) => vec![m],
            None => (0..(1u64 << arity)).collect(),
        };
        let max_level = self.order.len() as u32;
        for level in 1..=max_level {
            self.levels[f.0 as usize] = level;
            for kind in [Kind::Compositional, Kind::Recursive] {
                self.kinds[f.0 as usize] = kind;
                for &mask in &mask_choices {
                    self.masks[f.0 as usize] = mask;
                    if !self.prefix_feasible(idx) {
                        continue;
                    }
                    match self.assign(idx + 1) {
                        LevelResult::Exhausted => {}
                        other => return other,
                    }
                }
            }
        }
        self.levels[f.0 as usize] = 0;
        self.kinds[f.0 as usize] = Kind::Compositional;
        self.masks[f.0 as usize] = 0;
        LevelResult::Exhausted
    }

    /// Checks everything decidable from the first `idx + 1` assigned symbols:
    /// the degree lower bound and every rule whose symbols are all assigned.
    fn prefix_feasible(&mut self, idx: usize) -> bool {
        if self.degree_lower_bound(idx + 1) > self.target {
            return false;
        }
        if self.rules_ready[idx].is_empty() {
            return true;
        }
        let cert = self.current_certificate();
        for &ri in &self.rules_ready[idx] {
            let rule = &self.trs.rules()[ri];
            if !partition_filter(&cert, rule) {
                return false;
            }
            if crate::order::orient_gt(&cert, &rule.lhs, &rule.rhs).is_err() {
                return false;
            }
        }
        true
    }

    /// Recursion depth over the assigned prefix only; unassigned symbols can
    /// only add recursive levels, so this is a lower bound on the final
    /// degree.
    fn degree_lower_bound(&self, assigned: usize) -> u64 {
        let mut recursive_levels = [false; 64];
        for &f in &self.order[..assigned] {
            if self.kinds[f.0 as usize] == Kind::Recursive {
                recursive_levels[self.levels[f.0 as usize] as usize] = true;
            }
        }
        let mut best = 0u64;
        for &f in &self.order[..assigned] {
            let own = if self.kinds[f.0 as usize] == Kind::Recursive {
                1
            } else {
                0
            };
            let below: u64 = (0..self.levels[f.0 as usize] as usize)
                .filter(|&l| recursive_levels[l])
                .count() as u64;
            best = best.max(own + below);
        }
        best
    }

    fn exact_degree(&self) -> u64 {
        self.degree_lower_bound(self.order.len())
    }

    fn current_certificate(&self) -> Certificate {
        let sig = self.trs.signature();
        Certificate {
            precedence: Precedence::from_levels(sig, &self.levels),
            tiering: Tiering::new(sig, self.kinds.clone(), self.masks.clone())
                .expect("masks are bounded by arities"),
            variant: self.variant,
        }
    }

    fn complete(&mut self) -> LevelResult {
        if self.exact_degree() != self.target {
            // Lower degrees were exhausted at earlier iterations; higher ones
            // belong to later iterations.
            return LevelResult::Exhausted;
        }
        self.level_candidates += 1;
        let cert = self.current_certificate();
        // Re-validate from scratch; the incremental checks must never be the
        // only line of defense.
        match check_compatibility(self.trs, &cert) {
            Ok(report) => LevelResult::Found(cert, report),
            Err(_) => LevelResult::Exhausted,
        }
    }
}

fn collect_defined(trs: &Trs, t: &Term, out: &mut Vec<SymbolId>) {
    if let Some(f) = t.root() {
        if trs.is_defined(f) && !out.contains(&f) {
            out.push(f);
        }
    }
    for arg in t.args() {
        collect_defined(trs, arg, out);
    }
}

/// Necessary condition from the normal-subterm obligation: a variable that
/// appears inside a normal argument of a defined application on the right
/// must be reachable through normal positions on the left.
fn partition_filter(cert: &Certificate, rule: &Rule) -> bool {
    let tiering = &cert.tiering;
    for sub in rule.rhs.subterms() {
        let Term::App(g, args) = sub else { continue };
        if tiering.kind(*g) == Kind::Constructor {
            continue;
        }
        for (i, arg) in args.iter().enumerate() {
            if !tiering.is_normal_pos(*g, i) {
                continue;
            }
            for v in arg.vars() {
                if !normal_subterm_gt(&cert.precedence, tiering, &rule.lhs, &Term::Var(v)) {
                    return false;
                }
            }
        }
    }
    true
}

/// The lower-bound family: `f_0(x;) -> a` at degree 0, and each extension
/// adds `f_{i+1}(x;) -> g_{i+1}(x, x;)` and
/// `g_{i+1}(s(;x), y;) -> b(; f_i(y;), g_{i+1}(x, y;))`, forcing one more
/// level of recursion.
pub fn gen_family(d: u64) -> Trs {
    let mut sig = Signature::new();
    let a = sig.add_symbol("a", 0).unwrap();
    let b = sig.add_symbol("b", 2).unwrap();
    let s = sig.add_symbol("s", 1).unwrap();
    let x = sig.add_var("x").unwrap();
    let y = sig.add_var("y").unwrap();
    let fs: Vec<SymbolId> = (0..=d)
        .map(|i| sig.add_symbol(&format!("f{i}"), 1).unwrap())
        .collect();
    let gs: Vec<SymbolId> = (1..=d)
        .map(|i| sig.add_symbol(&format!("g{i}"), 2).unwrap())
        .collect();
    let vx = Term::Var(x);
    let vy = Term::Var(y);
    let mut rules = vec![Rule {
        lhs: Term::App(fs[0], vec![vx.clone()]),
        rhs: Term::constant(a),
    }];
    for i in 1..=d as usize {
        let g = gs[i - 1];
        rules.push(Rule {
            lhs: Term::App(fs[i], vec![vx.clone()]),
            rhs: Term::App(g, vec![vx.clone(), vx.clone()]),
        });
        rules.push(Rule {
            lhs: Term::App(g, vec![Term::App(s, vec![vx.clone()]), vy.clone()]),
            rhs: Term::App(
                b,
                vec![
                    Term::App(fs[i - 1], vec![vy.clone()]),
                    Term::App(g, vec![vx.clone(), vy.clone()]),
                ],
            ),
        });
    }
    Trs::new(sig, rules).expect("family rules are well-formed")
}
