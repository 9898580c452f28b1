//! Property tests for the term-level relations: equivalence laws, the
//! tier-respecting refinement, the normal-subterm relation, and the
//! rank/recursion-depth measures.

use proptest::prelude::*;

use spop::prec::{
    canonicalize, equivalent, normal_subterm_gt, recursion_depth, safe_equivalent, Kind,
    Precedence, Tiering,
};
use spop::term::{Signature, SymbolId, Term, VarId};

/// Fixed test signature: three constructors and two binary/unary symbols that
/// the generated tierings may treat as defined.
fn sig() -> Signature {
    let mut sig = Signature::new();
    sig.add_symbol("c0", 0).unwrap();
    sig.add_symbol("c1", 1).unwrap();
    sig.add_symbol("c2", 2).unwrap();
    sig.add_symbol("d1", 1).unwrap();
    sig.add_symbol("d2", 2).unwrap();
    for v in ["x", "y", "z"] {
        sig.add_var(v).unwrap();
    }
    sig
}

const ARITIES: [usize; 5] = [0, 1, 2, 1, 2];

fn arb_term(depth: u32) -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0u32..3).prop_map(|v| Term::Var(VarId(v))),
        Just(Term::App(SymbolId(0), vec![])),
    ];
    leaf.prop_recursive(depth, 16, 2, |inner| {
        (1u32..5, proptest::collection::vec(inner, 0..=2)).prop_map(|(s, mut args)| {
            let arity = ARITIES[s as usize];
            args.truncate(arity);
            while args.len() < arity {
                args.push(Term::App(SymbolId(0), vec![]));
            }
            Term::App(SymbolId(s), args)
        })
    })
}

/// Levels for the five symbols, inducing a layered precedence.
fn arb_levels() -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(0u32..3, 5)
}

fn arb_masks() -> impl Strategy<Value = Vec<u64>> {
    (0u64..2, 0u64..4, 0u64..2, 0u64..4).prop_map(|(m1, m2, m3, m4)| vec![0, m1, m2, m3, m4])
}

fn tiering_for(sig: &Signature, masks: Vec<u64>) -> Tiering {
    let kinds = vec![Kind::Compositional; 5];
    Tiering::new(sig, kinds, masks).unwrap()
}

/// Shuffles argument lists recursively: the result is always equivalent to
/// the input under any precedence.
fn permute_args(t: &Term, salt: &mut u64) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, args) => {
            let mut new_args: Vec<Term> = args.iter().map(|a| permute_args(a, salt)).collect();
            *salt = salt.wrapping_mul(6364136223846793005).wrapping_add(1);
            if new_args.len() == 2 && *salt % 2 == 0 {
                new_args.swap(0, 1);
            }
            Term::App(*f, new_args)
        }
    }
}

proptest! {
    #[test]
    fn equivalence_is_reflexive_and_closed_under_permutation(
        t in arb_term(3),
        levels in arb_levels(),
        salt in any::<u64>(),
    ) {
        let sig = sig();
        let prec = Precedence::from_levels(&sig, &levels);
        prop_assert!(equivalent(&prec, &t, &t));
        let mut salt = salt;
        let p = permute_args(&t, &mut salt);
        prop_assert!(equivalent(&prec, &t, &p));
        prop_assert!(equivalent(&prec, &p, &t)); // symmetry
    }

    #[test]
    fn equivalence_is_transitive_on_permuted_variants(
        t in arb_term(3),
        levels in arb_levels(),
        s1 in any::<u64>(),
        s2 in any::<u64>(),
    ) {
        let sig = sig();
        let prec = Precedence::from_levels(&sig, &levels);
        let (mut s1, mut s2) = (s1, s2);
        let a = permute_args(&t, &mut s1);
        let b = permute_args(&a, &mut s2);
        prop_assert!(equivalent(&prec, &t, &a));
        prop_assert!(equivalent(&prec, &a, &b));
        prop_assert!(equivalent(&prec, &t, &b));
    }

    #[test]
    fn canonical_forms_decide_equivalence(
        s in arb_term(3),
        t in arb_term(3),
        levels in arb_levels(),
    ) {
        let sig = sig();
        let prec = Precedence::from_levels(&sig, &levels);
        prop_assert_eq!(
            equivalent(&prec, &s, &t),
            canonicalize(&prec, &s) == canonicalize(&prec, &t)
        );
    }

    #[test]
    fn tier_equivalence_refines_equivalence(
        s in arb_term(3),
        t in arb_term(3),
        levels in arb_levels(),
        masks in arb_masks(),
        salt in any::<u64>(),
    ) {
        let sig = sig();
        let prec = Precedence::from_levels(&sig, &levels);
        let tiering = tiering_for(&sig, masks);
        // reflexivity
        prop_assert!(safe_equivalent(&prec, &tiering, &s, &s));
        // implication towards plain equivalence, on both random pairs and
        // permuted variants
        let mut salt = salt;
        let p = permute_args(&s, &mut salt);
        for (a, b) in [(&s, &t), (&s, &p)] {
            if safe_equivalent(&prec, &tiering, a, b) {
                prop_assert!(equivalent(&prec, a, b));
                prop_assert!(safe_equivalent(&prec, &tiering, b, a)); // symmetry
            }
        }
    }

    #[test]
    fn normal_subterms_are_shallow_equivalent_subterms(
        s in arb_term(3),
        t in arb_term(2),
        levels in arb_levels(),
        masks in arb_masks(),
    ) {
        let sig = sig();
        let prec = Precedence::from_levels(&sig, &levels);
        let tiering = tiering_for(&sig, masks);
        // check both a random candidate and every actual subterm
        let mut candidates: Vec<Term> = vec![t];
        candidates.extend(s.subterms().into_iter().cloned());
        for cand in &candidates {
            if normal_subterm_gt(&prec, &tiering, &s, cand) {
                prop_assert!(cand.depth() < s.depth() + 1);
                let witnessed = s
                    .proper_subterms()
                    .iter()
                    .any(|sub| equivalent(&prec, sub, cand));
                prop_assert!(witnessed, "no equivalent subterm found");
            }
        }
    }

    #[test]
    fn rank_and_recursion_depth_are_monotone_and_renaming_invariant(
        levels in arb_levels(),
        rec_bits in proptest::collection::vec(any::<bool>(), 5),
    ) {
        let sig = sig();
        let prec = Precedence::from_levels(&sig, &levels);
        let kinds: Vec<Kind> = rec_bits
            .iter()
            .map(|&b| if b { Kind::Recursive } else { Kind::Compositional })
            .collect();
        let tiering = Tiering::new(&sig, kinds.clone(), vec![0; 5]).unwrap();
        for f in sig.symbols() {
            for g in sig.symbols() {
                if prec.above(f, g) {
                    prop_assert!(prec.rank(f) > prec.rank(g));
                    prop_assert!(
                        recursion_depth(&prec, &tiering, f) >= recursion_depth(&prec, &tiering, g)
                    );
                }
            }
        }
        // renaming: a fresh signature with different names but identical
        // structure yields identical measures
        let mut sig2 = Signature::new();
        for (i, arity) in ARITIES.iter().enumerate() {
            sig2.add_symbol(&format!("sym_{i}"), *arity).unwrap();
        }
        let prec2 = Precedence::from_levels(&sig2, &levels);
        let tiering2 = Tiering::new(&sig2, kinds, vec![0; 5]).unwrap();
        for f in sig.symbols() {
            prop_assert_eq!(prec.rank(f), prec2.rank(f));
            prop_assert_eq!(
                recursion_depth(&prec, &tiering, f),
                recursion_depth(&prec2, &tiering2, f)
            );
        }
    }
}
