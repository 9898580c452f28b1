//! Shared systems for unit tests: squaring of naturals, list reversal with an
//! accumulator, and helpers to build numerals.

use crate::order::{Certificate, Variant};
use crate::prec::{Kind, Precedence, Tiering};
use crate::term::{Signature, SymbolId, Term, VarId};
use crate::trs::{Rule, Trs};

pub struct SquareSystem {
    pub trs: Trs,
    pub z: SymbolId,
    pub s: SymbolId,
    pub plus: SymbolId,
    pub times: SymbolId,
    pub square: SymbolId,
    pub x: VarId,
    pub y: VarId,
    pub cert: Certificate,
}

impl SquareSystem {
    pub fn num(&self, n: usize) -> Term {
        let mut t = Term::constant(self.z);
        for _ in 0..n {
            t = Term::App(self.s, vec![t]);
        }
        t
    }
}

pub fn square() -> SquareSystem {
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
            rhs: Term::App(
                plus,
                vec![vy.clone(), Term::App(times, vec![vx.clone(), vy.clone()])],
            ),
        },
        Rule {
            lhs: Term::App(square, vec![vx.clone()]),
            rhs: Term::App(times, vec![vx.clone(), vx.clone()]),
        },
    ];
    let trs = Trs::new(sig, rules).unwrap();
    let sig = trs.signature();
    let prec = Precedence::new(
        sig,
        vec![vec![square], vec![times], vec![plus], vec![s, z]],
    )
    .unwrap();
    let mut kinds = vec![Kind::Constructor; sig.len()];
    kinds[plus.0 as usize] = Kind::Recursive;
    kinds[times.0 as usize] = Kind::Recursive;
    kinds[square.0 as usize] = Kind::Compositional;
    let mut masks = vec![0u64; sig.len()];
    masks[plus.0 as usize] = 0b01;
    masks[times.0 as usize] = 0b11;
    masks[square.0 as usize] = 0b1;
    let tiering = Tiering::new(sig, kinds, masks).unwrap();
    let cert = Certificate {
        precedence: prec,
        tiering,
        variant: Variant::Spop,
    };
    SquareSystem {
        trs,
        z,
        s,
        plus,
        times,
        square,
        x,
        y,
        cert,
    }
}

pub struct RevSystem {
    pub trs: Trs,
    pub cert_ps: Certificate,
}

pub fn rev() -> RevSystem {
    let mut sig = Signature::new();
    let nil = sig.add_symbol("nil", 0).unwrap();
    let cons = sig.add_symbol("cons", 2).unwrap();
    let rev = sig.add_symbol("rev", 1).unwrap();
    let rev_acc = sig.add_symbol("rev1", 2).unwrap();
    let x = sig.add_var("x").unwrap();
    let xs = sig.add_var("xs").unwrap();
    let ys = sig.add_var("ys").unwrap();
    let vx = Term::Var(x);
    let vxs = Term::Var(xs);
    let vys = Term::Var(ys);
    let rules = vec![
        Rule {
            lhs: Term::App(rev, vec![vxs.clone()]),
            rhs: Term::App(rev_acc, vec![vxs.clone(), Term::constant(nil)]),
        },
        Rule {
            lhs: Term::App(rev_acc, vec![Term::constant(nil), vys.clone()]),
            rhs: vys.clone(),
        },
        Rule {
            lhs: Term::App(rev_acc, vec![Term::App(cons, vec![vx.clone(), vxs.clone()]), vys.clone()]),
            rhs: Term::App(rev_acc, vec![vxs.clone(), Term::App(cons, vec![vx.clone(), vys.clone()])]),
        },
    ];
    let trs = Trs::new(sig, rules).unwrap();
    let sig = trs.signature();
    let prec = Precedence::new(sig, vec![vec![rev], vec![rev_acc], vec![cons, nil]]).unwrap();
    let mut kinds = vec![Kind::Constructor; sig.len()];
    kinds[rev.0 as usize] = Kind::Compositional;
    kinds[rev_acc.0 as usize] = Kind::Recursive;
    let mut masks = vec![0u64; sig.len()];
    masks[rev.0 as usize] = 0b1;
    masks[rev_acc.0 as usize] = 0b01;
    let tiering = Tiering::new(sig, kinds, masks).unwrap();
    let cert_ps = Certificate {
        precedence: prec,
        tiering,
        variant: Variant::SpopPs,
    };
    RevSystem { trs, cert_ps }
}
