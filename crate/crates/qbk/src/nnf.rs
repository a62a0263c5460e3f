//! Negation normal form.
//!
//! A formula is in negation normal form when every strong negation `~`
//! stands directly on an atom or on `_|_`. Nothing else is normalised:
//! implications stay implications (classical negation `!f = f -> _|_` is an
//! implication and is left alone), and `~_|_` is a legal normal form.
//!
//! [`to_nnf`] pushes `~` inward with the De Morgan laws for `&`/`|` and the
//! quantifiers, the double-negation law, the implication law
//! `~(f -> g) = !!f & ~g`, and the modal duals `~[]f = <>~f`,
//! `~<>f = []~f`. Each law replaces a formula by a strongly equivalent one:
//! verified and falsified at the same worlds of every model, in every
//! environment. The rewrite is a single structural recursion with one
//! polarity flip, so it terminates and at most doubles the node count.
//!
//! The `!!` shield on the antecedent is what keeps the implication law
//! strong. Falsifying `~(f -> g)` is verifying `f -> g`, which holds
//! whenever `f` is unverified; falsifying `f & ~g` needs `f` falsified or
//! `g` verified, so the naive law `~(f -> g) = f & ~g` goes wrong when `f`
//! is a gap. `!!f` is verified exactly where `f` is and falsified exactly
//! where `f` is unverified, which repairs the falsification side without
//! disturbing verification.

use crate::syntax::Formula;

/// True when every `~` in the tree stands on an atom or on `_|_`.
pub fn is_nnf(f: &Formula) -> bool {
    match f {
        Formula::Atom(_, _) | Formula::Bottom => true,
        Formula::Neg(g) => matches!(**g, Formula::Atom(_, _) | Formula::Bottom),
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => is_nnf(l) && is_nnf(r),
        Formula::Box(g) | Formula::Diamond(g) => is_nnf(g),
        Formula::Forall(_, g) | Formula::Exists(_, g) => is_nnf(g),
    }
}

/// Rewrites a formula to negation normal form.
///
/// The result is strongly equivalent to the input, `is_nnf` on it holds, its
/// size is at most twice the input's, and the function is idempotent.
pub fn to_nnf(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_, _) | Formula::Bottom => f.clone(),
        Formula::And(l, r) => Formula::And(Box::new(to_nnf(l)), Box::new(to_nnf(r))),
        Formula::Or(l, r) => Formula::Or(Box::new(to_nnf(l)), Box::new(to_nnf(r))),
        Formula::Imp(l, r) => Formula::Imp(Box::new(to_nnf(l)), Box::new(to_nnf(r))),
        Formula::Box(g) => Formula::Box(Box::new(to_nnf(g))),
        Formula::Diamond(g) => Formula::Diamond(Box::new(to_nnf(g))),
        Formula::Forall(x, g) => Formula::Forall(x.clone(), Box::new(to_nnf(g))),
        Formula::Exists(x, g) => Formula::Exists(x.clone(), Box::new(to_nnf(g))),
        Formula::Neg(g) => to_nnf_negated(g),
    }
}

/// Normal form of `~g`, pushing the negation through one connective.
fn to_nnf_negated(g: &Formula) -> Formula {
    match g {
        // ~ stays on atoms and on _|_.
        Formula::Atom(_, _) | Formula::Bottom => Formula::Neg(Box::new(g.clone())),
        Formula::Neg(h) => to_nnf(h),
        Formula::And(l, r) => Formula::Or(
            Box::new(to_nnf_negated(l)),
            Box::new(to_nnf_negated(r)),
        ),
        Formula::Or(l, r) => Formula::And(
            Box::new(to_nnf_negated(l)),
            Box::new(to_nnf_negated(r)),
        ),
        // ~(f -> g) = !!f & ~g. The classical double negation on the
        // antecedent is required for falsification to agree (see module doc);
        // bare `f & ~g` would only preserve verification.
        Formula::Imp(l, r) => {
            let shielded = crate::syntax::build::not(crate::syntax::build::not(to_nnf(l)));
            Formula::And(Box::new(shielded), Box::new(to_nnf_negated(r)))
        }
        Formula::Box(h) => Formula::Diamond(Box::new(to_nnf_negated(h))),
        Formula::Diamond(h) => Formula::Box(Box::new(to_nnf_negated(h))),
        Formula::Forall(x, h) => Formula::Exists(x.clone(), Box::new(to_nnf_negated(h))),
        Formula::Exists(x, h) => Formula::Forall(x.clone(), Box::new(to_nnf_negated(h))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::build::*;

    fn p_x() -> crate::syntax::Formula {
        atom("P", vec![var("x")])
    }

    fn q_x() -> crate::syntax::Formula {
        atom("Q", vec![var("x")])
    }

    #[test]
    fn negated_conjunction_becomes_disjunction() {
        let f = neg(and(p_x(), q_x()));
        assert!(!is_nnf(&f));
        assert_eq!(to_nnf(&f), or(neg(p_x()), neg(q_x())));
    }

    #[test]
    fn negation_crosses_box_and_quantifier() {
        let f = neg(boxf(forall("x", p_x())));
        assert_eq!(to_nnf(&f), diamond(exists("x", neg(p_x()))));
    }

    #[test]
    fn negated_implication_shields_the_antecedent() {
        let f = neg(imp(p_x(), neg(q_x())));
        assert_eq!(to_nnf(&f), and(not(not(p_x())), q_x()));
    }

    #[test]
    fn double_negation_cancels() {
        let f = neg(neg(or(p_x(), bot())));
        assert_eq!(to_nnf(&f), or(p_x(), bot()));
    }

    #[test]
    fn negated_bottom_is_normal() {
        let f = neg(bot());
        assert!(is_nnf(&f));
        assert_eq!(to_nnf(&f), f);
    }

    #[test]
    fn classical_negation_is_untouched() {
        // !p is an implication; NNF does not decompose implications.
        let f = not(atom0("p"));
        assert!(is_nnf(&f));
        assert_eq!(to_nnf(&f), f);
    }

    #[test]
    fn negated_classical_negation_gains_a_double_negation() {
        let f = neg(imp(boxf(atom0("p")), bot()));
        // ~(([]p) -> _|_) = !![]p & ~_|_; the formula is ~![]p, and dropping
        // the !! would change where the result is falsified.
        assert_eq!(to_nnf(&f), and(not(not(boxf(atom0("p")))), neg(bot())));
    }

    #[test]
    fn negated_implication_agrees_in_both_polarities() {
        use crate::semantics::{enumerate_models, evaluate, Bounds, Env, ModelClass, Polarity};
        use crate::syntax::Signature;

        // ~(p -> p) is falsified wherever p -> p is verified: everywhere.
        // The normal form must agree even where p is a gap, which is exactly
        // where the unshielded rewrite p & ~p stops being falsified.
        let sig = Signature::new([("p".to_string(), 0)], []).unwrap();
        let f = neg(imp(atom0("p"), atom0("p")));
        let nf = to_nnf(&f);
        let naive = and(atom0("p"), neg(atom0("p")));
        let env = Env::new();
        let mut gap_worlds = 0;
        for m in enumerate_models(&sig, &Bounds::new(2, 1), ModelClass::QBK).unwrap() {
            for w in 0..m.world_count() {
                for pol in [Polarity::Plus, Polarity::Minus] {
                    assert_eq!(
                        evaluate(&m, w, &f, pol, &env),
                        evaluate(&m, w, &nf, pol, &env),
                        "world {w} of {m:?}"
                    );
                }
                if m.positive(w).get("p").is_none() && m.negative(w).get("p").is_none() {
                    gap_worlds += 1;
                    assert_eq!(evaluate(&m, w, &f, Polarity::Minus, &env), Ok(true));
                    assert_eq!(evaluate(&m, w, &naive, Polarity::Minus, &env), Ok(false));
                }
            }
        }
        assert!(gap_worlds > 0, "the sweep must include gap worlds");
    }

    #[test]
    fn already_normal_formula_is_fixed() {
        // (p -> ~p) -> ~p has ~ only on atoms.
        let phi = imp(imp(atom0("p"), neg(atom0("p"))), neg(atom0("p")));
        assert!(is_nnf(&phi));
        assert_eq!(to_nnf(&phi), phi);
    }

    #[test]
    fn result_is_normal_idempotent_and_small() {
        // A few irregular shapes; the structural invariants must hold on all.
        let shapes = [
            neg(and(or(p_x(), neg(q_x())), imp(p_x(), q_x()))),
            neg(neg(neg(boxf(p_x())))),
            neg(forall("x", neg(exists("y", atom("R", vec![var("x"), var("y")]))))),
            neg(diamond(imp(neg(p_x()), boxf(neg(q_x()))))),
            imp(neg(and(p_x(), p_x())), neg(or(q_x(), bot()))),
        ];
        for f in shapes {
            let g = to_nnf(&f);
            assert!(is_nnf(&g), "not normal: {g}");
            assert_eq!(to_nnf(&g), g, "not idempotent on {g}");
            assert!(g.size() <= 2 * f.size(), "blowup on {f}: {g}");
        }
    }
}
