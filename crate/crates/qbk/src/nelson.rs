//! Constructive strong-negation logic over the same Kripke structures.
//!
//! The modality-free fragment of the language, read constructively, has its
//! own forcing relation: implication and the universal quantifier look ahead
//! along the access relation, everything else is local, and strong negation
//! flips between verification and falsification. Models for it are the
//! reflexive-transitive models whose extensions grow along access
//! ([`ModelClass::QN4`]); adding atom consistency gives the three-valued
//! subclass ([`ModelClass::QN3`]).
//!
//! The forcing clauses implemented by [`nelson_evaluate`] are pinned down by
//! three requirements rather than copied from a table: atomic forcing must be
//! hereditary (so the look-ahead clauses must quantify over successors and
//! their domains), the boxed translation below must match them clause by
//! clause on derived models, and the one-point gap fixture must refute
//! `(p -> ~p) -> ~p`. The property tests in this module check each of these.
//!
//! Three translations map the constructive language into the modal one:
//!
//! * [`tau`] works on negation normal forms: atoms are boxed, negated atoms
//!   become `~<>`, implication becomes a boxed implication, the universal
//!   quantifier is boxed, everything else is homomorphic.
//! * [`tau_tilde`] is the same embedding written as a direct recursion that
//!   pushes strong negation itself; it agrees with [`tau`] composed with
//!   [`NelsonFormula::to_nnf`] on every input.
//! * [`tau_prime`] is the historical variant that renders a negated atom with
//!   classical negation (`[](P -> _|_)`). It is unfaithful: the gap fixture's
//!   formula is not constructively verified, yet its [`tau_prime`] image is
//!   verified everywhere on the constructive models, the reflexive-transitive
//!   models whose extensions grow along access. (Over reflexive-transitive
//!   models with arbitrary extensions it is not: two worlds with the atom
//!   verified only at the root already refute it.) It is provided as a
//!   negative fixture only.
//!
//! [`derived_model`] connects the two semantics: from any reflexive-transitive
//! modal model it builds the constructive model whose atoms hold where the
//! boxed atom holds and fail where the diamond atom is falsified. Constructive
//! forcing on the derived model agrees with modal evaluation of the
//! translation on the source, constructive models are exactly the fixed
//! points, and consistent sources yield three-valued results.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::nnf::is_nnf;
use crate::semantics::{
    all_tuples, evaluate, validate_model, ClassViolation, Env, EvalError, Extension,
    ExtensionTable, KripkeModel, ModelClass, Polarity,
};
use crate::syntax::{build, Formula, Term};

/// A formula of the constructive language: no `[]`, no `<>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NelsonFormula(Formula);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NelsonError {
    #[error("not a strong-negation formula: `{0}` is modal")]
    ContainsModality(String),
    #[error("not in negation normal form: strong negation applies to `{0}`")]
    NotNnf(String),
}

impl NelsonFormula {
    /// Wraps `f`, rejecting formulas that contain a modal operator.
    pub fn new(f: Formula) -> Result<Self, NelsonError> {
        if let Some(bad) = first_modal_subformula(&f) {
            return Err(NelsonError::ContainsModality(bad.to_string()));
        }
        Ok(NelsonFormula(f))
    }

    pub fn formula(&self) -> &Formula {
        &self.0
    }

    pub fn into_formula(self) -> Formula {
        self.0
    }

    /// Negation normal form of the wrapped formula.
    ///
    /// Strong negation is pushed inward with the same laws as the modal
    /// rewriter ([`to_nnf`](crate::nnf::to_nnf)) except at implications,
    /// where the law is the plain `~(f -> g) = f & ~g`. The modal rewriter
    /// shields the antecedent as `!!f` to keep falsification aligned, but
    /// read constructively `!!f` looks ahead along the access relation and
    /// can be verified while `f` is still a gap, so the shield is wrong
    /// here. The unshielded law preserves verification at every world and
    /// nothing more; the boxed embedding only consumes verification, so
    /// that is exactly as strong as it needs to be.
    pub fn to_nnf(&self) -> NelsonFormula {
        NelsonFormula(constructive_nnf(&self.0))
    }
}

impl fmt::Display for NelsonFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn first_modal_subformula(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Box(_) | Formula::Diamond(_) => Some(f),
        Formula::Atom(_, _) | Formula::Bottom => None,
        Formula::Neg(g) | Formula::Forall(_, g) | Formula::Exists(_, g) => {
            first_modal_subformula(g)
        }
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
            first_modal_subformula(l).or_else(|| first_modal_subformula(r))
        }
    }
}

fn constructive_nnf(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_, _) | Formula::Bottom => f.clone(),
        Formula::And(l, r) => build::and(constructive_nnf(l), constructive_nnf(r)),
        Formula::Or(l, r) => build::or(constructive_nnf(l), constructive_nnf(r)),
        Formula::Imp(l, r) => build::imp(constructive_nnf(l), constructive_nnf(r)),
        Formula::Forall(x, g) => build::forall(x, constructive_nnf(g)),
        Formula::Exists(x, g) => build::exists(x, constructive_nnf(g)),
        Formula::Neg(g) => constructive_nnf_negated(g),
        Formula::Box(_) | Formula::Diamond(_) => {
            unreachable!("constructive formulas are modality-free")
        }
    }
}

/// Normal form of `~g` in the constructive language; see
/// [`NelsonFormula::to_nnf`] for why the implication law differs from the
/// modal rewriter's.
fn constructive_nnf_negated(g: &Formula) -> Formula {
    match g {
        Formula::Atom(_, _) | Formula::Bottom => build::neg(g.clone()),
        Formula::Neg(h) => constructive_nnf(h),
        Formula::And(l, r) => {
            build::or(constructive_nnf_negated(l), constructive_nnf_negated(r))
        }
        Formula::Or(l, r) => {
            build::and(constructive_nnf_negated(l), constructive_nnf_negated(r))
        }
        Formula::Imp(l, r) => build::and(constructive_nnf(l), constructive_nnf_negated(r)),
        Formula::Forall(x, h) => build::exists(x, constructive_nnf_negated(h)),
        Formula::Exists(x, h) => build::forall(x, constructive_nnf_negated(h)),
        Formula::Box(_) | Formula::Diamond(_) => {
            unreachable!("constructive formulas are modality-free")
        }
    }
}

/// The boxed embedding into the modal language, defined on negation normal
/// forms: `P ↦ []P`, `~P ↦ ~<>P`, `∨ ∧ ∃` homomorphic, `Φ -> Ψ ↦
/// [](τΦ -> τΨ)`, `_|_ ↦ _|_`, `~_|_ ↦ ~<>_|_`, `forall x. Φ ↦
/// [](forall x. τΦ)`.
pub fn tau(f: &NelsonFormula) -> Result<Formula, NelsonError> {
    if !is_nnf(f.formula()) {
        let offender = first_non_nnf_negation(f.formula())
            .expect("a formula outside negation normal form has a compound negation");
        return Err(NelsonError::NotNnf(offender.to_string()));
    }
    Ok(tau_nnf(f.formula()))
}

fn first_non_nnf_negation(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Neg(g) => match **g {
            Formula::Atom(_, _) | Formula::Bottom => None,
            _ => Some(g),
        },
        Formula::Atom(_, _) | Formula::Bottom => None,
        Formula::Box(g) | Formula::Diamond(g) | Formula::Forall(_, g) | Formula::Exists(_, g) => {
            first_non_nnf_negation(g)
        }
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
            first_non_nnf_negation(l).or_else(|| first_non_nnf_negation(r))
        }
    }
}

fn tau_nnf(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_, _) => build::boxf(f.clone()),
        Formula::Neg(g) => build::neg(build::diamond((**g).clone())),
        Formula::Bottom => build::bot(),
        Formula::And(l, r) => build::and(tau_nnf(l), tau_nnf(r)),
        Formula::Or(l, r) => build::or(tau_nnf(l), tau_nnf(r)),
        Formula::Imp(l, r) => build::boxf(build::imp(tau_nnf(l), tau_nnf(r))),
        Formula::Exists(x, g) => build::exists(x, tau_nnf(g)),
        Formula::Forall(x, g) => build::boxf(build::forall(x, tau_nnf(g))),
        Formula::Box(_) | Formula::Diamond(_) => {
            unreachable!("constructive formulas are modality-free")
        }
    }
}

/// How a strongly negated atom (or `_|_`) is rendered in the modal language.
#[derive(Debug, Clone, Copy)]
enum NegatedAtomClause {
    /// `~P ↦ ~<>P`: keeps falsification information. Faithful.
    StrongDiamond,
    /// `~P ↦ [](P -> _|_)`: collapses falsification into classical absence.
    /// Unfaithful; kept to reproduce its failure.
    ClassicalBox,
}

/// The boxed embedding as a direct recursion over arbitrary constructive
/// formulas: strong negation is pushed inward by the translation itself, so
/// no prior normalization is needed. Agrees with [`tau`] after
/// [`NelsonFormula::to_nnf`] on every input.
pub fn tau_tilde(f: &NelsonFormula) -> Formula {
    translate(f.formula(), NegatedAtomClause::StrongDiamond)
}

/// The classical-negation variant of [`tau_tilde`]: a negated atom becomes
/// `[](P -> _|_)` instead of `~<>P`. This translation is not faithful; see
/// [`gap_point_fixture`] for the refutation it exists to reproduce.
pub fn tau_prime(f: &NelsonFormula) -> Formula {
    translate(f.formula(), NegatedAtomClause::ClassicalBox)
}

fn translate(f: &Formula, clause: NegatedAtomClause) -> Formula {
    match f {
        Formula::Atom(_, _) => build::boxf(f.clone()),
        Formula::Bottom => build::bot(),
        Formula::Neg(g) => translate_negated(g, clause),
        Formula::And(l, r) => build::and(translate(l, clause), translate(r, clause)),
        Formula::Or(l, r) => build::or(translate(l, clause), translate(r, clause)),
        Formula::Imp(l, r) => build::boxf(build::imp(translate(l, clause), translate(r, clause))),
        Formula::Exists(x, g) => build::exists(x, translate(g, clause)),
        Formula::Forall(x, g) => build::boxf(build::forall(x, translate(g, clause))),
        Formula::Box(_) | Formula::Diamond(_) => {
            unreachable!("constructive formulas are modality-free")
        }
    }
}

fn translate_negated(f: &Formula, clause: NegatedAtomClause) -> Formula {
    match f {
        Formula::Atom(_, _) | Formula::Bottom => match clause {
            NegatedAtomClause::StrongDiamond => build::neg(build::diamond(f.clone())),
            NegatedAtomClause::ClassicalBox => build::boxf(build::not(f.clone())),
        },
        Formula::Neg(g) => translate(g, clause),
        Formula::And(l, r) => build::or(translate_negated(l, clause), translate_negated(r, clause)),
        Formula::Or(l, r) => {
            build::and(translate_negated(l, clause), translate_negated(r, clause))
        }
        Formula::Imp(l, r) => build::and(translate(l, clause), translate_negated(r, clause)),
        Formula::Exists(x, g) => build::boxf(build::forall(x, translate_negated(g, clause))),
        Formula::Forall(x, g) => build::exists(x, translate_negated(g, clause)),
        Formula::Box(_) | Formula::Diamond(_) => {
            unreachable!("constructive formulas are modality-free")
        }
    }
}

/// A Kripke model validated against [`ModelClass::QN4`]: reflexive,
/// transitive, and with both extension tables growing along access. The
/// constructive forcing relation is only meaningful on such models; the
/// wrapper makes the validation explicit in the types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NelsonModel {
    model: KripkeModel,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NelsonModelError {
    #[error("not a constructive model: {0}")]
    NotConstructive(ClassViolation),
    #[error("not a reflexive-transitive modal model: {0}")]
    NotPreorder(ClassViolation),
}

impl NelsonModel {
    pub fn new(model: KripkeModel) -> Result<Self, NelsonModelError> {
        if let Some(v) = validate_model(&model, ModelClass::QN4).into_iter().next() {
            return Err(NelsonModelError::NotConstructive(v));
        }
        Ok(NelsonModel { model })
    }

    pub fn model(&self) -> &KripkeModel {
        &self.model
    }

    pub fn into_model(self) -> KripkeModel {
        self.model
    }

    /// Whether the model is three-valued: no atom is both verified and
    /// falsified at any world ([`ModelClass::QN3`]).
    pub fn is_consistent(&self) -> bool {
        validate_model(&self.model, ModelClass::QN3).is_empty()
    }
}

/// Evaluates `f` at a world of a constructive model under the given polarity
/// and environment.
///
/// Verification clauses: atoms and `_|_` are local lookups, `∧`/`∨` are
/// classical, `Φ -> Ψ` holds when every successor verifying `Φ` verifies `Ψ`,
/// `forall` ranges over every successor and that successor's domain,
/// `exists` ranges over the current domain, and `~` flips the polarity.
/// Falsification clauses: atoms read the negative table, `∧`/`∨` dualize,
/// `Φ -> Ψ` is falsified when `Φ` is verified and `Ψ` is falsified here,
/// `forall` is falsified by a current-domain witness, `exists` only when
/// every successor falsifies every instance over its domain, and `_|_` is
/// always falsified.
///
/// Forcing so defined is hereditary: anything verified or falsified at a
/// world stays so at every successor.
///
/// The environment must bind every free variable of `f` to an element of the
/// world's domain; since domains expand along access, every binding stays
/// valid at every world the recursion reaches.
pub fn nelson_evaluate(
    n: &NelsonModel,
    world: usize,
    f: &NelsonFormula,
    pol: Polarity,
    env: &Env,
) -> Result<bool, EvalError> {
    let m = n.model();
    assert!(world < m.world_count(), "world index out of range");
    let free: Vec<String> = f.formula().free_vars().into_iter().collect();
    let mut scope: Vec<(&str, usize)> = Vec::with_capacity(free.len());
    for v in &free {
        let e = env
            .lookup(v)
            .ok_or_else(|| EvalError::UnboundVariable(v.clone()))?;
        if !m.domain(world).contains(&e) {
            return Err(EvalError::OutsideDomain {
                var: v.clone(),
                element: m
                    .individuals()
                    .get(e)
                    .cloned()
                    .unwrap_or_else(|| format!("#{e}")),
                world: m.worlds()[world].clone(),
            });
        }
        scope.push((v.as_str(), e));
    }
    Ok(force(m, world, f.formula(), pol, &mut scope, &mut Vec::new()))
}

fn force<'f>(
    m: &KripkeModel,
    w: usize,
    f: &'f Formula,
    pol: Polarity,
    scope: &mut Vec<(&'f str, usize)>,
    scratch: &mut Vec<usize>,
) -> bool {
    match (f, pol) {
        (Formula::Atom(pred, args), _) => {
            scratch.clear();
            for arg in args {
                let e = match arg {
                    Term::Var(v) => {
                        scope
                            .iter()
                            .rev()
                            .find(|(name, _)| *name == v.as_str())
                            .expect("nelson_evaluate checked free variables")
                            .1
                    }
                    Term::Const(c) => *m.const_interp(w).get(c).unwrap_or_else(|| {
                        panic!("constant `{c}` has no interpretation: formula not well formed for this model")
                    }),
                };
                scratch.push(e);
            }
            let table = match pol {
                Polarity::Plus => m.positive(w),
                Polarity::Minus => m.negative(w),
            };
            table.get(pred).is_some_and(|ext| ext.contains(&*scratch))
        }
        (Formula::Bottom, Polarity::Plus) => false,
        (Formula::Bottom, Polarity::Minus) => true,
        (Formula::Neg(g), _) => force(m, w, g, pol.flip(), scope, scratch),
        (Formula::And(l, r), Polarity::Plus) | (Formula::Or(l, r), Polarity::Minus) => {
            force(m, w, l, pol, scope, scratch) && force(m, w, r, pol, scope, scratch)
        }
        (Formula::And(l, r), Polarity::Minus) | (Formula::Or(l, r), Polarity::Plus) => {
            force(m, w, l, pol, scope, scratch) || force(m, w, r, pol, scope, scratch)
        }
        (Formula::Imp(l, r), Polarity::Plus) => m.successors(w).iter().all(|&v| {
            !force(m, v, l, Polarity::Plus, scope, scratch)
                || force(m, v, r, Polarity::Plus, scope, scratch)
        }),
        (Formula::Imp(l, r), Polarity::Minus) => {
            force(m, w, l, Polarity::Plus, scope, scratch)
                && force(m, w, r, Polarity::Minus, scope, scratch)
        }
        (Formula::Forall(x, g), Polarity::Plus) => m.successors(w).iter().all(|&v| {
            m.domain(v).iter().all(|&a| {
                scope.push((x.as_str(), a));
                let res = force(m, v, g, Polarity::Plus, scope, scratch);
                scope.pop();
                res
            })
        }),
        (Formula::Forall(x, g), Polarity::Minus) => m.domain(w).iter().any(|&a| {
            scope.push((x.as_str(), a));
            let res = force(m, w, g, Polarity::Minus, scope, scratch);
            scope.pop();
            res
        }),
        (Formula::Exists(x, g), Polarity::Plus) => m.domain(w).iter().any(|&a| {
            scope.push((x.as_str(), a));
            let res = force(m, w, g, Polarity::Plus, scope, scratch);
            scope.pop();
            res
        }),
        (Formula::Exists(x, g), Polarity::Minus) => m.successors(w).iter().all(|&v| {
            m.domain(v).iter().all(|&a| {
                scope.push((x.as_str(), a));
                let res = force(m, v, g, Polarity::Minus, scope, scratch);
                scope.pop();
                res
            })
        }),
        (Formula::Box(_) | Formula::Diamond(_), _) => {
            unreachable!("constructive formulas are modality-free")
        }
    }
}

/// Builds the constructive model induced by a reflexive-transitive modal
/// model: same frame and domains, an atom is verified where its boxed form
/// was verified and falsified where its diamond form was falsified.
///
/// Extensions are computed by evaluating the ground modal formulas `[]P` and
/// `<>P` tuple by tuple. The result always validates as a constructive
/// model, the construction is idempotent, constructive inputs are returned
/// unchanged, and atom-consistent inputs yield three-valued outputs.
pub fn derived_model(m: &KripkeModel) -> Result<NelsonModel, NelsonModelError> {
    if let Some(v) = validate_model(m, ModelClass::QBS4).into_iter().next() {
        return Err(NelsonModelError::NotPreorder(v));
    }
    let mut positive = Vec::with_capacity(m.world_count());
    let mut negative = Vec::with_capacity(m.world_count());
    for w in 0..m.world_count() {
        let mut pos = ExtensionTable::new();
        let mut neg = ExtensionTable::new();
        for (pred, arity) in m.signature().predicates() {
            let vars: Vec<String> = (0..arity).map(|i| format!("x{i}")).collect();
            let args: Vec<Term> = vars.iter().map(|v| build::var(v)).collect();
            let boxed = build::boxf(build::atom(pred, args.clone()));
            let dotted = build::diamond(build::atom(pred, args));
            let mut pos_ext = Extension::new();
            let mut neg_ext = Extension::new();
            for tuple in all_tuples(m.domain(w), arity) {
                let mut env = Env::new();
                for (x, &e) in vars.iter().zip(tuple.iter()) {
                    env = env.bind(x.as_str(), e);
                }
                let verified = evaluate(m, w, &boxed, Polarity::Plus, &env)
                    .expect("tuple elements lie in the domain of this world");
                let falsified = evaluate(m, w, &dotted, Polarity::Minus, &env)
                    .expect("tuple elements lie in the domain of this world");
                if verified {
                    pos_ext.insert(tuple.clone());
                }
                if falsified {
                    neg_ext.insert(tuple);
                }
            }
            if !pos_ext.is_empty() {
                pos.insert(pred.to_string(), pos_ext);
            }
            if !neg_ext.is_empty() {
                neg.insert(pred.to_string(), neg_ext);
            }
        }
        positive.push(pos);
        negative.push(neg);
    }
    let model = m
        .with_extensions(positive, negative)
        .expect("frame and domains are unchanged and extensions stay inside them");
    debug_assert!(
        validate_model(&model, ModelClass::QN4).is_empty(),
        "boxed verification and diamond falsification are hereditary on a preorder"
    );
    Ok(NelsonModel { model })
}

/// The smallest model with a truth-value gap, together with the formula it
/// refutes: one reflexive world `x`, one individual, and a nullary atom `p`
/// that is neither verified nor falsified.
pub struct GapPointFixture {
    pub model: NelsonModel,
    /// `(p -> ~p) -> ~p`.
    pub formula: NelsonFormula,
    /// What the fixture demonstrates, in evaluation order.
    pub expectations: [&'static str; 3],
}

/// Returns the gap fixture. The antecedent `p -> ~p` is verified at `x`
/// vacuously, `~p` is not, so the whole formula is not verified; the same
/// holds for its boxed translation on the (identical) derived model. The
/// classical-negation translation of the formula, however, is verified here
/// and on every constructive model (reflexive-transitive with extensions
/// growing along access), which is the standard refutation of that
/// translation's faithfulness. The growth condition is load-bearing: with
/// arbitrary extensions a two-world reflexive-transitive model refutes the
/// translated formula.
pub fn gap_point_fixture() -> GapPointFixture {
    let sig = crate::syntax::Signature::new([("p".to_string(), 0)], [])
        .expect("one nullary predicate is a valid signature");
    let model = KripkeModel::new(
        sig,
        vec!["x".to_string()],
        BTreeSet::from([(0, 0)]),
        vec!["a".to_string()],
        vec![BTreeSet::from([0])],
        vec![Default::default()],
        vec![ExtensionTable::new()],
        vec![ExtensionTable::new()],
    )
    .expect("the one-point model is well formed");
    let model = NelsonModel::new(model).expect("empty extensions are hereditary");
    let p = || build::atom0("p");
    let formula = NelsonFormula::new(build::imp(
        build::imp(p(), build::neg(p())),
        build::neg(p()),
    ))
    .expect("the fixture formula is modality-free");
    GapPointFixture {
        model,
        formula,
        expectations: [
            "the formula is not verified at world x under the constructive forcing relation",
            "its boxed translation is not verified at world x under the modal semantics",
            "its classical-negation translation is verified at world x, and indeed on every \
             reflexive-transitive model whose extensions grow along access, so that \
             translation does not preserve non-theorems",
        ],
    }
}
