//! Abstract syntax for a first-order modal language with two negations.
//!
//! The language has a strong (constructive) negation `~` as a primitive
//! connective alongside `&`, `|`, `->`, the falsity constant `_|_`, the
//! modalities `[]` and `<>`, and the quantifiers. Classical negation is not a
//! connective: `!f` abbreviates `f -> _|_`, biconditionals abbreviate
//! conjunctions of implications, and the strong biconditional `<=>` adds the
//! negated halves. The abbreviations are expanded by the constructors in
//! [`build`] and by the parser; no desugared node ever appears in a
//! [`Formula`] tree.
//!
//! Terms are variables or constants only; there are no function symbols.
//! Whether an identifier names a variable or a constant is decided by the
//! [`Signature`], not by the term itself, so [`Formula::well_formed`] checks a
//! tree against the signature it is meant to live in.
//!
//! Substitution here is literal and capture-checked rather than
//! capture-avoiding: [`substitute_var`] refuses (with
//! [`SubstError::Capture`]) to substitute a term that is not free for the
//! variable instead of renaming bound variables. Proof checking needs the
//! formulas to stay exactly as written, so nothing in this module ever
//! renames a binder.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A term: a variable or a constant symbol. No function symbols exist.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn cons(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    /// The variable name if this term is a variable.
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// A formula of the language. Only primitive connectives appear as nodes.
///
/// `Neg` is the strong negation `~`. Classical negation, `<->` and `<=>` are
/// abbreviations and are expanded before a tree is built; see [`build::not`],
/// [`build::iff`] and [`build::siff`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    /// Predicate applied to terms. Nullary predicates carry an empty vector.
    Atom(String, Vec<Term>),
    /// The falsity constant `_|_`.
    Bottom,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    /// Strong negation `~`.
    Neg(Box<Formula>),
    /// Necessity `[]`.
    Box(Box<Formula>),
    /// Possibility `<>`.
    Diamond(Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

/// Shorthand constructors. Tests and fixture builders use these heavily;
/// they keep deeply nested trees readable.
pub mod build {
    use super::{Formula, Term};

    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn cons(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    pub fn atom(pred: &str, args: Vec<Term>) -> Formula {
        Formula::Atom(pred.to_string(), args)
    }

    /// Nullary atom.
    pub fn atom0(pred: &str) -> Formula {
        Formula::Atom(pred.to_string(), Vec::new())
    }

    pub fn bot() -> Formula {
        Formula::Bottom
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn imp(l: Formula, r: Formula) -> Formula {
        Formula::Imp(Box::new(l), Box::new(r))
    }

    /// Strong negation `~f`.
    pub fn neg(f: Formula) -> Formula {
        Formula::Neg(Box::new(f))
    }

    /// Classical negation: `!f` abbreviates `f -> _|_`.
    pub fn not(f: Formula) -> Formula {
        imp(f, bot())
    }

    pub fn boxf(f: Formula) -> Formula {
        Formula::Box(Box::new(f))
    }

    pub fn diamond(f: Formula) -> Formula {
        Formula::Diamond(Box::new(f))
    }

    pub fn forall(x: &str, f: Formula) -> Formula {
        Formula::Forall(x.to_string(), Box::new(f))
    }

    pub fn exists(x: &str, f: Formula) -> Formula {
        Formula::Exists(x.to_string(), Box::new(f))
    }

    /// `l <-> r` abbreviates `(l -> r) & (r -> l)`.
    pub fn iff(l: Formula, r: Formula) -> Formula {
        and(imp(l.clone(), r.clone()), imp(r, l))
    }

    /// Strong biconditional: `l <=> r` abbreviates `(l <-> r) & (~l <-> ~r)`.
    pub fn siff(l: Formula, r: Formula) -> Formula {
        and(iff(l.clone(), r.clone()), iff(neg(l), neg(r)))
    }
}

/// Predicate and constant symbols a formula may use.
///
/// Predicate names map to their arities (arity 0 is allowed and plays the
/// role of a propositional letter). Predicate and constant names must be
/// pairwise distinct; [`Signature::new`] enforces this.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    predicates: BTreeMap<String, usize>,
    constants: BTreeSet<String>,
}

/// A signature rejected by [`Signature::new`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("symbol `{0}` is declared both as a predicate and as a constant")]
    DuplicateSymbol(String),
    #[error("empty symbol name")]
    EmptyName,
}

impl Signature {
    pub fn new(
        predicates: impl IntoIterator<Item = (String, usize)>,
        constants: impl IntoIterator<Item = String>,
    ) -> Result<Self, SignatureError> {
        let predicates: BTreeMap<String, usize> = predicates.into_iter().collect();
        let constants: BTreeSet<String> = constants.into_iter().collect();
        if predicates.keys().any(String::is_empty) || constants.iter().any(String::is_empty) {
            return Err(SignatureError::EmptyName);
        }
        if let Some(clash) = predicates.keys().find(|p| constants.contains(*p)) {
            return Err(SignatureError::DuplicateSymbol(clash.clone()));
        }
        Ok(Signature {
            predicates,
            constants,
        })
    }

    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.predicates.get(pred).copied()
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.contains(name)
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&str, usize)> {
        self.predicates.iter().map(|(n, a)| (n.as_str(), *a))
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.constants.iter().map(String::as_str)
    }
}

/// Violation found by [`Formula::well_formed`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellFormedError {
    #[error("predicate `{0}` is not declared in the signature")]
    UnknownPredicate(String),
    #[error("predicate `{pred}` expects {expected} argument(s), found {found}")]
    ArityMismatch {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("constant `{0}` is not declared in the signature")]
    UnknownConstant(String),
}

/// Substitution error: the substituted term would be captured by a binder.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("term `{term}` is not free for `{var}`: a free occurrence of `{var}` lies under a binder for `{term}`")]
    Capture { var: String, term: String },
}

/// Error from [`replace_subformula`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplaceError {
    #[error("the pattern does not occur as a subformula")]
    NotASubformula,
    #[error("occurrence index {index} is out of range: the pattern occurs {count} time(s)")]
    PositionOutOfRange { index: usize, count: usize },
}

/// Which occurrences [`replace_subformula`] rewrites.
///
/// Occurrences are numbered from 0 in depth-first pre-order (a node is
/// visited before its subtrees, left subtree before right).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Occurrences<'a> {
    All,
    At(&'a [usize]),
}

impl Formula {
    /// Checks every atom against the signature: predicates declared with the
    /// right arity, constants declared. Variables need no declaration.
    pub fn well_formed(&self, sig: &Signature) -> Result<(), WellFormedError> {
        match self {
            Formula::Atom(pred, args) => {
                let arity = sig
                    .arity(pred)
                    .ok_or_else(|| WellFormedError::UnknownPredicate(pred.clone()))?;
                if args.len() != arity {
                    return Err(WellFormedError::ArityMismatch {
                        pred: pred.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                for arg in args {
                    if let Term::Const(c) = arg {
                        if !sig.is_constant(c) {
                            return Err(WellFormedError::UnknownConstant(c.clone()));
                        }
                    }
                }
                Ok(())
            }
            Formula::Bottom => Ok(()),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.well_formed(sig)?;
                r.well_formed(sig)
            }
            Formula::Neg(f) | Formula::Box(f) | Formula::Diamond(f) => f.well_formed(sig),
            Formula::Forall(_, f) | Formula::Exists(_, f) => f.well_formed(sig),
        }
    }

    /// Free variables, sorted by name.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut acc);
        acc
    }

    fn collect_free(&self, bound: &mut Vec<String>, acc: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(_, args) => {
                for arg in args {
                    if let Term::Var(v) = arg {
                        if !bound.iter().any(|b| b == v) {
                            acc.insert(v.clone());
                        }
                    }
                }
            }
            Formula::Bottom => {}
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.collect_free(bound, acc);
                r.collect_free(bound, acc);
            }
            Formula::Neg(f) | Formula::Box(f) | Formula::Diamond(f) => f.collect_free(bound, acc),
            Formula::Forall(x, f) | Formula::Exists(x, f) => {
                bound.push(x.clone());
                f.collect_free(bound, acc);
                bound.pop();
            }
        }
    }

    /// True when `x` has at least one free occurrence.
    pub fn has_free(&self, x: &str) -> bool {
        match self {
            Formula::Atom(_, args) => args.iter().any(|t| t.as_var() == Some(x)),
            Formula::Bottom => false,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.has_free(x) || r.has_free(x)
            }
            Formula::Neg(f) | Formula::Box(f) | Formula::Diamond(f) => f.has_free(x),
            Formula::Forall(y, f) | Formula::Exists(y, f) => y != x && f.has_free(x),
        }
    }

    /// A sentence has no free variables.
    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// All variable names occurring anywhere, free or bound (binders count).
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        self.collect_all_vars(&mut acc);
        acc
    }

    fn collect_all_vars(&self, acc: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(_, args) => {
                for arg in args {
                    if let Term::Var(v) = arg {
                        acc.insert(v.clone());
                    }
                }
            }
            Formula::Bottom => {}
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.collect_all_vars(acc);
                r.collect_all_vars(acc);
            }
            Formula::Neg(f) | Formula::Box(f) | Formula::Diamond(f) => f.collect_all_vars(acc),
            Formula::Forall(x, f) | Formula::Exists(x, f) => {
                acc.insert(x.clone());
                f.collect_all_vars(acc);
            }
        }
    }

    /// Number of nodes in the tree. Terms do not count.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_, _) | Formula::Bottom => 1,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => 1 + l.size() + r.size(),
            Formula::Neg(f) | Formula::Box(f) | Formula::Diamond(f) => 1 + f.size(),
            Formula::Forall(_, f) | Formula::Exists(_, f) => 1 + f.size(),
        }
    }

    /// Height of the tree: leaves have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_, _) | Formula::Bottom => 1,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                1 + l.depth().max(r.depth())
            }
            Formula::Neg(f) | Formula::Box(f) | Formula::Diamond(f) => 1 + f.depth(),
            Formula::Forall(_, f) | Formula::Exists(_, f) => 1 + f.depth(),
        }
    }

    /// True when no `[]` or `<>` occurs in the tree.
    pub fn is_modality_free(&self) -> bool {
        match self {
            Formula::Atom(_, _) | Formula::Bottom => true,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.is_modality_free() && r.is_modality_free()
            }
            Formula::Neg(f) => f.is_modality_free(),
            Formula::Box(_) | Formula::Diamond(_) => false,
            Formula::Forall(_, f) | Formula::Exists(_, f) => f.is_modality_free(),
        }
    }
}

/// True when substituting `t` for free occurrences of `x` in `f` captures no
/// variable: no free occurrence of `x` lies in the scope of a binder for the
/// variable `t` (when `t` is a variable). Constants are free for anything.
pub fn is_free_for(t: &Term, x: &str, f: &Formula) -> bool {
    let tv = match t {
        Term::Const(_) => return true,
        Term::Var(v) => v.as_str(),
    };
    // Tracks whether we are under a binder for tv; x free below such a
    // binder means capture.
    fn walk(f: &Formula, x: &str, tv: &str, under_tv: bool) -> bool {
        match f {
            Formula::Atom(_, args) => {
                !(under_tv && args.iter().any(|a| a.as_var() == Some(x)))
            }
            Formula::Bottom => true,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                walk(l, x, tv, under_tv) && walk(r, x, tv, under_tv)
            }
            Formula::Neg(g) | Formula::Box(g) | Formula::Diamond(g) => walk(g, x, tv, under_tv),
            Formula::Forall(y, g) | Formula::Exists(y, g) => {
                if y == x {
                    // x is rebound: no free occurrence of x below.
                    true
                } else {
                    walk(g, x, tv, under_tv || y == tv)
                }
            }
        }
    }
    walk(f, x, tv, false)
}

/// Substitutes `t` for every free occurrence of `x`, refusing on capture.
pub fn substitute_var(f: &Formula, x: &str, t: &Term) -> Result<Formula, SubstError> {
    if !is_free_for(t, x, f) {
        return Err(SubstError::Capture {
            var: x.to_string(),
            term: t.to_string(),
        });
    }
    Ok(substitute_unchecked(f, x, t))
}

fn substitute_unchecked(f: &Formula, x: &str, t: &Term) -> Formula {
    match f {
        Formula::Atom(p, args) => Formula::Atom(
            p.clone(),
            args.iter()
                .map(|a| if a.as_var() == Some(x) { t.clone() } else { a.clone() })
                .collect(),
        ),
        Formula::Bottom => Formula::Bottom,
        Formula::And(l, r) => Formula::And(
            Box::new(substitute_unchecked(l, x, t)),
            Box::new(substitute_unchecked(r, x, t)),
        ),
        Formula::Or(l, r) => Formula::Or(
            Box::new(substitute_unchecked(l, x, t)),
            Box::new(substitute_unchecked(r, x, t)),
        ),
        Formula::Imp(l, r) => Formula::Imp(
            Box::new(substitute_unchecked(l, x, t)),
            Box::new(substitute_unchecked(r, x, t)),
        ),
        Formula::Neg(g) => Formula::Neg(Box::new(substitute_unchecked(g, x, t))),
        Formula::Box(g) => Formula::Box(Box::new(substitute_unchecked(g, x, t))),
        Formula::Diamond(g) => Formula::Diamond(Box::new(substitute_unchecked(g, x, t))),
        Formula::Forall(y, g) => {
            if y == x {
                f.clone()
            } else {
                Formula::Forall(y.clone(), Box::new(substitute_unchecked(g, x, t)))
            }
        }
        Formula::Exists(y, g) => {
            if y == x {
                f.clone()
            } else {
                Formula::Exists(y.clone(), Box::new(substitute_unchecked(g, x, t)))
            }
        }
    }
}

/// A simultaneous substitution of terms for variables, identity outside its
/// (finite) support. A substitution is *basic* when every assigned term is a
/// constant; basic substitutions are what grounds a formula over a domain.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Substitution {
    map: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new(map: impl IntoIterator<Item = (String, Term)>) -> Self {
        // x |-> x entries are the identity; dropping them keeps the support
        // minimal so `is_basic` and `support` mean what they say.
        let map = map
            .into_iter()
            .filter(|(x, t)| t.as_var() != Some(x.as_str()))
            .collect();
        Substitution { map }
    }

    pub fn get(&self, x: &str) -> Option<&Term> {
        self.map.get(x)
    }

    /// Variables moved by the substitution, sorted.
    pub fn support(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    /// True when every assigned term is a constant.
    pub fn is_basic(&self) -> bool {
        self.map.values().all(|t| matches!(t, Term::Const(_)))
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Applies a simultaneous substitution, refusing if any single replacement
/// would be captured. Simultaneity matters: `{x -> y, y -> x}` swaps the two
/// variables rather than collapsing them.
pub fn apply_substitution(f: &Formula, s: &Substitution) -> Result<Formula, SubstError> {
    for (x, t) in &s.map {
        if !is_free_for(t, x, f) {
            return Err(SubstError::Capture {
                var: x.clone(),
                term: t.to_string(),
            });
        }
    }
    Ok(apply_simultaneous(f, &s.map))
}

fn apply_simultaneous(f: &Formula, map: &BTreeMap<String, Term>) -> Formula {
    match f {
        Formula::Atom(p, args) => Formula::Atom(
            p.clone(),
            args.iter()
                .map(|a| match a {
                    Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| a.clone()),
                    Term::Const(_) => a.clone(),
                })
                .collect(),
        ),
        Formula::Bottom => Formula::Bottom,
        Formula::And(l, r) => Formula::And(
            Box::new(apply_simultaneous(l, map)),
            Box::new(apply_simultaneous(r, map)),
        ),
        Formula::Or(l, r) => Formula::Or(
            Box::new(apply_simultaneous(l, map)),
            Box::new(apply_simultaneous(r, map)),
        ),
        Formula::Imp(l, r) => Formula::Imp(
            Box::new(apply_simultaneous(l, map)),
            Box::new(apply_simultaneous(r, map)),
        ),
        Formula::Neg(g) => Formula::Neg(Box::new(apply_simultaneous(g, map))),
        Formula::Box(g) => Formula::Box(Box::new(apply_simultaneous(g, map))),
        Formula::Diamond(g) => Formula::Diamond(Box::new(apply_simultaneous(g, map))),
        Formula::Forall(y, g) | Formula::Exists(y, g) => {
            // The binder shadows y: apply the substitution with y removed.
            let mut inner = map.clone();
            inner.remove(y);
            let body = apply_simultaneous(g, &inner);
            match f {
                Formula::Forall(_, _) => Formula::Forall(y.clone(), Box::new(body)),
                _ => Formula::Exists(y.clone(), Box::new(body)),
            }
        }
    }
}

/// Replaces occurrences of `target` inside `f` by `replacement`.
///
/// Replacement is purely syntactic: occurrences are compared for literal
/// equality and nothing is renamed, so a replacement may change the meaning
/// under binders. Occurrence indices count matches of `target` in pre-order;
/// a match is not searched for further matches inside itself.
pub fn replace_subformula(
    f: &Formula,
    target: &Formula,
    replacement: &Formula,
    occurrences: Occurrences<'_>,
) -> Result<Formula, ReplaceError> {
    let total = count_occurrences(f, target);
    if total == 0 {
        return Err(ReplaceError::NotASubformula);
    }
    if let Occurrences::At(idxs) = &occurrences {
        if let Some(&bad) = idxs.iter().find(|&&i| i >= total) {
            return Err(ReplaceError::PositionOutOfRange {
                index: bad,
                count: total,
            });
        }
    }
    let mut next = 0usize;
    Ok(replace_walk(f, target, replacement, &occurrences, &mut next))
}

fn count_occurrences(f: &Formula, target: &Formula) -> usize {
    if f == target {
        return 1;
    }
    match f {
        Formula::Atom(_, _) | Formula::Bottom => 0,
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
            count_occurrences(l, target) + count_occurrences(r, target)
        }
        Formula::Neg(g) | Formula::Box(g) | Formula::Diamond(g) => count_occurrences(g, target),
        Formula::Forall(_, g) | Formula::Exists(_, g) => count_occurrences(g, target),
    }
}

fn replace_walk(
    f: &Formula,
    target: &Formula,
    replacement: &Formula,
    occ: &Occurrences<'_>,
    next: &mut usize,
) -> Formula {
    if f == target {
        let index = *next;
        *next += 1;
        let hit = match occ {
            Occurrences::All => true,
            Occurrences::At(idxs) => idxs.contains(&index),
        };
        return if hit { replacement.clone() } else { f.clone() };
    }
    match f {
        Formula::Atom(_, _) | Formula::Bottom => f.clone(),
        Formula::And(l, r) => Formula::And(
            Box::new(replace_walk(l, target, replacement, occ, next)),
            Box::new(replace_walk(r, target, replacement, occ, next)),
        ),
        Formula::Or(l, r) => Formula::Or(
            Box::new(replace_walk(l, target, replacement, occ, next)),
            Box::new(replace_walk(r, target, replacement, occ, next)),
        ),
        Formula::Imp(l, r) => Formula::Imp(
            Box::new(replace_walk(l, target, replacement, occ, next)),
            Box::new(replace_walk(r, target, replacement, occ, next)),
        ),
        Formula::Neg(g) => Formula::Neg(Box::new(replace_walk(g, target, replacement, occ, next))),
        Formula::Box(g) => Formula::Box(Box::new(replace_walk(g, target, replacement, occ, next))),
        Formula::Diamond(g) => {
            Formula::Diamond(Box::new(replace_walk(g, target, replacement, occ, next)))
        }
        Formula::Forall(x, g) => Formula::Forall(
            x.clone(),
            Box::new(replace_walk(g, target, replacement, occ, next)),
        ),
        Formula::Exists(x, g) => Formula::Exists(
            x.clone(),
            Box::new(replace_walk(g, target, replacement, occ, next)),
        ),
    }
}
