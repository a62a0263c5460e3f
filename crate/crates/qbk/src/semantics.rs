//! Expanding-domain Kripke models and two-polarity evaluation.
//!
//! A model carries, at every world, a non-empty individual domain, an
//! interpretation of constants, and for each predicate two independent
//! relations: a positive extension (tuples the atom is verified on) and a
//! negative extension (tuples it is falsified on). The two need not be
//! complementary or even disjoint, which is what lets formulas take four
//! epistemic states at a world: verified, falsified, both, or neither.
//! Domains may only grow along the accessibility relation, and constants
//! keep their value along it.
//!
//! Evaluation is defined for both polarities at once: [`Polarity::Plus`]
//! asks whether a formula is verified, [`Polarity::Minus`] whether it is
//! falsified. Strong negation flips the polarity; implication is classical
//! in the positive clause and `f & ~g`-like in the negative one; `[]`/`<>`
//! quantify over accessible worlds in the usual K way positively and dually
//! negatively; quantifiers range over the domain of the current world.
//!
//! Free variables are handled by an environment mapping variable names to
//! elements of the current domain. An equivalent formulation extends the
//! signature with one fresh constant per individual and substitutes; the two
//! styles are in bijection (bind `x` to element `a` exactly when you would
//! substitute `a`'s constant for `x`), and the environment style avoids
//! rebuilding formulas during evaluation. The test suite checks the two
//! against each other.
//!
//! [`ModelClass`] captures the frame and valuation conditions the named
//! model families impose (completeness or consistency of the atom
//! valuations, constant domains, reflexivity, transitivity, hereditary
//! extensions); [`enumerate_models`] walks every model over a signature
//! within size bounds, and [`search_countermodel`] scans that stream for a
//! world refuting a consequence claim.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::{Formula, Signature, Term};

/// Extension of one predicate at one world: the set of element tuples.
pub type Extension = BTreeSet<Vec<usize>>;

/// Per-world table keyed by predicate name.
pub type ExtensionTable = BTreeMap<String, Extension>;

/// Whether evaluation asks for verification or falsification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Plus,
    Minus,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Plus => Polarity::Minus,
            Polarity::Minus => Polarity::Plus,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Plus => "+",
            Polarity::Minus => "-",
        })
    }
}

impl std::str::FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+" | "plus" => Ok(Polarity::Plus),
            "-" | "minus" => Ok(Polarity::Minus),
            other => Err(format!("unknown polarity `{other}`, expected `+` or `-`")),
        }
    }
}

/// Structural defect that keeps data from forming a model at all.
/// Violations of the named model-class conditions are reported separately by
/// [`validate_model`]; these here are unconditional.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("a model needs at least one world")]
    NoWorlds,
    #[error("duplicate world name `{0}`")]
    DuplicateWorld(String),
    #[error("duplicate individual name `{0}`")]
    DuplicateIndividual(String),
    #[error("empty name for a world or individual")]
    EmptyName,
    #[error("access pair ({0}, {1}) refers to a world index out of range")]
    AccessOutOfRange(usize, usize),
    #[error("expected one entry per world in `{field}`, found {found} for {worlds} world(s)")]
    WrongLength {
        field: &'static str,
        found: usize,
        worlds: usize,
    },
    #[error("world `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("domain of world `{world}` contains element index {element} out of range")]
    ElementOutOfRange { world: String, element: usize },
    #[error("domains must not shrink along access: element `{element}` lives at `{from}` but not at its successor `{to}`")]
    DomainNotExpanding {
        from: String,
        to: String,
        element: String,
    },
    #[error("constant `{constant}` has no interpretation at world `{world}`")]
    MissingConstant { constant: String, world: String },
    #[error("`{name}` is interpreted at world `{world}` but is not a declared constant")]
    UndeclaredConstant { name: String, world: String },
    #[error("constant `{constant}` denotes an element outside the domain of world `{world}`")]
    ConstantOutsideDomain { constant: String, world: String },
    #[error("constant `{constant}` changes its value along access from `{from}` to `{to}`")]
    ConstantNotRigid {
        constant: String,
        from: String,
        to: String,
    },
    #[error("extension at world `{world}` mentions undeclared predicate `{pred}`")]
    UndeclaredPredicate { world: String, pred: String },
    #[error("extension of `{pred}` at world `{world}` holds a tuple of length {found}, arity is {expected}")]
    TupleArity {
        world: String,
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("extension of `{pred}` at world `{world}` mentions an element outside that world's domain")]
    TupleOutsideDomain { world: String, pred: String },
}

/// A Kripke model with expanding domains and twin atom extensions.
///
/// Worlds and individuals are indexed densely; names are kept for display
/// and for the file format. All invariants that do not depend on a model
/// class are enforced by [`KripkeModel::new`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    sig: Signature,
    worlds: Vec<String>,
    access: BTreeSet<(usize, usize)>,
    /// Sorted successor list per world; derived from `access`.
    successors: Vec<Vec<usize>>,
    individuals: Vec<String>,
    /// Sorted element ids per world.
    domains: Vec<Vec<usize>>,
    const_interp: Vec<BTreeMap<String, usize>>,
    positive: Vec<ExtensionTable>,
    negative: Vec<ExtensionTable>,
}

impl KripkeModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sig: Signature,
        worlds: Vec<String>,
        access: BTreeSet<(usize, usize)>,
        individuals: Vec<String>,
        domains: Vec<BTreeSet<usize>>,
        const_interp: Vec<BTreeMap<String, usize>>,
        positive: Vec<ExtensionTable>,
        negative: Vec<ExtensionTable>,
    ) -> Result<Self, ModelError> {
        if worlds.is_empty() {
            return Err(ModelError::NoWorlds);
        }
        let k = worlds.len();
        check_distinct(&worlds, |n| ModelError::DuplicateWorld(n))?;
        check_distinct(&individuals, |n| ModelError::DuplicateIndividual(n))?;
        for (field, found) in [
            ("domains", domains.len()),
            ("const_interp", const_interp.len()),
            ("positive", positive.len()),
            ("negative", negative.len()),
        ] {
            if found != k {
                return Err(ModelError::WrongLength {
                    field,
                    found,
                    worlds: k,
                });
            }
        }
        for &(u, v) in &access {
            if u >= k || v >= k {
                return Err(ModelError::AccessOutOfRange(u, v));
            }
        }
        for (w, dom) in domains.iter().enumerate() {
            if dom.is_empty() {
                return Err(ModelError::EmptyDomain(worlds[w].clone()));
            }
            if let Some(&e) = dom.iter().find(|&&e| e >= individuals.len()) {
                return Err(ModelError::ElementOutOfRange {
                    world: worlds[w].clone(),
                    element: e,
                });
            }
        }
        for &(u, v) in &access {
            if let Some(&e) = domains[u].iter().find(|e| !domains[v].contains(e)) {
                return Err(ModelError::DomainNotExpanding {
                    from: worlds[u].clone(),
                    to: worlds[v].clone(),
                    element: individuals[e].clone(),
                });
            }
        }
        for w in 0..k {
            for c in sig.constants() {
                match const_interp[w].get(c) {
                    None => {
                        return Err(ModelError::MissingConstant {
                            constant: c.to_string(),
                            world: worlds[w].clone(),
                        })
                    }
                    Some(&e) if !domains[w].contains(&e) => {
                        return Err(ModelError::ConstantOutsideDomain {
                            constant: c.to_string(),
                            world: worlds[w].clone(),
                        })
                    }
                    Some(_) => {}
                }
            }
            if let Some(name) = const_interp[w].keys().find(|n| !sig.is_constant(n)) {
                return Err(ModelError::UndeclaredConstant {
                    name: name.clone(),
                    world: worlds[w].clone(),
                });
            }
        }
        for &(u, v) in &access {
            for c in sig.constants() {
                if const_interp[u][c] != const_interp[v][c] {
                    return Err(ModelError::ConstantNotRigid {
                        constant: c.to_string(),
                        from: worlds[u].clone(),
                        to: worlds[v].clone(),
                    });
                }
            }
        }
        for (tables, _which) in [(&positive, "positive"), (&negative, "negative")] {
            for (w, table) in tables.iter().enumerate() {
                for (pred, ext) in table {
                    let arity = sig.arity(pred).ok_or_else(|| ModelError::UndeclaredPredicate {
                        world: worlds[w].clone(),
                        pred: pred.clone(),
                    })?;
                    for tuple in ext {
                        if tuple.len() != arity {
                            return Err(ModelError::TupleArity {
                                world: worlds[w].clone(),
                                pred: pred.clone(),
                                expected: arity,
                                found: tuple.len(),
                            });
                        }
                        if tuple.iter().any(|e| !domains[w].contains(e)) {
                            return Err(ModelError::TupleOutsideDomain {
                                world: worlds[w].clone(),
                                pred: pred.clone(),
                            });
                        }
                    }
                }
            }
        }
        let mut successors = vec![Vec::new(); k];
        for &(u, v) in &access {
            successors[u].push(v);
        }
        Ok(KripkeModel {
            sig,
            worlds,
            access,
            successors,
            individuals,
            domains: domains.into_iter().map(|d| d.into_iter().collect()).collect(),
            const_interp,
            positive,
            negative,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn world_index(&self, name: &str) -> Option<usize> {
        self.worlds.iter().position(|w| w == name)
    }

    pub fn access(&self) -> &BTreeSet<(usize, usize)> {
        &self.access
    }

    pub fn successors(&self, w: usize) -> &[usize] {
        &self.successors[w]
    }

    pub fn individuals(&self) -> &[String] {
        &self.individuals
    }

    pub fn element_index(&self, name: &str) -> Option<usize> {
        self.individuals.iter().position(|e| e == name)
    }

    /// Sorted element ids living at `w`.
    pub fn domain(&self, w: usize) -> &[usize] {
        &self.domains[w]
    }

    pub fn const_interp(&self, w: usize) -> &BTreeMap<String, usize> {
        &self.const_interp[w]
    }

    pub fn positive(&self, w: usize) -> &ExtensionTable {
        &self.positive[w]
    }

    pub fn negative(&self, w: usize) -> &ExtensionTable {
        &self.negative[w]
    }

    /// Same frame, domains and constants, different atom extensions.
    pub fn with_extensions(
        &self,
        positive: Vec<ExtensionTable>,
        negative: Vec<ExtensionTable>,
    ) -> Result<Self, ModelError> {
        KripkeModel::new(
            self.sig.clone(),
            self.worlds.clone(),
            self.access.clone(),
            self.individuals.clone(),
            self.domains.iter().map(|d| d.iter().copied().collect()).collect(),
            self.const_interp.clone(),
            positive,
            negative,
        )
    }
}

fn check_distinct(
    names: &[String],
    err: impl Fn(String) -> ModelError,
) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if n.is_empty() {
            return Err(ModelError::EmptyName);
        }
        if !seen.insert(n) {
            return Err(err(n.clone()));
        }
    }
    Ok(())
}

/// Conditions a family of models may impose beyond the structural ones.
///
/// The named presets of the calculus map onto these flags via
/// [`ModelClass::from_preset_name`]; the flags also combine freely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelClass {
    /// Every ground atom is verified or falsified (or both) at every world.
    pub atom_complete: bool,
    /// No ground atom is both verified and falsified at a world.
    pub atom_consistent: bool,
    /// All worlds share one domain.
    pub constant_domain: bool,
    pub reflexive: bool,
    pub transitive: bool,
    /// Atom extensions of both polarities only grow along access.
    pub hereditary: bool,
}

impl ModelClass {
    /// No conditions: the base class.
    pub const QBK: ModelClass = ModelClass::flags(false, false, false, false, false, false);
    /// Complete atom valuations.
    pub const QBK_O: ModelClass = ModelClass::flags(true, false, false, false, false, false);
    /// Consistent atom valuations.
    pub const QB3K: ModelClass = ModelClass::flags(false, true, false, false, false, false);
    /// Reflexive frames.
    pub const QBT: ModelClass = ModelClass::flags(false, false, false, true, false, false);
    /// Transitive frames.
    pub const QBK4: ModelClass = ModelClass::flags(false, false, false, false, true, false);
    /// Preorder frames.
    pub const QBS4: ModelClass = ModelClass::flags(false, false, false, true, true, false);
    /// Preorder frames with consistent atoms.
    pub const QB3S4: ModelClass = ModelClass::flags(false, true, false, true, true, false);
    /// Constant domains.
    pub const QBK_SHARP: ModelClass = ModelClass::flags(false, false, true, false, false, false);
    /// Preorder frames with hereditary extensions.
    pub const QN4: ModelClass = ModelClass::flags(false, false, false, true, true, true);
    /// Preorder frames with hereditary, consistent extensions.
    pub const QN3: ModelClass = ModelClass::flags(false, true, false, true, true, true);

    const fn flags(
        atom_complete: bool,
        atom_consistent: bool,
        constant_domain: bool,
        reflexive: bool,
        transitive: bool,
        hereditary: bool,
    ) -> Self {
        ModelClass {
            atom_complete,
            atom_consistent,
            constant_domain,
            reflexive,
            transitive,
            hereditary,
        }
    }

    pub fn from_preset_name(name: &str) -> Option<ModelClass> {
        Some(match name {
            "qbk" => Self::QBK,
            "qbk-o" => Self::QBK_O,
            "qb3k" => Self::QB3K,
            "qbt" => Self::QBT,
            "qbk4" => Self::QBK4,
            "qbs4" => Self::QBS4,
            "qb3s4" => Self::QB3S4,
            "qbk-sharp" => Self::QBK_SHARP,
            "qn4" => Self::QN4,
            "qn3" => Self::QN3,
            _ => return None,
        })
    }

    pub fn preset_name(&self) -> Option<&'static str> {
        let all = [
            (Self::QBK, "qbk"),
            (Self::QBK_O, "qbk-o"),
            (Self::QB3K, "qb3k"),
            (Self::QBT, "qbt"),
            (Self::QBK4, "qbk4"),
            (Self::QBS4, "qbs4"),
            (Self::QB3S4, "qb3s4"),
            (Self::QBK_SHARP, "qbk-sharp"),
            (Self::QN4, "qn4"),
            (Self::QN3, "qn3"),
        ];
        all.iter().find(|(c, _)| c == self).map(|(_, n)| *n)
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = self.preset_name() {
            return f.write_str(name);
        }
        let mut parts = Vec::new();
        if self.atom_complete {
            parts.push("atom-complete");
        }
        if self.atom_consistent {
            parts.push("atom-consistent");
        }
        if self.constant_domain {
            parts.push("constant-domain");
        }
        if self.reflexive {
            parts.push("reflexive");
        }
        if self.transitive {
            parts.push("transitive");
        }
        if self.hereditary {
            parts.push("hereditary");
        }
        if parts.is_empty() {
            parts.push("unconstrained");
        }
        f.write_str(&parts.join("+"))
    }
}

/// One way a model falls outside a [`ModelClass`]. Worlds and elements are
/// reported by name.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassViolation {
    #[error("atom valuation is not complete: `{pred}{tuple}` is neither verified nor falsified at world `{world}`")]
    AtomGap {
        world: String,
        pred: String,
        tuple: String,
    },
    #[error("atom valuation is not consistent: `{pred}{tuple}` is both verified and falsified at world `{world}`")]
    AtomClash {
        world: String,
        pred: String,
        tuple: String,
    },
    #[error("domains are not constant: worlds `{first}` and `{second}` differ")]
    DomainsDiffer { first: String, second: String },
    #[error("access is not reflexive: world `{0}` does not see itself")]
    NotReflexive(String),
    #[error("access is not transitive: `{0}` sees `{1}` and `{1}` sees `{2}`, but `{0}` does not see `{2}`")]
    NotTransitive(String, String, String),
    #[error("positive extension of `{pred}` is not hereditary: `{pred}{tuple}` is verified at `{from}` but not at its successor `{to}`")]
    NotHereditaryPos {
        from: String,
        to: String,
        pred: String,
        tuple: String,
    },
    #[error("negative extension of `{pred}` is not hereditary: `{pred}{tuple}` is falsified at `{from}` but not at its successor `{to}`")]
    NotHereditaryNeg {
        from: String,
        to: String,
        pred: String,
        tuple: String,
    },
}

fn tuple_display(m: &KripkeModel, tuple: &[usize]) -> String {
    if tuple.is_empty() {
        return String::new();
    }
    let names: Vec<&str> = tuple.iter().map(|&e| m.individuals[e].as_str()).collect();
    format!("({})", names.join(", "))
}

/// Lists every way `m` violates the conditions of `class`. Empty means `m`
/// belongs to the class.
pub fn validate_model(m: &KripkeModel, class: ModelClass) -> Vec<ClassViolation> {
    let mut out = Vec::new();
    let k = m.worlds.len();
    if class.atom_complete || class.atom_consistent {
        for w in 0..k {
            for (pred, arity) in m.sig.predicates() {
                let empty = Extension::new();
                let pos = m.positive[w].get(pred).unwrap_or(&empty);
                let neg = m.negative[w].get(pred).unwrap_or(&empty);
                for tuple in all_tuples(&m.domains[w], arity) {
                    let p = pos.contains(&tuple);
                    let n = neg.contains(&tuple);
                    if class.atom_complete && !p && !n {
                        out.push(ClassViolation::AtomGap {
                            world: m.worlds[w].clone(),
                            pred: pred.to_string(),
                            tuple: tuple_display(m, &tuple),
                        });
                    }
                    if class.atom_consistent && p && n {
                        out.push(ClassViolation::AtomClash {
                            world: m.worlds[w].clone(),
                            pred: pred.to_string(),
                            tuple: tuple_display(m, &tuple),
                        });
                    }
                }
            }
        }
    }
    if class.constant_domain {
        for w in 1..k {
            if m.domains[w] != m.domains[0] {
                out.push(ClassViolation::DomainsDiffer {
                    first: m.worlds[0].clone(),
                    second: m.worlds[w].clone(),
                });
            }
        }
    }
    if class.reflexive {
        for w in 0..k {
            if !m.access.contains(&(w, w)) {
                out.push(ClassViolation::NotReflexive(m.worlds[w].clone()));
            }
        }
    }
    if class.transitive {
        for &(u, v) in &m.access {
            for &w in &m.successors[v] {
                if !m.access.contains(&(u, w)) {
                    out.push(ClassViolation::NotTransitive(
                        m.worlds[u].clone(),
                        m.worlds[v].clone(),
                        m.worlds[w].clone(),
                    ));
                }
            }
        }
    }
    if class.hereditary {
        for &(u, v) in &m.access {
            for (pred, _) in m.sig.predicates() {
                let empty = Extension::new();
                for (tables, pos_side) in [(&m.positive, true), (&m.negative, false)] {
                    let at_u = tables[u].get(pred).unwrap_or(&empty);
                    let at_v = tables[v].get(pred).unwrap_or(&empty);
                    for tuple in at_u {
                        if !at_v.contains(tuple) {
                            let violation = if pos_side {
                                ClassViolation::NotHereditaryPos {
                                    from: m.worlds[u].clone(),
                                    to: m.worlds[v].clone(),
                                    pred: pred.to_string(),
                                    tuple: tuple_display(m, tuple),
                                }
                            } else {
                                ClassViolation::NotHereditaryNeg {
                                    from: m.worlds[u].clone(),
                                    to: m.worlds[v].clone(),
                                    pred: pred.to_string(),
                                    tuple: tuple_display(m, tuple),
                                }
                            };
                            out.push(violation);
                        }
                    }
                }
            }
        }
    }
    out
}

/// All tuples of the given arity over a sorted domain, in lexicographic
/// order (leftmost position varies slowest). Arity 0 yields one empty tuple.
pub fn all_tuples(domain: &[usize], arity: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; arity];
    fn rec(domain: &[usize], pos: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == current.len() {
            out.push(current.clone());
            return;
        }
        for &e in domain {
            current[pos] = e;
            rec(domain, pos + 1, current, out);
        }
    }
    rec(domain, 0, &mut current, &mut out);
    out
}

/// Variable assignment used to evaluate open formulas.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Env {
    bindings: BTreeMap<String, usize>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn bind(mut self, var: impl Into<String>, element: usize) -> Self {
        self.bindings.insert(var.into(), element);
        self
    }

    pub fn lookup(&self, var: &str) -> Option<usize> {
        self.bindings.get(var).copied()
    }

    pub fn bindings(&self) -> &BTreeMap<String, usize> {
        &self.bindings
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("free variable `{0}` is not bound by the environment")]
    UnboundVariable(String),
    #[error("environment binds `{var}` to `{element}`, which is not in the domain of world `{world}`")]
    OutsideDomain {
        var: String,
        element: String,
        world: String,
    },
}

/// Evaluates `f` at a world under the given polarity and environment.
///
/// The environment must bind every free variable of `f` to an element of the
/// world's domain; quantifiers extend it with elements of the domain of
/// whichever world they are evaluated at, and since domains expand along
/// access, every binding stays valid at every world the recursion reaches.
/// `f` must be well formed over the model's signature.
pub fn evaluate(
    m: &KripkeModel,
    world: usize,
    f: &Formula,
    pol: Polarity,
    env: &Env,
) -> Result<bool, EvalError> {
    assert!(world < m.worlds.len(), "world index out of range");
    let free: Vec<String> = f.free_vars().into_iter().collect();
    let mut scope: Vec<(&str, usize)> = Vec::with_capacity(free.len());
    for v in &free {
        let e = env
            .lookup(v)
            .ok_or_else(|| EvalError::UnboundVariable(v.clone()))?;
        if !m.domains[world].contains(&e) {
            return Err(EvalError::OutsideDomain {
                var: v.clone(),
                element: m
                    .individuals
                    .get(e)
                    .cloned()
                    .unwrap_or_else(|| format!("#{e}")),
                world: m.worlds[world].clone(),
            });
        }
        scope.push((v.as_str(), e));
    }
    Ok(eval_in(m, world, f, pol, &mut scope, &mut Vec::new()))
}

fn eval_in<'f>(
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
                            .expect("evaluate checked free variables")
                            .1
                    }
                    Term::Const(c) => *m.const_interp[w].get(c).unwrap_or_else(|| {
                        panic!("constant `{c}` has no interpretation: formula not well formed for this model")
                    }),
                };
                scratch.push(e);
            }
            let table = match pol {
                Polarity::Plus => &m.positive[w],
                Polarity::Minus => &m.negative[w],
            };
            table.get(pred).is_some_and(|ext| ext.contains(&*scratch))
        }
        (Formula::Bottom, Polarity::Plus) => false,
        (Formula::Bottom, Polarity::Minus) => true,
        (Formula::Neg(g), _) => eval_in(m, w, g, pol.flip(), scope, scratch),
        (Formula::And(l, r), Polarity::Plus) | (Formula::Or(l, r), Polarity::Minus) => {
            eval_in(m, w, l, pol, scope, scratch) && eval_in(m, w, r, pol, scope, scratch)
        }
        (Formula::And(l, r), Polarity::Minus) | (Formula::Or(l, r), Polarity::Plus) => {
            eval_in(m, w, l, pol, scope, scratch) || eval_in(m, w, r, pol, scope, scratch)
        }
        (Formula::Imp(l, r), Polarity::Plus) => {
            !eval_in(m, w, l, Polarity::Plus, scope, scratch)
                || eval_in(m, w, r, Polarity::Plus, scope, scratch)
        }
        (Formula::Imp(l, r), Polarity::Minus) => {
            eval_in(m, w, l, Polarity::Plus, scope, scratch)
                && eval_in(m, w, r, Polarity::Minus, scope, scratch)
        }
        (Formula::Box(g), Polarity::Plus) | (Formula::Diamond(g), Polarity::Minus) => {
            // [] verified / <> falsified: at every accessible world.
            m.successors[w]
                .iter()
                .all(|&u| eval_in(m, u, g, pol, scope, scratch))
        }
        (Formula::Box(g), Polarity::Minus) | (Formula::Diamond(g), Polarity::Plus) => {
            m.successors[w]
                .iter()
                .any(|&u| eval_in(m, u, g, pol, scope, scratch))
        }
        (Formula::Forall(x, g), Polarity::Plus) | (Formula::Exists(x, g), Polarity::Minus) => {
            for i in 0..m.domains[w].len() {
                let a = m.domains[w][i];
                scope.push((x, a));
                let ok = eval_in(m, w, g, pol, scope, scratch);
                scope.pop();
                if !ok {
                    return false;
                }
            }
            true
        }
        (Formula::Forall(x, g), Polarity::Minus) | (Formula::Exists(x, g), Polarity::Plus) => {
            for i in 0..m.domains[w].len() {
                let a = m.domains[w][i];
                scope.push((x, a));
                let ok = eval_in(m, w, g, pol, scope, scratch);
                scope.pop();
                if ok {
                    return true;
                }
            }
            false
        }
    }
}

/// World plus assignment at which a consequence claim fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsequenceWitness {
    pub world: usize,
    /// Values for the free variables of the conclusions.
    pub assignment: BTreeMap<String, usize>,
}

/// Looks for a world of `m` where every premise is verified and, for some
/// assignment of the conclusions' free variables into that world's domain,
/// no conclusion is verified. Premises must be sentences. `None` means the
/// consequence holds on this model.
///
/// Worlds are scanned in index order and assignments in lexicographic order,
/// so the witness returned is the first one.
pub fn check_consequence_on_model(
    m: &KripkeModel,
    premises: &[Formula],
    conclusions: &[Formula],
) -> Result<Option<ConsequenceWitness>, EvalError> {
    let empty = Env::new();
    let mut delta_vars = BTreeSet::new();
    for d in conclusions {
        delta_vars.extend(d.free_vars());
    }
    let delta_vars: Vec<String> = delta_vars.into_iter().collect();
    for w in 0..m.worlds.len() {
        let mut all_premises = true;
        for g in premises {
            if !evaluate(m, w, g, Polarity::Plus, &empty)? {
                all_premises = false;
                break;
            }
        }
        if !all_premises {
            continue;
        }
        for values in all_tuples(&m.domains[w], delta_vars.len()) {
            let mut env = Env::new();
            let mut assignment = BTreeMap::new();
            for (x, &e) in delta_vars.iter().zip(values.iter()) {
                env = env.bind(x.clone(), e);
                assignment.insert(x.clone(), e);
            }
            let mut some_conclusion = false;
            for d in conclusions {
                if evaluate(m, w, d, Polarity::Plus, &env)? {
                    some_conclusion = true;
                    break;
                }
            }
            if !some_conclusion {
                return Ok(Some(ConsequenceWitness { world: w, assignment }));
            }
        }
    }
    Ok(None)
}

/// Size limits for model enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_worlds: usize,
    pub max_domain: usize,
    /// Upper estimate of model count above which enumeration refuses to
    /// start.
    pub cap: u64,
}

impl Bounds {
    pub const DEFAULT_CAP: u64 = 50_000_000;

    pub fn new(max_worlds: usize, max_domain: usize) -> Self {
        Bounds {
            max_worlds,
            max_domain,
            cap: Self::DEFAULT_CAP,
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("bounds must allow at least one world and one individual")]
    Degenerate,
    #[error("enumeration bounds are too large: about {estimate} models exceed the cap of {cap}")]
    TooLarge { estimate: u128, cap: u64 },
}

/// Upper estimate of how many models [`enumerate_models`] may yield.
/// Coarse on purpose: it ignores every filter except reflexivity, constant
/// domains and the per-atom state restrictions.
pub fn estimate_model_count(sig: &Signature, bounds: &Bounds, class: ModelClass) -> u128 {
    let m = bounds.max_domain as u128;
    let domain_choices_per_world = (1u128 << bounds.max_domain) - 1;
    let states: u128 = match (class.atom_complete, class.atom_consistent) {
        (true, true) => 2,
        (true, false) | (false, true) => 3,
        (false, false) => 4,
    };
    let n_consts = sig.constants().count() as u32;
    let mut total: u128 = 0;
    for k in 1..=bounds.max_worlds {
        let free_bits = (k * k - if class.reflexive { k } else { 0 }) as u32;
        let access: u128 = 1u128.checked_shl(free_bits).unwrap_or(u128::MAX);
        let domains: u128 = if class.constant_domain {
            domain_choices_per_world
        } else {
            domain_choices_per_world.saturating_pow(k as u32)
        };
        let consts: u128 = m.saturating_pow(n_consts * k as u32).max(1);
        let cells_per_world: u32 = sig
            .predicates()
            .map(|(_, ar)| (bounds.max_domain as u64).pow(ar as u32).min(u32::MAX as u64) as u32)
            .sum();
        let ext: u128 = states.saturating_pow(cells_per_world * k as u32);
        total = total.saturating_add(
            access
                .saturating_mul(domains)
                .saturating_mul(consts)
                .saturating_mul(ext),
        );
    }
    total
}

struct Skeleton {
    k: usize,
    access: BTreeSet<(usize, usize)>,
    /// Domain bitmask per world over `max_domain` individuals.
    domain_masks: Vec<u32>,
    const_interp: Vec<BTreeMap<String, usize>>,
}

/// Enumerates every model over `sig` within the bounds that satisfies the
/// class conditions, worlds named `w0..`, individuals named `d0..`.
///
/// The order is deterministic: world counts ascending; access relations by
/// ascending bitmask (bit `i*k + j` is the edge from `wi` to `wj`); domain
/// assignments by ascending per-world bitmask; constant interpretations in
/// value order; atom states last, with the later cell varying faster and
/// the states ordered neither, verified, falsified, both.
///
/// Nothing is quotiented by isomorphism, so the stream repeats structures
/// under renaming; it is exhaustive, which is what refutation soundness
/// needs.
pub fn enumerate_models(
    sig: &Signature,
    bounds: &Bounds,
    class: ModelClass,
) -> Result<ModelIter, BoundsError> {
    if bounds.max_worlds == 0 || bounds.max_domain == 0 {
        return Err(BoundsError::Degenerate);
    }
    let estimate = estimate_model_count(sig, bounds, class);
    if estimate > bounds.cap as u128 {
        return Err(BoundsError::TooLarge {
            estimate,
            cap: bounds.cap,
        });
    }
    let mut skeletons = Vec::new();
    for k in 1..=bounds.max_worlds {
        collect_skeletons(sig, k, bounds.max_domain, class, &mut skeletons);
    }
    Ok(ModelIter {
        sig: sig.clone(),
        class,
        max_domain: bounds.max_domain,
        skeletons: skeletons.into_iter(),
        current: None,
    })
}

fn collect_skeletons(
    sig: &Signature,
    k: usize,
    max_domain: usize,
    class: ModelClass,
    out: &mut Vec<Skeleton>,
) {
    let full_mask_bits = k * k;
    for access_mask in 0u64..(1u64 << full_mask_bits) {
        let mut access = BTreeSet::new();
        for i in 0..k {
            for j in 0..k {
                if access_mask >> (i * k + j) & 1 == 1 {
                    access.insert((i, j));
                }
            }
        }
        if class.reflexive && (0..k).any(|i| !access.contains(&(i, i))) {
            continue;
        }
        if class.transitive && !is_transitive(&access, k) {
            continue;
        }
        for domain_masks in domain_assignments(k, max_domain, &access, class) {
            for const_interp in constant_assignments(sig, k, &access, &domain_masks) {
                out.push(Skeleton {
                    k,
                    access: access.clone(),
                    domain_masks: domain_masks.clone(),
                    const_interp,
                });
            }
        }
    }
}

fn is_transitive(access: &BTreeSet<(usize, usize)>, k: usize) -> bool {
    for &(u, v) in access {
        for w in 0..k {
            if access.contains(&(v, w)) && !access.contains(&(u, w)) {
                return false;
            }
        }
    }
    true
}

fn mask_subset(a: u32, b: u32) -> bool {
    a & !b == 0
}

fn domain_assignments(
    k: usize,
    max_domain: usize,
    access: &BTreeSet<(usize, usize)>,
    class: ModelClass,
) -> Vec<Vec<u32>> {
    let top = 1u32 << max_domain;
    let mut out = Vec::new();
    if class.constant_domain {
        for mask in 1..top {
            out.push(vec![mask; k]);
        }
        return out;
    }
    let mut current = vec![1u32; k];
    loop {
        if access
            .iter()
            .all(|&(u, v)| mask_subset(current[u], current[v]))
        {
            out.push(current.clone());
        }
        // Odometer over non-empty masks, last world fastest.
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            current[pos] += 1;
            if current[pos] < top {
                break;
            }
            current[pos] = 1;
        }
    }
}

/// All rigid constant interpretations: a constant takes one value on each
/// connected component of the access graph, drawn from the intersection of
/// the component's domains.
fn constant_assignments(
    sig: &Signature,
    k: usize,
    access: &BTreeSet<(usize, usize)>,
    domain_masks: &[u32],
) -> Vec<Vec<BTreeMap<String, usize>>> {
    let consts: Vec<&str> = sig.constants().collect();
    if consts.is_empty() {
        return vec![vec![BTreeMap::new(); k]];
    }
    // Union-find over the undirected closure of access.
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for &(u, v) in access {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
        }
    }
    let mut component_mask: BTreeMap<usize, u32> = BTreeMap::new();
    for w in 0..k {
        let root = find(&mut parent, w);
        *component_mask.entry(root).or_insert(u32::MAX) &= domain_masks[w];
    }
    let roots: Vec<usize> = component_mask.keys().copied().collect();
    // Per (constant, component) cell: candidate elements, ascending.
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for _c in &consts {
        for r in &roots {
            let mask = component_mask[r];
            let values: Vec<usize> = (0..32).filter(|b| mask >> b & 1 == 1).collect();
            if values.is_empty() {
                return Vec::new(); // no rigid value can exist
            }
            cells.push(values);
        }
    }
    let mut digits = vec![0usize; cells.len()];
    let mut out = Vec::new();
    loop {
        let mut interp = vec![BTreeMap::new(); k];
        for (ci, c) in consts.iter().enumerate() {
            for (ri, r) in roots.iter().enumerate() {
                let value = cells[ci * roots.len() + ri][digits[ci * roots.len() + ri]];
                for w in 0..k {
                    if find(&mut parent, w) == *r {
                        interp[w].insert(c.to_string(), value);
                    }
                }
            }
        }
        out.push(interp);
        let mut pos = cells.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < cells[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// One (world, predicate, tuple) slot of the atom valuation.
struct Cell {
    world: usize,
    pred: String,
    tuple: Vec<usize>,
}

struct ExtOdometer {
    cells: Vec<Cell>,
    /// Allowed (verified, falsified) states, shared by all cells.
    states: Vec<(bool, bool)>,
    digits: Vec<usize>,
    exhausted: bool,
}

impl ExtOdometer {
    fn new(sk: &Skeleton, sig: &Signature, class: ModelClass) -> Self {
        let mut cells = Vec::new();
        for w in 0..sk.k {
            let domain: Vec<usize> =
                (0..32).filter(|b| sk.domain_masks[w] >> b & 1 == 1).collect();
            for (pred, arity) in sig.predicates() {
                for tuple in all_tuples(&domain, arity) {
                    cells.push(Cell {
                        world: w,
                        pred: pred.to_string(),
                        tuple,
                    });
                }
            }
        }
        let states: Vec<(bool, bool)> = match (class.atom_complete, class.atom_consistent) {
            (true, true) => vec![(true, false), (false, true)],
            (true, false) => vec![(true, false), (false, true), (true, true)],
            (false, true) => vec![(false, false), (true, false), (false, true)],
            (false, false) => vec![(false, false), (true, false), (false, true), (true, true)],
        };
        let digits = vec![0usize; cells.len()];
        ExtOdometer {
            cells,
            states,
            digits,
            exhausted: false,
        }
    }

    fn next_tables(&mut self, k: usize) -> Option<(Vec<ExtensionTable>, Vec<ExtensionTable>)> {
        if self.exhausted {
            return None;
        }
        let mut positive = vec![ExtensionTable::new(); k];
        let mut negative = vec![ExtensionTable::new(); k];
        for (cell, &digit) in self.cells.iter().zip(self.digits.iter()) {
            let (p, n) = self.states[digit];
            if p {
                positive[cell.world]
                    .entry(cell.pred.clone())
                    .or_default()
                    .insert(cell.tuple.clone());
            }
            if n {
                negative[cell.world]
                    .entry(cell.pred.clone())
                    .or_default()
                    .insert(cell.tuple.clone());
            }
        }
        // Advance, last cell fastest.
        let mut pos = self.cells.len();
        loop {
            if pos == 0 {
                self.exhausted = true;
                break;
            }
            pos -= 1;
            self.digits[pos] += 1;
            if self.digits[pos] < self.states.len() {
                break;
            }
            self.digits[pos] = 0;
        }
        Some((positive, negative))
    }
}

/// Iterator over all models in bounds; see [`enumerate_models`].
pub struct ModelIter {
    sig: Signature,
    class: ModelClass,
    max_domain: usize,
    skeletons: std::vec::IntoIter<Skeleton>,
    current: Option<(Skeleton, ExtOdometer)>,
}

impl Iterator for ModelIter {
    type Item = KripkeModel;

    fn next(&mut self) -> Option<KripkeModel> {
        loop {
            if self.current.is_none() {
                let sk = self.skeletons.next()?;
                let odo = ExtOdometer::new(&sk, &self.sig, self.class);
                self.current = Some((sk, odo));
            }
            let (sk, odo) = self.current.as_mut().unwrap();
            match odo.next_tables(sk.k) {
                None => {
                    self.current = None;
                    continue;
                }
                Some((positive, negative)) => {
                    if self.class.hereditary
                        && !hereditary_ok(&sk.access, &positive, &negative)
                    {
                        continue;
                    }
                    let model = assemble(sk, &self.sig, self.max_domain, positive, negative);
                    return Some(model);
                }
            }
        }
    }
}

fn hereditary_ok(
    access: &BTreeSet<(usize, usize)>,
    positive: &[ExtensionTable],
    negative: &[ExtensionTable],
) -> bool {
    for &(u, v) in access {
        for tables in [positive, negative] {
            for (pred, at_u) in &tables[u] {
                let at_v = tables[v].get(pred);
                if at_u
                    .iter()
                    .any(|t| at_v.is_none_or(|s| !s.contains(t)))
                {
                    return false;
                }
            }
        }
    }
    true
}

fn assemble(
    sk: &Skeleton,
    sig: &Signature,
    max_domain: usize,
    positive: Vec<ExtensionTable>,
    negative: Vec<ExtensionTable>,
) -> KripkeModel {
    let worlds: Vec<String> = (0..sk.k).map(|i| format!("w{i}")).collect();
    let individuals: Vec<String> = (0..max_domain).map(|i| format!("d{i}")).collect();
    let domains: Vec<BTreeSet<usize>> = sk
        .domain_masks
        .iter()
        .map(|&mask| (0..32).filter(|b| mask >> b & 1 == 1).collect())
        .collect();
    KripkeModel::new(
        sig.clone(),
        worlds,
        sk.access.clone(),
        individuals,
        domains,
        sk.const_interp.clone(),
        positive,
        negative,
    )
    .expect("enumerated models satisfy the structural invariants")
}

/// A refutation found by [`search_countermodel`].
#[derive(Debug, Clone)]
pub struct Countermodel {
    pub model: KripkeModel,
    pub world: usize,
    pub assignment: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("premises must be sentences: {0}")]
    OpenPremise(String),
}

/// Scans the enumeration of `class` models within `bounds` for one on which
/// the consequence from `premises` to `conclusions` fails.
///
/// The first countermodel in enumeration order is returned regardless of
/// `workers`; extra workers only split the scan into deterministic batches.
/// `None` means the claim survived the bounded search, which bounds worlds
/// and domain size and is therefore no validity proof.
pub fn search_countermodel(
    sig: &Signature,
    premises: &[Formula],
    conclusions: &[Formula],
    bounds: &Bounds,
    class: ModelClass,
    workers: usize,
) -> Result<Option<Countermodel>, SearchError> {
    for g in premises {
        if !g.is_sentence() {
            return Err(SearchError::OpenPremise(g.to_string()));
        }
    }
    let mut stream = enumerate_models(sig, bounds, class)?;
    let check = |m: KripkeModel| -> Option<Countermodel> {
        match check_consequence_on_model(&m, premises, conclusions) {
            Ok(Some(w)) => Some(Countermodel {
                model: m,
                world: w.world,
                assignment: w.assignment,
            }),
            // Premises are sentences and assignments cover the conclusions'
            // variables, so evaluation cannot fail.
            Ok(None) | Err(_) => None,
        }
    };
    if workers <= 1 {
        for m in stream {
            if let Some(hit) = check(m) {
                return Ok(Some(hit));
            }
        }
        return Ok(None);
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("worker pool");
    // Deterministic despite parallelism: batches are scanned in order and
    // find_map_first keeps the earliest hit within a batch.
    const BATCH: usize = 4096;
    loop {
        let batch: Vec<KripkeModel> = stream.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            return Ok(None);
        }
        let hit = pool.install(|| batch.into_par_iter().find_map_first(check));
        if let Some(hit) = hit {
            return Ok(Some(hit));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::build::*;

    fn sig_p0() -> Signature {
        Signature::new([("p".to_string(), 0)], []).unwrap()
    }

    fn sig_p1() -> Signature {
        Signature::new([("P".to_string(), 1)], []).unwrap()
    }

    /// One reflexive world `x`, domain `{d0}`, both extensions of `p` empty.
    fn one_point_gap_model() -> KripkeModel {
        KripkeModel::new(
            sig_p0(),
            vec!["x".into()],
            BTreeSet::from([(0, 0)]),
            vec!["d0".into()],
            vec![BTreeSet::from([0])],
            vec![BTreeMap::new()],
            vec![ExtensionTable::new()],
            vec![ExtensionTable::new()],
        )
        .unwrap()
    }

    /// Two worlds u -> v, domain grows from {a} to {a, b}, P verified of b
    /// at v only.
    fn expanding_model() -> KripkeModel {
        let mut pos_v = ExtensionTable::new();
        pos_v.insert("P".into(), Extension::from([vec![1]]));
        KripkeModel::new(
            sig_p1(),
            vec!["u".into(), "v".into()],
            BTreeSet::from([(0, 1)]),
            vec!["a".into(), "b".into()],
            vec![BTreeSet::from([0]), BTreeSet::from([0, 1])],
            vec![BTreeMap::new(), BTreeMap::new()],
            vec![ExtensionTable::new(), pos_v],
            vec![ExtensionTable::new(), ExtensionTable::new()],
        )
        .unwrap()
    }

    #[test]
    fn bottom_is_falsified_never_verified() {
        let m = one_point_gap_model();
        assert!(!evaluate(&m, 0, &bot(), Polarity::Plus, &Env::new()).unwrap());
        assert!(evaluate(&m, 0, &bot(), Polarity::Minus, &Env::new()).unwrap());
    }

    #[test]
    fn strong_negation_swaps_polarity() {
        let m = one_point_gap_model();
        let f = neg(atom0("p"));
        // p is neither verified nor falsified, so ~p is too.
        assert!(!evaluate(&m, 0, &f, Polarity::Plus, &Env::new()).unwrap());
        assert!(!evaluate(&m, 0, &f, Polarity::Minus, &Env::new()).unwrap());
        // ~_|_ is verified and not falsified.
        let g = neg(bot());
        assert!(evaluate(&m, 0, &g, Polarity::Plus, &Env::new()).unwrap());
        assert!(!evaluate(&m, 0, &g, Polarity::Minus, &Env::new()).unwrap());
    }

    #[test]
    fn positive_implication_is_classical() {
        let m = one_point_gap_model();
        // p -> p holds even though p has no value.
        let f = imp(atom0("p"), atom0("p"));
        assert!(evaluate(&m, 0, &f, Polarity::Plus, &Env::new()).unwrap());
        // p -> ~p also holds: the antecedent is not verified.
        let g = imp(atom0("p"), neg(atom0("p")));
        assert!(evaluate(&m, 0, &g, Polarity::Plus, &Env::new()).unwrap());
        // An implication is falsified only with verified antecedent and
        // falsified consequent.
        assert!(!evaluate(&m, 0, &g, Polarity::Minus, &Env::new()).unwrap());
    }

    #[test]
    fn modalities_quantify_over_successors() {
        let m = expanding_model();
        let env = Env::new().bind("x", 0);
        let px = atom("P", vec![var("x")]);
        // u sees only v; P(a) is not verified at v, and also not falsified.
        assert!(!evaluate(&m, 0, &diamond(px.clone()), Polarity::Plus, &env).unwrap());
        assert!(!evaluate(&m, 0, &boxf(px.clone()), Polarity::Minus, &env).unwrap());
        // v has no successors: box vacuously verified, diamond vacuously
        // falsified... and its negative clause quantifies universally too.
        assert!(evaluate(&m, 1, &boxf(px.clone()), Polarity::Plus, &env).unwrap());
        assert!(evaluate(&m, 1, &diamond(px), Polarity::Minus, &env).unwrap());
    }

    #[test]
    fn quantifiers_range_over_current_domain() {
        let m = expanding_model();
        let ex = exists("x", atom("P", vec![var("x")]));
        // At u the domain is {a}: no witness.
        assert!(!evaluate(&m, 0, &ex, Polarity::Plus, &Env::new()).unwrap());
        // At v the domain is {a, b} and P holds of b.
        assert!(evaluate(&m, 1, &ex, Polarity::Plus, &Env::new()).unwrap());
    }

    #[test]
    fn barcan_shape_fails_on_expanding_domains() {
        let m = expanding_model();
        let ba = imp(
            diamond(exists("x", atom("P", vec![var("x")]))),
            exists("x", diamond(atom("P", vec![var("x")]))),
        );
        // <> exists x. P(x) is verified at u via v's new element, but no
        // element of u's domain is possibly P.
        assert!(!evaluate(&m, 0, &ba, Polarity::Plus, &Env::new()).unwrap());
        let witness = check_consequence_on_model(&m, &[], &[ba]).unwrap();
        assert_eq!(
            witness,
            Some(ConsequenceWitness {
                world: 0,
                assignment: BTreeMap::new()
            })
        );
    }

    #[test]
    fn converse_barcan_shape_holds_here() {
        let m = expanding_model();
        let cb = imp(
            exists("x", diamond(atom("P", vec![var("x")]))),
            diamond(exists("x", atom("P", vec![var("x")]))),
        );
        assert_eq!(check_consequence_on_model(&m, &[], &[cb]).unwrap(), None);
    }

    #[test]
    fn unbound_variable_is_reported() {
        let m = expanding_model();
        let err = evaluate(
            &m,
            0,
            &atom("P", vec![var("x")]),
            Polarity::Plus,
            &Env::new(),
        )
        .unwrap_err();
        assert_eq!(err, EvalError::UnboundVariable("x".into()));
    }

    #[test]
    fn out_of_domain_binding_is_reported() {
        let m = expanding_model();
        // b does not live at u.
        let err = evaluate(
            &m,
            0,
            &atom("P", vec![var("x")]),
            Polarity::Plus,
            &Env::new().bind("x", 1),
        )
        .unwrap_err();
        assert!(matches!(err, EvalError::OutsideDomain { .. }));
    }

    #[test]
    fn structural_invariants_are_enforced() {
        // Shrinking domain.
        let bad = KripkeModel::new(
            sig_p1(),
            vec!["u".into(), "v".into()],
            BTreeSet::from([(0, 1)]),
            vec!["a".into(), "b".into()],
            vec![BTreeSet::from([0, 1]), BTreeSet::from([0])],
            vec![BTreeMap::new(), BTreeMap::new()],
            vec![ExtensionTable::new(), ExtensionTable::new()],
            vec![ExtensionTable::new(), ExtensionTable::new()],
        );
        assert!(matches!(bad, Err(ModelError::DomainNotExpanding { .. })));

        // Tuple outside the world's domain.
        let mut pos = ExtensionTable::new();
        pos.insert("P".into(), Extension::from([vec![1]]));
        let bad = KripkeModel::new(
            sig_p1(),
            vec!["u".into()],
            BTreeSet::new(),
            vec!["a".into(), "b".into()],
            vec![BTreeSet::from([0])],
            vec![BTreeMap::new()],
            vec![pos],
            vec![ExtensionTable::new()],
        );
        assert!(matches!(bad, Err(ModelError::TupleOutsideDomain { .. })));

        // Non-rigid constant.
        let sig = Signature::new([("P".to_string(), 1)], ["c".to_string()]).unwrap();
        let ci = |e: usize| BTreeMap::from([("c".to_string(), e)]);
        let bad = KripkeModel::new(
            sig,
            vec!["u".into(), "v".into()],
            BTreeSet::from([(0, 1)]),
            vec!["a".into(), "b".into()],
            vec![BTreeSet::from([0, 1]), BTreeSet::from([0, 1])],
            vec![ci(0), ci(1)],
            vec![ExtensionTable::new(), ExtensionTable::new()],
            vec![ExtensionTable::new(), ExtensionTable::new()],
        );
        assert!(matches!(bad, Err(ModelError::ConstantNotRigid { .. })));
    }

    #[test]
    fn class_validation_reports_named_conditions() {
        let m = one_point_gap_model();
        // The gap model is consistent, reflexive, transitive, hereditary,
        // constant-domain, but not complete.
        assert_eq!(validate_model(&m, ModelClass::QB3S4), vec![]);
        assert_eq!(validate_model(&m, ModelClass::QN3), vec![]);
        assert_eq!(validate_model(&m, ModelClass::QBK_SHARP), vec![]);
        let violations = validate_model(&m, ModelClass::QBK_O);
        assert_eq!(
            violations,
            vec![ClassViolation::AtomGap {
                world: "x".into(),
                pred: "p".into(),
                tuple: String::new()
            }]
        );

        let e = expanding_model();
        assert!(validate_model(&e, ModelClass::QBK).is_empty());
        assert!(validate_model(&e, ModelClass::QBK_SHARP)
            .iter()
            .any(|v| matches!(v, ClassViolation::DomainsDiffer { .. })));
        assert!(validate_model(&e, ModelClass::QBS4)
            .iter()
            .any(|v| matches!(v, ClassViolation::NotReflexive(_))));
    }

    #[test]
    fn hereditary_violation_is_detected() {
        // u -> v with P(a) verified at u but not at v.
        let mut pos_u = ExtensionTable::new();
        pos_u.insert("P".into(), Extension::from([vec![0]]));
        let m = KripkeModel::new(
            sig_p1(),
            vec!["u".into(), "v".into()],
            BTreeSet::from([(0, 0), (0, 1), (1, 1)]),
            vec!["a".into()],
            vec![BTreeSet::from([0]), BTreeSet::from([0])],
            vec![BTreeMap::new(), BTreeMap::new()],
            vec![pos_u, ExtensionTable::new()],
            vec![ExtensionTable::new(), ExtensionTable::new()],
        )
        .unwrap();
        let violations = validate_model(&m, ModelClass::QN4);
        assert!(violations
            .iter()
            .any(|v| matches!(v, ClassViolation::NotHereditaryPos { .. })));
    }

    #[test]
    fn enumeration_count_one_world_nullary() {
        // One world, one individual, nullary p: two access relations times
        // four atom states.
        let models: Vec<_> =
            enumerate_models(&sig_p0(), &Bounds::new(1, 1), ModelClass::QBK)
                .unwrap()
                .collect();
        assert_eq!(models.len(), 8);
        // Consistency drops the state where p is both.
        let models: Vec<_> =
            enumerate_models(&sig_p0(), &Bounds::new(1, 1), ModelClass::QB3K)
                .unwrap()
                .collect();
        assert_eq!(models.len(), 6);
    }

    #[test]
    fn enumeration_respects_constant_domains() {
        let stream =
            enumerate_models(&sig_p1(), &Bounds::new(2, 2), ModelClass::QBK_SHARP).unwrap();
        let mut n = 0;
        for m in stream {
            n += 1;
            for w in 1..m.world_count() {
                assert_eq!(m.domain(w), m.domain(0));
            }
        }
        assert!(n > 0);
    }

    #[test]
    fn enumeration_respects_frame_flags() {
        for m in enumerate_models(&sig_p0(), &Bounds::new(2, 1), ModelClass::QBS4).unwrap() {
            assert!(validate_model(&m, ModelClass::QBS4).is_empty());
        }
        for m in enumerate_models(&sig_p0(), &Bounds::new(2, 1), ModelClass::QN4).unwrap() {
            assert!(validate_model(&m, ModelClass::QN4).is_empty());
        }
    }

    #[test]
    fn bounds_guard_refuses_huge_spaces() {
        let sig = Signature::new([("R".to_string(), 2)], []).unwrap();
        let bounds = Bounds::new(4, 3).with_cap(1000);
        assert!(matches!(
            enumerate_models(&sig, &bounds, ModelClass::QBK),
            Err(BoundsError::TooLarge { .. })
        ));
    }

    #[test]
    fn excluded_middle_fails_only_on_gapped_models() {
        let exc = or(atom0("p"), neg(atom0("p")));
        let found = search_countermodel(
            &sig_p0(),
            &[],
            &[exc.clone()],
            &Bounds::new(1, 1),
            ModelClass::QBK,
            1,
        )
        .unwrap();
        let hit = found.expect("a gap refutes excluded middle");
        // First in enumeration order: no access, domain {d0}, p valueless.
        assert_eq!(hit.model.access().len(), 0);
        assert!(hit.model.positive(0).is_empty());
        assert!(hit.model.negative(0).is_empty());
        assert_eq!(hit.world, 0);

        let none = search_countermodel(
            &sig_p0(),
            &[],
            &[exc],
            &Bounds::new(2, 2),
            ModelClass::QBK_O,
            1,
        )
        .unwrap();
        assert!(none.is_none(), "complete valuations verify excluded middle");
    }

    #[test]
    fn reflexive_frames_verify_t_axiom() {
        let t = imp(boxf(atom0("p")), atom0("p"));
        let none = search_countermodel(
            &sig_p0(),
            &[],
            &[t.clone()],
            &Bounds::new(2, 1),
            ModelClass::QBT,
            1,
        )
        .unwrap();
        assert!(none.is_none());
        // Without reflexivity the same bounds refute it.
        let found =
            search_countermodel(&sig_p0(), &[], &[t], &Bounds::new(2, 1), ModelClass::QBK, 1)
                .unwrap();
        assert!(found.is_some());
    }

    #[test]
    fn transitive_frames_verify_four_axiom() {
        let four = imp(boxf(atom0("p")), boxf(boxf(atom0("p"))));
        let none = search_countermodel(
            &sig_p0(),
            &[],
            &[four.clone()],
            &Bounds::new(3, 1),
            ModelClass::QBK4,
            1,
        )
        .unwrap();
        assert!(none.is_none());
        let found = search_countermodel(
            &sig_p0(),
            &[],
            &[four],
            &Bounds::new(3, 1),
            ModelClass::QBK,
            1,
        )
        .unwrap();
        assert!(found.is_some());
    }

    #[test]
    fn premises_constrain_the_search() {
        // From []p one cannot conclude p on arbitrary frames, but the
        // premise must hold at the witness world.
        let found = search_countermodel(
            &sig_p0(),
            &[boxf(atom0("p"))],
            &[atom0("p")],
            &Bounds::new(2, 1),
            ModelClass::QBK,
            1,
        )
        .unwrap()
        .expect("K frames do not validate T");
        let m = &found.model;
        assert!(evaluate(m, found.world, &boxf(atom0("p")), Polarity::Plus, &Env::new()).unwrap());
        assert!(!evaluate(m, found.world, &atom0("p"), Polarity::Plus, &Env::new()).unwrap());
    }

    #[test]
    fn open_conclusions_get_assignments() {
        // P(x) with free x: the witness must pick a value for x.
        let m = expanding_model();
        let witness = check_consequence_on_model(&m, &[], &[atom("P", vec![var("x")])])
            .unwrap()
            .expect("P is not verified of a at u");
        assert_eq!(witness.world, 0);
        assert_eq!(witness.assignment, BTreeMap::from([("x".to_string(), 0)]));
    }

    #[test]
    fn open_premises_are_rejected_by_search() {
        let err = search_countermodel(
            &sig_p1(),
            &[atom("P", vec![var("x")])],
            &[],
            &Bounds::new(1, 1),
            ModelClass::QBK,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, SearchError::OpenPremise(_)));
    }

    #[test]
    fn worker_count_does_not_change_the_witness() {
        let exc = or(atom0("p"), neg(atom0("p")));
        let a = search_countermodel(
            &sig_p0(),
            &[],
            &[exc.clone()],
            &Bounds::new(2, 1),
            ModelClass::QBK,
            1,
        )
        .unwrap()
        .unwrap();
        let b = search_countermodel(
            &sig_p0(),
            &[],
            &[exc],
            &Bounds::new(2, 1),
            ModelClass::QBK,
            3,
        )
        .unwrap()
        .unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.world, b.world);
    }

    #[test]
    fn preset_names_round_trip() {
        for name in [
            "qbk", "qbk-o", "qb3k", "qbt", "qbk4", "qbs4", "qb3s4", "qbk-sharp", "qn4", "qn3",
        ] {
            let class = ModelClass::from_preset_name(name).unwrap();
            assert_eq!(class.preset_name(), Some(name));
            assert_eq!(class.to_string(), name);
        }
        assert!(ModelClass::from_preset_name("qbz").is_none());
    }
}
