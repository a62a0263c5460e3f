//! Hilbert-style proof system: axiom-scheme matching, derivation checking,
//! a store of derived lemmas, and a constructive deduction-theorem
//! transform.
//!
//! The core system has 25 axiom schemes (classical propositional logic over
//! `&, |, ->, _|_`, strong-negation axioms, the K axioms, modal interaction
//! axioms, and quantifier axioms) plus the rules MP, MB, MD, BR1 and BR2.
//! Extension schemes (EXC, EXP, BA, BABOX) are gated by a [`Preset`].
//!
//! Derivations come in two modes. A theorem derivation has no hypotheses
//! and may use every rule. A consequence derivation proves its conclusion
//! from closed hypotheses using only MP, BR1 and BR2; the modal
//! monotonicity rules are confined to theorem mode, and theorems enter a
//! consequence derivation as axiom or lemma citations.
//!
//! Axioms stated with `<->` or `<=>` are matched against their full
//! desugared conjunction; the implication halves (and, for the strongly
//! stated ones, their negated halves) are exposed as derived scheme parts
//! (`SN1.lr`, `M3.nrl`, ...) so single directions can be cited in one line.
//!
//! Checking is a pure verification pass: no proof search happens anywhere.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::semantics::ModelClass;
use crate::syntax::{build, Formula, Signature, Term};

/// The named axiom schemes of the base system and its extensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[allow(missing_docs)]
pub enum BaseScheme {
    I1,
    I2,
    C1,
    C2,
    C3,
    D1,
    D2,
    D3,
    N1,
    N2,
    Sn1,
    Sn2,
    Sn3,
    Sn4,
    Sn5,
    K1,
    K2,
    M1,
    M2,
    M3,
    M4,
    Q1,
    Q2,
    Q3,
    Q4,
    Exc,
    Exp,
    Ba,
    BaBox,
}

impl BaseScheme {
    pub const ALL: [BaseScheme; 29] = [
        BaseScheme::I1,
        BaseScheme::I2,
        BaseScheme::C1,
        BaseScheme::C2,
        BaseScheme::C3,
        BaseScheme::D1,
        BaseScheme::D2,
        BaseScheme::D3,
        BaseScheme::N1,
        BaseScheme::N2,
        BaseScheme::Sn1,
        BaseScheme::Sn2,
        BaseScheme::Sn3,
        BaseScheme::Sn4,
        BaseScheme::Sn5,
        BaseScheme::K1,
        BaseScheme::K2,
        BaseScheme::M1,
        BaseScheme::M2,
        BaseScheme::M3,
        BaseScheme::M4,
        BaseScheme::Q1,
        BaseScheme::Q2,
        BaseScheme::Q3,
        BaseScheme::Q4,
        BaseScheme::Exc,
        BaseScheme::Exp,
        BaseScheme::Ba,
        BaseScheme::BaBox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseScheme::I1 => "I1",
            BaseScheme::I2 => "I2",
            BaseScheme::C1 => "C1",
            BaseScheme::C2 => "C2",
            BaseScheme::C3 => "C3",
            BaseScheme::D1 => "D1",
            BaseScheme::D2 => "D2",
            BaseScheme::D3 => "D3",
            BaseScheme::N1 => "N1",
            BaseScheme::N2 => "N2",
            BaseScheme::Sn1 => "SN1",
            BaseScheme::Sn2 => "SN2",
            BaseScheme::Sn3 => "SN3",
            BaseScheme::Sn4 => "SN4",
            BaseScheme::Sn5 => "SN5",
            BaseScheme::K1 => "K1",
            BaseScheme::K2 => "K2",
            BaseScheme::M1 => "M1",
            BaseScheme::M2 => "M2",
            BaseScheme::M3 => "M3",
            BaseScheme::M4 => "M4",
            BaseScheme::Q1 => "Q1",
            BaseScheme::Q2 => "Q2",
            BaseScheme::Q3 => "Q3",
            BaseScheme::Q4 => "Q4",
            BaseScheme::Exc => "EXC",
            BaseScheme::Exp => "EXP",
            BaseScheme::Ba => "BA",
            BaseScheme::BaBox => "BABOX",
        }
    }

    fn from_name(s: &str) -> Option<BaseScheme> {
        BaseScheme::ALL.iter().copied().find(|b| b.name() == s)
    }

    /// Extension schemes need the matching preset flag; the rest are core.
    pub fn is_extension(self) -> bool {
        matches!(
            self,
            BaseScheme::Exc | BaseScheme::Exp | BaseScheme::Ba | BaseScheme::BaBox
        )
    }
}

/// Which piece of a biconditional scheme is cited. `Whole` is the axiom as
/// stated; the others are derived one-line conveniences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Part {
    Whole,
    /// Left-to-right implication.
    Lr,
    /// Right-to-left implication.
    Rl,
    /// Left-to-right implication between the strong negations of the sides.
    Nlr,
    /// Right-to-left implication between the strong negations of the sides.
    Nrl,
}

impl Part {
    fn suffix(self) -> &'static str {
        match self {
            Part::Whole => "",
            Part::Lr => ".lr",
            Part::Rl => ".rl",
            Part::Nlr => ".nlr",
            Part::Nrl => ".nrl",
        }
    }
}

/// Name of a citable scheme: a base axiom (possibly a derived part of a
/// biconditional one) or an entry of the lemma store.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SchemeId {
    Axiom { base: BaseScheme, part: Part },
    Lemma(String),
}

impl SchemeId {
    pub fn axiom(base: BaseScheme) -> SchemeId {
        SchemeId::Axiom {
            base,
            part: Part::Whole,
        }
    }

    pub fn part(base: BaseScheme, part: Part) -> SchemeId {
        SchemeId::Axiom { base, part }
    }

    pub fn lemma(name: impl Into<String>) -> SchemeId {
        SchemeId::Lemma(name.into())
    }

    /// Parses "I1", "SN2.rl", "M3.nlr", "lemma.trans".
    pub fn parse(s: &str) -> Option<SchemeId> {
        if let Some(name) = s.strip_prefix("lemma.") {
            if name.is_empty() {
                return None;
            }
            return Some(SchemeId::Lemma(name.to_string()));
        }
        let (base_str, part) = match s.rsplit_once('.') {
            Some((b, "lr")) => (b, Part::Lr),
            Some((b, "rl")) => (b, Part::Rl),
            Some((b, "nlr")) => (b, Part::Nlr),
            Some((b, "nrl")) => (b, Part::Nrl),
            Some(_) => return None,
            None => (s, Part::Whole),
        };
        let base = BaseScheme::from_name(base_str)?;
        match part {
            Part::Whole => {}
            Part::Lr | Part::Rl => {
                scheme_sides(base)?;
            }
            Part::Nlr | Part::Nrl => {
                let (_, _, strong) = scheme_sides(base)?;
                if !strong {
                    return None;
                }
            }
        }
        Some(SchemeId::Axiom { base, part })
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeId::Axiom { base, part } => write!(f, "{}{}", base.name(), part.suffix()),
            SchemeId::Lemma(name) => write!(f, "lemma.{name}"),
        }
    }
}

/// Schematic formula over formula metavariables (rendered A, B, C) and one
/// bound-variable metavariable (rendered x).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Meta(u8),
    Bottom,
    And(std::boxed::Box<Pattern>, std::boxed::Box<Pattern>),
    Or(std::boxed::Box<Pattern>, std::boxed::Box<Pattern>),
    Imp(std::boxed::Box<Pattern>, std::boxed::Box<Pattern>),
    Neg(std::boxed::Box<Pattern>),
    Box(std::boxed::Box<Pattern>),
    Diamond(std::boxed::Box<Pattern>),
    Forall(u8, std::boxed::Box<Pattern>),
    Exists(u8, std::boxed::Box<Pattern>),
}

mod pat {
    use super::Pattern;

    pub fn m(i: u8) -> Pattern {
        Pattern::Meta(i)
    }

    pub fn bot() -> Pattern {
        Pattern::Bottom
    }

    pub fn and(l: Pattern, r: Pattern) -> Pattern {
        Pattern::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Pattern, r: Pattern) -> Pattern {
        Pattern::Or(Box::new(l), Box::new(r))
    }

    pub fn imp(l: Pattern, r: Pattern) -> Pattern {
        Pattern::Imp(Box::new(l), Box::new(r))
    }

    pub fn not(p: Pattern) -> Pattern {
        imp(p, bot())
    }

    pub fn neg(p: Pattern) -> Pattern {
        Pattern::Neg(Box::new(p))
    }

    pub fn boxp(p: Pattern) -> Pattern {
        Pattern::Box(Box::new(p))
    }

    pub fn dia(p: Pattern) -> Pattern {
        Pattern::Diamond(Box::new(p))
    }

    pub fn forall(v: u8, p: Pattern) -> Pattern {
        Pattern::Forall(v, Box::new(p))
    }

    pub fn exists(v: u8, p: Pattern) -> Pattern {
        Pattern::Exists(v, Box::new(p))
    }

    pub fn iff(l: Pattern, r: Pattern) -> Pattern {
        and(imp(l.clone(), r.clone()), imp(r, l))
    }

    pub fn siff(l: Pattern, r: Pattern) -> Pattern {
        and(iff(l.clone(), r.clone()), iff(neg(l), neg(r)))
    }
}

/// For biconditional schemes: (left side, right side, strongly stated).
/// Strongly stated ones also assert the equivalence of the strong
/// negations of the sides.
fn scheme_sides(base: BaseScheme) -> Option<(Pattern, Pattern, bool)> {
    use pat::*;
    Some(match base {
        BaseScheme::Sn1 => (neg(neg(m(0))), m(0), false),
        BaseScheme::Sn2 => (neg(imp(m(0), m(1))), and(m(0), neg(m(1))), false),
        BaseScheme::Sn3 => (neg(or(m(0), m(1))), and(neg(m(0)), neg(m(1))), false),
        BaseScheme::Sn4 => (neg(and(m(0), m(1))), or(neg(m(0)), neg(m(1))), false),
        BaseScheme::M1 => (not(boxp(m(0))), dia(not(m(0))), false),
        BaseScheme::M2 => (not(dia(m(0))), boxp(not(m(0))), false),
        BaseScheme::M3 => (boxp(m(0)), neg(dia(neg(m(0)))), true),
        BaseScheme::M4 => (dia(m(0)), neg(boxp(neg(m(0)))), true),
        BaseScheme::Q3 => (neg(forall(0, m(0))), exists(0, neg(m(0))), false),
        BaseScheme::Q4 => (neg(exists(0, m(0))), forall(0, neg(m(0))), false),
        _ => return None,
    })
}

/// The pattern a scheme part matches against, or `None` for Q1/Q2, whose
/// substitution shape needs the dedicated matcher.
pub fn scheme_pattern(base: BaseScheme, part: Part) -> Option<Pattern> {
    use pat::*;
    if let Some((l, r, strong)) = scheme_sides(base) {
        // Negated halves exist only for the strongly stated equivalences;
        // for the weak ones they are not semantic consequences.
        return match part {
            Part::Whole => Some(if strong { siff(l, r) } else { iff(l, r) }),
            Part::Lr => Some(imp(l, r)),
            Part::Rl => Some(imp(r, l)),
            Part::Nlr if strong => Some(imp(neg(l), neg(r))),
            Part::Nrl if strong => Some(imp(neg(r), neg(l))),
            Part::Nlr | Part::Nrl => None,
        };
    }
    if part != Part::Whole {
        return None;
    }
    Some(match base {
        BaseScheme::I1 => imp(m(0), imp(m(1), m(0))),
        BaseScheme::I2 => imp(
            imp(m(0), imp(m(1), m(2))),
            imp(imp(m(0), m(1)), imp(m(0), m(2))),
        ),
        BaseScheme::C1 => imp(and(m(0), m(1)), m(0)),
        BaseScheme::C2 => imp(and(m(0), m(1)), m(1)),
        BaseScheme::C3 => imp(m(0), imp(m(1), and(m(0), m(1)))),
        BaseScheme::D1 => imp(m(0), or(m(0), m(1))),
        BaseScheme::D2 => imp(m(1), or(m(0), m(1))),
        BaseScheme::D3 => imp(
            imp(m(0), m(2)),
            imp(imp(m(1), m(2)), imp(or(m(0), m(1)), m(2))),
        ),
        BaseScheme::N1 => or(m(0), imp(m(0), bot())),
        BaseScheme::N2 => imp(bot(), m(0)),
        BaseScheme::Sn5 => neg(bot()),
        BaseScheme::K1 => imp(and(boxp(m(0)), boxp(m(1))), boxp(and(m(0), m(1)))),
        BaseScheme::K2 => boxp(imp(m(0), m(0))),
        BaseScheme::Exc => or(m(0), neg(m(0))),
        BaseScheme::Exp => imp(neg(m(0)), imp(m(0), m(1))),
        BaseScheme::Ba => imp(dia(exists(0, m(0))), exists(0, dia(m(0)))),
        BaseScheme::BaBox => imp(forall(0, boxp(m(0))), boxp(forall(0, m(0)))),
        BaseScheme::Q1 | BaseScheme::Q2 => return None,
        _ => unreachable!("biconditional schemes handled above"),
    })
}

/// How a formula instantiates a scheme: formula metavariables, the binder
/// metavariable, and for Q1/Q2 the substituted term.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Instantiation {
    pub formulas: BTreeMap<u8, Formula>,
    pub vars: BTreeMap<u8, String>,
    pub term: Option<Term>,
}

impl fmt::Display for Instantiation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            Ok(())
        };
        for (i, formula) in &self.formulas {
            sep(f)?;
            let name = meta_name(*i);
            write!(f, "{name} := {formula}")?;
        }
        for (i, var) in &self.vars {
            sep(f)?;
            if *i == 0 {
                write!(f, "x := {var}")?;
            } else {
                write!(f, "x{i} := {var}")?;
            }
        }
        if let Some(t) = &self.term {
            sep(f)?;
            write!(f, "t := {t}")?;
        }
        Ok(())
    }
}

fn meta_name(i: u8) -> &'static str {
    match i {
        0 => "A",
        1 => "B",
        2 => "C",
        _ => "D",
    }
}

fn match_pattern(p: &Pattern, f: &Formula, inst: &mut Instantiation) -> bool {
    match (p, f) {
        (Pattern::Meta(i), _) => match inst.formulas.get(i) {
            Some(bound) => bound == f,
            None => {
                inst.formulas.insert(*i, f.clone());
                true
            }
        },
        (Pattern::Bottom, Formula::Bottom) => true,
        (Pattern::And(a, b), Formula::And(l, r))
        | (Pattern::Or(a, b), Formula::Or(l, r))
        | (Pattern::Imp(a, b), Formula::Imp(l, r)) => {
            match_pattern(a, l, inst) && match_pattern(b, r, inst)
        }
        (Pattern::Neg(a), Formula::Neg(g))
        | (Pattern::Box(a), Formula::Box(g))
        | (Pattern::Diamond(a), Formula::Diamond(g)) => match_pattern(a, g, inst),
        (Pattern::Forall(v, a), Formula::Forall(x, g))
        | (Pattern::Exists(v, a), Formula::Exists(x, g)) => {
            let var_ok = match inst.vars.get(v) {
                Some(bound) => bound == x,
                None => {
                    inst.vars.insert(*v, x.clone());
                    true
                }
            };
            var_ok && match_pattern(a, g, inst)
        }
        _ => false,
    }
}

/// Builds the formula a pattern denotes under a binding. `None` if the
/// binding misses a metavariable the pattern uses.
pub fn instantiate(p: &Pattern, inst: &Instantiation) -> Option<Formula> {
    Some(match p {
        Pattern::Meta(i) => inst.formulas.get(i)?.clone(),
        Pattern::Bottom => Formula::Bottom,
        Pattern::And(a, b) => build::and(instantiate(a, inst)?, instantiate(b, inst)?),
        Pattern::Or(a, b) => build::or(instantiate(a, inst)?, instantiate(b, inst)?),
        Pattern::Imp(a, b) => build::imp(instantiate(a, inst)?, instantiate(b, inst)?),
        Pattern::Neg(a) => build::neg(instantiate(a, inst)?),
        Pattern::Box(a) => build::boxf(instantiate(a, inst)?),
        Pattern::Diamond(a) => build::diamond(instantiate(a, inst)?),
        Pattern::Forall(v, a) => build::forall(inst.vars.get(v)?, instantiate(a, inst)?),
        Pattern::Exists(v, a) => build::exists(inst.vars.get(v)?, instantiate(a, inst)?),
    })
}

/// Finds the term `t` with `substitute_var(phi, x, t) == target`, requiring
/// `t` free for `x` in `phi`. Every free occurrence of `x` must map to the
/// same term; when `x` is not free in `phi`, `t := x` works trivially.
fn discover_substituted_term(phi: &Formula, x: &str, target: &Formula) -> Option<Term> {
    fn walk_term(a: &Term, b: &Term, x: &str, shadowed: bool, cand: &mut Option<Term>) -> bool {
        match a {
            Term::Var(v) if v == x && !shadowed => match cand {
                Some(c) => c == b,
                None => {
                    *cand = Some(b.clone());
                    true
                }
            },
            _ => a == b,
        }
    }
    fn walk(
        a: &Formula,
        b: &Formula,
        x: &str,
        shadowed: bool,
        cand: &mut Option<Term>,
    ) -> bool {
        match (a, b) {
            (Formula::Atom(p, args), Formula::Atom(q, brgs)) => {
                p == q
                    && args.len() == brgs.len()
                    && args
                        .iter()
                        .zip(brgs)
                        .all(|(s, t)| walk_term(s, t, x, shadowed, cand))
            }
            (Formula::Bottom, Formula::Bottom) => true,
            (Formula::And(l1, r1), Formula::And(l2, r2))
            | (Formula::Or(l1, r1), Formula::Or(l2, r2))
            | (Formula::Imp(l1, r1), Formula::Imp(l2, r2)) => {
                walk(l1, l2, x, shadowed, cand) && walk(r1, r2, x, shadowed, cand)
            }
            (Formula::Neg(g1), Formula::Neg(g2))
            | (Formula::Box(g1), Formula::Box(g2))
            | (Formula::Diamond(g1), Formula::Diamond(g2)) => walk(g1, g2, x, shadowed, cand),
            (Formula::Forall(y1, g1), Formula::Forall(y2, g2))
            | (Formula::Exists(y1, g1), Formula::Exists(y2, g2)) => {
                y1 == y2 && walk(g1, g2, x, shadowed || y1 == x, cand)
            }
            _ => false,
        }
    }
    let mut cand = None;
    if !walk(phi, target, x, false, &mut cand) {
        return None;
    }
    let t = cand.unwrap_or_else(|| Term::Var(x.to_string()));
    // The walk is a necessary shape check; substitution is the authority,
    // and it also rejects capturing terms.
    match crate::syntax::substitute_var(phi, x, &t) {
        Ok(result) if &result == target => Some(t),
        _ => None,
    }
}

fn match_q1(f: &Formula) -> Option<Instantiation> {
    let Formula::Imp(l, r) = f else { return None };
    let Formula::Forall(x, phi) = l.as_ref() else {
        return None;
    };
    let t = discover_substituted_term(phi, x, r)?;
    Some(Instantiation {
        formulas: BTreeMap::from([(0, phi.as_ref().clone())]),
        vars: BTreeMap::from([(0, x.clone())]),
        term: Some(t),
    })
}

fn match_q2(f: &Formula) -> Option<Instantiation> {
    let Formula::Imp(l, r) = f else { return None };
    let Formula::Exists(x, phi) = r.as_ref() else {
        return None;
    };
    let t = discover_substituted_term(phi, x, l)?;
    Some(Instantiation {
        formulas: BTreeMap::from([(0, phi.as_ref().clone())]),
        vars: BTreeMap::from([(0, x.clone())]),
        term: Some(t),
    })
}

/// Tries to read `f` as an instance of the scheme. A successful match
/// reproduces `f` verbatim when instantiated; `None` means no instantiation
/// exists. Lemma ids are resolved against `store`.
pub fn match_scheme(id: &SchemeId, f: &Formula, store: &LemmaStore) -> Option<Instantiation> {
    match id {
        SchemeId::Axiom {
            base: BaseScheme::Q1,
            part: Part::Whole,
        } => match_q1(f),
        SchemeId::Axiom {
            base: BaseScheme::Q2,
            part: Part::Whole,
        } => match_q2(f),
        SchemeId::Axiom { base, part } => {
            let pattern = scheme_pattern(*base, *part)?;
            let mut inst = Instantiation::default();
            match_pattern(&pattern, f, &mut inst).then_some(inst)
        }
        SchemeId::Lemma(name) => {
            let entry = store.get(name)?;
            let mut inst = Instantiation::default();
            match_pattern(&entry.pattern, f, &mut inst).then_some(inst)
        }
    }
}

/// Which extension schemes a derivation may cite. The core schemes are
/// always available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Preset {
    pub exc: bool,
    pub exp: bool,
    pub ba: bool,
    pub babox: bool,
}

impl Preset {
    /// Core system only.
    pub const QBK: Preset = Preset {
        exc: false,
        exp: false,
        ba: false,
        babox: false,
    };
    /// Adds excluded middle for strong negation.
    pub const QBK_O: Preset = Preset {
        exc: true,
        exp: false,
        ba: false,
        babox: false,
    };
    /// Adds explosion for strong negation.
    pub const QB3K: Preset = Preset {
        exc: false,
        exp: true,
        ba: false,
        babox: false,
    };
    /// Adds the diamond-over-exists permutation scheme.
    pub const QBK_SHARP: Preset = Preset {
        exc: false,
        exp: false,
        ba: true,
        babox: false,
    };
    /// Adds the forall-over-box permutation scheme instead.
    pub const QBK_SHARP_BOX: Preset = Preset {
        exc: false,
        exp: false,
        ba: false,
        babox: true,
    };

    pub fn allows(&self, base: BaseScheme) -> bool {
        match base {
            BaseScheme::Exc => self.exc,
            BaseScheme::Exp => self.exp,
            BaseScheme::Ba => self.ba,
            BaseScheme::BaBox => self.babox,
            _ => true,
        }
    }

    pub fn is_subset_of(&self, other: &Preset) -> bool {
        (!self.exc || other.exc)
            && (!self.exp || other.exp)
            && (!self.ba || other.ba)
            && (!self.babox || other.babox)
    }

    /// The model class over which this preset's derivations are sound:
    /// excluded middle needs complete atoms, explosion consistent atoms,
    /// and either permutation scheme constant domains.
    pub fn model_class(&self) -> ModelClass {
        ModelClass {
            atom_complete: self.exc,
            atom_consistent: self.exp,
            constant_domain: self.ba || self.babox,
            reflexive: false,
            transitive: false,
            hereditary: false,
        }
    }

    /// Parses "qbk", "qbk-o", "qb3k", "qbk-sharp", "qbk-sharp-box", or
    /// "qbk" followed by "+exc", "+exp", "+ba", "+babox" additions.
    pub fn parse(s: &str) -> Option<Preset> {
        match s {
            "qbk" => return Some(Preset::QBK),
            "qbk-o" => return Some(Preset::QBK_O),
            "qb3k" => return Some(Preset::QB3K),
            "qbk-sharp" => return Some(Preset::QBK_SHARP),
            "qbk-sharp-box" => return Some(Preset::QBK_SHARP_BOX),
            _ => {}
        }
        let rest = s.strip_prefix("qbk")?;
        let mut preset = Preset::QBK;
        for piece in rest.split('+') {
            match piece {
                "" => {}
                "exc" => preset.exc = true,
                "exp" => preset.exp = true,
                "ba" => preset.ba = true,
                "babox" => preset.babox = true,
                _ => return None,
            }
        }
        Some(preset)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Preset::QBK => f.write_str("qbk"),
            Preset::QBK_O => f.write_str("qbk-o"),
            Preset::QB3K => f.write_str("qb3k"),
            Preset::QBK_SHARP => f.write_str("qbk-sharp"),
            Preset::QBK_SHARP_BOX => f.write_str("qbk-sharp-box"),
            _ => {
                f.write_str("qbk")?;
                if self.exc {
                    f.write_str("+exc")?;
                }
                if self.exp {
                    f.write_str("+exp")?;
                }
                if self.ba {
                    f.write_str("+ba")?;
                }
                if self.babox {
                    f.write_str("+babox")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// No hypotheses; all rules available.
    Theorem,
    /// Closed hypotheses; only MP, BR1 and BR2 among the rules.
    Consequence,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Theorem => "theorem",
            Mode::Consequence => "consequence",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Axiom(SchemeId),
    Hyp(usize),
    Mp(usize, usize),
    Mb(usize),
    Md(usize),
    Br1(usize, String),
    Br2(usize, String),
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::Axiom(id) => write!(f, "axiom:{id}"),
            Justification::Hyp(k) => write!(f, "hyp:{k}"),
            Justification::Mp(i, j) => write!(f, "mp:{i},{j}"),
            Justification::Mb(i) => write!(f, "mb:{i}"),
            Justification::Md(i) => write!(f, "md:{i}"),
            Justification::Br1(i, x) => write!(f, "br1:{i},{x}"),
            Justification::Br2(i, x) => write!(f, "br2:{i},{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub formula: Formula,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub mode: Mode,
    pub preset: Preset,
    pub signature: Signature,
    /// Closed assumptions; only meaningful in consequence mode.
    pub hypotheses: Vec<Formula>,
    pub lines: Vec<Line>,
}

impl Derivation {
    pub fn conclusion(&self) -> Option<&Formula> {
        self.lines.last().map(|l| &l.formula)
    }
}

/// Verdict for one derivation line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineReport {
    pub index: usize,
    pub ok: bool,
    pub detail: String,
}

/// Result of checking a derivation: overall verdict, derivation-level
/// problems, and one diagnostic per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub valid: bool,
    pub problems: Vec<String>,
    pub lines: Vec<LineReport>,
}

/// Verifies a derivation line by line. Never panics on malformed input;
/// every defect becomes a diagnostic.
pub fn check_derivation(d: &Derivation, store: &LemmaStore) -> CheckReport {
    let mut problems = Vec::new();
    for (k, h) in d.hypotheses.iter().enumerate() {
        if let Err(e) = h.well_formed(&d.signature) {
            problems.push(format!("hypothesis {k} is ill-formed: {e}"));
        }
        if !h.is_sentence() {
            problems.push(format!("hypothesis {k} is not a sentence: {h}"));
        }
    }
    if d.mode == Mode::Theorem && !d.hypotheses.is_empty() {
        problems.push("a theorem derivation cannot have hypotheses".to_string());
    }
    let mut lines = Vec::with_capacity(d.lines.len());
    for (n, line) in d.lines.iter().enumerate() {
        let detail = check_line(d, n, line, store);
        match detail {
            Ok(ok_detail) => lines.push(LineReport {
                index: n,
                ok: true,
                detail: ok_detail,
            }),
            Err(err_detail) => lines.push(LineReport {
                index: n,
                ok: false,
                detail: err_detail,
            }),
        }
    }
    let valid =
        problems.is_empty() && !d.lines.is_empty() && lines.iter().all(|l| l.ok);
    if d.lines.is_empty() {
        problems.push("derivation has no lines".to_string());
    }
    CheckReport {
        valid,
        problems,
        lines,
    }
}

fn earlier<'d>(d: &'d Derivation, n: usize, i: usize) -> Result<&'d Formula, String> {
    if i >= n {
        return Err(format!(
            "cites line {i}, which is not strictly earlier than line {n}"
        ));
    }
    Ok(&d.lines[i].formula)
}

fn check_line(
    d: &Derivation,
    n: usize,
    line: &Line,
    store: &LemmaStore,
) -> Result<String, String> {
    if let Err(e) = line.formula.well_formed(&d.signature) {
        return Err(format!("formula is ill-formed: {e}"));
    }
    let f = &line.formula;
    match &line.justification {
        Justification::Axiom(id) => {
            if let SchemeId::Axiom { base, part } = id {
                if scheme_pattern(*base, *part).is_none()
                    && !matches!(
                        (base, part),
                        (BaseScheme::Q1 | BaseScheme::Q2, Part::Whole)
                    )
                {
                    return Err(format!("scheme {id} does not exist"));
                }
                if !d.preset.allows(*base) {
                    return Err(format!(
                        "scheme {} is not enabled by preset {}",
                        base.name(),
                        d.preset
                    ));
                }
            }
            if let SchemeId::Lemma(name) = id {
                if store.get(name).is_none() {
                    return Err(format!("unknown lemma `{name}`"));
                }
            }
            match match_scheme(id, f, store) {
                Some(inst) => Ok(format!("{id} with {inst}")),
                None => Err(format!("formula is not an instance of {id}")),
            }
        }
        Justification::Hyp(k) => {
            if d.mode == Mode::Theorem {
                return Err("hypothesis lines are not allowed in theorem mode".to_string());
            }
            let h = d
                .hypotheses
                .get(*k)
                .ok_or_else(|| format!("no hypothesis with index {k}"))?;
            if h == f {
                Ok(format!("hypothesis {k}"))
            } else {
                Err(format!("formula differs from hypothesis {k}: {h}"))
            }
        }
        Justification::Mp(i, j) => {
            let a = earlier(d, n, *i)?;
            let b = earlier(d, n, *j)?;
            match b {
                Formula::Imp(l, r) if l.as_ref() == a && r.as_ref() == f => {
                    Ok(format!("modus ponens from lines {i} and {j}"))
                }
                _ => Err(format!(
                    "line {j} is not the implication from line {i} to this formula"
                )),
            }
        }
        Justification::Mb(i) | Justification::Md(i) => {
            let boxed = matches!(line.justification, Justification::Mb(_));
            if d.mode == Mode::Consequence {
                return Err(
                    "modal monotonicity rules are not allowed in consequence mode".to_string(),
                );
            }
            let prem = earlier(d, n, *i)?;
            let Formula::Imp(a, b) = prem else {
                return Err(format!("line {i} is not an implication"));
            };
            let expected = if boxed {
                build::imp(build::boxf(a.as_ref().clone()), build::boxf(b.as_ref().clone()))
            } else {
                build::imp(
                    build::diamond(a.as_ref().clone()),
                    build::diamond(b.as_ref().clone()),
                )
            };
            if *f == expected {
                Ok(format!(
                    "monotonicity under {} from line {i}",
                    if boxed { "[]" } else { "<>" }
                ))
            } else {
                Err(format!(
                    "formula is not line {i} with both sides under {}",
                    if boxed { "[]" } else { "<>" }
                ))
            }
        }
        Justification::Br1(i, x) => {
            let prem = earlier(d, n, *i)?;
            let Formula::Imp(a, b) = prem else {
                return Err(format!("line {i} is not an implication"));
            };
            let expected = build::imp(
                a.as_ref().clone(),
                build::forall(x, b.as_ref().clone()),
            );
            if *f != expected {
                return Err(format!(
                    "formula is not line {i} with the consequent generalized over {x}"
                ));
            }
            if a.has_free(x) {
                return Err(format!(
                    "side condition violated: {x} occurs free in the antecedent {a}"
                ));
            }
            Ok(format!("generalization of the consequent over {x} from line {i}"))
        }
        Justification::Br2(i, x) => {
            let prem = earlier(d, n, *i)?;
            let Formula::Imp(a, b) = prem else {
                return Err(format!("line {i} is not an implication"));
            };
            let expected = build::imp(
                build::exists(x, a.as_ref().clone()),
                b.as_ref().clone(),
            );
            if *f != expected {
                return Err(format!(
                    "formula is not line {i} with the antecedent bound by exists {x}"
                ));
            }
            if b.has_free(x) {
                return Err(format!(
                    "side condition violated: {x} occurs free in the consequent {b}"
                ));
            }
            Ok(format!(
                "existential introduction on the antecedent over {x} from line {i}"
            ))
        }
    }
}

/// Right-nested disjunction of the list; the empty disjunction is `_|_`.
pub fn build_disjunction(formulas: &[Formula]) -> Formula {
    match formulas.split_first() {
        None => Formula::Bottom,
        Some((f, [])) => f.clone(),
        Some((f, rest)) => build::or(f.clone(), build_disjunction(rest)),
    }
}

/// A named derived scheme: its pattern, a printable statement, and either
/// a representative derivation establishing it or a trusted marker.
#[derive(Debug, Clone)]
pub struct LemmaEntry {
    pub pattern: Pattern,
    pub statement: String,
    pub backing: LemmaBacking,
}

#[derive(Debug, Clone)]
pub enum LemmaBacking {
    /// Theorem-mode derivation of a representative instance, checked by the
    /// test suite.
    Template(Derivation),
    /// Shipped as a statement; validity is covered by the semantic tests.
    Trusted,
}

/// Store of derived schemes citable as `lemma.<name>` axiom lines.
#[derive(Debug, Clone, Default)]
pub struct LemmaStore {
    entries: BTreeMap<String, LemmaEntry>,
}

impl LemmaStore {
    pub fn empty() -> Self {
        LemmaStore::default()
    }

    pub fn get(&self, name: &str) -> Option<&LemmaEntry> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &LemmaEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn insert(&mut self, name: &str, pattern: Pattern, backing: LemmaBacking) {
        let statement = render_pattern(&pattern);
        self.entries.insert(
            name.to_string(),
            LemmaEntry {
                pattern,
                statement,
                backing,
            },
        );
    }

    /// The standard store. Propositional entries carry template derivations
    /// generated from small consequence derivations via the deduction
    /// transform; quantifier entries carry hand-written templates; the two
    /// replacement equivalences are trusted statements.
    pub fn standard() -> Self {
        let mut store = LemmaStore::empty();
        build_standard_store(&mut store);
        store
    }
}

/// Renders a pattern using placeholder atoms A, B, C and binder variable x.
fn render_pattern(p: &Pattern) -> String {
    let mut inst = Instantiation::default();
    for i in 0..3 {
        inst.formulas
            .insert(i, build::atom0(meta_name(i)));
    }
    inst.vars.insert(0, "x".to_string());
    match instantiate(p, &inst) {
        Some(f) => f.to_string(),
        None => "<unrenderable>".to_string(),
    }
}

/// Placeholder signature for lemma templates: three nullary atoms for the
/// propositional entries and one unary atom for the quantified ones.
fn template_signature() -> Signature {
    Signature::new(
        [
            ("A".to_string(), 0),
            ("B".to_string(), 0),
            ("C".to_string(), 0),
            ("P".to_string(), 1),
        ],
        [],
    )
    .expect("placeholder signature is well formed")
}

/// Incremental builder used for fixtures and lemma templates. Rule methods
/// compute the resulting formula from the cited lines, so a slip becomes a
/// checker failure rather than a silent divergence.
pub struct DerivationBuilder {
    derivation: Derivation,
}

impl DerivationBuilder {
    pub fn theorem(signature: Signature, preset: Preset) -> Self {
        DerivationBuilder {
            derivation: Derivation {
                mode: Mode::Theorem,
                preset,
                signature,
                hypotheses: Vec::new(),
                lines: Vec::new(),
            },
        }
    }

    pub fn consequence(
        signature: Signature,
        preset: Preset,
        hypotheses: Vec<Formula>,
    ) -> Self {
        DerivationBuilder {
            derivation: Derivation {
                mode: Mode::Consequence,
                preset,
                signature,
                hypotheses,
                lines: Vec::new(),
            },
        }
    }

    fn push(&mut self, formula: Formula, justification: Justification) -> usize {
        self.derivation.lines.push(Line {
            formula,
            justification,
        });
        self.derivation.lines.len() - 1
    }

    fn formula(&self, i: usize) -> &Formula {
        &self.derivation.lines[i].formula
    }

    pub fn axiom(&mut self, id: SchemeId, instance: Formula) -> usize {
        self.push(instance, Justification::Axiom(id))
    }

    pub fn hyp(&mut self, k: usize) -> usize {
        let f = self.derivation.hypotheses[k].clone();
        self.push(f, Justification::Hyp(k))
    }

    pub fn mp(&mut self, premise: usize, implication: usize) -> usize {
        let Formula::Imp(l, r) = self.formula(implication) else {
            panic!("mp cites a non-implication line");
        };
        assert_eq!(
            l.as_ref(),
            self.formula(premise),
            "mp premise does not match the antecedent"
        );
        let conclusion = r.as_ref().clone();
        self.push(conclusion, Justification::Mp(premise, implication))
    }

    pub fn mb(&mut self, i: usize) -> usize {
        let Formula::Imp(a, b) = self.formula(i) else {
            panic!("mb cites a non-implication line");
        };
        let f = build::imp(build::boxf(a.as_ref().clone()), build::boxf(b.as_ref().clone()));
        self.push(f, Justification::Mb(i))
    }

    pub fn md(&mut self, i: usize) -> usize {
        let Formula::Imp(a, b) = self.formula(i) else {
            panic!("md cites a non-implication line");
        };
        let f = build::imp(
            build::diamond(a.as_ref().clone()),
            build::diamond(b.as_ref().clone()),
        );
        self.push(f, Justification::Md(i))
    }

    pub fn br1(&mut self, i: usize, x: &str) -> usize {
        let Formula::Imp(a, b) = self.formula(i) else {
            panic!("br1 cites a non-implication line");
        };
        let f = build::imp(a.as_ref().clone(), build::forall(x, b.as_ref().clone()));
        self.push(f, Justification::Br1(i, x.to_string()))
    }

    pub fn br2(&mut self, i: usize, x: &str) -> usize {
        let Formula::Imp(a, b) = self.formula(i) else {
            panic!("br2 cites a non-implication line");
        };
        let f = build::imp(build::exists(x, a.as_ref().clone()), b.as_ref().clone());
        self.push(f, Justification::Br2(i, x.to_string()))
    }

    /// Composes lines `i: A -> B` and `j: B -> C` into `A -> C` with the
    /// transitivity lemma and two uses of modus ponens.
    pub fn trans(&mut self, i: usize, j: usize) -> usize {
        let (Formula::Imp(a, b1), Formula::Imp(b2, c)) = (self.formula(i), self.formula(j))
        else {
            panic!("trans cites non-implication lines");
        };
        assert_eq!(b1, b2, "trans lines do not chain");
        let (a, b, c) = (a.as_ref().clone(), b1.as_ref().clone(), c.as_ref().clone());
        let step = build::imp(
            build::imp(a.clone(), b.clone()),
            build::imp(
                build::imp(b.clone(), c.clone()),
                build::imp(a.clone(), c.clone()),
            ),
        );
        let t = self.axiom(SchemeId::lemma("trans"), step);
        let u = self.mp(i, t);
        self.mp(j, u)
    }

    /// From line `i: A -> B`, derives `forall x. A -> forall x. B`.
    pub fn all_mono(&mut self, i: usize, x: &str) -> usize {
        let Formula::Imp(a, _) = self.formula(i) else {
            panic!("all_mono cites a non-implication line");
        };
        let a = a.as_ref().clone();
        let q = self.axiom(
            SchemeId::axiom(BaseScheme::Q1),
            build::imp(build::forall(x, a.clone()), a),
        );
        let t = self.trans(q, i);
        self.br1(t, x)
    }

    pub fn finish(self) -> Derivation {
        self.derivation
    }
}

/// Failure to apply the deduction-theorem transform.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("the deduction transform applies to consequence derivations only")]
    NotConsequenceMode,
    #[error("no hypothesis with index {0}")]
    NoSuchHypothesis(usize),
    #[error("input derivation does not check: {0}")]
    InvalidInput(String),
}

/// Rewrites a consequence derivation of `C` from hypotheses including `H`
/// (the one at `hyp_index`) into a consequence derivation of `H -> C` from
/// the remaining hypotheses.
///
/// Every original line `L` becomes lines concluding `H -> L`: axiom and
/// other-hypothesis lines via I1 and modus ponens, the `H` line via the
/// identity lemma, modus ponens lines via I2, and the Bernays rules by
/// rebuilding the step through the conjunction and permutation lemmas,
/// which is sound because hypotheses are closed.
pub fn deduction_transform(
    d: &Derivation,
    hyp_index: usize,
    store: &LemmaStore,
) -> Result<Derivation, TransformError> {
    if d.mode != Mode::Consequence {
        return Err(TransformError::NotConsequenceMode);
    }
    if hyp_index >= d.hypotheses.len() {
        return Err(TransformError::NoSuchHypothesis(hyp_index));
    }
    let report = check_derivation(d, store);
    if !report.valid {
        let why = report
            .problems
            .first()
            .cloned()
            .or_else(|| {
                report
                    .lines
                    .iter()
                    .find(|l| !l.ok)
                    .map(|l| format!("line {}: {}", l.index, l.detail))
            })
            .unwrap_or_else(|| "empty derivation".to_string());
        return Err(TransformError::InvalidInput(why));
    }
    let phi = d.hypotheses[hyp_index].clone();
    let mut hypotheses = d.hypotheses.clone();
    hypotheses.remove(hyp_index);
    let mut b = DerivationBuilder::consequence(d.signature.clone(), d.preset, hypotheses);
    // Index of the `H -> L` line for each original line.
    let mut image = Vec::with_capacity(d.lines.len());
    for line in &d.lines {
        let l = line.formula.clone();
        let target_imp = build::imp(phi.clone(), l.clone());
        let new_index = match &line.justification {
            Justification::Hyp(k) if *k == hyp_index => {
                b.axiom(SchemeId::lemma("id"), target_imp.clone())
            }
            Justification::Hyp(k) => {
                let nk = if *k > hyp_index { *k - 1 } else { *k };
                let src = b.hyp(nk);
                let i1 = b.axiom(
                    SchemeId::axiom(BaseScheme::I1),
                    build::imp(l.clone(), target_imp.clone()),
                );
                b.mp(src, i1)
            }
            Justification::Axiom(id) => {
                let src = b.axiom(id.clone(), l.clone());
                let i1 = b.axiom(
                    SchemeId::axiom(BaseScheme::I1),
                    build::imp(l.clone(), target_imp.clone()),
                );
                b.mp(src, i1)
            }
            Justification::Mp(i, j) => {
                // image(j): H -> (A -> L); I2 turns it into
                // (H -> A) -> (H -> L), closed by image(i): H -> A.
                let hj = image[*j];
                let hi = image[*i];
                let Formula::Imp(_, al) = b.formula(hj).clone() else {
                    unreachable!("image lines are implications from the hypothesis");
                };
                let i2 = b.axiom(
                    SchemeId::axiom(BaseScheme::I2),
                    build::imp(
                        build::imp(phi.clone(), al.as_ref().clone()),
                        build::imp(
                            build::imp(phi.clone(), peel_antecedent(&al)),
                            target_imp.clone(),
                        ),
                    ),
                );
                let step = b.mp(hj, i2);
                b.mp(hi, step)
            }
            Justification::Br1(i, x) => {
                // H -> (A -> B)  =>  (H & A) -> B  =>  (H & A) -> forall B
                // =>  H -> (A -> forall B); x stays out of H & A because H
                // is a sentence.
                let hi = image[*i];
                let Formula::Imp(_, ab) = b.formula(hi).clone() else {
                    unreachable!();
                };
                let exp = b.axiom(
                    SchemeId::lemma("exp"),
                    build::imp(
                        b.formula(hi).clone(),
                        build::imp(
                            build::and(phi.clone(), peel_antecedent(&ab)),
                            peel_consequent(&ab),
                        ),
                    ),
                );
                let conj = b.mp(hi, exp);
                let gen = b.br1(conj, x);
                let imp = b.axiom(
                    SchemeId::lemma("imp"),
                    build::imp(b.formula(gen).clone(), target_imp.clone()),
                );
                b.mp(gen, imp)
            }
            Justification::Br2(i, x) => {
                // H -> (A -> B)  =>  A -> (H -> B)  =>  exists A -> (H -> B)
                // =>  H -> (exists A -> B); x stays out of H -> B.
                let hi = image[*i];
                let Formula::Imp(_, ab) = b.formula(hi).clone() else {
                    unreachable!();
                };
                let swap1 = b.axiom(
                    SchemeId::lemma("swap"),
                    build::imp(
                        b.formula(hi).clone(),
                        build::imp(
                            peel_antecedent(&ab),
                            build::imp(phi.clone(), peel_consequent(&ab)),
                        ),
                    ),
                );
                let swapped = b.mp(hi, swap1);
                let gen = b.br2(swapped, x);
                let swap2 = b.axiom(
                    SchemeId::lemma("swap"),
                    build::imp(b.formula(gen).clone(), target_imp.clone()),
                );
                b.mp(gen, swap2)
            }
            Justification::Mb(_) | Justification::Md(_) => {
                unreachable!("valid consequence derivations have no modal rule lines")
            }
        };
        debug_assert_eq!(b.formula(new_index), &target_imp);
        image.push(new_index);
    }
    Ok(b.finish())
}

fn peel_antecedent(f: &Formula) -> Formula {
    match f {
        Formula::Imp(a, _) => a.as_ref().clone(),
        _ => unreachable!("expected an implication"),
    }
}

fn peel_consequent(f: &Formula) -> Formula {
    match f {
        Formula::Imp(_, b) => b.as_ref().clone(),
        _ => unreachable!("expected an implication"),
    }
}

fn build_standard_store(store: &mut LemmaStore) {
    use pat::*;
    let sig = template_signature();
    let (fa, fb, fc) = (build::atom0("A"), build::atom0("B"), build::atom0("C"));
    let px = build::atom("P", vec![build::var("x")]);

    // id: A -> A, the classic five lines from I1 and I2.
    {
        let mut b = DerivationBuilder::theorem(sig.clone(), Preset::QBK);
        let aa = build::imp(fa.clone(), fa.clone());
        let i2 = b.axiom(
            SchemeId::axiom(BaseScheme::I2),
            build::imp(
                build::imp(fa.clone(), build::imp(aa.clone(), fa.clone())),
                build::imp(build::imp(fa.clone(), aa.clone()), aa.clone()),
            ),
        );
        let i1a = b.axiom(
            SchemeId::axiom(BaseScheme::I1),
            build::imp(fa.clone(), build::imp(aa.clone(), fa.clone())),
        );
        let step = b.mp(i1a, i2);
        let i1b = b.axiom(SchemeId::axiom(BaseScheme::I1), build::imp(fa.clone(), aa));
        b.mp(i1b, step);
        store.insert(
            "id",
            imp(m(0), m(0)),
            LemmaBacking::Template(b.finish()),
        );
    }

    // The remaining propositional lemmas are produced by peeling the
    // hypotheses of small consequence derivations.
    let peel_all = |mut d: Derivation, store: &LemmaStore| -> Derivation {
        while !d.hypotheses.is_empty() {
            let last = d.hypotheses.len() - 1;
            d = deduction_transform(&d, last, store)
                .expect("store template derivations transform cleanly");
        }
        d.mode = Mode::Theorem;
        d
    };

    // trans: (A -> B) -> ((B -> C) -> (A -> C)).
    {
        let hyps = vec![
            build::imp(fa.clone(), fb.clone()),
            build::imp(fb.clone(), fc.clone()),
            fa.clone(),
        ];
        let mut b = DerivationBuilder::consequence(sig.clone(), Preset::QBK, hyps);
        let ha = b.hyp(2);
        let hab = b.hyp(0);
        let got_b = b.mp(ha, hab);
        let hbc = b.hyp(1);
        b.mp(got_b, hbc);
        store.insert(
            "trans",
            imp(
                imp(m(0), m(1)),
                imp(imp(m(1), m(2)), imp(m(0), m(2))),
            ),
            LemmaBacking::Template(peel_all(b.finish(), store)),
        );
    }

    // swap: (A -> (B -> C)) -> (B -> (A -> C)).
    {
        let hyps = vec![
            build::imp(fa.clone(), build::imp(fb.clone(), fc.clone())),
            fb.clone(),
            fa.clone(),
        ];
        let mut b = DerivationBuilder::consequence(sig.clone(), Preset::QBK, hyps);
        let ha = b.hyp(2);
        let habc = b.hyp(0);
        let bc = b.mp(ha, habc);
        let hb = b.hyp(1);
        b.mp(hb, bc);
        store.insert(
            "swap",
            imp(imp(m(0), imp(m(1), m(2))), imp(m(1), imp(m(0), m(2)))),
            LemmaBacking::Template(peel_all(b.finish(), store)),
        );
    }

    // exp: (A -> (B -> C)) -> ((A & B) -> C).
    {
        let conj = build::and(fa.clone(), fb.clone());
        let hyps = vec![
            build::imp(fa.clone(), build::imp(fb.clone(), fc.clone())),
            conj.clone(),
        ];
        let mut b = DerivationBuilder::consequence(sig.clone(), Preset::QBK, hyps);
        let hconj = b.hyp(1);
        let c1 = b.axiom(
            SchemeId::axiom(BaseScheme::C1),
            build::imp(conj.clone(), fa.clone()),
        );
        let got_a = b.mp(hconj, c1);
        let c2 = b.axiom(
            SchemeId::axiom(BaseScheme::C2),
            build::imp(conj.clone(), fb.clone()),
        );
        let got_b = b.mp(hconj, c2);
        let habc = b.hyp(0);
        let bc = b.mp(got_a, habc);
        b.mp(got_b, bc);
        store.insert(
            "exp",
            imp(imp(m(0), imp(m(1), m(2))), imp(and(m(0), m(1)), m(2))),
            LemmaBacking::Template(peel_all(b.finish(), store)),
        );
    }

    // imp: ((A & B) -> C) -> (A -> (B -> C)).
    {
        let conj = build::and(fa.clone(), fb.clone());
        let hyps = vec![
            build::imp(conj.clone(), fc.clone()),
            fa.clone(),
            fb.clone(),
        ];
        let mut b = DerivationBuilder::consequence(sig.clone(), Preset::QBK, hyps);
        let ha = b.hyp(1);
        let c3 = b.axiom(
            SchemeId::axiom(BaseScheme::C3),
            build::imp(fa.clone(), build::imp(fb.clone(), conj.clone())),
        );
        let b_to_conj = b.mp(ha, c3);
        let hb = b.hyp(2);
        let got_conj = b.mp(hb, b_to_conj);
        let hc = b.hyp(0);
        b.mp(got_conj, hc);
        store.insert(
            "imp",
            imp(imp(and(m(0), m(1)), m(2)), imp(m(0), imp(m(1), m(2)))),
            LemmaBacking::Template(peel_all(b.finish(), store)),
        );
    }

    // contrapose: (A -> B) -> (!B -> !A).
    {
        let hyps = vec![
            build::imp(fa.clone(), fb.clone()),
            build::not(fb.clone()),
            fa.clone(),
        ];
        let mut b = DerivationBuilder::consequence(sig.clone(), Preset::QBK, hyps);
        let ha = b.hyp(2);
        let hab = b.hyp(0);
        let got_b = b.mp(ha, hab);
        let hnb = b.hyp(1);
        b.mp(got_b, hnb);
        store.insert(
            "contrapose",
            imp(imp(m(0), m(1)), imp(not(m(1)), not(m(0)))),
            LemmaBacking::Template(peel_all(b.finish(), store)),
        );
    }

    // dni: A -> !!A.
    {
        let hyps = vec![fa.clone(), build::not(fa.clone())];
        let mut b = DerivationBuilder::consequence(sig.clone(), Preset::QBK, hyps);
        let ha = b.hyp(0);
        let hna = b.hyp(1);
        b.mp(ha, hna);
        store.insert(
            "dni",
            imp(m(0), not(not(m(0)))),
            LemmaBacking::Template(peel_all(b.finish(), store)),
        );
    }

    // dne: !!A -> A, via case analysis on A | !A.
    {
        let nna = build::not(build::not(fa.clone()));
        let hyps = vec![nna.clone()];
        let mut b = DerivationBuilder::consequence(sig.clone(), Preset::QBK, hyps);
        let hnna = b.hyp(0);
        let n2 = b.axiom(
            SchemeId::axiom(BaseScheme::N2),
            build::imp(Formula::Bottom, fa.clone()),
        );
        let tr = b.axiom(
            SchemeId::lemma("trans"),
            build::imp(
                nna.clone(),
                build::imp(
                    build::imp(Formula::Bottom, fa.clone()),
                    build::imp(build::not(fa.clone()), fa.clone()),
                ),
            ),
        );
        let s1 = b.mp(hnna, tr);
        let na_to_a = b.mp(n2, s1);
        let ida = b.axiom(
            SchemeId::lemma("id"),
            build::imp(fa.clone(), fa.clone()),
        );
        let n1 = b.axiom(
            SchemeId::axiom(BaseScheme::N1),
            build::or(fa.clone(), build::not(fa.clone())),
        );
        let d3 = b.axiom(
            SchemeId::axiom(BaseScheme::D3),
            build::imp(
                build::imp(fa.clone(), fa.clone()),
                build::imp(
                    build::imp(build::not(fa.clone()), fa.clone()),
                    build::imp(
                        build::or(fa.clone(), build::not(fa.clone())),
                        fa.clone(),
                    ),
                ),
            ),
        );
        let s2 = b.mp(ida, d3);
        let s3 = b.mp(na_to_a, s2);
        b.mp(n1, s3);
        store.insert(
            "dne",
            imp(not(not(m(0))), m(0)),
            LemmaBacking::Template(peel_all(b.finish(), store)),
        );
    }

    // not-exists: !(exists x. A) -> forall x. !A.
    {
        let mut b = DerivationBuilder::theorem(sig.clone(), Preset::QBK);
        let ex = build::exists("x", px.clone());
        let q2 = b.axiom(
            SchemeId::axiom(BaseScheme::Q2),
            build::imp(px.clone(), ex.clone()),
        );
        let cp = b.axiom(
            SchemeId::lemma("contrapose"),
            build::imp(
                b.formula(q2).clone(),
                build::imp(build::not(ex.clone()), build::not(px.clone())),
            ),
        );
        let step = b.mp(q2, cp);
        b.br1(step, "x");
        store.insert(
            "not-exists",
            imp(not(exists(0, m(0))), forall(0, not(m(0)))),
            LemmaBacking::Template(b.finish()),
        );
    }

    // all-not: (forall x. !A) -> !(exists x. A).
    {
        let mut b = DerivationBuilder::theorem(sig.clone(), Preset::QBK);
        let all_not = build::forall("x", build::not(px.clone()));
        let q1 = b.axiom(
            SchemeId::axiom(BaseScheme::Q1),
            build::imp(all_not.clone(), build::not(px.clone())),
        );
        let sw1 = b.axiom(
            SchemeId::lemma("swap"),
            build::imp(
                b.formula(q1).clone(),
                build::imp(px.clone(), build::not(all_not.clone())),
            ),
        );
        let s1 = b.mp(q1, sw1);
        let s2 = b.br2(s1, "x");
        let sw2 = b.axiom(
            SchemeId::lemma("swap"),
            build::imp(
                b.formula(s2).clone(),
                build::imp(
                    all_not.clone(),
                    build::not(build::exists("x", px.clone())),
                ),
            ),
        );
        b.mp(s2, sw2);
        store.insert(
            "all-not",
            imp(forall(0, not(m(0))), not(exists(0, m(0)))),
            LemmaBacking::Template(b.finish()),
        );
    }

    // cb: (exists x. <>A) -> <>(exists x. A).
    {
        let mut b = DerivationBuilder::theorem(sig.clone(), Preset::QBK);
        let q2 = b.axiom(
            SchemeId::axiom(BaseScheme::Q2),
            build::imp(px.clone(), build::exists("x", px.clone())),
        );
        let md = b.md(q2);
        b.br2(md, "x");
        store.insert(
            "cb",
            imp(exists(0, dia(m(0))), dia(exists(0, m(0)))),
            LemmaBacking::Template(b.finish()),
        );
    }

    // cb-box: [](forall x. A) -> forall x. []A.
    {
        let mut b = DerivationBuilder::theorem(sig.clone(), Preset::QBK);
        let q1 = b.axiom(
            SchemeId::axiom(BaseScheme::Q1),
            build::imp(build::forall("x", px.clone()), px.clone()),
        );
        let mb = b.mb(q1);
        b.br1(mb, "x");
        store.insert(
            "cb-box",
            imp(boxp(forall(0, m(0))), forall(0, boxp(m(0)))),
            LemmaBacking::Template(b.finish()),
        );
    }

    // Replacement equivalences shipped as statements: double weak negation
    // agrees with strong negation of a weak negation, and implication
    // agrees with its disjunctive form, both strongly.
    store.insert(
        "dneg-link",
        siff(not(not(m(0))), neg(not(m(0)))),
        LemmaBacking::Trusted,
    );
    store.insert(
        "imp-or",
        siff(imp(m(0), m(1)), or(not(m(0)), m(1))),
        LemmaBacking::Trusted,
    );
}

/// Three-line derivation of the converse permutation: from an instance of
/// the existential axiom, monotonicity under `<>`, then binding the
/// antecedent.
pub fn fixture_converse_barcan() -> Derivation {
    let sig = Signature::new([("P".to_string(), 1)], []).unwrap();
    let px = build::atom("P", vec![build::var("x")]);
    let mut b = DerivationBuilder::theorem(sig, Preset::QBK);
    let q2 = b.axiom(
        SchemeId::axiom(BaseScheme::Q2),
        build::imp(px.clone(), build::exists("x", px.clone())),
    );
    let md = b.md(q2);
    b.br2(md, "x");
    b.finish()
}

/// Six-line derivation showing how a theorem acquires a box: the theorem,
/// an I1 instance, K2, monotonicity, and two uses of modus ponens.
pub fn fixture_necessitation() -> Derivation {
    let sig = Signature::new([("p".to_string(), 0)], []).unwrap();
    let p = build::atom0("p");
    let phi = build::imp(p.clone(), p.clone());
    let mut b = DerivationBuilder::theorem(sig, Preset::QBK);
    let theorem = b.axiom(SchemeId::lemma("id"), phi.clone());
    let i1 = b.axiom(
        SchemeId::axiom(BaseScheme::I1),
        build::imp(
            phi.clone(),
            build::imp(build::imp(phi.clone(), phi.clone()), phi.clone()),
        ),
    );
    let peeled = b.mp(theorem, i1);
    let k2 = b.axiom(
        SchemeId::axiom(BaseScheme::K2),
        build::boxf(build::imp(phi.clone(), phi.clone())),
    );
    let mb = b.mb(peeled);
    b.mp(k2, mb);
    b.finish()
}

/// Derivation of the forall-over-box permutation from the diamond-over-
/// exists scheme, following the nine-milestone route through weak negation:
/// instantiate the scheme at a negated matrix, contrapose, push the
/// negations through the quantifier and the modalities, and clean up the
/// double negations on both ends.
pub fn fixture_barcan_interderivation() -> Derivation {
    let sig = Signature::new([("P".to_string(), 1)], []).unwrap();
    let p = build::atom("P", vec![build::var("x")]);
    let np = build::not(p.clone());
    let nnp = build::not(np.clone());
    let x = "x";
    let mut b = DerivationBuilder::theorem(sig, Preset::QBK_SHARP);

    // 1: <>(exists x. !P) -> exists x. <>!P
    let ex_np = build::exists(x, np.clone());
    let m1 = b.axiom(
        SchemeId::axiom(BaseScheme::Ba),
        build::imp(
            build::diamond(ex_np.clone()),
            build::exists(x, build::diamond(np.clone())),
        ),
    );

    // 2: !(exists x. <>!P) -> !<>(exists x. !P)
    let cp = b.axiom(
        SchemeId::lemma("contrapose"),
        build::imp(
            b.formula(m1).clone(),
            build::imp(
                build::not(build::exists(x, build::diamond(np.clone()))),
                build::not(build::diamond(ex_np.clone())),
            ),
        ),
    );
    let m2 = b.mp(m1, cp);

    // 3: (forall x. !<>!P) -> []!(exists x. !P)
    let an = b.axiom(
        SchemeId::lemma("all-not"),
        build::imp(
            build::forall(x, build::not(build::diamond(np.clone()))),
            build::not(build::exists(x, build::diamond(np.clone()))),
        ),
    );
    let t1 = b.trans(an, m2);
    let m2lr = b.axiom(
        SchemeId::part(BaseScheme::M2, Part::Lr),
        build::imp(
            build::not(build::diamond(ex_np.clone())),
            build::boxf(build::not(ex_np.clone())),
        ),
    );
    let m3 = b.trans(t1, m2lr);

    // 4: (forall x. []!!P) -> []!(exists x. !P)
    let q1 = b.axiom(
        SchemeId::axiom(BaseScheme::Q1),
        build::imp(
            build::forall(x, build::boxf(nnp.clone())),
            build::boxf(nnp.clone()),
        ),
    );
    let m2rl = b.axiom(
        SchemeId::part(BaseScheme::M2, Part::Rl),
        build::imp(
            build::boxf(nnp.clone()),
            build::not(build::diamond(np.clone())),
        ),
    );
    let t2 = b.trans(q1, m2rl);
    let gen = b.br1(t2, x);
    let m4 = b.trans(gen, m3);

    // 5: []!(exists x. !P) -> [](forall x. !!P)
    let ne = b.axiom(
        SchemeId::lemma("not-exists"),
        build::imp(
            build::not(build::exists(x, np.clone())),
            build::forall(x, nnp.clone()),
        ),
    );
    let m5 = b.mb(ne);

    // 6: (forall x. []!!P) -> [](forall x. !!P)
    let m6 = b.trans(m4, m5);

    // 7: (forall x. []P) -> forall x. []!!P
    let dni = b.axiom(
        SchemeId::lemma("dni"),
        build::imp(p.clone(), nnp.clone()),
    );
    let mb1 = b.mb(dni);
    let m7 = b.all_mono(mb1, x);

    // 8: [](forall x. !!P) -> [](forall x. P)
    let dne = b.axiom(
        SchemeId::lemma("dne"),
        build::imp(nnp.clone(), p.clone()),
    );
    let am = b.all_mono(dne, x);
    let m8 = b.mb(am);

    // 9: (forall x. []P) -> [](forall x. P)
    let t3 = b.trans(m7, m6);
    b.trans(t3, m8);
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::build::*;

    fn store() -> LemmaStore {
        LemmaStore::standard()
    }

    #[test]
    fn every_scheme_part_round_trips_a_canonical_instance() {
        let mut inst = Instantiation::default();
        inst.formulas.insert(0, atom0("a"));
        inst.formulas.insert(1, or(atom0("b"), atom0("c")));
        inst.formulas.insert(2, neg(atom0("c")));
        inst.vars.insert(0, "x".to_string());
        let st = store();
        for base in BaseScheme::ALL {
            for part in [Part::Whole, Part::Lr, Part::Rl, Part::Nlr, Part::Nrl] {
                let Some(pattern) = scheme_pattern(base, part) else {
                    continue;
                };
                let f = instantiate(&pattern, &inst).unwrap();
                let id = SchemeId::part(base, part);
                let got = match_scheme(&id, &f, &st)
                    .unwrap_or_else(|| panic!("{id} should match its own instance"));
                assert_eq!(instantiate(&pattern, &got).unwrap(), f, "{id}");
            }
        }
    }

    #[test]
    fn sn2_matches_a_desugared_biconditional() {
        let (pc, qc) = (atom("P", vec![cons("c")]), atom("Q", vec![cons("c")]));
        let f = iff(
            neg(imp(pc.clone(), qc.clone())),
            and(pc.clone(), neg(qc.clone())),
        );
        let inst = match_scheme(&SchemeId::axiom(BaseScheme::Sn2), &f, &store()).unwrap();
        assert_eq!(inst.formulas[&0], pc);
        assert_eq!(inst.formulas[&1], qc);
    }

    #[test]
    fn q1_discovers_the_substituted_term() {
        // forall x. forall y. R(x,y) -> forall y. R(c,y): t = c.
        let rxy = atom("R", vec![var("x"), var("y")]);
        let f = imp(
            forall("x", forall("y", rxy.clone())),
            forall("y", atom("R", vec![cons("c"), var("y")])),
        );
        let inst = match_scheme(&SchemeId::axiom(BaseScheme::Q1), &f, &store()).unwrap();
        assert_eq!(inst.term, Some(cons("c").clone()));
        assert_eq!(inst.vars[&0], "x");
    }

    #[test]
    fn q1_rejects_capturing_terms() {
        // forall x. exists y. R(x,y) -> exists y. R(y,y): y is not free
        // for x.
        let f = imp(
            forall("x", exists("y", atom("R", vec![var("x"), var("y")]))),
            exists("y", atom("R", vec![var("y"), var("y")])),
        );
        assert!(match_scheme(&SchemeId::axiom(BaseScheme::Q1), &f, &store()).is_none());
    }

    #[test]
    fn q1_with_vacuous_variable_matches_trivially() {
        let f = imp(forall("x", atom0("p")), atom0("p"));
        let inst = match_scheme(&SchemeId::axiom(BaseScheme::Q1), &f, &store()).unwrap();
        assert_eq!(inst.term, Some(var("x").clone()));
    }

    #[test]
    fn q1_requires_a_single_consistent_term() {
        // forall x. R(x,x) -> R(c,d) substitutes two different terms.
        let f = imp(
            forall("x", atom("R", vec![var("x"), var("x")])),
            atom("R", vec![cons("c"), cons("d")]),
        );
        assert!(match_scheme(&SchemeId::axiom(BaseScheme::Q1), &f, &store()).is_none());
    }

    #[test]
    fn q2_matches_from_the_instance_side() {
        let f = imp(
            atom("P", vec![cons("c")]),
            exists("x", atom("P", vec![var("x")])),
        );
        let inst = match_scheme(&SchemeId::axiom(BaseScheme::Q2), &f, &store()).unwrap();
        assert_eq!(inst.term, Some(cons("c").clone()));
    }

    #[test]
    fn mismatches_return_none() {
        let f = imp(atom0("p"), imp(atom0("q"), atom0("r")));
        assert!(match_scheme(&SchemeId::axiom(BaseScheme::I1), &f, &store()).is_none());
        // Same metavariable must bind the same formula.
        let g = or(atom0("p"), imp(atom0("q"), bot()));
        assert!(match_scheme(&SchemeId::axiom(BaseScheme::N1), &g, &store()).is_none());
    }

    #[test]
    fn scheme_ids_parse_and_display() {
        for s in ["I1", "SN3", "SN3.lr", "M3.nlr", "M4.nrl", "Q1", "BABOX", "lemma.id"] {
            let id = SchemeId::parse(s).unwrap();
            assert_eq!(id.to_string(), s);
        }
        for s in ["I1.lr", "K2.rl", "Q1.nlr", "SN1.nlr", "lemma.", "XYZ", "I1.xy"] {
            assert!(SchemeId::parse(s).is_none(), "{s} should not parse");
        }
    }

    #[test]
    fn presets_parse_display_and_gate() {
        for s in ["qbk", "qbk-o", "qb3k", "qbk-sharp", "qbk-sharp-box"] {
            let p = Preset::parse(s).unwrap();
            assert_eq!(p.to_string(), s);
        }
        let combo = Preset::parse("qbk+exc+ba").unwrap();
        assert!(combo.exc && combo.ba && !combo.exp && !combo.babox);
        assert_eq!(combo.to_string(), "qbk+exc+ba");
        assert!(Preset::parse("qbs4").is_none());
        assert!(Preset::QBK.is_subset_of(&combo));
        assert!(!combo.is_subset_of(&Preset::QBK_O));
        assert!(Preset::QBK.allows(BaseScheme::I1));
        assert!(!Preset::QBK.allows(BaseScheme::Exc));
        assert!(Preset::QBK_O.allows(BaseScheme::Exc));
    }

    #[test]
    fn extension_schemes_are_preset_gated() {
        let sig = Signature::new([("p".to_string(), 0)], []).unwrap();
        let exc = or(atom0("p"), neg(atom0("p")));
        let mk = |preset| Derivation {
            mode: Mode::Theorem,
            preset,
            signature: sig.clone(),
            hypotheses: vec![],
            lines: vec![Line {
                formula: exc.clone(),
                justification: Justification::Axiom(SchemeId::axiom(BaseScheme::Exc)),
            }],
        };
        let st = store();
        let blocked = check_derivation(&mk(Preset::QBK), &st);
        assert!(!blocked.valid);
        assert!(blocked.lines[0].detail.contains("not enabled"));
        assert!(check_derivation(&mk(Preset::QBK_O), &st).valid);
        // Monotonicity: enabling more schemes cannot break it.
        assert!(check_derivation(&mk(Preset::parse("qbk+exc+exp+ba+babox").unwrap()), &st).valid);
    }

    #[test]
    fn converse_barcan_fixture_is_valid() {
        let d = fixture_converse_barcan();
        let report = check_derivation(&d, &store());
        assert!(report.valid, "{:#?}", report);
        assert_eq!(d.lines.len(), 3);
        assert_eq!(
            d.conclusion().unwrap().to_string(),
            "(exists x. <>P(x)) -> <>(exists x. P(x))"
        );
    }

    #[test]
    fn necessitation_fixture_is_valid() {
        let d = fixture_necessitation();
        let report = check_derivation(&d, &store());
        assert!(report.valid, "{:#?}", report);
        assert_eq!(d.lines.len(), 6);
        assert_eq!(d.conclusion().unwrap().to_string(), "[](p -> p)");
    }

    #[test]
    fn barcan_interderivation_fixture_is_valid() {
        let d = fixture_barcan_interderivation();
        let report = check_derivation(&d, &store());
        for l in &report.lines {
            assert!(l.ok, "line {}: {}", l.index, l.detail);
        }
        assert!(report.valid);
        assert_eq!(
            d.conclusion().unwrap().to_string(),
            "(forall x. []P(x)) -> [](forall x. P(x))"
        );
        // The scheme it rests on is gated: the same derivation under the
        // core preset fails exactly at the citation line.
        let mut core = d.clone();
        core.preset = Preset::QBK;
        let report = check_derivation(&core, &store());
        assert!(!report.valid);
        assert!(report.lines[0].detail.contains("BA"));
    }

    #[test]
    fn br1_side_condition_is_enforced() {
        let sig = Signature::new([("P".to_string(), 1)], []).unwrap();
        let px = atom("P", vec![var("x")]);
        let d = Derivation {
            mode: Mode::Theorem,
            preset: Preset::QBK,
            signature: sig,
            hypotheses: vec![],
            lines: vec![
                Line {
                    formula: imp(px.clone(), px.clone()),
                    justification: Justification::Axiom(SchemeId::lemma("id")),
                },
                Line {
                    formula: imp(px.clone(), forall("x", px.clone())),
                    justification: Justification::Br1(0, "x".to_string()),
                },
            ],
        };
        let report = check_derivation(&d, &store());
        assert!(!report.valid);
        assert!(report.lines[1].detail.contains("side condition"));
        assert!(report.lines[1].detail.contains("free in the antecedent"));
    }

    #[test]
    fn index_violations_are_reported_per_line() {
        let sig = Signature::new([("p".to_string(), 0)], []).unwrap();
        let p = atom0("p");
        let d = Derivation {
            mode: Mode::Theorem,
            preset: Preset::QBK,
            signature: sig,
            hypotheses: vec![],
            lines: vec![
                Line {
                    formula: imp(p.clone(), imp(p.clone(), p.clone())),
                    justification: Justification::Mp(0, 5),
                },
                Line {
                    formula: p.clone(),
                    justification: Justification::Mp(1, 0),
                },
            ],
        };
        let report = check_derivation(&d, &store());
        assert!(!report.valid);
        assert!(report.lines[0].detail.contains("not strictly earlier"));
        assert!(report.lines[1].detail.contains("not strictly earlier"));
    }

    #[test]
    fn mode_restrictions_are_enforced() {
        let sig = Signature::new([("p".to_string(), 0)], []).unwrap();
        let p = atom0("p");
        // Hypothesis line in theorem mode.
        let d = Derivation {
            mode: Mode::Theorem,
            preset: Preset::QBK,
            signature: sig.clone(),
            hypotheses: vec![],
            lines: vec![Line {
                formula: p.clone(),
                justification: Justification::Hyp(0),
            }],
        };
        let report = check_derivation(&d, &store());
        assert!(!report.valid);
        assert!(report.lines[0].detail.contains("theorem mode"));
        // Modal monotonicity in consequence mode.
        let d = Derivation {
            mode: Mode::Consequence,
            preset: Preset::QBK,
            signature: sig.clone(),
            hypotheses: vec![imp(p.clone(), p.clone())],
            lines: vec![
                Line {
                    formula: imp(p.clone(), p.clone()),
                    justification: Justification::Hyp(0),
                },
                Line {
                    formula: imp(boxf(p.clone()), boxf(p.clone())),
                    justification: Justification::Mb(0),
                },
            ],
        };
        let report = check_derivation(&d, &store());
        assert!(!report.valid);
        assert!(report.lines[1].detail.contains("consequence mode"));
        // Open hypothesis.
        let sig1 = Signature::new([("P".to_string(), 1)], []).unwrap();
        let d = Derivation {
            mode: Mode::Consequence,
            preset: Preset::QBK,
            signature: sig1,
            hypotheses: vec![atom("P", vec![var("x")])],
            lines: vec![Line {
                formula: atom("P", vec![var("x")]),
                justification: Justification::Hyp(0),
            }],
        };
        let report = check_derivation(&d, &store());
        assert!(!report.valid);
        assert!(report.problems.iter().any(|p| p.contains("not a sentence")));
    }

    #[test]
    fn disjunction_builds_right_nested() {
        assert_eq!(build_disjunction(&[]), bot());
        let (p, q, r) = (atom0("p"), atom0("q"), atom0("r"));
        assert_eq!(build_disjunction(&[p.clone()]), p);
        assert_eq!(
            build_disjunction(&[p.clone(), q.clone(), r.clone()]),
            or(p, or(q, r))
        );
    }

    #[test]
    fn standard_store_templates_all_check() {
        let st = store();
        let mut templated = 0;
        for (name, entry) in st.entries() {
            if let LemmaBacking::Template(d) = &entry.backing {
                templated += 1;
                let report = check_derivation(d, &st);
                for l in &report.lines {
                    assert!(l.ok, "lemma.{name} line {}: {}", l.index, l.detail);
                }
                assert!(report.valid, "lemma.{name}: {:?}", report.problems);
                // The template concludes an instance of the advertised
                // pattern.
                let conclusion = d.conclusion().unwrap();
                let mut inst = Instantiation::default();
                assert!(
                    match_pattern(&entry.pattern, conclusion, &mut inst),
                    "lemma.{name} concludes {conclusion}, not an instance of {}",
                    entry.statement
                );
            }
        }
        assert!(templated >= 11);
        assert!(st.get("dneg-link").is_some());
        assert!(st.get("imp-or").is_some());
    }

    #[test]
    fn transform_of_bare_hypothesis_yields_identity() {
        let sig = Signature::new([("p".to_string(), 0)], []).unwrap();
        let p = atom0("p");
        let mut b = DerivationBuilder::consequence(sig, Preset::QBK, vec![p.clone()]);
        b.hyp(0);
        let d = deduction_transform(&b.finish(), 0, &store()).unwrap();
        assert_eq!(d.hypotheses, vec![]);
        assert_eq!(d.lines.len(), 1);
        assert_eq!(d.conclusion().unwrap(), &imp(p.clone(), p));
        assert!(check_derivation(&d, &store()).valid);
    }

    #[test]
    fn transform_handles_mp_and_other_hypotheses() {
        let sig = Signature::new([("p".to_string(), 0), ("q".to_string(), 0)], []).unwrap();
        let (p, q) = (atom0("p"), atom0("q"));
        let hyps = vec![imp(p.clone(), q.clone()), p.clone()];
        let mut b = DerivationBuilder::consequence(sig, Preset::QBK, hyps);
        let hp = b.hyp(1);
        let hpq = b.hyp(0);
        b.mp(hp, hpq);
        let src = b.finish();
        let st = store();
        // Peel the hypothesis p (index 1).
        let d = deduction_transform(&src, 1, &st).unwrap();
        assert_eq!(d.hypotheses, vec![imp(p.clone(), q.clone())]);
        assert_eq!(d.conclusion().unwrap(), &imp(p.clone(), q.clone()));
        assert!(check_derivation(&d, &st).valid);
        // Peel the remaining one.
        let d2 = deduction_transform(&d, 0, &st).unwrap();
        assert_eq!(d2.hypotheses, vec![]);
        assert_eq!(
            d2.conclusion().unwrap(),
            &imp(imp(p.clone(), q.clone()), imp(p, q))
        );
        assert!(check_derivation(&d2, &st).valid);
    }

    #[test]
    fn transform_preserves_bernays_steps_over_closed_hypotheses() {
        let sig = Signature::new([("P".to_string(), 1), ("q".to_string(), 0)], []).unwrap();
        let px = atom("P", vec![var("x")]);
        let q = atom0("q");
        let hyp = imp(q.clone(), forall("x", px.clone()));
        let st = store();
        let mut b =
            DerivationBuilder::consequence(sig, Preset::QBK, vec![hyp.clone(), q.clone()]);
        let hq = b.hyp(1);
        let him = b.hyp(0);
        let all = b.mp(hq, him);
        let q1 = b.axiom(
            SchemeId::axiom(BaseScheme::Q1),
            imp(forall("x", px.clone()), px.clone()),
        );
        let got_px = b.mp(all, q1);
        // q -> P(x) so that BR1 over x applies (x not free in q).
        let i1 = b.axiom(
            SchemeId::axiom(BaseScheme::I1),
            imp(px.clone(), imp(q.clone(), px.clone())),
        );
        let qpx = b.mp(got_px, i1);
        b.br1(qpx, "x");
        let src = b.finish();
        assert!(check_derivation(&src, &st).valid);
        // Peel q.
        let d = deduction_transform(&src, 1, &st).unwrap();
        assert!(check_derivation(&d, &st).valid, "{:#?}", check_derivation(&d, &st));
        assert_eq!(
            d.conclusion().unwrap(),
            &imp(q.clone(), imp(q.clone(), forall("x", px.clone())))
        );
        // Peel the implication hypothesis as well.
        let d2 = deduction_transform(&d, 0, &st).unwrap();
        assert!(check_derivation(&d2, &st).valid);
        assert_eq!(
            d2.conclusion().unwrap(),
            &imp(hyp, imp(q.clone(), imp(q, forall("x", px))))
        );
    }

    #[test]
    fn transform_rejects_bad_inputs() {
        let sig = Signature::new([("p".to_string(), 0)], []).unwrap();
        let p = atom0("p");
        let theorem = Derivation {
            mode: Mode::Theorem,
            preset: Preset::QBK,
            signature: sig.clone(),
            hypotheses: vec![],
            lines: vec![Line {
                formula: imp(p.clone(), imp(p.clone(), p.clone())),
                justification: Justification::Axiom(SchemeId::axiom(BaseScheme::I1)),
            }],
        };
        let st = store();
        assert_eq!(
            deduction_transform(&theorem, 0, &st),
            Err(TransformError::NotConsequenceMode)
        );
        let mut b = DerivationBuilder::consequence(sig.clone(), Preset::QBK, vec![p.clone()]);
        b.hyp(0);
        let ok = b.finish();
        assert_eq!(
            deduction_transform(&ok, 3, &st),
            Err(TransformError::NoSuchHypothesis(3))
        );
        let broken = Derivation {
            mode: Mode::Consequence,
            preset: Preset::QBK,
            signature: sig,
            hypotheses: vec![p.clone()],
            lines: vec![Line {
                formula: p,
                justification: Justification::Hyp(7),
            }],
        };
        assert!(matches!(
            deduction_transform(&broken, 0, &st),
            Err(TransformError::InvalidInput(_))
        ));
    }
}
