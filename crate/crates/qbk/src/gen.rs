//! Bounded exhaustive enumeration and seeded random generation of formulas,
//! models, axiom instances, and derivations.
//!
//! Everything here exists to drive property tests: the enumerator gives small
//! complete universes to sweep, the random generators give larger samples
//! with controlled shape. All random functions take the RNG by argument, so a
//! fixed seed reproduces a failure exactly.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::calculus::{
    instantiate, scheme_pattern, BaseScheme, Derivation, Instantiation, Justification, Line, Mode,
    Part, Pattern, Preset, SchemeId,
};
use crate::nelson::NelsonFormula;
use crate::semantics::{all_tuples, ExtensionTable, KripkeModel, ModelClass};
use crate::syntax::{build, substitute_var, Formula, Signature, Term};

/// Default binder pool used when callers do not care about variable names.
pub const VAR_POOL: [&str; 3] = ["x", "y", "z"];

/// Every formula over `sig` with at most `depth` connective levels above the
/// leaves (so [`Formula::depth`] is at most `depth + 1`), with terms drawn
/// from `vars` and the signature's constants. `modal` controls whether `[]` and
/// `<>` are generated. Quantifiers bind names from `vars`, so the result
/// contains open formulas; filter with
/// [`is_sentence`](crate::syntax::Formula::is_sentence) when only closed ones
/// are wanted.
///
/// The universe grows roughly as the square of the previous level per depth
/// step; keep `depth` at 2 or below for non-trivial signatures.
pub fn enumerate_formulas(
    sig: &Signature,
    vars: &[&str],
    depth: usize,
    modal: bool,
) -> Vec<Formula> {
    let mut terms: Vec<Term> = vars.iter().map(|v| build::var(v)).collect();
    terms.extend(sig.constants().map(build::cons));
    let mut leaves = vec![build::bot()];
    for (pred, arity) in sig.predicates() {
        for args in all_arg_tuples(&terms, arity) {
            leaves.push(build::atom(pred, args));
        }
    }
    // (formula, its exact depth); each level extends only combinations that
    // involve the previous level, so nothing is generated twice.
    let mut all: Vec<(Formula, usize)> = leaves.into_iter().map(|f| (f, 0)).collect();
    for d in 1..=depth {
        let hi = all.len();
        let mut next = Vec::new();
        for i in 0..hi {
            if all[i].1 != d - 1 {
                continue;
            }
            let f = all[i].0.clone();
            next.push(build::neg(f.clone()));
            if modal {
                next.push(build::boxf(f.clone()));
                next.push(build::diamond(f.clone()));
            }
            for v in vars {
                next.push(build::forall(v, f.clone()));
                next.push(build::exists(v, f.clone()));
            }
        }
        for i in 0..hi {
            for j in 0..hi {
                if all[i].1 != d - 1 && all[j].1 != d - 1 {
                    continue;
                }
                let (a, b) = (all[i].0.clone(), all[j].0.clone());
                next.push(build::and(a.clone(), b.clone()));
                next.push(build::or(a.clone(), b.clone()));
                next.push(build::imp(a, b));
            }
        }
        all.extend(next.into_iter().map(|f| (f, d)));
    }
    all.into_iter().map(|(f, _)| f).collect()
}

fn all_arg_tuples(terms: &[Term], arity: usize) -> Vec<Vec<Term>> {
    if arity == 0 {
        return vec![Vec::new()];
    }
    if terms.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; arity];
    loop {
        out.push(idx.iter().map(|&i| terms[i].clone()).collect());
        let mut pos = arity;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < terms.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Shape controls for [`random_formula`].
#[derive(Debug, Clone)]
pub struct FormulaOptions {
    /// Connective levels above the leaves; [`Formula::depth`] of the result
    /// is at most `max_depth + 1`.
    pub max_depth: usize,
    /// Allow `[]` and `<>`.
    pub modal: bool,
    /// Keep strong negation on atoms and `_|_` only.
    pub nnf: bool,
    /// Use only quantified variables in terms, so the result is a sentence.
    pub closed: bool,
}

impl Default for FormulaOptions {
    fn default() -> Self {
        FormulaOptions {
            max_depth: 3,
            modal: true,
            nnf: false,
            closed: false,
        }
    }
}

/// A random well-formed formula over `sig`. Respects every flag in `opts`:
/// the depth bound is hard, `closed` yields a sentence, `nnf` yields a
/// negation normal form, and `modal: false` yields a modality-free formula.
pub fn random_formula<R: Rng>(rng: &mut R, sig: &Signature, opts: &FormulaOptions) -> Formula {
    let preds: Vec<(String, usize)> = sig
        .predicates()
        .map(|(p, a)| (p.to_string(), a))
        .collect();
    let consts: Vec<String> = sig.constants().map(str::to_string).collect();
    let mut scope = Vec::new();
    grow(rng, &preds, &consts, opts, &mut scope, opts.max_depth)
}

/// A random modality-free formula wrapped as a constructive one.
pub fn random_nelson_formula<R: Rng>(
    rng: &mut R,
    sig: &Signature,
    max_depth: usize,
    closed: bool,
) -> NelsonFormula {
    let opts = FormulaOptions {
        max_depth,
        modal: false,
        nnf: false,
        closed,
    };
    NelsonFormula::new(random_formula(rng, sig, &opts))
        .expect("the generator was told not to produce modal operators")
}

fn grow<R: Rng>(
    rng: &mut R,
    preds: &[(String, usize)],
    consts: &[String],
    opts: &FormulaOptions,
    scope: &mut Vec<String>,
    depth: usize,
) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return literal(rng, preds, consts, opts, scope);
    }
    // Connective weights: binaries twice, so trees stay bushy.
    let mut moves: Vec<u8> = vec![0, 0, 1, 1, 2, 2, 3, 4];
    if opts.modal {
        moves.push(5);
        moves.push(6);
    }
    if !opts.nnf {
        moves.push(7);
    }
    match moves[rng.gen_range(0..moves.len())] {
        0 => build::and(
            grow(rng, preds, consts, opts, scope, depth - 1),
            grow(rng, preds, consts, opts, scope, depth - 1),
        ),
        1 => build::or(
            grow(rng, preds, consts, opts, scope, depth - 1),
            grow(rng, preds, consts, opts, scope, depth - 1),
        ),
        2 => build::imp(
            grow(rng, preds, consts, opts, scope, depth - 1),
            grow(rng, preds, consts, opts, scope, depth - 1),
        ),
        3 | 4 => {
            let v = VAR_POOL[rng.gen_range(0..VAR_POOL.len())].to_string();
            scope.push(v.clone());
            let body = grow(rng, preds, consts, opts, scope, depth - 1);
            scope.pop();
            if rng.gen_bool(0.5) {
                build::forall(&v, body)
            } else {
                build::exists(&v, body)
            }
        }
        5 => build::boxf(grow(rng, preds, consts, opts, scope, depth - 1)),
        6 => build::diamond(grow(rng, preds, consts, opts, scope, depth - 1)),
        _ => build::neg(grow(rng, preds, consts, opts, scope, depth - 1)),
    }
}

fn literal<R: Rng>(
    rng: &mut R,
    preds: &[(String, usize)],
    consts: &[String],
    opts: &FormulaOptions,
    scope: &[String],
) -> Formula {
    let mut pool: Vec<Term> = scope.iter().map(|v| build::var(v)).collect();
    if !opts.closed {
        pool.extend(VAR_POOL.iter().map(|v| build::var(v)));
    }
    pool.extend(consts.iter().map(|c| build::cons(c)));
    let usable: Vec<&(String, usize)> = preds
        .iter()
        .filter(|(_, a)| *a == 0 || !pool.is_empty())
        .collect();
    let base = if usable.is_empty() || rng.gen_ratio(1, 8) {
        build::bot()
    } else {
        let (p, a) = usable[rng.gen_range(0..usable.len())];
        let args = (0..*a)
            .map(|_| pool[rng.gen_range(0..pool.len())].clone())
            .collect();
        build::atom(p, args)
    };
    if opts.nnf && rng.gen_bool(0.4) {
        build::neg(base)
    } else {
        base
    }
}

/// Size bounds for [`random_model`].
#[derive(Debug, Clone, Copy)]
pub struct ModelOptions {
    pub max_worlds: usize,
    pub max_domain: usize,
}

/// A random model over `sig` belonging to `class`.
///
/// The frame is random with the class's frame conditions closed over
/// (reflexive edges added, then the transitive closure). Every domain
/// contains element 0, extra elements are propagated forward so domains
/// expand, and every constant denotes element 0 everywhere, which keeps the
/// interpretation rigid. Atom states are drawn only from the combinations
/// the class allows, then hereditary classes propagate verified and
/// falsified tuples forward; if the class also demands consistency, a tuple
/// that ends up clashing loses its falsification everywhere.
pub fn random_model<R: Rng>(
    rng: &mut R,
    sig: &Signature,
    class: ModelClass,
    opts: &ModelOptions,
) -> KripkeModel {
    assert!(opts.max_worlds >= 1 && opts.max_domain >= 1);
    let k = rng.gen_range(1..=opts.max_worlds);
    let n = rng.gen_range(1..=opts.max_domain);
    let mut access: BTreeSet<(usize, usize)> = BTreeSet::new();
    for u in 0..k {
        for v in 0..k {
            if (class.reflexive && u == v) || rng.gen_bool(0.4) {
                access.insert((u, v));
            }
        }
    }
    if class.transitive {
        loop {
            let mut grew = false;
            let edges: Vec<(usize, usize)> = access.iter().copied().collect();
            for &(u, v) in &edges {
                for &(v2, w) in &edges {
                    if v == v2 && access.insert((u, w)) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
    }
    let mut domains: Vec<BTreeSet<usize>> = if class.constant_domain {
        let mut d = BTreeSet::from([0]);
        for e in 1..n {
            if rng.gen_bool(0.6) {
                d.insert(e);
            }
        }
        vec![d; k]
    } else {
        (0..k)
            .map(|_| {
                let mut d = BTreeSet::from([0]);
                for e in 1..n {
                    if rng.gen_bool(0.6) {
                        d.insert(e);
                    }
                }
                d
            })
            .collect()
    };
    loop {
        let mut grew = false;
        for &(u, v) in &access {
            if u == v {
                continue;
            }
            let missing: Vec<usize> = domains[u].difference(&domains[v]).copied().collect();
            if !missing.is_empty() {
                domains[v].extend(missing);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let const_interp: Vec<BTreeMap<String, usize>> = (0..k)
        .map(|_| sig.constants().map(|c| (c.to_string(), 0)).collect())
        .collect();
    let states: Vec<(bool, bool)> = match (class.atom_complete, class.atom_consistent) {
        (true, true) => vec![(true, false), (false, true)],
        (true, false) => vec![(true, false), (false, true), (true, true)],
        (false, true) => vec![(false, false), (true, false), (false, true)],
        (false, false) => vec![
            (false, false),
            (true, false),
            (false, true),
            (true, true),
        ],
    };
    let mut positive = vec![ExtensionTable::new(); k];
    let mut negative = vec![ExtensionTable::new(); k];
    for w in 0..k {
        let dom: Vec<usize> = domains[w].iter().copied().collect();
        for (pred, arity) in sig.predicates() {
            for tuple in all_tuples(&dom, arity) {
                let (p, neg) = states[rng.gen_range(0..states.len())];
                if p {
                    positive[w]
                        .entry(pred.to_string())
                        .or_default()
                        .insert(tuple.clone());
                }
                if neg {
                    negative[w]
                        .entry(pred.to_string())
                        .or_default()
                        .insert(tuple);
                }
            }
        }
    }
    if class.hereditary {
        for tables in [&mut positive, &mut negative] {
            loop {
                let mut grew = false;
                for &(u, v) in &access {
                    if u == v {
                        continue;
                    }
                    let snapshot = tables[u].clone();
                    for (pred, ext) in snapshot {
                        let at_v = tables[v].entry(pred).or_default();
                        for tuple in ext {
                            if at_v.insert(tuple) {
                                grew = true;
                            }
                        }
                    }
                }
                if !grew {
                    break;
                }
            }
        }
        if class.atom_consistent {
            // Propagation may have pushed a verification onto a world that
            // already falsifies the tuple; dropping the falsification at
            // every world resolves the clash without breaking heredity.
            let clashes: Vec<(String, Vec<usize>)> = (0..k)
                .flat_map(|w| {
                    positive[w].iter().flat_map(move |(pred, ext)| {
                        ext.iter().map(move |t| (pred.clone(), t.clone()))
                    })
                })
                .collect();
            for (pred, tuple) in clashes {
                for table in negative.iter_mut() {
                    if let Some(ext) = table.get_mut(&pred) {
                        ext.remove(&tuple);
                    }
                }
            }
        }
    }
    for tables in [&mut positive, &mut negative] {
        for table in tables.iter_mut() {
            table.retain(|_, ext| !ext.is_empty());
        }
    }
    KripkeModel::new(
        sig.clone(),
        (0..k).map(|i| format!("w{i}")).collect(),
        access,
        (0..n).map(|i| format!("d{i}")).collect(),
        domains,
        const_interp,
        positive,
        negative,
    )
    .expect("random construction satisfies the structural invariants")
}

fn pattern_metas(p: &Pattern, formulas: &mut BTreeSet<u8>, vars: &mut BTreeSet<u8>) {
    match p {
        Pattern::Meta(i) => {
            formulas.insert(*i);
        }
        Pattern::Bottom => {}
        Pattern::Neg(g) | Pattern::Box(g) | Pattern::Diamond(g) => {
            pattern_metas(g, formulas, vars)
        }
        Pattern::And(l, r) | Pattern::Or(l, r) | Pattern::Imp(l, r) => {
            pattern_metas(l, formulas, vars);
            pattern_metas(r, formulas, vars);
        }
        Pattern::Forall(i, g) | Pattern::Exists(i, g) => {
            vars.insert(*i);
            pattern_metas(g, formulas, vars);
        }
    }
}

/// A random instance of the axiom scheme `base` (its whole statement), well
/// formed over `sig`. The two quantifier axioms are built by substitution:
/// the instantiation axiom picks a term that is free for the bound variable,
/// and the vacuous-generalization axiom picks a variable with no free
/// occurrence. Retries a few times when a random draw violates a side
/// condition and returns `None` only if every retry failed.
pub fn random_axiom_instance<R: Rng>(
    rng: &mut R,
    sig: &Signature,
    base: BaseScheme,
) -> Option<Formula> {
    let meta_opts = FormulaOptions {
        max_depth: 2,
        ..FormulaOptions::default()
    };
    match base {
        BaseScheme::Q1 => {
            for _ in 0..40 {
                let x = VAR_POOL[rng.gen_range(0..VAR_POOL.len())];
                let phi = random_formula(rng, sig, &meta_opts);
                let consts: Vec<String> = sig.constants().map(str::to_string).collect();
                let t = if !consts.is_empty() && rng.gen_bool(0.5) {
                    build::cons(&consts[rng.gen_range(0..consts.len())])
                } else {
                    build::var(VAR_POOL[rng.gen_range(0..VAR_POOL.len())])
                };
                if let Ok(sub) = substitute_var(&phi, x, &t) {
                    return Some(build::imp(build::forall(x, phi), sub));
                }
            }
            None
        }
        BaseScheme::Q2 => {
            for _ in 0..40 {
                let x = VAR_POOL[rng.gen_range(0..VAR_POOL.len())];
                let phi = random_formula(rng, sig, &meta_opts);
                let consts: Vec<String> = sig.constants().map(str::to_string).collect();
                let t = if !consts.is_empty() && rng.gen_bool(0.5) {
                    build::cons(&consts[rng.gen_range(0..consts.len())])
                } else {
                    build::var(VAR_POOL[rng.gen_range(0..VAR_POOL.len())])
                };
                if let Ok(sub) = substitute_var(&phi, x, &t) {
                    return Some(build::imp(sub, build::exists(x, phi)));
                }
            }
            None
        }
        _ => {
            let pattern = scheme_pattern(base, Part::Whole)
                .expect("every scheme except the two quantifier axioms has a whole pattern");
            let mut fmetas = BTreeSet::new();
            let mut vmetas = BTreeSet::new();
            pattern_metas(&pattern, &mut fmetas, &mut vmetas);
            let inst = Instantiation {
                formulas: fmetas
                    .into_iter()
                    .map(|i| (i, random_formula(rng, sig, &meta_opts)))
                    .collect(),
                vars: vmetas
                    .into_iter()
                    .map(|i| (i, VAR_POOL[rng.gen_range(0..VAR_POOL.len())].to_string()))
                    .collect(),
                term: None,
            };
            Some(instantiate(&pattern, &inst).expect("every meta in the pattern was assigned"))
        }
    }
}

/// A random valid consequence-mode derivation over `sig` with `hyp_count`
/// closed hypotheses and at least `min_lines` lines.
///
/// Construction is forward-only, so validity holds by construction: every
/// hypothesis is cited once, axiom instances come from
/// [`random_axiom_instance`] over the base schemes, detachment is made
/// applicable by first deriving `A -> (B -> A)` for a line `A` already
/// present, and the generalization rules fire only when their variable
/// conditions hold.
pub fn random_derivation<R: Rng>(
    rng: &mut R,
    sig: &Signature,
    hyp_count: usize,
    min_lines: usize,
) -> Derivation {
    let hyp_opts = FormulaOptions {
        max_depth: 2,
        closed: true,
        ..FormulaOptions::default()
    };
    let hypotheses: Vec<Formula> = (0..hyp_count)
        .map(|_| random_formula(rng, sig, &hyp_opts))
        .collect();
    let mut lines: Vec<Line> = hypotheses
        .iter()
        .enumerate()
        .map(|(k, f)| Line {
            formula: f.clone(),
            justification: Justification::Hyp(k),
        })
        .collect();
    let bases: Vec<BaseScheme> = BaseScheme::ALL
        .iter()
        .copied()
        .filter(|b| !b.is_extension())
        .collect();
    while lines.len() < min_lines {
        match rng.gen_range(0..4u8) {
            0 => {
                let base = bases[rng.gen_range(0..bases.len())];
                if let Some(f) = random_axiom_instance(rng, sig, base) {
                    lines.push(Line {
                        formula: f,
                        justification: Justification::Axiom(SchemeId::axiom(base)),
                    });
                }
            }
            1 => {
                // From line i: A, derive A -> (B -> A), then detach B -> A.
                if lines.is_empty() {
                    continue;
                }
                let i = rng.gen_range(0..lines.len());
                let a = lines[i].formula.clone();
                let b = random_formula(
                    rng,
                    sig,
                    &FormulaOptions {
                        max_depth: 1,
                        ..FormulaOptions::default()
                    },
                );
                let weaken = build::imp(a.clone(), build::imp(b.clone(), a.clone()));
                lines.push(Line {
                    formula: weaken,
                    justification: Justification::Axiom(SchemeId::axiom(BaseScheme::I1)),
                });
                lines.push(Line {
                    formula: build::imp(b, a),
                    justification: Justification::Mp(i, lines.len() - 1),
                });
            }
            2 => {
                // Forward generalization on a conditional whose antecedent
                // does not mention the variable.
                if let Some((i, l, r, x)) = pick_conditional(rng, &lines, |l, _, x| !l.has_free(x))
                {
                    lines.push(Line {
                        formula: build::imp(l, build::forall(&x, r)),
                        justification: Justification::Br1(i, x),
                    });
                }
            }
            _ => {
                if let Some((i, l, r, x)) = pick_conditional(rng, &lines, |_, r, x| !r.has_free(x))
                {
                    lines.push(Line {
                        formula: build::imp(build::exists(&x, l), r),
                        justification: Justification::Br2(i, x),
                    });
                }
            }
        }
    }
    Derivation {
        mode: Mode::Consequence,
        preset: Preset::QBK,
        signature: sig.clone(),
        hypotheses,
        lines,
    }
}

fn pick_conditional<R: Rng>(
    rng: &mut R,
    lines: &[Line],
    ok: impl Fn(&Formula, &Formula, &str) -> bool,
) -> Option<(usize, Formula, Formula, String)> {
    let mut candidates: Vec<(usize, &Formula, &Formula, &str)> = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if let Formula::Imp(l, r) = &line.formula {
            for x in VAR_POOL {
                if ok(l, r, x) {
                    candidates.push((i, l, r, x));
                }
            }
        }
    }
    if candidates.is_empty() {
        return None;
    }
    let (i, l, r, x) = candidates[rng.gen_range(0..candidates.len())];
    Some((i, l.clone(), r.clone(), x.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{check_derivation, match_scheme, LemmaStore};
    use crate::nnf::is_nnf;
    use crate::semantics::validate_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig_pq() -> Signature {
        Signature::new([("p".to_string(), 0), ("q".to_string(), 0)], []).unwrap()
    }

    fn sig_pc() -> Signature {
        Signature::new([("P".to_string(), 1)], ["c".to_string()]).unwrap()
    }

    #[test]
    fn enumeration_counts_are_exact() {
        // Leaves: p, q, _|_. Depth 1 adds 3 negations, 6 modal wraps, and
        // 27 of each binary connective; no variables means no quantifiers.
        let fs = enumerate_formulas(&sig_pq(), &[], 1, true);
        assert_eq!(fs.len(), 3 + 3 + 6 + 3 * 9);
        let nonmodal = enumerate_formulas(&sig_pq(), &[], 1, false);
        assert_eq!(nonmodal.len(), 3 + 3 + 3 * 9);
        // One unary predicate over one variable: leaves P(x), _|_.
        let quant = enumerate_formulas(&sig_pc(), &["x"], 1, false);
        // Terms x and c give two leaves P(x), P(c) plus _|_; depth 1 adds
        // 3 negations, 3*9 binaries, and 2 quantifiers per formula.
        assert_eq!(quant.len(), 3 + 3 + 27 + 6);
    }

    #[test]
    fn enumerated_formulas_are_well_formed_and_within_depth() {
        let sig = sig_pc();
        let fs = enumerate_formulas(&sig, &["x"], 2, true);
        assert!(fs.len() > 1000);
        for f in &fs {
            assert!(f.well_formed(&sig).is_ok(), "{f} is not well formed");
            assert!(f.depth() <= 3, "{f} exceeds the depth bound");
        }
        // No duplicates: level construction never revisits a combination.
        for (i, a) in fs.iter().enumerate() {
            for b in fs.iter().skip(i + 1).take(40) {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn random_formulas_respect_their_options() {
        let sig = sig_pc();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let closed = random_formula(
                &mut rng,
                &sig,
                &FormulaOptions {
                    closed: true,
                    ..FormulaOptions::default()
                },
            );
            assert!(closed.well_formed(&sig).is_ok());
            assert!(closed.is_sentence(), "{closed} has free variables");
            let nnf = random_formula(
                &mut rng,
                &sig,
                &FormulaOptions {
                    nnf: true,
                    ..FormulaOptions::default()
                },
            );
            assert!(is_nnf(&nnf), "{nnf} is not in negation normal form");
            let plain = random_formula(
                &mut rng,
                &sig,
                &FormulaOptions {
                    modal: false,
                    ..FormulaOptions::default()
                },
            );
            assert!(plain.is_modality_free(), "{plain} contains a modality");
            assert!(plain.depth() <= 4);
        }
    }

    #[test]
    fn random_generation_is_deterministic_per_seed() {
        let sig = sig_pc();
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let f = random_formula(&mut rng, &sig, &FormulaOptions::default());
            let m = random_model(
                &mut rng,
                &sig,
                ModelClass::QBS4,
                &ModelOptions {
                    max_worlds: 3,
                    max_domain: 2,
                },
            );
            (f, m)
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn random_models_land_in_their_class() {
        let sig = sig_pc();
        let opts = ModelOptions {
            max_worlds: 3,
            max_domain: 2,
        };
        let classes = [
            ModelClass::QBK,
            ModelClass::QBK_O,
            ModelClass::QB3K,
            ModelClass::QBK_SHARP,
            ModelClass::QBS4,
            ModelClass::QB3S4,
            ModelClass::QN4,
            ModelClass::QN3,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for class in classes {
            for _ in 0..60 {
                let m = random_model(&mut rng, &sig, class, &opts);
                let violations = validate_model(&m, class);
                assert!(
                    violations.is_empty(),
                    "random model violates its class: {}",
                    violations[0]
                );
            }
        }
    }

    #[test]
    fn random_axiom_instances_match_their_scheme() {
        let sig = sig_pc();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let store = LemmaStore::empty();
        for &base in BaseScheme::ALL.iter() {
            for _ in 0..25 {
                let f = random_axiom_instance(&mut rng, &sig, base)
                    .unwrap_or_else(|| panic!("no instance generated for {}", base.name()));
                assert!(f.well_formed(&sig).is_ok(), "{f} is not well formed");
                let id = SchemeId::axiom(base);
                assert!(
                    match_scheme(&id, &f, &store).is_some(),
                    "{f} does not match {}",
                    base.name()
                );
            }
        }
    }

    #[test]
    fn matches_reported_on_random_formulas_are_genuine() {
        // The matcher may say yes or no on arbitrary input, but a yes must
        // come with an instantiation that reproduces the formula exactly.
        let sig = sig_pq();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut hits = 0;
        for _ in 0..4000 {
            let f = random_formula(
                &mut rng,
                &sig,
                &FormulaOptions {
                    max_depth: 3,
                    ..FormulaOptions::default()
                },
            );
            for &base in BaseScheme::ALL.iter() {
                for part in [Part::Whole, Part::Lr, Part::Rl, Part::Nlr, Part::Nrl] {
                    let Some(pattern) = scheme_pattern(base, part) else {
                        continue;
                    };
                    let id = SchemeId::part(base, part);
                    if let Some(inst) = match_scheme(&id, &f, &LemmaStore::empty()) {
                        hits += 1;
                        assert_eq!(
                            instantiate(&pattern, &inst).as_ref(),
                            Some(&f),
                            "match on {f} for {id} does not reproduce it"
                        );
                    }
                }
            }
        }
        assert!(hits > 20, "expected some random hits, saw {hits}");
    }

    #[test]
    fn random_derivations_check_valid() {
        let sig = sig_pq();
        let store = LemmaStore::empty();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for round in 0..40 {
            let d = random_derivation(&mut rng, &sig, round % 4, 12);
            let report = check_derivation(&d, &store);
            assert!(
                report.valid,
                "round {round}: {}",
                report
                    .lines
                    .iter()
                    .filter(|l| !l.ok)
                    .map(|l| format!("line {}: {}", l.index, l.detail))
                    .collect::<Vec<_>>()
                    .join("; ")
            );
            assert!(d.lines.len() >= 12);
        }
    }
}
