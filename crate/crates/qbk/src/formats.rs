//! JSON documents for models and derivations.
//!
//! Both formats are plain JSON chosen for diff-friendliness and
//! hand-editability. Loading validates in two stages: shape problems are
//! reported as [`LoadError::Schema`] with a JSONPath-style location, and
//! documents that parse but describe an impossible model are rejected as
//! [`LoadError::Invariant`] naming the violated condition. Derivation
//! documents are validated for shape and syntax only; whether the proof
//! itself is correct is the checker's verdict, not the loader's.
//!
//! A model document holds `signature`, `worlds`, `access` (pairs of world
//! names), `domains` (element names per world), `const_interp`, `positive`
//! and `negative` (tuples of element names per world and predicate). The
//! universe is the union of the domains; a nullary predicate is verified or
//! falsified by the presence of the empty tuple `[]`. A derivation document
//! holds `mode`, `preset`, `signature`, `hypotheses` (formula text) and
//! `lines` of `{formula, rule}` with rules like `"axiom:I1"`, `"hyp:0"`,
//! `"mp:1,2"`, `"mb:0"`, `"md:0"`, `"br1:0,x"`, `"br2:0,x"`.
//!
//! Dumping is deterministic (sorted keys, stable list orders) and
//! `load(dump(x)) == x` as long as every individual of a model inhabits at
//! least one domain, since the document has no way to mention an element
//! outside every domain.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Value};
use thiserror::Error;

use crate::calculus::{Derivation, Justification, Line, Mode, Preset, SchemeId};
use crate::parser::parse_formula;
use crate::semantics::{ExtensionTable, KripkeModel};
use crate::syntax::{Formula, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("at {path}: expected {expected}")]
    Schema { path: String, expected: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

fn schema(path: &str, expected: impl Into<String>) -> LoadError {
    LoadError::Schema {
        path: path.to_string(),
        expected: expected.into(),
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, LoadError> {
    v.as_object().ok_or_else(|| schema(path, "an object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, LoadError> {
    v.as_array().ok_or_else(|| schema(path, "an array"))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str, LoadError> {
    v.as_str().ok_or_else(|| schema(path, "a string"))
}

fn as_arity(v: &Value, path: &str) -> Result<usize, LoadError> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| schema(path, "a non-negative integer"))
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, LoadError> {
    obj.get(key)
        .ok_or_else(|| schema(path, format!("a `{key}` key")))
}

fn string_list(v: &Value, path: &str) -> Result<Vec<String>, LoadError> {
    let arr = as_array(v, path)?;
    arr.iter()
        .enumerate()
        .map(|(i, s)| Ok(as_str(s, &format!("{path}[{i}]"))?.to_string()))
        .collect()
}

fn load_signature(v: &Value, path: &str) -> Result<Signature, LoadError> {
    let obj = as_object(v, path)?;
    let mut predicates = Vec::new();
    if let Some(p) = obj.get("predicates") {
        let ppath = format!("{path}.predicates");
        for (name, arity) in as_object(p, &ppath)? {
            predicates.push((
                name.clone(),
                as_arity(arity, &format!("{ppath}.{name}"))?,
            ));
        }
    }
    let constants = match obj.get("constants") {
        Some(c) => string_list(c, &format!("{path}.constants"))?,
        None => Vec::new(),
    };
    Signature::new(predicates, constants).map_err(|e| LoadError::Invariant(e.to_string()))
}

fn dump_signature(sig: &Signature) -> Value {
    let mut predicates = Map::new();
    for (name, arity) in sig.predicates() {
        predicates.insert(name.to_string(), Value::from(arity as u64));
    }
    let constants: Vec<Value> = sig.constants().map(Value::from).collect();
    let mut obj = Map::new();
    obj.insert("predicates".to_string(), Value::Object(predicates));
    obj.insert("constants".to_string(), Value::Array(constants));
    Value::Object(obj)
}

/// Reads a model document, reporting shape problems with their location
/// and structural violations by the condition they break.
pub fn load_model(text: &str) -> Result<KripkeModel, LoadError> {
    let v: Value = serde_json::from_str(text).map_err(|e| LoadError::Json(e.to_string()))?;
    let obj = as_object(&v, "$")?;
    let sig = load_signature(get(obj, "signature", "$")?, "$.signature")?;

    let worlds = string_list(get(obj, "worlds", "$")?, "$.worlds")?;
    let world_index: BTreeMap<&str, usize> = worlds
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let resolve_world = |name: &str, path: &str| -> Result<usize, LoadError> {
        world_index
            .get(name)
            .copied()
            .ok_or_else(|| schema(path, format!("a declared world name, got `{name}`")))
    };

    let mut access = BTreeSet::new();
    for (i, pair) in as_array(get(obj, "access", "$")?, "$.access")?
        .iter()
        .enumerate()
    {
        let path = format!("$.access[{i}]");
        let pair = as_array(pair, &path)?;
        if pair.len() != 2 {
            return Err(schema(&path, "a pair of world names"));
        }
        let from = resolve_world(as_str(&pair[0], &format!("{path}[0]"))?, &format!("{path}[0]"))?;
        let to = resolve_world(as_str(&pair[1], &format!("{path}[1]"))?, &format!("{path}[1]"))?;
        access.insert((from, to));
    }

    let domains_obj = as_object(get(obj, "domains", "$")?, "$.domains")?;
    for key in domains_obj.keys() {
        resolve_world(key, "$.domains")?;
    }
    let mut domain_names: Vec<Vec<String>> = Vec::with_capacity(worlds.len());
    for w in &worlds {
        let path = format!("$.domains.{w}");
        let entry = domains_obj
            .get(w)
            .ok_or_else(|| schema("$.domains", format!("an entry for world `{w}`")))?;
        domain_names.push(string_list(entry, &path)?);
    }
    let universe: BTreeSet<String> = domain_names.iter().flatten().cloned().collect();
    let individuals: Vec<String> = universe.into_iter().collect();
    let elem_index: BTreeMap<&str, usize> = individuals
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_str(), i))
        .collect();
    let resolve_elem = |name: &str, path: &str| -> Result<usize, LoadError> {
        elem_index.get(name).copied().ok_or_else(|| {
            schema(
                path,
                format!("an element declared in some domain, got `{name}`"),
            )
        })
    };
    let domains: Vec<BTreeSet<usize>> = domain_names
        .iter()
        .map(|names| names.iter().map(|n| elem_index[n.as_str()]).collect())
        .collect();

    let mut const_interp: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new(); worlds.len()];
    if let Some(ci) = obj.get("const_interp") {
        let ci_obj = as_object(ci, "$.const_interp")?;
        for (wname, table) in ci_obj {
            let w = resolve_world(wname, "$.const_interp")?;
            let tpath = format!("$.const_interp.{wname}");
            for (cname, elem) in as_object(table, &tpath)? {
                let epath = format!("{tpath}.{cname}");
                let e = resolve_elem(as_str(elem, &epath)?, &epath)?;
                const_interp[w].insert(cname.clone(), e);
            }
        }
    }

    let mut tables = [
        vec![ExtensionTable::new(); worlds.len()],
        vec![ExtensionTable::new(); worlds.len()],
    ];
    for (key, out) in ["positive", "negative"].iter().zip(tables.iter_mut()) {
        let Some(section) = obj.get(*key) else {
            continue;
        };
        let spath = format!("$.{key}");
        for (wname, table) in as_object(section, &spath)? {
            let w = resolve_world(wname, &spath)?;
            let tpath = format!("{spath}.{wname}");
            for (pred, tuples) in as_object(table, &tpath)? {
                let ppath = format!("{tpath}.{pred}");
                let mut ext = BTreeSet::new();
                for (i, tuple) in as_array(tuples, &ppath)?.iter().enumerate() {
                    let tup_path = format!("{ppath}[{i}]");
                    let names = string_list(tuple, &tup_path)?;
                    let mut indexed = Vec::with_capacity(names.len());
                    for (j, n) in names.iter().enumerate() {
                        indexed.push(resolve_elem(n, &format!("{tup_path}[{j}]"))?);
                    }
                    ext.insert(indexed);
                }
                out[w].insert(pred.clone(), ext);
            }
        }
    }
    let [positive, negative] = tables;

    KripkeModel::new(
        sig,
        worlds,
        access,
        individuals,
        domains,
        const_interp,
        positive,
        negative,
    )
    .map_err(|e| LoadError::Invariant(e.to_string()))
}

/// Writes a model document. Deterministic: keys are sorted and lists keep
/// the model's internal order.
pub fn dump_model(m: &KripkeModel) -> String {
    let name_of = |e: usize| m.individuals()[e].clone();
    let mut root = Map::new();
    root.insert("signature".to_string(), dump_signature(m.signature()));
    root.insert(
        "worlds".to_string(),
        Value::Array(m.worlds().iter().map(|w| Value::from(w.as_str())).collect()),
    );
    root.insert(
        "access".to_string(),
        Value::Array(
            m.access()
                .iter()
                .map(|&(u, v)| {
                    Value::Array(vec![
                        Value::from(m.worlds()[u].as_str()),
                        Value::from(m.worlds()[v].as_str()),
                    ])
                })
                .collect(),
        ),
    );
    let mut domains = Map::new();
    let mut const_interp = Map::new();
    let mut positive = Map::new();
    let mut negative = Map::new();
    for (w, wname) in m.worlds().iter().enumerate() {
        domains.insert(
            wname.clone(),
            Value::Array(m.domain(w).iter().map(|&e| Value::from(name_of(e))).collect()),
        );
        let ci: Map<String, Value> = m
            .const_interp(w)
            .iter()
            .map(|(c, &e)| (c.clone(), Value::from(name_of(e))))
            .collect();
        const_interp.insert(wname.clone(), Value::Object(ci));
        let dump_table = |table: &ExtensionTable| -> Value {
            let obj: Map<String, Value> = table
                .iter()
                .map(|(pred, ext)| {
                    let tuples: Vec<Value> = ext
                        .iter()
                        .map(|tuple| {
                            Value::Array(tuple.iter().map(|&e| Value::from(name_of(e))).collect())
                        })
                        .collect();
                    (pred.clone(), Value::Array(tuples))
                })
                .collect();
            Value::Object(obj)
        };
        positive.insert(wname.clone(), dump_table(m.positive(w)));
        negative.insert(wname.clone(), dump_table(m.negative(w)));
    }
    root.insert("domains".to_string(), Value::Object(domains));
    root.insert("const_interp".to_string(), Value::Object(const_interp));
    root.insert("positive".to_string(), Value::Object(positive));
    root.insert("negative".to_string(), Value::Object(negative));
    serde_json::to_string_pretty(&Value::Object(root)).expect("maps of strings serialize")
}

/// Parses the textual form of a rule citation, inverting its display.
pub fn parse_rule(s: &str) -> Option<Justification> {
    let (head, rest) = s.split_once(':')?;
    match head {
        "axiom" => SchemeId::parse(rest).map(Justification::Axiom),
        "hyp" => rest.parse().ok().map(Justification::Hyp),
        "mb" => rest.parse().ok().map(Justification::Mb),
        "md" => rest.parse().ok().map(Justification::Md),
        "mp" => {
            let (i, j) = rest.split_once(',')?;
            Some(Justification::Mp(i.parse().ok()?, j.parse().ok()?))
        }
        "br1" | "br2" => {
            let (i, x) = rest.split_once(',')?;
            if x.is_empty() {
                return None;
            }
            let i = i.parse().ok()?;
            Some(if head == "br1" {
                Justification::Br1(i, x.to_string())
            } else {
                Justification::Br2(i, x.to_string())
            })
        }
        _ => None,
    }
}

/// Reads a derivation document. Validates shape and formula syntax; the
/// logical correctness of the lines is left to the checker so that a bad
/// proof still loads and produces per-line diagnostics.
pub fn load_derivation(text: &str) -> Result<Derivation, LoadError> {
    let v: Value = serde_json::from_str(text).map_err(|e| LoadError::Json(e.to_string()))?;
    let obj = as_object(&v, "$")?;
    let mode = match as_str(get(obj, "mode", "$")?, "$.mode")? {
        "theorem" => Mode::Theorem,
        "consequence" => Mode::Consequence,
        other => {
            return Err(schema(
                "$.mode",
                format!("\"theorem\" or \"consequence\", got \"{other}\""),
            ))
        }
    };
    let preset = match obj.get("preset") {
        None => Preset::QBK,
        Some(p) => {
            let s = as_str(p, "$.preset")?;
            Preset::parse(s)
                .ok_or_else(|| schema("$.preset", format!("a preset name, got \"{s}\"")))?
        }
    };
    let signature = load_signature(get(obj, "signature", "$")?, "$.signature")?;
    let parse = |text: &str, path: &str| -> Result<Formula, LoadError> {
        parse_formula(text, &signature)
            .map_err(|e| schema(path, format!("a formula over the signature: {e}")))
    };
    let mut hypotheses = Vec::new();
    if let Some(h) = obj.get("hypotheses") {
        for (i, item) in as_array(h, "$.hypotheses")?.iter().enumerate() {
            let path = format!("$.hypotheses[{i}]");
            hypotheses.push(parse(as_str(item, &path)?, &path)?);
        }
    }
    let mut lines = Vec::new();
    for (i, item) in as_array(get(obj, "lines", "$")?, "$.lines")?
        .iter()
        .enumerate()
    {
        let path = format!("$.lines[{i}]");
        let line = as_object(item, &path)?;
        let fpath = format!("{path}.formula");
        let formula = parse(as_str(get(line, "formula", &path)?, &fpath)?, &fpath)?;
        let rpath = format!("{path}.rule");
        let rule_text = as_str(get(line, "rule", &path)?, &rpath)?;
        let justification = parse_rule(rule_text)
            .ok_or_else(|| schema(&rpath, format!("a rule citation, got \"{rule_text}\"")))?;
        lines.push(Line {
            formula,
            justification,
        });
    }
    Ok(Derivation {
        mode,
        preset,
        signature,
        hypotheses,
        lines,
    })
}

/// Writes a derivation document with canonical formula text and rule
/// strings that `load_derivation` reads back verbatim.
pub fn dump_derivation(d: &Derivation) -> String {
    let mut root = Map::new();
    root.insert("mode".to_string(), Value::from(d.mode.to_string()));
    root.insert("preset".to_string(), Value::from(d.preset.to_string()));
    root.insert("signature".to_string(), dump_signature(&d.signature));
    root.insert(
        "hypotheses".to_string(),
        Value::Array(
            d.hypotheses
                .iter()
                .map(|h| Value::from(h.to_string()))
                .collect(),
        ),
    );
    root.insert(
        "lines".to_string(),
        Value::Array(
            d.lines
                .iter()
                .map(|l| {
                    let mut line = Map::new();
                    line.insert("formula".to_string(), Value::from(l.formula.to_string()));
                    line.insert(
                        "rule".to_string(),
                        Value::from(l.justification.to_string()),
                    );
                    Value::Object(line)
                })
                .collect(),
        ),
    );
    serde_json::to_string_pretty(&Value::Object(root)).expect("maps of strings serialize")
}
