//! Canonical text rendering of formulas.
//!
//! The printer inverts the parser: `parse(print(f)) == f` for every
//! well-formed tree, and printing a parsed canonical string returns it
//! unchanged. Output is canonical rather than minimal: parentheses are
//! emitted exactly where the grammar needs them, plus around every
//! quantifier that does not sit in a maximal-scope position.
//!
//! `f -> _|_` renders as `!f`; the two trees are the same tree, so this is a
//! display choice, not a transformation. No other abbreviation is
//! reintroduced on output.

use std::fmt;

use crate::syntax::{Formula, Term};

/// Grammar position the next piece of text must parse back from.
/// Ordered from loosest to tightest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ctx {
    Form,
    Or,
    And,
    Unary,
}

pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f, Ctx::Form);
    out
}

pub fn print_term(t: &Term) -> String {
    t.to_string()
}

fn write_formula(out: &mut String, f: &Formula, ctx: Ctx) {
    match f {
        Formula::Atom(pred, args) => {
            out.push_str(pred);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&a.to_string());
                }
                out.push(')');
            }
        }
        Formula::Bottom => out.push_str("_|_"),
        Formula::Neg(g) => {
            out.push('~');
            write_formula(out, g, Ctx::Unary);
        }
        Formula::Box(g) => {
            out.push_str("[]");
            write_formula(out, g, Ctx::Unary);
        }
        Formula::Diamond(g) => {
            out.push_str("<>");
            write_formula(out, g, Ctx::Unary);
        }
        // `g -> _|_` displays as `!g`, which parses to the same tree.
        Formula::Imp(g, r) if **r == Formula::Bottom => {
            out.push('!');
            write_formula(out, g, Ctx::Unary);
        }
        Formula::Imp(l, r) => {
            paren_unless(out, ctx == Ctx::Form, |out| {
                write_formula(out, l, Ctx::Or);
                out.push_str(" -> ");
                write_formula(out, r, Ctx::Form);
            });
        }
        Formula::Or(l, r) => {
            paren_unless(out, ctx <= Ctx::Or, |out| {
                write_formula(out, l, Ctx::Or);
                out.push_str(" | ");
                write_formula(out, r, Ctx::And);
            });
        }
        Formula::And(l, r) => {
            paren_unless(out, ctx <= Ctx::And, |out| {
                write_formula(out, l, Ctx::And);
                out.push_str(" & ");
                write_formula(out, r, Ctx::Unary);
            });
        }
        Formula::Forall(x, g) | Formula::Exists(x, g) => {
            // Maximal scope when the grammar allows it; otherwise the
            // quantifier is wrapped so its scope stays explicit.
            let word = if matches!(f, Formula::Forall(_, _)) {
                "forall"
            } else {
                "exists"
            };
            let bare = ctx == Ctx::Form;
            if !bare {
                out.push('(');
            }
            out.push_str(word);
            out.push(' ');
            out.push_str(x);
            out.push_str(". ");
            write_formula(out, g, Ctx::Form);
            if !bare {
                out.push(')');
            }
        }
    }
}

fn paren_unless(out: &mut String, fits: bool, body: impl FnOnce(&mut String)) {
    if fits {
        body(out);
    } else {
        out.push('(');
        body(out);
        out.push(')');
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}
