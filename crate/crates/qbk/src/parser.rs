//! Concrete syntax for formulas.
//!
//! ```text
//! form  := ("forall" | "exists") VAR "." form
//!        | or ("->" form | "<->" form | "<=>" form)?
//! or    := and ("|" and)*
//! and   := unary ("&" unary)*
//! unary := ("~" | "!" | "[]" | "<>") unary
//!        | ("forall" | "exists") VAR "." unary
//!        | atom
//! atom  := "_|_" | IDENT ("(" term ("," term)* ")")? | "(" form ")"
//! term  := IDENT
//! ```
//!
//! `->` binds loosest and associates to the right; `|` is looser than `&`;
//! the prefix operators bind tightest. A quantifier standing where a whole
//! formula may stand takes maximal scope (everything to its right); a
//! quantifier reached through a prefix operator or a binary operand takes
//! minimal scope, so `<> exists x. P(x) -> exists x. <> P(x)` reads as an
//! implication between two quantified modal formulas, while
//! `forall x. P(x) -> Q` quantifies the whole implication.
//!
//! `!f`, `l <-> r` and `l <=> r` are abbreviations; the parser expands them
//! (see [`crate::syntax::build`]) and the tree never records which spelling
//! was used.
//!
//! Identifiers are `[A-Za-z][A-Za-z0-9_]*`; `forall` and `exists` are
//! reserved. An identifier heading an argument list or standing alone in
//! formula position is a predicate and must be declared in the signature; an
//! identifier in term position is a constant if the signature declares it,
//! otherwise a variable. [`parse_formula_inferred`] instead builds a
//! signature from usage (every head identifier becomes a predicate, every
//! term a variable), which is convenient on the command line.

use std::fmt;

use thiserror::Error;

use crate::syntax::{build, Formula, Signature, Term};

/// Why a string failed to parse, with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("predicate `{pred}` expects {expected} argument(s), found {found} (at byte {position})")]
    Arity {
        pred: String,
        expected: usize,
        found: usize,
        position: usize,
    },
    #[error("unknown symbol `{name}` at byte {position}: not declared as a predicate")]
    UnknownSymbol { name: String, position: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Comma,
    Dot,
    Amp,
    Pipe,
    Arrow,
    Iff,
    Siff,
    Tilde,
    Bang,
    BoxOp,
    DiamondOp,
    Bottom,
    Forall,
    Exists,
    Ident(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Comma => "`,`",
            Tok::Dot => "`.`",
            Tok::Amp => "`&`",
            Tok::Pipe => "`|`",
            Tok::Arrow => "`->`",
            Tok::Iff => "`<->`",
            Tok::Siff => "`<=>`",
            Tok::Tilde => "`~`",
            Tok::Bang => "`!`",
            Tok::BoxOp => "`[]`",
            Tok::DiamondOp => "`<>`",
            Tok::Bottom => "`_|_`",
            Tok::Forall => "`forall`",
            Tok::Exists => "`exists`",
            Tok::Ident(name) => return write!(f, "identifier `{name}`"),
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn lex(input: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = input.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            b'.' => {
                toks.push((Tok::Dot, i));
                i += 1;
            }
            b'&' => {
                toks.push((Tok::Amp, i));
                i += 1;
            }
            b'|' => {
                toks.push((Tok::Pipe, i));
                i += 1;
            }
            b'~' => {
                toks.push((Tok::Tilde, i));
                i += 1;
            }
            b'!' => {
                toks.push((Tok::Bang, i));
                i += 1;
            }
            b'-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((Tok::Arrow, i));
                    i += 2;
                } else {
                    return Err(expected_at(i, "`->`"));
                }
            }
            b'[' => {
                if bytes.get(i + 1) == Some(&b']') {
                    toks.push((Tok::BoxOp, i));
                    i += 2;
                } else {
                    return Err(expected_at(i, "`[]`"));
                }
            }
            b'<' => match (bytes.get(i + 1), bytes.get(i + 2)) {
                (Some(b'>'), _) => {
                    toks.push((Tok::DiamondOp, i));
                    i += 2;
                }
                (Some(b'-'), Some(b'>')) => {
                    toks.push((Tok::Iff, i));
                    i += 3;
                }
                (Some(b'='), Some(b'>')) => {
                    toks.push((Tok::Siff, i));
                    i += 3;
                }
                _ => return Err(expected_at(i, "`<>`, `<->` or `<=>`")),
            },
            b'_' => {
                if bytes.get(i + 1) == Some(&b'|') && bytes.get(i + 2) == Some(&b'_') {
                    toks.push((Tok::Bottom, i));
                    i += 3;
                } else {
                    return Err(expected_at(i, "`_|_`"));
                }
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &input[start..i];
                let tok = match word {
                    "forall" => Tok::Forall,
                    "exists" => Tok::Exists,
                    _ => Tok::Ident(word.to_string()),
                };
                toks.push((tok, start));
            }
            _ => return Err(expected_at(i, "a token")),
        }
    }
    toks.push((Tok::Eof, input.len()));
    Ok(toks)
}

fn expected_at(position: usize, expected: &str) -> ParseError {
    ParseError::Syntax {
        position,
        expected: expected.to_string(),
    }
}

/// How the parser resolves identifiers.
enum Symbols<'a> {
    /// Names are checked against a signature.
    Declared(&'a Signature),
    /// Predicates are recorded as they appear; term identifiers are
    /// variables. Re-use with a different arity is an error.
    Infer(std::collections::BTreeMap<String, usize>),
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    symbols: Symbols<'a>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_pos(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<usize, ParseError> {
        if self.peek() == want {
            Ok(self.bump().1)
        } else {
            Err(expected_at(self.peek_pos(), what))
        }
    }

    fn form(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Forall | Tok::Exists => self.quantified(true),
            _ => {
                let left = self.or()?;
                match self.peek() {
                    Tok::Arrow => {
                        self.bump();
                        let right = self.form()?;
                        Ok(build::imp(left, right))
                    }
                    Tok::Iff => {
                        self.bump();
                        let right = self.form()?;
                        Ok(build::iff(left, right))
                    }
                    Tok::Siff => {
                        self.bump();
                        let right = self.form()?;
                        Ok(build::siff(left, right))
                    }
                    _ => Ok(left),
                }
            }
        }
    }

    /// `maximal` selects the body production: a quantifier in formula
    /// position scopes over everything to its right, one in unary position
    /// only over the next unary formula.
    fn quantified(&mut self, maximal: bool) -> Result<Formula, ParseError> {
        let (quant, _) = self.bump();
        let var = match self.bump() {
            (Tok::Ident(name), _) => name,
            (_, p) => return Err(expected_at(p, "a variable name after the quantifier")),
        };
        self.expect(&Tok::Dot, "`.` after the quantified variable")?;
        let body = if maximal { self.form()? } else { self.unary()? };
        Ok(match quant {
            Tok::Forall => build::forall(&var, body),
            _ => build::exists(&var, body),
        })
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let right = self.and()?;
            left = build::or(left, right);
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let right = self.unary()?;
            left = build::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Tilde => {
                self.bump();
                Ok(build::neg(self.unary()?))
            }
            Tok::Bang => {
                self.bump();
                Ok(build::not(self.unary()?))
            }
            Tok::BoxOp => {
                self.bump();
                Ok(build::boxf(self.unary()?))
            }
            Tok::DiamondOp => {
                self.bump();
                Ok(build::diamond(self.unary()?))
            }
            Tok::Forall | Tok::Exists => self.quantified(false),
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.bump() {
            (Tok::Bottom, _) => Ok(Formula::Bottom),
            (Tok::LParen, _) => {
                let inner = self.form()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(inner)
            }
            (Tok::Ident(name), ident_pos) => {
                let mut args = Vec::new();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    loop {
                        args.push(self.term()?);
                        match self.bump() {
                            (Tok::Comma, _) => continue,
                            (Tok::RParen, _) => break,
                            (_, p) => return Err(expected_at(p, "`,` or `)`")),
                        }
                    }
                }
                self.resolve_atom(name, args, ident_pos)
            }
            (tok, p) => Err(ParseError::Syntax {
                position: p,
                expected: format!("a formula, found {tok}"),
            }),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.bump() {
            (Tok::Ident(name), _) => match &self.symbols {
                Symbols::Declared(sig) if sig.is_constant(&name) => Ok(Term::Const(name)),
                _ => Ok(Term::Var(name)),
            },
            (_, p) => Err(expected_at(p, "a term")),
        }
    }

    fn resolve_atom(
        &mut self,
        name: String,
        args: Vec<Term>,
        position: usize,
    ) -> Result<Formula, ParseError> {
        match &mut self.symbols {
            Symbols::Declared(sig) => {
                let expected = match sig.arity(&name) {
                    Some(a) => a,
                    None => return Err(ParseError::UnknownSymbol { name, position }),
                };
                if args.len() != expected {
                    return Err(ParseError::Arity {
                        pred: name,
                        expected,
                        found: args.len(),
                        position,
                    });
                }
                Ok(Formula::Atom(name, args))
            }
            Symbols::Infer(seen) => {
                let arity = *seen.entry(name.clone()).or_insert(args.len());
                if args.len() != arity {
                    return Err(ParseError::Arity {
                        pred: name,
                        expected: arity,
                        found: args.len(),
                        position,
                    });
                }
                Ok(Formula::Atom(name, args))
            }
        }
    }

    fn finish(&mut self, f: Formula) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(f)
        } else {
            Err(expected_at(self.peek_pos(), "end of input"))
        }
    }
}

/// Parses a formula against a declared signature.
pub fn parse_formula(input: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(input)?,
        pos: 0,
        symbols: Symbols::Declared(sig),
    };
    let f = p.form()?;
    p.finish(f)
}

/// Parses a formula, inferring a signature: every identifier applied to
/// arguments or standing alone as an atom becomes a predicate, every term
/// identifier a variable. The inferred signature declares no constants.
pub fn parse_formula_inferred(input: &str) -> Result<(Formula, Signature), ParseError> {
    let mut p = Parser {
        toks: lex(input)?,
        pos: 0,
        symbols: Symbols::Infer(Default::default()),
    };
    let f = p.form()?;
    let f = p.finish(f)?;
    let preds = match p.symbols {
        Symbols::Infer(seen) => seen,
        Symbols::Declared(_) => unreachable!(),
    };
    // Predicate names cannot clash with constants: none are declared.
    let sig = Signature::new(preds, []).expect("inferred signature is well formed");
    Ok((f, sig))
}
