//! Parser for the expression grammar:
//!
//! ```text
//! expr   := term ('|' term)*
//! term   := factor ('&' factor)*
//! factor := '!'? (NAME | '(' expr ')')
//! ```
//!
//! A NAME is any maximal run of characters outside `& | ! ( )` and
//! whitespace, which lets range-descriptor names like `v∈[-1,0]` appear
//! unquoted.

use crate::error::{Error, Result};
use crate::expr::{Literal, SetExpression};
use crate::store::{DescriptorFamily, FamilyId, Store};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    And,
    Or,
    Not,
    Open,
    Close,
    Name(String),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '&' => {
                chars.next();
                tokens.push((pos, Token::And));
            }
            '|' => {
                chars.next();
                tokens.push((pos, Token::Or));
            }
            '!' => {
                chars.next();
                tokens.push((pos, Token::Not));
            }
            '(' => {
                chars.next();
                tokens.push((pos, Token::Open));
            }
            ')' => {
                chars.next();
                tokens.push((pos, Token::Close));
            }
            _ => {
                let start = pos;
                let mut name = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '&' | '|' | '!' | '(' | ')') {
                        break;
                    }
                    name.push(c);
                    chars.next();
                }
                tokens.push((start, Token::Name(name)));
            }
        }
    }
    Ok(tokens)
}

enum Ast {
    Var(usize),
    Not(Box<Ast>),
    And(Box<Ast>, Box<Ast>),
    Or(Box<Ast>, Box<Ast>),
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    family: &'a DescriptorFamily,
    text_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(p, _)| *p)
            .unwrap_or(self.text_len)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: self.here(),
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut node = self.term()?;
        while self.peek() == Some(&Token::Or) {
            self.bump();
            node = Ast::Or(Box::new(node), Box::new(self.term()?));
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Ast> {
        let mut node = self.factor()?;
        while self.peek() == Some(&Token::And) {
            self.bump();
            node = Ast::And(Box::new(node), Box::new(self.factor()?));
        }
        Ok(node)
    }

    fn factor(&mut self) -> Result<Ast> {
        if self.peek() == Some(&Token::Not) {
            self.bump();
            return Ok(Ast::Not(Box::new(self.factor()?)));
        }
        match self.bump() {
            Some(Token::Name(name)) => {
                let idx = self
                    .family
                    .position_of(&name)
                    .ok_or_else(|| Error::UnknownDescriptor(name.clone()))?;
                Ok(Ast::Var(idx))
            }
            Some(Token::Open) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Token::Close) => Ok(inner),
                    _ => Err(self.err("expected ')'")),
                }
            }
            Some(tok) => Err(self.err(format!("unexpected token {tok:?}"))),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

const MAX_CONJUNCTS: usize = 4096;

/// Negation-normal-form DNF conversion. Contradictory conjuncts (a literal
/// and its negation) are dropped.
fn to_dnf(ast: &Ast, negate: bool) -> Result<Vec<Vec<Literal>>> {
    let out = match (ast, negate) {
        (Ast::Var(i), neg) => vec![vec![Literal {
            index: *i,
            negated: neg,
        }]],
        (Ast::Not(inner), neg) => to_dnf(inner, !neg)?,
        (Ast::And(a, b), false) | (Ast::Or(a, b), true) => {
            let left = to_dnf(a, negate)?;
            let right = to_dnf(b, negate)?;
            if left.len().saturating_mul(right.len()) > MAX_CONJUNCTS {
                return Err(Error::MalformedInput(
                    "expression expands to too many conjuncts".into(),
                ));
            }
            let mut cross = Vec::with_capacity(left.len() * right.len());
            for l in &left {
                'merge: for r in &right {
                    let mut conj = l.clone();
                    for lit in r {
                        if let Some(existing) = conj.iter().find(|c| c.index == lit.index) {
                            if existing.negated != lit.negated {
                                continue 'merge; // contradictory, drop
                            }
                        } else {
                            conj.push(*lit);
                        }
                    }
                    cross.push(conj);
                }
            }
            cross
        }
        (Ast::And(a, b), true) | (Ast::Or(a, b), false) => {
            let mut left = to_dnf(a, negate)?;
            let mut right = to_dnf(b, negate)?;
            left.append(&mut right);
            if left.len() > MAX_CONJUNCTS {
                return Err(Error::MalformedInput(
                    "expression expands to too many conjuncts".into(),
                ));
            }
            left
        }
    };
    Ok(out)
}

/// Parses `text` against the named family's descriptors.
pub fn parse_in_family(
    text: &str,
    family: &DescriptorFamily,
    family_id: FamilyId,
) -> Result<SetExpression> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(Error::Parse {
            position: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        family,
        text_len: text.len(),
    };
    let ast = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.err("trailing input after expression"));
    }
    let conjuncts = to_dnf(&ast, false)?;
    Ok(SetExpression::from_conjuncts(family_id, conjuncts).normalized())
}

/// Parses `text`, resolving descriptor names against X first, then Y.
pub fn parse(text: &str, store: &Store) -> Result<SetExpression> {
    match parse_in_family(text, &store.x, FamilyId::X) {
        Ok(e) => Ok(e),
        Err(Error::UnknownDescriptor(_)) => parse_in_family(text, &store.y, FamilyId::Y),
        Err(e) => Err(e),
    }
}
