//! Concrete syntax.
//!
//! ```text
//! formula  := imp
//! imp      := or ( "->" imp )?
//! or       := and ( "|" and )*
//! and      := unary ( "&" unary )*
//! unary    := "~" unary | "K" "{" agents "}" unary | primary
//! primary  := "(" formula ")" | "obs" "{" agents "}" "(" ids ")" "^" id | atom
//! sequent  := members? "|-" members?
//! member   := label ":" formula | label "~" "{" agents "}" label
//! ```

use std::collections::BTreeMap;

use crate::error::ParseError;
use crate::structure::{Group, JointObservation, Name, ObservationStructure};
use crate::syntax::{Formula, Label, LabelledFormula, ObsAtom, RelAtom, Sequent};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Caret,
    Tilde,
    Amp,
    Bar,
    Arrow,
    Turnstile,
    Colon,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier {s:?}"),
        Tok::LBrace => "'{'".into(),
        Tok::RBrace => "'}'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Caret => "'^'".into(),
        Tok::Tilde => "'~'".into(),
        Tok::Amp => "'&'".into(),
        Tok::Bar => "'|'".into(),
        Tok::Arrow => "'->'".into(),
        Tok::Turnstile => "'|-'".into(),
        Tok::Colon => "':'".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'{' => Tok::LBrace,
            b'}' => Tok::RBrace,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'^' => Tok::Caret,
            b'~' => Tok::Tilde,
            b'&' => Tok::Amp,
            b':' => Tok::Colon,
            b'|' if bytes.get(i + 1) == Some(&b'-') => {
                i += 1;
                Tok::Turnstile
            }
            b'|' => Tok::Bar,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError { offset: i, message: format!("unexpected character {ch:?}") });
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    structure: &'a ObservationStructure,
}

impl<'a> Parser<'a> {
    fn new(text: &str, structure: &'a ObservationStructure) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, pos: 0, structure })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { offset: self.offset(), message: message.into() })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {}, found {}", describe(&want), describe(self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected {what}, found {}", describe(&other))),
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        let at = self.offset();
        let s = self.ident(what)?;
        if s.as_bytes()[0].is_ascii_digit() {
            return Err(ParseError { offset: at, message: format!("{what} {s:?} must not start with a digit") });
        }
        Ok(s)
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conjunction()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            acc = Formula::or(acc, self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Tilde => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(k) if k == "K" && *self.peek2() == Tok::LBrace => {
                self.bump();
                let group = self.group()?;
                Ok(Formula::know(group, self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(k) if k == "obs" && *self.peek2() == Tok::LBrace => {
                self.bump();
                self.observation_atom()
            }
            Tok::Ident(_) => Ok(Formula::atom(&self.name("atom")?)),
            other => self.error(format!("expected a formula, found {}", describe(&other))),
        }
    }

    /// `{a,b}` as written, in source order, with duplicates rejected.
    fn agent_list(&mut self) -> Result<Vec<(String, usize)>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut agents: Vec<(String, usize)> = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let at = self.offset();
                let a = self.ident("agent")?;
                if self.structure.agent_index(&a).is_none() {
                    return Err(ParseError { offset: at, message: format!("unknown agent {a}") });
                }
                if agents.iter().any(|(x, _)| *x == a) {
                    return Err(ParseError { offset: at, message: format!("agent {a} listed twice") });
                }
                agents.push((a, at));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(agents)
    }

    fn group(&mut self) -> Result<Group, ParseError> {
        let agents = self.agent_list()?;
        Ok(Group::new(agents.iter().map(|(a, _)| a)))
    }

    fn observation_atom(&mut self) -> Result<Formula, ParseError> {
        let group_at = self.offset();
        let agents = self.agent_list()?;
        if agents.is_empty() {
            return Err(ParseError {
                offset: group_at,
                message: "observation atoms need a nonempty group".into(),
            });
        }
        self.expect(Tok::LParen)?;
        let mut by_agent: BTreeMap<String, Name> = BTreeMap::new();
        for (i, (agent, _)) in agents.iter().enumerate() {
            if i > 0 {
                self.expect(Tok::Comma)?;
            }
            let at = self.offset();
            let o = self.ident("observation")?;
            let known = self
                .structure
                .observations_of(agent)
                .is_some_and(|obs| obs.iter().any(|x| x.as_ref() == o));
            if !known {
                return Err(ParseError {
                    offset: at,
                    message: format!("unknown observation {o} for agent {agent}"),
                });
            }
            by_agent.insert(agent.clone(), Name::from(o.as_str()));
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Caret)?;
        let at = self.offset();
        let r = self.ident("result")?;
        if self.structure.result_index(&r).is_none() {
            return Err(ParseError { offset: at, message: format!("unknown result {r}") });
        }
        let group = Group::new(by_agent.keys());
        let components = by_agent.into_values().collect();
        Ok(Formula::Obs(ObsAtom {
            observation: JointObservation::new(group, components),
            result: Name::from(r.as_str()),
        }))
    }

    fn member(&mut self, seq: &mut Sequent, left: bool) -> Result<(), ParseError> {
        let at = self.offset();
        let label = Label::new(&self.name("label")?);
        match self.peek() {
            Tok::Colon => {
                self.bump();
                let lf = LabelledFormula::new(label, self.formula()?);
                if left {
                    seq.antecedent.insert(lf);
                } else {
                    seq.succedent.insert(lf);
                }
                Ok(())
            }
            Tok::Tilde => {
                if !left {
                    return Err(ParseError {
                        offset: at,
                        message: "relational atoms may only occur in the antecedent".into(),
                    });
                }
                self.bump();
                let group = self.group()?;
                let right = Label::new(&self.name("label")?);
                seq.relations.insert(RelAtom::new(label, group, right));
                Ok(())
            }
            other => self.error(format!("expected ':' or '~' after label, found {}", describe(other))),
        }
    }

    fn members(&mut self, seq: &mut Sequent, left: bool) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Turnstile | Tok::End) {
            return Ok(());
        }
        loop {
            self.member(seq, left)?;
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                return Ok(());
            }
        }
    }

    fn sequent(&mut self) -> Result<Sequent, ParseError> {
        let mut seq = Sequent::new();
        self.members(&mut seq, true)?;
        self.expect(Tok::Turnstile)?;
        self.members(&mut seq, false)?;
        Ok(seq)
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            self.error(format!("unexpected {}", describe(self.peek())))
        }
    }
}

/// Parses a formula, checking every agent, observation and result against
/// the structure.
pub fn parse_formula(text: &str, structure: &ObservationStructure) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, structure)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Parses `Gamma |- Delta`.
pub fn parse_sequent(text: &str, structure: &ObservationStructure) -> Result<Sequent, ParseError> {
    let mut p = Parser::new(text, structure)?;
    let seq = p.sequent()?;
    p.finish()?;
    Ok(seq)
}

/// Label given to a bare formula when it is turned into a goal sequent.
pub const ROOT_LABEL: &str = "s";

/// A sequent if the text contains `|-`, otherwise the goal `|- s: A`.
pub fn parse_input(text: &str, structure: &ObservationStructure) -> Result<Sequent, ParseError> {
    if text.contains("|-") {
        parse_sequent(text, structure)
    } else {
        Ok(Sequent::goal(ROOT_LABEL, parse_formula(text, structure)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::print_formula;

    fn c2() -> ObservationStructure {
        ObservationStructure::from_json(
            r#"{"agents":["a","b"],"observations":{"a":["oa"],"b":["ob1","ob2"]},"results":["0","1"],"compose":"max"}"#,
        )
        .unwrap()
    }

    fn ga() -> Group {
        Group::new(["a"])
    }

    #[test]
    fn grammar_examples() {
        let s = c2();
        let p = Formula::atom("p");
        let q = Formula::atom("q");
        assert_eq!(
            parse_formula("K{a} p -> p", &s).unwrap(),
            Formula::implies(Formula::know(ga(), p.clone()), p.clone())
        );
        let obs = JointObservation::new(ga(), vec!["oa".into()]);
        assert_eq!(parse_formula("obs{a}(oa)^1", &s).unwrap(), Formula::obs(obs, "1"));
        let h4 = Formula::implies(
            Formula::know(ga(), Formula::implies(p.clone(), q.clone())),
            Formula::implies(Formula::know(ga(), p), Formula::know(ga(), q)),
        );
        assert_eq!(parse_formula("K{a}(p -> q) -> (K{a} p -> K{a} q)", &s).unwrap(), h4);
    }

    #[test]
    fn precedence_and_associativity() {
        let s = c2();
        let f = parse_formula("~p & q | r -> p -> q", &s).unwrap();
        assert_eq!(print_formula(&f), "~p & q | r -> p -> q");
        let (p, q, r) = (Formula::atom("p"), Formula::atom("q"), Formula::atom("r"));
        assert_eq!(
            parse_formula("p & q & r", &s).unwrap(),
            Formula::and(Formula::and(p.clone(), q.clone()), r.clone())
        );
        assert_eq!(
            parse_formula("p -> q -> r", &s).unwrap(),
            Formula::implies(p.clone(), Formula::implies(q.clone(), r))
        );
        assert_eq!(
            parse_formula("K{} ~p", &s).unwrap(),
            Formula::know(Group::empty(), Formula::not(p))
        );
    }

    #[test]
    fn observation_components_follow_agents() {
        let s = c2();
        let a = parse_formula("obs{b,a}(ob2,oa)^0", &s).unwrap();
        let b = parse_formula("obs{a,b}(oa,ob2)^0", &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_input() {
        let s = c2();
        for text in [
            "K{c} p",
            "obs{a}(ob1)^0",
            "obs{a}(oa)^2",
            "obs{}()^0",
            "p &",
            "(p",
            "p q",
            "1p",
            "p $ q",
            "K{a,a} p",
        ] {
            assert!(parse_formula(text, &s).is_err(), "{text}");
        }
        let err = parse_formula("p & K{z} q", &s).unwrap_err();
        assert_eq!(err.offset, 6);
    }

    #[test]
    fn sequents() {
        let s = c2();
        let seq = parse_sequent("s: K{a} p, s ~{a} t |- t: p, s: q", &s).unwrap();
        assert_eq!(seq.antecedent.len(), 1);
        assert_eq!(seq.relations.len(), 1);
        assert_eq!(seq.succedent.len(), 2);
        assert_eq!(parse_sequent(&seq.to_string(), &s).unwrap(), seq);
        assert_eq!(parse_sequent("|-", &s).unwrap(), Sequent::new());
        assert!(parse_sequent("|- s ~{a} t", &s).is_err());
        let seq = parse_sequent("s: obs{a,b}(oa,ob1)^0, s: K{a,b} p |- s: p", &s).unwrap();
        assert_eq!(seq.antecedent.len(), 2);
        assert_eq!(parse_input("p", &s).unwrap(), Sequent::goal("s", Formula::atom("p")));
    }
}
