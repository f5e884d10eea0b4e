//! Model formulas such as `y ~ gender + s(age, K=0, by=gender)`.
//!
//! Terms: a bare name is a linear effect, or a binary factor when it is
//! also used as `by=` in a smooth; `factor(g)` forces a factor;
//! `s(x, K=k, by=g)` is a cubic B-spline in `x` with `k` interior knots
//! (default 4), optionally one curve per level of `g`. A right-hand side of
//! `1` is the intercept-only model.

use aroc_core::splines::{ModelSpec, Term};

pub const DEFAULT_KNOTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    pub response: String,
    pub spec: ModelSpec,
}

impl Formula {
    /// Covariate names in first-use order.
    pub fn covariates(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |n: &String| {
            if !out.contains(n) {
                out.push(n.clone());
            }
        };
        for t in &self.spec.terms {
            match t {
                Term::Linear { covariate } | Term::Smooth { covariate, .. } | Term::Factor { covariate } => {
                    push(covariate)
                }
                Term::FactorByCurve { covariate, factor, .. } => {
                    push(covariate);
                    push(factor);
                }
            }
        }
        out
    }

    /// Names entering the model as binary factors.
    pub fn factors(&self) -> Vec<String> {
        self.spec
            .expanded_terms()
            .into_iter()
            .filter_map(|t| match t {
                Term::Factor { covariate } => Some(covariate),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Num(String),
    Tilde,
    Plus,
    LParen,
    RParen,
    Comma,
    Eq,
}

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '~' => {
                toks.push(Tok::Tilde);
                i += 1;
            }
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                toks.push(Tok::Comma);
                i += 1;
            }
            '=' => {
                toks.push(Tok::Eq);
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                toks.push(Tok::Num(chars[start..i].iter().collect()));
            }
            c if c.is_alphabetic() || c == '_' || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                toks.push(Tok::Name(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}` at position {i}")),
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

enum Raw {
    Plain(String),
    Factor(String),
    Smooth {
        x: String,
        knots: usize,
        by: Option<String>,
    },
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), String> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(format!("expected {what}, found {t:?}")),
            None => Err(format!("expected {what}, found end of formula")),
        }
    }

    fn name(&mut self, what: &str) -> Result<String, String> {
        match self.next() {
            Some(Tok::Name(n)) => Ok(n),
            Some(t) => Err(format!("expected {what}, found {t:?}")),
            None => Err(format!("expected {what}, found end of formula")),
        }
    }

    fn term(&mut self) -> Result<Raw, String> {
        let head = self.name("a term")?;
        if self.peek() != Some(&Tok::LParen) {
            return Ok(Raw::Plain(head));
        }
        self.next();
        match head.as_str() {
            "factor" => {
                let g = self.name("a factor name")?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Raw::Factor(g))
            }
            "s" => {
                let x = self.name("a covariate name")?;
                let mut knots = DEFAULT_KNOTS;
                let mut by = None;
                while self.peek() == Some(&Tok::Comma) {
                    self.next();
                    let key = self.name("`K` or `by`")?;
                    self.expect(Tok::Eq, "`=`")?;
                    match key.as_str() {
                        "K" | "k" => match self.next() {
                            Some(Tok::Num(v)) => knots = v.parse().map_err(|_| format!("bad knot count `{v}`"))?,
                            other => return Err(format!("expected a knot count, found {other:?}")),
                        },
                        "by" => by = Some(self.name("a factor name")?),
                        other => return Err(format!("unknown smooth option `{other}`")),
                    }
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(Raw::Smooth { x, knots, by })
            }
            other => Err(format!("unknown function `{other}(...)`")),
        }
    }
}

pub fn parse_formula(src: &str) -> Result<Formula, String> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
    };
    let response = p.name("a response name")?;
    p.expect(Tok::Tilde, "`~`")?;
    if matches!(p.peek(), Some(Tok::Num(n)) if n == "1") && p.toks.len() == p.pos + 1 {
        return Ok(Formula {
            response,
            spec: ModelSpec::intercept_only(),
        });
    }
    let mut raw = vec![p.term()?];
    while let Some(t) = p.next() {
        if t != Tok::Plus {
            return Err(format!("expected `+` between terms, found {t:?}"));
        }
        raw.push(p.term()?);
    }
    let by_names: Vec<String> = raw
        .iter()
        .filter_map(|r| match r {
            Raw::Smooth { by: Some(g), .. } => Some(g.clone()),
            _ => None,
        })
        .collect();
    let terms: Vec<Term> = raw
        .into_iter()
        .map(|r| match r {
            Raw::Plain(n) if by_names.contains(&n) => Term::Factor { covariate: n },
            Raw::Plain(n) => Term::Linear { covariate: n },
            Raw::Factor(g) => Term::Factor { covariate: g },
            Raw::Smooth { x, knots, by: None } => Term::Smooth { covariate: x, knots },
            Raw::Smooth { x, knots, by: Some(g) } => Term::FactorByCurve {
                covariate: x,
                factor: g,
                knots,
            },
        })
        .collect();
    for (i, t) in terms.iter().enumerate() {
        if terms[..i].contains(t) {
            return Err(format!("term {t:?} appears twice"));
        }
    }
    if terms
        .iter()
        .any(|t| matches!(t, Term::Linear { covariate } | Term::Smooth { covariate, .. } if *covariate == response))
    {
        return Err(format!("response `{response}` also appears as a covariate"));
    }
    Ok(Formula {
        response,
        spec: ModelSpec::new(terms),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_interaction_formula() {
        let f = parse_formula("y ~ gender + s(age, K=0, by=gender)").unwrap();
        assert_eq!(f.response, "y");
        assert_eq!(
            f.spec.terms,
            vec![
                Term::Factor {
                    covariate: "gender".into()
                },
                Term::FactorByCurve {
                    covariate: "age".into(),
                    factor: "gender".into(),
                    knots: 0
                },
            ]
        );
        assert_eq!(f.covariates(), vec!["gender", "age"]);
        assert_eq!(f.factors(), vec!["gender"]);
    }

    #[test]
    fn defaults_and_linear_terms() {
        let f = parse_formula("marker~x1+s(x2)").unwrap();
        assert_eq!(
            f.spec.terms[1],
            Term::Smooth {
                covariate: "x2".into(),
                knots: DEFAULT_KNOTS
            }
        );
        assert!(!f.spec.is_parametric());
        let g = parse_formula("y ~ x + factor(g)").unwrap();
        assert!(g.spec.is_parametric());
        assert_eq!(parse_formula("y ~ 1").unwrap().spec, ModelSpec::intercept_only());
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "y",
            "~ x",
            "y ~",
            "y ~ x x",
            "y ~ s(x, K=a)",
            "y ~ t(x)",
            "y ~ s(x, df=3)",
            "y ~ x + x",
            "y ~ y",
            "y ~ x$",
        ] {
            assert!(parse_formula(bad).is_err(), "{bad}");
        }
    }
}
