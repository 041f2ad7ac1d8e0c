//! Text and JSON forms of [`Expression`].
//!
//! Text grammar (`S` is a single space):
//!
//! ```text
//! expression := term ( S "+" S term )*
//! term       := [ "-" ] [ rational S? "*" S? ] factor ( S? op S? factor )*
//! op         := "*" | "^"
//! factor     := "<" int ( "." int )* ">" [ "_c" ]
//! rational   := int [ "/" int ]
//! ```
//!
//! The zero expression renders as `0`.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{Bracket, BracketKind, Coeff, Expression, ProductSymbol, TermAccumulator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

pub fn render(expr: &Expression, format: Format) -> String {
    match format {
        Format::Text => render_text(expr),
        Format::Json => {
            serde_json::to_string(&JsonExpression::from(expr)).expect("plain data serializes")
        }
    }
}

fn render_text(expr: &Expression) -> String {
    if expr.is_zero() {
        return "0".to_string();
    }
    let op = match expr.product {
        ProductSymbol::Tensor => "*",
        ProductSymbol::Wedge => "^",
    };
    let mut out = String::new();
    for (i, t) in expr.terms.iter().enumerate() {
        if i > 0 {
            out.push_str(" + ");
        }
        if !t.coeff.is_one() {
            out.push_str(&t.coeff.numer().to_string());
            if !t.coeff.denom().is_one() {
                out.push('/');
                out.push_str(&t.coeff.denom().to_string());
            }
            out.push('*');
        }
        for (j, b) in t.factors.iter().enumerate() {
            if j > 0 {
                out.push_str(op);
            }
            out.push_str(&b.to_string());
        }
    }
    out
}

/// Parses the text grammar. Bracket contents keep the order written; like
/// terms are merged but nothing is reordered.
pub fn parse(text: &str) -> Result<Expression> {
    let mut p = Parser {
        s: text.as_bytes(),
        pos: 0,
        op: None,
    };
    if text == "0" {
        return Ok(Expression::zero());
    }
    let mut acc = TermAccumulator::new();
    loop {
        let (c, f) = p.term()?;
        acc.add(c, f);
        if p.pos == p.s.len() {
            break;
        }
        p.expect_str(" + ")?;
    }
    let symbol = match p.op {
        Some(b'^') => ProductSymbol::Wedge,
        _ => ProductSymbol::Tensor,
    };
    Ok(acc.finish(symbol))
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    op: Option<u8>,
}

impl Parser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        if self.eat(b) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", b as char))
        }
    }

    fn expect_str(&mut self, lit: &str) -> Result<()> {
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            Ok(())
        } else {
            self.err(format!("expected {lit:?}"))
        }
    }

    fn int(&mut self) -> Result<BigInt> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let digits = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits");
        Ok(digits.parse().expect("digits parse"))
    }

    fn atom(&mut self) -> Result<usize> {
        let at = self.pos;
        let v = self.int()?;
        match v.to_usize() {
            Some(a) if a >= 1 => Ok(a),
            _ => Err(Error::Parse {
                offset: at,
                message: "atom index must be a positive integer".into(),
            }),
        }
    }

    fn optional_space(&mut self) {
        self.eat(b' ');
    }

    fn term(&mut self) -> Result<(Coeff, Vec<Bracket>)> {
        let negative = self.eat(b'-');
        let mut coeff = Coeff::one();
        if matches!(self.peek(), Some(b'0'..=b'9')) {
            let at = self.pos;
            let num = self.int()?;
            let den = if self.eat(b'/') {
                self.int()?
            } else {
                BigInt::one()
            };
            if den.is_zero() {
                return Err(Error::Parse {
                    offset: at,
                    message: "zero denominator".into(),
                });
            }
            coeff = Coeff::new(num, den);
            self.optional_space();
            self.expect(b'*')?;
            self.optional_space();
        }
        if negative {
            coeff = -coeff;
        }
        let mut factors = vec![self.factor()?];
        loop {
            let save = self.pos;
            self.optional_space();
            match self.peek() {
                Some(op @ (b'*' | b'^')) => {
                    if let Some(prev) = self.op {
                        if prev != op {
                            return self.err("mixed '*' and '^' products");
                        }
                    }
                    self.op = Some(op);
                    self.pos += 1;
                    self.optional_space();
                    factors.push(self.factor()?);
                }
                _ => {
                    self.pos = save;
                    break;
                }
            }
        }
        Ok((coeff, factors))
    }

    fn factor(&mut self) -> Result<Bracket> {
        let start = self.pos;
        self.expect(b'<')?;
        let mut atoms = vec![self.atom()?];
        while self.eat(b'.') {
            atoms.push(self.atom()?);
        }
        self.expect(b'>')?;
        let kind = if self.s[self.pos..].starts_with(b"_c") {
            self.pos += 2;
            BracketKind::Cumulant
        } else {
            BracketKind::Moment
        };
        Bracket::new(kind, atoms).map_err(|e| Error::Parse {
            offset: start,
            message: e.to_string(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct JsonExpression {
    terms: Vec<JsonTerm>,
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    coeff: [i64; 2],
    factors: Vec<JsonFactor>,
}

#[derive(Serialize, Deserialize)]
struct JsonFactor {
    kind: String,
    idx: Vec<usize>,
}

impl From<&Expression> for JsonExpression {
    fn from(e: &Expression) -> Self {
        let terms = e
            .terms
            .iter()
            .map(|t| JsonTerm {
                coeff: [
                    t.coeff.numer().to_i64().expect("coefficient fits in i64"),
                    t.coeff.denom().to_i64().expect("coefficient fits in i64"),
                ],
                factors: t
                    .factors
                    .iter()
                    .map(|b| JsonFactor {
                        kind: match b.kind {
                            BracketKind::Moment => "m".into(),
                            BracketKind::Cumulant => "c".into(),
                        },
                        idx: b.atoms.clone(),
                    })
                    .collect(),
            })
            .collect();
        JsonExpression { terms }
    }
}

/// Reads the JSON rendering back.
pub fn parse_json(text: &str) -> Result<Expression> {
    let j: JsonExpression = serde_json::from_str(text).map_err(|e| Error::Parse {
        offset: 0,
        message: e.to_string(),
    })?;
    let mut acc = TermAccumulator::new();
    for t in j.terms {
        if t.coeff[1] == 0 {
            return Err(Error::Parse {
                offset: 0,
                message: "zero denominator".into(),
            });
        }
        let coeff = Coeff::new(t.coeff[0].into(), t.coeff[1].into());
        let mut factors = Vec::new();
        for f in t.factors {
            let kind = match f.kind.as_str() {
                "m" => BracketKind::Moment,
                "c" => BracketKind::Cumulant,
                other => {
                    return Err(Error::Parse {
                        offset: 0,
                        message: format!("unknown bracket kind {other:?}"),
                    })
                }
            };
            factors.push(Bracket::new(kind, f.idx)?);
        }
        acc.add(coeff, factors);
    }
    Ok(acc.finish(ProductSymbol::Tensor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{canonicalize, rational};
    use crate::ordering::OrderingMapKind;

    #[test]
    fn parse_two_terms() {
        let e = parse("<1.2>_c + <1>*<2>").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(render(&e, Format::Text), "<1.2>_c + <1>*<2>");
    }

    #[test]
    fn parse_negative_rational_with_repeated_factor() {
        let e = parse("-1/2*<1>*<1>").unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.terms()[0].coeff, rational(-1, 2));
        assert_eq!(e.terms()[0].factors.len(), 2);
    }

    #[test]
    fn parse_rejects_repeated_index_in_bracket() {
        match parse("<1.1>") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let cases = [
            ("<1.2", 4),
            ("<1> +<2>", 3),
            ("<0>", 1),
            ("2<1>", 1),
            ("<1>*<2>^<3>", 7),
            ("1/0*<1>", 0),
            ("<a>", 1),
        ];
        for (text, at) in cases {
            match parse(text) {
                Err(Error::Parse { offset, .. }) => assert_eq!(offset, at, "{text}"),
                other => panic!("{text}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn optional_spaces_around_ops() {
        let a = parse("2 * <1> * <2>").unwrap();
        let b = parse("2*<1>*<2>").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wedge_round_trip() {
        let text = "<1.2> + -1*<1>^<2>";
        let e = parse(text).unwrap();
        assert_eq!(e.product_symbol(), ProductSymbol::Wedge);
        assert_eq!(render(&e, Format::Text), text);
    }

    #[test]
    fn render_canonicalizes() {
        let e = parse("<2.1>_c*<3> + <3>*<1.2>_c").unwrap();
        let c = canonicalize(&e, OrderingMapKind::Pto).unwrap();
        assert_eq!(render(&c, Format::Text), "2*<1.2>_c*<3>");
    }

    #[test]
    fn json_round_trip() {
        let e = parse("<1.2>_c + -1/3*<1>*<2>").unwrap();
        let j = render(&e, Format::Json);
        assert_eq!(
            j,
            r#"{"terms":[{"coeff":[1,1],"factors":[{"kind":"c","idx":[1,2]}]},{"coeff":[-1,3],"factors":[{"kind":"m","idx":[1]},{"kind":"m","idx":[2]}]}]}"#
        );
        assert_eq!(parse_json(&j).unwrap(), e);
    }

    #[test]
    fn zero_expression() {
        assert_eq!(render(&Expression::zero(), Format::Text), "0");
        assert!(parse("0").unwrap().is_zero());
    }

    mod props {
        use super::*;
        use crate::expr::Term;
        use proptest::prelude::*;

        fn bracket() -> impl Strategy<Value = Bracket> {
            (
                prop::sample::subsequence((1..=6usize).collect::<Vec<_>>(), 1..=4).prop_shuffle(),
                any::<bool>(),
            )
                .prop_map(|(atoms, cum)| {
                    let kind = if cum {
                        BracketKind::Cumulant
                    } else {
                        BracketKind::Moment
                    };
                    Bracket::new(kind, atoms).unwrap()
                })
        }

        fn expression() -> impl Strategy<Value = Expression> {
            prop::collection::vec(
                (-20i64..20, 1i64..7, prop::collection::vec(bracket(), 1..4)),
                0..6,
            )
            .prop_map(|ts| {
                Expression::from_terms(ts.into_iter().map(|(n, d, f)| (rational(n, d), f)))
            })
        }

        fn maps() -> impl Strategy<Value = OrderingMapKind> {
            prop::sample::select(vec![
                OrderingMapKind::Classical,
                OrderingMapKind::Pto,
                OrderingMapKind::Grassmann,
            ])
        }

        proptest! {
            #[test]
            fn text_round_trip(e in expression(), map in maps()) {
                let c = canonicalize(&e, map).unwrap();
                let back = parse(&render(&c, Format::Text)).unwrap();
                prop_assert_eq!(back.terms(), c.terms());
                prop_assert_eq!(parse_json(&render(&e, Format::Json)).unwrap(), e);
            }

            #[test]
            fn canonicalize_is_idempotent(e in expression(), map in maps()) {
                let once = canonicalize(&e, map).unwrap();
                let twice = canonicalize(&once, map).unwrap();
                prop_assert_eq!(once, twice);
            }

            #[test]
            fn canonical_terms_are_sorted_and_nonzero(e in expression(), map in maps()) {
                let c = canonicalize(&e, map).unwrap();
                let ts: &[Term] = c.terms();
                prop_assert!(ts.iter().all(|t| !t.coeff.is_zero()));
                prop_assert!(ts.windows(2).all(|w| crate::expr::cmp_products(&w[0].factors, &w[1].factors).is_lt()));
            }
        }
    }
}
