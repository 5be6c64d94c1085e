//! Text expressions for series and factories.
//!
//! ```text
//! factory  = "complement(" factory ")"
//!          | "flip_input(" factory ")"
//!          | "scale(" factory "," [ "alpha=" ] rational ")"
//!          | "prod(" factory "," factory ")"
//!          | "baseline(" series ")"
//!          | series ;
//! series   = "power:a=" rational
//!          | "sqrt" | "mobius_sqrt" | "log2_sqrt" | "exp_sqrt" | "entropy"
//!          | "finite:[" rational { "," rational } "]"
//!          | "compose(" series "," series [ "," "order=" integer ] ")"
//!          | "pc(" series "," series ")"
//!          | "convex(" series "," series "," [ "alpha=" ] rational ")" ;
//! rational = integer [ "/" integer ] | decimal ;
//! ```
//!
//! Whitespace between tokens is ignored. `compose` composes `outer(inner(p))`
//! with the inner series first; its order defaults to 32. The printer emits
//! one canonical spelling (rationals in lowest terms, all keywords present),
//! which parses back to the same tree.

use std::fmt;

use num_rational::BigRational;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::factory::{
    transform_input_complement, transform_output_complement, transform_product, transform_scale,
    Factory, DEFAULT_BASELINE_CAP,
};
use crate::numeric::parse_rational;
use crate::series::{compose, convex_combination, product_complement, CoefficientSeries};

/// Composition order used when an expression leaves it out.
pub const DEFAULT_COMPOSE_ORDER: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeriesExpr {
    Power(BigRational),
    Sqrt,
    MobiusSqrt,
    Log2Sqrt,
    ExpSqrt,
    Entropy,
    Finite(Vec<BigRational>),
    Compose { inner: Box<SeriesExpr>, outer: Box<SeriesExpr>, order: usize },
    Pc(Box<SeriesExpr>, Box<SeriesExpr>),
    Convex(Box<SeriesExpr>, Box<SeriesExpr>, BigRational),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactoryExpr {
    Series(SeriesExpr),
    Baseline(SeriesExpr),
    Complement(Box<FactoryExpr>),
    FlipInput(Box<FactoryExpr>),
    Scale(Box<FactoryExpr>, BigRational),
    Prod(Box<FactoryExpr>, Box<FactoryExpr>),
}

impl SeriesExpr {
    pub fn build(&self) -> Result<CoefficientSeries> {
        Ok(match self {
            SeriesExpr::Power(a) => CoefficientSeries::power(a.clone())?,
            SeriesExpr::Sqrt => CoefficientSeries::sqrt(),
            SeriesExpr::MobiusSqrt => CoefficientSeries::mobius_sqrt(),
            SeriesExpr::Log2Sqrt => CoefficientSeries::log2_sqrt(),
            SeriesExpr::ExpSqrt => CoefficientSeries::exp_sqrt(),
            SeriesExpr::Entropy => CoefficientSeries::entropy(),
            SeriesExpr::Finite(c) => CoefficientSeries::finite(c.clone())?,
            SeriesExpr::Compose { inner, outer, order } => {
                compose(&inner.build()?, &outer.build()?, *order)?
            }
            SeriesExpr::Pc(a, b) => product_complement(&a.build()?, &b.build()?),
            SeriesExpr::Convex(a, b, alpha) => {
                convex_combination(&a.build()?, &b.build()?, alpha.clone())?
            }
        })
    }
}

impl FactoryExpr {
    pub fn build(&self) -> Result<Factory> {
        Ok(match self {
            FactoryExpr::Series(s) => Factory::series(&s.build()?),
            FactoryExpr::Baseline(s) => Factory::baseline(&s.build()?, DEFAULT_BASELINE_CAP),
            FactoryExpr::Complement(f) => transform_output_complement(f.build()?),
            FactoryExpr::FlipInput(f) => transform_input_complement(f.build()?),
            FactoryExpr::Scale(f, alpha) => transform_scale(f.build()?, alpha.clone())?,
            FactoryExpr::Prod(a, b) => transform_product(a.build()?, b.build()?),
        })
    }

    /// The series when the expression is a bare series.
    pub fn as_series(&self) -> Option<&SeriesExpr> {
        match self {
            FactoryExpr::Series(s) => Some(s),
            _ => None,
        }
    }
}

/// One representative of each catalog family, as used by the self-test and
/// the examples: `power:a=1/3`, the five square-root based entries and
/// `finite:[1/4,1/2,1/4]`.
pub fn catalog_expressions() -> Vec<SeriesExpr> {
    let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    vec![
        SeriesExpr::Power(q(1, 3)),
        SeriesExpr::Sqrt,
        SeriesExpr::MobiusSqrt,
        SeriesExpr::Log2Sqrt,
        SeriesExpr::ExpSqrt,
        SeriesExpr::Entropy,
        SeriesExpr::Finite(vec![q(1, 4), q(1, 2), q(1, 4)]),
    ]
}

/// Parses and validates a factory expression.
pub fn parse_expression(text: &str) -> Result<FactoryExpr> {
    let mut p = Parser { src: text, pos: 0 };
    let e = p.factory()?;
    p.end()?;
    e.build()?;
    Ok(e)
}

/// Parses and validates a series expression (no transforms).
pub fn parse_series(text: &str) -> Result<SeriesExpr> {
    let mut p = Parser { src: text, pos: 0 };
    let e = p.series()?;
    p.end()?;
    e.build()?;
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += self.rest().chars().next().map_or(0, char::len_utf8);
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            let found = self.rest().chars().next().map_or("end of input".to_string(), |c| format!("'{c}'"));
            self.err(self.pos, format!("expected '{token}', found {found}"))
        }
    }

    fn end(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos < self.src.len() {
            return self.err(self.pos, "unexpected trailing input");
        }
        Ok(())
    }

    fn ident(&mut self) -> Result<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return self.err(start, "expected a name");
        }
        self.pos += len;
        Ok((start, &self.src[start..start + len]))
    }

    fn rational(&mut self) -> Result<BigRational> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || "+-./eE".contains(c)))
            .unwrap_or(self.rest().len());
        let text = &self.src[start..start + len];
        match parse_rational(text) {
            Some(r) if len > 0 => {
                self.pos += len;
                Ok(r)
            }
            _ => self.err(start, "expected a rational number"),
        }
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(self.rest().len());
        self.src[start..start + len]
            .parse()
            .or_else(|_| self.err(start, "expected a non-negative integer"))
            .inspect(|_| self.pos += len)
    }

    fn factory(&mut self) -> Result<FactoryExpr> {
        self.skip_ws();
        let save = self.pos;
        let (_, name) = self.ident()?;
        let wrap = |p: &mut Self| -> Result<Box<FactoryExpr>> {
            p.expect("(")?;
            let f = p.factory()?;
            Ok(Box::new(f))
        };
        let e = match name {
            "complement" => {
                let f = wrap(self)?;
                self.expect(")")?;
                FactoryExpr::Complement(f)
            }
            "flip_input" => {
                let f = wrap(self)?;
                self.expect(")")?;
                FactoryExpr::FlipInput(f)
            }
            "scale" => {
                let f = wrap(self)?;
                self.expect(",")?;
                self.eat("alpha=");
                let alpha = self.rational()?;
                self.expect(")")?;
                FactoryExpr::Scale(f, alpha)
            }
            "prod" => {
                let a = wrap(self)?;
                self.expect(",")?;
                let b = self.factory()?;
                self.expect(")")?;
                FactoryExpr::Prod(a, Box::new(b))
            }
            "baseline" => {
                self.expect("(")?;
                let s = self.series()?;
                self.expect(")")?;
                FactoryExpr::Baseline(s)
            }
            _ => {
                self.pos = save;
                FactoryExpr::Series(self.series()?)
            }
        };
        Ok(e)
    }

    fn series(&mut self) -> Result<SeriesExpr> {
        let (start, name) = self.ident()?;
        let e = match name {
            "power" => {
                self.expect(":")?;
                self.expect("a")?;
                self.expect("=")?;
                SeriesExpr::Power(self.rational()?)
            }
            "sqrt" => SeriesExpr::Sqrt,
            "mobius_sqrt" => SeriesExpr::MobiusSqrt,
            "log2_sqrt" => SeriesExpr::Log2Sqrt,
            "exp_sqrt" => SeriesExpr::ExpSqrt,
            "entropy" => SeriesExpr::Entropy,
            "finite" => {
                self.expect(":")?;
                self.expect("[")?;
                let mut c = vec![self.rational()?];
                while self.eat(",") {
                    c.push(self.rational()?);
                }
                self.expect("]")?;
                SeriesExpr::Finite(c)
            }
            "compose" => {
                self.expect("(")?;
                let inner = self.series()?;
                self.expect(",")?;
                let outer = self.series()?;
                let order = if self.eat(",") {
                    self.expect("order")?;
                    self.expect("=")?;
                    self.integer()?
                } else {
                    DEFAULT_COMPOSE_ORDER
                };
                self.expect(")")?;
                SeriesExpr::Compose {
                    inner: Box::new(inner),
                    outer: Box::new(outer),
                    order,
                }
            }
            "pc" => {
                self.expect("(")?;
                let a = self.series()?;
                self.expect(",")?;
                let b = self.series()?;
                self.expect(")")?;
                SeriesExpr::Pc(Box::new(a), Box::new(b))
            }
            "convex" => {
                self.expect("(")?;
                let a = self.series()?;
                self.expect(",")?;
                let b = self.series()?;
                self.expect(",")?;
                self.eat("alpha=");
                let alpha = self.rational()?;
                self.expect(")")?;
                SeriesExpr::Convex(Box::new(a), Box::new(b), alpha)
            }
            "complement" | "flip_input" | "scale" | "prod" | "baseline" => {
                return self.err(start, format!("'{name}' is a factory transform, not a series"));
            }
            other => return self.err(start, format!("unknown series '{other}'")),
        };
        Ok(e)
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    if r.is_negative() {
        f.write_str("-")?;
    }
    let r = r.abs();
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for SeriesExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesExpr::Power(a) => {
                f.write_str("power:a=")?;
                write_rational(f, a)
            }
            SeriesExpr::Sqrt => f.write_str("sqrt"),
            SeriesExpr::MobiusSqrt => f.write_str("mobius_sqrt"),
            SeriesExpr::Log2Sqrt => f.write_str("log2_sqrt"),
            SeriesExpr::ExpSqrt => f.write_str("exp_sqrt"),
            SeriesExpr::Entropy => f.write_str("entropy"),
            SeriesExpr::Finite(c) => {
                f.write_str("finite:[")?;
                for (i, r) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write_rational(f, r)?;
                }
                f.write_str("]")
            }
            SeriesExpr::Compose { inner, outer, order } => {
                write!(f, "compose({inner},{outer},order={order})")
            }
            SeriesExpr::Pc(a, b) => write!(f, "pc({a},{b})"),
            SeriesExpr::Convex(a, b, alpha) => {
                write!(f, "convex({a},{b},alpha=")?;
                write_rational(f, alpha)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for FactoryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactoryExpr::Series(s) => write!(f, "{s}"),
            FactoryExpr::Baseline(s) => write!(f, "baseline({s})"),
            FactoryExpr::Complement(e) => write!(f, "complement({e})"),
            FactoryExpr::FlipInput(e) => write!(f, "flip_input({e})"),
            FactoryExpr::Scale(e, alpha) => {
                write!(f, "scale({e},alpha=")?;
                write_rational(f, alpha)?;
                f.write_str(")")
            }
            FactoryExpr::Prod(a, b) => write!(f, "prod({a},{b})"),
        }
    }
}
