//! Closed-form scalar fields given as expression strings.
//!
//! Grammar: numbers, the variables `x`, `y`, `z` and `r` (= |x|), the
//! operators `+ - * / ^`, and the functions `exp`, `log`, `ln`, `sqrt`,
//! `sin`, `cos`, `tan`. First and second partial derivatives are derived
//! symbolically once, at construction.

use std::sync::LazyLock;

use exmex::prelude::*;
use exmex::FlatEx;
use nalgebra::{Matrix3, Vector3};
use regex::Regex;

use crate::error::{Error, Result};

static RADIUS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\br\b").unwrap());

#[derive(Clone, Debug)]
struct Compiled {
    expr: Box<FlatEx<f64>>,
    // index into [x, y, z] for every variable the expression mentions
    slots: Vec<usize>,
}

impl Compiled {
    fn new(expr: FlatEx<f64>, source: &str) -> Result<Self> {
        let slots = expr
            .var_names()
            .iter()
            .map(|name| match name.as_str() {
                "x" => Ok(0),
                "y" => Ok(1),
                "z" => Ok(2),
                other => Err(Error::Expression {
                    source_text: source.to_string(),
                    message: format!("unknown variable `{other}`"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Compiled {
            expr: Box::new(expr),
            slots,
        })
    }

    fn eval(&self, p: &Vector3<f64>) -> f64 {
        let args: Vec<f64> = self.slots.iter().map(|&s| p[s]).collect();
        self.expr.eval(&args).unwrap_or(f64::NAN)
    }

    /// Partial derivative along chart axis `axis`; identically zero when the
    /// expression does not mention that coordinate.
    fn partial(&self, axis: usize, source: &str) -> Result<Option<Compiled>> {
        let Some(idx) = self.slots.iter().position(|&s| s == axis) else {
            return Ok(None);
        };
        let d = self
            .expr
            .as_ref()
            .clone()
            .partial(idx)
            .map_err(|e| Error::Expression {
                source_text: source.to_string(),
                message: e.to_string(),
            })?;
        Compiled::new(d, source).map(Some)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Atom(String),
    Op(char),
    Open,
    Close,
    Comma,
}

fn tokenize(s: &str) -> std::result::Result<Vec<Token>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '(' => {
                out.push(Token::Open);
                i += 1;
            }
            ')' => {
                out.push(Token::Close);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' => {
                out.push(Token::Op(c));
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let mantissa: String = chars[start..i].iter().collect();
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    let negative = chars.get(j) == Some(&'-');
                    if matches!(chars.get(j), Some('+' | '-')) {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        let exp_start = j;
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        let exponent: String = chars[exp_start..j].iter().collect();
                        i = j;
                        let sign = if negative { "0-" } else { "" };
                        out.push(Token::Atom(format!("({mantissa}*10^({sign}{exponent}))")));
                        continue;
                    }
                }
                out.push(Token::Atom(mantissa));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Atom(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

/// Gives unary minus the usual precedence (`-x^2 = -(x^2)`) by rewriting
/// each unary `-T` with `T` a power term into `(0-T)`.
fn rewrite_unary_minus(s: &str) -> std::result::Result<String, String> {
    let tokens = tokenize(s)?;
    let mut pos = 0;
    let out = rewrite_sequence(&tokens, &mut pos, false)?;
    if pos != tokens.len() {
        return Err("unbalanced parentheses".into());
    }
    Ok(out)
}

fn rewrite_sequence(t: &[Token], pos: &mut usize, nested: bool) -> std::result::Result<String, String> {
    let mut out = String::new();
    let mut prev_operand = false;
    while *pos < t.len() {
        match &t[*pos] {
            Token::Close if nested => return Ok(out),
            Token::Close => return Err("unbalanced parentheses".into()),
            Token::Op('-') if !prev_operand => {
                *pos += 1;
                let term = rewrite_power_term(t, pos)?;
                out.push_str(&format!("(0-{term})"));
                prev_operand = true;
            }
            Token::Op(c) => {
                out.push(*c);
                *pos += 1;
                if *c == '^' {
                    out.push_str(&rewrite_power_term(t, pos)?);
                    prev_operand = true;
                } else {
                    prev_operand = false;
                }
            }
            Token::Comma => {
                out.push(',');
                *pos += 1;
                prev_operand = false;
            }
            _ => {
                out.push_str(&rewrite_primary(t, pos)?);
                prev_operand = true;
            }
        }
    }
    if nested {
        return Err("unbalanced parentheses".into());
    }
    Ok(out)
}

fn rewrite_primary(t: &[Token], pos: &mut usize) -> std::result::Result<String, String> {
    match t.get(*pos) {
        Some(Token::Open) => {
            *pos += 1;
            let inner = rewrite_sequence(t, pos, true)?;
            *pos += 1;
            Ok(format!("({inner})"))
        }
        Some(Token::Atom(a)) => {
            *pos += 1;
            if t.get(*pos) == Some(&Token::Open) {
                let args = rewrite_primary(t, pos)?;
                Ok(format!("{a}{args}"))
            } else {
                Ok(a.clone())
            }
        }
        _ => Err("expected an operand".into()),
    }
}

/// A primary optionally raised to a (signed) power term.
fn rewrite_power_term(t: &[Token], pos: &mut usize) -> std::result::Result<String, String> {
    if t.get(*pos) == Some(&Token::Op('-')) {
        *pos += 1;
        let term = rewrite_power_term(t, pos)?;
        return Ok(format!("(0-{term})"));
    }
    let base = rewrite_primary(t, pos)?;
    if t.get(*pos) == Some(&Token::Op('^')) {
        *pos += 1;
        let exponent = rewrite_power_term(t, pos)?;
        return Ok(format!("{base}^{exponent}"));
    }
    Ok(base)
}

fn eval_opt(c: &Option<Compiled>, p: &Vector3<f64>) -> f64 {
    c.as_ref().map_or(0.0, |c| c.eval(p))
}

/// A scalar field on the chart with analytic gradient and Hessian.
#[derive(Clone, Debug)]
pub struct ScalarField {
    source: String,
    value: Compiled,
    grad: [Option<Compiled>; 3],
    hess: [[Option<Compiled>; 3]; 3],
}

impl ScalarField {
    pub fn parse(source: &str) -> Result<Self> {
        // symbolic differentiation recurses deeply on nested expressions
        let owned = source.to_string();
        std::thread::Builder::new()
            .stack_size(256 << 20)
            .spawn(move || Self::parse_inner(&owned))
            .map_err(Error::Io)?
            .join()
            .unwrap_or_else(|_| {
                Err(Error::Expression {
                    source_text: source.to_string(),
                    message: "expression too deep".into(),
                })
            })
    }

    fn parse_inner(source: &str) -> Result<Self> {
        let expanded = RADIUS.replace_all(source, "((x^2+y^2+z^2)^0.5)");
        let expanded = rewrite_unary_minus(&expanded).map_err(|message| Error::Expression {
            source_text: source.to_string(),
            message,
        })?;
        let expanded = expanded.replace("log(", "ln(");
        let expr = exmex::parse::<f64>(&expanded).map_err(|e| Error::Expression {
            source_text: source.to_string(),
            message: e.to_string(),
        })?;
        let value = Compiled::new(expr, source)?;
        let mut grad: [Option<Compiled>; 3] = Default::default();
        for (axis, slot) in grad.iter_mut().enumerate() {
            *slot = value.partial(axis, source)?;
        }
        let mut hess: [[Option<Compiled>; 3]; 3] = Default::default();
        for i in 0..3 {
            for j in i..3 {
                let dij = match &grad[i] {
                    Some(di) => di.partial(j, source)?,
                    None => None,
                };
                hess[j][i] = dij.clone();
                hess[i][j] = dij;
            }
        }
        Ok(ScalarField {
            source: source.to_string(),
            value,
            grad,
            hess,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn value(&self, p: &Vector3<f64>) -> f64 {
        self.value.eval(p)
    }

    pub fn gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|i, _| eval_opt(&self.grad[i], p))
    }

    pub fn hessian(&self, p: &Vector3<f64>) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| eval_opt(&self.hess[i][j], p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_variable_and_derivatives() {
        let f = ScalarField::parse("1 + exp(-r^2)").unwrap();
        let p = Vector3::new(0.3, -0.2, 0.5);
        let s = p.norm_squared();
        assert!((f.value(&p) - (1.0 + (-s).exp())).abs() < 1e-14);
        let g = f.gradient(&p);
        for i in 0..3 {
            assert!((g[i] + 2.0 * p[i] * (-s).exp()).abs() < 1e-13);
        }
        let h = f.hessian(&p);
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                let exact = (-2.0 * delta + 4.0 * p[i] * p[j]) * (-s).exp();
                assert!((h[(i, j)] - exact).abs() < 1e-12, "{i}{j}");
            }
        }
    }

    #[test]
    fn constant_and_partial_variable_sets() {
        let f = ScalarField::parse("2.5").unwrap();
        let p = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(f.value(&p), 2.5);
        assert_eq!(f.gradient(&p), Vector3::zeros());
        let g = ScalarField::parse("z^2").unwrap();
        assert_eq!(g.gradient(&p), Vector3::new(0.0, 0.0, 6.0));
        assert_eq!(g.hessian(&p)[(2, 2)], 2.0);
    }

    #[test]
    fn rejects_unknown_variables() {
        assert!(matches!(
            ScalarField::parse("x + w"),
            Err(Error::Expression { .. })
        ));
        assert!(ScalarField::parse("x +* 2").is_err());
    }

    #[test]
    fn unary_minus_precedence() {
        let p = Vector3::new(3.0, 2.0, 0.5);
        for (src, expected) in [
            ("-x^2", -9.0),
            ("exp(-x^2)", (-9.0f64).exp()),
            ("y^-x", 0.125),
            ("1/-y^2", -0.25),
            ("-x*-y", 6.0),
            ("2e-1*x", 0.6),
            ("x - -y", 5.0),
            ("-(x+y)^2", -25.0),
        ] {
            let f = ScalarField::parse(src).unwrap();
            assert!((f.value(&p) - expected).abs() < 1e-14, "{src}: {}", f.value(&p));
        }
        assert!(ScalarField::parse("(x+1").is_err());
        assert!(ScalarField::parse("x+1)").is_err());
    }

    #[test]
    fn trig_and_log() {
        let f = ScalarField::parse("log(x) + sin(y)*cos(z) + tan(x) + sqrt(y)").unwrap();
        let p = Vector3::new(1.2, 0.7, 0.4);
        let exact = 1.2f64.ln() + 0.7f64.sin() * 0.4f64.cos() + 1.2f64.tan() + 0.7f64.sqrt();
        assert!((f.value(&p) - exact).abs() < 1e-13);
    }
}
