//! Tokenizer and line parser.

use num_complex::Complex64 as C64;

use super::ast::*;
use super::error::{ParseError, ParseErrorKind as K};
use super::resolve::Resolver;
use crate::qcore::Axis;

#[derive(Clone, Debug)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub column: usize,
}

/// Splits a line into whitespace-separated tokens. Brackets and parentheses
/// keep their contents in one token, so `[[1, 0], [0, 1]]` is one token.
pub(crate) fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token<'_>>, ParseError> {
    let code = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut chars = code.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let column = code[..start].chars().count() + 1;
        let mut depth: i32 = 0;
        let mut end = code.len();
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() && depth == 0 {
                end = i;
                break;
            }
            match c {
                '[' | '(' => depth += 1,
                ']' | ')' => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(ParseError::new(line_no, column, K::Syntax, format!("unbalanced `{c}`")));
                    }
                }
                _ => {}
            }
            chars.next();
        }
        if depth != 0 {
            return Err(ParseError::new(line_no, column, K::Syntax, "unclosed bracket"));
        }
        tokens.push(Token { text: &code[start..end], column });
    }
    Ok(tokens)
}

pub(crate) fn parse_real(s: &str) -> Option<f64> {
    let lower = s.to_ascii_lowercase();
    if lower.contains("inf") || lower.contains("nan") {
        return None;
    }
    s.parse::<f64>().ok()
}

/// `re`, `imi`, `re+imi`, `re-imi`; a bare `i` stands for `1i`.
pub(crate) fn parse_complex(s: &str) -> Option<C64> {
    let Some(body) = s.strip_suffix('i') else {
        return parse_real(s).map(|re| C64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (parse_real(&body[..i])?, &body[i..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => parse_real(t)?,
    };
    Some(C64::new(re, im))
}

/// A real number or a multiple of pi: `pi`, `-pi/2`, `3pi/4`, `0.5*pi`.
pub(crate) fn parse_angle(s: &str) -> Option<f64> {
    if let Some(x) = parse_real(s) {
        return Some(x);
    }
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, s),
    };
    let (coef, tail) = rest.split_once("pi")?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let coef = if coef.is_empty() { 1.0 } else { parse_real(coef)? };
    let den = match tail {
        "" => 1.0,
        t => parse_real(t.strip_prefix('/')?)?,
    };
    if den == 0.0 {
        return None;
    }
    Some(sign * coef * std::f64::consts::PI / den)
}

fn parse_matrix(s: &str) -> Option<Matrix> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = compact.strip_prefix("[[")?.strip_suffix("]]")?;
    let m: Option<Matrix> = inner
        .split("],[")
        .map(|row| row.split(',').map(parse_complex).collect::<Option<Vec<_>>>())
        .collect();
    let m = m?;
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return None;
    }
    Some(m)
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

fn parse_axis(s: &str) -> Option<Axis> {
    match s {
        "x" => Some(Axis::X),
        "y" => Some(Axis::Y),
        "z" => Some(Axis::Z),
        _ => None,
    }
}

fn parse_bell(s: &str) -> Option<BellKind> {
    BellKind::ALL.into_iter().find(|b| b.name() == s)
}

/// Cursor over one line's tokens.
struct Line<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    line: usize,
    end_column: usize,
}

impl<'a> Line<'a> {
    fn err(&self, column: usize, reason: impl Into<String>) -> ParseError {
        ParseError::new(self.line, column, K::Syntax, reason)
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        let t = self.tokens.get(self.pos).cloned().ok_or_else(|| self.err(self.end_column, format!("expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn done(&self) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) => Err(self.err(t.column, format!("unexpected `{}`", t.text))),
            None => Ok(()),
        }
    }

    fn name(&mut self) -> Result<String, ParseError> {
        let t = self.next("a system name")?;
        if !is_identifier(t.text) {
            return Err(self.err(t.column, format!("`{}` is not a valid name", t.text)));
        }
        Ok(t.text.to_string())
    }

    fn moment_text(&self, t: &Token<'_>, text: &str) -> Result<usize, ParseError> {
        text.strip_prefix('@')
            .and_then(|k| k.parse::<usize>().ok())
            .ok_or_else(|| self.err(t.column, format!("expected a moment `@k`, found `{text}`")))
    }

    fn moment(&mut self) -> Result<usize, ParseError> {
        let t = self.next("a moment `@k`")?;
        self.moment_text(&t, t.text)
    }

    fn is_moment_next(&self) -> bool {
        self.peek().is_some_and(|t| t.text.starts_with('@'))
    }

    fn real(&mut self, what: &str) -> Result<f64, ParseError> {
        let t = self.next(what)?;
        parse_real(t.text).ok_or_else(|| self.err(t.column, format!("expected {what}, found `{}`", t.text)))
    }

    fn angle(&mut self) -> Result<f64, ParseError> {
        let t = self.next("an angle")?;
        parse_angle(t.text).ok_or_else(|| self.err(t.column, format!("expected an angle, found `{}`", t.text)))
    }

    fn axis(&mut self) -> Result<Axis, ParseError> {
        let t = self.next("an axis `x|y|z`")?;
        parse_axis(t.text).ok_or_else(|| self.err(t.column, format!("expected an axis `x|y|z`, found `{}`", t.text)))
    }

    fn matrix(&mut self) -> Result<Matrix, ParseError> {
        let t = self.next("a matrix literal")?;
        parse_matrix(t.text)
            .ok_or_else(|| self.err(t.column, format!("malformed square matrix literal `{}`", t.text)))
    }

    fn unsigned(&mut self, what: &str) -> Result<usize, ParseError> {
        let t = self.next(what)?;
        t.text.parse().map_err(|_| self.err(t.column, format!("expected {what}, found `{}`", t.text)))
    }

    /// State literal; a `ket` consumes the rest of the line.
    fn state(&mut self) -> Result<StateSpec, ParseError> {
        let t = self.next("a state")?;
        Ok(match t.text {
            "ket" => {
                let mut amps = Vec::new();
                while let Some(a) = self.peek().cloned() {
                    self.pos += 1;
                    amps.push(
                        parse_complex(a.text)
                            .ok_or_else(|| self.err(a.column, format!("malformed amplitude `{}`", a.text)))?,
                    );
                }
                if amps.is_empty() {
                    return Err(self.err(self.end_column, "`ket` needs at least one amplitude"));
                }
                StateSpec::Ket(amps)
            }
            "up" => StateSpec::Up(self.axis()?),
            "down" => StateSpec::Down(self.axis()?),
            "spin" => StateSpec::Spin(self.angle()?, self.angle()?),
            "singlet" => StateSpec::Singlet,
            "bell" => {
                let k = self.next("a Bell state")?;
                StateSpec::Bell(parse_bell(k.text).ok_or_else(|| {
                    self.err(k.column, format!("expected `phi+|phi-|psi+|psi-`, found `{}`", k.text))
                })?)
            }
            other => return Err(self.err(t.column, format!("unknown state `{other}`"))),
        })
    }

    fn observable(&mut self) -> Result<ObservableSpec, ParseError> {
        let t = self.next("an observable")?;
        Ok(match t.text {
            "pauli" => ObservableSpec::Pauli(self.axis()?),
            "spin" => ObservableSpec::Spin(self.angle()?, self.angle()?),
            "matrix" => ObservableSpec::Matrix(self.matrix()?),
            other => return Err(self.err(t.column, format!("unknown observable `{other}`"))),
        })
    }

    fn unitary(&mut self) -> Result<UnitarySpec, ParseError> {
        let t = self.next("a link")?;
        let rotation = |prefix: &str| -> Option<Result<f64, ParseError>> {
            let arg = t.text.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(parse_angle(arg.trim()).ok_or_else(|| self.err(t.column, format!("malformed angle in `{}`", t.text))))
        };
        if let Some(a) = rotation("rx") {
            return Ok(UnitarySpec::Rx(a?));
        }
        if let Some(a) = rotation("ry") {
            return Ok(UnitarySpec::Ry(a?));
        }
        if let Some(a) = rotation("rz") {
            return Ok(UnitarySpec::Rz(a?));
        }
        Ok(match t.text {
            "identity" => UnitarySpec::Identity,
            "h" => UnitarySpec::Hadamard,
            "unitary" => UnitarySpec::Matrix(self.matrix()?),
            other => return Err(self.err(t.column, format!("unknown link `{other}`"))),
        })
    }

    /// Optional `as <label>` suffix.
    fn label(&mut self) -> Result<Option<String>, ParseError> {
        if self.peek().is_some_and(|t| t.text == "as") {
            self.pos += 1;
            let t = self.next("a label")?;
            if !t.text.chars().all(|c| c.is_ascii_graphic() && !matches!(c, ',' | '"' | '\\')) {
                return Err(self.err(t.column, format!("`{}` is not a valid label", t.text)));
            }
            return Ok(Some(t.text.to_string()));
        }
        Ok(None)
    }
}

fn parse_directive(l: &mut Line<'_>) -> Result<Directive, ParseError> {
    let kw = l.next("a directive")?;
    let d = match kw.text {
        "system" => {
            let name = l.name()?;
            let kind = l.next("`qubit` or `qudit d`")?;
            let kind = match kind.text {
                "qubit" => SystemKind::Qubit,
                "qudit" => SystemKind::Qudit(l.unsigned("a dimension")?),
                other => return Err(l.err(kind.column, format!("expected `qubit` or `qudit`, found `{other}`"))),
            };
            Directive::System { name, kind }
        }
        "prepare" => {
            let t = l.next("system names")?;
            let systems: Vec<String> = t.text.split(',').map(str::to_string).collect();
            if let Some(bad) = systems.iter().find(|s| !is_identifier(s)) {
                return Err(l.err(t.column, format!("`{bad}` is not a valid name")));
            }
            let moment = if l.is_moment_next() { Some(l.moment()?) } else { None };
            Directive::Prepare { systems, moment, state: l.state()? }
        }
        "link" => {
            let system = l.name()?;
            let t = l.next("a moment `@k` or `@j->@k`")?;
            let (from, to) = match t.text.split_once("->") {
                Some((a, b)) => (l.moment_text(&t, a)?, l.moment_text(&t, b)?),
                None => {
                    let k = l.moment_text(&t, t.text)?;
                    (k, k + 1)
                }
            };
            Directive::Link { system, from, to, unitary: l.unitary()? }
        }
        "collapse" => Directive::Collapse { system: l.name()?, moment: l.moment()?, state: l.state()? },
        "partial" => {
            let system = l.name()?;
            let moment = l.moment()?;
            let axis = l.axis()?;
            let alpha = l.real("alpha")?;
            let beta = l.real("beta")?;
            let outcome = match l.peek().map(|t| t.text) {
                Some("+1") | Some("1") => 1,
                Some("-1") => -1,
                Some(other) => {
                    let c = l.peek().expect("peeked").column;
                    return Err(l.err(c, format!("expected `+1` or `-1`, found `{other}`")));
                }
                None => 1,
            };
            if l.peek().is_some() {
                l.pos += 1;
            }
            Directive::Partial { system, moment, axis, alpha, beta, outcome }
        }
        "measure" => {
            let at = At { system: l.name()?, moment: l.moment()? };
            Directive::Measure { at, observable: l.observable()?, label: l.label()? }
        }
        "meter-diff" => {
            let first = At { system: l.name()?, moment: l.moment()? };
            let second_system = if l.is_moment_next() { first.system.clone() } else { l.name()? };
            let second = At { system: second_system, moment: l.moment()? };
            let observable = l.observable()?;
            let dim = if l.peek().is_some_and(|t| t.text == "dim") {
                l.pos += 1;
                Some(l.unsigned("a pointer dimension")?)
            } else {
                None
            };
            Directive::MeterDiff { first, second, observable, dim, label: l.label()? }
        }
        "postselect" => {
            let system = l.name()?;
            let moment = if l.is_moment_next() { Some(l.moment()?) } else { None };
            Directive::Postselect { system, moment, state: l.state()? }
        }
        "bellpost" => {
            let a = l.name()?;
            let b = l.name()?;
            let kind = match l.peek().cloned() {
                Some(t) => {
                    l.pos += 1;
                    parse_bell(t.text).ok_or_else(|| {
                        l.err(t.column, format!("expected `phi+|phi-|psi+|psi-`, found `{}`", t.text))
                    })?
                }
                None => BellKind::PhiPlus,
            };
            Directive::BellPost { a, b, kind }
        }
        other => {
            return Err(ParseError::new(l.line, kw.column, K::UnknownDirective, format!("unknown directive `{other}`")))
        }
    };
    l.done()?;
    Ok(d)
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut directives = Vec::new();
    let mut positions = Vec::new();
    let mut resolver = Resolver::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let tokens = tokenize(raw, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let columns: Vec<usize> = tokens.iter().map(|t| t.column).collect();
        let end_column = raw.split('#').next().unwrap_or("").trim_end().chars().count() + 1;
        let mut l = Line { tokens, pos: 0, line: line_no, end_column };
        let d = parse_directive(&mut l)?;
        resolver.apply(&d, line_no, &columns)?;
        directives.push(d);
        positions.push((line_no, columns));
    }
    resolver.finish()?;
    Ok(Scenario { directives, positions })
}

/// A state literal on its own, e.g. `up x` or `ket 0.6 0.8i`.
pub fn parse_state_spec(text: &str) -> Result<StateSpec, ParseError> {
    let tokens = tokenize(text, 1)?;
    let end_column = text.trim_end().chars().count() + 1;
    let mut l = Line { tokens, pos: 0, line: 1, end_column };
    let s = l.state()?;
    l.done()?;
    Ok(s)
}

/// An observable literal on its own, e.g. `pauli z` or `spin pi/2 0`.
pub fn parse_observable_spec(text: &str) -> Result<ObservableSpec, ParseError> {
    let tokens = tokenize(text, 1)?;
    let end_column = text.trim_end().chars().count() + 1;
    let mut l = Line { tokens, pos: 0, line: 1, end_column };
    let o = l.observable()?;
    l.done()?;
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_keep_brackets_together() {
        let t = tokenize("link A @1 unitary [[1, 0], [0, 1]] # comment", 1).unwrap();
        let texts: Vec<&str> = t.iter().map(|t| t.text).collect();
        assert_eq!(texts, ["link", "A", "@1", "unitary", "[[1, 0], [0, 1]]"]);
        assert_eq!(t[4].column, 19);
        assert!(tokenize("x [[1,0]", 3).is_err());
        assert!(tokenize("x ]", 3).is_err());
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1"), Some(C64::new(1.0, 0.0)));
        assert_eq!(parse_complex("-0.5i"), Some(C64::new(0.0, -0.5)));
        assert_eq!(parse_complex("0.5+0.25i"), Some(C64::new(0.5, 0.25)));
        assert_eq!(parse_complex("0.5-0.25i"), Some(C64::new(0.5, -0.25)));
        assert_eq!(parse_complex("1e-3-2e-4i"), Some(C64::new(1e-3, -2e-4)));
        assert_eq!(parse_complex("1e-3i"), Some(C64::new(0.0, 1e-3)));
        assert_eq!(parse_complex("i"), Some(C64::new(0.0, 1.0)));
        assert_eq!(parse_complex("-i"), Some(C64::new(0.0, -1.0)));
        assert_eq!(parse_complex("2+i"), Some(C64::new(2.0, 1.0)));
        assert_eq!(parse_complex("nan"), None);
        assert_eq!(parse_complex("abc"), None);
        for z in [C64::new(0.1, -0.3), C64::new(-1.0, 0.0), C64::new(0.0, 2.5), C64::new(1e-9, 1e22)] {
            assert_eq!(parse_complex(&fmt_complex(z)), Some(z));
        }
    }

    #[test]
    fn angles() {
        use std::f64::consts::PI;
        assert_eq!(parse_angle("pi"), Some(PI));
        assert_eq!(parse_angle("-pi/2"), Some(-PI / 2.0));
        assert_eq!(parse_angle("3pi/4"), Some(3.0 * PI / 4.0));
        assert_eq!(parse_angle("0.5*pi"), Some(0.5 * PI));
        assert_eq!(parse_angle("1.25"), Some(1.25));
        assert_eq!(parse_angle("pi/0"), None);
        assert_eq!(parse_angle("tau"), None);
    }

    #[test]
    fn matrices() {
        let m = parse_matrix("[[1, 0], [0, -1i]]").unwrap();
        assert_eq!(m[1][1], C64::new(0.0, -1.0));
        assert!(parse_matrix("[[1,0],[0]]").is_none());
        assert!(parse_matrix("[1,0]").is_none());
    }

    #[test]
    fn state_and_observable_specs() {
        assert_eq!(parse_state_spec("up x").unwrap(), StateSpec::Up(Axis::X));
        assert_eq!(parse_state_spec("bell psi-").unwrap(), StateSpec::Bell(BellKind::PsiMinus));
        assert!(parse_state_spec("up w").is_err());
        assert!(parse_state_spec("up x y").is_err());
        assert_eq!(parse_observable_spec("pauli z").unwrap(), ObservableSpec::Pauli(Axis::Z));
        assert!(parse_observable_spec("pauli").is_err());
    }
}
