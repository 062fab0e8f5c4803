//! Scenario syntax tree and its canonical text form.

use std::fmt::{self, Write as _};

use num_complex::Complex64 as C64;

use crate::qcore::Axis;

pub type Matrix = Vec<Vec<C64>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Qubit,
    Qudit(usize),
}

impl SystemKind {
    pub fn dim(self) -> usize {
        match self {
            SystemKind::Qubit => 2,
            SystemKind::Qudit(d) => d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus, BellKind::PsiMinus];

    pub fn name(self) -> &'static str {
        match self {
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
        }
    }

    /// Index into [`crate::qcore::bell_basis`].
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&b| b == self).expect("listed")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    Ket(Vec<C64>),
    Up(Axis),
    Down(Axis),
    Spin(f64, f64),
    Singlet,
    Bell(BellKind),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObservableSpec {
    Pauli(Axis),
    Spin(f64, f64),
    Matrix(Matrix),
}

#[derive(Clone, Debug, PartialEq)]
pub enum UnitarySpec {
    Identity,
    Hadamard,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    Matrix(Matrix),
}

/// A system at a moment, written `A @k`.
#[derive(Clone, Debug, PartialEq)]
pub struct At {
    pub system: String,
    pub moment: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Directive {
    System { name: String, kind: SystemKind },
    Prepare { systems: Vec<String>, moment: Option<usize>, state: StateSpec },
    /// Link from `from` to `to`; `@k` alone means `@k->@k+1`.
    Link { system: String, from: usize, to: usize, unitary: UnitarySpec },
    Collapse { system: String, moment: usize, state: StateSpec },
    /// Selected reading (`+1` or `-1`) of a partial measurement.
    Partial { system: String, moment: usize, axis: Axis, alpha: f64, beta: f64, outcome: i32 },
    Measure { at: At, observable: ObservableSpec, label: Option<String> },
    MeterDiff { first: At, second: At, observable: ObservableSpec, dim: Option<usize>, label: Option<String> },
    Postselect { system: String, moment: Option<usize>, state: StateSpec },
    BellPost { a: String, b: String, kind: BellKind },
}

impl Directive {
    pub fn keyword(&self) -> &'static str {
        match self {
            Directive::System { .. } => "system",
            Directive::Prepare { .. } => "prepare",
            Directive::Link { .. } => "link",
            Directive::Collapse { .. } => "collapse",
            Directive::Partial { .. } => "partial",
            Directive::Measure { .. } => "measure",
            Directive::MeterDiff { .. } => "meter-diff",
            Directive::Postselect { .. } => "postselect",
            Directive::BellPost { .. } => "bellpost",
        }
    }
}

/// Shortest text that parses back to the same `f64`.
pub(crate) fn fmt_real(x: f64) -> String {
    if x == 0.0 { "0".into() } else { format!("{x}") }
}

pub(crate) fn fmt_complex(z: C64) -> String {
    match (z.re == 0.0, z.im == 0.0) {
        (_, true) => fmt_real(z.re),
        (true, false) => format!("{}i", fmt_real(z.im)),
        (false, false) if z.im < 0.0 => format!("{}{}i", fmt_real(z.re), fmt_real(z.im)),
        (false, false) => format!("{}+{}i", fmt_real(z.re), fmt_real(z.im)),
    }
}

fn fmt_matrix(m: &Matrix) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|z| fmt_complex(*z)).collect::<Vec<_>>().join(",")))
        .collect();
    format!("[{}]", rows.join(","))
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Ket(a) => {
                f.write_str("ket")?;
                for z in a {
                    write!(f, " {}", fmt_complex(*z))?;
                }
                Ok(())
            }
            StateSpec::Up(axis) => write!(f, "up {}", axis.name()),
            StateSpec::Down(axis) => write!(f, "down {}", axis.name()),
            StateSpec::Spin(t, p) => write!(f, "spin {} {}", fmt_real(*t), fmt_real(*p)),
            StateSpec::Singlet => f.write_str("singlet"),
            StateSpec::Bell(k) => write!(f, "bell {}", k.name()),
        }
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableSpec::Pauli(axis) => write!(f, "pauli {}", axis.name()),
            ObservableSpec::Spin(t, p) => write!(f, "spin {} {}", fmt_real(*t), fmt_real(*p)),
            ObservableSpec::Matrix(m) => write!(f, "matrix {}", fmt_matrix(m)),
        }
    }
}

impl fmt::Display for UnitarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitarySpec::Identity => f.write_str("identity"),
            UnitarySpec::Hadamard => f.write_str("h"),
            UnitarySpec::Rx(t) => write!(f, "rx({})", fmt_real(*t)),
            UnitarySpec::Ry(t) => write!(f, "ry({})", fmt_real(*t)),
            UnitarySpec::Rz(t) => write!(f, "rz({})", fmt_real(*t)),
            UnitarySpec::Matrix(m) => write!(f, "unitary {}", fmt_matrix(m)),
        }
    }
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::System { name, kind: SystemKind::Qubit } => write!(f, "system {name} qubit"),
            Directive::System { name, kind: SystemKind::Qudit(d) } => write!(f, "system {name} qudit {d}"),
            Directive::Prepare { systems, moment, state } => {
                write!(f, "prepare {}", systems.join(","))?;
                if let Some(m) = moment {
                    write!(f, " @{m}")?;
                }
                write!(f, " {state}")
            }
            Directive::Link { system, from, to, unitary } if *to == from + 1 => {
                write!(f, "link {system} @{from} {unitary}")
            }
            Directive::Link { system, from, to, unitary } => write!(f, "link {system} @{from}->@{to} {unitary}"),
            Directive::Collapse { system, moment, state } => write!(f, "collapse {system} @{moment} {state}"),
            Directive::Partial { system, moment, axis, alpha, beta, outcome } => write!(
                f,
                "partial {system} @{moment} {} {} {} {}",
                axis.name(),
                fmt_real(*alpha),
                fmt_real(*beta),
                if *outcome > 0 { "+1" } else { "-1" }
            ),
            Directive::Measure { at, observable, label } => {
                write!(f, "measure {} @{} {observable}", at.system, at.moment)?;
                if let Some(l) = label {
                    write!(f, " as {l}")?;
                }
                Ok(())
            }
            Directive::MeterDiff { first, second, observable, dim, label } => {
                write!(f, "meter-diff {} @{}", first.system, first.moment)?;
                if second.system != first.system {
                    write!(f, " {}", second.system)?;
                }
                write!(f, " @{} {observable}", second.moment)?;
                if let Some(d) = dim {
                    write!(f, " dim {d}")?;
                }
                if let Some(l) = label {
                    write!(f, " as {l}")?;
                }
                Ok(())
            }
            Directive::Postselect { system, moment, state } => {
                write!(f, "postselect {system}")?;
                if let Some(m) = moment {
                    write!(f, " @{m}")?;
                }
                write!(f, " {state}")
            }
            Directive::BellPost { a, b, kind } => write!(f, "bellpost {a} {b} {}", kind.name()),
        }
    }
}

/// A parsed scenario. Equality compares directives only, not source
/// positions.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub(crate) directives: Vec<Directive>,
    /// Line and token columns of each directive in its source text.
    pub(crate) positions: Vec<(usize, Vec<usize>)>,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.directives == other.directives
    }
}

impl Scenario {
    pub fn directives(&self) -> &[Directive] {
        &self.directives
    }

    /// Canonical text: one directive per line, no comments.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for d in &self.directives {
            writeln!(out, "{d}").expect("string write");
        }
        out
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
