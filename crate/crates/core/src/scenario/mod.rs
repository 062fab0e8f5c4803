//! A line-oriented experiment language.
//!
//! ```text
//! # comment
//! system A qubit                      # or: system M qudit 3
//! prepare A,B singlet                 # joint preparation at @0
//! prepare C @1 up x                   # a strand of C starting at moment 1
//! link A @0 rx(pi/2)                  # link from @0 to @1
//! link C @1->@3 identity              # stride-2 link
//! collapse A @2 up x                  # collapse link from @2 to @3
//! partial A @3 x 0.8 0.6 +1           # selected partial-measurement reading
//! measure A @1 pauli z as a1          # projective measurement
//! meter-diff A @1 B @3 pauli z dim 7  # pointer reading B(3) - A(1)
//! postselect A @4 down z              # final bra
//! bellpost A B phi+                   # joint final selection
//! ```
//!
//! States: `ket a b ...`, `up|down x|y|z`, `spin theta phi`, `singlet`,
//! `bell phi+|phi-|psi+|psi-`. Observables: `pauli x|y|z`,
//! `spin theta phi`, `matrix [[..],[..]]`. Links: `identity`, `h`,
//! `rx(t)`, `ry(t)`, `rz(t)`, `unitary [[..]]`. Complex literals are
//! written `re+imi`; angles are radians or multiples of `pi`.
//!
//! Moments missing between `prepare` and the first link, or before an event,
//! are filled with identity links.

mod ast;
mod error;
mod parse;
mod report;
mod resolve;

pub use ast::{At, BellKind, Directive, Matrix, ObservableSpec, Scenario, StateSpec, SystemKind, UnitarySpec};
pub use error::{ParseError, ParseErrorKind};
pub use parse::{parse_observable_spec, parse_scenario, parse_state_spec};
pub use report::{format_probability, report, to_csv, to_json, Format};
pub use resolve::LITERAL_TOL;

use crate::error::{Error, Result};
use crate::history::Experiment;
use crate::qcore::DEFAULT_MAX_DIMENSION;
use crate::stats::{Mode, OutcomeStats};

/// Built-in scenarios by name.
pub const BUILTINS: [(&str, &str); 6] = [
    ("epr-alice", include_str!("../../scenarios/epr-alice.scn")),
    ("epr-bob", include_str!("../../scenarios/epr-bob.scn")),
    ("double-life", include_str!("../../scenarios/double-life.scn")),
    ("partial-sweep", include_str!("../../scenarios/partial-sweep.scn")),
    ("trivial", include_str!("../../scenarios/trivial.scn")),
    ("protocol-2", include_str!("../../scenarios/protocol-2.scn")),
];

pub fn builtin(name: &str) -> Option<Scenario> {
    BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_scenario(text).expect("built-in scenarios parse"))
}

impl Scenario {
    fn resolver(&self) -> Result<resolve::Resolver> {
        let mut r = resolve::Resolver::new();
        for (d, (line, cols)) in self.directives.iter().zip(&self.positions) {
            r.apply(d, *line, cols)?;
        }
        r.finish()?;
        Ok(r)
    }

    /// Outcome labels in directive order.
    pub fn labels(&self) -> Vec<String> {
        self.resolver().map(|r| r.labels().to_vec()).unwrap_or_default()
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.resolver()?.experiment()
    }
}

/// Runs a scenario with the default dimension cap.
pub fn run_scenario(s: &Scenario, mode: &Mode) -> Result<OutcomeStats> {
    run_scenario_capped(s, mode, DEFAULT_MAX_DIMENSION)
}

/// Exact evaluation or `samples` accepted Monte Carlo runs. Outcomes are
/// reported with labels in directive order.
pub fn run_scenario_capped(s: &Scenario, mode: &Mode, max_dimension: usize) -> Result<OutcomeStats> {
    let labels = s.labels();
    let program = s.experiment()?.max_dimension(max_dimension).compile()?;
    let stats = match mode {
        Mode::Exact => program.distribution()?,
        Mode::Sampled { samples, seed } => program.sample(*samples, *seed)?,
    };
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    stats.marginal(&refs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn name(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        }
    }
}

/// Singlet pair; Alice's `sigma_x` collapse on `A` at `t_mid` with the given
/// outcome; a `sigma_z(t2) - sigma_z(t1)` pointer on the chosen particle.
pub fn epr_scenario(who: Party, t1: usize, t_mid: usize, t2: usize, outcome: i32) -> Result<Scenario> {
    if !(t1 < t_mid && t_mid < t2) {
        return Err(Error::Invalid(format!("need t1 < T < t2, got {t1}, {t_mid}, {t2}")));
    }
    let dir = match outcome {
        1 => "up",
        -1 => "down",
        _ => return Err(Error::Invalid(format!("outcome must be +1 or -1, got {outcome}"))),
    };
    let particle = match who {
        Party::Alice => "A",
        Party::Bob => "B",
    };
    let text = format!(
        "system A qubit\nsystem B qubit\nprepare A,B singlet\ncollapse A @{t_mid} {dir} x\n\
         meter-diff {particle} @{t1} @{t2} pauli z as {}\n",
        who.name()
    );
    Ok(parse_scenario(&text)?)
}

/// Exact distribution of the chosen party's two-time `sigma_z` difference.
pub fn run_epr(who: Party, t1: usize, t_mid: usize, t2: usize, outcome: i32) -> Result<OutcomeStats> {
    run_scenario(&epr_scenario(who, t1, t_mid, t2, outcome)?, &Mode::Exact)
}

/// One particle whose even and odd moments form two chains of stride-2
/// identity links, pre-selected in `psi1` and `psi2`; a pointer reads
/// `A(second) - A(first)` under the label `meter`.
pub fn double_life_scenario(
    psi1: &StateSpec,
    psi2: &StateSpec,
    n_moments: usize,
    observable: &ObservableSpec,
    first: usize,
    second: usize,
) -> Result<Scenario> {
    if n_moments < 4 {
        return Err(Error::Invalid(format!("double life needs at least 4 moments, got {n_moments}")));
    }
    if first >= second || second >= n_moments {
        return Err(Error::Invalid(format!("need first < second < {n_moments}, got {first}, {second}")));
    }
    let mut text = format!("system P qubit\nprepare P @0 {psi1}\nprepare P @1 {psi2}\n");
    for k in 0..n_moments.saturating_sub(2) {
        text.push_str(&format!("link P @{k}->@{} identity\n", k + 2));
    }
    text.push_str(&format!("meter-diff P @{first} @{second} {observable} as meter\n"));
    Ok(parse_scenario(&text)?)
}

pub fn run_double_life(
    psi1: &StateSpec,
    psi2: &StateSpec,
    n_moments: usize,
    observable: &ObservableSpec,
    first: usize,
    second: usize,
) -> Result<OutcomeStats> {
    run_scenario(&double_life_scenario(psi1, psi2, n_moments, observable, first, second)?, &Mode::Exact)
}

#[cfg(test)]
mod tests;
