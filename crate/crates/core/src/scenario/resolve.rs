//! Semantic checks and assembly of an [`Experiment`] from directives.
//!
//! Every `prepare` starts a strand (one register) for a system at a moment.
//! Links, events and post-selections attach to the strand that owns the
//! referenced moment; a reference past the end of a strand extends it with
//! identity links. Links and post-selections of one system must therefore
//! appear in time order.

use num_complex::Complex64 as C64;

use super::ast::*;
use super::error::{ParseError, ParseErrorKind as K};
use crate::error::{Error, Result};
use crate::history::{Action, Experiment, Link, LinkKind, MultiSystemChain, Strand};
use crate::meter::{partial_link, DifferenceMeter, MeasurementBasis};
use crate::qcore::{
    bell_basis_on, hadamard, pauli, rx, ry, rz, singlet_on, spin_down, spin_observable, spin_state, spin_up, Layout,
    Operator, State,
};

/// Tolerance for normalization, unitarity and hermiticity of literals.
/// Accepted literals are then made exact.
pub const LITERAL_TOL: f64 = 1e-6;

type Fail = (K, String);

struct StrandDraft {
    register: String,
    start: usize,
    links: Vec<Link>,
    post: Option<State>,
}

impl StrandDraft {
    fn end(&self) -> usize {
        self.links.last().map_or(self.start, |l| l.to)
    }

    fn has_moment(&self, k: usize) -> bool {
        k == self.start || self.links.iter().any(|l| l.to == k)
    }

    fn extend_to(&mut self, k: usize) {
        while self.end() < k {
            let from = self.end();
            self.links.push(Link::step(LinkKind::Identity, from).expect("identity link"));
        }
    }
}

struct SystemEntry {
    name: String,
    dim: usize,
    column: (usize, usize),
    strands: Vec<StrandDraft>,
}

enum EventSpec {
    Measure { moment: usize, label: String, register: String, observable: Operator },
    Meter(DifferenceMeter),
}

pub(crate) struct Resolver {
    systems: Vec<SystemEntry>,
    preparations: Vec<State>,
    events: Vec<EventSpec>,
    selections: Vec<State>,
    labels: Vec<String>,
}

struct Ctx<'a> {
    line: usize,
    cols: &'a [usize],
}

impl Ctx<'_> {
    fn at(&self, token: usize, (kind, reason): Fail) -> ParseError {
        let column = self.cols.get(token).or(self.cols.last()).copied().unwrap_or(1);
        ParseError::new(self.line, column, kind, reason)
    }
}

fn invalid(reason: impl Into<String>) -> Fail {
    (K::Invalid, reason.into())
}

fn order(reason: impl Into<String>) -> Fail {
    (K::TimeOrdering, reason.into())
}

/// Builds a state on `registers`, checking dimension and normalization.
fn build_state(spec: &StateSpec, registers: &[(String, usize)]) -> std::result::Result<State, Fail> {
    let dims: Vec<usize> = registers.iter().map(|(_, d)| *d).collect();
    let total: usize = dims.iter().product();
    let names: Vec<&str> = registers.iter().map(|(n, _)| n.as_str()).collect();
    let qubits = |n: usize| -> std::result::Result<(), Fail> {
        if dims.len() == n && dims.iter().all(|&d| d == 2) {
            Ok(())
        } else {
            Err(invalid(format!("`{spec}` needs {n} qubit system(s), got dimensions {dims:?}")))
        }
    };
    let lib = |r: crate::Result<State>| r.map_err(|e| invalid(e.to_string()));
    match spec {
        StateSpec::Ket(amps) => {
            if amps.len() != total {
                return Err(invalid(format!("ket has {} amplitudes, systems have dimension {total}", amps.len())));
            }
            let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > LITERAL_TOL {
                return Err((K::Unnormalized, format!("state has norm {norm}")));
            }
            let layout = Layout::new(registers.iter().map(|(n, d)| crate::qcore::Register::new(n.clone(), *d)).collect())
                .map_err(|e| invalid(e.to_string()))?;
            lib(State::new(layout, amps.iter().map(|z| z / norm).collect()))
        }
        StateSpec::Up(axis) => {
            qubits(1)?;
            lib(spin_up(*axis).relabel(&names))
        }
        StateSpec::Down(axis) => {
            qubits(1)?;
            lib(spin_down(*axis).relabel(&names))
        }
        StateSpec::Spin(t, p) => {
            qubits(1)?;
            lib(spin_state(*t, *p).relabel(&names))
        }
        StateSpec::Singlet => {
            qubits(2)?;
            lib(singlet_on(names[0], names[1]))
        }
        StateSpec::Bell(kind) => {
            qubits(2)?;
            lib(bell_basis_on(names[0], names[1]).map(|b| b[kind.index()].clone()))
        }
    }
}

impl StateSpec {
    /// The literal as a state on one register of dimension `dim`.
    pub fn to_state(&self, register: &str, dim: usize) -> Result<State> {
        build_state(self, &[(register.to_string(), dim)]).map_err(|(k, r)| Error::Invalid(format!("{k}: {r}")))
    }
}

impl ObservableSpec {
    /// The literal as an operator on a system of dimension `dim`.
    pub fn to_operator(&self, dim: usize) -> Result<Operator> {
        build_observable(self, dim).map_err(|(k, r)| Error::Invalid(format!("{k}: {r}")))
    }
}

fn matrix_operator(m: &Matrix, dim: usize) -> std::result::Result<Operator, Fail> {
    if m.len() != dim {
        return Err(invalid(format!("{0}x{0} matrix on a system of dimension {dim}", m.len())));
    }
    Operator::from_rows(m).map_err(|e| invalid(e.to_string()))
}

fn build_observable(spec: &ObservableSpec, dim: usize) -> std::result::Result<Operator, Fail> {
    let qubit = || -> std::result::Result<(), Fail> {
        if dim == 2 { Ok(()) } else { Err(invalid(format!("`{spec}` needs a qubit, system has dimension {dim}"))) }
    };
    match spec {
        ObservableSpec::Pauli(axis) => {
            qubit()?;
            Ok(pauli(*axis))
        }
        ObservableSpec::Spin(t, p) => {
            qubit()?;
            Ok(spin_observable(*t, *p))
        }
        ObservableSpec::Matrix(m) => {
            let op = matrix_operator(m, dim)?;
            let dev = op.max_abs_diff(&op.adjoint());
            if dev > LITERAL_TOL {
                return Err((K::NonHermitian, format!("matrix deviates from its adjoint by {dev:e}")));
            }
            Ok((&op + &op.adjoint()).scale_re(0.5))
        }
    }
}

/// Gram-Schmidt on the columns; leaves an almost-unitary matrix within
/// `O(deviation)` of itself.
fn orthonormalize(op: &Operator) -> Operator {
    let d = op.dim();
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for c in 0..d {
        let mut v: Vec<C64> = (0..d).map(|r| op.get(r, c)).collect();
        for u in &cols {
            let ip: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= ip * y;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / n).collect());
    }
    Operator::from_fn(op.dims().to_vec(), |r, c| cols[c][r])
}

fn build_link(spec: &UnitarySpec, dim: usize) -> std::result::Result<LinkKind, Fail> {
    let qubit = |op: Operator| -> std::result::Result<LinkKind, Fail> {
        if dim == 2 {
            Ok(LinkKind::Unitary(op))
        } else {
            Err(invalid(format!("`{spec}` needs a qubit, system has dimension {dim}")))
        }
    };
    match spec {
        UnitarySpec::Identity => Ok(LinkKind::Identity),
        UnitarySpec::Hadamard => qubit(hadamard()),
        UnitarySpec::Rx(t) => qubit(rx(*t)),
        UnitarySpec::Ry(t) => qubit(ry(*t)),
        UnitarySpec::Rz(t) => qubit(rz(*t)),
        UnitarySpec::Matrix(m) => {
            let op = matrix_operator(m, dim)?;
            let dev = (&op.adjoint() * &op).max_abs_diff(&Operator::identity(op.dims().to_vec()));
            if dev > LITERAL_TOL {
                return Err((K::NonUnitary, format!("U^dagger U deviates from the identity by {dev:e}")));
            }
            Ok(LinkKind::Unitary(orthonormalize(&op)))
        }
    }
}

impl Resolver {
    pub fn new() -> Self {
        Self { systems: Vec::new(), preparations: Vec::new(), events: Vec::new(), selections: Vec::new(), labels: Vec::new() }
    }

    fn system(&self, name: &str) -> std::result::Result<usize, Fail> {
        self.systems
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| (K::UndeclaredSystem, format!("system `{name}` is not declared")))
    }

    fn prepared(&self, sys: usize) -> std::result::Result<(), Fail> {
        if self.systems[sys].strands.is_empty() {
            Err(invalid(format!("system `{}` is used before it is prepared", self.systems[sys].name)))
        } else {
            Ok(())
        }
    }

    /// Strand owning moment `k`, extending the latest open strand if needed.
    fn reference(&mut self, sys: usize, k: usize) -> std::result::Result<usize, Fail> {
        self.prepared(sys)?;
        let entry = &mut self.systems[sys];
        if let Some(i) = entry.strands.iter().position(|s| s.has_moment(k)) {
            return Ok(i);
        }
        let candidate = entry
            .strands
            .iter()
            .enumerate()
            .filter(|(_, s)| s.start <= k && s.end() < k)
            .max_by_key(|(_, s)| s.end())
            .map(|(i, _)| i);
        match candidate {
            Some(i) if entry.strands[i].post.is_some() => Err(order(format!(
                "`{}` is post-selected at @{} and cannot reach @{k}",
                entry.name,
                entry.strands[i].end()
            ))),
            Some(i) => {
                entry.strands[i].extend_to(k);
                Ok(i)
            }
            None => Err(order(format!(
                "system `{}` has no moment @{k} (before its preparation or skipped by a stride link)",
                entry.name
            ))),
        }
    }

    /// Strand a link departing `from` attaches to.
    fn link_strand(&mut self, sys: usize, from: usize) -> std::result::Result<usize, Fail> {
        self.prepared(sys)?;
        let entry = &self.systems[sys];
        if let Some(i) = entry.strands.iter().position(|s| s.end() == from) {
            if entry.strands[i].post.is_some() {
                return Err(order(format!("`{}` is post-selected at @{from}", entry.name)));
            }
            return Ok(i);
        }
        if let Some(s) = entry.strands.iter().find(|s| s.has_moment(from)) {
            return Err(order(format!(
                "`{}` already evolves to @{}; list links in time order",
                entry.name,
                s.end()
            )));
        }
        self.reference(sys, from)
    }

    fn add_label(&mut self, label: String) -> std::result::Result<String, Fail> {
        if self.labels.contains(&label) {
            return Err(invalid(format!("duplicate outcome label `{label}`")));
        }
        self.labels.push(label.clone());
        Ok(label)
    }

    pub fn apply(&mut self, d: &Directive, line: usize, cols: &[usize]) -> std::result::Result<(), ParseError> {
        let cx = Ctx { line, cols };
        match d {
            Directive::System { name, kind } => {
                if self.systems.iter().any(|s| &s.name == name) {
                    return Err(cx.at(1, invalid(format!("system `{name}` declared twice"))));
                }
                if kind.dim() < 2 {
                    return Err(cx.at(3, invalid("a qudit needs dimension >= 2")));
                }
                let column = (line, cols.get(1).copied().unwrap_or(1));
                self.systems.push(SystemEntry { name: name.clone(), dim: kind.dim(), column, strands: Vec::new() });
            }
            Directive::Prepare { systems, moment, state } => {
                let state_tok = if moment.is_some() { 3 } else { 2 };
                let idx: Vec<usize> =
                    systems.iter().map(|s| self.system(s)).collect::<std::result::Result<_, _>>().map_err(|f| cx.at(1, f))?;
                for (i, a) in idx.iter().enumerate() {
                    if idx[..i].contains(a) {
                        return Err(cx.at(1, invalid(format!("system `{}` listed twice", systems[i]))));
                    }
                }
                let m = moment.unwrap_or(0);
                if idx.len() > 1 && m != 0 {
                    return Err(cx.at(2, order("a joint preparation must happen at @0")));
                }
                let mut registers = Vec::new();
                for &s in &idx {
                    let entry = &self.systems[s];
                    if entry.strands.iter().any(|st| st.start == m) {
                        return Err(cx.at(1, invalid(format!("system `{}` prepared twice at @{m}", entry.name))));
                    }
                    if let Some(st) = entry.strands.iter().find(|st| st.start < m && st.end() >= m) {
                        return Err(cx.at(
                            2,
                            order(format!("system `{}` already evolves from @{} to @{}", entry.name, st.start, st.end())),
                        ));
                    }
                    let register =
                        if entry.strands.is_empty() { entry.name.clone() } else { format!("{}@{m}", entry.name) };
                    registers.push((register, entry.dim));
                }
                let prepared = build_state(state, &registers).map_err(|f| cx.at(state_tok, f))?;
                for (&s, (register, _)) in idx.iter().zip(registers) {
                    self.systems[s].strands.push(StrandDraft { register, start: m, links: Vec::new(), post: None });
                }
                self.preparations.push(prepared);
            }
            Directive::Link { system, from, to, unitary } => {
                let sys = self.system(system).map_err(|f| cx.at(1, f))?;
                if to <= from {
                    return Err(cx.at(2, order(format!("link @{from}->@{to} does not move forward"))));
                }
                let kind = build_link(unitary, self.systems[sys].dim).map_err(|f| cx.at(3, f))?;
                let i = self.link_strand(sys, *from).map_err(|f| cx.at(2, f))?;
                let link = Link::new(kind, *from, *to).map_err(|e| cx.at(3, invalid(e.to_string())))?;
                self.systems[sys].strands[i].links.push(link);
            }
            Directive::Collapse { system, moment, state } => {
                let sys = self.system(system).map_err(|f| cx.at(1, f))?;
                let regs = [("c".to_string(), self.systems[sys].dim)];
                let phi = build_state(state, &regs).map_err(|f| cx.at(3, f))?;
                let i = self.link_strand(sys, *moment).map_err(|f| cx.at(2, f))?;
                let link = Link::step(LinkKind::Collapse(phi), *moment).map_err(|e| cx.at(3, invalid(e.to_string())))?;
                self.systems[sys].strands[i].links.push(link);
            }
            Directive::Partial { system, moment, axis, alpha, beta, outcome } => {
                let sys = self.system(system).map_err(|f| cx.at(1, f))?;
                if self.systems[sys].dim != 2 {
                    return Err(cx.at(1, invalid("partial measurement needs a qubit")));
                }
                if !(*alpha >= 0.0 && *beta >= 0.0) {
                    return Err(cx.at(4, invalid("alpha and beta must be nonnegative")));
                }
                let n = alpha.hypot(*beta);
                if (n * n - 1.0).abs() > LITERAL_TOL {
                    return Err(cx.at(4, (K::Unnormalized, format!("alpha^2 + beta^2 = {}", n * n))));
                }
                let kind = partial_link(&MeasurementBasis::axis(*axis), alpha / n, beta / n, *outcome)
                    .map_err(|e| cx.at(4, invalid(e.to_string())))?;
                let i = self.link_strand(sys, *moment).map_err(|f| cx.at(2, f))?;
                let link = Link::step(kind, *moment).map_err(|e| cx.at(4, invalid(e.to_string())))?;
                self.systems[sys].strands[i].links.push(link);
            }
            Directive::Measure { at, observable, label } => {
                let sys = self.system(&at.system).map_err(|f| cx.at(1, f))?;
                let observable = build_observable(observable, self.systems[sys].dim).map_err(|f| cx.at(3, f))?;
                let i = self.reference(sys, at.moment).map_err(|f| cx.at(2, f))?;
                let label = label.clone().unwrap_or_else(|| format!("{}@{}", at.system, at.moment));
                let label = self.add_label(label).map_err(|f| cx.at(cols.len() - 1, f))?;
                let register = self.systems[sys].strands[i].register.clone();
                self.events.push(EventSpec::Measure { moment: at.moment, label, register, observable });
            }
            Directive::MeterDiff { first, second, observable, dim, label } => {
                let explicit_second = first.system != second.system;
                let second_sys_tok = 3;
                let second_tok = if explicit_second { 4 } else { 3 };
                let obs_tok = second_tok + 1;
                let obs_len = match observable {
                    ObservableSpec::Spin(..) => 3,
                    _ => 2,
                };
                let dim_tok = obs_tok + obs_len + 1;
                let a = self.system(&first.system).map_err(|f| cx.at(1, f))?;
                let b = self.system(&second.system).map_err(|f| cx.at(second_sys_tok, f))?;
                if a == b && second.moment <= first.moment {
                    return Err(cx.at(
                        second_tok,
                        order(format!("difference needs @{} after @{}", second.moment, first.moment)),
                    ));
                }
                if self.systems[a].dim != self.systems[b].dim {
                    return Err(cx.at(second_sys_tok, invalid("both ends of a difference need the same dimension")));
                }
                let op = build_observable(observable, self.systems[a].dim).map_err(|f| cx.at(obs_tok, f))?;
                if !op.has_integer_spectrum().unwrap_or(false) {
                    return Err(cx.at(obs_tok, invalid("a pointer coupling needs an integer spectrum")));
                }
                let i = self.reference(a, first.moment).map_err(|f| cx.at(2, f))?;
                let j = self.reference(b, second.moment).map_err(|f| cx.at(second_tok, f))?;
                let label = label
                    .clone()
                    .unwrap_or_else(|| format!("{}@{}-{}@{}", second.system, second.moment, first.system, first.moment));
                let label = self.add_label(label).map_err(|f| cx.at(cols.len() - 1, f))?;
                let meter = DifferenceMeter {
                    label,
                    first: (vec![self.systems[a].strands[i].register.clone()], first.moment),
                    second: (vec![self.systems[b].strands[j].register.clone()], second.moment),
                    observable: op,
                    dim: *dim,
                };
                meter.pointer().map_err(|e| cx.at(dim_tok, invalid(e.to_string())))?;
                self.events.push(EventSpec::Meter(meter));
            }
            Directive::Postselect { system, moment, state } => {
                let state_tok = if moment.is_some() { 3 } else { 2 };
                let sys = self.system(system).map_err(|f| cx.at(1, f))?;
                self.prepared(sys).map_err(|f| cx.at(1, f))?;
                let i = match moment {
                    Some(k) => {
                        let i = self.reference(sys, *k).map_err(|f| cx.at(2, f))?;
                        let end = self.systems[sys].strands[i].end();
                        if end != *k {
                            return Err(cx.at(2, order(format!("`{system}` already evolves to @{end}"))));
                        }
                        i
                    }
                    None => self.latest(sys),
                };
                let strand = &self.systems[sys].strands[i];
                if strand.post.is_some() {
                    return Err(cx.at(1, invalid(format!("`{system}` is post-selected twice"))));
                }
                let regs = [(strand.register.clone(), self.systems[sys].dim)];
                let post = build_state(state, &regs).map_err(|f| cx.at(state_tok, f))?;
                self.systems[sys].strands[i].post = Some(post);
            }
            Directive::BellPost { a, b, kind } => {
                let sa = self.system(a).map_err(|f| cx.at(1, f))?;
                let sb = self.system(b).map_err(|f| cx.at(2, f))?;
                if sa == sb {
                    return Err(cx.at(2, invalid("a Bell post-selection needs two different systems")));
                }
                for (s, tok) in [(sa, 1), (sb, 2)] {
                    self.prepared(s).map_err(|f| cx.at(tok, f))?;
                    if self.systems[s].dim != 2 {
                        return Err(cx.at(tok, invalid("a Bell post-selection needs qubits")));
                    }
                }
                let ra = self.systems[sa].strands[self.latest(sa)].register.clone();
                let rb = self.systems[sb].strands[self.latest(sb)].register.clone();
                let bell = bell_basis_on(&ra, &rb).map_err(|e| cx.at(1, invalid(e.to_string())))?;
                self.selections.push(bell[kind.index()].clone());
            }
        }
        Ok(())
    }

    fn latest(&self, sys: usize) -> usize {
        let strands = &self.systems[sys].strands;
        (0..strands.len()).max_by_key(|&i| (strands[i].end(), strands[i].start)).expect("prepared")
    }

    pub fn finish(&self) -> std::result::Result<(), ParseError> {
        for s in &self.systems {
            if s.strands.is_empty() {
                return Err(ParseError::new(
                    s.column.0,
                    s.column.1,
                    K::Invalid,
                    format!("system `{}` is never prepared", s.name),
                ));
            }
        }
        Ok(())
    }

    /// Outcome labels in directive order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn experiment(self) -> Result<Experiment> {
        let mut strands = Vec::new();
        for sys in self.systems {
            for d in sys.strands {
                let layout = Layout::single(d.register.clone(), sys.dim)?;
                strands.push((d.register, Strand::new(layout, d.start, d.links, d.post)?));
            }
        }
        let mut ex = Experiment::new(MultiSystemChain::new(strands, self.preparations)?);
        for e in self.events {
            ex = match e {
                EventSpec::Measure { moment, label, register, observable } => {
                    ex.event(moment, Action::Measure { label, registers: vec![register], observable })
                }
                EventSpec::Meter(m) => m.attach(ex)?,
            };
        }
        for s in self.selections {
            ex = ex.select(s);
        }
        Ok(ex)
    }
}
