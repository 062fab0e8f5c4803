use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::history::link::{Link, LinkKind, TimeIndex};
use crate::history::program::{Program, Step};
use crate::qcore::{Layout, Operator, Register, State, DEFAULT_MAX_DIMENSION};

/// The time chain of one system: moments connected by links, with an
/// optional post-selected bra at the last moment.
///
/// Moments skipped by a stride-k link belong to no boundary of this strand.
#[derive(Clone, Debug, PartialEq)]
pub struct Strand {
    layout: Layout,
    start: TimeIndex,
    links: Vec<Link>,
    post: Option<State>,
}

impl Strand {
    pub fn new(layout: Layout, start: TimeIndex, links: Vec<Link>, post: Option<State>) -> Result<Self> {
        let dim = layout.total_dim();
        let mut at = start;
        for (i, l) in links.iter().enumerate() {
            if l.from != at {
                return Err(Error::InvalidChain(format!(
                    "link {i} starts at moment {} but the chain is at moment {at}",
                    l.from
                )));
            }
            if let Some(d) = l.dim() {
                if d != dim {
                    return Err(Error::Shape(format!("link {i} has dimension {d}, system has {dim}")));
                }
            }
            at = l.to;
        }
        if let Some(p) = &post {
            if p.layout().dims() != layout.dims() {
                return Err(Error::Shape("post-selected state does not match the system".into()));
            }
            p.ensure_normalized()?;
        }
        Ok(Self { layout, start, links, post })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn start(&self) -> TimeIndex {
        self.start
    }

    pub fn end(&self) -> TimeIndex {
        self.links.last().map_or(self.start, |l| l.to)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn post(&self) -> Option<&State> {
        self.post.as_ref()
    }

    /// Moments carrying boundary vectors of this strand.
    pub fn moments(&self) -> Vec<TimeIndex> {
        std::iter::once(self.start).chain(self.links.iter().map(|l| l.to)).collect()
    }

    pub fn has_moment(&self, m: TimeIndex) -> bool {
        m == self.start || self.links.iter().any(|l| l.to == m)
    }

    pub fn registers(&self) -> Vec<String> {
        self.layout.names().map(str::to_string).collect()
    }
}

/// A single system's history: pre-selected state, links, optional post.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryChain {
    pre: State,
    strand: Strand,
}

impl HistoryChain {
    /// The chain starts at the first link's origin (moment 0 without links).
    pub fn new(pre: State, links: Vec<Link>, post: Option<State>) -> Result<Self> {
        let start = links.first().map_or(0, |l| l.from);
        Self::starting_at(start, pre, links, post)
    }

    pub fn starting_at(start: TimeIndex, pre: State, links: Vec<Link>, post: Option<State>) -> Result<Self> {
        pre.ensure_normalized()?;
        let strand = Strand::new(pre.layout().clone(), start, links, post)?;
        Ok(Self { pre, strand })
    }

    /// Stride-1 links of the given kinds starting at moment 0.
    pub fn from_kinds(pre: State, kinds: Vec<LinkKind>, post: Option<State>) -> Result<Self> {
        let links = kinds
            .into_iter()
            .enumerate()
            .map(|(i, k)| Link::step(k, i))
            .collect::<Result<_>>()?;
        Self::new(pre, links, post)
    }

    /// `n` identity links: the zero-Hamiltonian evolution.
    pub fn trivial(pre: State, n: usize, post: Option<State>) -> Result<Self> {
        Self::from_kinds(pre, vec![LinkKind::Identity; n], post)
    }

    pub fn pre(&self) -> &State {
        &self.pre
    }

    pub fn strand(&self) -> &Strand {
        &self.strand
    }

    pub fn links(&self) -> &[Link] {
        &self.strand.links
    }

    pub fn post(&self) -> Option<&State> {
        self.strand.post.as_ref()
    }

    pub fn start(&self) -> TimeIndex {
        self.strand.start
    }

    pub fn end(&self) -> TimeIndex {
        self.strand.end()
    }

    pub fn system(&self) -> &Layout {
        &self.strand.layout
    }

    pub fn with_post(&self, post: Option<State>) -> Result<Self> {
        Ok(Self {
            pre: self.pre.clone(),
            strand: Strand::new(self.strand.layout.clone(), self.strand.start, self.strand.links.clone(), post)?,
        })
    }

    /// Link matrices in time order.
    pub fn link_matrices(&self) -> Result<Vec<Operator>> {
        let dims = self.system().dims();
        self.links().iter().map(|l| l.matrix(&dims)).collect()
    }
}

/// Several strands, with preparations that may entangle strands starting at
/// the earliest moment.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSystemChain {
    strands: Vec<(String, Strand)>,
    preparations: Vec<State>,
}

impl MultiSystemChain {
    /// Each strand register must be covered by exactly one preparation state.
    /// A preparation spanning several strands requires all of them to start at
    /// the earliest moment of the chain.
    pub fn new(strands: Vec<(String, Strand)>, preparations: Vec<State>) -> Result<Self> {
        for (i, (label, _)) in strands.iter().enumerate() {
            if strands[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::NameCollision(label.clone()));
            }
        }
        let earliest = strands.iter().map(|(_, s)| s.start).min().unwrap_or(0);
        let owner = |reg: &str| strands.iter().position(|(_, s)| s.layout.contains(reg));
        let mut covered: Vec<String> = Vec::new();
        for prep in &preparations {
            prep.ensure_normalized()?;
            let mut owners = Vec::new();
            for r in prep.layout().registers() {
                let o = owner(&r.name).ok_or_else(|| Error::UnknownRegister(r.name.clone()))?;
                if strands[o].1.layout.dim_of(&r.name)? != r.dim {
                    return Err(Error::Shape(format!("register `{}` dimension differs", r.name)));
                }
                if covered.contains(&r.name) {
                    return Err(Error::InvalidChain(format!("register `{}` prepared twice", r.name)));
                }
                covered.push(r.name.clone());
                if !owners.contains(&o) {
                    owners.push(o);
                }
            }
            if owners.len() > 1 && owners.iter().any(|&o| strands[o].1.start != earliest) {
                return Err(Error::InvalidChain(
                    "a preparation shared by several systems must happen at the earliest moment".into(),
                ));
            }
        }
        for (label, s) in &strands {
            for r in s.layout.names() {
                if !covered.iter().any(|c| c == r) {
                    return Err(Error::InvalidChain(format!("system `{label}` register `{r}` is never prepared")));
                }
            }
        }
        Ok(Self { strands, preparations })
    }

    pub fn from_chain(label: impl Into<String>, chain: &HistoryChain) -> Result<Self> {
        Self::new(vec![(label.into(), chain.strand.clone())], vec![chain.pre.clone()])
    }

    pub fn strands(&self) -> &[(String, Strand)] {
        &self.strands
    }

    pub fn preparations(&self) -> &[State] {
        &self.preparations
    }

    pub fn strand(&self, label: &str) -> Result<&Strand> {
        self.strands
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::Invalid(format!("unknown system `{label}`")))
    }

    fn strand_of_register(&self, reg: &str) -> Option<&Strand> {
        self.strands.iter().map(|(_, s)| s).find(|s| s.layout.contains(reg))
    }
}

/// What happens at a moment.
#[derive(Clone, Debug)]
pub enum Action {
    /// Projective measurement of a hermitian observable, reported under `label`.
    Measure { label: String, registers: Vec<String>, observable: Operator },
    /// Any linear map (unitary couplings, selected Kraus outcomes).
    Apply { registers: Vec<String>, op: Operator },
}

impl Action {
    pub fn registers(&self) -> &[String] {
        match self {
            Action::Measure { registers, .. } | Action::Apply { registers, .. } => registers,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Event {
    pub moment: TimeIndex,
    pub action: Action,
}

/// A multi-system chain plus auxiliary registers (pointers), events at
/// moments, final joint post-selections and final readouts.
#[derive(Clone, Debug)]
pub struct Experiment {
    chain: MultiSystemChain,
    auxiliaries: Vec<State>,
    events: Vec<Event>,
    selections: Vec<State>,
    readouts: Vec<Action>,
    max_dimension: usize,
}

fn kron_amps(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

impl Experiment {
    pub fn new(chain: MultiSystemChain) -> Self {
        Self {
            chain,
            auxiliaries: Vec::new(),
            events: Vec::new(),
            selections: Vec::new(),
            readouts: Vec::new(),
            max_dimension: DEFAULT_MAX_DIMENSION,
        }
    }

    pub fn chain(&self) -> &MultiSystemChain {
        &self.chain
    }

    /// Adds registers that live outside the time chains (meters, pointers).
    pub fn auxiliary(mut self, state: State) -> Self {
        self.auxiliaries.push(state);
        self
    }

    pub fn event(mut self, moment: TimeIndex, action: Action) -> Self {
        self.events.push(Event { moment, action });
        self
    }

    /// Final post-selection on a joint state of several registers.
    pub fn select(mut self, state: State) -> Self {
        self.selections.push(state);
        self
    }

    /// Final projective measurement, typically a pointer readout.
    pub fn readout(mut self, label: impl Into<String>, registers: Vec<String>, observable: Operator) -> Self {
        self.readouts.push(Action::Measure { label: label.into(), registers, observable });
        self
    }

    pub fn max_dimension(mut self, cap: usize) -> Self {
        self.max_dimension = cap;
        self
    }

    fn layout(&self) -> Result<Layout> {
        let regs: Vec<Register> = self
            .chain
            .preparations
            .iter()
            .chain(&self.auxiliaries)
            .flat_map(|s| s.layout().registers().iter().cloned())
            .collect();
        Layout::with_cap(regs, self.max_dimension)
    }

    fn check_action(&self, layout: &Layout, moment: Option<TimeIndex>, action: &Action) -> Result<()> {
        for r in action.registers() {
            layout.position(r)?;
            if let (Some(m), Some(strand)) = (moment, self.chain.strand_of_register(r)) {
                if !strand.has_moment(m) {
                    return Err(Error::InvalidChain(format!(
                        "register `{r}` has no boundary at moment {m} (moments {:?})",
                        strand.moments()
                    )));
                }
            }
        }
        Ok(())
    }

    fn action_step(action: &Action) -> Result<Step> {
        Ok(match action {
            Action::Measure { label, registers, observable } => {
                Step::measure(label.clone(), registers.clone(), observable)?
            }
            Action::Apply { registers, op } => Step::apply(registers.clone(), op.clone()),
        })
    }

    /// Flattens the experiment into time-ordered steps.
    ///
    /// At each moment the events scheduled there run first (in insertion
    /// order), then every link leaving that moment. Post-selections, joint
    /// selections and readouts follow the last moment.
    pub fn compile(&self) -> Result<Program> {
        let layout = self.layout()?;
        let amps = self
            .chain
            .preparations
            .iter()
            .chain(&self.auxiliaries)
            .fold(vec![C64::new(1.0, 0.0)], |acc, s| kron_amps(&acc, s.amplitudes()));
        let initial = State::new(layout.clone(), amps)?;

        for e in &self.events {
            self.check_action(&layout, Some(e.moment), &e.action)?;
        }
        for r in &self.readouts {
            self.check_action(&layout, None, r)?;
        }

        let strands = self.chain.strands();
        let first = strands.iter().map(|(_, s)| s.start).min().unwrap_or(0);
        let last = strands
            .iter()
            .map(|(_, s)| s.end())
            .chain(self.events.iter().map(|e| e.moment))
            .max()
            .unwrap_or(first);

        let mut steps = Vec::new();
        for m in first.min(last)..=last {
            for e in self.events.iter().filter(|e| e.moment == m) {
                steps.push(Self::action_step(&e.action)?);
            }
            for (_, s) in strands {
                for l in s.links.iter().filter(|l| l.from == m) {
                    if matches!(l.kind, LinkKind::Identity) {
                        continue;
                    }
                    steps.push(Step::apply(s.registers(), l.matrix(&s.layout.dims())?));
                }
            }
        }
        for (_, s) in strands {
            if let Some(p) = &s.post {
                steps.push(Step::apply(s.registers(), Operator::projector_onto(p)));
            }
        }
        for sel in &self.selections {
            sel.ensure_normalized()?;
            let regs: Vec<String> = sel.layout().names().map(str::to_string).collect();
            for r in &regs {
                if layout.dim_of(r)? != sel.layout().dim_of(r)? {
                    return Err(Error::Shape(format!("selection on `{r}` has wrong dimension")));
                }
            }
            steps.push(Step::apply(regs, Operator::projector_onto(sel)));
        }
        for r in &self.readouts {
            steps.push(Self::action_step(r)?);
        }
        Program::new(initial, steps)
    }
}
