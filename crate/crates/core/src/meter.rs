//! Von Neumann measuring devices with a finite cyclic pointer.
//!
//! An impulsive coupling `H = delta(t) A p` moves the pointer by the value of
//! `A`. On a pointer of odd dimension `d` with positions
//! `q = -(d-1)/2 ..= (d-1)/2`, the coupling is the controlled shift
//! `sum_a P_a (x) S^(sign * a)` with `S|q> = |q+1 mod d>`. Integer spectra
//! give exact shifts; the pointer is sized so no reachable shift wraps.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::history::{Action, Experiment, HistoryChain, LinkKind, MultiSystemChain, TimeIndex};
use crate::qcore::{Layout, Operator, State, TOL_NORM};
use crate::stats::OutcomeStats;

pub const DEFAULT_POINTER_DIM: usize = 7;
pub const MIN_POINTER_DIM: usize = 5;

/// Cyclic pointer register, initially at `|q = 0>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointerRegister {
    name: String,
    dim: usize,
}

impl PointerRegister {
    pub fn new(name: impl Into<String>, dim: usize) -> Result<Self> {
        if dim < MIN_POINTER_DIM || dim.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "pointer dimension must be odd and >= {MIN_POINTER_DIM}, got {dim}"
            )));
        }
        Ok(Self { name: name.into(), dim })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest reachable `|q|`.
    pub fn half(&self) -> i64 {
        (self.dim as i64 - 1) / 2
    }

    pub fn index_of(&self, q: i64) -> Option<usize> {
        (q.abs() <= self.half()).then(|| (q + self.half()) as usize)
    }

    pub fn position_of(&self, index: usize) -> i64 {
        index as i64 - self.half()
    }

    pub fn layout(&self) -> Layout {
        Layout::single(self.name.clone(), self.dim).expect("dim >= 5")
    }

    /// `|q = 0>`.
    pub fn ready_state(&self) -> State {
        State::basis(self.layout(), self.half() as usize).expect("in range")
    }

    /// `S^k` with `S|q> = |q+1 mod d>`.
    pub fn shift(&self, k: i64) -> Operator {
        let d = self.dim as i64;
        Operator::from_fn(vec![self.dim], |r, c| {
            if (c as i64 + k).rem_euclid(d) == r as i64 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        })
    }

    /// Position operator `q`.
    pub fn position_observable(&self) -> Operator {
        let diag: Vec<C64> = (0..self.dim).map(|i| C64::new(self.position_of(i) as f64, 0.0)).collect();
        Operator::diagonal(vec![self.dim], &diag).expect("square")
    }

    /// Smallest valid dimension whose range covers `|q| <= reach`.
    pub fn required_dim(reach: i64) -> usize {
        ((2 * reach + 1) as usize).max(MIN_POINTER_DIM)
    }
}

/// Impulsive coupling of a system observable to a pointer.
#[derive(Clone, Debug)]
pub struct CouplingEvent {
    pub time: TimeIndex,
    pub observable: Operator,
    pub sign: i32,
}

/// Eigenvalues and projectors of an integer-spectrum observable.
fn integer_spectrum(observable: &Operator) -> Result<Vec<(i64, Operator)>> {
    observable
        .eigenspaces()?
        .into_iter()
        .map(|e| {
            if e.value.fract() != 0.0 {
                return Err(Error::NonIntegerSpectrum);
            }
            Ok((e.value as i64, e.projector))
        })
        .collect()
}

/// Largest `|a|` over the spectrum.
pub fn spectral_reach(observable: &Operator) -> Result<i64> {
    Ok(integer_spectrum(observable)?.iter().map(|(a, _)| a.abs()).max().unwrap_or(0))
}

/// `sum_a P_a (x) S^(sign * a)` on (system, pointer).
pub fn coupling_operator(observable: &Operator, sign: i32, pointer: &PointerRegister) -> Result<Operator> {
    let mut dims = observable.dims().to_vec();
    dims.push(pointer.dim);
    let mut total = Operator::zeros(dims);
    for (a, p) in integer_spectrum(observable)? {
        total = &total + &p.kron(&pointer.shift(sign as i64 * a));
    }
    Ok(total)
}

/// Applies one coupling to a joint state that contains the pointer register.
///
/// Rejects the coupling when some occupied pointer position would be pushed
/// past the register's range.
pub fn apply_coupling(
    joint: &State,
    system: &[&str],
    pointer: &PointerRegister,
    event: &CouplingEvent,
) -> Result<State> {
    let dim = joint.layout().dim_of(pointer.name())?;
    if dim != pointer.dim {
        return Err(Error::Shape(format!("pointer `{}` has dimension {dim}", pointer.name)));
    }
    let reach = spectral_reach(&event.observable)?;
    let rho = joint.reduced_density(&[pointer.name()])?;
    let occupied = (0..pointer.dim)
        .filter(|&i| rho.get(i, i).re > TOL_NORM)
        .map(|i| pointer.position_of(i).abs())
        .max()
        .unwrap_or(0);
    if occupied + reach > pointer.half() {
        return Err(Error::Wraparound { dim: pointer.dim, required: PointerRegister::required_dim(occupied + reach) });
    }
    let op = coupling_operator(&event.observable, event.sign, pointer)?;
    let mut regs: Vec<&str> = system.to_vec();
    regs.push(pointer.name());
    joint.apply(&regs, &op)
}

/// A pointer coupled with sign `-1` at the first point and `+1` at the
/// second, so its final reading is `A(second) - A(first)`.
#[derive(Clone, Debug)]
pub struct DifferenceMeter {
    pub label: String,
    pub first: (Vec<String>, TimeIndex),
    pub second: (Vec<String>, TimeIndex),
    pub observable: Operator,
    pub dim: Option<usize>,
}

impl DifferenceMeter {
    /// Pointer dimension needed to avoid wraparound.
    pub fn required_dim(&self) -> Result<usize> {
        Ok(PointerRegister::required_dim(2 * spectral_reach(&self.observable)?))
    }

    /// Pointer register `ptr:<label>`, sized to avoid wraparound.
    pub fn pointer(&self) -> Result<PointerRegister> {
        let required = self.required_dim()?;
        let dim = match self.dim {
            Some(d) if d < required => return Err(Error::Wraparound { dim: d, required }),
            Some(d) => d,
            None => required.max(DEFAULT_POINTER_DIM),
        };
        PointerRegister::new(format!("ptr:{}", self.label), dim)
    }

    /// The `-A` coupling at the first point and the `+A` coupling at the
    /// second, as scheduled actions.
    pub fn couplings(&self, pointer: &PointerRegister) -> Result<[(TimeIndex, Action); 2]> {
        let couple = |(regs, moment): &(Vec<String>, TimeIndex), sign: i32| -> Result<(TimeIndex, Action)> {
            let mut registers = regs.clone();
            registers.push(pointer.name().to_string());
            Ok((*moment, Action::Apply { registers, op: coupling_operator(&self.observable, sign, pointer)? }))
        };
        Ok([couple(&self.first, -1)?, couple(&self.second, 1)?])
    }

    /// Final pointer readout under the meter label.
    pub fn readout(&self, ex: Experiment, pointer: &PointerRegister) -> Experiment {
        ex.readout(self.label.clone(), vec![pointer.name().to_string()], pointer.position_observable())
    }

    /// Adds the pointer register, both couplings and the final readout.
    pub fn attach(&self, ex: Experiment) -> Result<Experiment> {
        let pointer = self.pointer()?;
        let [(m1, a1), (m2, a2)] = self.couplings(&pointer)?;
        let ex = ex.auxiliary(pointer.ready_state()).event(m1, a1).event(m2, a2);
        Ok(self.readout(ex, &pointer))
    }
}

fn difference_experiment(
    chain: &HistoryChain,
    observable: &Operator,
    t1: TimeIndex,
    t2: TimeIndex,
) -> Result<(Experiment, DifferenceMeter)> {
    if t1 >= t2 {
        return Err(Error::Invalid(format!("difference meter needs t1 < t2, got {t1} and {t2}")));
    }
    let regs: Vec<String> = chain.system().names().map(str::to_string).collect();
    let meter = DifferenceMeter {
        label: "meter".into(),
        first: (regs.clone(), t1),
        second: (regs, t2),
        observable: observable.clone(),
        dim: None,
    };
    Ok((Experiment::new(MultiSystemChain::from_chain("system", chain)?), meter))
}

/// Exact distribution of the pointer reading `A(t2) - A(t1)` (label `meter`).
pub fn two_time_difference(
    chain: &HistoryChain,
    observable: &Operator,
    t1: TimeIndex,
    t2: TimeIndex,
) -> Result<OutcomeStats> {
    let (ex, meter) = difference_experiment(chain, observable, t1, t2)?;
    meter.attach(ex)?.compile()?.distribution()
}

/// Normalized joint (system, pointer) state after both couplings and the
/// rest of the chain, before the pointer is read. The pointer register is
/// named `ptr:meter`.
pub fn two_time_final_state(
    chain: &HistoryChain,
    observable: &Operator,
    t1: TimeIndex,
    t2: TimeIndex,
) -> Result<State> {
    let (ex, meter) = difference_experiment(chain, observable, t1, t2)?;
    let ex = meter.attach(ex)?;
    let program = ex.compile()?;
    // drop the readout: it is the final step
    let steps = program.steps()[..program.steps().len() - 1].to_vec();
    let s = crate::history::Program::new(program.initial().clone(), steps)?.final_state()?;
    if s.norm_sqr() <= crate::history::program::IMPOSSIBLE_WEIGHT {
        return Err(Error::ConditioningImpossible);
    }
    Ok(s.normalized())
}

/// Orthonormal pair `(phi_plus, phi_minus)` of a qubit.
#[derive(Clone, Debug)]
pub struct MeasurementBasis {
    pub plus: State,
    pub minus: State,
}

impl MeasurementBasis {
    pub fn new(plus: State, minus: State) -> Result<Self> {
        if plus.layout().total_dim() != 2 || minus.layout().total_dim() != 2 {
            return Err(Error::Shape("partial measurement basis must be a qubit basis".into()));
        }
        plus.ensure_normalized()?;
        minus.ensure_normalized()?;
        if plus.inner(&minus)?.norm() > TOL_NORM {
            return Err(Error::Invalid("basis states are not orthogonal".into()));
        }
        Ok(Self { plus, minus })
    }

    pub fn axis(axis: crate::qcore::Axis) -> Self {
        Self::new(crate::qcore::spin_up(axis), crate::qcore::spin_down(axis)).expect("orthonormal")
    }

    fn projectors(&self) -> (Operator, Operator) {
        (Operator::projector_onto(&self.plus), Operator::projector_onto(&self.minus))
    }
}

fn check_strengths(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0 && beta >= 0.0) || (alpha * alpha + beta * beta - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!(
            "partial measurement needs alpha, beta >= 0 with alpha^2 + beta^2 = 1, got ({alpha}, {beta})"
        )));
    }
    Ok(())
}

/// Kraus operators for meter readings `+1` and `-1`:
/// `alpha P+ + beta P-` and `beta P+ + alpha P-`.
pub fn kraus_pair(basis: &MeasurementBasis, alpha: f64, beta: f64) -> Result<[Operator; 2]> {
    check_strengths(alpha, beta)?;
    let (p, m) = basis.projectors();
    Ok([
        &p.scale_re(alpha) + &m.scale_re(beta),
        &p.scale_re(beta) + &m.scale_re(alpha),
    ])
}

/// Partial-collapse link for one meter reading.
pub fn partial_link(basis: &MeasurementBasis, alpha: f64, beta: f64, outcome: i32) -> Result<LinkKind> {
    let [plus, minus] = kraus_pair(basis, alpha, beta)?;
    match outcome {
        1 => Ok(LinkKind::Partial(plus)),
        -1 => Ok(LinkKind::Partial(minus)),
        _ => Err(Error::Invalid(format!("meter reading must be +1 or -1, got {outcome}"))),
    }
}

/// Meter register basis index for each reading: `0 -> 0`, `1 -> +1`, `2 -> -1`.
pub const METER_READINGS: [i32; 3] = [0, 1, -1];

fn meter_index(reading: i32) -> usize {
    METER_READINGS.iter().position(|&r| r == reading).expect("valid reading")
}

/// Unitary on (system, 3-state meter):
/// `|phi+>|0> -> |phi+>(alpha|+1> + beta|-1>)`,
/// `|phi->|0> -> |phi->(alpha|-1> + beta|+1>)`.
pub fn partial_unitary(basis: &MeasurementBasis, alpha: f64, beta: f64) -> Result<Operator> {
    check_strengths(alpha, beta)?;
    let r = |x: f64| C64::new(x, 0.0);
    let z = r(0.0);
    // columns: image of |0>, then two vectors completing the meter basis
    let v_plus = Operator::new(vec![3], vec![z, z, r(1.0), r(alpha), r(beta), z, r(beta), r(-alpha), z])?;
    let v_minus = Operator::new(vec![3], vec![z, z, r(1.0), r(beta), r(alpha), z, r(alpha), r(-beta), z])?;
    let (p, m) = basis.projectors();
    Ok(&p.kron(&v_plus) + &m.kron(&v_minus))
}

/// One reading of a partial measurement.
#[derive(Clone, Debug)]
pub struct PartialBranch {
    pub outcome: i32,
    /// Normalized conditioned state on the original layout.
    pub state: State,
    pub probability: f64,
}

fn meter_name(layout: &Layout) -> String {
    let mut name = "meter".to_string();
    while layout.contains(&name) {
        name.push('_');
    }
    name
}

/// Both readings (`+1` first) of a partial measurement on `system`.
pub fn partial_measurement_branches(
    joint: &State,
    system: &str,
    basis: &MeasurementBasis,
    alpha: f64,
    beta: f64,
) -> Result<[PartialBranch; 2]> {
    let u = partial_unitary(basis, alpha, beta)?;
    if joint.layout().dim_of(system)? != 2 {
        return Err(Error::Shape(format!("`{system}` is not a qubit")));
    }
    let name = meter_name(joint.layout());
    let meter = State::basis(Layout::single(name.clone(), 3)?, meter_index(0))?;
    let coupled = joint.tensor(&meter)?.apply(&[system, &name], &u)?;
    let branch = |reading: i32| -> Result<PartialBranch> {
        let bra = State::basis(Layout::single(name.clone(), 3)?, meter_index(reading))?;
        let s = coupled.partial_inner(&bra)?;
        let probability = s.norm_sqr() / joint.norm_sqr();
        Ok(PartialBranch { outcome: reading, state: s.normalized(), probability })
    };
    Ok([branch(1)?, branch(-1)?])
}

/// Samples one reading of a partial measurement.
pub fn partial_measurement<R: Rng + ?Sized>(
    joint: &State,
    system: &str,
    basis: &MeasurementBasis,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> Result<PartialBranch> {
    let [plus, minus] = partial_measurement_branches(joint, system, basis, alpha, beta)?;
    let u: f64 = rng.random();
    Ok(if u < plus.probability { plus } else { minus })
}
