//! Standard single- and two-qubit objects.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::qcore::{Layout, Operator, State};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Spin axis for named states and observables.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// Polar and azimuthal angles of the axis.
    pub fn angles(self) -> (f64, f64) {
        use std::f64::consts::FRAC_PI_2;
        match self {
            Axis::X => (FRAC_PI_2, 0.0),
            Axis::Y => (FRAC_PI_2, FRAC_PI_2),
            Axis::Z => (0.0, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

fn qubit_op(m: [C64; 4]) -> Operator {
    Operator::new(vec![2], m.to_vec()).expect("2x2")
}

pub fn pauli_x() -> Operator {
    qubit_op([ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> Operator {
    qubit_op([ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> Operator {
    qubit_op([ONE, ZERO, ZERO, -ONE])
}

pub fn pauli(axis: Axis) -> Operator {
    match axis {
        Axis::X => pauli_x(),
        Axis::Y => pauli_y(),
        Axis::Z => pauli_z(),
    }
}

/// `sigma_n = sin(theta)cos(phi) X + sin(theta)sin(phi) Y + cos(theta) Z`.
pub fn spin_observable(theta: f64, phi: f64) -> Operator {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let x = pauli_x().scale_re(st * cp);
    let y = pauli_y().scale_re(st * sp);
    let z = pauli_z().scale_re(ct);
    &(&x + &y) + &z
}

/// `+1` eigenstate of the spin observable along `(theta, phi)`, on register `q`.
pub fn spin_state(theta: f64, phi: f64) -> State {
    let (s, c) = (theta / 2.0).sin_cos();
    State::single("q", vec![C64::new(c, 0.0), C64::from_polar(s, phi)]).expect("qubit")
}

/// `|up_axis>` on register `q`.
pub fn spin_up(axis: Axis) -> State {
    let h = FRAC_1_SQRT_2;
    let amps = match axis {
        Axis::Z => vec![ONE, ZERO],
        Axis::X => vec![C64::new(h, 0.0), C64::new(h, 0.0)],
        Axis::Y => vec![C64::new(h, 0.0), C64::new(0.0, h)],
    };
    State::single("q", amps).expect("qubit")
}

/// `|down_axis>` on register `q`.
pub fn spin_down(axis: Axis) -> State {
    let h = FRAC_1_SQRT_2;
    let amps = match axis {
        Axis::Z => vec![ZERO, ONE],
        Axis::X => vec![C64::new(h, 0.0), C64::new(-h, 0.0)],
        Axis::Y => vec![C64::new(h, 0.0), C64::new(0.0, -h)],
    };
    State::single("q", amps).expect("qubit")
}

/// Bell states in the order `Phi+, Phi-, Psi+, Psi-` on registers `a`, `b`.
pub fn bell_basis() -> [State; 4] {
    bell_basis_on("a", "b").expect("distinct names")
}

/// Bell states on the named registers; `Phi+ = (|00> + |11>)/sqrt 2`.
pub fn bell_basis_on(a: &str, b: &str) -> Result<[State; 4]> {
    let layout = Layout::qubits(&[a, b])?;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let mk = |v: [C64; 4]| State::new(layout.clone(), v.to_vec());
    Ok([
        mk([h, ZERO, ZERO, h])?,
        mk([h, ZERO, ZERO, -h])?,
        mk([ZERO, h, h, ZERO])?,
        mk([ZERO, h, -h, ZERO])?,
    ])
}

/// `(|up_x down_x> - |down_x up_x>)/sqrt 2` on registers `a`, `b`.
pub fn singlet() -> State {
    singlet_on("a", "b").expect("distinct names")
}

pub fn singlet_on(a: &str, b: &str) -> Result<State> {
    let up = spin_up(Axis::X).relabel(&[a])?;
    let down = spin_down(Axis::X).relabel(&[b])?;
    let ud = up.tensor(&down)?;
    let du = spin_down(Axis::X).relabel(&[a])?.tensor(&spin_up(Axis::X).relabel(&[b])?)?;
    let amps = ud
        .amplitudes()
        .iter()
        .zip(du.amplitudes())
        .map(|(x, y)| (x - y) * FRAC_1_SQRT_2)
        .collect();
    State::new(ud.layout().clone(), amps)
}

/// `exp(-i theta X / 2)`.
pub fn rx(theta: f64) -> Operator {
    let (s, c) = (theta / 2.0).sin_cos();
    qubit_op([C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0)])
}

/// `exp(-i theta Y / 2)`.
pub fn ry(theta: f64) -> Operator {
    let (s, c) = (theta / 2.0).sin_cos();
    qubit_op([C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)])
}

/// `exp(-i theta Z / 2)`.
pub fn rz(theta: f64) -> Operator {
    qubit_op([C64::from_polar(1.0, -theta / 2.0), ZERO, ZERO, C64::from_polar(1.0, theta / 2.0)])
}

pub fn hadamard() -> Operator {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    qubit_op([h, h, h, -h])
}
