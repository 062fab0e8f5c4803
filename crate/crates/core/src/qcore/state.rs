use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qcore::layout::Embedding;
use crate::qcore::{Layout, Operator, Register, TOL_NORM};

/// Amplitude vector over a [`Layout`].
///
/// States may be sub-normalized (conditioned states carry their weight in the
/// norm). Use [`State::is_normalized`] to check the physical-state flag.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    layout: Layout,
    amps: Vec<C64>,
}

impl State {
    pub fn new(layout: Layout, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::Shape(format!(
                "layout {layout} needs {} amplitudes, got {}",
                layout.total_dim(),
                amps.len()
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { layout, amps })
    }

    /// Computational basis state `|index>`.
    pub fn basis(layout: Layout, index: usize) -> Result<Self> {
        let d = layout.total_dim();
        if index >= d {
            return Err(Error::Shape(format!("basis index {index} out of range {d}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); d];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    /// Single-register state with the given amplitudes.
    pub fn single(name: &str, amps: Vec<C64>) -> Result<Self> {
        Self::new(Layout::single(name, amps.len())?, amps)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= TOL_NORM
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        if self.is_normalized() { Ok(()) } else { Err(Error::NotNormalized(self.norm())) }
    }

    /// Rescaled to unit norm. Zero vectors are returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scale(C64::new(1.0 / n, 0.0))
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { layout: self.layout.clone(), amps: self.amps.iter().map(|a| a * z).collect() }
    }

    /// `<self|other>`; shapes must agree (names are not compared).
    pub fn inner(&self, other: &State) -> Result<C64> {
        if self.layout.dims() != other.layout.dims() {
            return Err(Error::Shape("inner product of differently shaped states".into()));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|^2 / (<self|self><other|other>)`.
    pub fn fidelity(&self, other: &State) -> Result<f64> {
        let ip = self.inner(other)?;
        Ok(ip.norm_sqr() / (self.norm_sqr() * other.norm_sqr()))
    }

    /// Equality up to a global phase, within `tol` per amplitude.
    pub fn eq_up_to_phase(&self, other: &State, tol: f64) -> bool {
        if self.layout.dims() != other.layout.dims() {
            return false;
        }
        // phase from the largest amplitude of self
        let (k, _) = self
            .amps
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bk, bv), (i, z)| if z.norm() > bv { (i, z.norm()) } else { (bk, bv) });
        if self.amps[k].norm() == 0.0 {
            return other.amps.iter().all(|z| z.norm() <= tol);
        }
        if other.amps[k].norm() == 0.0 {
            return false;
        }
        let phase = other.amps[k] / self.amps[k];
        let phase = phase / phase.norm();
        self.amps.iter().zip(&other.amps).all(|(a, b)| (a * phase - b).norm() <= tol)
    }

    pub fn approx_eq(&self, other: &State, tol: f64) -> bool {
        self.layout.dims() == other.layout.dims()
            && self.amps.iter().zip(&other.amps).all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Kronecker product; `self` is the slower factor.
    pub fn tensor(&self, other: &State) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        let mut amps = Vec::with_capacity(layout.total_dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { layout, amps })
    }

    /// Same amplitudes with renamed registers.
    pub fn relabel<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        Ok(Self { layout: self.layout.relabel(names)?, amps: self.amps.clone() })
    }

    /// Applies `op` to the listed registers (in the listed order) and the
    /// identity elsewhere.
    pub fn apply(&self, registers: &[&str], op: &Operator) -> Result<Self> {
        let bound = BoundOp::new(&self.layout, registers, op)?;
        Ok(self.apply_bound(&bound))
    }

    /// Applies an operator prepared for this state's layout.
    pub(crate) fn apply_bound(&self, bound: &BoundOp) -> Self {
        Self { layout: self.layout.clone(), amps: bound.apply(&self.amps) }
    }

    /// Applies an operator acting on every register.
    pub fn apply_full(&self, op: &Operator) -> Result<Self> {
        if op.dim() != self.amps.len() {
            return Err(Error::Shape("operator and state dimension differ".into()));
        }
        Ok(Self { layout: self.layout.clone(), amps: op.apply_vec(&self.amps) })
    }

    /// Expectation `<s|A|s> / <s|s>` of an operator on the listed registers.
    pub fn expectation(&self, registers: &[&str], op: &Operator) -> Result<C64> {
        let a = self.apply(registers, op)?;
        Ok(self.inner(&a)? / self.norm_sqr())
    }

    /// Contracts `<bra|` over the registers named in `bra`'s layout, leaving a
    /// (generally sub-normalized) state on the remaining registers.
    pub fn partial_inner(&self, bra: &State) -> Result<Self> {
        let names: Vec<&str> = bra.layout.names().collect();
        for n in &names {
            if self.layout.dim_of(n)? != bra.layout.dim_of(n)? {
                return Err(Error::Shape(format!("register `{n}` dimension differs")));
            }
        }
        let rest = self.layout.without(&names);
        if rest.is_empty() {
            return Err(Error::Shape("partial inner product would leave no registers".into()));
        }
        let emb = Embedding::new(&self.layout, &names)?;
        // emb.bases enumerate the remaining registers in layout order
        let amps = emb
            .bases
            .iter()
            .map(|&base| {
                emb.offsets
                    .iter()
                    .zip(&bra.amps)
                    .map(|(off, b)| b.conj() * self.amps[base + off])
                    .sum()
            })
            .collect();
        Ok(Self { layout: rest, amps })
    }

    /// Reduced density matrix on the listed registers (in the listed order),
    /// normalized to unit trace.
    pub fn reduced_density(&self, registers: &[&str]) -> Result<Operator> {
        let emb = Embedding::new(&self.layout, registers)?;
        let dims: Vec<usize> = registers
            .iter()
            .map(|r| self.layout.dim_of(r))
            .collect::<Result<_>>()?;
        let d: usize = dims.iter().product();
        let mut rho = vec![C64::new(0.0, 0.0); d * d];
        for &base in &emb.bases {
            for (r, ro) in emb.offsets.iter().enumerate() {
                let a = self.amps[base + ro];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (c, co) in emb.offsets.iter().enumerate() {
                    rho[r * d + c] += a * self.amps[base + co].conj();
                }
            }
        }
        let n = self.norm_sqr();
        if n == 0.0 {
            return Err(Error::Invalid("reduced density of the zero vector".into()));
        }
        Operator::new(dims, rho.into_iter().map(|z| z / n).collect())
    }

    /// Reorders registers; `order` must be a permutation of the register names.
    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.layout.len() {
            return Err(Error::Shape("permutation must name every register".into()));
        }
        let regs: Vec<Register> = order
            .iter()
            .map(|n| Ok(self.layout.registers()[self.layout.position(n)?].clone()))
            .collect::<Result<_>>()?;
        let target = Layout::new(regs)?;
        let emb = Embedding::new(&self.layout, order)?;
        // offsets enumerate target basis states in target order
        let amps = emb.offsets.iter().map(|&o| self.amps[o]).collect();
        Ok(Self { layout: target, amps })
    }

    /// Basis-state index digits for `index` (register 0 first).
    pub fn digits(&self, index: usize) -> Vec<usize> {
        let dims = self.layout.dims();
        let mut rem = index;
        let mut out = vec![0; dims.len()];
        for j in (0..dims.len()).rev() {
            out[j] = rem % dims[j];
            rem /= dims[j];
        }
        out
    }
}

/// An operator on some registers of a fixed layout, stored as its nonzero
/// entries with embedded offsets.
#[derive(Clone, Debug)]
pub(crate) struct BoundOp {
    bases: Vec<usize>,
    offsets: Vec<usize>,
    entries: Vec<(usize, usize, C64)>,
}

impl BoundOp {
    pub fn new(layout: &Layout, registers: &[&str], op: &Operator) -> Result<Self> {
        let dims: Vec<usize> = registers.iter().map(|r| layout.dim_of(r)).collect::<Result<_>>()?;
        if dims.iter().product::<usize>() != op.dim() {
            return Err(Error::Shape(format!(
                "operator of dimension {} applied to registers {:?} of dimension {}",
                op.dim(),
                registers,
                dims.iter().product::<usize>()
            )));
        }
        let emb = Embedding::new(layout, registers)?;
        let d = op.dim();
        // couplings and projectors are mostly zeros
        let entries = op
            .matrix()
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != C64::new(0.0, 0.0))
            .map(|(k, z)| (emb.offsets[k / d], emb.offsets[k % d], *z))
            .collect();
        Ok(Self { bases: emb.bases, offsets: emb.offsets, entries })
    }

    /// Entries `G[i][j] = sum over the other registers of conj(v_i) v_j`
    /// at the listed positions, so that `<v|A|v> = sum_ij A_ij G_ij` for any
    /// `A` on the bound registers supported there.
    pub fn gram(&self, amps: &[C64], positions: &[(usize, usize)]) -> Vec<C64> {
        let pairs: Vec<(usize, usize)> = positions.iter().map(|&(i, j)| (self.offsets[i], self.offsets[j])).collect();
        let mut g = vec![C64::new(0.0, 0.0); pairs.len()];
        for &base in &self.bases {
            for (gk, &(oi, oj)) in g.iter_mut().zip(&pairs) {
                *gk += amps[base + oi].conj() * amps[base + oj];
            }
        }
        g
    }

    pub fn apply(&self, amps: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        for &base in &self.bases {
            for &(r, c, z) in &self.entries {
                out[base + r] += z * amps[base + c];
            }
        }
        out
    }
}

/// Kronecker product of several states in order.
pub fn tensor_states(states: &[State]) -> Result<State> {
    let (first, rest) = states
        .split_first()
        .ok_or_else(|| Error::Invalid("tensor of an empty list".into()))?;
    rest.iter().try_fold(first.clone(), |acc, s| acc.tensor(s))
}

/// Kronecker product of several operators in order.
pub fn tensor_operators(ops: &[Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::Invalid("tensor of an empty list".into()))?;
    Ok(rest.iter().fold(first.clone(), |acc, o| acc.kron(o)))
}

/// Applies a projector on the listed registers: returns `P|s>` and `||P|s>||^2`.
pub fn project(state: &State, registers: &[&str], projector: &Operator) -> Result<(State, f64)> {
    projector.ensure_projector()?;
    let s = state.apply(registers, projector)?;
    let p = s.norm_sqr();
    Ok((s, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::constructions::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn tensor_of_zeros() {
        let z = State::single("a", vec![c(1.0), c(0.0)]).unwrap();
        let w = State::single("b", vec![c(1.0), c(0.0)]).unwrap();
        let t = z.tensor(&w).unwrap();
        assert_eq!(t.amplitudes(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert!(matches!(z.tensor(&z), Err(Error::NameCollision(_))));
    }

    #[test]
    fn z_on_first_register_of_01() {
        let s = State::basis(Layout::qubits(&["a", "b"]).unwrap(), 1).unwrap();
        let zi = pauli_z().kron(&Operator::identity(vec![2]));
        let out = s.apply_full(&zi).unwrap();
        assert!(out.approx_eq(&s, 0.0));
        let out = s.apply(&["b"], &pauli_z()).unwrap();
        assert!(out.approx_eq(&s.scale(c(-1.0)), 0.0));
    }

    #[test]
    fn phi_plus_squared_has_four_halves() {
        let b = bell_basis();
        let b2 = bell_basis_on("c", "d").unwrap();
        let t = b[0].tensor(&b2[0]).unwrap();
        // direct Kronecker oracle: entries at |i j k l> with i=j, k=l
        for (idx, a) in t.amplitudes().iter().enumerate() {
            let (i, j, k, l) = (idx >> 3 & 1, idx >> 2 & 1, idx >> 1 & 1, idx & 1);
            let expect = if i == j && k == l { 0.5 } else { 0.0 };
            assert!((a - c(expect)).norm() < 1e-15, "entry {idx}");
        }
    }

    #[test]
    fn projection_examples() {
        let zero = State::single("q", vec![c(1.0), c(0.0)]).unwrap();
        let p0 = Operator::projector_onto(&zero);
        let (s, p) = project(&zero, &["q"], &p0).unwrap();
        assert_eq!(p, 1.0);
        assert!(s.approx_eq(&zero, 0.0));

        let plus = State::single("q", vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap();
        let (_, p) = project(&plus, &["q"], &p0).unwrap();
        assert!((p - 0.5).abs() < 1e-15);

        assert!(matches!(project(&zero, &["q"], &pauli_z()), Err(Error::NotProjector)));
    }

    #[test]
    fn singlet_projection_leaves_down_x_on_b() {
        let s = singlet_on("A", "B").unwrap();
        let up = spin_up(Axis::X).relabel(&["A"]).unwrap();
        let (post, p) = project(&s, &["A"], &Operator::projector_onto(&up)).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
        let b = post.partial_inner(&up).unwrap().normalized();
        let down = spin_down(Axis::X).relabel(&["B"]).unwrap();
        assert!(b.eq_up_to_phase(&down, 1e-14));
        assert!((b.fidelity(&down).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reduced_density_of_bell_is_mixed() {
        let b = bell_basis_on("x", "y").unwrap();
        let rho = b[0].reduced_density(&["y"]).unwrap();
        assert!(rho.approx_eq(&Operator::identity(vec![2]).scale_re(0.5), 1e-15));
    }

    fn arb_state(n: usize) -> impl Strategy<Value = State> {
        let d = 1usize << n;
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d).prop_map(move |v| {
            let names: Vec<String> = (0..n).map(|i| format!("r{i}")).collect();
            State::new(
                Layout::qubits(&names).unwrap(),
                v.into_iter().map(|(a, b)| C64::new(a, b)).collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn permute_round_trip(s in arb_state(3), perm in Just(vec!["r2", "r0", "r1"])) {
            let p = s.permute(&perm).unwrap();
            let back = p.permute(&["r0", "r1", "r2"]).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn permute_moves_digits(s in arb_state(3)) {
            let p = s.permute(&["r2", "r0", "r1"]).unwrap();
            for idx in 0..8 {
                let d = s.digits(idx);
                let j = d[2] * 4 + d[0] * 2 + d[1];
                prop_assert_eq!(p.amplitudes()[j], s.amplitudes()[idx]);
            }
        }

        #[test]
        fn apply_matches_full_kron(s in arb_state(3), th in 0.0f64..std::f64::consts::PI, ph in 0.0f64..std::f64::consts::TAU) {
            let op = spin_observable(th, ph);
            let full = tensor_operators(&[Operator::identity(vec![2]), op.clone(), Operator::identity(vec![2])]).unwrap();
            let a = s.apply(&["r1"], &op).unwrap();
            let b = s.apply_full(&full).unwrap();
            prop_assert!(a.approx_eq(&b, 1e-12));
        }
    }
}
