use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qcore::{Operator, State, TOL_STRUCTURE};

/// Discrete time step.
pub type TimeIndex = usize;

/// Connector between the future boundary of one moment and the past boundary
/// of a later one.
#[derive(Clone, Debug, PartialEq)]
pub enum LinkKind {
    /// Complete correlation: `sum_i |i><i|`.
    Identity,
    /// Skewed complete correlation: `sum_i U|i><i|`.
    Unitary(Operator),
    /// Measurement collapse onto `phi`: `|phi><phi|`.
    Collapse(State),
    /// Partial correlation, e.g. a weak-measurement Kraus operator.
    Partial(Operator),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub kind: LinkKind,
    pub from: TimeIndex,
    pub to: TimeIndex,
}

impl Link {
    /// Validates the kind and the stride (`to > from`).
    pub fn new(kind: LinkKind, from: TimeIndex, to: TimeIndex) -> Result<Self> {
        if to <= from {
            return Err(Error::InvalidChain(format!("link {from}->{to} does not move forward")));
        }
        match &kind {
            LinkKind::Identity => {}
            LinkKind::Unitary(u) => u.ensure_unitary()?,
            LinkKind::Collapse(phi) => phi.ensure_normalized()?,
            LinkKind::Partial(k) => {
                let n = k.operator_norm();
                if n > 1.0 + TOL_STRUCTURE {
                    return Err(Error::NotContraction(n));
                }
            }
        }
        Ok(Self { kind, from, to })
    }

    /// Stride-1 link starting at `from`.
    pub fn step(kind: LinkKind, from: TimeIndex) -> Result<Self> {
        Self::new(kind, from, from + 1)
    }

    pub fn stride(&self) -> usize {
        self.to - self.from
    }

    /// Dimension of the system the link acts on, when the kind fixes it.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            LinkKind::Identity => None,
            LinkKind::Unitary(u) | LinkKind::Partial(u) => Some(u.dim()),
            LinkKind::Collapse(phi) => Some(phi.layout().total_dim()),
        }
    }

    /// Matrix of the link for a system of shape `dims`.
    ///
    /// Links are unnormalized: the identity link is `I`, not `I/sqrt(d)`, so
    /// contracting a chain yields `<post|L_n ... L_1|pre>` literally.
    pub fn matrix(&self, dims: &[usize]) -> Result<Operator> {
        let m = match &self.kind {
            LinkKind::Identity => Operator::identity(dims.to_vec()),
            LinkKind::Unitary(u) | LinkKind::Partial(u) => u.clone(),
            LinkKind::Collapse(phi) => Operator::projector_onto(phi),
        };
        if m.dim() != dims.iter().product::<usize>() {
            return Err(Error::Shape(format!(
                "link of dimension {} on system of dimension {}",
                m.dim(),
                dims.iter().product::<usize>()
            )));
        }
        Operator::new(dims.to_vec(), m.matrix().to_vec())
    }

    /// True for links that preserve norm (identity, unitary, unitary partial).
    pub fn is_unitary(&self) -> bool {
        match &self.kind {
            LinkKind::Identity | LinkKind::Unitary(_) => true,
            LinkKind::Partial(k) => k.is_unitary(TOL_STRUCTURE),
            LinkKind::Collapse(_) => false,
        }
    }
}

/// Free-function form of [`Link::matrix`].
pub fn link_matrix(link: &Link, dims: &[usize]) -> Result<Operator> {
    link.matrix(dims)
}

/// A qubit collapse written as a weighted sum of two unitary links.
#[derive(Clone, Debug)]
pub struct CollapseDecomposition {
    pub weights: [f64; 2],
    pub unitaries: [Operator; 2],
}

impl CollapseDecomposition {
    pub fn reconstruct(&self) -> Operator {
        let a = self.unitaries[0].scale_re(self.weights[0]);
        let b = self.unitaries[1].scale_re(self.weights[1]);
        &a + &b
    }
}

/// `|phi><phi| = 1/2 I + 1/2 (2|phi><phi| - I)`: a qubit collapse as an equal
/// superposition of the identity evolution and a reflection.
pub fn decompose_collapse(link: &Link) -> Result<CollapseDecomposition> {
    let LinkKind::Collapse(phi) = &link.kind else {
        return Err(Error::Invalid("decompose_collapse needs a collapse link".into()));
    };
    let dims = phi.layout().dims();
    if phi.layout().total_dim() != 2 {
        return Err(Error::Shape(format!(
            "collapse decomposition needs a 2-dimensional system, got {}",
            phi.layout().total_dim()
        )));
    }
    let id = Operator::identity(dims.clone());
    let p = Operator::projector_onto(phi);
    let reflection = &p.scale(C64::new(2.0, 0.0)) - &id;
    Ok(CollapseDecomposition { weights: [0.5, 0.5], unitaries: [id, reflection] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::*;

    #[test]
    fn identity_link_matrix() {
        let l = Link::step(LinkKind::Identity, 0).unwrap();
        assert_eq!(l.matrix(&[2]).unwrap(), Operator::identity(vec![2]));
    }

    #[test]
    fn collapse_link_matrix_is_outer_product() {
        let l = Link::step(LinkKind::Collapse(spin_up(Axis::X)), 0).unwrap();
        let m = l.matrix(&[2]).unwrap();
        // outer-product oracle: |+><+| = 1/2 [[1,1],[1,1]]
        for r in 0..2 {
            for c in 0..2 {
                assert!((m.get(r, c) - C64::new(0.5, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_link_matrix() {
        let up = Operator::projector_onto(&spin_up(Axis::X));
        let down = Operator::projector_onto(&spin_down(Axis::X));
        let k = &up.scale_re(0.8) + &down.scale_re(0.6);
        let l = Link::step(LinkKind::Partial(k.clone()), 3).unwrap();
        let m = l.matrix(&[2]).unwrap();
        assert!(m.approx_eq(&k, 0.0));
        // in z basis: 0.7 I + 0.1 X
        assert!((m.get(0, 0) - C64::new(0.7, 0.0)).norm() < 1e-15);
        assert!((m.get(0, 1) - C64::new(0.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn link_validation() {
        let bad = Operator::diagonal(vec![2], &[C64::new(1.0, 0.0), C64::new(2.0, 0.0)]).unwrap();
        assert!(matches!(Link::step(LinkKind::Unitary(bad.clone()), 0), Err(Error::NotUnitary)));
        assert!(matches!(Link::step(LinkKind::Partial(bad), 0), Err(Error::NotContraction(_))));
        let unnorm = State::single("q", vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        assert!(matches!(Link::step(LinkKind::Collapse(unnorm), 0), Err(Error::NotNormalized(_))));
        assert!(Link::new(LinkKind::Identity, 2, 2).is_err());
        assert_eq!(Link::new(LinkKind::Identity, 0, 2).unwrap().stride(), 2);
    }

    #[test]
    fn partial_with_unitary_kraus_is_unitary() {
        let l = Link::step(LinkKind::Partial(pauli_x()), 0).unwrap();
        assert!(l.is_unitary());
    }

    #[test]
    fn collapse_decomposition_examples() {
        let l = Link::step(LinkKind::Collapse(spin_up(Axis::X)), 0).unwrap();
        let d = decompose_collapse(&l).unwrap();
        assert_eq!(d.weights, [0.5, 0.5]);
        assert!(d.unitaries[1].approx_eq(&pauli_x(), 1e-15));
        assert!(d.reconstruct().approx_eq(&l.matrix(&[2]).unwrap(), 1e-15));

        let l = Link::step(LinkKind::Collapse(spin_up(Axis::Z)), 0).unwrap();
        let d = decompose_collapse(&l).unwrap();
        assert!(d.unitaries[1].approx_eq(&pauli_z(), 1e-15));
        for u in &d.unitaries {
            assert!(u.is_unitary(1e-14));
        }

        let qutrit = State::single("q", vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let l = Link::step(LinkKind::Collapse(qutrit), 0).unwrap();
        assert!(matches!(decompose_collapse(&l), Err(Error::Shape(_))));
        let l = Link::step(LinkKind::Identity, 0).unwrap();
        assert!(decompose_collapse(&l).is_err());
    }
}
