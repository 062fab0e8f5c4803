use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qcore::{State, TOL_STRUCTURE};

/// Dense square operator, stored row-major: entry `(r, c)` lives at
/// `matrix[r * dim + c]`.
///
/// `dims` is the operator's tensor shape, using the same ordering convention
/// as [`Layout`](crate::qcore::Layout) (factor 0 slowest). Operators carry no
/// register names; they are bound to registers when applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dims: Vec<usize>,
    matrix: Vec<C64>,
}

/// One eigenvalue of a hermitian operator and the projector onto its
/// eigenspace.
#[derive(Clone, Debug)]
pub struct Eigenspace {
    pub value: f64,
    pub projector: Operator,
}

impl Operator {
    pub fn new(dims: Vec<usize>, matrix: Vec<C64>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Shape("operator needs at least one nonzero factor".into()));
        }
        if matrix.len() != d * d {
            return Err(Error::Shape(format!(
                "operator of dimension {d} needs {} entries, got {}",
                d * d,
                matrix.len()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dims, matrix })
    }

    /// Single-factor operator from nested rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("matrix literal is not square".into()));
        }
        Self::new(vec![n], rows.iter().flatten().copied().collect())
    }

    pub fn from_fn(dims: Vec<usize>, f: impl Fn(usize, usize) -> C64) -> Self {
        let d: usize = dims.iter().product();
        let mut matrix = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                matrix.push(f(r, c));
            }
        }
        Self { dims, matrix }
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        Self::from_fn(dims, |r, c| if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        Self::from_fn(dims, |_, _| C64::new(0.0, 0.0))
    }

    pub fn diagonal(dims: Vec<usize>, diag: &[C64]) -> Result<Self> {
        let d: usize = dims.iter().product();
        if diag.len() != d {
            return Err(Error::Shape(format!("diagonal needs {d} entries")));
        }
        Ok(Self::from_fn(dims, |r, c| if r == c { diag[r] } else { C64::new(0.0, 0.0) }))
    }

    /// `|ket><bra|`.
    pub fn outer(ket: &State, bra: &State) -> Result<Self> {
        if ket.layout().dims() != bra.layout().dims() {
            return Err(Error::Shape("outer product of differently shaped states".into()));
        }
        let k = ket.amplitudes();
        let b = bra.amplitudes();
        Ok(Self::from_fn(ket.layout().dims(), |r, c| k[r] * b[c].conj()))
    }

    /// `|s><s|`.
    pub fn projector_onto(s: &State) -> Self {
        let a = s.amplitudes();
        Self::from_fn(s.layout().dims(), |r, c| a[r] * a[c].conj())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn matrix(&self) -> &[C64] {
        &self.matrix
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.matrix[r * self.dim() + c]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dims.clone(), |r, c| self.get(c, r).conj())
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { dims: self.dims.clone(), matrix: self.matrix.iter().map(|x| x * z).collect() }
    }

    pub fn scale_re(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Matrix product `self * rhs`.
    pub fn compose(&self, rhs: &Operator) -> Result<Self> {
        let d = self.dim();
        if rhs.dim() != d {
            return Err(Error::Shape("product of operators of different dimension".into()));
        }
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.matrix[r * d + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    out[r * d + c] += a * rhs.matrix[k * d + c];
                }
            }
        }
        Ok(Self { dims: self.dims.clone(), matrix: out })
    }

    /// Matrix-vector product on raw amplitudes.
    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim();
        debug_assert_eq!(v.len(), d);
        (0..d)
            .map(|r| self.matrix[r * d..(r + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Kronecker product; `self` becomes the slower factor.
    pub fn kron(&self, rhs: &Operator) -> Self {
        let db = rhs.dim();
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&rhs.dims);
        Self::from_fn(dims, |r, c| self.get(r / db, c / db) * rhs.get(r % db, c % db))
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Operator) -> f64 {
        self.matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn approx_eq(&self, other: &Operator, tol: f64) -> bool {
        self.dim() == other.dim() && self.max_abs_diff(other) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.adjoint().compose(self).expect("same dimension");
        p.approx_eq(&Operator::identity(self.dims.clone()), tol)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.approx_eq(&self.adjoint(), tol)
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        let sq = self.compose(self).expect("same dimension");
        self.is_hermitian(tol) && sq.approx_eq(self, tol)
    }

    pub fn ensure_unitary(&self) -> Result<()> {
        if self.is_unitary(TOL_STRUCTURE) { Ok(()) } else { Err(Error::NotUnitary) }
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        if self.is_hermitian(TOL_STRUCTURE) { Ok(()) } else { Err(Error::NotHermitian) }
    }

    pub fn ensure_projector(&self) -> Result<()> {
        if self.is_projector(TOL_STRUCTURE) { Ok(()) } else { Err(Error::NotProjector) }
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.matrix)
    }

    /// Spectral norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        let g = self.adjoint().compose(self).expect("same dimension");
        let eig = nalgebra::SymmetricEigen::new(g.to_nalgebra());
        eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x)).max(0.0).sqrt()
    }

    /// Eigenspaces of a hermitian operator, ordered by descending eigenvalue.
    ///
    /// Eigenvalues closer than `1e-8` are merged into one eigenspace;
    /// eigenvalues within `1e-9` of an integer are snapped to it, so Pauli
    /// spectra come out as exactly `+1` and `-1`.
    pub fn eigenspaces(&self) -> Result<Vec<Eigenspace>> {
        self.ensure_hermitian()?;
        let d = self.dim();
        // symmetrize so nalgebra sees an exactly hermitian matrix
        let h = &self.scale_re(0.5) + &self.adjoint().scale_re(0.5);
        let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut spaces: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
        for i in order {
            let v = eig.eigenvalues[i];
            match spaces.last_mut() {
                Some((vals, idx)) if (vals[vals.len() - 1] - v).abs() < 1e-8 => {
                    vals.push(v);
                    idx.push(i);
                }
                _ => spaces.push((vec![v], vec![i])),
            }
        }
        Ok(spaces
            .into_iter()
            .map(|(vals, idx)| {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let value = snap(mean);
                let projector = Operator::from_fn(self.dims.clone(), |r, c| {
                    idx.iter()
                        .map(|&k| eig.eigenvectors[(r, k)] * eig.eigenvectors[(c, k)].conj())
                        .sum()
                });
                Eigenspace { value, projector }
            })
            .collect())
    }

    /// True when all eigenvalues are integers.
    pub fn has_integer_spectrum(&self) -> Result<bool> {
        Ok(self.eigenspaces()?.iter().all(|e| e.value.fract() == 0.0))
    }
}

/// Snap to the nearest integer when within `1e-9`.
pub(crate) fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        if r == 0.0 { 0.0 } else { r }
    } else {
        x
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "adding operators of different dimension");
        Operator {
            dims: self.dims.clone(),
            matrix: self.matrix.iter().zip(&rhs.matrix).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "subtracting operators of different dimension");
        Operator {
            dims: self.dims.clone(),
            matrix: self.matrix.iter().zip(&rhs.matrix).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.compose(rhs).expect("multiplying operators of different dimension")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::constructions::{pauli_x, pauli_y, pauli_z, spin_observable};

    #[test]
    fn row_major_layout() {
        let m = Operator::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)],
            vec![C64::new(3.0, 0.0), C64::new(4.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(m.get(0, 1), C64::new(2.0, 0.0));
        assert_eq!(m.matrix()[2], C64::new(3.0, 0.0));
    }

    #[test]
    fn kron_order() {
        let zi = pauli_z().kron(&Operator::identity(vec![2]));
        let expect = [1.0, 1.0, -1.0, -1.0];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(zi.get(i, i), C64::new(*e, 0.0));
        }
        assert_eq!(zi.dims(), &[2, 2]);
    }

    #[test]
    fn structural_flags() {
        assert!(pauli_x().is_unitary(1e-12));
        assert!(pauli_y().is_hermitian(1e-12));
        let p = Operator::projector_onto(&State::basis(crate::qcore::Layout::single("q", 2).unwrap(), 0).unwrap());
        assert!(p.is_projector(1e-12));
        assert!(!pauli_z().is_projector(1e-12));
        let nonu = Operator::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0)],
        ])
        .unwrap();
        assert!(!nonu.is_unitary(1e-10));
        assert!((nonu.operator_norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eigenspaces_descending_and_snapped() {
        let s = spin_observable(0.3, 1.1);
        let e = s.eigenspaces().unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].value, 1.0);
        assert_eq!(e[1].value, -1.0);
        let sum = &e[0].projector + &e[1].projector;
        assert!(sum.approx_eq(&Operator::identity(vec![2]), 1e-12));

        let degenerate = Operator::identity(vec![2, 2]);
        let e = degenerate.eigenspaces().unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].value, 1.0);
    }

    #[test]
    fn eigenspaces_rejects_non_hermitian() {
        let m = Operator::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(m.eigenspaces(), Err(Error::NotHermitian)));
    }
}
