use std::fmt;

use crate::error::{Error, Result};

/// Default cap on the total Hilbert-space dimension of a [`Layout`].
pub const DEFAULT_MAX_DIMENSION: usize = 1 << 20;

/// One named tensor factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

impl Register {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Self { name: name.into(), dim }
    }
}

/// Ordered list of named registers.
///
/// Register 0 is the slowest-varying tensor factor: the flat index of the
/// basis state `|d_0 d_1 ... d_{n-1}>` is `sum_j d_j * stride_j` with
/// `stride_{n-1} = 1` and `stride_j = stride_{j+1} * dim_{j+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Layout {
    registers: Vec<Register>,
}

impl Layout {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        Self::with_cap(registers, DEFAULT_MAX_DIMENSION)
    }

    pub fn with_cap(registers: Vec<Register>, cap: usize) -> Result<Self> {
        let mut dim: usize = 1;
        for (i, r) in registers.iter().enumerate() {
            if r.dim < 2 {
                return Err(Error::Shape(format!(
                    "register `{}` has dimension {} (< 2)",
                    r.name, r.dim
                )));
            }
            if registers[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::NameCollision(r.name.clone()));
            }
            dim = dim
                .checked_mul(r.dim)
                .filter(|d| *d <= cap)
                .ok_or(Error::DimensionCap {
                    dim: dim.saturating_mul(r.dim),
                    cap,
                })?;
        }
        Ok(Self { registers })
    }

    /// Single register layout.
    pub fn single(name: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new(vec![Register::new(name, dim)])
    }

    /// Layout of `n` qubits with the given names.
    pub fn qubits<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(names.iter().map(|n| Register::new(n.as_ref(), 2)).collect())
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.registers.iter().map(|r| r.name.as_str())
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        Ok(self.registers[self.position(name)?].dim)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.registers.len()];
        for j in (0..self.registers.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.registers[j + 1].dim;
        }
        strides
    }

    /// Concatenation; fails on name collisions or when the cap is exceeded.
    pub fn concat(&self, other: &Layout) -> Result<Layout> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        Layout::new(regs)
    }

    /// Same layout without the named registers (order preserved).
    pub(crate) fn without(&self, names: &[&str]) -> Layout {
        Layout {
            registers: self
                .registers
                .iter()
                .filter(|r| !names.contains(&r.name.as_str()))
                .cloned()
                .collect(),
        }
    }

    /// Same dimensions, new names.
    pub fn relabel<S: AsRef<str>>(&self, names: &[S]) -> Result<Layout> {
        if names.len() != self.registers.len() {
            return Err(Error::Shape(format!(
                "relabel expects {} names, got {}",
                self.registers.len(),
                names.len()
            )));
        }
        Layout::new(
            self.registers
                .iter()
                .zip(names)
                .map(|(r, n)| Register::new(n.as_ref(), r.dim))
                .collect(),
        )
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .registers
            .iter()
            .map(|r| format!("{}:{}", r.name, r.dim))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Offsets of every basis state of the `targets` sub-layout inside the full
/// layout, plus the list of base indices (all target digits zero).
pub(crate) struct Embedding {
    pub offsets: Vec<usize>,
    pub bases: Vec<usize>,
}

impl Embedding {
    pub fn new(layout: &Layout, targets: &[&str]) -> Result<Self> {
        let strides = layout.strides();
        let mut positions = Vec::with_capacity(targets.len());
        for t in targets {
            let p = layout.position(t)?;
            if positions.contains(&p) {
                return Err(Error::NameCollision(t.to_string()));
            }
            positions.push(p);
        }
        let sub_dims: Vec<usize> = positions.iter().map(|&p| layout.registers[p].dim).collect();
        let sub_total: usize = sub_dims.iter().product();

        let mut offsets = Vec::with_capacity(sub_total);
        for s in 0..sub_total {
            let mut rem = s;
            let mut off = 0;
            for j in (0..positions.len()).rev() {
                let d = rem % sub_dims[j];
                rem /= sub_dims[j];
                off += d * strides[positions[j]];
            }
            offsets.push(off);
        }

        let rest: Vec<usize> = (0..layout.len()).filter(|p| !positions.contains(p)).collect();
        let rest_total: usize = rest.iter().map(|&p| layout.registers[p].dim).product();
        let mut bases = Vec::with_capacity(rest_total);
        for r in 0..rest_total {
            let mut rem = r;
            let mut base = 0;
            for &p in rest.iter().rev() {
                let d = rem % layout.registers[p].dim;
                rem /= layout.registers[p].dim;
                base += d * strides[p];
            }
            bases.push(base);
        }
        Ok(Self { offsets, bases })
    }
}
