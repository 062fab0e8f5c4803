//! Flat step list executed on one global state vector.
//!
//! Exact evaluation enumerates every measurement branch and weighs it by the
//! squared norm of the branch state (all conditioning maps applied), then
//! normalizes over branches. Sampling runs forward, drawing measurement
//! outcomes by the Born rule and accepting each conditioning map with
//! probability `||K s||^2 / ||s||^2`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::qcore::{BoundOp, Eigenspace, Operator, State};
use crate::random;
use crate::stats::{Mode, OutcomeStats, Value};

/// Branches with squared norm below this are dropped during enumeration.
pub const PRUNE_WEIGHT: f64 = 1e-26;

/// Total conditioning weight at or below this counts as zero.
pub const IMPOSSIBLE_WEIGHT: f64 = 1e-20;

#[derive(Clone, Debug)]
pub enum Step {
    /// Linear map on the listed registers. Non-unitary maps condition the run.
    Apply { registers: Vec<String>, op: Operator, unitary: bool },
    /// Projective measurement; one branch per eigenspace.
    Measure { label: String, registers: Vec<String>, spectrum: Vec<Eigenspace> },
}

impl Step {
    pub fn apply(registers: Vec<String>, op: Operator) -> Self {
        let unitary = op.is_unitary(crate::qcore::TOL_STRUCTURE);
        Step::Apply { registers, op, unitary }
    }

    pub fn measure(label: impl Into<String>, registers: Vec<String>, observable: &Operator) -> Result<Self> {
        Ok(Step::Measure { label: label.into(), registers, spectrum: observable.eigenspaces()? })
    }
}

/// One enumerated outcome sequence with its unnormalized final state.
#[derive(Clone, Debug)]
pub struct Branch {
    pub values: Vec<f64>,
    pub state: State,
}

impl Branch {
    pub fn weight(&self) -> f64 {
        self.state.norm_sqr()
    }
}

#[derive(Clone, Debug)]
pub struct Program {
    initial: State,
    steps: Vec<Step>,
    /// Per step: the applied map, or one projector per eigenspace.
    bound: Vec<Vec<BoundOp>>,
    /// Per measurement step: positions where some projector is nonzero.
    support: Vec<Vec<(usize, usize)>>,
}

fn names(regs: &[String]) -> Vec<&str> {
    regs.iter().map(String::as_str).collect()
}

impl Program {
    pub fn new(initial: State, steps: Vec<Step>) -> Result<Self> {
        let layout = initial.layout();
        let bound = steps
            .iter()
            .map(|step| match step {
                Step::Apply { registers, op, .. } => Ok(vec![BoundOp::new(layout, &names(registers), op)?]),
                Step::Measure { registers, spectrum, .. } => spectrum
                    .iter()
                    .map(|e| BoundOp::new(layout, &names(registers), &e.projector))
                    .collect(),
            })
            .collect::<Result<_>>()?;
        let support = steps
            .iter()
            .map(|step| match step {
                Step::Apply { .. } => Vec::new(),
                Step::Measure { spectrum, .. } => {
                    let d = spectrum.first().map_or(0, |e| e.projector.dim());
                    (0..d * d)
                        .filter(|&k| spectrum.iter().any(|e| e.projector.matrix()[k] != C64::new(0.0, 0.0)))
                        .map(|k| (k / d, k % d))
                        .collect()
                }
            })
            .collect();
        Ok(Self { initial, steps, bound, support })
    }

    pub fn initial(&self) -> &State {
        &self.initial
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn labels(&self) -> Vec<String> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Measure { label, .. } => Some(label.clone()),
                _ => None,
            })
            .collect()
    }

    /// Every outcome sequence with nonnegligible weight.
    pub fn branches(&self) -> Result<Vec<Branch>> {
        let mut frontier = vec![Branch { values: Vec::new(), state: self.initial.clone() }];
        for (step, bound) in self.steps.iter().zip(&self.bound) {
            match step {
                Step::Apply { .. } => {
                    let mut next = Vec::with_capacity(frontier.len());
                    for b in frontier {
                        let state = b.state.apply_bound(&bound[0]);
                        if state.norm_sqr() > PRUNE_WEIGHT {
                            next.push(Branch { values: b.values, state });
                        }
                    }
                    frontier = next;
                }
                Step::Measure { spectrum, .. } => {
                    let mut next = Vec::with_capacity(frontier.len() * spectrum.len());
                    for b in &frontier {
                        for (e, p) in spectrum.iter().zip(bound) {
                            let state = b.state.apply_bound(p);
                            if state.norm_sqr() > PRUNE_WEIGHT {
                                let mut values = b.values.clone();
                                values.push(e.value);
                                next.push(Branch { values, state });
                            }
                        }
                    }
                    frontier = next;
                }
            }
        }
        Ok(frontier)
    }

    /// Total weight of all branches; the joint success probability of every
    /// conditioning map in the program.
    pub fn success_weight(&self) -> Result<f64> {
        Ok(self.branches()?.iter().map(Branch::weight).sum())
    }

    /// Exact distribution, normalized over outcome sequences.
    pub fn distribution(&self) -> Result<OutcomeStats> {
        let branches = self.branches()?;
        let z: f64 = branches.iter().map(Branch::weight).sum();
        if z <= IMPOSSIBLE_WEIGHT {
            return Err(Error::ConditioningImpossible);
        }
        let mut outcomes: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
        for b in &branches {
            let key = b.values.iter().map(|&v| Value(v)).collect();
            *outcomes.entry(key).or_insert(0.0) += b.weight() / z;
        }
        Ok(OutcomeStats::exact(self.labels(), outcomes, z / self.initial.norm_sqr()))
    }

    /// Final state of a program without measurements, unnormalized.
    pub fn final_state(&self) -> Result<State> {
        if self.steps.iter().any(|s| matches!(s, Step::Measure { .. })) {
            return Err(Error::Invalid("program contains measurements".into()));
        }
        let mut state = self.initial.clone();
        for bound in &self.bound {
            state = state.apply_bound(&bound[0]);
        }
        Ok(state)
    }

    /// One forward run. `None` when a conditioning map rejects the run.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Option<Vec<f64>>> {
        let norm_sqr = |v: &[C64]| v.iter().map(C64::norm_sqr).sum::<f64>();
        let rescale = |v: &mut [C64], p: f64| v.iter_mut().for_each(|z| *z /= p.sqrt());
        let mut amps = self.initial.normalized().into_amplitudes();
        let mut values = Vec::new();
        for ((step, bound), support) in self.steps.iter().zip(&self.bound).zip(&self.support) {
            match step {
                Step::Apply { unitary, .. } => {
                    amps = bound[0].apply(&amps);
                    if !*unitary {
                        let p = norm_sqr(&amps);
                        let u: f64 = rng.random();
                        if p <= PRUNE_WEIGHT || u >= p {
                            return Ok(None);
                        }
                        rescale(&mut amps, p);
                    }
                }
                Step::Measure { spectrum, .. } => {
                    let g = bound[0].gram(&amps, support);
                    let probs = spectrum.iter().map(|e| {
                        let (m, d) = (e.projector.matrix(), e.projector.dim());
                        support.iter().zip(&g).map(|(&(i, j), gij)| m[i * d + j] * gij).sum::<C64>().re
                    });
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut chosen = None;
                    for (k, p) in probs.enumerate() {
                        if p <= PRUNE_WEIGHT {
                            continue;
                        }
                        acc += p;
                        chosen = Some(k);
                        if u < acc {
                            break;
                        }
                    }
                    // roundoff can leave u just above the accumulated total;
                    // the last possible outcome is kept then
                    let k = chosen.ok_or(Error::ConditioningImpossible)?;
                    let mut s = bound[k].apply(&amps);
                    let p = norm_sqr(&s);
                    values.push(spectrum[k].value);
                    rescale(&mut s, p);
                    amps = s;
                }
            }
        }
        Ok(Some(values))
    }

    /// `samples` accepted runs from a fixed seed. The reported success
    /// probability is the empirical acceptance rate.
    pub fn sample(&self, samples: usize, seed: u64) -> Result<OutcomeStats> {
        if self.success_weight()? <= IMPOSSIBLE_WEIGHT {
            return Err(Error::ConditioningImpossible);
        }
        let mut rng = random::seeded(seed);
        let mut counts: BTreeMap<Vec<Value>, usize> = BTreeMap::new();
        let mut accepted = 0usize;
        let mut attempts = 0usize;
        while accepted < samples {
            attempts += 1;
            if let Some(v) = self.draw(&mut rng)? {
                accepted += 1;
                *counts.entry(v.into_iter().map(Value).collect()).or_insert(0) += 1;
            }
        }
        let outcomes = counts.iter().map(|(k, &n)| (k.clone(), n as f64 / samples as f64)).collect();
        Ok(OutcomeStats {
            labels: self.labels(),
            outcomes,
            mode: Mode::Sampled { samples, seed },
            success_probability: if attempts == 0 { 1.0 } else { accepted as f64 / attempts as f64 },
            counts: Some(counts),
        })
    }

    /// A single accepted outcome sequence.
    pub fn sample_one(&self, seed: u64) -> Result<Vec<f64>> {
        if self.success_weight()? <= IMPOSSIBLE_WEIGHT {
            return Err(Error::ConditioningImpossible);
        }
        let mut rng = random::seeded(seed);
        loop {
            if let Some(v) = self.draw(&mut rng)? {
                return Ok(v);
            }
        }
    }
}
