//! Outcome distributions.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// A measured value (eigenvalue or pointer reading) with a total order.
#[derive(Copy, Clone, Debug)]
pub struct Value(pub f64);

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}
impl Eq for Value {}
impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.fract() == 0.0 && self.0.abs() < 1e15 {
            write!(f, "{}", self.0 as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// How a distribution was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Sampled { samples: usize, seed: u64 },
}

/// Joint distribution over labeled outcome tuples.
///
/// `success_probability` is the total weight of all conditioning events
/// (post-selections, selected collapses); `1.0` when nothing is conditioned.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeStats {
    pub labels: Vec<String>,
    pub outcomes: BTreeMap<Vec<Value>, f64>,
    pub mode: Mode,
    pub success_probability: f64,
    /// Raw counts; present in sampled mode.
    pub counts: Option<BTreeMap<Vec<Value>, usize>>,
}

impl OutcomeStats {
    pub fn exact(labels: Vec<String>, outcomes: BTreeMap<Vec<Value>, f64>, success: f64) -> Self {
        Self { labels, outcomes, mode: Mode::Exact, success_probability: success, counts: None }
    }

    /// Probability of an outcome tuple (zero when absent).
    pub fn probability(&self, values: &[f64]) -> f64 {
        let key: Vec<Value> = values.iter().map(|&v| Value(v)).collect();
        self.outcomes.get(&key).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.outcomes.values().sum()
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Invalid(format!("no outcome label `{label}`")))
    }

    /// Marginal distribution over a subset of labels, in the given order.
    pub fn marginal(&self, labels: &[&str]) -> Result<OutcomeStats> {
        let idx: Vec<usize> = labels.iter().map(|l| self.label_index(l)).collect::<Result<_>>()?;
        let mut out: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
        for (k, p) in &self.outcomes {
            let key = idx.iter().map(|&i| k[i]).collect();
            *out.entry(key).or_insert(0.0) += p;
        }
        let counts = self.counts.as_ref().map(|c| {
            let mut m: BTreeMap<Vec<Value>, usize> = BTreeMap::new();
            for (k, n) in c {
                *m.entry(idx.iter().map(|&i| k[i]).collect()).or_insert(0) += n;
            }
            m
        });
        Ok(OutcomeStats {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            outcomes: out,
            mode: self.mode.clone(),
            success_probability: self.success_probability,
            counts,
        })
    }

    /// Distribution of a single label as `(value, probability)` pairs.
    pub fn single(&self, label: &str) -> Result<Vec<(f64, f64)>> {
        let m = self.marginal(&[label])?;
        Ok(m.outcomes.iter().map(|(k, p)| (k[0].0, *p)).collect())
    }

    /// Total-variation distance; labels must match.
    pub fn total_variation(&self, other: &OutcomeStats) -> Result<f64> {
        if self.labels != other.labels {
            return Err(Error::Invalid(format!(
                "label mismatch: {:?} vs {:?}",
                self.labels, other.labels
            )));
        }
        let mut keys: Vec<&Vec<Value>> = self.outcomes.keys().collect();
        keys.extend(other.outcomes.keys());
        keys.sort();
        keys.dedup();
        Ok(0.5
            * keys
                .into_iter()
                .map(|k| {
                    (self.outcomes.get(k).unwrap_or(&0.0) - other.outcomes.get(k).unwrap_or(&0.0))
                        .abs()
                })
                .sum::<f64>())
    }

    /// Mean and variance of a single-label distribution.
    pub fn mean_variance(&self, label: &str) -> Result<(f64, f64)> {
        let d = self.single(label)?;
        let mean: f64 = d.iter().map(|(v, p)| v * p).sum();
        let var: f64 = d.iter().map(|(v, p)| (v - mean) * (v - mean) * p).sum();
        Ok((mean, var))
    }
}
