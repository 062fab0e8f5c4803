//! Time evolution as a chain of moments.
//!
//! Every moment has a ket space at its past boundary and a bra space at its
//! future boundary. Consecutive moments are connected by a [`Link`]: identity
//! (complete correlation), unitary (skewed complete correlation), collapse
//! (product, no correlation) or partial (non-maximal correlation).
//!
//! Probabilities follow the ABL rule: each outcome sequence is weighted by the
//! squared norm of the branch with every link, projector and post-selection
//! applied, then normalized over all sequences.

mod chain;
mod link;
pub mod program;

use num_complex::Complex64 as C64;

pub use chain::{Action, Event, Experiment, HistoryChain, MultiSystemChain, Strand};
pub use link::{decompose_collapse, link_matrix, CollapseDecomposition, Link, LinkKind, TimeIndex};
pub use program::{Branch, Program, Step};

use crate::error::{Error, Result};
use crate::qcore::Operator;
use crate::stats::OutcomeStats;

/// Register name used when a single chain is embedded in an experiment.
fn chain_registers(chain: &HistoryChain) -> Vec<String> {
    chain.system().names().map(str::to_string).collect()
}

/// `<post| L_n ... L_1 |pre>`.
pub fn contract(chain: &HistoryChain) -> Result<C64> {
    let post = chain.post().ok_or(Error::MissingPost)?;
    let v = propagate(chain)?;
    post.inner(&v)
}

/// `L_n ... L_1 |pre>`.
fn propagate(chain: &HistoryChain) -> Result<crate::qcore::State> {
    chain
        .link_matrices()?
        .iter()
        .try_fold(chain.pre().clone(), |v, m| v.apply_full(m))
}

/// Weight of the history.
///
/// With a post-selected boundary this is `|contract|^2`. Without one the
/// final boundary is summed out, giving the sequential Kraus weight
/// `||L_n ... L_1 |pre>||^2`.
pub fn history_probability(chain: &HistoryChain) -> Result<f64> {
    match chain.post() {
        Some(_) => Ok(contract(chain)?.norm_sqr()),
        None => Ok(propagate(chain)?.norm_sqr()),
    }
}

fn slot_label(labels: &mut Vec<String>, moment: TimeIndex) -> String {
    let base = format!("t{moment}");
    let mut label = base.clone();
    let mut n = 1;
    while labels.contains(&label) {
        n += 1;
        label = format!("{base}.{n}");
    }
    labels.push(label.clone());
    label
}

/// The chain as an experiment measuring `slots` at their moments.
/// Slot labels are `t<k>` (with a `.2`, `.3` ... suffix for repeats).
pub fn slot_experiment(chain: &HistoryChain, slots: &[(TimeIndex, Operator)]) -> Result<Experiment> {
    let regs = chain_registers(chain);
    let mut ex = Experiment::new(MultiSystemChain::from_chain("system", chain)?);
    let mut labels = Vec::new();
    for (moment, obs) in slots {
        obs.ensure_hermitian()?;
        let label = slot_label(&mut labels, *moment);
        ex = ex.event(*moment, Action::Measure { label, registers: regs.clone(), observable: obs.clone() });
    }
    Ok(ex)
}

/// Exact joint distribution of eigenvalue outcomes at the given moments,
/// conditioned on the pre-selected state, every collapse or partial link, and
/// the post-selected state when present.
pub fn conditional_outcome_distribution(
    chain: &HistoryChain,
    slots: &[(TimeIndex, Operator)],
) -> Result<OutcomeStats> {
    slot_experiment(chain, slots)?.compile()?.distribution()
}

/// One outcome sequence drawn by forward sampling with rejection on every
/// conditioning event; deterministic for a fixed seed.
pub fn sample_history(chain: &HistoryChain, slots: &[(TimeIndex, Operator)], seed: u64) -> Result<Vec<f64>> {
    slot_experiment(chain, slots)?.compile()?.sample_one(seed)
}

/// Sampled distribution of `samples` accepted sequences.
pub fn sample_distribution(
    chain: &HistoryChain,
    slots: &[(TimeIndex, Operator)],
    samples: usize,
    seed: u64,
) -> Result<OutcomeStats> {
    slot_experiment(chain, slots)?.compile()?.sample(samples, seed)
}
