//! Benchmark inputs shared by the criterion targets.

use moments_core::history::{HistoryChain, LinkKind};
use moments_core::protocol::{MeasurementPlan, ProtocolInstance};
use moments_core::qcore::{pauli, Axis, Layout};
use moments_core::random::{self, seeded};

/// Random unitary chain with `links` links on a `dim`-level system.
pub fn random_chain(dim: usize, links: usize, seed: u64) -> HistoryChain {
    let mut rng = seeded(seed);
    let layout = Layout::single("s", dim).expect("layout");
    let pre = random::state(layout.clone(), &mut rng);
    let post = random::state(layout, &mut rng);
    let kinds = (0..links).map(|_| LinkKind::Unitary(random::unitary(vec![dim], &mut rng))).collect();
    HistoryChain::from_kinds(pre, kinds, Some(post)).expect("valid chain")
}

/// Protocol with `n` spins, a sigma_z reading on every spin and a sigma_x
/// difference between the first and last.
pub fn protocol_case(n: usize) -> (ProtocolInstance, MeasurementPlan) {
    let psi = random::state(Layout::single("s", 2).expect("layout"), &mut seeded(n as u64));
    let plan = MeasurementPlan {
        single_time: (0..n).map(|k| (k, pauli(Axis::Z))).collect(),
        difference_pairs: vec![(0, n - 1, pauli(Axis::X))],
    };
    (ProtocolInstance::new(n, psi).expect("instance"), plan)
}
