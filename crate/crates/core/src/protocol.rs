//! N spins standing in for one spin at N moments.
//!
//! Spins `S0 .. S{N-1}` and ancillas `A1 .. A{N-1}` start in
//! `|psi>_{S0} (x) Phi+_{A1 S1} (x) ... (x) Phi+_{A{N-1} S{N-1}}`. All
//! measurements happen at one instant `tau`; immediately afterwards every pair
//! `(S{k-1}, A{k})` is post-selected in `Phi+`. Conditioned on success, the
//! statistics of measurements on `S_k` equal those of measurements on a single
//! spin at time `t_k` under zero Hamiltonian.

use rand::Rng;

use crate::error::{Error, Result};
use crate::history::program::IMPOSSIBLE_WEIGHT;
use crate::history::{Action, Experiment, HistoryChain, MultiSystemChain, Strand, TimeIndex};
use crate::meter::DifferenceMeter;
use crate::qcore::{bell_basis_on, spin_observable, tensor_states, Layout, Operator, State, DEFAULT_MAX_DIMENSION};
use crate::random;
use crate::stats::OutcomeStats;

pub fn spin_name(k: usize) -> String {
    format!("S{k}")
}

pub fn ancilla_name(k: usize) -> String {
    format!("A{k}")
}

#[derive(Clone, Debug)]
pub struct ProtocolInstance {
    n_moments: usize,
    psi: State,
    max_dimension: usize,
}

impl ProtocolInstance {
    pub fn new(n_moments: usize, psi: State) -> Result<Self> {
        if n_moments < 2 {
            return Err(Error::Invalid(format!("protocol needs at least 2 moments, got {n_moments}")));
        }
        if psi.layout().total_dim() != 2 {
            return Err(Error::Shape("protocol preparation must be a single qubit".into()));
        }
        psi.ensure_normalized()?;
        let psi = psi.relabel(&[spin_name(0)])?;
        Ok(Self { n_moments, psi, max_dimension: DEFAULT_MAX_DIMENSION })
    }

    pub fn with_max_dimension(mut self, cap: usize) -> Self {
        self.max_dimension = cap;
        self
    }

    pub fn n_moments(&self) -> usize {
        self.n_moments
    }

    /// Preparation on register `S0`.
    pub fn psi(&self) -> &State {
        &self.psi
    }

    pub fn spins(&self) -> Vec<String> {
        (0..self.n_moments).map(spin_name).collect()
    }

    pub fn ancillas(&self) -> Vec<String> {
        (1..self.n_moments).map(ancilla_name).collect()
    }

    /// Register order: `S0, A1, S1, ..., A{N-1}, S{N-1}`.
    pub fn registers(&self) -> Vec<String> {
        let mut regs = vec![spin_name(0)];
        for k in 1..self.n_moments {
            regs.push(ancilla_name(k));
            regs.push(spin_name(k));
        }
        regs
    }

    fn preparations(&self) -> Result<Vec<State>> {
        let mut preps = vec![self.psi.clone()];
        for k in 1..self.n_moments {
            let [phi_plus, ..] = bell_basis_on(&ancilla_name(k), &spin_name(k))?;
            preps.push(phi_plus);
        }
        Ok(preps)
    }

    /// `Phi+` on each `(S{k-1}, A{k})`.
    fn selections(&self) -> Result<Vec<State>> {
        (1..self.n_moments)
            .map(|k| Ok(bell_basis_on(&spin_name(k - 1), &ancilla_name(k))?[0].clone()))
            .collect()
    }

    fn chain(&self) -> Result<MultiSystemChain> {
        let strands = self
            .registers()
            .into_iter()
            .map(|r| Ok((r.clone(), Strand::new(Layout::single(r, 2)?, 0, Vec::new(), None)?)))
            .collect::<Result<Vec<_>>>()?;
        MultiSystemChain::new(strands, self.preparations()?)
    }
}

/// Measurements at `tau`: single-time observables on one spin, and
/// differences `A(t_l) - A(t_k)` read from a shared pointer.
#[derive(Clone, Debug, Default)]
pub struct MeasurementPlan {
    pub single_time: Vec<(usize, Operator)>,
    pub difference_pairs: Vec<(usize, usize, Operator)>,
}

impl MeasurementPlan {
    pub fn validate(&self, n: usize) -> Result<()> {
        let check_op = |op: &Operator| -> Result<()> {
            if op.dim() != 2 {
                return Err(Error::InvalidPlan(format!("observable of dimension {} on a qubit", op.dim())));
            }
            op.ensure_hermitian()
        };
        for (k, op) in &self.single_time {
            if *k >= n {
                return Err(Error::InvalidPlan(format!("spin {k} out of range 0..{n}")));
            }
            check_op(op)?;
        }
        for (k, l, op) in &self.difference_pairs {
            if *k >= n || *l >= n {
                return Err(Error::InvalidPlan(format!("pair ({k}, {l}) out of range 0..{n}")));
            }
            if k == l {
                return Err(Error::InvalidPlan(format!("pair ({k}, {l}) repeats a spin")));
            }
            check_op(op)?;
        }
        Ok(())
    }

    /// Outcome labels in plan order: `m<i>` for single-time entries, then
    /// `d<j>` for difference pairs.
    pub fn labels(&self) -> Vec<String> {
        (0..self.single_time.len())
            .map(|i| format!("m{i}"))
            .chain((0..self.difference_pairs.len()).map(|j| format!("d{j}")))
            .collect()
    }

    /// Random spin observables on random spins: up to three single-time
    /// entries and up to two difference pairs, at least one entry overall.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let observable = |rng: &mut R| {
            let (t, p) = random::direction(rng);
            spin_observable(t, p)
        };
        loop {
            let singles = rng.random_range(0..=3usize);
            let pairs = rng.random_range(0..=2usize);
            if singles + pairs == 0 {
                continue;
            }
            let single_time = (0..singles).map(|_| (rng.random_range(0..n), observable(rng))).collect();
            let difference_pairs = (0..pairs)
                .map(|_| {
                    let k = rng.random_range(0..n);
                    let l = (k + rng.random_range(1..n)) % n;
                    (k, l, observable(rng))
                })
                .collect();
            return Self { single_time, difference_pairs };
        }
    }
}

/// Schedules the plan: for each spin in ascending order, its single-time
/// measurements and then its pointer couplings, each in plan order.
/// `locate` gives the registers and moment standing for spin `k`.
fn schedule(
    mut ex: Experiment,
    plan: &MeasurementPlan,
    n: usize,
    locate: impl Fn(usize) -> (Vec<String>, TimeIndex),
) -> Result<Experiment> {
    let labels = plan.labels();
    let meters: Vec<DifferenceMeter> = plan
        .difference_pairs
        .iter()
        .enumerate()
        .map(|(j, (k, l, op))| DifferenceMeter {
            label: labels[plan.single_time.len() + j].clone(),
            first: locate(*k),
            second: locate(*l),
            observable: op.clone(),
            dim: None,
        })
        .collect();
    let pointers = meters.iter().map(DifferenceMeter::pointer).collect::<Result<Vec<_>>>()?;
    let couplings =
        meters.iter().zip(&pointers).map(|(m, p)| m.couplings(p)).collect::<Result<Vec<_>>>()?;
    for p in &pointers {
        ex = ex.auxiliary(p.ready_state());
    }
    for k in 0..n {
        let (registers, moment) = locate(k);
        for (i, (spin, op)) in plan.single_time.iter().enumerate() {
            if *spin == k {
                let action = Action::Measure { label: labels[i].clone(), registers: registers.clone(), observable: op.clone() };
                ex = ex.event(moment, action);
            }
        }
        for ((first, second, _), [(m1, a1), (m2, a2)]) in plan.difference_pairs.iter().zip(&couplings) {
            if *first == k {
                ex = ex.event(*m1, a1.clone());
            }
            if *second == k {
                ex = ex.event(*m2, a2.clone());
            }
        }
    }
    for (m, p) in meters.iter().zip(&pointers) {
        ex = m.readout(ex, p);
    }
    Ok(ex)
}

fn in_plan_order(stats: OutcomeStats, plan: &MeasurementPlan) -> Result<OutcomeStats> {
    let labels = plan.labels();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    stats.marginal(&refs)
}

/// `|psi>_{S0} (x) Phi+_{A1 S1} (x) ...` on the register order of
/// [`ProtocolInstance::registers`].
pub fn build_initial_state(instance: &ProtocolInstance) -> Result<State> {
    let preps = instance.preparations()?;
    let regs: Vec<_> = preps.iter().flat_map(|s| s.layout().registers().iter().cloned()).collect();
    Layout::with_cap(regs, instance.max_dimension)?;
    tensor_states(&preps)?.permute(&instance.registers().iter().map(String::as_str).collect::<Vec<_>>())
}

/// Projects every `(S{k-1}, A{k})` onto `Phi+`. Returns the normalized state
/// left on the remaining registers (`S{N-1}` plus anything that is not a
/// protocol register) and the joint success probability.
pub fn post_select_bells(state: &State, instance: &ProtocolInstance) -> Result<(State, f64)> {
    let bra = tensor_states(&instance.selections()?)?;
    let rest = state.partial_inner(&bra)?;
    let p = rest.norm_sqr() / state.norm_sqr();
    if p <= IMPOSSIBLE_WEIGHT {
        return Err(Error::ConditioningImpossible);
    }
    Ok((rest.normalized(), p))
}

/// The protocol as an experiment: plan at `tau`, then Bell post-selection,
/// then pointer readouts.
pub fn protocol_experiment(instance: &ProtocolInstance, plan: &MeasurementPlan) -> Result<Experiment> {
    plan.validate(instance.n_moments)?;
    let mut ex = Experiment::new(instance.chain()?).max_dimension(instance.max_dimension);
    ex = schedule(ex, plan, instance.n_moments, |k| (vec![spin_name(k)], 0))?;
    for s in instance.selections()? {
        ex = ex.select(s);
    }
    Ok(ex)
}

/// Exact joint distribution of the plan conditioned on every `Phi+`.
/// `success_probability` is the joint probability of the post-selection.
pub fn protocol_statistics(instance: &ProtocolInstance, plan: &MeasurementPlan) -> Result<OutcomeStats> {
    in_plan_order(protocol_experiment(instance, plan)?.compile()?.distribution()?, plan)
}

/// Monte Carlo version of [`protocol_statistics`].
pub fn protocol_statistics_sampled(
    instance: &ProtocolInstance,
    plan: &MeasurementPlan,
    samples: usize,
    seed: u64,
) -> Result<OutcomeStats> {
    in_plan_order(protocol_experiment(instance, plan)?.compile()?.sample(samples, seed)?, plan)
}

/// The same plan on one spin evolving trivially over moments `0..N`, spin
/// index `k` read as moment `k`.
pub fn single_spin_oracle(psi: &State, n: usize, plan: &MeasurementPlan) -> Result<OutcomeStats> {
    plan.validate(n)?;
    if n < 1 {
        return Err(Error::InvalidPlan("no moments".into()));
    }
    let chain = HistoryChain::trivial(psi.clone(), n - 1, None)?;
    let regs: Vec<String> = chain.system().names().map(str::to_string).collect();
    let ex = Experiment::new(MultiSystemChain::from_chain("spin", &chain)?);
    let ex = schedule(ex, plan, n, |k| (regs.clone(), k))?;
    in_plan_order(ex.compile()?.distribution()?, plan)
}

/// The plan evaluated on an arbitrary state of spins `S0 .. S{N-1}` with no
/// post-selection.
pub fn state_baseline(state: &State, plan: &MeasurementPlan) -> Result<OutcomeStats> {
    let n = state.layout().len();
    plan.validate(n)?;
    let expected: Vec<String> = (0..n).map(spin_name).collect();
    if !state.layout().names().eq(expected.iter().map(String::as_str)) || state.layout().dims() != vec![2; n] {
        return Err(Error::Shape(format!("baseline state must be qubits {expected:?}")));
    }
    let strands = expected
        .iter()
        .map(|r| Ok((r.clone(), Strand::new(Layout::single(r.clone(), 2)?, 0, Vec::new(), None)?)))
        .collect::<Result<Vec<_>>>()?;
    let ex = Experiment::new(MultiSystemChain::new(strands, vec![state.clone()])?);
    let ex = schedule(ex, plan, n, |k| (vec![spin_name(k)], 0))?;
    in_plan_order(ex.compile()?.distribution()?, plan)
}

/// The naive product state `|psi>^(x)N`, the negative control.
pub fn product_state_baseline(instance: &ProtocolInstance, plan: &MeasurementPlan) -> Result<OutcomeStats> {
    let copies = (0..instance.n_moments)
        .map(|k| instance.psi.relabel(&[spin_name(k)]))
        .collect::<Result<Vec<_>>>()?;
    state_baseline(&tensor_states(&copies)?, plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::*;
    use proptest::prelude::*;

    fn up_z() -> State {
        spin_up(Axis::Z)
    }

    fn instance(n: usize, psi: State) -> ProtocolInstance {
        ProtocolInstance::new(n, psi).unwrap()
    }

    #[test]
    fn instance_validation() {
        assert!(ProtocolInstance::new(1, up_z()).is_err());
        assert!(ProtocolInstance::new(2, bell_basis()[0].clone()).is_err());
        let inst = instance(3, up_z());
        assert_eq!(inst.registers(), ["S0", "A1", "S1", "A2", "S2"]);
        assert_eq!(inst.ancillas(), ["A1", "A2"]);
        let plan = MeasurementPlan { single_time: vec![(3, pauli_z())], ..Default::default() };
        assert!(matches!(protocol_statistics(&inst, &plan), Err(Error::InvalidPlan(_))));
        let plan = MeasurementPlan { difference_pairs: vec![(1, 1, pauli_z())], ..Default::default() };
        assert!(matches!(protocol_statistics(&inst, &plan), Err(Error::InvalidPlan(_))));
    }

    #[test]
    fn initial_state_shape_and_marginals() {
        let s = build_initial_state(&instance(2, up_z())).unwrap();
        assert_eq!(s.layout().len(), 3);
        assert!((s.norm() - 1.0).abs() < 1e-15);
        // |0> (x) (|00> + |11>)/sqrt 2 in order S0, A1, S1
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - h).abs() < 1e-15);
        assert!((s.amplitudes()[3].re - h).abs() < 1e-15);

        let mut rng = random::seeded(8);
        for n in 2..=4 {
            let psi = random::state(Layout::single("q", 2).unwrap(), &mut rng);
            let inst = instance(n, psi.clone());
            let s = build_initial_state(&inst).unwrap();
            assert_eq!(s.layout().len(), 2 * n - 1);
            let rho0 = s.reduced_density(&["S0"]).unwrap();
            assert!(rho0.approx_eq(&Operator::projector_onto(&psi), 1e-12));
            for k in 1..n {
                let rho = s.reduced_density(&[spin_name(k).as_str()]).unwrap();
                assert!(rho.approx_eq(&Operator::identity(vec![2]).scale_re(0.5), 1e-12));
            }
        }
        let capped = instance(4, up_z()).with_max_dimension(64);
        assert!(matches!(build_initial_state(&capped), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn bell_post_selection_success_and_teleportation() {
        let mut rng = random::seeded(3);
        for n in 2..=5 {
            let psi = random::state(Layout::single("q", 2).unwrap(), &mut rng);
            let inst = instance(n, psi.clone());
            let (rest, p) = post_select_bells(&build_initial_state(&inst).unwrap(), &inst).unwrap();
            assert!((p - 0.25f64.powi(n as i32 - 1)).abs() < 1e-12);
            let last = spin_name(n - 1);
            assert_eq!(rest.layout().names().collect::<Vec<_>>(), [last.as_str()]);
            assert!(rest.eq_up_to_phase(&psi.relabel(&[last]).unwrap(), 1e-12));
        }
        let inst = instance(2, up_z());
        let (rest, _) = post_select_bells(&build_initial_state(&inst).unwrap(), &inst).unwrap();
        assert!(rest.approx_eq(&up_z().relabel(&["S1"]).unwrap(), 1e-12));
    }

    #[test]
    fn post_selection_is_impossible_on_orthogonal_input() {
        let inst = instance(2, up_z());
        // S0 and A1 in |01>: orthogonal to Phi+
        let s = State::basis(Layout::qubits(&["S0", "A1", "S1"]).unwrap(), 0b010).unwrap();
        assert!(matches!(post_select_bells(&s, &inst), Err(Error::ConditioningImpossible)));
    }

    #[test]
    fn protocol_examples() {
        let plan = MeasurementPlan { single_time: vec![(0, pauli_z()), (1, pauli_z())], ..Default::default() };
        let d = protocol_statistics(&instance(2, up_z()), &plan).unwrap();
        assert_eq!(d.labels, ["m0", "m1"]);
        assert!((d.probability(&[1.0, 1.0]) - 1.0).abs() < 1e-12);

        let plan = MeasurementPlan {
            single_time: vec![(0, pauli_x()), (1, pauli_x()), (2, pauli_x())],
            ..Default::default()
        };
        let d = protocol_statistics(&instance(3, up_z()), &plan).unwrap();
        assert!((d.probability(&[1.0, 1.0, 1.0]) - 0.5).abs() < 1e-12);
        assert!((d.probability(&[-1.0, -1.0, -1.0]) - 0.5).abs() < 1e-12);
        assert_eq!(d.outcomes.len(), 2);

        let mut rng = random::seeded(13);
        for _ in 0..5 {
            let (t, p) = random::direction(&mut rng);
            let psi = random::state(Layout::single("q", 2).unwrap(), &mut rng);
            let plan = MeasurementPlan { difference_pairs: vec![(0, 1, spin_observable(t, p))], ..Default::default() };
            let d = protocol_statistics(&instance(2, psi), &plan).unwrap();
            assert!((d.probability(&[0.0]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_examples() {
        let plan = MeasurementPlan { single_time: vec![(0, pauli_z()), (1, pauli_z()), (2, pauli_z())], ..Default::default() };
        let d = single_spin_oracle(&up_z(), 3, &plan).unwrap();
        assert!((d.probability(&[1.0, 1.0, 1.0]) - 1.0).abs() < 1e-12);

        let plan = MeasurementPlan { single_time: vec![(0, pauli_x()), (1, pauli_x())], ..Default::default() };
        let d = single_spin_oracle(&up_z(), 2, &plan).unwrap();
        assert!((d.probability(&[1.0, 1.0]) - 0.5).abs() < 1e-12);
        assert!((d.probability(&[-1.0, -1.0]) - 0.5).abs() < 1e-12);

        let plan = MeasurementPlan { single_time: vec![(0, pauli_x()), (1, pauli_z())], ..Default::default() };
        let d = single_spin_oracle(&up_z(), 2, &plan).unwrap();
        for a in [1.0, -1.0] {
            for b in [1.0, -1.0] {
                assert!((d.probability(&[a, b]) - 0.25).abs() < 1e-12);
            }
        }
        // entries listed out of time order still report in plan order
        let plan = MeasurementPlan { single_time: vec![(1, pauli_z()), (0, pauli_x())], ..Default::default() };
        let d = single_spin_oracle(&up_z(), 2, &plan).unwrap();
        assert_eq!(d.labels, ["m0", "m1"]);
        assert!((d.probability(&[1.0, 1.0]) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn product_state_baseline_fails() {
        let plan = MeasurementPlan { difference_pairs: vec![(0, 1, pauli_x())], ..Default::default() };
        let inst = instance(2, up_z());
        let d = product_state_baseline(&inst, &plan).unwrap();
        assert!((d.probability(&[-2.0]) - 0.25).abs() < 1e-12);
        assert!((d.probability(&[0.0]) - 0.5).abs() < 1e-12);
        assert!((d.probability(&[2.0]) - 0.25).abs() < 1e-12);
        let p = protocol_statistics(&inst, &plan).unwrap();
        assert!((p.probability(&[0.0]) - 1.0).abs() < 1e-12);
        assert!(d.total_variation(&p).unwrap() > 0.49);

        let plan = MeasurementPlan { single_time: vec![(0, pauli_z()), (1, pauli_z()), (2, pauli_z())], ..Default::default() };
        let d = product_state_baseline(&instance(3, up_z()), &plan).unwrap();
        assert!((d.probability(&[1.0, 1.0, 1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singlet_baseline_anticorrelates() {
        let mut rng = random::seeded(5);
        for _ in 0..5 {
            let (t, p) = random::direction(&mut rng);
            let plan = MeasurementPlan { difference_pairs: vec![(0, 1, spin_observable(t, p))], ..Default::default() };
            let d = state_baseline(&singlet_on("S0", "S1").unwrap(), &plan).unwrap();
            assert!(d.probability(&[0.0]) < 1e-12);
            assert!((d.probability(&[2.0]) - 0.5).abs() < 1e-12);
            assert!((d.probability(&[-2.0]) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_protocol_tracks_exact() {
        let plan = MeasurementPlan { single_time: vec![(0, pauli_x()), (1, pauli_z())], ..Default::default() };
        let inst = instance(2, up_z());
        let s = protocol_statistics_sampled(&inst, &plan, 4000, 1).unwrap();
        let e = protocol_statistics(&inst, &plan).unwrap();
        assert!(s.total_variation(&e).unwrap() < 0.05);
        assert!((s.success_probability - e.success_probability).abs() < 0.05);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn protocol_matches_oracle(seed in any::<u64>(), n in 2usize..=3) {
            let mut rng = random::seeded(seed);
            let psi = random::state(Layout::single("q", 2).unwrap(), &mut rng);
            let plan = MeasurementPlan::random(n, &mut rng);
            let inst = instance(n, psi.clone());
            let p = protocol_statistics(&inst, &plan).unwrap();
            let o = single_spin_oracle(&psi, n, &plan).unwrap();
            prop_assert!(p.total_variation(&o).unwrap() < 1e-10);
        }

        #[test]
        fn success_is_independent_of_psi(seed in any::<u64>(), n in 2usize..=4) {
            let mut rng = random::seeded(seed);
            let psi = random::state(Layout::single("q", 2).unwrap(), &mut rng);
            let inst = instance(n, psi);
            let (_, p) = post_select_bells(&build_initial_state(&inst).unwrap(), &inst).unwrap();
            prop_assert!((p - 0.25f64.powi(n as i32 - 1)).abs() < 1e-12);
        }

        #[test]
        fn first_spin_marginal_is_born(seed in any::<u64>(), n in 2usize..=4) {
            let mut rng = random::seeded(seed);
            let psi = random::state(Layout::single("q", 2).unwrap(), &mut rng);
            let (t, ph) = random::direction(&mut rng);
            let obs = spin_observable(t, ph);
            let plan = MeasurementPlan { single_time: vec![(0, obs.clone())], ..Default::default() };
            let d = protocol_statistics(&instance(n, psi.clone()), &plan).unwrap();
            let born = psi.expectation(&["q"], &obs).unwrap().re;
            prop_assert!((d.probability(&[1.0]) - (1.0 + born) / 2.0).abs() < 1e-12);
        }
    }
}
