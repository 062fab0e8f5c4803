use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::protocol::{protocol_statistics, single_spin_oracle, MeasurementPlan, ProtocolInstance};
use crate::qcore::*;
use crate::random;

fn exact(text: &str) -> OutcomeStats {
    run_scenario(&parse_scenario(text).unwrap(), &Mode::Exact).unwrap()
}

fn err(text: &str) -> ParseError {
    parse_scenario(text).unwrap_err()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn minimal_scenario() {
    let s = parse_scenario("system A qubit\nprepare A ket 1 0\nlink A @1 identity\nmeasure A @1 pauli z").unwrap();
    assert_eq!(s.directives().len(), 4);
    assert!(matches!(s.directives()[2], Directive::Link { from: 1, to: 2, .. }));
    assert_eq!(s.labels(), ["A@1"]);
    let d = run_scenario(&s, &Mode::Exact).unwrap();
    assert!(close(d.probability(&[1.0]), 1.0));
}

#[test]
fn error_classes_carry_positions() {
    let e = err("system A qubit\nprepare A up z\nlink A @1 unitary [[1,0],[0,2]]");
    assert_eq!((e.line, e.column, &e.kind), (3, 11, &ParseErrorKind::NonUnitary));

    let e = err("system A qubit\nfrobnicate A");
    assert_eq!((e.line, e.column, &e.kind), (2, 1, &ParseErrorKind::UnknownDirective));

    let e = err("system A qubit\nprepare B up z");
    assert_eq!((e.line, e.column, &e.kind), (2, 9, &ParseErrorKind::UndeclaredSystem));

    let e = err("system A qubit\nprepare A up z\nmeasure A @1 matrix [[1,1i],[1i,0]]");
    assert_eq!((e.line, e.column, &e.kind), (3, 14, &ParseErrorKind::NonHermitian));

    let e = err("system A qubit\nprepare A ket 0.6 0.7");
    assert_eq!((e.line, e.column, &e.kind), (2, 11, &ParseErrorKind::Unnormalized));

    let e = err("system A qubit\nprepare A up z\nmeasure A @3 pauli z\nlink A @1 h");
    assert_eq!((e.line, e.column, &e.kind), (4, 8, &ParseErrorKind::TimeOrdering));

    let e = err("system A qubit\nprepare A up z\nmeasure A 1 pauli z");
    assert_eq!((e.line, e.column, &e.kind), (3, 11, &ParseErrorKind::Syntax));

    let e = err("system A qubit\nprepare A ket 1 0 0");
    assert_eq!((e.line, &e.kind), (2, &ParseErrorKind::Invalid));

    let e = err("system A qubit\nsystem B qubit\nprepare A up z");
    assert_eq!((e.line, e.column, &e.kind), (2, 8, &ParseErrorKind::Invalid));
    assert_eq!(e.to_string(), "2:8: invalid: system `B` is never prepared");
}

#[test]
fn time_ordering_rules() {
    let base = "system A qubit\nsystem B qubit\n";
    assert_eq!(err(&format!("{base}prepare A,B @1 singlet")).kind, ParseErrorKind::TimeOrdering);
    assert_eq!(err(&format!("{base}prepare A up z\nprepare B up z\nlink A @2->@1 h")).kind, ParseErrorKind::TimeOrdering);
    assert_eq!(err(&format!("{base}prepare A @2 up z\nprepare B up z\nmeasure A @1 pauli z")).kind, ParseErrorKind::TimeOrdering);
    assert_eq!(
        err(&format!("{base}prepare A up z\nprepare B up z\nmeter-diff A @2 @1 pauli z")).kind,
        ParseErrorKind::TimeOrdering
    );
    assert_eq!(
        err(&format!("{base}prepare A up z\nprepare B up z\npostselect A @2 up z\nmeasure A @3 pauli z")).kind,
        ParseErrorKind::TimeOrdering
    );
    assert_eq!(
        err(&format!("{base}prepare A up z\nprepare B up z\nlink A @0->@2 h\nmeasure A @1 pauli z")).kind,
        ParseErrorKind::TimeOrdering
    );
    // different systems may be metered in either order
    assert!(parse_scenario(&format!("{base}prepare A,B singlet\nmeter-diff A @2 B @1 pauli z")).is_ok());
}

#[test]
fn literal_tolerance() {
    let d = exact("system A qubit\nprepare A ket 0.6 0.8000001\nmeasure A @0 pauli z");
    assert!(close(d.probability(&[1.0]), 0.36 / (0.36 + 0.8000001f64.powi(2))));
    let h = "0.7071067";
    let s = format!("system A qubit\nprepare A up z\nlink A @0 unitary [[{h},{h}],[{h},-{h}]]\nmeasure A @1 pauli x");
    assert!(close(exact(&s).probability(&[1.0]), 1.0));
    let s = "system A qubit\nprepare A up z\nmeasure A @0 matrix [[1,1e-7],[0,-1]]";
    assert!(close(exact(s).probability(&[1.0]), 1.0));
    assert_eq!(err("system A qubit\nprepare A up z\npartial A @0 x 0.8 0.7").kind, ParseErrorKind::Unnormalized);
}

#[test]
fn render_round_trip() {
    for (name, text) in BUILTINS {
        let s = parse_scenario(text).unwrap();
        let again = parse_scenario(&s.render()).unwrap();
        assert_eq!(s, again, "{name}");
        assert_eq!(again.render(), s.render());
    }
    let text = "system Q qudit 3\nprepare Q ket 0.6 0 0.8i\nlink Q @0->@2 unitary [[0,1,0],[1,0,0],[0,0,-1i]]\n\
                measure Q @2 matrix [[1,0,0],[0,0,0],[0,0,-1]] as q\n";
    let s = parse_scenario(text).unwrap();
    assert_eq!(s.render(), text);
}

#[test]
fn implicit_identity_links() {
    let a = exact("system A qubit\nprepare A up x\nmeasure A @3 pauli x");
    assert!(close(a.probability(&[1.0]), 1.0));
    let b = exact("system A qubit\nprepare A up x\nlink A @1 rz(pi)\nmeasure A @3 pauli x");
    assert!(close(b.probability(&[-1.0]), 1.0));
}

#[test]
fn epr_alice_and_bob() {
    let alice = run_epr(Party::Alice, 1, 2, 3, 1).unwrap();
    assert_eq!(alice.labels, ["alice"]);
    assert!(close(alice.probability(&[-2.0]), 0.25));
    assert!(close(alice.probability(&[0.0]), 0.5));
    assert!(close(alice.probability(&[2.0]), 0.25));
    let flipped = run_epr(Party::Alice, 1, 2, 3, -1).unwrap();
    assert!(flipped.total_variation(&alice).unwrap() < 1e-12);
    for outcome in [1, -1] {
        let bob = run_epr(Party::Bob, 0, 3, 5, outcome).unwrap();
        assert!(close(bob.probability(&[0.0]), 1.0));
        assert!(bob.mean_variance("bob").unwrap().1 < 1e-12);
    }
    assert!(alice.mean_variance("alice").unwrap().1 > 0.5);
    assert!(run_epr(Party::Alice, 2, 2, 3, 1).is_err());
    assert!(run_epr(Party::Alice, 1, 2, 3, 0).is_err());
    // success probability of Alice's outcome
    assert!(close(alice.success_probability, 0.5));
}

#[test]
fn builtin_epr_files_match_generator() {
    assert_eq!(builtin("epr-alice").unwrap(), epr_scenario(Party::Alice, 1, 2, 3, 1).unwrap());
    assert_eq!(builtin("epr-bob").unwrap(), epr_scenario(Party::Bob, 1, 2, 3, 1).unwrap());
    assert!(builtin("nope").is_none());
}

#[test]
fn double_life_examples() {
    let up_z = StateSpec::Up(Axis::Z);
    let up_x = StateSpec::Up(Axis::X);
    let z = ObservableSpec::Pauli(Axis::Z);
    let x = ObservableSpec::Pauli(Axis::X);
    let d = run_double_life(&up_z, &up_x, 6, &z, 0, 2).unwrap();
    assert!(close(d.probability(&[0.0]), 1.0));
    let d = run_double_life(&up_z, &up_x, 6, &x, 1, 3).unwrap();
    assert!(close(d.probability(&[0.0]), 1.0));
    // across parities the two lives are independent: sigma_z(1) = +-1 with
    // probability 1/2, sigma_z(0) = +1
    let d = run_double_life(&up_z, &up_x, 6, &z, 0, 1).unwrap();
    assert!(close(d.probability(&[0.0]), 0.5));
    assert!(close(d.probability(&[-2.0]), 0.5));
    assert!(close(d.probability(&[2.0]), 0.0));
    assert!(run_double_life(&up_z, &up_x, 3, &z, 0, 1).is_err());
    assert!(run_double_life(&up_z, &up_x, 6, &z, 2, 1).is_err());
    // independent product statistics for random parities and directions
    let mut rng = random::seeded(17);
    for _ in 0..5 {
        let (t1, p1) = random::direction(&mut rng);
        let (t2, p2) = random::direction(&mut rng);
        let (ta, pa) = random::direction(&mut rng);
        let obs = spin_observable(ta, pa);
        let psi1 = StateSpec::Spin(t1, p1);
        let psi2 = StateSpec::Spin(t2, p2);
        let d = run_double_life(&psi1, &psi2, 5, &ObservableSpec::Spin(ta, pa), 2, 3).unwrap();
        let e1 = spin_state(t1, p1).expectation(&["q"], &obs).unwrap().re;
        let e2 = spin_state(t2, p2).expectation(&["q"], &obs).unwrap().re;
        let (u1, u2) = ((1.0 + e1) / 2.0, (1.0 + e2) / 2.0);
        assert!(close(d.probability(&[2.0]), u2 * (1.0 - u1)));
        assert!(close(d.probability(&[-2.0]), u1 * (1.0 - u2)));
    }
}

#[test]
fn builtin_distributions() {
    let d = run_scenario(&builtin("double-life").unwrap(), &Mode::Exact).unwrap();
    assert_eq!(d.labels, ["across", "even", "odd"]);
    assert!(close(d.probability(&[0.0, 0.0, 0.0]), 0.5));
    assert!(close(d.probability(&[-2.0, 0.0, 0.0]), 0.5));

    let d = run_scenario(&builtin("partial-sweep").unwrap(), &Mode::Exact).unwrap();
    assert!(close(d.probability(&[-2.0]), 0.02));
    assert!(close(d.probability(&[0.0]), 0.98));
    assert!(close(d.success_probability, 0.5));

    let d = run_scenario(&builtin("trivial").unwrap(), &Mode::Exact).unwrap();
    assert!(close(d.probability(&[1.0, 1.0]), 0.5));
    assert!(close(d.probability(&[-1.0, -1.0]), 0.5));

    let d = run_scenario(&builtin("protocol-2").unwrap(), &Mode::Exact).unwrap();
    assert!(close(d.success_probability, 0.25));
    let psi = spin_state(std::f64::consts::FRAC_PI_3, 0.0);
    let plan = MeasurementPlan { single_time: vec![(0, pauli_z()), (1, pauli_x())], ..Default::default() };
    let p = protocol_statistics(&ProtocolInstance::new(2, psi.clone()).unwrap(), &plan).unwrap();
    let o = single_spin_oracle(&psi, 2, &plan).unwrap();
    for (key, prob) in &o.outcomes {
        let values: Vec<f64> = key.iter().map(|v| v.0).collect();
        assert!(close(d.probability(&values), *prob));
        assert!(close(p.probability(&values), *prob));
    }
    assert!(close(d.probability(&[1.0, 1.0]), 0.375));
    assert!(close(d.probability(&[-1.0, -1.0]), 0.125));
}

#[test]
fn postselection_and_bell_selection() {
    // ABL: pre |up z>, post |up x>, sigma_z in between is certain
    let d = exact("system A qubit\nprepare A up z\nmeasure A @1 pauli z\npostselect A @2 up x");
    assert!(close(d.probability(&[1.0]), 1.0));
    assert!(close(d.success_probability, 0.5));
    // pre |up z>, post |up x>: sigma_x in between is certain too
    let d = exact("system A qubit\nprepare A up z\nmeasure A @1 pauli x\npostselect A up x");
    assert!(close(d.probability(&[1.0]), 1.0));
    let e = run_scenario(
        &parse_scenario("system A qubit\nprepare A up z\npostselect A down z").unwrap(),
        &Mode::Exact,
    );
    assert!(matches!(e, Err(Error::ConditioningImpossible)));
    let d = exact("system A qubit\nsystem B qubit\nprepare A,B bell psi-\nmeasure A @0 pauli y\nbellpost A B psi-");
    assert!(close(d.probability(&[1.0]), 0.5));
    assert!(close(d.success_probability, 0.5));
}

#[test]
fn partial_links_both_readings() {
    let plus = exact("system Q qubit\nprepare Q up x\npartial Q @0 x 0.8 0.6 +1\nmeasure Q @1 pauli x");
    let minus = exact("system Q qubit\nprepare Q up x\npartial Q @0 x 0.8 0.6 -1\nmeasure Q @1 pauli x");
    assert!(close(plus.success_probability, 0.64));
    assert!(close(minus.success_probability, 0.36));
    assert!(close(plus.probability(&[1.0]), 1.0));
}

#[test]
fn dimension_cap_and_meter_dim() {
    let s = parse_scenario("system Q qudit 40\nsystem R qudit 40\nprepare Q ket 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0\nprepare R ket 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0").unwrap();
    assert!(matches!(run_scenario_capped(&s, &Mode::Exact, 1000), Err(Error::DimensionCap { dim: 1600, cap: 1000 })));
    let e = err("system A qubit\nprepare A up z\nmeter-diff A @0 @1 pauli z dim 3");
    assert_eq!((e.column, &e.kind), (32, &ParseErrorKind::Invalid));
    let e = err("system A qubit\nprepare A up z\nmeter-diff A @0 @1 spin 0.3 0.1 dim 4");
    assert_eq!((e.column, &e.kind), (37, &ParseErrorKind::Invalid));
    let d = exact("system A qubit\nprepare A up z\nmeter-diff A @0 @1 pauli z dim 5");
    assert!(close(d.probability(&[0.0]), 1.0));
    let e = err("system A qubit\nprepare A up z\nmeter-diff A @0 @1 matrix [[0.5,0],[0,-0.5]]");
    assert_eq!(e.kind, ParseErrorKind::Invalid);
}

#[test]
fn labels_are_unique() {
    let e = err("system A qubit\nprepare A up z\nmeasure A @1 pauli z as m\nmeasure A @2 pauli x as m");
    assert_eq!((e.line, e.column, &e.kind), (4, 25, &ParseErrorKind::Invalid));
}

#[test]
fn sampled_runs_are_reproducible() {
    let s = builtin("epr-alice").unwrap();
    let a = run_scenario(&s, &Mode::Sampled { samples: 2000, seed: 5 }).unwrap();
    let b = run_scenario(&s, &Mode::Sampled { samples: 2000, seed: 5 }).unwrap();
    assert_eq!(a, b);
    assert_eq!(report(&a, Format::Json).unwrap(), report(&b, Format::Json).unwrap());
    let e = run_scenario(&s, &Mode::Exact).unwrap();
    assert!(a.total_variation(&e).unwrap() < 0.05);
    assert_eq!(a.counts.as_ref().unwrap().values().sum::<usize>(), 2000);
}

fn unitary_literal(u: &Operator) -> String {
    let rows: Vec<String> = (0..u.dim())
        .map(|r| format!("[{}]", (0..u.dim()).map(|c| ast::fmt_complex(u.get(r, c))).collect::<Vec<_>>().join(",")))
        .collect();
    format!("[{}]", rows.join(","))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_scenarios_round_trip(seed in any::<u64>(), steps in 1usize..5) {
        let mut rng = random::seeded(seed);
        let psi = random::state(Layout::single("q", 2).unwrap(), &mut rng);
        let amps: Vec<String> = psi.amplitudes().iter().map(|z| ast::fmt_complex(*z)).collect();
        let mut text = format!("system A qubit\nprepare A ket {}\n", amps.join(" "));
        for k in 0..steps {
            let (t, p) = random::direction(&mut rng);
            match rng.random_range(0..4) {
                0 => text.push_str(&format!("link A @{k} rx({t})\n")),
                1 => text.push_str(&format!("link A @{k} unitary {}\n", unitary_literal(&random::unitary(vec![2], &mut rng)))),
                2 => text.push_str(&format!("collapse A @{k} spin {t} {p}\n")),
                _ => text.push_str(&format!("partial A @{k} z {} {} -1\n", t.cos().abs(), t.sin().abs())),
            }
            text.push_str(&format!("measure A @{} spin {p} {t}\n", k + 1));
        }
        text.push_str(&format!("meter-diff A @0 @{steps} pauli y\n"));
        let s = parse_scenario(&text).unwrap();
        let r = parse_scenario(&s.render()).unwrap();
        prop_assert_eq!(&s, &r);
        if let Ok(d) = run_scenario(&s, &Mode::Exact) {
            prop_assert!((d.total() - 1.0).abs() < 1e-9);
            prop_assert!(d.outcomes.values().all(|p| *p >= 0.0));
            let d2 = run_scenario(&r, &Mode::Exact).unwrap();
            prop_assert!(d.total_variation(&d2).unwrap() < 1e-12);
        }
    }

    #[test]
    fn complex_literals_round_trip(re in -1e6f64..1e6, im in -1e6f64..1e6) {
        let z = num_complex::Complex64::new(re, im);
        prop_assert_eq!(parse::parse_complex(&ast::fmt_complex(z)), Some(z));
    }
}
